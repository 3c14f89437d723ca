use std::fmt::Write;

use esmt_core::cpr::CprSpec;
use esmt_core::{Point, SteinerTree};

const INNER_FILL: &str = "#dbe9f6";
const OUTER_FILL: &str = "#fbe7d0";

fn fmt(v: f64) -> String {
    // Shortest round-trip form keeps drawn endpoints equal to tree vertices.
    format!("{v:?}")
}

/// Renders a tree in its own coordinates, flipped so y points up. When the
/// tree comes from concentric polygons, both polygons are tinted behind it.
pub fn render(tree: &SteinerTree, cpr: Option<&CprSpec>) -> String {
    let pts: Vec<Point> = tree.vertices().collect();
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in &pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let (w, h) = ((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9));
    let (px, py) = (0.05 * w.max(extent * 0.05), 0.05 * h.max(extent * 0.05));
    let view = (lo.x - px, -(hi.y + py), w + 2.0 * px, h + 2.0 * py);
    let r = 0.01 * extent;
    let stroke = 0.004 * extent;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        fmt(view.0),
        fmt(view.1),
        fmt(view.2),
        fmt(view.3)
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    if let Some(spec) = cpr {
        for (fill, pick) in [(OUTER_FILL, true), (INNER_FILL, false)] {
            let ring: Vec<String> = (0..spec.n)
                .map(|i| {
                    let p = if pick { spec.outer(i) } else { spec.inner(i) };
                    format!("{},{}", fmt(p.x), fmt(p.y))
                })
                .collect();
            let _ = writeln!(s, r#"<polygon class="cpr" points="{}" fill="{fill}" stroke="none"/>"#, ring.join(" "));
        }
    }
    for e in &tree.edges {
        let (a, b) = (tree.vertex(e[0]), tree.vertex(e[1]));
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#222" stroke-width="{}"/>"##,
            fmt(a.x),
            fmt(a.y),
            fmt(b.x),
            fmt(b.y),
            fmt(stroke)
        );
    }
    for (i, p) in pts.iter().enumerate() {
        let style = if tree.is_steiner(i) {
            format!(r##"fill="white" stroke="#c0392b" stroke-width="{}""##, fmt(stroke))
        } else {
            r##"fill="#1f4e79""##.to_string()
        };
        let class = if tree.is_steiner(i) { "steiner" } else { "terminal" };
        let _ = writeln!(s, r#"<circle class="{class}" cx="{}" cy="{}" r="{}" {style}/>"#, fmt(p.x), fmt(p.y), fmt(r));
    }
    s.push_str("</g>\n</svg>\n");
    s
}
