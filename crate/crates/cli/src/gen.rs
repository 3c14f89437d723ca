use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use esmt_core::geom::{convex_hull, dist, point_in_convex_polygon, point_segment_distance};
use esmt_core::{Error, Instance, Point, Result, Tolerance};

const MIN_SEPARATION: f64 = 1e-3;

/// `hull` points on the unit circle plus `interior` points strictly inside
/// their hull, by rejection sampling.
pub fn almost_convex(hull: usize, interior: usize, seed: u64) -> Result<Instance> {
    if hull < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 hull points, got {hull}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles: Vec<f64> = Vec::with_capacity(hull);
    let tau = std::f64::consts::TAU;
    while angles.len() < hull {
        let a = rng.random::<f64>() * tau;
        let gap = |b: &f64| {
            let d = (a - b).abs();
            d.min(tau - d)
        };
        if angles.iter().all(|b| gap(b) > MIN_SEPARATION) {
            angles.push(a);
        }
    }
    angles.sort_by(f64::total_cmp);
    let mut pts: Vec<Point> = angles.iter().map(|a| Point::new(a.cos(), a.sin())).collect();
    let ring = pts.clone();
    let mut tries = 0usize;
    while pts.len() < hull + interior {
        tries += 1;
        if tries > 1_000_000 {
            return Err(Error::InvalidArgument("could not place interior points".into()));
        }
        let p = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let inside = point_in_convex_polygon(p, &ring, 0.0)
            && (0..hull).all(|i| point_segment_distance(p, ring[i], ring[(i + 1) % hull]) > MIN_SEPARATION);
        if inside && pts.iter().all(|q| dist(*q, p) > MIN_SEPARATION) {
            pts.push(p);
        }
    }
    let tol = Tolerance::default();
    let got = convex_hull(&pts, &tol).len();
    if got != hull {
        return Err(Error::InvalidArgument(format!("sampled hull has {got} corners, wanted {hull}")));
    }
    Ok(Instance::new(format!("almost-convex-h{hull}-i{interior}-s{seed}"), pts, &tol)?
        .with_metadata("family", "almost-convex")
        .with_metadata("hull", hull as u64)
        .with_metadata("interior", interior as u64)
        .with_metadata("seed", seed))
}
