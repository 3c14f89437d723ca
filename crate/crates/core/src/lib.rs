//! Euclidean Steiner minimal trees in the plane.
//!
//! * [`geom`]: floating-point primitives (Torricelli points, hulls, MST).
//! * [`model`]: instances, embedded trees, validators, JSON formats.
//! * [`melzak`]: full-topology enumeration and Melzak realization.
//! * [`exact`]: subset dynamic program over leaf full components.
//! * [`cpr`]: closed-form trees for two concentric parallel regular polygons.
//! * [`approx`]: grid discretization plus the interval Steiner-tree DP.
//! * [`oracle`]: slow independent checkers used by the tests.

pub mod approx;
pub mod cpr;
pub mod error;
pub mod exact;
pub mod geom;
pub mod melzak;
pub mod model;
pub mod oracle;
pub mod par;

pub use error::{Error, Result};
pub use geom::{Point, Tolerance};
pub use model::{Instance, SteinerTree, ValidationReport};
