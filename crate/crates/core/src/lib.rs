//! Numerical laboratory for the Cartan–Engel (2,3,5)-distribution `p′ = q×q′`
//! on the quadric `pq = 1`, its split-octonion model, the dancing metric on
//! non-incident point–line pairs, and the projective geometry of dancing curves.

pub mod ad;
pub mod cartan_engel;
pub mod curvature;
pub mod curves;
pub mod error;
pub mod fd;
pub mod linalg;
pub mod mates;
pub mod metric;
pub mod ode;
pub mod projective;
pub mod rolling;
pub mod octonion;
pub mod sample;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};

/// Size the global worker pool. Call once, before any parallel work.
pub fn init_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::domain(format!("thread pool: {e}")))
}
