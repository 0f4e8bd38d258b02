//! Equivariant (GenNet) and invariant (I-GGNN) message passing on geometric
//! graphs, numerical rigidity analysis, and a separation-experiment harness.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`, which is what the tolerances,
//! experiments and CLI use.

pub mod cli;
pub mod gennet;
pub mod geomgraph;
pub mod iggnn;
pub mod linalg;
pub mod report;
pub mod rigidity;
pub mod rng;
pub mod scalar;
pub mod sephar;

pub use scalar::Real;

pub type Graph = geomgraph::GeometricGraph<f64>;
pub type Motion = geomgraph::RigidMotion<f64>;
