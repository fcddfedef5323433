//! Energy-slope prediction and verification for one-parameter degenerations
//! of projectively embedded curves.
//!
//! The library has two halves that check each other:
//!
//! * [`predictor`] computes the coefficient of `ln(1/|t|)` in the Mabuchi and
//!   Futaki energy functionals from Newton-diagram combinatorics at the
//!   zeroes of the anchor section (exact rational arithmetic);
//! * [`quadrature`] evaluates the functionals numerically on the sphere for a
//!   schedule of `t` values, and [`experiment`] fits the measured slopes and
//!   compares them with the prediction.
//!
//! [`poly`] and [`diagram`] supply the underlying polynomial arithmetic and
//! staircase-hull combinatorics; [`cli`] is the command-line front end.

pub mod cli;
pub mod diagram;
pub mod experiment;
pub mod poly;
pub mod predictor;
pub mod quadrature;

pub use diagram::{build_diagram, DiagramPoint, NewtonDiagram};
pub use poly::ComplexPoly;
pub use predictor::{predict, DegenerationConfig, GeometricConstants, SlopePrediction};
pub use quadrature::{run_samples, EnergySample, GridParams};
