//! Bach flow on four-dimensional simply connected nilpotent Lie groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`nilalg`]: brackets on R^4, the GL_4 action and its derivative,
//!   derivations and the group law.
//! * [`curvature`]: a first-principles curvature oracle for a left-invariant
//!   metric (connection, Riemann, Ricci, Weyl, covariant derivatives, Bach).
//! * [`bachforms`]: closed-form Bach operator and the reduced gauged ODE on
//!   the three-parameter slice `mu_{a,b,c}`.
//! * [`flow`]: adaptive integration of the reduced, full, normalized and
//!   metric formulations of the flow.
//! * [`soliton`]: multistart Newton search and certification of algebraic
//!   Bach solitons.
//! * [`verify`]: oracle-vs-closed-form report.

pub mod bachforms;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod grid;
pub mod integrator;
pub mod nilalg;
pub mod soliton;
pub mod verify;

pub use bachforms::{BachOperator, GaugeSkew, SolitonSolution};
pub use curvature::{CurvatureBundle, MetricSpec};
pub use error::{Error, Result};
pub use flow::{FlowOptions, FlowTrajectory, NormalizationState};
pub use nilalg::{BracketTensor, DerivationMatrix, Mat4, TriBracket, Vec4};
pub use soliton::CertificationReport;
