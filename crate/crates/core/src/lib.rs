//! Optimal homotopy perturbation (OHPM) solver for magnetohydrodynamic
//! Jeffery–Hamel flow and its heat-transfer companion problem.

pub mod cases;
pub mod engine;
pub mod fit;
pub mod error;
mod linalg;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod quadrature;
pub mod reproduce;

pub use engine::{run_stages, AuxFunction, LinearProblem, ParamMap, StageSolution};
pub use error::{EngineError, FitError, ModelError, OracleError, PolyError};
pub use model::{FlowParams, ThermalMode, VelocityForm};
pub use poly::LaurentPoly;
