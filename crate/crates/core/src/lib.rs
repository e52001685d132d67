//! Extinction risk of a population whose log-abundance follows a Wiener
//! process with drift, with confidence intervals built in the (w, z)
//! coordinates.

pub mod ci_methods;
pub mod error;
pub mod estimate;
pub mod mc_harness;
pub mod nct;
pub mod normal;
pub mod risk_analysis;
pub mod roots;
pub mod stable_eval;

pub use error::{Error, Result};
pub use stable_eval::{eval_hybrid, Branch, DualScaleProb, EvalConfig, RiskCoordinates};
