//! Interpretable recidivism risk modelling.
//!
//! The crate covers the full pipeline used to build and audit transparent
//! risk scores:
//!
//! * [`data`]: tabular schema, CSV ingestion, recidivism label construction and
//!   a synthetic population generator.
//! * [`featurize`]: binary stump expansion of numeric features.
//! * [`scoring`]: integer scoring tables with a logistic link and the Arnold
//!   PSA point models.
//! * [`train`]: penalized logistic regression, additive stumps, integer
//!   scoring-system search and CART.
//! * [`evaluate`]: AUC, nested cross-validation and the cross-region protocol.
//! * [`fairness`]: calibration, balance for positive/negative class and
//!   balanced group AUC audits.

pub mod data;
pub mod error;
pub mod evaluate;
pub mod fairness;
pub mod featurize;
pub mod scoring;
pub mod train;

pub use error::{Error, Result};

/// Logistic link, numerically stable for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}
