//! Detection of semi-positive, copositive and related tensor classes, with
//! witnesses for negative answers and subdivision certificates for positive ones.

// `!(x > 0.0)` is used on purpose so that NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod error;
pub mod io;
mod lp;
pub mod spectral;
pub mod subdivision;
pub mod tensor;
pub mod verify;

pub use classifiers::{classify, Class, ClassificationReport, Classifier, Config};
pub use error::{Error, Result};
pub use subdivision::{Sign, Status, Verdict};
pub use tensor::{IndexSet, Tensor};
