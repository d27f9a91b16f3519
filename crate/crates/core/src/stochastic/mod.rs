//! Cameron-Martin inner products, Malliavin derivatives, discrete Skorohod
//! integrals and the Skorohod-Stratonovich correction.

pub mod correction;
pub mod dpi;
pub mod hilbert;
pub mod malliavin;
pub mod skorohod;

pub use correction::{correction_terms, verify_identity, CorrectionReport, IdentityExperiment};
pub use dpi::{dpi_convergence, DpiOptions, DpiRow};
pub use hilbert::{h_inner, indicator};
pub use malliavin::{malliavin_of_gradient, MalliavinField};
pub use skorohod::{duality_check, skorohod_discrete, DualityResult};
