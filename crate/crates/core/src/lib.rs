//! General products of state vectors: factorization, entanglement
//! certificates and mixed-state witnesses.

pub mod catalog;
pub mod error;
pub mod factorize;
pub mod kernel;
pub mod mixed;
pub mod product;
pub mod random;
pub mod state;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use factorize::{
    als_fit, classify, AlsConfig, AlsFit, Certificate, CertificateOutcome, FactorizationReport,
    ReportDocument, Tolerances, Verdict,
};
pub use kernel::{ComplexMatrix, ComplexVector};
pub use mixed::{ppt_witness, DensityMatrix, Ensemble, EnsembleItem, WitnessOutcome, WitnessVerdict};
pub use num_complex::Complex64;
pub use product::{GeneralProduct, ProductEntry, ProductFamily};
pub use state::StateVector;
