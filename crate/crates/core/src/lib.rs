//! Relative entropy of entanglement for two-qubit states whose density matrix
//! has six nonzero elements: the diagonal plus the `|00⟩⟨11|` coherence pair.
//!
//! The crate computes the closest separable state in closed form on the
//! `φ = π/2` slice, by constrained Newton iteration elsewhere, and certifies
//! every answer with the directional-derivative witness operator. An
//! independent product-ensemble minimiser is provided as an oracle.
//!
//! ```
//! use std::f64::consts::FRAC_PI_2;
//! use xree::{relative_entropy_of_entanglement, XStateParams};
//!
//! let p = XStateParams::new(0.5, 0.1, 0.25, 0.15, FRAC_PI_2, 0.0).unwrap();
//! let ree = relative_entropy_of_entanglement(&p).unwrap();
//! assert!(ree.certificate.passed);
//! assert!((ree.e_r - 8.0659503876672e-5).abs() < 1e-12);
//! ```

pub mod closed_form;
mod dense;
pub mod error;
pub mod general;
pub mod linalg;
pub mod oracle;
pub mod witness;
pub mod xstate;

pub use closed_form::{
    relative_entropy_of_entanglement, relative_entropy_of_entanglement_with, solve_diagonal_min,
    solve_canonical, solve_phi_half, solving_frame, ClosestSeparable, Method, Ree, ReeOptions, SolveInfo,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use general::{solve_general, solve_general_with, stationarity_residuals, AnsatzPoint, GeneralOptions};
pub use linalg::{
    bloch_log, eig_x_structured, eigh, matrix_log_on_support, partial_transpose, relative_entropy,
    von_neumann_entropy, BlochBlock2, ComplexMatrix4, DensityMatrix, QubitState, Spectrum4,
};
pub use oracle::{
    minimize_relative_entropy, structured_min, OracleConfig, OracleResult, ProductComponent,
    ProductEnsemble,
};
pub use witness::{
    build_witness, certify, certify_candidate, certify_with, max_product_overlap, Certificate, WitnessA,
};
pub use xstate::{CanonicalTransform, FilterNormalForm, XStateParams};

/// Default seed for the randomised restarts.
pub const DEFAULT_SEED: u64 = 0x5eed_2008;
