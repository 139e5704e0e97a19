//! Finite-depth quantum algorithmic randomness.
//!
//! A state is a coherent prefix `ρ_1, …, ρ_N` of density matrices linked by
//! partial trace over the last qubit. Tests are built from projections on
//! `ℂ^(2^n)`: q-Σ⁰₁ prefixes, quantum Martin-Löf, Solovay and Schnorr tests.
//! The crate evaluates states against tests, extracts maximal orthonormal
//! sets by greedy deflation, converts between test disciplines, reads
//! classical tests off diagonal states, and builds Chernoff tests for the
//! law of large numbers.
//!
//! ```
//! use qrl::{make_classical, fails_qmlt, Bitstring, QSigmaPrefix, QuantumTest, Tolerances};
//!
//! let tol = Tolerances::default();
//! let members = (1..=4)
//!     .map(|m| QSigmaPrefix::cylinder(Bitstring::zeros(m), 6))
//!     .collect::<Result<Vec<_>, _>>()?;
//! let test = QuantumTest::qmlt(members, &tol)?;
//! let zeros = make_classical(Bitstring::zeros(6), 6)?;
//! assert!(fails_qmlt(&zeros, &test, 0.99)?);
//! # Ok::<(), qrl::Error>(())
//! ```

pub mod approx;
pub mod bits;
pub mod convert;
pub mod error;
pub mod format;
pub mod gen;
pub mod linalg;
pub mod lln;
pub mod measures;
pub mod projector;
pub mod report;
pub mod sigma;
pub mod state;
pub mod tol;

pub use approx::{approximate_density_class, greedy_maximal_set, ApproxInstance, GreedyResult};
pub use bits::Bitstring;
pub use convert::{solovay_to_mlt, verify_failure_transfer, SolovayInstance};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use lln::{chernoff_test, lln_average, markov_bound, trace_markov, verify_lln_failure, ChernoffTest};
pub use measures::{
    classical_solovay_to_mlt, measure_of, qmlt_to_classical, schnorr_to_classical, threshold_basis_set,
    ClassicalTestPrefix, DyadicMeasure,
};
pub use projector::Projector;
pub use report::Check;
pub use sigma::{build_nested, fails_qmlt, fails_solovay, rho_value, tau_value, Discipline, QSigmaPrefix, QuantumTest};
pub use state::{make_bernoulli, make_classical, make_tau, mix_states, DensityMatrix, DiagonalLevel, StatePrefix};
pub use tol::Tolerances;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/tests.md")]
    mod tests {}
    #[doc = include_str!("../../../book/src/approximation.md")]
    mod approximation {}
    #[doc = include_str!("../../../book/src/conversion.md")]
    mod conversion {}
    #[doc = include_str!("../../../book/src/diagonal.md")]
    mod diagonal {}
    #[doc = include_str!("../../../book/src/lln.md")]
    mod lln {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
