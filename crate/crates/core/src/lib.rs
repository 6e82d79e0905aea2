//! Ensemble NMR simulation of two-turn labeled pseudo-pure state preparation.
//!
//! Spin 1 is the ancilla and the most significant bit of a basis index; bit
//! value 0 is `m = +1/2`. Spins are 1-based in every public API. Operators
//! use `I_alpha = sigma_alpha / 2` and `hbar = 1`; Hamiltonians are in rad/s.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! population-level identities in [`pps::populations`] also run over exact
//! rationals. Concrete aliases for both float widths live at the crate root.

// `!(x > 0.0)` is the NaN-rejecting form used for every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod export;
pub mod linalg;
pub mod molecule;
pub mod pps;
pub mod pulse;
pub mod scalar;
pub mod spectrometer;
pub mod spin;
pub mod tomography;
pub mod verify;

pub use circuit::{circuit_for_method, circuit_to_unitary, verify_circuit, Circuit, Gate};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use molecule::parse_molecule;
pub use pps::{build_permutation, prepare_pps, CrushMode, Method, PermutationSpec, PpsResult, Realization};
pub use pulse::{Axis, Builtin, DelayModel, Pulse, PulseSequence};
pub use scalar::Scalar;
pub use spectrometer::{Apodization, Fid, PeakTable, Spectrum};
pub use spin::{DeviationMatrix, ProductOperator, SpinOp, SpinSystem};
pub use tomography::{PulseSet, ReadoutRecord, ReconstructionResult, Reconstructor};

pub type CMatrixF64 = CMatrix<f64>;
pub type SpinSystemF64 = SpinSystem<f64>;
pub type DeviationMatrixF64 = DeviationMatrix<f64>;
pub type PulseSequenceF64 = PulseSequence<f64>;
pub type PpsResultF64 = PpsResult<f64>;
pub type SpectrumF64 = Spectrum<f64>;
pub type ReconstructorF64 = Reconstructor<f64>;

pub type CMatrixF32 = CMatrix<f32>;
pub type SpinSystemF32 = SpinSystem<f32>;
pub type DeviationMatrixF32 = DeviationMatrix<f32>;
pub type PulseSequenceF32 = PulseSequence<f32>;
pub type PpsResultF32 = PpsResult<f32>;
pub type SpectrumF32 = Spectrum<f32>;
pub type ReconstructorF32 = Reconstructor<f32>;
