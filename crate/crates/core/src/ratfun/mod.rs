//! Exact rational-function and transfer-matrix algebra in the discrete-time
//! variable `z`, with the floating-point boundary confined to pole finding
//! and frequency-domain evaluation.

mod freq;
mod matrix;
pub mod poly;
mod rational;
mod scalar;
mod stability;
mod statespace;

pub use freq::{
    freq_response, freq_response_with, hinf_norm, hinf_norm_with, hinf_peak, hinf_peak_with, FreqPoint, NumericMatrix,
    Peak, HINF_GRID, POLE_ON_GRID_TOL,
};
pub use matrix::{mat_add, mat_det, mat_inverse, mat_mul, Block, TransferMatrix};
pub use poly::{Polynomial, Q};
pub use rational::{canonicalize, RationalFunction};
pub use scalar::QMatrix;
pub use stability::{
    classify_poles, matrix_poles, poles, roots, stability_verdict, Pole, StabilityStatus, StabilityVerdict, Witness,
    STABILITY_TOL,
};
pub use statespace::StateSpace;
