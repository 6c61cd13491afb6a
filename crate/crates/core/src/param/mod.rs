//! Closed-loop parameterizations and their robust stability tests.
//!
//! * [`coprime`]: doubly coprime factorizations and primal/dual Youla.
//! * [`iop`]: the input-output parameterization `{Y, W, U, Z}`.
//! * [`sls`]: state- and output-feedback system level parameterizations.
//! * [`mu`]: the `M = F_z Ŝ T` construction and the `det(I - MΔ)` test.

pub mod coprime;
pub mod iop;
pub mod mu;
pub mod sls;

pub use coprime::{
    coprime_from_gains, deadbeat_gain, deadbeat_observer, youla_controller, youla_loop, youla_plant,
    youla_pq_stability, youla_robust_check, CoprimeFactorization, YoulaPair,
};
pub use iop::{iop_controller, iop_margin, iop_robust_check, iop_verify, IopQuadruple};
pub use mu::{mu_destab_test, mu_m_matrix, DestabTest};
pub use sls::{
    sls_of_controller, sls_of_from_controller, sls_of_from_gains, sls_of_margin, sls_of_perturbed_response,
    sls_of_robust_check, sls_of_robust_cross_check, sls_of_verify, sls_sf_from_gain, sls_sf_robust, PlantPerturbation,
    SlsOutputFeedback, SlsSfRobust, SlsStateFeedback,
};

use crate::error::{Error, Result};
use crate::ratfun::{stability_verdict, StabilityVerdict, TransferMatrix, STABILITY_TOL};

pub(crate) fn require_stable(x: &TransferMatrix, what: &str) -> Result<()> {
    let v = stability_verdict(x);
    if v.is_stable() {
        Ok(())
    } else {
        Err(Error::NotStable(format!("{what} ({})", v.status)))
    }
}

/// Verdict of `X^-1`, with a singular `X` reported as [`Error::SingularMatrix`].
pub(crate) fn inverse_verdict(x: &TransferMatrix) -> Result<(TransferMatrix, StabilityVerdict)> {
    let inv = x.inverse()?;
    let v = stability_verdict(&inv);
    Ok((inv, v))
}

/// Numerical spectral-radius test used for gain checks.
pub(crate) fn is_schur(m: &crate::ratfun::QMatrix) -> bool {
    m.rows() == 0 || m.spectral_radius() < 1.0 - STABILITY_TOL
}
