//! Ground-state overlaps and two finite-difference estimators of the
//! fidelity susceptibility per site.
//!
//! * log-fidelity: `-2 ln F(lambda - d/2, lambda + d/2) / (L d^2)`, a centered
//!   stencil around `lambda`;
//! * trace form: `(<d|d> - <psi|d>^2) / L` with `d` the centered difference of
//!   the sign-aligned ground vectors at `lambda +- d`. For a pure state this is
//!   `Tr[(d rho)^2] / (2L)`.
//!
//! Both approach the same limit as `d -> 0` with `O(d^2)` error.

use crate::eigensolver::{GroundState, GroundStateSource};
use crate::error::{Error, Result};
use crate::linalg::{axpy, distance_sq, dot};

/// Stencil step used when none is given.
pub const DEFAULT_DELTA_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFidelityEstimate {
    pub lambda: f64,
    pub delta_lambda: f64,
    pub fidelity: f64,
    pub chi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    pub lambda: f64,
    pub delta_lambda: f64,
    pub chi: f64,
    /// `|<psi|d>| / |d|`, zero for exact normalized states.
    pub gauge_residual: f64,
}

/// Both estimators at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityResult {
    pub lambda: f64,
    pub delta_lambda: f64,
    pub fidelity: f64,
    pub chi_logf: f64,
    pub chi_trace: f64,
}

fn check_same_chain(a: &GroundState, b: &GroundState) -> Result<()> {
    if a.sites() != b.sites() {
        return Err(Error::Shape { expected: a.sites(), got: b.sites() });
    }
    if a.boundary != b.boundary {
        return Err(Error::domain(format!(
            "boundary mismatch: {} vs {}",
            a.boundary, b.boundary
        )));
    }
    Ok(())
}

/// `|<a|b>|`, clamped to `[0, 1]`. States from different magnetization
/// sectors are orthogonal.
pub fn overlap(a: &GroundState, b: &GroundState) -> Result<f64> {
    check_same_chain(a, b)?;
    if a.n_up() != b.n_up() {
        return Ok(0.0);
    }
    if a.vector.len() != b.vector.len() {
        return Err(Error::Shape { expected: a.vector.len(), got: b.vector.len() });
    }
    Ok(dot(&a.vector, &b.vector).abs().min(1.0))
}

/// `1 - |<a|b>|` evaluated as `|a - s b|^2 / 2` (`s` the overlap sign), which
/// keeps full relative precision when the states are nearly parallel.
pub fn infidelity(a: &GroundState, b: &GroundState) -> Result<f64> {
    check_same_chain(a, b)?;
    if a.n_up() != b.n_up() {
        return Ok(1.0);
    }
    if a.vector.len() != b.vector.len() {
        return Err(Error::Shape { expected: a.vector.len(), got: b.vector.len() });
    }
    let s = dot(&a.vector, &b.vector);
    let d2 = if s >= 0.0 {
        distance_sq(&a.vector, &b.vector)
    } else {
        let neg: Vec<f64> = b.vector.iter().map(|x| -x).collect();
        distance_sq(&a.vector, &neg)
    };
    Ok((0.5 * d2).clamp(0.0, 1.0))
}

fn check_step(delta_lambda: f64) -> Result<()> {
    if !(delta_lambda > 0.0 && delta_lambda.is_finite()) {
        return Err(Error::domain(format!(
            "stencil step must be positive, got {delta_lambda}"
        )));
    }
    Ok(())
}

/// Log-fidelity estimator on the stencil `lambda +- delta_lambda / 2`.
pub fn chi_log_fidelity<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    delta_lambda: f64,
) -> Result<LogFidelityEstimate> {
    check_step(delta_lambda)?;
    let lo = source.ground(lambda - 0.5 * delta_lambda)?;
    let hi = source.ground(lambda + 0.5 * delta_lambda)?;
    let one_minus = infidelity(&lo, &hi)?;
    let fidelity = 1.0 - one_minus;
    if one_minus >= 1.0 {
        return Err(Error::Divergent(format!(
            "ground states at {} and {} are orthogonal",
            lo.lambda, hi.lambda
        )));
    }
    let sites = source.sites() as f64;
    let chi = -2.0 * (-one_minus).ln_1p() / (sites * delta_lambda * delta_lambda);
    Ok(LogFidelityEstimate {
        lambda,
        delta_lambda,
        fidelity,
        chi,
    })
}

/// Trace-form estimator from ground states at `lambda` and `lambda +- delta_lambda`.
pub fn chi_trace<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    delta_lambda: f64,
) -> Result<TraceEstimate> {
    check_step(delta_lambda)?;
    let mid = source.ground(lambda)?;
    let lo = source.ground(lambda - delta_lambda)?;
    let hi = source.ground(lambda + delta_lambda)?;
    for end in [&lo, &hi] {
        check_same_chain(&mid, end)?;
        if end.n_up() != mid.n_up() {
            return Err(Error::Divergent(format!(
                "ground state changes magnetization sector between {} and {}",
                mid.lambda, end.lambda
            )));
        }
    }

    let sign = |end: &GroundState| if dot(&mid.vector, &end.vector) < 0.0 { -1.0 } else { 1.0 };
    let mut d = vec![0.0; mid.vector.len()];
    axpy(sign(&hi) / (2.0 * delta_lambda), &hi.vector, &mut d);
    axpy(-sign(&lo) / (2.0 * delta_lambda), &lo.vector, &mut d);

    let dd = dot(&d, &d);
    let pd = dot(&mid.vector, &d);
    let sites = source.sites() as f64;
    let chi = ((dd - pd * pd) / sites).max(0.0);
    let gauge_residual = if dd > 0.0 { pd.abs() / dd.sqrt() } else { 0.0 };
    Ok(TraceEstimate {
        lambda,
        delta_lambda,
        chi,
        gauge_residual,
    })
}

pub fn susceptibility<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    delta_lambda: f64,
) -> Result<FidelityResult> {
    let logf = chi_log_fidelity(source, lambda, delta_lambda)?;
    let trace = chi_trace(source, lambda, delta_lambda)?;
    Ok(FidelityResult {
        lambda,
        delta_lambda,
        fidelity: logf.fidelity,
        chi_logf: logf.chi,
        chi_trace: trace.chi,
    })
}
