//! Truncated Fock-space representation of the Luttinger ground state.
//!
//! One `(k, -k)` mode pair in the squeezed vacuum
//! `exp(-tanh(theta) a+_k a+_-k)|0>` has amplitudes
//! `c_n = (-tanh theta)^n / cosh theta` on `|n, n>`. Summing products of these
//! amplitudes directly gives an overlap that is independent of the closed
//! forms in [`crate::luttinger`], and the two are compared in tests and in the
//! `boson-check` command.

use crate::error::{Error, Result};

pub const DEFAULT_N_MAX: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezedPairState {
    pub theta: f64,
    pub n_max: usize,
    pub amplitudes: Vec<f64>,
}

pub fn build_pair_state(theta: f64, n_max: usize) -> Result<SqueezedPairState> {
    let t = theta.tanh();
    if !(t.abs() < 1.0) {
        return Err(Error::domain(format!("|tanh(theta)| must be below 1, theta = {theta}")));
    }
    let mut amplitudes = Vec::with_capacity(n_max + 1);
    let mut c = 1.0 / theta.cosh();
    for _ in 0..=n_max {
        amplitudes.push(c);
        c *= -t;
    }
    Ok(SqueezedPairState {
        theta,
        n_max,
        amplitudes,
    })
}

impl SqueezedPairState {
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|c| c * c).sum()
    }

    /// Norm deficit of the truncated state, `tanh(theta)^(2 (n_max + 1))`.
    pub fn truncation_bound(&self) -> f64 {
        self.theta.tanh().abs().powi(2 * (self.n_max as i32 + 1))
    }
}

/// `sum_n a_n b_n`, truncated to the shorter state.
pub fn pair_overlap(a: &SqueezedPairState, b: &SqueezedPairState) -> f64 {
    a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x * y).sum()
}

/// Overlap of `modes` independent pairs, formed as an explicit product over
/// the pairs rather than a power.
pub fn multi_pair_overlap(a: &[SqueezedPairState], b: &[SqueezedPairState]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| pair_overlap(x, y)).product())
}

/// Unnormalized overlap of the exponential states as a Fock sum,
/// `sum_{n <= n_max} (tanh a tanh b)^n`.
pub fn z_fock_sum(theta_a: f64, theta_b: f64, n_max: usize) -> f64 {
    let x = theta_a.tanh() * theta_b.tanh();
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..=n_max {
        sum += term;
        term *= x;
    }
    sum
}

/// Closed form of the unnormalized per-pair overlap,
/// `(1 - sinh a sinh b / (cosh a cosh b))^-1`.
pub fn z_unnormalized(theta_a: f64, theta_b: f64) -> Result<f64> {
    let x = theta_a.sinh() * theta_b.sinh() / (theta_a.cosh() * theta_b.cosh());
    if !(x < 1.0) {
        return Err(Error::domain(format!(
            "tanh product {x} must be below 1 for a normalizable state"
        )));
    }
    Ok(1.0 / (1.0 - x))
}

/// `z(a, b) / sqrt(z(a, a) z(b, b))`, which equals `1 / cosh(a - b)`.
pub fn normalized_z(theta_a: f64, theta_b: f64) -> Result<f64> {
    let ab = z_unnormalized(theta_a, theta_b)?;
    let aa = z_unnormalized(theta_a, theta_a)?;
    let bb = z_unnormalized(theta_b, theta_b)?;
    Ok(ab / (aa * bb).sqrt())
}
