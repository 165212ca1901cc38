//! Closed-form Luttinger-liquid description of the critical XXZ chain.
//!
//! For `-1 < lambda <= 1` the chain maps onto a quadratic boson theory with
//! stiffness `K` and velocity `u`:
//!
//! ```text
//! K = (pi/2) / (pi - acos lambda)
//! u = pi sqrt(1 - lambda^2) / (2 acos lambda)
//! ```
//!
//! Its ground state is a product of two-mode squeezed vacua with a
//! momentum-independent Bogoliubov angle `theta = -ln(K)/2`, so fidelities
//! depend on the ratio of stiffnesses only and `u` never enters them.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuttingerParams {
    pub lambda: f64,
    pub k: f64,
    pub u: f64,
    pub theta: f64,
}

impl LuttingerParams {
    pub fn cosh_theta(&self) -> f64 {
        (1.0 + self.k) / (2.0 * self.k.sqrt())
    }

    pub fn sinh_theta(&self) -> f64 {
        (1.0 - self.k) / (2.0 * self.k.sqrt())
    }
}

pub fn bogoliubov_angle(k: f64) -> Result<f64> {
    check_stiffness(k)?;
    Ok(-0.5 * k.ln())
}

fn check_stiffness(k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("Luttinger parameter must be positive and finite, got {k}")));
    }
    Ok(())
}

/// Bethe-ansatz stiffness alone.
pub fn luttinger_k(lambda: f64) -> Result<f64> {
    check_critical(lambda)?;
    Ok(FRAC_PI_2 / (PI - lambda.acos()))
}

fn check_critical(lambda: f64) -> Result<()> {
    if !(lambda > -1.0 && lambda <= 1.0) {
        return Err(Error::domain(format!(
            "lambda = {lambda} lies outside the Luttinger-liquid phase (-1, 1]"
        )));
    }
    Ok(())
}

pub fn params_of_lambda(lambda: f64) -> Result<LuttingerParams> {
    let k = luttinger_k(lambda)?;
    let u = if lambda == 1.0 {
        // sqrt(1 - l^2) / acos(l) -> 1 as l -> 1
        FRAC_PI_2
    } else {
        PI * (1.0 - lambda * lambda).sqrt() / (2.0 * lambda.acos())
    };
    Ok(LuttingerParams {
        lambda,
        k,
        u,
        theta: -0.5 * k.ln() + 0.0,
    })
}

/// Overlap contributed by one `(k, -k)` mode pair:
/// `2 / (sqrt(K/K') + sqrt(K'/K)) = 1 / cosh(theta' - theta)`.
pub fn fidelity_per_mode(k: f64, k_prime: f64) -> Result<f64> {
    check_stiffness(k)?;
    check_stiffness(k_prime)?;
    let r = (k / k_prime).sqrt();
    Ok((2.0 / (r + 1.0 / r)).min(1.0))
}

/// Fidelity of `modes` independent pairs, `fidelity_per_mode^modes`.
pub fn fidelity_finite(k: f64, k_prime: f64, modes: u32) -> Result<f64> {
    let f = fidelity_per_mode(k, k_prime)?;
    Ok(f.powi(modes as i32))
}

/// `S = (d ln K / d lambda)^2 / 4` with the derivative taken by a centered
/// difference of step `h` on an arbitrary stiffness curve.
pub fn chi_analytic_general<F>(k_of: F, lambda: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("difference step must be positive, got {h}")));
    }
    let hi = k_of(lambda + h)?;
    let lo = k_of(lambda - h)?;
    check_stiffness(hi)?;
    check_stiffness(lo)?;
    let dlnk = (hi.ln() - lo.ln()) / (2.0 * h);
    Ok(0.25 * dlnk * dlnk)
}

/// `S(lambda) = 1 / (4 (pi - acos lambda)^2 (1 - lambda^2))`.
pub fn chi_analytic_xxz(lambda: f64) -> Result<f64> {
    if lambda.is_nan() {
        return Err(Error::domain("lambda is NaN"));
    }
    if lambda.abs() >= 1.0 {
        return Err(Error::Divergent(format!(
            "fidelity susceptibility diverges at |lambda| >= 1 (lambda = {lambda})"
        )));
    }
    let a = PI - lambda.acos();
    Ok(1.0 / (4.0 * a * a * (1.0 - lambda * lambda)))
}
