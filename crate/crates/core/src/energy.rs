//! Ground-state energy derivatives per site.
//!
//! Only the `Sz Sz` term carries the anisotropy, so by Hellmann-Feynman
//! `dE/dlambda = <sum_j Sz_j Sz_{j+1}>`. The second derivative is the centered
//! difference of that expectation. Everything is divided by the number of
//! sites `L`, for open chains too (their bond count is `L - 1`).
//!
//! The transition at `lambda = -1` is a level crossing between the `Sz = 0`
//! sector and the fully polarized one; [`SectorScan`] follows whichever sector
//! holds the lower ground state.

use std::sync::Arc;

use crate::eigensolver::{GroundState, GroundStateSource, SectorSolver, SolverConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, XxzHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub lambda: f64,
    /// Energy per site.
    pub e0: f64,
    pub de: f64,
    pub d2e: f64,
}

/// `<sum_j Sz_j Sz_{j+1}> / L` in `g`.
pub fn energy_derivative_hf(g: &GroundState) -> Result<f64> {
    let h = XxzHamiltonian::new(g.basis.clone(), g.lambda, g.boundary)?;
    let zz_sum: f64 = g
        .basis
        .states()
        .iter()
        .zip(&g.vector)
        .map(|(&s, &a)| h.zz_diagonal(s) * a * a)
        .sum();
    Ok(zz_sum / g.sites() as f64)
}

/// `(de(lambda + d) - de(lambda - d)) / (2 d)`.
pub fn energy_second_derivative<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    delta_lambda: f64,
) -> Result<f64> {
    if !(delta_lambda > 0.0 && delta_lambda.is_finite()) {
        return Err(Error::domain(format!("stencil step must be positive, got {delta_lambda}")));
    }
    let hi = source.ground(lambda + delta_lambda)?;
    let lo = source.ground(lambda - delta_lambda)?;
    Ok((energy_derivative_hf(&hi)? - energy_derivative_hf(&lo)?) / (2.0 * delta_lambda))
}

pub fn energy_record<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    delta_lambda: f64,
) -> Result<EnergyRecord> {
    let g = source.ground(lambda)?;
    Ok(EnergyRecord {
        lambda,
        e0: g.energy_per_site(),
        de: energy_derivative_hf(&g)?,
        d2e: energy_second_derivative(source, lambda, delta_lambda)?,
    })
}

/// Index `i` of the largest step `values[i] -> values[i+1]` that exceeds
/// `ratio` times each neighbouring step.
pub fn find_discontinuity(values: &[f64], ratio: f64) -> Option<usize> {
    if values.len() < 2 {
        return None;
    }
    let steps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut best: Option<usize> = None;
    for (i, &s) in steps.iter().enumerate() {
        if !s.is_finite() || s == 0.0 {
            continue;
        }
        let left = i.checked_sub(1).map(|k| steps[k]);
        let right = steps.get(i + 1).copied();
        if left.is_none() && right.is_none() {
            continue;
        }
        let stands_out = [left, right]
            .iter()
            .flatten()
            .all(|&n| s > ratio * n);
        if stands_out && best.is_none_or(|b| s > steps[b]) {
            best = Some(i);
        }
    }
    best
}

/// Ground state of a chain taken as the lower of the `Sz = 0` sector minimum
/// and the fully polarized state.
pub struct SectorScan {
    balanced: SectorSolver,
    polarized: SectorSolver,
}

impl SectorScan {
    pub fn new(sites: usize, boundary: Boundary, config: SolverConfig) -> Result<Self> {
        if !sites.is_multiple_of(2) {
            return Err(Error::domain(format!("L must be even, got {sites}")));
        }
        Ok(Self {
            balanced: SectorSolver::new(sites, sites / 2, boundary, config)?,
            polarized: SectorSolver::new(sites, sites, boundary, config)?,
        })
    }
}

fn energy_of(r: &Result<Arc<GroundState>>) -> Option<f64> {
    match r {
        Ok(g) => Some(g.energy),
        Err(Error::Degenerate { state, .. }) => Some(state.energy),
        Err(Error::NoConvergence { best, .. }) => Some(best.energy),
        Err(_) => None,
    }
}

impl GroundStateSource for SectorScan {
    fn sites(&self) -> usize {
        self.balanced.sites()
    }

    fn boundary(&self) -> Boundary {
        self.balanced.boundary()
    }

    fn ground(&self, lambda: f64) -> Result<Arc<GroundState>> {
        let polarized = self.polarized.ground(lambda)?;
        let balanced = self.balanced.ground(lambda);
        match energy_of(&balanced) {
            Some(e) if e < polarized.energy => balanced,
            Some(_) => Ok(polarized),
            None => balanced,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver(sites: usize, n_up: usize, bc: Boundary) -> SectorSolver {
        SectorSolver::new(sites, n_up, bc, SolverConfig::default()).unwrap()
    }

    #[test]
    fn singlet_bond_correlation() {
        let g = solver(2, 1, Boundary::Open).ground(0.4).unwrap();
        assert!((energy_derivative_hf(&g).unwrap() + 0.125).abs() < 1e-14);
    }

    #[test]
    fn polarized_chain() {
        let g = solver(8, 8, Boundary::Periodic).ground(0.3).unwrap();
        // eight aligned bonds, each +1/4, over eight sites
        assert!((energy_derivative_hf(&g).unwrap() - 0.25).abs() < 1e-15);
        let open = solver(8, 8, Boundary::Open).ground(0.3).unwrap();
        assert!((energy_derivative_hf(&open).unwrap() - 7.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn singlet_energy_is_linear() {
        let s = solver(2, 1, Boundary::Open);
        for &lambda in &[-0.8, 0.0, 0.6] {
            assert!(energy_second_derivative(&s, lambda, 1e-3).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn hellmann_feynman_matches_finite_difference() {
        let s = solver(12, 6, Boundary::Periodic);
        let d = 1e-3;
        for &lambda in &[-0.6, 0.1, 0.75] {
            let g = s.ground(lambda).unwrap();
            let up = s.ground(lambda + d).unwrap().energy_per_site();
            let dn = s.ground(lambda - d).unwrap().energy_per_site();
            let fd = (up - dn) / (2.0 * d);
            assert!((fd - energy_derivative_hf(&g).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn ground_energy_negative_in_the_critical_phase() {
        let s = solver(10, 5, Boundary::Periodic);
        for k in 0..=8 {
            let lambda = -0.95 + 0.24 * k as f64;
            assert!(s.ground(lambda).unwrap().energy < 0.0);
        }
    }

    #[test]
    fn scan_picks_polarized_below_minus_one() {
        let scan = SectorScan::new(8, Boundary::Periodic, SolverConfig::default()).unwrap();
        let below = scan.ground(-1.2).unwrap();
        assert_eq!(below.n_up(), 8);
        assert!((below.energy - 8.0 * -1.2 / 4.0).abs() < 1e-14);
        let above = scan.ground(-0.8).unwrap();
        assert_eq!(above.n_up(), 4);
        assert!(SectorScan::new(7, Boundary::Periodic, SolverConfig::default()).is_err());
    }

    #[test]
    fn jump_detection() {
        let v = [0.25, 0.25, 0.25, -0.02, -0.03, -0.039];
        assert_eq!(find_discontinuity(&v, 10.0), Some(2));
        let smooth: Vec<f64> = (0..10).map(|i| (i as f64 * 0.1).sin()).collect();
        assert_eq!(find_discontinuity(&smooth, 10.0), None);
        assert_eq!(find_discontinuity(&[1.0], 10.0), None);
    }
}
