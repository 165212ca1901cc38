//! Lanczos ground states of one magnetization sector.
//!
//! The Krylov basis is kept and fully reorthogonalized (two Gram-Schmidt
//! sweeps per step), so no spurious copies of converged Ritz values appear.
//! Convergence is declared on the eigen-residual `|H y - theta y|`, first
//! from the Lanczos estimate and then confirmed with an explicit product.
//! The gap to the next level is measured by a second, deflated Lanczos run
//! orthogonal to the converged ground vector.

mod tridiag;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::SpinBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, XxzHamiltonian};
use crate::linalg::{axpy, dot, norm, scale};

/// Relative gap below which a ground state is treated as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-8;

/// Krylov vectors kept before an explicit restart from the current Ritz vector.
pub const KRYLOV_CAPACITY: usize = 300;

const GAP_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Residual tolerance, relative to `max(1, |E|)`.
    pub tol: f64,
    /// Budget of matrix-vector products for the ground-state run.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 500,
            seed: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::domain(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub lambda: f64,
    pub basis: Arc<SpinBasis>,
    pub boundary: Boundary,
    /// Total energy in units of the exchange coupling.
    pub energy: f64,
    /// Unit vector, gauge-fixed by [`gauge_fix`].
    pub vector: Vec<f64>,
    /// Estimate of `E1 - E0` inside the sector; infinite for one-state sectors.
    pub gap: f64,
    pub converged: bool,
    /// Explicit `|H v - E v|` of the returned vector.
    pub residual: f64,
    /// Matrix-vector products spent on the ground-state run.
    pub iterations: usize,
    /// Lowest Ritz value after each Lanczos step.
    pub ritz_history: Vec<f64>,
}

impl GroundState {
    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn n_up(&self) -> usize {
        self.basis.n_up()
    }

    pub fn energy_per_site(&self) -> f64 {
        self.energy / self.sites() as f64
    }
}

/// Magnitudes this close to the maximum count as tied.
const GAUGE_TIE_RTOL: f64 = 1e-10;

/// Scales `v` to unit norm with its largest-magnitude entry positive; ties
/// (up to `GAUGE_TIE_RTOL` relative) go to the lowest index.
pub fn gauge_fix(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::domain("cannot gauge-fix a zero or non-finite vector"));
    }
    let largest = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let pivot = v
        .iter()
        .position(|x| x.abs() >= largest * (1.0 - GAUGE_TIE_RTOL))
        .unwrap_or(0);
    let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
    Ok(v.iter().map(|x| sign * x / n).collect())
}

fn random_unit(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = norm(&v);
    scale(1.0 / n, &mut v);
    v
}

fn project_out(deflate: &[&[f64]], w: &mut [f64]) {
    for d in deflate {
        let c = dot(d, w);
        axpy(-c, d, w);
    }
}

struct Pass {
    theta: f64,
    second: Option<f64>,
    vector: Vec<f64>,
    matvecs: usize,
    history: Vec<f64>,
    exhausted: bool,
}

/// One Lanczos run from `start`, restricted to the complement of `deflate`.
/// `done(theta, residual_estimate)` decides convergence.
fn krylov_pass(
    h: &XxzHamiltonian,
    start: Vec<f64>,
    deflate: &[&[f64]],
    budget: usize,
    done: impl Fn(f64, f64) -> bool,
) -> Result<Pass> {
    let dim = h.dim();
    let reachable = dim - deflate.len();
    let mut q = start;
    for _ in 0..2 {
        project_out(deflate, &mut q);
    }
    let qn = norm(&q);
    if !(qn > 0.0) {
        return Err(Error::domain("Lanczos start vector lies in the deflated space"));
    }
    scale(1.0 / qn, &mut q);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    let mut w = vec![0.0; dim];
    let mut matvecs = 0;

    loop {
        let j = basis.len() - 1;
        h.apply_into(&basis[j], &mut w)?;
        matvecs += 1;
        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        for _ in 0..2 {
            project_out(deflate, &mut w);
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm(&w);

        let theta = tridiag::eigenvalue(&alpha, &beta, 0);
        let s = tridiag::eigenvector(&alpha, &beta, theta);
        let second = (alpha.len() > 1).then(|| tridiag::eigenvalue(&alpha, &beta, 1));
        let estimate = b * s[s.len() - 1].abs();
        history.push(theta);

        let t_scale = alpha.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let exhausted = basis.len() >= reachable || b <= 1e-14 * t_scale;
        if exhausted
            || done(theta, estimate)
            || matvecs >= budget
            || basis.len() >= KRYLOV_CAPACITY
        {
            let mut y = vec![0.0; dim];
            for (sk, qk) in s.iter().zip(&basis) {
                axpy(*sk, qk, &mut y);
            }
            project_out(deflate, &mut y);
            let yn = norm(&y);
            scale(1.0 / yn, &mut y);
            return Ok(Pass {
                theta,
                second,
                vector: y,
                matvecs,
                history,
                exhausted,
            });
        }

        beta.push(b);
        let mut next = std::mem::replace(&mut w, vec![0.0; dim]);
        scale(1.0 / b, &mut next);
        basis.push(next);
    }
}

/// Rayleigh quotient and explicit residual norm of a unit vector.
fn rayleigh(h: &XxzHamiltonian, y: &[f64]) -> Result<(f64, f64)> {
    let mut hy = h.apply(y)?;
    let e = dot(y, &hy);
    axpy(-e, y, &mut hy);
    Ok((e, norm(&hy)))
}

/// Lowest eigenpair of `h` with a gap estimate.
///
/// Fails with [`Error::NoConvergence`] when `max_iter` products do not reach
/// the residual tolerance and with [`Error::Degenerate`] when the gap is below
/// `DEGENERACY_RTOL * max(1, |E0|)`; both carry the best state found.
pub fn lanczos_ground(h: &XxzHamiltonian, cfg: &SolverConfig) -> Result<GroundState> {
    cfg.validate()?;
    let dim = h.dim();
    let tol_abs = |e: f64| cfg.tol * e.abs().max(1.0);

    let make = |vector: Vec<f64>, energy, residual, gap, converged, iterations, history| {
        Ok::<_, Error>(GroundState {
            lambda: h.lambda(),
            basis: h.basis().clone(),
            boundary: h.boundary(),
            energy,
            vector: gauge_fix(&vector)?,
            gap,
            converged,
            residual,
            iterations,
            ritz_history: history,
        })
    };

    if dim == 1 {
        let (e, r) = rayleigh(h, &[1.0])?;
        return make(vec![1.0], e, r, f64::INFINITY, true, 1, vec![e]);
    }

    let mut start = random_unit(dim, cfg.seed);
    let mut used = 0;
    let mut history = Vec::new();
    let mut second_bound = f64::INFINITY;
    let (vector, energy, residual) = loop {
        let pass = krylov_pass(h, start, &[], cfg.max_iter - used, |theta, est| {
            est <= tol_abs(theta)
        })?;
        used += pass.matvecs;
        history.extend_from_slice(&pass.history);
        if let Some(second) = pass.second {
            second_bound = second_bound.min(second);
        }
        let (e, r) = rayleigh(h, &pass.vector)?;
        if r <= tol_abs(e) || pass.exhausted {
            break (pass.vector, e, r);
        }
        if used >= cfg.max_iter {
            let best = make(pass.vector, e, r, second_bound - e, false, used, history)?;
            return Err(Error::NoConvergence {
                iterations: used,
                residual: r,
                best: Box::new(best),
            });
        }
        start = pass.vector;
    };

    let threshold = DEGENERACY_RTOL * energy.abs().max(1.0);
    let gap_pass = krylov_pass(
        h,
        random_unit(dim, cfg.seed.wrapping_add(GAP_SEED_OFFSET)),
        &[&vector],
        cfg.max_iter,
        |theta, est| est <= tol_abs(theta) || est <= 1e-3 * (theta - energy).max(threshold),
    )?;
    let gap = (gap_pass.theta.min(second_bound) - energy).max(0.0);

    let state = make(vector, energy, residual, gap, true, used, history)?;
    if gap < threshold {
        return Err(Error::Degenerate {
            gap,
            threshold,
            state: Box::new(state),
        });
    }
    Ok(state)
}

/// Anything that can hand out ground states of a fixed chain as a function of
/// the anisotropy.
pub trait GroundStateSource: Sync {
    fn sites(&self) -> usize;
    fn boundary(&self) -> Boundary;
    fn ground(&self, lambda: f64) -> Result<Arc<GroundState>>;
}

type Slot = Arc<OnceLock<Result<Arc<GroundState>>>>;

/// Ground states of one sector, memoized per anisotropy value. Concurrent
/// callers asking for the same value share one solve.
pub struct SectorSolver {
    basis: Arc<SpinBasis>,
    boundary: Boundary,
    config: SolverConfig,
    cache: Mutex<HashMap<u64, Slot>>,
}

impl SectorSolver {
    pub fn new(sites: usize, n_up: usize, boundary: Boundary, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let basis = Arc::new(SpinBasis::new(sites, n_up)?);
        // reject invalid chains here rather than on first use
        XxzHamiltonian::new(basis.clone(), 0.0, boundary)?;
        Ok(Self {
            basis,
            boundary,
            config,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn basis(&self) -> &Arc<SpinBasis> {
        &self.basis
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn hamiltonian(&self, lambda: f64) -> Result<XxzHamiltonian> {
        XxzHamiltonian::new(self.basis.clone(), lambda, self.boundary)
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("solve cache poisoned").len()
    }
}

impl GroundStateSource for SectorSolver {
    fn sites(&self) -> usize {
        self.basis.sites()
    }

    fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn ground(&self, lambda: f64) -> Result<Arc<GroundState>> {
        // +0.0 folds -0.0 onto the same key
        let key = (lambda + 0.0).to_bits();
        let slot = self
            .cache
            .lock()
            .expect("solve cache poisoned")
            .entry(key)
            .or_default()
            .clone();
        slot.get_or_init(|| {
            let h = self.hamiltonian(lambda)?;
            lanczos_ground(&h, &self.config).map(Arc::new)
        })
        .clone()
    }
}
