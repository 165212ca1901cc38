//! Ground-state fidelity susceptibility of the spin-1/2 XXZ chain, computed
//! by Lanczos exact diagonalization and compared against the Luttinger-liquid
//! closed forms.
//!
//! ```
//! use xxz_fidelity::{chi_analytic_xxz, SectorSolver, SolverConfig, Boundary, chi_log_fidelity};
//!
//! let solver = SectorSolver::new(8, 4, Boundary::Periodic, SolverConfig::default()).unwrap();
//! let ed = chi_log_fidelity(&solver, 0.0, 1e-3).unwrap();
//! assert!(ed.chi > 0.0 && ed.chi < chi_analytic_xxz(0.0).unwrap());
//! ```

pub mod basis;
pub mod bosonsim;
pub mod eigensolver;
pub mod energy;
pub mod error;
pub mod fidelity;
pub mod hamiltonian;
mod linalg;
pub mod luttinger;
pub mod sweep;

pub use basis::{binomial, SpinBasis, MAX_SITES};
pub use bosonsim::{build_pair_state, multi_pair_overlap, pair_overlap, SqueezedPairState};
pub use eigensolver::{lanczos_ground, GroundState, GroundStateSource, SectorSolver, SolverConfig};
pub use energy::{energy_derivative_hf, energy_record, energy_second_derivative, EnergyRecord, SectorScan};
pub use error::{Error, Result};
pub use fidelity::{chi_log_fidelity, chi_trace, infidelity, overlap, susceptibility, FidelityResult};
pub use hamiltonian::{Boundary, DenseMatrix, XxzHamiltonian};
pub use luttinger::{chi_analytic_xxz, fidelity_finite, fidelity_per_mode, params_of_lambda, LuttingerParams};
pub use sweep::{run_sweep, FitForm, ScalingFit, SweepConfig, SweepRecord};
