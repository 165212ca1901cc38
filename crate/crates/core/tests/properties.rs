use std::sync::Arc;

use proptest::prelude::*;

use xxz_fidelity::bosonsim::{build_pair_state, pair_overlap, z_fock_sum, z_unnormalized};
use xxz_fidelity::luttinger::{bogoliubov_angle, chi_analytic_general, chi_analytic_xxz, fidelity_per_mode, luttinger_k};
use xxz_fidelity::{binomial, lanczos_ground, Boundary, Error, SolverConfig, SpinBasis, XxzHamiltonian};

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Periodic), Just(Boundary::Open)]
}

fn sector() -> impl Strategy<Value = (usize, usize)> {
    (3usize..=10).prop_flat_map(|l| (Just(l), 0..=l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_index_round_trip((sites, n_up) in sector()) {
        let b = SpinBasis::new(sites, n_up).unwrap();
        prop_assert_eq!(b.len(), binomial(sites, n_up));
        for (i, &s) in b.states().iter().enumerate() {
            prop_assert_eq!(s.count_ones() as usize, n_up);
            prop_assert_eq!(b.state_index(s).unwrap(), i);
        }
        prop_assert!(b.states().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn hamiltonian_is_symmetric((sites, n_up) in sector(), lambda in -2.0f64..2.0, bc in boundary()) {
        let h = XxzHamiltonian::new(Arc::new(SpinBasis::new(sites, n_up).unwrap()), lambda, bc).unwrap();
        prop_assert_eq!(h.materialize().unwrap().max_asymmetry(), 0.0);
    }

    #[test]
    fn hamiltonian_is_affine_in_lambda(
        (sites, n_up) in sector(),
        a in -1.5f64..1.5,
        b in -1.5f64..1.5,
        bc in boundary(),
        seed in any::<u64>(),
    ) {
        let basis = Arc::new(SpinBasis::new(sites, n_up).unwrap());
        let ha = XxzHamiltonian::new(basis.clone(), a, bc).unwrap();
        let hb = XxzHamiltonian::new(basis.clone(), b, bc).unwrap();
        let mut x = seed | 1;
        let v: Vec<f64> = (0..basis.len())
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                (x % 2001) as f64 / 1000.0 - 1.0
            })
            .collect();
        // H(a) v - H(b) v = (a - b) Hzz v
        let diff: Vec<f64> = ha.apply(&v).unwrap().iter().zip(hb.apply(&v).unwrap()).map(|(p, q)| p - q).collect();
        let zz = ha.apply_zz(&v).unwrap();
        for (d, z) in diff.iter().zip(&zz) {
            prop_assert!((d - (a - b) * z).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_error_within_geometric_bound(theta in -1.5f64..1.5, theta_p in -1.5f64..1.5, n_max in 5usize..120) {
        let a = build_pair_state(theta, n_max).unwrap();
        let b = build_pair_state(theta_p, n_max).unwrap();
        let exact = 1.0 / (theta - theta_p).cosh();
        let err = (pair_overlap(&a, &b) - exact).abs();
        // the missing tail is sum_{n > n_max} (t t')^n / (cosh cosh)
        let x = (theta.tanh() * theta_p.tanh()).abs();
        let bound = x.powi(n_max as i32 + 1) / ((1.0 - x) * theta.cosh() * theta_p.cosh());
        prop_assert!(err <= bound + 1e-14, "err {err} bound {bound}");
    }

    #[test]
    fn overlap_depends_on_angle_difference(theta in -1.2f64..1.2, shift in -0.3f64..0.3, d in -0.5f64..0.5) {
        let f = |a: f64, b: f64| pair_overlap(&build_pair_state(a, 400).unwrap(), &build_pair_state(b, 400).unwrap());
        prop_assert!((f(theta, theta + d) - f(theta + shift, theta + shift + d)).abs() < 1e-10);
    }

    #[test]
    fn fock_sum_matches_unnormalized_closed_form(theta in -1.5f64..1.5, theta_p in -1.5f64..1.5) {
        let exact = z_unnormalized(theta, theta_p).unwrap();
        prop_assert!((z_fock_sum(theta, theta_p, 400) - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn per_mode_fidelity_is_bogoliubov_overlap(k in 0.05f64..20.0, kp in 0.05f64..20.0) {
        let dt = bogoliubov_angle(kp).unwrap() - bogoliubov_angle(k).unwrap();
        let f = fidelity_per_mode(k, kp).unwrap();
        prop_assert!((f - 1.0 / dt.cosh()).abs() < 1e-13);
        prop_assert!(f > 0.0 && f <= 1.0);
        prop_assert!((f - fidelity_per_mode(kp, k).unwrap()).abs() <= 4.0 * f64::EPSILON * f);
    }

    #[test]
    fn general_formula_matches_xxz_closed_form(lambda in -0.95f64..0.95) {
        let general = chi_analytic_general(luttinger_k, lambda, 1e-6).unwrap();
        let closed = chi_analytic_xxz(lambda).unwrap();
        prop_assert!((general - closed).abs() / closed < 1e-6);
    }

    #[test]
    fn stiffness_decreases_with_anisotropy(a in -0.99f64..1.0, b in -0.99f64..1.0) {
        prop_assume!(a < b);
        prop_assert!(luttinger_k(a).unwrap() > luttinger_k(b).unwrap());
    }

    #[test]
    fn lanczos_energy_matches_dense((sites, n_up) in sector(), lambda in -1.5f64..1.5, bc in boundary(), seed in 0u64..1000) {
        let h = XxzHamiltonian::new(Arc::new(SpinBasis::new(sites, n_up).unwrap()), lambda, bc).unwrap();
        let dense = h.materialize().unwrap().symmetric_eigen();
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        let energy = match lanczos_ground(&h, &cfg) {
            Ok(g) => g.energy,
            Err(Error::Degenerate { state, .. }) => state.energy,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!((energy - dense.values[0]).abs() < 1e-9 * dense.values[0].abs().max(1.0));
    }
}
