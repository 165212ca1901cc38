use xxz_fidelity::sweep::{extrapolate_records, locate_peak, run_sweep, ChiColumn, FitForm, Issue, SweepConfig};

#[test]
fn records_cover_the_grid_in_order() {
    let cfg = SweepConfig {
        sizes: vec![6, 4, 8],
        lambda_min: -0.6,
        lambda_max: 0.6,
        steps: 7,
        ..Default::default()
    };
    let recs = run_sweep(&cfg).unwrap();
    let grid = cfg.grid();
    assert_eq!(recs.len(), 21);
    for (chunk, &l) in recs.chunks(7).zip(&cfg.sizes) {
        assert!(chunk.iter().all(|r| r.sites == l));
        let lambdas: Vec<f64> = chunk.iter().map(|r| r.lambda).collect();
        assert_eq!(lambdas, grid);
    }
}

#[test]
fn susceptibility_rises_toward_the_isotropic_point() {
    let cfg = SweepConfig {
        sizes: vec![12],
        lambda_min: 0.0,
        lambda_max: 0.95,
        steps: 20,
        ..Default::default()
    };
    let recs = run_sweep(&cfg).unwrap();
    let chi: Vec<f64> = recs.iter().map(|r| r.chi_logf).collect();
    // the finite ring dips first; the rise starts past lambda ~ 0.6
    let from = recs.iter().position(|r| r.lambda >= 0.65).unwrap();
    assert!(chi[from..].windows(2).all(|w| w[1] > w[0]), "{chi:?}");
    let (imin, _) = chi.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert!(imin > 0 && imin < from, "minimum at {}", recs[imin].lambda);
    // the curvature of the energy stays bounded through the same range
    assert!(recs.iter().all(|r| r.d2e.is_finite() && r.d2e.abs() < 1.0));
}

#[test]
fn sector_scan_flags_the_level_crossing() {
    let cfg = SweepConfig {
        sizes: vec![8],
        lambda_min: -1.2,
        lambda_max: -0.8,
        steps: 9,
        scan_sectors: true,
        ..Default::default()
    };
    let recs = run_sweep(&cfg).unwrap();
    let at = recs.iter().position(|r| r.lambda == -1.0).unwrap();
    assert!(recs[at].status.contains(Issue::Divergent));
    assert_eq!(recs[at].fidelity, 0.0);
    assert!(recs[0].status.contains(Issue::OutsideCriticalPhase));
    assert_eq!(recs[0].de, 0.25);
    assert_eq!(recs[0].chi_logf, 0.0);
    let peak = locate_peak(&recs, ChiColumn::LogFidelity).unwrap();
    assert!(peak.divergent);
    assert_eq!(peak.lambda, -1.0);
}

#[test]
fn extrapolated_limit_stays_near_the_data() {
    let cfg = SweepConfig {
        sizes: vec![8, 10, 12, 14],
        lambda_min: -0.4,
        lambda_max: 0.4,
        steps: 3,
        ..Default::default()
    };
    let recs = run_sweep(&cfg).unwrap();
    let fits = extrapolate_records(&recs, ChiColumn::LogFidelity, FitForm::InvLInvL2, (None, None));
    assert_eq!(fits.len(), 3);
    for (lambda, fit) in fits {
        let fit = fit.unwrap();
        let values: Vec<f64> = recs.iter().filter(|r| r.lambda == lambda).map(|r| r.chi_logf).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let reach = 2.0 * (fit.c1 / 8.0).abs();
        assert!(fit.chi_inf > lo - reach && fit.chi_inf < hi + reach, "{fit:?}");
        assert_eq!(fit.sizes, vec![8, 10, 12, 14]);
    }
}
