//! Anisotropy sweeps over several chain lengths, the CSV record format, and
//! the finite-size analysis applied to sweep output (extrapolation in `1/L`
//! and susceptibility peak location).

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::basis::MAX_SITES;
use crate::eigensolver::{GroundStateSource, SectorSolver, SolverConfig};
use crate::energy::{energy_derivative_hf, energy_second_derivative, SectorScan};
use crate::error::{Error, Result};
use crate::fidelity::{chi_log_fidelity, chi_trace};
use crate::hamiltonian::Boundary;
use crate::luttinger::{chi_analytic_xxz, luttinger_k};

/// Column order of the sweep CSV.
pub const CSV_HEADER: [&str; 11] = [
    "lambda",
    "L",
    "e0_per_site",
    "dE_dlambda",
    "d2E_dlambda2",
    "fidelity",
    "chi_ed_logf",
    "chi_ed_trace",
    "K",
    "chi_analytic",
    "status",
];

/// Number of modes used for finite-size closed-form fidelities: the chain
/// length, or a fixed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeCount {
    #[default]
    Sites,
    Fixed(u32),
}

impl ModeCount {
    pub fn resolve(self, sites: usize) -> u32 {
        match self {
            ModeCount::Sites => sites as u32,
            ModeCount::Fixed(m) => m,
        }
    }
}

impl fmt::Display for ModeCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeCount::Sites => f.write_str("L"),
            ModeCount::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for ModeCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "L" {
            return Ok(ModeCount::Sites);
        }
        s.parse::<u32>()
            .map(ModeCount::Fixed)
            .map_err(|_| Error::domain(format!("mode count must be \"L\" or a non-negative integer, got {s:?}")))
    }
}

impl Serialize for ModeCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ModeCount::Sites => s.serialize_str("L"),
            ModeCount::Fixed(m) => s.serialize_u32(*m),
        }
    }
}

impl<'de> Deserialize<'de> for ModeCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u32),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(m) => Ok(ModeCount::Fixed(m)),
            Raw::Name(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "L_list")]
    pub sizes: Vec<usize>,
    pub bc: Boundary,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub steps: usize,
    pub delta_lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub mode_count_convention: ModeCount,
    /// Compare the `Sz = 0` sector with the polarized state at every point,
    /// which also lifts the restriction of the grid to `(-1, 1)`.
    #[serde(default)]
    pub scan_sectors: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            sizes: vec![12],
            bc: Boundary::Periodic,
            lambda_min: -0.9,
            lambda_max: 0.9,
            steps: 19,
            delta_lambda: crate::fidelity::DEFAULT_DELTA_LAMBDA,
            tol: solver.tol,
            max_iter: solver.max_iter,
            seed: solver.seed,
            mode_count_convention: ModeCount::Sites,
            scan_sectors: false,
        }
    }
}

impl SweepConfig {
    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::domain("at least one chain length is required"));
        }
        for &l in &self.sizes {
            if l % 2 != 0 {
                return Err(Error::domain(format!("L must be even, got {l}")));
            }
            if !(4..=MAX_SITES).contains(&l) {
                return Err(Error::domain(format!("L must lie in 4..={MAX_SITES}, got {l}")));
            }
        }
        if !(self.lambda_min.is_finite() && self.lambda_max.is_finite()) {
            return Err(Error::domain("lambda bounds must be finite"));
        }
        match self.steps {
            0 => return Err(Error::domain("steps must be at least 2")),
            1 if self.lambda_min != self.lambda_max => {
                return Err(Error::domain(
                    "steps must be at least 2 unless lambda_min equals lambda_max",
                ))
            }
            _ if self.steps >= 2 && self.lambda_min >= self.lambda_max => {
                return Err(Error::domain("lambda_min must be below lambda_max"))
            }
            _ => {}
        }
        if !(self.delta_lambda > 0.0 && self.delta_lambda.is_finite()) {
            return Err(Error::domain(format!(
                "delta_lambda must be positive, got {}",
                self.delta_lambda
            )));
        }
        if !self.scan_sectors && (self.lambda_min <= -1.0 || self.lambda_max >= 1.0) {
            return Err(Error::domain(
                "lambda grid must lie inside (-1, 1); enable sector scanning to cross lambda = -1",
            ));
        }
        self.solver().validate()
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lambda_min];
        }
        let span = self.lambda_max - self.lambda_min;
        let last = self.steps - 1;
        // keep 12 digits below the span so that e.g. 0.3 and 0.0 come out exact
        let decimals = (12 - span.log10().floor() as i32).max(0) as usize;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    return self.lambda_max;
                }
                let x = self.lambda_min + span * i as f64 / last as f64;
                format!("{x:.decimals$}").parse::<f64>().map_or(x, |r| r + 0.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Issue {
    Degenerate,
    Divergent,
    Unconverged,
    Failed,
    AnalyticDivergent,
    OutsideCriticalPhase,
}

impl Issue {
    pub fn as_str(self) -> &'static str {
        match self {
            Issue::Degenerate => "degenerate",
            Issue::Divergent => "divergent",
            Issue::Unconverged => "unconverged",
            Issue::Failed => "failed",
            Issue::AnalyticDivergent => "analytic_divergent",
            Issue::OutsideCriticalPhase => "outside_critical_phase",
        }
    }

    /// The exact-diagonalization side could not produce a state.
    pub fn is_solver_failure(self) -> bool {
        matches!(self, Issue::Degenerate | Issue::Unconverged | Issue::Failed)
    }

    fn of_error(e: &Error) -> Self {
        match e {
            Error::Degenerate { .. } => Issue::Degenerate,
            Error::NoConvergence { .. } => Issue::Unconverged,
            Error::Divergent(_) => Issue::Divergent,
            _ => Issue::Failed,
        }
    }
}

impl FromStr for Issue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Issue::Degenerate,
            Issue::Divergent,
            Issue::Unconverged,
            Issue::Failed,
            Issue::AnalyticDivergent,
            Issue::OutsideCriticalPhase,
        ]
        .into_iter()
        .find(|i| i.as_str() == s)
        .ok_or_else(|| Error::Parse(format!("unknown status {s:?}")))
    }
}

/// Issues met while evaluating one record; `ok` when empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Status(Vec<Issue>);

impl Status {
    pub fn push(&mut self, issue: Issue) {
        if !self.0.contains(&issue) {
            self.0.push(issue);
        }
    }

    pub fn is_ok(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, issue: Issue) -> bool {
        self.0.contains(&issue)
    }

    pub fn issues(&self) -> &[Issue] {
        &self.0
    }

    pub fn has_solver_failure(&self) -> bool {
        self.0.iter().any(|i| i.is_solver_failure())
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ok");
        }
        let names: Vec<&str> = self.0.iter().map(|i| i.as_str()).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ok" {
            return Ok(Status::default());
        }
        let mut status = Status::default();
        for part in s.split('+') {
            status.push(part.parse()?);
        }
        Ok(status)
    }
}

/// One grid point of one chain length. Missing values are NaN and explained
/// by `status`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub lambda: f64,
    pub sites: usize,
    pub e0_per_site: f64,
    pub de: f64,
    pub d2e: f64,
    pub fidelity: f64,
    pub chi_logf: f64,
    pub chi_trace: f64,
    pub k: f64,
    pub chi_analytic: f64,
    pub status: Status,
}

fn keep(r: Result<f64>, status: &mut Status) -> f64 {
    r.unwrap_or_else(|e| {
        status.push(Issue::of_error(&e));
        f64::NAN
    })
}

/// Fill one record from any ground-state source.
pub fn evaluate_point<S: GroundStateSource + ?Sized>(
    source: &S,
    lambda: f64,
    delta_lambda: f64,
) -> SweepRecord {
    let mut status = Status::default();
    let ground = source.ground(lambda);
    let e0_per_site = keep(ground.as_ref().map(|g| g.energy_per_site()).map_err(Clone::clone), &mut status);
    let de = keep(ground.and_then(|g| energy_derivative_hf(&g)), &mut status);
    let d2e = keep(energy_second_derivative(source, lambda, delta_lambda), &mut status);

    let (fidelity, chi_logf) = match chi_log_fidelity(source, lambda, delta_lambda) {
        Ok(r) => (r.fidelity, r.chi),
        Err(e) => {
            status.push(Issue::of_error(&e));
            let f = if matches!(e, Error::Divergent(_)) { 0.0 } else { f64::NAN };
            (f, f64::NAN)
        }
    };
    let chi_tr = keep(chi_trace(source, lambda, delta_lambda).map(|t| t.chi), &mut status);

    let k = match luttinger_k(lambda) {
        Ok(k) => k,
        Err(_) => {
            status.push(Issue::OutsideCriticalPhase);
            f64::NAN
        }
    };
    let chi_analytic = match chi_analytic_xxz(lambda) {
        Ok(c) => c,
        Err(Error::Divergent(_)) if k.is_finite() => {
            status.push(Issue::AnalyticDivergent);
            f64::NAN
        }
        Err(_) => {
            status.push(Issue::OutsideCriticalPhase);
            f64::NAN
        }
    };

    SweepRecord {
        lambda,
        sites: source.sites(),
        e0_per_site,
        de,
        d2e,
        fidelity,
        chi_logf,
        chi_trace: chi_tr,
        k,
        chi_analytic,
        status,
    }
}

pub fn source_for(cfg: &SweepConfig, sites: usize) -> Result<Box<dyn GroundStateSource>> {
    Ok(if cfg.scan_sectors {
        Box::new(SectorScan::new(sites, cfg.bc, cfg.solver())?)
    } else {
        Box::new(SectorSolver::new(sites, sites / 2, cfg.bc, cfg.solver())?)
    })
}

/// Records for every `(L, lambda)` pair, chain lengths in config order and
/// each followed by its full grid. Per-point failures are recorded in the
/// status column; only an invalid config is an error.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let grid = cfg.grid();
    let mut records = Vec::with_capacity(grid.len() * cfg.sizes.len());
    for &sites in &cfg.sizes {
        let source = source_for(cfg, sites)?;
        let batch: Vec<SweepRecord> = grid
            .par_iter()
            .map(|&lambda| evaluate_point(source.as_ref(), lambda, cfg.delta_lambda))
            .collect();
        records.extend(batch);
    }
    Ok(records)
}

/// 17 significant digits; non-finite values as `nan` / `inf` / `-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(field: &str, column: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: column {column}: not a number: {field:?}")))
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let row = [
            format_float(r.lambda),
            r.sites.to_string(),
            format_float(r.e0_per_site),
            format_float(r.de),
            format_float(r.d2e),
            format_float(r.fidelity),
            format_float(r.chi_logf),
            format_float(r.chi_trace),
            format_float(r.k),
            format_float(r.chi_analytic),
            r.status.to_string(),
        ];
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header {:?}; expected {}",
            header.iter().collect::<Vec<_>>(),
            CSV_HEADER.join(",")
        )));
    }
    let mut records = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!("line {line}: expected {} fields", CSV_HEADER.len())));
        }
        let f = |i: usize| parse_float(&rec[i], CSV_HEADER[i], line);
        let sites = rec[1]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("line {line}: column L: not an integer: {:?}", &rec[1])))?;
        records.push(SweepRecord {
            lambda: f(0)?,
            sites,
            e0_per_site: f(2)?,
            de: f(3)?,
            d2e: f(4)?,
            fidelity: f(5)?,
            chi_logf: f(6)?,
            chi_trace: f(7)?,
            k: f(8)?,
            chi_analytic: f(9)?,
            status: rec[10].parse()?,
        });
    }
    Ok(records)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// JSON view of a record: CSV column names as keys, missing values as null.
#[derive(Debug, Serialize)]
pub struct RecordRow {
    pub lambda: f64,
    #[serde(rename = "L")]
    pub sites: usize,
    pub e0_per_site: Option<f64>,
    #[serde(rename = "dE_dlambda")]
    pub de: Option<f64>,
    #[serde(rename = "d2E_dlambda2")]
    pub d2e: Option<f64>,
    pub fidelity: Option<f64>,
    pub chi_ed_logf: Option<f64>,
    pub chi_ed_trace: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub chi_analytic: Option<f64>,
    pub status: String,
}

impl From<&SweepRecord> for RecordRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            lambda: r.lambda,
            sites: r.sites,
            e0_per_site: finite(r.e0_per_site),
            de: finite(r.de),
            d2e: finite(r.d2e),
            fidelity: finite(r.fidelity),
            chi_ed_logf: finite(r.chi_logf),
            chi_ed_trace: finite(r.chi_trace),
            k: finite(r.k),
            chi_analytic: finite(r.chi_analytic),
            status: r.status.to_string(),
        }
    }
}

/// Conventions behind a sweep, written next to its output.
#[derive(Debug, Clone, Serialize)]
pub struct SweepMetadata {
    pub config: SweepConfig,
    pub grid_points: usize,
    pub sector: &'static str,
    pub per_site_normalizer: &'static str,
    /// `(L, bond count)` for each chain length.
    pub bond_counts: Vec<(usize, usize)>,
    pub logf_stencil: &'static str,
    pub trace_stencil: &'static str,
    pub default_fit_form: FitForm,
}

impl SweepMetadata {
    pub fn new(cfg: &SweepConfig) -> Self {
        Self {
            config: cfg.clone(),
            grid_points: cfg.grid().len(),
            sector: if cfg.scan_sectors {
                "lower of n_up = L/2 and n_up = L"
            } else {
                "n_up = L/2"
            },
            per_site_normalizer: "L (number of sites)",
            bond_counts: cfg.sizes.iter().map(|&l| (l, cfg.bc.bond_count(l))).collect(),
            logf_stencil: "lambda +- delta_lambda/2",
            trace_stencil: "lambda, lambda +- delta_lambda",
            default_fit_form: FitForm::default(),
        }
    }
}

/// Finite-size ansatz for `chi_L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitForm {
    /// `chi_inf + c1 / L`
    InvL,
    /// `chi_inf + c1 / L + c2 / L^2`
    #[default]
    InvLInvL2,
}

impl FitForm {
    pub fn as_str(self) -> &'static str {
        match self {
            FitForm::InvL => "inv_l",
            FitForm::InvLInvL2 => "inv_l_inv_l2",
        }
    }

    fn params(self) -> usize {
        match self {
            FitForm::InvL => 2,
            FitForm::InvLInvL2 => 3,
        }
    }
}

impl FromStr for FitForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_l" => Ok(FitForm::InvL),
            "inv_l_inv_l2" => Ok(FitForm::InvLInvL2),
            other => Err(Error::domain(format!(
                "unknown fit form {other:?} (expected inv_l or inv_l_inv_l2)"
            ))),
        }
    }
}

/// Minimum number of distinct chain lengths for an extrapolation.
pub const MIN_FIT_SIZES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub lambda: f64,
    #[serde(rename = "L_used")]
    pub sizes: Vec<usize>,
    pub chi_inf: f64,
    pub c1: f64,
    pub c2: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
    pub form: FitForm,
}

impl ScalingFit {
    pub fn predict(&self, sites: usize) -> f64 {
        let x = 1.0 / sites as f64;
        self.chi_inf + self.c1 * x + self.c2 * x * x
    }
}

/// Least-squares fit of `(L, chi_L)` pairs to `form`.
pub fn extrapolate(points: &[(usize, f64)], lambda: f64, form: FitForm) -> Result<ScalingFit> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < MIN_FIT_SIZES {
        return Err(Error::InsufficientData { need: MIN_FIT_SIZES, got: sizes.len() });
    }
    if let Some(bad) = points.iter().find(|p| !p.1.is_finite() || p.0 == 0) {
        return Err(Error::domain(format!("cannot fit non-finite point {bad:?}")));
    }

    use faer::prelude::*;
    let p = form.params();
    let a = Mat::<f64>::from_fn(points.len(), p, |i, j| (1.0 / points[i].0 as f64).powi(j as i32));
    let b = Col::<f64>::from_fn(points.len(), |i| points[i].1);
    let coef = a.qr().solve_lstsq(&b);

    let fit = ScalingFit {
        lambda,
        sizes,
        chi_inf: coef.read(0),
        c1: coef.read(1),
        c2: if p > 2 { coef.read(2) } else { 0.0 },
        residual: 0.0,
        form,
    };
    let ss: f64 = points
        .iter()
        .map(|&(l, y)| (fit.predict(l) - y).powi(2))
        .sum();
    Ok(ScalingFit {
        residual: (ss / points.len() as f64).sqrt(),
        ..fit
    })
}

/// Which susceptibility column a finite-size analysis reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChiColumn {
    #[default]
    LogFidelity,
    Trace,
    Analytic,
}

impl ChiColumn {
    pub fn of(self, r: &SweepRecord) -> f64 {
        match self {
            ChiColumn::LogFidelity => r.chi_logf,
            ChiColumn::Trace => r.chi_trace,
            ChiColumn::Analytic => r.chi_analytic,
        }
    }
}

impl FromStr for ChiColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi_ed_logf" => Ok(ChiColumn::LogFidelity),
            "chi_ed_trace" => Ok(ChiColumn::Trace),
            "chi_analytic" => Ok(ChiColumn::Analytic),
            other => Err(Error::domain(format!("unknown susceptibility column {other:?}"))),
        }
    }
}

/// One fit per distinct `lambda`, in order of first appearance. Rows outside
/// the `[l_min, l_max]` window or with a missing value are left out.
pub fn extrapolate_records(
    records: &[SweepRecord],
    column: ChiColumn,
    form: FitForm,
    window: (Option<usize>, Option<usize>),
) -> Vec<(f64, Result<ScalingFit>)> {
    let mut order: Vec<u64> = Vec::new();
    let mut groups: std::collections::HashMap<u64, Vec<(usize, f64)>> = Default::default();
    for r in records {
        let key = (r.lambda + 0.0).to_bits();
        let entry = groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        let inside = window.0.is_none_or(|lo| r.sites >= lo) && window.1.is_none_or(|hi| r.sites <= hi);
        let chi = column.of(r);
        if inside && chi.is_finite() {
            entry.push((r.sites, chi));
        }
    }
    order
        .into_iter()
        .map(|key| {
            let lambda = f64::from_bits(key);
            (lambda, extrapolate(&groups[&key], lambda, form))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub lambda: f64,
    /// Index of the maximal grid point in the input.
    pub index: usize,
    /// The maximum sits on the first or last usable point; no refinement.
    pub at_boundary: bool,
    /// The maximum is a point where the overlap vanished.
    pub divergent: bool,
}

/// Location of the largest `chi`, refined by a parabola through the maximum
/// and its two neighbours. NaN entries are skipped; `+inf` marks a divergent
/// point and wins outright.
pub fn locate_peak_xy(lambdas: &[f64], chi: &[f64]) -> Result<Peak> {
    if lambdas.len() != chi.len() {
        return Err(Error::Shape { expected: lambdas.len(), got: chi.len() });
    }
    let usable: Vec<usize> = (0..chi.len()).filter(|&i| !chi[i].is_nan()).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData { need: 3, got: usable.len() });
    }
    let mut best = 0;
    for (pos, &i) in usable.iter().enumerate() {
        if chi[i] > chi[usable[best]] {
            best = pos;
        }
    }
    let index = usable[best];
    let at_boundary = best == 0 || best == usable.len() - 1;
    if chi[index] == f64::INFINITY || at_boundary {
        return Ok(Peak {
            lambda: lambdas[index],
            index,
            at_boundary,
            divergent: chi[index] == f64::INFINITY,
        });
    }

    let (i0, i2) = (usable[best - 1], usable[best + 1]);
    let (x0, x1, x2) = (lambdas[i0], lambdas[index], lambdas[i2]);
    let (y0, y1, y2) = (chi[i0], chi[index], chi[i2]);
    if !(y0.is_finite() && y2.is_finite()) {
        return Ok(Peak { lambda: x1, index, at_boundary, divergent: false });
    }
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    let lambda = if den != 0.0 {
        let (lo, hi) = if x0 < x2 { (x0, x2) } else { (x2, x0) };
        (x1 - 0.5 * num / den).clamp(lo, hi)
    } else {
        x1
    };
    Ok(Peak {
        lambda,
        index,
        at_boundary,
        divergent: false,
    })
}

/// Peak of `column` over records of one chain length. Points whose overlap
/// vanished (status `divergent` with no finite value) count as infinite.
pub fn locate_peak(records: &[SweepRecord], column: ChiColumn) -> Result<Peak> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.sites != first.sites) {
            return Err(Error::Shape { expected: first.sites, got: other.sites });
        }
    }
    let lambdas: Vec<f64> = records.iter().map(|r| r.lambda).collect();
    let chi: Vec<f64> = records
        .iter()
        .map(|r| {
            let v = column.of(r);
            if v.is_nan() && r.status.contains(Issue::Divergent) && !r.status.has_solver_failure() {
                f64::INFINITY
            } else {
                v
            }
        })
        .collect();
    locate_peak_xy(&lambdas, &chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(lambda: f64, f: impl Fn(f64) -> f64, sizes: &[usize]) -> Vec<(usize, f64)> {
        let _ = lambda;
        sizes.iter().map(|&l| (l, f(l as f64))).collect()
    }

    #[test]
    fn exact_inverse_l_recovery() {
        let pts = synthetic(0.0, |l| 0.1 + 0.5 / l, &[8, 10, 12, 14, 16]);
        let fit = extrapolate(&pts, 0.0, FitForm::InvLInvL2).unwrap();
        assert!((fit.chi_inf - 0.1).abs() < 1e-10);
        assert!(fit.c2.abs() < 1e-8);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn exact_quadratic_recovery() {
        let pts = synthetic(0.0, |l| 0.2 + 1.0 / l + 3.0 / (l * l), &[6, 8, 10, 12]);
        let fit = extrapolate(&pts, 0.0, FitForm::InvLInvL2).unwrap();
        assert!((fit.chi_inf - 0.2).abs() < 1e-8);
        assert!((fit.c1 - 1.0).abs() < 1e-8);
        assert!((fit.c2 - 3.0).abs() < 1e-8);
    }

    #[test]
    fn too_few_sizes() {
        let pts = vec![(8, 0.1), (8, 0.1), (10, 0.2)];
        assert!(matches!(
            extrapolate(&pts, 0.0, FitForm::InvLInvL2),
            Err(Error::InsufficientData { need: 3, got: 2 })
        ));
    }

    #[test]
    fn parabola_peak() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - (x - 0.3f64).powi(2)).collect();
        let p = locate_peak_xy(&xs, &ys).unwrap();
        assert!((p.lambda - 0.3).abs() < 0.01, "{p:?}");
        assert!(!p.at_boundary);
        // off-grid maximum
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 5.0 * (x - 0.37f64).powi(2)).collect();
        assert!((locate_peak_xy(&xs, &ys).unwrap().lambda - 0.37).abs() < 1e-12);
    }

    #[test]
    fn monotone_input_peaks_at_boundary() {
        let xs = [0.0, 0.1, 0.2, 0.3];
        let p = locate_peak_xy(&xs, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(p.at_boundary);
        assert_eq!(p.index, 3);
        assert!(locate_peak_xy(&xs[..2], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn divergent_point_wins() {
        let xs = [-1.1, -1.05, -1.0, -0.95, -0.9];
        let ys = [0.0, 0.0, f64::INFINITY, 0.3, 0.2];
        let p = locate_peak_xy(&xs, &ys).unwrap();
        assert!(p.divergent);
        assert_eq!(p.lambda, -1.0);
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let cfg = SweepConfig { lambda_min: -0.9, lambda_max: 0.9, steps: 19, ..Default::default() };
        let g = cfg.grid();
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], -0.9);
        assert_eq!(g[18], 0.9);
        assert_eq!(g[6], -0.3);
        assert_eq!(g[9].to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn config_validation() {
        let ok = SweepConfig::default();
        assert!(ok.validate().is_ok());
        let odd = SweepConfig { sizes: vec![7], ..Default::default() };
        assert!(odd.validate().unwrap_err().to_string().contains("L must be even"));
        let wide = SweepConfig { lambda_min: -1.2, ..Default::default() };
        assert!(wide.validate().is_err());
        assert!(SweepConfig { scan_sectors: true, ..wide }.validate().is_ok());
        let single = SweepConfig { lambda_min: 0.0, lambda_max: 0.0, steps: 1, ..Default::default() };
        assert!(single.validate().is_ok());
        assert_eq!(single.grid(), vec![0.0]);
        assert!(SweepConfig { steps: 1, ..Default::default() }.validate().is_err());
        assert!(SweepConfig { delta_lambda: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn config_json_field_names() {
        let cfg = SweepConfig::default();
        let v: serde_json::Value = serde_json::to_value(&cfg).unwrap();
        for key in [
            "L_list", "bc", "lambda_min", "lambda_max", "steps", "delta_lambda", "tol", "max_iter",
            "seed", "mode_count_convention",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["mode_count_convention"], "L");
        let back: SweepConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, cfg);
        let fixed: ModeCount = serde_json::from_str("100").unwrap();
        assert_eq!(fixed, ModeCount::Fixed(100));
    }

    #[test]
    fn status_round_trip() {
        let mut s = Status::default();
        assert_eq!(s.to_string(), "ok");
        s.push(Issue::Divergent);
        s.push(Issue::AnalyticDivergent);
        s.push(Issue::Divergent);
        assert_eq!(s.to_string(), "divergent+analytic_divergent");
        assert_eq!(s.to_string().parse::<Status>().unwrap(), s);
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn free_point_record() {
        let cfg = SweepConfig {
            sizes: vec![8],
            lambda_min: 0.0,
            lambda_max: 0.0,
            steps: 1,
            ..Default::default()
        };
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert!(r.status.is_ok(), "{:?}", r.status);
        assert!((r.chi_analytic - 0.101321).abs() < 1e-6);
        assert_eq!(r.k, 1.0);
        assert!(r.fidelity > 0.0 && r.fidelity <= 1.0);
        assert!(r.chi_logf > 0.0 && r.chi_trace > 0.0);
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let cfg = SweepConfig {
            sizes: vec![4, 6],
            lambda_min: -0.5,
            lambda_max: 0.5,
            steps: 3,
            ..Default::default()
        };
        let recs = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "lambda,L,e0_per_site,dE_dlambda,d2E_dlambda2,fidelity,chi_ed_logf,chi_ed_trace,K,chi_analytic,status\n"
        ));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn malformed_csv() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad = format!("{}\n0.0,8,x,0,0,1,0,0,1,0,ok\n", CSV_HEADER.join(","));
        assert!(matches!(read_csv(bad.as_bytes()), Err(Error::Parse(_))));
    }
}
