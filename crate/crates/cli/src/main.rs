use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};

use xxz_fidelity::bosonsim::{build_pair_state, pair_overlap, z_fock_sum, z_unnormalized, DEFAULT_N_MAX};
use xxz_fidelity::luttinger::{chi_analytic_xxz, fidelity_finite, luttinger_k, params_of_lambda};
use xxz_fidelity::sweep::{
    self, extrapolate_records, format_float, locate_peak, read_csv, write_csv, ChiColumn, FitForm,
    ModeCount, RecordRow, SweepConfig, SweepMetadata, SweepRecord, MIN_FIT_SIZES,
};
use xxz_fidelity::{Boundary, Error};

#[derive(Parser)]
#[command(name = "xxzfid", version, about = "Fidelity susceptibility of the XXZ chain: exact diagonalization vs. Luttinger liquid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact-diagonalization sweep over lambda for one or more chain lengths
    Sweep(SweepArgs),
    /// Closed-form Luttinger-liquid quantities on a lambda grid
    Analytic(AnalyticArgs),
    /// Compare truncated Fock-space overlaps with their closed forms
    BosonCheck(BosonArgs),
    /// Extrapolate a sweep's susceptibility to infinite length
    Scaling(ScalingArgs),
    /// Locate the susceptibility maximum of a sweep for each chain length
    Peak(PeakArgs),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// Chain lengths, comma separated (even, 4..=24)
    #[arg(long = "L", value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_via::<Boundary>)]
    bc: Option<Boundary>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Finite-difference step of the susceptibility stencils
    #[arg(long)]
    dlambda: Option<f64>,
    /// Lanczos residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mode count for finite-size closed forms: "L" or an integer
    #[arg(long, value_parser = parse_via::<ModeCount>)]
    mode_count: Option<ModeCount>,
    /// Also consider the fully polarized sector, allowing lambda <= -1
    #[arg(long)]
    scan_sectors: bool,
    /// JSON file with (a subset of) the sweep configuration; flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct AnalyticArgs {
    /// Explicit lambda values, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["lambda_min", "lambda_max", "steps"])]
    lambda: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -0.9)]
    lambda_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.9)]
    lambda_max: f64,
    #[arg(long, default_value_t = 19)]
    steps: usize,
    /// Second anisotropy for the finite-size fidelity column
    #[arg(long, allow_hyphen_values = true)]
    kprime_of: Option<f64>,
    /// Number of modes in the finite-size fidelity (defaults to --L)
    #[arg(long)]
    modes: Option<u32>,
    #[arg(long = "L")]
    sites: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct BosonArgs {
    /// Explicit angles, comma separated; every ordered pair is checked
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.5)]
    theta_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.5)]
    theta_max: f64,
    #[arg(long, default_value_t = 31)]
    theta_steps: usize,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct ScalingArgs {
    /// Sweep CSV
    #[arg(long)]
    input: PathBuf,
    /// chi_ed_logf, chi_ed_trace or chi_analytic
    #[arg(long, default_value = "chi_ed_logf", value_parser = parse_via::<ChiColumn>)]
    column: ChiColumn,
    /// inv_l or inv_l_inv_l2
    #[arg(long, default_value = "inv_l_inv_l2", value_parser = parse_via::<FitForm>)]
    fit_form: FitForm,
    #[arg(long)]
    l_min: Option<usize>,
    #[arg(long)]
    l_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Args)]
struct PeakArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "chi_ed_logf", value_parser = parse_via::<ChiColumn>)]
    column: ChiColumn,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

fn parse_via<T>(s: &str) -> Result<T, String>
where
    T: FromStr,
    T::Err: Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::Degenerate { .. } | Error::Divergent(_) => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Analytic(a) => cmd_analytic(a),
        Command::BosonCheck(a) => cmd_boson_check(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Peak(a) => cmd_peak(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("see `xxzfid --help` for usage");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("FIDELITY_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("FIDELITY_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn check_out_path(path: &Path) -> Outcome {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Failure::Usage(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            check_out_path(p)?;
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Outcome {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn sweep_config(a: &SweepArgs) -> Result<SweepConfig, Failure> {
    let mut flags = Map::new();
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            flags.insert(key.to_string(), v);
        }
    };
    set("L_list", a.sizes.as_ref().map(|s| Value::from(s.clone())));
    set("bc", a.bc.map(|b| Value::from(b.as_str())));
    set("lambda_min", a.lambda_min.map(Value::from));
    set("lambda_max", a.lambda_max.map(Value::from));
    set("steps", a.steps.map(Value::from));
    set("delta_lambda", a.dlambda.map(Value::from));
    set("tol", a.tol.map(Value::from));
    set("max_iter", a.max_iter.map(Value::from));
    set("seed", a.seed.map(Value::from));
    set("mode_count_convention", a.mode_count.map(|m| serde_json::to_value(m).unwrap()));
    set("scan_sectors", a.scan_sectors.then_some(Value::Bool(true)));

    let Value::Object(mut merged) = serde_json::to_value(SweepConfig::default())? else {
        unreachable!("config serializes to an object")
    };
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let Value::Object(file) = serde_json::from_str(&text)? else {
            return Err(Failure::Usage(format!("{} must hold a JSON object", path.display())));
        };
        for (key, value) in file {
            if let Some(flag) = flags.get(&key) {
                if *flag != value {
                    eprintln!("note: --{key} = {flag} overrides {value} from {}", path.display());
                }
            }
            merged.insert(key, value);
        }
    }
    merged.extend(flags);
    let cfg: SweepConfig = serde_json::from_value(Value::Object(merged))?;
    cfg.validate()?;
    Ok(cfg)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    metadata: &'a SweepMetadata,
    records: Vec<RecordRow>,
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let cfg = sweep_config(&a)?;
    check_out_path(&a.out)?;
    let start = Instant::now();
    let records = sweep::run_sweep(&cfg)?;
    let wall = start.elapsed();

    let meta = SweepMetadata::new(&cfg);
    let mut out = open_out(Some(&a.out))?;
    match a.format {
        Format::Csv => {
            write_csv(&records, &mut out)?;
            let mut side = BufWriter::new(File::create(sidecar_path(&a.out))?);
            write_json(&mut side, &meta)?;
        }
        Format::Json => {
            let doc = SweepDocument {
                metadata: &meta,
                records: records.iter().map(RecordRow::from).collect(),
            };
            write_json(&mut out, &doc)?;
        }
    }

    let flagged = records.iter().filter(|r| !r.status.is_ok()).count();
    println!(
        "sweep: {} lambda x {} L = {} records ({} flagged) in {:.2} s -> {}",
        meta.grid_points,
        cfg.sizes.len(),
        records.len(),
        flagged,
        wall.as_secs_f64(),
        a.out.display()
    );
    if records.iter().all(|r| r.status.has_solver_failure()) {
        return Err(Failure::Numerical("the eigensolver failed at every grid point".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyticRow {
    lambda: f64,
    #[serde(rename = "K")]
    k: Option<f64>,
    u: Option<f64>,
    theta: Option<f64>,
    chi_analytic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity_finite: Option<Option<f64>>,
    status: &'static str,
}

fn analytic_grid(a: &AnalyticArgs) -> Result<Vec<f64>, Failure> {
    if let Some(l) = &a.lambda {
        return Ok(l.clone());
    }
    let cfg = SweepConfig {
        lambda_min: a.lambda_min,
        lambda_max: a.lambda_max,
        steps: a.steps,
        ..Default::default()
    };
    if a.steps == 0 || (a.steps == 1 && a.lambda_min != a.lambda_max) || (a.steps > 1 && a.lambda_min >= a.lambda_max) {
        return Err(Failure::Usage("need lambda_min < lambda_max and steps >= 2".into()));
    }
    Ok(cfg.grid())
}

fn cmd_analytic(a: AnalyticArgs) -> Outcome {
    let grid = analytic_grid(&a)?;
    if let Some(bad) = grid.iter().find(|l| !(-1.0..=1.0).contains(*l)) {
        return Err(Failure::Usage(format!("lambda = {bad} lies outside [-1, 1]")));
    }
    let modes = a.modes.or(a.sites);
    let k_prime = match (a.kprime_of, modes) {
        (Some(lp), Some(_)) => Some(luttinger_k(lp)?),
        (Some(_), None) => return Err(Failure::Usage("--kprime-of needs --modes or --L".into())),
        (None, Some(_)) if a.modes.is_some() => return Err(Failure::Usage("--modes needs --kprime-of".into())),
        (None, _) => None,
    };

    let mut rows = Vec::with_capacity(grid.len());
    for &lambda in &grid {
        let params = params_of_lambda(lambda).ok();
        let chi = chi_analytic_xxz(lambda);
        let fidelity = match (k_prime, params) {
            (Some(kp), Some(p)) => Some(fidelity_finite(p.k, kp, modes.unwrap_or(0)).ok()),
            (Some(_), None) => Some(None),
            _ => None,
        };
        rows.push(AnalyticRow {
            lambda,
            k: params.map(|p| p.k),
            u: params.map(|p| p.u),
            theta: params.map(|p| p.theta),
            chi_analytic: chi.as_ref().ok().copied(),
            fidelity_finite: fidelity,
            status: if chi.is_ok() { "ok" } else { "divergent" },
        });
    }

    let mut out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json(&mut out, &rows)?,
        Format::Csv => {
            let opt = |x: Option<f64>| format_float(x.unwrap_or(f64::NAN));
            let with_f = k_prime.is_some();
            writeln!(out, "lambda,K,u,theta,chi_analytic{},status", if with_f { ",fidelity_finite" } else { "" })?;
            for r in &rows {
                write!(out, "{},{},{},{},{}", format_float(r.lambda), opt(r.k), opt(r.u), opt(r.theta), opt(r.chi_analytic))?;
                if let Some(f) = r.fidelity_finite {
                    write!(out, ",{}", opt(f))?;
                }
                writeln!(out, ",{}", r.status)?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_boson_check(a: BosonArgs) -> Outcome {
    let thetas = match &a.theta {
        Some(t) => t.clone(),
        None => {
            if a.theta_steps < 2 || a.theta_min >= a.theta_max {
                return Err(Failure::Usage("need theta_min < theta_max and theta_steps >= 2".into()));
            }
            let span = a.theta_max - a.theta_min;
            (0..a.theta_steps)
                .map(|i| a.theta_min + span * i as f64 / (a.theta_steps - 1) as f64)
                .collect()
        }
    };
    if thetas.is_empty() || thetas.iter().any(|t| !t.is_finite()) {
        return Err(Failure::Usage("theta values must be finite".into()));
    }
    if !(a.tol > 0.0) {
        return Err(Failure::Usage("--tol must be positive".into()));
    }

    let states = thetas
        .iter()
        .map(|&t| build_pair_state(t, a.n_max))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max_err = 0.0f64;
    let mut max_unnorm = 0.0f64;
    for (i, si) in states.iter().enumerate() {
        for (j, sj) in states.iter().enumerate() {
            let exact = 1.0 / (thetas[i] - thetas[j]).cosh();
            max_err = max_err.max((pair_overlap(si, sj) - exact).abs());
            let z = z_unnormalized(thetas[i], thetas[j])?;
            max_unnorm = max_unnorm.max((z_fock_sum(thetas[i], thetas[j], a.n_max) - z).abs() / z);
        }
    }
    let pass = max_err < a.tol && max_unnorm < a.tol;
    println!(
        "boson-check: {} theta values, n_max {}: max |fock - 1/cosh| = {:.3e}, max rel unnormalized error = {:.3e}, tol {:.1e}: {}",
        thetas.len(),
        a.n_max,
        max_err,
        max_unnorm,
        a.tol,
        if pass { "pass" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::Numerical("Fock-space overlaps disagree with the closed form".into()))
    }
}

fn load_records(path: &Path) -> Result<Vec<SweepRecord>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
    read_csv(BufReader::new(file)).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct FitRow {
    lambda: f64,
    chi_inf: f64,
    c1: f64,
    c2: f64,
    residual: f64,
    #[serde(rename = "L_used")]
    sizes: Vec<usize>,
    form: FitForm,
}

fn cmd_scaling(a: ScalingArgs) -> Outcome {
    let records = load_records(&a.input)?;
    let fits = extrapolate_records(&records, a.column, a.fit_form, (a.l_min, a.l_max));
    let mut rows = Vec::new();
    for (lambda, fit) in fits {
        match fit {
            Ok(f) => rows.push(FitRow {
                lambda,
                chi_inf: f.chi_inf,
                c1: f.c1,
                c2: f.c2,
                residual: f.residual,
                sizes: f.sizes,
                form: f.form,
            }),
            Err(e) => eprintln!("note: skipping lambda = {lambda}: {e}"),
        }
    }
    if rows.is_empty() {
        return Err(Failure::Usage(format!(
            "need ≥{MIN_FIT_SIZES} sizes with finite values at some lambda in {}",
            a.input.display()
        )));
    }

    let mut out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json(&mut out, &rows)?,
        Format::Csv => {
            writeln!(out, "lambda,chi_inf,c1,c2,residual,L_used,form")?;
            for r in &rows {
                let sizes: Vec<String> = r.sizes.iter().map(|l| l.to_string()).collect();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    format_float(r.lambda),
                    format_float(r.chi_inf),
                    format_float(r.c1),
                    format_float(r.c2),
                    format_float(r.residual),
                    sizes.join(";"),
                    r.form.as_str()
                )?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PeakRow {
    #[serde(rename = "L")]
    sites: usize,
    lambda_peak: f64,
    index: usize,
    at_boundary: bool,
    divergent: bool,
}

fn cmd_peak(a: PeakArgs) -> Outcome {
    let records = load_records(&a.input)?;
    let mut sizes: Vec<usize> = Vec::new();
    for r in &records {
        if !sizes.contains(&r.sites) {
            sizes.push(r.sites);
        }
    }
    let mut rows = Vec::new();
    for l in sizes {
        let subset: Vec<SweepRecord> = records.iter().filter(|r| r.sites == l).cloned().collect();
        let p = locate_peak(&subset, a.column)?;
        if p.at_boundary {
            eprintln!("warning: L = {l}: maximum at the grid edge (lambda = {}); widen the grid", p.lambda);
        }
        rows.push(PeakRow {
            sites: l,
            lambda_peak: p.lambda,
            index: p.index,
            at_boundary: p.at_boundary,
            divergent: p.divergent,
        });
    }
    if rows.is_empty() {
        return Err(Failure::Usage(format!("{} holds no records", a.input.display())));
    }

    let mut out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json(&mut out, &rows)?,
        Format::Csv => {
            writeln!(out, "L,lambda_peak,index,at_boundary,divergent")?;
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.sites,
                    format_float(r.lambda_peak),
                    r.index,
                    r.at_boundary,
                    r.divergent
                )?;
            }
            out.flush()?;
        }
    }
    Ok(())
}
