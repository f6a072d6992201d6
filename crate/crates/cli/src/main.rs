//! `qsync`: batch front end for steady states, tongues, phase marginals,
//! ensemble runs and critical-coupling tables.

mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsync_core::classical::{self, LockingOptions, LockingOutcome};
use qsync_core::critical;
use qsync_core::ensemble::{self, EnsembleConfig, Sampling};
use qsync_core::lindblad::{self, SingleOscParams, SpinModelParams, TwoOscParams};
use qsync_core::two_osc;
use qsync_core::{Error, Exec, FrequencyDistribution};

use config::{expand_config, Grid};
use table::{Cell, Format, Table};

#[derive(Parser, Debug)]
#[command(name = "qsync", version, about = "Quantum and classical van der Pol synchronization")]
#[command(after_help = "All rates are in units of kappa1 = 1. Options may also come from a key=value file given with --config; flags override file values.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady-state density matrix, numeric next to analytic.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    SteadyState(SteadyArgs),
    /// Entanglement (quantum) or phase-locking (classical) tongue.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Tongue(TongueArgs),
    /// Relative-phase marginal of the two-oscillator steady state.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Wigner(WignerArgs),
    /// Mean-field ensemble trajectory or transition scan.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Ensemble(EnsembleArgs),
    /// Critical coupling table versus disorder width.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    VcTable(VcTableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Single,
    Two,
    Spin,
}

#[derive(Args, Debug)]
struct SteadyArgs {
    #[arg(long, value_enum)]
    model: Model,
    /// Two-phonon loss (default 1e4 single, 1e3 two).
    #[arg(long)]
    kappa2: Option<f64>,
    /// Fock levels per oscillator.
    #[arg(long)]
    truncation: Option<usize>,
    /// Oscillator frequency (single model).
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long = "V")]
    v: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Quantum,
    Classical,
}

#[derive(Args, Debug)]
struct TongueArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long = "delta-grid", default_value = "-20:20:41", allow_hyphen_values = true)]
    delta_grid: Grid,
    #[arg(long = "V-grid", default_value = "0:20:41")]
    v_grid: Grid,
    /// Classical nonlinearity; the limit cycle has radius sqrt(1/(2 kappa2)).
    #[arg(long, default_value_t = classical::DEFAULT_KAPPA2)]
    kappa2: f64,
    #[arg(long = "t-transient", default_value_t = LockingOptions::default().t_transient)]
    t_transient: f64,
    #[arg(long = "t-observe", default_value_t = LockingOptions::default().t_observe)]
    t_observe: f64,
    #[arg(long, default_value_t = classical::DEFAULT_DT)]
    dt: f64,
    /// Quantum only: file for the boundary curve V_c(delta).
    #[arg(long = "boundary-output")]
    boundary_output: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct WignerArgs {
    #[arg(long = "V")]
    v: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 360)]
    points: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistKind {
    Delta,
    Uniform,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Stratified,
    Random,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[arg(long, value_enum, default_value = "delta")]
    dist: DistKind,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Lorentzian truncation in units of gamma.
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Single run at this coupling (writes the trajectory).
    #[arg(long = "V")]
    v: Option<f64>,
    /// Transition scan over couplings (writes |A| per coupling).
    #[arg(long = "V-grid")]
    v_grid: Option<Grid>,
    #[arg(long, default_value_t = 100.0)]
    kappa2: f64,
    #[arg(long, default_value_t = lindblad::DEFAULT_DT)]
    dt: f64,
    #[arg(long = "t-final", default_value_t = 1e3)]
    t_final: f64,
    /// Fraction of the run averaged for |A|.
    #[arg(long, default_value_t = 0.25)]
    window: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "stratified")]
    sampling: SamplingArg,
    #[arg(long = "record-every", default_value_t = 100)]
    record_every: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct VcTableArgs {
    /// Comma-separated list of delta, uniform, lorentzian.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "delta,uniform,lorentzian")]
    dists: Vec<DistKind>,
    #[arg(long = "gamma-grid", default_value = "0:2:21")]
    gamma_grid: Grid,
    #[arg(long, default_value_t = 100.0)]
    kappa2: f64,
    /// Lorentzian truncation in units of gamma.
    #[arg(long)]
    cutoff: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::InvalidDimension(_) | Error::DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn distribution(kind: DistKind, gamma: f64, cutoff: Option<f64>) -> CliResult<FrequencyDistribution> {
    let d = match (kind, cutoff) {
        (DistKind::Delta, None) => FrequencyDistribution::Delta,
        (DistKind::Uniform, None) => FrequencyDistribution::uniform(gamma),
        (DistKind::Lorentzian, None) => FrequencyDistribution::lorentzian(gamma),
        (DistKind::Lorentzian, Some(c)) => FrequencyDistribution::lorentzian_with_cutoff(gamma, c),
        (_, Some(_)) => return usage("--cutoff applies only to the lorentzian distribution"),
    };
    d.validate()?;
    Ok(d)
}

fn steady_state(a: &SteadyArgs) -> CliResult<()> {
    let mut t = Table::new(&["row", "col", "re", "im", "re_analytic", "im_analytic", "abs_diff"]);
    t.meta("command", "steady-state").meta("model", format!("{:?}", a.model).to_lowercase());
    let rows = |t: &mut Table, rho: &qsync_core::hilbert::DensityMatrix, analytic: &dyn Fn(usize, usize) -> (f64, f64)| {
        let d = rho.dim();
        for i in 0..d {
            for j in 0..d {
                let z = rho.get(i, j);
                let (ar, ai) = analytic(i, j);
                let diff = (z.re - ar).hypot(z.im - ai);
                t.push(vec![(i as f64).into(), (j as f64).into(), z.re.into(), z.im.into(), ar.into(), ai.into(), diff.into()]);
            }
        }
    };
    match a.model {
        Model::Single => {
            if a.v.is_some() || a.delta.is_some() {
                return usage("--V and --delta do not apply to the single model");
            }
            let p = SingleOscParams::new(a.omega.unwrap_or(0.0), a.kappa2.unwrap_or(1e4), a.truncation.unwrap_or(4))?;
            t.meta("omega", p.omega).meta("kappa2", p.kappa2).meta("truncation", p.truncation);
            t.meta("analytic", "quantum limit p0=2/3 p1=1/3");
            let rho = lindblad::steady_state(&lindblad::build_single_vdp(&p)?)?;
            rows(&mut t, &rho, &|i, j| match (i, j) {
                (0, 0) => (2.0 / 3.0, 0.0),
                (1, 1) => (1.0 / 3.0, 0.0),
                _ => (0.0, 0.0),
            });
        }
        Model::Two | Model::Spin => {
            if a.omega.is_some() {
                return usage("--omega applies only to the single model");
            }
            let (v, delta) = (a.v.unwrap_or(0.0), a.delta.unwrap_or(0.0));
            let exact = two_osc::analytic_steady_state(1.0, v, delta)?.to_matrix();
            t.meta("V", v).meta("delta", delta);
            let (rho, trunc) = if a.model == Model::Two {
                let p = TwoOscParams::new(v, delta, a.kappa2.unwrap_or(1e3), a.truncation.unwrap_or(4))?;
                t.meta("kappa2", p.kappa2).meta("truncation", p.truncation);
                (lindblad::steady_state(&lindblad::build_two_vdp(&p)?)?, p.truncation)
            } else {
                if a.kappa2.is_some() || a.truncation.is_some() {
                    return usage("--kappa2 and --truncation do not apply to the spin model");
                }
                let p = SpinModelParams::new(v, delta)?;
                (lindblad::steady_state(&lindblad::build_spin_model(&p)?)?, 2)
            };
            t.meta("basis", "|n1 n2> with index n1*truncation+n2");
            let qubit = |k: usize| match (k / trunc, k % trunc) {
                (n1 @ 0..=1, n2 @ 0..=1) => Some(2 * n1 + n2),
                _ => None,
            };
            rows(&mut t, &rho, &|i, j| match (qubit(i), qubit(j)) {
                (Some(p), Some(q)) => (exact[(p, q)].re, exact[(p, q)].im),
                _ => (0.0, 0.0),
            });
        }
    }
    t.emit(a.out.format, a.out.output.as_deref())?;
    Ok(())
}

fn tongue(a: &TongueArgs) -> CliResult<()> {
    let (deltas, vs) = (a.delta_grid.points(), a.v_grid.points());
    let exec = Exec::default();
    let mut t;
    match a.kind {
        Kind::Quantum => {
            t = Table::new(&["delta", "V", "concurrence"]);
            t.meta("command", "tongue").meta("kind", "quantum");
            t.meta("delta_grid", a.delta_grid).meta("V_grid", a.v_grid);
            for p in two_osc::tongue_scan_with(exec, &deltas, &vs, 1.0)? {
                t.push(vec![p.delta.into(), p.coupling.into(), p.concurrence.into()]);
            }
            if let Some(path) = &a.boundary_output {
                let mut b = Table::new(&["delta", "V_c"]);
                b.meta("command", "tongue").meta("kind", "quantum-boundary").meta("delta_grid", a.delta_grid);
                let vc: Vec<_> = exec.map(&deltas, |&d| match two_osc::tongue_boundary(d, 1.0) {
                    Err(Error::NoBoundary(_)) => Ok(f64::INFINITY),
                    r => r,
                });
                for (d, v) in deltas.iter().zip(vc) {
                    b.push(vec![(*d).into(), v?.into()]);
                }
                b.emit(a.out.format, Some(path))?;
            }
        }
        Kind::Classical => {
            if a.boundary_output.is_some() {
                return usage("--boundary-output applies only to the quantum tongue");
            }
            let opts = LockingOptions { t_transient: a.t_transient, t_observe: a.t_observe, dt: a.dt };
            t = Table::new(&["delta", "V", "outcome", "theta"]);
            t.meta("command", "tongue").meta("kind", "classical");
            t.meta("delta_grid", a.delta_grid).meta("V_grid", a.v_grid).meta("kappa1", 1).meta("kappa2", a.kappa2);
            t.meta("t_transient", opts.t_transient).meta("t_observe", opts.t_observe).meta("dt", opts.dt);
            for p in classical::arnold_scan_with(exec, &deltas, &vs, 1.0, a.kappa2, &opts)? {
                let theta = match p.outcome {
                    LockingOutcome::Locked { theta } => theta,
                    _ => f64::NAN,
                };
                t.push(vec![p.delta.into(), p.coupling.into(), p.outcome.label().into(), theta.into()]);
            }
        }
    }
    t.emit(a.out.format, a.out.output.as_deref())?;
    Ok(())
}

fn wigner(a: &WignerArgs) -> CliResult<()> {
    if a.points == 0 {
        return usage("--points must be at least 1");
    }
    let rho = two_osc::analytic_steady_state(1.0, a.v, a.delta)?.to_density_matrix()?;
    let w = two_osc::phase_marginal(&rho)?;
    let mut t = Table::new(&["theta", "W"]);
    t.meta("command", "wigner").meta("V", a.v).meta("delta", a.delta).meta("points", a.points);
    t.meta("peak", w.peak());
    for (theta, value) in w.sample(a.points) {
        t.push(vec![theta.into(), value.into()]);
    }
    t.emit(a.out.format, a.out.output.as_deref())?;
    Ok(())
}

fn ensemble_cmd(a: &EnsembleArgs) -> CliResult<()> {
    let dist = distribution(a.dist, a.gamma, a.cutoff)?;
    let sampling = match a.sampling {
        SamplingArg::Stratified => Sampling::Stratified,
        SamplingArg::Random => Sampling::Random,
    };
    let template = EnsembleConfig {
        n: a.n,
        coupling: a.v.unwrap_or(0.0),
        kappa2: a.kappa2,
        dist,
        dt: a.dt,
        t_final: a.t_final,
        averaging_window: a.window,
        seed: a.seed,
        sampling,
        record_every: a.record_every,
    };
    template.validate()?;
    let vc = critical::solve_vc_quantum(1.0, a.kappa2, &dist)?;
    let mut meta = Table::default();
    meta.meta("command", "ensemble").meta("dist", dist).meta("n", a.n).meta("kappa2", a.kappa2);
    meta.meta("dt", a.dt).meta("t_final", a.t_final).meta("window", a.window).meta("seed", a.seed);
    meta.meta("sampling", format!("{:?}", a.sampling).to_lowercase()).meta("record_every", a.record_every);
    meta.meta("vc_predicted", qsync_core::output::sig12(vc.vc));
    let t = match (a.v, a.v_grid) {
        (Some(v), None) => {
            let init = template.default_initial_state(template.frequencies()?);
            let traj = ensemble::integrate(&template, &init)?;
            let mut t = Table::new(&["t", "re_A", "im_A", "abs_A"]);
            t.meta = meta.meta;
            t.meta("V", v).meta("substeps", traj.substeps).meta("classes", traj.classes);
            t.meta("order_parameter", qsync_core::output::sig12(ensemble::order_parameter(&traj, a.window)?));
            for (time, m) in traj.times.iter().zip(&traj.mean_field) {
                t.push(vec![(*time).into(), m.re.into(), m.im.into(), m.norm().into()]);
            }
            t
        }
        (None, Some(grid)) => {
            let scan = ensemble::transition_scan(&template, &grid.points())?;
            let mut t = Table::new(&["V", "abs_A"]);
            t.meta = meta.meta;
            t.meta("V_grid", grid).meta("threshold", ensemble::CROSSING_THRESHOLD);
            let cross = ensemble::crossing(&scan, ensemble::CROSSING_THRESHOLD);
            t.meta("crossing", cross.map_or("none".to_string(), qsync_core::output::sig12));
            for p in scan {
                t.push(vec![p.coupling.into(), p.order_parameter.into()]);
            }
            t
        }
        _ => return usage("give exactly one of --V (single run) or --V-grid (scan)"),
    };
    t.emit(a.out.format, a.out.output.as_deref())?;
    Ok(())
}

fn vc_table(a: &VcTableArgs) -> CliResult<()> {
    if a.cutoff.is_some() && !a.dists.contains(&DistKind::Lorentzian) {
        return usage("--cutoff needs the lorentzian distribution in --dists");
    }
    // (label, gamma, distribution); a zero-width Lorentzian is the delta distribution
    let mut cases = Vec::new();
    for &kind in &a.dists {
        match kind {
            DistKind::Delta => cases.push(("delta", 0.0, FrequencyDistribution::Delta)),
            DistKind::Uniform => {
                for g in a.gamma_grid.points() {
                    cases.push(("uniform", g, distribution(kind, g, None)?));
                }
            }
            DistKind::Lorentzian => {
                for g in a.gamma_grid.points() {
                    let d = if g == 0.0 { FrequencyDistribution::Delta } else { distribution(kind, g, a.cutoff)? };
                    cases.push(("lorentzian", g, d));
                }
            }
        }
    }
    let rows: Vec<CliResult<Vec<Cell>>> = Exec::default().map(&cases, |(_, _, d)| {
        let numeric = critical::solve_vc_quantum(1.0, a.kappa2, d)?;
        let closed = critical::vc_closed_form_quantum(1.0, a.kappa2, d)?;
        // the classical closed forms do not cover truncated Lorentzians
        let classical = match d {
            FrequencyDistribution::Lorentzian { cutoff: Some(_), .. } => f64::NAN,
            _ => critical::vc_classical(1.0, d)?,
        };
        let multiple = if numeric.multiple_roots { "yes" } else { "no" };
        Ok(vec![numeric.vc.into(), closed.into(), classical.into(), multiple.into()])
    });
    let mut t = Table::new(&["dist", "gamma", "vc_quantum_numeric", "vc_quantum_closed_form", "vc_classical", "multiple_roots"]);
    t.meta("command", "vc-table").meta("kappa2", a.kappa2).meta("gamma_grid", a.gamma_grid);
    t.meta("cutoff", a.cutoff.map_or("none".to_string(), |c| c.to_string()));
    for ((label, gamma, _), row) in cases.iter().zip(rows) {
        let mut cells = vec![Cell::from(*label), (*gamma).into()];
        cells.extend(row?);
        t.push(cells);
    }
    t.emit(a.out.format, a.out.output.as_deref())?;
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("QSYNC_THREADS") else { return Ok(()) };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n >= 1 => n,
        _ => return usage(format!("QSYNC_THREADS must be a positive integer, got '{raw}'")),
    };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failure(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run() -> CliResult<()> {
    let args = expand_config(std::env::args().collect()).map_err(CliError::Usage)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if e.use_stderr() => return usage(e.to_string()),
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return Ok(());
        }
    };
    configure_threads()?;
    match &cli.command {
        Command::SteadyState(a) => steady_state(a),
        Command::Tongue(a) => tongue(a),
        Command::Wigner(a) => wigner(a),
        Command::Ensemble(a) => ensemble_cmd(a),
        Command::VcTable(a) => vc_table(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("qsync: {}", m.trim_end());
            ExitCode::from(2)
        }
        Err(CliError::Failure(m)) => {
            eprintln!("qsync: {m}");
            ExitCode::from(1)
        }
    }
}
