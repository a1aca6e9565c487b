//! Command-line front end for the wavebound suite: configure a run from
//! flags or a TOML file, execute the requested verification pipeline, and
//! emit machine-readable reports.
//!
//! Exit codes: 0 all asserted bounds pass; 1 a bound or domination check
//! failed (the report holds the details); 2 configuration or hypothesis
//! error; 3 numerical failure (quadrature could not reach tolerance).
//! Reports are deterministic for a fixed config, carry the quasi-random
//! seed, and are written atomically (temp file + rename).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use wavebound::bounds::{
    lemma1_constants, lemma2_constants, run_inequality_suite, verify_decay, BoundsError,
};
use wavebound::iteration::{picard_with_iterates, IterationConfig, IterationError, IterationKind};
use wavebound::kirchhoff::{
    compare_with, sample_points, ComparisonReport, KirchhoffConfig, KirchhoffError,
    VolumetricSource,
};
use wavebound::quadrature::{CharGrid, GridError, QuadError, DEFAULT_SAMPLE_SEED};
use wavebound::radial::{solve, RadialField, RadialSource};
use wavebound::types::{
    weighted_amplitude, DecayProfile, InvalidInput, SpacetimePoint, WeightExponents,
};

#[derive(Parser)]
#[command(
    name = "wavebound",
    version,
    about = "Solve the 3+1 wave equation with decaying sources and certify pointwise decay bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a flat-profile radial source and certify its decay bound.
    VerifyLemma1(VerifyLemma1Args),
    /// Solve a radially weighted source and certify its decay bound.
    VerifyLemma2(VerifyLemma2Args),
    /// Check 3D retarded integrals against a radial majorant's solution.
    Compare(CompareArgs),
    /// Run Picard iteration and trace weighted norms per step.
    Iterate(IterateArgs),
    /// Sweep every intermediate inequality over quasi-random tuples.
    InequalitySuite(SuiteArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; explicit flags override file values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Report destination (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write solved-field plot data here (CSV: t,r,phi,weighted_phi).
    #[arg(long, value_name = "PATH")]
    plot_data: Option<PathBuf>,
    /// Node stride for plot data.
    #[arg(long)]
    plot_stride: Option<usize>,
    /// Quasi-random start offset; echoed in every report.
    #[arg(long)]
    seed: Option<u64>,
    /// Off-grid samples for sup scans, majorant checks, or suite tuples.
    #[arg(long)]
    samples: Option<usize>,
    /// Grid extent in u = t + r.
    #[arg(long)]
    u_max: Option<f64>,
    /// Uniform node density below the knee.
    #[arg(long)]
    nodes_per_unit: Option<u32>,
    /// Geometric spacing ratio beyond the knee.
    #[arg(long)]
    ratio: Option<f64>,
    /// Where uniform spacing hands over to geometric.
    #[arg(long)]
    knee: Option<f64>,
    /// Admit exponents outside the lemma hypotheses (divergence demos).
    #[arg(long)]
    allow_out_of_hypothesis: bool,
}

#[derive(Args)]
struct VerifyLemma1Args {
    /// ⟨t+r⟩ exponent of the source profile.
    #[arg(long)]
    p: Option<f64>,
    /// ⟨t-r⟩ exponent of the source profile.
    #[arg(long)]
    q: Option<f64>,
    /// Source amplitude.
    #[arg(long, alias = "A")]
    amplitude: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyLemma2Args {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// ⟨x⟩ exponent of the source profile.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, alias = "A")]
    amplitude: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Modulation {
    /// F(t, x) = G(t, |x|) cos(x₁).
    CosX1,
    /// F(t, x) = G(t, |x|): spherically symmetric control.
    None,
    /// F(t, x) = -G(t, |x|): saturates the domination.
    Neg,
}

#[derive(Args)]
struct CompareArgs {
    /// Angular modulation applied to the radial profile.
    #[arg(long, value_enum)]
    modulation: Option<Modulation>,
    /// Number of quasi-random comparison points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Spatial radius of the sampled region.
    #[arg(long)]
    x_max: Option<f64>,
    /// Additive slack granted to the majorant solution.
    #[arg(long)]
    tol: Option<f64>,
    /// Majorant profile exponents (flat lemma shape).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, alias = "A")]
    amplitude: Option<f64>,
    /// Sphere-rule polar node count.
    #[arg(long)]
    n_polar: Option<usize>,
    /// Sphere-rule azimuth count.
    #[arg(long)]
    n_azimuth: Option<usize>,
    /// Shell-evaluation budget per retarded integral.
    #[arg(long)]
    shell_budget: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Semilinear,
    Potential,
}

#[derive(Args)]
struct IterateArgs {
    /// Which fixed-point problem to iterate.
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Semilinear exponent in F(phi) = A |phi|^{p-1} phi.
    #[arg(long)]
    p: Option<f64>,
    /// Potential decay exponent in V = V0 ⟨x⟩^{-lambda}.
    #[arg(long)]
    lambda: Option<f64>,
    /// Semilinear coupling A.
    #[arg(long, alias = "A")]
    amplitude: Option<f64>,
    /// Potential coupling V0.
    #[arg(long)]
    v0: Option<f64>,
    /// Seed iterate amplitude.
    #[arg(long)]
    eps: Option<f64>,
    /// Number of Picard steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Norm ceiling past which the run is declared divergent.
    #[arg(long)]
    divergence_ceiling: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SuiteArgs {
    /// Additive slack granted to each inequality.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Flat TOML schema shared by all commands; unknown keys are rejected.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    p: Option<f64>,
    q: Option<f64>,
    lambda: Option<f64>,
    amplitude: Option<f64>,
    v0: Option<f64>,
    eps: Option<f64>,
    steps: Option<usize>,
    kind: Option<String>,
    modulation: Option<String>,
    points: Option<usize>,
    t_max: Option<f64>,
    x_max: Option<f64>,
    tol: Option<f64>,
    n_polar: Option<usize>,
    n_azimuth: Option<usize>,
    shell_budget: Option<usize>,
    seed: Option<u64>,
    samples: Option<usize>,
    u_max: Option<f64>,
    nodes_per_unit: Option<u32>,
    ratio: Option<f64>,
    knee: Option<f64>,
    plot_stride: Option<usize>,
    divergence_ceiling: Option<f64>,
    allow_out_of_hypothesis: Option<bool>,
}

enum CliError {
    /// Bad flags, bad file, or violated hypotheses: exit 2.
    Config(String),
    /// Quadrature or solver failure: exit 3.
    Numerical(String),
}

impl From<InvalidInput> for CliError {
    fn from(e: InvalidInput) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<QuadError> for CliError {
    fn from(e: QuadError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Invalid(i) => CliError::Config(i.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<IterationError> for CliError {
    fn from(e: IterationError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::VerifyLemma1(args) => run_verify_lemma1(args),
        Command::VerifyLemma2(args) => run_verify_lemma2(args),
        Command::Compare(args) => run_compare(args),
        Command::Iterate(args) => run_iterate(args),
        Command::InequalitySuite(args) => run_suite(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("parsing {}: {e}", p.display())))
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn make_grid(c: &CommonArgs, f: &FileConfig, default_u_max: f64) -> Result<CharGrid, CliError> {
    Ok(CharGrid::with_resolution(
        pick(c.u_max, f.u_max, default_u_max),
        pick(c.nodes_per_unit, f.nodes_per_unit, 64),
        pick(c.ratio, f.ratio, 1.05),
        pick(c.knee, f.knee, 10.0),
    )?)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Config(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Config(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::Numerical(format!("serializing report: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Plot CSV over the grid nodes: t,r,phi,weighted_phi.
fn plot_csv(field: &RadialField, w: WeightExponents, stride: usize) -> String {
    let stride = stride.max(1);
    let grid = field.grid();
    let iz = grid.zero_v_index();
    let phi = field.phi_table();
    let mut out = String::from("t,r,phi,weighted_phi\n");
    for i in (0..grid.n_u()).step_by(stride) {
        let u = grid.u_nodes()[i];
        for j in ((iz - i)..=(iz + i)).step_by(stride) {
            let v = grid.v_nodes()[j];
            let t = 0.5 * (u + v);
            let r = 0.5 * (u - v);
            let val = phi[(i, j)];
            let point = SpacetimePoint::new(t, r).expect("grid nodes are valid points");
            let amp = weighted_amplitude(val, point, w);
            out.push_str(&format!("{t},{r},{val},{amp}\n"));
        }
    }
    out
}

fn maybe_plot(
    c: &CommonArgs,
    f: &FileConfig,
    field: &RadialField,
    w: WeightExponents,
) -> Result<(), CliError> {
    if let Some(path) = &c.plot_data {
        let stride = pick(c.plot_stride, f.plot_stride, 8);
        write_atomic(path, plot_csv(field, w, stride).as_bytes())?;
    }
    Ok(())
}

fn run_verify_lemma1(args: VerifyLemma1Args) -> Result<bool, CliError> {
    let file = load_config(args.common.config.as_deref())?;
    let p = pick(args.p, file.p, 3.0);
    let q = pick(args.q, file.q, 2.0);
    let amplitude = pick(args.amplitude, file.amplitude, 1.0);
    let constants = lemma1_constants(p, q)?;
    let profile = DecayProfile::new(amplitude, p, q, 0.0)?;
    let source = RadialSource::source_lemma1(profile)?;
    let grid = make_grid(&args.common, &file, 1000.0)?;
    let field = solve(&source, &grid);
    let w = WeightExponents::new(1.0, constants.nu)?;
    let samples = pick(args.common.samples, file.samples, 1000);
    let seed = pick(args.common.seed, file.seed, DEFAULT_SAMPLE_SEED);
    let report = verify_decay(&field, w, amplitude * constants.c, samples, seed)?;
    maybe_plot(&args.common, &file, &field, w)?;
    emit(args.common.out.as_deref(), &to_json(&report)?)?;
    Ok(report.pass)
}

fn run_verify_lemma2(args: VerifyLemma2Args) -> Result<bool, CliError> {
    let file = load_config(args.common.config.as_deref())?;
    let p = pick(args.p, file.p, 1.0);
    let q = pick(args.q, file.q, 3.0);
    let lambda = pick(args.lambda, file.lambda, 3.0);
    let amplitude = pick(args.amplitude, file.amplitude, 1.0);
    let constants = lemma2_constants(p, q, lambda)?;
    let profile = DecayProfile::new(amplitude, p, q, lambda)?;
    let source = RadialSource::source_lemma2(profile)?;
    let grid = make_grid(&args.common, &file, 1000.0)?;
    let field = solve(&source, &grid);
    let w = WeightExponents::new(1.0, constants.nu)?;
    let samples = pick(args.common.samples, file.samples, 1000);
    let seed = pick(args.common.seed, file.seed, DEFAULT_SAMPLE_SEED);
    let report = verify_decay(&field, w, amplitude * constants.c, samples, seed)?;
    maybe_plot(&args.common, &file, &field, w)?;
    emit(args.common.out.as_deref(), &to_json(&report)?)?;
    Ok(report.pass)
}

#[derive(Serialize)]
struct CompareOutput {
    seed: u64,
    #[serde(flatten)]
    report: ComparisonReport,
}

#[derive(Serialize)]
struct MajorantFailure {
    seed: u64,
    majorant_verified: bool,
    t: f64,
    x: [f64; 3],
    f_abs: f64,
    g: f64,
}

fn parse_modulation(s: &str) -> Result<Modulation, CliError> {
    match s {
        "cos-x1" => Ok(Modulation::CosX1),
        "none" => Ok(Modulation::None),
        "neg" => Ok(Modulation::Neg),
        other => Err(CliError::Config(format!(
            "unknown modulation {other:?} (expected cos-x1, none, or neg)"
        ))),
    }
}

fn run_compare(args: CompareArgs) -> Result<bool, CliError> {
    let file = load_config(args.common.config.as_deref())?;
    let p = pick(args.p, file.p, 3.0);
    let q = pick(args.q, file.q, 2.0);
    let amplitude = pick(args.amplitude, file.amplitude, 1.0);
    let n_points = pick(args.points, file.points, 50);
    let t_max = pick(args.t_max, file.t_max, 20.0);
    let x_max = pick(args.x_max, file.x_max, 10.0);
    let tol = pick(args.tol, file.tol, 1e-3);
    let seed = pick(args.common.seed, file.seed, DEFAULT_SAMPLE_SEED);
    let samples = pick(args.common.samples, file.samples, 2048);
    let modulation = match (args.modulation, &file.modulation) {
        (Some(m), _) => m,
        (None, Some(s)) => parse_modulation(s)?,
        (None, None) => Modulation::CosX1,
    };

    let cfg = KirchhoffConfig {
        n_polar: pick(args.n_polar, file.n_polar, 48),
        n_azimuth: pick(args.n_azimuth, file.n_azimuth, 16),
        shell_budget: pick(args.shell_budget, file.shell_budget, 40_000),
    };
    let profile = DecayProfile::new(amplitude, p, q, 0.0)?;
    let majorant = RadialSource::source_lemma1(profile)?;
    let mut src = match modulation {
        Modulation::None => VolumetricSource::from_radial(&majorant),
        Modulation::CosX1 => {
            let g = majorant.clone();
            VolumetricSource::new(
                move |t, x| {
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    g.eval(t, r) * x[0].cos()
                },
                majorant.clone(),
            )
        }
        Modulation::Neg => {
            let g = majorant.clone();
            VolumetricSource::new(
                move |t, x| {
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    -g.eval(t, r)
                },
                majorant.clone(),
            )
        }
    };
    if !src.is_verified() {
        match src.verify_majorant(t_max, x_max, samples, seed) {
            Ok(()) => {}
            Err(KirchhoffError::MajorantViolation { t, x, f_abs, g }) => {
                let failure = MajorantFailure {
                    seed,
                    majorant_verified: false,
                    t,
                    x,
                    f_abs,
                    g,
                };
                emit(args.common.out.as_deref(), &to_json(&failure)?)?;
                return Ok(false);
            }
            Err(e) => return Err(kirchhoff_err(e)),
        }
    }

    let grid = make_grid(&args.common, &file, t_max + x_max)?;
    let field = solve(&majorant, &grid);
    let points = sample_points(n_points, t_max, x_max, seed);
    // oracle tolerance well below the comparison slack
    let quad_tol = tol * 1e-2;
    let report = compare_with(&cfg, &src, &field, &points, tol, quad_tol)
        .map_err(kirchhoff_err)?;
    let pass = report.pass;
    emit(args.common.out.as_deref(), &to_json(&CompareOutput { seed, report })?)?;
    Ok(pass)
}

fn kirchhoff_err(e: KirchhoffError) -> CliError {
    match e {
        KirchhoffError::Invalid(i) => CliError::Config(i.to_string()),
        KirchhoffError::Quad(q) => CliError::Numerical(q.to_string()),
        KirchhoffError::OutOfDomain { .. } | KirchhoffError::UnverifiedMajorant => {
            CliError::Config(e.to_string())
        }
        KirchhoffError::MajorantViolation { .. } => CliError::Config(e.to_string()),
    }
}

fn run_iterate(args: IterateArgs) -> Result<bool, CliError> {
    let file = load_config(args.common.config.as_deref())?;
    let kind = match (args.kind, &file.kind) {
        (Some(k), _) => k,
        (None, Some(s)) => match s.as_str() {
            "semilinear" => Kind::Semilinear,
            "potential" => Kind::Potential,
            other => {
                return Err(CliError::Config(format!(
                    "unknown kind {other:?} (expected semilinear or potential)"
                )))
            }
        },
        (None, None) => {
            return Err(CliError::Config(
                "iterate needs --kind semilinear|potential".into(),
            ))
        }
    };
    let (kind, default_eps) = match kind {
        Kind::Semilinear => (
            IterationKind::Semilinear {
                p: pick(args.p, file.p, 3.0),
                amplitude: pick(args.amplitude, file.amplitude, 0.1),
            },
            0.1,
        ),
        Kind::Potential => (
            IterationKind::Potential {
                lambda: pick(args.lambda, file.lambda, 3.0),
                v0: pick(args.v0, file.v0, 0.1),
            },
            1.0,
        ),
    };
    let grid = make_grid(&args.common, &file, 1000.0)?;
    let mut cfg = IterationConfig::new(kind, pick(args.eps, file.eps, default_eps), grid);
    cfg.max_steps = pick(args.steps, file.steps, 6);
    cfg.off_grid_samples = pick(args.common.samples, file.samples, 1000);
    cfg.sample_seed = pick(args.common.seed, file.seed, DEFAULT_SAMPLE_SEED);
    cfg.divergence_ceiling = pick(args.divergence_ceiling, file.divergence_ceiling, 1e6);
    cfg.allow_out_of_hypothesis =
        args.common.allow_out_of_hypothesis || file.allow_out_of_hypothesis.unwrap_or(false);

    let (trace, fields) = picard_with_iterates(&cfg)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    if let Some(final_field) = fields.last() {
        maybe_plot(&args.common, &file, final_field, trace.weights)?;
    }
    emit(args.common.out.as_deref(), &csv)?;
    Ok(!trace.diverged)
}

fn run_suite(args: SuiteArgs) -> Result<bool, CliError> {
    let file = load_config(args.common.config.as_deref())?;
    let samples = pick(args.common.samples, file.samples, 1000);
    let seed = pick(args.common.seed, file.seed, DEFAULT_SAMPLE_SEED);
    let tol = pick(args.tol, file.tol, 1e-9);
    let report = run_inequality_suite(samples, seed, tol)?;
    emit(args.common.out.as_deref(), &to_json(&report)?)?;
    Ok(report.pass)
}
