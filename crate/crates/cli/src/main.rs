//! Command-line front end: edge classification, threshold couplings,
//! eigenvalue branches, mode/resonance tables, criterion integrals, and the
//! finite-grid convergence oracle, emitted as JSON or CSV for plotting and
//! CI. Identical invocations produce byte-identical output.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numeric failure,
//! 4 oracle convergence failure.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bandedge::{
    behavior_table, classify_edge, convergence_study, energy_for_coupling, integral_i, integral_j,
    thresholds, Behavior, CouplingSign, Error as CoreError, IntegralEstimate, MultiplierSpec,
    QuadSettings, TorusDomain,
};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "bandedge",
    version,
    about = "Spectral edges of lattice operators with a point impurity: classification, thresholds, eigencurves, and grid oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify both spectral edges; reports window, exponents, and thresholds
    Classify(CommonArgs),
    /// Threshold couplings of both edges with quadrature provenance
    Thresholds(CommonArgs),
    /// Eigenvalue branch E(v) over a coupling range
    Eigencurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Coupling range min:max:steps (steps = point count), or a single value
        #[arg(long = "v", allow_hyphen_values = true)]
        v: String,
    },
    /// Mode/resonance table over a dimension range
    Table {
        #[command(flatten)]
        common: CommonArgs,
        /// Dimension range lo:hi
        #[arg(long, default_value = "1:5")]
        dims: String,
    },
    /// Finite-grid secular roots against the continuum branch
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Coupling strength; 0 prints the unperturbed band samples
        #[arg(long = "v", allow_hyphen_values = true)]
        v: f64,
        /// Comma-separated grid sizes (points per axis, even)
        #[arg(long, value_delimiter = ',')]
        grid: Vec<usize>,
    },
    /// Evaluate one criterion integral at a given energy
    Integral {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        energy: f64,
        /// Which integral: the resolvent mean J or its square I
        #[arg(long, value_enum, default_value_t = WhichIntegral::J)]
        which: WhichIntegral,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Multiplier kind: identity, fractional, relativistic, jump_diffusion,
    /// geometric_stable, or higher_order (bernstein goes via --spec-file)
    #[arg(long)]
    psi: Option<String>,
    /// Stability index for the fractional-family kinds
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Mass parameter of the relativistic kind
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Order of the higher_order kind
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    /// Jump coefficient of the jump_diffusion kind
    #[arg(long, default_value_t = 1.0)]
    bcoef: f64,
    /// JSON file holding the multiplier description
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Lattice dimension
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Relative tolerance for exterior integrals
    #[arg(long, default_value_t = 1e-8)]
    tol_int: f64,
    /// Relative tolerance for edge integrals
    #[arg(long, default_value_t = 1e-4)]
    tol_edge: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WhichIntegral {
    J,
    I,
}

enum CliError {
    Config(String),
    Numeric(String),
    OracleMismatch(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::OracleMismatch(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::OracleMismatch(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidSpec(_)
            | CoreError::InvalidDomain(_)
            | CoreError::GridTooLarge { .. } => CliError::Config(err.to_string()),
            _ => CliError::Numeric(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify(common) => {
            let ctx = Context::build(&common)?;
            let output = cmd_classify(&ctx)?;
            emit(&common, output)
        }
        Command::Thresholds(common) => {
            let ctx = Context::build(&common)?;
            let output = cmd_thresholds(&ctx)?;
            emit(&common, output)
        }
        Command::Eigencurve { common, v } => {
            let ctx = Context::build(&common)?;
            let range = parse_coupling_range(&v)?;
            let output = cmd_eigencurve(&ctx, &range)?;
            emit(&common, output)
        }
        Command::Table { common, dims } => {
            let ctx = Context::build(&common)?;
            let (lo, hi) = parse_dim_range(&dims)?;
            let output = cmd_table(&ctx, lo, hi)?;
            emit(&common, output)
        }
        Command::Oracle { common, v, grid } => {
            let ctx = Context::build(&common)?;
            if grid.is_empty() {
                return Err(CliError::Config("--grid needs at least one size".into()));
            }
            let output = cmd_oracle(&ctx, v, &grid)?;
            emit(&common, output)
        }
        Command::Integral {
            common,
            energy,
            which,
        } => {
            let ctx = Context::build(&common)?;
            let output = cmd_integral(&ctx, energy, which)?;
            emit(&common, output)
        }
    }
}

/// Validated invocation context shared by all subcommands.
struct Context {
    spec: MultiplierSpec,
    dom: TorusDomain,
    settings: QuadSettings,
    format: Format,
}

impl Context {
    fn build(common: &CommonArgs) -> Result<Self, CliError> {
        let spec = build_spec(common)?;
        let dom = TorusDomain::new(common.dim)?;
        if !(common.tol_int > 0.0 && common.tol_edge > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        let settings = QuadSettings {
            tol_exterior: common.tol_int,
            tol_edge: common.tol_edge,
            ..QuadSettings::default()
        };
        Ok(Context {
            spec,
            dom,
            settings,
            format: common.format,
        })
    }
}

fn build_spec(common: &CommonArgs) -> Result<MultiplierSpec, CliError> {
    match (&common.psi, &common.spec_file) {
        (Some(_), Some(_)) | (None, None) => Err(CliError::Config(
            "exactly one multiplier source is required: --psi or --spec-file".into(),
        )),
        (Some(kind), None) => {
            let spec =
                match kind.as_str() {
                    "identity" => MultiplierSpec::identity(),
                    "fractional" => MultiplierSpec::fractional(common.alpha)?,
                    "relativistic" => MultiplierSpec::relativistic(common.alpha, common.mass)?,
                    "jump_diffusion" => MultiplierSpec::jump_diffusion(common.alpha, common.bcoef)?,
                    "geometric_stable" => MultiplierSpec::geometric_stable(common.alpha)?,
                    "higher_order" => MultiplierSpec::higher_order(common.beta)?,
                    "bernstein" => return Err(CliError::Config(
                        "bernstein multipliers carry structured atoms; pass them with --spec-file"
                            .into(),
                    )),
                    other => {
                        return Err(CliError::Config(format!(
                            "unknown multiplier kind '{other}'"
                        )))
                    }
                };
            Ok(spec)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("invalid multiplier file: {e}")))
        }
    }
}

/// Coupling range of an eigencurve scan: `steps` points from `min` to `max`
/// inclusive (a single value when `steps` is 1).
struct CouplingRange {
    min: f64,
    max: f64,
    steps: usize,
}

impl CouplingRange {
    fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

fn parse_coupling_range(text: &str) -> Result<CouplingRange, CliError> {
    let bad = |msg: &str| CliError::Config(format!("invalid --v '{text}': {msg}"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => {
            let v: f64 = single.parse().map_err(|_| bad("not a number"))?;
            Ok(CouplingRange {
                min: v,
                max: v,
                steps: 1,
            })
        }
        [min, max, steps] => {
            let min: f64 = min.parse().map_err(|_| bad("bad min"))?;
            let max: f64 = max.parse().map_err(|_| bad("bad max"))?;
            let steps: usize = steps.parse().map_err(|_| bad("bad step count"))?;
            if steps == 0 {
                return Err(bad("step count must be positive"));
            }
            Ok(CouplingRange { min, max, steps })
        }
        _ => Err(bad("expected min:max:steps or a single value")),
    }
}

fn parse_dim_range(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || {
        CliError::Config(format!(
            "invalid --dims '{text}': expected lo:hi within 1..=8"
        ))
    };
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.parse().map_err(|_| bad())?;
    let hi: usize = hi.parse().map_err(|_| bad())?;
    if lo < 1 || hi > 8 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Rendered output plus an optional nonzero exit status (the oracle command
/// reports convergence failure through exit code 4 after printing).
struct Output {
    text: String,
    failure: Option<CliError>,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            failure: None,
        }
    }
}

fn emit(common: &CommonArgs, output: Output) -> Result<(), CliError> {
    match &common.out {
        Some(path) => fs::write(path, &output.text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", output.text),
    }
    match output.failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string(value).expect("serializable report");
    text.push('\n');
    text
}

fn behavior_name(b: Behavior) -> &'static str {
    match b {
        Behavior::Unconditional => "unconditional",
        Behavior::Resonance => "resonance",
        Behavior::Mode => "mode",
    }
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ClassifyReport {
    schema: u32,
    dim: usize,
    window: WindowOut,
    exponents: ExponentsOut,
    v0: f64,
    v2: f64,
    bottom: Behavior,
    top: Behavior,
}

#[derive(Serialize)]
struct WindowOut {
    lo: f64,
    hi: f64,
}

#[derive(Serialize)]
struct ExponentsOut {
    bottom: f64,
    top: f64,
}

fn cmd_classify(ctx: &Context) -> Result<Output, CliError> {
    let window = ctx.spec.window();
    let exponents = ctx.spec.exponents();
    let top = classify_edge(&ctx.spec, &ctx.dom, CouplingSign::Positive, &ctx.settings)?;
    let bottom = classify_edge(&ctx.spec, &ctx.dom, CouplingSign::Negative, &ctx.settings)?;
    let report = ClassifyReport {
        schema: SCHEMA,
        dim: ctx.dom.dim(),
        window: WindowOut {
            lo: window.lo,
            hi: window.hi,
        },
        exponents: ExponentsOut {
            bottom: exponents.bottom,
            top: exponents.top,
        },
        v0: bottom.threshold,
        v2: top.threshold,
        bottom: bottom.behavior,
        top: top.behavior,
    };
    let text = match ctx.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s =
                String::from("dim,window_lo,window_hi,exp_bottom,exp_top,v0,v2,bottom,top\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                report.dim,
                report.window.lo,
                report.window.hi,
                report.exponents.bottom,
                report.exponents.top,
                report.v0,
                report.v2,
                behavior_name(report.bottom),
                behavior_name(report.top)
            );
            s
        }
    };
    Ok(Output::ok(text))
}

// ---------------------------------------------------------------------------
// thresholds
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ThresholdsReportOut {
    schema: u32,
    dim: usize,
    v0: f64,
    v2: f64,
    top_integral: IntegralEstimate,
    bottom_integral: IntegralEstimate,
}

fn cmd_thresholds(ctx: &Context) -> Result<Output, CliError> {
    let report = thresholds(&ctx.spec, &ctx.dom, &ctx.settings)?;
    if !report.top_integral.converged || !report.bottom_integral.converged {
        return Err(CliError::Numeric(
            "edge quadrature did not reach the requested tolerance".into(),
        ));
    }
    let out = ThresholdsReportOut {
        schema: SCHEMA,
        dim: ctx.dom.dim(),
        v0: report.v0,
        v2: report.v2,
        top_integral: report.top_integral,
        bottom_integral: report.bottom_integral,
    };
    let text = match ctx.format {
        Format::Json => to_json(&out),
        Format::Csv => format!("dim,v0,v2\n{},{},{}\n", out.dim, out.v0, out.v2),
    };
    Ok(Output::ok(text))
}

// ---------------------------------------------------------------------------
// eigencurve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EigencurveReport {
    schema: u32,
    dim: usize,
    points: Vec<CurveRow>,
}

#[derive(Serialize)]
struct CurveRow {
    v: f64,
    e: Option<f64>,
}

fn cmd_eigencurve(ctx: &Context, range: &CouplingRange) -> Result<Output, CliError> {
    let mut points = Vec::new();
    for v in range.values() {
        let e = energy_for_coupling(&ctx.spec, &ctx.dom, v, &ctx.settings)?.map(|bp| bp.point.e);
        points.push(CurveRow { v, e });
    }
    let report = EigencurveReport {
        schema: SCHEMA,
        dim: ctx.dom.dim(),
        points,
    };
    let text = match ctx.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("v,E\n");
            for row in &report.points {
                match row.e {
                    Some(e) => {
                        let _ = writeln!(s, "{},{}", row.v, e);
                    }
                    None => {
                        let _ = writeln!(s, "{},", row.v);
                    }
                }
            }
            s
        }
    };
    Ok(Output::ok(text))
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TableReport {
    schema: u32,
    rows: Vec<bandedge::BehaviorRow>,
}

fn cmd_table(ctx: &Context, lo: usize, hi: usize) -> Result<Output, CliError> {
    let rows = behavior_table(&ctx.spec, lo..=hi)?;
    let report = TableReport {
        schema: SCHEMA,
        rows,
    };
    let text = match ctx.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("d,top_mode,top_resonance,bottom_mode,bottom_resonance\n");
            for row in &report.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    row.d, row.top_mode, row.top_resonance, row.bottom_mode, row.bottom_resonance
                );
            }
            s
        }
    };
    Ok(Output::ok(text))
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OracleReport {
    schema: u32,
    dim: usize,
    coupling: f64,
    continuum_energy: Option<f64>,
    detached: Option<bool>,
    rows: Vec<OracleRow>,
}

#[derive(Serialize)]
struct OracleRow {
    n: usize,
    energy: f64,
    abs_error: Option<f64>,
}

fn cmd_oracle(ctx: &Context, v: f64, grid: &[usize]) -> Result<Output, CliError> {
    let report;
    let mut failure = None;
    if v == 0.0 {
        // Unperturbed operator: emit the sorted band samples per grid size.
        let mut rows = Vec::new();
        for &n in grid {
            let op = bandedge::build_grid_operator(&ctx.spec, &ctx.dom, n, 0.0)?;
            let mut g = op.g_values().to_vec();
            g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            rows.extend(g.into_iter().map(|energy| OracleRow {
                n,
                energy,
                abs_error: None,
            }));
        }
        report = OracleReport {
            schema: SCHEMA,
            dim: ctx.dom.dim(),
            coupling: v,
            continuum_energy: None,
            detached: None,
            rows,
        };
    } else {
        let study = convergence_study(&ctx.spec, &ctx.dom, v, grid, &ctx.settings)?;
        // Errors must shrink along the grid list, down to the accuracy
        // floor of the continuum reference.
        let floor = 1e-9;
        let monotone = study
            .rows
            .windows(2)
            .all(|p| p[1].abs_error < p[0].abs_error || p[1].abs_error < floor);
        if !monotone {
            failure = Some(CliError::OracleMismatch(
                "grid eigenvalue errors do not decrease along the grid list".into(),
            ));
        }
        report = OracleReport {
            schema: SCHEMA,
            dim: ctx.dom.dim(),
            coupling: v,
            continuum_energy: Some(study.continuum_energy),
            detached: Some(study.detached),
            rows: study
                .rows
                .iter()
                .map(|r| OracleRow {
                    n: r.n,
                    energy: r.energy,
                    abs_error: Some(r.abs_error),
                })
                .collect(),
        };
    }
    let text = match ctx.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("N,E_N,abs_error\n");
            for row in &report.rows {
                match row.abs_error {
                    Some(err) => {
                        let _ = writeln!(s, "{},{},{}", row.n, row.energy, err);
                    }
                    None => {
                        let _ = writeln!(s, "{},{},", row.n, row.energy);
                    }
                }
            }
            s
        }
    };
    Ok(Output { text, failure })
}

// ---------------------------------------------------------------------------
// integral
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct IntegralReport {
    schema: u32,
    dim: usize,
    which: &'static str,
    energy: f64,
    #[serde(flatten)]
    estimate: IntegralEstimate,
}

fn cmd_integral(ctx: &Context, energy: f64, which: WhichIntegral) -> Result<Output, CliError> {
    let (name, estimate) = match which {
        WhichIntegral::J => ("j", integral_j(&ctx.spec, &ctx.dom, energy, &ctx.settings)?),
        WhichIntegral::I => ("i", integral_i(&ctx.spec, &ctx.dom, energy, &ctx.settings)?),
    };
    let failure = if estimate.converged {
        None
    } else {
        Some(CliError::Numeric(
            "integral did not converge to the requested tolerance".into(),
        ))
    };
    let report = IntegralReport {
        schema: SCHEMA,
        dim: ctx.dom.dim(),
        which: name,
        energy,
        estimate,
    };
    let text = match ctx.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("which,energy,finite,value,abs_error,converged\n");
            let value = report
                .estimate
                .value
                .map(|v| v.to_string())
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                report.which,
                report.energy,
                report.estimate.finite,
                value,
                report.estimate.abs_error,
                report.estimate.converged
            );
            s
        }
    };
    Ok(Output { text, failure })
}
