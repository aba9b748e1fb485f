//! Command-line front end: scenario files, the `simulate`, `check-conditions`,
//! `diagnose` and `gadget` subcommands, and their output files.
//!
//! Exit codes: 0 success, 1 a Fail (or Inconclusive) verdict, 2 configuration
//! or I/O error, 3 numerical error (divergent integral, quadrature failure).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::audits::first_moment_bound;
use crate::analysis::{
    audit_moment_bounds, comparison_run, dependence_audit, dependence_curve, gadget_bounds_check,
    martingale_residual_run, DiagnosticKind, DiagnosticsReport, Gadget, GadgetVariant, Outcome, PowerModulus,
    TestFunction,
};
use crate::conditions::{check, check_linear_growth, CheckGrid, ConditionId, ConditionReport, Verdict};
use crate::engine::{map_paths, simulate_path_with, ExitFlag, MomentSummary, Recording, Scheme, SimulationConfig};
use crate::error::{Error, Result};
use crate::model::{Model, ModelSpec};
use crate::samplers::{Channel, JumpChannel, RandomStream};

/// Version of the summary, CSV and manifest layouts.
pub const FORMAT_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// CSV header of the per-path output.
pub const PATHS_CSV_HEADER: &str = "path_id,time,state,event_channel,event_size";

fn default_x0() -> f64 {
    1.0
}

/// A complete run description, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Deterministic initial state.
    #[serde(default = "default_x0")]
    pub x0: f64,
    /// Conditions checked by `check-conditions` when none are given on the command line.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionId>,
    pub model: ModelSpec,
    #[serde(default)]
    pub config: SimulationConfig,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DiagnosticSpec>,
}

fn default_summary() -> String {
    "summary.json".into()
}

fn default_csv_paths() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Summary file, relative to the output directory.
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths_csv: Option<String>,
    /// Number of paths written to `paths_csv`.
    #[serde(default = "default_csv_paths")]
    pub csv_paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    /// Observation times; empty means 11 equally spaced times on [0, horizon].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_grid: Vec<f64>,
    /// Linear-growth constant for the bound curve in the plot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_k: Option<f64>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            summary: default_summary(),
            paths_csv: None,
            csv_paths: default_csv_paths(),
            svg: None,
            t_grid: Vec::new(),
            bound_k: None,
        }
    }
}

fn default_budget() -> f64 {
    0.01
}

fn default_function() -> TestFunction {
    TestFunction::exp_decay(1.0)
}

/// One requested diagnostic with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagnosticSpec {
    /// mean(1 + x(t)) ≤ (1 + x0)e^{Kt}; K defaults to the linear-growth constant.
    Moment1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
    },
    /// mean(x(t)²) ≤ 6x0² + 24Kt + 6K²t²; K defaults to the bounded-coefficient constant.
    Moment2 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
    },
    Martingale {
        #[serde(default = "default_function")]
        function: TestFunction,
        #[serde(default = "default_budget")]
        budget: f64,
    },
    /// Coupled pairs from (x0_low, x0_high); defaults x0 and x0 + 1.
    Comparison {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0_low: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0_high: Option<f64>,
    },
    /// E|x(T; x0* + gap) − x(T; x0*)| over gaps; defaults 1, 1/2, 1/4, 1/8.
    Dependence {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        gaps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0_star: Option<f64>,
    },
}

impl DiagnosticSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DiagnosticSpec::Moment1 { .. } => "moment1",
            DiagnosticSpec::Moment2 { .. } => "moment2",
            DiagnosticSpec::Martingale { .. } => "martingale",
            DiagnosticSpec::Comparison { .. } => "comparison",
            DiagnosticSpec::Dependence { .. } => "dependence",
        }
    }

    /// The diagnostic with default parameters, by its command-line name.
    pub fn by_name(name: &str) -> Result<DiagnosticSpec> {
        Ok(match name.trim() {
            "moment1" => DiagnosticSpec::Moment1 { k: None },
            "moment2" => DiagnosticSpec::Moment2 { k: None },
            "martingale" => DiagnosticSpec::Martingale { function: default_function(), budget: default_budget() },
            "comparison" => DiagnosticSpec::Comparison { x0_low: None, x0_high: None },
            "dependence" => DiagnosticSpec::Dependence { gaps: Vec::new(), x0_star: None },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "--tests: unknown diagnostic `{other}` (expected moment1, moment2, martingale, comparison, dependence)"
                )))
            }
        })
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("scenario: {}", e.message().trim())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(format!("scenario serialization: {e}")))
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("--scenario {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Observation times, filled in from the horizon when not given.
    pub fn t_grid(&self) -> Vec<f64> {
        if !self.outputs.t_grid.is_empty() {
            return self.outputs.t_grid.clone();
        }
        (0..=10).map(|i| self.config.horizon * i as f64 / 10.0).collect()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        hex(&Sha256::digest(&json))
    }

    fn validate(&self) -> Result<Model> {
        let model = self.model.build().map_err(|e| in_key("model", e))?;
        self.config.validate(&[self.x0]).map_err(|e| in_key("config", e))?;
        let t_grid = self.t_grid();
        if t_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("outputs.t_grid must be non-decreasing".into()));
        }
        if t_grid.iter().any(|&t| !(t >= 0.0 && t <= self.config.horizon)) {
            return Err(Error::InvalidConfig(format!(
                "outputs.t_grid must lie in [0, config.horizon = {}]",
                self.config.horizon
            )));
        }
        Ok(model)
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(2 * bytes.len());
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn in_key(key: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig(m) if m.starts_with("config.") => Error::InvalidConfig(m),
        Error::InvalidConfig(m) => Error::InvalidConfig(format!("{key}: {m}")),
        Error::InvalidModel(m) => Error::InvalidModel(format!("{key}: {m}")),
        Error::InvalidMeasure(m) => Error::InvalidMeasure(format!("{key}: {m}")),
        Error::Divergent(m) if !m.starts_with(key) => Error::Divergent(format!("{key}: {m}")),
        other => other,
    }
}

/// Ensemble statistics of one `simulate` run; field names are part of the
/// output format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: ModelSpec,
    pub config: SimulationConfig,
    pub seed: u64,
    pub x0: f64,
    pub t_grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub se: Vec<f64>,
    pub clamp_count: u64,
    /// Paths that reached the state cap (stopped or extended).
    pub cap_events: u64,
    /// Variance rate of the dropped small jumps times the horizon.
    pub truncation_variance_budget: f64,
}

/// Provenance of one command invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub command: String,
    pub scenario_digest: String,
    pub root_seed: u64,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub exit_status: i32,
}

#[derive(Debug, Parser)]
#[command(name = "nnjump", version, about = "Simulate and diagnose jump SDEs for non-negative processes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Root seed; overrides config.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of paths; overrides config.paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Euler step; overrides config.dt.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Output directory (NNJUMP_OUT takes precedence).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores. Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the ensemble and write the summary (plus optional CSV and SVG).
    Simulate,
    /// Check well-posedness conditions on the model's coefficients.
    CheckConditions {
        /// Comma-separated condition ids, e.g. 2a,6d.
        #[arg(long, value_delimiter = ',')]
        conditions: Vec<String>,
        /// Upper end of the state grid; defaults to config.m_cap.
        #[arg(long)]
        level: Option<f64>,
    },
    /// Run statistical diagnostics on simulated ensembles.
    Diagnose {
        /// Comma-separated diagnostics: moment1, moment2, martingale, comparison, dependence.
        #[arg(long, value_delimiter = ',')]
        tests: Vec<String>,
    },
    /// Tabulate the smoothing sequence for a power-law modulus and check its bounds.
    Gadget(GadgetArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Symmetric,
    OneSided,
}

#[derive(Debug, Args)]
struct GadgetArgs {
    /// ρ(z) = coef · z^exponent.
    #[arg(long, default_value_t = 1.0)]
    coef: f64,
    #[arg(long, default_value_t = 0.5)]
    exponent: f64,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    #[arg(long, value_enum, default_value = "symmetric")]
    variant: VariantArg,
    /// Grid points per level in the φ table.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Random (ζ, h) samples per level for the bound checks.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

/// Outcome of a subcommand: exit code plus the seed and digest for the manifest.
struct Done {
    code: i32,
    seed: u64,
    digest: String,
}

/// Parse `argv` (including the program name), run the subcommand and return
/// its exit code. Condition, diagnostic and gadget records go to stdout, one
/// JSON object per line; progress and errors go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let out_dir = output_dir(&cli.global);
    let command = match &cli.command {
        Command::Simulate => "simulate",
        Command::CheckConditions { .. } => "check-conditions",
        Command::Diagnose { .. } => "diagnose",
        Command::Gadget(_) => "gadget",
    };
    let result = fs::create_dir_all(&out_dir)
        .map_err(|e| Error::Io(format!("--out {}: {e}", out_dir.display())))
        .and_then(|_| match &cli.command {
            Command::Simulate => simulate(&cli.global, &out_dir),
            Command::CheckConditions { conditions, level } => check_conditions(&cli.global, &out_dir, conditions, *level),
            Command::Diagnose { tests } => diagnose(&cli.global, &out_dir, tests),
            Command::Gadget(args) => gadget(args, &out_dir),
        });
    let done = match result {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            Done { code: exit_code(&e), seed: cli.global.seed.unwrap_or(0), digest: String::new() }
        }
    };
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        scenario_digest: done.digest,
        root_seed: done.seed,
        started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        exit_status: done.code,
    };
    if out_dir.is_dir() {
        let path = out_dir.join(format!("manifest-{command}.json"));
        if let Err(e) = write_json(&path, &manifest) {
            eprintln!("error: {e}");
        }
    }
    done.code
}

/// Exit code for an error class.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn output_dir(g: &Global) -> PathBuf {
    match std::env::var_os("NNJUMP_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => g.out.clone().unwrap_or_else(|| PathBuf::from(".")),
    }
}

fn load_scenario(g: &Global) -> Result<Scenario> {
    let path = g
        .scenario
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--scenario is required for this subcommand".into()))?;
    let mut sc = Scenario::load(path)?;
    if let Some(seed) = g.seed {
        sc.config.seed = seed;
    }
    if let Some(n) = g.paths {
        sc.config.paths = n;
    }
    if let Some(dt) = g.dt {
        sc.config.dt = dt;
    }
    Ok(sc)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("records serialize"));
}

struct PathObservation {
    values: Vec<f64>,
    clamps: u64,
    capped: bool,
}

/// Simulate the scenario's ensemble and reduce it to a summary, in path-id order.
pub fn summarize(sc: &Scenario, model: &Model, threads: usize) -> Result<RunSummary> {
    let scheme = Scheme::new(model, &sc.config)?;
    let t_grid = sc.t_grid();
    let rec = Recording::Times(t_grid.clone());
    let obs = map_paths(&scheme, sc.x0, &rec, threads, |_, p| PathObservation {
        values: t_grid.iter().map(|&t| p.state_at(t)).collect(),
        clamps: p.clamp_count,
        capped: p.cap_doublings > 0 || matches!(p.exit_flag, ExitFlag::HitCap { .. }),
    })?;
    let mut mean = Vec::with_capacity(t_grid.len());
    let mut var = Vec::with_capacity(t_grid.len());
    let mut se = Vec::with_capacity(t_grid.len());
    for i in 0..t_grid.len() {
        let col: Vec<f64> = obs.iter().map(|o| o.values[i]).collect();
        let s = MomentSummary::from_values(&col);
        mean.push(s.mean);
        var.push(s.var);
        se.push(s.se_mean);
    }
    Ok(RunSummary {
        model: sc.model.clone(),
        config: sc.config.clone(),
        seed: sc.config.seed,
        x0: sc.x0,
        t_grid,
        mean,
        var,
        se,
        clamp_count: obs.iter().map(|o| o.clamps).sum(),
        cap_events: obs.iter().filter(|o| o.capped).count() as u64,
        truncation_variance_budget: scheme.truncation_variance_rate() * sc.config.horizon,
    })
}

fn simulate(g: &Global, out: &Path) -> Result<Done> {
    let sc = load_scenario(g)?;
    let model = sc.validate()?;
    let summary = summarize(&sc, &model, g.threads)?;
    let summary_path = out.join(&sc.outputs.summary);
    write_json(&summary_path, &summary)?;
    if let Some(csv) = &sc.outputs.paths_csv {
        let scheme = Scheme::new(&model, &sc.config)?;
        let n = sc.outputs.csv_paths.min(sc.config.paths);
        let mut text = String::from(PATHS_CSV_HEADER);
        text.push('\n');
        for id in 0..n as u64 {
            let p = simulate_path_with(&scheme, sc.x0, id, &Recording::Full)?;
            text.push_str(&path_rows(id, &p));
        }
        fs::write(out.join(csv), text).map_err(|e| Error::Io(format!("outputs.paths_csv: {e}")))?;
    }
    if let Some(svg) = &sc.outputs.svg {
        emit_plot(&summary, sc.outputs.bound_k, &out.join(svg))?;
    }
    eprintln!("summary written to {}", summary_path.display());
    Ok(Done { code: EXIT_OK, seed: sc.config.seed, digest: sc.digest() })
}

/// CSV rows of one path; jump times carry the channel and mark size.
pub fn path_rows(id: u64, p: &crate::engine::SimPath) -> String {
    let mut out = String::new();
    let mut jumps = p.jumps.iter().peekable();
    for (&t, &x) in p.times.iter().zip(&p.states) {
        let _ = write!(out, "{id},{t},{x},");
        match jumps.peek() {
            Some(j) if j.time == t => {
                let channel = match j.channel {
                    JumpChannel::N0 => "N0",
                    JumpChannel::N1 => "N1",
                };
                let _ = writeln!(out, "{channel},{}", j.size);
                jumps.next();
            }
            _ => out.push_str(",\n"),
        }
    }
    out
}

fn check_conditions(g: &Global, out: &Path, requested: &[String], level: Option<f64>) -> Result<Done> {
    let sc = load_scenario(g)?;
    let ids: Vec<ConditionId> = if !requested.is_empty() {
        requested
            .iter()
            .map(|s| s.parse().map_err(|e| in_key("--conditions", e)))
            .collect::<Result<_>>()?
    } else if !sc.conditions.is_empty() {
        sc.conditions.clone()
    } else {
        ConditionId::ALL.to_vec()
    };
    let model = sc.model.build().map_err(|e| in_key("model", e))?;
    let m = level.unwrap_or(sc.config.m_cap);
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidConfig(format!("--level = {m} must be positive")));
    }
    let grid = CheckGrid::default_for(m);
    let mut reports: Vec<ConditionReport> = Vec::new();
    for id in ids {
        let r = check(&model, id, &grid).map_err(|e| {
            eprintln!("condition {id} could not be evaluated");
            in_key(&format!("condition {id}"), e)
        })?;
        print_json(&r);
        reports.push(r);
    }
    write_json(&out.join("conditions.json"), &reports)?;
    let all_pass = reports.iter().all(|r| r.verdict == Verdict::Pass);
    Ok(Done { code: if all_pass { EXIT_OK } else { EXIT_FAIL }, seed: sc.config.seed, digest: sc.digest() })
}

/// Verdicts of one `diagnose` invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseOutput {
    pub reports: Vec<DiagnosticsReport>,
    pub verdicts: BTreeMap<String, Outcome>,
    pub passed: bool,
}

fn diagnose(g: &Global, out: &Path, tests: &[String]) -> Result<Done> {
    let sc = load_scenario(g)?;
    let model = sc.validate()?;
    let specs: Vec<DiagnosticSpec> = if tests.is_empty() {
        sc.diagnostics.clone()
    } else {
        tests
            .iter()
            .map(|name| {
                let d = DiagnosticSpec::by_name(name)?;
                Ok(sc.diagnostics.iter().find(|s| s.name() == d.name()).cloned().unwrap_or(d))
            })
            .collect::<Result<_>>()?
    };
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no diagnostics requested (use --tests or [[diagnostics]])".into()));
    }
    let output = run_diagnostics(&sc, &model, &specs, g.threads)?;
    for r in &output.reports {
        print_json(r);
    }
    write_json(&out.join("diagnostics.json"), &output)?;
    Ok(Done { code: if output.passed { EXIT_OK } else { EXIT_FAIL }, seed: sc.config.seed, digest: sc.digest() })
}

/// Run each diagnostic in order; one report per item.
pub fn run_diagnostics(sc: &Scenario, model: &Model, specs: &[DiagnosticSpec], threads: usize) -> Result<DiagnoseOutput> {
    let scheme = Scheme::new(model, &sc.config)?;
    let t_grid: Vec<f64> = sc.t_grid().into_iter().filter(|&t| t > 0.0).collect();
    let grid = CheckGrid::default_for(sc.config.m_cap);
    let mut observed: Option<Vec<Vec<f64>>> = None;
    let mut reports = Vec::new();
    let mut verdicts = BTreeMap::new();
    for spec in specs {
        let report = match spec {
            DiagnosticSpec::Moment1 { k } | DiagnosticSpec::Moment2 { k } => {
                let first = matches!(spec, DiagnosticSpec::Moment1 { .. });
                let k = match k {
                    Some(k) => *k,
                    None if first => growth_constant(model, &grid)?,
                    None => {
                        let r = check(model, ConditionId::Bounded, &grid)?;
                        if r.verdict != Verdict::Pass {
                            return Err(Error::InvalidConfig(
                                "diagnostics.moment2: model fails the bounded-coefficient condition; give k explicitly".into(),
                            ));
                        }
                        r.constant("K").unwrap_or(0.0)
                    }
                };
                if observed.is_none() {
                    observed = Some(observe(&scheme, sc.x0, &t_grid, threads)?);
                }
                let values = observed.as_ref().unwrap();
                let kind = if first { DiagnosticKind::MomentBound1 } else { DiagnosticKind::MomentBound2 };
                let all = audit_moment_bounds(values, sc.x0, k, &t_grid);
                merge_reports(kind, all.into_iter().filter(|r| r.kind == kind).collect())
            }
            DiagnosticSpec::Martingale { function, budget } => {
                martingale_residual_run(&scheme, function, sc.x0, *budget, threads)?
            }
            DiagnosticSpec::Comparison { x0_low, x0_high } => {
                let low = x0_low.unwrap_or(sc.x0);
                let high = x0_high.unwrap_or(low + 1.0);
                sc.config.validate(&[low, high]).map_err(|e| in_key("diagnostics.comparison", e))?;
                comparison_run(&scheme, low, high, threads).map_err(|e| match e {
                    Error::MonotonicityUnverified => Error::InvalidConfig(
                        "diagnostics.comparison: model.monotone is false; coupling needs monotone intensities".into(),
                    ),
                    other => other,
                })?
            }
            DiagnosticSpec::Dependence { gaps, x0_star } => {
                let gaps = if gaps.is_empty() { vec![1.0, 0.5, 0.25, 0.125] } else { gaps.clone() };
                let star = x0_star.unwrap_or(sc.x0);
                let starts: Vec<f64> = std::iter::once(star).chain(gaps.iter().map(|d| star + d)).collect();
                sc.config.validate(&starts).map_err(|e| in_key("diagnostics.dependence", e))?;
                let curve = dependence_curve(&scheme, star, &gaps, sc.config.horizon, threads)?;
                let mut r = dependence_audit(&curve);
                r.metadata.insert("curve".into(), serde_json::to_string(&curve).expect("curve serializes"));
                r
            }
        };
        verdicts.insert(spec.name().to_string(), report.verdict);
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed());
    Ok(DiagnoseOutput { reports, verdicts, passed })
}

fn growth_constant(model: &Model, grid: &CheckGrid) -> Result<f64> {
    Ok(check_linear_growth(model, &grid.states, ConditionId::LinearGrowth)?.constant("K").unwrap_or(0.0))
}

/// States at each time across paths: `result[i][path]` is x(t_grid[i]).
fn observe(scheme: &Scheme, x0: f64, t_grid: &[f64], threads: usize) -> Result<Vec<Vec<f64>>> {
    let rec = Recording::Times(t_grid.to_vec());
    let rows = map_paths(scheme, x0, &rec, threads, |_, p| t_grid.iter().map(|&t| p.state_at(t)).collect::<Vec<f64>>())?;
    Ok((0..t_grid.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect())
}

/// Collapse per-time reports into one: Pass iff all pass, figures from the
/// time with the smallest slack.
fn merge_reports(kind: DiagnosticKind, reports: Vec<DiagnosticsReport>) -> DiagnosticsReport {
    let slack = |r: &DiagnosticsReport| r.bound.unwrap_or(f64::INFINITY) + (r.band.1 - r.statistic) - r.statistic;
    let all_pass = reports.iter().all(|r| r.passed());
    let times: Vec<String> = reports.iter().filter_map(|r| r.metadata.get("t").cloned()).collect();
    let mut worst = reports
        .into_iter()
        .min_by(|a, b| slack(a).total_cmp(&slack(b)))
        .unwrap_or(DiagnosticsReport {
            kind,
            statistic: 0.0,
            band: (0.0, 0.0),
            bound: None,
            verdict: Outcome::Pass,
            metadata: BTreeMap::new(),
        });
    worst.verdict = if all_pass { Outcome::Pass } else { Outcome::Fail };
    worst.metadata.insert("times".into(), times.join(";"));
    worst
}

fn gadget(args: &GadgetArgs, out: &Path) -> Result<Done> {
    if args.k_max == 0 || args.points < 2 {
        return Err(Error::InvalidConfig("--k-max must be positive and --points at least 2".into()));
    }
    let variant = match args.variant {
        VariantArg::Symmetric => GadgetVariant::Symmetric,
        VariantArg::OneSided => GadgetVariant::OneSided,
    };
    let g = Gadget::build(PowerModulus::new(args.coef, args.exponent), args.k_max, variant)?;
    let mut levels = String::from("k,a_k,partition_integral\n");
    let mut phi = String::from("k,x,phi,dphi,d2phi\n");
    let mut passed = true;
    let mut stream = RandomStream::new(0, 0, Channel::Thinning);
    for k in 1..=args.k_max {
        let (lo, hi) = g.support(k);
        let _ = writeln!(levels, "{k},{lo},{}", g.partition_integral(k)?);
        let (l, h) = ((lo / 2.0).ln(), (2.0 * hi).ln());
        for i in 0..args.points {
            let x = (l + (h - l) * i as f64 / (args.points - 1) as f64).exp();
            let _ = writeln!(phi, "{k},{x},{},{},{}", g.phi(k, x), g.dphi(k, x), g.d2phi(k, x));
        }
        let samples: Vec<(f64, f64)> = (0..args.samples)
            .map(|_| {
                let zeta = (l + (h - l) * stream.uniform()).exp();
                let step = (l + (h - l) * stream.uniform()).exp();
                if variant == GadgetVariant::Symmetric && stream.uniform() < 0.5 {
                    (-zeta, -step)
                } else {
                    (zeta, step)
                }
            })
            .collect();
        let check = gadget_bounds_check(&g, k, &samples)?;
        passed &= check.passed();
        print_json(&check);
    }
    fs::write(out.join("gadget_levels.csv"), levels)?;
    fs::write(out.join("gadget_phi.csv"), phi)?;
    let digest = hex(&Sha256::digest(format!("{args:?}").as_bytes()));
    Ok(Done { code: if passed { EXIT_OK } else { EXIT_FAIL }, seed: 0, digest })
}

/// SVG of mean ± 3 SE against time, with the curve (1 + x0)e^{Kt} when `k` is given.
pub fn plot_svg(summary: &RunSummary, k: Option<f64>) -> Result<String> {
    let n = summary.t_grid.len();
    if n == 0 || summary.mean.len() != n || summary.se.len() != n {
        return Err(Error::InvalidConfig("plot needs a non-empty t_grid with matching means and errors".into()));
    }
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let ts = &summary.t_grid;
    let lo: Vec<f64> = summary.mean.iter().zip(&summary.se).map(|(m, s)| m - 3.0 * s).collect();
    let hi: Vec<f64> = summary.mean.iter().zip(&summary.se).map(|(m, s)| m + 3.0 * s).collect();
    let dense: Vec<f64> = {
        let (a, b) = (ts[0], ts[n - 1]);
        (0..=100).map(|i| a + (b - a) * i as f64 / 100.0).collect()
    };
    let bound: Option<Vec<f64>> = k.map(|k| dense.iter().map(|&t| first_moment_bound(summary.x0, k, t)).collect());
    let t_min = ts[0];
    let t_max = if ts[n - 1] > t_min { ts[n - 1] } else { t_min + 1.0 };
    let mut y_min = lo.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let mut y_max = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(b) = &bound {
        y_max = b.iter().copied().fold(y_max, f64::max);
    }
    if !(y_max > y_min) {
        y_max = y_min + 1.0;
    }
    let margin = 0.05 * (y_max - y_min);
    y_min -= margin;
    y_max += margin;
    let sx = |t: f64| PAD + (t - t_min) / (t_max - t_min) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y_min) / (y_max - y_min) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    // Band: upper edge forward, lower edge back.
    let mut band = String::new();
    for i in 0..n {
        let _ = write!(band, "{:.2},{:.2} ", sx(ts[i]), sy(hi[i]));
    }
    for i in (0..n).rev() {
        let _ = write!(band, "{:.2},{:.2} ", sx(ts[i]), sy(lo[i]));
    }
    let _ = writeln!(s, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##, band.trim_end());
    let line: Vec<String> = (0..n).map(|i| format!("{:.2},{:.2}", sx(ts[i]), sy(summary.mean[i]))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="2"/>"##, line.join(" "));
    if let Some(b) = &bound {
        let pts: Vec<String> = dense.iter().zip(b).map(|(&t, &v)| format!("{:.2},{:.2}", sx(t), sy(v))).collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#cb181d" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
            pts.join(" ")
        );
    }
    let (x0p, y0p, x1p, y1p) = (PAD, H - PAD, W - PAD, PAD);
    let _ = writeln!(s, r#"<line x1="{x0p}" y1="{y0p}" x2="{x1p}" y2="{y0p}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0p}" y1="{y0p}" x2="{x0p}" y2="{y1p}" stroke="black"/>"#);
    for i in 0..=4 {
        let t = t_min + (t_max - t_min) * i as f64 / 4.0;
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{:.3}</text>"#, sx(t), H - PAD + 16.0, t);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.3}</text>"#, PAD - 6.0, sy(y) + 4.0, y);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="20" font-size="13" text-anchor="middle">mean ± 3 SE</text>"#, W / 2.0);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Write [`plot_svg`] to `path`; nothing is written on error.
pub fn emit_plot(summary: &RunSummary, k: Option<f64>, path: &Path) -> Result<()> {
    let svg = plot_svg(summary, k)?;
    fs::write(path, svg).map_err(|e| Error::Io(format!("outputs.svg {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIR: &str = r#"
x0 = 1.0

[model]
preset = "cbi"
a = 1.0
b = 1.0
beta = -1.0

[config]
dt = 0.01
horizon = 1.0
paths = 50
seed = 7
"#;

    #[test]
    fn scenario_parses_with_defaults() {
        let sc = Scenario::from_toml(CIR).unwrap();
        assert_eq!(sc.config.paths, 50);
        assert_eq!(sc.config.epsilon, SimulationConfig::default().epsilon);
        assert_eq!(sc.outputs.summary, "summary.json");
        assert_eq!(sc.t_grid().len(), 11);
        let back = Scenario::from_toml(&sc.to_toml().unwrap()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = Scenario::from_toml(&CIR.replace("x0 = 1.0", "x0 = 1.0\nxo = 2.0")).unwrap_err();
        assert!(err.to_string().contains("xo"), "{err}");
    }

    #[test]
    fn empty_grid_has_no_plot() {
        let sc = Scenario::from_toml(CIR).unwrap();
        let model = sc.validate().unwrap();
        let mut summary = summarize(&sc, &model, 1).unwrap();
        summary.t_grid.clear();
        summary.mean.clear();
        summary.se.clear();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.svg");
        assert!(emit_plot(&summary, None, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn bound_curve_reaches_two_e() {
        let summary = RunSummary {
            model: ModelSpec::cir(1.0, 1.0, -1.0),
            config: SimulationConfig::default(),
            seed: 0,
            x0: 1.0,
            t_grid: vec![0.0, 1.0],
            mean: vec![1.0, 1.0],
            var: vec![0.0, 1.0],
            se: vec![0.0, 0.01],
            clamp_count: 0,
            cap_events: 0,
            truncation_variance_budget: 0.0,
        };
        assert!((first_moment_bound(1.0, 1.0, 1.0) - 2.0 * std::f64::consts::E).abs() < 1e-12);
        let svg = plot_svg(&summary, Some(1.0)).unwrap();
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn csv_marks_jump_rows() {
        let sc = Scenario::from_toml(
            r#"
[model]
preset = "cbi"
a = 0.0
b = 0.0
beta = 0.0
nu1 = { type = "cpp", rate = 5.0, law = { type = "point", at = 1.0 } }
"#,
        )
        .unwrap();
        let model = sc.validate().unwrap();
        let scheme = Scheme::new(&model, &sc.config).unwrap();
        let p = simulate_path_with(&scheme, 1.0, 3, &Recording::Full).unwrap();
        let rows = path_rows(3, &p);
        let jumps = rows.lines().filter(|l| l.ends_with(",N1,1")).count();
        assert_eq!(jumps, p.jumps.len());
        assert!(!p.jumps.is_empty());
    }
}
