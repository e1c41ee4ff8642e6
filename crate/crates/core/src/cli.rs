//! Command-line driver: `stationary`, `evolve`, `barenblatt` and `verify-all`.
//!
//! Every setting can come from a `key = value` config file (`--config`) and
//! be overridden by the matching flag. Each run writes its data files, a
//! `config.txt` with the fully resolved settings and a `manifest.json` into
//! `<output root>/<run label>/`.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical tolerance
//! failure, 3 internal invariant breach. `verify-all` exits with the number
//! of failed criteria.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::barenblatt::{
    evolve_free, mass_at, pde_residual, profile_ode_residual, r0_of_mass, radial_equation_residual,
    BarenblattSolution, FreeEvolutionConfig,
};
use crate::error::Error;
use crate::evolution::{evolve_to, perturbed_initial, DecayConfig, EvolutionState, TimeScheme};
use crate::fit::loglog_slope;
use crate::grid::{RadialGrid, RadialProfile};
use crate::io::{output_root, write_csv, write_json};
use crate::params::make_params;
use crate::stationary::{
    check_ball_bound, check_torsion_bound, discrete_stationary, solve_on_ball, MIN_ODE_STEPS,
};
use crate::verify::{free_grid, generic_free_data, run_all, VerifyConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_TOLERANCE: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "khessian", version, about = "Radial k-Hessian evolution lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary separable profile on a ball, with both explicit bounds.
    Stationary(StationaryArgs),
    /// Explicit march from a selected initial profile, with decay diagnostics.
    Evolve(EvolveArgs),
    /// Exactness, mass and support checks for one k-Barenblatt solution.
    Barenblatt(BarenblattArgs),
    /// The full regression matrix; exit code = number of failed criteria.
    VerifyAll(VerifyAllArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output root (default: $KHESSIAN_OUTPUT_DIR, then ./khessian-out).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub ode_steps: Option<usize>,
    /// Largest accepted stationary residual.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub ode_steps: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub cfl_safety: Option<f64>,
    /// theta | scaled:s | perturbed:amp | file:path
    #[arg(long)]
    pub init: Option<InitSpec>,
    /// ssp-rk3 | euler
    #[arg(long)]
    pub scheme: Option<SchemeName>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BarenblattArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Profile constant; conflicts with `--mass`.
    #[arg(long = "C", conflicts_with = "mass")]
    pub c: Option<f64>,
    /// Total mass; the profile constant is derived from it.
    #[arg(long)]
    pub mass: Option<f64>,
    /// Comma-separated output times.
    #[arg(long)]
    pub times: Option<FloatList>,
    /// Radial samples per output time.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub quad_points: Option<usize>,
    /// Add the exploratory whole-space run towards the same-mass profile.
    #[arg(long)]
    pub evolve_free: bool,
    /// Free-run data: generic | barenblatt:C
    #[arg(long)]
    pub init: Option<InitSpec>,
    #[arg(long)]
    pub free_cells: Option<usize>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct VerifyAllArgs {
    #[command(flatten)]
    pub common: Common,
    /// Coarser grids and fewer quadrature points.
    #[arg(long)]
    pub fast: bool,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::NoConvergence { .. } | Error::NoZeroCrossing { .. } => EXIT_TOLERANCE,
                Error::Invariant(_)
                | Error::Unstable { .. }
                | Error::AdmissibilityLost { .. }
                | Error::NegativeRoot { .. } => EXIT_INVARIANT,
                _ => EXIT_USAGE,
            },
        }
    }
}

/// Initial-data selector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Theta,
    Scaled(f64),
    Perturbed(f64),
    Barenblatt(f64),
    File(PathBuf),
    Generic,
}

impl FromStr for InitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
        match s.trim().split_once(':') {
            None if s.trim() == "theta" => Ok(InitSpec::Theta),
            None if s.trim() == "generic" => Ok(InitSpec::Generic),
            Some(("scaled", v)) => Ok(InitSpec::Scaled(num(v)?)),
            Some(("perturbed", v)) => Ok(InitSpec::Perturbed(num(v)?)),
            Some(("barenblatt", v)) => Ok(InitSpec::Barenblatt(num(v)?)),
            Some(("file", v)) if !v.trim().is_empty() => Ok(InitSpec::File(PathBuf::from(v.trim()))),
            _ => Err(format!(
                "unknown initial data '{s}' (expected theta, scaled:s, perturbed:amp, file:path, barenblatt:C or generic)"
            )),
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Theta => write!(f, "theta"),
            InitSpec::Scaled(s) => write!(f, "scaled:{s}"),
            InitSpec::Perturbed(a) => write!(f, "perturbed:{a}"),
            InitSpec::Barenblatt(c) => write!(f, "barenblatt:{c}"),
            InitSpec::File(p) => write!(f, "file:{}", p.display()),
            InitSpec::Generic => write!(f, "generic"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeName(pub TimeScheme);

impl FromStr for SchemeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "ssp-rk3" | "ssprk3" => Ok(SchemeName(TimeScheme::SspRk3)),
            "euler" | "forward-euler" => Ok(SchemeName(TimeScheme::ForwardEuler)),
            _ => Err(format!("unknown time scheme '{s}' (expected ssp-rk3 or euler)")),
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            TimeScheme::SspRk3 => "ssp-rk3",
            TimeScheme::ForwardEuler => "euler",
        })
    }
}

/// Comma-separated floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("'{}': {e}", v.trim()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(FloatList)
    }
}

impl fmt::Display for FloatList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

/// Parsed `key = value` file. Keys are case-insensitive and `-`/`_` agnostic.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    path: String,
    entries: BTreeMap<String, Entry>,
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str, path: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| CliError::Config {
                path: path.to_string(),
                line,
                message,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
            let key = normalize_key(key);
            if key.is_empty() {
                return Err(err("missing key before `=`".into()));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(err(format!("field `{key}`: missing value")));
            }
            if let Some(prev) = entries.insert(
                key.clone(),
                Entry {
                    line,
                    value: value.into(),
                },
            ) {
                return Err(err(format!(
                    "field `{key}`: duplicate (first set on line {})",
                    prev.line
                )));
            }
        }
        Ok(Self {
            path: path.to_string(),
            entries,
        })
    }
}

/// Layers flags over config entries over defaults, consuming entries so
/// that leftovers can be reported as unknown fields.
struct Resolver {
    file: ConfigFile,
}

impl Resolver {
    fn new(common: &Common) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Ok(Self { file })
    }

    fn file_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        let Some(entry) = self.file.entries.remove(key) else {
            return Ok(None);
        };
        entry.value.parse::<T>().map(Some).map_err(|e| CliError::Config {
            path: self.file.path.clone(),
            line: entry.line,
            message: format!("field `{key}`: invalid value `{}`: {e}", entry.value),
        })
    }

    fn opt<T: FromStr>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        let file = self.file_value(key)?;
        Ok(flag.or(file))
    }

    fn get<T: FromStr>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(key, flag)?.unwrap_or(default))
    }

    fn switch(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        Ok(flag || self.file_value::<bool>(key)?.unwrap_or(false))
    }

    fn output_dir(&mut self, common: &Common) -> Result<PathBuf, CliError> {
        let file = self.file_value::<PathBuf>("out_dir")?;
        Ok(output_root(common.out_dir.as_deref().or(file.as_deref())))
    }

    fn finish(self, command: &str) -> Result<(), CliError> {
        match self.file.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, entry)) => Err(CliError::Config {
                path: self.file.path,
                line: entry.line,
                message: format!("unknown field `{key}` for `{command}`"),
            }),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    /// Re-runs the job with the resolved settings.
    rerun: String,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    exit_code: u8,
}

/// Writes `config.txt` (resolved settings) and `manifest.json` into `dir`.
fn write_manifest<C: Serialize>(
    dir: &Path,
    command: &'static str,
    config: &C,
    outputs: &[&str],
    notes: &[String],
    exit_code: u8,
) -> Result<(), CliError> {
    let value = serde_json::to_value(config).map_err(Error::from)?;
    let mut text = String::new();
    if let Value::Object(map) = &value {
        for (key, v) in map {
            let rendered = match v {
                Value::Null => continue,
                Value::String(s) => s.clone(),
                Value::Array(items) => items.iter().map(Value::to_string).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            text.push_str(&format!("{key} = {rendered}\n"));
        }
    }
    fs::create_dir_all(dir).map_err(Error::from)?;
    fs::write(dir.join("config.txt"), text).map_err(Error::from)?;
    let mut files: Vec<String> = outputs.iter().map(|s| s.to_string()).collect();
    files.push("config.txt".into());
    let manifest = Manifest {
        tool: "khessian",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        rerun: format!("khessian {command} --config {}", dir.join("config.txt").display()),
        outputs: files,
        notes: notes.to_vec(),
        exit_code,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct StationaryConfig {
    n: usize,
    k: usize,
    radius: f64,
    cells: usize,
    ode_steps: usize,
    tolerance: f64,
    out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct Bounds {
    ball: f64,
    ball_ok: bool,
    torsion: f64,
    torsion_ok: bool,
}

#[derive(Debug, Serialize)]
struct StationaryReport {
    n: usize,
    k: usize,
    #[serde(rename = "R")]
    radius: f64,
    /// Zero of the unit shot.
    #[serde(rename = "R1")]
    r1: f64,
    center_value: f64,
    boundary_slope: f64,
    sup_norm: f64,
    residual: f64,
    tolerance: f64,
    bounds: Bounds,
    passed: bool,
}

fn cmd_stationary(args: StationaryArgs) -> Result<u8, CliError> {
    let mut res = Resolver::new(&args.common)?;
    let cfg = StationaryConfig {
        n: res.get("n", args.n, 3)?,
        k: res.get("k", args.k, 2)?,
        radius: res.get("radius", args.radius, 1.0)?,
        cells: res.get("cells", args.cells, 2048)?,
        ode_steps: res.get("ode_steps", args.ode_steps, 4000)?,
        tolerance: res.get("tolerance", args.tolerance, 1e-6)?,
        out_dir: res.output_dir(&args.common)?,
    };
    res.finish("stationary")?;
    let params = make_params(cfg.n, cfg.k)?;
    params.require_fully_nonlinear()?;
    require(cfg.radius.is_finite() && cfg.radius > 0.0, || {
        format!("radius must be positive, got {}", cfg.radius)
    })?;
    require(cfg.cells >= 4, || {
        format!("cells must be at least 4, got {}", cfg.cells)
    })?;
    require(cfg.ode_steps >= MIN_ODE_STEPS, || {
        format!(
            "ode_steps must be at least {MIN_ODE_STEPS}, got {}",
            cfg.ode_steps
        )
    })?;
    require(cfg.tolerance > 0.0, || "tolerance must be positive".into())?;

    let sol = solve_on_ball(cfg.radius, &params, cfg.cells, cfg.ode_steps)?;
    let ball = check_ball_bound(&sol, &params);
    let torsion = check_torsion_bound(&sol, &params);
    let passed = sol.residual <= cfg.tolerance && ball.satisfied && torsion.satisfied;
    let report = StationaryReport {
        n: cfg.n,
        k: cfg.k,
        radius: cfg.radius,
        r1: sol.crossing_radius,
        center_value: sol.center_value,
        boundary_slope: sol.boundary_slope,
        sup_norm: sol.sup_norm,
        residual: sol.residual,
        tolerance: cfg.tolerance,
        bounds: Bounds {
            ball: ball.bound_value,
            ball_ok: ball.satisfied,
            torsion: torsion.bound_value,
            torsion_ok: torsion.satisfied,
        },
        passed,
    };
    let dir = cfg.out_dir.join(format!(
        "stationary_n{}_k{}_R{}_m{}",
        cfg.n, cfg.k, cfg.radius, cfg.cells
    ));
    let grid = sol.profile.grid();
    write_csv(
        &dir.join("profile.csv"),
        &["r", "theta"],
        grid.nodes().zip(sol.profile.values()).map(|(r, &v)| vec![r, v]),
    )?;
    write_json(&dir.join("report.json"), &report)?;
    let code = if passed { EXIT_OK } else { EXIT_TOLERANCE };
    write_manifest(
        &dir,
        "stationary",
        &cfg,
        &["profile.csv", "report.json"],
        &[],
        code,
    )?;
    println!(
        "stationary n={} k={} R={} cells={}: residual {:.3e} (tol {:.1e}), sup {:.6e}, ball bound {}, torsion bound {}",
        cfg.n,
        cfg.k,
        cfg.radius,
        cfg.cells,
        sol.residual,
        cfg.tolerance,
        sol.sup_norm,
        verdict(ball.satisfied),
        verdict(torsion.satisfied)
    );
    println!("wrote {}", dir.display());
    Ok(code)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

#[derive(Debug, Serialize)]
struct EvolveConfig {
    n: usize,
    k: usize,
    radius: f64,
    cells: usize,
    ode_steps: usize,
    t_end: f64,
    cfl_safety: f64,
    init: String,
    scheme: String,
    out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct EvolveReport {
    n: usize,
    k: usize,
    init: String,
    /// Perturbation amplitude after clipping to admissibility.
    perturbation_used: Option<f64>,
    t_end: f64,
    steps: u64,
    fitted_slope: Option<f64>,
    max_sup_gap: f64,
    t_lower0: f64,
    t_upper0: f64,
    c1: f64,
    c2: f64,
    sandwich_violations: usize,
    bracket_violations: usize,
    mass_strictly_decreasing: bool,
    passed: bool,
}

fn cmd_evolve(args: EvolveArgs) -> Result<u8, CliError> {
    let mut res = Resolver::new(&args.common)?;
    let n = res.get("n", args.n, 3)?;
    let k = res.get("k", args.k, 2)?;
    let radius = res.get("radius", args.radius, 1.0)?;
    let init = res.get("init", args.init, InitSpec::Theta)?;
    let cells_opt = res.opt("cells", args.cells)?;
    let ode_steps = res.get("ode_steps", args.ode_steps, 4000)?;
    let t_end = res.get("t_end", args.t_end, 1000.0)?;
    let cfl_safety = res.get("cfl_safety", args.cfl_safety, 0.5)?;
    let scheme = res.get("scheme", args.scheme, SchemeName(TimeScheme::SspRk3))?;
    let out_dir = res.output_dir(&args.common)?;
    res.finish("evolve")?;

    let params = make_params(n, k)?;
    params.require_fully_nonlinear()?;
    let file_data = match &init {
        InitSpec::File(path) => Some(crate::io::read_profile_column(path)?),
        InitSpec::Barenblatt(_) | InitSpec::Generic => {
            return Err(usage(format!(
                "initial data '{init}' applies to whole-space runs only (barenblatt --evolve-free)"
            )))
        }
        InitSpec::Scaled(s) => {
            require(*s > 0.0 && s.is_finite(), || {
                format!("scale must be positive, got {s}")
            })?;
            None
        }
        InitSpec::Perturbed(a) => {
            require((0.0..1.0).contains(a), || {
                format!("perturbation amplitude must lie in [0, 1), got {a}")
            })?;
            None
        }
        InitSpec::Theta => None,
    };
    let cells = match (&file_data, cells_opt) {
        (Some(v), Some(c)) if v.len() != c + 1 => {
            return Err(usage(format!(
                "{init} holds {} values but cells = {c} needs {}",
                v.len(),
                c + 1
            )))
        }
        (Some(v), _) => v.len().saturating_sub(1),
        (None, c) => c.unwrap_or(128),
    };
    require(cells >= 4, || format!("cells must be at least 4, got {cells}"))?;
    require(radius.is_finite() && radius > 0.0, || {
        format!("radius must be positive, got {radius}")
    })?;
    require(t_end.is_finite() && t_end > 0.0, || {
        format!("t_end must be positive, got {t_end}")
    })?;
    require(cfl_safety > 0.0 && cfl_safety <= 1.0, || {
        format!("cfl_safety must lie in (0, 1], got {cfl_safety}")
    })?;
    require(ode_steps >= MIN_ODE_STEPS, || {
        format!("ode_steps must be at least {MIN_ODE_STEPS}, got {ode_steps}")
    })?;
    let cfg = EvolveConfig {
        n,
        k,
        radius,
        cells,
        ode_steps,
        t_end,
        cfl_safety,
        init: init.to_string(),
        scheme: scheme.to_string(),
        out_dir,
    };

    let sol = solve_on_ball(radius, &params, cells, ode_steps)?;
    let theta = discrete_stationary(&sol.profile, &params)?;
    let km1 = k as f64 - 1.0;
    let (u0, perturbation_used) = match &init {
        InitSpec::Theta => (theta.clone(), None),
        InitSpec::Scaled(s) => (theta.scaled(s.powf(-1.0 / km1)), None),
        InitSpec::Perturbed(a) => {
            let (u, used) = perturbed_initial(&theta, *a, &params)?;
            (u, Some(used))
        }
        InitSpec::File(_) => (
            RadialProfile::new(*theta.grid(), file_data.unwrap_or_default())?,
            None,
        ),
        InitSpec::Barenblatt(_) | InitSpec::Generic => unreachable!("rejected above"),
    };
    let state = EvolutionState::new(u0, &params, cfl_safety)?;
    let mut decay = DecayConfig::new(theta, t_end);
    decay.scheme = scheme.0;
    let (_, diag) = evolve_to(&state, t_end, &params, &decay)?;

    let sandwich = diag.sandwich_violations();
    let decreasing = crate::evolution::strictly_decreasing(&diag.mass_series());
    let passed = sandwich == 0;
    let report = EvolveReport {
        n,
        k,
        init: cfg.init.clone(),
        perturbation_used,
        t_end,
        steps: diag.steps,
        fitted_slope: diag.fitted_slope,
        max_sup_gap: diag.samples.iter().map(|s| s.sup_gap).fold(0.0, f64::max),
        t_lower0: diag.envelope.t_lower0,
        t_upper0: diag.envelope.t_upper0,
        c1: diag.envelope.c1,
        c2: diag.envelope.c2,
        sandwich_violations: sandwich,
        bracket_violations: diag.bracket_violations(),
        mass_strictly_decreasing: decreasing,
        passed,
    };
    let label = cfg.init.replace([':', '/', '\\'], "-");
    let dir = cfg
        .out_dir
        .join(format!("evolve_n{n}_k{k}_R{radius}_m{cells}_{label}"));
    write_csv(
        &dir.join("diagnostics.csv"),
        &["t", "sup_gap", "mass", "T_lower", "T_upper"],
        diag.samples
            .iter()
            .map(|s| vec![s.t, s.sup_gap, s.mass, s.t_lower, s.t_upper]),
    )?;
    write_json(&dir.join("report.json"), &report)?;
    let code = if passed { EXIT_OK } else { EXIT_TOLERANCE };
    write_manifest(
        &dir,
        "evolve",
        &cfg,
        &["diagnostics.csv", "report.json"],
        &[],
        code,
    )?;
    let slope = diag.fitted_slope.map_or("n/a".to_string(), |s| format!("{s:.4}"));
    println!(
        "evolve n={n} k={k} init={} t_end={t_end}: {} steps, fitted slope {slope}, sandwich violations {sandwich}, mass decreasing {decreasing}",
        cfg.init, diag.steps
    );
    println!("wrote {}", dir.display());
    Ok(code)
}

#[derive(Debug, Serialize)]
struct BarenblattConfig {
    n: usize,
    k: usize,
    #[serde(rename = "C")]
    c: Option<f64>,
    mass: Option<f64>,
    times: Vec<f64>,
    samples: usize,
    quad_points: usize,
    evolve_free: bool,
    init: String,
    free_cells: usize,
    t_start: f64,
    t_end: f64,
    out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct FreeSummary {
    init: String,
    gap_decreasing: bool,
    first_gap: f64,
    last_gap: f64,
    mass_drift: f64,
    steps: u64,
}

#[derive(Debug, Serialize)]
struct BarenblattReport {
    n: usize,
    k: usize,
    #[serde(rename = "C")]
    c: f64,
    #[serde(rename = "M")]
    mass: f64,
    r0: f64,
    /// `|r0(M)/r0 - 1|` when the run was specified by mass.
    mass_round_trip: Option<f64>,
    profile_ode_residual: f64,
    radial_fd_residual: f64,
    pde_fd_residual: f64,
    residual_max: f64,
    mass_drift: f64,
    support_slope: f64,
    beta: f64,
    passed: bool,
    /// Exploratory; never affects the exit code.
    free_run: Option<FreeSummary>,
}

/// Checks of one family member: profile ODE, radial and PDE finite-difference
/// residuals, mass in time, support exponent.
fn barenblatt_checks(
    sol: &BarenblattSolution,
    quad_points: usize,
) -> Result<(f64, f64, f64, f64, f64), Error> {
    let edge = sol.profile().edge();
    let samples: Vec<f64> = (1..=100)
        .map(|i| edge * (0.005 + 0.99 * i as f64 / 101.0))
        .collect();
    let ode = profile_ode_residual(sol, &samples)?;
    let inner: Vec<f64> = (1..=40).map(|i| edge * (0.05 + 0.9 * i as f64 / 41.0)).collect();
    let radial = radial_equation_residual(sol, &inner, 1e-3 * edge)?;
    let mut points = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        let et = sol.support_radius(t)?;
        points.extend((1..=20).map(|i| (t, et * (0.05 + 0.85 * i as f64 / 21.0))));
    }
    let pde = pde_residual(sol, &points, 5e-4, 1e-3 * edge)?;
    let mut drift = 0.0f64;
    for t in [1e-2, 1e-1, 1.0, 10.0, 1e2] {
        drift = drift.max((mass_at(sol, t, quad_points)? / sol.mass - 1.0).abs());
    }
    let times = [1.0, 10.0, 100.0];
    let radii = times
        .iter()
        .map(|&t| sol.support_radius(t))
        .collect::<Result<Vec<_>, _>>()?;
    let slope = loglog_slope(&times, &radii)?;
    Ok((ode, radial, pde, drift, slope))
}

fn cmd_barenblatt(args: BarenblattArgs) -> Result<u8, CliError> {
    let mut res = Resolver::new(&args.common)?;
    let n = res.get("n", args.n, 3)?;
    let k = res.get("k", args.k, 2)?;
    let c_flag = res.opt("c", args.c)?;
    let mass_flag = res.opt("mass", args.mass)?;
    let times = res.get("times", args.times, FloatList(vec![0.5, 1.0, 2.0]))?;
    let samples = res.get("samples", args.samples, 201)?;
    let quad_points = res.get("quad_points", args.quad_points, 100_000)?;
    let free = res.switch("evolve_free", args.evolve_free)?;
    let init = res.get("init", args.init, InitSpec::Generic)?;
    let free_cells = res.get("free_cells", args.free_cells, 400)?;
    let t_start = res.get("t_start", args.t_start, 1.0)?;
    let t_end = res.get("t_end", args.t_end, 100.0)?;
    let out_dir = res.output_dir(&args.common)?;
    res.finish("barenblatt")?;

    let params = make_params(n, k)?;
    params.require_fully_nonlinear()?;
    let sol = match (c_flag, mass_flag) {
        (Some(_), Some(_)) => return Err(usage("set either C or mass, not both")),
        (_, Some(m)) => {
            require(m > 0.0 && m.is_finite(), || {
                format!("mass must be positive, got {m}")
            })?;
            BarenblattSolution::from_mass(&params, m)?
        }
        (c, None) => {
            let c = c.unwrap_or(1.0);
            require(c > 0.0 && c.is_finite(), || {
                format!("C must be positive, got {c}")
            })?;
            BarenblattSolution::new(&params, c)?
        }
    };
    require(
        !times.0.is_empty() && times.0.iter().all(|&t| t > 0.0 && t.is_finite()),
        || format!("times must be positive, got {times}"),
    )?;
    require(samples >= 2, || {
        format!("samples must be at least 2, got {samples}")
    })?;
    require(quad_points >= 100, || {
        format!("quad_points must be at least 100, got {quad_points}")
    })?;
    if free {
        require(
            matches!(init, InitSpec::Generic | InitSpec::Barenblatt(_)),
            || format!("free runs take generic or barenblatt:C initial data, got '{init}'"),
        )?;
        require(t_start > 0.0 && t_end > t_start && t_end.is_finite(), || {
            format!("need 0 < t_start < t_end, got {t_start} and {t_end}")
        })?;
        require(free_cells >= 16, || {
            format!("free_cells must be at least 16, got {free_cells}")
        })?;
    }
    let cfg = BarenblattConfig {
        n,
        k,
        c: c_flag,
        mass: mass_flag,
        times: times.0.clone(),
        samples,
        quad_points,
        evolve_free: free,
        init: init.to_string(),
        free_cells,
        t_start,
        t_end,
        out_dir,
    };

    let (ode, radial, pde, mass_drift, support_slope) = barenblatt_checks(&sol, quad_points)?;
    let beta = params.beta;
    let mass_round_trip = match mass_flag {
        Some(m) => Some((r0_of_mass(m, &params)? / sol.r0 - 1.0).abs()),
        None => None,
    };
    let passed = ode <= 1e-10
        && radial <= 1e-6
        && pde <= 1e-6
        && mass_drift <= 1e-8
        && (support_slope - beta).abs() <= 1e-12
        && mass_round_trip.map_or(true, |e| e <= 1e-6);

    let mut outputs = vec!["profile.csv", "report.json"];
    let dir = cfg.out_dir.join(format!("barenblatt_n{n}_k{k}_C{}", sol.c));
    let free_run = if free {
        let (grid, u0) = match init {
            InitSpec::Barenblatt(c0) => {
                let start = BarenblattSolution::new(&params, c0)?;
                let grid = RadialGrid::new(1.6 * start.support_radius(t_end)?, free_cells)?;
                (grid, start.sample(t_start, grid)?)
            }
            _ => {
                let grid = free_grid(&params, t_end, free_cells)?;
                (grid, generic_free_data(&params, grid)?)
            }
        };
        debug_assert_eq!(*u0.grid(), grid);
        let rep = evolve_free(&u0, &params, &FreeEvolutionConfig::new(t_start, t_end))?;
        write_csv(
            &dir.join("free.csv"),
            &[
                "t",
                "rescaled_gap",
                "mass",
                "support_radius",
                "barenblatt_support",
            ],
            rep.samples.iter().map(|s| {
                vec![
                    s.t,
                    s.rescaled_gap,
                    s.mass,
                    s.support_radius,
                    s.barenblatt_support,
                ]
            }),
        )?;
        outputs.push("free.csv");
        Some(FreeSummary {
            init: cfg.init.clone(),
            gap_decreasing: rep.gap_decreasing(),
            first_gap: rep.samples.first().map_or(f64::NAN, |s| s.rescaled_gap),
            last_gap: rep.samples.last().map_or(f64::NAN, |s| s.rescaled_gap),
            mass_drift: rep.mass_drift,
            steps: rep.steps,
        })
    } else {
        None
    };

    let mut rows = Vec::new();
    for &t in &times.0 {
        let edge = sol.support_radius(t)?;
        let r_max = 1.1 * edge;
        for i in 0..samples {
            let r = r_max * i as f64 / (samples - 1) as f64;
            rows.push(vec![t, r, sol.value(t, r)?]);
        }
    }
    write_csv(&dir.join("profile.csv"), &["t", "r", "u"], rows)?;
    let report = BarenblattReport {
        n,
        k,
        c: sol.c,
        mass: sol.mass,
        r0: sol.r0,
        mass_round_trip,
        profile_ode_residual: ode,
        radial_fd_residual: radial,
        pde_fd_residual: pde,
        residual_max: ode.max(radial).max(pde),
        mass_drift,
        support_slope,
        beta,
        passed,
        free_run,
    };
    write_json(&dir.join("report.json"), &report)?;
    let code = if passed { EXIT_OK } else { EXIT_TOLERANCE };
    write_manifest(&dir, "barenblatt", &cfg, &outputs, &[], code)?;
    println!(
        "barenblatt n={n} k={k} C={:.6e} M={:.6e} r0={:.6e}: residual max {:.1e}, mass drift {:.1e}, support slope {:.15} (beta {:.15}){}",
        sol.c,
        sol.mass,
        sol.r0,
        report.residual_max,
        mass_drift,
        support_slope,
        beta,
        mass_round_trip.map_or(String::new(), |e| format!(", r0(M) round trip {e:.1e}"))
    );
    if let Some(f) = &report.free_run {
        println!(
            "free run ({}): rescaled gap {:.3e} -> {:.3e}, decreasing {}, mass drift {:.1e}",
            f.init, f.first_gap, f.last_gap, f.gap_decreasing, f.mass_drift
        );
    }
    println!("wrote {}", dir.display());
    Ok(code)
}

#[derive(Debug, Serialize)]
struct VerifyAllConfig {
    fast: bool,
    jobs: usize,
    out_dir: PathBuf,
}

fn cmd_verify_all(args: VerifyAllArgs) -> Result<u8, CliError> {
    let mut res = Resolver::new(&args.common)?;
    let cfg = VerifyAllConfig {
        fast: res.switch("fast", args.fast)?,
        jobs: res.get("jobs", args.jobs, 0)?,
        out_dir: res.output_dir(&args.common)?,
    };
    res.finish("verify-all")?;
    let verify = if cfg.fast {
        VerifyConfig::fast()
    } else {
        VerifyConfig::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| usage(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let report = pool.install(|| run_all(&verify));
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let failures = report.failures();
    println!("{failures} gating criteria failed");
    let dir = cfg.out_dir.join(if cfg.fast { "verify_fast" } else { "verify" });
    write_json(&dir.join("summary.json"), &report)?;
    let code = u8::try_from(failures).unwrap_or(u8::MAX);
    write_manifest(
        &dir,
        "verify-all",
        &cfg,
        &["summary.json"],
        &report.config.relaxations,
        code,
    )?;
    println!("wrote {}", dir.display());
    Ok(code)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Stationary(a) => cmd_stationary(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Barenblatt(a) => cmd_barenblatt(a),
        Command::VerifyAll(a) => cmd_verify_all(a),
    }
}

/// Parses `args` (including the program name), runs, reports errors on
/// stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_reports_line_and_field() {
        let err = ConfigFile::parse("n = 3\n# comment\ncells 12\n", "run.cfg").unwrap_err();
        assert_eq!(
            err.to_string(),
            "run.cfg:3: expected `key = value`, found `cells 12`"
        );
        let err = ConfigFile::parse("n = 3\nN = 4\n", "run.cfg").unwrap_err();
        assert!(
            err.to_string().starts_with("run.cfg:2: field `n`: duplicate"),
            "{err}"
        );
    }

    #[test]
    fn bad_value_names_the_field() {
        let mut res = Resolver {
            file: ConfigFile::parse("k = 2\ncells = many\n", "x.cfg").unwrap(),
        };
        let err = res.get::<usize>("cells", None, 8).unwrap_err();
        assert!(
            err.to_string()
                .starts_with("x.cfg:2: field `cells`: invalid value `many`"),
            "{err}"
        );
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn flags_override_file_and_leftovers_are_unknown() {
        let mut res = Resolver {
            file: ConfigFile::parse("n = 4\nt-end = 10\nbogus = 1\n", "x.cfg").unwrap(),
        };
        assert_eq!(res.get("n", Some(5usize), 3).unwrap(), 5);
        assert_eq!(res.get("t_end", None, 1.0).unwrap(), 10.0);
        let err = res.finish("evolve").unwrap_err();
        assert_eq!(err.to_string(), "x.cfg:3: unknown field `bogus` for `evolve`");
    }

    #[test]
    fn init_selectors_round_trip() {
        for s in [
            "theta",
            "scaled:2",
            "perturbed:0.2",
            "barenblatt:1.5",
            "file:data/u0.csv",
            "generic",
        ] {
            assert_eq!(s.parse::<InitSpec>().unwrap().to_string(), s);
        }
        assert!("scaled:x".parse::<InitSpec>().is_err());
        assert!("gaussian".parse::<InitSpec>().is_err());
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(
            CliError::from(Error::StationaryRequiresK2(1)).exit_code(),
            EXIT_USAGE
        );
        assert_eq!(
            CliError::from(Error::Invariant("x".into())).exit_code(),
            EXIT_INVARIANT
        );
        let e = Error::NoConvergence {
            iterations: 3,
            residual: 1.0,
        };
        assert_eq!(CliError::from(e).exit_code(), EXIT_TOLERANCE);
    }
}
