//! Run configuration: a TOML or JSON file, overridden field by field by
//! command-line flags.

use std::path::{Path, PathBuf};

use bachflow::flow::FlowOptions;
use bachflow::soliton::SearchRegion;
use bachflow::{BracketTensor, MetricSpec, TriBracket};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Overrides the default output directory (flags and config files win).
pub const OUT_DIR_ENV: &str = "BACHFLOW_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "bachflow-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Flow,
    Normalized,
    Soliton,
    Verify,
    Sweep,
}

/// Initial data: a point of the slice, a full bracket, or a bracket with an
/// inner product (metric flow).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Tri(TriBracket),
    Bracket(BracketTensor),
    Metric { bracket: BracketTensor, metric: MetricSpec },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<Mode>,
    pub initial: Option<Initial>,
    /// `flow` only: integrate all 24 components even for slice data.
    pub full: bool,
    pub t_end: f64,
    pub options: FlowOptions,
    pub output: OutputConfig,
    pub seed: u64,
    pub grid: usize,
    pub starts: usize,
    pub region: SearchRegion,
    /// `sweep` only: number of seeded initial points when `points` is empty.
    pub count: usize,
    pub points: Vec<TriBracket>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: None,
            initial: None,
            full: false,
            t_end: 10.0,
            options: FlowOptions::default(),
            output: OutputConfig::default(),
            seed: 42,
            grid: 10,
            starts: 400,
            region: SearchRegion::default(),
            count: 16,
            points: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn mode(&self) -> Result<Mode, Failure> {
        self.subcommand.ok_or_else(|| Failure::Config("no subcommand given on the command line or in the config".into()))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::Config(m));
        let o = &self.options;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(o.rtol > 0.0 && o.atol > 0.0) {
            return bad(format!("tolerances must be positive, got rtol {} atol {}", o.rtol, o.atol));
        }
        if o.h_max.is_some_and(|h| !(h > 0.0)) || o.sample_dt.is_some_and(|h| !(h > 0.0)) {
            return bad("h_max and sample_dt must be positive".into());
        }
        if !(o.conv_tol > 0.0) || o.conv_window == 0 {
            return bad("conv_tol and conv_window must be positive".into());
        }
        if self.grid == 0 || self.starts == 0 || (self.count == 0 && self.points.is_empty()) {
            return bad("grid, starts and count must be positive".into());
        }
        let mode = self.mode()?;
        if matches!(mode, Mode::Flow | Mode::Normalized) && self.initial.is_none() {
            return bad("initial data missing: give --a --b --c, --bracket, or `initial` in the config".into());
        }
        if mode == Mode::Normalized && !matches!(self.initial, Some(Initial::Tri(_))) {
            return bad("normalized flow needs slice data (a, b, c)".into());
        }
        Ok(())
    }

    /// Output directory: flag or config file, then the environment, then
    /// the default.
    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

#[derive(Debug, Parser)]
#[command(name = "bachflow", version, about = "Bach flow on four-dimensional nilpotent Lie groups")]
pub struct Cli {
    /// TOML or JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the bracket flow (reduced, full, or metric formulation).
    Flow(FlowArgs),
    /// Integrate the norm-fixing normalized flow.
    Normalized(NormalizedArgs),
    /// Multistart soliton search and certification.
    Soliton(SolitonArgs),
    /// Closed forms against the curvature oracle on a grid.
    Verify(VerifyArgs),
    /// Reduced flow from many initial points in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Default, Args)]
pub struct InitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// JSON file with a full bracket, `{"entries": [[i, j, k, value], ...]}`.
    #[arg(long, conflicts_with_all = ["a", "b", "c"])]
    pub bracket: Option<PathBuf>,
    /// JSON file with a Gram matrix, `{"gram": [[...], ...]}`; selects the
    /// metric flow.
    #[arg(long)]
    pub metric: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct IntegrationArgs {
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    /// Uniform sampling step of the CSV output.
    #[arg(long)]
    pub sample_dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub init: InitArgs,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    /// Integrate all 24 bracket components.
    #[arg(long)]
    pub full: bool,
    /// Full flow without the gauge correction.
    #[arg(long)]
    pub ungauged: bool,
}

#[derive(Debug, Args)]
pub struct NormalizedArgs {
    #[command(flatten)]
    pub init: InitArgs,
    #[command(flatten)]
    pub integration: IntegrationArgs,
    /// Rescale the initial point to norm 2.
    #[arg(long)]
    pub rescale: bool,
    #[arg(long)]
    pub stop_on_convergence: bool,
    #[arg(long)]
    pub conv_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolitonArgs {
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub a_min: Option<f64>,
    #[arg(long)]
    pub a_max: Option<f64>,
    #[arg(long)]
    pub c_min: Option<f64>,
    #[arg(long)]
    pub c_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Lattice points per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub integration: IntegrationArgs,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_integration(cfg: &mut RunConfig, args: &IntegrationArgs) {
    set(&mut cfg.t_end, args.t_end);
    set(&mut cfg.options.rtol, args.rtol);
    set(&mut cfg.options.atol, args.atol);
    if args.h_max.is_some() {
        cfg.options.h_max = args.h_max;
    }
    if args.sample_dt.is_some() {
        cfg.options.sample_dt = args.sample_dt;
    }
}

fn apply_init(cfg: &mut RunConfig, args: &InitArgs) -> Result<(), Failure> {
    let mut bracket = match &args.bracket {
        Some(path) => Some(read_json::<BracketTensor>(path)?),
        None => None,
    };
    if args.a.is_some() || args.b.is_some() || args.c.is_some() {
        let base = match &cfg.initial {
            Some(Initial::Tri(p)) => Some(*p),
            _ => None,
        };
        let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
            flag.or(from).ok_or_else(|| Failure::Config(format!("--{name} missing (no value in the config either)")))
        };
        let a = pick(args.a, base.map(|p| p.a), "a")?;
        let b = pick(args.b, base.map(|p| p.b), "b")?;
        let c = pick(args.c, base.map(|p| p.c), "c")?;
        let p = TriBracket::new(a, b, c).map_err(|e| Failure::Config(e.to_string()))?;
        if args.metric.is_some() {
            bracket = Some(p.embed());
        } else {
            cfg.initial = Some(Initial::Tri(p));
        }
    }
    if let Some(path) = &args.metric {
        let metric: MetricSpec = read_json(path)?;
        let bracket = match (bracket, &cfg.initial) {
            (Some(b), _) => b,
            (None, Some(Initial::Tri(p))) => p.embed(),
            (None, Some(Initial::Bracket(b) | Initial::Metric { bracket: b, .. })) => b.clone(),
            (None, None) => return Err(Failure::Config("--metric needs a bracket".into())),
        };
        cfg.initial = Some(Initial::Metric { bracket, metric });
    } else if let Some(b) = bracket {
        cfg.initial = Some(Initial::Bracket(b));
    }
    Ok(())
}

/// Merges the config file (if any) with the command-line flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.out.is_some() {
        cfg.output.dir = cli.out.clone();
    }
    match &cli.command {
        None => {}
        Some(Command::Flow(args)) => {
            cfg.subcommand = Some(Mode::Flow);
            apply_init(&mut cfg, &args.init)?;
            apply_integration(&mut cfg, &args.integration);
            cfg.full |= args.full || args.ungauged;
            if args.ungauged {
                cfg.options.gauged = false;
            }
        }
        Some(Command::Normalized(args)) => {
            cfg.subcommand = Some(Mode::Normalized);
            apply_init(&mut cfg, &args.init)?;
            apply_integration(&mut cfg, &args.integration);
            cfg.options.rescale_to_norm2 |= args.rescale;
            cfg.options.stop_on_convergence |= args.stop_on_convergence;
            set(&mut cfg.options.conv_tol, args.conv_tol);
        }
        Some(Command::Soliton(args)) => {
            cfg.subcommand = Some(Mode::Soliton);
            set(&mut cfg.starts, args.starts);
            set(&mut cfg.region.a.0, args.a_min);
            set(&mut cfg.region.a.1, args.a_max);
            set(&mut cfg.region.c.0, args.c_min);
            set(&mut cfg.region.c.1, args.c_max);
        }
        Some(Command::Verify(args)) => {
            cfg.subcommand = Some(Mode::Verify);
            set(&mut cfg.grid, args.grid);
            set(&mut cfg.seed, args.seed);
        }
        Some(Command::Sweep(args)) => {
            cfg.subcommand = Some(Mode::Sweep);
            set(&mut cfg.count, args.count);
            set(&mut cfg.seed, args.seed);
            apply_integration(&mut cfg, &args.integration);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
