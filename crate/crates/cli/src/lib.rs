//! Command-line front end: argument parsing, config resolution and dispatch.
//!
//! Precedence for every setting is: built-in default, then the `--config`
//! JSON file, then command-line flags. The output directory additionally
//! falls back to `$SENSORALLOC_OUT` when neither file nor flag sets it.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sensoralloc::tuning::Bounds;
use sensoralloc::{SpeedPrior, UncertaintyWeights};

use crate::config::{parse_list, parse_prior, Format, OptimalMode, RunConfig, OUT_DIR_ENV};
use crate::error::{CliError, EXIT_CONFIG, EXIT_OK};
use crate::output::Sink;

#[derive(Debug, Parser)]
#[command(
    name = "sensoralloc",
    version,
    about = "Uncertainty-driven allocation of motion sensors"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory [default: $SENSORALLOC_OUT or ./sensoralloc-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Weights l1,l2,l3,l4 of U = l1*S + l2/S + l3*T + l4/T.
    #[arg(long, global = true, allow_hyphen_values = true, value_name = "L1,L2,L3,L4")]
    pub lambda: Option<String>,
    /// Samples per grid axis.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// T range of the grid.
    #[arg(long, global = true, allow_hyphen_values = true, value_name = "LO,HI")]
    pub t_range: Option<String>,
    /// S range of the grid.
    #[arg(long, global = true, allow_hyphen_values = true, value_name = "LO,HI")]
    pub s_range: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log-speed bandwidth of the speed affinity.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Weight of the environmental penalty, in units of u_min.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub penalty_gain: Option<f64>,
    /// Output formats.
    #[arg(long, global = true, value_delimiter = ',')]
    pub formats: Option<Vec<Format>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uncertainty field over the grid.
    Surface,
    /// Closed-form global minimum.
    Minimum,
    /// Equivalence contours of the uncertainty field.
    Contours {
        /// Absolute levels [default: multiples of u_min].
        #[arg(long, allow_hyphen_values = true, value_name = "U1,U2,...")]
        levels: Option<String>,
    },
    /// Coupling / tradeoff regime labels.
    Regimes {
        #[arg(long, allow_hyphen_values = true, value_name = "U1,U2,...")]
        levels: Option<String>,
    },
    /// Local, integral or blended optimal set.
    OptimalSet {
        #[arg(long, value_enum)]
        mode: Option<OptimalMode>,
        #[arg(long, allow_hyphen_values = true)]
        ve: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Sensitivity map under a speed prior.
    Sensitivity {
        /// delta:V | lognormal:MU,SIGMA | hist:V=W,... | JSON
        #[arg(long, value_parser = parse_prior)]
        prior: Option<SpeedPrior>,
    },
    /// Adaptation change map 100 * a / b between two priors.
    Adapt {
        #[arg(long, value_parser = parse_prior)]
        prior_a: Option<SpeedPrior>,
        #[arg(long, value_parser = parse_prior)]
        prior_b: Option<SpeedPrior>,
    },
    /// Maximal-sensitivity set under a speed prior.
    Maxset {
        #[arg(long, value_parser = parse_prior)]
        prior: Option<SpeedPrior>,
    },
    /// Stochastic tuning of a sensor population.
    Simulate {
        #[arg(long)]
        sensors: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        gain: Option<f64>,
        /// Stimulus environment shaping the drift.
        #[arg(long, value_parser = parse_prior)]
        environment: Option<SpeedPrior>,
        #[arg(long)]
        bins: Option<usize>,
        /// T and S bounds of the population.
        #[arg(long, allow_hyphen_values = true, value_name = "LO,HI")]
        bounds: Option<String>,
    },
    /// Replica expansion of a cosine over a Gaussian sampler.
    Expand {
        #[arg(long, allow_hyphen_values = true)]
        omega0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        width: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        half_range: Option<f64>,
    },
    /// Emulation of one Gaussian sampler by replicas of another.
    Emulate {
        #[arg(long, allow_hyphen_values = true)]
        target_width: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        base_width: Option<f64>,
        #[arg(long)]
        harmonics: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        half_range: Option<f64>,
    },
    /// Entropy checks behind the additive uncertainty model.
    EntropyCheck {
        #[arg(long)]
        joints: Option<usize>,
        #[arg(long)]
        sigmas: Option<usize>,
    },
    /// Runs every figure pipeline into one subdirectory each.
    ReproduceFigures {
        /// Also run the stochastic-tuning simulation.
        #[arg(long)]
        with_simulation: bool,
    },
    /// Prints the effective configuration as JSON.
    PrintConfig,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Surface => "surface",
            Command::Minimum => "minimum",
            Command::Contours { .. } => "contours",
            Command::Regimes { .. } => "regimes",
            Command::OptimalSet { .. } => "optimal-set",
            Command::Sensitivity { .. } => "sensitivity",
            Command::Adapt { .. } => "adapt",
            Command::Maxset { .. } => "maxset",
            Command::Simulate { .. } => "simulate",
            Command::Expand { .. } => "expand",
            Command::Emulate { .. } => "emulate",
            Command::EntropyCheck { .. } => "entropy-check",
            Command::ReproduceFigures { .. } => "reproduce-figures",
            Command::PrintConfig => "print-config",
        }
    }
}

fn list(field: &str, text: &str, len: Option<usize>) -> Result<Vec<f64>, CliError> {
    let v = parse_list(text).map_err(|e| CliError::config(field, e))?;
    match len {
        Some(n) if v.len() != n => Err(CliError::config(field, format!("expected {n} values, got {}", v.len()))),
        _ => Ok(v),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Applies command-line overrides on top of `cfg`.
pub fn apply_flags(cfg: &mut RunConfig, cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    if let Some(text) = &c.lambda {
        let v = list("lambda", text, Some(4))?;
        // validated later, so that the message names lambda positivity
        cfg.weights = UncertaintyWeights {
            s_loc: v[0],
            s_freq: v[1],
            t_loc: v[2],
            t_freq: v[3],
        };
    }
    if let Some(n) = c.grid_n {
        cfg.grid.n_t = n;
        cfg.grid.n_s = n;
    }
    if let Some(text) = &c.t_range {
        let v = list("grid.t", text, Some(2))?;
        (cfg.grid.t_min, cfg.grid.t_max) = (v[0], v[1]);
    }
    if let Some(text) = &c.s_range {
        let v = list("grid.s", text, Some(2))?;
        (cfg.grid.s_min, cfg.grid.s_max) = (v[0], v[1]);
    }
    set(&mut cfg.seed, c.seed);
    set(&mut cfg.model.beta, c.beta);
    set(&mut cfg.model.penalty_gain, c.penalty_gain);
    set(&mut cfg.output.formats, c.formats.clone());
    if let Some(dir) = &c.out {
        cfg.output.dir = Some(dir.clone());
    }

    match &cli.command {
        Command::Contours { levels } | Command::Regimes { levels } => {
            if let Some(text) = levels {
                cfg.levels = Some(list("levels", text, None)?);
            }
        }
        Command::OptimalSet {
            mode,
            ve,
            gamma,
            samples,
        } => {
            set(&mut cfg.optimal.mode, *mode);
            set(&mut cfg.optimal.v_e, *ve);
            set(&mut cfg.optimal.gamma, *gamma);
            set(&mut cfg.optimal.t_samples, *samples);
        }
        Command::Sensitivity { prior } | Command::Maxset { prior } => set(&mut cfg.prior, prior.clone()),
        Command::Adapt { prior_a, prior_b } => {
            set(&mut cfg.prior_a, prior_a.clone());
            set(&mut cfg.prior_b, prior_b.clone());
        }
        Command::Simulate {
            sensors,
            epochs,
            gain,
            environment,
            bins,
            bounds,
        } => {
            let p = &mut cfg.simulation;
            set(&mut p.n_sensors, *sensors);
            set(&mut p.epochs, *epochs);
            set(&mut p.gain, *gain);
            set(&mut p.density_bins, *bins);
            if environment.is_some() {
                p.environment = environment.clone();
            }
            if let Some(text) = bounds {
                let v = list("simulation.bounds", text, Some(2))?;
                p.bounds = Bounds {
                    t_lo: v[0],
                    t_hi: v[1],
                    s_lo: v[0],
                    s_hi: v[1],
                };
            }
        }
        Command::Expand {
            omega0,
            width,
            points,
            half_range,
        } => {
            let x = &mut cfg.expansion;
            set(&mut x.omega0, *omega0);
            set(&mut x.base_width, *width);
            set(&mut x.n_points, *points);
            set(&mut x.half_range, *half_range);
        }
        Command::Emulate {
            target_width,
            base_width,
            harmonics,
            points,
            half_range,
        } => {
            let x = &mut cfg.expansion;
            set(&mut x.target_width, *target_width);
            set(&mut x.base_width, *base_width);
            set(&mut x.n_harmonics, *harmonics);
            set(&mut x.n_points, *points);
            set(&mut x.emulation_half_range, *half_range);
        }
        Command::EntropyCheck { joints, sigmas } => {
            set(&mut cfg.entropy.n_joints, *joints);
            set(&mut cfg.entropy.n_sigmas, *sigmas);
        }
        Command::Surface | Command::Minimum | Command::ReproduceFigures { .. } | Command::PrintConfig => {}
    }
    Ok(())
}

/// Builds the resolved, validated configuration for a parsed command line.
pub fn effective_config(cli: &Cli, env_out: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_flags(&mut cfg, cli)?;
    cfg.resolve(env_out);
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    if let Command::PrintConfig = cli.command {
        print!("{}", cfg.to_json());
        return Ok(());
    }
    let mut sink = Sink::create(&cfg.out_dir(), cfg)?;
    let summary = match &cli.command {
        Command::Surface => commands::surface(cfg, &mut sink)?,
        Command::Minimum => commands::minimum(cfg, &mut sink)?,
        Command::Contours { .. } => commands::contours(cfg, &mut sink)?,
        Command::Regimes { .. } => commands::regimes(cfg, &mut sink)?,
        Command::OptimalSet { .. } => commands::optimal_set(cfg, &mut sink)?,
        Command::Sensitivity { .. } => commands::sensitivity(cfg, &mut sink)?,
        Command::Adapt { .. } => commands::adapt(cfg, &mut sink)?,
        Command::Maxset { .. } => commands::maxset(cfg, &mut sink)?,
        Command::Simulate { .. } => commands::simulate(cfg, &mut sink)?,
        Command::Expand { .. } => commands::expand(cfg, &mut sink)?,
        Command::Emulate { .. } => commands::emulate(cfg, &mut sink)?,
        Command::EntropyCheck { .. } => commands::entropy_check(cfg, &mut sink)?,
        Command::ReproduceFigures { with_simulation } => commands::reproduce_figures(cfg, &mut sink, *with_simulation)?,
        Command::PrintConfig => unreachable!(),
    };
    sink.finish(cli.command.name(), cfg, &summary)?;
    Ok(())
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code. `env_out` stands in for `$SENSORALLOC_OUT`.
pub fn run_with_env<I, T>(args: I, env_out: Option<PathBuf>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = effective_config(&cli, env_out).and_then(|cfg| {
        let threads = cli.common.threads.unwrap_or(0);
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| execute(&cli, &cfg)),
            Err(e) => Err(CliError::config("threads", e.to_string())),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with_env`] reading `$SENSORALLOC_OUT` from the process environment.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}
