//! Command-line frontend: parses flags and config files, runs one command
//! and writes its CSV tables and manifest.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Failure, Report};
use crate::config::{RawConfig, RunConfig};
use crate::output::{Artifacts, Manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Default output directory when neither `--out` nor the environment
/// variable is given.
pub const DEFAULT_OUT: &str = "semidisk-out";

#[derive(Debug, Parser)]
#[command(name = "semidisk", version, about = "Semiclassical experiments on the unit disk")]
pub struct Cli {
    /// `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "SEMIDISK_OUT")]
    pub out: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    #[arg(long)]
    pub e_cut: Option<String>,
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long = "T")]
    pub t_final: Option<String>,
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dirichlet eigenmode ψ_{n,k}: zero, norm and radial profile.
    Eigen {
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<String>,
    },
    /// Orbit of the interpolating flow on the torus of angle π·alpha0.
    Billiard {
        #[arg(long)]
        alpha0: Option<String>,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        theta: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Galerkin evolution of a random state: norm and energy over time.
    Evolve {
        #[arg(long)]
        decay: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Husimi density of a datum on a resolving phase-space grid.
    Husimi {
        #[arg(long)]
        datum: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact moment-map image of |c|² of a datum.
    Pushforward {
        #[arg(long)]
        datum: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Split of the moment measure by rational incidence angle.
    Decompose {
        #[arg(long)]
        datum: Option<String>,
        #[arg(long)]
        q_max: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Effective dynamics on a rational torus.
    Floquet {
        #[arg(long)]
        alpha0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<String>,
        #[arg(long)]
        cutoff: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Observability quotients of a family against regions and arcs.
    Observe {
        /// Repeatable; descriptors may also be joined with `;`.
        #[arg(long)]
        region: Vec<String>,
        #[arg(long)]
        family: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the invariant suite; exits 3 on any breach.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eigen { .. } => "eigen",
            Self::Billiard { .. } => "billiard",
            Self::Evolve { .. } => "evolve",
            Self::Husimi { .. } => "husimi",
            Self::Pushforward { .. } => "pushforward",
            Self::Decompose { .. } => "decompose",
            Self::Floquet { .. } => "floquet",
            Self::Observe { .. } => "observe",
            Self::Selftest => "selftest",
        }
    }

    /// Flag values as config keys.
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut add = |k: &'static str, x: &Option<String>| {
            if let Some(x) = x {
                v.push((k, x.clone()));
            }
        };
        let common = match self {
            Self::Eigen { n, k, sign } => {
                add("n", n);
                add("k", k);
                add("sign", sign);
                None
            }
            Self::Billiard { alpha0, tau, theta, common } => {
                add("alpha0", alpha0);
                add("tau", tau);
                add("theta", theta);
                Some(common)
            }
            Self::Evolve { decay, common } => {
                add("decay", decay);
                Some(common)
            }
            Self::Husimi { datum, common } | Self::Pushforward { datum, common } => {
                add("datum", datum);
                Some(common)
            }
            Self::Decompose { datum, q_max, common } => {
                add("datum", datum);
                add("q_max", q_max);
                Some(common)
            }
            Self::Floquet { alpha0, omega, cutoff, common } => {
                add("alpha0", alpha0);
                add("omega", omega);
                add("cutoff", cutoff);
                Some(common)
            }
            Self::Observe { region, family, common } => {
                if !region.is_empty() {
                    add("region", &Some(region.join(";")));
                }
                add("family", family);
                Some(common)
            }
            Self::Selftest => None,
        };
        if let Some(c) = common {
            add("e_cut", &c.e_cut);
            add("potential", &c.potential);
            add("seed", &c.seed);
            add("T", &c.t_final);
            add("h", &c.h);
            add("steps", &c.steps);
        }
        v
    }
}

/// Builds the validated configuration from file, `--set` and flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        raw.load(path)?;
    }
    for s in &cli.set {
        let Some((k, v)) = s.split_once('=') else {
            return Err(Failure::Config(format!("--set expects KEY=VALUE, got {s:?}")));
        };
        raw.set(k.trim(), v)?;
    }
    for (k, v) in cli.command.overrides() {
        raw.set(k, &v)?;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(RunConfig::new(raw, out)?)
}

pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Report, Failure> {
    match command {
        Command::Eigen { .. } => commands::eigen(cfg),
        Command::Billiard { .. } => commands::billiard(cfg),
        Command::Evolve { .. } => commands::evolve(cfg),
        Command::Husimi { .. } => commands::husimi_cmd(cfg),
        Command::Pushforward { .. } => commands::pushforward(cfg),
        Command::Decompose { .. } => commands::decompose(cfg),
        Command::Floquet { .. } => commands::floquet(cfg),
        Command::Observe { .. } => commands::observe(cfg),
        Command::Selftest => commands::selftest(cfg),
    }
}

/// Config, versions, tolerances and summary scalars; no timestamps.
fn manifest(command: &str, cfg: &RunConfig, rep: &Report) -> Manifest {
    let mut m = Manifest::default();
    m.set("command", command);
    m.set("semidisk_version", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.raw.entries() {
        m.set(format!("config.{k}"), v);
    }
    for (k, v) in cfg.tolerance_entries() {
        m.num(format!("tolerance.{k}"), v);
    }
    for line in rep.summary.render().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            m.set(format!("result.{k}"), v);
        }
    }
    m.set("status", if rep.breach.is_some() { "validation_failed" } else { "ok" });
    m
}

/// Runs one invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => return report_failure(e),
    };
    let name = cli.command.name();
    let rep = match execute(&cli.command, &cfg) {
        Ok(r) => r,
        Err(e) => return report_failure(e),
    };
    let written = (|| -> std::io::Result<()> {
        let art = Artifacts::new(&cfg.out_dir, name)?;
        for (suffix, t) in &rep.tables {
            art.table(suffix.as_deref(), t)?;
        }
        art.manifest(&manifest(name, &cfg, &rep))?;
        Ok(())
    })();
    if let Err(e) = written {
        return report_failure(Failure::Io(e));
    }
    match &rep.breach {
        Some(msg) => {
            eprintln!("validation failed: {msg}");
            EXIT_VALIDATION
        }
        None => EXIT_OK,
    }
}

fn report_failure(e: Failure) -> i32 {
    match e {
        Failure::Config(msg) => {
            eprintln!("configuration error: {msg}");
            EXIT_CONFIG
        }
        Failure::Validation(msg) => {
            eprintln!("validation failed: {msg}");
            EXIT_VALIDATION
        }
        Failure::Io(err) => {
            eprintln!("i/o error: {err}");
            EXIT_IO
        }
    }
}
