//! `swm`: command-line front end for singular Weyl-Titchmarsh computations.
//!
//! Exit status: 0 ok, 1 a golden criterion failed, 2 configuration error,
//! 3 numerical failure, 4 violated precondition.

mod commands;
mod config;
mod model;

use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;
use swm_core::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "swm", version, about = "Singular Weyl functions, spectral measures and transforms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file; flags override its entries
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Set any configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
}

#[derive(Args)]
struct ModelArgs {
    /// bessel:l=V | bessel+coulomb:l=V,q1=V | soliton:A=V,v1=V | limitcircle:l=V | expr:Q | csv:PATH
    #[arg(long, allow_hyphen_values = true)]
    model: Option<String>,
    /// Anchor point c
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    /// Singularity strength for expr: and csv: potentials
    #[arg(long, allow_hyphen_values = true)]
    l: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Singular Weyl function on a complex grid, CSV re_z,im_z,re_M,im_M
    Mfun {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// ray:ANGLE,R0,R1,N | line:RE0,IM0,RE1,IM1,N | rect:RE0,RE1,NRE,IM0,IM1,NIM | list:RE,IM;...
        #[arg(long, allow_hyphen_values = true)]
        zgrid: Option<String>,
        /// `none` or `g=lambda` for the Herglotz rescaling
        #[arg(long, allow_hyphen_values = true)]
        gauge: Option<String>,
        /// Relative ODE tolerance
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<String>,
    },
    /// Dirichlet and Neumann eigenvalues on (a, c], CSV j,mu,nu
    Eig {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of eigenvalues of each kind
        #[arg(long, allow_hyphen_values = true)]
        count: Option<String>,
    },
    /// Spectral measure by Stieltjes inversion, CSV lambda,density plus JSON atoms
    Measure {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// LO,HI
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        /// Uniform grid size over the window
        #[arg(long, allow_hyphen_values = true)]
        npoints: Option<String>,
        /// Decreasing epsilon schedule, comma separated
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<String>,
    },
    /// Spectral transform of a test function: Parseval and round-trip report (JSON)
    Transform {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// indicator:LO,HI | csv:PATH
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        /// Cutoff in sqrt(lambda)
        #[arg(long, allow_hyphen_values = true)]
        wmax: Option<String>,
    },
    /// Generalized Nevanlinna classification (JSON)
    Nevanlinna {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Random seed for the kernel point sets
        #[arg(long, allow_hyphen_values = true)]
        seed: Option<String>,
    },
    /// Borg-Marchenko comparison of two potentials (JSON)
    Bm {
        #[command(flatten)]
        common: Common,
        /// First potential (model or expr:/csv: source)
        #[arg(long, allow_hyphen_values = true)]
        pot0: Option<String>,
        /// Second potential
        #[arg(long, allow_hyphen_values = true)]
        pot1: Option<String>,
        /// Claimed agreement radius
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        /// Slack in the decay threshold -2(c - eps)
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<String>,
        /// Singularity strength for expr: and csv: potentials
        #[arg(long, allow_hyphen_values = true)]
        l: Option<String>,
        /// Run the three reference cases instead
        #[arg(long)]
        examples: bool,
    },
    /// Pass/fail table over every acceptance criterion
    Golden {
        #[command(flatten)]
        common: Common,
        /// Comma separated criterion ids
        #[arg(long, allow_hyphen_values = true)]
        only: Option<String>,
    },
}

type Pairs = Vec<(&'static str, Option<String>)>;

fn model_pairs(m: ModelArgs) -> Pairs {
    vec![("model", m.model), ("c", m.c), ("l", m.l)]
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Mfun { .. } => "mfun",
            Cmd::Eig { .. } => "eig",
            Cmd::Measure { .. } => "measure",
            Cmd::Transform { .. } => "transform",
            Cmd::Nevanlinna { .. } => "nevanlinna",
            Cmd::Bm { .. } => "bm",
            Cmd::Golden { .. } => "golden",
        }
    }

    /// Module the subcommand drives, used to tag error messages.
    fn module(&self) -> &'static str {
        match self {
            Cmd::Mfun { .. } => "weyl",
            Cmd::Eig { .. } => "eigen",
            Cmd::Measure { .. } | Cmd::Transform { .. } => "spectral",
            Cmd::Nevanlinna { .. } => "nevanlinna",
            Cmd::Bm { .. } => "bm",
            Cmd::Golden { .. } => "golden",
        }
    }

    fn split(self) -> (Common, &'static [&'static str], Pairs, fn(&RunConfig) -> Result<i32>) {
        match self {
            Cmd::Mfun { common, model, zgrid, gauge, tol } => {
                let mut p = model_pairs(model);
                p.extend([("zgrid", zgrid), ("gauge", gauge), ("tol", tol)]);
                (common, commands::MFUN_KEYS, p, commands::mfun)
            }
            Cmd::Eig { common, model, count } => {
                let mut p = model_pairs(model);
                p.push(("count", count));
                (common, commands::EIG_KEYS, p, commands::eig)
            }
            Cmd::Measure { common, model, window, npoints, eps } => {
                let mut p = model_pairs(model);
                p.extend([("window", window), ("npoints", npoints), ("eps", eps)]);
                (common, commands::MEASURE_KEYS, p, commands::measure)
            }
            Cmd::Transform { common, model, f, wmax } => {
                let mut p = model_pairs(model);
                p.extend([("f", f), ("wmax", wmax)]);
                (common, commands::TRANSFORM_KEYS, p, commands::transform)
            }
            Cmd::Nevanlinna { common, model, seed } => {
                let mut p = model_pairs(model);
                p.push(("seed", seed));
                (common, commands::NEVANLINNA_KEYS, p, commands::nevanlinna)
            }
            Cmd::Bm { common, pot0, pot1, c, eps, l, examples } => {
                let p = vec![
                    ("pot0", pot0),
                    ("pot1", pot1),
                    ("c", c),
                    ("eps", eps),
                    ("l", l),
                    ("examples", examples.then(|| "true".to_string())),
                ];
                (common, commands::BM_KEYS, p, commands::bm)
            }
            Cmd::Golden { common, only } => (common, commands::GOLDEN_KEYS, vec![("only", only)], commands::golden),
        }
    }
}

fn build_config(common: &Common, allowed: &[&str], pairs: Pairs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p, allowed)?,
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim(), allowed)?;
    }
    if let Some(o) = &common.out {
        cfg.set("out", o, allowed)?;
    }
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, &v, allowed)?;
        }
    }
    Ok(cfg)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SWM_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Invalid(format!("SWM_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Numeric => 3,
        ErrorKind::Precondition => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, module) = (cli.cmd.name(), cli.cmd.module());
    let (common, allowed, pairs, run) = cli.cmd.split();
    let cfg = match init_threads().and_then(|_| build_config(&common, allowed, pairs)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("swm {name}: error[config]: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    match run(&cfg) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let tag = if e.kind() == ErrorKind::Config { "config" } else { module };
            eprintln!("swm {name}: error[{tag}]: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
