//! `mplsqr`: run mixed-precision LSQR experiments, get precision advice,
//! and dump Picard diagnostics.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mplsqr::advisor::{self, ModelParams};
use mplsqr::experiment::{self, ExperimentConfig, RunSpec, PRESETS};
use mplsqr::problems::{picard_diagnostics, BlurParams, DecayType, ProblemInstance, ProblemKind};
use mplsqr::stopping::{StopRule, DEFAULT_TAU};

#[derive(Parser)]
#[command(
    name = "mplsqr",
    version,
    about = "Mixed-precision LSQR for ill-posed problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write curves, comparison and summary files.
    Run(RunArgs),
    /// Print the precision advice for a problem or a user-supplied model.
    Advise(AdviseArgs),
    /// Write the Picard diagnostics of a problem as CSV.
    Diagnose(ProblemArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Test problem: shaw, deriv2, gravity, heat, blur2d.
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Number of unknowns (pixels for blur2d).
    #[arg(long)]
    n: Option<usize>,
    /// Relative noise level ‖e‖/‖b_ex‖.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Gaussian PSF width for blur2d.
    #[arg(long, conflicts_with = "radius")]
    sigma: Option<f64>,
    /// Disk PSF radius for blur2d.
    #[arg(long)]
    radius: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ProblemArgs {
    fn blur(&self) -> Option<BlurParams> {
        match (self.sigma, self.radius) {
            (Some(sigma), _) => Some(BlurParams::Gaussian { sigma }),
            (_, Some(radius)) => Some(BlurParams::Disk { radius }),
            _ => None,
        }
    }

    fn instance(&self) -> Result<ProblemInstance> {
        let (Some(kind), Some(n)) = (self.problem, self.n) else {
            bail!("--problem and --n are required");
        };
        Ok(ProblemInstance::build(
            kind,
            n,
            self.blur(),
            self.eps,
            self.seed,
        )?)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Named preset (see --list-presets).
    #[arg(long, conflicts_with_all = ["config", "problem"])]
    preset: Option<String>,
    /// Image side for blur presets.
    #[arg(long, requires = "preset")]
    size: Option<usize>,
    /// TOML experiment description.
    #[arg(long, conflicts_with = "problem")]
    config: Option<PathBuf>,
    #[arg(long)]
    list_presets: bool,
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated configurations, e.g. `d,s+d,s+s,emu14+d`.
    #[arg(long, value_delimiter = ',')]
    configs: Option<Vec<String>>,
    /// Comma-separated stopping rules: dp, lcurve, optimal.
    #[arg(long, value_delimiter = ',')]
    stop: Option<Vec<StopRule>>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Disable full reorthogonalization.
    #[arg(long)]
    no_reorth: bool,
    /// Run every configuration for max_iter iterations.
    #[arg(long)]
    full: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct AdviseArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Rows of A, when supplying the model by hand.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// severe, moderate or mild.
    #[arg(long)]
    decay: Option<String>,
    /// ρ for severe decay, α otherwise.
    #[arg(long)]
    decay_param: Option<f64>,
    #[arg(long)]
    k_star: Option<usize>,
    #[arg(long, default_value_t = advisor::DEFAULT_SAFETY)]
    safety: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn run(args: RunArgs) -> Result<()> {
    if args.list_presets {
        for p in PRESETS {
            println!("{p}");
        }
        return Ok(());
    }
    let mut cfg = if let Some(name) = &args.preset {
        ExperimentConfig::preset(name, args.size)?
    } else if let Some(path) = &args.config {
        ExperimentConfig::load(path)?
    } else {
        let (Some(kind), Some(n)) = (args.problem, args.n) else {
            bail!("give --preset, --config, or --problem with --n");
        };
        ExperimentConfig::new(kind, n, 1e-3, 1)
    };
    if let Some(eps) = args.eps {
        cfg.eps = eps;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(labels) = &args.configs {
        cfg.configs = labels
            .iter()
            .map(|l| RunSpec::parse(l))
            .collect::<Result<_, _>>()?;
    }
    if let Some(rules) = &args.stop {
        cfg.rules = rules.clone();
    }
    cfg.tau = args
        .tau
        .unwrap_or(if cfg.tau > 1.0 { cfg.tau } else { DEFAULT_TAU });
    if let Some(k) = args.max_iter {
        cfg.max_iter = k;
    }
    if args.no_reorth {
        cfg.reorth = false;
    }
    if args.full {
        cfg.run_length = mplsqr::lsqr::RunLength::Full;
    }
    if cfg.out_dir.is_none() || args.out.as_os_str() != "out" {
        cfg.out_dir = Some(args.out.clone());
    }
    cfg.validate()?;
    if args.dump_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let out = experiment::run_experiment(&cfg)?;
    print!("{out}");
    Ok(())
}

fn advise(args: AdviseArgs) -> Result<()> {
    let report = if let Some(beta) = args.beta {
        let m = args
            .m
            .or(args.problem.n)
            .context("--m is required with --beta")?;
        let decay = match args.decay.as_deref() {
            Some("severe") => DecayType::Severe,
            Some("moderate") => DecayType::Moderate,
            Some("mild") => DecayType::Mild,
            other => bail!("--decay must be severe, moderate or mild, got {other:?}"),
        };
        let model = ModelParams {
            beta,
            rho0: f64::NAN,
            decay_type: decay,
            decay_param: args.decay_param.context("--decay-param is required")?,
            k_star: args.k_star.unwrap_or(1),
            reliable: true,
        };
        advisor::advise(args.problem.eps, m, &model, args.safety)?
    } else {
        let inst = args.problem.instance()?;
        let diag = picard_diagnostics(&inst)?;
        advisor::advise_from_diagnostics(inst.eps(), inst.m(), &diag, args.safety)?
    };
    let text = if args.json {
        serde_json::to_string_pretty(&report)? + "\n"
    } else {
        format!("seed={}\n{report}", args.problem.seed)
    };
    emit(args.problem.out.as_ref(), text.as_bytes())
}

fn diagnose(args: ProblemArgs) -> Result<()> {
    let inst = args.instance()?;
    let diag = picard_diagnostics(&inst)?;
    let mut buf = Vec::new();
    experiment::write_picard(&mut buf, &diag)?;
    eprintln!(
        "{} n={} eps={:e} seed={}: k* = {}, beta = {:.4}, decay {} ({:.4})",
        inst.name(),
        inst.n(),
        inst.eps(),
        inst.seed(),
        diag.k_star,
        diag.beta_model,
        diag.decay_type.name(),
        diag.decay_param
    );
    emit(args.out.as_ref(), &buf)
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            );
            w.write_all(bytes)?;
            w.flush()?;
        }
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Advise(a) => advise(a),
        Command::Diagnose(a) => diagnose(a),
    }
}
