use std::path::PathBuf;
use std::process::ExitCode;

use bimodal_cli::config::{Complex, ScheduleConfig, Truncation};
use bimodal_cli::{exit_code, run, CliError, Experiment, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bimodal", version, about = "Entangled coherent states in a driven bimodal cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// ECS at t_g: mode-A Wigner grid and checks against direct evolution
    Ecs,
    /// Trajectory dump under a chosen generator
    Evolve,
    /// Mode-A linear entropy for 1..N atoms
    Entropy,
    /// Wigner snapshots at t = tau_mu/k
    Wigner,
    /// Timescales for the experimental presets
    Feasibility,
    /// Exact against effective dynamics and regime checks
    Validate,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Ecs => Experiment::Ecs,
            Command::Evolve => Experiment::Evolve,
            Command::Entropy => Experiment::Entropy,
            Command::Wigner => Experiment::Wigner,
            Command::Feasibility => Experiment::Feasibility,
            Command::Validate => Experiment::Validate,
        }
    }
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// TOML config; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fock cutoff per mode: an integer or "auto"
    #[arg(long, global = true)]
    n_max: Option<Truncation>,
    /// Mode-A coherent amplitude, e.g. 3 or 1+2i
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Mode-B coherent amplitude
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, global = true)]
    r: Option<u64>,
    #[arg(long, global = true)]
    s: Option<u64>,
    /// Number of atoms
    #[arg(long, global = true)]
    atoms: Option<usize>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; recorded in the metadata
    #[arg(long, global = true)]
    seed: Option<u32>,
    /// Read plain Hz literals as rad/s
    #[arg(long, global = true)]
    angular: Option<bool>,
}

fn configure(cli: &Cli) -> Result<RunConfig, CliError> {
    let kind = Experiment::from(cli.command);
    let f = &cli.flags;
    let mut cfg = match &f.config {
        Some(path) => RunConfig { kind, ..RunConfig::load(path)? },
        None => RunConfig::preset(kind),
    };
    if let Some(out) = &f.out {
        cfg.output.dir = out.clone();
    }
    if let Some(n) = f.n_max {
        cfg.truncation.n_max_a = n;
        cfg.truncation.n_max_b = n;
    }
    if let Some(a) = &f.alpha {
        cfg.state.alpha = Complex::Literal(a.clone());
    }
    if let Some(b) = &f.beta {
        cfg.state.beta = Complex::Literal(b.clone());
    }
    if f.r.is_some() || f.s.is_some() {
        let current = cfg.schedule.unwrap_or(ScheduleConfig { r: 2, s: 3 });
        cfg.schedule = Some(ScheduleConfig { r: f.r.unwrap_or(current.r), s: f.s.unwrap_or(current.s) });
    }
    if let Some(n) = f.atoms {
        cfg.params.n_atoms = n;
    }
    if let Some(seed) = f.seed {
        cfg.seed = Some(seed);
    }
    if let Some(angular) = f.angular {
        cfg.angular = angular;
    }
    if let Some(threads) = f.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = configure(&cli).and_then(|cfg| run(&cfg));
    match &result {
        Ok(summary) => {
            for file in &summary.files {
                println!("wrote {file}");
            }
            for a in &summary.assertions {
                println!("[{}] {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
