use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use fepkit::env::ProtectionMode;
use fepkit::harness::{self, Config, EpisodeSummary, LoadedAgent};

#[derive(Parser)]
#[command(name = "fepkit", version, about = "Flight-envelope-protection workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: runs/<command>).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Trim for level flight at the configured Mach and altitude.
    Trim {
        #[command(flatten)]
        common: Common,
    },
    /// Fly one scenario.
    Fly {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: String,
        /// Overrides the scenario's mode.
        #[arg(long)]
        mode: Option<ProtectionMode>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train a DDPG agent.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_episodes: Option<usize>,
    },
    /// Constant-command Monte Carlo sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Defaults to rl with a checkpoint, classical otherwise.
        #[arg(long)]
        mode: Option<ProtectionMode>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Constant roll command held through every run, deg/s.
        #[arg(long)]
        p_cmd: Option<f64>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Plot an episode log or a sweep table.
    Plot {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
    },
    /// Regenerate a run from its manifest and compare the outputs.
    Rerun {
        #[command(flatten)]
        common: Common,
        manifest: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn out_dir(common: &Common, name: &str) -> PathBuf {
    common.out_dir.clone().unwrap_or_else(|| Path::new("runs").join(name))
}

fn load_agent(path: Option<&Path>) -> Result<Option<LoadedAgent>> {
    path.map(|p| LoadedAgent::load(p).with_context(|| format!("loading checkpoint {}", p.display()))).transpose()
}

fn print_summary(s: &EpisodeSummary) {
    println!("steps            {}", s.steps);
    println!("alpha range      [{:.2}, {:.2}] deg", s.min_alpha, s.max_alpha);
    println!("nz range         [{:.2}, {:.2}] g", s.min_nz, s.max_nz);
    println!("max |q|          {:.2} deg/s", s.max_abs_q);
    let [a, n, q] = s.longest_violation;
    println!("longest beyond   alpha {a:.2} s, nz {n:.2} s, q {q:.2} s");
    println!("tracking rms     {:.3} deg/s", s.tracking_rms);
    println!("total reward     {:.2}", s.total_reward);
    println!("termination      {}", s.termination.as_deref().unwrap_or("none"));
    println!("verdict          {}", if s.failed { "FAIL" } else { "pass" });
}

/// Returns whether everything passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Trim { common } => {
            let config = load_config(common.config.as_deref())?;
            let dir = out_dir(&common, "trim");
            let (t, _) = harness::run_trim(&config, &dir)?;
            println!("mach {:.3} altitude {:.1} m airspeed {:.2} m/s", t.mach, t.altitude, t.airspeed);
            println!("alpha {:.4} deg tail {:.4} deg throttle {:.4} thrust {:.1} N", t.alpha_deg, t.tail_deg, t.throttle, t.thrust);
            println!("residuals {:.3e} {:.3e} {:.3e} after {} iterations", t.residuals[0], t.residuals[1], t.residuals[2], t.iterations);
            println!("wrote {}", dir.display());
            Ok(true)
        }
        Command::Fly { common, scenario, mode, checkpoint } => {
            let config = load_config(common.config.as_deref())?;
            let agent = load_agent(checkpoint.as_deref())?;
            let dir = out_dir(&common, &scenario);
            let (outcome, manifest) = harness::run_fly(&config, &scenario, mode, agent.as_ref(), &dir)?;
            if let harness::RunSpec::Fly { mode, .. } = manifest.run {
                println!("scenario {scenario} ({})", mode.name());
            }
            print_summary(&outcome.summary);
            println!("wrote {}", dir.display());
            Ok(!outcome.summary.failed)
        }
        Command::Train { common, seed, max_episodes } => {
            let mut config = load_config(common.config.as_deref())?;
            if let Some(n) = max_episodes {
                config.training.max_episodes = n;
            }
            let seed = seed.unwrap_or(config.training.seed);
            config.training.seed = seed;
            let dir = out_dir(&common, &format!("train-seed{seed}"));
            let (report, _) = harness::run_train(&config, seed, &dir)?;
            println!(
                "{} episodes, final average {:.2}, stop reached: {}",
                report.episodes, report.final_average, report.reached_stop
            );
            println!("checkpoint {} (parameters {})", report.checkpoint.display(), &report.parameter_hash[..16]);
            Ok(true)
        }
        Command::Sweep { common, mode, checkpoint, p_cmd, jobs } => {
            let mut config = load_config(common.config.as_deref())?;
            if let Some(p) = p_cmd {
                config.sweep.p_cmd = p;
            }
            let agent = load_agent(checkpoint.as_deref())?;
            let mode = mode.unwrap_or(if agent.is_some() { ProtectionMode::Rl } else { ProtectionMode::Classical });
            let dir = out_dir(&common, "sweep");
            let (result, _) = harness::run_sweep(&config, mode, agent.as_ref(), jobs, &dir)?;
            println!(
                "{} mode, p_cmd {} deg/s: {}/{} passed ({:.1}%)",
                mode.name(),
                config.sweep.p_cmd,
                result.passed(),
                result.rows.len(),
                100.0 * result.pass_rate()
            );
            for f in result.failures() {
                println!(
                    "  FAIL q_cmd {:+.1}: beyond alpha {:.2} s, nz {:.2} s, q {:.2} s, termination {}",
                    f.q_cmd, f.longest_alpha, f.longest_nz, f.longest_q, f.termination
                );
            }
            println!("wrote {}", dir.display());
            Ok(result.passed() == result.rows.len())
        }
        Command::Plot { common, input } => {
            let config = load_config(common.config.as_deref())?;
            let dir = common.out_dir.clone().unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).to_path_buf());
            let (files, _) = harness::run_plot(&config, &input, &dir)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        Command::Rerun { common, manifest } => {
            let dir = out_dir(&common, "rerun");
            let report = harness::rerun(&manifest, &dir)?;
            for o in &report.original.outputs {
                let status = if report.mismatches.contains(&o.path) { "DIFFERS" } else { "identical" };
                println!("{:<24} {status}", o.path);
            }
            Ok(report.identical())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
