use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use auv_depth::config::ExperimentConfig;
use auv_depth::experiments::{self, Controller};
use auv_depth::Result;

#[derive(Parser)]
#[command(name = "auv-depth", version, about = "AUV depth control: NNDPG training and classical baselines")]
struct Cli {
    /// TOML experiment config; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an actor/critic pair on the configured task.
    Train,
    /// Evaluate a trained actor over the evaluation seeds.
    Evaluate {
        /// Actor checkpoint; defaults to `<out-dir>/train/actor.ckpt`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run a classical controller on the compare seeds.
    Baseline {
        #[arg(value_enum)]
        kind: BaselineKind,
    },
    /// NNDPG vs LQI vs NMPC on shared disturbance seeds.
    Compare,
    /// Train and evaluate one windowed policy per window size.
    WindowSweep,
    /// Write a synthetic seafloor profile CSV.
    GenSeafloor,
    /// Print the effective config as TOML.
    ShowConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Lqi,
    Nmpc,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    Ok(cfg)
}

fn fmt_rt(v: Option<f64>) -> String {
    v.map_or_else(|| "not reached".into(), |t| format!("{t:.2} s"))
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Train => {
            let out = experiments::run_train(&cfg)?;
            let m = out.eval;
            println!(
                "trained {} episodes -> {}",
                out.trace.episodes.len(),
                out.dir.display()
            );
            println!(
                "eval: J {:.2}  SSE(z) {:.4} m  overshoot(z) {:.4} m  RT(z) {}",
                m.long_term_cost,
                m.sse_z,
                m.overshoot_z,
                fmt_rt(m.rt_z)
            );
        }
        Command::Evaluate { checkpoint } => {
            let out = experiments::run_evaluate(&cfg, checkpoint.as_deref())?;
            let mut j = out.costs.clone();
            println!(
                "{} episodes, median J {:.2} -> {}",
                out.costs.len(),
                experiments::median(&mut j),
                out.dir.display()
            );
        }
        Command::Baseline { kind } => {
            let which = match kind {
                BaselineKind::Lqi => Controller::Lqi,
                BaselineKind::Nmpc => Controller::Nmpc,
            };
            for (seed, m) in cfg.compare.seeds.iter().zip(experiments::run_baseline(&cfg, which)?) {
                println!(
                    "{} seed {seed}: J {:.2}  SSE(z) {:.4}  overshoot(z) {:.4}  RT(z) {}",
                    which.name(),
                    m.long_term_cost,
                    m.sse_z,
                    m.overshoot_z,
                    fmt_rt(m.rt_z)
                );
            }
        }
        Command::Compare => {
            let out = experiments::run_compare(&cfg)?;
            println!(
                "{:<8}{:>10}{:>10}{:>12}{:>10}{:>10}{:>10}",
                "", "SSE(z)", "SSE(th)", "overshoot", "RT(z)", "RT(th)", "J"
            );
            for (c, m) in &out.medians {
                println!(
                    "{:<8}{:>10.4}{:>10.4}{:>12.4}{:>10.2}{:>10.2}{:>10.2}",
                    c.name(),
                    m.sse_z,
                    m.sse_theta,
                    m.overshoot_z,
                    m.rt_z,
                    m.rt_theta,
                    m.long_term_cost
                );
            }
            println!("medians over {} seeds -> {}", cfg.compare.seeds.len(), out.dir.display());
        }
        Command::WindowSweep => {
            let out = experiments::run_window_sweep(&cfg)?;
            for (w, _) in &out.samples {
                println!("window {w}: median J {:.2}", out.median_cost(*w).unwrap_or(f64::NAN));
            }
            println!("-> {}", out.dir.display());
        }
        Command::GenSeafloor => {
            let path = experiments::run_gen_seafloor(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
