//! Short constant-depth training run. Pass the episode count as the first
//! argument (default 20); the full default run uses the configured count.
use auv_depth::dynamics::Vehicle;
use auv_depth::env::{DepthEnv, EnvConfig};
use auv_depth::metrics::{compute_metrics, MetricsConfig};
use auv_depth::trainer::{evaluate, Trainer, TrainerConfig};

fn main() -> auv_depth::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let cfg = TrainerConfig {
        episodes,
        ..TrainerConfig::default()
    };
    let env = DepthEnv::new(Vehicle::default(), EnvConfig::constant_depth())?;
    let mut eval_env = env.clone();
    let mut trainer = Trainer::new(env, cfg)?;
    trainer.train()?;
    for e in trainer.trace().episodes.iter().step_by((episodes / 10).max(1)) {
        println!(
            "episode {:>4}: J {:>9.1}  td loss {:.4}  eval J {}",
            e.episode,
            e.j,
            e.td_loss,
            e.eval_j.map_or("-".into(), |j| format!("{j:.1}"))
        );
    }
    let (j, rollouts) = evaluate(trainer.best_actor(), &mut eval_env, &[0], 0.99)?;
    let m = compute_metrics(&rollouts[0].to_record(0.1), &MetricsConfig::default())?;
    println!(
        "best actor: J {j:.1}  SSE {:.4} m  overshoot {:.4} m  RT {:?} s",
        m.sse_z, m.overshoot_z, m.rt_z
    );
    Ok(())
}
