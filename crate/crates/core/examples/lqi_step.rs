//! LQI gain on the linearized plant, then the 2 m -> 8 m step on the
//! nonlinear simulator.
use auv_depth::baselines::lqi::{solve_lqi, LinearPlant};
use auv_depth::config::ExperimentConfig;
use auv_depth::experiments::lqi_rollout;
use auv_depth::metrics::compute_metrics;

fn main() -> auv_depth::Result<()> {
    let cfg = ExperimentConfig::default();
    let gain = solve_lqi(&LinearPlant::remus(), &cfg.lqi)?;
    println!("Riccati residual {:.2e}", gain.residual);
    println!("K_chi =\n{}K_eps =\n{}", gain.k_chi, gain.k_eps);
    let mut env = cfg.env()?;
    let rollout = lqi_rollout(&cfg, &mut env, 0)?;
    let m = compute_metrics(&rollout.to_record(cfg.env.dt), &cfg.metrics)?;
    println!(
        "SSE {:.4} m  overshoot {:.4} m  RT {:?} s  J {:.1}",
        m.sse_z, m.overshoot_z, m.rt_z, m.long_term_cost
    );
    Ok(())
}
