//! Receding-horizon NMPC on the 2 m -> 8 m step.
use auv_depth::config::ExperimentConfig;
use auv_depth::experiments::nmpc_rollout;
use auv_depth::metrics::compute_metrics;

fn main() -> auv_depth::Result<()> {
    let cfg = ExperimentConfig::default();
    let mut env = cfg.env()?;
    let t0 = std::time::Instant::now();
    let rollout = nmpc_rollout(&cfg, &mut env, 0)?;
    let record = rollout.to_record(cfg.env.dt);
    for row in record.rows.iter().step_by(50).take(6) {
        println!("t {:>5.1}  z {:>6.3}  tau ({:>6.2}, {:>6.2})", row.t, row.z, row.tau1, row.tau2);
    }
    let m = compute_metrics(&record, &cfg.metrics)?;
    println!(
        "SSE {:.4} m  overshoot {:.4} m  RT {:?} s  J {:.1}  ({} solves in {:.1?})",
        m.sse_z,
        m.overshoot_z,
        m.rt_z,
        m.long_term_cost,
        record.rows.len() - 1,
        t0.elapsed()
    );
    Ok(())
}
