//! SSE, overshoot and response time of a synthetic damped step response.
use auv_depth::metrics::{compute_metrics, MetricsConfig, TrajectoryRecord, TrajectoryRow};

fn main() -> auv_depth::Result<()> {
    let dt = 0.01;
    let rows = (0..6001)
        .map(|k| {
            let t = k as f64 * dt;
            TrajectoryRow {
                t,
                x: 2.0 * t,
                z: 8.0 - 6.0 * (-0.5 * t).exp() * t.cos(),
                theta: 0.0,
                w: 0.0,
                q: 0.0,
                tau1: 0.0,
                tau2: 0.0,
                z_ref: 8.0,
                cost: 0.0,
            }
        })
        .collect();
    let m = compute_metrics(&TrajectoryRecord { rows }, &MetricsConfig::default())?;
    println!("SSE(z) {:.5} m", m.sse_z);
    println!("overshoot(z) {:.5} m", m.overshoot_z);
    println!("RT(z) {:?} s", m.rt_z);
    Ok(())
}
