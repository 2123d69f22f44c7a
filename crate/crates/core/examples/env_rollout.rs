//! One evaluation episode of the constant-depth MDP under a hand-written
//! proportional policy, printing observations and stage costs.
use auv_depth::dynamics::{ControlInput, Vehicle};
use auv_depth::env::{DepthEnv, EnvConfig};

fn main() -> auv_depth::Result<()> {
    let mut env = DepthEnv::new(Vehicle::default(), EnvConfig::constant_depth())?;
    let mut obs = env.reset_eval()?;
    println!("layout {:?}, first observation {:?}", obs.layout, obs.values);
    let mut total = 0.0;
    let mut discount = 1.0;
    loop {
        // obs = [dz, cos th, sin th, w, q]; pitch toward a depth-error
        // dependent attitude, nose down when too shallow.
        let v = &obs.values;
        let pitch_cmd = (0.1 * v[0]).clamp(-0.4, 0.4);
        let u = ControlInput::new(0.0, -20.0 * (v[2].asin() - pitch_cmd) - 10.0 * v[4]);
        let out = env.step(u)?;
        total += discount * out.cost;
        discount *= 0.99;
        if env.steps() % 100 == 0 {
            println!("step {:>4}: dz {:>7.3}  cost {:>8.4}", env.steps(), out.observation.values[0], out.cost);
        }
        obs = out.observation;
        if out.done {
            println!("done after {} steps (diverged: {}), J = {total:.2}", env.steps(), out.diverged);
            break;
        }
    }
    Ok(())
}
