//! Open-loop dive: a constant stern-plane moment pitches the nose down and
//! the vehicle descends at surge speed.
use auv_depth::dynamics::{ControlInput, Vehicle, VehicleState};

fn main() -> auv_depth::Result<()> {
    let v = Vehicle::default();
    let mut s = VehicleState::at_depth(2.0);
    let u = ControlInput::new(0.0, -2.0);
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}", "t", "z", "theta", "w", "q");
    for k in 0..=200 {
        if k % 20 == 0 {
            println!("{:>5.1} {:>8.3} {:>8.4} {:>8.4} {:>8.4}", k as f64 * 0.1, s.z, s.theta, s.w, s.q);
        }
        s = v.step(&s, u, [0.0; 2], 0.1)?;
    }
    Ok(())
}
