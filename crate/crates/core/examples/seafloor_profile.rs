//! Synthetic seafloor generation and the window observation it produces.
use auv_depth::dynamics::Vehicle;
use auv_depth::env::{DepthEnv, EnvConfig, ObservationKind};
use auv_depth::profile::{ReferenceProfile, SyntheticSeafloor};

fn main() -> auv_depth::Result<()> {
    let floor = SyntheticSeafloor::default().generate()?;
    let (lo, hi) = floor.depth_range();
    println!("{} samples over {:?} m, depth {lo:.2}..{hi:.2} m", floor.len(), floor.range());
    for x in [0.0, 50.0, 100.0, 150.0] {
        println!("depth at x = {x:>5}: {:.3} m", floor.depth_at(x)?);
    }
    let safe_offset = 5.0;
    let start = floor.depth_at(0.0)? - safe_offset;
    let cfg = EnvConfig {
        observation: ObservationKind::Window(3),
        reference: ReferenceProfile::Sampled(floor),
        safe_offset,
        start: auv_depth::dynamics::VehicleState::at_depth(start),
        ..EnvConfig::constant_depth()
    };
    let mut env = DepthEnv::new(Vehicle::default(), cfg)?;
    let obs = env.reset_eval()?;
    println!("window-3 observation at the start: {:?}", obs.values);
    Ok(())
}
