//! Analytic critic and actor gradients against central differences.
use auv_depth::dynamics::{ControlBounds, ControlInput};
use auv_depth::nn::MlpParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> auv_depth::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let critic = MlpParams::critic(5, 2, &[16, 16, 8], &mut rng)?;
    let actor = MlpParams::actor(5, &[16, 8], ControlBounds::default(), &mut rng)?;
    let s = [-1.5, 0.9, 0.1, 0.2, -0.05];
    let u = actor.actor_forward(&s)?;
    let g = critic.critic_backward(&s, u)?;
    let du = g.input.clone().expect("critic exposes dQ/du");
    let h = 1e-6;
    for i in 0..2 {
        let mut up = u.as_array();
        let mut dn = u.as_array();
        up[i] += h;
        dn[i] -= h;
        let fd = (critic.critic_forward(&s, ControlInput::new(up[0], up[1]))?
            - critic.critic_forward(&s, ControlInput::new(dn[0], dn[1]))?)
            / (2.0 * h);
        println!("dQ/du{i}: analytic {:+.6e}  fd {:+.6e}", du[i], fd);
    }
    let chained = actor.actor_backward_chained(&s, [du[0], du[1]])?;
    let mut bumped = actor.clone();
    bumped.layers[0].weights[0] += h;
    let up = critic.critic_forward(&s, bumped.actor_forward(&s)?)?;
    bumped.layers[0].weights[0] -= 2.0 * h;
    let dn = critic.critic_forward(&s, bumped.actor_forward(&s)?)?;
    println!(
        "dQ(s, mu(s))/dW0[0]: analytic {:+.6e}  fd {:+.6e}",
        chained.weights[0][0],
        (up - dn) / (2.0 * h)
    );
    Ok(())
}
