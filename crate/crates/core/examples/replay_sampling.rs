//! Priority-proportional sampling from the replay cache.
use auv_depth::dynamics::ControlInput;
use auv_depth::replay::{ReplayCache, SamplingMode, Transition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> auv_depth::Result<()> {
    let mut cache = ReplayCache::new(8, 1, SamplingMode::Prioritized)?;
    let tds = [0.5, -1.0, 2.0, 4.0];
    for (k, td) in tds.iter().enumerate() {
        let t = Transition {
            s: vec![k as f64],
            u: ControlInput::new(0.0, 0.0),
            c: 0.0,
            s_next: vec![k as f64],
            terminal: false,
        };
        cache.push_with_td(t, *td)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut picks = Vec::new();
    let draws = 100_000;
    cache.sample_indices(draws, &mut rng, &mut picks)?;
    let total = cache.total_priority();
    for e in cache.iter() {
        let n = picks.iter().filter(|&&i| i == e.index).count();
        println!(
            "entry {}: priority {:.3}  expected {:.4}  sampled {:.4}",
            e.index,
            e.priority,
            e.priority / total,
            n as f64 / draws as f64
        );
    }
    Ok(())
}
