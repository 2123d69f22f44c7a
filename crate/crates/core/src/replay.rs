//! Experience cache with priority-proportional sampling.
//!
//! Priorities live in a sum tree whose internal nodes are always recomputed
//! from their two children, so the root never drifts from the leaf sum.

use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::dynamics::ControlInput;
use crate::error::{Error, Result};
use crate::nn::MlpParams;

pub const DEFAULT_PRIORITY_FLOOR: f64 = 1e-3;
pub const DEFAULT_CAPACITY: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub u: ControlInput,
    pub c: f64,
    pub s_next: Vec<f64>,
    /// Episode ended by the divergence guard: no bootstrap from `s_next`.
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub transition: Transition,
    pub priority: f64,
    /// Global insertion counter, stable across ring wrap-around.
    pub index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    #[default]
    Prioritized,
    /// Every priority pinned to the floor.
    Uniform,
}

/// Binary sum tree over a fixed number of leaves.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.leaves + leaf]
    }

    pub fn set(&mut self, leaf: usize, value: f64) {
        let mut i = self.leaves + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative interval contains `r`, for `r` in `[0, total)`.
    /// Never returns a zero-weight leaf while the total is positive.
    pub fn find(&self, mut r: f64) -> usize {
        let mut i = 1;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            let right = self.nodes[2 * i + 1];
            if r < left || right <= 0.0 {
                i *= 2;
            } else {
                r -= left;
                i = 2 * i + 1;
            }
        }
        i - self.leaves
    }
}

/// TD error `c + gamma * Q(s', mu(s')) - Q(s, u)`, dropping the bootstrap
/// for terminal transitions.
pub fn td_error(critic: &MlpParams, actor: &MlpParams, gamma: f64, t: &Transition) -> Result<f64> {
    let q = critic.critic_forward(&t.s, t.u)?;
    let y = if t.terminal {
        t.c
    } else {
        let u_next = actor.actor_forward(&t.s_next)?;
        t.c + gamma * critic.critic_forward(&t.s_next, u_next)?
    };
    Ok(y - q)
}

#[derive(Debug, Clone)]
pub struct ReplayCache {
    capacity: usize,
    obs_dim: usize,
    floor: f64,
    mode: SamplingMode,
    slots: Vec<Option<Experience>>,
    tree: SumTree,
    next_index: u64,
    len: usize,
}

impl ReplayCache {
    pub fn new(capacity: usize, obs_dim: usize, mode: SamplingMode) -> Result<Self> {
        Self::with_floor(capacity, obs_dim, mode, DEFAULT_PRIORITY_FLOOR)
    }

    pub fn with_floor(capacity: usize, obs_dim: usize, mode: SamplingMode, floor: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParams("replay capacity must be >= 1".into()));
        }
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "priority floor must be positive, got {floor}"
            )));
        }
        Ok(Self {
            capacity,
            obs_dim,
            floor,
            mode,
            slots: vec![None; capacity],
            tree: SumTree::new(capacity),
            next_index: 0,
            len: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn total_priority(&self) -> f64 {
        self.tree.total()
    }

    /// Priority assigned to a TD error under the current mode.
    pub fn priority_for(&self, td: f64) -> f64 {
        match self.mode {
            SamplingMode::Prioritized => td.abs() + self.floor,
            SamplingMode::Uniform => self.floor,
        }
    }

    fn slot_of(&self, index: u64) -> Option<usize> {
        let oldest = self.next_index - self.len as u64;
        if index < oldest || index >= self.next_index {
            return None;
        }
        Some((index % self.capacity as u64) as usize)
    }

    pub fn get(&self, index: u64) -> Option<&Experience> {
        self.slot_of(index).and_then(|s| self.slots[s].as_ref())
    }

    /// Oldest-first iteration.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let oldest = self.next_index - self.len as u64;
        (oldest..self.next_index).filter_map(move |i| self.get(i))
    }

    /// Stores a transition with priority `|td| + floor`, evicting the oldest
    /// entry when full. Returns the insertion index.
    pub fn push_with_td(&mut self, t: Transition, td: f64) -> Result<u64> {
        if t.s.len() != self.obs_dim || t.s_next.len() != self.obs_dim {
            return Err(Error::Shape {
                context: "replay observation width".into(),
                expected: self.obs_dim,
                actual: if t.s.len() != self.obs_dim {
                    t.s.len()
                } else {
                    t.s_next.len()
                },
            });
        }
        if !td.is_finite() {
            return Err(Error::NonFinite {
                what: "TD error".into(),
                component: "replay push".into(),
                value: td,
            });
        }
        let index = self.next_index;
        let slot = (index % self.capacity as u64) as usize;
        let priority = self.priority_for(td);
        self.slots[slot] = Some(Experience {
            transition: t,
            priority,
            index,
        });
        self.tree.set(slot, priority);
        self.next_index += 1;
        self.len = (self.len + 1).min(self.capacity);
        Ok(index)
    }

    /// Stores a transition, computing its TD error from the current networks.
    pub fn push(
        &mut self,
        t: Transition,
        critic: &MlpParams,
        actor: &MlpParams,
        gamma: f64,
    ) -> Result<u64> {
        if t.s.len() != self.obs_dim {
            return Err(Error::Shape {
                context: "replay observation width".into(),
                expected: self.obs_dim,
                actual: t.s.len(),
            });
        }
        let td = td_error(critic, actor, gamma, &t)?;
        self.push_with_td(t, td)
    }

    /// `n` independent draws with replacement, each proportional to priority.
    /// Writes insertion indices into `out`.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<u64>) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Replay("cannot sample from an empty cache".into()));
        }
        out.clear();
        let total = self.tree.total();
        for _ in 0..n {
            let r = rng.gen::<f64>() * total;
            let slot = self.tree.find(r);
            let e = self.slots[slot]
                .as_ref()
                .ok_or_else(|| Error::Replay(format!("sum tree selected empty slot {slot}")))?;
            out.push(e.index);
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<(&Experience, u64)>> {
        let mut idx = Vec::with_capacity(n);
        self.sample_indices(n, rng, &mut idx)?;
        Ok(idx
            .into_iter()
            .map(|i| (self.get(i).expect("sampled index is live"), i))
            .collect())
    }

    /// Sets priorities to `|td| + floor`; evicted or unknown indices are skipped.
    pub fn refresh(&mut self, indices: &[u64], td_errors: &[f64]) {
        for (&i, &td) in indices.iter().zip(td_errors) {
            if !td.is_finite() {
                continue;
            }
            let p = self.priority_for(td);
            if let Some(slot) = self.slot_of(i) {
                if let Some(e) = self.slots[slot].as_mut() {
                    e.priority = p;
                    self.tree.set(slot, p);
                }
            }
        }
    }

    /// Binary dump: text header then per entry `index` (u64), `s`, `u`, `c`,
    /// `s_next`, `terminal`, `priority`, all little-endian.
    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        out.extend_from_slice(
            format!(
                "AUVREPLAY 1\nobs_dim {}\ncount {}\ndata f64le\n",
                self.obs_dim, self.len
            )
            .as_bytes(),
        );
        for e in self.iter() {
            let t = &e.transition;
            out.extend_from_slice(&e.index.to_le_bytes());
            let scalars = t
                .s
                .iter()
                .copied()
                .chain([t.u.tau1, t.u.tau2, t.c])
                .chain(t.s_next.iter().copied())
                .chain([if t.terminal { 1.0 } else { 0.0 }, e.priority]);
            for v in scalars {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&out).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(c: f64) -> Transition {
        Transition {
            s: vec![c; 2],
            u: ControlInput::ZERO,
            c,
            s_next: vec![0.0; 2],
            terminal: false,
        }
    }

    #[test]
    fn single_item_always_returned() {
        let mut cache = ReplayCache::new(4, 2, SamplingMode::Prioritized).unwrap();
        let i = cache.push_with_td(tr(1.0), 0.0).unwrap();
        assert_eq!(cache.get(i).unwrap().priority, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = cache.sample(16, &mut rng).unwrap();
        assert!(s.iter().all(|(_, j)| *j == i));
    }

    #[test]
    fn empty_sample_errors() {
        let cache = ReplayCache::new(4, 2, SamplingMode::Prioritized).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(cache.sample(1, &mut rng).is_err());
    }

    #[test]
    fn fifo_eviction_and_stale_refresh() {
        let mut cache = ReplayCache::new(3, 2, SamplingMode::Prioritized).unwrap();
        for k in 0..5 {
            cache.push_with_td(tr(k as f64), 1.0).unwrap();
        }
        assert_eq!(cache.len(), 3);
        let kept: Vec<u64> = cache.iter().map(|e| e.index).collect();
        assert_eq!(kept, vec![2, 3, 4]);
        let before = cache.total_priority();
        cache.refresh(&[0, 1], &[100.0, 100.0]);
        assert_eq!(cache.total_priority(), before);
        cache.refresh(&[3], &[0.0]);
        assert_eq!(cache.get(3).unwrap().priority, 1e-3);
    }

    #[test]
    fn uniform_mode_pins_priorities() {
        let mut cache = ReplayCache::new(8, 2, SamplingMode::Uniform).unwrap();
        let i = cache.push_with_td(tr(0.0), 42.0).unwrap();
        cache.refresh(&[i], &[7.0]);
        assert_eq!(cache.get(i).unwrap().priority, 1e-3);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let mut cache = ReplayCache::new(8, 3, SamplingMode::Prioritized).unwrap();
        assert!(matches!(
            cache.push_with_td(tr(0.0), 1.0),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn tree_never_picks_empty_leaf() {
        let mut t = SumTree::new(5);
        t.set(0, 1.0);
        t.set(1, 2.0);
        assert_eq!(t.find(2.999_999_999), 1);
        assert_eq!(t.find(3.0), 1);
        assert_eq!(t.find(0.5), 0);
    }
}
