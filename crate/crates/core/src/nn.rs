//! Small dense networks with hand-written reverse mode.
//!
//! The critic injects the action at the input of one hidden layer (the second
//! by default), so its first layer only sees the state. The actor ends in a
//! `tanh` layer scaled onto the actuator limits.
//!
//! Forward passes record post-activations on a [`Tape`]; every derivative is
//! recovered from those (`relu' = [y > 0]`, `tanh' = 1 - y^2`), which fixes
//! the ReLU subgradient at 0 to 0.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::dynamics::{ControlBounds, ControlInput};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    fn uniform<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        limit: f64,
        rng: &mut R,
    ) -> Self {
        let mut d = Self::zeros(inputs, outputs, activation);
        for w in d.weights.iter_mut().chain(d.bias.iter_mut()) {
            *w = rng.gen_range(-limit..=limit);
        }
        d
    }

    fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (o, out) in y.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = self.bias[o];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *out = self.activation.apply(acc);
        }
    }
}

/// What the network computes.
#[derive(Debug, Clone, PartialEq)]
pub enum Role {
    /// `Q(s, u)`, scalar output, action appended to the input of `action_layer`.
    Critic { action_layer: usize, action_dim: usize },
    /// `mu(s) = offset + scale * tanh(.)`.
    Actor { scale: Vec<f64>, offset: Vec<f64> },
}

/// Network parameters plus the structural metadata needed to run them.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
    pub role: Role,
    /// Fixed divisors applied to the inputs: the state first, then (critics)
    /// the action. All ones by default.
    pub input_scale: Vec<f64>,
}

/// Recorded activations of one forward pass plus backward scratch space.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    /// `acts[l]` is the input of layer `l`; the last entry is the raw output.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_in: Vec<f64>,
}

impl Tape {
    pub fn for_network(net: &MlpParams) -> Self {
        let mut acts: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.inputs]).collect();
        acts.push(vec![0.0; net.layers.last().map_or(0, |l| l.outputs)]);
        let widest = net
            .layers
            .iter()
            .map(|l| l.inputs.max(l.outputs))
            .max()
            .unwrap_or(0);
        Self {
            acts,
            delta: vec![0.0; widest],
            delta_in: vec![0.0; widest],
        }
    }

    /// Raw (pre-scaling) network output of the last forward pass.
    pub fn output(&self) -> &[f64] {
        self.acts.last().map_or(&[], |v| v.as_slice())
    }
}

/// Gradients mirroring [`MlpParams`], plus an optional input gradient
/// (the action gradient for critics).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input: Option<Vec<f64>>,
}

impl GradientBundle {
    pub fn zeros_like(net: &MlpParams) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
            input: None,
        }
    }

    pub fn clear(&mut self) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
        self.input = None;
    }

    pub fn scale(&mut self, k: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= k);
        }
    }

    /// `self += k * other` over the parameter gradients.
    pub fn add_scaled(&mut self, other: &GradientBundle, k: f64) {
        let pairs = self
            .weights
            .iter_mut()
            .zip(&other.weights)
            .chain(self.biases.iter_mut().zip(&other.biases));
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += k * y;
            }
        }
    }

    /// Euclidean norm over all parameter gradients.
    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn check_mirrors(&self, net: &MlpParams) -> Result<()> {
        if self.weights.len() != net.layers.len() || self.biases.len() != net.layers.len() {
            return Err(Error::Shape {
                context: "gradient bundle layer count".into(),
                expected: net.layers.len(),
                actual: self.weights.len(),
            });
        }
        for (i, l) in net.layers.iter().enumerate() {
            if self.weights[i].len() != l.weights.len() || self.biases[i].len() != l.bias.len() {
                return Err(Error::Shape {
                    context: format!("gradient bundle layer {i}"),
                    expected: l.weights.len(),
                    actual: self.weights[i].len(),
                });
            }
        }
        Ok(())
    }
}

impl MlpParams {
    /// Critic `state -> h0`, `(h0 + action) -> h1`, ... `-> 1`.
    ///
    /// Hidden layers are ReLU, the output linear. Weights are uniform in
    /// `+-1/sqrt(fan_in)`, the output layer in `+-3e-3`.
    pub fn critic<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        if hidden.len() < 2 {
            return Err(Error::InvalidParams(
                "critic needs at least two hidden layers to inject the action".into(),
            ));
        }
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = state_dim;
        for (i, &h) in hidden.iter().enumerate() {
            let inputs = if i == 1 { fan_in + action_dim } else { fan_in };
            let lim = 1.0 / (inputs as f64).sqrt();
            layers.push(Dense::uniform(inputs, h, Activation::Relu, lim, rng));
            fan_in = h;
        }
        layers.push(Dense::uniform(fan_in, 1, Activation::Linear, 3e-3, rng));
        let net = Self {
            layers,
            role: Role::Critic {
                action_layer: 1,
                action_dim,
            },
            input_scale: vec![1.0; state_dim + action_dim],
        };
        net.validate()?;
        Ok(net)
    }

    /// Actor `state -> hidden.. -> 2`, ReLU hidden, tanh output scaled to `bounds`.
    pub fn actor<R: Rng + ?Sized>(
        state_dim: usize,
        hidden: &[usize],
        bounds: ControlBounds,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = state_dim;
        for &h in hidden {
            let lim = 1.0 / (fan_in as f64).sqrt();
            layers.push(Dense::uniform(fan_in, h, Activation::Relu, lim, rng));
            fan_in = h;
        }
        layers.push(Dense::uniform(fan_in, 2, Activation::Tanh, 3e-3, rng));
        let net = Self {
            layers,
            role: Role::Actor {
                scale: bounds.as_array().to_vec(),
                offset: vec![0.0, 0.0],
            },
            input_scale: vec![1.0; state_dim],
        };
        net.validate()?;
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    fn action_dim(&self) -> usize {
        match self.role {
            Role::Critic { action_dim, .. } => action_dim,
            Role::Actor { .. } => 0,
        }
    }

    /// Replaces the input divisors (state entries, then action entries for
    /// critics).
    pub fn with_input_scale(mut self, scale: Vec<f64>) -> Result<Self> {
        self.input_scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParams("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape {
                    context: format!("layer {i} storage"),
                    expected: l.inputs * l.outputs,
                    actual: l.weights.len(),
                });
            }
            if i > 0 {
                let mut expected = self.layers[i - 1].outputs;
                if let Role::Critic {
                    action_layer,
                    action_dim,
                } = self.role
                {
                    if i == action_layer {
                        expected += action_dim;
                    }
                }
                if l.inputs != expected {
                    return Err(Error::Shape {
                        context: format!("layer {i} input width"),
                        expected,
                        actual: l.inputs,
                    });
                }
            }
        }
        let width = self.input_dim() + self.action_dim();
        if self.input_scale.len() != width {
            return Err(Error::Shape {
                context: "input scale".into(),
                expected: width,
                actual: self.input_scale.len(),
            });
        }
        if self.input_scale.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams("input scales must be finite and > 0".into()));
        }
        match &self.role {
            Role::Critic { action_layer, .. } => {
                if *action_layer == 0 || *action_layer >= self.layers.len() {
                    return Err(Error::InvalidParams(format!(
                        "action layer {action_layer} out of range"
                    )));
                }
                if self.output_dim() != 1 {
                    return Err(Error::Shape {
                        context: "critic output".into(),
                        expected: 1,
                        actual: self.output_dim(),
                    });
                }
            }
            Role::Actor { scale, offset } => {
                if self.output_dim() != 2 || scale.len() != 2 || offset.len() != 2 {
                    return Err(Error::Shape {
                        context: "actor output".into(),
                        expected: 2,
                        actual: self.output_dim(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_input(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.input_dim() {
            return Err(Error::Shape {
                context: "layer 0 input (observation)".into(),
                expected: self.input_dim(),
                actual: s.len(),
            });
        }
        Ok(())
    }

    /// Forward pass recording activations. `action` is required for critics.
    pub fn forward_tape(&self, s: &[f64], action: Option<&[f64]>, tape: &mut Tape) {
        let n = s.len();
        for ((x, v), k) in tape.acts[0].iter_mut().zip(s).zip(&self.input_scale) {
            *x = v / k;
        }
        let inject = match self.role {
            Role::Critic { action_layer, .. } => Some(action_layer),
            Role::Actor { .. } => None,
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = tape.acts.split_at_mut(l + 1);
            let x = &head[l];
            let y = &mut tail[0];
            layer.forward(x, &mut y[..layer.outputs]);
            if inject == Some(l + 1) {
                let a = action.expect("critic forward needs an action");
                for ((x, v), k) in y[layer.outputs..].iter_mut().zip(a).zip(&self.input_scale[n..]) {
                    *x = v / k;
                }
            }
        }
    }

    /// Back-propagates `grad_out` (gradient w.r.t. the raw output of the last
    /// layer), accumulating parameter gradients into `grads` when given. For
    /// critics, returns the gradient w.r.t. the injected action.
    pub fn backward_tape(
        &self,
        tape: &mut Tape,
        grad_out: &[f64],
        mut grads: Option<&mut GradientBundle>,
    ) -> Option<[f64; 2]> {
        let inject = match self.role {
            Role::Critic { action_layer, .. } => Some(action_layer),
            Role::Actor { .. } => None,
        };
        let n = self.layers.len();
        let Tape {
            acts,
            delta,
            delta_in,
        } = tape;
        delta[..grad_out.len()].copy_from_slice(grad_out);
        let mut action_grad = None;
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let out = &acts[l + 1][..layer.outputs];
            for (d, &y) in delta[..layer.outputs].iter_mut().zip(out) {
                *d *= layer.activation.derivative_from_output(y);
            }
            if let Some(g) = grads.as_deref_mut() {
                let x = &acts[l];
                let gw = &mut g.weights[l];
                let gb = &mut g.biases[l];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    gb[o] += d;
                    if d != 0.0 {
                        let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                        for (g, xi) in row.iter_mut().zip(x) {
                            *g += d * xi;
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            let din = &mut delta_in[..layer.inputs];
            din.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..layer.outputs {
                let d = delta[o];
                if d != 0.0 {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (acc, w) in din.iter_mut().zip(row) {
                        *acc += d * w;
                    }
                }
            }
            if inject == Some(l) {
                let h = self.layers[l - 1].outputs;
                let k = &self.input_scale[self.input_dim()..];
                action_grad = Some([din[h] / k[0], din[h + 1] / k[1]]);
                if grads.is_none() {
                    break;
                }
            }
            let prev = self.layers[l - 1].outputs;
            delta[..prev].copy_from_slice(&din[..prev]);
        }
        action_grad
    }

    fn expect_critic(&self) -> Result<()> {
        match self.role {
            Role::Critic { action_dim: 2, .. } => Ok(()),
            Role::Critic { action_dim, .. } => Err(Error::Shape {
                context: "critic action width".into(),
                expected: 2,
                actual: action_dim,
            }),
            Role::Actor { .. } => Err(Error::InvalidParams("expected a critic network".into())),
        }
    }

    fn expect_actor(&self) -> Result<(&[f64], &[f64])> {
        match &self.role {
            Role::Actor { scale, offset } => Ok((scale, offset)),
            Role::Critic { .. } => Err(Error::InvalidParams("expected an actor network".into())),
        }
    }

    /// `Q(s, u)`.
    pub fn critic_forward(&self, s: &[f64], u: ControlInput) -> Result<f64> {
        self.expect_critic()?;
        self.check_input(s)?;
        let mut tape = Tape::for_network(self);
        self.forward_tape(s, Some(&u.as_array()), &mut tape);
        Ok(tape.output()[0])
    }

    /// Gradient of `Q(s, u)` w.r.t. every parameter, with `dQ/du` in `input`.
    pub fn critic_backward(&self, s: &[f64], u: ControlInput) -> Result<GradientBundle> {
        self.expect_critic()?;
        self.check_input(s)?;
        let mut tape = Tape::for_network(self);
        self.forward_tape(s, Some(&u.as_array()), &mut tape);
        let mut g = GradientBundle::zeros_like(self);
        let du = self.backward_tape(&mut tape, &[1.0], Some(&mut g));
        g.input = du.map(|d| d.to_vec());
        Ok(g)
    }

    /// `mu(s)`; always within the scaled tanh range.
    pub fn actor_forward(&self, s: &[f64]) -> Result<ControlInput> {
        let (scale, offset) = self.expect_actor()?;
        self.check_input(s)?;
        let mut tape = Tape::for_network(self);
        self.forward_tape(s, None, &mut tape);
        let y = tape.output();
        Ok(ControlInput::new(
            offset[0] + scale[0] * y[0],
            offset[1] + scale[1] * y[1],
        ))
    }

    /// Gradient w.r.t. the actor parameters of `mu(s) . upstream`.
    pub fn actor_backward_chained(&self, s: &[f64], upstream: [f64; 2]) -> Result<GradientBundle> {
        let (scale, _) = self.expect_actor()?;
        self.check_input(s)?;
        let mut tape = Tape::for_network(self);
        self.forward_tape(s, None, &mut tape);
        let mut g = GradientBundle::zeros_like(self);
        let seed = [scale[0] * upstream[0], scale[1] * upstream[1]];
        self.backward_tape(&mut tape, &seed, Some(&mut g));
        Ok(g)
    }

    /// Plain gradient step `theta <- theta - rate * g`.
    pub fn apply_gradients(&mut self, g: &GradientBundle, rate: f64) -> Result<()> {
        g.check_mirrors(self)?;
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (w, dw) in layer.weights.iter_mut().zip(&g.weights[l]) {
                *w -= rate * dw;
            }
            for (b, db) in layer.bias.iter_mut().zip(&g.biases[l]) {
                *b -= rate * db;
            }
        }
        Ok(())
    }

    /// Polyak averaging toward `source`: `self <- (1 - tau) self + tau source`.
    pub fn soft_update(&mut self, source: &MlpParams, tau: f64) {
        for (dst, src) in self.layers.iter_mut().zip(&source.layers) {
            for (a, b) in dst.weights.iter_mut().zip(&src.weights) {
                *a += tau * (b - *a);
            }
            for (a, b) in dst.bias.iter_mut().zip(&src.bias) {
                *a += tau * (b - *a);
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn write_header(&self, out: &mut Vec<u8>) {
        let mut h = String::from("AUVNET 1\n");
        match &self.role {
            Role::Critic {
                action_layer,
                action_dim,
            } => h.push_str(&format!("role critic {action_layer} {action_dim}\n")),
            Role::Actor { scale, offset } => {
                h.push_str("role actor\n");
                h.push_str(&format!("scale {:?} {:?}\n", scale[0], scale[1]));
                h.push_str(&format!("offset {:?} {:?}\n", offset[0], offset[1]));
            }
        }
        h.push_str("input_scale");
        for v in &self.input_scale {
            h.push_str(&format!(" {v:?}"));
        }
        h.push('\n');
        h.push_str(&format!("layers {}\n", self.layers.len()));
        for l in &self.layers {
            h.push_str(&format!(
                "layer {} {} {}\n",
                l.inputs,
                l.outputs,
                l.activation.name()
            ));
        }
        h.push_str("data f64le\n");
        out.extend_from_slice(h.as_bytes());
    }

    /// Serializes to the checkpoint format: a text header describing the
    /// structure, then every layer's weights (row-major) and biases as
    /// little-endian `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.parameter_count());
        self.write_header(&mut out);
        for l in &self.layers {
            for v in l.weights.iter().chain(l.bias.iter()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut cursor = std::io::Cursor::new(bytes);
        let mut line = String::new();
        let mut next_line = |cursor: &mut std::io::Cursor<&[u8]>| -> Result<String> {
            line.clear();
            cursor
                .read_line(&mut line)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            if !line.ends_with('\n') {
                return Err(Error::Checkpoint("truncated header".into()));
            }
            Ok(line.trim_end().to_string())
        };
        if next_line(&mut cursor)? != "AUVNET 1" {
            return Err(bad("not an AUVNET v1 checkpoint"));
        }
        let role_line = next_line(&mut cursor)?;
        let parts: Vec<&str> = role_line.split_whitespace().collect();
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| bad("bad float in header"));
        let parse_u = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer in header"));
        let role = match parts.as_slice() {
            ["role", "critic", a, d] => Role::Critic {
                action_layer: parse_u(a)?,
                action_dim: parse_u(d)?,
            },
            ["role", "actor"] => {
                let sl = next_line(&mut cursor)?;
                let s: Vec<&str> = sl.split_whitespace().collect();
                let ol = next_line(&mut cursor)?;
                let o: Vec<&str> = ol.split_whitespace().collect();
                match (s.as_slice(), o.as_slice()) {
                    (["scale", s0, s1], ["offset", o0, o1]) => Role::Actor {
                        scale: vec![parse_f(s0)?, parse_f(s1)?],
                        offset: vec![parse_f(o0)?, parse_f(o1)?],
                    },
                    _ => return Err(bad("malformed actor scale/offset")),
                }
            }
            _ => return Err(bad("malformed role line")),
        };
        let scale_line = next_line(&mut cursor)?;
        let input_scale = match scale_line.split_whitespace().collect::<Vec<_>>().split_first() {
            Some((&"input_scale", vals)) => vals.iter().map(|v| parse_f(v)).collect::<Result<Vec<_>>>()?,
            _ => return Err(bad("malformed input scale")),
        };
        let count_line = next_line(&mut cursor)?;
        let count = match count_line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["layers", n] => parse_u(n)?,
            _ => return Err(bad("malformed layer count")),
        };
        let mut shapes = Vec::with_capacity(count);
        for _ in 0..count {
            let l = next_line(&mut cursor)?;
            match l.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["layer", i, o, a] => {
                    let act = Activation::parse(a).ok_or_else(|| bad("unknown activation"))?;
                    shapes.push((parse_u(i)?, parse_u(o)?, act));
                }
                _ => return Err(bad("malformed layer line")),
            }
        }
        if next_line(&mut cursor)? != "data f64le" {
            return Err(bad("missing data marker"));
        }
        let mut rest = Vec::new();
        cursor
            .read_to_end(&mut rest)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let expected: usize = shapes.iter().map(|(i, o, _)| 8 * (i * o + o)).sum();
        if rest.len() != expected {
            return Err(Error::Checkpoint(format!(
                "payload is {} bytes, header implies {expected}",
                rest.len()
            )));
        }
        let mut vals = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let layers = shapes
            .into_iter()
            .map(|(i, o, act)| {
                let mut d = Dense::zeros(i, o, act);
                for w in d.weights.iter_mut().chain(d.bias.iter_mut()) {
                    *w = vals.next().unwrap();
                }
                d
            })
            .collect();
        let net = Self {
            layers,
            role,
            input_scale,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingArtifact {
                    path: path.to_path_buf(),
                    hint: "run `train` first to produce a checkpoint".into(),
                }
            } else {
                Error::io(path, e)
            }
        })?;
        Self::from_bytes(&bytes)
    }
}

/// Adaptive-moment optimizer state for one network.
#[derive(Debug, Clone)]
pub struct Adam {
    m: GradientBundle,
    v: GradientBundle,
    t: i32,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(net: &MlpParams) -> Self {
        Self {
            m: GradientBundle::zeros_like(net),
            v: GradientBundle::zeros_like(net),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, net: &mut MlpParams, g: &GradientBundle, rate: f64) -> Result<()> {
        g.check_mirrors(net)?;
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let step_size = rate * c2.sqrt() / c1;
        let eps = self.eps * c2.sqrt();
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let grads = g.weights[l].iter().chain(g.biases[l].iter());
            let ms = self.m.weights[l].iter_mut().chain(self.m.biases[l].iter_mut());
            let vs = self.v.weights[l].iter_mut().chain(self.v.biases[l].iter_mut());
            for (((p, &gi), m), v) in params.zip(grads).zip(ms).zip(vs) {
                *m = b1 * *m + (1.0 - b1) * gi;
                *v = b2 * *v + (1.0 - b2) * gi * gi;
                *p -= step_size * *m / (v.sqrt() + eps);
            }
        }
        Ok(())
    }
}
