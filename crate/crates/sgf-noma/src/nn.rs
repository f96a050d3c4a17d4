//! Minimal dense feedforward Q-network.
//!
//! ReLU hidden layers, a linear output head (plain) or a dueling head with
//! separate value and advantage streams, squared-error loss on the taken
//! action, hand-rolled backpropagation and Adam. Everything is `f64` and
//! deterministic given the initialization stream.

use crate::{Result, SgfNomaError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which output head the network uses. Both heads expose the same output
/// dimensionality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Plain,
    Dueling,
}

/// One fully connected layer, weights stored row-major `[out][in]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    /// He-style fan-in uniform initialization, biases zero.
    fn he_uniform(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / in_dim as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Dense { in_dim, out_dim, w, b: vec![0.0; out_dim] }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.clone();
        for (o, row) in out.iter_mut().zip(self.w.chunks_exact(self.in_dim)) {
            *o += dot(row, x);
        }
        out
    }

    /// Accumulate `d_out ⊗ input` into the weight gradient, `d_out` into the
    /// bias gradient, and `Wᵀ d_out` into `d_in`.
    fn backward_into(&self, input: &[f64], d_out: &[f64], grad: &mut Dense, d_in: &mut [f64]) {
        for (i, (&d, row)) in d_out.iter().zip(self.w.chunks_exact(self.in_dim)).enumerate() {
            grad.b[i] += d;
            let grow = &mut grad.w[i * self.in_dim..(i + 1) * self.in_dim];
            for (g, xi) in grow.iter_mut().zip(input) {
                *g += d * xi;
            }
            for (di, wi) in d_in.iter_mut().zip(row) {
                *di += d * wi;
            }
        }
    }
}

/// Dot product with eight independent accumulators. A single running sum
/// chains every add through the previous one and caps throughput at one add
/// per float latency; independent lanes let the compiler keep several vector
/// adds in flight. The lane count is fixed, so results are reproducible.
fn dot(row: &[f64], x: &[f64]) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0f64; LANES];
    let mut rc = row.chunks_exact(LANES);
    let mut xc = x.chunks_exact(LANES);
    for (r, xs) in (&mut rc).zip(&mut xc) {
        for l in 0..LANES {
            acc[l] += r[l] * xs[l];
        }
    }
    let mut tail = 0.0;
    for (r, xs) in rc.remainder().iter().zip(xc.remainder()) {
        tail += r * xs;
    }
    let s01 = acc[0] + acc[1];
    let s23 = acc[2] + acc[3];
    let s45 = acc[4] + acc[5];
    let s67 = acc[6] + acc[7];
    ((s01 + s23) + (s45 + s67)) + tail
}

/// Output head parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Head {
    Plain(Dense),
    Dueling {
        value_hidden: Dense,
        value_out: Dense,
        adv_hidden: Dense,
        adv_out: Dense,
    },
}

/// Dense feedforward Q-network. Also doubles as gradient / moment storage:
/// [`QNetwork::zeros_like`] yields an identically shaped parameter set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QNetwork {
    pub input_dim: usize,
    pub output_dim: usize,
    pub head_kind: HeadKind,
    pub hidden: Vec<Dense>,
    pub head: Head,
}

/// Identically shaped parameter set holding accumulated gradients.
pub type Gradients = QNetwork;

/// Size of the per-stream hidden layer in the dueling head. The streams split
/// after the last shared hidden layer.
const DUELING_STREAM_WIDTH: usize = 60;

impl QNetwork {
    /// Build a network with the given hidden layer widths.
    pub fn new(
        input_dim: usize,
        hidden_sizes: &[usize],
        output_dim: usize,
        head_kind: HeadKind,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(SgfNomaError::Dimension("network dims must be non-zero".into()));
        }
        let mut hidden = Vec::new();
        let mut prev = input_dim;
        for &h in hidden_sizes {
            hidden.push(Dense::he_uniform(prev, h, rng));
            prev = h;
        }
        let head = match head_kind {
            HeadKind::Plain => Head::Plain(Dense::he_uniform(prev, output_dim, rng)),
            HeadKind::Dueling => Head::Dueling {
                value_hidden: Dense::he_uniform(prev, DUELING_STREAM_WIDTH, rng),
                value_out: Dense::he_uniform(DUELING_STREAM_WIDTH, 1, rng),
                adv_hidden: Dense::he_uniform(prev, DUELING_STREAM_WIDTH, rng),
                adv_out: Dense::he_uniform(DUELING_STREAM_WIDTH, output_dim, rng),
            },
        };
        Ok(QNetwork { input_dim, output_dim, head_kind, hidden, head })
    }

    /// Same architecture, all parameters zero.
    pub fn zeros_like(&self) -> Gradients {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            for v in t.iter_mut() {
                *v = 0.0;
            }
        }
        out
    }

    /// All parameter tensors in a fixed order (hidden layers first, then head).
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for d in &self.hidden {
            out.push(&d.w);
            out.push(&d.b);
        }
        match &self.head {
            Head::Plain(d) => {
                out.push(&d.w);
                out.push(&d.b);
            }
            Head::Dueling { value_hidden, value_out, adv_hidden, adv_out } => {
                for d in [value_hidden, value_out, adv_hidden, adv_out] {
                    out.push(&d.w);
                    out.push(&d.b);
                }
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for d in &mut self.hidden {
            out.push(&mut d.w);
            out.push(&mut d.b);
        }
        match &mut self.head {
            Head::Plain(d) => {
                out.push(&mut d.w);
                out.push(&mut d.b);
            }
            Head::Dueling { value_hidden, value_out, adv_hidden, adv_out } => {
                for d in [value_hidden, value_out, adv_hidden, adv_out] {
                    out.push(&mut d.w);
                    out.push(&mut d.b);
                }
            }
        }
        out
    }

    /// Q-values for one state.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_acts(state)?.q)
    }

    fn forward_acts(&self, state: &[f64]) -> Result<Activations> {
        if state.len() != self.input_dim {
            return Err(SgfNomaError::Dimension(format!(
                "state length {} does not match input dim {}",
                state.len(),
                self.input_dim
            )));
        }
        let mut acts = Vec::with_capacity(self.hidden.len() + 1);
        acts.push(state.to_vec());
        for d in &self.hidden {
            let mut a = d.forward(acts.last().unwrap());
            for v in a.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            acts.push(a);
        }
        let trunk_out = acts.last().unwrap();
        match &self.head {
            Head::Plain(d) => {
                let q = d.forward(trunk_out);
                Ok(Activations { trunk: acts, q, dueling: None })
            }
            Head::Dueling { value_hidden, value_out, adv_hidden, adv_out } => {
                let mut vh = value_hidden.forward(trunk_out);
                for v in vh.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                let value = value_out.forward(&vh)[0];
                let mut ah = adv_hidden.forward(trunk_out);
                for v in ah.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                let adv = adv_out.forward(&ah);
                let q = dueling_aggregate(value, &adv)?;
                Ok(Activations { trunk: acts, q, dueling: Some(DuelingActs { vh, ah, adv }) })
            }
        }
    }

    /// Gradient of `(target_q − Q(s, taken_action))²` with respect to every
    /// parameter.
    pub fn backward(&self, state: &[f64], target_q: f64, taken_action: usize) -> Result<Gradients> {
        let mut grads = self.zeros_like();
        self.backward_accumulate(state, target_q, taken_action, 1.0, &mut grads)?;
        Ok(grads)
    }

    /// Accumulate the same gradient scaled by `scale` into `grads`; used for
    /// minibatch means. Returns the per-sample squared error.
    pub fn backward_accumulate(
        &self,
        state: &[f64],
        target_q: f64,
        taken_action: usize,
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let acts = self.forward_acts(state)?;
        if taken_action >= self.output_dim {
            return Err(SgfNomaError::Dimension(format!(
                "action {} out of range {}",
                taken_action, self.output_dim
            )));
        }
        let residual = acts.q[taken_action] - target_q;
        // dLoss/dQ_a = 2 (Q_a − y), zero on all other outputs.
        let dq = 2.0 * residual * scale;

        let trunk_out = acts.trunk.last().unwrap();
        let mut d_trunk = vec![0.0; trunk_out.len()];

        match (&self.head, &mut grads.head) {
            (Head::Plain(d), Head::Plain(gd)) => {
                let mut d_out = vec![0.0; self.output_dim];
                d_out[taken_action] = dq;
                d.backward_into(trunk_out, &d_out, gd, &mut d_trunk);
            }
            (
                Head::Dueling { value_hidden, value_out, adv_hidden, adv_out },
                Head::Dueling {
                    value_hidden: g_vh,
                    value_out: g_vo,
                    adv_hidden: g_ah,
                    adv_out: g_ao,
                },
            ) => {
                let duel = acts.dueling.as_ref().unwrap();
                let n = self.output_dim as f64;
                // Q_a = V + A_a − mean(A): dQ_a/dV = 1, dQ_a/dA_k = δ_ak − 1/n.
                let d_value = [dq];
                let mut d_adv = vec![-dq / n; self.output_dim];
                d_adv[taken_action] += dq;

                let mut d_vh = vec![0.0; duel.vh.len()];
                value_out.backward_into(&duel.vh, &d_value, g_vo, &mut d_vh);
                relu_mask(&mut d_vh, &duel.vh);
                value_hidden.backward_into(trunk_out, &d_vh, g_vh, &mut d_trunk);

                let mut d_ah = vec![0.0; duel.ah.len()];
                adv_out.backward_into(&duel.ah, &d_adv, g_ao, &mut d_ah);
                relu_mask(&mut d_ah, &duel.ah);
                adv_hidden.backward_into(trunk_out, &d_ah, g_ah, &mut d_trunk);
            }
            _ => unreachable!("gradient head kind always matches the network"),
        }

        relu_mask(&mut d_trunk, trunk_out);
        let mut d_cur = d_trunk;
        for (i, d) in self.hidden.iter().enumerate().rev() {
            let input = &acts.trunk[i];
            let mut d_in = vec![0.0; input.len()];
            d.backward_into(input, &d_cur, &mut grads.hidden[i], &mut d_in);
            if i > 0 {
                relu_mask(&mut d_in, input);
            }
            d_cur = d_in;
        }
        Ok(residual * residual)
    }
}

struct DuelingActs {
    vh: Vec<f64>,
    ah: Vec<f64>,
    #[allow(dead_code)]
    adv: Vec<f64>,
}

struct Activations {
    trunk: Vec<Vec<f64>>,
    q: Vec<f64>,
    dueling: Option<DuelingActs>,
}

fn relu_mask(delta: &mut [f64], post_activation: &[f64]) {
    for (d, &a) in delta.iter_mut().zip(post_activation) {
        if a <= 0.0 {
            *d = 0.0;
        }
    }
}

/// Combine the value and advantage streams: `Q_a = V + A_a − mean(A)`.
pub fn dueling_aggregate(value: f64, advantages: &[f64]) -> Result<Vec<f64>> {
    if advantages.is_empty() {
        return Err(SgfNomaError::Dimension("empty advantage vector".into()));
    }
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    Ok(advantages.iter().map(|a| value + a - mean).collect())
}

/// Adam optimizer state: first/second moment accumulators aligned with
/// [`QNetwork::tensors`], bias-corrected update.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_hat: f64,
    pub step: u64,
    /// Optional global L2 gradient-norm cap; disabled by default.
    pub grad_clip: Option<f64>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &QNetwork, learning_rate: f64) -> Self {
        let shapes: Vec<Vec<f64>> = net.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_hat: 1e-8,
            step: 0,
            grad_clip: None,
            m: shapes.clone(),
            v: shapes,
        }
    }
}

/// One Adam update. Errors on any non-finite gradient so training bugs
/// surface early.
pub fn adam_step(net: &mut QNetwork, grads: &Gradients, opt: &mut AdamState) -> Result<()> {
    let gts = grads.tensors();
    let mut clip_scale = 1.0;
    let mut sq_norm = 0.0;
    for t in &gts {
        for &g in t.iter() {
            if !g.is_finite() {
                return Err(SgfNomaError::NonFinite("gradient".into()));
            }
            sq_norm += g * g;
        }
    }
    if let Some(cap) = opt.grad_clip {
        let norm = sq_norm.sqrt();
        if norm > cap {
            clip_scale = cap / norm;
        }
    }
    opt.step += 1;
    let t = opt.step as i32;
    let bc1 = 1.0 - opt.beta1.powi(t);
    let bc2 = 1.0 - opt.beta2.powi(t);
    let pts = net.tensors_mut();
    debug_assert_eq!(pts.len(), gts.len());
    for ((p, g), (m, v)) in pts.into_iter().zip(gts).zip(opt.m.iter_mut().zip(opt.v.iter_mut())) {
        for i in 0..p.len() {
            let gi = g[i] * clip_scale;
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * gi;
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= opt.learning_rate * m_hat / (v_hat.sqrt() + opt.epsilon_hat);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{derive_rng, Purpose};

    fn rng(tag: u64) -> ChaCha8Rng {
        derive_rng(tag, Purpose::Init, &[])
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::new(3, &[4], 2, HeadKind::Plain, &mut rng(1)).unwrap().zeros_like();
        assert_eq!(net.forward(&[0.3, -1.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn relu_clamps_single_unit() {
        // one hidden unit, weight 1, bias −1, input 0.5 → ReLU(−0.5) = 0
        let mut net = QNetwork::new(1, &[1], 1, HeadKind::Plain, &mut rng(2)).unwrap();
        net.hidden[0].w[0] = 1.0;
        net.hidden[0].b[0] = -1.0;
        if let Head::Plain(d) = &mut net.head {
            d.w[0] = 1.0;
            d.b[0] = 0.0;
        }
        assert_eq!(net.forward(&[0.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_matches_independent_matmul_oracle() {
        // Independent oracle: naive index-based matrix multiply, written
        // separately from Dense::forward.
        let net = QNetwork::new(5, &[7, 4], 3, HeadKind::Plain, &mut rng(3)).unwrap();
        let mut r = rng(4);
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
            let mut cur = x.clone();
            for d in &net.hidden {
                let mut next = vec![0.0; d.out_dim];
                for o in 0..d.out_dim {
                    let mut acc = d.b[o];
                    for i in 0..d.in_dim {
                        acc += d.w[o * d.in_dim + i] * cur[i];
                    }
                    next[o] = acc.max(0.0);
                }
                cur = next;
            }
            let expected = match &net.head {
                Head::Plain(d) => {
                    let mut out = vec![0.0; d.out_dim];
                    for o in 0..d.out_dim {
                        let mut acc = d.b[o];
                        for i in 0..d.in_dim {
                            acc += d.w[o * d.in_dim + i] * cur[i];
                        }
                        out[o] = acc;
                    }
                    out
                }
                _ => unreachable!(),
            };
            let got = net.forward(&x).unwrap();
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() < 1e-10, "forward mismatch: {g} vs {e}");
            }
        }
    }

    #[test]
    fn dueling_aggregate_examples() {
        assert_eq!(dueling_aggregate(2.0, &[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 2.0, 2.0]);
        assert_eq!(dueling_aggregate(0.0, &[3.0, 0.0, 0.0]).unwrap(), vec![2.0, -1.0, -1.0]);
        assert!(dueling_aggregate(1.0, &[]).is_err());
        // mean(Q) = V identity
        let mut r = rng(5);
        for _ in 0..50 {
            let v: f64 = r.gen_range(-5.0..5.0);
            let a: Vec<f64> = (0..9).map(|_| r.gen_range(-5.0..5.0)).collect();
            let q = dueling_aggregate(v, &a).unwrap();
            let mean = q.iter().sum::<f64>() / q.len() as f64;
            assert!((mean - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_residual_zero_gradients() {
        let net = QNetwork::new(3, &[5], 2, HeadKind::Plain, &mut rng(6)).unwrap();
        let x = [0.4, -0.2, 1.0];
        let q = net.forward(&x).unwrap();
        let grads = net.backward(&x, q[1], 1).unwrap();
        for t in grads.tensors() {
            assert!(t.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn scalar_chain_rule_by_hand() {
        // linear 1-1 net (ReLU inactive region avoided): w=1, b=0, s=2, y=5
        // hidden pre-act = 2 (positive, ReLU passes), output w=1 b=0 → Q=2
        // dLoss/d(output w) = 2(Q−y)·act = 2(2−5)·2 = −12
        let mut net = QNetwork::new(1, &[1], 1, HeadKind::Plain, &mut rng(7)).unwrap();
        net.hidden[0].w[0] = 1.0;
        net.hidden[0].b[0] = 0.0;
        if let Head::Plain(d) = &mut net.head {
            d.w[0] = 1.0;
            d.b[0] = 0.0;
        }
        let grads = net.backward(&[2.0], 5.0, 0).unwrap();
        if let Head::Plain(gd) = &grads.head {
            assert!((gd.w[0] - (-12.0)).abs() < 1e-12);
            assert!((gd.b[0] - (-6.0)).abs() < 1e-12);
        }
        // hidden weight: dLoss/dw_h = 2(Q−y)·w_out·x = −6·1·2 = −12
        assert!((grads.hidden[0].w[0] - (-12.0)).abs() < 1e-12);
    }

    /// Central finite differences, h = 1e-5, over every parameter.
    fn finite_difference_check(net: &QNetwork, x: &[f64], y: f64, action: usize) {
        let analytic = net.backward(x, y, action).unwrap();
        let h = 1e-5;
        let mut probe = net.clone();
        let n_tensors = analytic.tensors().len();
        for ti in 0..n_tensors {
            let len = analytic.tensors()[ti].len();
            for i in 0..len {
                let orig = probe.tensors()[ti][i];
                probe.tensors_mut()[ti][i] = orig + h;
                let qp = probe.forward(x).unwrap()[action];
                probe.tensors_mut()[ti][i] = orig - h;
                let qm = probe.forward(x).unwrap()[action];
                probe.tensors_mut()[ti][i] = orig;
                let lp = (qp - y) * (qp - y);
                let lm = (qm - y) * (qm - y);
                let numeric = (lp - lm) / (2.0 * h);
                let a = analytic.tensors()[ti][i];
                let denom = a.abs().max(numeric.abs()).max(1e-6);
                assert!(
                    (a - numeric).abs() / denom < 1e-4,
                    "tensor {ti} idx {i}: analytic {a} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng(8);
        for (k, kind) in [HeadKind::Plain, HeadKind::Dueling].into_iter().enumerate() {
            for trial in 0..5 {
                let mut init = rng(100 + 10 * k as u64 + trial);
                let net = QNetwork::new(4, &[6, 5], 3, kind, &mut init).unwrap();
                let x: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
                let y = r.gen_range(-2.0..2.0);
                let action = r.gen_range(0..3);
                finite_difference_check(&net, &x, y, action);
            }
        }
    }

    #[test]
    fn adam_first_step_identity() {
        // first step with g=1 everywhere moves every parameter by ≈ −lr
        let mut net = QNetwork::new(1, &[1], 1, HeadKind::Plain, &mut rng(9)).unwrap();
        let before: Vec<f64> = net.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        let mut grads = net.zeros_like();
        for t in grads.tensors_mut() {
            for g in t.iter_mut() {
                *g = 1.0;
            }
        }
        let mut opt = AdamState::new(&net, 0.001);
        adam_step(&mut net, &grads, &mut opt).unwrap();
        let after: Vec<f64> = net.tensors().iter().flat_map(|t| t.iter().copied()).collect();
        for (b, a) in before.iter().zip(&after) {
            assert!((b - a - 0.001).abs() < 1e-9, "Δ = {}", b - a);
        }
    }

    #[test]
    fn adam_zero_gradient_no_change() {
        let mut net = QNetwork::new(2, &[3], 2, HeadKind::Dueling, &mut rng(10)).unwrap();
        let reference = net.clone();
        let grads = net.zeros_like();
        let mut opt = AdamState::new(&net, 0.01);
        adam_step(&mut net, &grads, &mut opt).unwrap();
        for (a, b) in net.tensors().iter().zip(reference.tensors()) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn adam_two_steps_match_hand_recurrence() {
        // scalar Adam recurrence with constant gradient g, computed manually
        let g = 0.5;
        let (lr, b1, b2, eps) = (0.001, 0.9, 0.999, 1e-8);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut p_ref = 0.3;
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - f64::powi(b1, t));
            let vh = v / (1.0 - f64::powi(b2, t));
            p_ref -= lr * mh / (f64::sqrt(vh) + eps);
        }
        let mut net = QNetwork::new(1, &[], 1, HeadKind::Plain, &mut rng(11)).unwrap();
        if let Head::Plain(d) = &mut net.head {
            d.w[0] = 0.3;
        }
        let mut grads = net.zeros_like();
        if let Head::Plain(gd) = &mut grads.head {
            gd.w[0] = g;
        }
        let mut opt = AdamState::new(&net, lr);
        adam_step(&mut net, &grads, &mut opt).unwrap();
        adam_step(&mut net, &grads, &mut opt).unwrap();
        if let Head::Plain(d) = &net.head {
            assert!((d.w[0] - p_ref).abs() < 1e-12, "{} vs {p_ref}", d.w[0]);
        }
    }

    #[test]
    fn non_finite_gradient_is_an_error() {
        let mut net = QNetwork::new(1, &[2], 1, HeadKind::Plain, &mut rng(12)).unwrap();
        let mut grads = net.zeros_like();
        grads.hidden[0].w[0] = f64::NAN;
        let mut opt = AdamState::new(&net, 0.001);
        assert!(adam_step(&mut net, &grads, &mut opt).is_err());
    }

    #[test]
    fn loss_descends_on_fixed_regression_batch() {
        // 100 Adam steps cut MSE by ≥ 50% from random init, both heads
        for kind in [HeadKind::Plain, HeadKind::Dueling] {
            let mut init = rng(13);
            let mut net = QNetwork::new(3, &[16, 8], 4, kind, &mut init).unwrap();
            let mut r = rng(14);
            let batch: Vec<(Vec<f64>, f64, usize)> = (0..16)
                .map(|_| {
                    let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
                    (x, r.gen_range(-1.0..1.0), r.gen_range(0..4))
                })
                .collect();
            let mse = |net: &QNetwork| -> f64 {
                batch
                    .iter()
                    .map(|(x, y, a)| {
                        let q = net.forward(x).unwrap()[*a];
                        (q - y) * (q - y)
                    })
                    .sum::<f64>()
                    / batch.len() as f64
            };
            let initial = mse(&net);
            let mut opt = AdamState::new(&net, 0.01);
            for _ in 0..100 {
                let mut grads = net.zeros_like();
                for (x, y, a) in &batch {
                    net.backward_accumulate(x, *y, *a, 1.0 / batch.len() as f64, &mut grads)
                        .unwrap();
                }
                adam_step(&mut net, &grads, &mut opt).unwrap();
            }
            let fin = mse(&net);
            assert!(fin <= 0.5 * initial, "{kind:?}: {initial} → {fin}");
        }
    }

    #[test]
    fn determinism_across_identical_runs() {
        let build = || {
            let mut init = rng(15);
            let mut net = QNetwork::new(2, &[4], 3, HeadKind::Dueling, &mut init).unwrap();
            let mut opt = AdamState::new(&net, 0.005);
            for step in 0..20 {
                let x = [0.1 * step as f64, -0.3];
                let mut grads = net.zeros_like();
                net.backward_accumulate(&x, 1.0, step % 3, 1.0, &mut grads).unwrap();
                adam_step(&mut net, &grads, &mut opt).unwrap();
            }
            net
        };
        let a = build();
        let b = build();
        for (ta, tb) in a.tensors().iter().zip(b.tensors()) {
            assert_eq!(*ta, tb); // bit-identical
        }
    }
}
