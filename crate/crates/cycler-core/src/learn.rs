//! Policy-gradient training on the product MDP.
//!
//! The policy and value function are small fixed-architecture multilayer
//! perceptrons with hand-derived gradients, verified against central finite
//! differences by [`policy_gradient_check`]. The update is a clipped-ratio
//! policy gradient with an entropy bonus and a value baseline, optimized with
//! Adam; a batch is a fixed number of full-horizon rollouts whose LTL rewards
//! are shaped retroactively per trajectory.
//!
//! Observations concatenate the environment observation, a one-hot encoding
//! of the automaton state, and the frontier bits. Policies over continuous
//! environments output a Gaussian mean and a learned log-std (clamped to
//! `[-5, 2]`); when the automaton has jump actions a categorical head picks
//! between acting in the environment and each available jump.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::{Ldba, LdbaError, StateId};
use crate::cycles::CyclePath;
use crate::env::{ActionSpace, Env, EnvAction};
use crate::math;
use crate::product::{accepting_visits, rollout, Policy, ProductAction, ProductObs, ProductTrajectory};
use crate::shaping::{
    cycler_assign, eventual_discounted_value, weighted_ltl_rewards, Discounts, Frontier, LtlStream,
    RewardTrace, ShapingConfig, ShapingError, VisitCounting,
};

const LOG_STD_MIN: f64 = -5.0;
const LOG_STD_MAX: f64 = 2.0;
const LN_2PI: f64 = 1.8378770664093453;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Standard normal sample (Box-Muller).
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - uniform(rng); // (0, 1]
    let u2 = uniform(rng);
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
}

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => math::tanh(x),
        }
    }

    fn derivative(&self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = math::tanh(pre);
                1.0 - t * t
            }
        }
    }
}

/// A fully connected network with a linear output layer.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    /// Flat parameters: per layer, the `out x in` weight matrix row-major,
    /// then the bias vector.
    pub params: Vec<f64>,
}

/// Forward-pass intermediates needed for backprop.
pub struct MlpCache {
    /// Input to each layer (layer 0's input is the network input).
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let mut params = Vec::with_capacity(Self::param_count(&sizes));
        for l in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let scale = math::sqrt(6.0 / (n_in + n_out) as f64);
            for _ in 0..n_in * n_out {
                params.push((2.0 * uniform(rng) - 1.0) * scale);
            }
            for _ in 0..n_out {
                params.push(0.0);
            }
        }
        Mlp {
            sizes,
            activation,
            params,
        }
    }

    pub fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layer_offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        // (weight offset, bias offset, n_in, n_out) per layer.
        let mut out = Vec::new();
        let mut cursor = 0;
        for l in 0..self.sizes.len() - 1 {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            out.push((cursor, cursor + n_in * n_out, n_in, n_out));
            cursor += n_in * n_out + n_out;
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, MlpCache) {
        let layers = self.layer_offsets();
        let last = layers.len() - 1;
        let mut layer_inputs = Vec::with_capacity(layers.len());
        let mut pres = Vec::with_capacity(layers.len());
        let mut current = x.to_vec();
        for (l, (w_off, b_off, n_in, n_out)) in layers.iter().copied().enumerate() {
            debug_assert_eq!(current.len(), n_in);
            let mut pre = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &self.params[w_off + o * n_in..w_off + (o + 1) * n_in];
                let mut acc = self.params[b_off + o];
                for (wi, xi) in row.iter().zip(current.iter()) {
                    acc += wi * xi;
                }
                pre[o] = acc;
            }
            let post = if l == last {
                pre.clone()
            } else {
                pre.iter().map(|&p| self.activation.apply(p)).collect()
            };
            layer_inputs.push(current);
            pres.push(pre);
            current = post;
        }
        (
            current,
            MlpCache {
                layer_inputs,
                pre: pres,
            },
        )
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, cache: &MlpCache, d_out: &[f64], grad: &mut [f64]) {
        let layers = self.layer_offsets();
        let mut delta = d_out.to_vec();
        for l in (0..layers.len()).rev() {
            let (w_off, b_off, n_in, n_out) = layers[l];
            let input = &cache.layer_inputs[l];
            for o in 0..n_out {
                grad[b_off + o] += delta[o];
                let row = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                for (g, xi) in row.iter_mut().zip(input.iter()) {
                    *g += delta[o] * xi;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let row = &self.params[w_off + o * n_in..w_off + (o + 1) * n_in];
                    for (p, wi) in prev.iter_mut().zip(row.iter()) {
                        *p += delta[o] * wi;
                    }
                }
                let pre_prev = &cache.pre[l - 1];
                for (p, &pp) in prev.iter_mut().zip(pre_prev.iter()) {
                    *p *= self.activation.derivative(pp);
                }
                delta = prev;
            }
        }
    }
}

/// Adam optimizer over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - math::pow(self.beta1, self.t as f64);
        let b2t = 1.0 - math::pow(self.beta2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
        }
    }
}

/// Action head layout of a policy network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionHead {
    Continuous { dim: usize, bound: f64 },
    Discrete { count: usize },
}

/// The actor: trunk MLP plus slicing conventions for its output vector.
///
/// Output layout, continuous head: `[mean(dim), log_std(dim), mode_logits]`
/// where the mode logits exist only when the automaton has eps edges (entry 0
/// = act in the environment, entry 1+j = take eps edge j). Discrete head:
/// `[action_logits(count), eps logits]`.
#[derive(Debug, Clone)]
pub struct PolicyNet {
    pub net: Mlp,
    pub head: ActionHead,
    pub obs_dim: usize,
    pub eps_ids: Vec<String>,
    pub eps_sources: Vec<StateId>,
}

/// An action in head coordinates, as stored in training batches.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionRecord {
    Continuous(Vec<f64>),
    Discrete(usize),
    /// Index into the automaton's eps-edge list.
    Jump(usize),
}

impl PolicyNet {
    pub fn new(
        obs_dim: usize,
        head: ActionHead,
        ldba: &Ldba,
        hidden: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let eps_ids: Vec<String> = ldba.eps_edges.iter().map(|e| e.jump_id.clone()).collect();
        let eps_sources: Vec<StateId> = ldba.eps_edges.iter().map(|e| e.from).collect();
        let out_dim = match head {
            ActionHead::Continuous { dim, .. } => {
                2 * dim + if eps_ids.is_empty() { 0 } else { 1 + eps_ids.len() }
            }
            ActionHead::Discrete { count } => count + eps_ids.len(),
        };
        let net = Mlp::new(vec![obs_dim, hidden, hidden, out_dim], Activation::Relu, rng);
        PolicyNet {
            net,
            head,
            obs_dim,
            eps_ids,
            eps_sources,
        }
    }

    /// Jump availability mask at automaton state `b`, aligned with eps edges.
    pub fn jump_mask(&self, b: StateId) -> Vec<bool> {
        self.eps_sources.iter().map(|&src| src == b).collect()
    }

    fn sample(&self, out: &[f64], mask: &[bool], rng: &mut ChaCha8Rng) -> ActionRecord {
        match self.head {
            ActionHead::Continuous { dim, .. } => {
                if !self.eps_ids.is_empty() {
                    let logits = &out[2 * dim..];
                    let mut full_mask = vec![true];
                    full_mask.extend_from_slice(mask);
                    let probs = masked_softmax(logits, &full_mask);
                    let choice = sample_categorical(&probs, rng);
                    if choice > 0 {
                        return ActionRecord::Jump(choice - 1);
                    }
                }
                let mut a = Vec::with_capacity(dim);
                for d in 0..dim {
                    let mean = out[d];
                    let std = math::exp(out[dim + d].clamp(LOG_STD_MIN, LOG_STD_MAX));
                    a.push(mean + std * gaussian(rng));
                }
                ActionRecord::Continuous(a)
            }
            ActionHead::Discrete { count } => {
                let mut full_mask = vec![true; count];
                full_mask.extend_from_slice(mask);
                let probs = masked_softmax(out, &full_mask);
                let choice = sample_categorical(&probs, rng);
                if choice < count {
                    ActionRecord::Discrete(choice)
                } else {
                    ActionRecord::Jump(choice - count)
                }
            }
        }
    }

    /// Log-probability, entropy, and their gradients with respect to the
    /// network output, for one sample.
    fn logp_entropy(
        &self,
        out: &[f64],
        action: &ActionRecord,
        mask: &[bool],
    ) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let mut d_logp = vec![0.0; out.len()];
        let mut d_ent = vec![0.0; out.len()];
        match self.head {
            ActionHead::Continuous { dim, .. } => {
                let has_modes = !self.eps_ids.is_empty();
                let (mode_logp, mode_entropy, p_env) = if has_modes {
                    let logits = &out[2 * dim..];
                    let mut full_mask = vec![true];
                    full_mask.extend_from_slice(mask);
                    let probs = masked_softmax(logits, &full_mask);
                    let chosen = match action {
                        ActionRecord::Jump(j) => 1 + j,
                        _ => 0,
                    };
                    let h_cat = categorical_entropy(&probs);
                    for (k, &avail) in full_mask.iter().enumerate() {
                        if avail {
                            d_logp[2 * dim + k] =
                                if k == chosen { 1.0 } else { 0.0 } - probs[k];
                            d_ent[2 * dim + k] = -probs[k] * (safe_ln(probs[k]) + h_cat);
                        }
                    }
                    (safe_ln(probs[chosen]), h_cat, probs[0])
                } else {
                    (0.0, 0.0, 1.0)
                };

                let mut gauss_logp = 0.0;
                let mut gauss_entropy = 0.0;
                let mut d_gauss_mean = vec![0.0; dim];
                let mut d_gauss_logstd = vec![0.0; dim];
                let mut logstd_active = vec![false; dim];
                for d in 0..dim {
                    let raw = out[dim + d];
                    let clamped = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
                    logstd_active[d] = raw > LOG_STD_MIN && raw < LOG_STD_MAX;
                    gauss_entropy += clamped + 0.5 * (LN_2PI + 1.0);
                    if let ActionRecord::Continuous(a) = action {
                        let std = math::exp(clamped);
                        let z = (a[d] - out[d]) / std;
                        gauss_logp += -0.5 * z * z - clamped - 0.5 * LN_2PI;
                        d_gauss_mean[d] = z / std;
                        d_gauss_logstd[d] = z * z - 1.0;
                    }
                }

                let logp = match action {
                    ActionRecord::Continuous(_) => {
                        for d in 0..dim {
                            d_logp[d] = d_gauss_mean[d];
                            if logstd_active[d] {
                                d_logp[dim + d] = d_gauss_logstd[d];
                            }
                        }
                        mode_logp + gauss_logp
                    }
                    ActionRecord::Jump(_) => mode_logp,
                    ActionRecord::Discrete(_) => f64::NEG_INFINITY,
                };
                let entropy = mode_entropy + p_env * gauss_entropy;
                // Entropy also flows through log_std and, with modes, through
                // the probability of acting in the environment.
                for d in 0..dim {
                    if logstd_active[d] {
                        d_ent[dim + d] += p_env;
                    }
                }
                if has_modes {
                    let logits_off = 2 * dim;
                    let mut full_mask = vec![true];
                    full_mask.extend_from_slice(mask);
                    let probs = masked_softmax(&out[logits_off..], &full_mask);
                    for (k, &avail) in full_mask.iter().enumerate() {
                        if avail {
                            let dp_env = probs[0] * (if k == 0 { 1.0 } else { 0.0 } - probs[k]);
                            d_ent[logits_off + k] += dp_env * gauss_entropy;
                        }
                    }
                }
                (logp, entropy, d_logp, d_ent)
            }
            ActionHead::Discrete { count } => {
                let mut full_mask = vec![true; count];
                full_mask.extend_from_slice(mask);
                let probs = masked_softmax(out, &full_mask);
                let chosen = match action {
                    ActionRecord::Discrete(a) => *a,
                    ActionRecord::Jump(j) => count + j,
                    ActionRecord::Continuous(_) => 0,
                };
                let h = categorical_entropy(&probs);
                for (k, &avail) in full_mask.iter().enumerate() {
                    if avail {
                        d_logp[k] = if k == chosen { 1.0 } else { 0.0 } - probs[k];
                        d_ent[k] = -probs[k] * (safe_ln(probs[k]) + h);
                    }
                }
                (safe_ln(probs[chosen]), h, d_logp, d_ent)
            }
        }
    }

    fn record_to_action(&self, record: &ActionRecord) -> ProductAction {
        match record {
            ActionRecord::Continuous(a) => ProductAction::Env(EnvAction::Continuous(a.clone())),
            ActionRecord::Discrete(a) => ProductAction::Env(EnvAction::Discrete(*a)),
            ActionRecord::Jump(j) => ProductAction::Jump(self.eps_ids[*j].clone()),
        }
    }
}

impl Policy for PolicyNet {
    fn act(&self, obs: &ProductObs<'_>, rng: &mut ChaCha8Rng) -> ProductAction {
        let x = encode_obs(&obs.env_obs, obs.b, obs.num_states, obs.frontier);
        let out = self.net.forward(&x);
        let mask = self.jump_mask(obs.b);
        let record = self.sample(&out, &mask, rng);
        self.record_to_action(&record)
    }
}

/// The critic: same input encoding, scalar output, tanh hidden layers.
#[derive(Debug, Clone)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn new(obs_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        ValueNet {
            net: Mlp::new(vec![obs_dim, hidden, hidden, 1], Activation::Tanh, rng),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.net.forward(x)[0]
    }
}

fn safe_ln(p: f64) -> f64 {
    math::ln(p.max(1e-300))
}

fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let mut max = f64::NEG_INFINITY;
    for (l, &avail) in logits.iter().zip(mask.iter()) {
        if avail && *l > max {
            max = *l;
        }
    }
    let mut probs = vec![0.0; logits.len()];
    let mut total = 0.0;
    for (i, (l, &avail)) in logits.iter().zip(mask.iter()).enumerate() {
        if avail {
            probs[i] = math::exp(l - max);
            total += probs[i];
        }
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
    probs
}

fn categorical_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * safe_ln(p))
        .sum()
}

fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Product observation encoding: environment observation, one-hot automaton
/// state, frontier bits.
pub fn encode_obs(env_obs: &[f64], b: StateId, num_states: usize, frontier: &Frontier) -> Vec<f64> {
    let mut x = Vec::with_capacity(env_obs.len() + num_states + frontier.len());
    x.extend_from_slice(env_obs);
    for s in 0..num_states {
        x.push(if s == b { 1.0 } else { 0.0 });
    }
    for &bit in frontier.bits() {
        x.push(if bit { 1.0 } else { 0.0 });
    }
    x
}

/// One sample of an actor update batch.
#[derive(Debug, Clone)]
pub struct ActorSample {
    pub obs: Vec<f64>,
    pub action: ActionRecord,
    /// Jump availability at the source automaton state.
    pub jump_mask: Vec<bool>,
    pub logp_old: f64,
    pub advantage: f64,
}

/// Clipped-ratio surrogate loss with entropy bonus; returns the loss and,
/// when requested, its gradient with respect to the policy parameters.
pub fn actor_loss(
    policy: &PolicyNet,
    batch: &[ActorSample],
    clip_epsilon: f64,
    entropy_coef: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = batch.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = if want_grad {
        Some(vec![0.0; policy.net.num_params()])
    } else {
        None
    };
    for sample in batch {
        let (out, cache) = policy.net.forward_cached(&sample.obs);
        let (logp, entropy, d_logp, d_ent) =
            policy.logp_entropy(&out, &sample.action, &sample.jump_mask);
        let ratio = math::exp(logp - sample.logp_old);
        let unclipped = ratio * sample.advantage;
        let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon) * sample.advantage;
        let surrogate = unclipped.min(clipped);
        loss += (-surrogate - entropy_coef * entropy) / n;
        if let Some(grad) = grad.as_mut() {
            // The clipped branch has zero derivative outside the trust band
            // and matches the unclipped one inside it.
            let d_surr_d_logp = if unclipped <= clipped {
                sample.advantage * ratio
            } else {
                0.0
            };
            let mut d_out = vec![0.0; out.len()];
            for i in 0..out.len() {
                d_out[i] = (-d_surr_d_logp * d_logp[i] - entropy_coef * d_ent[i]) / n;
            }
            policy.net.backward(&cache, &d_out, grad);
        }
    }
    (loss, grad)
}

/// Mean squared error of the critic against targets; loss plus gradient.
pub fn critic_loss(
    value: &ValueNet,
    obs: &[Vec<f64>],
    targets: &[f64],
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = obs.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = if want_grad {
        Some(vec![0.0; value.net.num_params()])
    } else {
        None
    };
    for (x, &target) in obs.iter().zip(targets.iter()) {
        let (out, cache) = value.net.forward_cached(x);
        let err = out[0] - target;
        loss += err * err / n;
        if let Some(grad) = grad.as_mut() {
            value.net.backward(&cache, &[2.0 * err / n], grad);
        }
    }
    (loss, grad)
}

/// Maximum relative disagreement between the analytic actor gradient and a
/// central finite-difference estimate (step `1e-5`).
pub fn policy_gradient_check(
    policy: &PolicyNet,
    batch: &[ActorSample],
    clip_epsilon: f64,
    entropy_coef: f64,
) -> f64 {
    let (_, grad) = actor_loss(policy, batch, clip_epsilon, entropy_coef, true);
    let grad = grad.expect("gradient requested");
    let step = 1e-5;
    let mut probe = policy.clone();
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let original = probe.net.params[i];
        probe.net.params[i] = original + step;
        let (plus, _) = actor_loss(&probe, batch, clip_epsilon, entropy_coef, false);
        probe.net.params[i] = original - step;
        let (minus, _) = actor_loss(&probe, batch, clip_epsilon, entropy_coef, false);
        probe.net.params[i] = original;
        let fd = (plus - minus) / (2.0 * step);
        let denom = f64::max(math::abs(grad[i]) + math::abs(fd), 1e-6);
        let rel = math::abs(grad[i] - fd) / denom;
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

/// Which LTL reward stream drives learning.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardMode {
    /// Cycle-shaped rewards per the given shaping configuration.
    Cycler(ShapingConfig),
    /// The raw accepting-state indicator.
    Unshaped,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gamma_phi: f64,
    pub lambda: f64,
    /// Trajectories per update batch.
    pub batch_size: usize,
    pub horizon: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Total trajectory budget; training stops once spent.
    pub episodes: usize,
    pub seed: u64,
    pub mode: RewardMode,
    pub entropy_coef: f64,
    /// Optimization epochs per batch.
    pub update_epochs: usize,
    pub clip_epsilon: f64,
    pub hidden: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let checks: [(&'static str, bool); 7] = [
            ("gamma", 0.0 < self.gamma && self.gamma < 1.0),
            ("gamma_phi", 0.0 < self.gamma_phi && self.gamma_phi < 1.0),
            ("lambda", self.lambda >= 0.0),
            ("batch_size", self.batch_size > 0),
            ("horizon", self.horizon > 0),
            ("actor_lr", self.actor_lr > 0.0),
            ("critic_lr", self.critic_lr > 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(TrainError::Config(name));
            }
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub iteration: usize,
    pub episodes_used: usize,
    /// Mean eventually-discounted unshaped LTL return per trajectory.
    pub ltl_return: f64,
    /// Mean eventually-discounted shaped LTL return per trajectory.
    pub shaped_return: f64,
    /// Mean undiscounted MDP reward per trajectory.
    pub mdp_return: f64,
    /// Mean accepting-state visits per trajectory.
    pub accepting_visits: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    /// Mean sampled-action standard deviation (continuous heads; 0 otherwise).
    pub policy_std: f64,
}

#[derive(Debug)]
pub enum TrainError {
    Config(&'static str),
    Ldba(LdbaError),
    Shaping(ShapingError),
    /// Loss became non-finite.
    Diverged { iteration: usize },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Config(name) => write!(f, "invalid training parameter: {name}"),
            TrainError::Ldba(e) => write!(f, "automaton: {e}"),
            TrainError::Shaping(e) => write!(f, "shaping: {e}"),
            TrainError::Diverged { iteration } => {
                write!(f, "training diverged (non-finite loss) at iteration {iteration}")
            }
        }
    }
}

impl From<LdbaError> for TrainError {
    fn from(e: LdbaError) -> Self {
        TrainError::Ldba(e)
    }
}

impl From<ShapingError> for TrainError {
    fn from(e: ShapingError) -> Self {
        TrainError::Shaping(e)
    }
}

/// Everything [`train`] hands back.
pub struct TrainResult {
    pub policy: PolicyNet,
    pub value: ValueNet,
    pub log: Vec<LogRow>,
}

/// Builds a reward trace for a rollout under the configured mode.
pub fn trace_for(
    traj: &ProductTrajectory,
    ldba: &Ldba,
    maips: &[CyclePath],
    macs: &[CyclePath],
    mode: &RewardMode,
    discounts: Discounts,
) -> Result<RewardTrace, ShapingError> {
    match mode {
        RewardMode::Cycler(cfg) => cycler_assign(traj, ldba, maips, macs, cfg, discounts),
        RewardMode::Unshaped => {
            let transitions = traj.transitions();
            if transitions == 0 {
                return Err(ShapingError::TrajectoryTooShort);
            }
            let mut flags = vec![false; transitions];
            let mut unshaped = vec![0.0; transitions];
            let mut r_mdp = vec![0.0; transitions];
            for t in 0..transitions {
                let dst = &traj.steps[t + 1];
                flags[t] = ldba.is_accepting(dst.b);
                unshaped[t] = if flags[t] { 1.0 } else { 0.0 };
                r_mdp[t] = dst.r_mdp;
            }
            Ok(RewardTrace {
                r_cycler: vec![0.0; transitions],
                r_ltl_unshaped: unshaped,
                r_mdp,
                accepting_flags: flags,
                b0_accepting: ldba.is_accepting(traj.steps[0].b),
                segments: Vec::new(),
                discounts,
            })
        }
    }
}

/// Per-transition scalar training rewards: the dual reward with both
/// discounts baked in.
pub fn scalar_rewards(trace: &RewardTrace, mode: &RewardMode) -> Vec<f64> {
    let stream = match mode {
        RewardMode::Cycler(_) => LtlStream::Shaped,
        RewardMode::Unshaped => LtlStream::Unshaped,
    };
    let weighted = weighted_ltl_rewards(trace, stream, VisitCounting::Inclusive);
    let gamma = trace.discounts.gamma;
    let lambda = trace.discounts.lambda;
    weighted
        .iter()
        .enumerate()
        .map(|(t, &w)| math::pow(gamma, t as f64) * trace.r_mdp[t] + lambda * w)
        .collect()
}

/// Batched clipped-ratio policy-gradient training loop.
pub fn train<E: Env>(
    env: &E,
    ldba: &Ldba,
    maips: &[CyclePath],
    macs: &[CyclePath],
    cfg: &TrainConfig,
) -> Result<TrainResult, TrainError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let obs_dim = env.obs_dim() + ldba.num_states + ldba.element_count();
    let head = match env.action_space() {
        ActionSpace::Continuous { dim, bound } => ActionHead::Continuous { dim, bound },
        ActionSpace::Discrete { count } => ActionHead::Discrete { count },
    };
    let mut policy = PolicyNet::new(obs_dim, head, ldba, cfg.hidden, &mut rng);
    let mut value = ValueNet::new(obs_dim, cfg.hidden, &mut rng);
    let mut actor_opt = Adam::new(cfg.actor_lr, policy.net.num_params());
    let mut critic_opt = Adam::new(cfg.critic_lr, value.net.num_params());

    let discounts = Discounts {
        gamma: cfg.gamma,
        gamma_phi: cfg.gamma_phi,
        lambda: cfg.lambda,
    };

    let mut log = Vec::new();
    let mut episodes_used = 0;
    let mut iteration = 0;
    while episodes_used + cfg.batch_size <= cfg.episodes {
        let mut samples: Vec<ActorSample> = Vec::new();
        let mut critic_obs: Vec<Vec<f64>> = Vec::new();
        let mut targets: Vec<f64> = Vec::new();
        let mut sum_ltl = 0.0;
        let mut sum_shaped = 0.0;
        let mut sum_mdp = 0.0;
        let mut sum_visits = 0.0;
        for _ in 0..cfg.batch_size {
            let seed = rng.next_u64();
            let traj = rollout(&policy, env, ldba, cfg.horizon, seed)?;
            let trace = trace_for(&traj, ldba, maips, macs, &cfg.mode, discounts)?;
            let rewards = scalar_rewards(&trace, &cfg.mode);
            // Undiscounted reward-to-go of the pre-discounted stream.
            let mut returns = vec![0.0; rewards.len()];
            let mut acc = 0.0;
            for t in (0..rewards.len()).rev() {
                acc += rewards[t];
                returns[t] = acc;
            }
            for t in 0..traj.transitions() {
                let src = &traj.steps[t];
                let x = encode_obs(
                    &env.observe(&src.env_state),
                    src.b,
                    ldba.num_states,
                    &src.frontier,
                );
                let action = match traj.steps[t + 1].action.as_ref().expect("non-initial step") {
                    ProductAction::Env(EnvAction::Continuous(a)) => {
                        ActionRecord::Continuous(a.clone())
                    }
                    ProductAction::Env(EnvAction::Discrete(a)) => ActionRecord::Discrete(*a),
                    ProductAction::Jump(id) => {
                        let element = ldba.jump(src.b, id)?.1;
                        ActionRecord::Jump(element - ldba.edges.len())
                    }
                };
                samples.push(ActorSample {
                    jump_mask: policy.jump_mask(src.b),
                    obs: x.clone(),
                    action,
                    logp_old: 0.0, // filled in below, before any update
                    advantage: returns[t],
                });
                critic_obs.push(x);
                targets.push(returns[t]);
            }
            sum_ltl +=
                eventual_discounted_value(&trace, LtlStream::Unshaped, VisitCounting::Inclusive);
            sum_shaped +=
                eventual_discounted_value(&trace, LtlStream::Shaped, VisitCounting::Inclusive);
            sum_mdp += trace.r_mdp.iter().sum::<f64>();
            sum_visits += accepting_visits(&traj, ldba) as f64;
            episodes_used += 1;
        }

        // Old log-probabilities and baseline, before any update.
        for sample in samples.iter_mut() {
            let out = policy.net.forward(&sample.obs);
            let (logp, _, _, _) = policy.logp_entropy(&out, &sample.action, &sample.jump_mask);
            sample.logp_old = logp;
            sample.advantage -= value.value(&sample.obs);
        }
        normalize_advantages(&mut samples);

        let mut last_actor_loss = 0.0;
        let mut last_critic_loss = 0.0;
        for _ in 0..cfg.update_epochs.max(1) {
            let (c_loss, c_grad) = critic_loss(&value, &critic_obs, &targets, true);
            critic_opt.step(&mut value.net.params, &c_grad.expect("grad"));
            let (a_loss, a_grad) =
                actor_loss(&policy, &samples, cfg.clip_epsilon, cfg.entropy_coef, true);
            actor_opt.step(&mut policy.net.params, &a_grad.expect("grad"));
            last_actor_loss = a_loss;
            last_critic_loss = c_loss;
            if !a_loss.is_finite() || !c_loss.is_finite() {
                return Err(TrainError::Diverged { iteration });
            }
        }

        let n = cfg.batch_size as f64;
        log.push(LogRow {
            iteration,
            episodes_used,
            ltl_return: sum_ltl / n,
            shaped_return: sum_shaped / n,
            mdp_return: sum_mdp / n,
            accepting_visits: sum_visits / n,
            actor_loss: last_actor_loss,
            critic_loss: last_critic_loss,
        });
        iteration += 1;
    }

    Ok(TrainResult { policy, value, log })
}

fn normalize_advantages(samples: &mut [ActorSample]) {
    let n = samples.len() as f64;
    if n < 2.0 {
        return;
    }
    let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|s| (s.advantage - mean) * (s.advantage - mean))
        .sum::<f64>()
        / n;
    let std = math::sqrt(var);
    if std < 1e-8 {
        return;
    }
    for s in samples.iter_mut() {
        s.advantage = (s.advantage - mean) / std;
    }
}

/// Evaluation statistics over stochastic rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalStats {
    pub rollouts: usize,
    pub mean_visits: f64,
    pub std_visits: f64,
    pub mean_mdp: f64,
    pub std_mdp: f64,
}

impl fmt::Display for EvalStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "visits {:.2} +- {:.2}, mdp reward {:.2} +- {:.2} ({} rollouts)",
            self.mean_visits, self.std_visits, self.mean_mdp, self.std_mdp, self.rollouts
        )
    }
}

/// Runs `n_rollouts` stochastic rollouts and reports visit and reward
/// statistics.
pub fn evaluate<E: Env, P: Policy + ?Sized>(
    policy: &P,
    env: &E,
    ldba: &Ldba,
    horizon: usize,
    n_rollouts: usize,
    seed: u64,
) -> Result<EvalStats, LdbaError> {
    let mut visits = Vec::with_capacity(n_rollouts);
    let mut rewards = Vec::with_capacity(n_rollouts);
    for i in 0..n_rollouts {
        let traj = rollout(policy, env, ldba, horizon, seed.wrapping_add(i as u64))?;
        visits.push(accepting_visits(&traj, ldba) as f64);
        rewards.push(traj.steps.iter().map(|s| s.r_mdp).sum::<f64>());
    }
    let stats = |xs: &[f64]| -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, math::sqrt(var))
    };
    let (mean_visits, std_visits) = stats(&visits);
    let (mean_mdp, std_mdp) = stats(&rewards);
    Ok(EvalStats {
        rollouts: n_rollouts,
        mean_visits,
        std_visits,
        mean_mdp,
        std_mdp,
    })
}

/// Deterministic random fixtures for gradient checking: a small policy and a
/// four-sample batch, optionally exercising jump logits or a discrete head.
pub fn random_check_fixture(
    seed: u64,
    with_jumps: bool,
    discrete: bool,
) -> (PolicyNet, Vec<ActorSample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs_dim = 5;
    let hidden = 8;
    let text = if with_jumps {
        "ldba v1\naps: a\nstates: 3\ninitial: 0\nnondet: 0\naccepting: 2\nedge: 1 -> 2 : a\nedge: 1 -> 1 : !a\nedge: 2 -> 2 : true\neps: 0 -> 1 : e0\neps: 0 -> 2 : e1\n"
    } else {
        "ldba v1\naps: a\nstates: 1\ninitial: 0\naccepting: 0\nedge: 0 -> 0 : true\n"
    };
    let ldba = crate::automaton::parse_ldba(
        text,
        crate::automaton::ParseOptions { allow_partial: true },
    )
    .expect("fixture automaton");
    let head = if discrete {
        ActionHead::Discrete { count: 3 }
    } else {
        ActionHead::Continuous { dim: 2, bound: 1.0 }
    };
    let policy = PolicyNet::new(obs_dim, head, &ldba, hidden, &mut rng);
    let n_eps = policy.eps_ids.len();
    let mut samples = Vec::new();
    for _ in 0..4 {
        let obs: Vec<f64> = (0..obs_dim).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect();
        let jump_mask: Vec<bool> = (0..n_eps).map(|_| true).collect();
        let action = if with_jumps && uniform(&mut rng) < 0.4 {
            ActionRecord::Jump(if uniform(&mut rng) < 0.5 { 0 } else { 1 })
        } else if discrete {
            ActionRecord::Discrete((uniform(&mut rng) * 3.0) as usize % 3)
        } else {
            ActionRecord::Continuous(vec![gaussian(&mut rng), gaussian(&mut rng)])
        };
        samples.push(ActorSample {
            obs,
            action,
            jump_mask,
            logp_old: 0.3 * gaussian(&mut rng),
            advantage: gaussian(&mut rng),
        });
    }
    (policy, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{parse_ldba, ParseOptions};
    use crate::env::gridlab_build;
    use alloc::collections::BTreeSet;
    use alloc::string::ToString;

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..6u64 {
            let (policy, batch) = random_check_fixture(seed, seed % 2 == 1, seed % 3 == 2);
            let err = policy_gradient_check(&policy, &batch, 0.2, 0.01);
            assert!(err < 1e-4, "seed {seed}: relative error {err}");
        }
    }

    #[test]
    fn zero_advantage_batch_has_zero_policy_gradient() {
        let (policy, mut batch) = random_check_fixture(11, false, false);
        for s in batch.iter_mut() {
            s.advantage = 0.0;
            // Ratio pinned at 1 so the surrogate is exactly zero.
            let out = policy.net.forward(&s.obs);
            let (logp, _, _, _) = policy.logp_entropy(&out, &s.action, &s.jump_mask);
            s.logp_old = logp;
        }
        let (loss, grad) = actor_loss(&policy, &batch, 0.2, 0.0, true);
        assert_eq!(loss, 0.0);
        assert!(grad.unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut value = ValueNet::new(4, 6, &mut rng);
        let obs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect())
            .collect();
        let targets = vec![0.5, -1.0, 2.0];
        let (_, grad) = critic_loss(&value, &obs, &targets, true);
        let grad = grad.unwrap();
        let step = 1e-5;
        for i in (0..grad.len()).step_by(7) {
            let orig = value.net.params[i];
            value.net.params[i] = orig + step;
            let (plus, _) = critic_loss(&value, &obs, &targets, false);
            value.net.params[i] = orig - step;
            let (minus, _) = critic_loss(&value, &obs, &targets, false);
            value.net.params[i] = orig;
            let fd = (plus - minus) / (2.0 * step);
            assert!(
                math::abs(fd - grad[i]) / f64::max(math::abs(fd) + math::abs(grad[i]), 1e-6)
                    < 1e-4,
                "param {i}: {fd} vs {}",
                grad[i]
            );
        }
    }

    #[test]
    fn bandit_gridlab_concentrates_on_best_action() {
        // One decision: action 1 pays 1, action 0 pays 0; absorbing after.
        let grid = gridlab_build(
            vec!["p".to_string()],
            3,
            2,
            0,
            vec![vec![1, 2], vec![1, 1], vec![2, 2]],
            vec![BTreeSet::new(), BTreeSet::new(), BTreeSet::new()],
            vec![vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let ldba = parse_ldba(
            "ldba v1\naps: p\nstates: 1\ninitial: 0\naccepting:\nedge: 0 -> 0 : true\n",
            ParseOptions::default(),
        )
        .unwrap();
        let cfg = TrainConfig {
            gamma: 0.9,
            gamma_phi: 0.9,
            lambda: 0.0,
            batch_size: 16,
            horizon: 1,
            actor_lr: 0.01,
            critic_lr: 0.01,
            episodes: 16 * 120,
            seed: 0,
            mode: RewardMode::Unshaped,
            entropy_coef: 0.0,
            update_epochs: 1,
            clip_epsilon: 0.2,
            hidden: 8,
        };
        let result = train(&grid, &ldba, &[], &[], &cfg).unwrap();
        let frontier = Frontier::new(ldba.element_count());
        let x = encode_obs(&grid.observe(&[0.0]), 0, ldba.num_states, &frontier);
        let out = result.policy.net.forward(&x);
        let probs = masked_softmax(&out, &[true, true]);
        assert!(probs[1] > 0.9, "p(best action) = {}", probs[1]);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let grid = gridlab_build(
            vec!["p".to_string()],
            2,
            2,
            0,
            vec![vec![0, 1], vec![1, 0]],
            vec![BTreeSet::new(), BTreeSet::from(["p".to_string()])],
            vec![vec![0.1, 0.9], vec![0.0, 0.2]],
        )
        .unwrap();
        let ldba = parse_ldba(
            "ldba v1\naps: p\nstates: 2\ninitial: 0\naccepting: 1\nedge: 0 -> 1 : p\nedge: 0 -> 0 : !p\nedge: 1 -> 1 : p\nedge: 1 -> 0 : !p\n",
            ParseOptions::default(),
        )
        .unwrap();
        let cfg = TrainConfig {
            gamma: 0.9,
            gamma_phi: 0.9,
            lambda: 10.0,
            batch_size: 4,
            horizon: 6,
            actor_lr: 0.003,
            critic_lr: 0.01,
            episodes: 40,
            seed: 123,
            mode: RewardMode::Cycler(ShapingConfig::discrete()),
            entropy_coef: 0.01,
            update_epochs: 2,
            clip_epsilon: 0.2,
            hidden: 8,
        };
        let macs = crate::cycles::find_macs(&ldba);
        let maips = crate::cycles::find_maips(&ldba);
        let a = train(&grid, &ldba, &maips, &macs, &cfg).unwrap();
        let b = train(&grid, &ldba, &maips, &macs, &cfg).unwrap();
        for (ra, rb) in a.log.iter().zip(b.log.iter()) {
            assert_eq!(ra, rb);
        }
        assert_eq!(a.policy.net.params, b.policy.net.params);
    }

    #[test]
    fn evaluate_reports_zero_variance_for_single_rollout() {
        let grid = gridlab_build(
            vec!["p".to_string()],
            2,
            1,
            0,
            vec![vec![1], vec![0]],
            vec![BTreeSet::new(), BTreeSet::from(["p".to_string()])],
            vec![vec![0.0], vec![1.0]],
        )
        .unwrap();
        let ldba = parse_ldba(
            "ldba v1\naps: p\nstates: 2\ninitial: 0\naccepting: 1\nedge: 0 -> 1 : p\nedge: 0 -> 0 : !p\nedge: 1 -> 1 : p\nedge: 1 -> 0 : !p\n",
            ParseOptions::default(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let policy = PolicyNet::new(
            grid.obs_dim() + ldba.num_states + ldba.element_count(),
            ActionHead::Discrete { count: 1 },
            &ldba,
            4,
            &mut rng,
        );
        let stats = evaluate(&policy, &grid, &ldba, 8, 1, 7).unwrap();
        assert_eq!(stats.std_visits, 0.0);
        assert_eq!(stats.std_mdp, 0.0);
        assert!(stats.mean_visits >= 1.0);
    }
}
