//! Environments: the continuous FlatWorld benchmark and the tabular GridLab
//! used by the exact oracle.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::ltl::{QsConfig, RobustnessVector};
use crate::math;

/// Shape of an environment's action set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionSpace {
    Continuous { dim: usize, bound: f64 },
    Discrete { count: usize },
}

/// A concrete environment action.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvAction {
    Continuous(Vec<f64>),
    Discrete(usize),
}

/// A labeled environment with optional per-proposition robustness signals.
pub trait Env {
    fn reset(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    fn step(&self, state: &[f64], action: &EnvAction, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64);
    /// Propositions holding at `state`.
    fn label(&self, state: &[f64]) -> BTreeSet<String>;
    /// Robustness measures at `state`, when the environment defines them.
    fn robustness(&self, state: &[f64]) -> Option<RobustnessVector>;
    fn action_space(&self) -> ActionSpace;
    /// Normalized observation vector fed to function approximators.
    fn observe(&self, state: &[f64]) -> Vec<f64>;
    fn obs_dim(&self) -> usize;
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random mantissa bits -> [0, 1).
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// A circular labeled region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Region {
    pub fn distance(&self, x: &[f64]) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        math::sqrt(dx * dx + dy * dy)
    }

    /// Closed containment: boundary points belong to the region.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance(x) <= self.radius
    }
}

/// A reward-bearing region without a label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusRegion {
    pub center: [f64; 2],
    pub radius: f64,
    pub reward: f64,
}

/// Geometry and dynamics parameters for FlatWorld.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatWorldConfig {
    /// Labeled regions in proposition order.
    pub regions: Vec<(String, Region)>,
    pub bonus_regions: Vec<BonusRegion>,
    pub action_bound: f64,
    pub start: [f64; 2],
    pub world_min: [f64; 2],
    pub world_max: [f64; 2],
    pub rho_min: f64,
    pub rho_max: f64,
}

impl Default for FlatWorldConfig {
    fn default() -> Self {
        let regions = vec![
            ("r".into(), Region { center: [0.5, -1.0], radius: 0.4 }),
            ("g".into(), Region { center: [0.5, 1.0], radius: 0.4 }),
            ("b".into(), Region { center: [0.0, 0.0], radius: 0.4 }),
            ("y".into(), Region { center: [-1.0, 1.0], radius: 0.4 }),
        ];
        let world_min = [-1.5, -1.5];
        let world_max = [1.5, 1.5];
        let dx = world_max[0] - world_min[0];
        let dy = world_max[1] - world_min[1];
        FlatWorldConfig {
            regions,
            bonus_regions: Vec::new(),
            action_bound: 1.0,
            start: [-1.0, -1.0],
            world_min,
            world_max,
            rho_min: -math::sqrt(dx * dx + dy * dy),
            rho_max: 0.4,
        }
    }
}

impl FlatWorldConfig {
    /// Scatters `count` bonus regions uniformly, avoiding the labeled
    /// regions, with placement derived from `seed`.
    pub fn with_random_bonuses(mut self, seed: u64, count: usize, radius: f64, reward: f64) -> Self {
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.bonus_regions.clear();
        let mut attempts = 0;
        while self.bonus_regions.len() < count && attempts < 10_000 {
            attempts += 1;
            let x = self.world_min[0] + uniform(&mut rng) * (self.world_max[0] - self.world_min[0]);
            let y = self.world_min[1] + uniform(&mut rng) * (self.world_max[1] - self.world_min[1]);
            let overlaps = self
                .regions
                .iter()
                .any(|(_, region)| region.distance(&[x, y]) <= region.radius + radius);
            if !overlaps {
                self.bonus_regions.push(BonusRegion {
                    center: [x, y],
                    radius,
                    reward,
                });
            }
        }
        self
    }

    /// Quantitative-semantics configuration induced by the geometry: zero
    /// thresholds, range `[rho_min, rho_max]`.
    pub fn qs_config(&self) -> QsConfig {
        QsConfig::new(self.rho_min, self.rho_max).expect("world geometry gives a valid range")
    }
}

/// The FlatWorld environment: position in the plane, displacement dynamics
/// `x' = x + a/10`, closed circular labeled regions, and per-step bonus
/// rewards for occupying bonus regions.
#[derive(Debug, Clone)]
pub struct FlatWorld {
    pub cfg: FlatWorldConfig,
}

impl FlatWorld {
    pub fn new(cfg: FlatWorldConfig) -> Self {
        Self { cfg }
    }

    /// Dynamics: clip the action to the bound, move by a tenth of it, clip
    /// to the world box; earn every bonus region containing the new point.
    pub fn fw_step(&self, x: &[f64], a: &[f64]) -> (Vec<f64>, f64) {
        let cfg = &self.cfg;
        let mut next = vec![0.0; 2];
        for d in 0..2 {
            let ad = a.get(d).copied().unwrap_or(0.0).clamp(-cfg.action_bound, cfg.action_bound);
            next[d] = (x[d] + ad / 10.0).clamp(cfg.world_min[d], cfg.world_max[d]);
        }
        let reward: f64 = cfg
            .bonus_regions
            .iter()
            .filter(|bonus| {
                let dx = next[0] - bonus.center[0];
                let dy = next[1] - bonus.center[1];
                math::sqrt(dx * dx + dy * dy) <= bonus.radius
            })
            .map(|bonus| bonus.reward)
            .sum();
        (next, reward)
    }

    pub fn fw_label(&self, x: &[f64]) -> BTreeSet<String> {
        self.cfg
            .regions
            .iter()
            .filter(|(_, region)| region.contains(x))
            .map(|(name, _)| name.clone())
            .collect()
    }

    /// Signed distance into each region (`radius - distance`), clipped to the
    /// configured range. Positive inside, zero on the boundary.
    pub fn fw_robustness(&self, x: &[f64]) -> RobustnessVector {
        RobustnessVector::from_pairs(self.cfg.regions.iter().map(|(name, region)| {
            let value = (region.radius - region.distance(x)).clamp(self.cfg.rho_min, self.cfg.rho_max);
            (name.clone(), value)
        }))
    }
}

impl Env for FlatWorld {
    fn reset(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.cfg.start.to_vec()
    }

    fn step(&self, state: &[f64], action: &EnvAction, _rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        match action {
            EnvAction::Continuous(a) => self.fw_step(state, a),
            EnvAction::Discrete(_) => (state.to_vec(), 0.0),
        }
    }

    fn label(&self, state: &[f64]) -> BTreeSet<String> {
        self.fw_label(state)
    }

    fn robustness(&self, state: &[f64]) -> Option<RobustnessVector> {
        Some(self.fw_robustness(state))
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous {
            dim: 2,
            bound: self.cfg.action_bound,
        }
    }

    fn observe(&self, state: &[f64]) -> Vec<f64> {
        (0..2)
            .map(|d| {
                let mid = 0.5 * (self.cfg.world_min[d] + self.cfg.world_max[d]);
                let half = 0.5 * (self.cfg.world_max[d] - self.cfg.world_min[d]);
                (state[d] - mid) / half
            })
            .collect()
    }

    fn obs_dim(&self) -> usize {
        2
    }
}

/// A finite deterministic labeled MDP given by explicit tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLab {
    pub aps: Vec<String>,
    pub num_states: usize,
    pub num_actions: usize,
    pub start: usize,
    /// `transitions[s][a]` is the unique successor.
    pub transitions: Vec<Vec<usize>>,
    pub labels: Vec<BTreeSet<String>>,
    /// `rewards[s][a]`.
    pub rewards: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridLabError {
    WrongRowCount { table: &'static str, expected: usize, got: usize },
    WrongRowLength { table: &'static str, state: usize, expected: usize, got: usize },
    BadSuccessor { state: usize, action: usize, target: usize },
    BadStart { start: usize },
    UnknownLabel { state: usize, name: String },
}

impl fmt::Display for GridLabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridLabError::WrongRowCount { table, expected, got } => {
                write!(f, "{table}: expected {expected} rows, got {got}")
            }
            GridLabError::WrongRowLength { table, state, expected, got } => {
                write!(f, "{table}[{state}]: expected {expected} entries, got {got}")
            }
            GridLabError::BadSuccessor { state, action, target } => {
                write!(f, "transition[{state}][{action}] targets out-of-range state {target}")
            }
            GridLabError::BadStart { start } => write!(f, "start state {start} out of range"),
            GridLabError::UnknownLabel { state, name } => {
                write!(f, "state {state} labeled with undeclared proposition '{name}'")
            }
        }
    }
}

/// Validates tables and builds a [`GridLab`].
pub fn gridlab_build(
    aps: Vec<String>,
    num_states: usize,
    num_actions: usize,
    start: usize,
    transitions: Vec<Vec<usize>>,
    labels: Vec<BTreeSet<String>>,
    rewards: Vec<Vec<f64>>,
) -> Result<GridLab, GridLabError> {
    if start >= num_states {
        return Err(GridLabError::BadStart { start });
    }
    if transitions.len() != num_states {
        return Err(GridLabError::WrongRowCount {
            table: "transitions",
            expected: num_states,
            got: transitions.len(),
        });
    }
    if labels.len() != num_states {
        return Err(GridLabError::WrongRowCount {
            table: "labels",
            expected: num_states,
            got: labels.len(),
        });
    }
    if rewards.len() != num_states {
        return Err(GridLabError::WrongRowCount {
            table: "rewards",
            expected: num_states,
            got: rewards.len(),
        });
    }
    for (s, row) in transitions.iter().enumerate() {
        if row.len() != num_actions {
            return Err(GridLabError::WrongRowLength {
                table: "transitions",
                state: s,
                expected: num_actions,
                got: row.len(),
            });
        }
        for (a, &target) in row.iter().enumerate() {
            if target >= num_states {
                return Err(GridLabError::BadSuccessor { state: s, action: a, target });
            }
        }
    }
    for (s, row) in rewards.iter().enumerate() {
        if row.len() != num_actions {
            return Err(GridLabError::WrongRowLength {
                table: "rewards",
                state: s,
                expected: num_actions,
                got: row.len(),
            });
        }
    }
    for (s, label) in labels.iter().enumerate() {
        for name in label {
            if !aps.contains(name) {
                return Err(GridLabError::UnknownLabel {
                    state: s,
                    name: name.clone(),
                });
            }
        }
    }
    Ok(GridLab {
        aps,
        num_states,
        num_actions,
        start,
        transitions,
        labels,
        rewards,
    })
}

impl Env for GridLab {
    fn reset(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![self.start as f64]
    }

    fn step(&self, state: &[f64], action: &EnvAction, _rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
        let s = state[0] as usize;
        let a = match action {
            EnvAction::Discrete(a) => *a,
            EnvAction::Continuous(_) => 0,
        };
        let a = a.min(self.num_actions - 1);
        (vec![self.transitions[s][a] as f64], self.rewards[s][a])
    }

    fn label(&self, state: &[f64]) -> BTreeSet<String> {
        self.labels[state[0] as usize].clone()
    }

    fn robustness(&self, _state: &[f64]) -> Option<RobustnessVector> {
        None
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete {
            count: self.num_actions,
        }
    }

    fn observe(&self, state: &[f64]) -> Vec<f64> {
        let mut onehot = vec![0.0; self.num_states];
        onehot[state[0] as usize] = 1.0;
        onehot
    }

    fn obs_dim(&self) -> usize {
        self.num_states
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn dynamics_match_tenth_scaling() {
        let fw = FlatWorld::new(FlatWorldConfig::default());
        let (next, _) = fw.fw_step(&[-1.0, -1.0], &[1.0, 1.0]);
        assert!((next[0] - -0.9).abs() < 1e-12);
        assert!((next[1] - -0.9).abs() < 1e-12);
        let (stay, _) = fw.fw_step(&[0.3, 0.7], &[0.0, 0.0]);
        assert_eq!(stay, vec![0.3, 0.7]);
    }

    #[test]
    fn walls_clip_motion() {
        let fw = FlatWorld::new(FlatWorldConfig::default());
        let (next, _) = fw.fw_step(&[1.45, 1.5], &[1.0, 1.0]);
        assert_eq!(next, vec![1.5, 1.5]);
    }

    #[test]
    fn bonus_reward_is_positional() {
        let mut cfg = FlatWorldConfig::default();
        cfg.bonus_regions.push(BonusRegion {
            center: [0.0, -1.0],
            radius: 0.2,
            reward: 1.0,
        });
        let fw = FlatWorld::new(cfg);
        let (_, r) = fw.fw_step(&[0.05, -1.0], &[-1.0, 0.0]);
        assert_eq!(r, 1.0);
        let (_, r2) = fw.fw_step(&[1.0, 1.0], &[0.0, 0.0]);
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn labels_use_closed_regions() {
        let fw = FlatWorld::new(FlatWorldConfig::default());
        assert!(fw.fw_label(&[0.5, -1.0]).contains("r"));
        assert!(fw.fw_label(&[-1.4, -1.4]).is_empty());
        // Exactly on the red boundary.
        let boundary = [0.9, -1.0];
        assert!(fw.fw_label(&boundary).contains("r"));
        assert_eq!(fw.fw_robustness(&boundary).get("r").unwrap(), 0.0);
    }

    #[test]
    fn robustness_is_signed_distance_into_region() {
        let fw = FlatWorld::new(FlatWorldConfig::default());
        // Two units outside the boundary.
        let x = [0.5 + 0.4 + 2.0, -1.0];
        assert!((fw.fw_robustness(&x).get("r").unwrap() - -2.0).abs() < 1e-12);
        // At the center the value is the radius.
        assert!((fw.fw_robustness(&[0.5, -1.0]).get("r").unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn label_and_robustness_agree_on_sign() {
        let fw = FlatWorld::new(FlatWorldConfig::default());
        for x in [
            [0.5, -1.0],
            [0.0, 0.0],
            [1.2, 1.2],
            [-1.0, 1.0],
            [0.9, -1.0],
            [0.91, -1.0],
        ] {
            let label = fw.fw_label(&x);
            let rv = fw.fw_robustness(&x);
            for (name, _) in &fw.cfg.regions {
                assert_eq!(
                    label.contains(name),
                    rv.get(name).unwrap() >= 0.0,
                    "disagreement for {name} at {x:?}"
                );
            }
        }
    }

    #[test]
    fn random_bonuses_avoid_labeled_regions() {
        let cfg = FlatWorldConfig::default().with_random_bonuses(7, 8, 0.2, 1.0);
        assert_eq!(cfg.bonus_regions.len(), 8);
        for bonus in &cfg.bonus_regions {
            for (_, region) in &cfg.regions {
                assert!(region.distance(&bonus.center) > region.radius + bonus.radius);
            }
        }
        // Same seed, same layout.
        let again = FlatWorldConfig::default().with_random_bonuses(7, 8, 0.2, 1.0);
        assert_eq!(cfg.bonus_regions, again.bonus_regions);
    }

    #[test]
    fn gridlab_requires_total_tables() {
        let aps = vec!["p".to_string()];
        let err = gridlab_build(
            aps.clone(),
            2,
            2,
            0,
            vec![vec![0, 1]],
            vec![BTreeSet::new(), BTreeSet::new()],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, GridLabError::WrongRowCount { .. }));

        let ok = gridlab_build(
            aps,
            2,
            2,
            0,
            vec![vec![0, 1], vec![1, 0]],
            vec![BTreeSet::new(), BTreeSet::from(["p".to_string()])],
            vec![vec![0.0, 1.0], vec![0.5, 0.0]],
        )
        .unwrap();
        assert_eq!(ok.num_states, 2);
    }

    #[test]
    fn gridlab_ring_with_one_label() {
        let aps = vec!["p".to_string()];
        let ring = gridlab_build(
            aps,
            4,
            1,
            0,
            vec![vec![1], vec![2], vec![3], vec![0]],
            vec![
                BTreeSet::new(),
                BTreeSet::new(),
                BTreeSet::from(["p".to_string()]),
                BTreeSet::new(),
            ],
            vec![vec![0.0]; 4],
        )
        .unwrap();
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = ring.reset(&mut rng);
        let (s1, _) = ring.step(&s, &EnvAction::Discrete(0), &mut rng);
        let (s2, _) = ring.step(&s1, &EnvAction::Discrete(0), &mut rng);
        assert!(ring.label(&s2).contains("p"));
    }
}
