//! JSON schemas for trajectories, environment configurations, tabular MDPs,
//! training configurations, and report outputs.
//!
//! Every file kind carries a `version` string and rejects unknown keys, so a
//! stale or misspelled field fails loudly instead of being ignored.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use cycler_core::automaton::Ldba;
use cycler_core::env::{gridlab_build, BonusRegion, FlatWorldConfig, GridLab, Region};
use cycler_core::ltl::RobustnessVector;
use cycler_core::product::{ProductAction, ProductTrajectory, TrajStep};
use cycler_core::shaping::{Frontier, RewardTrace};

pub const TRAJ_VERSION: &str = "traj v1";
pub const FLATWORLD_VERSION: &str = "flatworld v1";
pub const GRIDLAB_VERSION: &str = "gridlab v1";
pub const TRAIN_VERSION: &str = "train v1";

#[derive(Debug)]
pub enum FormatError {
    Json(serde_json::Error),
    Version { expected: &'static str, got: String },
    Invalid(String),
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatError::Json(e) => write!(f, "json: {e}"),
            FormatError::Version { expected, got } => {
                write!(f, "unsupported version '{got}', expected '{expected}'")
            }
            FormatError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e)
    }
}

fn check_version(expected: &'static str, got: &str) -> Result<(), FormatError> {
    if got == expected {
        Ok(())
    } else {
        Err(FormatError::Version {
            expected,
            got: got.to_string(),
        })
    }
}

/// An action as serialized in trajectory files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged, deny_unknown_fields)]
pub enum ActionDto {
    Continuous(Vec<f64>),
    Jump { jump: String },
    Discrete { discrete: usize },
}

/// One trajectory step on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StepDto {
    pub s: Vec<f64>,
    pub b: usize,
    pub letter: Vec<String>,
    /// Element id of the transition that led into this step.
    pub edge: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ActionDto>,
    pub r_mdp: f64,
    /// Robustness measures at this step, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rv: Option<BTreeMap<String, f64>>,
}

/// A recorded product trajectory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub version: String,
    pub aps: Vec<String>,
    pub steps: Vec<StepDto>,
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &ProductTrajectory, ldba: &Ldba) -> Self {
        let steps = traj
            .steps
            .iter()
            .map(|step| StepDto {
                s: step.env_state.clone(),
                b: step.b,
                letter: ldba.letter_names(step.letter),
                edge: step.fired,
                a: step.action.as_ref().map(|a| match a {
                    ProductAction::Env(cycler_core::env::EnvAction::Continuous(v)) => {
                        ActionDto::Continuous(v.clone())
                    }
                    ProductAction::Env(cycler_core::env::EnvAction::Discrete(i)) => {
                        ActionDto::Discrete { discrete: *i }
                    }
                    ProductAction::Jump(id) => ActionDto::Jump { jump: id.clone() },
                }),
                r_mdp: step.r_mdp,
                rv: step.rv.as_ref().map(|rv| {
                    rv.iter().map(|(k, v)| (k.to_string(), v)).collect()
                }),
            })
            .collect();
        TrajectoryFile {
            version: TRAJ_VERSION.to_string(),
            aps: ldba.aps.clone(),
            steps,
        }
    }

    /// Rebuilds the in-memory trajectory, recomputing frontier snapshots and
    /// checking the recorded automaton path against a replay.
    pub fn into_trajectory(self, ldba: &Ldba) -> Result<ProductTrajectory, FormatError> {
        check_version(TRAJ_VERSION, &self.version)?;
        if self.aps != ldba.aps {
            return Err(FormatError::Invalid(format!(
                "trajectory propositions {:?} do not match the automaton's {:?}",
                self.aps, ldba.aps
            )));
        }
        let mut steps = Vec::with_capacity(self.steps.len());
        let mut frontier = Frontier::new(ldba.element_count());
        for (i, dto) in self.steps.into_iter().enumerate() {
            let letter = ldba
                .letter_from_names(dto.letter.iter().map(|s| s.as_str()))
                .map_err(|e| FormatError::Invalid(format!("step {i}: {e}")))?;
            if dto.edge >= ldba.element_count() {
                return Err(FormatError::Invalid(format!(
                    "step {i}: edge {} out of range",
                    dto.edge
                )));
            }
            if i > 0 {
                frontier.mark(dto.edge);
            }
            if ldba.is_accepting(dto.b) {
                frontier.clear_all();
            }
            let action = match dto.a {
                None => None,
                Some(ActionDto::Continuous(v)) => Some(ProductAction::Env(
                    cycler_core::env::EnvAction::Continuous(v),
                )),
                Some(ActionDto::Discrete { discrete }) => Some(ProductAction::Env(
                    cycler_core::env::EnvAction::Discrete(discrete),
                )),
                Some(ActionDto::Jump { jump }) => Some(ProductAction::Jump(jump)),
            };
            if i == 0 && action.is_some() {
                return Err(FormatError::Invalid(
                    "step 0 is the initial record and carries no action".to_string(),
                ));
            }
            if i > 0 && action.is_none() {
                return Err(FormatError::Invalid(format!("step {i}: missing action")));
            }
            steps.push(TrajStep {
                env_state: dto.s,
                rv: dto.rv.map(|m| RobustnessVector::from_pairs(m)),
                b: dto.b,
                letter,
                fired: dto.edge,
                action,
                r_mdp: dto.r_mdp,
                frontier: frontier.clone(),
            });
        }
        let traj = ProductTrajectory { steps };
        traj.replay_consistent(ldba)
            .map_err(|e| FormatError::Invalid(format!("trajectory inconsistent with automaton: {e}")))?;
        Ok(traj)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegionDto {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BonusDto {
    pub center: [f64; 2],
    pub radius: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomBonusesDto {
    pub count: usize,
    pub radius: f64,
    pub reward: f64,
}

/// FlatWorld geometry configuration file.
///
/// `regions` maps proposition names to circles; iteration order (and thus the
/// robustness vector layout) is alphabetical. `random_bonuses`, when present,
/// scatters bonus regions per run seed; explicit `bonus_regions` are kept
/// as given.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FlatWorldFile {
    pub version: String,
    pub regions: BTreeMap<String, RegionDto>,
    #[serde(default)]
    pub bonus_regions: Vec<BonusDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_bonuses: Option<RandomBonusesDto>,
    pub action_bound: f64,
    pub start: [f64; 2],
    pub world_min: [f64; 2],
    pub world_max: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
}

impl FlatWorldFile {
    pub fn defaults() -> Self {
        let cfg = FlatWorldConfig::default();
        FlatWorldFile {
            version: FLATWORLD_VERSION.to_string(),
            regions: cfg
                .regions
                .iter()
                .map(|(name, r)| {
                    (
                        name.clone(),
                        RegionDto {
                            center: r.center,
                            radius: r.radius,
                        },
                    )
                })
                .collect(),
            bonus_regions: Vec::new(),
            random_bonuses: None,
            action_bound: cfg.action_bound,
            start: cfg.start,
            world_min: cfg.world_min,
            world_max: cfg.world_max,
            rho_min: None,
            rho_max: None,
        }
    }

    /// Materializes the configuration; `seed` drives random bonus placement.
    pub fn build(&self, seed: u64) -> Result<FlatWorldConfig, FormatError> {
        check_version(FLATWORLD_VERSION, &self.version)?;
        for (name, region) in &self.regions {
            if region.radius <= 0.0 {
                return Err(FormatError::Invalid(format!(
                    "region '{name}' must have positive radius"
                )));
            }
        }
        let world_min = self.world_min;
        let world_max = self.world_max;
        if world_min[0] >= world_max[0] || world_min[1] >= world_max[1] {
            return Err(FormatError::Invalid("world bounds are empty".to_string()));
        }
        for d in 0..2 {
            if self.start[d] < world_min[d] || self.start[d] > world_max[d] {
                return Err(FormatError::Invalid("start lies outside the world".to_string()));
            }
        }
        let dx = world_max[0] - world_min[0];
        let dy = world_max[1] - world_min[1];
        let default_rho_max = self
            .regions
            .values()
            .map(|r| r.radius)
            .fold(f64::MIN, f64::max);
        let mut cfg = FlatWorldConfig {
            regions: self
                .regions
                .iter()
                .map(|(name, r)| {
                    (
                        name.clone(),
                        Region {
                            center: r.center,
                            radius: r.radius,
                        },
                    )
                })
                .collect(),
            bonus_regions: self
                .bonus_regions
                .iter()
                .map(|b| BonusRegion {
                    center: b.center,
                    radius: b.radius,
                    reward: b.reward,
                })
                .collect(),
            action_bound: self.action_bound,
            start: self.start,
            world_min,
            world_max,
            rho_min: self.rho_min.unwrap_or(-(dx * dx + dy * dy).sqrt()),
            rho_max: self.rho_max.unwrap_or(default_rho_max),
        };
        if cfg.rho_min >= cfg.rho_max {
            return Err(FormatError::Invalid(
                "rho_min must be strictly below rho_max".to_string(),
            ));
        }
        if let Some(random) = &self.random_bonuses {
            let explicit = std::mem::take(&mut cfg.bonus_regions);
            cfg = cfg.with_random_bonuses(seed, random.count, random.radius, random.reward);
            cfg.bonus_regions.extend(explicit);
        }
        Ok(cfg)
    }
}

/// Tabular MDP configuration file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridLabFile {
    pub version: String,
    pub aps: Vec<String>,
    pub states: usize,
    pub actions: usize,
    pub start: usize,
    pub transitions: Vec<Vec<usize>>,
    pub labels: Vec<Vec<String>>,
    pub rewards: Vec<Vec<f64>>,
}

impl GridLabFile {
    pub fn build(&self) -> Result<GridLab, FormatError> {
        check_version(GRIDLAB_VERSION, &self.version)?;
        let labels: Vec<BTreeSet<String>> = self
            .labels
            .iter()
            .map(|row| row.iter().cloned().collect())
            .collect();
        gridlab_build(
            self.aps.clone(),
            self.states,
            self.actions,
            self.start,
            self.transitions.clone(),
            labels,
            self.rewards.clone(),
        )
        .map_err(|e| FormatError::Invalid(e.to_string()))
    }

    pub fn from_gridlab(grid: &GridLab) -> Self {
        GridLabFile {
            version: GRIDLAB_VERSION.to_string(),
            aps: grid.aps.clone(),
            states: grid.num_states,
            actions: grid.num_actions,
            start: grid.start,
            transitions: grid.transitions.clone(),
            labels: grid
                .labels
                .iter()
                .map(|set| set.iter().cloned().collect())
                .collect(),
            rewards: grid.rewards.clone(),
        }
    }
}

/// LTL reward mode named in configuration files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModeDto {
    Discrete,
    Qs,
    Unshaped,
}

/// Training configuration file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub version: String,
    /// Path to the automaton, relative to the config file's directory.
    pub ldba: String,
    pub env: FlatWorldFile,
    pub mode: ModeDto,
    pub gamma: f64,
    pub gamma_phi: f64,
    pub lambda: f64,
    pub batch_size: usize,
    pub horizon: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub episodes: usize,
    pub seed: u64,
    #[serde(default)]
    pub entropy_coef: f64,
    #[serde(default = "default_update_epochs")]
    pub update_epochs: usize,
    #[serde(default = "default_clip_epsilon")]
    pub clip_epsilon: f64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default)]
    pub allow_partial: bool,
    #[serde(default)]
    pub clamp_negative_progress: bool,
}

fn default_update_epochs() -> usize {
    1
}

fn default_clip_epsilon() -> f64 {
    0.2
}

fn default_hidden() -> usize {
    64
}

/// Per-step shaping output.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ShapeOutput {
    pub version: String,
    pub transitions: usize,
    pub r_cycler: Vec<f64>,
    pub r_ltl_unshaped: Vec<f64>,
    pub r_mdp: Vec<f64>,
    pub accepting: Vec<bool>,
    pub segments: Vec<SegmentDto>,
    pub shaped_return: f64,
    pub unshaped_return: f64,
    pub dual_return: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SegmentDto {
    pub first: usize,
    pub last: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<usize>>,
}

impl ShapeOutput {
    pub fn from_trace(trace: &RewardTrace) -> Self {
        use cycler_core::cycles::PathKind;
        use cycler_core::shaping::{eventual_discounted_value, LtlStream, VisitCounting};
        let shaped =
            eventual_discounted_value(trace, LtlStream::Shaped, VisitCounting::Inclusive);
        let unshaped =
            eventual_discounted_value(trace, LtlStream::Unshaped, VisitCounting::Inclusive);
        let dual: f64 = {
            let d = trace.discounts;
            trace
                .r_mdp
                .iter()
                .enumerate()
                .map(|(t, r)| d.gamma.powi(t as i32) * r)
                .sum::<f64>()
                + d.lambda * shaped
        };
        ShapeOutput {
            version: "shape v1".to_string(),
            transitions: trace.transitions(),
            r_cycler: trace.r_cycler.clone(),
            r_ltl_unshaped: trace.r_ltl_unshaped.clone(),
            r_mdp: trace.r_mdp.clone(),
            accepting: trace.accepting_flags.clone(),
            segments: trace
                .segments
                .iter()
                .map(|seg| SegmentDto {
                    first: seg.first,
                    last: seg.last,
                    kind: seg.chosen.as_ref().map(|(k, _, _)| {
                        match k {
                            PathKind::Maip => "initial_path",
                            PathKind::Mac => "cycle",
                        }
                        .to_string()
                    }),
                    candidate: seg.chosen.as_ref().map(|(_, i, _)| *i),
                    elements: seg.chosen.as_ref().map(|(_, _, els)| els.clone()),
                })
                .collect(),
            shaped_return: shaped,
            unshaped_return: unshaped,
            dual_return: dual,
            gamma: trace.discounts.gamma,
            gamma_phi: trace.discounts.gamma_phi,
            lambda: trace.discounts.lambda,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,r_cycler,r_ltl_unshaped,r_mdp,accepting\n");
        for t in 0..self.transitions {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t,
                self.r_cycler[t],
                self.r_ltl_unshaped[t],
                self.r_mdp[t],
                self.accepting[t] as u8
            ));
        }
        out
    }
}

/// Machine-readable path/cycle listing.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CyclesOutput {
    pub version: String,
    pub states: usize,
    pub edges: usize,
    pub eps_edges: usize,
    pub maips: Vec<PathDto>,
    pub macs: Vec<PathDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathDto {
    pub elements: Vec<usize>,
    pub start: usize,
    pub end: usize,
    pub description: String,
}

/// QS monitor configuration file (`--qs-config`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QsConfigFile {
    pub rho_min: f64,
    pub rho_max: f64,
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"version":"gridlab v1","aps":[],"states":1,"actions":1,"start":0,
            "transitions":[[0]],"labels":[[]],"rewards":[[0.0]],"bogus":1}"#;
        assert!(serde_json::from_str::<GridLabFile>(text).is_err());
    }

    #[test]
    fn flatworld_defaults_build() {
        let file = FlatWorldFile::defaults();
        let cfg = file.build(0).unwrap();
        assert_eq!(cfg.start, [-1.0, -1.0]);
        assert_eq!(cfg.regions.len(), 4);
    }

    #[test]
    fn action_dto_shapes() {
        let cont: ActionDto = serde_json::from_str("[0.5, -1.0]").unwrap();
        assert_eq!(cont, ActionDto::Continuous(vec![0.5, -1.0]));
        let jump: ActionDto = serde_json::from_str(r#"{"jump":"e0"}"#).unwrap();
        assert_eq!(jump, ActionDto::Jump { jump: "e0".to_string() });
        let disc: ActionDto = serde_json::from_str(r#"{"discrete":2}"#).unwrap();
        assert_eq!(disc, ActionDto::Discrete { discrete: 2 });
    }
}
