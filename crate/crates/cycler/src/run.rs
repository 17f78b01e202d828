//! High-level operations shared by the command-line tool and the test
//! suites: loading automata, running training from a config file, evaluating
//! checkpoints, and exporting plot data.

use std::fs;
use std::path::{Path, PathBuf};

use cycler_core::automaton::{parse_ldba, Ldba, ParseOptions};
use cycler_core::cycles::{find_macs, find_maips};
use cycler_core::env::FlatWorld;
use cycler_core::learn::{evaluate, train, EvalStats, RewardMode, TrainConfig, TrainResult};
use cycler_core::ltl::QsConfig;
use cycler_core::product::ProductTrajectory;
use cycler_core::shaping::ShapingConfig;

use crate::formats::{FormatError, ModeDto, TrainFile, TrajectoryFile};

/// Errors surfaced to the command line, classified for exit codes: domain
/// errors exit 1, IO and usage errors exit 2.
#[derive(Debug)]
pub enum RunError {
    Domain(String),
    Io(String),
    Usage(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Domain(msg) | RunError::Io(msg) | RunError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Domain(_) => 1,
            RunError::Io(_) | RunError::Usage(_) => 2,
        }
    }

    pub fn domain<E: std::fmt::Display>(e: E) -> Self {
        RunError::Domain(e.to_string())
    }
}

impl From<FormatError> for RunError {
    fn from(e: FormatError) -> Self {
        RunError::Domain(e.to_string())
    }
}

pub fn read_file(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

pub fn load_ldba(path: &Path, allow_partial: bool) -> Result<Ldba, RunError> {
    let text = read_file(path)?;
    parse_ldba(&text, ParseOptions { allow_partial }).map_err(RunError::domain)
}

pub fn load_trajectory(path: &Path, ldba: &Ldba) -> Result<ProductTrajectory, RunError> {
    let text = read_file(path)?;
    let file: TrajectoryFile =
        serde_json::from_str(&text).map_err(|e| RunError::Domain(format!("{}: {e}", path.display())))?;
    file.into_trajectory(ldba).map_err(RunError::from)
}

/// Everything assembled from a training configuration file.
pub struct TrainSetup {
    pub ldba: Ldba,
    pub ldba_text: String,
    pub env: FlatWorld,
    pub config: TrainConfig,
    pub file: TrainFile,
}

/// Resolves `config.ldba` relative to the config file location, builds the
/// environment (bonus placement seeded by the run seed), and maps the file
/// fields onto the in-memory training configuration.
pub fn prepare_training(config_path: &Path, seed_override: Option<u64>) -> Result<TrainSetup, RunError> {
    let text = read_file(config_path)?;
    let mut file: TrainFile = serde_json::from_str(&text)
        .map_err(|e| RunError::Domain(format!("{}: {e}", config_path.display())))?;
    if file.version != crate::formats::TRAIN_VERSION {
        return Err(RunError::Domain(format!(
            "unsupported config version '{}'",
            file.version
        )));
    }
    if let Some(seed) = seed_override {
        file.seed = seed;
    }
    let ldba_path = resolve_relative(config_path, &file.ldba);
    let ldba_text = read_file(&ldba_path)?;
    let ldba = parse_ldba(
        &ldba_text,
        ParseOptions {
            allow_partial: file.allow_partial,
        },
    )
    .map_err(RunError::domain)?;
    let setup = setup_from_parts(file, ldba, ldba_text)?;
    Ok(setup)
}

/// Builds a [`TrainSetup`] from an already-loaded config and automaton.
pub fn setup_from_parts(file: TrainFile, ldba: Ldba, ldba_text: String) -> Result<TrainSetup, RunError> {
    let env_cfg = file.env.build(file.seed)?;
    let qs = QsConfig::new(env_cfg.rho_min, env_cfg.rho_max).map_err(RunError::domain)?;
    let mode = match file.mode {
        ModeDto::Discrete => RewardMode::Cycler(ShapingConfig {
            mode: cycler_core::shaping::ShapingMode::Discrete,
            clamp_negative_progress: file.clamp_negative_progress,
        }),
        ModeDto::Qs => RewardMode::Cycler(ShapingConfig {
            mode: cycler_core::shaping::ShapingMode::Qs(qs),
            clamp_negative_progress: file.clamp_negative_progress,
        }),
        ModeDto::Unshaped => RewardMode::Unshaped,
    };
    let config = TrainConfig {
        gamma: file.gamma,
        gamma_phi: file.gamma_phi,
        lambda: file.lambda,
        batch_size: file.batch_size,
        horizon: file.horizon,
        actor_lr: file.actor_lr,
        critic_lr: file.critic_lr,
        episodes: file.episodes,
        seed: file.seed,
        mode,
        entropy_coef: file.entropy_coef,
        update_epochs: file.update_epochs,
        clip_epsilon: file.clip_epsilon,
        hidden: file.hidden,
    };
    Ok(TrainSetup {
        env: FlatWorld::new(env_cfg),
        ldba,
        ldba_text,
        config,
        file,
    })
}

fn resolve_relative(config_path: &Path, target: &str) -> PathBuf {
    let target_path = Path::new(target);
    if target_path.is_absolute() {
        target_path.to_path_buf()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(target_path)
    }
}

/// Runs training per the setup; returns the result and the cycle sets used.
pub fn run_training(setup: &TrainSetup) -> Result<TrainResult, RunError> {
    let maips = find_maips(&setup.ldba);
    let macs = find_macs(&setup.ldba);
    train(&setup.env, &setup.ldba, &maips, &macs, &setup.config).map_err(RunError::domain)
}

/// Training log as CSV.
pub fn log_to_csv(log: &[cycler_core::learn::LogRow]) -> String {
    let mut out = String::from(
        "iteration,episodes,ltl_return,shaped_return,mdp_return,accepting_visits,actor_loss,critic_loss\n",
    );
    for row in log {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.iteration,
            row.episodes_used,
            row.ltl_return,
            row.shaped_return,
            row.mdp_return,
            row.accepting_visits,
            row.actor_loss,
            row.critic_loss
        ));
    }
    out
}

/// Evaluates a policy on the environment described by a checkpoint header.
pub fn evaluate_checkpoint(
    policy: &cycler_core::learn::PolicyNet,
    header: &crate::checkpoint::CheckpointHeader,
    horizon: usize,
    rollouts: usize,
    seed: u64,
) -> Result<EvalStats, RunError> {
    let ldba = parse_ldba(
        &header.ldba_text,
        ParseOptions {
            allow_partial: header.config.allow_partial,
        },
    )
    .map_err(RunError::domain)?;
    let env_cfg = header.config.env.build(header.config.seed)?;
    let env = FlatWorld::new(env_cfg);
    evaluate(policy, &env, &ldba, horizon, rollouts, seed).map_err(RunError::domain)
}

/// Trajectory points plus region geometry as CSV rows for external plotting.
pub fn export_csv(traj: &ProductTrajectory, env: &FlatWorld) -> String {
    let mut out = String::from("kind,index,x,y,radius,value\n");
    for (name, region) in &env.cfg.regions {
        out.push_str(&format!(
            "region,{},{},{},{},\n",
            name, region.center[0], region.center[1], region.radius
        ));
    }
    for (i, bonus) in env.cfg.bonus_regions.iter().enumerate() {
        out.push_str(&format!(
            "bonus,{},{},{},{},{}\n",
            i, bonus.center[0], bonus.center[1], bonus.radius, bonus.reward
        ));
    }
    for (t, step) in traj.steps.iter().enumerate() {
        let x = step.env_state.first().copied().unwrap_or(0.0);
        let y = step.env_state.get(1).copied().unwrap_or(0.0);
        out.push_str(&format!("point,{t},{x},{y},,{}\n", step.b));
    }
    out
}
