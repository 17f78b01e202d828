//! `cycler` — validate automata, enumerate accepting paths and cycles, shape
//! rewards over recorded trajectories, monitor formulas, train and evaluate
//! policies, run the exact dual-objective oracle, and export plot data.
//!
//! Exit codes: 0 success, 1 domain or validation failure, 2 IO or usage
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cycler_core::automaton::Ldba;
use cycler_core::cycles::{find_macs, find_maips};
use cycler_core::exact::verify_lambda_bound;
use cycler_core::ltl::{parse_ltl, qs_eval, QsConfig, RobustnessVector};
use cycler_core::shaping::{cycler_assign, Discounts, ShapingConfig, ShapingMode};

use cycler::checkpoint;
use cycler::formats::{
    CyclesOutput, FlatWorldFile, GridLabFile, PathDto, QsConfigFile, ShapeOutput,
};
use cycler::run::{
    self, export_csv, load_ldba, load_trajectory, log_to_csv, prepare_training, run_training,
    RunError,
};

#[derive(Parser)]
#[command(name = "cycler", version, about = "LTL-constrained policy optimization toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Seed for stochastic subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Route uncovered letters of deterministic states to a synthesized sink
    /// instead of rejecting the automaton.
    #[arg(long, global = true)]
    allow_partial: bool,
    /// Write primary output to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate an automaton file.
    Validate {
        /// Path to an `ldba v1` file.
        ldba: PathBuf,
    },
    /// Enumerate minimal accepting initial paths and cycles.
    Cycles {
        ldba: PathBuf,
    },
    /// Shape the LTL reward of a recorded trajectory.
    Shape {
        #[arg(long)]
        ldba: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Quantitative mode (robustness deltas) instead of discrete rewards.
        #[arg(long)]
        qs: bool,
        /// QS range and thresholds; without it the range is taken from the
        /// robustness values observed in the trace.
        #[arg(long)]
        qs_config: Option<PathBuf>,
        /// Zero out negative robustness deltas.
        #[arg(long)]
        clamp_negative: bool,
        #[arg(long, default_value_t = 400.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.98)]
        gamma: f64,
        #[arg(long, default_value_t = 0.9)]
        gamma_phi: f64,
        /// Emit per-step CSV instead of a human-readable summary.
        #[arg(long)]
        csv: bool,
    },
    /// Evaluate a formula over a robustness trace.
    Monitor {
        /// Formula text.
        #[arg(long)]
        formula: String,
        /// JSON array of objects mapping proposition names to robustness values.
        #[arg(long)]
        trace: PathBuf,
        /// QS configuration file; defaults to rho range [-1000, 1000], thresholds 0.
        #[arg(long)]
        qs_config: Option<PathBuf>,
    },
    /// Train a policy from a configuration file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Training log CSV path.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Evaluate a trained checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 360)]
        horizon: usize,
        #[arg(long, default_value_t = 10)]
        rollouts: usize,
    },
    /// Enumerate policies on a tabular product and verify the dual bound.
    Oracle {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        ldba: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 0.9)]
        gamma_phi: f64,
    },
    /// Export a trajectory plus environment geometry as CSV.
    Export {
        #[arg(long)]
        traj: PathBuf,
        /// FlatWorld configuration JSON; defaults to the built-in layout.
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long)]
        ldba: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(global: &GlobalArgs, contents: &str) -> Result<(), RunError> {
    match &global.out {
        Some(path) => run::write_file(path, contents),
        None => {
            print!("{contents}");
            if !contents.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), RunError> {
    let global = &cli.global;
    match &cli.command {
        Command::Validate { ldba } => {
            let automaton = load_ldba(ldba, global.allow_partial)?;
            let summary = validate_summary(&automaton);
            if global.json {
                emit(global, &serde_json::to_string_pretty(&summary).expect("serializable"))
            } else {
                emit(
                    global,
                    &format!(
                        "ok: {} states, {} edges, {} eps edges, {} accepting, sink {}\n",
                        automaton.num_states,
                        automaton.edges.len(),
                        automaton.eps_edges.len(),
                        automaton.accepting.len(),
                        automaton
                            .sink
                            .map(|s| s.to_string())
                            .unwrap_or_else(|| "none".to_string()),
                    ),
                )
            }
        }
        Command::Cycles { ldba } => {
            let automaton = load_ldba(ldba, global.allow_partial)?;
            let maips = find_maips(&automaton);
            let macs = find_macs(&automaton);
            if global.json {
                let output = CyclesOutput {
                    version: "cycles v1".to_string(),
                    states: automaton.num_states,
                    edges: automaton.edges.len(),
                    eps_edges: automaton.eps_edges.len(),
                    maips: maips.iter().map(|p| path_dto(p, &automaton)).collect(),
                    macs: macs.iter().map(|p| path_dto(p, &automaton)).collect(),
                };
                emit(global, &serde_json::to_string_pretty(&output).expect("serializable"))
            } else {
                let mut text = format!(
                    "{} initial paths, {} cycles\n\ninitial paths:\n",
                    maips.len(),
                    macs.len()
                );
                for p in &maips {
                    text.push_str(&format!("  {:?}  {}\n", p.elements, p.describe(&automaton)));
                }
                text.push_str("\ncycles:\n");
                for p in &macs {
                    text.push_str(&format!("  {:?}  {}\n", p.elements, p.describe(&automaton)));
                }
                emit(global, &text)
            }
        }
        Command::Shape {
            ldba,
            trace,
            qs,
            qs_config,
            clamp_negative,
            lambda,
            gamma,
            gamma_phi,
            csv,
        } => {
            let automaton = load_ldba(ldba, global.allow_partial)?;
            let traj = load_trajectory(trace, &automaton)?;
            let maips = find_maips(&automaton);
            let macs = find_macs(&automaton);
            let mode = if *qs {
                let cfg = match qs_config {
                    Some(path) => {
                        let text = run::read_file(path)?;
                        let file: QsConfigFile = serde_json::from_str(&text)
                            .map_err(|e| RunError::Domain(format!("{}: {e}", path.display())))?;
                        let mut cfg = QsConfig::new(file.rho_min, file.rho_max)
                            .map_err(RunError::domain)?;
                        for (ap, c) in &file.thresholds {
                            cfg = cfg.with_threshold(ap, *c).map_err(RunError::domain)?;
                        }
                        cfg
                    }
                    None => {
                        let rho = traj
                            .steps
                            .iter()
                            .flat_map(|s| s.rv.iter().flat_map(|rv| rv.iter().map(|(_, v)| v)))
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                                (lo.min(v), hi.max(v))
                            });
                        let (rho_min, rho_max) = if rho.0 < rho.1 {
                            (rho.0 - 1e-9, rho.1 + 1e-9)
                        } else {
                            (-1.0, 1.0)
                        };
                        QsConfig::new(rho_min, rho_max).map_err(RunError::domain)?
                    }
                };
                ShapingMode::Qs(cfg)
            } else {
                ShapingMode::Discrete
            };
            let trace_out = cycler_assign(
                &traj,
                &automaton,
                &maips,
                &macs,
                &ShapingConfig {
                    mode,
                    clamp_negative_progress: *clamp_negative,
                },
                Discounts {
                    gamma: *gamma,
                    gamma_phi: *gamma_phi,
                    lambda: *lambda,
                },
            )
            .map_err(RunError::domain)?;
            let output = ShapeOutput::from_trace(&trace_out);
            if *csv {
                emit(global, &output.to_csv())
            } else if global.json {
                emit(global, &serde_json::to_string_pretty(&output).expect("serializable"))
            } else {
                let mut text = format!(
                    "transitions: {}\nshaped return: {}\nunshaped return: {}\ndual return: {}\n",
                    output.transitions, output.shaped_return, output.unshaped_return, output.dual_return
                );
                for (t, r) in output.r_cycler.iter().enumerate() {
                    text.push_str(&format!(
                        "t={t}: r_cycler={r}, r_ltl={}, r_mdp={}\n",
                        output.r_ltl_unshaped[t], output.r_mdp[t]
                    ));
                }
                emit(global, &text)
            }
        }
        Command::Monitor {
            formula,
            trace,
            qs_config,
        } => {
            let trace_text = run::read_file(trace)?;
            let rows: Vec<std::collections::BTreeMap<String, f64>> =
                serde_json::from_str(&trace_text)
                    .map_err(|e| RunError::Domain(format!("{}: {e}", trace.display())))?;
            if rows.is_empty() {
                return Err(RunError::Domain("trace is empty".to_string()));
            }
            let aps: Vec<String> = rows[0].keys().cloned().collect();
            for (i, row) in rows.iter().enumerate() {
                if row.keys().cloned().collect::<Vec<_>>() != aps {
                    return Err(RunError::Domain(format!(
                        "trace row {i} has different propositions than row 0"
                    )));
                }
            }
            let cfg = match qs_config {
                Some(path) => {
                    let text = run::read_file(path)?;
                    let file: QsConfigFile = serde_json::from_str(&text)
                        .map_err(|e| RunError::Domain(format!("{}: {e}", path.display())))?;
                    let mut cfg =
                        QsConfig::new(file.rho_min, file.rho_max).map_err(RunError::domain)?;
                    for (ap, c) in &file.thresholds {
                        cfg = cfg.with_threshold(ap, *c).map_err(RunError::domain)?;
                    }
                    cfg
                }
                None => QsConfig::new(-1000.0, 1000.0).map_err(RunError::domain)?,
            };
            let parsed = parse_ltl(formula, &aps).map_err(RunError::domain)?;
            let rv_trace: Vec<RobustnessVector> = rows
                .into_iter()
                .map(|row| RobustnessVector::from_pairs(row))
                .collect();
            let value = qs_eval(&parsed, &rv_trace, &cfg).map_err(RunError::domain)?;
            let verdict = value > 0.0;
            if global.json {
                let json = serde_json::json!({
                    "version": "monitor v1",
                    "formula": formula,
                    "robustness": value,
                    "satisfied": verdict,
                });
                emit(global, &serde_json::to_string_pretty(&json).expect("serializable"))
            } else {
                emit(
                    global,
                    &format!("robustness: {value}\nsatisfied: {verdict}\n"),
                )
            }
        }
        Command::Train { config, log } => {
            let setup = prepare_training(config, global.seed)?;
            let result = run_training(&setup)?;
            if let Some(log_path) = log {
                run::write_file(log_path, &log_to_csv(&result.log))?;
            }
            if let Some(out) = &global.out {
                let file = std::fs::File::create(out)
                    .map_err(|e| RunError::Io(format!("{}: {e}", out.display())))?;
                checkpoint::save(
                    std::io::BufWriter::new(file),
                    &result.policy,
                    &result.value,
                    &setup.ldba_text,
                    &setup.file,
                )
                .map_err(RunError::domain)?;
            }
            let last = result.log.last();
            let summary = match last {
                Some(row) => format!(
                    "trained {} iterations ({} episodes): ltl {:.4}, shaped {:.4}, mdp {:.2}, visits {:.2}\n",
                    row.iteration + 1,
                    row.episodes_used,
                    row.ltl_return,
                    row.shaped_return,
                    row.mdp_return,
                    row.accepting_visits
                ),
                None => "no training iterations ran (episode budget below batch size)\n".to_string(),
            };
            print!("{summary}");
            Ok(())
        }
        Command::Eval {
            checkpoint: ckpt_path,
            horizon,
            rollouts,
        } => {
            let file = std::fs::File::open(ckpt_path)
                .map_err(|e| RunError::Io(format!("{}: {e}", ckpt_path.display())))?;
            let (policy, _value, header) =
                checkpoint::load(std::io::BufReader::new(file)).map_err(RunError::domain)?;
            let seed = global.seed.unwrap_or(header.config.seed.wrapping_add(1));
            let stats = run::evaluate_checkpoint(&policy, &header, *horizon, *rollouts, seed)?;
            if global.json {
                let json = serde_json::json!({
                    "version": "eval v1",
                    "rollouts": stats.rollouts,
                    "horizon": horizon,
                    "mean_accepting_visits": stats.mean_visits,
                    "std_accepting_visits": stats.std_visits,
                    "mean_mdp_reward": stats.mean_mdp,
                    "std_mdp_reward": stats.std_mdp,
                });
                emit(global, &serde_json::to_string_pretty(&json).expect("serializable"))
            } else {
                emit(global, &format!("{stats}\n"))
            }
        }
        Command::Oracle {
            grid,
            ldba,
            gamma,
            gamma_phi,
        } => {
            let automaton = load_ldba(ldba, global.allow_partial)?;
            let grid_text = run::read_file(grid)?;
            let grid_file: GridLabFile = serde_json::from_str(&grid_text)
                .map_err(|e| RunError::Domain(format!("{}: {e}", grid.display())))?;
            let gridlab = grid_file.build()?;
            let report = verify_lambda_bound(&gridlab, &automaton, *gamma, *gamma_phi)
                .map_err(RunError::domain)?;
            let json = oracle_json(&report);
            if global.json {
                emit(global, &serde_json::to_string_pretty(&json).expect("serializable"))
            } else {
                let mut text = format!(
                    "policies: {}\nv_max: {}\ngap: {:?}\nlambda_star: {:?}\nassumption holds: {}\n",
                    report.policy_count,
                    report.v_max,
                    report.epsilon_hat,
                    report.lambda_star,
                    report.assumption_holds
                );
                for check in &report.checks {
                    text.push_str(&format!(
                        "lambda {:.4}: contained {}, attains max R {}\n",
                        check.lambda, check.contained_in_v_max, check.attains_max_r
                    ));
                }
                emit(global, &text)
            }
        }
        Command::Export { traj, env, ldba } => {
            let automaton = load_ldba(ldba, global.allow_partial)?;
            let trajectory = load_trajectory(traj, &automaton)?;
            let env_file = match env {
                Some(path) => {
                    let text = run::read_file(path)?;
                    serde_json::from_str::<FlatWorldFile>(&text)
                        .map_err(|e| RunError::Domain(format!("{}: {e}", path.display())))?
                }
                None => FlatWorldFile::defaults(),
            };
            let cfg = env_file.build(global.seed.unwrap_or(0))?;
            let flatworld = cycler_core::env::FlatWorld::new(cfg);
            emit(global, &export_csv(&trajectory, &flatworld))
        }
    }
}

fn validate_summary(ldba: &Ldba) -> serde_json::Value {
    serde_json::json!({
        "version": "validate v1",
        "ok": true,
        "states": ldba.num_states,
        "edges": ldba.edges.len(),
        "eps_edges": ldba.eps_edges.len(),
        "initial": ldba.initial,
        "accepting": ldba.accepting.iter().collect::<Vec<_>>(),
        "nondet": ldba.nondet.iter().collect::<Vec<_>>(),
        "sink": ldba.sink,
        "aps": ldba.aps,
    })
}

fn path_dto(path: &cycler_core::cycles::CyclePath, ldba: &Ldba) -> PathDto {
    PathDto {
        elements: path.elements.clone(),
        start: path.start,
        end: path.end,
        description: path.describe(ldba),
    }
}

fn oracle_json(report: &cycler_core::exact::ExactReport) -> serde_json::Value {
    serde_json::json!({
        "version": "oracle v1",
        "policy_count": report.policy_count,
        "v_max": report.v_max,
        "epsilon_hat": report.epsilon_hat,
        "lambda_star": report.lambda_star,
        "r_step_max": report.r_step_max,
        "r_step_min": report.r_step_min,
        "v_maximal_count": report.v_maximal_count,
        "constrained_argmax": report.constrained_argmax,
        "constrained_argmax_count": report.constrained_argmax_count,
        "constrained_max_r": report.constrained_max_r,
        "assumption_holds": report.assumption_holds,
        "max_last_visit": report.max_last_visit,
        "checks": report.checks.iter().map(|c| serde_json::json!({
            "lambda": c.lambda,
            "argmax_count": c.argmax_count,
            "argmax": c.argmax,
            "contained_in_v_max": c.contained_in_v_max,
            "attains_max_r": c.attains_max_r,
        })).collect::<Vec<_>>(),
        "values": report.values.as_ref().map(|values| values.iter().map(|e| serde_json::json!({
            "v": e.value_ltl,
            "r": e.value_mdp,
            "accepts": e.accepts,
            "last_visit": e.last_visit,
        })).collect::<Vec<_>>()),
    })
}
