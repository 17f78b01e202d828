//! Cycle-based LTL reward shaping, eventual discounting, and the dual reward.
//!
//! Shaping walks a recorded product trajectory transition by transition and
//! scores it against every candidate path: minimal accepting initial paths
//! before the first accepting visit, minimal accepting cycles afterwards. A
//! segment closes when an accepting state is reached or the trajectory ends;
//! the candidate with the highest segment sum (lowest index on ties) is
//! retroactively written into the shaped reward stream, the frontier resets,
//! and the next segment begins.
//!
//! Two reward kernels are available per transition:
//!
//! * discrete — `1/|c|` the first time a transition of the candidate fires
//!   within the segment (frontier-gated), else 0;
//! * quantitative — the change in robustness of the candidate's next guard,
//!   normalized by `(rho_max - rho_min) * |c|`, awarded both on firing that
//!   guard (frontier-gated) and while waiting at its source state. A
//!   per-segment cap of `1/|c|` per candidate element keeps segment sums
//!   bounded by 1 even when the automaton revisits a source state.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::automaton::{Ldba, StateId};
use crate::cycles::{CyclePath, PathKind};
use crate::ltl::{qs_eval_state, Formula, QsConfig, RobustnessVector};
use crate::math;
use crate::product::ProductTrajectory;

/// Per-element bits marking transitions taken since the last accepting visit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontier {
    bits: Vec<bool>,
}

impl Frontier {
    pub fn new(element_count: usize) -> Self {
        Self {
            bits: vec![false; element_count],
        }
    }

    pub fn mark(&mut self, element: usize) {
        self.bits[element] = true;
    }

    pub fn is_marked(&self, element: usize) -> bool {
        self.bits[element]
    }

    pub fn clear_all(&mut self) {
        self.bits.iter_mut().for_each(|b| *b = false);
    }

    pub fn is_clear(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Which reward kernel shaping uses.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapingMode {
    Discrete,
    Qs(QsConfig),
}

/// Shaping options. Ties in the segment argmax always break toward the
/// lowest candidate index.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapingConfig {
    pub mode: ShapingMode,
    /// Zero out negative robustness deltas instead of passing them through.
    pub clamp_negative_progress: bool,
}

impl ShapingConfig {
    pub fn discrete() -> Self {
        Self {
            mode: ShapingMode::Discrete,
            clamp_negative_progress: false,
        }
    }

    pub fn quantitative(qs: QsConfig) -> Self {
        Self {
            mode: ShapingMode::Qs(qs),
            clamp_negative_progress: false,
        }
    }
}

/// Discount and trade-off constants carried alongside a reward trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub gamma: f64,
    pub gamma_phi: f64,
    pub lambda: f64,
}

/// The candidate written into one closed segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChoice {
    /// First transition index of the segment (inclusive).
    pub first: usize,
    /// Last transition index of the segment (inclusive).
    pub last: usize,
    /// Candidate kind and index within the candidate list, with its elements;
    /// `None` when the active candidate set was empty.
    pub chosen: Option<(PathKind, usize, Vec<usize>)>,
}

/// Per-transition reward bookkeeping for one trajectory.
///
/// All arrays have length `trajectory steps - 1`; entry `t` describes the
/// transition from step `t` to step `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTrace {
    pub r_cycler: Vec<f64>,
    /// Indicator of arriving in an accepting state.
    pub r_ltl_unshaped: Vec<f64>,
    pub r_mdp: Vec<f64>,
    pub accepting_flags: Vec<bool>,
    /// Whether the trajectory already started in an accepting state.
    pub b0_accepting: bool,
    pub segments: Vec<SegmentChoice>,
    pub discounts: Discounts,
}

impl RewardTrace {
    pub fn transitions(&self) -> usize {
        self.r_cycler.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapingError {
    /// Shaping needs at least two trajectory steps (one transition).
    TrajectoryTooShort,
    /// Quantitative mode needs a robustness vector at every step.
    MissingRobustness { step: usize },
    /// A parameter violated its domain (named, with the offending value).
    Domain { name: &'static str, value: f64 },
    /// An atom in a guard has no robustness value.
    MissingProposition(String),
}

impl fmt::Display for ShapingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapingError::TrajectoryTooShort => {
                write!(f, "trajectory must contain at least one transition")
            }
            ShapingError::MissingRobustness { step } => {
                write!(f, "step {step} carries no robustness vector (required in qs mode)")
            }
            ShapingError::Domain { name, value } => {
                write!(f, "parameter {name} = {value} outside its domain")
            }
            ShapingError::MissingProposition(ap) => {
                write!(f, "no robustness value for proposition '{ap}'")
            }
        }
    }
}

/// Discrete cycle reward: `1/|c|` if the fired transition belongs to the
/// candidate and has not yet been taken this segment, else 0.
pub fn r_cycle(fired_element: usize, frontier: &Frontier, candidate: &CyclePath) -> f64 {
    if candidate.contains(fired_element) && !frontier.is_marked(fired_element) {
        1.0 / candidate.len() as f64
    } else {
        0.0
    }
}

/// Quantitative cycle reward for one transition.
///
/// Let `g` be the guard of the candidate's element out of `b`. The reward is
/// the robustness delta of `g` between the two states, normalized by
/// `(rho_max - rho_min) * |c|`, when either the candidate's own edge fired
/// (once per segment, frontier-gated) or the automaton stayed at `b`.
/// Progress toward eps elements is always 0: they carry no guard and the
/// environment state does not move when they fire.
pub fn r_qs_cycle(
    ldba: &Ldba,
    s_rv: &RobustnessVector,
    b: StateId,
    s_next_rv: &RobustnessVector,
    b_next: StateId,
    fired_element: usize,
    frontier: &Frontier,
    candidate: &CyclePath,
    qs: &QsConfig,
    clamp_negative_progress: bool,
) -> Result<f64, ShapingError> {
    let element = match candidate.element_at(ldba, b) {
        Some(el) => el,
        None => return Ok(0.0),
    };
    let guard = match ldba.element_guard(element) {
        Some(g) => g,
        None => return Ok(0.0),
    };
    let fires = fired_element == element && !frontier.is_marked(element);
    let stays = b_next == b;
    if !fires && !stays {
        return Ok(0.0);
    }
    let rho_prev = clamped_guard_rho(guard, s_rv, qs)?;
    let rho_next = clamped_guard_rho(guard, s_next_rv, qs)?;
    let mut delta = rho_next - rho_prev;
    if clamp_negative_progress && delta < 0.0 {
        delta = 0.0;
    }
    Ok(delta / (qs.range() * candidate.len() as f64))
}

fn clamped_guard_rho(
    guard: &Formula,
    rv: &RobustnessVector,
    qs: &QsConfig,
) -> Result<f64, ShapingError> {
    let raw = qs_eval_state(guard, rv, qs).map_err(|e| match e {
        crate::ltl::EvalError::MissingProposition(ap) => ShapingError::MissingProposition(ap),
        _ => ShapingError::Domain {
            name: "guard",
            value: f64::NAN,
        },
    })?;
    Ok(raw.clamp(qs.rho_min, qs.rho_max))
}

/// Unshaped LTL reward: indicator of accepting membership.
pub fn r_ltl_unshaped(b: StateId, ldba: &Ldba) -> f64 {
    if ldba.is_accepting(b) {
        1.0
    } else {
        0.0
    }
}

/// Retroactive segment-based reward assignment over a full trajectory.
///
/// Processes transitions in order, scoring each candidate independently.
/// Segment boundaries are accepting arrivals and the trajectory end. Within a
/// segment the frontier marks every fired element; it resets when the segment
/// closes. The first segment scores against `maips`, later segments against
/// `macs`. An empty candidate set leaves the segment all-zero.
pub fn cycler_assign(
    traj: &ProductTrajectory,
    ldba: &Ldba,
    maips: &[CyclePath],
    macs: &[CyclePath],
    cfg: &ShapingConfig,
    discounts: Discounts,
) -> Result<RewardTrace, ShapingError> {
    let transitions = traj.transitions();
    if transitions == 0 {
        return Err(ShapingError::TrajectoryTooShort);
    }

    // Dense, threshold-shifted robustness per step when qs mode is active.
    let dense_rv: Option<Vec<RobustnessVector>> = match &cfg.mode {
        ShapingMode::Discrete => None,
        ShapingMode::Qs(_) => {
            let mut per_step = Vec::with_capacity(traj.steps.len());
            for (i, step) in traj.steps.iter().enumerate() {
                match &step.rv {
                    Some(rv) => per_step.push(rv.clone()),
                    None => return Err(ShapingError::MissingRobustness { step: i }),
                }
            }
            Some(per_step)
        }
    };

    let mut r_cycler = vec![0.0; transitions];
    let mut r_unshaped = vec![0.0; transitions];
    let mut r_mdp = vec![0.0; transitions];
    let mut flags = vec![false; transitions];
    let mut segments = Vec::new();

    let mut frontier = Frontier::new(ldba.element_count());
    let mut segment_start = 0usize;
    let mut first_segment = true;
    // Per-candidate rewards and per-candidate per-element accumulators for
    // the open segment.
    let mut candidate_rewards: Vec<Vec<f64>> = Vec::new();
    let mut qs_accum: Vec<Vec<f64>> = Vec::new();
    let mut active_len = 0usize;

    let reset_candidates = |first_segment: bool,
                            candidate_rewards: &mut Vec<Vec<f64>>,
                            qs_accum: &mut Vec<Vec<f64>>,
                            active_len: &mut usize| {
        let candidates = if first_segment { maips } else { macs };
        *active_len = candidates.len();
        candidate_rewards.clear();
        candidate_rewards.resize(candidates.len(), Vec::new());
        qs_accum.clear();
        qs_accum.resize(candidates.len(), vec![0.0; ldba.element_count()]);
    };
    reset_candidates(true, &mut candidate_rewards, &mut qs_accum, &mut active_len);

    for t in 0..transitions {
        let src = &traj.steps[t];
        let dst = &traj.steps[t + 1];
        let fired = dst.fired;
        let candidates = if first_segment { maips } else { macs };
        debug_assert_eq!(candidates.len(), active_len);

        for (i, candidate) in candidates.iter().enumerate() {
            let reward = match &cfg.mode {
                ShapingMode::Discrete => r_cycle(fired, &frontier, candidate),
                ShapingMode::Qs(qs) => {
                    let dense = dense_rv.as_ref().expect("qs mode has dense vectors");
                    let raw = r_qs_cycle(
                        ldba,
                        &dense[t],
                        src.b,
                        &dense[t + 1],
                        dst.b,
                        fired,
                        &frontier,
                        candidate,
                        qs,
                        cfg.clamp_negative_progress,
                    )?;
                    // Cap cumulative per-element credit at 1/|c| within the
                    // segment so revisits cannot push a segment beyond 1.
                    match candidate.element_at(ldba, src.b) {
                        Some(element) => {
                            let cap = 1.0 / candidate.len() as f64;
                            let cum = qs_accum[i][element];
                            let granted = f64::min(raw, cap - cum);
                            qs_accum[i][element] = cum + granted;
                            granted
                        }
                        None => raw,
                    }
                }
            };
            candidate_rewards[i].push(reward);
        }

        frontier.mark(fired);
        r_mdp[t] = dst.r_mdp;
        let arrived_accepting = ldba.is_accepting(dst.b);
        flags[t] = arrived_accepting;
        r_unshaped[t] = if arrived_accepting { 1.0 } else { 0.0 };

        if arrived_accepting || t + 1 == transitions {
            // Close the segment: pick the candidate with the highest sum,
            // lowest index on ties.
            let mut best: Option<(usize, f64)> = None;
            for (i, rewards) in candidate_rewards.iter().enumerate() {
                let sum: f64 = rewards.iter().sum();
                match best {
                    Some((_, best_sum)) if sum <= best_sum => {}
                    _ => best = Some((i, sum)),
                }
            }
            let chosen = best.map(|(i, _)| {
                let kind = if first_segment { PathKind::Maip } else { PathKind::Mac };
                for (offset, value) in candidate_rewards[i].iter().enumerate() {
                    r_cycler[segment_start + offset] = *value;
                }
                (kind, i, candidates[i].elements.clone())
            });
            segments.push(SegmentChoice {
                first: segment_start,
                last: t,
                chosen,
            });
            segment_start = t + 1;
            frontier.clear_all();
            if arrived_accepting {
                first_segment = false;
            }
            reset_candidates(first_segment, &mut candidate_rewards, &mut qs_accum, &mut active_len);
        }
    }

    Ok(RewardTrace {
        r_cycler,
        r_ltl_unshaped: r_unshaped,
        r_mdp,
        accepting_flags: flags,
        b0_accepting: ldba.is_accepting(traj.steps[0].b),
        segments,
        discounts,
    })
}

/// Which LTL reward stream to discount.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtlStream {
    Shaped,
    Unshaped,
}

/// Whether an accepting arrival discounts its own reward.
///
/// `Inclusive` counts the arrival itself, so even the first accepting visit
/// is weighted by `gamma_phi`. `Exclusive` weights each visit by the count of
/// visits strictly before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisitCounting {
    Inclusive,
    Exclusive,
}

/// Per-transition eventually-discounted LTL rewards.
///
/// Shaped rewards are weighted by the visit count in force at the source of
/// each transition; unshaped rewards by the visit count at their arrival per
/// `counting`. The unshaped reward for an accepting start state has no
/// transition slot; [`eventual_discounted_value`] accounts for it.
pub fn weighted_ltl_rewards(rt: &RewardTrace, stream: LtlStream, counting: VisitCounting) -> Vec<f64> {
    let gp = rt.discounts.gamma_phi;
    let mut out = Vec::with_capacity(rt.transitions());
    let mut visits = if rt.b0_accepting { 1u32 } else { 0 };
    for t in 0..rt.transitions() {
        match stream {
            LtlStream::Shaped => {
                out.push(math::pow(gp, visits as f64) * rt.r_cycler[t]);
                if rt.accepting_flags[t] {
                    visits += 1;
                }
            }
            LtlStream::Unshaped => match counting {
                VisitCounting::Inclusive => {
                    if rt.accepting_flags[t] {
                        visits += 1;
                    }
                    out.push(math::pow(gp, visits as f64) * rt.r_ltl_unshaped[t]);
                }
                VisitCounting::Exclusive => {
                    out.push(math::pow(gp, visits as f64) * rt.r_ltl_unshaped[t]);
                    if rt.accepting_flags[t] {
                        visits += 1;
                    }
                }
            },
        }
    }
    out
}

/// Eventually-discounted value of a reward trace's LTL stream.
pub fn eventual_discounted_value(rt: &RewardTrace, stream: LtlStream, counting: VisitCounting) -> f64 {
    let mut value: f64 = weighted_ltl_rewards(rt, stream, counting).iter().sum();
    if stream == LtlStream::Unshaped && rt.b0_accepting {
        value += match counting {
            VisitCounting::Inclusive => rt.discounts.gamma_phi,
            VisitCounting::Exclusive => 1.0,
        };
    }
    value
}

/// The per-step dual reward `gamma^t * r_mdp + Gamma_t * lambda * r_ltl`.
pub fn dual_reward(t: usize, r_mdp: f64, big_gamma: f64, r_ltl: f64, gamma: f64, lambda: f64) -> f64 {
    math::pow(gamma, t as f64) * r_mdp + big_gamma * lambda * r_ltl
}

/// The Lagrange-weight threshold `(r_max - r_min) / (epsilon * (1 - gamma))`.
pub fn lambda_bound(r_max: f64, r_min: f64, epsilon: f64, gamma: f64) -> Result<f64, ShapingError> {
    if r_max < r_min {
        return Err(ShapingError::Domain {
            name: "r_max",
            value: r_max,
        });
    }
    if epsilon <= 0.0 {
        return Err(ShapingError::Domain {
            name: "epsilon",
            value: epsilon,
        });
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(ShapingError::Domain {
            name: "gamma",
            value: gamma,
        });
    }
    Ok((r_max - r_min) / (epsilon * (1.0 - gamma)))
}

/// The discount `(1 - epsilon)^(1 / (M + 1))` that keeps the eventually
/// discounted value within `epsilon` of the satisfaction probability when no
/// failing trajectory visits an accepting state after time `M`.
pub fn gamma_phi_for(epsilon: f64, m: u32) -> Result<f64, ShapingError> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(ShapingError::Domain {
            name: "epsilon",
            value: epsilon,
        });
    }
    Ok(math::pow(1.0 - epsilon, 1.0 / (m as f64 + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{parse_ldba, ParseOptions};
    use crate::cycles::{find_macs, find_maips};
    use crate::product::{synthetic_trajectory, SyntheticStep};

    const DISCOUNTS: Discounts = Discounts {
        gamma: 0.98,
        gamma_phi: 0.9,
        lambda: 400.0,
    };

    /// Four-state task automaton whose initial state is the wait-for-r state
    /// itself, matching the worked oscillation example.
    const TASK: &str = "\
ldba v1
aps: r g b y
states: 4
initial: 1
nondet:
accepting: 0
edge: 1 -> 1 : !r & !b
edge: 1 -> 2 : r & !b & !(g & y)
edge: 1 -> 0 : r & g & y & !b
edge: 2 -> 2 : !g & !b
edge: 2 -> 3 : g & !y & !b
edge: 2 -> 0 : g & y & !b
edge: 3 -> 3 : !y & !b
edge: 3 -> 0 : y & !b
edge: 0 -> 1 : !r & !b
edge: 0 -> 2 : r & !b & !(g & y)
edge: 0 -> 0 : r & g & y & !b
";

    fn task_ldba() -> Ldba {
        parse_ldba(TASK, ParseOptions { allow_partial: true }).unwrap()
    }

    fn trajectory_for(ldba: &Ldba, letters: &[&[&str]]) -> ProductTrajectory {
        let steps: Vec<SyntheticStep> = letters
            .iter()
            .map(|names| SyntheticStep {
                letter_names: names.iter().map(|s| alloc::string::String::from(*s)).collect(),
                rv: None,
                r_mdp: 0.0,
            })
            .collect();
        synthetic_trajectory(ldba, &steps).unwrap()
    }

    #[test]
    fn worked_example_selects_longest_path_and_pays_thirds() {
        let ldba = task_ldba();
        let maips = find_maips(&ldba);
        let macs = find_macs(&ldba);
        // Three initial paths of lengths 1, 2, 3.
        assert_eq!(
            maips.iter().map(|p| p.len()).collect::<Vec<_>>(),
            vec![3, 2, 1]
        );

        let traj = trajectory_for(&ldba, &[&[], &["r"], &[], &["g"]]);
        assert_eq!(
            traj.steps.iter().map(|s| s.b).collect::<Vec<_>>(),
            vec![1, 2, 2, 3]
        );

        let rt = cycler_assign(&traj, &ldba, &maips, &macs, &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        assert_eq!(rt.r_cycler, vec![1.0 / 3.0, 0.0, 1.0 / 3.0]);
        let chosen = rt.segments[0].chosen.as_ref().unwrap();
        assert_eq!(chosen.0, PathKind::Maip);
        assert_eq!(chosen.2.len(), 3);
    }

    #[test]
    fn unmatched_trajectory_earns_nothing() {
        let ldba = task_ldba();
        let maips = find_maips(&ldba);
        let macs = find_macs(&ldba);
        let traj = trajectory_for(&ldba, &[&[], &[], &[], &[]]);
        let rt = cycler_assign(&traj, &ldba, &maips, &macs, &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        assert!(rt.r_cycler.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn full_cycle_after_acceptance_sums_to_one() {
        let ldba = task_ldba();
        let maips = find_maips(&ldba);
        let macs = find_macs(&ldba);
        // Reach the accepting state with one letter, then run the full
        // four-edge cycle 0 -> 1 -> 2 -> 3 -> 0.
        let traj = trajectory_for(
            &ldba,
            &[&[], &["r", "g", "y"], &[], &["r"], &["g"], &["y"]],
        );
        let bs: Vec<_> = traj.steps.iter().map(|s| s.b).collect();
        assert_eq!(bs, vec![1, 0, 1, 2, 3, 0]);

        let rt = cycler_assign(&traj, &ldba, &maips, &macs, &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        // Second segment: transitions 1..=4 all lie on the length-4 cycle.
        let second_sum: f64 = rt.r_cycler[1..=4].iter().sum();
        assert_eq!(second_sum, 1.0);
        assert_eq!(rt.r_cycler[1..=4], [0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn frontier_blocks_repeated_credit() {
        let ldba = task_ldba();
        let maips = find_maips(&ldba);
        let macs = find_macs(&ldba);
        // Enter red, leave, enter red again: the r-edge only fires once from
        // state 1, but oscillating letters exercise the self-loops.
        let traj = trajectory_for(&ldba, &[&[], &["r"], &[], &[], &[], &["g"]]);
        let rt = cycler_assign(&traj, &ldba, &maips, &macs, &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        let total: f64 = rt.r_cycler.iter().sum();
        assert_eq!(total, 2.0 / 3.0);
    }

    #[test]
    fn eventual_discounting_matches_hand_computation() {
        // Accepting arrivals at transitions 2 and 5 with gamma_phi = 0.9.
        let rt = RewardTrace {
            r_cycler: vec![0.0; 6],
            r_ltl_unshaped: vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            r_mdp: vec![0.0; 6],
            accepting_flags: vec![false, false, true, false, false, true],
            b0_accepting: false,
            segments: vec![],
            discounts: Discounts {
                gamma: 0.98,
                gamma_phi: 0.9,
                lambda: 400.0,
            },
        };
        let v = eventual_discounted_value(&rt, LtlStream::Unshaped, VisitCounting::Inclusive);
        assert!((v - 1.71).abs() < 1e-12);
        let v_ex = eventual_discounted_value(&rt, LtlStream::Unshaped, VisitCounting::Exclusive);
        assert!((v_ex - 1.9).abs() < 1e-12);
    }

    #[test]
    fn all_zero_stream_has_zero_value() {
        let rt = RewardTrace {
            r_cycler: vec![0.0; 4],
            r_ltl_unshaped: vec![0.0; 4],
            r_mdp: vec![0.0; 4],
            accepting_flags: vec![false; 4],
            b0_accepting: false,
            segments: vec![],
            discounts: DISCOUNTS,
        };
        assert_eq!(
            eventual_discounted_value(&rt, LtlStream::Unshaped, VisitCounting::Inclusive),
            0.0
        );
        assert_eq!(
            eventual_discounted_value(&rt, LtlStream::Shaped, VisitCounting::Inclusive),
            0.0
        );
    }

    #[test]
    fn shaped_value_is_bounded_by_visit_geometric_series() {
        let ldba = task_ldba();
        let maips = find_maips(&ldba);
        let macs = find_macs(&ldba);
        // One accepted path then one full cycle.
        let traj = trajectory_for(
            &ldba,
            &[&[], &["r", "g", "y"], &[], &["r"], &["g"], &["y"]],
        );
        let rt = cycler_assign(&traj, &ldba, &maips, &macs, &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        let v = eventual_discounted_value(&rt, LtlStream::Shaped, VisitCounting::Inclusive);
        let bound = 1.0 / (1.0 - DISCOUNTS.gamma_phi);
        assert!(v <= bound + 1e-12, "v = {v}, bound = {bound}");
        // First segment earned exactly 1 (the one-step path), weighted 1;
        // second segment earned 1 weighted by gamma_phi.
        assert!((v - (1.0 + 0.9)).abs() < 1e-12);
    }

    #[test]
    fn dual_reward_arithmetic() {
        assert_eq!(dual_reward(0, 1.0, 1.0, 0.0, 0.98, 400.0), 1.0);
        let v = dual_reward(0, 0.0, 1.0, 1.0 / 3.0, 0.5, 400.0);
        assert!((v - 400.0 / 3.0).abs() < 1e-12);
        assert_eq!(dual_reward(3, 2.0, 1.0, 1.0, 0.5, 0.0), 0.25);
    }

    #[test]
    fn lambda_bound_examples() {
        assert_eq!(lambda_bound(1.0, 0.0, 0.5, 0.5).unwrap(), 4.0);
        assert_eq!(lambda_bound(1.0, 1.0, 0.5, 0.5).unwrap(), 0.0);
        assert!((lambda_bound(1.0, -1.0, 0.1, 0.9).unwrap() - 200.0).abs() < 1e-9);
        assert!(lambda_bound(1.0, 0.0, 0.0, 0.5).is_err());
        assert!(lambda_bound(1.0, 0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn gamma_phi_for_examples() {
        assert!((gamma_phi_for(0.1, 0).unwrap() - 0.9).abs() < 1e-12);
        assert!((gamma_phi_for(0.19, 1).unwrap() - 0.9).abs() < 1e-12);
        assert!(gamma_phi_for(0.999999, 0).unwrap() < 1e-5);
        assert!(gamma_phi_for(0.0, 0).is_err());
        assert!(gamma_phi_for(1.0, 0).is_err());
    }

    #[test]
    fn determinism_of_assignment() {
        let ldba = task_ldba();
        let maips = find_maips(&ldba);
        let macs = find_macs(&ldba);
        let traj = trajectory_for(&ldba, &[&[], &["r"], &["g"], &["y"], &[], &["r"]]);
        let a = cycler_assign(&traj, &ldba, &maips, &macs, &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        let b = cycler_assign(&traj, &ldba, &maips, &macs, &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_candidate_sets_degrade_to_zero() {
        let ldba = task_ldba();
        let traj = trajectory_for(&ldba, &[&[], &["r"]]);
        let rt = cycler_assign(&traj, &ldba, &[], &[], &ShapingConfig::discrete(), DISCOUNTS)
            .unwrap();
        assert_eq!(rt.r_cycler, vec![0.0]);
        assert!(rt.segments[0].chosen.is_none());
    }
}
