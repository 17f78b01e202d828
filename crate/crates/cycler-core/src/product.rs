//! Synchronization of an environment with an automaton, and policy rollouts.
//!
//! A product state is the environment state, the automaton state, and the
//! frontier of transitions taken since the last accepting visit. Environment
//! actions advance the environment and fire the automaton edge matching the
//! new state's label; jump actions move only the automaton, earn no reward,
//! and leave the environment state untouched.

use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::automaton::{Ldba, LdbaError, Letter, StateId};
use crate::env::{Env, EnvAction};
use crate::ltl::RobustnessVector;
use crate::shaping::Frontier;

/// An action in the product: an environment action or an automaton jump.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductAction {
    Env(EnvAction),
    Jump(String),
}

/// Environment state, automaton state, and frontier.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub s: Vec<f64>,
    pub b: StateId,
    pub e: Frontier,
}

/// One recorded trajectory step. Step 0 is the initial record: its `fired`
/// element is the transition taken on the first observed label and it
/// carries no action.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajStep {
    pub env_state: Vec<f64>,
    pub rv: Option<RobustnessVector>,
    pub b: StateId,
    pub letter: Letter,
    pub fired: usize,
    pub action: Option<ProductAction>,
    pub r_mdp: f64,
    /// Frontier observed at this step (after the arrival update).
    pub frontier: Frontier,
}

/// A time-indexed product trajectory: one initial record plus one record per
/// transition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTrajectory {
    pub steps: Vec<TrajStep>,
}

impl ProductTrajectory {
    pub fn transitions(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    /// Replays letters and jumps through the automaton and checks that the
    /// recorded automaton states, fired elements, and frontiers all agree.
    pub fn replay_consistent(&self, ldba: &Ldba) -> Result<(), String> {
        use alloc::format;
        if self.steps.is_empty() {
            return Ok(());
        }
        let first = &self.steps[0];
        let (b0, el0) = ldba
            .initial_transition(first.letter)
            .map_err(|e| format!("initial transition: {e}"))?;
        if b0 != first.b || el0 != first.fired {
            return Err(format!(
                "initial record disagrees: expected ({b0}, {el0}), recorded ({}, {})",
                first.b, first.fired
            ));
        }
        let mut frontier = Frontier::new(ldba.element_count());
        if ldba.is_accepting(b0) {
            frontier.clear_all();
        }
        if first.frontier != frontier {
            return Err("initial frontier is not clear".into());
        }
        let mut b = b0;
        for (i, step) in self.steps.iter().enumerate().skip(1) {
            let (next, fired) = match &step.action {
                Some(ProductAction::Jump(id)) => {
                    ldba.jump(b, id).map_err(|e| format!("step {i}: {e}"))?
                }
                Some(ProductAction::Env(_)) | None => {
                    ldba.step(b, step.letter).map_err(|e| format!("step {i}: {e}"))?
                }
            };
            if next != step.b || fired != step.fired {
                return Err(format!(
                    "step {i} disagrees: expected ({next}, {fired}), recorded ({}, {})",
                    step.b, step.fired
                ));
            }
            frontier.mark(fired);
            if ldba.is_accepting(next) {
                frontier.clear_all();
            }
            if step.frontier != frontier {
                return Err(format!("step {i}: frontier snapshot disagrees"));
            }
            b = next;
        }
        Ok(())
    }
}

/// Result of one product transition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTransition {
    pub next: ProductState,
    pub fired: usize,
    pub r_mdp: f64,
    pub letter: Letter,
}

/// Advances the product by one action.
pub fn product_step<E: Env>(
    env: &E,
    ldba: &Ldba,
    ps: &ProductState,
    action: &ProductAction,
    rng: &mut ChaCha8Rng,
) -> Result<ProductTransition, LdbaError> {
    let (s_next, r_mdp, letter, b_next, fired) = match action {
        ProductAction::Env(a) => {
            let (s_next, r_mdp) = env.step(&ps.s, a, rng);
            let letter = letter_of(env, ldba, &s_next)?;
            let (b_next, fired) = ldba.step(ps.b, letter)?;
            (s_next, r_mdp, letter, b_next, fired)
        }
        ProductAction::Jump(id) => {
            let (b_next, fired) = ldba.jump(ps.b, id)?;
            let letter = letter_of(env, ldba, &ps.s)?;
            (ps.s.clone(), 0.0, letter, b_next, fired)
        }
    };
    let mut e = ps.e.clone();
    e.mark(fired);
    if ldba.is_accepting(b_next) {
        e.clear_all();
    }
    Ok(ProductTransition {
        next: ProductState { s: s_next, b: b_next, e },
        fired,
        r_mdp,
        letter,
    })
}

fn letter_of<E: Env>(env: &E, ldba: &Ldba, s: &[f64]) -> Result<Letter, LdbaError> {
    let names = env.label(s);
    ldba.letter_from_names(names.iter().map(|n| n.as_str()))
}

/// What a policy sees when choosing an action.
#[derive(Debug, Clone)]
pub struct ProductObs<'a> {
    pub env_obs: Vec<f64>,
    pub b: StateId,
    pub num_states: usize,
    pub frontier: &'a Frontier,
    /// Jump ids available at the current automaton state.
    pub jumps: Vec<&'a str>,
}

/// Anything that can drive a rollout.
pub trait Policy {
    fn act(&self, obs: &ProductObs<'_>, rng: &mut ChaCha8Rng) -> ProductAction;
}

/// Rolls out `policy` for exactly `horizon` transitions. The same seed with a
/// deterministic environment and policy reproduces the trajectory bit for
/// bit.
pub fn rollout<E: Env, P: Policy + ?Sized>(
    policy: &P,
    env: &E,
    ldba: &Ldba,
    horizon: usize,
    seed: u64,
) -> Result<ProductTrajectory, LdbaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s0 = env.reset(&mut rng);
    let letter0 = letter_of(env, ldba, &s0)?;
    let (b0, el0) = ldba.initial_transition(letter0)?;
    let frontier = Frontier::new(ldba.element_count());

    let mut steps = Vec::with_capacity(horizon + 1);
    steps.push(TrajStep {
        rv: env.robustness(&s0),
        env_state: s0.clone(),
        b: b0,
        letter: letter0,
        fired: el0,
        action: None,
        r_mdp: 0.0,
        frontier: frontier.clone(),
    });

    let mut ps = ProductState { s: s0, b: b0, e: frontier };
    for _ in 0..horizon {
        let jumps = jump_ids(ldba, ps.b);
        let obs = ProductObs {
            env_obs: env.observe(&ps.s),
            b: ps.b,
            num_states: ldba.num_states,
            frontier: &ps.e,
            jumps,
        };
        let action = policy.act(&obs, &mut rng);
        let tr = product_step(env, ldba, &ps, &action, &mut rng)?;
        steps.push(TrajStep {
            rv: env.robustness(&tr.next.s),
            env_state: tr.next.s.clone(),
            b: tr.next.b,
            letter: tr.letter,
            fired: tr.fired,
            action: Some(action),
            r_mdp: tr.r_mdp,
            frontier: tr.next.e.clone(),
        });
        ps = tr.next;
    }
    Ok(ProductTrajectory { steps })
}

/// Jump ids available at `b`, in declaration order.
pub fn jump_ids(ldba: &Ldba, b: StateId) -> Vec<&str> {
    ldba.eps_edges
        .iter()
        .filter(|e| e.from == b)
        .map(|e| e.jump_id.as_str())
        .collect()
}

/// Number of steps whose automaton state is accepting (the initial record
/// included).
pub fn accepting_visits(traj: &ProductTrajectory, ldba: &Ldba) -> usize {
    traj.steps.iter().filter(|s| ldba.is_accepting(s.b)).count()
}

/// Input row for [`synthetic_trajectory`].
#[derive(Debug, Clone)]
pub struct SyntheticStep {
    pub letter_names: Vec<String>,
    pub rv: Option<RobustnessVector>,
    pub r_mdp: f64,
}

/// Builds a trajectory directly from a letter sequence, stepping the
/// automaton without any environment. The first row is the initial label.
pub fn synthetic_trajectory(
    ldba: &Ldba,
    rows: &[SyntheticStep],
) -> Result<ProductTrajectory, LdbaError> {
    let mut steps = Vec::with_capacity(rows.len());
    let mut frontier = Frontier::new(ldba.element_count());
    let mut b = ldba.initial;
    for (i, row) in rows.iter().enumerate() {
        let letter = ldba.letter_from_names(row.letter_names.iter().map(|n| n.as_str()))?;
        let (next, fired) = ldba.step(b, letter)?;
        if i > 0 {
            frontier.mark(fired);
        }
        if ldba.is_accepting(next) {
            frontier.clear_all();
        }
        steps.push(TrajStep {
            env_state: Vec::new(),
            rv: row.rv.clone(),
            b: next,
            letter,
            fired,
            action: if i == 0 {
                None
            } else {
                Some(ProductAction::Env(EnvAction::Discrete(0)))
            },
            r_mdp: row.r_mdp,
            frontier: frontier.clone(),
        });
        b = next;
    }
    Ok(ProductTrajectory { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{parse_ldba, ParseOptions};
    use crate::env::{FlatWorld, FlatWorldConfig};

    const FLATWORLD: &str = "\
ldba v1
aps: r g b y
states: 5
initial: 4
nondet:
accepting: 0
edge: 4 -> 1 : !b
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

    /// Repeats one fixed move forever.
    struct Scripted([f64; 2]);

    impl Policy for Scripted {
        fn act(&self, _obs: &ProductObs<'_>, _rng: &mut ChaCha8Rng) -> ProductAction {
            ProductAction::Env(EnvAction::Continuous(self.0.to_vec()))
        }
    }

    #[test]
    fn flatworld_step_moves_by_a_tenth() {
        let env = FlatWorld::new(FlatWorldConfig::default());
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s0 = env.reset(&mut rng);
        assert_eq!(s0, vec![-1.0, -1.0]);
        let ps = ProductState {
            s: s0,
            b: ldba.initial_transition(ldba.letter_from_names([]).unwrap()).unwrap().0,
            e: Frontier::new(ldba.element_count()),
        };
        assert_eq!(ps.b, 1);
        let tr = product_step(
            &env,
            &ldba,
            &ps,
            &ProductAction::Env(EnvAction::Continuous(alloc::vec![1.0, 1.0])),
            &mut rng,
        )
        .unwrap();
        assert!((tr.next.s[0] - -0.9).abs() < 1e-12);
        assert!((tr.next.s[1] - -0.9).abs() < 1e-12);
    }

    #[test]
    fn jump_leaves_environment_alone_and_pays_nothing() {
        let text = "\
ldba v1
aps: a
states: 3
initial: 0
nondet: 0
accepting: 2
edge: 0 -> 0 : true
edge: 1 -> 2 : a
edge: 1 -> 1 : !a
edge: 2 -> 2 : true
eps: 0 -> 1 : e0
";
        let ldba = parse_ldba(text, ParseOptions { allow_partial: true }).unwrap();
        let env = FlatWorld::new(FlatWorldConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = env.reset(&mut rng);
        let ps = ProductState {
            s: s.clone(),
            b: 0,
            e: Frontier::new(ldba.element_count()),
        };
        let tr = product_step(&env, &ldba, &ps, &ProductAction::Jump("e0".into()), &mut rng)
            .unwrap();
        assert_eq!(tr.next.s, s);
        assert_eq!(tr.r_mdp, 0.0);
        assert_eq!(tr.next.b, 1);
        assert_eq!(tr.fired, ldba.eps_element(0));
    }

    #[test]
    fn rollouts_are_seed_deterministic() {
        let env = FlatWorld::new(FlatWorldConfig::default());
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        let policy = Scripted([0.3, 0.7]);
        let a = rollout(&policy, &env, &ldba, 5, 42).unwrap();
        let b = rollout(&policy, &env, &ldba, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.transitions(), 5);
        a.replay_consistent(&ldba).unwrap();
    }

    #[test]
    fn horizon_one_records_a_single_transition() {
        let env = FlatWorld::new(FlatWorldConfig::default());
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        let policy = Scripted([0.0, 0.0]);
        let traj = rollout(&policy, &env, &ldba, 1, 7).unwrap();
        assert_eq!(traj.steps.len(), 2);
    }

    #[test]
    fn accepting_visit_counting() {
        let text = "ldba v1\naps: a\nstates: 1\ninitial: 0\naccepting: 0\nedge: 0 -> 0 : true\n";
        let ldba = parse_ldba(text, ParseOptions::default()).unwrap();
        let env = FlatWorld::new(FlatWorldConfig::default());
        let policy = Scripted([0.1, 0.0]);
        let traj = rollout(&policy, &env, &ldba, 4, 3).unwrap();
        // All five records sit in the accepting state.
        assert_eq!(accepting_visits(&traj, &ldba), 5);
    }
}
