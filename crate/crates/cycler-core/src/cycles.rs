//! Enumeration of minimal accepting initial paths and minimal accepting
//! cycles.
//!
//! A *minimal accepting initial path* (MAIP) is a simple transition path from
//! the automaton's initial state to the first accepting state it reaches. A
//! *minimal accepting cycle* (MAC) starts at an accepting state and ends at
//! the first accepting state reached (possibly the start itself), again
//! without repeating intermediate states. Epsilon edges participate exactly
//! like guard edges; parallel edges with different guards are distinct path
//! elements.
//!
//! [`find_maips`] and [`find_macs`] use depth-first search with backtracking.
//! [`brute_force_paths`] independently enumerates by breadth-first extension
//! and filtering against the path invariants, for use as a test oracle.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::automaton::{Ldba, StateId};

/// Whether a path starts at the initial state or at an accepting state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PathKind {
    Maip,
    Mac,
}

/// A chained sequence of transition elements ending at an accepting state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CyclePath {
    pub kind: PathKind,
    /// Element ids in traversal order (guard edges and eps edges alike).
    pub elements: Vec<usize>,
    pub start: StateId,
    pub end: StateId,
}

impl CyclePath {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// The element of this path whose source is `b`, if any.
    ///
    /// Path states repeat only at the endpoints, so the source is unique.
    pub fn element_at(&self, ldba: &Ldba, b: StateId) -> Option<usize> {
        self.elements
            .iter()
            .copied()
            .find(|&el| ldba.element_endpoints(el).0 == b)
    }

    pub fn contains(&self, element: usize) -> bool {
        self.elements.contains(&element)
    }

    /// Checks the path invariants against `ldba`.
    pub fn validate(&self, ldba: &Ldba) -> Result<(), PathInvariantError> {
        if self.elements.is_empty() {
            return Err(PathInvariantError::Empty);
        }
        let mut at = self.start;
        let mut seen_intermediate: BTreeSet<StateId> = BTreeSet::new();
        for (i, &el) in self.elements.iter().enumerate() {
            let (from, to) = ldba.element_endpoints(el);
            if from != at {
                return Err(PathInvariantError::BrokenChain { position: i });
            }
            let last = i + 1 == self.elements.len();
            if last {
                if to != self.end {
                    return Err(PathInvariantError::WrongEnd);
                }
            } else {
                if ldba.is_accepting(to) {
                    return Err(PathInvariantError::AcceptingIntermediate { state: to });
                }
                if to == self.start || !seen_intermediate.insert(to) {
                    return Err(PathInvariantError::RepeatedState { state: to });
                }
            }
            at = to;
        }
        if !ldba.is_accepting(self.end) {
            return Err(PathInvariantError::EndNotAccepting);
        }
        match self.kind {
            PathKind::Maip => {
                if self.start != ldba.initial {
                    return Err(PathInvariantError::WrongStart);
                }
            }
            PathKind::Mac => {
                if !ldba.is_accepting(self.start) {
                    return Err(PathInvariantError::WrongStart);
                }
            }
        }
        Ok(())
    }

    /// Guard chain like `4 -[!b]-> 1 -[r & !b]-> 2`.
    pub fn describe(&self, ldba: &Ldba) -> String {
        use alloc::format;
        let mut out = format!("{}", self.start);
        for &el in &self.elements {
            let (_, to) = ldba.element_endpoints(el);
            match ldba.element_guard(el) {
                Some(g) => out.push_str(&format!(" -[{g}]-> {to}")),
                None => out.push_str(&format!(" -[eps]-> {to}")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathInvariantError {
    Empty,
    BrokenChain { position: usize },
    WrongEnd,
    WrongStart,
    EndNotAccepting,
    AcceptingIntermediate { state: StateId },
    RepeatedState { state: StateId },
}

impl fmt::Display for PathInvariantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathInvariantError::Empty => write!(f, "path has no elements"),
            PathInvariantError::BrokenChain { position } => {
                write!(f, "element {position} does not chain from its predecessor")
            }
            PathInvariantError::WrongEnd => write!(f, "last element does not reach the recorded end"),
            PathInvariantError::WrongStart => write!(f, "start state violates the path kind"),
            PathInvariantError::EndNotAccepting => write!(f, "end state is not accepting"),
            PathInvariantError::AcceptingIntermediate { state } => {
                write!(f, "accepting state {state} appears as an intermediate node")
            }
            PathInvariantError::RepeatedState { state } => {
                write!(f, "state {state} repeats within the path")
            }
        }
    }
}

/// All minimal accepting initial paths, sorted lexicographically by element
/// sequence.
pub fn find_maips(ldba: &Ldba) -> Vec<CyclePath> {
    let mut out = Vec::new();
    dfs_from(ldba, ldba.initial, PathKind::Maip, &mut out);
    out.sort();
    out
}

/// All minimal accepting cycles over every accepting start state, sorted
/// lexicographically by element sequence.
pub fn find_macs(ldba: &Ldba) -> Vec<CyclePath> {
    let mut out = Vec::new();
    for &start in &ldba.accepting {
        dfs_from(ldba, start, PathKind::Mac, &mut out);
    }
    out.sort();
    out
}

fn dfs_from(ldba: &Ldba, start: StateId, kind: PathKind, out: &mut Vec<CyclePath>) {
    let mut visited = vec![false; ldba.num_states];
    let mut path = Vec::new();
    visited[start] = true;
    dfs(ldba, start, start, kind, &mut visited, &mut path, out);
    visited[start] = false;
    debug_assert!(path.is_empty());
}

fn dfs(
    ldba: &Ldba,
    start: StateId,
    at: StateId,
    kind: PathKind,
    visited: &mut Vec<bool>,
    path: &mut Vec<usize>,
    out: &mut Vec<CyclePath>,
) {
    for el in ldba.out_elements(at) {
        let (_, to) = ldba.element_endpoints(el);
        if ldba.is_accepting(to) {
            // Record and stop: a path terminates at the first accepting state,
            // even one already on the path (in particular the cycle start).
            path.push(el);
            out.push(CyclePath {
                kind,
                elements: path.clone(),
                start,
                end: to,
            });
            path.pop();
        } else if !visited[to] {
            visited[to] = true;
            path.push(el);
            dfs(ldba, start, to, kind, visited, path, out);
            path.pop();
            visited[to] = false;
        }
    }
}

/// Largest automaton accepted by [`brute_force_paths`].
pub const BRUTE_FORCE_MAX_STATES: usize = 10;

/// Error from the brute-force oracle's size guard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeGuardExceeded {
    pub states: usize,
}

impl fmt::Display for SizeGuardExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "brute-force enumeration limited to {BRUTE_FORCE_MAX_STATES} states, got {}",
            self.states
        )
    }
}

/// Exhaustively enumerates every path satisfying the [`CyclePath`] invariants
/// from any of `sources`, by breadth-first extension of partial sequences.
///
/// Independent of the DFS in [`find_maips`]/[`find_macs`]; intended as a test
/// oracle for small automata.
pub fn brute_force_paths(
    ldba: &Ldba,
    sources: &BTreeSet<StateId>,
    kind: PathKind,
) -> Result<Vec<CyclePath>, SizeGuardExceeded> {
    if ldba.num_states > BRUTE_FORCE_MAX_STATES {
        return Err(SizeGuardExceeded {
            states: ldba.num_states,
        });
    }
    let mut done: Vec<CyclePath> = Vec::new();
    // Partial sequences: (source, elements, current state, states used so far).
    let mut frontier: Vec<(StateId, Vec<usize>, StateId, BTreeSet<StateId>)> = sources
        .iter()
        .map(|&s| (s, Vec::new(), s, BTreeSet::from([s])))
        .collect();
    while let Some((source, elements, at, used)) = frontier.pop() {
        for el in 0..ldba.element_count() {
            let (from, to) = ldba.element_endpoints(el);
            if from != at {
                continue;
            }
            let mut next = elements.clone();
            next.push(el);
            if ldba.is_accepting(to) {
                done.push(CyclePath {
                    kind,
                    elements: next,
                    start: source,
                    end: to,
                });
            } else if !used.contains(&to) {
                let mut used2 = used.clone();
                used2.insert(to);
                frontier.push((source, next, to, used2));
            }
        }
    }
    done.sort();
    done.dedup();
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{parse_ldba, ParseOptions};
    use alloc::vec;

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

    #[test]
    fn flatworld_has_three_initial_paths() {
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        let maips = find_maips(&ldba);
        // The hop 4 -> 1 prefixes each of the three task paths.
        let sequences: Vec<Vec<usize>> = maips.iter().map(|p| p.elements.clone()).collect();
        assert_eq!(sequences, vec![vec![0, 2, 5, 8], vec![0, 2, 6], vec![0, 3]]);
        for p in &maips {
            p.validate(&ldba).unwrap();
            assert_eq!(p.start, 4);
            assert_eq!(p.end, 0);
        }
    }

    #[test]
    fn flatworld_macs_are_the_flush_cycles() {
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        let macs = find_macs(&ldba);
        assert_eq!(macs.len(), 6);
        for p in &macs {
            p.validate(&ldba).unwrap();
            assert_eq!(p.start, 0);
            assert_eq!(p.end, 0);
        }
        // The full r-g-y round trip 0 -> 2 -> 3 -> 0 is one of them.
        assert!(
            macs.iter().any(|p| p.elements == vec![10, 5, 8]),
            "missing the 0->2->3->0 round trip: {macs:?}"
        );
    }

    #[test]
    fn two_state_cycle_example() {
        let text = "\
ldba v1
aps: a
states: 2
initial: 0
accepting: 0
edge: 0 -> 0 : a
edge: 0 -> 1 : !a
edge: 1 -> 0 : a
edge: 1 -> 1 : !a
";
        let ldba = parse_ldba(text, ParseOptions::default()).unwrap();
        let macs = find_macs(&ldba);
        let sequences: Vec<Vec<usize>> = macs.iter().map(|p| p.elements.clone()).collect();
        assert_eq!(sequences, vec![vec![0], vec![1, 2]]);

        let brute = brute_force_paths(&ldba, &ldba.accepting, PathKind::Mac).unwrap();
        assert_eq!(macs, brute);
    }

    #[test]
    fn unreachable_accepting_state_yields_no_initial_paths() {
        let text = "\
ldba v1
aps: a
states: 2
initial: 0
accepting: 1
edge: 0 -> 0 : true
edge: 1 -> 1 : true
";
        let ldba = parse_ldba(text, ParseOptions::default()).unwrap();
        assert!(find_maips(&ldba).is_empty());
    }

    #[test]
    fn no_accepting_states_no_cycles() {
        let text = "\
ldba v1
aps: a
states: 1
initial: 0
accepting:
edge: 0 -> 0 : true
";
        let ldba = parse_ldba(text, ParseOptions::default()).unwrap();
        assert!(find_macs(&ldba).is_empty());
        assert!(find_maips(&ldba).is_empty());
    }

    #[test]
    fn accepting_self_loop_is_a_length_one_cycle() {
        let text = "ldba v1\naps: a\nstates: 1\ninitial: 0\naccepting: 0\nedge: 0 -> 0 : true\n";
        let ldba = parse_ldba(text, ParseOptions::default()).unwrap();
        let macs = find_macs(&ldba);
        assert_eq!(macs.len(), 1);
        assert_eq!(macs[0].elements, vec![0]);
        let brute = brute_force_paths(&ldba, &ldba.accepting, PathKind::Mac).unwrap();
        assert_eq!(macs, brute);
    }

    #[test]
    fn repeated_calls_are_identical() {
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        assert_eq!(find_macs(&ldba), find_macs(&ldba));
        assert_eq!(find_maips(&ldba), find_maips(&ldba));
    }

    #[test]
    fn eps_edges_participate_in_paths() {
        let text = "\
ldba v1
aps: a
states: 3
initial: 0
nondet: 0
accepting: 2
edge: 1 -> 2 : a
edge: 1 -> 1 : !a
edge: 2 -> 2 : true
eps: 0 -> 1 : e0
";
        let ldba = parse_ldba(text, ParseOptions { allow_partial: true }).unwrap();
        let maips = find_maips(&ldba);
        assert_eq!(maips.len(), 1);
        let eps_el = ldba.eps_element(0);
        assert_eq!(maips[0].elements[0], eps_el);
        let brute =
            brute_force_paths(&ldba, &BTreeSet::from([ldba.initial]), PathKind::Maip).unwrap();
        assert_eq!(maips, brute);
    }

    #[test]
    fn size_guard_rejects_large_automata() {
        let mut text = String::from("ldba v1\naps: a\nstates: 11\ninitial: 0\naccepting: 0\n");
        for s in 0..11 {
            text.push_str(&alloc::format!("edge: {s} -> {} : true\n", (s + 1) % 11));
        }
        let ldba = parse_ldba(&text, ParseOptions::default()).unwrap();
        assert!(brute_force_paths(&ldba, &ldba.accepting, PathKind::Mac).is_err());
    }
}
