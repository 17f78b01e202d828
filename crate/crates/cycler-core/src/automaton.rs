//! Limit-deterministic Büchi automata and the `ldba v1` text format.
//!
//! An LDBA is split into a nondeterministic component and a deterministic
//! component. Accepting states live in the deterministic component, edges
//! never leave the deterministic component for the nondeterministic one, and
//! epsilon "jump" edges originate only in the nondeterministic component.
//! Guards are temporal-free formulas over the declared proposition set; for
//! every deterministic state at most one guard may hold per letter, which is
//! checked by enumerating all `2^|AP|` letters at parse time.
//!
//! The text format is line oriented, UTF-8, `#` starts a comment:
//!
//! ```text
//! ldba v1
//! aps: r g b y
//! states: 5
//! initial: 4
//! nondet:            # optional; empty means fully deterministic
//! accepting: 0
//! edge: 4 -> 1 : !b  # edge id 0, assigned in file order
//! eps: 3 -> 0 : e0   # only legal when 3 is listed under nondet
//! ```
//!
//! Deterministic states must cover every letter. A missing letter is a hard
//! validation error by default; with [`ParseOptions::allow_partial`] a fresh
//! absorbing non-accepting sink state is synthesized and every uncovered
//! letter is routed to it.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ltl::{parse_ltl, Formula, ParseError, KEYWORDS};

/// Automaton state index.
pub type StateId = usize;

/// A letter: bitmask over the proposition set, bit `i` = `aps[i]` holds.
pub type Letter = u16;

/// Largest supported proposition set; letter enumeration is `2^|AP|`.
pub const MAX_APS: usize = 16;

/// A guard-labeled transition. Edge ids are positions in [`Ldba::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: StateId,
    pub guard: Formula,
    pub to: StateId,
}

/// An epsilon (jump) transition out of the nondeterministic component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsEdge {
    pub from: StateId,
    pub jump_id: String,
    pub to: StateId,
}

/// Temporal-free guard compiled to proposition indices for fast evaluation.
#[derive(Debug, Clone)]
enum GuardExpr {
    True,
    False,
    Atom(usize),
    Not(Box<GuardExpr>),
    And(Box<GuardExpr>, Box<GuardExpr>),
    Or(Box<GuardExpr>, Box<GuardExpr>),
    Implies(Box<GuardExpr>, Box<GuardExpr>),
}

impl GuardExpr {
    fn compile(f: &Formula, aps: &[String]) -> Result<Self, LdbaError> {
        Ok(match f {
            Formula::True => GuardExpr::True,
            Formula::False => GuardExpr::False,
            Formula::Atom(name) => {
                let idx = aps
                    .iter()
                    .position(|ap| ap == name)
                    .ok_or_else(|| LdbaError::UnknownAtom { name: name.clone() })?;
                GuardExpr::Atom(idx)
            }
            Formula::Not(a) => GuardExpr::Not(Box::new(Self::compile(a, aps)?)),
            Formula::And(a, b) => GuardExpr::And(
                Box::new(Self::compile(a, aps)?),
                Box::new(Self::compile(b, aps)?),
            ),
            Formula::Or(a, b) => GuardExpr::Or(
                Box::new(Self::compile(a, aps)?),
                Box::new(Self::compile(b, aps)?),
            ),
            Formula::Implies(a, b) => GuardExpr::Implies(
                Box::new(Self::compile(a, aps)?),
                Box::new(Self::compile(b, aps)?),
            ),
            _ => return Err(LdbaError::TemporalGuard),
        })
    }

    fn eval(&self, letter: Letter) -> bool {
        match self {
            GuardExpr::True => true,
            GuardExpr::False => false,
            GuardExpr::Atom(i) => letter & (1 << i) != 0,
            GuardExpr::Not(a) => !a.eval(letter),
            GuardExpr::And(a, b) => a.eval(letter) && b.eval(letter),
            GuardExpr::Or(a, b) => a.eval(letter) || b.eval(letter),
            GuardExpr::Implies(a, b) => !a.eval(letter) || b.eval(letter),
        }
    }

    /// Robustness over dense per-proposition values (already threshold-shifted).
    fn robustness(&self, rho: &[f64], rho_max: f64) -> f64 {
        match self {
            GuardExpr::True => rho_max,
            GuardExpr::False => -rho_max,
            GuardExpr::Atom(i) => rho[*i],
            GuardExpr::Not(a) => -a.robustness(rho, rho_max),
            GuardExpr::And(a, b) => f64::min(a.robustness(rho, rho_max), b.robustness(rho, rho_max)),
            GuardExpr::Or(a, b) => f64::max(a.robustness(rho, rho_max), b.robustness(rho, rho_max)),
            GuardExpr::Implies(a, b) => {
                f64::max(-a.robustness(rho, rho_max), b.robustness(rho, rho_max))
            }
        }
    }
}

/// A limit-deterministic Büchi automaton.
///
/// Transitions are addressed by *element id*: guard edges take ids
/// `0..edges.len()`, epsilon edges follow at `edges.len()..element_count()`.
/// Frontiers, cycle paths, and recorded trajectories all use this id space.
#[derive(Debug, Clone)]
pub struct Ldba {
    pub aps: Vec<String>,
    pub num_states: usize,
    pub initial: StateId,
    pub accepting: BTreeSet<StateId>,
    pub nondet: BTreeSet<StateId>,
    pub edges: Vec<Edge>,
    pub eps_edges: Vec<EpsEdge>,
    /// The synthesized sink state, when `allow_partial` had to add one.
    pub sink: Option<StateId>,
    compiled: Vec<GuardExpr>,
    out_edges: Vec<Vec<usize>>,
    out_eps: Vec<Vec<usize>>,
}

/// Options controlling validation during construction.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Route uncovered letters of deterministic states to a synthesized
    /// absorbing non-accepting sink instead of failing validation.
    pub allow_partial: bool,
}

/// Errors from parsing, validation, or stepping.
#[derive(Debug, Clone, PartialEq)]
pub enum LdbaError {
    Syntax { line: usize, message: String },
    Guard { line: usize, error: ParseError },
    UnknownAtom { name: String },
    TemporalGuard,
    TooManyAps { count: usize },
    BadStateId { id: usize },
    AcceptingInNondet { state: StateId },
    EdgeIntoNondet { edge: usize },
    EpsFromDeterministic { eps: usize },
    DuplicateJumpId { state: StateId, jump_id: String },
    OverlappingGuards { state: StateId, letter: Vec<String>, edges: (usize, usize) },
    IncompleteState { state: StateId, letter: Vec<String> },
    NoMatchingEdge { state: StateId, letter: Vec<String> },
    AmbiguousNondetStep { state: StateId, letter: Vec<String> },
    NoSuchJump { state: StateId, jump_id: String },
}

impl fmt::Display for LdbaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LdbaError::Syntax { line, message } => write!(f, "line {line}: {message}"),
            LdbaError::Guard { line, error } => write!(f, "line {line}: guard: {error}"),
            LdbaError::UnknownAtom { name } => write!(f, "guard uses undeclared proposition '{name}'"),
            LdbaError::TemporalGuard => write!(f, "guards must be temporal-free"),
            LdbaError::TooManyAps { count } => {
                write!(f, "{count} propositions exceed the supported maximum of {MAX_APS}")
            }
            LdbaError::BadStateId { id } => write!(f, "state id {id} out of range"),
            LdbaError::AcceptingInNondet { state } => {
                write!(f, "accepting state {state} lies in the nondeterministic component")
            }
            LdbaError::EdgeIntoNondet { edge } => write!(
                f,
                "edge {edge} leaves the deterministic component for the nondeterministic one"
            ),
            LdbaError::EpsFromDeterministic { eps } => {
                write!(f, "eps edge {eps} originates in the deterministic component")
            }
            LdbaError::DuplicateJumpId { state, jump_id } => {
                write!(f, "state {state} declares jump id '{jump_id}' twice")
            }
            LdbaError::OverlappingGuards { state, letter, edges } => write!(
                f,
                "state {state}: edges {} and {} both match letter {{{}}}",
                edges.0,
                edges.1,
                letter.join(", ")
            ),
            LdbaError::IncompleteState { state, letter } => write!(
                f,
                "state {state}: no edge matches letter {{{}}} (use allow-partial to synthesize a sink)",
                letter.join(", ")
            ),
            LdbaError::NoMatchingEdge { state, letter } => write!(
                f,
                "incomplete automaton: no edge from state {state} matches letter {{{}}}",
                letter.join(", ")
            ),
            LdbaError::AmbiguousNondetStep { state, letter } => write!(
                f,
                "nondeterministic state {state} has several matching edges for letter {{{}}}; use a jump",
                letter.join(", ")
            ),
            LdbaError::NoSuchJump { state, jump_id } => {
                write!(f, "no jump '{jump_id}' at state {state}")
            }
        }
    }
}

impl Ldba {
    /// Builds and validates an automaton from parts.
    pub fn new(
        aps: Vec<String>,
        num_states: usize,
        initial: StateId,
        accepting: BTreeSet<StateId>,
        nondet: BTreeSet<StateId>,
        edges: Vec<Edge>,
        eps_edges: Vec<EpsEdge>,
        options: ParseOptions,
    ) -> Result<Self, LdbaError> {
        if aps.len() > MAX_APS {
            return Err(LdbaError::TooManyAps { count: aps.len() });
        }
        let mut ldba = Ldba {
            aps,
            num_states,
            initial,
            accepting,
            nondet,
            edges,
            eps_edges,
            sink: None,
            compiled: Vec::new(),
            out_edges: Vec::new(),
            out_eps: Vec::new(),
        };
        ldba.check_ids()?;
        ldba.compile()?;
        ldba.check_structure()?;
        ldba.check_determinism()?;
        ldba.check_completeness(options.allow_partial)?;
        Ok(ldba)
    }

    fn check_ids(&self) -> Result<(), LdbaError> {
        let ok = |id: StateId| -> Result<(), LdbaError> {
            if id >= self.num_states {
                Err(LdbaError::BadStateId { id })
            } else {
                Ok(())
            }
        };
        ok(self.initial)?;
        for &s in self.accepting.iter().chain(self.nondet.iter()) {
            ok(s)?;
        }
        for e in &self.edges {
            ok(e.from)?;
            ok(e.to)?;
        }
        for e in &self.eps_edges {
            ok(e.from)?;
            ok(e.to)?;
        }
        Ok(())
    }

    fn compile(&mut self) -> Result<(), LdbaError> {
        self.compiled = self
            .edges
            .iter()
            .map(|e| GuardExpr::compile(&e.guard, &self.aps))
            .collect::<Result<_, _>>()?;
        self.rebuild_adjacency();
        Ok(())
    }

    fn rebuild_adjacency(&mut self) {
        self.out_edges = vec![Vec::new(); self.num_states];
        self.out_eps = vec![Vec::new(); self.num_states];
        for (i, e) in self.edges.iter().enumerate() {
            self.out_edges[e.from].push(i);
        }
        for (i, e) in self.eps_edges.iter().enumerate() {
            self.out_eps[e.from].push(i);
        }
    }

    fn check_structure(&self) -> Result<(), LdbaError> {
        for &s in &self.accepting {
            if self.nondet.contains(&s) {
                return Err(LdbaError::AcceptingInNondet { state: s });
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if !self.nondet.contains(&e.from) && self.nondet.contains(&e.to) {
                return Err(LdbaError::EdgeIntoNondet { edge: i });
            }
        }
        for (i, e) in self.eps_edges.iter().enumerate() {
            if !self.nondet.contains(&e.from) {
                return Err(LdbaError::EpsFromDeterministic { eps: i });
            }
        }
        for s in 0..self.num_states {
            let mut seen = BTreeSet::new();
            for &i in &self.out_eps[s] {
                if !seen.insert(self.eps_edges[i].jump_id.clone()) {
                    return Err(LdbaError::DuplicateJumpId {
                        state: s,
                        jump_id: self.eps_edges[i].jump_id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_determinism(&self) -> Result<(), LdbaError> {
        for s in 0..self.num_states {
            if self.nondet.contains(&s) {
                continue;
            }
            for letter in self.all_letters() {
                let mut first: Option<usize> = None;
                for &i in &self.out_edges[s] {
                    if self.compiled[i].eval(letter) {
                        if let Some(prev) = first {
                            return Err(LdbaError::OverlappingGuards {
                                state: s,
                                letter: self.letter_names(letter),
                                edges: (prev, i),
                            });
                        }
                        first = Some(i);
                    }
                }
            }
        }
        Ok(())
    }

    fn check_completeness(&mut self, allow_partial: bool) -> Result<(), LdbaError> {
        let mut holes: Vec<(StateId, Vec<Letter>)> = Vec::new();
        for s in 0..self.num_states {
            if self.nondet.contains(&s) {
                continue;
            }
            let missing: Vec<Letter> = self
                .all_letters()
                .filter(|&l| !self.out_edges[s].iter().any(|&i| self.compiled[i].eval(l)))
                .collect();
            if !missing.is_empty() {
                if !allow_partial {
                    return Err(LdbaError::IncompleteState {
                        state: s,
                        letter: self.letter_names(missing[0]),
                    });
                }
                holes.push((s, missing));
            }
        }
        if holes.is_empty() {
            return Ok(());
        }
        let sink = self.num_states;
        self.num_states += 1;
        self.sink = Some(sink);
        for (s, _) in &holes {
            // Complement of the state's existing out-guards.
            let guard = self.out_edges[*s]
                .iter()
                .map(|&i| self.edges[i].guard.clone())
                .reduce(|a, b| Formula::Or(Box::new(a), Box::new(b)))
                .map(|union| Formula::Not(Box::new(union)))
                .unwrap_or(Formula::True);
            self.edges.push(Edge {
                from: *s,
                guard,
                to: sink,
            });
        }
        self.edges.push(Edge {
            from: sink,
            guard: Formula::True,
            to: sink,
        });
        self.compile()?;
        Ok(())
    }

    /// Iterator over every letter of the alphabet.
    pub fn all_letters(&self) -> impl Iterator<Item = Letter> {
        0..(1u32 << self.aps.len()) as Letter
    }

    /// Proposition names that hold in `letter`, in declaration order.
    pub fn letter_names(&self, letter: Letter) -> Vec<String> {
        self.aps
            .iter()
            .enumerate()
            .filter(|(i, _)| letter & (1 << i) != 0)
            .map(|(_, ap)| ap.clone())
            .collect()
    }

    /// Encodes a set of proposition names as a letter.
    pub fn letter_from_names<'a, I: IntoIterator<Item = &'a str>>(
        &self,
        names: I,
    ) -> Result<Letter, LdbaError> {
        let mut letter = 0;
        for name in names {
            let idx = self
                .aps
                .iter()
                .position(|ap| ap == name)
                .ok_or_else(|| LdbaError::UnknownAtom { name: name.to_owned() })?;
            letter |= 1 << idx;
        }
        Ok(letter)
    }

    /// Total number of addressable transition elements (guard edges then eps).
    pub fn element_count(&self) -> usize {
        self.edges.len() + self.eps_edges.len()
    }

    /// Element id of the `i`-th eps edge.
    pub fn eps_element(&self, i: usize) -> usize {
        self.edges.len() + i
    }

    /// Source and target of an element.
    pub fn element_endpoints(&self, element: usize) -> (StateId, StateId) {
        if element < self.edges.len() {
            let e = &self.edges[element];
            (e.from, e.to)
        } else {
            let e = &self.eps_edges[element - self.edges.len()];
            (e.from, e.to)
        }
    }

    /// Guard of an element; `None` for eps edges.
    pub fn element_guard(&self, element: usize) -> Option<&Formula> {
        if element < self.edges.len() {
            Some(&self.edges[element].guard)
        } else {
            None
        }
    }

    /// Human-readable description of an element.
    pub fn element_label(&self, element: usize) -> String {
        let (from, to) = self.element_endpoints(element);
        if let Some(guard) = self.element_guard(element) {
            format!("{from} -[{guard}]-> {to}")
        } else {
            let eps = &self.eps_edges[element - self.edges.len()];
            format!("{from} -[eps {}]-> {to}", eps.jump_id)
        }
    }

    /// All elements leaving `state`, guard edges first, ascending ids.
    pub fn out_elements(&self, state: StateId) -> Vec<usize> {
        let mut out: Vec<usize> = self.out_edges[state].clone();
        out.extend(self.out_eps[state].iter().map(|&i| self.eps_element(i)));
        out
    }

    pub fn is_accepting(&self, state: StateId) -> bool {
        self.accepting.contains(&state)
    }

    /// Fires the unique edge matching `letter` from `b`.
    pub fn step(&self, b: StateId, letter: Letter) -> Result<(StateId, usize), LdbaError> {
        let mut hit: Option<usize> = None;
        for &i in &self.out_edges[b] {
            if self.compiled[i].eval(letter) {
                if hit.is_some() {
                    return Err(LdbaError::AmbiguousNondetStep {
                        state: b,
                        letter: self.letter_names(letter),
                    });
                }
                hit = Some(i);
            }
        }
        match hit {
            Some(i) => Ok((self.edges[i].to, i)),
            None => Err(LdbaError::NoMatchingEdge {
                state: b,
                letter: self.letter_names(letter),
            }),
        }
    }

    /// Follows the epsilon edge `jump_id` out of `b`.
    pub fn jump(&self, b: StateId, jump_id: &str) -> Result<(StateId, usize), LdbaError> {
        for &i in &self.out_eps[b] {
            if self.eps_edges[i].jump_id == jump_id {
                return Ok((self.eps_edges[i].to, self.eps_element(i)));
            }
        }
        Err(LdbaError::NoSuchJump {
            state: b,
            jump_id: jump_id.to_owned(),
        })
    }

    /// The transition taken on the first observed letter, from the initial state.
    pub fn initial_transition(&self, letter: Letter) -> Result<(StateId, usize), LdbaError> {
        self.step(self.initial, letter)
    }

    /// Boolean evaluation of a compiled edge guard against a letter.
    pub fn edge_matches(&self, edge: usize, letter: Letter) -> bool {
        self.compiled[edge].eval(letter)
    }

    /// Robustness of an edge guard over dense threshold-shifted values.
    ///
    /// `rho[i]` must hold `f_x(s) - c_x` for proposition `i` in declaration
    /// order. Returns `None` for eps elements, which carry no guard.
    pub fn element_robustness(&self, element: usize, rho: &[f64], rho_max: f64) -> Option<f64> {
        if element < self.edges.len() {
            Some(self.compiled[element].robustness(rho, rho_max))
        } else {
            None
        }
    }

    /// Serializes back to `ldba v1` text. Synthesized sink edges, if any, are
    /// emitted like ordinary edges, so the result always reparses without
    /// `allow_partial`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("ldba v1\n");
        out.push_str("aps:");
        for ap in &self.aps {
            out.push(' ');
            out.push_str(ap);
        }
        out.push('\n');
        out.push_str(&format!("states: {}\n", self.num_states));
        out.push_str(&format!("initial: {}\n", self.initial));
        out.push_str("nondet:");
        for s in &self.nondet {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
        out.push_str("accepting:");
        for s in &self.accepting {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
        for e in &self.edges {
            out.push_str(&format!("edge: {} -> {} : {}\n", e.from, e.to, e.guard));
        }
        for e in &self.eps_edges {
            out.push_str(&format!("eps: {} -> {} : {}\n", e.from, e.to, e.jump_id));
        }
        out
    }

    /// Structural equality: same parts, ignoring derived tables.
    pub fn structurally_equal(&self, other: &Ldba) -> bool {
        self.aps == other.aps
            && self.num_states == other.num_states
            && self.initial == other.initial
            && self.accepting == other.accepting
            && self.nondet == other.nondet
            && self.edges == other.edges
            && self.eps_edges == other.eps_edges
    }
}

/// Parses the `ldba v1` text format.
pub fn parse_ldba(text: &str, options: ParseOptions) -> Result<Ldba, LdbaError> {
    let syntax = |line: usize, message: &str| LdbaError::Syntax {
        line,
        message: message.to_owned(),
    };

    let mut aps: Option<Vec<String>> = None;
    let mut num_states: Option<usize> = None;
    let mut initial: Option<StateId> = None;
    let mut nondet: BTreeSet<StateId> = BTreeSet::new();
    let mut accepting: Option<BTreeSet<StateId>> = None;
    let mut edges: Vec<Edge> = Vec::new();
    let mut raw_edges: Vec<(usize, String)> = Vec::new();
    let mut eps_edges: Vec<EpsEdge> = Vec::new();
    let mut saw_header = false;

    for (lineno, raw_line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != "ldba v1" {
                return Err(syntax(line_number, "expected header 'ldba v1'"));
            }
            saw_header = true;
            continue;
        }
        let (key, rest) = match line.split_once(':') {
            Some((k, r)) => (k.trim(), r.trim()),
            None => return Err(syntax(line_number, "expected 'key: value'")),
        };
        match key {
            "aps" => {
                if aps.is_some() {
                    return Err(syntax(line_number, "duplicate 'aps' line"));
                }
                let names: Vec<String> = rest.split_whitespace().map(|s| s.to_owned()).collect();
                let mut seen = BTreeSet::new();
                for name in &names {
                    if KEYWORDS.contains(&name.as_str()) {
                        return Err(syntax(line_number, "proposition name collides with a keyword"));
                    }
                    if !name
                        .chars()
                        .enumerate()
                        .all(|(i, c)| if i == 0 { c.is_alphabetic() || c == '_' } else { c.is_alphanumeric() || c == '_' })
                    {
                        return Err(syntax(line_number, "proposition names must be identifiers"));
                    }
                    if !seen.insert(name.clone()) {
                        return Err(syntax(line_number, "duplicate proposition name"));
                    }
                }
                aps = Some(names);
            }
            "states" => {
                num_states = Some(
                    rest.parse::<usize>()
                        .map_err(|_| syntax(line_number, "expected a state count"))?,
                );
            }
            "initial" => {
                initial = Some(
                    rest.parse::<usize>()
                        .map_err(|_| syntax(line_number, "expected a state id"))?,
                );
            }
            "nondet" => {
                for tok in rest.split_whitespace() {
                    nondet.insert(
                        tok.parse::<usize>()
                            .map_err(|_| syntax(line_number, "expected state ids"))?,
                    );
                }
            }
            "accepting" => {
                let mut set = BTreeSet::new();
                for tok in rest.split_whitespace() {
                    set.insert(
                        tok.parse::<usize>()
                            .map_err(|_| syntax(line_number, "expected state ids"))?,
                    );
                }
                accepting = Some(set);
            }
            "edge" => {
                let (endpoints, guard_text) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(line_number, "expected 'edge: FROM -> TO : GUARD'"))?;
                let (from, to) = parse_endpoints(endpoints)
                    .ok_or_else(|| syntax(line_number, "expected 'FROM -> TO'"))?;
                edges.push(Edge {
                    from,
                    guard: Formula::True, // placeholder until aps are known
                    to,
                });
                raw_edges.push((line_number, guard_text.trim().to_owned()));
            }
            "eps" => {
                let (endpoints, jump) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(line_number, "expected 'eps: FROM -> TO : JUMP'"))?;
                let (from, to) = parse_endpoints(endpoints)
                    .ok_or_else(|| syntax(line_number, "expected 'FROM -> TO'"))?;
                let jump_id = jump.trim();
                if jump_id.is_empty() {
                    return Err(syntax(line_number, "missing jump id"));
                }
                eps_edges.push(EpsEdge {
                    from,
                    jump_id: jump_id.to_owned(),
                    to,
                });
            }
            other => {
                return Err(syntax(line_number, &format!("unknown directive '{other}'")));
            }
        }
    }

    if !saw_header {
        return Err(syntax(1, "empty input; expected header 'ldba v1'"));
    }
    let aps = aps.ok_or_else(|| syntax(0, "missing 'aps' line"))?;
    let num_states = num_states.ok_or_else(|| syntax(0, "missing 'states' line"))?;
    let initial = initial.ok_or_else(|| syntax(0, "missing 'initial' line"))?;
    let accepting = accepting.ok_or_else(|| syntax(0, "missing 'accepting' line"))?;

    for (edge, (line_number, guard_text)) in edges.iter_mut().zip(&raw_edges) {
        edge.guard = parse_ltl(guard_text, &aps).map_err(|error| LdbaError::Guard {
            line: *line_number,
            error,
        })?;
        if !edge.guard.is_temporal_free() {
            return Err(LdbaError::Guard {
                line: *line_number,
                error: ParseError {
                    offset: 0,
                    kind: crate::ltl::ParseErrorKind::Expected(
                        "temporal-free guard".to_owned(),
                    ),
                },
            });
        }
    }

    Ldba::new(aps, num_states, initial, accepting, nondet, edges, eps_edges, options)
}

fn parse_endpoints(text: &str) -> Option<(StateId, StateId)> {
    let (from, to) = text.split_once("->")?;
    Some((from.trim().parse().ok()?, to.trim().parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    /// Five-state task automaton with a distinct pre-initial state 4 and the
    /// hop edge 4 -> 1. States 1/2/3 wait for r, g, y in order; 0 is the
    /// accepting flush state that restarts the round. Partial: letters
    /// containing b are unrouted.
    pub(crate) const FLATWORLD: &str = "\
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

    fn letter(ldba: &Ldba, names: &[&str]) -> Letter {
        ldba.letter_from_names(names.iter().copied()).unwrap()
    }

    #[test]
    fn parses_flatworld_fixture() {
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        // File declares 5 states; the sink synthesized for the b-letters is a 6th.
        assert_eq!(ldba.initial, 4);
        assert_eq!(ldba.accepting, BTreeSet::from([0]));
        assert_eq!(ldba.sink, Some(5));
        assert_eq!(ldba.num_states, 6);
    }

    #[test]
    fn one_state_true_loop_accepts_everything() {
        let text = "ldba v1\naps: a\nstates: 1\ninitial: 0\naccepting: 0\nedge: 0 -> 0 : true\n";
        let ldba = parse_ldba(text, ParseOptions::default()).unwrap();
        assert_eq!(ldba.sink, None);
        for l in ldba.all_letters() {
            assert_eq!(ldba.step(0, l).unwrap(), (0, 0));
        }
    }

    #[test]
    fn overlapping_guards_name_the_witness() {
        let text = "\
ldba v1
aps: r
states: 2
initial: 0
accepting: 1
edge: 0 -> 1 : r
edge: 0 -> 0 : true
edge: 1 -> 1 : true
";
        let err = parse_ldba(text, ParseOptions::default()).unwrap_err();
        match err {
            LdbaError::OverlappingGuards { state, letter, .. } => {
                assert_eq!(state, 0);
                assert_eq!(letter, vec!["r".to_string()]);
            }
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn incomplete_state_is_an_error_without_allow_partial() {
        let err = parse_ldba(FLATWORLD, ParseOptions::default()).unwrap_err();
        assert!(matches!(err, LdbaError::IncompleteState { .. }));
    }

    #[test]
    fn sink_is_absorbing_and_non_accepting() {
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        let sink = ldba.sink.unwrap();
        assert!(!ldba.is_accepting(sink));
        for l in ldba.all_letters() {
            assert_eq!(ldba.step(sink, l).unwrap().0, sink);
        }
        // Letters containing b route every task state to the sink.
        let b = letter(&ldba, &["b"]);
        for s in [0, 1, 2, 3, 4] {
            assert_eq!(ldba.step(s, b).unwrap().0, sink);
        }
    }

    #[test]
    fn step_follows_worked_example() {
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        assert_eq!(ldba.initial_transition(letter(&ldba, &[])).unwrap().0, 1);
        assert_eq!(ldba.step(1, letter(&ldba, &["r"])).unwrap().0, 2);
        assert_eq!(ldba.step(2, letter(&ldba, &[])).unwrap().0, 2);
        assert_eq!(ldba.step(2, letter(&ldba, &["g"])).unwrap().0, 3);
        assert_eq!(ldba.step(3, letter(&ldba, &["y"])).unwrap().0, 0);
    }

    #[test]
    fn determinism_is_total_after_sink_synthesis() {
        let ldba = parse_ldba(FLATWORLD, ParseOptions { allow_partial: true }).unwrap();
        for s in 0..ldba.num_states {
            for l in ldba.all_letters() {
                let matches = ldba
                    .out_elements(s)
                    .into_iter()
                    .filter(|&el| el < ldba.edges.len() && ldba.edge_matches(el, l))
                    .count();
                assert_eq!(matches, 1, "state {s} letter {l:?}");
            }
        }
    }

    #[test]
    fn jumps_resolve_by_id() {
        let text = "\
ldba v1
aps: a
states: 4
initial: 0
nondet: 0
accepting: 2
edge: 1 -> 1 : true
edge: 2 -> 2 : true
edge: 3 -> 3 : true
eps: 0 -> 2 : e0
eps: 0 -> 3 : e1
";
        let ldba = parse_ldba(text, ParseOptions::default()).unwrap();
        assert_eq!(ldba.jump(0, "e0").unwrap().0, 2);
        assert_eq!(ldba.jump(0, "e1").unwrap().0, 3);
        assert!(matches!(
            ldba.jump(1, "e0"),
            Err(LdbaError::NoSuchJump { state: 1, .. })
        ));
        // Eps elements follow guard edges in the element id space.
        assert_eq!(ldba.jump(0, "e0").unwrap().1, ldba.edges.len());
    }

    #[test]
    fn eps_requires_nondet_source() {
        let text = "\
ldba v1
aps: a
states: 2
initial: 0
accepting: 1
edge: 0 -> 1 : true
edge: 1 -> 1 : true
eps: 0 -> 1 : e0
";
        let err = parse_ldba(text, ParseOptions::default()).unwrap_err();
        assert!(matches!(err, LdbaError::EpsFromDeterministic { .. }));
    }

    #[test]
    fn serialize_round_trips() {
        for (text, partial) in [
            (FLATWORLD, true),
            (
                "ldba v1\naps: a\nstates: 2\ninitial: 0\naccepting: 0\nedge: 0 -> 0 : a\nedge: 0 -> 1 : !a\nedge: 1 -> 0 : a\nedge: 1 -> 1 : !a\n",
                false,
            ),
        ] {
            let first = parse_ldba(text, ParseOptions { allow_partial: partial }).unwrap();
            let printed = first.serialize();
            let second = parse_ldba(&printed, ParseOptions::default()).unwrap();
            assert!(first.structurally_equal(&second), "round trip failed:\n{printed}");
        }
    }
}
