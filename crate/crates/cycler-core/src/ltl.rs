//! LTL formula trees, parsing, and evaluation.
//!
//! Formulas are built from atomic propositions, the constants `true`/`false`,
//! the connectives `!`, `&`, `|`, `->`, and the temporal operators `X`, `G`,
//! `F`, `U`. Three evaluators are provided:
//!
//! * [`bool_eval`] — Boolean truth of a temporal-free guard against a letter
//!   (a set of propositions).
//! * [`qs_eval_state`] — quantitative (robustness) value of a temporal-free
//!   guard at a single state.
//! * [`qs_eval`] — quantitative value of a full LTL formula over a finite
//!   trace of robustness vectors.
//!
//! The atom convention is `robustness(x) = f_x(s) - c_x`, so an atom is true
//! exactly when its robustness is non-negative. Conjunction is `min`,
//! disjunction is `max`, negation flips the sign, and implication is
//! `max(-lhs, rhs)`. `G`/`F`/`U` quantify over suffixes of the trace; the
//! `U` witness requires its left operand on every window strictly before the
//! split point (an empty window is vacuously `rho_max`).

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;

/// Reserved words that may not be used as proposition names.
pub const KEYWORDS: &[&str] = &["true", "false", "X", "G", "F", "U"];

/// An LTL formula tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Globally(Box<Formula>),
    Eventually(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// True if the formula contains no temporal operator.
    pub fn is_temporal_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_temporal_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.is_temporal_free() && b.is_temporal_free()
            }
            Formula::Next(_) | Formula::Globally(_) | Formula::Eventually(_) | Formula::Until(_, _) => false,
        }
    }

    /// Collects the atom names appearing in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(name) => {
                out.insert(name.clone());
            }
            Formula::Not(f) | Formula::Next(f) | Formula::Globally(f) | Formula::Eventually(f) => {
                f.collect_atoms(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(_, _) => 1,
            Formula::Or(_, _) => 2,
            Formula::And(_, _) => 3,
            Formula::Until(_, _) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let prec = self.precedence();
        let needs_paren = prec < parent;
        if needs_paren {
            write!(f, "(")?;
        }
        match self {
            Formula::True => write!(f, "true")?,
            Formula::False => write!(f, "false")?,
            Formula::Atom(name) => write!(f, "{name}")?,
            Formula::Not(inner) => {
                write!(f, "!")?;
                inner.fmt_prec(f, 5)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " & ")?;
                // Left-associative: force parens on a right child of equal precedence.
                b.fmt_prec(f, prec + 1)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, prec)?;
                write!(f, " | ")?;
                b.fmt_prec(f, prec + 1)?;
            }
            Formula::Implies(a, b) => {
                // Right-associative.
                a.fmt_prec(f, prec + 1)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, prec)?;
            }
            Formula::Until(a, b) => {
                a.fmt_prec(f, prec + 1)?;
                write!(f, " U ")?;
                b.fmt_prec(f, prec)?;
            }
            Formula::Next(inner) => {
                write!(f, "X(")?;
                inner.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Formula::Globally(inner) => {
                write!(f, "G(")?;
                inner.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
            Formula::Eventually(inner) => {
                write!(f, "F(")?;
                inner.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if needs_paren {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Per-state robustness values, one per atomic proposition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RobustnessVector {
    values: BTreeMap<String, f64>,
}

impl RobustnessVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, f64)>>(pairs: I) -> Self {
        Self {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn set(&mut self, ap: &str, value: f64) {
        self.values.insert(ap.to_owned(), value);
    }

    pub fn get(&self, ap: &str) -> Option<f64> {
        self.values.get(ap).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Quantitative-semantics configuration: the robustness range and the
/// per-proposition thresholds `c_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QsConfig {
    pub rho_max: f64,
    pub rho_min: f64,
    thresholds: BTreeMap<String, f64>,
}

impl QsConfig {
    /// A configuration with the given range and all thresholds at zero.
    pub fn new(rho_min: f64, rho_max: f64) -> Result<Self, EvalError> {
        if !(rho_min < rho_max) {
            return Err(EvalError::BadRange { rho_min, rho_max });
        }
        Ok(Self {
            rho_max,
            rho_min,
            thresholds: BTreeMap::new(),
        })
    }

    pub fn with_threshold(mut self, ap: &str, c: f64) -> Result<Self, EvalError> {
        if c < self.rho_min || c > self.rho_max {
            return Err(EvalError::ThresholdOutOfRange {
                ap: ap.to_owned(),
                c,
            });
        }
        self.thresholds.insert(ap.to_owned(), c);
        Ok(self)
    }

    /// Threshold for `ap`; propositions without an explicit entry use 0.
    pub fn threshold(&self, ap: &str) -> f64 {
        self.thresholds.get(ap).copied().unwrap_or(0.0)
    }

    pub fn range(&self) -> f64 {
        self.rho_max - self.rho_min
    }
}

/// Errors from formula evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// A temporal operator appeared where only a state guard is allowed.
    TemporalOperator,
    /// `X` was applied at the final trace position.
    NextAtTraceEnd,
    /// The trace is empty.
    EmptyTrace,
    /// A robustness vector is missing a proposition the formula refers to.
    MissingProposition(String),
    /// `rho_min < rho_max` violated.
    BadRange { rho_min: f64, rho_max: f64 },
    /// A threshold lies outside `[rho_min, rho_max]`.
    ThresholdOutOfRange { ap: String, c: f64 },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::TemporalOperator => {
                write!(f, "temporal operator not allowed in a state guard")
            }
            EvalError::NextAtTraceEnd => write!(f, "X applied at the final trace position"),
            EvalError::EmptyTrace => write!(f, "trace must contain at least one state"),
            EvalError::MissingProposition(ap) => {
                write!(f, "robustness vector has no value for proposition '{ap}'")
            }
            EvalError::BadRange { rho_min, rho_max } => {
                write!(f, "invalid robustness range: rho_min {rho_min} >= rho_max {rho_max}")
            }
            EvalError::ThresholdOutOfRange { ap, c } => {
                write!(f, "threshold {c} for '{ap}' outside the robustness range")
            }
        }
    }
}

/// Boolean evaluation of a temporal-free guard against a letter.
pub fn bool_eval(guard: &Formula, letter: &BTreeSet<String>) -> Result<bool, EvalError> {
    match guard {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Atom(name) => Ok(letter.contains(name)),
        Formula::Not(f) => Ok(!bool_eval(f, letter)?),
        Formula::And(a, b) => Ok(bool_eval(a, letter)? && bool_eval(b, letter)?),
        Formula::Or(a, b) => Ok(bool_eval(a, letter)? || bool_eval(b, letter)?),
        Formula::Implies(a, b) => Ok(!bool_eval(a, letter)? || bool_eval(b, letter)?),
        Formula::Next(_) | Formula::Globally(_) | Formula::Eventually(_) | Formula::Until(_, _) => {
            Err(EvalError::TemporalOperator)
        }
    }
}

/// Robustness of a temporal-free guard at a single state.
///
/// Atoms evaluate to `f_x(s) - c_x`: positive iff the proposition holds.
pub fn qs_eval_state(guard: &Formula, rv: &RobustnessVector, cfg: &QsConfig) -> Result<f64, EvalError> {
    match guard {
        Formula::True => Ok(cfg.rho_max),
        Formula::False => Ok(-cfg.rho_max),
        Formula::Atom(name) => rv
            .get(name)
            .map(|v| v - cfg.threshold(name))
            .ok_or_else(|| EvalError::MissingProposition(name.clone())),
        Formula::Not(f) => Ok(-qs_eval_state(f, rv, cfg)?),
        Formula::And(a, b) => Ok(f64::min(qs_eval_state(a, rv, cfg)?, qs_eval_state(b, rv, cfg)?)),
        Formula::Or(a, b) => Ok(f64::max(qs_eval_state(a, rv, cfg)?, qs_eval_state(b, rv, cfg)?)),
        Formula::Implies(a, b) => Ok(f64::max(
            -qs_eval_state(a, rv, cfg)?,
            qs_eval_state(b, rv, cfg)?,
        )),
        Formula::Next(_) | Formula::Globally(_) | Formula::Eventually(_) | Formula::Until(_, _) => {
            Err(EvalError::TemporalOperator)
        }
    }
}

/// Quantitative evaluation of a formula over a finite trace.
pub fn qs_eval(formula: &Formula, trace: &[RobustnessVector], cfg: &QsConfig) -> Result<f64, EvalError> {
    if trace.is_empty() {
        return Err(EvalError::EmptyTrace);
    }
    qs_window(formula, trace, 0, trace.len(), cfg)
}

/// Evaluates `formula` on the window `trace[lo..hi]` (non-empty).
fn qs_window(
    formula: &Formula,
    trace: &[RobustnessVector],
    lo: usize,
    hi: usize,
    cfg: &QsConfig,
) -> Result<f64, EvalError> {
    debug_assert!(lo < hi && hi <= trace.len());
    match formula {
        Formula::True => Ok(cfg.rho_max),
        Formula::False => Ok(-cfg.rho_max),
        Formula::Atom(name) => trace[lo]
            .get(name)
            .map(|v| v - cfg.threshold(name))
            .ok_or_else(|| EvalError::MissingProposition(name.clone())),
        Formula::Not(f) => Ok(-qs_window(f, trace, lo, hi, cfg)?),
        Formula::And(a, b) => Ok(f64::min(
            qs_window(a, trace, lo, hi, cfg)?,
            qs_window(b, trace, lo, hi, cfg)?,
        )),
        Formula::Or(a, b) => Ok(f64::max(
            qs_window(a, trace, lo, hi, cfg)?,
            qs_window(b, trace, lo, hi, cfg)?,
        )),
        Formula::Implies(a, b) => Ok(f64::max(
            -qs_window(a, trace, lo, hi, cfg)?,
            qs_window(b, trace, lo, hi, cfg)?,
        )),
        Formula::Next(f) => {
            if lo + 1 >= hi {
                Err(EvalError::NextAtTraceEnd)
            } else {
                qs_window(f, trace, lo + 1, hi, cfg)
            }
        }
        Formula::Globally(f) => {
            let mut best = f64::INFINITY;
            for i in lo..hi {
                best = f64::min(best, qs_window(f, trace, i, hi, cfg)?);
            }
            Ok(best)
        }
        Formula::Eventually(f) => {
            let mut best = f64::NEG_INFINITY;
            for i in lo..hi {
                best = f64::max(best, qs_window(f, trace, i, hi, cfg)?);
            }
            Ok(best)
        }
        Formula::Until(a, b) => {
            let mut best = f64::NEG_INFINITY;
            for i in lo..hi {
                let rhs = qs_window(b, trace, i, hi, cfg)?;
                // Left operand on every window strictly before the split point;
                // an empty range of windows is a vacuous conjunction.
                let mut lhs = cfg.rho_max;
                for j in lo..i {
                    lhs = f64::min(lhs, qs_window(a, trace, j, i, cfg)?);
                }
                best = f64::max(best, f64::min(rhs, lhs));
            }
            Ok(best)
        }
    }
}

/// A syntax or scoping error from [`parse_ltl`], with a byte offset into the
/// input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Expected(String),
    UnknownAtom(String),
    Trailing,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Expected(what) => {
                write!(f, "syntax error at offset {}: expected {}", self.offset, what)
            }
            ParseErrorKind::UnknownAtom(name) => {
                write!(f, "unknown atom '{}' at offset {}", name, self.offset)
            }
            ParseErrorKind::Trailing => {
                write!(f, "syntax error at offset {}: trailing input", self.offset)
            }
        }
    }
}

/// Parses a formula.
///
/// Grammar: atoms, `true`, `false`, `!phi`, `phi & phi`, `phi | phi`,
/// `phi -> phi`, `X(phi)`, `G(phi)`, `F(phi)`, `phi U phi`, parentheses.
/// Precedence from loosest to tightest: `->` (right-associative), `|`, `&`,
/// `U` (right-associative), unary. `X`/`G`/`F` require parentheses around
/// their argument. Every atom must be in `ap_set`.
pub fn parse_ltl(text: &str, ap_set: &[String]) -> Result<Formula, ParseError> {
    let mut parser = FormulaParser {
        input: text,
        pos: 0,
        aps: ap_set,
    };
    let formula = parser.parse_implies()?;
    parser.skip_ws();
    if parser.pos < parser.input.len() {
        return Err(ParseError {
            offset: parser.pos,
            kind: ParseErrorKind::Trailing,
        });
    }
    Ok(formula)
}

struct FormulaParser<'a> {
    input: &'a str,
    pos: usize,
    aps: &'a [String],
}

impl<'a> FormulaParser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.input[self.pos..].chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.input[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// Consumes an identifier-like token only if the full word matches.
    fn eat_word(&mut self, word: &str) -> bool {
        self.skip_ws();
        let rest = &self.input[self.pos..];
        if rest.starts_with(word) {
            let next = rest[word.len()..].chars().next();
            if !matches!(next, Some(c) if c.is_alphanumeric() || c == '_') {
                self.pos += word.len();
                return true;
            }
        }
        false
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError {
            offset: self.pos,
            kind: ParseErrorKind::Expected(what.to_owned()),
        }
    }

    fn parse_implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_or()?;
        if self.eat("->") {
            let rhs = self.parse_implies()?;
            Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        loop {
            self.skip_ws();
            // Don't confuse `|` with a hypothetical `||`; the grammar has only `|`.
            if self.eat("|") {
                let rhs = self.parse_and()?;
                lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_until()?;
        loop {
            self.skip_ws();
            if self.peek_char() == Some('-') {
                // Leave `->` for the caller.
                return Ok(lhs);
            }
            if self.eat("&") {
                let rhs = self.parse_until()?;
                lhs = Formula::And(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn parse_until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_unary()?;
        if self.eat_word("U") {
            let rhs = self.parse_until()?;
            Ok(Formula::Until(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        if self.eat("!") {
            let inner = self.parse_unary()?;
            return Ok(Formula::Not(Box::new(inner)));
        }
        for (word, build) in [
            ("X", Formula::Next as fn(Box<Formula>) -> Formula),
            ("G", Formula::Globally as fn(Box<Formula>) -> Formula),
            ("F", Formula::Eventually as fn(Box<Formula>) -> Formula),
        ] {
            if self.eat_word(word) {
                self.skip_ws();
                if !self.eat("(") {
                    return Err(self.expected("'(' after temporal operator"));
                }
                let inner = self.parse_implies()?;
                self.skip_ws();
                if !self.eat(")") {
                    return Err(self.expected("')'"));
                }
                return Ok(build(Box::new(inner)));
            }
        }
        if self.eat("(") {
            let inner = self.parse_implies()?;
            self.skip_ws();
            if !self.eat(")") {
                return Err(self.expected("')'"));
            }
            return Ok(inner);
        }
        if self.eat_word("true") {
            return Ok(Formula::True);
        }
        if self.eat_word("false") {
            return Ok(Formula::False);
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.input[start..];
        let mut len = 0;
        for c in rest.chars() {
            let ok = if len == 0 {
                c.is_alphabetic() || c == '_'
            } else {
                c.is_alphanumeric() || c == '_'
            };
            if ok {
                len += c.len_utf8();
            } else {
                break;
            }
        }
        if len == 0 {
            return Err(self.expected("formula"));
        }
        let name = &rest[..len];
        if KEYWORDS.contains(&name) {
            return Err(self.expected("formula"));
        }
        if !self.aps.iter().any(|ap| ap == name) {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::UnknownAtom(name.to_owned()),
            });
        }
        self.pos = start + len;
        Ok(Formula::Atom(name.to_owned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn aps(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn letter(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn rv(pairs: &[(&str, f64)]) -> RobustnessVector {
        RobustnessVector::from_pairs(pairs.iter().map(|(k, v)| (k.to_string(), *v)))
    }

    fn cfg() -> QsConfig {
        QsConfig::new(-10.0, 10.0).unwrap()
    }

    #[test]
    fn parses_oscillation_task() {
        let f = parse_ltl("G (F(r) & F(g) & F(y)) & G(!b)", &aps(&["r", "g", "b", "y"])).unwrap();
        match &f {
            Formula::And(lhs, rhs) => {
                assert!(matches!(**lhs, Formula::Globally(_)));
                assert!(matches!(**rhs, Formula::Globally(_)));
            }
            other => panic!("expected top-level conjunction, got {other:?}"),
        }
    }

    #[test]
    fn parses_constants() {
        assert_eq!(parse_ltl("true", &[]).unwrap(), Formula::True);
        assert_eq!(parse_ltl("false", &[]).unwrap(), Formula::False);
    }

    #[test]
    fn reports_syntax_error_offset() {
        let err = parse_ltl("G(", &aps(&["a"])).unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(matches!(err.kind, ParseErrorKind::Expected(_)));
    }

    #[test]
    fn reports_unknown_atom() {
        let err = parse_ltl("a & bogus", &aps(&["a"])).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownAtom("bogus".to_string()));
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn precedence_binds_as_documented() {
        let ap = aps(&["a", "b", "c"]);
        // U tighter than &, & tighter than |, | tighter than ->.
        let f = parse_ltl("a U b & c", &ap).unwrap();
        assert!(matches!(f, Formula::And(_, _)));
        let f = parse_ltl("a & b | c", &ap).unwrap();
        assert!(matches!(f, Formula::Or(_, _)));
        let f = parse_ltl("a | b -> c", &ap).unwrap();
        assert!(matches!(f, Formula::Implies(_, _)));
        // -> and U right-associative.
        let f = parse_ltl("a -> b -> c", &ap).unwrap();
        if let Formula::Implies(_, rhs) = &f {
            assert!(matches!(**rhs, Formula::Implies(_, _)));
        } else {
            panic!("expected implies");
        }
        let f = parse_ltl("a U b U c", &ap).unwrap();
        if let Formula::Until(_, rhs) = &f {
            assert!(matches!(**rhs, Formula::Until(_, _)));
        } else {
            panic!("expected until");
        }
    }

    #[test]
    fn display_round_trips() {
        let ap = aps(&["r", "g", "b", "y"]);
        for text in [
            "G (F(r) & F(g) & F(y)) & G(!b)",
            "r U (g & !b)",
            "(r | g) -> X(y)",
            "!(r & g) | false",
            "r U g U y",
            "F(r -> g) & true",
        ] {
            let f = parse_ltl(text, &ap).unwrap();
            let printed = f.to_string();
            let reparsed = parse_ltl(&printed, &ap).unwrap();
            assert_eq!(f, reparsed, "round trip failed for {text} -> {printed}");
        }
    }

    #[test]
    fn bool_eval_truth_table() {
        let ap = aps(&["r", "b"]);
        let g = parse_ltl("r & !b", &ap).unwrap();
        assert!(bool_eval(&g, &letter(&["r"])).unwrap());
        assert!(!bool_eval(&g, &letter(&["r", "b"])).unwrap());
        assert!(!bool_eval(&Formula::False, &letter(&["r"])).unwrap());
        assert!(bool_eval(&Formula::True, &letter(&[])).unwrap());
    }

    #[test]
    fn bool_eval_rejects_temporal() {
        let g = parse_ltl("F(r)", &aps(&["r"])).unwrap();
        assert_eq!(bool_eval(&g, &letter(&[])), Err(EvalError::TemporalOperator));
    }

    #[test]
    fn state_robustness_examples() {
        let c = cfg();
        let g = parse_ltl("r", &aps(&["r"])).unwrap();
        assert_eq!(qs_eval_state(&g, &rv(&[("r", -2.0)]), &c).unwrap(), -2.0);

        let g = parse_ltl("r & !b", &aps(&["r", "b"])).unwrap();
        assert_eq!(
            qs_eval_state(&g, &rv(&[("r", 1.0), ("b", -3.0)]), &c).unwrap(),
            1.0
        );

        assert_eq!(qs_eval_state(&Formula::True, &rv(&[]), &c).unwrap(), c.rho_max);
    }

    #[test]
    fn trace_eventually_and_globally() {
        let c = cfg();
        let ap = aps(&["a"]);
        let trace = vec![rv(&[("a", -1.0)]), rv(&[("a", 2.0)]), rv(&[("a", 0.5)])];

        // Independent suffix enumeration for F and G.
        let atom_values: Vec<f64> = trace.iter().map(|v| v.get("a").unwrap()).collect();
        let f_expected = atom_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let g_expected = atom_values.iter().cloned().fold(f64::INFINITY, f64::min);

        let f = parse_ltl("F(a)", &ap).unwrap();
        assert_eq!(qs_eval(&f, &trace, &c).unwrap(), f_expected);
        assert_eq!(qs_eval(&f, &trace, &c).unwrap(), 2.0);

        let g = parse_ltl("G(a)", &ap).unwrap();
        assert_eq!(qs_eval(&g, &trace, &c).unwrap(), g_expected);
        assert_eq!(qs_eval(&g, &trace, &c).unwrap(), -1.0);
    }

    #[test]
    fn trace_constants_hit_rho_max() {
        let c = cfg();
        let trace = vec![rv(&[("a", 0.0)])];
        assert_eq!(qs_eval(&Formula::True, &trace, &c).unwrap(), c.rho_max);
        assert_eq!(qs_eval(&Formula::False, &trace, &c).unwrap(), -c.rho_max);
    }

    #[test]
    fn next_at_end_is_domain_error() {
        let c = cfg();
        let ap = aps(&["a"]);
        let f = parse_ltl("X(a)", &ap).unwrap();
        let trace = vec![rv(&[("a", 1.0)])];
        assert_eq!(qs_eval(&f, &trace, &c), Err(EvalError::NextAtTraceEnd));
        let trace2 = vec![rv(&[("a", 1.0)]), rv(&[("a", 3.0)])];
        assert_eq!(qs_eval(&f, &trace2, &c).unwrap(), 3.0);
    }

    #[test]
    fn until_single_state_equals_rhs() {
        // With one state the prefix side is vacuous, so a U b == value of b now.
        let c = cfg();
        let ap = aps(&["a", "b"]);
        let f = parse_ltl("a U b", &ap).unwrap();
        let trace = vec![rv(&[("a", -5.0), ("b", 1.5)])];
        assert_eq!(qs_eval(&f, &trace, &c).unwrap(), 1.5);
    }

    #[test]
    fn empty_trace_rejected() {
        let c = cfg();
        assert_eq!(qs_eval(&Formula::True, &[], &c), Err(EvalError::EmptyTrace));
    }
}
