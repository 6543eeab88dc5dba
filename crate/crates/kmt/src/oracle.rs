//! Brute-force trace semantics. Used only to cross-check the decision procedure.
//!
//! A term maps an input trace to the set of traces it can produce. Since each
//! action is deterministic, an output trace is identified by the word of
//! actions it appends, which is what [`Oracle::denote_words`] returns.
//! Traces longer than the budget are discarded on both sides of a comparison.

use crate::error::{KmtError, Result};
use crate::kernel::{self, Prim, Sym, Term, TermId};
use crate::theory::{StateModel, Theory};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Bool(bool),
    Nat(u64),
    Inf,
    Set(BTreeSet<u64>),
    Map(BTreeMap<u64, u64>),
    Sym(Sym),
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Bool(b) => write!(f, "{b}"),
            Val::Nat(n) => write!(f, "{n}"),
            Val::Inf => f.write_str("inf"),
            Val::Set(s) => {
                let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                write!(f, "{{{}}}", items.join(","))
            }
            Val::Map(m) => {
                let items: Vec<String> = m.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                write!(f, "[{}]", items.join(","))
            }
            Val::Sym(s) => f.write_str(s),
        }
    }
}

/// Variables absent from a state hold the owning theory's default value.
pub type State = BTreeMap<Sym, Val>;

pub fn show_state(s: &State) -> String {
    let items: Vec<String> = s.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", items.join(", "))
}

/// One log entry; only the first entry of a trace has no action.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entry {
    pub state: Arc<State>,
    pub action: Option<Prim>,
}

pub type Trace = Vec<Entry>;

pub fn show_trace(t: &[Entry]) -> String {
    let items: Vec<String> = t
        .iter()
        .map(|e| match &e.action {
            None => show_state(&e.state),
            Some(p) => format!("-{p}-> {}", show_state(&e.state)),
        })
        .collect();
    items.join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest numeric value used when enumerating initial states.
    pub states: u64,
    /// Longest trace, counted in entries.
    pub trace_len: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { states: 8, trace_len: 4 }
    }
}

/// A trace on which two terms differ: `word` extends `initial` under exactly one of them.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub initial: Trace,
    pub word: Vec<Prim>,
    pub in_left: bool,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words: Vec<String> = self.word.iter().map(|p| p.to_string()).collect();
        write!(
            f,
            "from {} the {} term produces [{}] and the other does not",
            show_trace(&self.initial),
            if self.in_left { "left" } else { "right" },
            words.join("; ")
        )
    }
}

pub struct Oracle<'a> {
    theory: &'a dyn Theory,
    model: &'a dyn StateModel,
    pub budget: Budget,
}

impl<'a> Oracle<'a> {
    pub fn new(theory: &'a dyn Theory, budget: Budget) -> Result<Oracle<'a>> {
        if budget.states == 0 || budget.trace_len == 0 {
            return Err(KmtError::Budget("state bound and trace length must be positive".into()));
        }
        let model = theory.model().ok_or_else(|| KmtError::NoStateModel(theory.name()))?;
        Ok(Oracle { theory, model, budget })
    }

    pub fn model(&self) -> &dyn StateModel {
        self.model
    }

    pub fn eval_test(&self, a: TermId, trace: &[Entry]) -> bool {
        match a.term() {
            Term::Zero => false,
            Term::One => true,
            Term::Test(p) => self.model.pred(p, trace, &|t, tr| self.eval_test(t, tr)),
            Term::Not(b) => !self.eval_test(*b, trace),
            Term::Plus(xs) => xs.iter().any(|x| self.eval_test(*x, trace)),
            Term::Seq(x, y) => self.eval_test(*x, trace) && self.eval_test(*y, trace),
            Term::Star(_) | Term::Act(..) => panic!("eval_test on an action"),
        }
    }

    pub fn step(&self, trace: &mut Trace, pi: &Prim) {
        let next = self.model.act(pi, &trace.last().expect("nonempty trace").state);
        trace.push(Entry { state: Arc::new(next), action: Some(pi.clone()) });
    }

    /// Action words appended by the traces in `[[p]](trace)`.
    pub fn denote_words(&self, p: TermId, trace: &Trace) -> BTreeSet<Vec<Prim>> {
        let mut t = trace.clone();
        self.den(p, &mut t)
    }

    /// `[[p]](trace)` as full traces.
    pub fn denote(&self, p: TermId, trace: &Trace) -> BTreeSet<Trace> {
        self.denote_words(p, trace)
            .into_iter()
            .map(|w| {
                let mut t = trace.clone();
                for pi in &w {
                    self.step(&mut t, pi);
                }
                t
            })
            .collect()
    }

    fn extend(&self, trace: &mut Trace, w: &[Prim]) -> usize {
        let mark = trace.len();
        for pi in w {
            self.step(trace, pi);
        }
        mark
    }

    fn den(&self, p: TermId, trace: &mut Trace) -> BTreeSet<Vec<Prim>> {
        let mut out = BTreeSet::new();
        match p.term() {
            Term::Zero => {}
            Term::One => {
                out.insert(Vec::new());
            }
            Term::Test(_) | Term::Not(_) => {
                if self.eval_test(p, trace) {
                    out.insert(Vec::new());
                }
            }
            Term::Act(pi, _) => {
                if trace.len() < self.budget.trace_len {
                    out.insert(vec![pi.clone()]);
                }
            }
            Term::Plus(xs) => {
                for x in xs {
                    out.extend(self.den(*x, trace));
                }
            }
            Term::Seq(a, b) => {
                if p.is_test() {
                    if self.eval_test(p, trace) {
                        out.insert(Vec::new());
                    }
                    return out;
                }
                for w in self.den(*a, trace) {
                    let mark = self.extend(trace, &w);
                    for v in self.den(*b, trace) {
                        let mut wv = w.clone();
                        wv.extend(v);
                        out.insert(wv);
                    }
                    trace.truncate(mark);
                }
            }
            Term::Star(a) => {
                out.insert(Vec::new());
                let mut frontier = vec![Vec::new()];
                while let Some(w) = frontier.pop() {
                    let mark = self.extend(trace, &w);
                    for v in self.den(*a, trace) {
                        if v.is_empty() {
                            continue;
                        }
                        let mut wv = w.clone();
                        wv.extend(v);
                        if out.insert(wv.clone()) {
                            frontier.push(wv);
                        }
                    }
                    trace.truncate(mark);
                }
            }
        }
        out
    }

    /// Initial traces used for bounded comparison of terms over the given primitives.
    pub fn initial_traces(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>) -> Result<Vec<Trace>> {
        let states = self.model.states(tests, actions, self.budget.states)?;
        let mut out: Vec<Trace> = states
            .into_iter()
            .map(|s| vec![Entry { state: Arc::new(s), action: None }])
            .collect();
        if self.theory.is_temporal() {
            let mut alphabet: BTreeSet<Prim> = actions.clone();
            alphabet.extend(self.theory.representative_actions(tests));
            let mut frontier = out.clone();
            // An initial trace may already be as long as the budget allows.
            for _ in 1..self.budget.trace_len {
                let mut next = Vec::new();
                for t in &frontier {
                    for pi in &alphabet {
                        let mut t2 = t.clone();
                        self.step(&mut t2, pi);
                        next.push(t2);
                    }
                }
                out.extend(next.iter().cloned());
                frontier = next;
            }
        }
        Ok(out)
    }

    /// Compares `p` and `q` on every initial trace within the budget.
    pub fn equiv_bounded(&self, p: TermId, q: TermId) -> Result<Option<Counterexample>> {
        let mut tests = BTreeSet::new();
        let mut actions = BTreeSet::new();
        for t in [p, q] {
            kernel::prim_tests(t, &mut tests);
            kernel::prim_actions(t, &mut actions);
        }
        let inits = self.initial_traces(&tests, &actions)?;
        if inits.is_empty() {
            return Err(KmtError::Budget("no initial traces within the oracle budget".into()));
        }
        for init in inits {
            let dp = self.denote_words(p, &init);
            let dq = self.denote_words(q, &init);
            if dp != dq {
                let (word, in_left) = match dp.symmetric_difference(&dq).next() {
                    Some(w) => (w.clone(), dp.contains(w)),
                    None => unreachable!(),
                };
                return Ok(Some(Counterexample { initial: init, word, in_left }));
            }
        }
        Ok(None)
    }

    /// True when `word` extends `initial` under `p`. Runs in time polynomial in
    /// the word length, so long witnesses can be replayed.
    pub fn accepts(&self, p: TermId, initial: &Trace, word: &[Prim]) -> bool {
        let mut full = initial.clone();
        for pi in word {
            self.step(&mut full, pi);
        }
        let base = initial.len();
        let m = Matcher { oracle: self, full: &full, base, word };
        m.ends(p, 0).contains(&word.len())
    }
}

struct Matcher<'o, 'a> {
    oracle: &'o Oracle<'a>,
    full: &'o [Entry],
    base: usize,
    word: &'o [Prim],
}

impl Matcher<'_, '_> {
    /// Word positions where a run of `p` started at position `i` can end.
    fn ends(&self, p: TermId, i: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if p.is_test() {
            if self.oracle.eval_test(p, &self.full[..self.base + i]) {
                out.insert(i);
            }
            return out;
        }
        match p.term() {
            Term::Act(pi, _) => {
                if self.word.get(i) == Some(pi) {
                    out.insert(i + 1);
                }
            }
            Term::Plus(xs) => {
                for x in xs {
                    out.extend(self.ends(*x, i));
                }
            }
            Term::Seq(a, b) => {
                for j in self.ends(*a, i) {
                    out.extend(self.ends(*b, j));
                }
            }
            Term::Star(a) => {
                out.insert(i);
                let mut todo = vec![i];
                while let Some(j) = todo.pop() {
                    for k in self.ends(*a, j) {
                        if out.insert(k) {
                            todo.push(k);
                        }
                    }
                }
            }
            _ => unreachable!("tests handled above"),
        }
        out
    }
}
