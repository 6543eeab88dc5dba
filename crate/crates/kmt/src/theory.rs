//! The client-theory contract and the engine that theories call back into.

use crate::error::{KmtError, Result};
use crate::kernel::{self, nnf, Prim, Sym, Term, TermId};
use crate::normalizer::NormalForm;
use crate::oracle::{Entry, State};
use parking_lot::RwLock;
use rand::RngCore;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

/// A literal: a primitive test and its polarity.
pub type Lit = (Prim, bool);

/// Argument of an atom as seen by theory parse hooks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomArg {
    Num(u64),
    Ident(String),
    Term(TermId),
    Call(String, Vec<AtomArg>),
}

/// Shape of an atom before a theory interprets it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Bare(String),
    Call(String, Vec<AtomArg>),
    Infix { lhs: String, op: String, rhs: AtomArg },
    Index { map: String, key: AtomArg, op: String, rhs: AtomArg },
}

impl Atom {
    pub fn describe(&self) -> String {
        match self {
            Atom::Bare(s) => s.clone(),
            Atom::Call(h, args) => format!("{h}({} args)", args.len()),
            Atom::Infix { lhs, op, .. } => format!("{lhs}{op}.."),
            Atom::Index { map, op, .. } => format!("{map}[..]{op}.."),
        }
    }
}

/// Services the parser offers to theory parse hooks.
pub trait AtomCtx {
    /// Interprets an atom argument as a test of the active theory.
    fn arg_test(&self, arg: &AtomArg) -> Result<TermId>;
}

/// Concrete semantics of a theory, used by the oracle and by witness replay.
pub trait StateModel: Send + Sync {
    /// Truth of a primitive test on a nonempty trace. `eval` evaluates arbitrary
    /// tests of the combined theory on a trace.
    fn pred(&self, alpha: &Prim, trace: &[Entry], eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool;
    fn act(&self, pi: &Prim, s: &State) -> State;
    /// Initial states relevant to the given primitives, with numeric values up to `bound`.
    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, bound: u64) -> Result<Vec<State>>;
    /// A state satisfying a satisfiable conjunction of state literals.
    fn witness(&self, lits: &[Lit]) -> Option<State>;
}

/// Primitive tests and actions used to generate random terms.
#[derive(Clone, Debug, Default)]
pub struct Samples {
    pub tests: Vec<TermId>,
    pub actions: Vec<TermId>,
}

type AxiomGen = Box<dyn Fn(&mut dyn RngCore) -> (TermId, TermId) + Send + Sync>;

/// A theory axiom schema; `instance` draws a random instantiation `(lhs, rhs)`.
pub struct AxiomSchema {
    pub name: String,
    pub instance: AxiomGen,
}

impl AxiomSchema {
    pub fn new(
        name: &str,
        instance: impl Fn(&mut dyn RngCore) -> (TermId, TermId) + Send + Sync + 'static,
    ) -> AxiomSchema {
        AxiomSchema { name: name.to_string(), instance: Box::new(instance) }
    }
}

/// A client theory.
pub trait Theory: Send + Sync {
    fn name(&self) -> String;
    fn owns_test(&self, p: &Prim) -> bool;
    fn owns_action(&self, p: &Prim) -> bool;
    /// Highest universe level of this theory's primitive tests.
    fn max_level(&self) -> u32;

    fn parse_atom(&self, atom: &Atom, ctx: &dyn AtomCtx) -> Result<TermId>;

    /// Theory subterms of a primitive test; the engine adds 0, 1 and the test itself.
    fn sub(&self, eng: &Engine, alpha: &Prim) -> Vec<TermId>;

    /// Tests `a_i` with `pi;alpha == sum_i a_i;pi`.
    fn push_back(&self, eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>>;

    /// Optional closed-form pushback of `alpha` through `body*`.
    fn push_back_star(&self, _eng: &Engine, _body: TermId, _alpha: &Prim) -> Option<Result<NormalForm>> {
        None
    }

    /// Satisfiability of a conjunction of literals over this theory's primitives.
    fn sat(&self, eng: &Engine, lits: &[Lit]) -> bool;

    /// True when some primitive's truth depends on the trace history.
    fn is_temporal(&self) -> bool {
        false
    }

    /// For history-dependent primitives: the value on a single-entry trace,
    /// computed from other tests through `eval`. `None` for state predicates.
    fn start_value(&self, _eng: &Engine, _alpha: &Prim, _eval: &mut dyn FnMut(TermId) -> bool) -> Option<bool> {
        None
    }

    /// State variables a primitive reads or writes.
    fn vars(&self, p: &Prim) -> Vec<Sym>;

    /// Actions covering every possible effect on `tests`; used to build trace prefixes.
    fn representative_actions(&self, _tests: &BTreeSet<Prim>) -> Vec<Prim> {
        Vec::new()
    }

    fn model(&self) -> Option<&dyn StateModel>;

    fn samples(&self) -> Samples;

    fn axioms(&self) -> Vec<AxiomSchema>;
}

/// Counters for the normalization measure checks.
#[derive(Default)]
pub struct MeasureStats {
    pub checks: AtomicU64,
    pub violations: AtomicU64,
    pub strict_checks: AtomicU64,
    pub strict_violations: AtomicU64,
}

impl MeasureStats {
    pub fn snapshot(&self) -> (u64, u64, u64, u64) {
        (
            self.checks.load(AtomicOrdering::Relaxed),
            self.violations.load(AtomicOrdering::Relaxed),
            self.strict_checks.load(AtomicOrdering::Relaxed),
            self.strict_violations.load(AtomicOrdering::Relaxed),
        )
    }
}

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Host engine for one theory: normalization, subterms, satisfiability and
/// their caches. Theories receive it to recurse into the combined theory.
pub struct Engine {
    theory: Arc<dyn Theory>,
    fuel_limit: AtomicU64,
    fuel_used: AtomicU64,
    check_measure: AtomicBool,
    pub stats: MeasureStats,
    pub(crate) sub_cache: RwLock<HashMap<TermId, Arc<BTreeSet<TermId>>>>,
    pub(crate) pb_cache: RwLock<HashMap<(TermId, TermId), NormalForm>>,
    pub(crate) star_cache: RwLock<HashMap<NormalForm, NormalForm>>,
    /// Star pushbacks `(thread, star, test)` currently being computed.
    pub(crate) star_active: parking_lot::Mutex<HashSet<(std::thread::ThreadId, TermId, TermId)>>,
    pub(crate) prim_pb_cache: RwLock<HashMap<(Prim, Prim), Vec<TermId>>>,
    sat_cache: RwLock<HashMap<TermId, bool>>,
    pub(crate) temporal_cache: RwLock<HashMap<Vec<Prim>, Arc<crate::automata::Realizable>>>,
}

impl Engine {
    pub fn new(theory: Arc<dyn Theory>) -> Engine {
        Engine {
            theory,
            fuel_limit: AtomicU64::new(DEFAULT_FUEL),
            fuel_used: AtomicU64::new(0),
            check_measure: AtomicBool::new(cfg!(debug_assertions)),
            stats: MeasureStats::default(),
            sub_cache: Default::default(),
            pb_cache: Default::default(),
            star_cache: Default::default(),
            star_active: Default::default(),
            prim_pb_cache: Default::default(),
            sat_cache: Default::default(),
            temporal_cache: Default::default(),
        }
    }

    pub fn theory(&self) -> &dyn Theory {
        &*self.theory
    }

    pub fn theory_arc(&self) -> Arc<dyn Theory> {
        self.theory.clone()
    }

    pub fn set_fuel(&self, fuel: u64) {
        self.fuel_limit.store(fuel, AtomicOrdering::Relaxed);
    }

    pub fn fuel(&self) -> u64 {
        self.fuel_limit.load(AtomicOrdering::Relaxed)
    }

    /// Starts a fresh fuel budget for a top-level request.
    pub fn reset_fuel(&self) {
        self.fuel_used.store(0, AtomicOrdering::Relaxed);
    }

    pub(crate) fn fuel_used(&self) -> u64 {
        self.fuel_used.load(AtomicOrdering::Relaxed)
    }

    pub(crate) fn burn(&self) -> Result<()> {
        let used = self.fuel_used.fetch_add(1, AtomicOrdering::Relaxed) + 1;
        let limit = self.fuel();
        if used > limit {
            return Err(KmtError::FuelExhausted(limit));
        }
        if crate::normalizer::star_deadline().is_some_and(|d| used > d) {
            return Err(KmtError::StarEffort);
        }
        Ok(())
    }

    pub fn set_check_measure(&self, on: bool) {
        self.check_measure.store(on, AtomicOrdering::Relaxed);
    }

    pub fn checking_measure(&self) -> bool {
        self.check_measure.load(AtomicOrdering::Relaxed)
    }

    /// Theory pushback of a primitive test through a primitive action, memoized.
    pub fn prim_push_back(&self, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        let key = (pi.clone(), alpha.clone());
        if let Some(r) = self.prim_pb_cache.read().get(&key) {
            return Ok(r.clone());
        }
        let r = self.theory.push_back(self, pi, alpha)?;
        self.prim_pb_cache.write().insert(key, r.clone());
        Ok(r)
    }

    /// The single test `b` with `pi;a == b;pi` for an arbitrary test `a`.
    /// Works literal by literal and never prunes, so it is safe to call while
    /// deciding satisfiability.
    pub fn push_test(&self, pi: &Prim, a: TermId) -> Result<TermId> {
        self.burn()?;
        Ok(match a.term() {
            Term::Zero | Term::One => a,
            Term::Test(p) => kernel::plus_all(self.prim_push_back(pi, p)?),
            Term::Not(b) => kernel::neg(self.push_test(pi, *b)?),
            Term::Plus(xs) => {
                let mut out = Vec::with_capacity(xs.len());
                for x in xs {
                    out.push(self.push_test(pi, *x)?);
                }
                kernel::plus_all(out)
            }
            Term::Seq(x, y) => {
                let x = self.push_test(pi, *x)?;
                kernel::seq(x, self.push_test(pi, *y)?)
            }
            Term::Star(_) | Term::Act(..) => {
                return Err(KmtError::Theory(format!("pushback of non-test {a}")));
            }
        })
    }

    /// Satisfiability of an arbitrary test of the combined theory.
    pub fn satisfiable(&self, a: TermId) -> bool {
        if a.is_zero() {
            return false;
        }
        if a.is_one() {
            return true;
        }
        if let Some(r) = self.sat_cache.read().get(&a) {
            return *r;
        }
        let mut lits = Vec::new();
        let r = self.sat_search(vec![nnf(a)], &mut lits);
        self.sat_cache.write().insert(a, r);
        r
    }

    fn sat_search(&self, mut todo: Vec<TermId>, lits: &mut Vec<Lit>) -> bool {
        let mark = lits.len();
        while let Some(t) = todo.pop() {
            match t.term() {
                Term::Zero => {
                    lits.truncate(mark);
                    return false;
                }
                Term::One => {}
                Term::Test(p) => {
                    if !push_lit(lits, p, true) {
                        lits.truncate(mark);
                        return false;
                    }
                }
                Term::Not(b) => match b.term() {
                    Term::Test(p) => {
                        if !push_lit(lits, p, false) {
                            lits.truncate(mark);
                            return false;
                        }
                    }
                    _ => todo.push(nnf(t)),
                },
                Term::Seq(x, y) => {
                    todo.push(*x);
                    todo.push(*y);
                }
                Term::Plus(xs) => {
                    let found = xs.iter().any(|x| {
                        let mut branch = todo.clone();
                        branch.push(*x);
                        self.sat_search(branch, lits)
                    });
                    lits.truncate(mark);
                    return found;
                }
                Term::Star(_) | Term::Act(..) => unreachable!("action inside a test"),
            }
        }
        let r = self.theory.sat(self, lits);
        lits.truncate(mark);
        r
    }

    /// True when `a` holds on every trace.
    pub fn valid(&self, a: TermId) -> bool {
        !self.satisfiable(kernel::neg(a))
    }

    /// Drops every cache; theories whose universes grew after parsing call this.
    pub fn clear_caches(&self) {
        self.sub_cache.write().clear();
        self.pb_cache.write().clear();
        self.star_cache.write().clear();
        self.prim_pb_cache.write().clear();
        self.sat_cache.write().clear();
        self.temporal_cache.write().clear();
    }
}

/// Adds a literal unless it contradicts one already present; duplicates are skipped.
fn push_lit(lits: &mut Vec<Lit>, p: &Prim, pol: bool) -> bool {
    for (q, qp) in lits.iter() {
        if q == p {
            return *qp == pol;
        }
    }
    lits.push((p.clone(), pol));
    true
}

/// Splits literals into those owned by `theory` and the rest.
pub fn partition_lits(lits: &[Lit], owns: impl Fn(&Prim) -> bool) -> (Vec<Lit>, Vec<Lit>) {
    lits.iter().cloned().partition(|(p, _)| owns(p))
}

/// A named, registered theory.
#[derive(Clone)]
pub struct TheoryHandle {
    pub name: String,
    pub theory: Arc<dyn Theory>,
}

/// Registry of theories addressable by name.
#[derive(Default)]
pub struct Registry {
    entries: Vec<TheoryHandle>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn register_theory(&mut self, name: &str, theory: Arc<dyn Theory>) -> Result<TheoryHandle> {
        if self.entries.iter().any(|h| h.name == name) {
            return Err(KmtError::DuplicateTheory(name.to_string()));
        }
        let h = TheoryHandle { name: name.to_string(), theory };
        self.entries.push(h.clone());
        Ok(h)
    }

    pub fn get(&self, name: &str) -> Option<TheoryHandle> {
        self.entries.iter().find(|h| h.name == name).cloned()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|h| h.name.clone()).collect()
    }
}
