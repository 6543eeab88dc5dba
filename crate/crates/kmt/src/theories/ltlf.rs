//! Past-time temporal logic over finite traces, layered on any theory.
//!
//! Two primitives: `last(a)` holds when the previous entry satisfied `a`, and
//! `since(a,b)` holds when `b` held at some entry and `a` at every later one.
//! The remaining operators are derived. A temporal primitive's level is the
//! inner theory's top level plus its nesting depth, so every subterm sits
//! strictly lower in the well order.

use crate::automata;
use crate::error::{KmtError, Result};
use crate::kernel::{self, nnf, Arg, Prim, Sym, Term, TermId};
use crate::normalizer::NormalForm;
use crate::oracle::{Entry, State};
use crate::theory::{partition_lits, Atom, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use rand::Rng;
use std::collections::BTreeSet;
use std::sync::Arc;

pub struct Ltlf {
    inner: Arc<dyn Theory>,
    base: u32,
}

pub fn is_temporal_prim(p: &Prim) -> bool {
    p.is("last") || p.is("since")
}

impl Ltlf {
    pub fn new(inner: Arc<dyn Theory>) -> Ltlf {
        let base = inner.max_level();
        Ltlf { inner, base }
    }

    pub fn inner(&self) -> &dyn Theory {
        &*self.inner
    }

    fn depth(&self, t: TermId) -> u32 {
        let mut ps = BTreeSet::new();
        kernel::prim_tests(t, &mut ps);
        ps.iter().filter(|p| is_temporal_prim(p)).map(|p| p.level - self.base).max().unwrap_or(0)
    }

    /// `last(a)`; false on the first entry.
    pub fn last(&self, a: TermId) -> TermId {
        let a = nnf(a);
        if a.is_zero() {
            return kernel::zero();
        }
        let level = self.base + self.depth(a) + 1;
        kernel::test(Prim::new(level, "last", vec![Arg::Term(a)]))
    }

    /// `since(a,b)`: `b` held at some entry and `a` at every entry after it.
    pub fn since(&self, a: TermId, b: TermId) -> TermId {
        let (a, b) = (nnf(a), nnf(b));
        if b.is_zero() || b.is_one() || a.is_zero() {
            return b;
        }
        let level = self.base + self.depth(a).max(self.depth(b)) + 1;
        kernel::test(Prim::new(level, "since", vec![Arg::Term(a), Arg::Term(b)]))
    }

    /// `b` held at some entry.
    pub fn ever(&self, b: TermId) -> TermId {
        self.since(kernel::one(), b)
    }

    /// `a` held at every entry.
    pub fn always(&self, a: TermId) -> TermId {
        kernel::neg(self.ever(kernel::neg(a)))
    }

    /// Weak last: true on the first entry.
    pub fn wlast(&self, a: TermId) -> TermId {
        kernel::neg(self.last(kernel::neg(a)))
    }

    /// Holds only on the first entry.
    pub fn start(&self) -> TermId {
        kernel::neg(self.last(kernel::one()))
    }

    /// Weak since: `since(a,b)` or `a` always.
    pub fn back_to(&self, a: TermId, b: TermId) -> TermId {
        kernel::plus(self.since(a, b), self.always(a))
    }

    fn args(p: &Prim) -> (TermId, Option<TermId>) {
        (p.term(0).expect("temporal argument"), p.term(1))
    }

    /// Inner primitives read anywhere inside temporal primitives.
    fn inner_prims(&self, ps: &BTreeSet<Prim>) -> BTreeSet<Prim> {
        let mut out = BTreeSet::new();
        let mut todo: Vec<Prim> = ps.iter().cloned().collect();
        let mut seen = BTreeSet::new();
        while let Some(p) = todo.pop() {
            if !seen.insert(p.clone()) {
                continue;
            }
            if is_temporal_prim(&p) {
                let mut inside = BTreeSet::new();
                for a in &p.args {
                    if let Arg::Term(t) = a {
                        kernel::prim_tests(*t, &mut inside);
                    }
                }
                todo.extend(inside);
            } else {
                out.insert(p);
            }
        }
        out
    }
}

impl Theory for Ltlf {
    fn name(&self) -> String {
        format!("ltlf-{}", self.inner.name())
    }

    fn owns_test(&self, p: &Prim) -> bool {
        is_temporal_prim(p) || self.inner.owns_test(p)
    }

    fn owns_action(&self, p: &Prim) -> bool {
        self.inner.owns_action(p)
    }

    fn max_level(&self) -> u32 {
        self.base + 1
    }

    fn parse_atom(&self, atom: &Atom, ctx: &dyn AtomCtx) -> Result<TermId> {
        let arity = |n: usize, args: &[crate::theory::AtomArg]| {
            if args.len() == n {
                Ok(())
            } else {
                Err(KmtError::Theory(format!("{} expects {n} argument(s)", atom.describe())))
            }
        };
        match atom {
            Atom::Bare(s) if s == "start" => Ok(self.start()),
            Atom::Call(h, args) => match h.as_str() {
                "last" | "ever" | "always" | "wlast" => {
                    arity(1, args)?;
                    let a = ctx.arg_test(&args[0])?;
                    Ok(match h.as_str() {
                        "last" => self.last(a),
                        "ever" => self.ever(a),
                        "always" => self.always(a),
                        _ => self.wlast(a),
                    })
                }
                "since" | "backto" => {
                    arity(2, args)?;
                    let (a, b) = (ctx.arg_test(&args[0])?, ctx.arg_test(&args[1])?);
                    Ok(if h == "since" { self.since(a, b) } else { self.back_to(a, b) })
                }
                _ => self.inner.parse_atom(atom, ctx),
            },
            _ => self.inner.parse_atom(atom, ctx),
        }
    }

    fn sub(&self, eng: &Engine, alpha: &Prim) -> Vec<TermId> {
        if !is_temporal_prim(alpha) {
            return self.inner.sub(eng, alpha);
        }
        let (a, b) = Self::args(alpha);
        let mut out: Vec<TermId> = eng.sub(a).iter().copied().collect();
        if let Some(b) = b {
            out.extend(eng.sub(b).iter().copied());
        }
        out
    }

    fn push_back(&self, eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        if !is_temporal_prim(alpha) {
            return self.inner.push_back(eng, pi, alpha);
        }
        let (a, b) = Self::args(alpha);
        match b {
            // The previous entry is the one the action starts from.
            None => Ok(vec![a]),
            Some(b) => {
                let b2 = eng.push_test(pi, b)?;
                let a2 = eng.push_test(pi, a)?;
                Ok(vec![b2, kernel::seq(a2, kernel::test(alpha.clone()))])
            }
        }
    }

    fn push_back_star(&self, eng: &Engine, body: TermId, alpha: &Prim) -> Option<Result<NormalForm>> {
        if !alpha.is("since") || !is_action_sum(body) {
            return None;
        }
        // After k steps since(a,b) holds iff it held before and `a` held after
        // each step, or `b` held after some step j and `a` after each later one.
        let (a, b) = Self::args(alpha);
        let b = b.expect("since has two arguments");
        let run = || -> Result<NormalForm> {
            let guarded = eng.pb_dot(body, a)?;
            let x = eng.pb_star(&guarded)?;
            let y = eng.pb_dot(kernel::star(body), b)?;
            let mut out = x.prefix(kernel::test(alpha.clone()));
            out.extend(&eng.pb_join(&y, &x)?);
            Ok(eng.prune(out))
        };
        Some(run())
    }

    fn sat(&self, eng: &Engine, lits: &[Lit]) -> bool {
        if lits.iter().any(|(p, _)| is_temporal_prim(p)) {
            // Conservative on resource failure: an unpruned unsatisfiable
            // test only costs work later.
            automata::temporal_sat(eng, lits).unwrap_or(true)
        } else {
            self.inner.sat(eng, lits)
        }
    }

    fn is_temporal(&self) -> bool {
        true
    }

    fn start_value(&self, _eng: &Engine, alpha: &Prim, eval: &mut dyn FnMut(TermId) -> bool) -> Option<bool> {
        if alpha.is("last") {
            Some(false)
        } else if alpha.is("since") {
            Some(eval(Self::args(alpha).1.unwrap()))
        } else {
            None
        }
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        if !is_temporal_prim(p) {
            return self.inner.vars(p);
        }
        let inner = self.inner_prims(&[p.clone()].into_iter().collect());
        let vs: BTreeSet<Sym> = inner.iter().flat_map(|q| self.inner.vars(q)).collect();
        vs.into_iter().collect()
    }

    fn representative_actions(&self, tests: &BTreeSet<Prim>) -> Vec<Prim> {
        self.inner.representative_actions(&self.inner_prims(tests))
    }

    fn model(&self) -> Option<&dyn StateModel> {
        self.inner.model().map(|_| self as &dyn StateModel)
    }

    fn samples(&self) -> Samples {
        let mut s = self.inner.samples();
        let base = s.tests.clone();
        let pick = |i: usize| base[i % base.len()];
        s.tests.push(self.last(pick(0)));
        s.tests.push(self.ever(pick(1)));
        s.tests.push(self.since(pick(0), pick(2)));
        s
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        let tests = self.inner.samples().tests;
        let me = Ltlf::new(self.inner.clone());
        let me = Arc::new(me);
        let t = move |r: &mut dyn rand::RngCore| tests[r.gen_range(0..tests.len())];
        let t1 = t.clone();
        let t2 = t.clone();
        let t3 = t.clone();
        let t4 = t.clone();
        let (m1, m2, m3, m4, m5) = (me.clone(), me.clone(), me.clone(), me.clone(), me.clone());
        vec![
            AxiomSchema::new("Last-Dist-Seq", move |r| {
                let (a, b) = (t(r), t(r));
                (m1.last(kernel::seq(a, b)), kernel::seq(m1.last(a), m1.last(b)))
            }),
            AxiomSchema::new("Last-Dist-Plus", move |r| {
                let (a, b) = (t1(r), t1(r));
                (m2.last(kernel::plus(a, b)), kernel::plus(m2.last(a), m2.last(b)))
            }),
            AxiomSchema::new("WLast-One", move |_| (m3.wlast(kernel::one()), kernel::one())),
            AxiomSchema::new("Since-Unroll", move |r| {
                let (a, b) = (t2(r), t3(r));
                let s = m4.since(a, b);
                (s, kernel::plus(b, kernel::seq(a, m4.last(s))))
            }),
            AxiomSchema::new("Not-Since", move |r| {
                let (a, b) = (t4(r), t4(r));
                let lhs = kernel::neg(m5.since(a, b));
                let rhs = m5.back_to(kernel::neg(b), kernel::seq(kernel::neg(a), kernel::neg(b)));
                (lhs, rhs)
            }),
        ]
    }
}

fn is_action_sum(t: TermId) -> bool {
    match t.term() {
        Term::Act(..) => true,
        Term::Plus(xs) => xs.iter().all(|x| matches!(x.term(), Term::Act(..))),
        _ => false,
    }
}

impl StateModel for Ltlf {
    fn pred(&self, alpha: &Prim, trace: &[Entry], eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        if !is_temporal_prim(alpha) {
            return self.inner.model().unwrap().pred(alpha, trace, eval);
        }
        let (a, b) = Self::args(alpha);
        match b {
            None => trace.len() > 1 && eval(a, &trace[..trace.len() - 1]),
            Some(b) => {
                for end in (1..=trace.len()).rev() {
                    let prefix = &trace[..end];
                    if eval(b, prefix) {
                        return true;
                    }
                    if !eval(a, prefix) {
                        return false;
                    }
                }
                false
            }
        }
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        self.inner.model().unwrap().act(pi, s)
    }

    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, bound: u64) -> Result<Vec<State>> {
        let mut inner = self.inner_prims(tests);
        inner.extend(tests.iter().filter(|p| !is_temporal_prim(p)).cloned());
        self.inner.model().unwrap().states(&inner, actions, bound)
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let (_, inner) = partition_lits(lits, is_temporal_prim);
        self.inner.model().unwrap().witness(&inner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theories::incnat::{self, IncNat};

    fn th() -> Arc<Ltlf> {
        Arc::new(Ltlf::new(Arc::new(IncNat::new())))
    }

    #[test]
    fn levels_grow_with_nesting() {
        let t = th();
        let a = incnat::gt("x", 1);
        let l1 = t.last(a);
        let l2 = t.last(l1);
        let lv = |x: TermId| match x.term() {
            Term::Test(p) => p.level,
            _ => unreachable!(),
        };
        assert_eq!(lv(l1), 1);
        assert_eq!(lv(l2), 2);
        assert_eq!(l1.to_string(), "last(x>1)");
    }

    #[test]
    fn since_pushback_unrolls() {
        let t = th();
        let e = Engine::new(t.clone());
        let s = t.since(incnat::gt("x", 0), incnat::gt("x", 2));
        let p = match s.term() {
            Term::Test(p) => p.clone(),
            _ => unreachable!(),
        };
        let got = t.push_back(&e, &incnat::inc_prim("x"), &p).unwrap();
        assert_eq!(got, vec![incnat::gt("x", 1), s]);
    }

    #[test]
    fn temporal_sat_sees_start() {
        let t = th();
        let e = Engine::new(t.clone());
        // Nothing precedes the first entry.
        assert!(!e.satisfiable(kernel::seq(t.start(), t.last(incnat::gt("x", 0)))));
        assert!(e.satisfiable(t.last(incnat::gt("x", 0))));
        // since(a,b) needs `b` now or `a` now.
        let s = t.since(incnat::gt("x", 0), incnat::gt("x", 5));
        assert!(!e.satisfiable(kernel::seq_all([s, kernel::neg(incnat::gt("x", 0)), kernel::neg(incnat::gt("x", 5))])));
    }
}
