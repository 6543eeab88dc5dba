//! Finite sets of naturals over IncNat, with elements given by expressions.

use super::incnat::{self, Expr, IncNat};
use super::{ident, name_arg, num, product, STATE_LIMIT};
use crate::error::{KmtError, Result};
use crate::kernel::{self, Arg, Prim, Sym, TermId};
use crate::oracle::{Entry, State, Val};
use crate::theory::{partition_lits, Atom, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use parking_lot::RwLock;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};

const LEVEL: u32 = 1;

pub fn in_prim(x: &str, c: u64) -> Prim {
    Prim::new(LEVEL, "in", vec![name_arg(x), Arg::Nat(c)])
}

pub fn member(x: &str, c: u64) -> TermId {
    kernel::test(in_prim(x, c))
}

fn update_prim(op: &str, x: &str, e: &Expr) -> Prim {
    Prim::new(0, op, vec![name_arg(x), e.to_arg()])
}

fn owns_test(p: &Prim) -> bool {
    p.is("in")
}

fn owns_action(p: &Prim) -> bool {
    p.is("insert") || p.is("remove")
}

fn set_value(s: &State, x: &str) -> BTreeSet<u64> {
    match s.get(x) {
        Some(Val::Set(v)) => v.clone(),
        _ => BTreeSet::new(),
    }
}

/// Sets over IncNat. Expression variables seen in updates are recorded at
/// parse time because the subterms of a membership test depend on them.
pub struct SetTheory {
    inner: IncNat,
    exprs: RwLock<BTreeSet<Sym>>,
}

impl Default for SetTheory {
    fn default() -> Self {
        SetTheory::new()
    }
}

impl SetTheory {
    pub fn new() -> SetTheory {
        SetTheory { inner: IncNat::new(), exprs: RwLock::new(BTreeSet::new()) }
    }

    fn note(&self, e: &Expr) {
        if let Expr::Var(v) = e {
            self.exprs.write().insert(v.clone());
        }
    }

    pub fn insert(&self, x: &str, e: Expr) -> TermId {
        self.note(&e);
        kernel::act(update_prim("insert", x, &e))
    }

    pub fn remove(&self, x: &str, e: Expr) -> TermId {
        self.note(&e);
        kernel::act(update_prim("remove", x, &e))
    }
}

impl Theory for SetTheory {
    fn name(&self) -> String {
        "set".into()
    }

    fn owns_test(&self, p: &Prim) -> bool {
        owns_test(p) || self.inner.owns_test(p)
    }

    fn owns_action(&self, p: &Prim) -> bool {
        owns_action(p) || self.inner.owns_action(p)
    }

    fn max_level(&self) -> u32 {
        LEVEL
    }

    fn parse_atom(&self, atom: &Atom, ctx: &dyn AtomCtx) -> Result<TermId> {
        let unknown = || KmtError::UnknownAtom(atom.describe());
        match atom {
            Atom::Call(h, args) if h == "in" && args.len() == 2 => {
                Ok(member(ident(&args[0]).ok_or_else(unknown)?, num(&args[1]).ok_or_else(unknown)?))
            }
            Atom::Call(h, args) if (h == "insert" || h == "remove") && args.len() == 2 => {
                let x = ident(&args[0]).ok_or_else(unknown)?;
                let e = Expr::parse(&args[1]).ok_or_else(unknown)?;
                Ok(if h == "insert" { self.insert(x, e) } else { self.remove(x, e) })
            }
            _ => self.inner.parse_atom(atom, ctx),
        }
    }

    fn sub(&self, eng: &Engine, alpha: &Prim) -> Vec<TermId> {
        if !owns_test(alpha) {
            return self.inner.sub(eng, alpha);
        }
        let c = alpha.nat(1).unwrap();
        let exprs: Vec<Sym> = self.exprs.read().iter().cloned().collect();
        let mut out = Vec::new();
        for v in exprs {
            out.extend(Expr::Var(v).eq_subterms(eng, c));
        }
        out
    }

    fn push_back(&self, eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        let keep = || Ok(vec![kernel::test(alpha.clone())]);
        match (owns_action(pi), owns_test(alpha)) {
            (false, false) => self.inner.push_back(eng, pi, alpha),
            (true, true) if pi.name(0) == alpha.name(0) => {
                let e = Expr::from_arg(&pi.args[1]).expect("element expression");
                let hit = e.eq_test(alpha.nat(1).unwrap());
                if pi.is("insert") {
                    // The element was already present or is the one inserted.
                    Ok(vec![hit, kernel::test(alpha.clone())])
                } else {
                    Ok(vec![kernel::seq(kernel::neg(hit), kernel::test(alpha.clone()))])
                }
            }
            _ => keep(),
        }
    }

    fn sat(&self, eng: &Engine, lits: &[Lit]) -> bool {
        // Distinct membership literals are independent.
        let (_, inner) = partition_lits(lits, owns_test);
        self.inner.sat(eng, &inner)
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        p.name(0).cloned().into_iter().collect()
    }

    fn model(&self) -> Option<&dyn StateModel> {
        Some(self)
    }

    fn samples(&self) -> Samples {
        let i = || Expr::Var(kernel::sym("i"));
        Samples {
            tests: vec![member("x", 0), member("x", 1), member("y", 1), incnat::gt("i", 0), incnat::gt("i", 1)],
            actions: vec![
                self.insert("x", i()),
                self.remove("x", i()),
                self.insert("x", Expr::Const(1)),
                self.remove("y", Expr::Const(0)),
                incnat::inc("i"),
                incnat::assign("i", 0),
            ],
        }
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        self.note(&Expr::Var(kernel::sym("i")));
        let expr = |r: &mut dyn rand::RngCore| {
            if r.gen_bool(0.5) {
                Expr::Var(kernel::sym("i"))
            } else {
                Expr::Const(r.gen_range(0..3))
            }
        };
        let ins = |x: &str, e: &Expr| kernel::act(update_prim("insert", x, e));
        let del = |x: &str, e: &Expr| kernel::act(update_prim("remove", x, e));
        vec![
            AxiomSchema::new("Add-Comm", move |r| {
                let (e, c) = (expr(r), r.gen_range(0..3));
                (kernel::seq(ins("x", &e), member("y", c)), kernel::seq(member("y", c), ins("x", &e)))
            }),
            AxiomSchema::new("Add-In", move |r| {
                let c = r.gen_range(0..3);
                let e = Expr::Const(c);
                (kernel::seq(ins("x", &e), member("x", c)), ins("x", &e))
            }),
            AxiomSchema::new("Add-In-Expr", move |r| {
                let (e, c) = (expr(r), r.gen_range(0..3));
                let pre = kernel::plus(e.eq_test(c), member("x", c));
                (kernel::seq(ins("x", &e), member("x", c)), kernel::seq(pre, ins("x", &e)))
            }),
            AxiomSchema::new("Del-Comm", move |r| {
                let (e, c) = (expr(r), r.gen_range(0..3));
                (kernel::seq(del("x", &e), member("y", c)), kernel::seq(member("y", c), del("x", &e)))
            }),
            AxiomSchema::new("Del-In", move |r| {
                let (e, c) = (expr(r), r.gen_range(0..3));
                let pre = kernel::seq(kernel::neg(e.eq_test(c)), member("x", c));
                (kernel::seq(del("x", &e), member("x", c)), kernel::seq(pre, del("x", &e)))
            }),
            AxiomSchema::new("Add-E-Comm", move |r| {
                let (e, n) = (expr(r), r.gen_range(0..3));
                let t = incnat::gt("i", n);
                (kernel::seq(ins("x", &e), t), kernel::seq(t, ins("x", &e)))
            }),
            AxiomSchema::new("Del-E-Comm", move |r| {
                let (e, n) = (expr(r), r.gen_range(0..3));
                let t = incnat::gt("i", n);
                (kernel::seq(del("x", &e), t), kernel::seq(t, del("x", &e)))
            }),
        ]
    }
}

impl StateModel for SetTheory {
    fn pred(&self, alpha: &Prim, trace: &[Entry], eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        if !owns_test(alpha) {
            return self.inner.model().unwrap().pred(alpha, trace, eval);
        }
        let s = &trace.last().expect("nonempty trace").state;
        set_value(s, alpha.name(0).unwrap()).contains(&alpha.nat(1).unwrap())
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        if !owns_action(pi) {
            return self.inner.model().unwrap().act(pi, s);
        }
        let x = pi.name(0).unwrap().clone();
        let v = Expr::from_arg(&pi.args[1]).unwrap().eval(s);
        let mut set = set_value(s, &x);
        if pi.is("insert") {
            set.insert(v);
        } else {
            set.remove(&v);
        }
        let mut out = s.clone();
        out.insert(x, Val::Set(set));
        out
    }

    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, bound: u64) -> Result<Vec<State>> {
        // Variables inserted or removed range over the inner states even
        // when no inner test mentions them.
        let mut inner_tests = tests.clone();
        for p in actions.iter().filter(|p| owns_action(p)) {
            if let Some(Expr::Var(v)) = Expr::from_arg(&p.args[1]) {
                inner_tests.insert(incnat::gt_prim(&v, 0));
            }
        }
        let base = self.inner.model().unwrap().states(&inner_tests, actions, bound)?;
        // Only membership of tested constants is observable.
        let mut tested: BTreeMap<Sym, BTreeSet<u64>> = BTreeMap::new();
        for p in tests.iter().filter(|p| owns_test(p)) {
            tested.entry(p.name(0).unwrap().clone()).or_default().insert(p.nat(1).unwrap());
        }
        let mut choices = Vec::new();
        for cs in tested.values() {
            let cs: Vec<u64> = cs.iter().copied().collect();
            let subsets: Vec<BTreeSet<u64>> = (0u64..1 << cs.len().min(16))
                .map(|mask| cs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, c)| *c).collect())
                .collect();
            choices.push(subsets);
        }
        let combos = product(&choices, STATE_LIMIT / base.len().max(1))?;
        let mut out = Vec::with_capacity(base.len() * combos.len());
        for s in &base {
            for combo in &combos {
                let mut t = s.clone();
                for (x, set) in tested.keys().zip(combo) {
                    t.insert(x.clone(), Val::Set(set.clone()));
                }
                out.push(t);
            }
        }
        Ok(out)
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let (sets, inner) = partition_lits(lits, owns_test);
        let mut s = self.inner.model().unwrap().witness(&inner)?;
        for (p, pol) in sets {
            let x = p.name(0).unwrap().clone();
            let mut v = set_value(&s, &x);
            if pol {
                v.insert(p.nat(1).unwrap());
            }
            s.insert(x, Val::Set(v));
        }
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn insert_pushback_is_sound() {
        let t = Arc::new(SetTheory::new());
        let e = Engine::new(t.clone());
        let i = Expr::Var(kernel::sym("i"));
        let ins = t.insert("x", i.clone());
        let pi = match ins.term() {
            kernel::Term::Act(p, _) => p.clone(),
            _ => unreachable!(),
        };
        let got = t.push_back(&e, &pi, &in_prim("x", 3)).unwrap();
        assert!(got.contains(&i.eq_test(3)));
        assert!(got.contains(&member("x", 3)));
        assert_eq!(member("x", 3).to_string(), "in(x,3)");
        assert_eq!(ins.to_string(), "insert(x,i)");
    }

    #[test]
    fn sub_includes_expression_equalities() {
        let t = Arc::new(SetTheory::new());
        t.insert("x", Expr::Var(kernel::sym("i")));
        let e = Engine::new(t.clone());
        let s = e.sub(member("x", 2));
        assert!(s.contains(&incnat::gt("i", 1)));
        assert!(s.contains(&incnat::gt("i", 2)));
    }
}
