//! Disjoint product of two theories. Primitives of one side commute with the other.

use crate::error::{KmtError, Result};
use crate::kernel::{self, Prim, Sym, TermId};
use crate::oracle::{Entry, State};
use crate::theory::{partition_lits, Atom, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use rand::Rng;
use std::collections::BTreeSet;
use std::sync::Arc;

pub struct Prod {
    left: Arc<dyn Theory>,
    right: Arc<dyn Theory>,
}

impl Prod {
    /// Fails when either side lacks a state model, since the product's model
    /// is assembled from both.
    pub fn new(left: Arc<dyn Theory>, right: Arc<dyn Theory>) -> Result<Prod> {
        for t in [&left, &right] {
            if t.model().is_none() {
                return Err(KmtError::NoStateModel(t.name()));
            }
        }
        Ok(Prod { left, right })
    }

    fn side(&self, p: &Prim) -> Option<&dyn Theory> {
        if self.left.owns_test(p) || self.left.owns_action(p) {
            Some(&*self.left)
        } else if self.right.owns_test(p) || self.right.owns_action(p) {
            Some(&*self.right)
        } else {
            None
        }
    }

    fn is_left(&self, p: &Prim) -> bool {
        self.left.owns_test(p) || self.left.owns_action(p)
    }
}

impl Theory for Prod {
    fn name(&self) -> String {
        format!("prod-{}-{}", self.left.name(), self.right.name())
    }

    fn owns_test(&self, p: &Prim) -> bool {
        self.left.owns_test(p) || self.right.owns_test(p)
    }

    fn owns_action(&self, p: &Prim) -> bool {
        self.left.owns_action(p) || self.right.owns_action(p)
    }

    fn max_level(&self) -> u32 {
        self.left.max_level().max(self.right.max_level())
    }

    fn parse_atom(&self, atom: &Atom, ctx: &dyn AtomCtx) -> Result<TermId> {
        match self.left.parse_atom(atom, ctx) {
            Err(KmtError::UnknownAtom(_)) => self.right.parse_atom(atom, ctx),
            r => r,
        }
    }

    fn sub(&self, eng: &Engine, alpha: &Prim) -> Vec<TermId> {
        self.side(alpha).map(|t| t.sub(eng, alpha)).unwrap_or_default()
    }

    fn push_back(&self, eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        if self.is_left(pi) != self.is_left(alpha) {
            return Ok(vec![kernel::test(alpha.clone())]);
        }
        match self.side(alpha) {
            Some(t) => t.push_back(eng, pi, alpha),
            None => Err(KmtError::Theory(format!("no side owns {alpha}"))),
        }
    }

    fn sat(&self, eng: &Engine, lits: &[Lit]) -> bool {
        let (l, r) = partition_lits(lits, |p| self.left.owns_test(p));
        self.left.sat(eng, &l) && self.right.sat(eng, &r)
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        // Variables are tagged by side so that equal names on both sides stay independent.
        let tag = if self.is_left(p) { "l:" } else { "r:" };
        self.side(p)
            .map(|t| t.vars(p).into_iter().map(|v| kernel::sym(&format!("{tag}{v}"))).collect())
            .unwrap_or_default()
    }

    fn representative_actions(&self, tests: &BTreeSet<Prim>) -> Vec<Prim> {
        let (l, r): (BTreeSet<Prim>, BTreeSet<Prim>) = tests.iter().cloned().partition(|p| self.left.owns_test(p));
        let mut out = self.left.representative_actions(&l);
        out.extend(self.right.representative_actions(&r));
        out
    }

    fn model(&self) -> Option<&dyn StateModel> {
        Some(self)
    }

    fn samples(&self) -> Samples {
        let (a, b) = (self.left.samples(), self.right.samples());
        Samples {
            tests: a.tests.into_iter().chain(b.tests).collect(),
            actions: a.actions.into_iter().chain(b.actions).collect(),
        }
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        let mut out = self.left.axioms();
        out.extend(self.right.axioms());
        let (a, b) = (self.left.samples(), self.right.samples());
        let (lt, la, rt, ra) = (a.tests.clone(), a.actions.clone(), b.tests.clone(), b.actions.clone());
        out.push(AxiomSchema::new("L-R-Comm", move |r| {
            let p = la[r.gen_range(0..la.len())];
            let t = rt[r.gen_range(0..rt.len())];
            (kernel::seq(p, t), kernel::seq(t, p))
        }));
        out.push(AxiomSchema::new("R-L-Comm", move |r| {
            let p = ra[r.gen_range(0..ra.len())];
            let t = lt[r.gen_range(0..lt.len())];
            (kernel::seq(p, t), kernel::seq(t, p))
        }));
        out
    }
}

impl StateModel for Prod {
    fn pred(&self, alpha: &Prim, trace: &[Entry], eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        let side = self.side(alpha).expect("owned test");
        side.model().unwrap().pred(alpha, trace, eval)
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        let side = self.side(pi).expect("owned action");
        side.model().unwrap().act(pi, s)
    }

    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, bound: u64) -> Result<Vec<State>> {
        let ls = self.left.model().unwrap().states(tests, actions, bound)?;
        let rs = self.right.model().unwrap().states(tests, actions, bound)?;
        if ls.len().saturating_mul(rs.len()) > super::STATE_LIMIT {
            return Err(KmtError::Budget("product state space exceeds the enumeration limit".into()));
        }
        let mut out = Vec::with_capacity(ls.len() * rs.len());
        for l in &ls {
            for r in &rs {
                let mut s = l.clone();
                s.extend(r.iter().map(|(k, v)| (k.clone(), v.clone())));
                out.push(s);
            }
        }
        Ok(out)
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let (l, r) = partition_lits(lits, |p| self.left.owns_test(p));
        let mut s = self.left.model().unwrap().witness(&l)?;
        s.extend(self.right.model().unwrap().witness(&r)?);
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theories::{bitvec, incnat, BitVec, IncNat};

    #[test]
    fn cross_pushback_commutes() {
        let p: Arc<dyn Theory> = Arc::new(Prod::new(Arc::new(BitVec::new()), Arc::new(IncNat::new())).unwrap());
        let e = Engine::new(p.clone());
        let a = incnat::gt_prim("x", 2);
        assert_eq!(p.push_back(&e, &bitvec::set_prim("b"), &a).unwrap(), vec![kernel::test(a.clone())]);
        assert_eq!(p.push_back(&e, &incnat::inc_prim("x"), &a).unwrap(), vec![incnat::gt("x", 1)]);
        assert_eq!(p.name(), "prod-bitvec-incnat");
    }
}
