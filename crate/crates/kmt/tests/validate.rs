//! validate_theory on built-in theories at small budgets and on a
//! deliberately broken client theory.

use kmt::kernel::{Prim, Sym, TermId};
use kmt::oracle::Budget;
use kmt::theories::{self, IncNat};
use kmt::theory::{Atom, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use kmt::validate::{validate_theory, ValidateOptions};
use kmt::Result;
use std::collections::BTreeSet;
use std::sync::Arc;

/// IncNat whose increment claims to commute with every `x>n`.
struct BrokenIncNat(IncNat);

impl Theory for BrokenIncNat {
    fn name(&self) -> String {
        "broken-incnat".into()
    }
    fn owns_test(&self, p: &Prim) -> bool {
        self.0.owns_test(p)
    }
    fn owns_action(&self, p: &Prim) -> bool {
        self.0.owns_action(p)
    }
    fn max_level(&self) -> u32 {
        self.0.max_level()
    }
    fn parse_atom(&self, atom: &Atom, ctx: &dyn AtomCtx) -> Result<TermId> {
        self.0.parse_atom(atom, ctx)
    }
    fn sub(&self, eng: &Engine, alpha: &Prim) -> Vec<TermId> {
        self.0.sub(eng, alpha)
    }
    fn push_back(&self, eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        if pi.is("inc") && alpha.is("gt") && pi.name(0) == alpha.name(0) {
            return Ok(vec![kmt::kernel::test(alpha.clone())]);
        }
        self.0.push_back(eng, pi, alpha)
    }
    fn sat(&self, eng: &Engine, lits: &[Lit]) -> bool {
        self.0.sat(eng, lits)
    }
    fn vars(&self, p: &Prim) -> Vec<Sym> {
        self.0.vars(p)
    }
    fn representative_actions(&self, tests: &BTreeSet<Prim>) -> Vec<Prim> {
        self.0.representative_actions(tests)
    }
    fn model(&self) -> Option<&dyn StateModel> {
        self.0.model()
    }
    fn samples(&self) -> Samples {
        self.0.samples()
    }
    fn axioms(&self) -> Vec<AxiomSchema> {
        self.0.axioms()
    }
}

#[test]
fn broken_pushback_is_reported() {
    let opts = ValidateOptions { budget: Budget { states: 8, trace_len: 3 }, ..ValidateOptions::default() };
    let rep = validate_theory(Arc::new(BrokenIncNat(IncNat::new())), &opts).unwrap();
    assert!(!rep.passed(), "{rep}");
    let f = rep.failures.iter().find(|f| f.check == "pushback-sound").expect("a pushback finding");
    // inc(x);x>n differs from x>n;inc(x) exactly when x starts at n.
    assert!(f.detail.contains("inc(x)"), "{}", f.detail);
    let n: u64 = f.detail.split("x>").nth(1).and_then(|s| s.split(|c: char| !c.is_ascii_digit()).next()).unwrap().parse().unwrap();
    assert!(f.detail.contains(&format!("x={n}")), "{}", f.detail);
}

#[test]
fn small_budgets_pass() {
    let opts = ValidateOptions { budget: Budget { states: 8, trace_len: 3 }, ..ValidateOptions::default() };
    for name in ["incnat", "bitvec"] {
        let rep = validate_theory(theories::by_name(name).unwrap(), &opts).unwrap();
        assert!(rep.passed(), "{rep}");
    }
}
