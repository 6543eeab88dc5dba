//! Natural-number variables with increment and constant assignment.

use super::{ident, name_arg, num, product, STATE_LIMIT};
use crate::error::{KmtError, Result};
use crate::kernel::{self, register_printer, sym, Arg, Prim, Sym, TermId};
use crate::oracle::{Entry, State, Val};
use crate::theory::{Atom, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Once;

/// Variable used for the no-op representative action.
pub const IDLE_VAR: &str = "_idle";

fn init_printers() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        register_printer("gt", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}>{}", p.args[0], p.args[1]));
        register_printer("inc", |p, f: &mut fmt::Formatter<'_>| write!(f, "inc({})", p.args[0]));
        register_printer("assign", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}:={}", p.args[0], p.args[1]));
    });
}

pub fn gt_prim(x: &str, n: u64) -> Prim {
    init_printers();
    Prim::new(0, "gt", vec![name_arg(x), Arg::Nat(n)])
}

/// The test `x>n`.
pub fn gt(x: &str, n: u64) -> TermId {
    kernel::test(gt_prim(x, n))
}

/// The test `x<n`, i.e. `~(x>n-1)`; `x<0` is `false`.
pub fn lt(x: &str, n: u64) -> TermId {
    if n == 0 {
        kernel::zero()
    } else {
        kernel::neg(gt(x, n - 1))
    }
}

/// The test `x=n`.
pub fn eq(x: &str, n: u64) -> TermId {
    if n == 0 {
        kernel::neg(gt(x, 0))
    } else {
        kernel::seq(gt(x, n - 1), kernel::neg(gt(x, n)))
    }
}

pub fn inc_prim(x: &str) -> Prim {
    init_printers();
    Prim::new(0, "inc", vec![name_arg(x)])
}

pub fn inc(x: &str) -> TermId {
    kernel::act(inc_prim(x))
}

pub fn assign_prim(x: &str, n: u64) -> Prim {
    init_printers();
    Prim::new(0, "assign", vec![name_arg(x), Arg::Nat(n)])
}

pub fn assign(x: &str, n: u64) -> TermId {
    kernel::act(assign_prim(x, n))
}

pub fn value(s: &State, x: &str) -> u64 {
    match s.get(x) {
        Some(Val::Nat(n)) => *n,
        _ => 0,
    }
}

/// Open interval of values allowed for one variable by a set of literals:
/// `x > lower` (when present) and `x <= upper` (when present).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Option<u64>,
    pub upper: Option<u64>,
}

impl Bounds {
    pub fn add(&mut self, n: u64, pol: bool) {
        if pol {
            self.lower = Some(self.lower.map_or(n, |l| l.max(n)));
        } else {
            self.upper = Some(self.upper.map_or(n, |u| u.min(n)));
        }
    }

    /// Least admissible value.
    pub fn least(&self) -> Option<u64> {
        let v = self.lower.map_or(0, |l| l + 1);
        match self.upper {
            Some(u) if v > u => None,
            _ => Some(v),
        }
    }

    pub fn admits(&self, v: u64) -> bool {
        self.lower.is_none_or(|l| v > l) && self.upper.is_none_or(|u| v <= u)
    }
}

/// Per-variable bounds of the `gt` literals in `lits`; others are ignored.
pub fn bounds(lits: &[Lit]) -> BTreeMap<Sym, Bounds> {
    let mut out: BTreeMap<Sym, Bounds> = BTreeMap::new();
    for (p, pol) in lits {
        if p.is("gt") {
            let x = p.name(0).expect("gt variable").clone();
            out.entry(x).or_default().add(p.nat(1).expect("gt bound"), *pol);
        }
    }
    out
}

#[derive(Default)]
pub struct IncNat {
    model: IncNatModel,
}

impl IncNat {
    pub fn new() -> IncNat {
        init_printers();
        IncNat::default()
    }
}

fn owns_test(p: &Prim) -> bool {
    p.is("gt")
}

fn owns_action(p: &Prim) -> bool {
    p.is("inc") || p.is("assign")
}

impl Theory for IncNat {
    fn name(&self) -> String {
        "incnat".into()
    }

    fn owns_test(&self, p: &Prim) -> bool {
        owns_test(p)
    }

    fn owns_action(&self, p: &Prim) -> bool {
        owns_action(p)
    }

    fn max_level(&self) -> u32 {
        0
    }

    fn parse_atom(&self, atom: &Atom, _ctx: &dyn AtomCtx) -> Result<TermId> {
        match atom {
            Atom::Call(h, args) if h == "inc" && args.len() == 1 => {
                ident(&args[0]).map(inc).ok_or_else(|| KmtError::UnknownAtom(atom.describe()))
            }
            Atom::Infix { lhs, op, rhs } => {
                let n = num(rhs).ok_or_else(|| KmtError::UnknownAtom(atom.describe()))?;
                match op.as_str() {
                    ">" => Ok(gt(lhs, n)),
                    ">=" => Ok(if n == 0 { kernel::one() } else { gt(lhs, n - 1) }),
                    "<" => Ok(lt(lhs, n)),
                    "<=" => Ok(kernel::neg(gt(lhs, n))),
                    "=" | "==" => Ok(eq(lhs, n)),
                    ":=" => Ok(assign(lhs, n)),
                    _ => Err(KmtError::UnknownAtom(atom.describe())),
                }
            }
            _ => Err(KmtError::UnknownAtom(atom.describe())),
        }
    }

    fn sub(&self, _eng: &Engine, alpha: &Prim) -> Vec<TermId> {
        let x = alpha.name(0).expect("gt variable");
        (0..alpha.nat(1).expect("gt bound")).map(|m| gt(x, m)).collect()
    }

    fn push_back(&self, _eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        let x = alpha.name(0).expect("gt variable");
        let n = alpha.nat(1).expect("gt bound");
        if pi.name(0) != Some(x) {
            return Ok(vec![kernel::test(alpha.clone())]);
        }
        Ok(if pi.is("assign") {
            let m = pi.nat(1).expect("assigned constant");
            if m > n {
                vec![kernel::one()]
            } else {
                vec![]
            }
        } else if n == 0 {
            vec![kernel::one()]
        } else {
            vec![gt(x, n - 1)]
        })
    }

    fn sat(&self, _eng: &Engine, lits: &[Lit]) -> bool {
        bounds(lits).values().all(|b| b.least().is_some())
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        p.name(0).cloned().into_iter().collect()
    }

    fn representative_actions(&self, tests: &BTreeSet<Prim>) -> Vec<Prim> {
        // Per variable: an increment and an assignment to every value class
        // the tests distinguish. The idle increment changes nothing observed.
        let mut classes: BTreeMap<Sym, u64> = BTreeMap::new();
        for p in tests.iter().filter(|p| p.is("gt")) {
            let e = classes.entry(p.name(0).unwrap().clone()).or_default();
            *e = (*e).max(p.nat(1).unwrap());
        }
        let mut out = vec![inc_prim(IDLE_VAR)];
        for (x, top) in classes {
            out.push(inc_prim(&x));
            for n in 0..=top + 1 {
                out.push(assign_prim(&x, n));
            }
        }
        out
    }

    fn model(&self) -> Option<&dyn StateModel> {
        Some(&self.model)
    }

    fn samples(&self) -> Samples {
        let mut tests = Vec::new();
        for x in ["x", "y"] {
            for n in 0..3 {
                tests.push(gt(x, n));
            }
        }
        Samples { tests, actions: vec![inc("x"), inc("y"), assign("x", 0), assign("x", 2), assign("y", 1)] }
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        let var = |r: &mut dyn rand::RngCore| if r.gen_bool(0.5) { "x" } else { "y" };
        vec![
            AxiomSchema::new("GT-Contra", move |r| {
                let x = var(r);
                let n = r.gen_range(0..4);
                let m = r.gen_range(n..6);
                (kernel::seq(kernel::neg(gt(x, n)), gt(x, m)), kernel::zero())
            }),
            AxiomSchema::new("Asgn-GT", move |r| {
                let x = var(r);
                let (n, m) = (r.gen_range(0..5), r.gen_range(0..5));
                let c = if n > m { kernel::one() } else { kernel::zero() };
                (kernel::seq(assign(x, n), gt(x, m)), kernel::seq(c, assign(x, n)))
            }),
            AxiomSchema::new("GT-Min", move |r| {
                let x = var(r);
                let (n, m) = (r.gen_range(0..5), r.gen_range(0..5));
                (kernel::seq(gt(x, n), gt(x, m)), gt(x, n.max(m)))
            }),
            AxiomSchema::new("GT-Comm", move |r| {
                let n = r.gen_range(0..5);
                (kernel::seq(inc("y"), gt("x", n)), kernel::seq(gt("x", n), inc("y")))
            }),
            AxiomSchema::new("Inc-GT", move |r| {
                let x = var(r);
                let n = r.gen_range(1..6);
                (kernel::seq(inc(x), gt(x, n)), kernel::seq(gt(x, n - 1), inc(x)))
            }),
            AxiomSchema::new("Inc-GT-Z", move |r| {
                let x = var(r);
                (kernel::seq(inc(x), gt(x, 0)), inc(x))
            }),
        ]
    }
}

#[derive(Default)]
pub struct IncNatModel;

impl StateModel for IncNatModel {
    fn pred(&self, alpha: &Prim, trace: &[Entry], _eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        let s = &trace.last().expect("nonempty trace").state;
        value(s, alpha.name(0).unwrap()) > alpha.nat(1).unwrap()
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        let x = pi.name(0).unwrap().clone();
        let v = if pi.is("assign") { pi.nat(1).unwrap() } else { value(s, &x).saturating_add(1) };
        let mut out = s.clone();
        out.insert(x, Val::Nat(v));
        out
    }

    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, bound: u64) -> Result<Vec<State>> {
        let vars: BTreeSet<Sym> = tests
            .iter()
            .filter(|p| owns_test(p))
            .chain(actions.iter().filter(|p| owns_action(p)))
            .filter_map(|p| p.name(0).cloned())
            .collect();
        let choices: Vec<Vec<u64>> = vars.iter().map(|_| (0..=bound).collect()).collect();
        Ok(product(&choices, STATE_LIMIT)?
            .into_iter()
            .map(|vals| vars.iter().cloned().zip(vals.into_iter().map(Val::Nat)).collect())
            .collect())
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let mut s = State::new();
        for (x, b) in bounds(lits) {
            s.insert(x, Val::Nat(b.least()?));
        }
        Some(s)
    }
}

/// Constant or variable operand used by the set and map theories.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(u64),
    Var(Sym),
}

impl Expr {
    pub fn from_arg(a: &Arg) -> Option<Expr> {
        match a {
            Arg::Nat(n) => Some(Expr::Const(*n)),
            Arg::Name(s) => Some(Expr::Var(s.clone())),
            _ => None,
        }
    }

    pub fn to_arg(&self) -> Arg {
        match self {
            Expr::Const(n) => Arg::Nat(*n),
            Expr::Var(s) => Arg::Name(s.clone()),
        }
    }

    pub fn parse(a: &crate::theory::AtomArg) -> Option<Expr> {
        match a {
            crate::theory::AtomArg::Num(n) => Some(Expr::Const(*n)),
            crate::theory::AtomArg::Ident(s) => Some(Expr::Var(sym(s))),
            _ => None,
        }
    }

    pub fn eval(&self, s: &State) -> u64 {
        match self {
            Expr::Const(n) => *n,
            Expr::Var(x) => value(s, x),
        }
    }

    /// The test `e=c`.
    /// Subterms of `self = c` and of its negation. Both are needed: when
    /// `c` is 0 the negation collapses to the bare `x>0`.
    pub fn eq_subterms(&self, eng: &Engine, c: u64) -> Vec<TermId> {
        let e = self.eq_test(c);
        let mut out: Vec<TermId> = eng.sub(e).iter().copied().collect();
        out.extend(eng.sub(kernel::neg(e)).iter().copied());
        out
    }

    pub fn eq_test(&self, c: u64) -> TermId {
        match self {
            Expr::Const(n) => {
                if *n == c {
                    kernel::one()
                } else {
                    kernel::zero()
                }
            }
            Expr::Var(x) => eq(x, c),
        }
    }

    pub fn var(&self) -> Option<&Sym> {
        match self {
            Expr::Var(x) => Some(x),
            Expr::Const(_) => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(n) => write!(f, "{n}"),
            Expr::Var(x) => f.write_str(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::Engine;
    use std::sync::Arc;

    fn eng() -> Engine {
        Engine::new(Arc::new(IncNat::new()))
    }

    #[test]
    fn pushback_table() {
        let e = eng();
        let t = IncNat::new();
        let pb = |pi: Prim, a: Prim| kernel::plus_all(t.push_back(&e, &pi, &a).unwrap());
        assert_eq!(pb(inc_prim("x"), gt_prim("x", 3)), gt("x", 2));
        assert_eq!(pb(inc_prim("x"), gt_prim("x", 0)), kernel::one());
        assert_eq!(pb(assign_prim("x", 5), gt_prim("x", 3)), kernel::one());
        assert_eq!(pb(assign_prim("x", 3), gt_prim("x", 3)), kernel::zero());
        assert_eq!(pb(inc_prim("y"), gt_prim("x", 3)), gt("x", 3));
    }

    #[test]
    fn sat_intervals() {
        let e = eng();
        let t = IncNat::new();
        assert!(t.sat(&e, &[(gt_prim("x", 2), true), (gt_prim("x", 3), false)]));
        assert!(!t.sat(&e, &[(gt_prim("x", 3), true), (gt_prim("x", 3), false)]));
        assert!(!t.sat(&e, &[(gt_prim("x", 4), true), (gt_prim("x", 2), false)]));
        assert!(e.satisfiable(eq("x", 0)));
        assert!(!e.satisfiable(kernel::seq(eq("x", 1), eq("x", 2))));
    }

    #[test]
    fn sub_is_smaller_bounds() {
        let e = eng();
        let s = e.sub(gt("x", 2));
        let want: BTreeSet<TermId> = [kernel::zero(), kernel::one(), gt("x", 0), gt("x", 1), gt("x", 2)].into_iter().collect();
        assert_eq!(*s, want);
    }

    #[test]
    fn display_forms() {
        assert_eq!(gt("x", 3).to_string(), "x>3");
        assert_eq!(inc("x").to_string(), "inc(x)");
        assert_eq!(assign("x", 2).to_string(), "x:=2");
    }

    #[test]
    fn witness_meets_bounds() {
        let m = IncNatModel;
        let s = m.witness(&[(gt_prim("x", 2), true), (gt_prim("y", 0), false)]).unwrap();
        assert_eq!(value(&s, "x"), 3);
        assert_eq!(value(&s, "y"), 0);
    }
}
