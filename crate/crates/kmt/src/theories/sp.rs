//! Shortest-path distances: variables over naturals with infinity, bounded by
//! `x<n`, and updated by `x:=minp(y,z,..)`, which sets `x` to one more than
//! the least of its arguments.

use super::{ident, name_arg, product, STATE_LIMIT};
use crate::error::{KmtError, Result};
use crate::kernel::{self, register_printer, sym, Arg, Prim, Sym, TermId};
use crate::oracle::{Entry, State, Val};
use crate::theory::{Atom, AtomArg, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use parking_lot::RwLock;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Once;

fn init_printers() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        register_printer("lt", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}<{}", p.args[1], p.args[0]));
        register_printer("minp", |p, f: &mut fmt::Formatter<'_>| {
            write!(f, "{}:=minp(", p.args[0])?;
            for (i, a) in p.args[1..].iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")
        });
    });
}

/// Bound of a `lt` test; `None` is infinity.
pub type Bound = Option<u64>;

fn bound_arg(b: Bound) -> Arg {
    b.map_or(Arg::Inf, Arg::Nat)
}

fn bound_of(p: &Prim) -> Bound {
    p.nat(0)
}

fn var_of(p: &Prim) -> &Sym {
    p.name(1).expect("lt variable")
}

/// The bound comes first so that smaller bounds precede in the well order.
pub fn lt_prim(x: &str, n: Bound) -> Prim {
    init_printers();
    Prim::new(0, "lt", vec![bound_arg(n), name_arg(x)])
}

pub fn lt(x: &str, n: Bound) -> TermId {
    kernel::test(lt_prim(x, n))
}

pub fn minp_prim(x: &str, args: &[&str]) -> Prim {
    init_printers();
    let mut a = vec![name_arg(x)];
    a.extend(args.iter().map(|v| name_arg(v)));
    Prim::new(0, "minp", a)
}

fn owns_test(p: &Prim) -> bool {
    p.is("lt")
}

fn owns_action(p: &Prim) -> bool {
    p.is("minp")
}

/// Distance held by `x`; missing variables are unreachable.
fn dist(s: &State, x: &str) -> Bound {
    match s.get(x) {
        Some(Val::Nat(n)) => Some(*n),
        _ => None,
    }
}

fn below(v: Bound, n: Bound) -> bool {
    match (v, n) {
        (Some(v), Some(n)) => v < n,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

pub struct Sp {
    vars: RwLock<BTreeSet<Sym>>,
}

impl Default for Sp {
    fn default() -> Self {
        Sp::new()
    }
}

impl Sp {
    pub fn new() -> Sp {
        init_printers();
        Sp { vars: RwLock::new(BTreeSet::new()) }
    }

    /// Records a variable as part of the query's universe.
    pub fn declare(&self, x: &str) {
        self.vars.write().insert(sym(x));
    }

    pub fn test(&self, x: &str, n: Bound) -> TermId {
        self.declare(x);
        lt(x, n)
    }

    pub fn minp(&self, x: &str, args: &[&str]) -> TermId {
        self.declare(x);
        for a in args {
            self.declare(a);
        }
        kernel::act(minp_prim(x, args))
    }
}

impl Theory for Sp {
    fn name(&self) -> String {
        "sp".into()
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
        let unknown = || KmtError::UnknownAtom(atom.describe());
        match atom {
            Atom::Infix { lhs, op, rhs } if op == "<" => match rhs {
                AtomArg::Num(n) => Ok(self.test(lhs, Some(*n))),
                AtomArg::Ident(s) if s == "inf" => Ok(self.test(lhs, None)),
                _ => Err(unknown()),
            },
            Atom::Infix { lhs, op, rhs: AtomArg::Call(h, args) } if op == ":=" && h == "minp" => {
                let names: Option<Vec<&str>> = args.iter().map(ident).collect();
                Ok(self.minp(lhs, &names.ok_or_else(unknown)?))
            }
            _ => Err(unknown()),
        }
    }

    fn sub(&self, _eng: &Engine, alpha: &Prim) -> Vec<TermId> {
        let vars = self.vars.read();
        match bound_of(alpha) {
            // Only infinite bounds are reachable from an infinite bound.
            None => vars.iter().map(|v| lt(v, None)).collect(),
            Some(n) => vars.iter().flat_map(|v| (0..=n).map(move |m| lt(v, Some(m)))).collect(),
        }
    }

    fn push_back(&self, _eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        if pi.name(0) != Some(var_of(alpha)) {
            return Ok(vec![kernel::test(alpha.clone())]);
        }
        let srcs = pi.args[1..].iter().map(|a| match a {
            Arg::Name(v) => v.clone(),
            _ => unreachable!("minp arguments are variables"),
        });
        Ok(match bound_of(alpha) {
            None => srcs.map(|v| lt(&v, None)).collect(),
            Some(n) if n <= 1 => vec![],
            Some(n) => srcs.map(|v| lt(&v, Some(n - 1))).collect(),
        })
    }

    fn sat(&self, _eng: &Engine, lits: &[Lit]) -> bool {
        interval(lits).values().all(|(lo, hi)| lo < hi)
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        if owns_test(p) {
            vec![var_of(p).clone()]
        } else {
            p.name(0).cloned().into_iter().collect()
        }
    }

    fn representative_actions(&self, _tests: &BTreeSet<Prim>) -> Vec<Prim> {
        let vars: Vec<Sym> = self.vars.read().iter().cloned().collect();
        let mut out = Vec::new();
        for x in &vars {
            out.push(minp_prim(x, &[]));
            for y in &vars {
                out.push(minp_prim(x, &[y]));
            }
        }
        out
    }

    fn model(&self) -> Option<&dyn StateModel> {
        Some(self)
    }

    fn samples(&self) -> Samples {
        Samples {
            tests: vec![self.test("a", Some(1)), self.test("b", Some(2)), self.test("c", None), self.test("b", Some(0))],
            actions: vec![self.minp("b", &["a", "c"]), self.minp("c", &["b"]), self.minp("a", &[])],
        }
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        for v in ["a", "b", "c"] {
            self.declare(v);
        }
        let m = |x: &str, args: &[&str]| kernel::act(minp_prim(x, args));
        vec![
            AxiomSchema::new("Min-Lt", move |r| {
                let n = r.gen_range(2..5);
                let lhs = kernel::seq(m("b", &["a", "c"]), lt("b", Some(n)));
                let pre = kernel::plus(lt("a", Some(n - 1)), lt("c", Some(n - 1)));
                (lhs, kernel::seq(pre, m("b", &["a", "c"])))
            }),
            AxiomSchema::new("Min-Lt-Inf", move |_| {
                let lhs = kernel::seq(m("b", &["a", "c"]), lt("b", None));
                let pre = kernel::plus(lt("a", None), lt("c", None));
                (lhs, kernel::seq(pre, m("b", &["a", "c"])))
            }),
            AxiomSchema::new("Min-Comm", move |r| {
                let n = r.gen_range(0..4);
                (kernel::seq(m("b", &["a"]), lt("c", Some(n))), kernel::seq(lt("c", Some(n)), m("b", &["a"])))
            }),
        ]
    }
}

impl StateModel for Sp {
    fn pred(&self, alpha: &Prim, trace: &[Entry], _eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        let s = &trace.last().expect("nonempty trace").state;
        below(dist(s, var_of(alpha)), bound_of(alpha))
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        let least = pi.args[1..]
            .iter()
            .filter_map(|a| match a {
                Arg::Name(v) => dist(s, v),
                _ => None,
            })
            .min();
        let mut out = s.clone();
        let v = match least {
            Some(n) => Val::Nat(n.saturating_add(1)),
            None => Val::Inf,
        };
        out.insert(pi.name(0).unwrap().clone(), v);
        out
    }

    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, bound: u64) -> Result<Vec<State>> {
        let mut vars: BTreeSet<Sym> = BTreeSet::new();
        for p in tests.iter().filter(|p| owns_test(p)).chain(actions.iter().filter(|p| owns_action(p))) {
            for a in &p.args {
                if let Arg::Name(v) = a {
                    vars.insert(v.clone());
                }
            }
        }
        let mut values: Vec<Val> = (0..=bound).map(Val::Nat).collect();
        values.push(Val::Inf);
        let choices: Vec<Vec<Val>> = vars.iter().map(|_| values.clone()).collect();
        Ok(product(&choices, STATE_LIMIT)?.into_iter().map(|vals| vars.iter().cloned().zip(vals).collect()).collect())
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let mut s = State::new();
        for (x, (lo, hi)) in interval(lits) {
            if lo >= hi {
                return None;
            }
            s.insert(x, if lo == INF { Val::Inf } else { Val::Nat(lo as u64) });
        }
        Some(s)
    }
}

/// Infinity in the totally ordered encoding of distances.
const INF: u128 = u64::MAX as u128 + 1;

fn key(b: Bound) -> u128 {
    b.map_or(INF, |n| n as u128)
}

/// Per variable: admissible values `lo <= v < hi`, encoded by [`key`].
fn interval(lits: &[Lit]) -> BTreeMap<Sym, (u128, u128)> {
    let mut out: BTreeMap<Sym, (u128, u128)> = BTreeMap::new();
    for (p, pol) in lits.iter().filter(|(p, _)| owns_test(p)) {
        let e = out.entry(var_of(p).clone()).or_insert((0, INF + 1));
        let k = key(bound_of(p));
        if *pol {
            e.1 = e.1.min(k);
        } else {
            e.0 = e.0.max(k);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn minp_pushback() {
        let t = Sp::new();
        let e = Engine::new(Arc::new(Sp::new()));
        let pi = minp_prim("b", &["a", "c"]);
        let got = kernel::plus_all(t.push_back(&e, &pi, &lt_prim("b", Some(3))).unwrap());
        assert_eq!(got, kernel::plus(lt("a", Some(2)), lt("c", Some(2))));
        assert!(t.push_back(&e, &pi, &lt_prim("b", Some(1))).unwrap().is_empty());
        assert_eq!(pi.to_string(), "b:=minp(a,c)");
        assert_eq!(lt("b", None).to_string(), "b<inf");
    }

    #[test]
    fn sat_with_infinity() {
        let t = Sp::new();
        let e = Engine::new(Arc::new(Sp::new()));
        let fin = (lt_prim("a", None), true);
        let inf = (lt_prim("a", None), false);
        assert!(t.sat(&e, std::slice::from_ref(&inf)));
        assert!(!t.sat(&e, &[inf, (lt_prim("a", Some(3)), true)]));
        assert!(t.sat(&e, &[fin.clone(), (lt_prim("a", Some(3)), false)]));
        assert!(!t.sat(&e, &[(lt_prim("a", Some(0)), true)]));
        assert!(!t.sat(&e, &[(lt_prim("a", Some(2)), true), (lt_prim("a", Some(2)), false)]));
    }

    #[test]
    fn witness_respects_literals() {
        let t = Sp::new();
        let s = t.witness(&[(lt_prim("a", None), false), (lt_prim("b", Some(3)), false), (lt_prim("b", Some(5)), true)]).unwrap();
        assert_eq!(dist(&s, "a"), None);
        assert_eq!(dist(&s, "b"), Some(3));
    }
}
