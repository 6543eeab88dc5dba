//! Packet fields over finite value universes with field tests and assignment.
//!
//! The universe of each field is the set of values mentioned for it in the
//! query, so parse every term before building an engine.

use super::{name_arg, product, STATE_LIMIT};
use crate::error::{KmtError, Result};
use crate::kernel::{self, register_printer, sym, Prim, Sym, TermId};
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
        register_printer("feq", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}={}", p.args[0], p.args[1]));
        register_printer("mod", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}<-{}", p.args[0], p.args[1]));
    });
}

fn owns_test(p: &Prim) -> bool {
    p.is("feq")
}

fn owns_action(p: &Prim) -> bool {
    p.is("mod")
}

fn field(p: &Prim) -> &Sym {
    p.name(0).expect("field")
}

fn val(p: &Prim) -> &Sym {
    p.name(1).expect("value")
}

pub struct NetKat {
    universe: RwLock<BTreeMap<Sym, BTreeSet<Sym>>>,
}

impl Default for NetKat {
    fn default() -> Self {
        NetKat::new()
    }
}

impl NetKat {
    pub fn new() -> NetKat {
        init_printers();
        NetKat { universe: RwLock::new(BTreeMap::new()) }
    }

    /// Adds values to a field's universe.
    pub fn declare(&self, f: &str, values: &[&str]) {
        let mut u = self.universe.write();
        let e = u.entry(sym(f)).or_default();
        for v in values {
            e.insert(sym(v));
        }
    }

    pub fn values(&self, f: &str) -> BTreeSet<Sym> {
        self.universe.read().get(f).cloned().unwrap_or_default()
    }

    pub fn test(&self, f: &str, v: &str) -> TermId {
        self.declare(f, &[v]);
        kernel::test(Prim::new(0, "feq", vec![name_arg(f), name_arg(v)]))
    }

    pub fn modify(&self, f: &str, v: &str) -> TermId {
        self.declare(f, &[v]);
        kernel::act(mod_prim(f, v))
    }

    fn default_value(&self, f: &str) -> Option<Sym> {
        self.universe.read().get(f).and_then(|vs| vs.iter().next().cloned())
    }

    fn current(&self, s: &State, f: &str) -> Option<Sym> {
        match s.get(f) {
            Some(Val::Sym(v)) => Some(v.clone()),
            _ => self.default_value(f),
        }
    }
}

fn mod_prim(f: &str, v: &str) -> Prim {
    Prim::new(0, "mod", vec![name_arg(f), name_arg(v)])
}

fn value_text(arg: &AtomArg) -> Option<String> {
    match arg {
        AtomArg::Ident(s) => Some(s.clone()),
        AtomArg::Num(n) => Some(n.to_string()),
        _ => None,
    }
}

impl Theory for NetKat {
    fn name(&self) -> String {
        "netkat".into()
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
            Atom::Infix { lhs, op, rhs } if op == "=" || op == "==" => {
                Ok(self.test(lhs, &value_text(rhs).ok_or_else(unknown)?))
            }
            Atom::Infix { lhs, op, rhs } if op == "<-" || op == ":=" => {
                Ok(self.modify(lhs, &value_text(rhs).ok_or_else(unknown)?))
            }
            _ => Err(unknown()),
        }
    }

    fn sub(&self, _eng: &Engine, _alpha: &Prim) -> Vec<TermId> {
        Vec::new()
    }

    fn push_back(&self, _eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        if field(pi) != field(alpha) {
            return Ok(vec![kernel::test(alpha.clone())]);
        }
        Ok(if val(pi) == val(alpha) { vec![kernel::one()] } else { vec![] })
    }

    fn sat(&self, _eng: &Engine, lits: &[Lit]) -> bool {
        let mut pos: BTreeMap<&Sym, &Sym> = BTreeMap::new();
        let mut neg: BTreeMap<&Sym, BTreeSet<&Sym>> = BTreeMap::new();
        for (p, pol) in lits {
            if *pol {
                if pos.insert(field(p), val(p)).is_some_and(|old| old != val(p)) {
                    return false;
                }
            } else {
                neg.entry(field(p)).or_default().insert(val(p));
            }
        }
        let u = self.universe.read();
        neg.iter().all(|(f, vs)| {
            if let Some(v) = pos.get(f) {
                return !vs.contains(v);
            }
            // Every value of the field excluded.
            u.get(*f).is_none_or(|all| !all.iter().all(|v| vs.contains(v)))
        })
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        vec![field(p).clone()]
    }

    fn representative_actions(&self, _tests: &BTreeSet<Prim>) -> Vec<Prim> {
        let u = self.universe.read();
        u.iter().flat_map(|(f, vs)| vs.iter().map(move |v| mod_prim(f, v))).collect()
    }

    fn model(&self) -> Option<&dyn StateModel> {
        Some(self)
    }

    fn samples(&self) -> Samples {
        self.declare("f", &["0", "1"]);
        self.declare("g", &["0", "1"]);
        Samples {
            tests: vec![self.test("f", "0"), self.test("f", "1"), self.test("g", "1")],
            actions: vec![self.modify("f", "0"), self.modify("f", "1"), self.modify("g", "0")],
        }
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        self.declare("f", &["0", "1"]);
        self.declare("g", &["0", "1"]);
        let t = |f: &str, v: &str| kernel::test(Prim::new(0, "feq", vec![name_arg(f), name_arg(v)]));
        let m = |f: &str, v: &str| kernel::act(mod_prim(f, v));
        let v = |r: &mut dyn rand::RngCore| if r.gen_bool(0.5) { "0" } else { "1" };
        vec![
            AxiomSchema::new("PA-Mod-Comm", move |r| {
                let (a, b) = (v(r), v(r));
                (kernel::seq(m("f", a), t("g", b)), kernel::seq(t("g", b), m("f", a)))
            }),
            AxiomSchema::new("PA-Mod-Filter", move |r| {
                let a = v(r);
                (kernel::seq(m("f", a), t("f", a)), m("f", a))
            }),
            AxiomSchema::new("PA-Contra", move |r| {
                let a = v(r);
                let b = if a == "0" { "1" } else { "0" };
                (kernel::seq(t("f", a), t("f", b)), kernel::zero())
            }),
            AxiomSchema::new("PA-Match-All", move |_| (kernel::plus(t("f", "0"), t("f", "1")), kernel::one())),
        ]
    }
}

impl StateModel for NetKat {
    fn pred(&self, alpha: &Prim, trace: &[Entry], _eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        let s = &trace.last().expect("nonempty trace").state;
        self.current(s, field(alpha)).as_ref() == Some(val(alpha))
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        let mut out = s.clone();
        out.insert(field(pi).clone(), Val::Sym(val(pi).clone()));
        out
    }

    fn states(&self, _tests: &BTreeSet<Prim>, _actions: &BTreeSet<Prim>, _bound: u64) -> Result<Vec<State>> {
        let u = self.universe.read().clone();
        let choices: Vec<Vec<Sym>> = u.values().map(|vs| vs.iter().cloned().collect()).collect();
        Ok(product(&choices, STATE_LIMIT)?
            .into_iter()
            .map(|vals| u.keys().cloned().zip(vals.into_iter().map(Val::Sym)).collect())
            .collect())
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let mut s = State::new();
        let u = self.universe.read();
        let mut excluded: BTreeMap<Sym, BTreeSet<Sym>> = BTreeMap::new();
        for (p, pol) in lits {
            if *pol {
                s.insert(field(p).clone(), Val::Sym(val(p).clone()));
            } else {
                excluded.entry(field(p).clone()).or_default().insert(val(p).clone());
            }
        }
        for (f, ex) in excluded {
            if s.contains_key(&f) {
                continue;
            }
            let v = u.get(&f)?.iter().find(|v| !ex.contains(*v))?.clone();
            s.insert(f, Val::Sym(v));
        }
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn universe_drives_sat() {
        let n = Arc::new(NetKat::new());
        let a = n.test("f", "0");
        let b = n.test("f", "1");
        let e = Engine::new(n.clone());
        assert!(!e.satisfiable(kernel::seq(kernel::neg(a), kernel::neg(b))));
        assert!(e.satisfiable(kernel::neg(a)));
        assert!(!e.satisfiable(kernel::seq(a, b)));
        assert_eq!(a.to_string(), "f=0");
        assert_eq!(n.modify("f", "1").to_string(), "f<-1");
    }
}
