//! Boolean variables with set and unset.

use super::{ident, name_arg, product, STATE_LIMIT};
use crate::error::{KmtError, Result};
use crate::kernel::{self, register_printer, Prim, Sym, TermId};
use crate::oracle::{Entry, State, Val};
use crate::theory::{Atom, AtomArg, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use rand::Rng;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Once;

fn init_printers() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        register_printer("bit", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}=true", p.args[0]));
    });
}

pub fn bit_prim(b: &str) -> Prim {
    init_printers();
    Prim::new(0, "bit", vec![name_arg(b)])
}

/// The test `b=true`.
pub fn bit(b: &str) -> TermId {
    kernel::test(bit_prim(b))
}

pub fn set_prim(b: &str) -> Prim {
    Prim::new(0, "set", vec![name_arg(b)])
}

pub fn set(b: &str) -> TermId {
    kernel::act(set_prim(b))
}

pub fn unset_prim(b: &str) -> Prim {
    Prim::new(0, "unset", vec![name_arg(b)])
}

pub fn unset(b: &str) -> TermId {
    kernel::act(unset_prim(b))
}

fn owns_test(p: &Prim) -> bool {
    p.is("bit")
}

fn owns_action(p: &Prim) -> bool {
    p.is("set") || p.is("unset")
}

fn value(s: &State, b: &str) -> bool {
    matches!(s.get(b), Some(Val::Bool(true)))
}

#[derive(Default)]
pub struct BitVec {
    model: BitVecModel,
}

impl BitVec {
    pub fn new() -> BitVec {
        init_printers();
        BitVec::default()
    }
}

impl Theory for BitVec {
    fn name(&self) -> String {
        "bitvec".into()
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
            Atom::Call(h, args) if (h == "set" || h == "unset") && args.len() == 1 => {
                let b = ident(&args[0]).ok_or_else(unknown)?;
                Ok(if h == "set" { set(b) } else { unset(b) })
            }
            Atom::Infix { lhs, op, rhs: AtomArg::Ident(v) } if op == "=" || op == "==" => match v.as_str() {
                "true" => Ok(bit(lhs)),
                "false" => Ok(kernel::neg(bit(lhs))),
                _ => Err(unknown()),
            },
            Atom::Infix { lhs, op, rhs: AtomArg::Ident(v) } if op == ":=" => match v.as_str() {
                "true" => Ok(set(lhs)),
                "false" => Ok(unset(lhs)),
                _ => Err(unknown()),
            },
            _ => Err(unknown()),
        }
    }

    fn sub(&self, _eng: &Engine, _alpha: &Prim) -> Vec<TermId> {
        Vec::new()
    }

    fn push_back(&self, _eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        if pi.name(0) != alpha.name(0) {
            return Ok(vec![kernel::test(alpha.clone())]);
        }
        Ok(if pi.is("set") { vec![kernel::one()] } else { vec![] })
    }

    fn sat(&self, _eng: &Engine, _lits: &[Lit]) -> bool {
        // Literals over distinct bits are independent and the engine already
        // rejects a bit with both polarities.
        true
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        p.name(0).cloned().into_iter().collect()
    }

    fn representative_actions(&self, tests: &BTreeSet<Prim>) -> Vec<Prim> {
        let bits: BTreeSet<Sym> = tests.iter().filter(|p| owns_test(p)).filter_map(|p| p.name(0).cloned()).collect();
        let mut out = vec![set_prim(super::incnat::IDLE_VAR)];
        for b in bits {
            out.push(set_prim(&b));
            out.push(unset_prim(&b));
        }
        out
    }

    fn model(&self) -> Option<&dyn StateModel> {
        Some(&self.model)
    }

    fn samples(&self) -> Samples {
        Samples {
            tests: vec![bit("a"), bit("b"), bit("c")],
            actions: vec![set("a"), unset("a"), set("b"), unset("c")],
        }
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        let var = |r: &mut dyn rand::RngCore| ["a", "b", "c"][r.gen_range(0..3)];
        vec![
            AxiomSchema::new("Set-Test-True-True", move |r| {
                let b = var(r);
                (kernel::seq(set(b), bit(b)), set(b))
            }),
            AxiomSchema::new("Set-Test-False-True", move |r| {
                let b = var(r);
                (kernel::seq(unset(b), bit(b)), kernel::zero())
            }),
            AxiomSchema::new("Set-Comm", move |r| {
                let (b, c) = (var(r), var(r));
                let c = if b == c { "d" } else { c };
                (kernel::seq(set(b), bit(c)), kernel::seq(bit(c), set(b)))
            }),
        ]
    }
}

#[derive(Default)]
pub struct BitVecModel;

impl StateModel for BitVecModel {
    fn pred(&self, alpha: &Prim, trace: &[Entry], _eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        value(&trace.last().expect("nonempty trace").state, alpha.name(0).unwrap())
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        let mut out = s.clone();
        out.insert(pi.name(0).unwrap().clone(), Val::Bool(pi.is("set")));
        out
    }

    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, _bound: u64) -> Result<Vec<State>> {
        let vars: BTreeSet<Sym> = tests
            .iter()
            .filter(|p| owns_test(p))
            .chain(actions.iter().filter(|p| owns_action(p)))
            .filter_map(|p| p.name(0).cloned())
            .collect();
        let choices: Vec<Vec<bool>> = vars.iter().map(|_| vec![false, true]).collect();
        Ok(product(&choices, STATE_LIMIT)?
            .into_iter()
            .map(|vals| vars.iter().cloned().zip(vals.into_iter().map(Val::Bool)).collect())
            .collect())
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let mut s = State::new();
        for (p, pol) in lits.iter().filter(|(p, _)| owns_test(p)) {
            let b = p.name(0).unwrap().clone();
            if let Some(Val::Bool(old)) = s.get(&b) {
                if *old != *pol {
                    return None;
                }
            }
            s.insert(b, Val::Bool(*pol));
        }
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn pushback_and_display() {
        let t = BitVec::new();
        let e = Engine::new(Arc::new(BitVec::new()));
        assert_eq!(t.push_back(&e, &set_prim("a"), &bit_prim("a")).unwrap(), vec![kernel::one()]);
        assert!(t.push_back(&e, &unset_prim("a"), &bit_prim("a")).unwrap().is_empty());
        assert_eq!(t.push_back(&e, &set_prim("b"), &bit_prim("a")).unwrap(), vec![bit("a")]);
        assert_eq!(bit("a").to_string(), "a=true");
        assert_eq!(set("a").to_string(), "set(a)");
    }

    #[test]
    fn states_enumerate_all_assignments() {
        let m = BitVecModel;
        let tests: BTreeSet<Prim> = [bit_prim("a"), bit_prim("b")].into_iter().collect();
        assert_eq!(m.states(&tests, &BTreeSet::new(), 8).unwrap().len(), 4);
    }
}
