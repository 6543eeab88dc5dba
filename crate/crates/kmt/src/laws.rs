//! The generic equational laws every KMT satisfies, instantiated over a
//! theory's sample primitives: Kleene algebra, Boolean algebra, and the
//! derived consequences used by normalization.
//!
//! Quasi-equations (the least-fixpoint laws and the consequences with a
//! hypothesis) are instantiated so that the hypothesis holds by
//! construction; the hypothesis is still returned so callers can check it.

use crate::error::Result;
use crate::gen::{random_action, random_term, random_test};
use crate::kernel::{self, plus, seq, seq_all, star, Term, TermId};
use crate::theory::{Engine, Samples};
use rand::{Rng, RngCore};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    KleeneAlgebra,
    BooleanAlgebra,
    Consequence,
}

/// One instantiation: every `premises` pair and `(lhs, rhs)` must be equivalent.
#[derive(Clone, Debug)]
pub struct Instance {
    pub premises: Vec<(TermId, TermId)>,
    pub lhs: TermId,
    pub rhs: TermId,
}

impl Instance {
    fn eq(lhs: TermId, rhs: TermId) -> Instance {
        Instance { premises: vec![], lhs, rhs }
    }
}

type Gen = fn(&Engine, &mut dyn RngCore, &Samples) -> Result<Instance>;

pub struct Law {
    pub name: &'static str,
    pub group: Group,
    pub instance: Gen,
}

/// `p <= q` as the equation `p + q == q`.
fn leq(p: TermId, q: TermId) -> (TermId, TermId) {
    (kernel::plus(p, q), q)
}

const DEPTH: u32 = 2;

fn t(r: &mut dyn RngCore, s: &Samples) -> TermId {
    random_term(&mut &mut *r, s, DEPTH)
}

fn b(r: &mut dyn RngCore, s: &Samples) -> TermId {
    random_test(&mut &mut *r, s, DEPTH)
}

fn ka(name: &'static str, instance: Gen) -> Law {
    Law { name, group: Group::KleeneAlgebra, instance }
}

fn ba(name: &'static str, instance: Gen) -> Law {
    Law { name, group: Group::BooleanAlgebra, instance }
}

fn cons(name: &'static str, instance: Gen) -> Law {
    Law { name, group: Group::Consequence, instance }
}

/// Primitive actions of a short random sequence and the test they push `a` back to.
fn pushed_sequence(eng: &Engine, r: &mut dyn RngCore, s: &Samples, a: TermId) -> Result<(TermId, TermId)> {
    let n = r.gen_range(1..=2);
    let acts: Vec<TermId> = (0..n).map(|_| s.actions[r.gen_range(0..s.actions.len())]).collect();
    let mut pushed = a;
    for act in acts.iter().rev() {
        let Term::Act(pi, _) = act.term() else { unreachable!("sample actions are primitive") };
        pushed = eng.push_test(pi, pushed)?;
    }
    Ok((seq_all(acts), pushed))
}

/// A restricted action `p`, a test `a`, and `q`, `r` with `p;a == a;q + r`.
fn star_hypothesis(eng: &Engine, rng: &mut dyn RngCore, s: &Samples) -> Result<(TermId, TermId, TermId, TermId)> {
    let p = random_action(&mut &mut *rng, s, DEPTH);
    let a = b(rng, s);
    // p;a == x, and x == a;x + ~a;x.
    let x = eng.pb_dot(p, a)?.to_term();
    Ok((p, a, x, seq(kernel::neg(a), x)))
}

/// The 15 Kleene algebra laws, the 6 Boolean algebra laws, and the 5
/// consequences, in table order.
pub fn all() -> Vec<Law> {
    vec![
        ka("KA-Plus-Assoc", |_, r, s| {
            let (p, q, x) = (t(r, s), t(r, s), t(r, s));
            Ok(Instance::eq(plus(p, plus(q, x)), plus(plus(p, q), x)))
        }),
        ka("KA-Plus-Comm", |_, r, s| {
            let (p, q) = (t(r, s), t(r, s));
            Ok(Instance::eq(plus(p, q), plus(q, p)))
        }),
        ka("KA-Plus-Zero", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(plus(p, kernel::zero()), p))
        }),
        ka("KA-Plus-Idem", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(plus(p, p), p))
        }),
        ka("KA-Seq-Assoc", |_, r, s| {
            let (p, q, x) = (t(r, s), t(r, s), t(r, s));
            Ok(Instance::eq(seq(p, seq(q, x)), seq(seq(p, q), x)))
        }),
        ka("KA-Seq-One", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(seq(kernel::one(), p), p))
        }),
        ka("KA-One-Seq", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(seq(p, kernel::one()), p))
        }),
        ka("KA-Dist-L", |_, r, s| {
            let (p, q, x) = (t(r, s), t(r, s), t(r, s));
            Ok(Instance::eq(seq(p, plus(q, x)), plus(seq(p, q), seq(p, x))))
        }),
        ka("KA-Dist-R", |_, r, s| {
            let (p, q, x) = (t(r, s), t(r, s), t(r, s));
            Ok(Instance::eq(seq(plus(p, q), x), plus(seq(p, x), seq(q, x))))
        }),
        ka("KA-Zero-Seq", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(seq(kernel::zero(), p), kernel::zero()))
        }),
        ka("KA-Seq-Zero", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(seq(p, kernel::zero()), kernel::zero()))
        }),
        ka("KA-Unroll-L", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(plus(kernel::one(), seq(p, star(p))), star(p)))
        }),
        ka("KA-Unroll-R", |_, r, s| {
            let p = t(r, s);
            Ok(Instance::eq(plus(kernel::one(), seq(star(p), p)), star(p)))
        }),
        ka("KA-LFP-L", |_, r, s| {
            // x = p*;(q + w) is a prefixed point of q + p;x.
            let (p, q, w) = (t(r, s), t(r, s), t(r, s));
            let x = seq(star(p), plus(q, w));
            let (l, rr) = leq(seq(star(p), q), x);
            Ok(Instance { premises: vec![leq(plus(q, seq(p, x)), x)], lhs: l, rhs: rr })
        }),
        ka("KA-LFP-R", |_, r, s| {
            // q = (p + w);x* is a prefixed point of p + q;x.
            let (p, x, w) = (t(r, s), t(r, s), t(r, s));
            let q = seq(plus(p, w), star(x));
            let (l, rr) = leq(seq(p, star(x)), q);
            Ok(Instance { premises: vec![leq(plus(p, seq(q, x)), q)], lhs: l, rhs: rr })
        }),
        ba("BA-Plus-Dist", |_, r, s| {
            let (a, bb, c) = (b(r, s), b(r, s), b(r, s));
            Ok(Instance::eq(plus(a, seq(bb, c)), seq(plus(a, bb), plus(a, c))))
        }),
        ba("BA-Plus-One", |_, r, s| {
            let a = b(r, s);
            Ok(Instance::eq(plus(a, kernel::one()), kernel::one()))
        }),
        ba("BA-Excl-Mid", |_, r, s| {
            let a = b(r, s);
            Ok(Instance::eq(plus(a, kernel::neg(a)), kernel::one()))
        }),
        ba("BA-Seq-Comm", |_, r, s| {
            let (a, bb) = (b(r, s), b(r, s));
            Ok(Instance::eq(seq(a, bb), seq(bb, a)))
        }),
        ba("BA-Contra", |_, r, s| {
            let a = b(r, s);
            Ok(Instance::eq(seq(a, kernel::neg(a)), kernel::zero()))
        }),
        ba("BA-Seq-Idem", |_, r, s| {
            let a = b(r, s);
            Ok(Instance::eq(seq(a, a), a))
        }),
        cons("Pushback-Neg", |eng, r, s| {
            let a = b(r, s);
            let (p, pushed) = pushed_sequence(eng, r, s, a)?;
            Ok(Instance {
                premises: vec![(seq(p, a), seq(pushed, p))],
                lhs: seq(p, kernel::neg(a)),
                rhs: seq(kernel::neg(pushed), p),
            })
        }),
        cons("Sliding", |_, r, s| {
            let (p, q) = (t(r, s), t(r, s));
            Ok(Instance::eq(seq(p, star(seq(q, p))), seq(star(seq(p, q)), p)))
        }),
        cons("Denesting", |_, r, s| {
            let (p, q) = (t(r, s), t(r, s));
            Ok(Instance::eq(star(plus(p, q)), seq(star(q), star(seq(p, star(q))))))
        }),
        cons("Star-Inv", |eng, r, s| {
            let (p, a, q, w) = star_hypothesis(eng, r, s)?;
            Ok(Instance {
                premises: vec![(seq(p, a), plus(seq(a, q), w))],
                lhs: seq(star(p), a),
                rhs: seq(plus(a, seq(star(p), w)), star(q)),
            })
        }),
        cons("Star-Expand", |eng, r, s| {
            let (p, a, q, w) = star_hypothesis(eng, r, s)?;
            let pa = seq(p, a);
            Ok(Instance {
                premises: vec![(pa, plus(seq(a, q), w))],
                lhs: seq(pa, star(pa)),
                rhs: seq(plus(seq(a, q), w), star(plus(q, w))),
            })
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theories;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_sizes() {
        let laws = all();
        let count = |g| laws.iter().filter(|l| l.group == g).count();
        assert_eq!(count(Group::KleeneAlgebra), 15);
        assert_eq!(count(Group::BooleanAlgebra), 6);
        assert_eq!(count(Group::Consequence), 5);
    }

    #[test]
    fn boolean_instances_are_tests() {
        let th = theories::by_name("incnat").unwrap();
        let s = th.samples();
        let eng = Engine::new(th);
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for law in all().iter().filter(|l| l.group == Group::BooleanAlgebra) {
            let i = (law.instance)(&eng, &mut r, &s).unwrap();
            assert!(i.lhs.is_test() && i.rhs.is_test(), "{}", law.name);
        }
    }
}
