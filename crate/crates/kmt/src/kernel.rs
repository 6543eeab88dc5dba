//! Hash-consed KMT terms.
//!
//! Every term lives in one process-wide store and is addressed by a [`TermId`].
//! Structural equality coincides with id equality: the smart constructors below
//! are the only way to build compound terms, and they canonicalize before
//! interning.

use crate::error::{KmtError, Result};
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// Argument of a theory primitive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arg {
    Nat(u64),
    Inf,
    Name(Sym),
    Term(TermId),
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Nat(n) => write!(f, "{n}"),
            Arg::Inf => f.write_str("inf"),
            Arg::Name(s) => f.write_str(s),
            Arg::Term(t) => write!(f, "{t}"),
        }
    }
}

/// A theory primitive (test or action payload).
///
/// The derived order is the payload part of the global well order on tests:
/// universe level first, then operator, then arguments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prim {
    pub level: u32,
    pub op: Sym,
    pub args: Vec<Arg>,
}

impl Prim {
    pub fn new(level: u32, op: &str, args: Vec<Arg>) -> Prim {
        Prim { level, op: sym(op), args }
    }

    pub fn is(&self, op: &str) -> bool {
        &*self.op == op
    }

    pub fn name(&self, i: usize) -> Option<&Sym> {
        match self.args.get(i) {
            Some(Arg::Name(s)) => Some(s),
            _ => None,
        }
    }

    pub fn nat(&self, i: usize) -> Option<u64> {
        match self.args.get(i) {
            Some(Arg::Nat(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn term(&self, i: usize) -> Option<TermId> {
        match self.args.get(i) {
            Some(Arg::Term(t)) => Some(*t),
            _ => None,
        }
    }
}

pub type PrimPrinter = fn(&Prim, &mut fmt::Formatter<'_>) -> fmt::Result;

static PRINTERS: Lazy<RwLock<HashMap<Sym, PrimPrinter>>> = Lazy::new(Default::default);

/// Installs the concrete syntax used to display primitives with operator `op`.
pub fn register_printer(op: &str, printer: PrimPrinter) {
    PRINTERS.write().insert(sym(op), printer);
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let printer = PRINTERS.read().get(&self.op).copied();
        if let Some(p) = printer {
            return p(self, f);
        }
        write!(f, "{}(", self.op)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Handle into the term store.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

/// Occurrence label of a primitive action; 0 means unlabeled.
pub type Label = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Zero,
    One,
    Test(Prim),
    Not(TermId),
    /// Flattened, deduplicated, sorted by id, at least two summands.
    Plus(Vec<TermId>),
    /// Right associated: the left factor is never a `Seq`.
    Seq(TermId, TermId),
    Star(TermId),
    Act(Prim, Label),
}

struct Node {
    term: Term,
    test: bool,
    /// Every test inside is 1.
    restricted: bool,
}

struct Store {
    nodes: Vec<&'static Node>,
    index: HashMap<&'static Term, TermId>,
}

static STORE: Lazy<RwLock<Store>> = Lazy::new(|| {
    let mut s = Store { nodes: Vec::new(), index: HashMap::new() };
    insert_node(&mut s, Term::Zero, true, false);
    insert_node(&mut s, Term::One, true, true);
    RwLock::new(s)
});

fn insert_node(s: &mut Store, term: Term, test: bool, restricted: bool) -> TermId {
    let node: &'static Node = Box::leak(Box::new(Node { term, test, restricted }));
    let id = TermId(s.nodes.len() as u32);
    s.nodes.push(node);
    s.index.insert(&node.term, id);
    id
}

fn raw(term: Term, test: bool) -> TermId {
    if let Some(id) = STORE.read().index.get(&term) {
        return *id;
    }
    // Children are already interned; read their flags before locking.
    let restricted = match &term {
        Term::Zero | Term::Test(_) | Term::Not(_) => false,
        Term::One | Term::Act(..) => true,
        Term::Plus(xs) => xs.iter().all(|x| is_restricted(*x)),
        Term::Seq(a, b) => is_restricted(*a) && is_restricted(*b),
        Term::Star(a) => is_restricted(*a),
    };
    let mut s = STORE.write();
    if let Some(id) = s.index.get(&term) {
        return *id;
    }
    insert_node(&mut s, term, test, restricted)
}

fn node(id: TermId) -> &'static Node {
    STORE.read().nodes[id.0 as usize]
}

impl TermId {
    pub fn term(self) -> &'static Term {
        &node(self).term
    }

    pub fn is_test(self) -> bool {
        node(self).test
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self == zero()
    }

    pub fn is_one(self) -> bool {
        self == one()
    }
}

pub fn zero() -> TermId {
    TermId(0)
}

pub fn one() -> TermId {
    Lazy::force(&STORE);
    TermId(1)
}

/// Interns `term`, applying the smart-constructor simplifications first.
pub fn intern(term: Term) -> Result<TermId> {
    Ok(match term {
        Term::Zero => zero(),
        Term::One => one(),
        Term::Test(p) => test(p),
        Term::Act(p, l) => act_labeled(p, l),
        Term::Not(a) => not(a)?,
        Term::Plus(xs) => plus_all(xs),
        Term::Seq(a, b) => seq(a, b),
        Term::Star(a) => star(a),
    })
}

pub fn test(p: Prim) -> TermId {
    raw(Term::Test(p), true)
}

pub fn act(p: Prim) -> TermId {
    raw(Term::Act(p, 0), false)
}

pub fn act_labeled(p: Prim, label: Label) -> TermId {
    raw(Term::Act(p, label), false)
}

pub fn not(a: TermId) -> Result<TermId> {
    if !a.is_test() {
        return Err(KmtError::NegatedAction(a.to_string()));
    }
    Ok(match a.term() {
        Term::Not(b) => *b,
        _ => raw(Term::Not(a), true),
    })
}

/// Negation of a term already known to be a test.
pub fn neg(a: TermId) -> TermId {
    not(a).expect("neg on a test")
}

pub fn plus(a: TermId, b: TermId) -> TermId {
    plus_all([a, b])
}

pub fn plus_all(xs: impl IntoIterator<Item = TermId>) -> TermId {
    let mut set = BTreeSet::new();
    for x in xs {
        match x.term() {
            Term::Zero => {}
            Term::Plus(ys) => set.extend(ys.iter().copied()),
            _ => {
                set.insert(x);
            }
        }
    }
    match set.len() {
        0 => zero(),
        1 => *set.iter().next().unwrap(),
        _ => {
            let test = set.iter().all(|x| x.is_test());
            raw(Term::Plus(set.into_iter().collect()), test)
        }
    }
}

pub fn seq(a: TermId, b: TermId) -> TermId {
    if a.is_zero() || b.is_zero() {
        return zero();
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    if let Term::Seq(a1, a2) = a.term() {
        return seq(*a1, seq(*a2, b));
    }
    raw(Term::Seq(a, b), a.is_test() && b.is_test())
}

pub fn seq_all(xs: impl IntoIterator<Item = TermId>) -> TermId {
    let xs: Vec<TermId> = xs.into_iter().collect();
    xs.into_iter().rev().fold(one(), |acc, x| seq(x, acc))
}

pub fn star(a: TermId) -> TermId {
    if a.is_zero() || a.is_one() {
        return one();
    }
    raw(Term::Star(a), false)
}

static NNF: Lazy<RwLock<HashMap<TermId, TermId>>> = Lazy::new(Default::default);

/// Negation normal form: negations end up only on primitive tests.
/// Non-tests are returned unchanged.
pub fn nnf(a: TermId) -> TermId {
    if !a.is_test() {
        return a;
    }
    if let Some(r) = NNF.read().get(&a) {
        return *r;
    }
    let r = match a.term() {
        Term::Zero | Term::One | Term::Test(_) => a,
        Term::Plus(xs) => plus_all(xs.iter().map(|x| nnf(*x))),
        Term::Seq(x, y) => seq(nnf(*x), nnf(*y)),
        Term::Not(b) => match b.term() {
            Term::Zero => one(),
            Term::One => zero(),
            Term::Test(_) => a,
            Term::Not(c) => nnf(*c),
            Term::Plus(xs) => seq_all(xs.iter().map(|x| nnf(neg(*x)))),
            Term::Seq(x, y) => plus(nnf(neg(*x)), nnf(neg(*y))),
            Term::Star(_) | Term::Act(..) => unreachable!("negated non-test"),
        },
        Term::Star(_) | Term::Act(..) => unreachable!("test flag on action"),
    };
    NNF.write().insert(a, r);
    r
}

/// True when every test inside `m` is 1.
pub fn is_restricted(m: TermId) -> bool {
    node(m).restricted
}

/// Number of constructors in `t` (primitives count as one), saturating.
pub fn size(t: TermId) -> usize {
    usize::try_from(tree_size(t)).unwrap_or(usize::MAX)
}

/// Number of constructors in the tree of `t`, computed over the shared term
/// graph and saturating at `u64::MAX`. Hash-consing lets a term with a small
/// graph have an enormous tree.
pub fn tree_size(t: TermId) -> u64 {
    fn go(t: TermId, memo: &mut HashMap<TermId, u64>) -> u64 {
        if let Some(n) = memo.get(&t) {
            return *n;
        }
        let n = match t.term() {
            Term::Zero | Term::One | Term::Test(_) | Term::Act(..) => 1,
            Term::Not(a) | Term::Star(a) => go(*a, memo).saturating_add(1),
            Term::Seq(a, b) => go(*a, memo).saturating_add(go(*b, memo)).saturating_add(1),
            Term::Plus(xs) => xs.iter().fold(xs.len() as u64 - 1, |acc, x| acc.saturating_add(go(*x, memo))),
        };
        memo.insert(t, n);
        n
    }
    go(t, &mut HashMap::new())
}

/// Calls `f` once on every distinct subterm of `t`.
fn each_node(t: TermId, f: &mut dyn FnMut(&Term)) {
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        if !seen.insert(t) {
            continue;
        }
        let term = t.term();
        f(term);
        match term {
            Term::Not(a) | Term::Star(a) => stack.push(*a),
            Term::Seq(a, b) => stack.extend([*a, *b]),
            Term::Plus(xs) => stack.extend(xs.iter().copied()),
            _ => {}
        }
    }
}

/// Primitive tests occurring syntactically in `t`, not descending into primitive arguments.
pub fn prim_tests(t: TermId, out: &mut BTreeSet<Prim>) {
    each_node(t, &mut |term| {
        if let Term::Test(p) = term {
            out.insert(p.clone());
        }
    });
}

/// Primitive actions occurring in `t`, labels erased.
pub fn prim_actions(t: TermId, out: &mut BTreeSet<Prim>) {
    each_node(t, &mut |term| {
        if let Term::Act(p, _) = term {
            out.insert(p.clone());
        }
    });
}

/// Removes all occurrence labels.
pub fn unlabel(t: TermId) -> TermId {
    match t.term() {
        Term::Zero | Term::One | Term::Test(_) | Term::Not(_) => t,
        Term::Act(_, 0) => t,
        Term::Act(p, _) => act(p.clone()),
        Term::Star(a) => star(unlabel(*a)),
        Term::Seq(a, b) => seq(unlabel(*a), unlabel(*b)),
        Term::Plus(xs) => plus_all(xs.iter().map(|x| unlabel(*x))),
    }
}

pub const PREC_PLUS: u8 = 0;
pub const PREC_SEQ: u8 = 1;
pub const PREC_STAR: u8 = 2;
pub const PREC_NOT: u8 = 3;

/// Displays `t` as an operand of an operator with precedence `ctx`.
pub fn render(t: TermId, ctx: u8) -> String {
    struct At(TermId, u8);
    impl fmt::Display for At {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_term(self.0, self.1, f)
        }
    }
    At(t, ctx).to_string()
}

fn prec(t: TermId) -> u8 {
    match t.term() {
        Term::Plus(_) => PREC_PLUS,
        Term::Seq(..) => PREC_SEQ,
        Term::Star(_) => PREC_STAR,
        _ => PREC_NOT,
    }
}

fn write_term(t: TermId, ctx: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrap = prec(t) < ctx;
    if wrap {
        f.write_str("(")?;
    }
    match t.term() {
        Term::Zero => f.write_str("false")?,
        Term::One => f.write_str("true")?,
        Term::Test(p) | Term::Act(p, _) => write!(f, "{p}")?,
        Term::Not(a) => {
            f.write_str("~")?;
            write_term(*a, PREC_NOT, f)?;
        }
        Term::Star(a) => {
            write_term(*a, PREC_NOT, f)?;
            f.write_str("*")?;
        }
        Term::Seq(a, b) => {
            write_term(*a, PREC_STAR, f)?;
            f.write_str("; ")?;
            write_term(*b, PREC_SEQ, f)?;
        }
        Term::Plus(xs) => {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                write_term(*x, PREC_SEQ, f)?;
            }
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(*self, PREC_PLUS, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(x: &str, n: u64) -> TermId {
        test(Prim::new(0, "kgt", vec![Arg::Name(sym(x)), Arg::Nat(n)]))
    }

    fn inc(x: &str) -> TermId {
        act(Prim::new(0, "kinc", vec![Arg::Name(sym(x))]))
    }

    #[test]
    fn plus_zero_is_identity() {
        let p = inc("x");
        assert_eq!(intern(Term::Plus(vec![p, zero()])).unwrap(), p);
    }

    #[test]
    fn star_zero_and_star_one_are_one() {
        assert_eq!(intern(Term::Star(zero())).unwrap(), one());
        assert_eq!(star(one()), one());
    }

    #[test]
    fn seq_units_and_annihilators() {
        let p = inc("x");
        assert_eq!(intern(Term::Seq(one(), p)).unwrap(), p);
        assert_eq!(seq(p, one()), p);
        assert_eq!(seq(zero(), p), zero());
        assert_eq!(seq(p, zero()), zero());
    }

    #[test]
    fn plus_is_a_set() {
        let (a, b, c) = (gt("x", 1), gt("x", 2), inc("y"));
        assert_eq!(plus(a, a), a);
        assert_eq!(plus(plus(a, b), c), plus(c, plus(b, a)));
        assert_eq!(plus_all([a, b, a, zero()]), plus(b, a));
    }

    #[test]
    fn seq_is_right_associated() {
        let (a, b, c) = (inc("x"), inc("y"), inc("z"));
        let l = seq(seq(a, b), c);
        let r = seq(a, seq(b, c));
        assert_eq!(l, r);
        match l.term() {
            Term::Seq(x, _) => assert_eq!(*x, a),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn double_negation_cancels() {
        let a = gt("x", 1);
        assert_eq!(not(not(a).unwrap()).unwrap(), a);
    }

    #[test]
    fn negating_an_action_is_rejected() {
        assert!(matches!(not(inc("x")), Err(KmtError::NegatedAction(_))));
        assert!(intern(Term::Not(seq(gt("x", 1), inc("x")))).is_err());
    }

    #[test]
    fn test_classification() {
        let a = gt("x", 1);
        assert!(plus(neg(a), one()).is_test());
        assert!(!inc("x").is_test());
        assert!(!seq(a, inc("x")).is_test());
        assert!(!star(a).is_test());
    }

    #[test]
    fn nnf_examples() {
        let (a, b) = (gt("x", 1), gt("y", 2));
        assert_eq!(nnf(neg(zero())), one());
        assert_eq!(nnf(neg(one())), zero());
        assert_eq!(nnf(neg(seq(a, b))), plus(neg(a), neg(b)));
        assert_eq!(nnf(neg(plus(a, b))), seq(neg(a), neg(b)));
        assert_eq!(nnf(neg(neg(a))), a);
    }

    #[test]
    fn nnf_pushes_through_nested_structure() {
        let (a, b, c) = (gt("x", 1), gt("y", 2), gt("z", 3));
        let t = neg(plus(seq(a, neg(b)), neg(c)));
        // ~(a;~b + ~c) = (~a + b); c
        assert_eq!(nnf(t), seq(plus(neg(a), b), c));
        assert_eq!(nnf(nnf(t)), nnf(t));
    }

    #[test]
    fn restricted_actions() {
        assert!(is_restricted(star(seq(inc("x"), inc("y")))));
        assert!(!is_restricted(seq(gt("x", 1), inc("x"))));
        assert!(is_restricted(one()));
    }

    #[test]
    fn display_uses_cli_precedence() {
        let (a, b, p) = (gt("x", 1), gt("y", 2), inc("x"));
        let t = seq(plus(a, b), star(seq(p, p)));
        let s = t.to_string();
        assert!(s.contains("*"));
        assert!(s.starts_with('('));
        assert_eq!(neg(plus(a, b)).to_string().chars().next(), Some('~'));
        assert_eq!(zero().to_string(), "false");
        assert_eq!(one().to_string(), "true");
    }

    #[test]
    fn collects_primitives() {
        let t = seq(gt("x", 1), star(plus(inc("x"), neg(gt("y", 0)))));
        let mut ts = BTreeSet::new();
        prim_tests(t, &mut ts);
        let mut acts = BTreeSet::new();
        prim_actions(t, &mut acts);
        assert_eq!(ts.len(), 2);
        assert_eq!(acts.len(), 1);
    }

    #[test]
    fn labels_distinguish_occurrences() {
        let p = Prim::new(0, "kinc", vec![Arg::Name(sym("x"))]);
        let a1 = act_labeled(p.clone(), 1);
        let a2 = act_labeled(p.clone(), 2);
        assert_ne!(a1, a2);
        assert_eq!(unlabel(seq(a1, a2)), seq(act(p.clone()), act(p)));
    }
}
