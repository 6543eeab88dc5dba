//! Pushback normalization: every term is rewritten to a sum of tests each
//! followed by a restricted action.

use crate::error::{KmtError, Result};
use crate::kernel::{self, nnf, render, Term, TermId, PREC_STAR};
use crate::ordering::{seq_factors, split_on};
use crate::theory::Engine;
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::fmt;
use std::sync::atomic::Ordering;

/// A finite set of `(test, restricted action)` summands with distinct tests.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalForm(BTreeMap<TermId, TermId>);

impl NormalForm {
    pub fn empty() -> NormalForm {
        NormalForm(BTreeMap::new())
    }

    /// `{(1, 1)}`
    pub fn unit() -> NormalForm {
        NormalForm::single(kernel::one(), kernel::one())
    }

    pub fn single(a: TermId, m: TermId) -> NormalForm {
        let mut x = NormalForm::empty();
        x.insert(a, m);
        x
    }

    /// Adds a summand; summands whose test or action is 0 are dropped, and
    /// one with an existing test joins its action: `a;m + a;n == a;(m + n)`.
    ///
    /// Tests are kept as conjunctions of literals: a compound test is split
    /// by `dnf`, so `(a + b);m` becomes `a;m + b;m`. This keeps the negated
    /// pushback of a compound test within the subterms of the negated
    /// literal; negating a sum of conjunctions in place would not be.
    pub fn insert(&mut self, a: TermId, m: TermId) {
        debug_assert!(a.is_test(), "summand test {a} is not a test");
        debug_assert!(kernel::is_restricted(m), "summand action {m} is not restricted");
        if m.is_zero() {
            return;
        }
        for c in dnf(a).iter() {
            self.0.entry(*c).and_modify(|n| *n = kernel::plus(*n, m)).or_insert(m);
        }
    }

    pub fn extend(&mut self, other: &NormalForm) {
        for (a, m) in other.iter() {
            self.insert(a, m);
        }
    }

    pub fn union(mut self, other: &NormalForm) -> NormalForm {
        self.extend(other);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, TermId)> + '_ {
        self.0.iter().map(|(a, m)| (*a, *m))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Empty, or every test is 0; pruning keeps the latter from arising.
    pub fn is_vacuous(&self) -> bool {
        self.0.iter().all(|(a, _)| a.is_zero())
    }

    pub fn tests(&self) -> BTreeSet<TermId> {
        self.0.keys().copied().collect()
    }

    /// Prefixes every test with `a`.
    pub fn prefix(&self, a: TermId) -> NormalForm {
        let mut out = NormalForm::empty();
        for (b, m) in self.iter() {
            out.insert(conj(a, b), m);
        }
        out
    }

    /// Summands with equal actions combined: `a;m + b;m` becomes `(a + b);m`.
    pub fn merged(&self) -> Vec<(TermId, TermId)> {
        let mut by_action: Vec<(TermId, Vec<TermId>)> = Vec::new();
        for (a, m) in self.iter() {
            match by_action.iter_mut().find(|(n, _)| *n == m) {
                Some((_, tests)) => tests.push(a),
                None => by_action.push((m, vec![a])),
            }
        }
        let mut out: Vec<(TermId, TermId)> =
            by_action.into_iter().map(|(m, tests)| (kernel::plus_all(tests), m)).collect();
        out.sort();
        out
    }

    /// The sum `a1;m1 + ... + ak;mk` as a term.
    pub fn to_term(&self) -> TermId {
        kernel::plus_all(self.iter().map(|(a, m)| kernel::seq(a, m)))
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = self.merged();
        if parts.is_empty() {
            return f.write_str("false");
        }
        for (i, (a, m)) in parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{};{}", render(*a, PREC_STAR), render(*m, PREC_STAR))?;
        }
        Ok(())
    }
}

/// Rule applications the star rules may spend on one outermost star before
/// the matrix construction takes over; `KMT_STAR_EFFORT` overrides it.
pub const STAR_EFFORT: u64 = 20_000;

fn star_effort() -> u64 {
    static EFFORT: Lazy<u64> =
        Lazy::new(|| std::env::var("KMT_STAR_EFFORT").ok().and_then(|v| v.parse().ok()).unwrap_or(STAR_EFFORT));
    *EFFORT
}

thread_local! {
    static STAR_DEADLINE: Cell<Option<u64>> = const { Cell::new(None) };
}

/// Fuel level at which the current outermost star stops using the rules.
pub(crate) fn star_deadline() -> Option<u64> {
    STAR_DEADLINE.with(|d| d.get())
}

fn set_star_deadline(d: Option<u64>) {
    STAR_DEADLINE.with(|c| c.set(d));
}

/// Memoized `dnf`, keyed by the negation normal form.
static DNF: Lazy<RwLock<HashMap<TermId, Arc<Vec<TermId>>>>> = Lazy::new(Default::default);

/// Disjunctive normal form of a test: conjunctions of literals summing to
/// `a`. Conjunctions holding a literal and its negation are dropped, so
/// `dnf(0)` and `dnf(b;~b)` are empty.
pub fn dnf(a: TermId) -> Arc<Vec<TermId>> {
    let a = nnf(a);
    if let Some(r) = DNF.read().get(&a) {
        return r.clone();
    }
    let r: Vec<TermId> = match a.term() {
        Term::Zero => vec![],
        Term::One | Term::Test(_) | Term::Not(_) => vec![a],
        Term::Plus(xs) => {
            let mut out = BTreeSet::new();
            for x in xs {
                out.extend(dnf(*x).iter().copied());
            }
            out.into_iter().collect()
        }
        Term::Seq(x, y) => {
            let (dx, dy) = (dnf(*x), dnf(*y));
            let mut out = BTreeSet::new();
            for cx in dx.iter() {
                for cy in dy.iter() {
                    let c = conj(*cx, *cy);
                    if !c.is_zero() && !contradictory(c) {
                        out.insert(c);
                    }
                }
            }
            out.into_iter().collect()
        }
        Term::Star(_) | Term::Act(..) => unreachable!("dnf of an action"),
    };
    let r = Arc::new(absorb(r));
    DNF.write().insert(a, r.clone());
    r
}

/// Drops conjunctions implied by a shorter one: `a + a;b == a`.
fn absorb(cubes: Vec<TermId>) -> Vec<TermId> {
    if cubes.len() < 2 {
        return cubes;
    }
    let sets: Vec<BTreeSet<TermId>> = cubes.iter().map(|c| seq_factors(*c).into_iter().collect()).collect();
    cubes
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            !sets.iter().enumerate().any(|(j, s)| j != *i && s.is_subset(&sets[*i]) && (s.len() < sets[*i].len() || j < *i))
        })
        .map(|(_, c)| *c)
        .collect()
}

fn contradictory(c: TermId) -> bool {
    let fs: BTreeSet<TermId> = seq_factors(c).into_iter().collect();
    fs.iter().any(|f| matches!(f.term(), Term::Not(g) if fs.contains(g)))
}

pub fn conj(a: TermId, b: TermId) -> TermId {
    if a.is_zero() || b.is_zero() {
        return kernel::zero();
    }
    let mut fs: BTreeSet<TermId> = seq_factors(a).into_iter().collect();
    fs.extend(seq_factors(b));
    fs.remove(&kernel::one());
    if fs.contains(&kernel::zero()) {
        return kernel::zero();
    }
    kernel::seq_all(fs)
}

/// Tree size past which an outermost star result is compared against the
/// matrix construction.
const STAR_TREE_SIZE: u64 = 2_000;

fn nf_tree_size(x: &NormalForm) -> u64 {
    x.iter().fold(0u64, |acc, (a, m)| acc.saturating_add(kernel::tree_size(a)).saturating_add(kernel::tree_size(m)))
}

/// `k;n` for restricted actions, absorbing a repeated star: `m*;m* == m*`.
fn act_seq(k: TermId, n: TermId) -> TermId {
    if let Term::Star(_) = k.term() {
        let head = match n.term() {
            Term::Seq(h, _) => *h,
            _ => n,
        };
        if head == k {
            return n;
        }
    }
    kernel::seq(k, n)
}

/// `m*` for a restricted action, using `(m*)* == m*` and `(1 + m)* == m*`.
fn act_star(m: TermId) -> TermId {
    match m.term() {
        Term::Star(_) => m,
        Term::Plus(xs) if xs.iter().any(|x| x.is_one() || matches!(x.term(), Term::Star(_))) => {
            // Every summand is either 1 or under a star already.
            let inner = kernel::plus_all(xs.iter().filter(|x| !x.is_one()).map(|x| match x.term() {
                Term::Star(y) => *y,
                _ => *x,
            }));
            act_star(inner)
        }
        _ => kernel::star(m),
    }
}

impl Engine {
    /// Top-level normalization with a fresh fuel budget.
    pub fn normalize(&self, p: TermId) -> Result<NormalForm> {
        self.reset_fuel();
        self.norm(p)
    }

    pub(crate) fn norm(&self, p: TermId) -> Result<NormalForm> {
        self.burn()?;
        if p.is_test() {
            let mut x = NormalForm::empty();
            x.insert(p, kernel::one());
            return Ok(self.prune(x));
        }
        match p.term() {
            Term::Act(..) => Ok(NormalForm::single(kernel::one(), p)),
            Term::Plus(xs) => {
                let mut out = NormalForm::empty();
                for x in xs {
                    out.extend(&self.norm(*x)?);
                }
                Ok(out)
            }
            Term::Seq(a, b) => {
                let x = self.norm(*a)?;
                let y = self.norm(*b)?;
                self.pb_join(&x, &y)
            }
            Term::Star(a) => {
                let x = self.norm(*a)?;
                self.pb_star(&x)
            }
            _ => unreachable!("tests handled above"),
        }
    }

    /// Drops summands with unsatisfiable tests.
    pub fn prune(&self, x: NormalForm) -> NormalForm {
        if x.iter().all(|(a, _)| a.is_one()) {
            return x;
        }
        NormalForm(x.0.into_iter().filter(|(a, _)| self.satisfiable(*a)).collect())
    }

    /// Pushes the test `a` back through the restricted action `m`: `m;a == result`.
    pub fn pb_dot(&self, m: TermId, a: TermId) -> Result<NormalForm> {
        self.burn()?;
        let a = nnf(a);
        if a.is_zero() {
            return Ok(NormalForm::empty());
        }
        if a.is_one() {
            return Ok(NormalForm::single(kernel::one(), m));
        }
        if m.is_one() {
            return Ok(self.prune(NormalForm::single(a, kernel::one())));
        }
        if let Some(r) = self.pb_cache.read().get(&(m, a)) {
            return Ok(r.clone());
        }
        let r = match m.term() {
            Term::Seq(m1, m2) => {
                let x = self.pb_dot(*m2, a)?;
                self.pb_restricted(*m1, &x)?
            }
            Term::Plus(ms) => {
                let mut out = NormalForm::empty();
                for mi in ms {
                    out.extend(&self.pb_dot(*mi, a)?);
                }
                out
            }
            Term::Act(..) | Term::Star(_) => match a.term() {
                Term::Seq(a1, a2) => {
                    let x = self.pb_dot(m, *a1)?;
                    self.pb_test(&x, *a2)?
                }
                Term::Plus(xs) => {
                    let mut out = NormalForm::empty();
                    for ai in xs {
                        out.extend(&self.pb_dot(m, *ai)?);
                    }
                    out
                }
                Term::Test(_) | Term::Not(_) => self.pb_literal(m, a)?,
                _ => unreachable!("nnf output"),
            },
            other => unreachable!("not a restricted action: {other:?}"),
        };
        let r = self.prune(r);
        if self.checking_measure() {
            let ok = self.measure_nf(&r).is_subset(&self.measure_test(a));
            self.stats.checks.fetch_add(1, Ordering::Relaxed);
            if !ok {
                self.stats.violations.fetch_add(1, Ordering::Relaxed);
            }
        }
        self.pb_cache.write().insert((m, a), r.clone());
        Ok(r)
    }

    /// `m;a` for a primitive or negated primitive `a` and `m` a primitive action or a star.
    fn pb_literal(&self, m: TermId, a: TermId) -> Result<NormalForm> {
        match m.term() {
            Term::Act(pi, _) => {
                let (alpha, positive) = match a.term() {
                    Term::Test(p) => (p, true),
                    Term::Not(b) => match b.term() {
                        Term::Test(p) => (p, false),
                        _ => unreachable!("nnf output"),
                    },
                    _ => unreachable!("literal expected"),
                };
                let bs = self.prim_push_back(pi, alpha)?;
                let mut out = NormalForm::empty();
                if positive {
                    for b in bs {
                        out.insert(nnf(b), m);
                    }
                } else {
                    out.insert(nnf(kernel::neg(kernel::plus_all(bs))), m);
                }
                Ok(out)
            }
            Term::Star(n) => {
                if let Term::Test(alpha) = a.term() {
                    if let Some(r) = self.theory().push_back_star(self, *n, alpha) {
                        return r;
                    }
                }
                let key = (std::thread::current().id(), m, a);
                if !self.star_active.lock().insert(key) {
                    return Err(KmtError::PushbackCycle(a.to_string()));
                }
                let r = self.pb_star_literal(m, *n, a);
                self.star_active.lock().remove(&key);
                match r {
                    Err(KmtError::PushbackCycle(_)) => self.pb_star_matrix(*n, a),
                    r => r,
                }
            }
            _ => unreachable!("pb_literal on {m}"),
        }
    }

    /// `n*;a` by the star rules; fails with `PushbackCycle` when the
    /// theory's subterms do not decrease along the way.
    fn pb_star_literal(&self, m: TermId, n: TermId, a: TermId) -> Result<NormalForm> {
        let x = self.pb_dot(n, a)?;
        if self.mt_nf(&x).contains(&a) {
            // n;a == a;t + u, hence n*;a == (a + n*;u);t*
            let (t, u) = split_on(&x, a);
            let ts = self.pb_star(&t)?;
            let mut out = ts.prefix(a);
            let nu = self.pb_restricted(m, &u)?;
            out.extend(&self.pb_join(&nu, &ts)?);
            Ok(out)
        } else {
            // n*;a == a + n*;(n;a)
            let mut out = NormalForm::single(a, kernel::one());
            out.extend(&self.pb_restricted(m, &x)?);
            Ok(out)
        }
    }

    /// `n*;a` without relying on a decreasing measure.
    fn pb_star_matrix(&self, n: TermId, a: TermId) -> Result<NormalForm> {
        self.star_matrix(&|c| self.pb_dot(n, c), a)
    }

    /// `x*` without relying on a decreasing measure.
    pub(crate) fn pb_star_nf_matrix(&self, x: &NormalForm) -> Result<NormalForm> {
        self.star_matrix(&|c| self.pb_test(x, c), kernel::one())
    }

    /// `body*;a`, given `step(c) == body;c` as a normal form. The
    /// conjunctions reachable from `a` by stepping are finite, and stepping
    /// gives `body;c == sum over d of d;N[d][c]`, so
    /// `body*;c == sum over d of d;N*[d][c]` with the Kleene star of the
    /// action matrix `N`.
    fn star_matrix(&self, step: &dyn Fn(TermId) -> Result<NormalForm>, a: TermId) -> Result<NormalForm> {
        let mut index: HashMap<TermId, usize> = HashMap::new();
        let mut cubes: Vec<TermId> = Vec::new();
        let mut mat: Vec<Vec<TermId>> = Vec::new();
        for c in dnf(a).iter() {
            index.entry(*c).or_insert_with(|| {
                cubes.push(*c);
                cubes.len() - 1
            });
        }
        let mut next = 0;
        while next < cubes.len() {
            self.burn()?;
            let col = next;
            next += 1;
            for (d, k) in step(cubes[col])?.iter() {
                let row = *index.entry(d).or_insert_with(|| {
                    cubes.push(d);
                    cubes.len() - 1
                });
                mat.resize_with(cubes.len(), Vec::new);
                for r in mat.iter_mut() {
                    r.resize(cubes.len(), kernel::zero());
                }
                mat[row][col] = kernel::plus(mat[row][col], k);
            }
        }
        let size = cubes.len();
        mat.resize_with(size, Vec::new);
        for r in mat.iter_mut() {
            r.resize(size, kernel::zero());
        }
        // Kleene's construction is valid for any elimination order; taking
        // the cube with the fewest neighbours first keeps entries small.
        // After each round, mat[i][j] covers the nonempty paths whose inner
        // cubes are all eliminated.
        let mut done = vec![false; size];
        for _ in 0..size {
            self.burn()?;
            let degree = |k: usize| {
                let ins = (0..size).filter(|&i| i != k && !mat[i][k].is_zero()).count();
                let outs = (0..size).filter(|&j| j != k && !mat[k][j].is_zero()).count();
                ins * outs
            };
            let k = (0..size).filter(|k| !done[*k]).min_by_key(|k| degree(*k)).expect("a cube is left");
            done[k] = true;
            let loop_k = act_star(mat[k][k]);
            let old = mat.clone();
            for i in 0..size {
                if old[i][k].is_zero() {
                    continue;
                }
                let via = act_seq(old[i][k], loop_k);
                for j in 0..size {
                    if !old[k][j].is_zero() {
                        mat[i][j] = kernel::plus(mat[i][j], act_seq(via, old[k][j]));
                    }
                }
            }
        }
        let mut out = NormalForm::empty();
        for c in dnf(a).iter() {
            let col = index[c];
            out.insert(*c, kernel::one());
            for (row, d) in cubes.iter().enumerate() {
                if !mat[row][col].is_zero() {
                    out.insert(*d, mat[row][col]);
                }
            }
        }
        Ok(self.prune(out))
    }

    /// `x;a`
    pub fn pb_test(&self, x: &NormalForm, a: TermId) -> Result<NormalForm> {
        let mut out = NormalForm::empty();
        for (ai, mi) in x.iter() {
            let y = self.pb_dot(mi, a)?;
            out.extend(&y.prefix(ai));
        }
        Ok(self.prune(out))
    }

    /// `m;x` for a restricted action `m`.
    pub fn pb_restricted(&self, m: TermId, x: &NormalForm) -> Result<NormalForm> {
        let mut out = NormalForm::empty();
        for (ai, ni) in x.iter() {
            for (b, k) in self.pb_dot(m, ai)?.iter() {
                out.insert(b, act_seq(k, ni));
            }
        }
        Ok(self.prune(out))
    }

    /// `x;y`
    pub fn pb_join(&self, x: &NormalForm, y: &NormalForm) -> Result<NormalForm> {
        let mut out = NormalForm::empty();
        for (ai, mi) in x.iter() {
            let z = self.pb_restricted(mi, y)?;
            out.extend(&z.prefix(ai));
        }
        Ok(self.prune(out))
    }

    /// `x*`
    pub fn pb_star(&self, x: &NormalForm) -> Result<NormalForm> {
        self.burn()?;
        // (a + y)* == y* for a test a, so summands with action 1 add nothing.
        let x = self.prune(NormalForm(x.0.iter().filter(|(_, m)| !m.is_one()).map(|(a, m)| (*a, *m)).collect()));
        if x.is_vacuous() {
            return Ok(NormalForm::unit());
        }
        if x.iter().all(|(a, _)| a.is_one()) {
            let body = kernel::plus_all(x.iter().map(|(_, m)| m));
            return Ok(NormalForm::single(kernel::one(), act_star(body)));
        }
        if let Some(r) = self.star_cache.read().get(&x) {
            return Ok(r.clone());
        }
        // The outermost star gets an effort budget for the rules and falls
        // back to the matrix construction when they exceed it.
        let outermost = star_deadline().is_none();
        if outermost {
            set_star_deadline(Some(self.fuel_used() + star_effort()));
        }
        let r = self.pb_star_rules(&x);
        if outermost {
            set_star_deadline(None);
        }
        let (r, by_matrix) = match r {
            Err(KmtError::StarEffort) if outermost => (self.pb_star_nf_matrix(&x)?, true),
            r => (r?, false),
        };
        let mut r = self.prune(r);
        // Denest repeats its inner star once per split, so the rules' tree
        // can be exponentially larger than its shared graph.
        if outermost && !by_matrix && nf_tree_size(&r) > STAR_TREE_SIZE {
            if let Ok(m) = self.pb_star_nf_matrix(&x) {
                let m = self.prune(m);
                if nf_tree_size(&m) < nf_tree_size(&r) {
                    r = m;
                }
            }
        }
        if self.checking_measure() {
            self.stats.checks.fetch_add(1, Ordering::Relaxed);
            if !self.leq_nf(&r, &x) {
                self.stats.violations.fetch_add(1, Ordering::Relaxed);
            }
        }
        self.star_cache.write().insert(x, r.clone());
        Ok(r)
    }

    /// `x*` by the star rules, for `x` pruned and not all-ones.
    fn pb_star_rules(&self, x: &NormalForm) -> Result<NormalForm> {
        let x = x.clone();
        let a = self.choose_max(&x);
        let (x1, x2) = split_on(&x, a);
        let r = if x2.is_vacuous() {
            // (a;x1)* == 1 + a;(x1;a)*;x1
            let w = self.pb_test(&x1, a)?;
            let y = if self.mt_nf(&w).contains(&a) {
                let (t, u) = split_on(&w, a);
                let tu = t.union(&u);
                self.check_strict(&tu, &x);
                self.pb_star(&tu)?
            } else {
                // With several incomparable maximal tests, `a` missing from
                // mt(w) does not make w smaller than `a` itself; it does make
                // w smaller than x, which is all the recursion needs.
                self.check_strict(&w, &x);
                self.pb_star(&w)?
            };
            let mut out = NormalForm::unit();
            out.extend(&self.pb_join(&y, &x1)?.prefix(a));
            out
        } else {
            // (a;x1 + x2)* == x2*;(a;x1;x2*)*
            self.check_strict(&x2, &x);
            let w = self.pb_star(&x2)?;
            let v = self.pb_join(&x1, &w)?;
            let z = self.pb_star(&v.prefix(a))?;
            self.pb_join(&w, &z)?
        };
        Ok(r)
    }

    fn check_strict(&self, smaller: &NormalForm, larger: &NormalForm) {
        if self.checking_measure() {
            self.stats.strict_checks.fetch_add(1, Ordering::Relaxed);
            if !self.lt_nf(smaller, larger) {
                self.stats.strict_violations.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse;
    use crate::oracle::{Budget, Oracle};
    use crate::theories;

    fn check(theory: &str, src: &str) -> NormalForm {
        let th = theories::by_name(theory).unwrap();
        let t = parse(&*th, src).unwrap();
        let eng = Engine::new(th.clone());
        let nf = eng.normalize(t).unwrap();
        let o = Oracle::new(&*th, Budget { states: 4, trace_len: 3 }).unwrap();
        assert!(o.equiv_bounded(t, nf.to_term()).unwrap().is_none(), "{src} vs {nf}");
        nf
    }

    #[test]
    fn mutual_subterms_fall_back_to_matrix() {
        // Infinite bounds push back to infinite bounds of other variables.
        check("sp", "((c:=minp(b) + a:=minp()); b:=minp(a,c))*; ~c<inf");
        check("sp", "(b<2; (a:=minp() + b:=minp(a,c); b<2))*");
    }

    #[test]
    fn matrix_agrees_with_star_rules() {
        let th = theories::by_name("incnat").unwrap();
        let eng = Engine::new(th.clone());
        let n = parse(&*th, "inc(x); inc(y) + x:=1").unwrap();
        let a = parse(&*th, "x>2; ~y>1").unwrap();
        let by_rules = eng.pb_dot(kernel::star(n), a).unwrap();
        let by_matrix = eng.pb_star_matrix(n, a).unwrap();
        let o = Oracle::new(&*th, Budget { states: 4, trace_len: 3 }).unwrap();
        assert!(o.equiv_bounded(by_rules.to_term(), by_matrix.to_term()).unwrap().is_none());
    }

    #[test]
    fn dnf_drops_contradictions() {
        let th = theories::by_name("incnat").unwrap();
        let a = parse(&*th, "(x>1 + y>1); ~x>1").unwrap();
        let d = dnf(a);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0], conj(kernel::one(), parse(&*th, "y>1; ~x>1").unwrap()));
    }
}
