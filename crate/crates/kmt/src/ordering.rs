//! Maximal tests and the maximal-subterm ordering used as the normalization measure.

use crate::error::{KmtError, Result};
use crate::kernel::{self, Prim, Term, TermId};
use crate::normalizer::NormalForm;
use crate::theory::Engine;
use std::collections::BTreeSet;
use std::sync::Arc;

pub type TestSet = BTreeSet<TermId>;

/// Top-level factors of a sequence of tests, in order, duplicates kept.
pub fn seq_factors(a: TermId) -> Vec<TermId> {
    let mut out = Vec::new();
    let mut cur = a;
    while let Term::Seq(x, y) = cur.term() {
        out.push(*x);
        cur = *y;
    }
    out.push(cur);
    out
}

pub fn seqs(a: TermId) -> TestSet {
    seq_factors(a).into_iter().collect()
}

pub fn seqs_of<'a>(xs: impl IntoIterator<Item = &'a TermId>) -> TestSet {
    xs.into_iter().flat_map(|a| seq_factors(*a)).collect()
}

/// Highest universe level of any primitive inside `t`.
pub fn level(t: TermId) -> u32 {
    match t.term() {
        Term::Zero | Term::One => 0,
        Term::Test(p) | Term::Act(p, _) => p.level,
        Term::Not(a) | Term::Star(a) => level(*a),
        Term::Seq(a, b) => level(*a).max(level(*b)),
        Term::Plus(xs) => xs.iter().map(|x| level(*x)).max().unwrap_or(0),
    }
}

/// Key of the global well order on tests: level, then payload, then intern id.
pub fn wo_key(t: TermId) -> (u32, Option<&'static Prim>, u32) {
    let payload = match t.term() {
        Term::Test(p) => Some(p),
        Term::Not(a) => match a.term() {
            Term::Test(p) => Some(p),
            _ => None,
        },
        _ => None,
    };
    (level(t), payload, t.index())
}

/// Measure of a set of tests: `sub(mt(A))`.
pub type Measure = BTreeSet<TermId>;

impl Engine {
    /// Subterms of a test, closed under `sub`; always contains `0` and the test.
    pub fn sub(&self, a: TermId) -> Arc<TestSet> {
        if let Some(s) = self.sub_cache.read().get(&a) {
            return s.clone();
        }
        let mut out = TestSet::new();
        out.insert(kernel::zero());
        out.insert(a);
        match a.term() {
            Term::Zero => {}
            Term::One => {}
            Term::Test(p) => {
                out.insert(kernel::one());
                out.extend(self.theory().sub(self, p));
            }
            Term::Not(b) => {
                out.insert(kernel::one());
                let inner = self.sub(*b);
                for c in inner.iter() {
                    out.insert(*c);
                    out.insert(kernel::neg(*c));
                }
            }
            Term::Plus(xs) => {
                for x in xs {
                    out.extend(self.sub(*x).iter().copied());
                }
            }
            Term::Seq(x, y) => {
                out.extend(self.sub(*x).iter().copied());
                out.extend(self.sub(*y).iter().copied());
            }
            Term::Star(_) | Term::Act(..) => panic!("sub of an action"),
        }
        let out = Arc::new(out);
        self.sub_cache.write().insert(a, out.clone());
        out
    }

    pub fn sub_all<'a>(&self, xs: impl IntoIterator<Item = &'a TermId>) -> TestSet {
        let mut out = TestSet::new();
        for x in xs {
            out.extend(self.sub(*x).iter().copied());
        }
        out
    }

    /// Maximal tests of `A`. Members that are subterms of each other are
    /// resolved by the well order, so the result is nonempty for nonempty `A`.
    pub fn mt(&self, set: &TestSet) -> TestSet {
        let ss = seqs_of(set);
        let subs: Vec<(TermId, Arc<TestSet>)> = ss.iter().map(|b| (*b, self.sub(*b))).collect();
        subs.iter()
            .filter(|(b, sb)| {
                subs.iter().all(|(c, sc)| {
                    c == b || !sc.contains(b) || (sb.contains(c) && wo_key(*c) < wo_key(*b))
                })
            })
            .map(|(b, _)| *b)
            .collect()
    }

    /// Maximal tests of a normal form; `{0}` when it is vacuous.
    pub fn mt_nf(&self, x: &NormalForm) -> TestSet {
        if x.is_vacuous() {
            return [kernel::zero()].into_iter().collect();
        }
        let mut tests: TestSet = x.iter().map(|(a, _)| a).collect();
        tests.insert(kernel::one());
        self.mt(&tests)
    }

    pub fn mt_test(&self, a: TermId) -> TestSet {
        self.mt(&[a].into_iter().collect())
    }

    pub fn measure_nf(&self, x: &NormalForm) -> Measure {
        let m = self.mt_nf(x);
        self.sub_all(m.iter())
    }

    pub fn measure_test(&self, a: TermId) -> Measure {
        let m = self.mt_test(a);
        self.sub_all(m.iter())
    }

    pub fn leq_nf(&self, x: &NormalForm, y: &NormalForm) -> bool {
        self.measure_nf(x).is_subset(&self.measure_nf(y))
    }

    pub fn lt_nf(&self, x: &NormalForm, y: &NormalForm) -> bool {
        strictly_below(&self.measure_nf(x), &self.measure_nf(y))
    }

    pub fn leq_test(&self, a: TermId, b: TermId) -> bool {
        self.measure_test(a).is_subset(&self.measure_test(b))
    }

    pub fn lt_test(&self, a: TermId, b: TermId) -> bool {
        strictly_below(&self.measure_test(a), &self.measure_test(b))
    }

    /// The maximal test chosen for splitting: least in the well order.
    pub fn choose_max(&self, x: &NormalForm) -> TermId {
        let m = self.mt_nf(x);
        *m.iter().min_by_key(|t| wo_key(**t)).expect("mt is nonempty")
    }

    /// Splits `x` into `(y, z)` with `x == a;y + z`, removing `a` from every test.
    pub fn split(&self, x: &NormalForm, a: TermId) -> Result<(NormalForm, NormalForm)> {
        if !self.mt_nf(x).contains(&a) {
            return Err(KmtError::InvalidSplit(format!("{a} is not a maximal test")));
        }
        Ok(split_on(x, a))
    }
}

/// Partition of `x` on `a` without the maximality check.
pub fn split_on(x: &NormalForm, a: TermId) -> (NormalForm, NormalForm) {
    let mut y = NormalForm::empty();
    let mut z = NormalForm::empty();
    for (c, m) in x.iter() {
        let fs = seq_factors(c);
        if fs.contains(&a) {
            let rest = kernel::seq_all(fs.into_iter().filter(|f| *f != a));
            y.insert(rest, m);
        } else {
            z.insert(c, m);
        }
    }
    (y, z)
}

pub fn strictly_below(a: &Measure, b: &Measure) -> bool {
    a.len() < b.len() && a.is_subset(b)
}
