//! Property tests for the invariants of each module. Random terms come from
//! the theories' sample primitives, driven by proptest-chosen seeds.

use kmt::automata::{self, build_term_automaton, determinize};
use kmt::kernel::{self, Term, TermId};
use kmt::laws::{self, Group};
use kmt::normalizer::conj;
use kmt::oracle::{Budget, Entry, Oracle, Trace};
use kmt::ordering::{seqs_of, split_on, TestSet};
use kmt::theory::{Engine, Theory};
use kmt::{gen, parse, theories};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::sync::Arc;

/// Normalization recurses on term structure; give each property a deep stack.
fn check<S>(cases: u32, strategy: S, body: impl Fn(S::Value) -> Result<(), TestCaseError> + Send)
where
    S: Strategy + Send,
    S::Value: Send,
{
    std::thread::scope(|sc| {
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn_scoped(sc, move || {
                let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
                if let Err(e) = runner.run(&strategy, body) {
                    panic!("{e}");
                }
            })
            .expect("spawn property thread")
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p));
    });
}

/// A built-in theory name and an RNG seed.
fn theory_and_seed() -> impl Strategy<Value = (&'static str, u64)> {
    (prop::sample::select(theories::BUILTIN.to_vec()), any::<u64>())
}

fn setup(name: &str) -> (Arc<dyn Theory>, Engine) {
    let th = theories::by_name(name).expect("built-in theory");
    let eng = Engine::new(th.clone());
    (th, eng)
}

fn oracle(th: &dyn Theory, states: u64, trace_len: usize) -> Oracle<'_> {
    Oracle::new(th, Budget { states, trace_len }).expect("built-in theories have a state model")
}

fn same(o: &Oracle, p: TermId, q: TermId) -> Result<(), TestCaseError> {
    match o.equiv_bounded(p, q).map_err(|e| TestCaseError::fail(e.to_string()))? {
        None => Ok(()),
        Some(c) => Err(TestCaseError::fail(format!("{p} vs {q}: {c}"))),
    }
}

fn ok<T>(r: kmt::Result<T>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

fn inits(o: &Oracle, ts: &[TermId]) -> Vec<Trace> {
    let mut tests = BTreeSet::new();
    let mut actions = BTreeSet::new();
    for t in ts {
        kernel::prim_tests(*t, &mut tests);
        kernel::prim_actions(*t, &mut actions);
    }
    o.initial_traces(&tests, &actions).expect("initial traces")
}

fn action_occurrences(t: TermId) -> usize {
    match t.term() {
        Term::Act(..) => 1,
        Term::Plus(xs) => xs.iter().map(|x| action_occurrences(*x)).sum(),
        Term::Seq(a, b) => action_occurrences(*a) + action_occurrences(*b),
        Term::Star(a) => action_occurrences(*a),
        _ => 0,
    }
}

// Kernel

#[test]
fn intern_is_canonical() {
    check(256, theory_and_seed(), |(name, seed)| {
        let (th, _) = setup(name);
        let t = gen::random_term(&mut ChaCha8Rng::seed_from_u64(seed), &th.samples(), 4);
        prop_assert_eq!(ok(kernel::intern(t.term().clone()))?, t);
        prop_assert_eq!(ok(kernel::intern(t.term().clone()))?, ok(kernel::intern(t.term().clone()))?);
        Ok(())
    });
}

#[test]
fn nnf_is_idempotent_and_sound() {
    check(128, theory_and_seed(), |(name, seed)| {
        let (th, _) = setup(name);
        let a = gen::random_test(&mut ChaCha8Rng::seed_from_u64(seed), &th.samples(), 3);
        let n = kernel::nnf(a);
        prop_assert_eq!(kernel::nnf(n), n);
        fn negations_on_prims(t: TermId) -> bool {
            match t.term() {
                Term::Not(x) => matches!(x.term(), Term::Test(_)),
                Term::Plus(xs) => xs.iter().all(|x| negations_on_prims(*x)),
                Term::Seq(x, y) => negations_on_prims(*x) && negations_on_prims(*y),
                _ => true,
            }
        }
        prop_assert!(negations_on_prims(n), "{}", n);
        same(&oracle(&*th, 4, 2), a, n)
    });
}

#[test]
fn smart_constructors_preserve_denotation() {
    check(64, theory_and_seed(), |(name, seed)| {
        let (th, _) = setup(name);
        let s = th.samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (gen::random_term(&mut r, &s, 2), gen::random_term(&mut r, &s, 2));
        let o = oracle(&*th, 4, 3);
        for init in inits(&o, &[p, q]) {
            let (dp, dq) = (o.denote_words(p, &init), o.denote_words(q, &init));
            let union: BTreeSet<_> = dp.union(&dq).cloned().collect();
            prop_assert_eq!(o.denote_words(kernel::plus(p, q), &init), union);
            prop_assert_eq!(o.denote_words(kernel::plus(p, kernel::zero()), &init), dp.clone());
            prop_assert_eq!(o.denote_words(kernel::seq(kernel::one(), p), &init), dp);
        }
        Ok(())
    });
}

// Frontend

#[test]
fn display_then_parse_is_identity() {
    check(256, theory_and_seed(), |(name, seed)| {
        let (th, _) = setup(name);
        let t = gen::random_term(&mut ChaCha8Rng::seed_from_u64(seed), &th.samples(), 4);
        let shown = t.to_string();
        let back = ok(parse(&*th, &shown))?;
        prop_assert_eq!(back, t, "{}", shown);
        prop_assert_eq!(back.to_string(), shown);
        Ok(())
    });
}

// Ordering

#[test]
fn sub_is_closed_and_contains_its_test() {
    check(128, theory_and_seed(), |(name, seed)| {
        let (th, eng) = setup(name);
        let a = gen::random_test(&mut ChaCha8Rng::seed_from_u64(seed), &th.samples(), 3);
        let sa = eng.sub(a);
        prop_assert!(sa.contains(&a) && sa.contains(&kernel::zero()));
        for b in sa.iter() {
            prop_assert!(eng.sub(*b).is_subset(&sa), "sub({}) escapes sub({})", b, a);
        }
        Ok(())
    });
}

#[test]
fn maximal_tests_bound_and_cover() {
    check(64, theory_and_seed(), |(name, seed)| {
        let (th, eng) = setup(name);
        let s = th.samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<TermId> = (0..3).map(|_| gen::random_test(&mut r, &s, 2)).collect();
        let ys: Vec<TermId> = (0..3).map(|_| gen::random_test(&mut r, &s, 2)).collect();
        let (a, b) = (seqs_of(&xs), seqs_of(&ys));
        let ma = eng.mt(&a);
        prop_assert!(ma.is_subset(&a));
        prop_assert!(a.is_subset(&eng.sub_all(&ma)));
        let ab: TestSet = a.union(&b).copied().collect();
        let lhs = eng.sub_all(&eng.mt(&ab));
        let rhs: TestSet = eng.sub_all(&ma).union(&eng.sub_all(&eng.mt(&b))).copied().collect();
        prop_assert_eq!(lhs, rhs);
        Ok(())
    });
}

#[test]
fn split_partitions_on_a_maximal_test() {
    check(200, theory_and_seed(), |(name, seed)| {
        let (th, eng) = setup(name);
        let s = th.samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut x = kmt::NormalForm::empty();
        for _ in 0..3 {
            x.insert(gen::random_test(&mut r, &s, 2), gen::random_action(&mut r, &s, 1));
        }
        // Splitting applies to normal forms with a test other than 1; the
        // normalizer handles the all-ones case without splitting.
        prop_assume!(!x.is_vacuous() && !x.iter().all(|(a, _)| a.is_one()));
        let a = eng.choose_max(&x);
        let (y, z) = ok(eng.split(&x, a))?;
        prop_assert_eq!(split_on(&x, a), (y.clone(), z.clone()));
        prop_assert!(eng.lt_nf(&y, &x), "{} not below {}", y, x);
        prop_assert!(eng.lt_nf(&z, &x), "{} not below {}", z, x);
        let rebuilt = kernel::plus(kernel::seq(a, y.to_term()), z.to_term());
        same(&oracle(&*th, 4, 3), rebuilt, x.to_term())
    });
}

// Normalizer

#[test]
fn normal_forms_are_sound_restricted_and_deterministic() {
    check(160, theory_and_seed(), |(name, seed)| {
        let (th, eng) = setup(name);
        eng.set_check_measure(true);
        let p = gen::random_term_sized(&mut ChaCha8Rng::seed_from_u64(seed), &th.samples(), 10);
        let nf = ok(eng.normalize(p))?;
        for (a, m) in nf.iter() {
            prop_assert!(a.is_test() && kernel::is_restricted(m), "{} ; {}", a, m);
        }
        let (_, fresh) = setup(name);
        prop_assert_eq!(ok(fresh.normalize(p))?, nf.clone());
        let (_, bad, _, _) = eng.stats.snapshot();
        prop_assert_eq!(bad, 0, "measure postcondition failed normalizing {}", p);
        same(&oracle(&*th, 5, 4), p, nf.to_term())
    });
}

#[test]
fn pushbacks_are_sound() {
    check(160, theory_and_seed(), |(name, seed)| {
        let (th, eng) = setup(name);
        let s = th.samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let o = oracle(&*th, 4, 3);
        let (m, a) = (gen::random_action(&mut r, &s, 2), gen::random_test(&mut r, &s, 2));
        let dot = ok(eng.pb_dot(m, a))?;
        prop_assert!(eng.measure_nf(&dot).is_subset(&eng.measure_test(a)), "{} not below {}", dot, a);
        same(&o, kernel::seq(m, a), dot.to_term())?;
        let mut x = kmt::NormalForm::empty();
        x.insert(gen::random_test(&mut r, &s, 1), gen::random_action(&mut r, &s, 1));
        x.insert(gen::random_test(&mut r, &s, 1), gen::random_action(&mut r, &s, 1));
        let st = ok(eng.pb_star(&x))?;
        prop_assert!(eng.leq_nf(&st, &x) || x.is_vacuous());
        same(&o, kernel::star(x.to_term()), st.to_term())?;
        let y = ok(eng.normalize(gen::random_term(&mut r, &s, 2)))?;
        let joined = ok(eng.pb_join(&x, &y))?;
        same(&o, kernel::seq(x.to_term(), y.to_term()), joined.to_term())
    });
}

// Automata

#[test]
fn term_automata_have_one_state_per_label() {
    check(256, theory_and_seed(), |(name, seed)| {
        let (th, _) = setup(name);
        let p = gen::random_term(&mut ChaCha8Rng::seed_from_u64(seed), &th.samples(), 5);
        let aut = build_term_automaton(p);
        prop_assert!(aut.states.len() <= action_occurrences(p) + 1);
        Ok(())
    });
}

#[test]
fn determinized_guards_are_disjoint() {
    check(96, theory_and_seed(), |(name, seed)| {
        let (th, eng) = setup(name);
        let p = gen::random_term(&mut ChaCha8Rng::seed_from_u64(seed), &th.samples(), 3);
        let dfa = ok(determinize(&eng, &build_term_automaton(p)))?;
        for out in &dfa.trans {
            for (i, (g, pi, _)) in out.iter().enumerate() {
                for (h, rho, _) in &out[i + 1..] {
                    if pi == rho {
                        prop_assert!(!eng.satisfiable(conj(*g, *h)), "{} and {} overlap on {}", g, h, pi);
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn equivalence_is_a_congruence() {
    check(64, theory_and_seed(), |(name, seed)| {
        let (th, eng) = setup(name);
        let s = th.samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let p = gen::random_term(&mut r, &s, 2);
        let q = gen::rewrite_equivalent(&mut r, &s, p);
        let u = gen::random_term(&mut r, &s, 2);
        let eq = |a, b| -> Result<bool, TestCaseError> {
            eng.reset_fuel();
            Ok(ok(automata::equivalent(&eng, a, b))?.equivalent)
        };
        prop_assert!(eq(p, p)?);
        prop_assert_eq!(eq(p, u)?, eq(u, p)?);
        prop_assert!(eq(p, q)?, "{} vs {}", p, q);
        prop_assert!(eq(kernel::plus(p, u), kernel::plus(q, u))?);
        prop_assert!(eq(kernel::seq(p, u), kernel::seq(q, u))?);
        prop_assert!(eq(kernel::seq(u, p), kernel::seq(u, q))?);
        prop_assert!(eq(kernel::star(p), kernel::star(q))?);
        Ok(())
    });
}

// Oracle

#[test]
fn tests_filter_and_outputs_extend_the_input() {
    check(96, theory_and_seed(), |(name, seed)| {
        let (th, _) = setup(name);
        let s = th.samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, p) = (gen::random_test(&mut r, &s, 2), gen::random_term(&mut r, &s, 3));
        let o = oracle(&*th, 4, 3);
        for init in inits(&o, &[a, p]) {
            let da = o.denote(a, &init);
            prop_assert!(da.len() <= 1 && da.iter().all(|t| *t == init));
            for t in o.denote(p, &init) {
                prop_assert!(t.len() >= init.len() && t.len() <= o.budget.trace_len);
                prop_assert!(t[..init.len()].iter().zip(&init).all(|(x, y)| x.state == y.state && x.action == y.action));
            }
        }
        Ok(())
    });
}

#[test]
fn sequencing_is_associative_in_the_oracle() {
    check(96, theory_and_seed(), |(name, seed)| {
        let (th, _) = setup(name);
        let s = th.samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (p, q, u) = (gen::random_term(&mut r, &s, 2), gen::random_term(&mut r, &s, 2), gen::random_term(&mut r, &s, 2));
        let o = oracle(&*th, 4, 4);
        for init in inits(&o, &[p, q, u]) {
            // Built from raw nodes so the smart constructors do not reassociate.
            let left = ok(kernel::intern(Term::Seq(p, ok(kernel::intern(Term::Seq(q, u)))?)))?;
            let pq = o.denote(p, &init).into_iter().flat_map(|t| o.denote(q, &t)).collect::<Vec<_>>();
            let right: BTreeSet<Trace> = pq.iter().flat_map(|t| o.denote(u, t)).collect();
            prop_assert_eq!(o.denote(left, &init), right);
        }
        Ok(())
    });
}

#[test]
fn algebra_laws_hold_in_the_oracle() {
    let laws: Vec<_> = laws::all().into_iter().filter(|l| l.group != Group::Consequence).collect();
    for name in theories::BUILTIN {
        let (th, eng) = setup(name);
        let s = th.samples();
        let o = oracle(&*th, 3, 3);
        let mut r = ChaCha8Rng::seed_from_u64(11);
        for law in &laws {
            for _ in 0..100 {
                let i = (law.instance)(&eng, &mut r, &s).expect("instance");
                for (l, rr) in i.premises.iter().chain([(i.lhs, i.rhs)].iter()) {
                    if let Some(c) = o.equiv_bounded(*l, *rr).expect("oracle") {
                        panic!("{name} {}: {l} vs {rr}: {c}", law.name);
                    }
                }
            }
        }
    }
}

// Theories

fn single(o: &Oracle, t: TermId) -> Vec<Trace> {
    inits(o, &[t]).into_iter().filter(|t| t.len() == 1).collect()
}

#[test]
fn inc_never_decreases() {
    check(128, (0u64..50, 0u64..50), |(x, y)| {
        let th = theories::by_name("incnat").unwrap();
        let model = th.model().unwrap();
        let Term::Act(inc, _) = parse(&*th, "inc(x)").unwrap().term().clone() else { unreachable!() };
        let mut st = kmt::oracle::State::new();
        st.insert(kernel::sym("x"), kmt::oracle::Val::Nat(x));
        st.insert(kernel::sym("y"), kmt::oracle::Val::Nat(y));
        let next = model.act(&inc, &st);
        for (v, before) in &st {
            let after = next.get(v).expect("variables are kept");
            prop_assert!(after >= before, "{:?} went from {:?} to {:?}", v, before, after);
        }
        Ok(())
    });
}

#[test]
fn netkat_repeated_assignment_is_observable() {
    check(32, prop::sample::select(vec![("f", "0"), ("f", "1"), ("g", "0"), ("g", "1")]), |(f, v)| {
        let th = theories::by_name("netkat").unwrap();
        let once = parse(&*th, &format!("{f}<-{v}")).unwrap();
        let twice = kernel::seq(once, once);
        let o = oracle(&*th, 4, 4);
        let starts = inits(&o, &[once]);
        prop_assert!(!starts.is_empty());
        for init in starts {
            prop_assert_ne!(o.denote(once, &init), o.denote(twice, &init));
        }
        Ok(())
    });
}

#[test]
fn ltlf_degenerate_start() {
    check(96, any::<u64>(), |seed| {
        let th = theories::by_name("ltlf-incnat").unwrap();
        let inner = theories::by_name("incnat").unwrap().samples();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (gen::random_test(&mut r, &inner, 1), gen::random_test(&mut r, &inner, 1));
        let last = parse(&*th, &format!("last({a})")).unwrap();
        let since = parse(&*th, &format!("since({a},{b})")).unwrap();
        let o = oracle(&*th, 4, 3);
        for init in single(&o, kernel::plus(last, since)) {
            let entries: &[Entry] = &init;
            prop_assert!(!o.eval_test(last, entries));
            prop_assert_eq!(o.eval_test(since, entries), o.eval_test(b, entries));
        }
        Ok(())
    });
}
