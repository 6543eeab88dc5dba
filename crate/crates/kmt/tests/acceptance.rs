//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use kmt::automata::{self, Witness};
use kmt::frontend::parser::parse;
use kmt::kernel::{self, sym, TermId};
use kmt::laws::{self, Group};
use kmt::oracle::{Budget, Entry, Oracle, Trace, Val};
use kmt::theory::{Engine, Theory};
use kmt::validate::{validate_theory, ValidateOptions};
use kmt::{gen, theories};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

/// Measure counters gathered while running the differential criterion.
#[derive(Default)]
struct Shared {
    measure: Option<(u64, u64, u64, u64)>,
}

fn main() {
    let ok = std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(run_all)
        .expect("spawn acceptance thread")
        .join()
        .expect("acceptance thread panicked");
    if !ok {
        std::process::exit(1);
    }
}

fn run_all() -> bool {
    let mut shared = Shared::default();
    let mut all_ok = true;
    let mut report = |n: u32, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let dt = start.elapsed();
        let r = match (r, limit) {
            (Ok(_), Some(l)) if dt > l => Err(format!("took {dt:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        let limit = limit.map(|l| format!(" (limit {l:?})")).unwrap_or_default();
        match r {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{dt:.2?}{limit}]"),
            Err(why) => {
                all_ok = false;
                println!("FAIL {n:>2} {name}: {why} [{dt:.2?}{limit}]");
            }
        }
    };
    report(1, "temporal equivalence under ltlf-incnat", Some(Duration::from_secs(5)), &mut criterion_1);
    report(2, "loop unfolding in incnat", Some(Duration::from_secs(10)), &mut criterion_2);
    report(3, "normal form of inc(x)*;ever(x>1)", None, &mut criterion_3);
    report(4, "pushback of always(j<=200) through j:=j+2", None, &mut criterion_4);
    report(5, "shortest-path pushback", None, &mut criterion_5);
    report(6, "axiom suites", Some(Duration::from_secs(600)), &mut criterion_6);
    report(7, "differential soundness against the oracle", None, &mut || criterion_7(&mut shared));
    report(8, "measure postconditions during criterion 7", None, &mut || criterion_8(&shared));
    report(9, "trace semantics distinguishes repeated actions", None, &mut criterion_9);
    report(10, "set nonemptiness with a long witness", Some(Duration::from_secs(60)), &mut criterion_10);
    report(11, "validate_theory on all built-in theories", Some(Duration::from_secs(300)), &mut criterion_11);
    println!("{}", if all_ok { "acceptance: all criteria pass" } else { "acceptance: FAILED" });
    all_ok
}

fn setup(theory: &str) -> (Arc<dyn Theory>, Engine) {
    let th = theories::by_name(theory).expect("built-in theory");
    let eng = Engine::new(th.clone());
    (th, eng)
}

fn term(th: &Arc<dyn Theory>, src: &str) -> TermId {
    parse(&**th, src).unwrap_or_else(|e| panic!("parse {src}: {e}"))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn expect_equivalent(theory: &str, p: &str, q: &str) -> Outcome {
    let (th, _) = setup(theory);
    let (p, q) = (term(&th, p), term(&th, q));
    let eng = Engine::new(th);
    let r = automata::equivalent(&eng, p, q).map_err(err)?;
    if r.equivalent {
        Ok(format!("equivalent, bisimulation of {} pairs", r.pairs))
    } else {
        Err(format!("not equivalent: {}", r.witness.map(|w| w.to_string()).unwrap_or_default()))
    }
}

fn criterion_1() -> Outcome {
    expect_equivalent(
        "ltlf-incnat",
        "inc(x)*; since(true,x>2)",
        "since(true,x>2); inc(x)* + inc(x)*; x>2; inc(x)*",
    )
}

fn criterion_2() -> Outcome {
    // x<50 is ~x>49, x<100 is ~x>99; the j+2 action is inc(j);inc(j).
    let (a, b, c, body) = ("~x>49", "~x>99", "j>100", "inc(x); inc(j); inc(j)");
    let lhs = format!("{a}; ({b}; {body})*; ~({b}); {c}");
    let rhs = format!("{a}; (true + {b}; {body}); ({b}; {body}; {b}; {body})*; ~({b}); {c}");
    expect_equivalent("incnat", &lhs, &rhs)
}

fn criterion_3() -> Outcome {
    let (th, eng) = setup("ltlf-incnat");
    let p = term(&th, "inc(x)*; ever(x>1)");
    let nf = eng.normalize(p).map_err(err)?;
    let parts = nf.merged();
    let got: BTreeSet<TermId> = parts.iter().map(|(a, _)| *a).collect();
    let want: BTreeSet<TermId> = ["ever(x>1) + x>1", "x>0", "true"].iter().map(|s| term(&th, s)).collect();
    if parts.len() != 3 || got != want {
        return Err(format!("normal form {nf} has tests {got:?}, want {want:?}"));
    }
    let o = Oracle::new(&*th, Budget { states: 5, trace_len: 4 }).map_err(err)?;
    match o.equiv_bounded(p, nf.to_term()).map_err(err)? {
        None => Ok(format!("{nf}")),
        Some(c) => Err(format!("normal form {nf} differs from the input: {c}")),
    }
}

/// Histories of up to `len` entries over the given values of `var`, linked by `step`.
fn histories(var: &str, values: &[u64], step: &kernel::Prim, len: usize) -> Vec<Trace> {
    let entry = |v: u64, action: Option<kernel::Prim>| Entry {
        state: Arc::new(BTreeMap::from([(sym(var), Val::Nat(v))])),
        action,
    };
    let mut out: Vec<Trace> = values.iter().map(|v| vec![entry(*v, None)]).collect();
    let mut frontier = out.clone();
    for _ in 1..len {
        let mut next = Vec::new();
        for t in &frontier {
            for v in values {
                let mut t2 = t.clone();
                t2.push(entry(*v, Some(step.clone())));
                next.push(t2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn criterion_4() -> Outcome {
    let (th, eng) = setup("ltlf-incnat");
    let act = term(&th, "inc(j); inc(j)");
    let always = term(&th, "always(~j>200)");
    let nf = eng.pb_dot(act, always).map_err(err)?;
    let want = term(&th, "~j>198; always(~j>200); inc(j); inc(j)");
    let got = nf.to_term();
    let o = Oracle::new(&*th, Budget { states: 210, trace_len: 3 }).map_err(err)?;
    let kernel::Term::Seq(inc, _) = act.term() else { unreachable!() };
    let kernel::Term::Act(inc, _) = inc.term() else { unreachable!() };
    let inits = histories("j", &[0, 197, 198, 199, 200, 201], inc, 3);
    for init in &inits {
        if o.denote_words(got, init) != o.denote_words(want, init) {
            return Err(format!("{nf} differs on {}", kmt::oracle::show_trace(init)));
        }
    }
    Ok(format!("{nf}, agrees on {} histories", inits.len()))
}

fn criterion_5() -> Outcome {
    let (th, eng) = setup("sp");
    let act = term(&th, "B:=minp(A,C,D)");
    let nf = eng.pb_dot(act, term(&th, "B<3")).map_err(err)?;
    let tests: BTreeSet<TermId> = nf.iter().map(|(a, _)| a).collect();
    let want: BTreeSet<TermId> = ["A<2", "C<2", "D<2"].iter().map(|s| term(&th, s)).collect();
    let parts = nf.merged();
    if tests == want && nf.iter().all(|(_, m)| m == act) && parts.len() == 1 {
        Ok(format!("{nf}"))
    } else {
        Err(format!("got {nf}"))
    }
}

/// Checks `lhs == rhs` with the decision procedure after confirming the premises.
fn law_holds(eng: &Engine, i: &laws::Instance) -> Result<(), String> {
    for (l, r) in &i.premises {
        eng.reset_fuel();
        if !automata::equivalent(eng, *l, *r).map_err(err)?.equivalent {
            return Err(format!("premise {l} == {r} does not hold"));
        }
    }
    eng.reset_fuel();
    let r = automata::equivalent(eng, i.lhs, i.rhs).map_err(err)?;
    if r.equivalent {
        Ok(())
    } else {
        Err(format!("{} vs {}", i.lhs, i.rhs))
    }
}

fn criterion_6() -> Outcome {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let table = laws::all();
    for (k, law) in table.iter().enumerate() {
        let n = if law.group == Group::Consequence { 25 } else { 50 };
        for i in 0..n {
            // Instances rotate through the theories so each is exercised.
            let name = theories::BUILTIN[(k + i) % theories::BUILTIN.len()];
            let (th, eng) = setup(name);
            let inst = (law.instance)(&eng, &mut rng, &th.samples()).map_err(err)?;
            law_holds(&eng, &inst).map_err(|e| format!("{} in {name}: {e}", law.name))?;
        }
        *counts.entry(match law.group {
            Group::KleeneAlgebra => "KA",
            Group::BooleanAlgebra => "BA",
            Group::Consequence => "consequence",
        })
        .or_default() += 1;
    }
    let mut theory_axioms = 0;
    for name in theories::BUILTIN {
        let (th, eng) = setup(name);
        for ax in th.axioms() {
            for _ in 0..50 {
                let (l, r) = (ax.instance)(&mut rng);
                eng.reset_fuel();
                if !automata::equivalent(&eng, l, r).map_err(err)?.equivalent {
                    return Err(format!("{name} axiom {}: {l} vs {r}", ax.name));
                }
            }
            theory_axioms += 1;
        }
    }
    Ok(format!(
        "{} KA and {} BA laws x50, {} consequences x25, {theory_axioms} theory axioms x50",
        counts["KA"], counts["BA"], counts["consequence"]
    ))
}

/// True when the witness separates `p` and `q` on a concrete run.
fn replays(o: &Oracle, p: TermId, q: TermId, w: &Witness) -> bool {
    match &w.trace {
        Some(t) => o.accepts(p, t, &w.word) != o.accepts(q, t, &w.word),
        None => false,
    }
}

fn criterion_7(shared: &mut Shared) -> Outcome {
    let budget = Budget { states: 8, trace_len: 4 };
    let mut totals = (0u64, 0u64, 0u64, 0u64);
    let mut summary = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for name in theories::BUILTIN {
        let (th, eng) = setup(name);
        eng.set_check_measure(true);
        let s = th.samples();
        let o = Oracle::new(&*th, budget).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut equal, mut longer) = (0, 0);
        for _ in 0..500 {
            let (p, q) = gen::random_pair(&mut rng, &s, 12);
            match compare(&th, &eng, &o, p, q) {
                Ok(Verdict::Equal) => equal += 1,
                Ok(Verdict::Distinct) => {}
                Ok(Verdict::PastBudget) => longer += 1,
                Err(e) => failures.push(format!("{name}: {p} vs {q}: {e}")),
            }
        }
        let st = eng.stats.snapshot();
        totals = (totals.0 + st.0, totals.1 + st.1, totals.2 + st.2, totals.3 + st.3);
        summary.push(format!("{name} {equal}/500 equal{}", if longer > 0 { format!(" ({longer} past budget)") } else { String::new() }));
    }
    shared.measure = Some(totals);
    if failures.is_empty() {
        Ok(summary.join(", "))
    } else {
        Err(format!("{} disagreements, first: {}", failures.len(), failures.join("; ")))
    }
}

enum Verdict {
    Equal,
    Distinct,
    /// Distinct, but only on traces longer than the oracle budget.
    PastBudget,
}

fn compare(th: &Arc<dyn Theory>, eng: &Engine, o: &Oracle, p: TermId, q: TermId) -> Result<Verdict, String> {
    // Normalizing both sides exercises the pushback measure checks.
    for t in [p, q] {
        eng.normalize(t).map_err(|e| format!("normalize {t}: {e}"))?;
    }
    eng.reset_fuel();
    let r = automata::equivalent(eng, p, q).map_err(err)?;
    let bounded = o.equiv_bounded(p, q).map_err(err)?;
    match (r.equivalent, bounded) {
        (true, None) => Ok(Verdict::Equal),
        (true, Some(c)) => Err(format!("judged equivalent, oracle: {c}")),
        (false, bounded) => {
            let w = r.witness.ok_or("no witness")?;
            if !replays(o, p, q, &w) {
                return Err(format!("witness does not replay: {w}"));
            }
            if bounded.is_some() {
                return Ok(Verdict::Distinct);
            }
            // The oracle must agree once its budget covers the witness.
            let len = w.trace.as_ref().map_or(1, |t| t.len()) + w.word.len();
            let wide = Oracle::new(&**th, Budget { states: o.budget.states, trace_len: len }).map_err(err)?;
            match wide.equiv_bounded(p, q).map_err(err)? {
                Some(_) => Ok(Verdict::PastBudget),
                None => Err(format!("oracle finds no difference within {len} entries; witness {w}")),
            }
        }
    }
}

fn criterion_8(shared: &Shared) -> Outcome {
    let (checks, violations, strict_checks, strict_violations) =
        shared.measure.ok_or("criterion 7 did not complete")?;
    if checks == 0 {
        return Err("no measure checks ran".into());
    }
    if violations > 0 {
        return Err(format!("{violations} of {checks} postconditions violated"));
    }
    Ok(format!(
        "{checks} postconditions hold; strict recursion decreases {}/{strict_checks}",
        strict_checks - strict_violations
    ))
}

fn expect_distinct(theory: &str, p: &str, q: &str) -> Result<String, String> {
    let (th, eng) = setup(theory);
    let (p, q) = (term(&th, p), term(&th, q));
    let r = automata::equivalent(&eng, p, q).map_err(err)?;
    if r.equivalent {
        return Err(format!("{theory}: {p} and {q} judged equivalent"));
    }
    let w = r.witness.ok_or("no witness")?;
    let o = Oracle::new(&*th, Budget::default()).map_err(err)?;
    if !replays(&o, p, q, &w) {
        return Err(format!("{theory}: witness does not replay: {w}"));
    }
    Ok(format!("{theory} word of {} actions", w.word.len()))
}

fn criterion_9() -> Outcome {
    let a = expect_distinct("bitvec", "set(b); set(b)", "set(b)")?;
    let b = expect_distinct("netkat", "f<-v; f<-v", "f<-v")?;
    Ok(format!("{a}; {b}"))
}

fn criterion_10() -> Outcome {
    let (th, eng) = setup("set");
    let p = term(&th, "(inc(i); insert(x,i))*; i>100; in(x,100)");
    let r = automata::empty(&eng, p).map_err(err)?;
    if r.empty {
        return Err("judged empty".into());
    }
    let w = r.witness.ok_or("no witness")?;
    let inc = term(&th, "inc(i)");
    let iterations = w.word.iter().filter(|pi| kernel::act((*pi).clone()) == inc).count();
    if iterations < 100 {
        return Err(format!("witness has {iterations} iterations"));
    }
    let o = Oracle::new(&*th, Budget::default()).map_err(err)?;
    let init = w.trace.clone().ok_or("witness without a concrete start")?;
    if !o.accepts(p, &init, &w.word) {
        return Err("witness does not replay".into());
    }
    Ok(format!("witness of {iterations} iterations, {} automaton states explored", r.explored))
}

fn criterion_11() -> Outcome {
    let mut lines = Vec::new();
    for name in theories::BUILTIN {
        let th = theories::by_name(name).map_err(err)?;
        let rep = validate_theory(th, &ValidateOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        if !rep.passed() {
            return Err(format!("{rep}"));
        }
        let checked: usize = rep.checked.iter().map(|(_, n)| n).sum();
        lines.push(format!("{name} {checked}"));
    }
    Ok(format!("obligations checked: {}", lines.join(", ")))
}
