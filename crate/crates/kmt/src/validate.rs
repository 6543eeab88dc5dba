//! Executable check of a theory's contract against its own state model.

use crate::automata;
use crate::error::Result;
use crate::kernel::{self, Prim, Term, TermId};
use crate::oracle::{show_trace, Budget, Entry, Oracle};
use crate::ordering::wo_key;
use crate::theory::{Engine, Theory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct Finding {
    pub check: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub theory: String,
    /// Number of individual obligations checked, per check name.
    pub checked: Vec<(&'static str, usize)>,
    pub failures: Vec<Finding>,
    /// Subterm pairs that contain each other; accepted, see `sub_well_behaved`.
    pub mutual_subterms: usize,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn count(&mut self, check: &'static str) {
        match self.checked.iter_mut().find(|(c, _)| *c == check) {
            Some((_, n)) => *n += 1,
            None => self.checked.push((check, 1)),
        }
    }

    fn fail(&mut self, check: &'static str, detail: String) {
        self.failures.push(Finding { check, detail });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "theory {}: {}", self.theory, if self.passed() { "pass" } else { "FAIL" })?;
        for (c, n) in &self.checked {
            let bad = self.failures.iter().filter(|x| x.check == *c).count();
            writeln!(f, "  {c}: {n} checked, {bad} failed")?;
        }
        if self.mutual_subterms > 0 {
            writeln!(f, "  mutually contained subterms: {}", self.mutual_subterms)?;
        }
        for x in self.failures.iter().take(20) {
            writeln!(f, "  [{}] {}", x.check, x.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidateOptions {
    pub budget: Budget,
    /// Random instances per axiom schema and random satisfiability queries.
    pub instances: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { budget: Budget { states: 8, trace_len: 3 }, instances: 8, seed: 0 }
    }
}

fn prim_of(t: TermId) -> Option<Prim> {
    match t.term() {
        Term::Test(p) | Term::Act(p, _) => Some(p.clone()),
        _ => None,
    }
}

/// Checks pushback soundness and measure, subterm well-behavedness,
/// satisfiability against the model, and the theory's axiom schemas.
/// Oracle budget exhaustion is returned as an error, not as a failure.
pub fn validate_theory(theory: Arc<dyn Theory>, opts: &ValidateOptions) -> Result<Report> {
    // Samples and axioms may extend query-driven universes, so draw them
    // before any engine caches exist.
    let samples = theory.samples();
    let axioms = theory.axioms();
    let eng = Engine::new(theory.clone());
    let oracle = Oracle::new(&*theory, opts.budget)?;
    let mut rep = Report { theory: theory.name(), ..Report::default() };

    let mut alphas: BTreeSet<Prim> = BTreeSet::new();
    for t in &samples.tests {
        kernel::prim_tests(*t, &mut alphas);
    }
    let pis: Vec<Prim> = samples.actions.iter().filter_map(|a| prim_of(*a)).collect();

    for pi in &pis {
        for alpha in &alphas {
            rep.count("pushback-sound");
            let bs = match theory.push_back(&eng, pi, alpha) {
                Ok(bs) => bs,
                Err(e) if e.is_resource() => return Err(e),
                Err(e) => {
                    rep.fail("pushback-sound", format!("{pi} through {alpha}: {e}"));
                    continue;
                }
            };
            let lhs = kernel::seq(kernel::act(pi.clone()), kernel::test(alpha.clone()));
            let rhs = kernel::seq(kernel::plus_all(bs.iter().copied()), kernel::act(pi.clone()));
            if let Some(cex) = oracle.equiv_bounded(lhs, rhs)? {
                rep.fail(
                    "pushback-sound",
                    format!("{pi};{alpha} differs from ({});{pi} on {}", kernel::plus_all(bs.iter().copied()), show_trace(&cex.initial)),
                );
            }
            let a = kernel::test(alpha.clone());
            for b in bs {
                rep.count("pushback-measure");
                if !b.is_test() || !eng.leq_test(b, a) {
                    rep.fail("pushback-measure", format!("{b} from {pi};{alpha} is not below {alpha}"));
                }
            }
        }
    }

    for alpha in &alphas {
        sub_well_behaved(&eng, alpha, &mut rep);
    }

    check_sat(&eng, &oracle, &alphas, opts, &mut rep)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for ax in &axioms {
        for _ in 0..opts.instances {
            rep.count("axioms");
            let (l, r) = (ax.instance)(&mut rng);
            if let Some(cex) = oracle.equiv_bounded(l, r)? {
                rep.fail("axioms", format!("{}: {l} vs {r}: {cex}", ax.name));
                continue;
            }
            eng.reset_fuel();
            match automata::equivalent(&eng, l, r) {
                Ok(res) if res.equivalent => {}
                Ok(_) => rep.fail("axioms", format!("{}: decision procedure separates {l} and {r}", ax.name)),
                Err(e) if e.is_resource() => return Err(e),
                Err(e) => rep.fail("axioms", format!("{}: {e}", ax.name)),
            }
        }
    }
    Ok(rep)
}

/// Each subterm's subterms stay inside, and each subterm other than 0, 1 and
/// the test itself precedes it in the well order. Pairs contained in each
/// other's subterms cannot both precede; they are counted, not failed.
fn sub_well_behaved(eng: &Engine, alpha: &Prim, rep: &mut Report) {
    let a = kernel::test(alpha.clone());
    let sa = eng.sub(a);
    for b in sa.iter() {
        if b.is_zero() || b.is_one() || *b == a {
            continue;
        }
        rep.count("sub-well-behaved");
        let sb = eng.sub(*b);
        if !sb.is_subset(&sa) {
            rep.fail("sub-well-behaved", format!("sub({b}) is not contained in sub({a})"));
        }
        if wo_key(*b) >= wo_key(a) {
            if sb.contains(&a) {
                rep.mutual_subterms += 1;
            } else {
                rep.fail("sub-well-behaved", format!("{b} does not precede {a}"));
            }
        }
    }
}

/// Satisfiability must never reject a conjunction the model can realize, and
/// witnesses must satisfy the state literals they were built from.
fn check_sat(eng: &Engine, oracle: &Oracle, alphas: &BTreeSet<Prim>, opts: &ValidateOptions, rep: &mut Report) -> Result<()> {
    let prims: Vec<Prim> = alphas.iter().cloned().collect();
    if prims.is_empty() {
        return Ok(());
    }
    let th = eng.theory();
    let inits = oracle.initial_traces(alphas, &BTreeSet::new())?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5a7);
    for _ in 0..opts.instances * 4 {
        let k = rng.gen_range(1..=3.min(prims.len()));
        let lits: Vec<(Prim, bool)> = (0..k).map(|_| (prims[rng.gen_range(0..prims.len())].clone(), rng.gen_bool(0.5))).collect();
        let conj = kernel::seq_all(lits.iter().map(|(p, pol)| {
            let t = kernel::test(p.clone());
            if *pol {
                t
            } else {
                kernel::neg(t)
            }
        }));
        rep.count("sat");
        let sat = eng.satisfiable(conj);
        let realized = inits.iter().find(|t| oracle.eval_test(conj, t));
        if let (false, Some(t)) = (sat, realized) {
            rep.fail("sat", format!("{conj} judged unsatisfiable but holds on {}", show_trace(t)));
        }
        if !sat || th.is_temporal() {
            continue;
        }
        let Some(state_lits) = dedup_lits(&lits) else { continue };
        match oracle.model().witness(&state_lits) {
            Some(s) => {
                let tr = vec![Entry { state: Arc::new(s), action: None }];
                if !oracle.eval_test(conj, &tr) {
                    rep.fail("sat", format!("witness {} violates {conj}", show_trace(&tr)));
                }
            }
            None => rep.fail("sat", format!("no witness for satisfiable {conj}")),
        }
    }
    Ok(())
}

/// Literals without repeats; `None` when a primitive occurs with both polarities.
fn dedup_lits(lits: &[(Prim, bool)]) -> Option<Vec<(Prim, bool)>> {
    let mut out: Vec<(Prim, bool)> = Vec::new();
    for (p, pol) in lits {
        match out.iter().find(|(q, _)| q == p) {
            Some((_, qp)) if qp != pol => return None,
            Some(_) => {}
            None => out.push((p.clone(), *pol)),
        }
    }
    Some(out)
}
