//! Decision procedures on symbolic automata.
//!
//! A term is compiled to a term automaton by partial derivatives over labeled
//! actions. Theory tests in guards and acceptance conditions are resolved by a
//! labeling: the truth value of every primitive test in a finite set closed
//! under subterms and pushback through the alphabet. Pushback turns each action
//! into a deterministic update of the labeling, so pairing a labeling with a
//! set of term states gives a deterministic automaton with 0/1 acceptance.
//! Equivalence is decided by bisimulation over such pairs, emptiness by search.

use crate::error::{KmtError, Result};
use crate::kernel::{self, nnf, Label, Prim, Term, TermId};
use crate::oracle::{Entry, State, Trace};
use crate::theory::{Engine, Lit};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::Arc;

/// Largest closure of tracked primitive tests.
pub const MAX_PRIMS: usize = 4096;
/// Largest number of distinct labelings or product states explored per query.
pub const MAX_STATES: usize = 4_000_000;

// ---------------------------------------------------------------------------
// Term automata

/// Assigns labels `1..k` to action occurrences, left to right.
/// Terms that already carry labels are returned unchanged.
pub fn label_actions(p: TermId) -> TermId {
    if has_labels(p) {
        return p;
    }
    let mut next = 0;
    relabel(p, &mut next)
}

fn has_labels(p: TermId) -> bool {
    match p.term() {
        Term::Act(_, l) => *l != 0,
        Term::Star(a) => has_labels(*a),
        Term::Seq(a, b) => has_labels(*a) || has_labels(*b),
        Term::Plus(xs) => xs.iter().any(|x| has_labels(*x)),
        _ => false,
    }
}

fn relabel(p: TermId, next: &mut Label) -> TermId {
    if p.is_test() {
        return p;
    }
    match p.term() {
        Term::Act(pi, _) => {
            *next += 1;
            kernel::act_labeled(pi.clone(), *next)
        }
        Term::Star(a) => kernel::star(relabel(*a, next)),
        Term::Seq(a, b) => {
            let a = relabel(*a, next);
            kernel::seq(a, relabel(*b, next))
        }
        Term::Plus(xs) => {
            // Plus is stored sorted by id, so walk the summands in that order.
            let ys: Vec<TermId> = xs.iter().map(|x| relabel(*x, next)).collect();
            kernel::plus_all(ys)
        }
        _ => unreachable!("tests handled above"),
    }
}

/// A derivative triple: run `guard`, then the action labeled `label`, then `cont`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinearForm {
    pub guard: TermId,
    pub label: Label,
    pub action: Prim,
    pub cont: TermId,
}

/// Partial derivatives of a labeled term, one linear form per label.
pub fn derivative(p: TermId) -> Vec<LinearForm> {
    let mut by_label: BTreeMap<(Label, TermId), (TermId, Prim)> = BTreeMap::new();
    for lf in deriv(p) {
        by_label
            .entry((lf.label, lf.cont))
            .and_modify(|(g, _)| *g = kernel::plus(*g, lf.guard))
            .or_insert((lf.guard, lf.action.clone()));
    }
    by_label
        .into_iter()
        .map(|((label, cont), (guard, action))| LinearForm { guard, label, action, cont })
        .collect()
}

fn deriv(p: TermId) -> Vec<LinearForm> {
    if p.is_test() {
        return Vec::new();
    }
    match p.term() {
        Term::Act(pi, l) => vec![LinearForm { guard: kernel::one(), label: *l, action: pi.clone(), cont: kernel::one() }],
        Term::Plus(xs) => xs.iter().flat_map(|x| deriv(*x)).collect(),
        Term::Seq(a, b) => {
            let mut out: Vec<LinearForm> =
                deriv(*a).into_iter().map(|lf| LinearForm { cont: kernel::seq(lf.cont, *b), ..lf }).collect();
            let ea = acceptance(*a);
            if !ea.is_zero() {
                for lf in deriv(*b) {
                    out.push(LinearForm { guard: crate::normalizer::conj(ea, lf.guard), ..lf });
                }
            }
            out
        }
        Term::Star(a) => deriv(*a).into_iter().map(|lf| LinearForm { cont: kernel::seq(lf.cont, p), ..lf }).collect(),
        _ => unreachable!("tests handled above"),
    }
}

/// The test under which `p` accepts without running any action.
pub fn acceptance(p: TermId) -> TermId {
    if p.is_test() {
        return p;
    }
    match p.term() {
        Term::Act(..) => kernel::zero(),
        Term::Star(_) => kernel::one(),
        Term::Plus(xs) => kernel::plus_all(xs.iter().map(|x| acceptance(*x))),
        Term::Seq(a, b) => {
            let ea = acceptance(*a);
            if ea.is_zero() {
                return ea;
            }
            kernel::seq(ea, acceptance(*b))
        }
        _ => unreachable!("tests handled above"),
    }
}

#[derive(Clone, Debug)]
pub struct TermState {
    /// Label of the action that enters this state; 0 for the initial state.
    pub label: Label,
    pub term: TermId,
    pub accept: TermId,
}

#[derive(Clone, Debug)]
pub struct TermEdge {
    pub guard: TermId,
    pub action: Prim,
    pub target: usize,
}

/// States are discovered from the initial term by iterated derivatives.
#[derive(Clone, Debug)]
pub struct TermAutomaton {
    pub states: Vec<TermState>,
    pub edges: Vec<Vec<TermEdge>>,
}

pub fn build_term_automaton(p: TermId) -> TermAutomaton {
    let p = label_actions(p);
    let mut states = vec![TermState { label: 0, term: p, accept: acceptance(p) }];
    let mut index: HashMap<(Label, TermId), usize> = HashMap::new();
    index.insert((0, p), 0);
    let mut edges: Vec<Vec<TermEdge>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut out = Vec::new();
        for lf in derivative(states[i].term) {
            let key = (lf.label, lf.cont);
            let target = *index.entry(key).or_insert_with(|| {
                states.push(TermState { label: lf.label, term: lf.cont, accept: acceptance(lf.cont) });
                states.len() - 1
            });
            out.push(TermEdge { guard: lf.guard, action: lf.action, target });
        }
        edges.push(out);
        i += 1;
    }
    TermAutomaton { states, edges }
}

impl TermAutomaton {
    pub fn actions(&self) -> BTreeSet<Prim> {
        self.edges.iter().flatten().map(|e| e.action.clone()).collect()
    }

    pub fn tests(&self) -> BTreeSet<Prim> {
        let mut out = BTreeSet::new();
        for s in &self.states {
            kernel::prim_tests(s.accept, &mut out);
        }
        for e in self.edges.iter().flatten() {
            kernel::prim_tests(e.guard, &mut out);
        }
        out
    }

    /// Graphviz rendering; nodes are `label/acceptance`, edges `guard;action`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph kmt {\n  rankdir=LR;\n");
        for (i, st) in self.states.iter().enumerate() {
            let shape = if i == 0 { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  s{i} [shape={shape}, label=\"{}/{}\"];", st.label, escape(&st.accept.to_string()));
        }
        for (i, es) in self.edges.iter().enumerate() {
            for e in es {
                let _ = writeln!(
                    s,
                    "  s{i} -> s{} [label=\"{};{}\"];",
                    e.target,
                    escape(&kernel::render(e.guard, kernel::PREC_STAR)),
                    escape(&e.action.to_string())
                );
            }
        }
        s.push_str("}\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

// ---------------------------------------------------------------------------
// Labelings

/// Truth values of the tracked primitive tests.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(Box<[u64]>);

impl Bits {
    pub fn new(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64).max(1)].into_boxed_slice())
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if v {
            self.0[i / 64] |= 1 << (i % 64);
        } else {
            self.0[i / 64] &= !(1 << (i % 64));
        }
    }
}

/// A test compiled against a labeling space.
#[derive(Clone, Debug)]
pub enum Formula {
    Const(bool),
    Var(usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn eval(&self, l: &Bits) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(i) => l.get(*i),
            Formula::Not(f) => !f.eval(l),
            Formula::And(fs) => fs.iter().all(|f| f.eval(l)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(l)),
        }
    }
}

/// Evaluates a test given the truth of its primitive tests.
pub fn eval_term(t: TermId, prim: &mut dyn FnMut(&Prim) -> bool) -> bool {
    match t.term() {
        Term::Zero => false,
        Term::One => true,
        Term::Test(p) => prim(p),
        Term::Not(a) => !eval_term(*a, prim),
        Term::Plus(xs) => xs.iter().any(|x| eval_term(*x, prim)),
        Term::Seq(a, b) => eval_term(*a, prim) && eval_term(*b, prim),
        _ => panic!("eval_term on an action"),
    }
}

/// The tracked primitive tests of a query and how each action updates them.
pub struct LabelSpace {
    pub prims: Vec<Prim>,
    index: HashMap<Prim, usize>,
    /// Query actions followed by representative actions (temporal theories only).
    pub actions: Vec<Prim>,
    /// Number of leading entries of `actions` that come from the query.
    pub query_actions: usize,
    action_index: HashMap<Prim, usize>,
    /// `trans[a][i]`: value of prim `i` after action `a`, over the labeling before it.
    trans: Vec<Vec<Formula>>,
    /// Prims whose truth depends only on the current state.
    pub free: Vec<bool>,
    pub temporal: bool,
}

impl LabelSpace {
    pub fn build(eng: &Engine, seeds: &BTreeSet<Prim>, alphabet: &BTreeSet<Prim>) -> Result<LabelSpace> {
        let th = eng.theory();
        let temporal = th.is_temporal();
        let mut actions: Vec<Prim> = alphabet.iter().cloned().collect();
        let mut prims;
        loop {
            prims = closure(eng, seeds, &actions)?;
            if !temporal {
                break;
            }
            let mut all: BTreeSet<Prim> = alphabet.clone();
            let reps: Vec<Prim> =
                th.representative_actions(&prims).into_iter().filter(|r| !alphabet.contains(r)).collect();
            all.extend(reps.iter().cloned());
            if all.len() == actions.len() {
                break;
            }
            actions = alphabet.iter().cloned().chain(reps.into_iter().collect::<BTreeSet<_>>()).collect();
        }
        let prims: Vec<Prim> = prims.into_iter().collect();
        let index: HashMap<Prim, usize> = prims.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let free = prims
            .iter()
            .map(|p| !temporal || th.start_value(eng, p, &mut |_| false).is_none())
            .collect();
        let mut space = LabelSpace {
            prims,
            index,
            action_index: actions.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect(),
            query_actions: alphabet.len(),
            actions,
            trans: Vec::new(),
            free,
            temporal,
        };
        let mut trans = Vec::with_capacity(space.actions.len());
        for pi in &space.actions {
            let mut row = Vec::with_capacity(space.prims.len());
            for p in &space.prims {
                let b = eng.push_test(pi, kernel::test(p.clone()))?;
                row.push(space.compile(b)?);
            }
            trans.push(row);
        }
        space.trans = trans;
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.prims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    pub fn index_of(&self, p: &Prim) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn action_index(&self, pi: &Prim) -> Option<usize> {
        self.action_index.get(pi).copied()
    }

    pub fn compile(&self, t: TermId) -> Result<Formula> {
        Ok(match t.term() {
            Term::Zero => Formula::Const(false),
            Term::One => Formula::Const(true),
            Term::Test(p) => Formula::Var(
                self.index_of(p).ok_or_else(|| KmtError::Theory(format!("test {p} escapes the labeling closure")))?,
            ),
            Term::Not(a) => Formula::Not(Box::new(self.compile(*a)?)),
            Term::Plus(xs) => Formula::Or(xs.iter().map(|x| self.compile(*x)).collect::<Result<_>>()?),
            Term::Seq(a, b) => Formula::And(vec![self.compile(*a)?, self.compile(*b)?]),
            _ => return Err(KmtError::Theory(format!("cannot compile action {t}"))),
        })
    }

    /// Labeling after running action number `a`.
    pub fn step(&self, l: &Bits, a: usize) -> Bits {
        let mut out = Bits::new(self.prims.len());
        for (i, f) in self.trans[a].iter().enumerate() {
            out.set(i, f.eval(l));
        }
        out
    }

    pub fn lits(&self, l: &Bits) -> Vec<Lit> {
        self.prims.iter().enumerate().map(|(i, p)| (p.clone(), l.get(i))).collect()
    }

    pub fn free_lits(&self, l: &Bits) -> Vec<Lit> {
        self.prims.iter().enumerate().filter(|(i, _)| self.free[*i]).map(|(i, p)| (p.clone(), l.get(i))).collect()
    }

    /// The tests labeled true, for display.
    pub fn true_tests(&self, l: &Bits) -> Vec<TermId> {
        (0..self.prims.len()).filter(|i| l.get(*i)).map(|i| kernel::test(self.prims[i].clone())).collect()
    }

    /// Groups of free prims sharing no variables, each sorted.
    fn components(&self, eng: &Engine) -> Vec<Vec<usize>> {
        let th = eng.theory();
        let ids: Vec<usize> = (0..self.prims.len()).filter(|i| self.free[*i]).collect();
        let mut parent: Vec<usize> = (0..self.prims.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut owner: HashMap<kernel::Sym, usize> = HashMap::new();
        for &i in &ids {
            for v in th.vars(&self.prims[i]) {
                match owner.get(&v) {
                    Some(&j) => {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        parent[a.max(b)] = a.min(b);
                    }
                    None => {
                        owner.insert(v, i);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in &ids {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Satisfying assignments of one component, false before true.
    fn solutions(&self, eng: &Engine, comp: &[usize]) -> Result<Vec<Vec<bool>>> {
        let th = eng.theory();
        let mut out = Vec::new();
        let mut lits: Vec<Lit> = Vec::new();
        let mut vals: Vec<bool> = Vec::new();
        fn go(
            space: &LabelSpace,
            eng: &Engine,
            th: &dyn crate::theory::Theory,
            comp: &[usize],
            lits: &mut Vec<Lit>,
            vals: &mut Vec<bool>,
            out: &mut Vec<Vec<bool>>,
        ) -> Result<()> {
            if vals.len() == comp.len() {
                out.push(vals.clone());
                if out.len() > MAX_STATES {
                    return Err(KmtError::Overflow("too many initial labelings".into()));
                }
                return Ok(());
            }
            let p = &space.prims[comp[vals.len()]];
            for v in [false, true] {
                lits.push((p.clone(), v));
                if th.sat(eng, lits) {
                    vals.push(v);
                    go(space, eng, th, comp, lits, vals, out)?;
                    vals.pop();
                }
                lits.pop();
            }
            Ok(())
        }
        go(self, eng, th, comp, &mut lits, &mut vals, &mut out)?;
        Ok(out)
    }

    /// Every consistent assignment of the free prims, as an odometer over
    /// independent components (last component fastest).
    pub fn free_assignments(&self, eng: &Engine) -> Result<FreeAssignments> {
        let comps = self.components(eng);
        let mut sols = Vec::with_capacity(comps.len());
        for c in &comps {
            sols.push(self.solutions(eng, c)?);
        }
        let done = sols.iter().any(|s| s.is_empty());
        Ok(FreeAssignments { n: self.prims.len(), counter: vec![0; comps.len()], comps, sols, done })
    }

    /// Completes an assignment of free prims with the start values of history-dependent ones.
    fn with_start_values(&self, eng: &Engine, l: &Bits) -> Bits {
        let th = eng.theory();
        let mut memo: Vec<Option<bool>> =
            (0..self.prims.len()).map(|i| if self.free[i] { Some(l.get(i)) } else { None }).collect();
        fn value(space: &LabelSpace, eng: &Engine, th: &dyn crate::theory::Theory, memo: &mut Vec<Option<bool>>, p: &Prim) -> bool {
            let i = space.index_of(p).expect("closure contains subterms");
            if let Some(v) = memo[i] {
                return v;
            }
            let v = th
                .start_value(eng, p, &mut |t| eval_term(t, &mut |q| value(space, eng, th, memo, q)))
                .unwrap_or(false);
            memo[i] = Some(v);
            v
        }
        let mut out = l.clone();
        for i in 0..self.prims.len() {
            let v = value(self, eng, th, &mut memo, &self.prims[i].clone());
            out.set(i, v);
        }
        out
    }
}

/// Lazy enumeration of free-prim assignments.
pub struct FreeAssignments {
    n: usize,
    comps: Vec<Vec<usize>>,
    sols: Vec<Vec<Vec<bool>>>,
    counter: Vec<usize>,
    done: bool,
}

impl Iterator for FreeAssignments {
    type Item = Bits;

    fn next(&mut self) -> Option<Bits> {
        if self.done {
            return None;
        }
        let mut l = Bits::new(self.n);
        for (k, comp) in self.comps.iter().enumerate() {
            for (j, &i) in comp.iter().enumerate() {
                l.set(i, self.sols[k][self.counter[k]][j]);
            }
        }
        // Advance the odometer.
        let mut k = self.comps.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.counter[k] += 1;
            if self.counter[k] < self.sols[k].len() {
                break;
            }
            self.counter[k] = 0;
        }
        Some(l)
    }
}

fn closure(eng: &Engine, seeds: &BTreeSet<Prim>, actions: &[Prim]) -> Result<BTreeSet<Prim>> {
    let mut set = BTreeSet::new();
    let mut work: Vec<Prim> = seeds.iter().cloned().collect();
    while let Some(p) = work.pop() {
        if set.contains(&p) {
            continue;
        }
        set.insert(p.clone());
        if set.len() > MAX_PRIMS {
            return Err(KmtError::Overflow(format!("more than {MAX_PRIMS} tracked tests")));
        }
        let t = kernel::test(p.clone());
        let mut found = BTreeSet::new();
        for s in eng.sub(t).iter() {
            kernel::prim_tests(*s, &mut found);
        }
        for pi in actions {
            kernel::prim_tests(eng.push_test(pi, t)?, &mut found);
        }
        work.extend(found.into_iter().filter(|q| !set.contains(q)));
    }
    Ok(set)
}

/// Labelings reachable by some trace, for history-dependent theories. Each
/// records how it was reached so a concrete trace can be rebuilt.
pub struct Realizable {
    pub space: Arc<LabelSpace>,
    pub labelings: Vec<Bits>,
    index: HashMap<Bits, usize>,
    origin: Vec<Origin>,
}

#[derive(Clone, Debug)]
enum Origin {
    Start,
    Step(usize, usize),
}

impl Realizable {
    pub fn compute(eng: &Engine, space: Arc<LabelSpace>) -> Result<Realizable> {
        let mut r = Realizable { space: space.clone(), labelings: Vec::new(), index: HashMap::new(), origin: Vec::new() };
        for l in space.free_assignments(eng)? {
            let full = space.with_start_values(eng, &l);
            r.add(full, Origin::Start)?;
        }
        let mut i = 0;
        while i < r.labelings.len() {
            for a in 0..space.actions.len() {
                let next = space.step(&r.labelings[i], a);
                r.add(next, Origin::Step(i, a))?;
            }
            i += 1;
        }
        Ok(r)
    }

    fn add(&mut self, l: Bits, o: Origin) -> Result<()> {
        if !self.index.contains_key(&l) {
            if self.labelings.len() >= MAX_STATES {
                return Err(KmtError::Overflow("too many reachable labelings".into()));
            }
            self.index.insert(l.clone(), self.labelings.len());
            self.labelings.push(l);
            self.origin.push(o);
        }
        Ok(())
    }

    pub fn contains(&self, l: &Bits) -> bool {
        self.index.contains_key(l)
    }

    /// True when some realizable labeling agrees with all literals.
    pub fn consistent(&self, lits: &[Lit]) -> bool {
        let idx: Vec<(usize, bool)> =
            lits.iter().map(|(p, v)| (self.space.index_of(p).expect("literal is tracked"), *v)).collect();
        self.labelings.iter().any(|l| idx.iter().all(|(i, v)| l.get(*i) == *v))
    }

    /// The free assignment a labeling starts from and the actions leading to it.
    fn history(&self, mut i: usize) -> (Bits, Vec<Prim>) {
        let mut path = Vec::new();
        loop {
            match self.origin[i] {
                Origin::Start => break,
                Origin::Step(j, a) => {
                    path.push(self.space.actions[a].clone());
                    i = j;
                }
            }
        }
        path.reverse();
        (self.labelings[i].clone(), path)
    }
}

/// Satisfiability of a conjunction of literals for a history-dependent
/// theory: some reachable labeling agrees with every literal.
pub fn temporal_sat(eng: &Engine, lits: &[Lit]) -> Result<bool> {
    let key: Vec<Prim> = lits.iter().map(|(p, _)| p.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let cached = eng.temporal_cache.read().get(&key).cloned();
    let r = match cached {
        Some(r) => r,
        None => {
            let seeds: BTreeSet<Prim> = key.iter().cloned().collect();
            let space = Arc::new(LabelSpace::build(eng, &seeds, &BTreeSet::new())?);
            let r = Arc::new(Realizable::compute(eng, space)?);
            eng.temporal_cache.write().insert(key, r.clone());
            r
        }
    };
    Ok(r.consistent(lits))
}

// ---------------------------------------------------------------------------
// Queries

/// How a query starts: the initial labeling's literals, a concrete start
/// trace when the theory has a state model, and the actions that follow.
#[derive(Clone, Debug)]
pub struct Witness {
    pub initial: Vec<Lit>,
    pub trace: Option<Trace>,
    pub word: Vec<Prim>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.trace {
            Some(t) => writeln!(f, "initial trace: {}", crate::oracle::show_trace(t))?,
            None => {
                let lits: Vec<String> =
                    self.initial.iter().filter(|(_, v)| *v).map(|(p, _)| p.to_string()).collect();
                writeln!(f, "initial tests: {}", lits.join(", "))?
            }
        }
        let words: Vec<String> = self.word.iter().map(|p| p.to_string()).collect();
        write!(f, "actions ({}): {}", self.word.len(), words.join("; "))
    }
}

#[derive(Clone, Debug)]
pub struct EquivResult {
    pub equivalent: bool,
    /// Number of state pairs in the bisimulation (or explored before failing).
    pub pairs: usize,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug)]
pub struct EmptyResult {
    pub empty: bool,
    pub explored: usize,
    pub witness: Option<Witness>,
}

struct Compiled {
    accept: Vec<Formula>,
    /// `edges[state][action]`: guarded targets.
    edges: Vec<Vec<Vec<(Formula, usize)>>>,
}

fn compile_automaton(space: &LabelSpace, aut: &TermAutomaton) -> Result<Compiled> {
    let mut accept = Vec::new();
    let mut edges = Vec::new();
    for (i, st) in aut.states.iter().enumerate() {
        accept.push(space.compile(nnf(st.accept))?);
        let mut by_action = vec![Vec::new(); space.actions.len()];
        for e in &aut.edges[i] {
            let a = space.action_index(&e.action).expect("query action is in the alphabet");
            by_action[a].push((space.compile(nnf(e.guard))?, e.target));
        }
        edges.push(by_action);
    }
    Ok(Compiled { accept, edges })
}

/// Initial labelings in a fixed order, with the history needed to rebuild a trace.
enum Starts<'a> {
    Plain(FreeAssignments),
    Temporal(&'a Realizable, usize),
}

impl Iterator for Starts<'_> {
    type Item = (usize, Bits);

    fn next(&mut self) -> Option<(usize, Bits)> {
        match self {
            Starts::Plain(it) => it.next().map(|l| (usize::MAX, l)),
            Starts::Temporal(r, i) => {
                let out = r.labelings.get(*i).map(|l| (*i, l.clone()));
                *i += 1;
                out
            }
        }
    }
}

/// Shared state of a query over one or two terms.
struct Explorer<'e> {
    eng: &'e Engine,
    space: Arc<LabelSpace>,
    realizable: Option<Realizable>,
    auts: Vec<Compiled>,
    labelings: Vec<Bits>,
    lab_index: HashMap<Bits, usize>,
    lab_step: HashMap<(usize, usize), usize>,
    /// Node: (labeling, side, sorted term states). Node 0 is the dead node.
    nodes: Vec<(usize, usize, Vec<usize>)>,
    node_index: HashMap<(usize, usize, Vec<usize>), usize>,
}

impl<'e> Explorer<'e> {
    fn new(eng: &'e Engine, terms: &[TermId]) -> Result<(Explorer<'e>, Vec<TermAutomaton>)> {
        let auts: Vec<TermAutomaton> = terms.iter().map(|t| build_term_automaton(*t)).collect();
        let mut seeds = BTreeSet::new();
        let mut alphabet = BTreeSet::new();
        for a in &auts {
            seeds.extend(a.tests());
            alphabet.extend(a.actions());
        }
        let space = Arc::new(LabelSpace::build(eng, &seeds, &alphabet)?);
        let compiled = auts.iter().map(|a| compile_automaton(&space, a)).collect::<Result<Vec<_>>>()?;
        let realizable = if space.temporal { Some(Realizable::compute(eng, space.clone())?) } else { None };
        let ex = Explorer {
            eng,
            space,
            realizable,
            auts: compiled,
            labelings: Vec::new(),
            lab_index: HashMap::new(),
            lab_step: HashMap::new(),
            nodes: vec![(usize::MAX, usize::MAX, Vec::new())],
            node_index: HashMap::new(),
        };
        Ok((ex, auts))
    }

    fn starts(&self) -> Result<Starts<'_>> {
        Ok(match &self.realizable {
            Some(r) => Starts::Temporal(r, 0),
            None => Starts::Plain(self.space.free_assignments(self.eng)?),
        })
    }

    fn labeling(&mut self, l: Bits) -> Result<usize> {
        if let Some(i) = self.lab_index.get(&l) {
            return Ok(*i);
        }
        if self.labelings.len() >= MAX_STATES {
            return Err(KmtError::Overflow("too many labelings".into()));
        }
        self.lab_index.insert(l.clone(), self.labelings.len());
        self.labelings.push(l);
        Ok(self.labelings.len() - 1)
    }

    fn node(&mut self, lab: usize, side: usize, states: Vec<usize>) -> Result<usize> {
        if states.is_empty() {
            return Ok(0);
        }
        let key = (lab, side, states);
        if let Some(i) = self.node_index.get(&key) {
            return Ok(*i);
        }
        if self.nodes.len() >= MAX_STATES {
            return Err(KmtError::Overflow("too many product states".into()));
        }
        self.nodes.push(key.clone());
        self.node_index.insert(key, self.nodes.len() - 1);
        Ok(self.nodes.len() - 1)
    }

    fn accepts(&self, n: usize) -> bool {
        if n == 0 {
            return false;
        }
        let (lab, side, states) = &self.nodes[n];
        let l = &self.labelings[*lab];
        states.iter().any(|s| self.auts[*side].accept[*s].eval(l))
    }

    fn step_labeling(&mut self, lab: usize, a: usize) -> Result<usize> {
        if let Some(i) = self.lab_step.get(&(lab, a)) {
            return Ok(*i);
        }
        let next = self.space.step(&self.labelings[lab], a);
        let i = self.labeling(next)?;
        self.lab_step.insert((lab, a), i);
        Ok(i)
    }

    fn succ(&mut self, n: usize, a: usize) -> Result<usize> {
        if n == 0 {
            return Ok(0);
        }
        let (lab, side, states) = self.nodes[n].clone();
        let l = &self.labelings[lab];
        let mut targets = BTreeSet::new();
        for s in &states {
            for (g, t) in &self.auts[side].edges[*s][a] {
                if g.eval(l) {
                    targets.insert(*t);
                }
            }
        }
        if targets.is_empty() {
            return Ok(0);
        }
        let lab2 = self.step_labeling(lab, a)?;
        self.node(lab2, side, targets.into_iter().collect())
    }

    fn witness(&self, start: (usize, &Bits), word: Vec<Prim>) -> Witness {
        let th = self.eng.theory();
        let model = th.model();
        match &self.realizable {
            None => {
                let initial = self.space.lits(start.1);
                let trace = model
                    .and_then(|m| m.witness(&initial))
                    .map(|s| vec![Entry { state: Arc::new(s), action: None }]);
                Witness { initial, trace, word }
            }
            Some(r) => {
                let (root, path) = r.history(start.0);
                let initial = self.space.lits(start.1);
                let trace = model.and_then(|m| {
                    let s: State = m.witness(&self.space.free_lits(&root))?;
                    let mut t = vec![Entry { state: Arc::new(s), action: None }];
                    for pi in &path {
                        let next = m.act(pi, &t.last().unwrap().state);
                        t.push(Entry { state: Arc::new(next), action: Some(pi.clone()) });
                    }
                    Some(t)
                });
                Witness { initial, trace, word }
            }
        }
    }
}

fn word_of(pairs: &[(usize, usize, usize, usize)], mut i: usize, actions: &[Prim]) -> Vec<Prim> {
    let mut w = Vec::new();
    while pairs[i].2 != usize::MAX {
        w.push(actions[pairs[i].3].clone());
        i = pairs[i].2;
    }
    w.reverse();
    w
}

/// Decides `[[p]] == [[q]]` by bisimulation up to union-find.
pub fn equivalent(eng: &Engine, p: TermId, q: TermId) -> Result<EquivResult> {
    eng.reset_fuel();
    let (mut ex, _) = Explorer::new(eng, &[p, q])?;
    let nact = ex.space.query_actions;
    let mut parent: Vec<usize> = Vec::new();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        while parent.len() <= x {
            let n = parent.len();
            parent.push(n);
        }
        let mut x = x;
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let starts: Vec<(usize, Bits)> = ex.starts()?.collect();
    let mut merged = 0;
    for (origin, l0) in &starts {
        let lab = ex.labeling(l0.clone())?;
        let n1 = ex.node(lab, 0, vec![0])?;
        let n2 = ex.node(lab, 1, vec![0])?;
        // (left, right, parent pair, action)
        let mut pairs: Vec<(usize, usize, usize, usize)> = vec![(n1, n2, usize::MAX, usize::MAX)];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let (a, b, _, _) = pairs[i];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                continue;
            }
            parent[ra.max(rb)] = ra.min(rb);
            merged += 1;
            if ex.accepts(a) != ex.accepts(b) {
                let word = word_of(&pairs, i, &ex.space.actions);
                let witness = ex.witness((*origin, l0), word);
                return Ok(EquivResult { equivalent: false, pairs: merged, witness: Some(witness) });
            }
            for act in 0..nact {
                let sa = ex.succ(a, act)?;
                let sb = ex.succ(b, act)?;
                pairs.push((sa, sb, i, act));
                queue.push_back(pairs.len() - 1);
            }
        }
    }
    Ok(EquivResult { equivalent: true, pairs: merged, witness: None })
}

/// Decides whether `[[p]]` produces no trace from any start, breadth first
/// from each initial labeling in turn.
pub fn empty(eng: &Engine, p: TermId) -> Result<EmptyResult> {
    eng.reset_fuel();
    let (mut ex, _) = Explorer::new(eng, &[p])?;
    let nact = ex.space.query_actions;
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let starts: Vec<(usize, Bits)> = ex.starts()?.collect();
    for (origin, l0) in &starts {
        let lab = ex.labeling(l0.clone())?;
        let n = ex.node(lab, 0, vec![0])?;
        if !seen.insert(n) {
            continue;
        }
        let mut pairs: Vec<(usize, usize, usize, usize)> = vec![(n, n, usize::MAX, usize::MAX)];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let n = pairs[i].0;
            if ex.accepts(n) {
                let word = word_of(&pairs, i, &ex.space.actions);
                let witness = ex.witness((*origin, l0), word);
                return Ok(EmptyResult { empty: false, explored: seen.len(), witness: Some(witness) });
            }
            for act in 0..nact {
                let s = ex.succ(n, act)?;
                if s != 0 && seen.insert(s) {
                    pairs.push((s, s, i, act));
                    queue.push_back(pairs.len() - 1);
                }
            }
        }
    }
    Ok(EmptyResult { empty: true, explored: seen.len(), witness: None })
}

// ---------------------------------------------------------------------------
// Explicit constructions

/// Labelings of the tracked tests of `a` with transitions for `actions`.
pub struct TheoryAutomaton {
    pub space: Arc<LabelSpace>,
    pub test: TermId,
    pub states: Vec<Bits>,
    pub initial: Vec<usize>,
    pub trans: Vec<Vec<(Prim, usize)>>,
    pub accepting: Vec<bool>,
}

pub fn build_theory_automaton(eng: &Engine, a: TermId, actions: &BTreeSet<Prim>) -> Result<TheoryAutomaton> {
    eng.reset_fuel();
    let mut seeds = BTreeSet::new();
    kernel::prim_tests(a, &mut seeds);
    let space = Arc::new(LabelSpace::build(eng, &seeds, actions)?);
    let acc = space.compile(nnf(a))?;
    let starts: Vec<Bits> = if space.temporal {
        Realizable::compute(eng, space.clone())?.labelings
    } else {
        space.free_assignments(eng)?.collect()
    };
    let mut states: Vec<Bits> = Vec::new();
    let mut index: HashMap<Bits, usize> = HashMap::new();
    let mut initial = Vec::new();
    for l in starts {
        let i = *index.entry(l.clone()).or_insert_with(|| {
            states.push(l);
            states.len() - 1
        });
        initial.push(i);
    }
    let mut trans = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut out = Vec::new();
        for (k, pi) in space.actions.iter().enumerate().take(space.query_actions) {
            let next = space.step(&states[i], k);
            let j = match index.get(&next) {
                Some(j) => *j,
                None => {
                    if states.len() >= MAX_STATES {
                        return Err(KmtError::Overflow("theory automaton too large".into()));
                    }
                    states.push(next.clone());
                    index.insert(next, states.len() - 1);
                    states.len() - 1
                }
            };
            out.push((pi.clone(), j));
        }
        trans.push(out);
        i += 1;
    }
    let accepting = states.iter().map(|l| acc.eval(l)).collect();
    Ok(TheoryAutomaton { space, test: a, states, initial, trans, accepting })
}

/// Product of a term automaton with labelings: 0/1 acceptance, one successor per action.
pub struct ProductAutomaton {
    /// (labeling, term states); state 0 is the dead state.
    pub states: Vec<(Bits, Vec<usize>)>,
    pub initial: Vec<usize>,
    pub accepting: Vec<bool>,
    pub trans: Vec<Vec<(Prim, usize)>>,
}

/// Explicit product reachable from the given initial labelings (all consistent
/// starts when `starts` is `None`).
pub fn product(eng: &Engine, p: TermId, starts: Option<Vec<Vec<Lit>>>) -> Result<ProductAutomaton> {
    eng.reset_fuel();
    let (mut ex, _) = Explorer::new(eng, &[p])?;
    let nact = ex.space.query_actions;
    let initial_labs: Vec<Bits> = match starts {
        None => ex.starts()?.map(|(_, l)| l).collect(),
        Some(sets) => {
            let all: Vec<Bits> = ex.starts()?.map(|(_, l)| l).collect();
            let space = ex.space.clone();
            all.into_iter()
                .filter(|l| {
                    sets.iter().any(|lits| {
                        lits.iter().all(|(p, v)| space.index_of(p).map(|i| l.get(i) == *v).unwrap_or(false))
                    })
                })
                .collect()
        }
    };
    let mut order: Vec<usize> = vec![0];
    let mut pos: HashMap<usize, usize> = HashMap::from([(0, 0)]);
    let mut initial = Vec::new();
    for l in initial_labs {
        let lab = ex.labeling(l)?;
        let n = ex.node(lab, 0, vec![0])?;
        let k = *pos.entry(n).or_insert_with(|| {
            order.push(n);
            order.len() - 1
        });
        initial.push(k);
    }
    let mut trans = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let n = order[i];
        let mut out = Vec::new();
        for a in 0..nact {
            let s = ex.succ(n, a)?;
            let k = *pos.entry(s).or_insert_with(|| {
                order.push(s);
                order.len() - 1
            });
            out.push((ex.space.actions[a].clone(), k));
        }
        trans.push(out);
        i += 1;
    }
    let n_prims = ex.space.len();
    let states = order
        .iter()
        .map(|&n| {
            if n == 0 {
                (Bits::new(n_prims), Vec::new())
            } else {
                let (lab, _, s) = &ex.nodes[n];
                (ex.labelings[*lab].clone(), s.clone())
            }
        })
        .collect();
    let accepting = order.iter().map(|&n| ex.accepts(n)).collect();
    Ok(ProductAutomaton { states, initial, accepting, trans })
}

/// Deterministic symbolic automaton: states are sets of term states and the
/// guards leaving a state on one action are pairwise disjoint.
pub struct SymbolicDfa {
    pub states: Vec<Vec<usize>>,
    pub accept: Vec<TermId>,
    pub trans: Vec<Vec<(TermId, Prim, usize)>>,
}

/// Largest number of distinct guards combined into minterms at once.
const MAX_MINTERM_GUARDS: usize = 20;

pub fn determinize(eng: &Engine, aut: &TermAutomaton) -> Result<SymbolicDfa> {
    let mut states: Vec<Vec<usize>> = vec![vec![0]];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(vec![0], 0)]);
    let mut trans = Vec::new();
    let actions = aut.actions();
    let mut i = 0;
    while i < states.len() {
        let mut out = Vec::new();
        for pi in &actions {
            let mut guards: Vec<(TermId, usize)> = Vec::new();
            for s in &states[i] {
                for e in &aut.edges[*s] {
                    if &e.action == pi {
                        guards.push((e.guard, e.target));
                    }
                }
            }
            if guards.is_empty() {
                continue;
            }
            for (guard, targets) in minterms(eng, &guards)? {
                let j = match index.get(&targets) {
                    Some(j) => *j,
                    None => {
                        states.push(targets.clone());
                        index.insert(targets, states.len() - 1);
                        states.len() - 1
                    }
                };
                out.push((guard, pi.clone(), j));
            }
        }
        trans.push(out);
        i += 1;
    }
    let accept = states.iter().map(|s| kernel::plus_all(s.iter().map(|k| aut.states[*k].accept))).collect();
    Ok(SymbolicDfa { states, accept, trans })
}

/// Satisfiable sign combinations of the distinct guards, each with the
/// targets of its positive guards. Literals implied by the rest are dropped.
fn minterms(eng: &Engine, guards: &[(TermId, usize)]) -> Result<Vec<(TermId, Vec<usize>)>> {
    let mut distinct: Vec<TermId> = Vec::new();
    for (g, _) in guards {
        if !g.is_zero() && !distinct.contains(g) {
            distinct.push(*g);
        }
    }
    if distinct.len() > MAX_MINTERM_GUARDS {
        return Err(KmtError::Overflow("too many guards for minterm construction".into()));
    }
    let mut out = Vec::new();
    let mut signs: Vec<bool> = Vec::new();
    fn go(
        eng: &Engine,
        distinct: &[TermId],
        guards: &[(TermId, usize)],
        signs: &mut Vec<bool>,
        out: &mut Vec<(TermId, Vec<usize>)>,
    ) {
        let lits: Vec<TermId> = distinct
            .iter()
            .zip(signs.iter())
            .map(|(g, s)| if *s { *g } else { kernel::neg(*g) })
            .collect();
        if !eng.satisfiable(kernel::seq_all(lits.iter().copied())) {
            return;
        }
        if signs.len() == distinct.len() {
            let targets: BTreeSet<usize> = guards
                .iter()
                .filter(|(g, _)| distinct.iter().position(|d| d == g).map(|k| signs[k]).unwrap_or(false))
                .map(|(_, t)| *t)
                .collect();
            let mut kept = lits.clone();
            let mut k = 0;
            while k < kept.len() {
                let others = kernel::seq_all(kept.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, l)| *l));
                if eng.satisfiable(kernel::seq(others, kernel::neg(kept[k]))) {
                    k += 1;
                } else {
                    kept.remove(k);
                }
            }
            out.push((kernel::seq_all(kept), targets.into_iter().collect()));
            return;
        }
        for s in [true, false] {
            signs.push(s);
            go(eng, distinct, guards, signs, out);
            signs.pop();
        }
    }
    go(eng, &distinct, guards, &mut signs, &mut out);
    Ok(out)
}
