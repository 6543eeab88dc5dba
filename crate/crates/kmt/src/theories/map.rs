//! Maps from naturals to naturals over IncNat. Writes use constant keys and
//! expression values; reads use expression keys and constant values.

use super::incnat::{self, Expr, IncNat};
use super::{ident, name_arg, num, product, STATE_LIMIT};
use crate::error::{KmtError, Result};
use crate::kernel::{self, register_printer, Arg, Prim, Sym, TermId};
use crate::oracle::{Entry, State, Val};
use crate::theory::{partition_lits, Atom, AtomArg, AtomCtx, AxiomSchema, Engine, Lit, Samples, StateModel, Theory};
use parking_lot::RwLock;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Once;

const LEVEL: u32 = 1;

fn init_printers() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        register_printer("mapeq", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}[{}]={}", p.args[0], p.args[1], p.args[2]));
        register_printer("mapset", |p, f: &mut fmt::Formatter<'_>| write!(f, "{}[{}]:={}", p.args[0], p.args[1], p.args[2]));
    });
}

/// The test `x[e]=c`.
pub fn read_prim(x: &str, key: &Expr, c: u64) -> Prim {
    init_printers();
    Prim::new(LEVEL, "mapeq", vec![name_arg(x), key.to_arg(), Arg::Nat(c)])
}

pub fn read(x: &str, key: &Expr, c: u64) -> TermId {
    kernel::test(read_prim(x, key, c))
}

/// The action `x[c]:=e`.
pub fn write_prim(x: &str, c: u64, e: &Expr) -> Prim {
    init_printers();
    Prim::new(0, "mapset", vec![name_arg(x), Arg::Nat(c), e.to_arg()])
}

fn owns_test(p: &Prim) -> bool {
    p.is("mapeq")
}

fn owns_action(p: &Prim) -> bool {
    p.is("mapset")
}

fn read_parts(p: &Prim) -> (Sym, Expr, u64) {
    (p.name(0).unwrap().clone(), Expr::from_arg(&p.args[1]).unwrap(), p.nat(2).unwrap())
}

fn map_value(s: &State, x: &str) -> BTreeMap<u64, u64> {
    match s.get(x) {
        Some(Val::Map(m)) => m.clone(),
        _ => BTreeMap::new(),
    }
}

/// Assignment to key variables making the map literals consistent with the
/// IncNat literals, if any. Candidates go past every constant by the number
/// of key variables, so distinct fresh values are always available.
fn solve_keys(lits: &[Lit]) -> Option<BTreeMap<Sym, u64>> {
    let (maps, inner) = partition_lits(lits, owns_test);
    let bounds = incnat::bounds(&inner);
    if bounds.values().any(|b| b.least().is_none()) {
        return None;
    }
    let reads: Vec<(Sym, Expr, u64, bool)> = maps
        .iter()
        .map(|(p, pol)| {
            let (x, k, c) = read_parts(p);
            (x, k, c, *pol)
        })
        .collect();
    let keys: BTreeSet<Sym> = reads.iter().filter_map(|r| r.1.var().cloned()).collect();
    let mut top = 0;
    for (p, _) in lits {
        for a in &p.args {
            if let Arg::Nat(n) = a {
                top = top.max(*n);
            }
        }
    }
    let top = top + keys.len() as u64 + 1;
    let choices: Vec<Vec<u64>> = keys
        .iter()
        .map(|k| {
            let b = bounds.get(k).copied().unwrap_or_default();
            (0..=top).filter(|v| b.admits(*v)).collect::<Vec<_>>()
        })
        .collect();
    let combos = product(&choices, STATE_LIMIT).ok()?;
    'combo: for combo in combos {
        let env: BTreeMap<Sym, u64> = keys.iter().cloned().zip(combo).collect();
        let mut cells: BTreeMap<(Sym, u64), (Option<u64>, BTreeSet<u64>)> = BTreeMap::new();
        for (x, k, c, pol) in &reads {
            let kv = match k {
                Expr::Const(n) => *n,
                Expr::Var(v) => env[v],
            };
            let cell = cells.entry((x.clone(), kv)).or_default();
            if *pol {
                if cell.0.is_some_and(|d| d != *c) {
                    continue 'combo;
                }
                cell.0 = Some(*c);
            } else {
                cell.1.insert(*c);
            }
        }
        if cells.values().all(|(pos, neg)| pos.is_none_or(|c| !neg.contains(&c))) {
            return Some(env);
        }
    }
    None
}

/// Constant keys and value expressions seen in writes to one map.
type Writes = (BTreeSet<u64>, BTreeSet<Expr>);

pub struct MapTheory {
    inner: IncNat,
    writes: RwLock<BTreeMap<Sym, Writes>>,
}

impl Default for MapTheory {
    fn default() -> Self {
        MapTheory::new()
    }
}

impl MapTheory {
    pub fn new() -> MapTheory {
        init_printers();
        MapTheory { inner: IncNat::new(), writes: RwLock::new(BTreeMap::new()) }
    }

    pub fn write(&self, x: &str, c: u64, e: Expr) -> TermId {
        let p = write_prim(x, c, &e);
        let mut w = self.writes.write();
        let entry = w.entry(kernel::sym(x)).or_default();
        entry.0.insert(c);
        entry.1.insert(e);
        kernel::act(p)
    }
}

impl Theory for MapTheory {
    fn name(&self) -> String {
        "map".into()
    }

    fn owns_test(&self, p: &Prim) -> bool {
        owns_test(p) || self.inner.owns_test(p)
    }

    fn owns_action(&self, p: &Prim) -> bool {
        owns_action(p) || self.inner.owns_action(p)
    }

    fn max_level(&self) -> u32 {
        LEVEL
    }

    fn parse_atom(&self, atom: &Atom, ctx: &dyn AtomCtx) -> Result<TermId> {
        let unknown = || KmtError::UnknownAtom(atom.describe());
        match atom {
            Atom::Index { map, key, op, rhs } if op == "=" || op == "==" => {
                let k = Expr::parse(key).ok_or_else(unknown)?;
                Ok(read(map, &k, num(rhs).ok_or_else(unknown)?))
            }
            Atom::Index { map, key: AtomArg::Num(c), op, rhs } if op == ":=" => {
                Ok(self.write(map, *c, Expr::parse(rhs).ok_or_else(unknown)?))
            }
            Atom::Index { .. } => Err(KmtError::Theory(format!(
                "map atom {} needs a constant key when written and a constant value when read",
                atom.describe()
            ))),
            Atom::Call(h, args) if h == "mapset" && args.len() == 3 => {
                let x = ident(&args[0]).ok_or_else(unknown)?;
                let c = num(&args[1]).ok_or_else(unknown)?;
                Ok(self.write(x, c, Expr::parse(&args[2]).ok_or_else(unknown)?))
            }
            _ => self.inner.parse_atom(atom, ctx),
        }
    }

    fn sub(&self, eng: &Engine, alpha: &Prim) -> Vec<TermId> {
        if !owns_test(alpha) {
            return self.inner.sub(eng, alpha);
        }
        let (x, k, c) = read_parts(alpha);
        let (keys, vals) = self.writes.read().get(&x).cloned().unwrap_or_default();
        let mut out = Vec::new();
        for c1 in keys {
            out.extend(k.eq_subterms(eng, c1));
        }
        for e1 in vals {
            out.extend(e1.eq_subterms(eng, c));
        }
        out
    }

    fn push_back(&self, eng: &Engine, pi: &Prim, alpha: &Prim) -> Result<Vec<TermId>> {
        let keep = || Ok(vec![kernel::test(alpha.clone())]);
        match (owns_action(pi), owns_test(alpha)) {
            (false, false) => self.inner.push_back(eng, pi, alpha),
            (true, false) => keep(),
            (false, true) => {
                let (_, k, _) = read_parts(alpha);
                match k.var() {
                    Some(v) if self.inner.vars(pi).contains(v) => Err(KmtError::Theory(format!(
                        "{pi} changes the key of {alpha}; key variables of map reads must not be updated"
                    ))),
                    _ => keep(),
                }
            }
            (true, true) => {
                if pi.name(0) != alpha.name(0) {
                    return keep();
                }
                let (_, k, c2) = read_parts(alpha);
                let c1 = pi.nat(1).unwrap();
                let e1 = Expr::from_arg(&pi.args[2]).unwrap();
                let same = k.eq_test(c1);
                Ok(vec![
                    kernel::seq(same, e1.eq_test(c2)),
                    kernel::seq(kernel::neg(same), kernel::test(alpha.clone())),
                ])
            }
        }
    }

    fn sat(&self, _eng: &Engine, lits: &[Lit]) -> bool {
        solve_keys(lits).is_some()
    }

    fn vars(&self, p: &Prim) -> Vec<Sym> {
        if owns_test(p) {
            let (x, k, _) = read_parts(p);
            return std::iter::once(x).chain(k.var().cloned()).collect();
        }
        self.inner.vars(p)
    }

    fn model(&self) -> Option<&dyn StateModel> {
        Some(self)
    }

    fn samples(&self) -> Samples {
        let k = Expr::Var(kernel::sym("k"));
        let v = Expr::Var(kernel::sym("v"));
        Samples {
            tests: vec![
                read("m", &Expr::Const(0), 1),
                read("m", &Expr::Const(1), 0),
                read("m", &k, 1),
                incnat::gt("k", 0),
                incnat::gt("v", 0),
            ],
            actions: vec![self.write("m", 0, Expr::Const(1)), self.write("m", 1, v.clone()), incnat::inc("v")],
        }
    }

    fn axioms(&self) -> Vec<AxiomSchema> {
        let key = |r: &mut dyn rand::RngCore| {
            if r.gen_bool(0.5) {
                Expr::Var(kernel::sym("k"))
            } else {
                Expr::Const(r.gen_range(0..3))
            }
        };
        let val = |r: &mut dyn rand::RngCore| {
            if r.gen_bool(0.5) {
                Expr::Var(kernel::sym("v"))
            } else {
                Expr::Const(r.gen_range(0..3))
            }
        };
        for c in 0..3 {
            self.write("m", c, Expr::Var(kernel::sym("v")));
            for n in 0..3 {
                self.write("m", c, Expr::Const(n));
            }
        }
        let w = |c: u64, e: &Expr| kernel::act(write_prim("m", c, e));
        vec![
            AxiomSchema::new("E-Comm", move |r| {
                let (c, e, n) = (r.gen_range(0..3), val(r), r.gen_range(0..3));
                let t = incnat::gt("k", n);
                (kernel::seq(w(c, &e), t), kernel::seq(t, w(c, &e)))
            }),
            AxiomSchema::new("Map-NEq", move |r| {
                let (c1, e1, k, c2) = (r.gen_range(0..3), val(r), key(r), r.gen_range(0..3));
                let pre = kernel::seq(kernel::neg(k.eq_test(c1)), read("m", &k, c2));
                (kernel::seq(w(c1, &e1), kernel::seq(kernel::neg(k.eq_test(c1)), read("m", &k, c2))), kernel::seq(pre, w(c1, &e1)))
            }),
            AxiomSchema::new("Map-Eq", move |r| {
                let (c1, e1, k, c2) = (r.gen_range(0..3), val(r), key(r), r.gen_range(0..3));
                let pre = kernel::seq(k.eq_test(c1), e1.eq_test(c2));
                (kernel::seq(w(c1, &e1), kernel::seq(k.eq_test(c1), read("m", &k, c2))), kernel::seq(pre, w(c1, &e1)))
            }),
        ]
    }
}

impl StateModel for MapTheory {
    fn pred(&self, alpha: &Prim, trace: &[Entry], eval: &dyn Fn(TermId, &[Entry]) -> bool) -> bool {
        if !owns_test(alpha) {
            return self.inner.model().unwrap().pred(alpha, trace, eval);
        }
        let s = &trace.last().expect("nonempty trace").state;
        let (x, k, c) = read_parts(alpha);
        map_value(s, &x).get(&k.eval(s)).copied().unwrap_or(0) == c
    }

    fn act(&self, pi: &Prim, s: &State) -> State {
        if !owns_action(pi) {
            return self.inner.model().unwrap().act(pi, s);
        }
        let x = pi.name(0).unwrap().clone();
        let v = Expr::from_arg(&pi.args[2]).unwrap().eval(s);
        let mut m = map_value(s, &x);
        m.insert(pi.nat(1).unwrap(), v);
        let mut out = s.clone();
        out.insert(x, Val::Map(m));
        out
    }

    fn states(&self, tests: &BTreeSet<Prim>, actions: &BTreeSet<Prim>, bound: u64) -> Result<Vec<State>> {
        // Key variables and written variables range over the inner states
        // even when no inner test mentions them.
        let mut inner_tests = tests.clone();
        for p in tests.iter().filter(|p| owns_test(p)) {
            if let (_, Expr::Var(k), _) = read_parts(p) {
                inner_tests.insert(incnat::gt_prim(&k, 0));
            }
        }
        for p in actions.iter().filter(|p| owns_action(p)) {
            if let Some(Expr::Var(v)) = Expr::from_arg(&p.args[2]) {
                inner_tests.insert(incnat::gt_prim(&v, 0));
            }
        }
        let base = self.inner.model().unwrap().states(&inner_tests, actions, bound)?;
        // Per map: keys are the mentioned constants, the two smallest
        // naturals, and the value each key variable holds in the base state;
        // values are 0, every tested constant, and one value above them all
        // so that every read test can fail.
        let mut keys: BTreeMap<Sym, BTreeSet<u64>> = BTreeMap::new();
        let mut key_vars: BTreeMap<Sym, BTreeSet<Expr>> = BTreeMap::new();
        let mut vals: BTreeMap<Sym, BTreeSet<u64>> = BTreeMap::new();
        for p in tests.iter().filter(|p| owns_test(p)) {
            let (x, k, c) = read_parts(p);
            let ks = keys.entry(x.clone()).or_insert_with(|| [0, 1].into_iter().collect());
            match k {
                Expr::Const(n) => {
                    ks.insert(n);
                }
                e @ Expr::Var(_) => {
                    key_vars.entry(x.clone()).or_default().insert(e);
                }
            }
            vals.entry(x).or_insert_with(|| [0].into_iter().collect()).insert(c);
        }
        for p in actions.iter().filter(|p| owns_action(p)) {
            let x = p.name(0).unwrap().clone();
            keys.entry(x).or_insert_with(|| [0, 1].into_iter().collect()).insert(p.nat(1).unwrap());
        }
        let per_state = STATE_LIMIT / base.len().max(1);
        let mut out = Vec::new();
        for s in &base {
            let mut cells: Vec<(Sym, u64)> = Vec::new();
            let mut choices: Vec<Vec<u64>> = Vec::new();
            for (x, ks) in &keys {
                let mut ks = ks.clone();
                ks.extend(key_vars.get(x).into_iter().flatten().map(|e| e.eval(s)));
                let mut vs: Vec<u64> = vals.get(x).map(|v| v.iter().copied().collect()).unwrap_or_else(|| vec![0]);
                vs.push(vs.last().map_or(1, |m| m + 1));
                for k in ks {
                    cells.push((x.clone(), k));
                    choices.push(vs.clone());
                }
            }
            for combo in product(&choices, per_state)? {
                let mut t = s.clone();
                for ((x, k), v) in cells.iter().zip(&combo) {
                    let mut m = map_value(&t, x);
                    m.insert(*k, *v);
                    t.insert(x.clone(), Val::Map(m));
                }
                out.push(t);
            }
        }
        Ok(out)
    }

    fn witness(&self, lits: &[Lit]) -> Option<State> {
        let env = solve_keys(lits)?;
        let (maps, mut inner) = partition_lits(lits, owns_test);
        for (v, n) in &env {
            if *n > 0 {
                inner.push((incnat::gt_prim(v, n - 1), true));
            }
            inner.push((incnat::gt_prim(v, *n), false));
        }
        let mut s = self.inner.model().unwrap().witness(&inner)?;
        let mut cells: BTreeMap<(Sym, u64), (Option<u64>, BTreeSet<u64>)> = BTreeMap::new();
        for (p, pol) in &maps {
            let (x, k, c) = read_parts(p);
            let cell = cells.entry((x, k.eval(&s))).or_default();
            if *pol {
                cell.0 = Some(c);
            } else {
                cell.1.insert(c);
            }
        }
        for ((x, k), (pos, neg)) in cells {
            let v = pos.unwrap_or_else(|| (0..).find(|v| !neg.contains(v)).unwrap());
            let mut m = map_value(&s, &x);
            m.insert(k, v);
            s.insert(x, Val::Map(m));
        }
        Some(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn k() -> Expr {
        Expr::Var(kernel::sym("k"))
    }

    #[test]
    fn key_solving() {
        let a = (read_prim("m", &k(), 1), true);
        let b = (read_prim("m", &Expr::Const(3), 2), true);
        assert!(solve_keys(&[a.clone(), b.clone()]).is_some());
        let pin = (incnat::gt_prim("k", 2), true);
        let cap = (incnat::gt_prim("k", 3), false);
        assert!(solve_keys(&[a, b, pin, cap]).is_none());
    }

    #[test]
    fn write_read_pushback() {
        let t = Arc::new(MapTheory::new());
        let e = Engine::new(t.clone());
        let got = t.push_back(&e, &write_prim("m", 0, &Expr::Const(5)), &read_prim("m", &Expr::Const(0), 5)).unwrap();
        // Constant keys decide the case split: the same-key branch is 1 and
        // the other branch is guarded by ~1, which nnf erases.
        assert_eq!(got[0], kernel::one());
        assert_eq!(kernel::nnf(got[1]), kernel::zero());
        assert_eq!(read("m", &k(), 1).to_string(), "m[k]=1");
        assert_eq!(write_prim("m", 0, &Expr::Const(5)).to_string(), "m[0]:=5");
    }

    #[test]
    fn key_update_is_rejected() {
        let t = Arc::new(MapTheory::new());
        let e = Engine::new(t.clone());
        assert!(t.push_back(&e, &incnat::inc_prim("k"), &read_prim("m", &k(), 1)).is_err());
        assert!(t.push_back(&e, &incnat::inc_prim("v"), &read_prim("m", &k(), 1)).is_ok());
    }
}
