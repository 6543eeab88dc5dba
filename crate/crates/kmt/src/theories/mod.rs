//! Built-in client theories and lookup by name.

pub mod bitvec;
pub mod incnat;
pub mod ltlf;
pub mod map;
pub mod netkat;
pub mod prod;
pub mod set;
pub mod sp;

use crate::error::{KmtError, Result};
use crate::kernel::Arg;
use crate::theory::{AtomArg, Registry, Theory};
use std::sync::Arc;

pub use bitvec::BitVec;
pub use incnat::IncNat;
pub use ltlf::Ltlf;
pub use map::MapTheory;
pub use netkat::NetKat;
pub use prod::Prod;
pub use set::SetTheory;
pub use sp::Sp;

/// Names accepted by [`by_name`] for the built-in theories.
pub const BUILTIN: [&str; 8] = ["bitvec", "incnat", "prod-bitvec-incnat", "set", "map", "ltlf-incnat", "netkat", "sp"];

/// Builds a fresh theory instance from its name. Composites use functional
/// notation, `ltlf(incnat)`, `prod(bitvec,incnat)`, or the dashed forms.
pub fn by_name(name: &str) -> Result<Arc<dyn Theory>> {
    let name: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some((head, args)) = split_call(&name) {
        return build(&head, &args, &name);
    }
    let parts: Vec<&str> = name.split('-').collect();
    match parts.as_slice() {
        [single] => build(single, &[], &name),
        ["ltlf", rest @ ..] => build("ltlf", &[rest.join("-")], &name),
        ["set", rest @ ..] => build("set", &[rest.join("-")], &name),
        ["map", rest @ ..] => build("map", &[rest.join("-")], &name),
        ["prod", a, b] => build("prod", &[a.to_string(), b.to_string()], &name),
        _ => Err(KmtError::UnknownTheory(name.clone())),
    }
}

fn build(head: &str, args: &[String], full: &str) -> Result<Arc<dyn Theory>> {
    match (head, args.len()) {
        ("bitvec", 0) => Ok(Arc::new(BitVec::new())),
        ("incnat", 0) => Ok(Arc::new(IncNat::new())),
        ("netkat", 0) => Ok(Arc::new(NetKat::new())),
        ("sp", 0) => Ok(Arc::new(Sp::new())),
        ("set", 0) => Ok(Arc::new(SetTheory::new())),
        ("map", 0) => Ok(Arc::new(MapTheory::new())),
        ("set", 1) if args[0] == "incnat" => Ok(Arc::new(SetTheory::new())),
        ("map", 1) if args[0] == "incnat" => Ok(Arc::new(MapTheory::new())),
        ("ltlf", 1) => Ok(Arc::new(Ltlf::new(by_name(&args[0])?))),
        ("prod", 2) => Ok(Arc::new(Prod::new(by_name(&args[0])?, by_name(&args[1])?)?)),
        _ => Err(KmtError::UnknownTheory(full.to_string())),
    }
}

/// Splits `head(a,b)` at top-level commas.
fn split_call(s: &str) -> Option<(String, Vec<String>)> {
    let open = s.find('(')?;
    if !s.ends_with(')') {
        return None;
    }
    let head = s[..open].to_string();
    let inner = &s[open + 1..s.len() - 1];
    let mut args = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in inner.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            ',' if depth == 0 => args.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    if !cur.is_empty() {
        args.push(cur);
    }
    Some((head, args))
}

/// Registry holding the eight built-ins under their canonical names.
pub fn builtin_registry() -> Registry {
    let mut r = Registry::new();
    for name in BUILTIN {
        r.register_theory(name, by_name(name).expect("built-in theory")).expect("distinct names");
    }
    r
}

pub(crate) fn ident(arg: &AtomArg) -> Option<&str> {
    match arg {
        AtomArg::Ident(s) => Some(s),
        _ => None,
    }
}

pub(crate) fn num(arg: &AtomArg) -> Option<u64> {
    match arg {
        AtomArg::Num(n) => Some(*n),
        _ => None,
    }
}

pub(crate) fn name_arg(s: &str) -> Arg {
    Arg::Name(crate::kernel::sym(s))
}

/// Cartesian product of per-variable choices, capped at `limit` combinations.
pub(crate) fn product<T: Clone>(choices: &[Vec<T>], limit: usize) -> Result<Vec<Vec<T>>> {
    let total: usize = choices.iter().map(|c| c.len().max(1)).try_fold(1usize, |acc, n| acc.checked_mul(n)).unwrap_or(usize::MAX);
    if total > limit {
        return Err(KmtError::Budget(format!("{total} states exceed the enumeration limit {limit}")));
    }
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for prefix in &out {
            for v in c {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Upper bound on states any model enumerates for the oracle.
pub const STATE_LIMIT: usize = 200_000;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for n in BUILTIN {
            assert!(by_name(n).is_ok(), "{n}");
        }
        assert_eq!(by_name("ltlf(incnat)").unwrap().name(), "ltlf-incnat");
        assert_eq!(by_name("prod(bitvec,incnat)").unwrap().name(), "prod-bitvec-incnat");
        assert!(matches!(by_name("nope"), Err(KmtError::UnknownTheory(_))));
    }

    #[test]
    fn registry_rejects_duplicates() {
        let mut r = builtin_registry();
        assert_eq!(r.names().len(), 8);
        assert!(matches!(
            r.register_theory("incnat", by_name("incnat").unwrap()),
            Err(KmtError::DuplicateTheory(_))
        ));
        assert_eq!(r.get("ltlf-incnat").unwrap().theory.name(), "ltlf-incnat");
    }
}
