//! Random terms over a theory's sample primitives, for property tests and
//! oracle cross-checks.

use crate::kernel::{self, Term, TermId};
use crate::theory::Samples;
use rand::Rng;

/// Random test of at most `depth` connective levels.
pub fn random_test(rng: &mut impl Rng, s: &Samples, depth: u32) -> TermId {
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..10) {
            0 => kernel::one(),
            1 => kernel::zero(),
            _ => s.tests[rng.gen_range(0..s.tests.len())],
        };
    }
    match rng.gen_range(0..3) {
        0 => kernel::neg(random_test(rng, s, depth - 1)),
        1 => kernel::plus(random_test(rng, s, depth - 1), random_test(rng, s, depth - 1)),
        _ => kernel::seq(random_test(rng, s, depth - 1), random_test(rng, s, depth - 1)),
    }
}

/// Random term of at most `depth` operator levels; stars are kept rare so
/// that the brute-force oracle stays cheap.
pub fn random_term(rng: &mut impl Rng, s: &Samples, depth: u32) -> TermId {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.5) && !s.actions.is_empty() {
            s.actions[rng.gen_range(0..s.actions.len())]
        } else {
            random_test(rng, s, 1)
        };
    }
    match rng.gen_range(0..7) {
        0 | 1 => kernel::plus(random_term(rng, s, depth - 1), random_term(rng, s, depth - 1)),
        2..=4 => kernel::seq(random_term(rng, s, depth - 1), random_term(rng, s, depth - 1)),
        5 => kernel::star(random_term(rng, s, depth - 1)),
        _ => random_test(rng, s, depth - 1),
    }
}

/// Random restricted action: primitive actions under `+`, `;` and `*`, no tests.
pub fn random_action(rng: &mut impl Rng, s: &Samples, depth: u32) -> TermId {
    if s.actions.is_empty() {
        return kernel::one();
    }
    if depth == 0 || rng.gen_bool(0.3) {
        return s.actions[rng.gen_range(0..s.actions.len())];
    }
    match rng.gen_range(0..5) {
        0 | 1 => kernel::plus(random_action(rng, s, depth - 1), random_action(rng, s, depth - 1)),
        2 | 3 => kernel::seq(random_action(rng, s, depth - 1), random_action(rng, s, depth - 1)),
        _ => kernel::star(random_action(rng, s, depth - 1)),
    }
}

/// Subterm positions of `t` in preorder.
fn positions(t: TermId, out: &mut Vec<TermId>) {
    out.push(t);
    match t.term() {
        Term::Plus(xs) => xs.iter().for_each(|x| positions(*x, out)),
        Term::Seq(a, b) => {
            positions(*a, out);
            positions(*b, out);
        }
        Term::Star(a) | Term::Not(a) => positions(*a, out),
        _ => {}
    }
}

/// `t` with the `k`-th preorder subterm replaced by `f` of it.
fn replace_at(t: TermId, k: &mut usize, f: &mut dyn FnMut(TermId) -> TermId) -> TermId {
    if *k == 0 {
        *k = usize::MAX;
        return f(t);
    }
    *k -= 1;
    match t.term() {
        Term::Plus(xs) => kernel::plus_all(xs.clone().into_iter().map(|x| replace_at(x, k, f))),
        Term::Seq(a, b) => {
            let a = replace_at(*a, k, f);
            kernel::seq(a, replace_at(*b, k, f))
        }
        Term::Star(a) => kernel::star(replace_at(*a, k, f)),
        Term::Not(a) => kernel::neg(replace_at(*a, k, f)),
        _ => t,
    }
}

/// One Kleene algebra with tests identity applied at a random position.
/// The result denotes the same traces as `t`.
fn rewrite_node(rng: &mut impl Rng, s: &Samples, t: TermId) -> TermId {
    match t.term() {
        Term::Star(a) => match rng.gen_range(0..3) {
            0 => kernel::plus(kernel::one(), kernel::seq(*a, t)),
            1 => kernel::plus(kernel::one(), kernel::seq(t, *a)),
            _ => match a.term() {
                // Denesting: (p + q)* == q*;(p;q*)*
                Term::Plus(xs) if xs.len() >= 2 => {
                    let p = xs[0];
                    let q = kernel::plus_all(xs[1..].iter().copied());
                    kernel::seq(kernel::star(q), kernel::star(kernel::seq(p, kernel::star(q))))
                }
                _ => kernel::plus(kernel::one(), kernel::seq(*a, t)),
            },
        },
        Term::Seq(a, b) => match (a.term(), b.term()) {
            (_, Term::Plus(ys)) => kernel::plus_all(ys.iter().map(|y| kernel::seq(*a, *y))),
            (Term::Plus(xs), _) => kernel::plus_all(xs.iter().map(|x| kernel::seq(*x, *b))),
            _ if a.is_test() && b.is_test() => kernel::seq(*b, *a),
            _ => t,
        },
        _ if t.is_test() && !t.is_zero() && !t.is_one() => {
            // Case split on a sample test: a == a;c + a;~c
            let c = s.tests[rng.gen_range(0..s.tests.len())];
            kernel::plus(kernel::seq(t, c), kernel::seq(t, kernel::neg(c)))
        }
        _ => t,
    }
}

/// A term equivalent to `t`, differing by one identity applied at a random subterm.
pub fn rewrite_equivalent(rng: &mut impl Rng, s: &Samples, t: TermId) -> TermId {
    let mut ps = Vec::new();
    positions(t, &mut ps);
    let mut k = rng.gen_range(0..ps.len());
    replace_at(t, &mut k, &mut |x| rewrite_node(rng, s, x))
}

/// `t` with one random subterm replaced by a fresh small term of the same
/// kind; usually, but not always, inequivalent.
pub fn mutate(rng: &mut impl Rng, s: &Samples, t: TermId) -> TermId {
    let mut ps = Vec::new();
    positions(t, &mut ps);
    let mut k = rng.gen_range(0..ps.len());
    replace_at(t, &mut k, &mut |x| if x.is_test() { random_test(rng, s, 1) } else { random_term(rng, s, 1) })
}

/// Random term of size at most `max_size`.
pub fn random_term_sized(rng: &mut impl Rng, s: &Samples, max_size: usize) -> TermId {
    loop {
        let t = random_term(rng, s, 4);
        if kernel::size(t) <= max_size {
            return t;
        }
    }
}

/// A pair of terms of size at most `max_size` for differential testing:
/// unrelated terms, equivalent rewrites, near-miss mutations, and extensions.
pub fn random_pair(rng: &mut impl Rng, s: &Samples, max_size: usize) -> (TermId, TermId) {
    loop {
        let p = random_term_sized(rng, s, max_size);
        let q = match rng.gen_range(0..4) {
            0 => random_term_sized(rng, s, max_size),
            1 => {
                let q = rewrite_equivalent(rng, s, p);
                if rng.gen_bool(0.5) {
                    rewrite_equivalent(rng, s, q)
                } else {
                    q
                }
            }
            2 => mutate(rng, s, p),
            _ => {
                let x = random_term(rng, s, 1);
                if rng.gen_bool(0.5) {
                    kernel::plus(p, x)
                } else {
                    kernel::seq(p, kernel::star(x))
                }
            }
        };
        if kernel::size(q) <= max_size {
            return (p, q);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theories;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tests_are_tests() {
        let s = theories::by_name("incnat").unwrap().samples();
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert!(random_test(&mut r, &s, 3).is_test());
            random_term(&mut r, &s, 4);
            assert!(kernel::is_restricted(random_action(&mut r, &s, 3)));
        }
    }
}
