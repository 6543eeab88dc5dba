//! Routing policy verification over the product of shortest-path naturals
//! and bit vectors. See docs/examples/bgp.md for the model.
//!
//! Run with `cargo run --release --example bgp`.

use kmt::{automata, parse, theories, Engine};

/// Routers B and C recompute their routes; A is the destination.
/// B takes the shorter of its live neighbours' routes. C prefers any route
/// learned from B over one learned from A.
const UPDATE_B: &str = "~failAB=true; A1=true; ~failBC=true; C1=true; B:=minp(A,C); set(B1) \
    + ~failAB=true; A1=true; (failBC=true + ~C1=true); B:=minp(A); set(B1) \
    + (failAB=true + ~A1=true); ~failBC=true; C1=true; B:=minp(C); set(B1) \
    + (failAB=true + ~A1=true); (failBC=true + ~C1=true)";

const UPDATE_C: &str = "~failBC=true; B1=true; C:=minp(B); set(C1) \
    + (failBC=true + ~B1=true); ~failAC=true; A1=true; C:=minp(A); set(C1) \
    + (failBC=true + ~B1=true); (failAC=true + ~A1=true)";

/// C without the preference: the shorter of A's and B's routes.
const UPDATE_C_SHORTEST: &str = "~failAC=true; A1=true; ~failBC=true; B1=true; C:=minp(A,B); set(C1) \
    + ~failAC=true; A1=true; (failBC=true + ~B1=true); C:=minp(A); set(C1) \
    + (failAC=true + ~A1=true); ~failBC=true; B1=true; C:=minp(B); set(C1) \
    + (failAC=true + ~A1=true); (failBC=true + ~B1=true)";

/// A knows the destination; nobody else has a route yet.
const INIT: &str = "A<1; A1=true; ~B<inf; ~B1=true; ~C<inf; ~C1=true";

const NO_FAILURE: &str = "~failAB=true; ~failAC=true; ~failBC=true";

const ONE_FAILURE: &str = "failAB=true; ~failAC=true; ~failBC=true \
    + ~failAB=true; failAC=true; ~failBC=true \
    + ~failAB=true; ~failAC=true; failBC=true";

fn main() {
    let th = theories::by_name("prod(sp,bitvec)").expect("product theory");
    let prefer_b = format!("(({UPDATE_B}) + ({UPDATE_C}))*");
    let shortest = format!("(({UPDATE_B}) + ({UPDATE_C_SHORTEST}))*");
    let queries = [
        ("C prefers B; route longer than 2 without failures", &prefer_b, NO_FAILURE, "C1=true; ~C<3"),
        ("C prefers B; route longer than 2 after one failure", &prefer_b, ONE_FAILURE, "C1=true; ~C<3"),
        ("C prefers B; route shorter than one hop", &prefer_b, ONE_FAILURE, "C1=true; C<1"),
        ("C shortest; route longer than 2 after one failure", &shortest, ONE_FAILURE, "C1=true; ~C<3"),
    ];
    for (question, network, failures, bad) in queries {
        let src = format!("{INIT}; ({failures}); {network}; {bad}");
        let term = parse(&*th, &src).expect("query parses");
        let eng = Engine::new(th.clone());
        let r = automata::empty(&eng, term).expect("decidable");
        println!("{question}: {}", if r.empty { "impossible" } else { "possible" });
        if let Some(w) = r.witness {
            println!("{w}");
        }
    }
}
