//! Kleene algebra with tests over pluggable client theories.
//!
//! A client theory supplies primitive tests and actions, how a test is pushed
//! back through an action, and satisfiability of its tests. From that, this
//! crate derives normal forms, symbolic automata, and decision procedures for
//! equivalence and emptiness, plus a brute-force trace oracle to check them.
//!
//! ```
//! use kmt::{parse, theories, automata, Engine};
//!
//! let th = theories::by_name("incnat").unwrap();
//! let p = parse(&*th, "inc(x); x>0").unwrap();
//! let q = parse(&*th, "inc(x)").unwrap();
//! let eng = Engine::new(th);
//! assert!(automata::equivalent(&eng, p, q).unwrap().equivalent);
//! ```

pub mod automata;
pub mod error;
pub mod frontend;
pub mod gen;
pub mod kernel;
pub mod laws;
pub mod normalizer;
pub mod oracle;
pub mod ordering;
pub mod theories;
pub mod theory;
pub mod validate;

pub use error::{KmtError, Result};
pub use frontend::{parse, parse_test};
pub use kernel::{Prim, Term, TermId};
pub use normalizer::NormalForm;
pub use theory::{Engine, Theory};
