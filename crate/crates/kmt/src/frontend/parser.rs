//! Term parser. Atoms are handed to the active theory's parse hook.
//!
//! ```text
//! term    ::= seq ('+' seq)*
//! seq     ::= starred ((';' | '.') starred)*
//! starred ::= negated '*'*
//! negated ::= '~' negated | primary
//! primary ::= '(' term ')' | 'true' | 'false' | atom
//! atom    ::= ident
//!           | ident '(' args ')'
//!           | ident '[' arg ']' op arg
//!           | ident op arg
//! ```

use crate::error::{KmtError, Result};
use crate::kernel::{self, TermId};
use crate::theory::{Atom, AtomArg, AtomCtx, Theory};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Sym(&'static str),
}

/// Multi-character symbols first so that the longest match wins.
const SYMBOLS: [&str; 19] =
    [":=", "<-", "<=", ">=", "==", "(", ")", "[", "]", ",", "+", ";", ".", "*", "~", "!", "<", ">", "="];

const INFIX: [&str; 8] = [":=", "<-", "<=", ">=", "==", "<", ">", "="];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i]
                .parse()
                .map_err(|_| KmtError::Parse { pos: start, msg: "number too large".into() })?;
            out.push((Tok::Num(n), start));
            continue;
        }
        for s in SYMBOLS {
            if src[i..].starts_with(s) {
                out.push((Tok::Sym(s), i));
                i += s.len();
                continue 'outer;
            }
        }
        let ch = src[i..].chars().next().unwrap();
        return Err(KmtError::Parse { pos: i, msg: format!("unexpected character `{ch}`") });
    }
    Ok(out)
}

struct Ctx<'a> {
    theory: &'a dyn Theory,
}

impl AtomCtx for Ctx<'_> {
    fn arg_test(&self, arg: &AtomArg) -> Result<TermId> {
        let t = match arg {
            AtomArg::Term(t) => *t,
            AtomArg::Ident(s) if s == "true" => kernel::one(),
            AtomArg::Ident(s) if s == "false" => kernel::zero(),
            AtomArg::Ident(s) => self.theory.parse_atom(&Atom::Bare(s.clone()), self)?,
            AtomArg::Call(h, args) => self.theory.parse_atom(&Atom::Call(h.clone(), args.clone()), self)?,
            AtomArg::Num(n) => return Err(KmtError::Theory(format!("expected a test, found {n}"))),
        };
        if !t.is_test() {
            return Err(KmtError::Theory(format!("expected a test, found action {t}")));
        }
        Ok(t)
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: Ctx<'a>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |(_, p)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(KmtError::Parse { pos: self.offset(), msg: msg.into() })
    }

    fn eat(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(t)) if *t == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn term(&mut self) -> Result<TermId> {
        let mut t = self.seq()?;
        while self.eat("+") {
            let r = self.seq()?;
            t = kernel::plus(t, r);
        }
        Ok(t)
    }

    fn seq(&mut self) -> Result<TermId> {
        let mut parts = vec![self.starred()?];
        while self.eat(";") || self.eat(".") {
            parts.push(self.starred()?);
        }
        Ok(kernel::seq_all(parts))
    }

    fn starred(&mut self) -> Result<TermId> {
        let mut t = self.negated()?;
        while self.eat("*") {
            t = kernel::star(t);
        }
        Ok(t)
    }

    fn negated(&mut self) -> Result<TermId> {
        let start = self.offset();
        if self.eat("~") || self.eat("!") {
            let t = self.negated()?;
            return kernel::not(t).map_err(|e| match e {
                KmtError::NegatedAction(_) => {
                    KmtError::NegatedAction(format!("{} (at byte {start})", t))
                }
                e => e,
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<TermId> {
        match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(")")?;
                Ok(t)
            }
            Some(Tok::Ident(s)) if s == "true" => {
                self.pos += 1;
                Ok(kernel::one())
            }
            Some(Tok::Ident(s)) if s == "false" => {
                self.pos += 1;
                Ok(kernel::zero())
            }
            Some(Tok::Ident(_)) => self.atom(),
            Some(_) => self.err("expected a term"),
            None => self.err("unexpected end of input"),
        }
    }

    fn atom(&mut self) -> Result<TermId> {
        let start = self.offset();
        let Some(Tok::Ident(head)) = self.peek().cloned() else { unreachable!() };
        self.pos += 1;
        let atom = match self.peek().cloned() {
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                Atom::Call(head, self.args()?)
            }
            Some(Tok::Sym("[")) => {
                self.pos += 1;
                let key = self.arg()?;
                self.expect("]")?;
                let op = self.infix_op()?;
                Atom::Index { map: head, key, op, rhs: self.rhs()? }
            }
            Some(Tok::Sym(s)) if INFIX.contains(&s) => {
                self.pos += 1;
                Atom::Infix { lhs: head, op: s.to_string(), rhs: self.rhs()? }
            }
            _ => Atom::Bare(head),
        };
        let end = self.offset();
        let text = self.src[start..end].trim().to_string();
        self.ctx.theory.parse_atom(&atom, &self.ctx).map_err(|e| match e {
            KmtError::UnknownAtom(_) => KmtError::UnknownAtom(text),
            e => e,
        })
    }

    fn infix_op(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Sym(s)) if INFIX.contains(s) => {
                let s = s.to_string();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected an operator"),
        }
    }

    /// Right-hand side of an infix atom: a number, a name, or a call of names.
    fn rhs(&mut self) -> Result<AtomArg> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(AtomArg::Num(n))
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                if self.eat("(") {
                    Ok(AtomArg::Call(s, self.args()?))
                } else {
                    Ok(AtomArg::Ident(s))
                }
            }
            _ => self.err("expected a number or a name"),
        }
    }

    fn args(&mut self) -> Result<Vec<AtomArg>> {
        let mut out = Vec::new();
        if self.eat(")") {
            return Ok(out);
        }
        loop {
            out.push(self.arg()?);
            if self.eat(")") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn arg_ends(&self, k: usize) -> bool {
        matches!(self.peek_at(k), Some(Tok::Sym(",")) | Some(Tok::Sym(")")) | Some(Tok::Sym("]")) | None)
    }

    /// A lone number or name stays raw; anything longer is parsed as a term.
    fn arg(&mut self) -> Result<AtomArg> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) if self.arg_ends(1) => {
                self.pos += 1;
                Ok(AtomArg::Num(n))
            }
            Some(Tok::Ident(s)) if self.arg_ends(1) && s != "true" && s != "false" => {
                self.pos += 1;
                Ok(AtomArg::Ident(s))
            }
            _ => Ok(AtomArg::Term(self.term()?)),
        }
    }
}

/// Parses a term of `theory`.
pub fn parse(theory: &dyn Theory, src: &str) -> Result<TermId> {
    let toks = lex(src)?;
    let mut p = Parser { src, toks, pos: 0, ctx: Ctx { theory } };
    let t = p.term()?;
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(t)
}

/// Parses a term and rejects actions.
pub fn parse_test(theory: &dyn Theory, src: &str) -> Result<TermId> {
    let t = parse(theory, src)?;
    if !t.is_test() {
        return Err(KmtError::Parse { pos: 0, msg: format!("expected a test, found {t}") });
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theories::{self, incnat};

    fn inc() -> std::sync::Arc<dyn Theory> {
        theories::by_name("incnat").unwrap()
    }

    #[test]
    fn precedence() {
        let t = inc();
        let p = parse(&*t, "x>1 + inc(x); x>2*").unwrap();
        let want = kernel::plus(incnat::gt("x", 1), kernel::seq(incnat::inc("x"), kernel::star(incnat::gt("x", 2))));
        assert_eq!(p, want);
        let q = parse(&*t, "~x>1*").unwrap();
        assert_eq!(q, kernel::star(kernel::neg(incnat::gt("x", 1))));
        assert_eq!(parse(&*t, "inc(x) . inc(y)").unwrap(), parse(&*t, "inc(x);inc(y)").unwrap());
    }

    #[test]
    fn constants_and_errors() {
        let t = inc();
        assert_eq!(parse(&*t, "true").unwrap(), kernel::one());
        assert_eq!(parse(&*t, "false").unwrap(), kernel::zero());
        assert!(matches!(parse(&*t, "~inc(x)"), Err(KmtError::NegatedAction(_))));
        match parse(&*t, "x>1 +") {
            Err(KmtError::Parse { pos, .. }) => assert_eq!(pos, 5),
            r => panic!("{r:?}"),
        }
        match parse(&*t, "frob(x)") {
            Err(KmtError::UnknownAtom(s)) => assert_eq!(s, "frob(x)"),
            r => panic!("{r:?}"),
        }
        assert!(matches!(parse(&*t, "x>1)"), Err(KmtError::Parse { .. })));
        assert!(matches!(parse(&*t, "x # 1"), Err(KmtError::Parse { pos: 2, .. })));
    }

    #[test]
    fn temporal_arguments_are_terms() {
        let t = theories::by_name("ltlf-incnat").unwrap();
        let p = parse(&*t, "inc(x)*; since(true, x>2)").unwrap();
        assert_eq!(p.to_string(), "inc(x)*; since(true,x>2)");
        assert_eq!(parse(&*t, &p.to_string()).unwrap(), p);
        let q = parse(&*t, "last(x>1 + ~last(x>0))").unwrap();
        assert_eq!(parse(&*t, &q.to_string()).unwrap(), q);
    }
}
