use std::collections::BTreeMap;

use thiserror::Error;

use super::{Hint, Name, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// Named closed terms substituted for identifiers that are not bound in scope.
#[derive(Clone, Debug, Default)]
pub struct Definitions {
    defs: BTreeMap<String, Term>,
}

impl Definitions {
    pub fn new() -> Self {
        Self::default()
    }

    /// I, K, S, D = λx.xx and Omega = D D.
    pub fn standard() -> Self {
        let mut d = Self::new();
        for (name, src) in [
            ("I", "\\z.z"),
            ("K", "\\x.\\y.x"),
            ("S", "\\x.\\y.\\z.x z (y z)"),
            ("D", "\\x.x x"),
            ("Omega", "(\\x.x x) (\\x.x x)"),
        ] {
            d.insert(name, parse(src).expect("prelude term parses"));
        }
        d
    }

    /// Panics if `term` is not closed.
    pub fn insert(&mut self, name: &str, term: Term) {
        assert!(term.is_closed(), "definition `{name}` must be a closed term");
        self.defs.insert(name.to_string(), term);
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.defs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }
}

pub fn parse(text: &str) -> Result<Term, ParseError> {
    parse_with(text, &Definitions::new())
}

pub fn parse_with(text: &str, defs: &Definitions) -> Result<Term, ParseError> {
    parse_scoped(text, defs, Vec::new())
}

/// Parse under enclosing binders named by `scope`, innermost last; a name in
/// scope becomes the corresponding dangling index.
pub fn parse_in_scope(text: &str, scope: &[String]) -> Result<Term, ParseError> {
    parse_scoped(text, &Definitions::new(), scope.to_vec())
}

fn parse_scoped(text: &str, defs: &Definitions, scope: Vec<String>) -> Result<Term, ParseError> {
    let mut p = Parser { src: text, pos: 0, scope, defs };
    let t = p.term()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected input after term"));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    scope: Vec<String>,
    defs: &'a Definitions,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError { offset: self.pos, message: message.to_string() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn at_binder(&self) -> bool {
        matches!(self.peek(), Some('\\') | Some('λ'))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        if self.at_binder() {
            return self.lam();
        }
        let mut acc = self.atom()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('(') => {
                    let a = self.atom()?;
                    acc = Term::app(acc, a);
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    let a = self.atom()?;
                    acc = Term::app(acc, a);
                }
                // a trailing abstraction extends to the right
                Some('\\') | Some('λ') => {
                    let a = self.lam()?;
                    return Ok(Term::app(acc, a));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn lam(&mut self) -> Result<Term, ParseError> {
        self.bump();
        self.skip_ws();
        let name = self.ident()?;
        self.skip_ws();
        if self.peek() != Some('.') {
            return Err(self.error("expected `.` after binder"));
        }
        self.bump();
        self.scope.push(name.clone());
        let body = self.term();
        self.scope.pop();
        Ok(Term::Lam(Hint(Name::new(&name)), Box::new(body?)))
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.bump();
                let t = self.term()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.bump();
                Ok(t)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident()?;
                if let Some(i) = self.scope.iter().rev().position(|n| *n == name) {
                    Ok(Term::Bound(i as u32))
                } else if let Some(t) = self.defs.get(&name) {
                    Ok(t.clone())
                } else {
                    Ok(Term::Free(Name::new(&name)))
                }
            }
            Some(_) => Err(self.error("expected a variable, `(` or an abstraction")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                self.bump();
            }
            _ => return Err(self.error("expected an identifier")),
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '\'' {
                self.bump();
            } else {
                break;
            }
        }
        Ok(self.src[start..self.pos].to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn identity() {
        assert_eq!(parse("\\x.x").unwrap(), Term::lam("x", v("x")));
        assert_eq!(parse("λx.x").unwrap(), Term::lam("x", v("x")));
    }

    #[test]
    fn omega_spelling() {
        let d = Term::lam("x", Term::app(v("x"), v("x")));
        assert_eq!(parse("(\\x.x x)(\\x.x x)").unwrap(), Term::app(d.clone(), d));
    }

    #[test]
    fn application_is_left_associative() {
        assert_eq!(parse("x y z").unwrap(), Term::app(Term::app(v("x"), v("y")), v("z")));
    }

    #[test]
    fn body_extends_right() {
        let t = parse("\\x. x y").unwrap();
        assert_eq!(t, Term::lam("x", Term::app(v("x"), v("y"))));
        let t = parse("x \\y.y z").unwrap();
        assert_eq!(t, Term::app(v("x"), Term::lam("y", Term::app(v("y"), v("z")))));
    }

    #[test]
    fn primes_and_digits_in_names() {
        assert_eq!(parse("x'1").unwrap(), v("x'1"));
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse("(x y").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = parse("\\x x").unwrap_err();
        assert_eq!(e.offset, 3);
        let e = parse("x )").unwrap_err();
        assert_eq!(e.offset, 2);
        assert!(parse("").is_err());
        assert!(parse("1").is_err());
    }

    #[test]
    fn definitions_expand_unless_shadowed() {
        let defs = Definitions::standard();
        let t = parse_with("I x", &defs).unwrap();
        assert_eq!(t, Term::app(parse("\\z.z").unwrap(), v("x")));
        let t = parse_with("\\I.I", &defs).unwrap();
        assert_eq!(t, parse("\\a.a").unwrap());
        assert_eq!(parse("I").unwrap(), v("I"));
    }
}
