use std::collections::BTreeSet;

use super::{Name, Term};

/// Minimal-parentheses rendering. Abstractions print as `\x.body`.
pub fn print(t: &Term) -> String {
    print_in_scope(t, &[])
}

/// Render a term whose dangling indices refer to `scope` (innermost last).
pub fn print_in_scope(t: &Term, scope: &[String]) -> String {
    let free = t.free_names();
    let mut p = Printer { out: String::new(), names: scope.to_vec(), free };
    p.term(t);
    p.out
}

struct Printer {
    out: String,
    names: Vec<String>,
    free: BTreeSet<Name>,
}

impl Printer {
    fn term(&mut self, t: &Term) {
        match t {
            Term::Lam(..) => self.lam(t),
            Term::App(f, a) => {
                match &**f {
                    Term::Lam(..) => self.paren(f),
                    _ => self.term(f),
                }
                self.out.push(' ');
                match &**a {
                    Term::Bound(_) | Term::Free(_) => self.term(a),
                    _ => self.paren(a),
                }
            }
            Term::Free(x) => self.out.push_str(x.as_str()),
            Term::Bound(i) => {
                let i = *i as usize;
                match self.names.len().checked_sub(i + 1) {
                    Some(k) => {
                        let n = self.names[k].clone();
                        self.out.push_str(&n);
                    }
                    None => self.out.push_str(&format!("#{i}")),
                }
            }
        }
    }

    fn paren(&mut self, t: &Term) {
        self.out.push('(');
        self.term(t);
        self.out.push(')');
    }

    fn lam(&mut self, t: &Term) {
        let Term::Lam(h, body) = t else { unreachable!() };
        let name = self.fresh(h.0.as_str(), body);
        self.out.push('\\');
        self.out.push_str(&name);
        self.out.push('.');
        self.names.push(name);
        self.term(body);
        self.names.pop();
    }

    fn fresh(&self, hint: &str, body: &Term) -> String {
        let mut cand = hint.to_string();
        while self.clashes(&cand, body) {
            cand.push('\'');
        }
        cand
    }

    fn clashes(&self, cand: &str, body: &Term) -> bool {
        if self.free.iter().any(|n| n.as_str() == cand) {
            return true;
        }
        // an enclosing binder with this name that the body still refers to
        let len = self.names.len();
        (1..=len).any(|k| self.names[len - k] == cand && body.count_bound(k as u32) > 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse;

    fn rt(s: &str) -> String {
        print(&parse(s).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(rt("\\x.x"), "\\x.x");
        assert_eq!(rt("x y z"), "x y z");
        assert_eq!(rt("x (y z)"), "x (y z)");
        assert_eq!(rt("(\\x.x x)(\\x.x x)"), "(\\x.x x) (\\x.x x)");
        assert_eq!(rt("x (\\y.y)"), "x (\\y.y)");
    }

    #[test]
    fn shadowing_renames_only_when_needed() {
        assert_eq!(rt("\\x.\\x.x"), "\\x.\\x.x");
        let t = Term::Lam(
            crate::term::Hint::new("x"),
            Box::new(Term::Lam(crate::term::Hint::new("x"), Box::new(Term::Bound(1)))),
        );
        assert_eq!(print(&t), "\\x.\\x'.x");
    }

    #[test]
    fn dangling_indices_use_scope() {
        let t = Term::app(Term::Bound(0), Term::Bound(1));
        assert_eq!(print_in_scope(&t, &["a".into(), "b".into()]), "b a");
        assert_eq!(print(&Term::Bound(2)), "#2");
    }
}
