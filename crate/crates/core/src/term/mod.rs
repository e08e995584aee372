//! λ-terms with de Bruijn indices for bound variables and names for free ones.
//!
//! Binder names survive only as printing hints ([`Hint`]), whose comparison
//! is trivial, so the derived `Eq`/`Hash`/`Ord` on [`Term`] are
//! alpha-equivalence. Substitution shifts indices and never captures.

mod parse;
mod position;
mod print;

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use parse::{parse, parse_in_scope, parse_with, Definitions, ParseError};
pub use position::{Dir, Position, PositionError};
pub use print::{print, print_in_scope};

/// Name of a variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Binder name used when printing. Every hint equals every other hint.
#[derive(Clone)]
pub struct Hint(pub Name);

impl Hint {
    pub fn new(s: &str) -> Self {
        Hint(Name::new(s))
    }
}

impl PartialEq for Hint {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Hint {}

impl Hash for Hint {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl PartialOrd for Hint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Hint {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl fmt::Debug for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Bound variable, counted outward from the innermost binder.
    Bound(u32),
    /// Free variable.
    Free(Name),
    Lam(Hint, Box<Term>),
    App(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Free(Name::new(name))
    }

    /// `λname. body`, binding every free occurrence of `name` in `body`.
    pub fn lam(name: &str, body: Term) -> Term {
        let x = Name::new(name);
        Term::Lam(Hint(x.clone()), Box::new(body.close(&x, 0)))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    /// Left-nested application `head a1 a2 ...`.
    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn is_lam(&self) -> bool {
        matches!(self, Term::Lam(..))
    }

    pub fn is_app(&self) -> bool {
        matches!(self, Term::App(..))
    }

    /// Node count: variables 1, abstractions and applications 1 plus children.
    pub fn size(&self) -> usize {
        match self {
            Term::Bound(_) | Term::Free(_) => 1,
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    /// Values are variables and abstractions.
    pub fn is_value(&self) -> bool {
        !self.is_app()
    }

    /// β-normal: no subterm of the form `(λx t) s`.
    pub fn is_normal(&self) -> bool {
        match self {
            Term::Lam(_, b) => b.is_normal(),
            t => t.is_neutral(),
        }
    }

    /// Normal and not an abstraction.
    pub fn is_neutral(&self) -> bool {
        match self {
            Term::Bound(_) | Term::Free(_) => true,
            Term::App(f, a) => f.is_neutral() && a.is_normal(),
            Term::Lam(..) => false,
        }
    }

    /// Number of free occurrences of `x`.
    pub fn count_occurrences(&self, x: &Name) -> usize {
        match self {
            Term::Free(y) => usize::from(y == x),
            Term::Bound(_) => 0,
            Term::Lam(_, b) => b.count_occurrences(x),
            Term::App(f, a) => f.count_occurrences(x) + a.count_occurrences(x),
        }
    }

    /// Number of occurrences of the variable bound `index` binders above the root.
    pub fn count_bound(&self, index: u32) -> usize {
        match self {
            Term::Bound(i) => usize::from(*i == index),
            Term::Free(_) => 0,
            Term::Lam(_, b) => b.count_bound(index + 1),
            Term::App(f, a) => f.count_bound(index) + a.count_bound(index),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Free(x) => {
                out.insert(x.clone());
            }
            Term::Bound(_) => {}
            Term::Lam(_, b) => b.collect_free(out),
            Term::App(f, a) => {
                f.collect_free(out);
                a.collect_free(out);
            }
        }
    }

    /// True when no bound index escapes its binders.
    pub fn is_locally_closed(&self) -> bool {
        self.max_dangling(0).is_none()
    }

    fn max_dangling(&self, depth: u32) -> Option<u32> {
        match self {
            Term::Bound(i) if *i >= depth => Some(i - depth),
            Term::Bound(_) | Term::Free(_) => None,
            Term::Lam(_, b) => b.max_dangling(depth + 1),
            Term::App(f, a) => f.max_dangling(depth).max(a.max_dangling(depth)),
        }
    }

    /// No free names and no dangling indices.
    pub fn is_closed(&self) -> bool {
        self.is_locally_closed() && self.free_names().is_empty()
    }

    /// Shift every index `>= cutoff` by `by`.
    pub fn shift(&self, by: i64, cutoff: u32) -> Term {
        if by == 0 {
            return self.clone();
        }
        match self {
            Term::Bound(i) if *i >= cutoff => {
                let j = i64::from(*i) + by;
                debug_assert!(j >= 0, "negative de Bruijn index");
                Term::Bound(j as u32)
            }
            Term::Bound(_) | Term::Free(_) => self.clone(),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.shift(by, cutoff + 1))),
            Term::App(f, a) => Term::app(f.shift(by, cutoff), a.shift(by, cutoff)),
        }
    }

    /// `t[x←s]`: replace free occurrences of `x` by `s`.
    pub fn substitute(&self, x: &Name, s: &Term) -> Term {
        self.subst_free(x, s, 0)
    }

    fn subst_free(&self, x: &Name, s: &Term, depth: u32) -> Term {
        match self {
            Term::Free(y) if y == x => s.shift(i64::from(depth), 0),
            Term::Bound(_) | Term::Free(_) => self.clone(),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.subst_free(x, s, depth + 1))),
            Term::App(f, a) => Term::app(f.subst_free(x, s, depth), a.subst_free(x, s, depth)),
        }
    }

    /// Body of a binder with its variable (index 0) replaced by `arg`.
    /// `(λ body) arg →β body.instantiate(arg)`.
    pub fn instantiate(&self, arg: &Term) -> Term {
        self.inst(arg, 0)
    }

    fn inst(&self, arg: &Term, depth: u32) -> Term {
        match self {
            Term::Bound(i) if *i == depth => arg.shift(i64::from(depth), 0),
            Term::Bound(i) if *i > depth => Term::Bound(i - 1),
            Term::Bound(_) | Term::Free(_) => self.clone(),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.inst(arg, depth + 1))),
            Term::App(f, a) => Term::app(f.inst(arg, depth), a.inst(arg, depth)),
        }
    }

    /// Turn free `x` into the bound index `depth` (used to build `λx. t`).
    fn close(&self, x: &Name, depth: u32) -> Term {
        match self {
            Term::Free(y) if y == x => Term::Bound(depth),
            Term::Bound(i) if *i >= depth => Term::Bound(i + 1),
            Term::Bound(_) | Term::Free(_) => self.clone(),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.close(x, depth + 1))),
            Term::App(f, a) => Term::app(f.close(x, depth), a.close(x, depth)),
        }
    }

    pub fn subterm(&self, pos: &Position) -> Option<&Term> {
        let mut cur = self;
        for d in pos.dirs() {
            cur = match (d, cur) {
                (Dir::Body, Term::Lam(_, b)) => b,
                (Dir::Left, Term::App(f, _)) => f,
                (Dir::Right, Term::App(_, a)) => a,
                _ => return None,
            };
        }
        Some(cur)
    }

    /// Rebuild `self` with the subterm at `pos` replaced by `f(subterm)`.
    pub fn map_at<F>(&self, pos: &[Dir], f: F) -> Option<Term>
    where
        F: FnOnce(&Term) -> Option<Term>,
    {
        match pos.split_first() {
            None => f(self),
            Some((d, rest)) => match (d, self) {
                (Dir::Body, Term::Lam(h, b)) => {
                    Some(Term::Lam(h.clone(), Box::new(b.map_at(rest, f)?)))
                }
                (Dir::Left, Term::App(l, r)) => Some(Term::app(l.map_at(rest, f)?, (**r).clone())),
                (Dir::Right, Term::App(l, r)) => Some(Term::app((**l).clone(), r.map_at(rest, f)?)),
                _ => None,
            },
        }
    }

    /// True for `(λx t) s`.
    pub fn is_beta_redex(&self) -> bool {
        matches!(self, Term::App(f, _) if f.is_lam())
    }

    /// True for `(λx t) v` with `v` a value.
    pub fn is_betav_redex(&self) -> bool {
        matches!(self, Term::App(f, a) if f.is_lam() && a.is_value())
    }

    /// Contract a root redex `(λx t) s` to `t[x←s]`.
    pub fn contract(&self) -> Option<Term> {
        match self {
            Term::App(f, a) => match &**f {
                Term::Lam(_, body) => Some(body.instantiate(a)),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

impl std::str::FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// `t[x←s]`.
pub fn substitute(t: &Term, x: &Name, s: &Term) -> Term {
    t.substitute(x, s)
}

pub fn count_occurrences(t: &Term, x: &Name) -> usize {
    t.count_occurrences(x)
}

/// Alpha-equivalence. With nameless binders this is structural equality.
pub fn alpha_eq(t: &Term, s: &Term) -> bool {
    t == s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn id() -> Term {
        p("\\z.z")
    }

    #[test]
    fn substitution_examples() {
        let x = Name::new("x");
        assert_eq!(substitute(&p("x"), &x, &p("\\y.y")), p("\\y.y"));

        // λy.x with x := y must rename the binder
        let r = substitute(&p("\\y.x"), &x, &p("y"));
        assert_ne!(r, p("\\y.y"));
        assert_eq!(r, p("\\w.y"));
        assert_eq!(print(&r), "\\y'.y");

        let ii = Term::app(id(), id());
        assert_eq!(substitute(&p("x x"), &x, &ii), Term::app(ii.clone(), ii));
    }

    #[test]
    fn occurrence_counts() {
        let x = Name::new("x");
        assert_eq!(count_occurrences(&p("x x"), &x), 2);
        assert_eq!(count_occurrences(&p("\\x.x"), &x), 0);
        // manual traversal: x | (λy. x y) contributes 1 | x
        assert_eq!(count_occurrences(&p("x (\\y. x y) x"), &x), 3);
    }

    #[test]
    fn alpha_equivalence() {
        assert!(alpha_eq(&p("\\x.x"), &p("\\y.y")));
        assert!(!alpha_eq(&p("\\x.\\y.x"), &p("\\a.\\b.b")));
        assert!(!alpha_eq(&p("x"), &p("y")));
    }

    #[test]
    fn values_normals_neutrals() {
        assert!(p("\\x.x").is_value());
        assert!(p("x").is_value());
        assert!(!Term::app(id(), id()).is_value());

        let t = p("x (\\y.y)");
        assert!(t.is_neutral() && t.is_normal());
        let t = p("\\x.x");
        assert!(t.is_normal() && !t.is_neutral());
        let t = p("(\\x.x) y");
        assert!(!t.is_normal() && !t.is_neutral());
    }

    #[test]
    fn sizes() {
        assert_eq!(p("x").size(), 1);
        assert_eq!(p("\\x.x").size(), 2);
        // (λx.xx)(λx.xx): app node + 2 · (λ node + app node + 2 var nodes)
        assert_eq!(p("(\\x.x x)(\\x.x x)").size(), 9);
    }

    #[test]
    fn instantiate_shifts_under_binders() {
        // (λx.λy.x) applied to a free y must not capture
        let k = p("\\x.\\y.x");
        let r = Term::app(k, p("y")).contract().unwrap();
        assert_eq!(r, p("\\z.y"));
        // body with a dangling outer index: λa.(λb.b a) c-style contraction under a binder
        let t = p("\\a.(\\b.b a) a");
        let Term::Lam(_, body) = &t else { unreachable!() };
        assert_eq!(body.contract().unwrap(), Term::app(Term::Bound(0), Term::Bound(0)));
    }

    #[test]
    fn map_at_and_subterm() {
        let t = p("x (y z)");
        let pos: Position = "R.L".parse().unwrap();
        assert_eq!(t.subterm(&pos), Some(&p("y")));
        let r = t.map_at(pos.dirs(), |_| Some(p("w"))).unwrap();
        assert_eq!(r, p("x (w z)"));
        assert!(t.map_at(&[Dir::Body], |s| Some(s.clone())).is_none());
    }
}
