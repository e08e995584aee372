//! One-step reductions: β and βv with redex enumeration, the four essential
//! reductions (head, weak call-by-value, leftmost-outermost, least-level) and
//! their inessential partners, plus the least-level function.
//!
//! Every relation is implemented by following its inference rules literally;
//! step lists come back sorted in leftmost-outermost order and deduplicated.

mod level;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Dir, Position, Term};

pub use level::Level;

/// The ambient reduction a system lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Base {
    Beta,
    BetaV,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    Head,
    WeakCbv,
    Lo,
    LeastLevel,
}

impl SystemId {
    pub const ALL: [SystemId; 4] =
        [SystemId::Head, SystemId::WeakCbv, SystemId::Lo, SystemId::LeastLevel];

    pub fn base(self) -> Base {
        match self {
            SystemId::WeakCbv => Base::BetaV,
            _ => Base::Beta,
        }
    }

    /// LO and least-level reach β-normal forms; head and weak CbV do not.
    pub fn is_full(self) -> bool {
        matches!(self, SystemId::Lo | SystemId::LeastLevel)
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Head => "head",
            SystemId::WeakCbv => "weak-cbv",
            SystemId::Lo => "lo",
            SystemId::LeastLevel => "ll",
        }
    }

    pub fn essential_steps(self, t: &Term) -> Vec<(Step, Term)> {
        match self {
            SystemId::Head => head_steps(t),
            SystemId::WeakCbv => weak_cbv_steps(t),
            SystemId::Lo => lo_steps(t),
            SystemId::LeastLevel => ll_steps(t),
        }
    }

    pub fn inessential_steps(self, t: &Term) -> Vec<(Step, Term)> {
        match self {
            SystemId::Head => neg_head_steps(t),
            SystemId::WeakCbv => neg_weak_steps(t),
            SystemId::Lo => neg_lo_steps(t),
            SystemId::LeastLevel => neg_ll_steps(t),
        }
    }

    /// All base steps, tagged with this system's classification.
    pub fn classified_steps(self, t: &Term) -> Vec<(Step, Term)> {
        let mut out = self.essential_steps(t);
        out.extend(self.inessential_steps(t));
        out.sort_by(|a, b| a.0.position.cmp(&b.0.position).then(a.0.kind.cmp(&b.0.kind)));
        out
    }

    /// Kind of the base step at `pos`, by the rule that derives it there.
    pub fn classify(self, t: &Term, pos: &Position) -> Option<StepKind> {
        if self.essential_steps(t).iter().any(|(s, _)| &s.position == pos) {
            Some(StepKind::Essential)
        } else if self.inessential_steps(t).iter().any(|(s, _)| &s.position == pos) {
            Some(StepKind::Inessential)
        } else {
            None
        }
    }

    /// Membership of the pair `t → s` in the essential and inessential
    /// relations. Both can hold: `I(II)` reaches `II` by a head step and by a
    /// non-head step.
    pub fn classify_pair(self, t: &Term, s: &Term) -> (bool, bool) {
        (
            self.essential_steps(t).iter().any(|(_, r)| r == s),
            self.inessential_steps(t).iter().any(|(_, r)| r == s),
        )
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "head" | "h" => Ok(SystemId::Head),
            "weak-cbv" | "weak" | "w" => Ok(SystemId::WeakCbv),
            "lo" => Ok(SystemId::Lo),
            "ll" | "least-level" => Ok(SystemId::LeastLevel),
            _ => Err(format!("unknown system `{s}` (expected head, weak-cbv, lo or ll)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Essential,
    Inessential,
    Plain,
}

impl StepKind {
    pub fn tag(self) -> &'static str {
        match self {
            StepKind::Essential => "e",
            StepKind::Inessential => "i",
            StepKind::Plain => "b",
        }
    }
}

/// A single reduction step: where the contracted redex sits, how the system
/// classifies it, and its level (number of enclosing arguments).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub position: Position,
    pub kind: StepKind,
    pub level: Level,
}

impl Step {
    pub fn new(position: Position, kind: StepKind) -> Self {
        let level = Level::Finite(position.right_count());
        Step { position, kind, level }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("no {base} redex at position {position}")]
    InvalidPosition { position: Position, base: &'static str },
}

type Reducts = Vec<(Position, Term)>;

fn tag(v: Reducts, kind: StepKind) -> Vec<(Step, Term)> {
    v.into_iter().map(|(p, t)| (Step::new(p, kind), t)).collect()
}

fn canonical(mut v: Reducts) -> Reducts {
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v.dedup();
    v
}

fn in_body(t: &Term, v: Reducts) -> Reducts {
    let Term::Lam(h, _) = t else { unreachable!() };
    v.into_iter()
        .map(|(p, r)| (p.under(Dir::Body), Term::Lam(h.clone(), Box::new(r))))
        .collect()
}

fn in_left(arg: &Term, v: Reducts) -> Reducts {
    v.into_iter().map(|(p, r)| (p.under(Dir::Left), Term::app(r, arg.clone()))).collect()
}

fn in_right(fun: &Term, v: Reducts) -> Reducts {
    v.into_iter().map(|(p, r)| (p.under(Dir::Right), Term::app(fun.clone(), r))).collect()
}

fn root(t: &Term) -> Reducts {
    vec![(Position::root(), t.contract().expect("root redex"))]
}

fn all_redexes(t: &Term, base: Base) -> Reducts {
    match t {
        Term::Bound(_) | Term::Free(_) => vec![],
        Term::Lam(_, b) => in_body(t, all_redexes(b, base)),
        Term::App(f, a) => {
            let mut out = match base {
                Base::Beta if t.is_beta_redex() => root(t),
                Base::BetaV if t.is_betav_redex() => root(t),
                _ => vec![],
            };
            out.extend(in_left(a, all_redexes(f, base)));
            out.extend(in_right(f, all_redexes(a, base)));
            out
        }
    }
}

/// Positions of all β-redexes, leftmost-outermost first.
pub fn beta_redexes(t: &Term) -> Vec<Position> {
    redexes(t, Base::Beta)
}

/// Positions of all βv-redexes (argument is a value).
pub fn betav_redexes(t: &Term) -> Vec<Position> {
    redexes(t, Base::BetaV)
}

pub fn redexes(t: &Term, base: Base) -> Vec<Position> {
    all_redexes(t, base).into_iter().map(|(p, _)| p).collect()
}

/// All one-step reducts for the base relation, kind `Plain`.
pub fn base_steps(t: &Term, base: Base) -> Vec<(Step, Term)> {
    tag(all_redexes(t, base), StepKind::Plain)
}

/// Contract the redex at `pos`.
pub fn step_at(t: &Term, pos: &Position, base: Base) -> Result<Term, ReductionError> {
    let bad = || ReductionError::InvalidPosition {
        position: pos.clone(),
        base: match base {
            Base::Beta => "β",
            Base::BetaV => "βv",
        },
    };
    t.map_at(pos.dirs(), |sub| match base {
        Base::Beta if sub.is_beta_redex() => sub.contract(),
        Base::BetaV if sub.is_betav_redex() => sub.contract(),
        _ => None,
    })
    .ok_or_else(bad)
}

// ---------------------------------------------------------------- head

fn head_rules(t: &Term) -> Reducts {
    match t {
        Term::Bound(_) | Term::Free(_) => vec![],
        Term::Lam(_, b) => in_body(t, head_rules(b)),
        Term::App(f, a) => {
            let mut out = if t.is_beta_redex() { root(t) } else { vec![] };
            if !f.is_lam() {
                out.extend(in_left(a, head_rules(f)));
            }
            out
        }
    }
}

fn neg_head_rules(t: &Term) -> Reducts {
    match t {
        Term::Bound(_) | Term::Free(_) => vec![],
        Term::Lam(_, b) => in_body(t, neg_head_rules(b)),
        Term::App(f, a) => {
            let mut out = vec![];
            if let Term::Lam(_, body) = &**f {
                // (λx t) s → (λx t') s for any β step in the body
                out.extend(in_left(a, in_body(f, all_redexes(body, Base::Beta))));
            }
            out.extend(in_right(f, all_redexes(a, Base::Beta)));
            out.extend(in_left(a, neg_head_rules(f)));
            out
        }
    }
}

/// Head steps (at most one).
pub fn head_steps(t: &Term) -> Vec<(Step, Term)> {
    tag(canonical(head_rules(t)), StepKind::Essential)
}

pub fn head_step(t: &Term) -> Option<Term> {
    head_steps(t).into_iter().next().map(|(_, r)| r)
}

pub fn neg_head_steps(t: &Term) -> Vec<(Step, Term)> {
    tag(canonical(neg_head_rules(t)), StepKind::Inessential)
}

// ---------------------------------------------------------------- weak CbV

fn weak_rules(t: &Term) -> Reducts {
    match t {
        Term::App(f, a) => {
            let mut out = if t.is_betav_redex() { root(t) } else { vec![] };
            out.extend(in_left(a, weak_rules(f)));
            out.extend(in_right(f, weak_rules(a)));
            out
        }
        _ => vec![],
    }
}

fn neg_weak_rules(t: &Term) -> Reducts {
    match t {
        Term::Bound(_) | Term::Free(_) => vec![],
        Term::Lam(_, b) => in_body(t, all_redexes(b, Base::BetaV)),
        Term::App(f, a) => {
            let mut out = in_left(a, neg_weak_rules(f));
            out.extend(in_right(f, neg_weak_rules(a)));
            out
        }
    }
}

pub fn weak_cbv_steps(t: &Term) -> Vec<(Step, Term)> {
    tag(canonical(weak_rules(t)), StepKind::Essential)
}

pub fn neg_weak_steps(t: &Term) -> Vec<(Step, Term)> {
    tag(canonical(neg_weak_rules(t)), StepKind::Inessential)
}

// ---------------------------------------------------------------- leftmost-outermost

fn lo_rules(t: &Term) -> Reducts {
    match t {
        Term::Bound(_) | Term::Free(_) => vec![],
        Term::Lam(_, b) => in_body(t, lo_rules(b)),
        Term::App(f, a) => {
            let mut out = if t.is_beta_redex() { root(t) } else { vec![] };
            if !f.is_lam() {
                out.extend(in_left(a, lo_rules(f)));
            }
            if f.is_neutral() {
                out.extend(in_right(f, lo_rules(a)));
            }
            out
        }
    }
}

fn neg_lo_rules(t: &Term) -> Reducts {
    match t {
        Term::Bound(_) | Term::Free(_) => vec![],
        Term::Lam(_, b) => in_body(t, neg_lo_rules(b)),
        Term::App(f, a) => {
            let mut out = vec![];
            if let Term::Lam(_, body) = &**f {
                out.extend(in_left(a, in_body(f, all_redexes(body, Base::Beta))));
            }
            if !f.is_neutral() {
                out.extend(in_right(f, all_redexes(a, Base::Beta)));
            }
            out.extend(in_left(a, neg_lo_rules(f)));
            out.extend(in_right(f, neg_lo_rules(a)));
            out
        }
    }
}

/// Leftmost-outermost steps (at most one; exactly one iff not β-normal).
pub fn lo_steps(t: &Term) -> Vec<(Step, Term)> {
    tag(canonical(lo_rules(t)), StepKind::Essential)
}

pub fn lo_step(t: &Term) -> Option<Term> {
    lo_steps(t).into_iter().next().map(|(_, r)| r)
}

pub fn neg_lo_steps(t: &Term) -> Vec<(Step, Term)> {
    tag(canonical(neg_lo_rules(t)), StepKind::Inessential)
}

// ---------------------------------------------------------------- least level

/// `ℓℓ(x) = ∞`, `ℓℓ(λx t) = ℓℓ(t)`, `ℓℓ((λx u) s) = 0`,
/// `ℓℓ(t s) = min(ℓℓ(t), ℓℓ(s) + 1)` otherwise.
pub fn least_level(t: &Term) -> Level {
    match t {
        Term::Bound(_) | Term::Free(_) => Level::Infinite,
        Term::Lam(_, b) => least_level(b),
        Term::App(f, a) => {
            if f.is_lam() {
                Level::ZERO
            } else {
                least_level(f).min(least_level(a).succ())
            }
        }
    }
}

fn leveled_rules(t: &Term) -> Vec<(Position, Level, Term)> {
    match t {
        Term::Bound(_) | Term::Free(_) => vec![],
        Term::Lam(h, b) => leveled_rules(b)
            .into_iter()
            .map(|(p, k, r)| (p.under(Dir::Body), k, Term::Lam(h.clone(), Box::new(r))))
            .collect(),
        Term::App(f, a) => {
            let mut out = vec![];
            if let Some(r) = t.contract() {
                out.push((Position::root(), Level::ZERO, r));
            }
            out.extend(
                leveled_rules(f)
                    .into_iter()
                    .map(|(p, k, r)| (p.under(Dir::Left), k, Term::app(r, (**a).clone()))),
            );
            out.extend(
                leveled_rules(a)
                    .into_iter()
                    .map(|(p, k, r)| (p.under(Dir::Right), k.succ(), Term::app((**f).clone(), r))),
            );
            out
        }
    }
}

/// Every β-step with its level, computed by the leveled rules.
pub fn level_indexed_steps(t: &Term) -> Vec<(Step, Term)> {
    leveled_rules(t)
        .into_iter()
        .map(|(position, level, r)| (Step { position, kind: StepKind::Plain, level }, r))
        .collect()
}

type Steps = Vec<(Step, Term)>;

fn ll_partition(t: &Term) -> (Steps, Steps) {
    let least = least_level(t);
    let mut ess = vec![];
    let mut iness = vec![];
    for (mut step, r) in level_indexed_steps(t) {
        if step.level == least {
            step.kind = StepKind::Essential;
            ess.push((step, r));
        } else if step.level > least {
            step.kind = StepKind::Inessential;
            iness.push((step, r));
        }
    }
    (ess, iness)
}

/// Steps at the least level.
pub fn ll_steps(t: &Term) -> Vec<(Step, Term)> {
    ll_partition(t).0
}

/// Steps strictly above the least level.
pub fn neg_ll_steps(t: &Term) -> Vec<(Step, Term)> {
    ll_partition(t).1
}
