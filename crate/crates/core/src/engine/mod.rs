//! Macro-step machinery: indexed split, merge, factorization of arbitrary
//! reduction sequences and normalization, plus the property harness in
//! [`check`].
//!
//! Split repeatedly peels an essential step off a parallel derivation until
//! what is left is parallel-inessential; merge glues an inessential parallel
//! step and a following essential step into one parallel step. Factorization
//! pushes every essential step of a sequence leftwards through the
//! inessential blocks before it by merging and splitting again.

pub mod check;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::{
    derive, inessential, instantiate_parallel, Flavor, ParDerivation, ParallelError, RedexSelection,
    Rule,
};
use crate::reduction::{base_steps, redexes, step_at, Base, Step, StepKind, SystemId};
use crate::term::{Dir, Position, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("expected a {expected} derivation for this system, got {found}")]
    FlavorMismatch { expected: Flavor, found: Flavor },
    #[error("the parallel step is not inessential")]
    NotInessential,
    #[error("essential step at {position} does not compose with the parallel step")]
    NotComposable { position: Position },
    #[error("invalid trace at step {index}: {reason}")]
    InvalidTrace { index: usize, reason: String },
    #[error("no essential step splits off `{derivation}`")]
    SplitStuck { derivation: String },
    #[error("split changed the index from {before} to {after}")]
    IndexLaw { before: u64, after: u64 },
    #[error("residual step at {position} of `{term}` is not inessential")]
    ResidualNotInessential { position: Position, term: String },
    #[error("factorization exceeded its budget of {0} merge rounds")]
    Budget(usize),
    #[error("{property} does not apply to the {system} system")]
    NotApplicable { property: String, system: String },
    #[error(transparent)]
    Parallel(#[from] ParallelError),
}

/// One of the four systems with its base reduction and parallel flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EssentialSystem {
    pub id: SystemId,
    pub base: Base,
    pub flavor: Flavor,
}

impl EssentialSystem {
    pub fn new(id: SystemId) -> Self {
        EssentialSystem { id, base: id.base(), flavor: Flavor::of_system(id) }
    }

    pub fn base_steps(&self, t: &Term) -> Vec<(Step, Term)> {
        base_steps(t, self.base)
    }

    pub fn essential_steps(&self, t: &Term) -> Vec<(Step, Term)> {
        self.id.essential_steps(t)
    }

    pub fn inessential_steps(&self, t: &Term) -> Vec<(Step, Term)> {
        self.id.inessential_steps(t)
    }

    pub fn classify(&self, t: &Term, pos: &Position) -> Option<StepKind> {
        self.id.classify(t, pos)
    }

    /// Parallel-inessential check; derivations of the wrong flavor are rejected.
    pub fn is_parallel_inessential(&self, d: &ParDerivation) -> bool {
        d.flavor() == self.flavor && inessential(d, self.id)
    }

    fn expect_flavor(&self, d: &ParDerivation) -> Result<(), EngineError> {
        if d.flavor() == self.flavor {
            Ok(())
        } else {
            Err(EngineError::FlavorMismatch { expected: self.flavor, found: d.flavor() })
        }
    }
}

impl From<SystemId> for EssentialSystem {
    fn from(id: SystemId) -> Self {
        EssentialSystem::new(id)
    }
}

/// A reduction sequence: a start term and each step with its reduct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub start: Term,
    pub steps: Vec<(Step, Term)>,
}

impl Trace {
    pub fn new(start: Term) -> Self {
        Trace { start, steps: Vec::new() }
    }

    pub fn end(&self) -> &Term {
        self.steps.last().map_or(&self.start, |(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step, reduct: Term) {
        self.steps.push((step, reduct));
    }

    /// Replay base steps at the given positions, tagging each with the
    /// system's classification.
    pub fn from_positions(
        start: Term,
        positions: &[Position],
        sys: EssentialSystem,
    ) -> Result<Trace, EngineError> {
        let mut tr = Trace::new(start);
        for (index, pos) in positions.iter().enumerate() {
            let cur = tr.end().clone();
            let next = step_at(&cur, pos, sys.base)
                .map_err(|e| EngineError::InvalidTrace { index, reason: e.to_string() })?;
            let kind = sys.classify(&cur, pos).ok_or_else(|| EngineError::InvalidTrace {
                index,
                reason: format!("step at {pos} is neither essential nor inessential"),
            })?;
            tr.push(Step::new(pos.clone(), kind), next);
        }
        Ok(tr)
    }

    pub fn view(&self) -> TraceView {
        TraceView {
            start: self.start.to_string(),
            steps: self
                .steps
                .iter()
                .map(|(step, t)| StepView { step: step.clone(), term: t.to_string() })
                .collect(),
        }
    }
}

/// Printable form of a [`Trace`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceView {
    pub start: String,
    pub steps: Vec<StepView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepView {
    #[serde(flatten)]
    pub step: Step,
    pub term: String,
}

/// `t →e* u →i* s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub essential: Trace,
    pub inessential: Trace,
}

impl Factorization {
    pub fn view(&self) -> FactorizationView {
        FactorizationView { essential: self.essential.view(), inessential: self.inessential.view() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationView {
    pub essential: TraceView,
    pub inessential: TraceView,
}

/// Result of splitting a parallel step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub essential: Trace,
    pub residual: ParDerivation,
    /// Index of the derivation before the first round and after each round.
    pub indices: Vec<u64>,
}

/// One round of indexed split: `None` if `d` is already parallel-inessential,
/// otherwise an essential step from the source and a derivation from its
/// reduct to the same target with count one less.
pub fn indexed_split(
    d: &ParDerivation,
    sys: EssentialSystem,
) -> Result<Option<(Step, ParDerivation)>, EngineError> {
    sys.expect_flavor(d)?;
    if inessential(d, sys.id) {
        return Ok(None);
    }
    match peel(d, sys)? {
        Some((pos, rest)) => {
            if rest.count() + 1 != d.count() {
                return Err(EngineError::IndexLaw { before: d.count(), after: rest.count() });
            }
            Ok(Some((Step::new(pos, StepKind::Essential), rest)))
        }
        None => Err(EngineError::SplitStuck { derivation: d.to_string() }),
    }
}

/// Leftmost β-node whose contraction is an essential step of `d`'s source,
/// with the derivation that remains.
fn peel(d: &ParDerivation, sys: EssentialSystem) -> Result<Option<(Position, ParDerivation)>, EngineError> {
    let essential_here = |pos: &Position| sys.classify(d.source(), pos) == Some(StepKind::Essential);
    match d.rule() {
        Rule::Var => Ok(None),
        Rule::Beta(_, body, arg) => {
            let root = Position::root();
            if essential_here(&root) {
                Ok(Some((root, instantiate_parallel(body, arg)?)))
            } else {
                Ok(None)
            }
        }
        Rule::Abs(h, body) => match peel(body, sys)? {
            Some((p, rest)) if essential_here(&p.under(Dir::Body)) => {
                Ok(Some((p.under(Dir::Body), ParDerivation::abs(h.clone(), rest))))
            }
            _ => Ok(None),
        },
        Rule::App(l, r) => {
            if let Some((p, rest)) = peel(l, sys)? {
                let p = p.under(Dir::Left);
                if essential_here(&p) {
                    return Ok(Some((p, ParDerivation::app(rest, (**r).clone())?)));
                }
            }
            if let Some((p, rest)) = peel(r, sys)? {
                let p = p.under(Dir::Right);
                if essential_here(&p) {
                    return Ok(Some((p, ParDerivation::app((**l).clone(), rest)?)));
                }
            }
            Ok(None)
        }
    }
}

/// `t ⇒ s` becomes `t →e* u ⇒¬e s`, one index unit per essential step.
pub fn split(d: &ParDerivation, sys: EssentialSystem) -> Result<Split, EngineError> {
    sys.expect_flavor(d)?;
    let mut essential = Trace::new(d.source().clone());
    let mut indices = vec![d.count()];
    let mut cur = d.clone();
    while let Some((step, rest)) = indexed_split(&cur, sys)? {
        essential.push(step, rest.source().clone());
        indices.push(rest.count());
        cur = rest;
    }
    Ok(Split { essential, residual: cur, indices })
}

/// `t ⇒¬e s →e u` becomes `t ⇒ u`: the essential redex of `s` is already a
/// redex of `t`, so it joins the selection.
pub fn merge(
    d: &ParDerivation,
    step: &Step,
    sys: EssentialSystem,
) -> Result<ParDerivation, EngineError> {
    sys.expect_flavor(d)?;
    if !inessential(d, sys.id) {
        return Err(EngineError::NotInessential);
    }
    let not_composable = || EngineError::NotComposable { position: step.position.clone() };
    if sys.classify(d.target(), &step.position) != Some(StepKind::Essential) {
        return Err(not_composable());
    }
    let merged = graft(d, step.position.dirs()).ok_or_else(not_composable)??;
    let expected = step_at(d.target(), &step.position, sys.base).map_err(|_| not_composable())?;
    if merged.target() != &expected {
        return Err(not_composable());
    }
    Ok(merged)
}

fn graft(d: &ParDerivation, path: &[Dir]) -> Option<Result<ParDerivation, ParallelError>> {
    match (path.split_first(), d.rule()) {
        (None, Rule::App(l, r)) => match l.rule() {
            Rule::Abs(h, body) => Some(ParDerivation::beta(h.clone(), (**body).clone(), (**r).clone())),
            _ => None,
        },
        (Some((Dir::Body, rest)), Rule::Abs(h, body)) => {
            Some(graft(body, rest)?.map(|b| ParDerivation::abs(h.clone(), b)))
        }
        (Some((Dir::Left, rest)), Rule::App(l, r)) => {
            Some(graft(l, rest)?.and_then(|l2| ParDerivation::app(l2, (**r).clone())))
        }
        (Some((Dir::Right, rest)), Rule::App(l, r)) => {
            Some(graft(r, rest)?.and_then(|r2| ParDerivation::app((**l).clone(), r2)))
        }
        _ => None,
    }
}

/// Bound on merge rounds in one factorization.
pub const FACTORIZE_BUDGET: usize = 100_000;

/// Rearrange a base reduction sequence into essential steps followed by
/// inessential ones, with the same endpoints.
pub fn factorize(tr: &Trace, sys: EssentialSystem) -> Result<Factorization, EngineError> {
    let mut prefix = Trace::new(tr.start.clone());
    let mut block: Vec<ParDerivation> = Vec::new();
    let mut cur = tr.start.clone();
    let mut budget = FACTORIZE_BUDGET;
    for (index, (step, reduct)) in tr.steps.iter().enumerate() {
        let invalid = |reason: String| EngineError::InvalidTrace { index, reason };
        let next = step_at(&cur, &step.position, sys.base).map_err(|e| invalid(e.to_string()))?;
        if &next != reduct {
            return Err(invalid(format!("recorded reduct differs from the step at {}", step.position)));
        }
        match sys.classify(&cur, &step.position) {
            Some(StepKind::Inessential) => {
                let sel: RedexSelection = [step.position.clone()].into_iter().collect();
                block.push(derive(&cur, &sel, sys.flavor)?);
            }
            Some(StepKind::Essential) => {
                let e = (Step::new(step.position.clone(), StepKind::Essential), next.clone());
                let (moved, rest) = absorb(std::mem::take(&mut block), vec![e], sys, &mut budget)?;
                prefix.steps.extend(moved);
                block = rest;
            }
            _ => return Err(invalid(format!("step at {} is not classified", step.position))),
        }
        cur = next;
    }
    let mut suffix = Trace::new(prefix.end().clone());
    for d in &block {
        expand_residual(d, sys, &mut suffix)?;
    }
    Ok(Factorization { essential: prefix, inessential: suffix })
}

/// Consecutive inessential parallel steps.
type Block = Vec<ParDerivation>;

/// Given `t0 ⇒¬e ... ⇒¬e tk →e* u` (the blocks, then `es`), produce
/// `t0 →e* · ⇒¬e* u`.
fn absorb(
    mut block: Vec<ParDerivation>,
    es: Vec<(Step, Term)>,
    sys: EssentialSystem,
    budget: &mut usize,
) -> Result<(Vec<(Step, Term)>, Block), EngineError> {
    let Some(last) = block.pop() else {
        return Ok((es, block));
    };
    if es.is_empty() {
        block.push(last);
        return Ok((es, block));
    }
    let mut collected = Vec::new();
    let mut cur = last;
    for (step, _) in &es {
        if *budget == 0 {
            return Err(EngineError::Budget(FACTORIZE_BUDGET));
        }
        *budget -= 1;
        let merged = merge(&cur, step, sys)?;
        let s = split(&merged, sys)?;
        collected.extend(s.essential.steps);
        cur = s.residual;
    }
    let (moved, mut rest) = absorb(block, collected, sys, budget)?;
    rest.push(cur);
    Ok((moved, rest))
}

fn expand_residual(d: &ParDerivation, sys: EssentialSystem, out: &mut Trace) -> Result<(), EngineError> {
    for pos in d.sequentialize() {
        let cur = out.end().clone();
        if sys.classify(&cur, &pos) != Some(StepKind::Inessential) {
            return Err(EngineError::ResidualNotInessential { position: pos, term: cur.to_string() });
        }
        let next = step_at(&cur, &pos, sys.base)
            .map_err(|_| EngineError::ResidualNotInessential { position: pos.clone(), term: cur.to_string() })?;
        out.push(Step::new(pos, StepKind::Inessential), next);
    }
    if out.end() != d.target() {
        return Err(EngineError::ResidualNotInessential {
            position: Position::root(),
            term: d.source().to_string(),
        });
    }
    Ok(())
}

/// Structural validation of a factorization against its input sequence.
pub fn validate_factorization(input: &Trace, f: &Factorization, sys: EssentialSystem) -> Result<(), String> {
    if f.essential.start != input.start {
        return Err("essential prefix does not start at the input start".into());
    }
    if f.inessential.start != *f.essential.end() {
        return Err("inessential suffix does not start where the prefix ends".into());
    }
    if f.inessential.end() != input.end() {
        return Err(format!(
            "factorization ends in {} but the input ends in {}",
            f.inessential.end(),
            input.end()
        ));
    }
    for (part, kind) in [(&f.essential, StepKind::Essential), (&f.inessential, StepKind::Inessential)] {
        let mut cur = part.start.clone();
        for (step, reduct) in &part.steps {
            if sys.classify(&cur, &step.position) != Some(kind) || step.kind != kind {
                return Err(format!("step at {} of {} is not {:?}", step.position, cur, kind));
            }
            match step_at(&cur, &step.position, sys.base) {
                Ok(next) if &next == reduct => cur = next,
                _ => return Err(format!("step at {} of {} is not a valid reduction", step.position, cur)),
            }
        }
    }
    Ok(())
}

/// How a normalization run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// No redex of the base reduction is left.
    NormalFormReached,
    /// No essential step applies, but base redexes remain.
    EssentialNormal,
    FuelExhausted,
}

/// Apply essential steps (the leftmost-outermost one when several apply)
/// until none applies or `fuel` steps have been taken.
pub fn normalize(t: &Term, sys: EssentialSystem, fuel: usize) -> (Trace, Outcome) {
    run(t, sys.base, fuel, |s| sys.essential_steps(s))
}

/// Same loop for plain β or βv, contracting the leftmost-outermost redex.
pub fn normalize_base(t: &Term, base: Base, fuel: usize) -> (Trace, Outcome) {
    run(t, base, fuel, |s| base_steps(s, base))
}

fn run<F>(t: &Term, base: Base, fuel: usize, steps: F) -> (Trace, Outcome)
where
    F: Fn(&Term) -> Vec<(Step, Term)>,
{
    let mut tr = Trace::new(t.clone());
    loop {
        let mut next = steps(tr.end());
        if next.is_empty() {
            let outcome = if redexes(tr.end(), base).is_empty() {
                Outcome::NormalFormReached
            } else {
                Outcome::EssentialNormal
            };
            return (tr, outcome);
        }
        if tr.len() >= fuel {
            return (tr, Outcome::FuelExhausted);
        }
        let (step, reduct) = next.swap_remove(0);
        tr.push(step, reduct);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::all_parallel_steps;
    use crate::term::{parse_with, Definitions};

    fn p(s: &str) -> Term {
        parse_with(s, &Definitions::standard()).unwrap()
    }

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    fn sel(ps: &[&str]) -> RedexSelection {
        ps.iter().map(|s| pos(s)).collect()
    }

    fn sys(id: SystemId) -> EssentialSystem {
        EssentialSystem::new(id)
    }

    #[test]
    fn split_identity() {
        let t = p("I (I I)");
        let d = ParDerivation::identity(Flavor::CbN, &t);
        let s = split(&d, sys(SystemId::Head)).unwrap();
        assert!(s.essential.is_empty());
        assert_eq!(s.residual, d);
    }

    #[test]
    fn head_split_of_both_redexes() {
        // I (x (I I)) ⇒ x I: head step first, then the argument redex remains
        let t = p("I (x (I I))");
        let d = derive(&t, &sel(&["root", "R.R"]), Flavor::CbN).unwrap();
        assert_eq!(d.target(), &p("x I"));
        let s = split(&d, sys(SystemId::Head)).unwrap();
        assert_eq!(s.essential.len(), 1);
        assert_eq!(s.essential.end(), &p("x (I I)"));
        assert_eq!(s.residual.selection(), sel(&["R"]));
        assert_eq!(s.indices, vec![2, 1]);
    }

    #[test]
    fn weak_split_uses_substitution() {
        // (λx. x x) (I I)? not a value argument; use (λx. x (x z)) (λy. I y)
        let t = p("(\\x. x (x z)) (\\y. I y)");
        let d = derive(&t, &sel(&["root", "R.B"]), Flavor::CbV).unwrap();
        // body has two occurrences of x, argument step has index 1: 0 + 2·1 + 1
        assert_eq!(d.count(), 3);
        let (step, rest) = indexed_split(&d, sys(SystemId::WeakCbv)).unwrap().unwrap();
        assert!(step.position.is_root());
        assert_eq!(rest.count(), 2);
        assert_eq!(rest.target(), d.target());
    }

    #[test]
    fn merge_examples() {
        let head = sys(SystemId::Head);
        let t = p("I (I I)");
        let d = derive(&t, &sel(&["R"]), Flavor::CbN).unwrap();
        let e = Step::new(Position::root(), StepKind::Essential);
        let m = merge(&d, &e, head).unwrap();
        assert_eq!(m.source(), &t);
        assert_eq!(m.target(), &p("I"));

        let id = ParDerivation::identity(Flavor::CbN, &t);
        let m = merge(&id, &e, head).unwrap();
        assert_eq!(m.count(), 1);

        // LO, r p with r = I I not neutral: the inessential step fires inside p
        let lo = sys(SystemId::Lo);
        let t = p("(I I) (I y)");
        let d = derive(&t, &sel(&["R"]), Flavor::CbN).unwrap();
        assert!(lo.is_parallel_inessential(&d));
        let e = Step::new(pos("L"), StepKind::Essential);
        let m = merge(&d, &e, lo).unwrap();
        assert_eq!(m.target(), &p("I y"));
        assert_eq!(m.selection(), sel(&["L", "R"]));

        let root = derive(&t, &sel(&["L"]), Flavor::CbN).unwrap();
        assert_eq!(merge(&root, &e, lo), Err(EngineError::NotInessential));
    }

    #[test]
    fn factorize_head_example() {
        let head = sys(SystemId::Head);
        let tr = Trace::from_positions(p("I (x (I I))"), &[pos("R.R"), pos("root")], head).unwrap();
        assert_eq!(tr.steps[0].0.kind, StepKind::Inessential);
        assert_eq!(tr.steps[1].0.kind, StepKind::Essential);
        let f = factorize(&tr, head).unwrap();
        assert_eq!(f.essential.len(), 1);
        assert_eq!(f.essential.end(), &p("x (I I)"));
        assert_eq!(f.inessential.len(), 1);
        assert_eq!(f.inessential.end(), &p("x I"));
        validate_factorization(&tr, &f, head).unwrap();
    }

    #[test]
    fn factorize_already_factorized() {
        let head = sys(SystemId::Head);
        let tr = Trace::from_positions(p("I (x (I I))"), &[pos("root"), pos("R")], head).unwrap();
        let f = factorize(&tr, head).unwrap();
        assert_eq!(f.essential.steps, tr.steps[..1].to_vec());
        assert_eq!(f.inessential.steps, tr.steps[1..].to_vec());
        let empty = Trace::new(p("x"));
        let f = factorize(&empty, head).unwrap();
        assert!(f.essential.is_empty() && f.inessential.is_empty());
    }

    #[test]
    fn factorize_rejects_bad_steps() {
        let head = sys(SystemId::Head);
        let mut tr = Trace::new(p("I x"));
        tr.push(Step::new(pos("R"), StepKind::Plain), p("x"));
        assert!(matches!(factorize(&tr, head), Err(EngineError::InvalidTrace { index: 0, .. })));
    }

    #[test]
    fn normalization_examples() {
        let (tr, out) = normalize(&p("I (x (I I))"), sys(SystemId::Head), 100);
        assert_eq!(out, Outcome::EssentialNormal);
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.end(), &p("x (I I)"));

        let (_, out) = normalize(&p("Omega"), sys(SystemId::Lo), 50);
        assert_eq!(out, Outcome::FuelExhausted);

        let (tr, out) = normalize(&p("x (I y) (I I)"), sys(SystemId::Lo), 100);
        assert_eq!(out, Outcome::NormalFormReached);
        assert_eq!(tr.end(), &p("x y I"));

        let (tr, out) = normalize(&p("(\\x.\\y.x) (\\z.z) (\\w.w)"), sys(SystemId::WeakCbv), 100);
        assert_eq!(out, Outcome::NormalFormReached);
        assert!(tr.end().is_value());
    }

    #[test]
    fn every_split_of_a_small_term() {
        let t = p("(\\x. x (I x)) (I (I y))");
        for id in SystemId::ALL {
            let s = sys(id);
            for d in all_parallel_steps(&t, s.flavor, 1 << 10) {
                let sp = split(&d, s).unwrap();
                assert!(s.is_parallel_inessential(&sp.residual));
                assert_eq!(sp.residual.target(), d.target());
                assert_eq!(sp.essential.end(), sp.residual.source());
            }
        }
    }
}
