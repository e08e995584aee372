//! Indexed parallel reduction as explicit derivation trees.
//!
//! A [`ParDerivation`] is built from four rules (variable, abstraction,
//! application, β) and carries two indices at every node: the *count* of the
//! call-by-name/call-by-value rules, where the β-rule contributes
//! `n + |t'|_x·m + 1`, and the *level* of the leveled rules, where it
//! contributes 0 and an argument adds 1. The [`Flavor`] decides which of the
//! two is reported as the derivation's index and whether β-rule arguments
//! must be values.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::reduction::{least_level, redexes, Base, Level, SystemId};
use crate::term::{parse_in_scope, print_in_scope, Dir, Hint, Name, Position, Term};

/// Default bound on the number of derivations produced by [`all_parallel_steps`].
pub const DEFAULT_CAP: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flavor {
    #[serde(rename = "cbn")]
    CbN,
    #[serde(rename = "cbv")]
    CbV,
    #[serde(rename = "leveled")]
    Leveled,
}

impl Flavor {
    pub fn base(self) -> Base {
        match self {
            Flavor::CbV => Base::BetaV,
            _ => Base::Beta,
        }
    }

    /// The flavor whose derivations a system's parallel steps are made of.
    pub fn of_system(sys: SystemId) -> Flavor {
        match sys {
            SystemId::Head | SystemId::Lo => Flavor::CbN,
            SystemId::WeakCbv => Flavor::CbV,
            SystemId::LeastLevel => Flavor::Leveled,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavor::CbN => "cbn",
            Flavor::CbV => "cbv",
            Flavor::Leveled => "leveled",
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cbn" => Ok(Flavor::CbN),
            "cbv" => Ok(Flavor::CbV),
            "leveled" | "level" => Ok(Flavor::Leveled),
            _ => Err(format!("unknown flavor `{s}` (expected cbn, cbv or leveled)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParallelError {
    #[error("position {position} is not a redex of the source term")]
    InvalidSelection { position: Position },
    #[error("call-by-value β-rule at {position} needs a value argument")]
    CbvNonValueArgument { position: Position },
    #[error("call-by-value substitution needs a value to substitute")]
    CbvNonValueSubstituend,
    #[error("expected a {expected} derivation, got {found}")]
    FlavorMismatch { expected: Flavor, found: Flavor },
    #[error("malformed derivation: {0}")]
    Malformed(String),
}

/// The last rule of a derivation, with its premises.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Var,
    Abs(Hint, Box<ParDerivation>),
    App(Box<ParDerivation>, Box<ParDerivation>),
    /// `(λx t) s ⇒ t'[x←s']` from `t ⇒ t'` and `s ⇒ s'`.
    Beta(Hint, Box<ParDerivation>, Box<ParDerivation>),
}

/// The index a flavor assigns to a derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParIndex {
    Count(u64),
    Level(Level),
}

impl fmt::Display for ParIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParIndex::Count(n) => write!(f, "{n}"),
            ParIndex::Level(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for ParIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ParIndex::Count(n) => serializer.serialize_u64(*n),
            ParIndex::Level(k) => k.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for ParIndex {
    /// Numbers come back as counts; [`ParDerivation::from_node`] reinterprets
    /// them as levels for leveled derivations.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) => Ok(ParIndex::Count(n)),
            Raw::Str(s) => s.parse().map(ParIndex::Level).map_err(serde::de::Error::custom),
        }
    }
}

/// A derivation of `source ⇒ target`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParDerivation {
    flavor: Flavor,
    rule: Rule,
    source: Term,
    target: Term,
    count: u64,
    level: Level,
}

impl ParDerivation {
    fn var(flavor: Flavor, v: Term) -> Self {
        debug_assert!(matches!(v, Term::Bound(_) | Term::Free(_)));
        ParDerivation {
            flavor,
            rule: Rule::Var,
            source: v.clone(),
            target: v,
            count: 0,
            level: Level::Infinite,
        }
    }

    /// The derivation of `t ⇒ t` contracting nothing.
    pub fn identity(flavor: Flavor, t: &Term) -> Self {
        match t {
            Term::Bound(_) | Term::Free(_) => Self::var(flavor, t.clone()),
            Term::Lam(h, b) => Self::abs(h.clone(), Self::identity(flavor, b)),
            Term::App(f, a) => Self::app(Self::identity(flavor, f), Self::identity(flavor, a))
                .expect("same flavor"),
        }
    }

    /// `λx t ⇒ λx t'` from `t ⇒ t'` (the body may have index 0 dangling).
    pub fn abs(hint: Hint, body: ParDerivation) -> Self {
        ParDerivation {
            flavor: body.flavor,
            source: Term::Lam(hint.clone(), Box::new(body.source.clone())),
            target: Term::Lam(hint.clone(), Box::new(body.target.clone())),
            count: body.count,
            level: body.level,
            rule: Rule::Abs(hint, Box::new(body)),
        }
    }

    pub fn app(fun: ParDerivation, arg: ParDerivation) -> Result<Self, ParallelError> {
        same_flavor(&fun, &arg)?;
        Ok(ParDerivation {
            flavor: fun.flavor,
            source: Term::app(fun.source.clone(), arg.source.clone()),
            target: Term::app(fun.target.clone(), arg.target.clone()),
            count: fun.count.saturating_add(arg.count),
            level: fun.level.min(arg.level.succ()),
            rule: Rule::App(Box::new(fun), Box::new(arg)),
        })
    }

    /// `(λx t) s ⇒ t'[x←s']`. The body derivation has the bound variable as index 0.
    pub fn beta(hint: Hint, body: ParDerivation, arg: ParDerivation) -> Result<Self, ParallelError> {
        same_flavor(&body, &arg)?;
        if body.flavor == Flavor::CbV && !arg.source.is_value() {
            return Err(ParallelError::CbvNonValueArgument { position: Position::root() });
        }
        let occurrences = body.target.count_bound(0) as u64;
        let count = body
            .count
            .saturating_add(occurrences.saturating_mul(arg.count))
            .saturating_add(1);
        Ok(ParDerivation {
            flavor: body.flavor,
            source: Term::app(
                Term::Lam(hint.clone(), Box::new(body.source.clone())),
                arg.source.clone(),
            ),
            target: body.target.instantiate(&arg.target),
            count,
            level: Level::ZERO,
            rule: Rule::Beta(hint, Box::new(body), Box::new(arg)),
        })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn source(&self) -> &Term {
        &self.source
    }

    pub fn target(&self) -> &Term {
        &self.target
    }

    /// Index under the call-by-name / call-by-value rules.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Index under the leveled rules: the least level of a contracted redex.
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn index(&self) -> ParIndex {
        match self.flavor {
            Flavor::Leveled => ParIndex::Level(self.level),
            _ => ParIndex::Count(self.count),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.count == 0
    }

    /// Same tree read under another flavor.
    pub fn with_flavor(&self, flavor: Flavor) -> Result<ParDerivation, ParallelError> {
        rebuild(self, 0, &|v, _| Ok(ParDerivation::var(flavor, v.clone())))
    }

    /// Positions (in the source) of the redexes contracted by β-rules.
    pub fn selection(&self) -> RedexSelection {
        let mut out = BTreeSet::new();
        collect_selection(self, &mut Vec::new(), &mut out);
        RedexSelection(out)
    }

    /// A β-sequence from source to target contracting one selected redex (or
    /// a residual of one) at a time: β-nodes reduce their body, then their
    /// argument, then themselves; applications go left before right.
    pub fn sequentialize(&self) -> Vec<Position> {
        let mut out = Vec::new();
        sequence(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every index below a binder shifted by `by`, like [`Term::shift`].
    pub fn shift(&self, by: i64, cutoff: u32) -> ParDerivation {
        rebuild(self, 0, &|v, depth| {
            Ok(ParDerivation::var(self.flavor, v.shift(by, cutoff + depth)))
        })
        .expect("shifting keeps values values")
    }

    /// JSON-friendly tree with terms printed in the scope of their binders.
    pub fn to_node(&self) -> DerivationNode {
        let mut reserved: BTreeSet<String> =
            self.source.free_names().iter().map(|n| n.to_string()).collect();
        reserved.extend(self.target.free_names().iter().map(|n| n.to_string()));
        node_of(self, &mut Vec::new(), &reserved)
    }

    /// Rebuild a derivation from [`DerivationNode`] form, recomputing every
    /// term and index and rejecting any mismatch with the recorded ones.
    pub fn from_node(node: &DerivationNode) -> Result<ParDerivation, ParallelError> {
        from_node(node, &mut Vec::new())
    }
}

impl fmt::Display for ParDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =>{} {}", self.source, self.index(), self.target)
    }
}

fn same_flavor(a: &ParDerivation, b: &ParDerivation) -> Result<(), ParallelError> {
    if a.flavor == b.flavor {
        Ok(())
    } else {
        Err(ParallelError::FlavorMismatch { expected: a.flavor, found: b.flavor })
    }
}

/// Rebuild `d` bottom-up, replacing every variable leaf by `leaf(var, depth)`
/// where `depth` counts the binders crossed.
fn rebuild(
    d: &ParDerivation,
    depth: u32,
    leaf: &dyn Fn(&Term, u32) -> Result<ParDerivation, ParallelError>,
) -> Result<ParDerivation, ParallelError> {
    match &d.rule {
        Rule::Var => leaf(&d.source, depth),
        Rule::Abs(h, b) => Ok(ParDerivation::abs(h.clone(), rebuild(b, depth + 1, leaf)?)),
        Rule::App(l, r) => ParDerivation::app(rebuild(l, depth, leaf)?, rebuild(r, depth, leaf)?),
        Rule::Beta(h, b, a) => {
            ParDerivation::beta(h.clone(), rebuild(b, depth + 1, leaf)?, rebuild(a, depth, leaf)?)
        }
    }
}

fn collect_selection(d: &ParDerivation, path: &mut Vec<Dir>, out: &mut BTreeSet<Position>) {
    match &d.rule {
        Rule::Var => {}
        Rule::Abs(_, b) => {
            path.push(Dir::Body);
            collect_selection(b, path, out);
            path.pop();
        }
        Rule::App(l, r) => {
            path.push(Dir::Left);
            collect_selection(l, path, out);
            path.pop();
            path.push(Dir::Right);
            collect_selection(r, path, out);
            path.pop();
        }
        Rule::Beta(_, b, a) => {
            out.insert(Position::from_dirs(path.clone()));
            path.extend([Dir::Left, Dir::Body]);
            collect_selection(b, path, out);
            path.truncate(path.len() - 2);
            path.push(Dir::Right);
            collect_selection(a, path, out);
            path.pop();
        }
    }
}

fn sequence(d: &ParDerivation, path: &mut Vec<Dir>, out: &mut Vec<Position>) {
    match &d.rule {
        Rule::Var => {}
        Rule::Abs(_, b) => {
            path.push(Dir::Body);
            sequence(b, path, out);
            path.pop();
        }
        Rule::App(l, r) => {
            path.push(Dir::Left);
            sequence(l, path, out);
            path.pop();
            path.push(Dir::Right);
            sequence(r, path, out);
            path.pop();
        }
        Rule::Beta(_, b, a) => {
            path.extend([Dir::Left, Dir::Body]);
            sequence(b, path, out);
            path.truncate(path.len() - 2);
            path.push(Dir::Right);
            sequence(a, path, out);
            path.pop();
            out.push(Position::from_dirs(path.clone()));
        }
    }
}

/// A set of redex positions of a source term, contracted simultaneously.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RedexSelection(BTreeSet<Position>);

impl RedexSelection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, p: Position) -> bool {
        self.0.insert(p)
    }

    pub fn contains(&self, p: &Position) -> bool {
        self.0.contains(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Position> {
        self.0.iter()
    }
}

impl FromIterator<Position> for RedexSelection {
    fn from_iter<I: IntoIterator<Item = Position>>(iter: I) -> Self {
        RedexSelection(iter.into_iter().collect())
    }
}

/// The derivation contracting exactly the selected redexes of `t`.
pub fn derive(t: &Term, sel: &RedexSelection, flavor: Flavor) -> Result<ParDerivation, ParallelError> {
    let valid: BTreeSet<Position> = redexes(t, Base::Beta).into_iter().collect();
    if let Some(p) = sel.iter().find(|p| !valid.contains(p)) {
        return Err(ParallelError::InvalidSelection { position: p.clone() });
    }
    build(t, sel, flavor, &mut Vec::new())
}

fn build(
    t: &Term,
    sel: &RedexSelection,
    flavor: Flavor,
    path: &mut Vec<Dir>,
) -> Result<ParDerivation, ParallelError> {
    match t {
        Term::Bound(_) | Term::Free(_) => Ok(ParDerivation::var(flavor, t.clone())),
        Term::Lam(h, b) => {
            path.push(Dir::Body);
            let d = build(b, sel, flavor, path);
            path.pop();
            Ok(ParDerivation::abs(h.clone(), d?))
        }
        Term::App(f, a) => {
            let here = Position::from_dirs(path.clone());
            if sel.contains(&here) {
                let Term::Lam(h, body) = &**f else {
                    return Err(ParallelError::InvalidSelection { position: here });
                };
                if flavor == Flavor::CbV && !a.is_value() {
                    return Err(ParallelError::CbvNonValueArgument { position: here });
                }
                path.extend([Dir::Left, Dir::Body]);
                let db = build(body, sel, flavor, path);
                path.truncate(path.len() - 2);
                path.push(Dir::Right);
                let da = build(a, sel, flavor, path);
                path.pop();
                ParDerivation::beta(h.clone(), db?, da?)
            } else {
                path.push(Dir::Left);
                let dl = build(f, sel, flavor, path);
                path.pop();
                path.push(Dir::Right);
                let dr = build(a, sel, flavor, path);
                path.pop();
                ParDerivation::app(dl?, dr?)
            }
        }
    }
}

/// All parallel steps from `t`, one per subset of its redexes (βv-redexes for
/// call-by-value), starting with the identity; at most `cap` of them.
pub fn all_parallel_steps(
    t: &Term,
    flavor: Flavor,
    cap: usize,
) -> impl Iterator<Item = ParDerivation> + '_ {
    let positions = redexes(t, flavor.base());
    let total: u128 = 1u128 << positions.len().min(127);
    let limit = total.min(cap as u128) as u64;
    (0..limit).map(move |mask| {
        let sel = positions
            .iter()
            .enumerate()
            .filter(|(i, _)| *i < 64 && mask >> i & 1 == 1)
            .map(|(_, p)| p.clone())
            .collect();
        derive(t, &sel, flavor).expect("subsets of redexes are valid selections")
    })
}

/// From `t ⇒n t'` and `s ⇒m s'`, a derivation of `t[x←s] ⇒k t'[x←s']` with
/// `k = n + |t'|_x·m`.
pub fn subst_parallel(
    d1: &ParDerivation,
    x: &Name,
    d2: &ParDerivation,
) -> Result<ParDerivation, ParallelError> {
    same_flavor(d1, d2)?;
    if d1.flavor == Flavor::CbV && !d2.source.is_value() {
        return Err(ParallelError::CbvNonValueSubstituend);
    }
    rebuild(d1, 0, &|v, depth| match v {
        Term::Free(y) if y == x => Ok(d2.shift(i64::from(depth), 0)),
        _ => Ok(ParDerivation::var(d1.flavor, v.clone())),
    })
}

/// From `t ⇒ t'` (index 0 dangling) and `s ⇒ s'`, a derivation of
/// `t[0←s] ⇒ t'[0←s']`: the residual left after contracting the root of a
/// β-rule node.
pub fn instantiate_parallel(
    body: &ParDerivation,
    arg: &ParDerivation,
) -> Result<ParDerivation, ParallelError> {
    same_flavor(body, arg)?;
    rebuild(body, 0, &|v, depth| match v {
        Term::Bound(i) if *i == depth => Ok(arg.shift(i64::from(depth), 0)),
        Term::Bound(i) if *i > depth => Ok(ParDerivation::var(body.flavor, Term::Bound(i - 1))),
        _ => Ok(ParDerivation::var(body.flavor, v.clone())),
    })
}

/// Whether `d` is derivable with the system's parallel-inessential rules.
pub fn is_parallel_inessential(d: &ParDerivation, sys: SystemId) -> Result<bool, ParallelError> {
    let expected = Flavor::of_system(sys);
    if d.flavor != expected {
        return Err(ParallelError::FlavorMismatch { expected, found: d.flavor });
    }
    Ok(inessential(d, sys))
}

/// [`is_parallel_inessential`] without the flavor check.
pub(crate) fn inessential(d: &ParDerivation, sys: SystemId) -> bool {
    match sys {
        SystemId::Head => not_head(d),
        SystemId::WeakCbv => not_weak(d),
        SystemId::Lo => not_lo(d),
        SystemId::LeastLevel => !d.level.is_finite() || d.level > least_level(&d.source),
    }
}

fn not_head(d: &ParDerivation) -> bool {
    match &d.rule {
        Rule::Var => true,
        Rule::Abs(_, b) => not_head(b),
        // (λx t) s with any parallel step inside t and s
        Rule::App(l, _) if l.source.is_lam() => true,
        Rule::App(l, _) => not_head(l),
        Rule::Beta(..) => false,
    }
}

fn not_weak(d: &ParDerivation) -> bool {
    match &d.rule {
        Rule::Var | Rule::Abs(..) => true,
        Rule::App(l, r) => not_weak(l) && not_weak(r),
        Rule::Beta(..) => false,
    }
}

fn not_lo(d: &ParDerivation) -> bool {
    match &d.rule {
        Rule::Var => true,
        Rule::Abs(_, b) => not_lo(b),
        Rule::App(l, _) if l.source.is_lam() => true,
        Rule::App(l, r) if l.source.is_neutral() => l.is_identity() && not_lo(r),
        Rule::App(l, _) => not_lo(l),
        Rule::Beta(..) => false,
    }
}

/// The leveled index: least level of a contracted redex, ∞ for none.
pub fn parallel_level(d: &ParDerivation) -> Level {
    d.level
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleTag {
    Var,
    Abs,
    App,
    Beta,
}

/// Serializable form of a derivation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationNode {
    pub rule: RuleTag,
    pub flavor: Flavor,
    pub index: ParIndex,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binder: Option<String>,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub children: Vec<DerivationNode>,
}

fn binder_name(hint: &Hint, scope: &[String], reserved: &BTreeSet<String>) -> String {
    let mut name = hint.0.to_string();
    while reserved.contains(&name) || scope.contains(&name) {
        name.push('\'');
    }
    name
}

fn node_of(d: &ParDerivation, scope: &mut Vec<String>, reserved: &BTreeSet<String>) -> DerivationNode {
    let (rule, binder, children) = match &d.rule {
        Rule::Var => (RuleTag::Var, None, vec![]),
        Rule::Abs(h, b) => {
            let name = binder_name(h, scope, reserved);
            scope.push(name.clone());
            let c = node_of(b, scope, reserved);
            scope.pop();
            (RuleTag::Abs, Some(name), vec![c])
        }
        Rule::App(l, r) => {
            (RuleTag::App, None, vec![node_of(l, scope, reserved), node_of(r, scope, reserved)])
        }
        Rule::Beta(h, b, a) => {
            let name = binder_name(h, scope, reserved);
            scope.push(name.clone());
            let cb = node_of(b, scope, reserved);
            scope.pop();
            (RuleTag::Beta, Some(name), vec![cb, node_of(a, scope, reserved)])
        }
    };
    DerivationNode {
        rule,
        flavor: d.flavor,
        index: d.index(),
        binder,
        source: print_in_scope(&d.source, scope),
        target: print_in_scope(&d.target, scope),
        children,
    }
}

fn from_node(node: &DerivationNode, scope: &mut Vec<String>) -> Result<ParDerivation, ParallelError> {
    let bad = |msg: &str| ParallelError::Malformed(msg.to_string());
    let binder = || node.binder.clone().ok_or_else(|| bad("missing binder"));
    let d = match (node.rule, node.children.as_slice()) {
        (RuleTag::Var, []) => {
            let name = node.source.trim();
            let v = match scope.iter().rev().position(|n| n == name) {
                Some(i) => Term::Bound(i as u32),
                None => Term::Free(Name::new(name)),
            };
            ParDerivation::var(node.flavor, v)
        }
        (RuleTag::Abs, [c]) => {
            let name = binder()?;
            scope.push(name.clone());
            let b = from_node(c, scope);
            scope.pop();
            ParDerivation::abs(Hint::new(&name), b?)
        }
        (RuleTag::App, [l, r]) => ParDerivation::app(from_node(l, scope)?, from_node(r, scope)?)?,
        (RuleTag::Beta, [cb, ca]) => {
            let name = binder()?;
            scope.push(name.clone());
            let b = from_node(cb, scope);
            scope.pop();
            ParDerivation::beta(Hint::new(&name), b?, from_node(ca, scope)?)?
        }
        _ => return Err(bad("wrong number of children for rule")),
    };
    if d.flavor != node.flavor {
        return Err(bad("flavor differs from children"));
    }
    let recorded = match (node.flavor, node.index) {
        (Flavor::Leveled, ParIndex::Count(k)) => {
            ParIndex::Level(Level::Finite(u32::try_from(k).map_err(|_| bad("level too large"))?))
        }
        (_, i) => i,
    };
    if recorded != d.index() {
        return Err(ParallelError::Malformed(format!(
            "recorded index {} but the rules give {}",
            node.index,
            d.index()
        )));
    }
    let recorded = |text: &str| parse_in_scope(text, scope).map_err(|e| bad(&e.to_string()));
    if recorded(&node.source)? != d.source || recorded(&node.target)? != d.target {
        return Err(bad("recorded source or target disagrees with the children"));
    }
    Ok(d)
}
