//! Exhaustive and randomized property checks over enumerated terms, with
//! machine-readable reports.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{factorize, merge, normalize, split, validate_factorization, EngineError, EssentialSystem, Outcome, Trace};
use crate::oracle::{
    enumerate_terms, explore, explore_with, path_exists, random_term_with, reachable_in_exactly, EnumSpec,
    ReductionGraph, DEFAULT_DEPTH_BUDGET, DEFAULT_NODE_BUDGET,
};
use crate::parallel::{all_parallel_steps, derive, subst_parallel, Flavor, ParDerivation, RedexSelection, DEFAULT_CAP};
use crate::reduction::{base_steps, least_level, level_indexed_steps, redexes, Base, Level, Step, SystemId};
use crate::term::{Name, Position, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Merge,
    Split,
    IndexedSplit,
    Persistence,
    Diamond,
    Determinism,
    Fullness,
    Decomposition,
    LlMonotone,
    LlInvariant,
    LlMeaning,
    ShapePreservation,
    Factorization,
    Normalization,
}

impl Property {
    pub const ALL: [Property; 14] = [
        Property::Merge,
        Property::Split,
        Property::IndexedSplit,
        Property::Persistence,
        Property::Diamond,
        Property::Determinism,
        Property::Fullness,
        Property::Decomposition,
        Property::LlMonotone,
        Property::LlInvariant,
        Property::LlMeaning,
        Property::ShapePreservation,
        Property::Factorization,
        Property::Normalization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Merge => "merge",
            Property::Split => "split",
            Property::IndexedSplit => "indexed-split",
            Property::Persistence => "persistence",
            Property::Diamond => "diamond",
            Property::Determinism => "determinism",
            Property::Fullness => "fullness",
            Property::Decomposition => "decomposition",
            Property::LlMonotone => "ll-monotone",
            Property::LlInvariant => "ll-invariant",
            Property::LlMeaning => "ll-meaning",
            Property::ShapePreservation => "shape-preservation",
            Property::Factorization => "factorization",
            Property::Normalization => "normalization",
        }
    }

    /// Systems the property is stated for.
    pub fn applies_to(self, sys: SystemId) -> bool {
        match self {
            Property::Determinism => matches!(sys, SystemId::Head | SystemId::Lo),
            Property::Fullness => sys.is_full(),
            Property::LlMonotone | Property::LlInvariant | Property::LlMeaning | Property::ShapePreservation => {
                sys == SystemId::LeastLevel
            }
            _ => true,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown property `{s}`"))
    }
}

/// Randomized sweeps over parallel derivations and leveled steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sweep {
    SubstIndex,
    SubstLevel,
    SplitIndex,
}

impl Sweep {
    pub const ALL: [Sweep; 3] = [Sweep::SubstIndex, Sweep::SubstLevel, Sweep::SplitIndex];

    pub fn name(self) -> &'static str {
        match self {
            Sweep::SubstIndex => "subst-index",
            Sweep::SubstLevel => "subst-level",
            Sweep::SplitIndex => "split-index",
        }
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sweep::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown sweep `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub property: String,
    pub system: String,
    pub size_bound: usize,
    pub checked_count: u64,
    pub result: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    /// Why a check was inconclusive, or how many terms were outside the
    /// property's premise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.result == Status::Pass
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} (system {}, size <= {}, {} checked)",
            self.result, self.property, self.system, self.size_bound, self.checked_count
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "\ncounterexample: {c}")?;
        }
        if let Some(d) = &self.detail {
            write!(f, "\n{d}")?;
        }
        Ok(())
    }
}

/// Bounds shared by all checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub size_bound: usize,
    pub fuel: usize,
    pub node_budget: usize,
    pub depth_budget: usize,
    /// Parallel steps enumerated per term.
    pub cap: usize,
    pub seed: u64,
    pub samples: usize,
    /// Longest base sequence factorized.
    pub sequence_len: usize,
    /// Sequences factorized per system; larger spaces are thinned evenly.
    pub max_sequences: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            size_bound: 8,
            fuel: 1000,
            node_budget: DEFAULT_NODE_BUDGET,
            depth_budget: DEFAULT_DEPTH_BUDGET,
            cap: DEFAULT_CAP,
            seed: 0,
            samples: 500,
            sequence_len: 4,
            max_sequences: 50_000,
        }
    }
}

/// Outcome of checking one term (or one sample).
#[derive(Clone, Debug)]
enum Instance {
    Ok(u64),
    /// Outside the premise of the property.
    Skipped,
    Fail(String),
    Inconclusive(String),
}

fn aggregate(property: &str, system: &str, size_bound: usize, results: Vec<Instance>) -> Report {
    let mut checked = 0;
    let mut skipped = 0u64;
    let mut fail = None;
    let mut unknown = None;
    let mut unknown_count = 0u64;
    for r in results {
        match r {
            Instance::Ok(n) => checked += n,
            Instance::Skipped => skipped += 1,
            Instance::Fail(c) => {
                fail.get_or_insert(c);
            }
            Instance::Inconclusive(c) => {
                unknown_count += 1;
                unknown.get_or_insert(c);
            }
        }
    }
    let (result, counterexample, mut detail) = match (fail, unknown) {
        (Some(c), _) => (Status::Fail, Some(c), None),
        (None, Some(c)) => {
            (Status::Inconclusive, None, Some(format!("{unknown_count} undecided within bounds, first: {c}")))
        }
        (None, None) => (Status::Pass, None, None),
    };
    if skipped > 0 {
        let note = format!("{skipped} outside the premise");
        detail = Some(match detail {
            Some(d) => format!("{d}; {note}"),
            None => note,
        });
    }
    Report {
        property: property.to_string(),
        system: system.to_string(),
        size_bound,
        checked_count: checked,
        result,
        counterexample,
        detail,
    }
}

/// Terms a property is checked on: open terms over `{x, y}` (which include
/// the closed ones).
pub fn universe(size_bound: usize) -> Vec<Term> {
    enumerate_terms(&EnumSpec::open(size_bound)).collect()
}

fn closed_universe(size_bound: usize) -> Vec<Term> {
    enumerate_terms(&EnumSpec::closed(size_bound)).collect()
}

/// Check `prop` for `sys` on every term up to `cfg.size_bound`.
pub fn check_property(prop: Property, sys: EssentialSystem, cfg: &CheckConfig) -> Result<Report, EngineError> {
    if !prop.applies_to(sys.id) {
        return Err(EngineError::NotApplicable { property: prop.name().into(), system: sys.id.name().into() });
    }
    match prop {
        Property::Normalization => return Ok(check_normalization(sys, cfg)),
        Property::Factorization => return Ok(check_factorization(sys, cfg)),
        _ => {}
    }
    let terms = universe(cfg.size_bound);
    let results: Vec<Instance> = terms.par_iter().map(|t| check_term(prop, sys, t, cfg)).collect();
    Ok(aggregate(prop.name(), sys.id.name(), cfg.size_bound, results))
}

fn reduct_set(steps: &[(Step, Term)]) -> BTreeSet<Term> {
    steps.iter().map(|(_, r)| r.clone()).collect()
}

fn check_term(prop: Property, sys: EssentialSystem, t: &Term, cfg: &CheckConfig) -> Instance {
    match prop {
        Property::Decomposition => decomposition(sys, t),
        Property::Determinism => {
            let reducts = reduct_set(&sys.essential_steps(t));
            if reducts.len() <= 1 {
                Instance::Ok(1)
            } else {
                Instance::Fail(format!("{t} has {} distinct essential reducts", reducts.len()))
            }
        }
        Property::Diamond => diamond(sys, t),
        Property::Persistence => persistence(sys, t),
        Property::Fullness => {
            let stuck = sys.essential_steps(t).is_empty();
            if stuck == redexes(t, sys.base).is_empty() {
                Instance::Ok(1)
            } else {
                Instance::Fail(format!("{t}: essential-normal is {stuck} but base-normal is {}", !stuck))
            }
        }
        Property::LlMonotone => ll_relation(t, &base_steps(t, Base::Beta), |before, after| after >= before, "β"),
        Property::LlInvariant => ll_relation(t, &sys.inessential_steps(t), |before, after| after == before, "¬ll"),
        Property::LlMeaning => {
            let least = level_indexed_steps(t).iter().map(|(s, _)| s.level).min().unwrap_or(Level::Infinite);
            if least == least_level(t) {
                Instance::Ok(1)
            } else {
                Instance::Fail(format!("{t}: least level {} but least step level {least}", least_level(t)))
            }
        }
        Property::ShapePreservation => shape_preservation(t),
        Property::Merge => merge_instances(sys, t, cfg.cap),
        Property::Split | Property::IndexedSplit => split_instances(prop, sys, t, cfg.cap),
        Property::Factorization | Property::Normalization => unreachable!("handled by their own drivers"),
    }
}

fn decomposition(sys: EssentialSystem, t: &Term) -> Instance {
    let key = |v: Vec<(Step, Term)>| -> Vec<(Position, Term)> { v.into_iter().map(|(s, r)| (s.position, r)).collect() };
    let base: BTreeSet<_> = key(sys.base_steps(t)).into_iter().collect();
    let ess = key(sys.essential_steps(t));
    let iness = key(sys.inessential_steps(t));
    let ess_pos: BTreeSet<_> = ess.iter().map(|(p, _)| p.clone()).collect();
    if let Some((p, _)) = iness.iter().find(|(p, _)| ess_pos.contains(p)) {
        return Instance::Fail(format!("{t}: step at {p} is both essential and inessential"));
    }
    let union: BTreeSet<_> = ess.into_iter().chain(iness).collect();
    if union == base {
        Instance::Ok(base.len() as u64)
    } else {
        let missing = base.difference(&union).next().map(|(p, _)| format!("base step at {p} is unclassified"));
        let extra = union.difference(&base).next().map(|(p, _)| format!("classified step at {p} is not a base step"));
        Instance::Fail(format!("{t}: {}", missing.or(extra).unwrap_or_default()))
    }
}

fn diamond(sys: EssentialSystem, t: &Term) -> Instance {
    let reducts: Vec<Term> = reduct_set(&sys.essential_steps(t)).into_iter().collect();
    let mut pairs = 0;
    for (i, s) in reducts.iter().enumerate() {
        let from_s = reduct_set(&sys.essential_steps(s));
        for u in &reducts[i + 1..] {
            pairs += 1;
            let joins = sys.essential_steps(u).iter().any(|(_, r)| from_s.contains(r));
            if !joins {
                return Instance::Fail(format!("{t}: {s} and {u} do not join in one step"));
            }
        }
    }
    Instance::Ok(pairs)
}

fn persistence(sys: EssentialSystem, t: &Term) -> Instance {
    if sys.essential_steps(t).is_empty() {
        return Instance::Ok(0);
    }
    let iness = sys.inessential_steps(t);
    for (step, u) in &iness {
        if sys.essential_steps(u).is_empty() {
            return Instance::Fail(format!("{t}: inessential step at {} reaches {u}, which is essential-normal", step.position));
        }
    }
    Instance::Ok(iness.len() as u64)
}

fn ll_relation(t: &Term, steps: &[(Step, Term)], ok: impl Fn(Level, Level) -> bool, rel: &str) -> Instance {
    let before = least_level(t);
    for (step, s) in steps {
        let after = least_level(s);
        if !ok(before, after) {
            return Instance::Fail(format!(
                "{t} (least level {before}) →{rel} {s} (least level {after}) at {}",
                step.position
            ));
        }
    }
    Instance::Ok(steps.len() as u64)
}

fn shape_preservation(t: &Term) -> Instance {
    let k = least_level(t);
    if t.is_lam() || k == Level::ZERO || !k.is_finite() {
        return Instance::Ok(0);
    }
    let mut n = 0;
    for (step, s) in level_indexed_steps(t) {
        if step.level != k {
            continue;
        }
        n += 1;
        if s.is_lam() {
            return Instance::Fail(format!("{t} reaches the abstraction {s} by a step at level {k}"));
        }
    }
    Instance::Ok(n)
}

fn merge_instances(sys: EssentialSystem, t: &Term, cap: usize) -> Instance {
    let mut n = 0;
    for d in all_parallel_steps(t, sys.flavor, cap) {
        if !sys.is_parallel_inessential(&d) {
            continue;
        }
        for (step, reduct) in sys.essential_steps(d.target()) {
            n += 1;
            match merge(&d, &step, sys) {
                Ok(m) if m.source() == t && m.target() == &reduct => {}
                Ok(m) => return Instance::Fail(format!("merging {d} with the step at {} gives {m}", step.position)),
                Err(e) => return Instance::Fail(format!("merging {d} with the step at {}: {e}", step.position)),
            }
        }
    }
    Instance::Ok(n)
}

fn split_instances(prop: Property, sys: EssentialSystem, t: &Term, cap: usize) -> Instance {
    let mut n = 0;
    for d in all_parallel_steps(t, sys.flavor, cap) {
        n += 1;
        let res = if prop == Property::IndexedSplit {
            super::indexed_split(&d, sys).map(|_| ())
        } else {
            split(&d, sys).and_then(|s| {
                let ok = sys.is_parallel_inessential(&s.residual)
                    && s.residual.target() == d.target()
                    && s.essential.end() == s.residual.source()
                    && s.essential.start == *t;
                if ok {
                    Ok(())
                } else {
                    Err(EngineError::SplitStuck { derivation: d.to_string() })
                }
            })
        };
        if let Err(e) = res {
            return Instance::Fail(format!("splitting {d}: {e}"));
        }
    }
    Instance::Ok(n)
}

// ---------------------------------------------------------------- factorization

fn count_sequences(t: &Term, base: Base, len: usize, memo: &mut HashMap<(Term, usize), u64>) -> u64 {
    if len == 0 {
        return 0;
    }
    if let Some(&n) = memo.get(&(t.clone(), len)) {
        return n;
    }
    let n = base_steps(t, base)
        .iter()
        .map(|(_, s)| 1 + count_sequences(s, base, len - 1, memo))
        .fold(0u64, u64::saturating_add);
    memo.insert((t.clone(), len), n);
    n
}

/// Even thinning: of `total` items, keep `max` evenly spaced ones.
fn kept(g: u64, total: u64, max: u64) -> bool {
    if total <= max {
        return true;
    }
    let (g, total, max) = (u128::from(g), u128::from(total), u128::from(max));
    (g + 1) * max / total > g * max / total
}

/// Factorize every base sequence of length `1..=sequence_len` from every
/// term up to the size bound (evenly thinned to `max_sequences`) and
/// validate the result.
pub fn check_factorization(sys: EssentialSystem, cfg: &CheckConfig) -> Report {
    let terms = universe(cfg.size_bound);
    let counts: Vec<u64> = terms
        .par_iter()
        .map(|t| count_sequences(t, sys.base, cfg.sequence_len, &mut HashMap::new()))
        .collect();
    let total: u64 = counts.iter().sum();
    let offsets: Vec<u64> = counts
        .iter()
        .scan(0u64, |acc, c| {
            let o = *acc;
            *acc += c;
            Some(o)
        })
        .collect();
    let max = cfg.max_sequences as u64;
    let results: Vec<Instance> = terms
        .par_iter()
        .zip(offsets.par_iter())
        .map(|(t, &offset)| {
            let mut g = offset;
            let mut n = 0;
            let mut failure = None;
            let mut path = Vec::new();
            walk(t, sys.base, cfg.sequence_len, &mut path, &mut |positions| {
                let selected = kept(g, total, max);
                g += 1;
                if !selected || failure.is_some() {
                    return;
                }
                n += 1;
                if let Err(msg) = factorize_one(t, positions, sys) {
                    failure = Some(msg);
                }
            });
            match failure {
                Some(msg) => Instance::Fail(msg),
                None => Instance::Ok(n),
            }
        })
        .collect();
    aggregate(Property::Factorization.name(), sys.id.name(), cfg.size_bound, results)
}

fn walk(t: &Term, base: Base, len: usize, path: &mut Vec<Position>, visit: &mut dyn FnMut(&[Position])) {
    if len == 0 {
        return;
    }
    for (step, s) in base_steps(t, base) {
        path.push(step.position);
        visit(path);
        walk(&s, base, len - 1, path, visit);
        path.pop();
    }
}

fn factorize_one(t: &Term, positions: &[Position], sys: EssentialSystem) -> Result<(), String> {
    let describe = || {
        let ps: Vec<String> = positions.iter().map(|p| p.to_string()).collect();
        format!("{t} with steps [{}]", ps.join(", "))
    };
    let tr = Trace::from_positions(t.clone(), positions, sys).map_err(|e| format!("{}: {e}", describe()))?;
    let f = factorize(&tr, sys).map_err(|e| format!("{}: {e}", describe()))?;
    validate_factorization(&tr, &f, sys).map_err(|e| format!("{}: {e}", describe()))
}

// ---------------------------------------------------------------- normalization

/// The normalization theorems, checked per term:
///
/// * LO and ll: a term with a β-normal reduct in its explored graph reaches a
///   β-normal form by the strategy; for ll every maximal essential sequence
///   is finite and all have the same length.
/// * head: a term with a head-normal reduct is head-normalizing.
/// * weak CbV (closed terms): a term reducing to a value has only finite
///   maximal →w sequences, all ending in values and of equal length.
///
/// Bound hits make the report INCONCLUSIVE.
pub fn check_normalization(sys: EssentialSystem, cfg: &CheckConfig) -> Report {
    let terms = match sys.id {
        SystemId::WeakCbv => closed_universe(cfg.size_bound),
        _ => universe(cfg.size_bound),
    };
    let results: Vec<Instance> = terms.par_iter().map(|t| normalization_instance(sys, t, cfg)).collect();
    aggregate(Property::Normalization.name(), sys.id.name(), cfg.size_bound, results)
}

fn normalization_instance(sys: EssentialSystem, t: &Term, cfg: &CheckConfig) -> Instance {
    let g = explore(t, sys.base, cfg.node_budget, cfg.depth_budget);
    let premise = match sys.id {
        SystemId::Head => g.nodes.iter().any(|s| sys.essential_steps(s).is_empty()),
        SystemId::WeakCbv => g.nodes.iter().any(Term::is_value),
        SystemId::Lo | SystemId::LeastLevel => g.nodes.iter().any(Term::is_normal),
    };
    if !premise {
        return Instance::Skipped;
    }
    let (trace, outcome) = normalize(t, sys, cfg.fuel);
    match (sys.id, outcome) {
        (_, Outcome::FuelExhausted) => {
            return Instance::Inconclusive(format!("{t}: no essential-normal form within {} steps", cfg.fuel))
        }
        (SystemId::Lo | SystemId::LeastLevel, Outcome::EssentialNormal) => {
            return Instance::Fail(format!("{t}: strategy stops at {}, which is not β-normal", trace.end()))
        }
        (SystemId::WeakCbv, _) if !trace.end().is_value() => {
            return Instance::Fail(format!("{t}: weak reduction stops at {}, which is not a value", trace.end()))
        }
        _ => {}
    }
    match sys.id {
        SystemId::Head | SystemId::Lo => Instance::Ok(1),
        SystemId::LeastLevel => uniform(t, sys, cfg, Term::is_normal, "β-normal"),
        SystemId::WeakCbv => uniform(t, sys, cfg, Term::is_value, "a value"),
    }
}

/// Every maximal essential sequence from `t` is finite, ends in an `end`
/// term and all have the same length.
fn uniform(t: &Term, sys: EssentialSystem, cfg: &CheckConfig, end: fn(&Term) -> bool, what: &str) -> Instance {
    let g: ReductionGraph = explore_with(t, |s| sys.essential_steps(s), cfg.node_budget, cfg.depth_budget);
    if g.truncated {
        return Instance::Inconclusive(format!("{t}: essential graph exceeds the budgets"));
    }
    if g.has_cycle() {
        return Instance::Fail(format!("{t}: the essential graph has a cycle"));
    }
    if let Some(v) = g.sinks().find(|&v| !end(&g.nodes[v])) {
        return Instance::Fail(format!("{t}: a maximal essential sequence ends in {}, not {what}", g.nodes[v]));
    }
    match g.sink_path_lengths() {
        Some((longest, shortest)) if longest == shortest => Instance::Ok(g.len() as u64),
        Some((longest, shortest)) => {
            Instance::Fail(format!("{t}: maximal essential sequences of lengths {shortest} and {longest}"))
        }
        None => Instance::Fail(format!("{t}: no maximal essential sequence")),
    }
}

// ---------------------------------------------------------------- sweeps

fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// A random derivation over open terms whose selection is a random subset of
/// the redexes and whose count lies in `counts`.
pub fn random_derivation<R: Rng>(
    rng: &mut R,
    flavor: Flavor,
    sizes: std::ops::RangeInclusive<usize>,
    counts: std::ops::RangeInclusive<u64>,
    value_source: bool,
) -> ParDerivation {
    let spec = EnumSpec::open(*sizes.end());
    loop {
        let size = rng.gen_range(sizes.clone());
        let t = random_term_with(rng, size, &spec);
        if value_source && !t.is_value() {
            continue;
        }
        let sel: RedexSelection = redexes(&t, flavor.base()).into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        let d = derive(&t, &sel, flavor).expect("redex subsets are valid selections");
        if counts.contains(&d.count()) {
            return d;
        }
    }
}

/// Randomized sweep; `flavor` selects the derivation flavor where relevant.
pub fn run_sweep(sweep: Sweep, flavor: Flavor, cfg: &CheckConfig) -> Report {
    let results: Vec<Instance> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            match sweep {
                Sweep::SubstIndex => subst_index_sample(&mut rng, flavor),
                Sweep::SubstLevel => subst_level_sample(&mut rng),
                Sweep::SplitIndex => split_index_sample(&mut rng, flavor, i, cfg),
            }
        })
        .collect();
    let system = match sweep {
        Sweep::SubstLevel => "leveled",
        _ => flavor.name(),
    };
    aggregate(sweep.name(), system, 9, results)
}

fn subst_index_sample<R: Rng>(rng: &mut R, flavor: Flavor) -> Instance {
    let x = Name::new("x");
    let d1 = loop {
        let d = random_derivation(rng, flavor, 1..=9, 0..=5, false);
        if d.target().count_occurrences(&x) > 0 {
            break d;
        }
    };
    let d2 = random_derivation(rng, flavor, 2..=6, 1..=3, flavor == Flavor::CbV);
    let r = match subst_parallel(&d1, &x, &d2) {
        Ok(r) => r,
        Err(e) => return Instance::Fail(format!("{d1} with x := {d2}: {e}")),
    };
    let expected = d1.count() + d1.target().count_occurrences(&x) as u64 * d2.count();
    let source = d1.source().substitute(&x, d2.source());
    let target = d1.target().substitute(&x, d2.target());
    let rederived = derive(r.source(), &r.selection(), flavor);
    let ok = r.count() == expected
        && r.source() == &source
        && r.target() == &target
        && rederived.as_ref().is_ok_and(|d| d.count() == expected && d.target() == &target);
    if ok {
        Instance::Ok(1)
    } else {
        Instance::Fail(format!("{d1} with x := {d2} gives {r}, expected index {expected}"))
    }
}

fn subst_level_sample<R: Rng>(rng: &mut R) -> Instance {
    let x = Name::new("x");
    let spec = EnumSpec::open(9);
    let (t, step, s) = loop {
        let size = rng.gen_range(3..=9);
        let t = random_term_with(rng, size, &spec);
        let steps = level_indexed_steps(&t);
        if !steps.is_empty() {
            let (step, s) = steps[rng.gen_range(0..steps.len())].clone();
            break (t, step, s);
        }
    };
    let size = rng.gen_range(1..=5);
    let u = random_term_with(rng, size, &EnumSpec::open(5));
    let tu = t.substitute(&x, &u);
    let su = s.substitute(&x, &u);
    let found = level_indexed_steps(&tu)
        .into_iter()
        .any(|(st, r)| st.position == step.position && st.level == step.level && r == su);
    if found {
        Instance::Ok(1)
    } else {
        Instance::Fail(format!("{t} →β:{} {s} at {}, but not after x := {u}", step.level, step.position))
    }
}

fn split_index_sample<R: Rng>(rng: &mut R, flavor: Flavor, i: usize, cfg: &CheckConfig) -> Instance {
    let sys = match (flavor, i % 2) {
        (Flavor::CbV, _) => SystemId::WeakCbv,
        (_, 0) => SystemId::Head,
        _ => SystemId::Lo,
    };
    let sys = EssentialSystem::new(sys);
    let d = random_derivation(rng, sys.flavor, 2..=9, 1..=6, false);
    let s = match split(&d, sys) {
        Ok(s) => s,
        Err(e) => return Instance::Fail(format!("splitting {d} for {}: {e}", sys.id)),
    };
    if s.indices.windows(2).any(|w| w[1] + 1 != w[0]) || !sys.is_parallel_inessential(&s.residual) {
        return Instance::Fail(format!("splitting {d} for {}: indices {:?}", sys.id, s.indices));
    }
    let n = d.count() as usize;
    if !reachable_in_exactly(d.source(), sys.base, n).contains(d.target()) {
        return Instance::Fail(format!("{d}: target not reachable in exactly {n} steps"));
    }
    let g = explore(d.source(), sys.base, cfg.node_budget, n);
    if path_exists(&g, d.source(), d.target(), n).is_none() {
        return Instance::Fail(format!("{d}: no path of at most {n} steps"));
    }
    Instance::Ok(1)
}
