//! Brute-force ground truth: exhaustive term enumeration, random terms and
//! bounded exploration of reduction graphs.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::reduction::{base_steps, Base, Step};
use crate::term::{Hint, Name, Term};

pub const DEFAULT_NODE_BUDGET: usize = 20_000;
pub const DEFAULT_DEPTH_BUDGET: usize = 64;

/// Which terms to enumerate or sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumSpec {
    pub max_size: usize,
    pub free_names: Vec<String>,
    pub closed_only: bool,
}

impl EnumSpec {
    /// Terms over the free names `x` and `y`.
    pub fn open(max_size: usize) -> Self {
        EnumSpec { max_size, free_names: vec!["x".into(), "y".into()], closed_only: false }
    }

    pub fn closed(max_size: usize) -> Self {
        EnumSpec { max_size, free_names: vec![], closed_only: true }
    }

    fn names(&self) -> Vec<Name> {
        if self.closed_only {
            vec![]
        } else {
            self.free_names.iter().map(|n| Name::new(n)).collect()
        }
    }
}

const BINDERS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn binder_hint(depth: usize) -> Hint {
    match BINDERS.get(depth) {
        Some(n) => Hint::new(n),
        None => Hint::new(&format!("v{depth}")),
    }
}

/// Terms of exact size `n` whose dangling indices stay below `depth`.
struct Generator {
    names: Vec<Name>,
    memo: HashMap<(usize, usize), Vec<Term>>,
}

impl Generator {
    fn terms(&mut self, n: usize, depth: usize) -> Vec<Term> {
        if let Some(v) = self.memo.get(&(n, depth)) {
            return v.clone();
        }
        let mut out = Vec::new();
        if n == 1 {
            out.extend((0..depth).map(|i| Term::Bound(i as u32)));
            out.extend(self.names.iter().map(|x| Term::Free(x.clone())));
        } else {
            for b in self.terms(n - 1, depth + 1) {
                out.push(Term::Lam(binder_hint(depth), Box::new(b)));
            }
            for i in 1..n - 1 {
                let fs = self.terms(i, depth);
                let args = self.terms(n - 1 - i, depth);
                for f in &fs {
                    for a in &args {
                        out.push(Term::app(f.clone(), a.clone()));
                    }
                }
            }
        }
        self.memo.insert((n, depth), out.clone());
        out
    }
}

/// All alpha-distinct terms up to `spec.max_size`, by size, then abstractions
/// before applications, then by the sizes of the function part.
pub fn enumerate_terms(spec: &EnumSpec) -> impl Iterator<Item = Term> {
    let mut g = Generator { names: spec.names(), memo: HashMap::new() };
    let mut out = Vec::new();
    for n in 1..=spec.max_size {
        out.extend(g.terms(n, 0));
    }
    out.into_iter()
}

/// Number of terms of exact size `n` below `depth` binders with `free` names.
/// Float counts keep large sizes from overflowing; they only weight sampling.
fn count_table(max_n: usize, free: usize) -> Vec<Vec<f64>> {
    // table[n][d] for d up to max_n
    let width = max_n + 2;
    let mut table = vec![vec![0.0; width]; max_n + 1];
    for n in 1..=max_n {
        for d in 0..width {
            table[n][d] = if n == 1 {
                (d + free) as f64
            } else {
                let lam = if d + 1 < width { table[n - 1][d + 1] } else { 0.0 };
                let app: f64 = (1..n - 1).map(|i| table[i][d] * table[n - 1 - i][d]).sum();
                lam + app
            };
        }
    }
    table
}

/// A reproducible pseudo-random term of size `target_size`, or of size
/// `target_size + 1` when no term of the exact size exists. Sizes are sampled
/// in proportion to the number of terms of each shape, so every term of the
/// chosen size is (up to float rounding) equally likely.
pub fn random_term(seed: u64, target_size: usize, spec: &EnumSpec) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_term_with(&mut rng, target_size, spec)
}

pub fn random_term_with<R: Rng>(rng: &mut R, target_size: usize, spec: &EnumSpec) -> Term {
    let names = spec.names();
    let n = target_size.max(1);
    let table = count_table(n + 1, names.len());
    let size = if table[n][0] > 0.0 { n } else { n + 1 };
    sample(rng, &table, &names, size, 0)
}

fn sample<R: Rng>(rng: &mut R, table: &[Vec<f64>], names: &[Name], n: usize, depth: usize) -> Term {
    if n == 1 {
        let k = rng.gen_range(0..depth + names.len());
        return if k < depth { Term::Bound(k as u32) } else { Term::Free(names[k - depth].clone()) };
    }
    let lam = table[n - 1].get(depth + 1).copied().unwrap_or(0.0);
    let total = table[n][depth];
    let mut pick = rng.gen::<f64>() * total;
    if pick < lam || total <= lam {
        return Term::Lam(binder_hint(depth), Box::new(sample(rng, table, names, n - 1, depth + 1)));
    }
    pick -= lam;
    let splits: Vec<usize> = (1..n - 1).filter(|&i| table[i][depth] * table[n - 1 - i][depth] > 0.0).collect();
    let mut chosen = *splits.last().expect("a term of this size exists");
    for &i in &splits {
        let w = table[i][depth] * table[n - 1 - i][depth];
        if pick < w {
            chosen = i;
            break;
        }
        pick -= w;
    }
    let f = sample(rng, table, names, chosen, depth);
    let a = sample(rng, table, names, n - 1 - chosen, depth);
    Term::app(f, a)
}

/// Answer of a bounded normalization query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

/// Reachable terms from a start term, deduplicated up to alpha-equivalence.
#[derive(Clone, Debug)]
pub struct ReductionGraph {
    pub nodes: Vec<Term>,
    pub edges: Vec<Vec<(Step, usize)>>,
    /// BFS distance from the start node.
    pub depth: Vec<usize>,
    /// Whether each node's successors were computed.
    pub expanded: Vec<bool>,
    pub truncated: bool,
    index: HashMap<Term, usize>,
}

impl ReductionGraph {
    pub fn start(&self) -> &Term {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, t: &Term) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Expanded nodes without successors.
    pub fn sinks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.expanded[i] && self.edges[i].is_empty())
    }

    pub fn has_cycle(&self) -> bool {
        // iterative three-colour DFS
        let n = self.nodes.len();
        let mut colour = vec![0u8; n];
        for root in 0..n {
            if colour[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            colour[root] = 1;
            while let Some((v, i)) = stack.pop() {
                if i < self.edges[v].len() {
                    stack.push((v, i + 1));
                    let w = self.edges[v][i].1;
                    match colour[w] {
                        0 => {
                            colour[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => return true,
                        _ => {}
                    }
                } else {
                    colour[v] = 2;
                }
            }
        }
        false
    }

    /// Longest and shortest path lengths from the start to a sink, for an
    /// acyclic, untruncated graph.
    pub fn sink_path_lengths(&self) -> Option<(usize, usize)> {
        if self.truncated || self.has_cycle() {
            return None;
        }
        let n = self.nodes.len();
        let mut memo: Vec<Option<(usize, usize)>> = vec![None; n];
        // post-order without recursion
        let mut stack = vec![(0usize, false)];
        while let Some((v, done)) = stack.pop() {
            if memo[v].is_some() {
                continue;
            }
            if done || self.edges[v].is_empty() {
                let lens = self.edges[v]
                    .iter()
                    .map(|(_, w)| memo[*w].expect("children first"))
                    .fold(None, |acc: Option<(usize, usize)>, (lo, hi)| match acc {
                        None => Some((lo + 1, hi + 1)),
                        Some((a, b)) => Some((a.min(lo + 1), b.max(hi + 1))),
                    });
                memo[v] = Some(lens.unwrap_or((0, 0)));
            } else {
                stack.push((v, true));
                for (_, w) in &self.edges[v] {
                    if memo[*w].is_none() {
                        stack.push((*w, false));
                    }
                }
            }
        }
        memo[0].map(|(lo, hi)| (hi, lo))
    }

    /// Adjacency export with printed terms as node ids.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<String> = self.nodes.iter().map(|t| t.to_string()).collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .enumerate()
            .flat_map(|(from, out)| {
                let nodes = &nodes;
                out.iter().map(move |(step, to)| {
                    serde_json::json!({
                        "from": nodes[from],
                        "to": nodes[*to],
                        "position": step.position.to_string(),
                    })
                })
            })
            .collect();
        serde_json::json!({ "nodes": nodes, "edges": edges, "truncated": self.truncated })
    }
}

/// Breadth-first exploration of the base reduction from `t`.
pub fn explore(t: &Term, base: Base, node_budget: usize, depth_budget: usize) -> ReductionGraph {
    explore_with(t, |s| base_steps(s, base), node_budget, depth_budget)
}

/// Breadth-first exploration of an arbitrary step relation.
pub fn explore_with<F>(t: &Term, successors: F, node_budget: usize, depth_budget: usize) -> ReductionGraph
where
    F: Fn(&Term) -> Vec<(Step, Term)>,
{
    let mut g = ReductionGraph {
        nodes: vec![t.clone()],
        edges: vec![vec![]],
        depth: vec![0],
        expanded: vec![false],
        truncated: false,
        index: HashMap::from([(t.clone(), 0)]),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        let succ = successors(&g.nodes[v]);
        if g.depth[v] >= depth_budget {
            if succ.is_empty() {
                g.expanded[v] = true;
            } else {
                g.truncated = true;
            }
            continue;
        }
        let mut out = Vec::with_capacity(succ.len());
        let mut complete = true;
        for (step, s) in succ {
            let w = match g.index.get(&s) {
                Some(&w) => w,
                None => {
                    if g.nodes.len() >= node_budget {
                        complete = false;
                        continue;
                    }
                    let w = g.nodes.len();
                    g.index.insert(s.clone(), w);
                    g.nodes.push(s);
                    g.edges.push(vec![]);
                    g.depth.push(g.depth[v] + 1);
                    g.expanded.push(false);
                    queue.push_back(w);
                    w
                }
            };
            out.push((step, w));
        }
        g.edges[v] = out;
        if complete {
            g.expanded[v] = true;
        } else {
            g.truncated = true;
        }
    }
    g
}

/// Yes when a sink is reachable, No when none is; Unknown on a truncated graph.
pub fn weakly_normalizing(g: &ReductionGraph) -> Verdict {
    if g.truncated {
        Verdict::Unknown
    } else if g.sinks().next().is_some() {
        Verdict::Yes
    } else {
        Verdict::No
    }
}

/// Yes when the graph is acyclic, No when it has a cycle; Unknown on a
/// truncated graph.
pub fn strongly_normalizing(g: &ReductionGraph) -> Verdict {
    if g.truncated {
        Verdict::Unknown
    } else if g.has_cycle() {
        Verdict::No
    } else {
        Verdict::Yes
    }
}

/// A shortest path of at most `max_len` steps between two terms of `g`.
pub fn path_exists(g: &ReductionGraph, from: &Term, to: &Term, max_len: usize) -> Option<Vec<(Step, Term)>> {
    let src = g.index_of(from)?;
    let dst = g.index_of(to)?;
    let mut prev: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut dist = HashMap::from([(src, 0usize)]);
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        if v == dst {
            break;
        }
        if dist[&v] >= max_len {
            continue;
        }
        for (k, (_, w)) in g.edges[v].iter().enumerate() {
            if !dist.contains_key(w) {
                dist.insert(*w, dist[&v] + 1);
                prev.insert(*w, (v, k));
                queue.push_back(*w);
            }
        }
    }
    if !dist.contains_key(&dst) {
        return None;
    }
    let mut path = Vec::new();
    let mut cur = dst;
    while cur != src {
        let (v, k) = prev[&cur];
        path.push((g.edges[v][k].0.clone(), g.nodes[cur].clone()));
        cur = v;
    }
    path.reverse();
    Some(path)
}

/// Terms reachable from `t` by exactly `n` base steps.
pub fn reachable_in_exactly(t: &Term, base: Base, n: usize) -> HashSet<Term> {
    let mut layer = HashSet::from([t.clone()]);
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|s| base_steps(s, base).into_iter().map(|(_, r)| r))
            .collect();
    }
    layer
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{parse_with, Definitions};

    fn p(s: &str) -> Term {
        parse_with(s, &Definitions::standard()).unwrap()
    }

    #[test]
    fn tiny_enumerations() {
        let spec = EnumSpec { max_size: 1, free_names: vec!["x".into()], closed_only: false };
        assert_eq!(enumerate_terms(&spec).collect::<Vec<_>>(), vec![p("x")]);
        let closed: Vec<_> = enumerate_terms(&EnumSpec::closed(2)).collect();
        assert_eq!(closed, vec![p("\\x.x")]);
    }

    #[test]
    fn enumeration_is_duplicate_free_and_size_ordered() {
        let terms: Vec<_> = enumerate_terms(&EnumSpec::open(6)).collect();
        let set: HashSet<_> = terms.iter().cloned().collect();
        assert_eq!(set.len(), terms.len());
        assert!(terms.windows(2).all(|w| w[0].size() <= w[1].size()));
        assert!(terms.iter().all(|t| t.is_locally_closed() && t.size() <= 6));
    }

    #[test]
    fn random_terms_are_reproducible() {
        let spec = EnumSpec::closed(20);
        assert_eq!(random_term(7, 20, &spec), random_term(7, 20, &spec));
        for seed in 0..50 {
            let t = random_term(seed, 20, &spec);
            assert!(t.is_closed());
            assert!((19..=21).contains(&t.size()));
        }
        // no closed term of size 1: fall back to size 2
        assert_eq!(random_term(0, 1, &spec), p("\\x.x"));
    }

    #[test]
    fn graphs_of_small_terms() {
        let g = explore(&p("\\x.x"), Base::Beta, 100, 10);
        assert_eq!((g.len(), g.truncated), (1, false));
        assert!(g.edges[0].is_empty());

        let g = explore(&p("Omega"), Base::Beta, 100, 10);
        assert_eq!(g.len(), 1);
        assert_eq!(g.edges[0].len(), 1);
        assert_eq!(g.edges[0][0].1, 0);
        assert!(!g.truncated);
        assert_eq!(weakly_normalizing(&g), Verdict::No);
        assert_eq!(strongly_normalizing(&g), Verdict::No);

        // I(II) → II (twice) → I
        let g = explore(&p("I (I I)"), Base::Beta, 100, 10);
        assert_eq!(g.len(), 3);
        assert_eq!(g.edges[0].len(), 2);
        assert!(path_exists(&g, &p("I (I I)"), &p("I"), 2).is_some());
        assert!(path_exists(&g, &p("I (I I)"), &p("I"), 1).is_none());
        assert_eq!(path_exists(&g, &p("I I"), &p("I I"), 0), Some(vec![]));
        assert!(path_exists(&g, &p("I (I I)"), &p("x"), 5).is_none());
    }

    #[test]
    fn normalization_verdicts() {
        let g = explore(&p("(\\x.y) Omega"), Base::Beta, 100, 10);
        assert_eq!(weakly_normalizing(&g), Verdict::Yes);
        assert_eq!(strongly_normalizing(&g), Verdict::No);
        let g = explore(&p("\\x.x"), Base::Beta, 100, 10);
        assert_eq!((weakly_normalizing(&g), strongly_normalizing(&g)), (Verdict::Yes, Verdict::Yes));
        // (λx.x x x)(λx.x x x) grows forever
        let g = explore(&p("(\\x.x x x)(\\x.x x x)"), Base::Beta, 50, 64);
        assert!(g.truncated);
        assert_eq!(weakly_normalizing(&g), Verdict::Unknown);
    }

    #[test]
    fn sink_lengths() {
        let g = explore(&p("I (I I)"), Base::Beta, 100, 10);
        assert_eq!(g.sink_path_lengths(), Some((2, 2)));
        let g = explore(&p("(\\x.y) (I I)"), Base::Beta, 100, 10);
        assert_eq!(g.sink_path_lengths(), Some((2, 1)));
    }

    #[test]
    fn exact_reachability() {
        let r = reachable_in_exactly(&p("I (I I)"), Base::Beta, 2);
        assert_eq!(r, HashSet::from([p("I")]));
        assert!(reachable_in_exactly(&p("I (I I)"), Base::Beta, 3).is_empty());
    }

    #[test]
    fn json_export() {
        let g = explore(&p("I (I I)"), Base::Beta, 100, 10);
        let v = g.to_json();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
        assert_eq!(v["edges"].as_array().unwrap().len(), 3);
        assert_eq!(v["truncated"], false);
    }
}
