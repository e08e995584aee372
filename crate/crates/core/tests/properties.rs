use proptest::prelude::*;

use essential_rewrite::engine::{factorize, split, validate_factorization, EssentialSystem, Trace};
use essential_rewrite::oracle::{explore, path_exists};
use essential_rewrite::parallel::{derive, subst_parallel, ParDerivation};
use essential_rewrite::reduction::{base_steps, least_level, level_indexed_steps, redexes, step_at};
use essential_rewrite::term::{parse, print};
use essential_rewrite::{Flavor, Level, Name, Position, RedexSelection, SystemId, Term};

const NAMES: [&str; 3] = ["x", "y", "z"];

/// Named terms over x, y, z, built independently of the enumerator.
fn term() -> impl Strategy<Value = Term> {
    let leaf = prop::sample::select(NAMES.to_vec()).prop_map(Term::var);
    leaf.prop_recursive(5, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(NAMES.to_vec()), inner.clone()).prop_map(|(x, b)| Term::lam(x, b)),
            (inner.clone(), inner).prop_map(|(f, a)| Term::app(f, a)),
        ]
    })
}

/// A term with at least one β-redex: `(λv. body) arg` inside a context.
fn redex_term() -> impl Strategy<Value = Term> {
    (term(), prop::sample::select(NAMES.to_vec()), term(), term(), 0..3u8).prop_map(|(body, v, arg, ctx, shape)| {
        let r = Term::app(Term::lam(v, body), arg);
        match shape {
            0 => r,
            1 => Term::app(ctx, r),
            _ => Term::app(r, ctx),
        }
    })
}

fn derivation(t: &Term, flavor: Flavor, mask: u64) -> ParDerivation {
    let sel: RedexSelection = redexes(t, flavor.base())
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i < 64 && mask >> i & 1 == 1)
        .map(|(_, p)| p)
        .collect();
    derive(t, &sel, flavor).unwrap()
}

fn flavor() -> impl Strategy<Value = Flavor> {
    prop_oneof![Just(Flavor::CbN), Just(Flavor::CbV)]
}

fn system() -> impl Strategy<Value = SystemId> {
    prop::sample::select(SystemId::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(t in term()) {
        prop_assert_eq!(parse(&print(&t)).unwrap(), t);
    }

    #[test]
    fn occurrence_counts_under_substitution(t in term(), s in term()) {
        let (x, y) = (Name::new("x"), Name::new("y"));
        let r = t.substitute(&x, &s);
        prop_assert_eq!(
            r.count_occurrences(&y),
            t.count_occurrences(&y) + t.count_occurrences(&x) * s.count_occurrences(&y)
        );
        prop_assert_eq!(r.count_occurrences(&x), t.count_occurrences(&x) * s.count_occurrences(&x));
        prop_assert_eq!(r.size(), t.size() + t.count_occurrences(&x) * (s.size() - 1));
    }

    #[test]
    fn substitution_index_law(t in redex_term(), s in term(), m1: u64, m2: u64, f in flavor()) {
        let x = Name::new("x");
        let d1 = derivation(&t, f, m1);
        prop_assume!(f == Flavor::CbN || s.is_value());
        let d2 = derivation(&s, f, m2);
        let r = subst_parallel(&d1, &x, &d2).unwrap();
        let k = d1.count() + d1.target().count_occurrences(&x) as u64 * d2.count();
        prop_assert_eq!(r.count(), k);
        prop_assert_eq!(r.source(), &t.substitute(&x, &s));
        prop_assert_eq!(r.target(), &d1.target().substitute(&x, d2.target()));
    }

    #[test]
    fn sequentialization_replays_to_the_target(t in redex_term(), mask: u64, f in flavor()) {
        let d = derivation(&t, f, mask);
        let mut cur = t.clone();
        let positions = d.sequentialize();
        for p in &positions {
            cur = step_at(&cur, p, f.base()).unwrap();
        }
        prop_assert_eq!(&cur, d.target());
    }

    #[test]
    fn parallel_targets_are_reachable_within_the_index(t in redex_term(), mask: u64, f in flavor()) {
        let d = derivation(&t, f, mask);
        prop_assume!(d.count() <= 8);
        let n = d.count() as usize;
        let g = explore(&t, f.base(), 20_000, n);
        prop_assert!(path_exists(&g, &t, d.target(), n).is_some());
    }

    #[test]
    fn derivation_nodes_round_trip_through_json(t in redex_term(), mask: u64, f in flavor()) {
        let d = derivation(&t, f, mask);
        let json = serde_json::to_string(&d.to_node()).unwrap();
        let back = ParDerivation::from_node(&serde_json::from_str(&json).unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn split_ends_in_an_inessential_step(t in redex_term(), mask: u64, id in system()) {
        let sys = EssentialSystem::new(id);
        let d = derivation(&t, sys.flavor, mask);
        let s = split(&d, sys).unwrap();
        prop_assert!(sys.is_parallel_inessential(&s.residual));
        prop_assert_eq!(s.residual.target(), d.target());
        prop_assert_eq!(s.essential.end(), s.residual.source());
        if sys.flavor != Flavor::Leveled {
            let expected: Vec<u64> = (0..s.indices.len() as u64).map(|i| d.count() - i).collect();
            prop_assert_eq!(&s.indices, &expected);
        }
    }

    #[test]
    fn classification_partitions_base_steps(t in term(), id in system()) {
        let sys = EssentialSystem::new(id);
        let base: Vec<Position> = base_steps(&t, sys.base).into_iter().map(|(s, _)| s.position).collect();
        let mut classified: Vec<Position> = sys
            .essential_steps(&t)
            .into_iter()
            .chain(sys.inessential_steps(&t))
            .map(|(s, _)| s.position)
            .collect();
        classified.sort();
        prop_assert_eq!(classified, base);
    }

    #[test]
    fn least_level_is_the_least_step_level(t in redex_term()) {
        let least = level_indexed_steps(&t).into_iter().map(|(s, _)| s.level).min().unwrap_or(Level::Infinite);
        prop_assert_eq!(least, least_level(&t));
    }

    #[test]
    fn untruncated_graphs_are_closed_under_steps(t in redex_term()) {
        let g = explore(&t, essential_rewrite::Base::Beta, 300, 12);
        prop_assume!(!g.truncated);
        for (i, node) in g.nodes.iter().enumerate() {
            for (step, r) in base_steps(node, essential_rewrite::Base::Beta) {
                prop_assert!(g.index_of(&r).is_some());
                prop_assert!(g.edges[i].iter().any(|(s, j)| s.position == step.position && g.nodes[*j] == r));
            }
        }
    }

    #[test]
    fn random_sequences_factorize(t in redex_term(), choices in prop::collection::vec(any::<prop::sample::Index>(), 0..6), id in system()) {
        let sys = EssentialSystem::new(id);
        let mut positions = Vec::new();
        let mut cur = t.clone();
        for c in &choices {
            let steps = base_steps(&cur, sys.base);
            if steps.is_empty() {
                break;
            }
            let (step, next) = steps[c.index(steps.len())].clone();
            positions.push(step.position);
            cur = next;
        }
        let tr = Trace::from_positions(t, &positions, sys).unwrap();
        let f = factorize(&tr, sys).unwrap();
        prop_assert_eq!(validate_factorization(&tr, &f, sys), Ok(()));
    }
}
