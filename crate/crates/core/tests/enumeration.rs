use essential_rewrite::oracle::{enumerate_terms, random_term, EnumSpec};

/// Terms of exactly size `n` with `free` variables available at the leaves
/// (bound indices in scope plus free names), by the standard recurrence.
fn count(n: usize, free: u64) -> u64 {
    match n {
        0 => 0,
        1 => free,
        _ => count(n - 1, free + 1) + (1..n - 1).map(|k| count(k, free) * count(n - 1 - k, free)).sum::<u64>(),
    }
}

fn sizes(spec: &EnumSpec) -> Vec<u64> {
    let mut by_size = vec![0u64; spec.max_size + 1];
    for t in enumerate_terms(spec) {
        by_size[t.size()] += 1;
    }
    by_size
}

#[test]
fn closed_counts_match_recurrence() {
    let by_size = sizes(&EnumSpec::closed(7));
    for (n, &k) in by_size.iter().enumerate().skip(1) {
        assert_eq!(k, count(n, 0), "size {n}");
    }
    // λ0 | λλ0 λλ1 | λλλ0 λλλ1 λλλ2 λ(0 0)
    assert_eq!(by_size[..5].iter().sum::<u64>(), 1 + 2 + 4);
}

#[test]
fn open_counts_match_recurrence() {
    let by_size = sizes(&EnumSpec::open(7));
    for (n, &k) in by_size.iter().enumerate().skip(1) {
        assert_eq!(k, count(n, 2), "size {n}");
    }
}

#[test]
fn random_terms_respect_their_spec() {
    let spec = EnumSpec::closed(30);
    for seed in 0..1000 {
        let t = random_term(seed, 20, &spec);
        assert!(t.is_closed(), "{t}");
        assert!((19..=21).contains(&t.size()), "{t} has size {}", t.size());
    }
    let open = EnumSpec::open(30);
    for seed in 0..1000 {
        let t = random_term(seed, 20, &open);
        assert!(t.is_locally_closed());
        assert!(t.free_names().iter().all(|n| n.as_str() == "x" || n.as_str() == "y"));
        assert_eq!(t, random_term(seed, 20, &open));
    }
}
