use proptest::prelude::*;

use hamming_overfit::attack_large::balanced_column;
use hamming_overfit::featurespace::prefix_hits;
use hamming_overfit::rng::{derive_seed, stream};
use hamming_overfit::{
    build_queries, match_count, partition_blocks, run_small, sample_bundle, Attack, Label, LabelSequence,
    LargeAttack, MatchOracle, SmallAttack,
};

fn seq(max_n: usize) -> impl Strategy<Value = LabelSequence> {
    (2usize..7, 1usize..=max_n).prop_flat_map(|(m, n)| {
        proptest::collection::vec(1..=m as Label, n).prop_map(move |v| LabelSequence::new(v, m).unwrap())
    })
}

fn pair(max_n: usize) -> impl Strategy<Value = (LabelSequence, LabelSequence)> {
    (2usize..7, 1usize..=max_n).prop_flat_map(|(m, n)| {
        let one = proptest::collection::vec(1..=m as Label, n);
        (one.clone(), one).prop_map(move |(a, b)| (LabelSequence::new(a, m).unwrap(), LabelSequence::new(b, m).unwrap()))
    })
}

proptest! {
    #[test]
    fn matches_and_distance_partition_n((q, z) in pair(64)) {
        let r = match_count(&q, &z).unwrap();
        let direct = q.labels().iter().zip(z.labels()).filter(|(a, b)| a == b).count();
        prop_assert_eq!(r.matches, direct);
        prop_assert_eq!(r.matches + r.hamming(), q.len());
        prop_assert_eq!(match_count(&z, &q).unwrap(), r);
        prop_assert_eq!(match_count(&z, &z).unwrap().matches, z.len());
    }

    #[test]
    fn bundle_equivariance((q, z) in pair(48), seed in any::<u64>()) {
        let b = sample_bundle(q.len(), q.classes(), &mut stream(seed)).unwrap();
        let lhs = match_count(&b.apply(&q).unwrap(), &z).unwrap();
        let rhs = match_count(&q, &b.inverse().apply(&z).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(b.inverse().apply(&b.apply(&z).unwrap()).unwrap(), z);
    }

    #[test]
    fn blocks_tile_positions(n in 1usize..300, blocks in 1usize..300) {
        prop_assume!(blocks <= n);
        let p = partition_blocks(n, blocks + 1).unwrap();
        let sizes = p.sizes();
        prop_assert_eq!(sizes.len(), blocks);
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut next = 0;
        for (i, r) in p.blocks().enumerate() {
            prop_assert_eq!(r.start, next);
            next = r.end;
            prop_assert_eq!(p.block_of(r.start), i);
            prop_assert_eq!(p.block_of(r.end - 1), i);
        }
    }

    #[test]
    fn columns_are_balanced(m in 2usize..12, k in 1usize..200, seed in any::<u64>()) {
        let col = balanced_column(m, k, &mut stream(seed));
        prop_assert_eq!(col.len(), k);
        let mut counts = vec![0usize; m];
        for l in col {
            counts[usize::from(l) - 1] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c == k / m || c == k.div_ceil(m)));
    }

    #[test]
    fn matrix_prefix_balanced_suffix_constant(n in 1usize..40, m in 2usize..6, k in 1usize..40, seed in any::<u64>()) {
        let t = 1 + (seed as usize) % n;
        let q = build_queries(n, m, k, t, &mut stream(seed)).unwrap();
        for j in 0..n {
            let counts = q.column_counts(j);
            if j < t {
                prop_assert!(counts.iter().all(|&c| c == k / m || c == k.div_ceil(m)));
            } else {
                prop_assert_eq!(counts[0], k);
            }
        }
    }

    #[test]
    fn attacks_respect_budget(z in seq(80), k in 1usize..120, seed in any::<u64>()) {
        let n = z.len();
        if k == 1 || k - 1 <= n {
            let mut o = MatchOracle::with_budget(z.clone(), k);
            let zhat = run_small(&mut o, k).unwrap();
            prop_assert!(o.queries_used() <= k);
            prop_assert_eq!(zhat.len(), n);
            let mut o = MatchOracle::with_budget(z.clone(), k);
            let again = SmallAttack.run(&mut o, k, &mut stream(seed)).unwrap();
            prop_assert_eq!(again, zhat);
        }
        let mut o = MatchOracle::with_budget(z.clone(), k);
        let zhat = LargeAttack::default().run(&mut o, k, &mut stream(seed)).unwrap();
        prop_assert_eq!(o.queries_used(), k);
        prop_assert!(o.final_accuracy(&zhat).unwrap().matches <= n);
    }
}

/// The hashed prefix `X_t` meets a fixed `n`-subset in `t/2..=3t/2` points
/// except with probability at most `2·exp(-t/12)`.
#[test]
fn hashed_prefix_concentrates() {
    let (n, runs) = (400usize, 2000u64);
    let ids: Vec<u64> = (0..n as u64).map(|i| i * 7919 + 13).collect();
    for t in [24usize, 48, 96] {
        let outside = (0..runs)
            .filter(|&r| {
                let h = prefix_hits(derive_seed(77, &[t as u64, r]), n, t, &ids);
                2 * h < t || 2 * h > 3 * t
            })
            .count() as f64
            / runs as f64;
        let cap = 2.0 * (-(t as f64) / 12.0).exp();
        // 4 binomial standard errors of slack on the empirical rate
        let slack = 4.0 * (cap * (1.0 - cap).max(0.0) / runs as f64).sqrt();
        assert!(outside <= cap + slack, "t={t}: {outside} > {cap}");
    }
}
