use kondolab::bath::{ohmic_constraint_exact, ohmic_constraint_f64};
use kondolab::wick::{
    classify_regime, classify_regime_exact, matching_sum, n_paths, stirling_ratio, MatchingProblem,
    RegimeLabel,
};
use num_bigint::BigUint;
use num_rational::Rational64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn strictly_increasing(max_n: usize) -> impl Strategy<Value = Vec<i64>> {
    (1..=max_n / 2).prop_flat_map(|h| {
        proptest::collection::vec(1i64..5, 2 * h).prop_map(|gaps| {
            gaps.iter()
                .scan(0i64, |acc, g| {
                    *acc += g;
                    Some(*acc)
                })
                .collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_invariance(pos in strictly_increasing(10), shift in -1000i64..1000, z in 0.0f64..2.0) {
        let a = matching_sum(&MatchingProblem::new(pos.clone(), z).unwrap()).unwrap();
        let moved: Vec<i64> = pos.iter().map(|x| x + shift).collect();
        let b = matching_sum(&MatchingProblem::new(moved, z).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spaced_points_sum_decreases_in_z(pos in strictly_increasing(10), z in 0.0f64..2.0, dz in 0.01f64..1.0) {
        // every gap is >= 1, so each factor |x_i - x_j|^{-2z} is non-increasing in z
        let lo = matching_sum(&MatchingProblem::new(pos.clone(), z).unwrap()).unwrap();
        let hi = matching_sum(&MatchingProblem::new(pos, z + dz).unwrap()).unwrap();
        prop_assert!(hi <= lo);
    }

    #[test]
    fn regime_float_matches_exact(p in 1i64..64, q in 0u32..6, sp in 1i64..=32) {
        let z = Rational64::new(p, 1 << q);
        let s = Rational64::new(sp, 32);
        let zf = p as f64 / (1u64 << q) as f64;
        let sf = sp as f64 / 32.0;
        let exact = classify_regime_exact(z, s);
        let float = classify_regime(zf, sf);
        prop_assert_eq!(exact, float);
    }
}

#[test]
fn path_counts_match_pascal_triangle() {
    let mut row = vec![BigUint::from(1u32)];
    for n in 1..=64usize {
        let mut next = vec![BigUint::from(1u32); n + 1];
        for k in 1..n {
            next[k] = &row[k - 1] + &row[k];
        }
        row = next;
        if n % 2 == 0 {
            assert_eq!(n_paths(n).unwrap(), BigUint::from(n) * &row[n / 2], "L={n}");
        }
    }
}

#[test]
fn stirling_ratio_approaches_one_from_above() {
    let mut prev = f64::INFINITY;
    for l in (2..=512).step_by(2) {
        let r = stirling_ratio(l).unwrap();
        assert!(r > 1.0 && r < prev, "L={l}: {r}");
        assert!(
            (r - 1.0 - 1.0 / (4.0 * l as f64)).abs() < 1.0 / (l * l) as f64,
            "L={l}: {r}"
        );
        prev = r;
    }
}

#[test]
fn ohmic_constraint_agrees_on_random_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    for _ in 0..100 {
        let d: u32 = rng.gen_range(1..=3);
        // dyadic values are exact in binary, so the float path must agree
        let den = 1i64 << rng.gen_range(0..4);
        let alpha = Rational64::new(rng.gen_range(-8..=8), den);
        let z = if rng.gen_bool(0.5) {
            alpha + Rational64::new(i64::from(d), 2)
        } else {
            Rational64::new(rng.gen_range(1..=16), den)
        };
        let exact = ohmic_constraint_exact(d, alpha, z);
        // integer cross-multiplication oracle for D + 2 alpha = 2 z
        let (pa, qa) = (*alpha.numer(), *alpha.denom());
        let (pz, qz) = (*z.numer(), *z.denom());
        let oracle = i64::from(d) * qa * qz + 2 * pa * qz == 2 * pz * qa;
        assert_eq!(exact, oracle);
        let af = pa as f64 / qa as f64;
        let zf = pz as f64 / qz as f64;
        assert_eq!(ohmic_constraint_f64(d, af, zf), exact);
        hits += usize::from(exact);
    }
    assert!(hits > 20, "too few satisfying samples: {hits}");
}

#[test]
fn regime_boundary_examples() {
    assert_eq!(classify_regime(0.5, 1.0), RegimeLabel::Critical);
    assert_eq!(classify_regime(2.0 / 3.0, 0.5), RegimeLabel::Critical);
    assert_eq!(
        classify_regime_exact(Rational64::new(2, 3), Rational64::new(1, 2)),
        RegimeLabel::Critical
    );
}
