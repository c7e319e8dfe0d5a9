use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lacunary_maximal::grid::Grid2D;
use lacunary_maximal::kernels::{fejer_eval, vp_eval, vp_transform};
use lacunary_maximal::lacunary::{
    binary_decomposition, is_complete_decomposition, random_complete, DirectionSet, RandomCompleteParams,
};
use lacunary_maximal::ops::{chain_check, m0, m1, OperatorConfig};
use lacunary_maximal::sectors::{max_family_overlap, max_overlap, sampled_overlap, Strip};

fn distinct_slopes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-1000i32..1000, 1..40)
        .prop_map(|s| s.into_iter().map(|k| k as f64 / 256.0).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn binary_order_is_logarithmic(pts in distinct_slopes()) {
        let d = binary_decomposition(&pts).unwrap();
        let n = pts.len();
        prop_assert!(d.order() <= (n as f64).log2().floor() as usize + 2);
        prop_assert_eq!(d.final_set().len(), n);
        for p in &pts {
            prop_assert!(d.final_set().contains(p));
        }
        prop_assert!(d.check_nesting().is_ok());
    }

    #[test]
    fn random_complete_sets_are_complete(seed in any::<u64>(), mu in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = RandomCompleteParams { mu, max_points: 120, ..Default::default() };
        let d = random_complete(&mut rng, params).unwrap();
        prop_assert!(d.order() <= mu);
        prop_assert!(is_complete_decomposition(&d));
    }

    #[test]
    fn exact_overlap_dominates_sampling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = RandomCompleteParams { mu: 3, max_points: 80, ..Default::default() };
        let d = random_complete(&mut rng, params).unwrap();
        let exact = max_overlap(&d).unwrap();
        let (low, top) = sampled_overlap(&d, &mut rng, 500).unwrap();
        prop_assert!(low <= exact.max_low);
        prop_assert!(top <= exact.max_top);
    }

    #[test]
    fn overlap_witness_attains_maximum(
        centers in prop::collection::vec((0.0f64..1.0, 0.001f64..0.5), 1..30),
    ) {
        let strips: Vec<Strip> = centers
            .iter()
            .map(|&(c, l)| Strip::new(c - 0.5 * l, c + 0.5 * l, c).unwrap())
            .collect();
        let (best, at) = max_family_overlap(&strips);
        let p = at.expect("nonempty family has a witness");
        prop_assert_eq!(strips.iter().filter(|s| s.contains(p)).count(), best);
    }

    #[test]
    fn strip_contains_its_centre_line(lo in -2.0f64..2.0, len in 0.01f64..1.0, t in 0.0f64..1.0, x in 1.0f64..50.0) {
        let c = lo + t * len;
        let s = Strip::new(lo, lo + len, c).unwrap();
        let x1 = s.min_x1 * (1.0 + 1e-9) + x;
        prop_assert!(s.contains((x1, c * x1)));
        prop_assert!(!s.contains((s.min_x1 * 0.5, 0.0)));
    }

    #[test]
    fn kernels_are_bounded(r in 0.1f64..10.0, x in -50.0f64..50.0) {
        let f = fejer_eval(r, x).unwrap();
        prop_assert!(f >= 0.0 && f <= r * (1.0 + 1e-12));
        prop_assert!(vp_eval(r, x).unwrap() <= 3.0 * r * (1.0 + 1e-12));
        let v = vp_transform(r, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn grid_binary_round_trip(vals in prop::collection::vec(-1e3f64..1e3, 12)) {
        let g = Grid2D::new(4, 3, 0.5, (0.0, 0.0), vals).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        let back = Grid2D::read_binary(&buf[..]).unwrap();
        prop_assert_eq!(back.values(), g.values());
        prop_assert_eq!(back.spacing(), g.spacing());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn operator_chain_holds(
        vals in prop::collection::vec(-1.0f64..1.0, 24 * 24),
        slopes in prop::collection::btree_set(-8i32..8, 1..4),
    ) {
        let f = Grid2D::new(24, 24, 0.25, (-3.0, -3.0), vals).unwrap();
        let slopes: Vec<f64> = slopes.into_iter().map(|k| k as f64 / 4.0).collect();
        let omega = DirectionSet::from_slopes(&slopes).unwrap();
        let cfg = OperatorConfig::dyadic(-2, 1, 4, 1).unwrap();
        let rep = chain_check(&f, &omega, &cfg).unwrap();
        prop_assert!(rep.holds(), "violation {}", rep.max_violation());
        // M¹ dominates both |f| and M⁰
        let g1 = m1(&f, &omega, &cfg).unwrap();
        let g0 = m0(&f, &omega, &cfg).unwrap();
        for ((a, b), c) in f.values().iter().zip(g1.values()).zip(g0.values()) {
            prop_assert!(*b >= a.abs() - 1e-12);
            prop_assert!(*c <= *b + 1e-12);
        }
    }
}
