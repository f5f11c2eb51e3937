use ergodim::entropy::{conditional_entropy, information_function};
use ergodim::geometry::exact_lipschitz;
use ergodim::partitions::{pullback, refine, FinitePartition};
use ergodim::systems::{distance, iterate, sample_point, MeasureOracle, Point, SystemDescriptor, WeightSequence};
use proptest::prelude::*;

fn systems() -> Vec<(SystemDescriptor, MeasureOracle)> {
    let fair = MeasureOracle::bernoulli(vec![0.5, 0.5]).unwrap();
    let markov = MeasureOracle::markov(vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
    vec![
        (SystemDescriptor::cat_map(), MeasureOracle::LebesgueTorus),
        (SystemDescriptor::translation(0.31, 0.77), MeasureOracle::LebesgueTorus),
        (SystemDescriptor::dyadic_shift(2, 24), fair.clone()),
        (SystemDescriptor::dyadic_shift(2, 24), markov),
        (SystemDescriptor::weighted_shift(WeightSequence::default(), 64), fair.clone()),
        (
            SystemDescriptor::Product { left: Box::new(SystemDescriptor::cat_map()), right: Box::new(SystemDescriptor::dyadic_shift(2, 16)) },
            MeasureOracle::Product { left: Box::new(MeasureOracle::LebesgueTorus), right: Box::new(fair) },
        ),
    ]
}

#[test]
fn metric_axioms_on_random_triples() {
    for (sys, oracle) in systems() {
        for i in 0..1000u64 {
            let x = sample_point(&sys, &oracle, 3 * i).unwrap();
            let y = sample_point(&sys, &oracle, 3 * i + 1).unwrap();
            let z = sample_point(&sys, &oracle, 3 * i + 2).unwrap();
            let dxy = distance(&sys, &x, &y).unwrap();
            assert_eq!(distance(&sys, &x, &x).unwrap(), 0.0, "{}", sys.name());
            assert!(dxy >= 0.0);
            assert_eq!(dxy, distance(&sys, &y, &x).unwrap(), "{}", sys.name());
            let via = distance(&sys, &x, &z).unwrap() + distance(&sys, &z, &y).unwrap();
            assert!(dxy <= via + 1e-12, "{}: {dxy} > {via}", sys.name());
        }
    }
}

#[test]
fn iterates_invert_exactly() {
    for (sys, oracle) in systems() {
        if matches!(sys, SystemDescriptor::FullShift { .. } | SystemDescriptor::Product { .. }) {
            continue; // shifting a truncated window loses the far coordinates
        }
        for i in 0..50 {
            let x = sample_point(&sys, &oracle, i).unwrap();
            let y = iterate(&sys, &iterate(&sys, &x, 17).unwrap(), -17).unwrap();
            assert_eq!(x, y, "{}", sys.name());
        }
    }
}

fn coords_strategy() -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::btree_set(-6i64..=6, 1..=5).prop_map(|s| s.into_iter().collect())
}

fn markov() -> MeasureOracle {
    MeasureOracle::markov(vec![vec![0.7, 0.2, 0.1], vec![0.3, 0.3, 0.4], vec![0.25, 0.25, 0.5]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // I(α∨β|γ) = I(α|γ) + I(β|α∨γ), pointwise and in expectation.
    #[test]
    fn information_cocycle(a in coords_strategy(), b in coords_strategy(), c in coords_strategy(), seed in 0u64..1000) {
        let o = markov();
        let alpha = FinitePartition::cylinder(a, 3);
        let beta = FinitePartition::cylinder(b, 3);
        let gamma = FinitePartition::cylinder(c, 3);
        let ab = refine(&alpha, &beta).unwrap();
        let ag = refine(&alpha, &gamma).unwrap();
        prop_assume!(refine(&ab, &gamma).unwrap().atom_count() <= 65536.0);
        let sys = SystemDescriptor::dyadic_shift(3, 16);
        let x = sample_point(&sys, &o, seed).unwrap();
        let lhs = information_function(&ab, &gamma, &o, &x).unwrap();
        let rhs = information_function(&alpha, &gamma, &o, &x).unwrap() + information_function(&beta, &ag, &o, &x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
        let h = conditional_entropy(&ab, &gamma, &o).unwrap().value;
        let h2 = conditional_entropy(&alpha, &gamma, &o).unwrap().value + conditional_entropy(&beta, &ag, &o).unwrap().value;
        prop_assert!((h - h2).abs() < 1e-9, "{} vs {}", h, h2);
    }

    // Stationary measures are shift-invariant: H(T^-k α) = H(α).
    #[test]
    fn entropy_is_shift_invariant(a in coords_strategy(), k in -5i64..=5) {
        let o = markov();
        let alpha = FinitePartition::cylinder(a, 3);
        let moved = pullback(&alpha, k).unwrap();
        let triv = FinitePartition::Trivial;
        let h0 = conditional_entropy(&alpha, &triv, &o).unwrap().value;
        let h1 = conditional_entropy(&moved, &triv, &o).unwrap().value;
        prop_assert!((h0 - h1).abs() < 1e-12);
    }

    #[test]
    fn conditioning_reduces_entropy(a in coords_strategy(), c in coords_strategy()) {
        let o = markov();
        let alpha = FinitePartition::cylinder(a, 3);
        let gamma = FinitePartition::cylinder(c, 3);
        let h = conditional_entropy(&alpha, &FinitePartition::Trivial, &o).unwrap().value;
        let hc = conditional_entropy(&alpha, &gamma, &o).unwrap().value;
        prop_assert!(hc <= h + 1e-12 && hc >= -1e-12);
    }

    #[test]
    fn torus_metric_is_translation_invariant(x in 0.0f64..1.0, y in 0.0f64..1.0, dx in -0.5f64..0.5, dy in -0.5f64..0.5) {
        let t = SystemDescriptor::translation(0.123, 0.456);
        let p = Point::Torus(ergodim::systems::TorusPoint::new(x, y));
        let q = Point::Torus(ergodim::systems::TorusPoint::new((x + dx).rem_euclid(1.0), (y + dy).rem_euclid(1.0)));
        let d0 = distance(&t, &p, &q).unwrap();
        let d1 = distance(&t, &iterate(&t, &p, 3).unwrap(), &iterate(&t, &q, 3).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-12);
    }
}

// log⁺ L_n is subadditive; for linear maps L_n = ||A^n|| is exact.
#[test]
fn log_lipschitz_is_subadditive_on_linear_maps() {
    let maps = [SystemDescriptor::cat_map(), SystemDescriptor::toral([[3, 2], [1, 1]]).unwrap(), SystemDescriptor::cat_map().inverse()];
    for sys in maps {
        let l: Vec<f64> = (0..=30).map(|n| exact_lipschitz(&sys, n).unwrap().ln().max(0.0)).collect();
        for m in 1..=15 {
            for n in 1..=15 {
                assert!(l[m + n] <= l[m] + l[n] + 1e-9, "{} m={m} n={n}", sys.name());
            }
        }
    }
    let t = SystemDescriptor::translation(0.2, 0.3);
    assert!((1..20).all(|n| exact_lipschitz(&t, n).unwrap() == 1.0));
}
