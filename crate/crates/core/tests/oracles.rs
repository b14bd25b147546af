use certjulia::oracles::{exact_dist_circle, exact_dist_segment, inverse_iteration_cloud};
use certjulia::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn z(re: &str, im: &str) -> ComplexDyadic {
    ComplexDyadic::new(re.parse().unwrap(), im.parse().unwrap())
}

#[test]
fn exact_distance_examples() {
    let one = Dyadic::one();
    for (p, want) in [(z("0", "0"), one.clone()), (z("2", "0"), one.clone())] {
        let (lo, hi) = exact_dist_circle(&p, 40);
        assert!(lo <= want && want <= hi && &hi - &lo <= Dyadic::pow2(-40));
    }
    // 0.6 + 0.8i is not dyadic; rounded at 60 bits it is within 2^-59 of the circle
    let near = |s: &str| Decimal::parse(s).unwrap().round_to(60, Round::Nearest);
    let (lo, hi) = exact_dist_circle(&ComplexDyadic::new(near("0.6"), near("0.8")), 80);
    assert!(lo.is_positive() || lo.is_zero());
    assert!(hi <= Dyadic::pow2(-59));
    for (p, want) in [(z("3", "0"), one.clone()), (z("0", "1"), one.clone()), (z("1", "0"), Dyadic::zero())] {
        let (lo, hi) = exact_dist_segment(&p, 40);
        assert!(lo <= want && want <= hi);
    }
}

#[test]
fn clouds_lie_on_the_sets() {
    let pts = inverse_iteration_cloud(&DistanceOracle::Circle.map(), 30, Complex64::new(1.0, 0.0), 10_000, 1).unwrap();
    assert!(pts.iter().all(|&p| DistanceOracle::Circle.dist_f64(p) <= 2f64.powi(-20)));
    let pts = inverse_iteration_cloud(&DistanceOracle::Segment.map(), 20, Complex64::new(2.0, 0.0), 10_000, 1).unwrap();
    assert!(pts.iter().all(|&p| DistanceOracle::Segment.dist_f64(p) <= 2f64.powi(-10)));
    let seed = Complex64::new(0.3, 0.1);
    assert_eq!(inverse_iteration_cloud(&DistanceOracle::Circle.map(), 0, seed, 3, 1).unwrap(), vec![seed; 3]);
}

#[test]
fn points_at_distance() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    for o in [DistanceOracle::Circle, DistanceOracle::Segment] {
        for k in 2..30 {
            let d = 2f64.powi(-k);
            let p = o.point_at_distance(&mut rng, d);
            assert!((o.dist_f64(p) - d).abs() <= d * 1e-6 + 1e-15, "{} at {d}", o.name());
        }
    }
}

#[test]
fn grid_points_near_agrees_with_a_full_scan() {
    for o in [DistanceOracle::Circle, DistanceOracle::Segment] {
        let s = 2f64.powi(-6);
        let radius = 2f64.powi(-7);
        let got = o.grid_points_near(-2.5, -1.5, 2.5, 1.5, s, radius);
        let mut want = Vec::new();
        for j in 0..=(3.0 / s) as i64 {
            for i in 0..=(5.0 / s) as i64 {
                if o.dist_f64(Complex64::new(-2.5 + i as f64 * s, -1.5 + j as f64 * s)) <= radius {
                    want.push((i, j));
                }
            }
        }
        assert!(want.iter().all(|p| got.contains(p)), "{}", o.name());
    }
}

proptest! {
    #[test]
    fn exact_bracket_contains_float_distance(re in -3.0f64..3.0, im in -3.0f64..3.0, bits in 8u32..60) {
        let p = ComplexDyadic::from_f64(re, im);
        for o in [DistanceOracle::Circle, DistanceOracle::Segment] {
            let (lo, hi) = o.exact_dist(&p, bits);
            prop_assert!(lo <= hi);
            prop_assert!(&hi - &lo <= Dyadic::pow2(-(bits as i64)));
            let f = o.dist_f64(Complex64::new(re, im));
            prop_assert!(lo.to_f64() <= f + 1e-12 && f <= hi.to_f64() + 1e-12);
        }
    }
}
