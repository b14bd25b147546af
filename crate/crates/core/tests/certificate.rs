use std::sync::OnceLock;

use certjulia::certificate::{estimate_k2_c, PartialCertificate};
use certjulia::cover::{build_cover_inverse_iteration, validate_u_cond};
use certjulia::map::sup_df_on_cover;
use certjulia::presets::{self, Preset};
use certjulia::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn preset(name: &str) -> &'static Preset {
    static C: OnceLock<Preset> = OnceLock::new();
    static S: OnceLock<Preset> = OnceLock::new();
    match name {
        "circle" => C.get_or_init(|| presets::circle().unwrap()),
        _ => S.get_or_init(|| presets::segment().unwrap()),
    }
}

fn d(s: &str) -> Dyadic {
    s.parse().unwrap()
}

/// Boxes at resolution `m` whose centers satisfy `keep`.
fn cover_where(m: u32, extent: f64, keep: impl Fn(Complex64) -> bool) -> BoxCover {
    let k = (extent * 2f64.powi(m as i32)) as i64;
    let side = 2f64.powi(-(m as i32));
    let boxes = (-k..k).flat_map(|i| (-k..k).map(move |j| (i, j))).filter(|&(i, j)| keep(Complex64::new((i as f64 + 0.5) * side, (j as f64 + 0.5) * side)));
    BoxCover::from_boxes(m, boxes.collect::<Vec<_>>())
}

#[test]
fn presets_validate() {
    for name in presets::NAMES {
        let p = preset(name);
        let report = validate(&p.cert, &p.map);
        assert!(report.overall(), "{name}:\n{report}");
    }
}

#[test]
fn range_failures_are_named() {
    let p = preset("circle");
    let mut bad = p.cert.clone();
    bad.lambda.value = Dyadic::one();
    let report = validate(&bad, &p.map);
    assert!(!report.overall());
    assert!(!report.get("lambda range").unwrap().pass);

    let mut bad = p.cert.clone();
    bad.eps.value = bad.r.value.clone();
    assert!(!validate(&bad, &p.map).get("eps range").unwrap().pass);
}

#[test]
fn wrong_r_hat_fails() {
    let p = preset("segment");
    let mut bad = p.cert.clone();
    bad.r_hat.value = d("2");
    let report = validate(&bad, &p.map);
    assert!(!report.overall());
    assert!(report.failures().any(|c| c.name == "R_hat bound" || c.name == "alpha beta derivation"));
}

/// For `z = (1 + t) e^(i theta)`, `|f^k(z)| = (1 + t)^(2^k)` and
/// `|Df^k(z)| = 2^k (1 + t)^(2^k - 1)`; `K2` must bound
/// `t |Df^k(z)|` at the first `k` with `f^k(z)` outside `U`.
#[test]
fn circle_k2_bounds_exit_products_in_closed_form() {
    let p = preset("circle");
    let k2 = p.cert.k2.value.to_f64();
    let u = &p.cert.u;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sup: f64 = 0.0;
    for _ in 0..20_000 {
        let t = 2f64.powf(-rng.gen_range(7.0..30.0)) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let z0 = Complex64::from_polar(1.0 + t, theta);
        if !u.contains(&ComplexDyadic::from_f64(z0.re, z0.im)) {
            continue;
        }
        for k in 1..64 {
            let m = 2f64.powi(k);
            let modulus = (m * (1.0 + t).ln()).exp();
            let z = Complex64::from_polar(modulus, theta * m % std::f64::consts::TAU);
            if !u.contains(&ComplexDyadic::from_f64(z.re, z.im)) {
                let prod = t.abs() * m * ((m - 1.0) * (1.0 + t).ln()).exp();
                sup = sup.max(prod);
                break;
            }
        }
    }
    assert!(sup > 0.0 && sup <= k2, "exit product {sup} exceeds K2 = {k2}");
}

#[test]
fn estimator_fits_the_circle() {
    let p = preset("circle");
    let c = &p.cert;
    let approx = c.julia_approx.as_ref().unwrap();
    let part = PartialCertificate { lambda: &c.lambda.value, r: &c.r.value, eps: &c.eps.value, u: &c.u, approx };
    let est = estimate_k2_c(&p.map, &part, 20_000, 1).unwrap();
    assert_eq!(est.provenance, Provenance::Heuristic);
    assert!(est.exits >= 1000);
    assert!(est.c.to_f64() <= 1.5, "C = {}", est.c);
    // doubled from a sampled maximum near 0.025
    let k2 = est.k2.to_f64();
    assert!((0.03..=0.2).contains(&k2), "K2 = {k2}");
    assert!(matches!(estimate_k2_c(&p.map, &part, 0, 1), Err(CertificateError::InsufficientSamples(0))));
}

#[test]
fn estimator_runs_on_the_segment() {
    let p = preset("segment");
    let c = &p.cert;
    let approx = c.julia_approx.as_ref().unwrap();
    let part = PartialCertificate { lambda: &c.lambda.value, r: &c.r.value, eps: &c.eps.value, u: &c.u, approx };
    let est = estimate_k2_c(&p.map, &part, 20_000, 2).unwrap();
    assert!(est.k2.is_positive() && est.c >= Dyadic::one());
}

#[test]
fn sup_df_examples() {
    let z2 = DistanceOracle::Circle.map();
    let annulus = cover_where(6, 2.0, |z| (0.5..=1.5).contains(&z.norm()));
    let s = sup_df_on_cover(&z2, &annulus, &Dyadic::zero()).unwrap().to_f64();
    assert!((3.0..=4.0).contains(&s), "{s}");

    let seg = DistanceOracle::Segment.map();
    let line = BoxCover::from_boxes(6, (-128..128).map(|i| (i, 0)));
    assert!(sup_df_on_cover(&seg, &line, &d("0.25")).unwrap().to_f64() >= 4.5);

    let one = BoxCover::from_boxes(12, [(4096, 0)]);
    let s = sup_df_on_cover(&z2, &one, &Dyadic::zero()).unwrap().to_f64();
    assert!((2.0..=2.0 + 2f64.powi(-6)).contains(&s), "{s}");
}

#[test]
fn inverse_iteration_covers() {
    let z2 = DistanceOracle::Circle.map();
    let c = build_cover_inverse_iteration(&z2, 10, 6, &ComplexDyadic::one()).unwrap();
    let side = 2f64.powi(-6);
    for (i, j) in c.boxes() {
        let z = Complex64::new((i as f64 + 0.5) * side, (j as f64 + 0.5) * side);
        assert!((z.norm() - 1.0).abs() <= 2f64.powi(-4));
    }
    let seg = DistanceOracle::Segment.map();
    let c = build_cover_inverse_iteration(&seg, 12, 6, &ComplexDyadic::real(Dyadic::from_int(2))).unwrap();
    let centers: Vec<Complex64> = c.boxes().map(|(i, j)| Complex64::new((i as f64 + 0.5) * side, (j as f64 + 0.5) * side)).collect();
    let h = certjulia::oracles::hausdorff_to_oracle(&centers, DistanceOracle::Segment, side / 4.0);
    assert!(h <= 2f64.powi(-4), "{h}");
}

#[test]
fn u_conditions_on_an_annulus() {
    let z2 = DistanceOracle::Circle.map();
    let approx = preset("circle").cert.julia_approx.clone().unwrap();
    let u = cover_where(8, 1.5, |z| (0.75..=1.25).contains(&z.norm()));
    // (1.25 + 2^-6)^2 - 1 > 1/2: the outer rim maps beyond r = 1/2
    let tight = validate_u_cond(&z2, &u, &approx, &Dyadic::pow2(-6), &d("0.5"));
    assert!(!tight.get("image-in-r-neighborhood").unwrap().pass);
    let ok = validate_u_cond(&z2, &u, &approx, &Dyadic::pow2(-6), &d("0.75"));
    assert!(ok.overall(), "{ok}");
    let bad = validate_u_cond(&z2, &u, &approx, &d("0.25"), &d("0.5"));
    assert!(!bad.get("U-contains-2eps-neighborhood").unwrap().pass);
}
