use std::sync::OnceLock;

use certjulia::presets::{self, Preset};
use certjulia::render::{benchmark_scaling, render_certified, render_dem, render_escape_time};
use certjulia::*;

fn circle() -> &'static Preset {
    static P: OnceLock<Preset> = OnceLock::new();
    P.get_or_init(|| presets::circle().unwrap())
}

fn segment() -> &'static Preset {
    static P: OnceLock<Preset> = OnceLock::new();
    P.get_or_init(|| presets::segment().unwrap())
}

fn region(s: &str) -> Region {
    Region::parse(s).unwrap()
}

/// Pixel distances from the set for every pixel of a render.
fn distances(out: &RenderOutput, oracle: DistanceOracle) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let g = &out.grid;
    (0..g.height).flat_map(move |j| (0..g.width).map(move |i| (i, j, oracle.dist_f64(g.center_f64(i, j)))))
}

#[test]
fn circle_quadrant_respects_the_pixel_contract() {
    let p = circle();
    let dec = Decider::new(&p.cert, &p.map);
    let out = render_certified(&dec, &region("0,0,1.5,1.5"), 8, 1);
    let r = 2f64.powi(-10);
    assert_eq!(out.error_mask.count(), 0);
    assert!(out.bitmap.count() > 0);
    for (i, j, d) in distances(&out, p.oracle) {
        let v = out.bitmap.get(i, j);
        assert!(!(v && d >= 2.0 * r * 1.0001), "filled at d = {d}");
        assert!(!(!v && d <= r * 0.9999), "blank at d = {d}");
    }
    let st = &out.stats.pixel;
    assert_eq!(st.pixels as usize, out.grid.width * out.grid.height);
    assert_eq!(st.verdicts(), st.evaluations);
    assert_eq!(st.filled, out.bitmap.count());
}

#[test]
fn segment_fill_hugs_the_segment() {
    let p = segment();
    let dec = Decider::new(&p.cert, &p.map);
    let out = render_certified(&dec, &region("-2.25,-0.125,2.25,0.125"), 8, 2);
    let r = 2f64.powi(-10);
    for (i, j) in out.bitmap.ones() {
        let z = out.grid.center_f64(i, j);
        assert!(z.im.abs() < 2.0 * r && z.re.abs() < 2.0 + 2.0 * r);
    }
    // the row through the real axis is filled from -2 to 2
    let g = &out.grid;
    let j0 = (0..g.height).find(|&j| g.center_f64(0, j).im == 0.0).unwrap();
    let filled = (0..g.width).filter(|&i| out.bitmap.get(i, j0)).count();
    // d <= R at the two pixels just past the endpoints
    assert_eq!(filled, 4 * 1024 + 3);
}

#[test]
fn thread_count_does_not_change_the_image() {
    let p = segment();
    let dec = Decider::new(&p.cert, &p.map);
    let reg = region("1.5,-0.0625,2.125,0.0625");
    let a = render_certified(&dec, &reg, 9, 1);
    let b = render_certified(&dec, &reg, 9, 3);
    assert_eq!(a.bitmap.to_pgm(), b.bitmap.to_pgm());
    assert_eq!(a.stats.pixel.evaluations, b.stats.pixel.evaluations);
}

#[test]
fn coarse_render_below_pixel_path() {
    let p = circle();
    let dec = Decider::new(&p.cert, &p.map);
    let out = render_certified(&dec, &region("-1.5,-1.5,1.5,1.5"), 3, 1);
    assert!(out.bitmap.count() > 0);
    let r = 2f64.powi(-5);
    for (i, j, d) in distances(&out, p.oracle) {
        if d <= r {
            assert!(out.bitmap.get(i, j));
        }
    }
}

#[test]
fn escape_time_contains_certified_up_to_two_pixels() {
    let p = circle();
    let dec = Decider::new(&p.cert, &p.map);
    let reg = region("0.5,0.5,1,1");
    let cert = render_certified(&dec, &reg, 8, 1);
    let esc = render_escape_time(&p.map, &reg, 8, 200, 1).unwrap();
    assert_eq!((esc.grid.width, esc.grid.height), (cert.grid.width, cert.grid.height));
    let (w, h) = (cert.grid.width as i64, cert.grid.height as i64);
    for (i, j) in cert.bitmap.ones() {
        let near = (-2..=2i64).any(|a| {
            (-2..=2i64).any(|b| {
                let (x, y) = (i as i64 + a, j as i64 + b);
                x >= 0 && y >= 0 && x < w && y < h && esc.bitmap.get(x as usize, y as usize)
            })
        });
        assert!(near, "certified pixel ({i}, {j}) far from the escape-time set");
    }
    let all = render_escape_time(&p.map, &reg, 8, 0, 1).unwrap();
    assert_eq!(all.bitmap.count() as usize, all.grid.width * all.grid.height);
}

#[test]
fn dem_differs_from_certified_only_near_the_circle() {
    let p = circle();
    let dec = Decider::new(&p.cert, &p.map);
    let reg = region("-1.25,-0.25,1.25,0.25");
    let cert = render_certified(&dec, &reg, 8, 1);
    let dem = render_dem(&p.map, &reg, 8, 200, 1).unwrap();
    let s = 2f64.powi(-10);
    let g = &cert.grid;
    // pixel centers 1 and 0
    let one = ((2.25 / s) as usize, g.height / 2);
    assert!(dem.bitmap.get(one.0, one.1));
    assert!(!dem.bitmap.get(g.width / 2, g.height / 2));
    for (i, j, d) in distances(&cert, p.oracle) {
        if cert.bitmap.get(i, j) != dem.bitmap.get(i, j) {
            assert!(d <= 2.0 * s * 1.0001, "DEM and certified differ at d = {d}");
        }
    }
}

#[test]
fn stats_csv_has_the_main_fields() {
    let p = circle();
    let dec = Decider::new(&p.cert, &p.map);
    let out = render_certified(&dec, &region("0.75,0.5,0.875,0.625"), 8, 1);
    let csv = out.stats.to_csv();
    for key in ["certified,true", "n,8", "pixels,", "filled,", "evaluations,", "cells_excluded,", "reason_"] {
        assert!(csv.contains(key), "{key} missing from\n{csv}");
    }
}

#[test]
fn scaling_rows_and_outside_shortcut() {
    let p = circle();
    let dec = Decider::new(&p.cert, &p.map);
    let near: Vec<ComplexDyadic> = (0..50).map(|k| ComplexDyadic::from_f64((k as f64 * 0.1).cos() * (1.0 + 1e-6), (k as f64 * 0.1).sin())).collect();
    let t = benchmark_scaling(&dec, &near, &[8, 12, 16], 1);
    assert_eq!(t.rows.len(), 3);
    for r in &t.rows {
        assert!(r.max_iterations <= r.l && r.errors == 0);
        assert!(r.median_ns > 0.0);
    }
    assert!(t.to_csv().lines().count() >= 4);
    let far = vec![ComplexDyadic::real(Dyadic::from_int(3)); 50];
    let t = benchmark_scaling(&dec, &far, &[8, 16, 24], 3);
    assert!(t.rows.iter().all(|r| r.max_iterations == 0));
}
