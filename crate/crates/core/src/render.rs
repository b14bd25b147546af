//! Rendering over a grid of pixel centers, certified and baseline, and the
//! per-verdict timing benchmark.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decider::{Decider, FreeDisks, PixelStats, Reason};
use crate::dyadic::{ComplexDyadic, Decimal, Dyadic, Round};
use crate::error::{Error, ParseError};
use crate::map::MapSpec;
use crate::roots::MapF64;

/// Axis-aligned rectangle with dyadic corners.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    pub x0: Dyadic,
    pub y0: Dyadic,
    pub x1: Dyadic,
    pub y1: Dyadic,
}

impl Region {
    pub fn new(x0: Dyadic, y0: Dyadic, x1: Dyadic, y1: Dyadic) -> Self {
        Region { x0, y0, x1, y1 }
    }

    /// Parse `x0,y0,x1,y1`; each entry is a decimal or `m*2^e`. Decimals
    /// that are not dyadic are rounded outward at 64 fractional bits.
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let v: Vec<Dyadic> = parts
            .iter()
            .enumerate()
            .map(|(k, p)| match p.parse::<Dyadic>() {
                Ok(x) => Ok(x),
                Err(_) => Decimal::parse(p).map(|x| x.round_to(64, if k < 2 { Round::Floor } else { Round::Ceil })),
            })
            .collect::<Result<_, _>>()?;
        if v.len() != 4 || v[0] > v[2] || v[1] > v[3] {
            return Err(ParseError::Dyadic(format!("region `{s}`")));
        }
        Ok(Region::new(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()))
    }

    /// Snap corners outward to the grid of spacing `2^-(n+2)`.
    pub fn snapped(&self, n: u32) -> Region {
        let k = n as i64 + 2;
        let down = |x: &Dyadic| Dyadic::new(x.mul_pow2(k).floor_int(), -k);
        let up = |x: &Dyadic| Dyadic::new(x.mul_pow2(k).ceil_int(), -k);
        Region::new(down(&self.x0), down(&self.y0), up(&self.x1), up(&self.y1))
    }
}

/// The grid of pixel centers `(x0 + i s, y1 - j s)` with `s = 2^-(n+2)`:
/// column `i` left to right, row `j` top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelGrid {
    pub n: u32,
    pub region: Region,
    pub width: usize,
    pub height: usize,
}

impl PixelGrid {
    pub fn new(region: &Region, n: u32) -> Self {
        let region = region.snapped(n);
        let k = n as i64 + 2;
        let count = |a: &Dyadic, b: &Dyadic| (b - a).mul_pow2(k).floor_int().to_usize().unwrap() + 1;
        PixelGrid { n, width: count(&region.x0, &region.x1), height: count(&region.y0, &region.y1), region }
    }

    pub fn spacing(&self) -> Dyadic {
        Dyadic::pow2(-(self.n as i64) - 2)
    }

    pub fn center(&self, i: usize, j: usize) -> ComplexDyadic {
        let s = self.spacing();
        ComplexDyadic::new(&self.region.x0 + &(&s * &Dyadic::from_int(i as i64)), &self.region.y1 - &(&s * &Dyadic::from_int(j as i64)))
    }

    pub fn center_f64(&self, i: usize, j: usize) -> Complex64 {
        let s = self.spacing().to_f64();
        Complex64::new(self.region.x0.to_f64() + i as f64 * s, self.region.y1.to_f64() - j as f64 * s)
    }
}

/// 1-bit image, rows packed most significant bit first as in PGM `P4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    data: Vec<u8>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Bitmap { width, height, data: vec![0; width.div_ceil(8) * height] }
    }

    fn stride(&self) -> usize {
        self.width.div_ceil(8)
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[j * self.stride() + i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let k = j * self.stride() + i / 8;
        if v {
            self.data[k] |= 0x80 >> (i % 8);
        } else {
            self.data[k] &= !(0x80 >> (i % 8));
        }
    }

    pub fn count(&self) -> u64 {
        self.data.iter().map(|b| b.count_ones() as u64).sum()
    }

    /// Set pixels in row-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let stride = self.stride();
        self.data.iter().enumerate().filter(|(_, b)| **b != 0).flat_map(move |(k, &b)| {
            let j = k / stride;
            let base = (k % stride) * 8;
            (0..8).filter(move |t| b & (0x80 >> t) != 0).map(move |t| (base + t, j))
        })
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, ParseError> {
        let err = |m: &str| ParseError::Cover(format!("PGM: {m}"));
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 3 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(err("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| err("header"))?.to_string());
        }
        if fields[0] != "P4" {
            return Err(err("not a P4 file"));
        }
        let width: usize = fields[1].parse().map_err(|_| err("width"))?;
        let height: usize = fields[2].parse().map_err(|_| err("height"))?;
        let mut b = Bitmap::new(width, height);
        let data = &bytes[(pos + 1).min(bytes.len())..];
        if data.len() != b.data.len() {
            return Err(err("data length"));
        }
        b.data.copy_from_slice(data);
        Ok(b)
    }

    fn set_row(&mut self, j: usize, row: &[u8]) {
        let s = self.stride();
        self.data[j * s..(j + 1) * s].copy_from_slice(row);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Certified,
    EscapeTime,
    Dem,
}

/// Aggregate instrumentation of a render.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RenderStats {
    pub n: u32,
    pub width: usize,
    pub height: usize,
    pub certified: bool,
    pub pixel: PixelStats,
    /// Pixels whose center lies in `U` and went through the subprogram.
    pub pixels_in_u: u64,
    pub wall_seconds: f64,
    pub pixel_ns_p50: f64,
    pub pixel_ns_p95: f64,
    /// Cost factor of a uniform sample grid, for comparison with the adaptive one.
    pub uniform_grid_factor: f64,
}

impl RenderStats {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        let p = &self.pixel;
        let _ = writeln!(s, "certified,{}", self.certified);
        let _ = writeln!(s, "n,{}", self.n);
        let _ = writeln!(s, "width,{}", self.width);
        let _ = writeln!(s, "height,{}", self.height);
        let _ = writeln!(s, "pixels,{}", p.pixels);
        let _ = writeln!(s, "filled,{}", p.filled);
        let _ = writeln!(s, "errors,{}", p.errors);
        let _ = writeln!(s, "pixels_in_u,{}", self.pixels_in_u);
        let _ = writeln!(s, "evaluations,{}", p.evaluations);
        let _ = writeln!(s, "cells_excluded,{}", p.cells_excluded);
        for r in Reason::ALL {
            let _ = writeln!(s, "reason_{},{}", r.name(), p.reasons[r.index()]);
        }
        let _ = writeln!(s, "max_work_bits,{}", p.max_work_bits);
        let _ = writeln!(s, "max_subdivision_depth,{}", p.max_depth);
        let _ = writeln!(s, "oracle_ticks,{}", p.ticks);
        let _ = writeln!(s, "wall_seconds,{:.3}", self.wall_seconds);
        let _ = writeln!(s, "pixel_ns_p50,{:.0}", self.pixel_ns_p50);
        let _ = writeln!(s, "pixel_ns_p95,{:.0}", self.pixel_ns_p95);
        let _ = writeln!(s, "uniform_grid_factor,{:.1}", self.uniform_grid_factor);
        for (k, c) in p.iterations.iter().enumerate() {
            if *c > 0 {
                let _ = writeln!(s, "iterations_{k},{c}");
            }
        }
        s
    }
}

pub struct RenderOutput {
    pub grid: PixelGrid,
    pub bitmap: Bitmap,
    /// Pixels whose decision failed; left blank in `bitmap`.
    pub error_mask: Bitmap,
    pub stats: RenderStats,
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool")
}

struct RowResult {
    bits: Vec<u8>,
    errors: Vec<usize>,
    stats: PixelStats,
    in_u: u64,
    times: Vec<f32>,
}

/// Columns of row `j` whose centers lie in `U`, as inclusive ranges.
fn in_u_columns(decider: &Decider, grid: &PixelGrid, j: usize) -> Vec<(usize, usize)> {
    let u = &decider.cert.u;
    let m = u.resolution() as i64;
    let k = grid.n as i64 + 2;
    let q = m.max(k);
    let step = 1i64 << (q - k);
    let bw = 1i64 << (q - m);
    let x0 = grid.region.x0.mul_pow2(q).floor_int().to_i64().unwrap();
    let y = grid.region.y1.mul_pow2(q).floor_int().to_i64().unwrap() - j as i64 * step;
    let mut rows = vec![y.div_euclid(bw)];
    if y.rem_euclid(bw) == 0 {
        rows.push(y.div_euclid(bw) - 1);
    }
    let mut out: Vec<(usize, usize)> = Vec::new();
    let last = grid.width as i64 - 1;
    for r in rows {
        for &(s, e) in u.row_runs(r) {
            // closed interval [s bw, (e + 1) bw] in units of 2^-q
            let lo = (s * bw - x0 + step - 1).div_euclid(step).max(0);
            let hi = ((e + 1) * bw - x0).div_euclid(step).min(last);
            if lo <= hi {
                out.push((lo as usize, hi as usize));
            }
        }
    }
    out.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (a, b) in out {
        match merged.last_mut() {
            Some(l) if a <= l.1 + 1 => l.1 = l.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// Certified render: pixel `(i, j)` is the pixel function at its center.
/// Each row is evaluated left to right, sharing free disks between its
/// pixels, so the image does not depend on the thread count.
///
/// Centers outside `U` are blank without iteration when `2 eps` exceeds the
/// pixel half-diagonal, which holds on the whole pixel path.
pub fn render_certified(decider: &Decider, region: &Region, n: u32, threads: usize) -> RenderOutput {
    let start = Instant::now();
    let grid = PixelGrid::new(region, n);
    let r = Dyadic::pow2(-(n as i64) - 2);
    let two_eps = decider.cert.eps.value.mul_pow2(1);
    let shortcut = n >= decider.pixel_n_min() && &two_eps * &two_eps > (&r * &r).mul_pow2(1);
    let stride = grid.width.div_ceil(8);
    let rows: Vec<RowResult> = pool(threads).install(|| {
        (0..grid.height)
            .into_par_iter()
            .map(|j| {
                let mut res = RowResult { bits: vec![0; stride], errors: Vec::new(), stats: PixelStats::default(), in_u: 0, times: Vec::new() };
                let ranges: Vec<(usize, usize)> = if shortcut { in_u_columns(decider, &grid, j) } else { vec![(0, grid.width - 1)] };
                let mut covered = 0u64;
                let mut disks = FreeDisks::default();
                for (a, b) in ranges {
                    for i in a..=b {
                        covered += 1;
                        let t = Instant::now();
                        match decider.pixel_value_cached(n, &grid.center(i, j), &mut disks) {
                            Ok((v, st)) => {
                                if v == 1 {
                                    res.bits[i / 8] |= 0x80 >> (i % 8);
                                }
                                res.stats.merge(&st);
                            }
                            Err(_) => {
                                res.errors.push(i);
                                res.stats.pixels += 1;
                                res.stats.errors += 1;
                            }
                        }
                        res.times.push(t.elapsed().as_nanos() as f32);
                    }
                }
                if shortcut {
                    res.in_u = covered;
                    let outside = grid.width as u64 - covered;
                    res.stats.pixels += outside;
                    res.stats.evaluations += outside;
                    res.stats.reasons[Reason::OutsideU.index()] += outside;
                    if res.stats.iterations.is_empty() {
                        res.stats.iterations.push(0);
                    }
                    res.stats.iterations[0] += outside;
                }
                res
            })
            .collect()
    });
    let mut bitmap = Bitmap::new(grid.width, grid.height);
    let mut error_mask = Bitmap::new(grid.width, grid.height);
    let mut stats = RenderStats { n, width: grid.width, height: grid.height, certified: true, ..Default::default() };
    let mut times = Vec::new();
    for (j, row) in rows.into_iter().enumerate() {
        bitmap.set_row(j, &row.bits);
        for i in row.errors {
            error_mask.set(i, j, true);
        }
        stats.pixel.merge(&row.stats);
        stats.pixels_in_u += row.in_u;
        times.extend(row.times);
    }
    times.sort_by(f32::total_cmp);
    if !times.is_empty() {
        stats.pixel_ns_p50 = times[times.len() / 2] as f64;
        stats.pixel_ns_p95 = times[(times.len() * 95 / 100).min(times.len() - 1)] as f64;
    }
    if n >= decider.pixel_n_min() {
        stats.uniform_grid_factor = decider.uniform_grid_factor(n);
    }
    stats.wall_seconds = start.elapsed().as_secs_f64();
    RenderOutput { grid, bitmap, error_mask, stats }
}

/// Escape radius beyond which a polynomial orbit tends to infinity.
fn escape_radius(f: &MapF64) -> f64 {
    let d = f.num.len() - 1;
    let lead = f.num[d].norm();
    let rest: f64 = f.num[..d].iter().map(|a| a.norm()).sum();
    // |f(z)| >= lead |z|^d - rest |z|^(d-1) >= 2|z| once |z| >= max(1, (rest + 2) / lead)
    ((rest + 2.0) / lead).max(1.0).max(2.0)
}

fn baseline(map: &MapSpec, region: &Region, n: u32, threads: usize, pixel: impl Fn(Complex64) -> bool + Sync) -> Result<RenderOutput, Error> {
    if map.kind != crate::map::MapKind::Polynomial {
        return Err(Error::Usage("baseline renderers need a polynomial map".into()));
    }
    let start = Instant::now();
    let grid = PixelGrid::new(region, n);
    let stride = grid.width.div_ceil(8);
    let rows: Vec<Vec<u8>> = pool(threads).install(|| {
        (0..grid.height)
            .into_par_iter()
            .map(|j| {
                let mut bits = vec![0u8; stride];
                for i in 0..grid.width {
                    if pixel(grid.center_f64(i, j)) {
                        bits[i / 8] |= 0x80 >> (i % 8);
                    }
                }
                bits
            })
            .collect()
    });
    let mut bitmap = Bitmap::new(grid.width, grid.height);
    for (j, r) in rows.iter().enumerate() {
        bitmap.set_row(j, r);
    }
    let pixels = (grid.width * grid.height) as u64;
    let stats = RenderStats {
        n,
        width: grid.width,
        height: grid.height,
        certified: false,
        pixel: PixelStats { pixels, filled: bitmap.count(), ..Default::default() },
        wall_seconds: start.elapsed().as_secs_f64(),
        ..Default::default()
    };
    let error_mask = Bitmap::new(grid.width, grid.height);
    Ok(RenderOutput { grid, bitmap, error_mask, stats })
}

/// Uncertified: fill the pixels whose orbit stays within the escape radius
/// for `max_iter` steps.
pub fn render_escape_time(map: &MapSpec, region: &Region, n: u32, max_iter: u32, threads: usize) -> Result<RenderOutput, Error> {
    let f = MapF64::new(map);
    let esc = escape_radius(&f);
    baseline(map, region, n, threads, |z0| {
        let mut z = z0;
        for _ in 0..max_iter {
            if z.norm() > esc {
                return false;
            }
            z = f.eval(z);
        }
        true
    })
}

/// Uncertified distance estimator: for escaping orbits fill when
/// `|z_k| log|z_k| / |z_k'|` is below `2^-n-1`; for orbits that stay
/// bounded fill when the derivative has blown up, leaving the interior
/// of attracting basins blank.
pub fn render_dem(map: &MapSpec, region: &Region, n: u32, max_iter: u32, threads: usize) -> Result<RenderOutput, Error> {
    let f = MapF64::new(map);
    let big = 1e10;
    let size = 2f64.powi(-(n as i32) - 1);
    baseline(map, region, n, threads, |z0| {
        let mut z = z0;
        let mut dz = Complex64::new(1.0, 0.0);
        for _ in 0..max_iter {
            let (fz, dfz) = f.eval_with_derivative(z);
            dz *= dfz;
            z = fz;
            if z.norm() > big {
                let r = z.norm();
                return r * r.ln() / dz.norm() < size;
            }
        }
        dz.norm() > big
    })
}

/// One row of [`benchmark_scaling`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: u32,
    pub points: usize,
    pub median_ns: f64,
    pub p95_ns: f64,
    pub max_iterations: u32,
    pub l: u32,
    pub max_work_bits: u32,
    pub errors: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `log(median time)` against `log(n)`.
    pub exponent: f64,
}

impl ScalingTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,points,median_ns,p95_ns,max_iterations,L,max_work_bits,errors\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.0},{:.0},{},{},{},{}", r.n, r.points, r.median_ns, r.p95_ns, r.max_iterations, r.l, r.max_work_bits, r.errors);
        }
        let _ = writeln!(s, "# fitted exponent {:.3}", self.exponent);
        s
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_exponent(xy: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = xy.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Time routed verdicts (one per point, sequentially) at each `n`.
pub fn benchmark_scaling(decider: &Decider, points: &[ComplexDyadic], n_list: &[u32], repeats: usize) -> ScalingTable {
    let mut rows = Vec::new();
    for &n in n_list {
        let sched = decider.schedule(n);
        // warm the caches outside the timed region
        if let Some(z) = points.first() {
            let _ = decider.decide(n, z);
        }
        let mut times = Vec::with_capacity(points.len());
        let mut max_it = 0;
        let mut max_w = 0;
        let mut errors = 0;
        for z in points {
            let mut best = f64::INFINITY;
            for _ in 0..repeats.max(1) {
                let t = Instant::now();
                let v = decider.decide(n, z);
                let dt = t.elapsed().as_nanos() as f64;
                best = best.min(dt);
                match v {
                    Ok(v) => {
                        max_it = max_it.max(v.iterations_used);
                        max_w = max_w.max(v.max_work_bits);
                    }
                    Err(_) => errors += 1,
                }
            }
            times.push(best);
        }
        times.sort_by(f64::total_cmp);
        let (median, p95) = if times.is_empty() { (0.0, 0.0) } else { (times[times.len() / 2], times[(times.len() * 95 / 100).min(times.len() - 1)]) };
        rows.push(ScalingRow { n, points: points.len(), median_ns: median, p95_ns: p95, max_iterations: max_it, l: sched.l, max_work_bits: max_w, errors });
    }
    let exponent = fit_exponent(&rows.iter().map(|r| (r.n as f64, r.median_ns)).collect::<Vec<_>>());
    ScalingTable { rows, exponent }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_roundtrip() {
        let mut b = Bitmap::new(13, 3);
        b.set(0, 0, true);
        b.set(12, 2, true);
        b.set(7, 1, true);
        let back = Bitmap::from_pgm(&b.to_pgm()).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.ones().collect::<Vec<_>>(), vec![(0, 0), (7, 1), (12, 2)]);
    }

    #[test]
    fn grid_snaps_outward() {
        let r = Region::parse("-0.3,0,0.3,0.1").unwrap();
        let g = PixelGrid::new(&r, 0);
        assert_eq!(g.region.x0, "-0.5".parse().unwrap());
        assert_eq!(g.region.x1, "0.5".parse().unwrap());
        assert_eq!((g.width, g.height), (5, 2));
        assert_eq!(g.center(0, 0), ComplexDyadic::new("-0.5".parse().unwrap(), "0.25".parse().unwrap()));
    }

    #[test]
    fn exponent_fit() {
        let xy: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|&x: &f64| (x, 3.0 * x * x)).collect();
        assert!((fit_exponent(&xy) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn escape_time_zero_iterations_fills_everything() {
        let f = MapSpec::quadratic(ComplexDyadic::zero());
        let out = render_escape_time(&f, &Region::parse("-1,-1,1,1").unwrap(), 1, 0, 1).unwrap();
        assert_eq!(out.bitmap.count(), (out.grid.width * out.grid.height) as u64);
    }
}
