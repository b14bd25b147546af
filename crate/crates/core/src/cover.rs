//! Finite unions of closed dyadic squares.
//!
//! A [`BoxCover`] at resolution `m` is a set of grid squares
//! `[i, i+1] x [j, j+1]` scaled by `2^-m`. Rows are stored as sorted,
//! merged runs of consecutive column indices. Boxes are closed, so a point on
//! a shared edge belongs to every adjacent box.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{ToPrimitive, Zero};

use crate::ball::Ball;
use crate::certificate::{Check, ValidationReport};
use crate::dyadic::{shr_round, ComplexDyadic, Dyadic, Round};
use crate::error::{EvalError, ParseError};
use crate::fixed::FixBall;
use crate::map::MapSpec;
use crate::roots::MapF64;

/// Sub-box resolution (bits below `2^-m`) used by the distance routines.
const DIST_SUB: i64 = 6;

/// Coordinates beyond `2^CLAMP_BITS` sub-box units are clamped.
const CLAMP_BITS: u32 = 40;

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BoxCover {
    m: u32,
    /// Row index to sorted inclusive column runs `(start, end)`.
    rows: BTreeMap<i64, Vec<(i64, i64)>>,
}

fn merge_runs(runs: &mut Vec<(i64, i64)>) {
    runs.sort_unstable();
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(runs.len());
    for &(s, e) in runs.iter() {
        match out.last_mut() {
            Some(last) if s <= last.1 + 1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    *runs = out;
}

/// Floor and exactness of `x * 2^k` for an integer `x` at scale `2^-w`.
fn grid_index(x: &BigInt, w: u32, m: u32) -> Option<(i64, bool)> {
    if w >= m {
        let k = (w - m) as u64;
        let f = shr_round(x, k, Round::Floor);
        let exact = k == 0 || x.is_zero() || x.trailing_zeros().is_some_and(|t| t >= k);
        Some((f.to_i64()?, exact))
    } else {
        Some(((x << (m - w) as u64).to_i64()?, true))
    }
}

impl BoxCover {
    pub fn new(m: u32) -> Self {
        BoxCover { m, rows: BTreeMap::new() }
    }

    pub fn from_boxes(m: u32, boxes: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut rows: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
        for (i, j) in boxes {
            rows.entry(j).or_default().push((i, i));
        }
        for runs in rows.values_mut() {
            merge_runs(runs);
        }
        BoxCover { m, rows }
    }

    fn from_row_runs(m: u32, mut rows: BTreeMap<i64, Vec<(i64, i64)>>) -> Self {
        rows.retain(|_, r| !r.is_empty());
        for runs in rows.values_mut() {
            merge_runs(runs);
        }
        BoxCover { m, rows }
    }

    /// All boxes of side `2^-m` meeting the closed rectangle.
    pub fn from_rect(m: u32, x0: &Dyadic, y0: &Dyadic, x1: &Dyadic, y1: &Dyadic) -> Self {
        let s = m as i64;
        let (i0, i1) = (x0.mul_pow2(s).floor_int().to_i64().unwrap(), x1.mul_pow2(s).ceil_int().to_i64().unwrap());
        let (j0, j1) = (y0.mul_pow2(s).floor_int().to_i64().unwrap(), y1.mul_pow2(s).ceil_int().to_i64().unwrap());
        let mut rows = BTreeMap::new();
        for j in j0..j1.max(j0 + 1) {
            rows.insert(j, vec![(i0, (i1 - 1).max(i0))]);
        }
        BoxCover { m, rows }
    }

    pub fn resolution(&self) -> u32 {
        self.m
    }

    /// Side length `2^-m`.
    pub fn box_side(&self) -> Dyadic {
        Dyadic::pow2(-(self.m as i64))
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.values().flat_map(|r| r.iter()).map(|(s, e)| (e - s + 1) as usize).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = (i64, &[(i64, i64)])> {
        self.rows.iter().map(|(j, r)| (*j, r.as_slice()))
    }

    pub fn boxes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.rows.iter().flat_map(|(&j, runs)| runs.iter().flat_map(move |&(s, e)| (s..=e).map(move |i| (i, j))))
    }

    /// Index bounding box `(i0, j0, i1, j1)`, inclusive.
    pub fn index_bbox(&self) -> Option<(i64, i64, i64, i64)> {
        let j0 = *self.rows.keys().next()?;
        let j1 = *self.rows.keys().next_back()?;
        let i0 = self.rows.values().map(|r| r[0].0).min()?;
        let i1 = self.rows.values().map(|r| r.last().unwrap().1).max()?;
        Some((i0, j0, i1, j1))
    }

    /// Bounding rectangle `(x0, y0, x1, y1)` of the union.
    pub fn bbox(&self) -> Option<(Dyadic, Dyadic, Dyadic, Dyadic)> {
        let (i0, j0, i1, j1) = self.index_bbox()?;
        let e = -(self.m as i64);
        Some((Dyadic::new(i0, e), Dyadic::new(j0, e), Dyadic::new(i1 + 1, e), Dyadic::new(j1 + 1, e)))
    }

    /// Column runs of row `j`, inclusive.
    pub fn row_runs(&self, j: i64) -> &[(i64, i64)] {
        self.rows.get(&j).map(|r| r.as_slice()).unwrap_or(&[])
    }

    pub fn contains_box(&self, i: i64, j: i64) -> bool {
        match self.rows.get(&j) {
            None => false,
            Some(runs) => {
                let k = runs.partition_point(|&(s, _)| s <= i);
                k > 0 && runs[k - 1].1 >= i
            }
        }
    }

    fn contains_indices(&self, ix: (i64, bool), iy: (i64, bool)) -> bool {
        let xs: &[i64] = if ix.1 { &[ix.0, ix.0 - 1] } else { &[ix.0] };
        let ys: &[i64] = if iy.1 { &[iy.0, iy.0 - 1] } else { &[iy.0] };
        ys.iter().any(|&j| xs.iter().any(|&i| self.contains_box(i, j)))
    }

    /// Exact membership in the closed union.
    pub fn contains(&self, z: &ComplexDyadic) -> bool {
        let w = z.frac_bits().max(self.m as i64) as u32;
        let re = z.re.scaled_int(w as i64).unwrap();
        let im = z.im.scaled_int(w as i64).unwrap();
        self.contains_scaled(&re, &im, w)
    }

    /// Membership of the point `(re + i im) 2^-w`.
    pub(crate) fn contains_scaled(&self, re: &BigInt, im: &BigInt, w: u32) -> bool {
        match (grid_index(re, w, self.m), grid_index(im, w, self.m)) {
            (Some(ix), Some(iy)) => self.contains_indices(ix, iy),
            _ => false,
        }
    }

    /// Sub-box coordinate bracket `[lo, hi]` of `x 2^-w` in units of
    /// `2^-(m + DIST_SUB)`, clamped.
    fn sub_bracket(&self, x: &BigInt, w: u32) -> (i64, i64) {
        let q = self.m as i64 + DIST_SUB;
        let (lo, hi) = if w as i64 >= q {
            let k = (w as i64 - q) as u64;
            (shr_round(x, k, Round::Floor), shr_round(x, k, Round::Ceil))
        } else {
            let v = x << (q - w as i64) as u64;
            (v.clone(), v)
        };
        let lim = BigInt::from(1i64 << CLAMP_BITS);
        let clamp = |v: BigInt| -> i64 {
            if v > lim {
                1i64 << CLAMP_BITS
            } else if v < -&lim {
                -(1i64 << CLAMP_BITS)
            } else {
                v.to_i64().unwrap()
            }
        };
        (clamp(lo), clamp(hi))
    }

    /// Lower bound on the squared distance, in squared sub-box units, from
    /// the bracketed point to the union, giving up once it reaches `cap2`.
    fn dist2_units(&self, x: (i64, i64), y: (i64, i64), cap2: i128) -> i128 {
        let sub = 1i64 << DIST_SUB;
        let row = y.0.div_euclid(sub);
        let col = x.0.div_euclid(sub);
        let mut best = cap2;
        let gap = |lo: i64, hi: i64, a: i64, b: i64| -> i128 {
            // gap from bracket [lo, hi] to the interval [a, b], lower bound
            (a - hi).max(lo - b).max(0) as i128
        };
        let scan = |j: i64, runs: &Vec<(i64, i64)>, best: &mut i128| {
            let gy = gap(y.0, y.1, j * sub, (j + 1) * sub);
            let gy2 = gy * gy;
            if gy2 >= *best {
                return false;
            }
            let k = runs.partition_point(|&(s, _)| s <= col);
            for idx in [k.wrapping_sub(1), k] {
                if let Some(&(s, e)) = runs.get(idx) {
                    let gx = gap(x.0, x.1, s * sub, (e + 1) * sub);
                    let d2 = gx * gx + gy2;
                    if d2 < *best {
                        *best = d2;
                    }
                }
            }
            true
        };
        for (&j, runs) in self.rows.range(row..) {
            if !scan(j, runs, &mut best) {
                break;
            }
        }
        for (&j, runs) in self.rows.range(..row).rev() {
            if !scan(j, runs, &mut best) {
                break;
            }
        }
        best
    }

    fn dist_from_units(&self, d2: i128) -> Dyadic {
        let s = (d2 as u128).sqrt();
        Dyadic::new(BigInt::from(s), -(self.m as i64 + DIST_SUB))
    }

    /// Lower bound on `min(dist(p, cover), cap)` for `p = (re + i im) 2^-w`.
    /// Returns 0 when the point is inside or within one sub-box unit.
    pub(crate) fn dist_lower_scaled(&self, re: &BigInt, im: &BigInt, w: u32, cap: Option<&Dyadic>) -> Dyadic {
        let x = self.sub_bracket(re, w);
        let y = self.sub_bracket(im, w);
        let cap2 = match cap {
            Some(c) => {
                let u = c.mul_pow2(self.m as i64 + DIST_SUB).ceil_int();
                let u = u.to_i64().unwrap_or(i64::MAX >> 2).min(1 << (CLAMP_BITS + 2)) as i128;
                u * u
            }
            None => i128::MAX,
        };
        let d2 = self.dist2_units(x, y, cap2);
        let d = self.dist_from_units(d2);
        match cap {
            Some(c) if d > *c => c.clone(),
            _ => d,
        }
    }

    /// Lower bound on the distance from `z` to the union, within `2^-(m+4)`.
    pub fn dist_lower(&self, z: &ComplexDyadic) -> Result<Dyadic, EvalError> {
        if self.contains(z) {
            return Err(EvalError::PointInsideCover);
        }
        if self.is_empty() {
            return Err(EvalError::EmptyCover);
        }
        let w = z.frac_bits().max(self.m as i64) as u32;
        Ok(self.dist_lower_scaled(&z.re.scaled_int(w as i64).unwrap(), &z.im.scaled_int(w as i64).unwrap(), w, None))
    }

    /// Boxes of a cover containing the closed `t`-neighborhood of this one.
    ///
    /// Box `(i+a, j+b)` is added for each box `(i, j)` when the gap between
    /// the two squares is strictly less than `t`; squares at gap exactly `t`
    /// only touch the neighborhood on edges already covered.
    pub fn inflate(&self, t: &Dyadic) -> BoxCover {
        assert!(!t.is_negative(), "negative inflation");
        if t.is_zero() || self.is_empty() {
            return self.clone();
        }
        let k = t.mul_pow2(self.m as i64);
        let k2 = &k * &k;
        // half-widths of the offset pattern per row offset b
        let mut widths: Vec<(i64, i64)> = Vec::new();
        let kc = k.ceil_int().to_i64().expect("inflation radius fits");
        for b in -(kc + 1)..=(kc + 1) {
            let gy = (b.abs() - 1).max(0);
            let rest = &k2 - &Dyadic::from_int(gy * gy);
            if !rest.is_positive() {
                if b.abs() <= 1 {
                    widths.push((b, 1));
                }
                continue;
            }
            // largest integer g with g^2 < rest
            let f = rest.floor_int();
            let mut g = f.sqrt().to_i64().unwrap();
            if Dyadic::from_int(g * g) >= rest {
                g -= 1;
            }
            widths.push((b, g + 1));
        }
        let mut rows: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
        for (&j, runs) in &self.rows {
            for &(b, a) in &widths {
                let target = rows.entry(j + b).or_default();
                for &(s, e) in runs {
                    target.push((s - a, e + a));
                }
            }
        }
        BoxCover::from_row_runs(self.m, rows)
    }

    /// The same set covered by boxes at the coarser resolution `m2 <= m`.
    pub fn coarsen(&self, m2: u32) -> BoxCover {
        if m2 >= self.m {
            return self.clone();
        }
        let k = self.m - m2;
        let mut rows: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
        for (&j, runs) in &self.rows {
            let target = rows.entry(j >> k).or_default();
            for &(s, e) in runs {
                target.push((s >> k, e >> k));
            }
        }
        BoxCover::from_row_runs(m2, rows)
    }

    /// The same set at the finer resolution `m2 >= m`.
    pub fn refine(&self, m2: u32) -> BoxCover {
        if m2 <= self.m {
            return self.clone();
        }
        let k = m2 - self.m;
        let mut rows = BTreeMap::new();
        for (&j, runs) in &self.rows {
            let r: Vec<(i64, i64)> = runs.iter().map(|&(s, e)| (s << k, ((e + 1) << k) - 1)).collect();
            for jj in (j << k)..((j + 1) << k) {
                rows.insert(jj, r.clone());
            }
        }
        BoxCover { m: m2, rows }
    }

    pub fn union(&self, other: &BoxCover) -> BoxCover {
        let m = self.m.max(other.m);
        let (a, b) = (self.refine(m), other.refine(m));
        let mut rows = a.rows;
        for (j, runs) in b.rows {
            rows.entry(j).or_default().extend(runs);
        }
        BoxCover::from_row_runs(m, rows)
    }

    /// Whether the union of `self` is a subset of the union of `other`.
    pub fn is_subset(&self, other: &BoxCover) -> bool {
        if other.m <= self.m {
            let k = self.m - other.m;
            self.rows.iter().all(|(&j, runs)| {
                runs.iter().all(|&(s, e)| {
                    let (s2, e2) = (s >> k, e >> k);
                    (s2..=e2).all(|i| other.contains_box(i, j >> k))
                })
            })
        } else {
            self.refine(other.m).is_subset(other)
        }
    }

    /// Boxes of `self` not contained in `other` (same resolution assumed
    /// after refinement).
    pub fn difference_boxes(&self, other: &BoxCover) -> Vec<(i64, i64)> {
        let m = self.m.max(other.m);
        let a = self.refine(m);
        let b = other.refine(m);
        a.boxes().filter(|&(i, j)| !b.contains_box(i, j)).collect()
    }

    /// Whether the closed rectangle lies inside the union (sufficient test:
    /// every grid square meeting the rectangle is present).
    pub fn rect_inside(&self, x0: &Dyadic, y0: &Dyadic, x1: &Dyadic, y1: &Dyadic) -> bool {
        let s = self.m as i64;
        let to = |v: BigInt| v.to_i64();
        let (Some(i0), Some(i1), Some(j0), Some(j1)) = (
            to(x0.mul_pow2(s).floor_int()),
            to(x1.mul_pow2(s).ceil_int()),
            to(y0.mul_pow2(s).floor_int()),
            to(y1.mul_pow2(s).ceil_int()),
        ) else {
            return false;
        };
        let i1 = (i1 - 1).max(i0);
        let j1 = (j1 - 1).max(j0);
        (j0..=j1).all(|j| match self.rows.get(&j) {
            None => false,
            Some(runs) => {
                let k = runs.partition_point(|&(st, _)| st <= i0);
                k > 0 && runs[k - 1].1 >= i1
            }
        })
    }

    /// Whether the closed disk lies inside the union (via its bounding square).
    pub fn ball_inside(&self, b: &Ball) -> bool {
        let c = &b.center;
        self.rect_inside(&(&c.re - &b.radius), &(&c.im - &b.radius), &(&c.re + &b.radius), &(&c.im + &b.radius))
    }

    /// Text form: header, bounding box, then one line per row of `start+len`
    /// runs.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "boxcover 1").unwrap();
        writeln!(s, "resolution {}", self.m).unwrap();
        match self.index_bbox() {
            Some((i0, j0, i1, j1)) => writeln!(s, "bbox {i0} {j0} {i1} {j1}").unwrap(),
            None => writeln!(s, "bbox empty").unwrap(),
        }
        writeln!(s, "rows {}", self.rows.len()).unwrap();
        for (j, runs) in &self.rows {
            write!(s, "{j}").unwrap();
            for (st, e) in runs {
                write!(s, " {}+{}", st, e - st + 1).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let err = |m: &str| ParseError::Cover(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some("boxcover 1") {
            return Err(err("missing `boxcover 1` header"));
        }
        let m: u32 = lines
            .next()
            .and_then(|l| l.strip_prefix("resolution "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err("missing resolution"))?;
        let bbox_line = lines.next().and_then(|l| l.strip_prefix("bbox ")).ok_or_else(|| err("missing bbox"))?;
        let nrows: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("rows "))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err("missing row count"))?;
        let mut rows = BTreeMap::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let j: i64 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| err("bad row index"))?;
            let mut runs = Vec::new();
            for p in parts {
                let (st, len) = p.split_once('+').ok_or_else(|| err("bad run"))?;
                let st: i64 = st.parse().map_err(|_| err("bad run start"))?;
                let len: i64 = len.parse().map_err(|_| err("bad run length"))?;
                if len < 1 {
                    return Err(err("empty run"));
                }
                runs.push((st, st + len - 1));
            }
            if rows.insert(j, runs).is_some() {
                return Err(err("duplicate row"));
            }
        }
        if rows.len() != nrows {
            return Err(err("row count mismatch"));
        }
        let cover = BoxCover::from_row_runs(m, rows);
        let expect = match cover.index_bbox() {
            Some((i0, j0, i1, j1)) => format!("{i0} {j0} {i1} {j1}"),
            None => "empty".to_string(),
        };
        if bbox_line.trim() != expect {
            return Err(err("bounding box does not match rows"));
        }
        Ok(cover)
    }
}

/// A cover believed to be within `hausdorff` of the Julia set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JuliaApprox {
    pub cover: BoxCover,
    pub hausdorff: Dyadic,
}

/// Boxes hit by every preimage of `seed` under `f^k` for `k = 0..=depth`.
/// Not certified.
pub fn build_cover_inverse_iteration(map: &MapSpec, depth: u32, m: u32, seed: &ComplexDyadic) -> Result<BoxCover, EvalError> {
    let f = MapF64::new(map);
    let (sr, si) = seed.to_f64();
    let mut level = vec![num_complex::Complex64::new(sr, si)];
    let scale = 2f64.powi(m as i32);
    let mut boxes = Vec::new();
    let push = |boxes: &mut Vec<(i64, i64)>, z: &num_complex::Complex64| {
        boxes.push(((z.re * scale).floor() as i64, (z.im * scale).floor() as i64));
    };
    push(&mut boxes, &level[0]);
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * map.degree as usize);
        for z in &level {
            for w in f.preimages(*z)? {
                push(&mut boxes, &w);
                next.push(w);
            }
        }
        level = next;
    }
    Ok(BoxCover::from_boxes(m, boxes))
}

const MAX_REPORTED: usize = 20;

fn box_ball(i: i64, j: i64, m: u32) -> Ball {
    let e = -(m as i64);
    let c = ComplexDyadic::new(Dyadic::new(2 * i + 1, e - 1), Dyadic::new(2 * j + 1, e - 1));
    // half diagonal 2^(-m-1) sqrt 2 < 3 * 2^(-m-2)
    Ball::new(c, Dyadic::new(3, e - 2))
}

/// Check the two conditions on `U` and `eps`: the image of the
/// `eps`-neighborhood of `U` stays within `r` of the Julia set, and `U`
/// contains the `2 eps`-neighborhood of the Julia set.
///
/// Both are checked against `approx`, so a pass is sound relative to its
/// stated Hausdorff accuracy.
pub fn validate_u_cond(map: &MapSpec, u: &BoxCover, approx: &JuliaApprox, eps: &Dyadic, r: &Dyadic) -> ValidationReport {
    let mut report = ValidationReport::default();
    let h = &approx.hausdorff;
    let m = u.resolution().max(approx.cover.resolution());
    let side = Dyadic::pow2(-(m as i64));
    // boxes of inflate(approx, t) lie within t + sqrt2 * side of approx
    let t = (r - h - side.mul_pow2(1)).round_to(m as i64, Round::Floor);
    let note = format!("relative to a Julia approximation of Hausdorff accuracy {}", h.to_decimal());
    if !t.is_positive() {
        report.push(Check::fail("image-in-r-neighborhood", format!("r = {} leaves no room after accuracy {} and box size", r.to_decimal(), h.to_decimal())));
    } else {
        let target = approx.cover.refine(m).inflate(&t);
        let source = u.refine(m).inflate(eps);
        let w = 64;
        let prepared = map.prepare(w);
        let mut bad = Vec::new();
        let mut count = 0usize;
        for (i, j) in source.boxes() {
            let ball = box_ball(i, j, m);
            let ok = match prepared.eval_fix(&FixBall::from_ball(&ball, w)) {
                Ok((fz, _)) => target.ball_inside(&fz.to_ball(w)),
                Err(_) => false,
            };
            if !ok {
                count += 1;
                if bad.len() < MAX_REPORTED {
                    bad.push((i, j));
                }
            }
        }
        let witness = if count == 0 {
            format!("{} boxes of the eps-neighborhood of U map within {} of the approximation; {note}", source.len(), t.to_decimal())
        } else {
            format!("{count} violating boxes at resolution {m}, first: {bad:?}; {note}")
        };
        report.push(Check { name: "image-in-r-neighborhood".into(), pass: count == 0, witness });
    }
    let need = approx.cover.inflate(&(eps.mul_pow2(1) + h));
    let missing = need.difference_boxes(u);
    let witness = if missing.is_empty() {
        format!("U contains the {}-neighborhood of the approximation; {note}", (eps.mul_pow2(1) + h).to_decimal())
    } else {
        format!("{} boxes missing from U, first: {:?}; {note}", missing.len(), &missing[..missing.len().min(MAX_REPORTED)])
    };
    report.push(Check { name: "U-contains-2eps-neighborhood".into(), pass: missing.is_empty(), witness });
    report
}
