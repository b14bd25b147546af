//! The decision procedure: the per-point subprogram, the shortcut for
//! points outside `U`, and the pixel function built on top of them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::dyadic::{ComplexDyadic, Dyadic, Round};
use crate::error::EvalError;
use crate::ball::Ball;
use crate::fixed::{dyadic_to_f64_up, FixBall};
use crate::map::{run_orbit, MapSpec, PreparedMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    ExitStep3,
    ExitStep4,
    ExitStep6,
    OutsideU,
    CoarseCover,
}

impl Reason {
    pub const ALL: [Reason; 5] = [Reason::ExitStep3, Reason::ExitStep4, Reason::ExitStep6, Reason::OutsideU, Reason::CoarseCover];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Reason::ExitStep3 => "exit-step-3",
            Reason::ExitStep4 => "exit-step-4",
            Reason::ExitStep6 => "exit-step-6",
            Reason::OutsideU => "outside-u",
            Reason::CoarseCover => "coarse-cover",
        }
    }
}

/// Output of the subprogram.
///
/// Bit 0 certifies `d(z, J) <= 2^-n-1`; bit 1 certifies
/// `d(z, J) >= gap_K(n) 2^-n-1`. This is the reverse of the pixel
/// convention, where 1 means fill.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub bit: u8,
    pub reason: Reason,
    pub iterations_used: u32,
    pub max_work_bits: u32,
    /// For bit 1: a radius `rho` such that the open disk of radius `rho`
    /// around `z` misses the Julia set.
    pub free_radius: Option<Dyadic>,
    /// Oracle ticks charged for coefficient queries.
    pub ticks: u64,
}

/// Per-precision quantities, computed once.
#[derive(Debug)]
pub struct Schedule {
    pub n: u32,
    pub l: u32,
    pub target: Dyadic,
    /// `threshold(i, n)` at index `i - 1`.
    pub thresholds: Vec<Dyadic>,
    pub gap: Dyadic,
}

/// Deterministic decision engine for one map and certificate.
pub struct Decider<'a> {
    pub cert: &'a Certificate,
    pub map: &'a MapSpec,
    n0: u32,
    two_eps: Dyadic,
    prepared: Mutex<HashMap<u32, Arc<PreparedMap>>>,
    schedules: Mutex<HashMap<u32, Arc<Schedule>>>,
    /// Evaluation cap for one pixel.
    pub max_evaluations: u64,
}

/// Fractional bits beyond the cell size used by [`Decider::cell_misses_j`].
const CELL_GUARD_BITS: i64 = 24;
/// Image balls wider than `2^CELL_MAX_RADIUS_EXP` are given up on.
const CELL_MAX_RADIUS_EXP: i32 = -1;
/// Steps tried beyond the schedule length `L(n)`.
const CELL_EXTRA_STEPS: u32 = 8;

/// Default evaluation cap per pixel.
pub const MAX_PIXEL_EVALUATIONS: u64 = 1 << 20;

enum Exit {
    Close,
    Far { d_hi: Dyadic, p: ComplexDyadic, p_rad: Dyadic, w: u32 },
}

impl<'a> Decider<'a> {
    pub fn new(cert: &'a Certificate, map: &'a MapSpec) -> Self {
        Decider {
            cert,
            map,
            n0: cert.n0(),
            two_eps: cert.eps.value.mul_pow2(1),
            prepared: Mutex::new(HashMap::new()),
            schedules: Mutex::new(HashMap::new()),
            max_evaluations: MAX_PIXEL_EVALUATIONS,
        }
    }

    /// Smallest `n` served by the subprogram.
    pub fn n0(&self) -> u32 {
        self.n0
    }

    /// Smallest `n` served by the pixel path; cells are decided at `n + 2`.
    pub fn pixel_n_min(&self) -> u32 {
        self.n0.saturating_sub(2)
    }

    pub fn schedule(&self, n: u32) -> Arc<Schedule> {
        let mut cache = self.schedules.lock().unwrap();
        cache
            .entry(n)
            .or_insert_with(|| {
                let l = self.cert.l_of(n);
                let half = Dyadic::pow2(-(n as i64) - 1);
                let target = half.min(self.cert.eps.value.clone());
                let thresholds = (1..=l).map(|i| self.cert.threshold(i, n)).collect();
                let gap = self.cert.gap_k(n);
                Arc::new(Schedule { n, l, target, thresholds, gap })
            })
            .clone()
    }

    fn prepare(&self, w: u32) -> Arc<PreparedMap> {
        let mut cache = self.prepared.lock().unwrap();
        cache.entry(w).or_insert_with(|| Arc::new(self.map.prepare(w))).clone()
    }

    /// The subprogram at precision `n` for a point of `U`.
    pub fn subprogram(&self, n: u32, z: &ComplexDyadic) -> Result<Verdict, EvalError> {
        debug_assert!(self.cert.u.contains(z), "subprogram called outside U");
        let s = self.schedule(n);
        let u = &self.cert.u;
        let prepare = |w: u32| self.prepare(w);
        let run = run_orbit(&prepare, z, s.l, &s.target, &self.cert.r_hat.value, |step| {
            let w = step.work_bits;
            if u.contains_scaled(&step.p.re, &step.p.im, w) {
                return None;
            }
            let (lo, hi) = step.deriv.abs_bounds_ulps();
            // approximant d = (lo + hi) / 2 against the threshold, exactly
            let sum: BigInt = &lo + &hi;
            let thr = s.thresholds[step.index as usize - 1].mul_pow2(w as i64 + 1).ceil_int();
            if sum >= thr {
                Some(Exit::Close)
            } else {
                Some(Exit::Far { d_hi: Dyadic::new(hi, -(w as i64)), p: step.p.center(w), p_rad: step.p.radius(w), w })
            }
        })?;
        let (bit, reason, free_radius) = match run.outcome {
            None => (0, Reason::ExitStep6, None),
            Some(Exit::Close) => (0, Reason::ExitStep3, None),
            Some(Exit::Far { d_hi, p, p_rad, w }) => (1, Reason::ExitStep4, Some(self.pullback_radius(&d_hi, &p, &p_rad, w))),
        };
        Ok(Verdict { bit, reason, iterations_used: run.steps, max_work_bits: run.work_bits, free_radius, ticks: run.ticks })
    }

    /// Lower bound on the distance from `z` to `J` at an orbit exit: the disk
    /// of radius `delta` around `f^i(z)` misses `J` and the postcritical set,
    /// so its univalent pullback contains the disk of radius
    /// `delta / (4 |Df^i(z)|)` around `z`.
    fn pullback_radius(&self, d_hi: &Dyadic, p: &ComplexDyadic, p_rad: &Dyadic, w: u32) -> Dyadic {
        let koebe = self.cert.koebe_radius();
        let re = p.re.scaled_int(w as i64).unwrap();
        let im = p.im.scaled_int(w as i64).unwrap();
        let dl = self.cert.u.dist_lower_scaled(&re, &im, w, Some(koebe));
        let delta = (&(&dl + &self.two_eps) - p_rad).min(koebe.clone());
        if !delta.is_positive() || !d_hi.is_positive() {
            return Dyadic::zero();
        }
        delta.div_rel(&d_hi.mul_pow2(2), 32, Round::Floor)
    }

    /// Verdict for a point outside `U`: it lies at least
    /// `dist(z, U) + 2 eps` from `J`.
    pub fn decide_far_outside_u(&self, _n: u32, z: &ComplexDyadic) -> Verdict {
        let d = self.cert.u.dist_lower(z).unwrap_or_else(|_| Dyadic::zero());
        Verdict { bit: 1, reason: Reason::OutsideU, iterations_used: 0, max_work_bits: 0, free_radius: Some(d + &self.two_eps), ticks: 0 }
    }

    /// Routed verdict: the subprogram inside `U`, the shortcut outside.
    pub fn decide(&self, n: u32, z: &ComplexDyadic) -> Result<Verdict, EvalError> {
        if self.cert.u.contains(z) {
            self.subprogram(n, z)
        } else {
            Ok(self.decide_far_outside_u(n, z))
        }
    }

    /// Pixel function: 1 (fill) if `d(z, J) <= 2^-n-2`, 0 if
    /// `d(z, J) >= 2^-n-1`, either in between.
    pub fn pixel_value(&self, n: u32, z: &ComplexDyadic) -> Result<u8, EvalError> {
        Ok(self.pixel_value_with_stats(n, z)?.0)
    }

    /// Pixel function with instrumentation.
    ///
    /// The disk of radius `R = 2^-n-2` around `z` is covered by square cells
    /// whose centers are decided at precision `n + 2`. A bit 0 at a cell
    /// center puts `J` within `R/2` of a point at most `R + a sqrt2` from
    /// `z` (cell half-side `a <= R/4` once split, and the first split's
    /// centers lie `R/sqrt2` away), so within `2R` of `z`: fill. A bit 1
    /// yields a disk missing `J`; cells inside any such disk found so far are
    /// cleared, the others split into quarters, and cells missing the disk
    /// of radius `R` are dropped. Cells passing [`Decider::cell_misses_j`]
    /// are cleared without a verdict. If every cell is cleared that disk
    /// misses `J`: blank.
    pub fn pixel_value_with_stats(&self, n: u32, z: &ComplexDyadic) -> Result<(u8, PixelStats), EvalError> {
        self.pixel_value_cached(n, z, &mut FreeDisks::default())
    }

    /// [`Decider::pixel_value_with_stats`] reusing free disks found for
    /// earlier pixels. The value may differ from the uncached one only where
    /// both fill and blank are allowed.
    pub fn pixel_value_cached(&self, n: u32, z: &ComplexDyadic, disks: &mut FreeDisks) -> Result<(u8, PixelStats), EvalError> {
        let mut stats = PixelStats::default();
        if n < self.pixel_n_min() {
            let v = self.coarse_pixel_value(n, z);
            stats.record(&Verdict { bit: 1 - v, reason: Reason::CoarseCover, iterations_used: 0, max_work_bits: 0, free_radius: None, ticks: 0 });
            stats.pixels = 1;
            stats.filled = v as u64;
            return Ok((v, stats));
        }
        let nn = n + 2;
        let r_exp = -(n as i64) - 2;
        let r2 = Dyadic::pow2(2 * r_exp);
        let mut stack: Vec<(ComplexDyadic, i64)> = vec![(z.clone(), r_exp)];
        stats.pixels = 1;
        while let Some((c, a_exp)) = stack.pop() {
            if disks.covers(&c, a_exp) {
                continue;
            }
            if self.cell_misses_j(nn, &c, a_exp) {
                stats.cells_excluded += 1;
                continue;
            }
            if stats.evaluations >= self.max_evaluations {
                return Err(EvalError::SubdivisionLimit(self.max_evaluations));
            }
            let v = self.decide(nn, &c)?;
            stats.evaluations += 1;
            stats.max_depth = stats.max_depth.max((r_exp - a_exp) as u32);
            stats.record(&v);
            if v.bit == 0 {
                stats.filled = 1;
                return Ok((1, stats));
            }
            let rho = v.free_radius.unwrap_or_else(Dyadic::zero);
            let cleared = rho.is_positive() && {
                disks.push(c.clone(), rho);
                disks.covers(&c, a_exp)
            };
            if cleared {
                continue;
            }
            let q = Dyadic::pow2(a_exp - 1);
            for (sx, sy) in [(1, 1), (-1, 1), (-1, -1), (1, -1)] {
                let dx = if sx > 0 { q.clone() } else { -&q };
                let dy = if sy > 0 { q.clone() } else { -&q };
                let child = ComplexDyadic::new(&c.re + &dx, &c.im + &dy);
                if square_meets_disk(&child, a_exp - 1, z, &r2) {
                    stack.push((child, a_exp - 1));
                }
            }
        }
        Ok((0, stats))
    }

    /// Whether the closed square of half-side `2^a_exp` around `c` misses
    /// `J`. Its images stay in `J` if it meets `J`, so it misses `J` once an
    /// enclosing ball of some image has its center outside `U` at distance
    /// more than `radius - 2 eps` from `U`.
    pub fn cell_misses_j(&self, n: u32, c: &ComplexDyadic, a_exp: i64) -> bool {
        let w = ((CELL_GUARD_BITS - a_exp).max(CELL_GUARD_BITS)) as u32;
        let map = self.prepare(w);
        // a sqrt2 <= a 363/256
        let rad = Dyadic::new(BigInt::from(363), a_exp - 8);
        let mut p = FixBall::from_ball(&Ball::new(c.clone(), rad), w);
        let max_rad = 2f64.powi(w as i32 + CELL_MAX_RADIUS_EXP);
        let u = &self.cert.u;
        for _ in 0..self.schedule(n).l + CELL_EXTRA_STEPS {
            p = match map.eval_fix(&p) {
                Ok((fp, _)) => fp,
                Err(_) => return false,
            };
            if p.rad > max_rad || p.rad.is_nan() {
                return false;
            }
            if u.contains_scaled(&p.re, &p.im, w) {
                continue;
            }
            let r = p.radius(w);
            let dl = u.dist_lower_scaled(&p.re, &p.im, w, Some(&r));
            if &dl + &self.two_eps > r {
                return true;
            }
        }
        false
    }

    /// Low-resolution pixel function below [`Decider::pixel_n_min`], read off the Julia
    /// approximation (or `U` when the certificate carries none).
    ///
    /// Fill when the lower bound on the distance to the approximation is at
    /// most `2^-n-2 + h`. Filling is always allowed when `d(z, J) <= 2^-n-2`;
    /// blanking is sound whenever the bound exceeds it.
    pub fn coarse_pixel_value(&self, n: u32, z: &ComplexDyadic) -> u8 {
        let rad = Dyadic::pow2(-(n as i64) - 2);
        match &self.cert.julia_approx {
            Some(a) => {
                if a.cover.contains(z) {
                    return 1;
                }
                match a.cover.dist_lower(z) {
                    Ok(d) => (d <= &rad + &a.hausdorff) as u8,
                    Err(_) => 0,
                }
            }
            None => {
                if self.cert.u.contains(z) {
                    return 1;
                }
                match self.cert.u.dist_lower(z) {
                    Ok(d) => (d <= rad) as u8,
                    Err(_) => 0,
                }
            }
        }
    }

    /// Factor by which a uniform sample grid of spacing `gap_K 2^-n'-1 / 2`
    /// over the pixel disk (with `n' = n + 1`) would multiply the work.
    pub fn uniform_grid_factor(&self, n: u32) -> f64 {
        let np = n + 1;
        let g = self.schedule(np).gap.to_f64();
        let spacing = g * 2f64.powi(-(np as i32) - 1) / 2.0;
        let r = 2f64.powi(-(n as i32) - 2);
        std::f64::consts::PI * r * r / (spacing * spacing)
    }

    /// Upper bound on the free radius as an `f64`, for reporting.
    pub fn radius_f64(v: &Verdict) -> f64 {
        v.free_radius.as_ref().map(dyadic_to_f64_up).unwrap_or(0.0)
    }
}

/// Whether the closed square of half-side `2^a_exp` around `c` meets the
/// closed disk of squared radius `r2` around `z`.
fn square_meets_disk(c: &ComplexDyadic, a_exp: i64, z: &ComplexDyadic, r2: &Dyadic) -> bool {
    let a = Dyadic::pow2(a_exp);
    let gap = |u: &Dyadic, v: &Dyadic| {
        let g = &(u - v).abs() - &a;
        if g.is_positive() {
            g
        } else {
            Dyadic::zero()
        }
    };
    let gx = gap(&c.re, &z.re);
    let gy = gap(&c.im, &z.im);
    &(&gx * &gx) + &(&gy * &gy) <= *r2
}

/// Recently found open disks missing the Julia set.
#[derive(Default)]
pub struct FreeDisks {
    disks: Vec<(ComplexDyadic, Dyadic)>,
}

impl FreeDisks {
    /// Disks kept; older ones are dropped.
    pub const CAPACITY: usize = 48;

    pub fn push(&mut self, center: ComplexDyadic, radius: Dyadic) {
        if self.disks.len() == Self::CAPACITY {
            self.disks.remove(0);
        }
        let r2 = &radius * &radius;
        self.disks.push((center, r2));
    }

    /// Whether some disk contains the closed square of half-side `2^a_exp`
    /// around `c`, tested on its farthest corner.
    pub fn covers(&self, c: &ComplexDyadic, a_exp: i64) -> bool {
        let a = Dyadic::pow2(a_exp);
        self.disks.iter().rev().any(|(p, r2)| {
            let dx = &(&c.re - &p.re).abs() + &a;
            let dy = &(&c.im - &p.im).abs() + &a;
            &(&dx * &dx) + &(&dy * &dy) < *r2
        })
    }

    pub fn clear(&mut self) {
        self.disks.clear();
    }
}

/// Instrumentation, merged by addition and maximum only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelStats {
    pub pixels: u64,
    pub filled: u64,
    pub errors: u64,
    /// Subprogram and shortcut verdicts computed.
    pub evaluations: u64,
    pub reasons: [u64; 5],
    /// `iterations[k]` counts verdicts that used `k` iterations.
    pub iterations: Vec<u64>,
    pub max_work_bits: u32,
    pub max_depth: u32,
    pub ticks: u64,
    /// Cells cleared by iterating their enclosing ball.
    pub cells_excluded: u64,
}

impl PixelStats {
    pub fn record(&mut self, v: &Verdict) {
        self.reasons[v.reason.index()] += 1;
        let k = v.iterations_used as usize;
        if self.iterations.len() <= k {
            self.iterations.resize(k + 1, 0);
        }
        self.iterations[k] += 1;
        self.max_work_bits = self.max_work_bits.max(v.max_work_bits);
        self.ticks += v.ticks;
    }

    pub fn merge(&mut self, o: &PixelStats) {
        self.pixels += o.pixels;
        self.filled += o.filled;
        self.errors += o.errors;
        self.evaluations += o.evaluations;
        for k in 0..5 {
            self.reasons[k] += o.reasons[k];
        }
        if self.iterations.len() < o.iterations.len() {
            self.iterations.resize(o.iterations.len(), 0);
        }
        for (a, b) in self.iterations.iter_mut().zip(&o.iterations) {
            *a += b;
        }
        self.max_work_bits = self.max_work_bits.max(o.max_work_bits);
        self.max_depth = self.max_depth.max(o.max_depth);
        self.ticks += o.ticks;
        self.cells_excluded += o.cells_excluded;
    }

    /// Verdicts recorded, equal to the sum of the reason counts.
    pub fn verdicts(&self) -> u64 {
        self.reasons.iter().sum()
    }
}
