//! The map `f`, its rigorous evaluation, and orbits with derivatives.

use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::ball::Ball;
use crate::cover::BoxCover;
use crate::dyadic::{ComplexDyadic, Dyadic};
use crate::error::{Error, EvalError, ParseError};
use crate::fixed::FixBall;
use crate::oracle::{Coefficient, CoefficientOracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Polynomial,
    Rational,
}

/// A polynomial or rational map given by coefficient oracles, lowest degree
/// first.
#[derive(Clone, Debug)]
pub struct MapSpec {
    pub kind: MapKind,
    pub numerator: Vec<Coefficient>,
    pub denominator: Vec<Coefficient>,
    pub degree: u32,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    kind: MapKind,
    degree: u32,
    numerator: Vec<String>,
    #[serde(default)]
    denominator: Vec<String>,
}

/// `|q| > 2^-64` at 64-bit precision, used to check leading coefficients.
fn clearly_nonzero(c: &Coefficient) -> bool {
    c.query(66).norm_sqr() > Dyadic::pow2(-128)
}

impl MapSpec {
    pub fn polynomial(coefficients: Vec<Coefficient>) -> Result<Self, ParseError> {
        let degree = coefficients.len().saturating_sub(1) as u32;
        let m = MapSpec { kind: MapKind::Polynomial, numerator: coefficients, denominator: Vec::new(), degree };
        m.check()?;
        Ok(m)
    }

    pub fn rational(numerator: Vec<Coefficient>, denominator: Vec<Coefficient>) -> Result<Self, ParseError> {
        let degree = numerator.len().max(denominator.len()).saturating_sub(1) as u32;
        let m = MapSpec { kind: MapKind::Rational, numerator, denominator, degree };
        m.check()?;
        Ok(m)
    }

    /// `z^2 + c`.
    pub fn quadratic(c: ComplexDyadic) -> Self {
        MapSpec::polynomial(vec![Coefficient::Exact(c), Coefficient::zero(), Coefficient::real(Dyadic::one())]).expect("quadratic is valid")
    }

    fn check(&self) -> Result<(), ParseError> {
        let bad = |m: &str| Err(ParseError::Map(m.to_string()));
        if self.degree < 2 {
            return bad("degree must be at least 2");
        }
        match self.kind {
            MapKind::Polynomial => {
                if !self.denominator.is_empty() {
                    return bad("polynomial maps take no denominator");
                }
                if self.numerator.len() != self.degree as usize + 1 {
                    return bad("numerator length must be degree + 1");
                }
                if !clearly_nonzero(self.numerator.last().unwrap()) {
                    return bad("leading coefficient must be nonzero");
                }
            }
            MapKind::Rational => {
                if self.denominator.is_empty() {
                    return bad("rational maps need a denominator");
                }
                let dp = self.numerator.len().saturating_sub(1);
                let dq = self.denominator.len() - 1;
                if dp.max(dq) != self.degree as usize {
                    return bad("degree must equal the larger of the numerator and denominator degrees");
                }
                if !clearly_nonzero(self.numerator.last().unwrap()) || !clearly_nonzero(self.denominator.last().unwrap()) {
                    return bad("leading coefficients must be nonzero");
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let f: MapFile = serde_json::from_str(text)?;
        let parse = |v: &[String]| v.iter().map(|s| Coefficient::parse(s)).collect::<Result<Vec<_>, _>>();
        let m = MapSpec { kind: f.kind, numerator: parse(&f.numerator)?, denominator: parse(&f.denominator)?, degree: f.degree };
        m.check()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let f = MapFile {
            kind: self.kind,
            degree: self.degree,
            numerator: self.numerator.iter().map(|c| c.to_string()).collect(),
            denominator: self.denominator.iter().map(|c| c.to_string()).collect(),
        };
        serde_json::to_string_pretty(&f).expect("map serializes")
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        MapSpec::from_json(&text)
    }

    /// Coefficients as `f64` pairs (for the non-rigorous helpers).
    pub fn coefficients_f64(&self) -> (Vec<num_complex::Complex64>, Vec<num_complex::Complex64>) {
        let conv = |v: &[Coefficient]| {
            v.iter()
                .map(|c| {
                    let (re, im) = c.query(60).to_f64();
                    num_complex::Complex64::new(re, im)
                })
                .collect()
        };
        (conv(&self.numerator), conv(&self.denominator))
    }

    /// Coefficients prepared at `work_bits` fractional bits.
    pub fn prepare(&self, work_bits: u32) -> PreparedMap {
        PreparedMap::new(self, work_bits)
    }
}

/// The map with every coefficient queried once at a fixed working precision.
#[derive(Clone, Debug)]
pub struct PreparedMap {
    work_bits: u32,
    num: Vec<FixBall>,
    den: Vec<FixBall>,
    ticks: u64,
}

fn prepare_coefficient(c: &Coefficient, w: u32, ticks: &mut u64) -> FixBall {
    match c {
        Coefficient::Exact(z) if z.frac_bits() <= w as i64 => FixBall::from_dyadic(z, w),
        _ => {
            let bits = w + 2;
            *ticks += bits as u64;
            let q = c.query(bits);
            let b = Ball::new(q, Dyadic::pow2(-(bits as i64)));
            FixBall::from_ball(&b, w)
        }
    }
}

/// Horner evaluation of a polynomial and its derivative.
fn horner(coeffs: &[FixBall], z: &FixBall, w: u32) -> (FixBall, FixBall) {
    let mut p = coeffs.last().cloned().unwrap_or_else(FixBall::zero);
    let mut dp = FixBall::zero();
    for a in coeffs.iter().rev().skip(1) {
        dp = add_opt(&dp.mul(z, w), &p);
        p = add_opt(&p.mul(z, w), a);
    }
    (p, dp)
}

fn add_opt(a: &FixBall, b: &FixBall) -> FixBall {
    if b.is_exact_zero() {
        a.clone()
    } else if a.is_exact_zero() {
        b.clone()
    } else {
        a.add(b)
    }
}

fn neg(a: &FixBall) -> FixBall {
    FixBall { re: -&a.re, im: -&a.im, rad: a.rad }
}

impl PreparedMap {
    fn new(map: &MapSpec, w: u32) -> Self {
        let mut ticks = 0;
        let num = map.numerator.iter().map(|c| prepare_coefficient(c, w, &mut ticks)).collect();
        let den = map.denominator.iter().map(|c| prepare_coefficient(c, w, &mut ticks)).collect();
        PreparedMap { work_bits: w, num, den, ticks }
    }

    pub fn work_bits(&self) -> u32 {
        self.work_bits
    }

    /// Oracle ticks spent preparing the coefficients.
    pub fn oracle_ticks(&self) -> u64 {
        self.ticks
    }

    /// `(f(z), f'(z))` as balls.
    pub(crate) fn eval_fix(&self, z: &FixBall) -> Result<(FixBall, FixBall), EvalError> {
        let w = self.work_bits;
        let (p, dp) = horner(&self.num, z, w);
        if self.den.is_empty() {
            return Ok((p, dp));
        }
        let (q, dq) = horner(&self.den, z, w);
        let inv = q.recip(w).ok_or(EvalError::DenominatorVanishes)?;
        let f = p.mul(&inv, w);
        let top = add_opt(&dp.mul(&q, w), &neg(&p.mul(&dq, w)));
        let df = top.mul(&inv.mul(&inv, w), w);
        Ok((f, df))
    }

    pub fn eval_f(&self, z: &Ball) -> Result<Ball, EvalError> {
        let w = self.work_bits;
        Ok(self.eval_fix(&FixBall::from_ball(z, w))?.0.to_ball(w))
    }

    pub fn eval_df(&self, z: &Ball) -> Result<Ball, EvalError> {
        let w = self.work_bits;
        Ok(self.eval_fix(&FixBall::from_ball(z, w))?.1.to_ball(w))
    }
}

/// Ball containing `f(x)` for all `x` in `z`.
pub fn eval_f(map: &MapSpec, z: &Ball, work_bits: u32) -> Result<Ball, EvalError> {
    map.prepare(work_bits).eval_f(z)
}

/// Ball containing `f'(x)` for all `x` in `z`.
pub fn eval_df(map: &MapSpec, z: &Ball, work_bits: u32) -> Result<Ball, EvalError> {
    map.prepare(work_bits).eval_df(z)
}

/// One orbit step: `p` encloses `f^i(z)`, `deriv` encloses `Df^i(z)`.
#[derive(Clone, Debug)]
pub struct OrbitPoint {
    pub index: u32,
    pub p: Ball,
    pub deriv: Ball,
    /// Lower bound on `|Df^i(z)|`.
    pub d_lo: Dyadic,
    /// Upper bound on `|Df^i(z)|`.
    pub d_hi: Dyadic,
}

/// Internal orbit step at a fixed scale.
pub(crate) struct Step<'a> {
    pub index: u32,
    pub p: &'a FixBall,
    pub deriv: &'a FixBall,
    pub work_bits: u32,
}

impl Step<'_> {
    /// Bounds on `|Df^i(z)|` as dyadics.
    pub fn deriv_bounds(&self) -> (Dyadic, Dyadic) {
        let (lo, hi) = self.deriv.abs_bounds_ulps();
        let e = -(self.work_bits as i64);
        (Dyadic::new(lo, e), Dyadic::new(hi, e))
    }
}

/// Number of bits `k` with `2^-k <= target`, i.e. `ceil(log2(1/target))`.
pub fn precision_bits(target: &Dyadic) -> u32 {
    assert!(target.is_positive(), "precision target must be positive");
    // smallest k with 2^-k <= target
    let msb = target.msb().unwrap(); // 2^(msb-1) <= target < 2^msb
    let k = 1 - msb;
    let k = if Dyadic::pow2(-k) <= *target { k } else { k + 1 };
    k.max(0) as u32
}

/// `ceil(log2(x + 2))` for `x >= 0`.
pub fn growth_bits(r_hat: &Dyadic) -> u32 {
    let x = r_hat + &Dyadic::from_int(2);
    let c = x.ceil_int();
    let bits = (&c - BigInt::from(1)).bits() as u32; // ceil(log2 c) for c >= 1
    bits.max(1)
}

/// Initial working precision of the schedule.
pub fn initial_work_bits(target_bits: u32, i_max: u32, r_hat: &Dyadic) -> u32 {
    2 * target_bits + i_max * growth_bits(r_hat) + 16
}

/// Number of precision doublings before giving up.
pub const MAX_RETRIES: u32 = 4;

/// Result of [`run_orbit`].
pub(crate) struct OrbitRun<T> {
    pub outcome: Option<T>,
    pub steps: u32,
    pub work_bits: u32,
    pub ticks: u64,
}

/// Iterate from `z` for up to `i_max` steps, calling `visit` on each step in
/// order until it returns `Some`. A step whose orbit or derivative ball is
/// wider than `target` restarts the whole run at doubled precision; `visit`
/// then sees index 1 again.
pub(crate) fn run_orbit<T>(
    prepare: &dyn Fn(u32) -> std::sync::Arc<PreparedMap>,
    z: &ComplexDyadic,
    i_max: u32,
    target: &Dyadic,
    r_hat: &Dyadic,
    mut visit: impl FnMut(&Step) -> Option<T>,
) -> Result<OrbitRun<T>, EvalError> {
    let tb = precision_bits(target);
    let mut w = initial_work_bits(tb, i_max, r_hat);
    let mut ticks = 0;
    for retry in 0..=MAX_RETRIES {
        if retry > 0 {
            w *= 2;
        }
        let map = prepare(w);
        ticks += map.oracle_ticks();
        let target_ulps = target.mul_pow2(w as i64).to_f64();
        let mut p = FixBall::from_dyadic(z, w);
        let mut deriv = FixBall::one(w);
        let mut ok = true;
        let mut i = 0;
        while i < i_max {
            let (fp, dfp) = match map.eval_fix(&p) {
                Ok(v) => v,
                Err(EvalError::DenominatorVanishes) if retry < MAX_RETRIES => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            };
            deriv = deriv.mul(&dfp, w);
            p = fp;
            i += 1;
            // d is the midpoint of the lo/hi bounds, off by at most rad + 1.5 ulps
            if !(p.rad <= target_ulps && deriv.rad + 2.0 <= target_ulps) {
                ok = false;
                break;
            }
            let step = Step { index: i, p: &p, deriv: &deriv, work_bits: w };
            if let Some(t) = visit(&step) {
                return Ok(OrbitRun { outcome: Some(t), steps: i, work_bits: w, ticks });
            }
        }
        if ok {
            return Ok(OrbitRun { outcome: None, steps: i, work_bits: w, ticks });
        }
    }
    Err(EvalError::PrecisionExhausted { retries: MAX_RETRIES, work_bits: w })
}

/// Orbit points `f^i(z)` and derivatives `Df^i(z)` for `i = 1..=i_max`, each
/// with width at most `target`.
pub fn orbit_with_derivative(
    map: &MapSpec,
    z: &ComplexDyadic,
    i_max: u32,
    target: &Dyadic,
    r_hat: &Dyadic,
) -> Result<Vec<OrbitPoint>, EvalError> {
    let mut points = Vec::new();
    let prepare = |w: u32| std::sync::Arc::new(map.prepare(w));
    run_orbit::<()>(&prepare, z, i_max, target, r_hat, |s| {
        if s.index == 1 {
            points.clear();
        }
        let (d_lo, d_hi) = s.deriv_bounds();
        points.push(OrbitPoint { index: s.index, p: s.p.to_ball(s.work_bits), deriv: s.deriv.to_ball(s.work_bits), d_lo, d_hi });
        None
    })?;
    Ok(points)
}

/// Upper bound on `|f'|` over the `inflate_by`-neighborhood of `cover`.
///
/// The neighborhood is over-approximated by whole boxes at a resolution no
/// finer than needed, then each box is evaluated as a ball and split into
/// quarters while the bound is loose.
pub fn sup_df_on_cover(map: &MapSpec, cover: &BoxCover, inflate_by: &Dyadic) -> Result<Dyadic, EvalError> {
    if cover.is_empty() {
        return Err(EvalError::EmptyCover);
    }
    // boxes much smaller than the inflation radius only add work
    let target_m = if inflate_by.is_zero() { cover.resolution() } else { (precision_bits(inflate_by) + 3).min(cover.resolution()) };
    let coarse = cover.coarsen(target_m);
    let region = coarse.inflate(inflate_by);
    let w = 64;
    let prepared = map.prepare(w);
    let m = region.resolution() as i64;
    let mut best = Dyadic::zero();
    for (i, j) in region.boxes() {
        let corner = ComplexDyadic::new(Dyadic::new(i, -m), Dyadic::new(j, -m));
        let hi = sup_df_rect(&prepared, &corner, m, 0)?;
        if hi > best {
            best = hi;
        }
    }
    Ok(best)
}

const SUP_SPLIT_DEPTH: u32 = 3;

/// Upper bound on `|f'|` over the square with lower-left `corner` and side `2^-m`.
fn sup_df_rect(map: &PreparedMap, corner: &ComplexDyadic, m: i64, depth: u32) -> Result<Dyadic, EvalError> {
    let half = Dyadic::pow2(-m - 1);
    let center = ComplexDyadic::new(&corner.re + &half, &corner.im + &half);
    // half diagonal = 2^(-m-1) sqrt 2 < 2^(-m-1) * 1.5
    let radius = Dyadic::new(3, -m - 2);
    let w = map.work_bits();
    let ball = FixBall::from_ball(&Ball::new(center.clone(), radius), w);
    let (_, df) = map.eval_fix(&ball)?;
    let (lo, hi) = df.abs_bounds_ulps();
    let e = -(w as i64);
    let hi = Dyadic::new(hi, e);
    let lo = Dyadic::new(lo, e);
    // stop when the bound is within 1/64 relative of the lower estimate
    if depth >= SUP_SPLIT_DEPTH || &hi - &lo <= hi.mul_pow2(-6) {
        return Ok(hi);
    }
    let mut best = Dyadic::zero();
    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let c = ComplexDyadic::new(&corner.re + &Dyadic::new(dx, -m - 1), &corner.im + &Dyadic::new(dy, -m - 1));
        let v = sup_df_rect(map, &c, m + 1, depth + 1)?;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> MapSpec {
        MapSpec::quadratic(ComplexDyadic::zero())
    }

    fn z2m2() -> MapSpec {
        MapSpec::quadratic(ComplexDyadic::real(Dyadic::from_int(-2)))
    }

    fn pt(re: f64, im: f64) -> Ball {
        Ball::exact(ComplexDyadic::from_f64(re, im))
    }

    #[test]
    fn eval_examples() {
        let f = eval_f(&z2(), &pt(1.0, 0.0), 30).unwrap();
        assert!(f.contains_point(&ComplexDyadic::one()));
        let df = eval_df(&z2(), &pt(1.0, 0.0), 30).unwrap();
        assert!(df.contains_point(&ComplexDyadic::real(Dyadic::from_int(2))));
        let f = eval_f(&z2m2(), &pt(2.0, 0.0), 30).unwrap();
        assert!(f.contains_point(&ComplexDyadic::real(Dyadic::from_int(2))));
        let zi = MapSpec::quadratic(ComplexDyadic::new(Dyadic::zero(), Dyadic::one()));
        let f = eval_f(&zi, &pt(0.0, 0.0), 53).unwrap();
        assert!(f.contains_point(&ComplexDyadic::new(Dyadic::zero(), Dyadic::one())));
        assert!(f.radius <= Dyadic::pow2(-50));
    }

    #[test]
    fn orbit_fixed_points() {
        let target = Dyadic::pow2(-20);
        let pts = orbit_with_derivative(&z2m2(), &ComplexDyadic::real(Dyadic::from_int(2)), 3, &target, &Dyadic::from_int(5)).unwrap();
        assert_eq!(pts.len(), 3);
        for (k, p) in pts.iter().enumerate() {
            let d = Dyadic::from_int(4i64.pow(k as u32 + 1));
            assert!(p.p.contains_point(&ComplexDyadic::real(Dyadic::from_int(2))));
            assert!(p.d_lo <= d && d <= p.d_hi);
            assert!(&p.d_hi - &p.d_lo <= Dyadic::pow2(-19));
        }
        let pts = orbit_with_derivative(&z2(), &ComplexDyadic::one(), 5, &target, &Dyadic::from_int(3)).unwrap();
        for (k, p) in pts.iter().enumerate() {
            let d = Dyadic::pow2(k as i64 + 1);
            assert!(p.d_lo <= d && d <= p.d_hi);
        }
        let pts = orbit_with_derivative(&z2m2(), &ComplexDyadic::zero(), 3, &target, &Dyadic::from_int(5)).unwrap();
        let expect = [-2, 2, 2];
        for (p, e) in pts.iter().zip(expect) {
            assert!(p.p.contains_point(&ComplexDyadic::real(Dyadic::from_int(e))));
            assert!(p.d_lo.is_zero());
            assert!(p.d_hi <= Dyadic::pow2(-19));
        }
    }

    #[test]
    fn rational_map_derivative() {
        // f(z) = (z^2 + 1) / (2z): f'(z) = 1/2 - 1/(2 z^2)
        let one = Coefficient::real(Dyadic::one());
        let f = MapSpec::rational(vec![one.clone(), Coefficient::zero(), one], vec![Coefficient::zero(), Coefficient::real(Dyadic::from_int(2))]).unwrap();
        let z = pt(2.0, 0.0);
        let v = eval_f(&f, &z, 50).unwrap();
        assert!(v.contains_point(&ComplexDyadic::from_f64(1.25, 0.0)));
        let d = eval_df(&f, &z, 50).unwrap();
        assert!(d.contains_point(&ComplexDyadic::from_f64(0.375, 0.0)));
        assert_eq!(eval_f(&f, &pt(0.0, 0.0), 50).unwrap_err(), EvalError::DenominatorVanishes);
    }

    #[test]
    fn precision_bits_values() {
        assert_eq!(precision_bits(&Dyadic::pow2(-11)), 11);
        assert_eq!(precision_bits(&Dyadic::new(3, -12)), 11);
        assert_eq!(precision_bits(&Dyadic::one()), 0);
        assert_eq!(growth_bits(&Dyadic::from_int(2)), 2);
        assert_eq!(growth_bits(&Dyadic::from_f64(2.5)), 3);
    }

    #[test]
    fn map_file_roundtrip() {
        let m = MapSpec::quadratic(ComplexDyadic::new(Dyadic::from_f64(-0.75), Dyadic::pow2(-3)));
        let back = MapSpec::from_json(&m.to_json()).unwrap();
        assert_eq!(back.to_json(), m.to_json());
        assert!(MapSpec::from_json(r#"{"kind":"polynomial","degree":1,"numerator":["0","1"]}"#).is_err());
        assert!(MapSpec::from_json(r#"{"kind":"polynomial","degree":2,"numerator":["0","1","0"]}"#).is_err());
    }
}
