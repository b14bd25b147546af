//! Fixed-point complex balls for the inner iteration loop.
//!
//! A [`FixBall`] stores its center as two integers at an implicit scale
//! `2^-w` and its radius as an `f64` count of ulps (units of `2^-w`). The
//! radius is always rounded up. This is the same arithmetic as
//! [`crate::ball`] with the scale factored out of every operation.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::ball::Ball;
use crate::dyadic::{shr_round, ComplexDyadic, Dyadic, Round};

/// Relative inflation absorbing the rounding of a few `f64` operations.
const UP: f64 = 1.0 + 1.0 / (1u64 << 45) as f64;

/// Upper bound on `x` as an `f64`.
pub(crate) fn dyadic_to_f64_up(x: &Dyadic) -> f64 {
    let f = x.to_f64();
    if f.is_finite() && Dyadic::from_f64(f) >= *x {
        f
    } else {
        f.next_up()
    }
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// `|x| 2^-w` as an `f64`, within a relative `2^-50`.
fn magnitude_f64(x: &BigInt, w: u32) -> f64 {
    let b = x.bits();
    let shift = b.saturating_sub(62);
    let top = (x.magnitude() >> shift).to_f64().unwrap_or(f64::INFINITY);
    let e = shift as i64 - w as i64;
    // split the scaling so neither factor leaves the f64 range
    let h = e / 2;
    top * 2f64.powi(h as i32) * 2f64.powi((e - h) as i32)
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct FixBall {
    pub re: BigInt,
    pub im: BigInt,
    /// Radius in ulps.
    pub rad: f64,
}

impl FixBall {
    pub fn zero() -> Self {
        FixBall { re: BigInt::zero(), im: BigInt::zero(), rad: 0.0 }
    }

    /// The exact value 1 at scale `w`.
    pub fn one(w: u32) -> Self {
        FixBall { re: BigInt::one() << w, im: BigInt::zero(), rad: 0.0 }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.rad == 0.0 && self.re.is_zero() && self.im.is_zero()
    }

    fn is_exact_one(&self, w: u32) -> bool {
        self.rad == 0.0 && self.im.is_zero() && self.re.sign() == Sign::Plus && self.re.bits() == w as u64 + 1 && self.re.trailing_zeros() == Some(w as u64)
    }

    /// Ball enclosing `z` at scale `w`.
    pub fn from_dyadic(z: &ComplexDyadic, w: u32) -> Self {
        Self::from_ball(&Ball::exact(z.clone()), w)
    }

    pub fn from_ball(b: &Ball, w: u32) -> Self {
        let wi = w as i64;
        let re = b.center.re.round_to(wi, Round::Nearest);
        let im = b.center.im.round_to(wi, Round::Nearest);
        let moved = re != b.center.re || im != b.center.im;
        let mut rad = if b.radius.is_zero() { 0.0 } else { dyadic_to_f64_up(&b.radius.mul_pow2(wi)) };
        if moved {
            rad = (rad + 1.0) * UP;
        }
        FixBall { re: re.scaled_int(wi).unwrap(), im: im.scaled_int(wi).unwrap(), rad }
    }

    pub fn center(&self, w: u32) -> ComplexDyadic {
        let e = -(w as i64);
        ComplexDyadic::new(Dyadic::new(self.re.clone(), e), Dyadic::new(self.im.clone(), e))
    }

    /// Radius as a dyadic upper bound.
    pub fn radius(&self, w: u32) -> Dyadic {
        if self.rad == 0.0 {
            Dyadic::zero()
        } else {
            Dyadic::from_f64(self.rad).mul_pow2(-(w as i64))
        }
    }

    pub fn to_ball(&self, w: u32) -> Ball {
        Ball::new(self.center(w), self.radius(w))
    }

    /// Upper bound on `|center|` in value units.
    fn abs_up(&self, w: u32) -> f64 {
        let a = magnitude_f64(&self.re, w);
        let b = magnitude_f64(&self.im, w);
        (a * a + b * b).sqrt() * UP * UP
    }

    pub fn add(&self, other: &FixBall) -> FixBall {
        let rad = if self.rad == 0.0 && other.rad == 0.0 { 0.0 } else { (self.rad + other.rad) * UP };
        FixBall { re: &self.re + &other.re, im: &self.im + &other.im, rad }
    }

    pub fn mul(&self, other: &FixBall, w: u32) -> FixBall {
        if self.is_exact_zero() || other.is_exact_zero() {
            return FixBall::zero();
        }
        if other.is_exact_one(w) {
            return self.clone();
        }
        if self.is_exact_one(w) {
            return other.clone();
        }
        let pr = &self.re * &other.re - &self.im * &other.im;
        let pi = &self.re * &other.im + &self.im * &other.re;
        let re = shr_round(&pr, w as u64, Round::Nearest);
        let im = shr_round(&pi, w as u64, Round::Nearest);
        // |a| beta + |b| alpha + alpha beta, with alpha, beta in ulps and |a|, |b| in value units
        let mut rad = 1.0;
        if other.rad != 0.0 {
            rad += self.abs_up(w) * other.rad;
        }
        if self.rad != 0.0 {
            rad += other.abs_up(w) * self.rad;
        }
        if self.rad != 0.0 && other.rad != 0.0 {
            rad += self.rad * (other.rad * UP * 2f64.powi(-(w.min(1000) as i32)));
        }
        FixBall { re, im, rad: rad * UP }
    }

    /// Exact integer bounds on `|center|` in ulps.
    fn abs_int_bounds(&self) -> (BigInt, BigInt) {
        let n = &self.re * &self.re + &self.im * &self.im;
        let lo = n.sqrt();
        let hi = if &lo * &lo == n { lo.clone() } else { &lo + 1 };
        (lo, hi)
    }

    /// Bounds `lo <= |x| <= hi` over the ball, in ulps.
    pub fn abs_bounds_ulps(&self) -> (BigInt, BigInt) {
        let (clo, chi) = self.abs_int_bounds();
        if self.rad == 0.0 {
            return (clo, chi);
        }
        let r = Dyadic::from_f64(self.rad).ceil_int();
        let lo = &clo - &r;
        let lo = if lo.is_negative() { BigInt::zero() } else { lo };
        (lo, chi + r)
    }

    /// Reciprocal ball; `None` when the ball may contain zero.
    pub fn recip(&self, w: u32) -> Option<FixBall> {
        let (clo, _) = self.abs_int_bounds();
        let r = self.rad * UP;
        // also rejects NaN
        if bigint_to_f64(&clo) / UP <= r || r.is_nan() {
            return None;
        }
        // value 1/x scaled by 2^w is conj(c) 2^(2w) / |c|^2 with c in ulps
        let n = &self.re * &self.re + &self.im * &self.im;
        let two_w = 2 * w as u64;
        let half = &n >> 1u32;
        let div_near = |x: &BigInt| -> BigInt {
            let num: BigInt = (x << two_w) + &half;
            num_integer::Integer::div_floor(&num, &n)
        };
        let re = div_near(&self.re);
        let im = div_near(&(-&self.im));
        // radius r/(|c|^2 - r^2) in value units becomes r 2^(2w)/(clo^2 - r^2) ulps
        let cl = magnitude_f64(&clo, w) / UP;
        // t = r / |c| < 1, computed in ulps so no scaling is involved
        let t = (r / (bigint_to_f64(&clo) / UP)) * UP;
        let denom = (cl * cl * (1.0 - t * t)) / (UP * UP);
        if denom <= 0.0 || denom.is_nan() {
            return None;
        }
        let rad = (r / denom + 1.0) * UP;
        Some(FixBall { re, im, rad })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::ball_mul;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_detection() {
        let w = 40;
        assert!(FixBall::one(w).is_exact_one(w));
        assert!(!FixBall::one(w).is_exact_one(w + 1));
        let x = FixBall::from_dyadic(&ComplexDyadic::from_f64(0.3, 0.7), w);
        assert_eq!(x.mul(&FixBall::one(w), w), x);
    }

    #[test]
    fn mul_agrees_with_ball_mul() {
        let w = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = Ball::new(ComplexDyadic::from_f64(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)), Dyadic::from_f64(rng.gen_range(0.0..1e-6)));
            let b = Ball::new(ComplexDyadic::from_f64(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)), Dyadic::from_f64(rng.gen_range(0.0..1e-6)));
            let fa = FixBall::from_ball(&a, w);
            let fb = FixBall::from_ball(&b, w);
            let fp = fa.mul(&fb, w).to_ball(w);
            let bp = ball_mul(&a, &b, w);
            // both enclose the exact product of centers
            let exact = &a.center * &b.center;
            assert!(fp.contains_point(&exact));
            assert!(bp.contains_point(&exact));
            let ratio = fp.radius.to_f64() / bp.radius.to_f64();
            assert!(ratio < 1.01 && ratio > 0.99, "{ratio}");
        }
    }

    #[test]
    fn recip_encloses() {
        let w = 50;
        let x = ComplexDyadic::from_f64(0.6, -0.9);
        let b = FixBall { rad: 1000.0, ..FixBall::from_dyadic(&x, w) };
        let inv = b.recip(w).unwrap().to_ball(w);
        let n = x.norm_sqr();
        let exact = ComplexDyadic::new(x.re.div_round(&n, 80, Round::Nearest), (-&x.im).div_round(&n, 80, Round::Nearest));
        assert!(inv.contains_point(&exact));
        assert!(FixBall { rad: 1e30, ..FixBall::from_dyadic(&x, w) }.recip(w).is_none());
    }
}
