//! Complex balls with dyadic centers and outward-rounded radii.
//!
//! A [`Ball`] is a closed Euclidean disk. Every operation returns a ball that
//! contains the exact image of every point of its inputs. Centers are rounded
//! to a requested number of fractional bits; radii carry a short mantissa and
//! are only ever rounded up.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dyadic::{ComplexDyadic, Dyadic, Round};
use crate::error::EvalError;

/// Mantissa cap for radii.
pub const RADIUS_BITS: u32 = 32;

/// Significant bits used for square roots in radius bounds.
const SQRT_BITS: u32 = 40;

/// Round a non-negative radius up to [`RADIUS_BITS`] significant bits.
pub fn round_radius(r: &Dyadic) -> Dyadic {
    r.round_mantissa(RADIUS_BITS, Round::Ceil)
}

/// A closed disk `{x : |x - center| <= radius}`.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Ball {
    pub center: ComplexDyadic,
    pub radius: Dyadic,
}

impl Ball {
    pub fn new(center: ComplexDyadic, radius: Dyadic) -> Self {
        assert!(!radius.is_negative(), "negative ball radius");
        Ball { center, radius: round_radius(&radius) }
    }

    pub fn exact(center: ComplexDyadic) -> Self {
        Ball { center, radius: Dyadic::zero() }
    }

    pub fn real(x: Dyadic) -> Self {
        Ball::exact(ComplexDyadic::real(x))
    }

    pub fn zero() -> Self {
        Ball::default()
    }

    pub fn is_exact(&self) -> bool {
        self.radius.is_zero()
    }

    /// Exact membership test (boundary counts as inside).
    pub fn contains_point(&self, z: &ComplexDyadic) -> bool {
        (z - &self.center).norm_sqr() <= &self.radius * &self.radius
    }

    /// Whether `other` is a subset of `self` (sufficient test).
    pub fn contains_ball(&self, other: &Ball) -> bool {
        if other.radius > self.radius {
            return false;
        }
        let slack = &self.radius - &other.radius;
        (&other.center - &self.center).norm_sqr() <= &slack * &slack
    }

    /// Whether the ball contains 0.
    pub fn contains_zero(&self) -> bool {
        self.contains_point(&ComplexDyadic::zero())
    }

    pub fn neg(&self) -> Ball {
        Ball { center: -&self.center, radius: self.radius.clone() }
    }
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ball({:?} +/- {:?})", self.center, self.radius)
    }
}

/// Upper bound on the distance moved by rounding `z` to `bits` fractional bits.
fn displacement(exact: &ComplexDyadic, rounded: &ComplexDyadic) -> Dyadic {
    let d = exact - rounded;
    if d.is_zero() {
        Dyadic::zero()
    } else {
        d.norm_sqr().sqrt_ceil(SQRT_BITS)
    }
}

fn rounded(center: ComplexDyadic, radius: Dyadic, work_bits: u32) -> Ball {
    let c = center.round_to(work_bits as i64);
    let r = radius + displacement(&center, &c);
    Ball { center: c, radius: round_radius(&r) }
}

/// Enlarge `a` so that its center has at most `target_bits` fractional bits.
pub fn round_ball(a: &Ball, target_bits: u32) -> Ball {
    if a.center.frac_bits() <= target_bits as i64 {
        return a.clone();
    }
    rounded(a.center.clone(), a.radius.clone(), target_bits)
}

pub fn ball_add(a: &Ball, b: &Ball, work_bits: u32) -> Ball {
    rounded(&a.center + &b.center, &a.radius + &b.radius, work_bits)
}

pub fn ball_sub(a: &Ball, b: &Ball, work_bits: u32) -> Ball {
    rounded(&a.center - &b.center, &a.radius + &b.radius, work_bits)
}

/// Product ball: `|xy - ab| <= |a| rb + |b| ra + ra rb`.
pub fn ball_mul(a: &Ball, b: &Ball, work_bits: u32) -> Ball {
    assert!(work_bits >= 1, "ball_mul needs at least one working bit");
    let center = &a.center * &b.center;
    let mut radius = Dyadic::zero();
    if !b.radius.is_zero() {
        radius = radius + a.center.abs_hi(SQRT_BITS) * &b.radius;
    }
    if !a.radius.is_zero() {
        radius = radius + b.center.abs_hi(SQRT_BITS) * &a.radius;
    }
    radius = radius + &a.radius * &b.radius;
    rounded(center, radius, work_bits)
}

/// Multiply by an exact dyadic scalar.
pub fn ball_scale(a: &Ball, s: &Dyadic, work_bits: u32) -> Ball {
    rounded(a.center.scale(s), &a.radius * &s.abs(), work_bits)
}

/// Ball containing `1/x` for all `x` in `a`.
///
/// The image of the disk `|x - c| <= r` (with `r < |c|`) under inversion is
/// the disk with center `conj(c) / (|c|^2 - r^2)` and radius `r / (|c|^2 - r^2)`.
pub fn ball_recip(a: &Ball, work_bits: u32) -> Result<Ball, EvalError> {
    let rr = &a.radius * &a.radius;
    let denom = a.center.norm_sqr() - rr;
    if !denom.is_positive() {
        return Err(EvalError::DenominatorVanishes);
    }
    let w = work_bits as i64;
    let conj = a.center.conj();
    let re = conj.re.div_round(&denom, w, Round::Nearest);
    let im = conj.im.div_round(&denom, w, Round::Nearest);
    // each component moves by at most half an ulp
    let disp = Dyadic::pow2(-w);
    let r = a.radius.div_round(&denom, w + 8, Round::Ceil);
    Ok(Ball { center: ComplexDyadic::new(re, im), radius: round_radius(&(r + disp)) })
}

pub fn ball_div(a: &Ball, b: &Ball, work_bits: u32) -> Result<Ball, EvalError> {
    let inv = ball_recip(b, work_bits + 8)?;
    Ok(ball_mul(a, &inv, work_bits))
}

/// Bounds `lo <= |x| <= hi` for all `x` in `a`, with `SQRT_BITS` significant bits.
pub fn ball_abs_bounds(a: &Ball) -> (Dyadic, Dyadic) {
    ball_abs_bounds_bits(a, 64)
}

/// As [`ball_abs_bounds`] with `bits` significant bits in the modulus.
pub fn ball_abs_bounds_bits(a: &Ball, bits: u32) -> (Dyadic, Dyadic) {
    let n = a.center.norm_sqr();
    let (clo, chi) = n.sqrt_bounds_rel(bits);
    let lo = clo - &a.radius;
    let lo = if lo.is_negative() { Dyadic::zero() } else { lo };
    (lo, chi + &a.radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cd(re: f64, im: f64) -> ComplexDyadic {
        ComplexDyadic::from_f64(re, im)
    }

    #[test]
    fn mul_scaling_disk() {
        let a = Ball::new(cd(1.0, 0.0), Dyadic::pow2(-3));
        let b = Ball::exact(cd(2.0, 0.0));
        let p = ball_mul(&a, &b, 20);
        assert_eq!(p.center, cd(2.0, 0.0));
        assert!(p.radius >= Dyadic::pow2(-2));
    }

    #[test]
    fn mul_zero_absorbs() {
        let a = Ball::zero();
        let b = Ball::new(cd(0.3, -1.7), Dyadic::pow2(-5));
        let p = ball_mul(&a, &b, 20);
        assert!(p.center.is_zero());
        assert!(p.contains_zero());
    }

    #[test]
    fn abs_bounds_examples() {
        let (lo, hi) = ball_abs_bounds(&Ball::exact(cd(3.0, 4.0)));
        assert_eq!(lo, Dyadic::from_int(5));
        assert_eq!(hi, Dyadic::from_int(5));
        let (lo, hi) = ball_abs_bounds(&Ball::new(ComplexDyadic::zero(), Dyadic::one()));
        assert!(lo.is_zero() && hi >= Dyadic::one());
        let b = Ball::new(cd(1.0, 1.0), Dyadic::pow2(-2));
        let (lo, hi) = ball_abs_bounds(&b);
        let s = 2f64.sqrt();
        assert!(lo.to_f64() <= s - 0.25 + 1e-15 && hi.to_f64() >= s + 0.25 - 1e-15);
        // exact check: (lo + 1/4)^2 <= 2 <= (hi - 1/4)^2
        let q = Dyadic::pow2(-2);
        let l = &lo + &q;
        let h = &hi - &q;
        assert!(&l * &l <= Dyadic::from_int(2) && &h * &h >= Dyadic::from_int(2));
    }

    #[test]
    fn round_ball_examples() {
        let a = Ball::exact(cd(0.5, 0.25));
        assert_eq!(round_ball(&a, 8), a);
        let third = Dyadic::one().div_round(&Dyadic::from_int(3), 64, Round::Nearest);
        let a = Ball::exact(ComplexDyadic::real(third));
        let r8 = round_ball(&a, 8);
        assert!(r8.radius <= Dyadic::pow2(-8));
        assert!(r8.contains_ball(&a));
        let r16 = round_ball(&a, 16);
        assert!(round_ball(&r16, 8).contains_ball(&a));
    }

    #[test]
    fn recip_contains_inverses() {
        let a = Ball::new(cd(0.75, -0.5), Dyadic::pow2(-4));
        let inv = ball_recip(&a, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let t: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let x = ComplexDyadic::new(
                &a.center.re + &Dyadic::from_f64(t.cos() / 16.0 * 0.999),
                &a.center.im + &Dyadic::from_f64(t.sin() / 16.0 * 0.999),
            );
            // 1/x = conj(x)/|x|^2; check |x| * |1/x - c| <= r |x| exactly via
            // |conj(x) - c |x|^2|^2 <= r^2 |x|^4
            let n = x.norm_sqr();
            let diff = &x.conj() - &inv.center.scale(&n);
            assert!(diff.norm_sqr() <= &(&inv.radius * &inv.radius) * &(&n * &n));
        }
        assert_eq!(ball_recip(&Ball::new(cd(0.1, 0.0), Dyadic::pow2(-2)), 20), Err(EvalError::DenominatorVanishes));
    }
}
