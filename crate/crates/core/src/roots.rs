//! Floating-point polynomial root finding for preimages and critical points.
//!
//! Nothing here is rigorous. Results seed covers and point clouds; critical
//! points are enclosed rigorously afterwards in [`crate::certificate`].

use num_complex::Complex64;

use crate::error::EvalError;
use crate::map::{MapKind, MapSpec};

const MAX_ITER: usize = 500;

/// Drop leading (highest degree) coefficients that are exactly zero.
fn trim(mut c: Vec<Complex64>) -> Vec<Complex64> {
    while c.len() > 1 && *c.last().unwrap() == Complex64::new(0.0, 0.0) {
        c.pop();
    }
    c
}

fn eval_poly(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// All roots of the polynomial with coefficients `c` (lowest degree first).
pub fn poly_roots(c: &[Complex64]) -> Result<Vec<Complex64>, EvalError> {
    let c = trim(c.to_vec());
    let d = c.len() - 1;
    match d {
        0 => Ok(Vec::new()),
        1 => Ok(vec![-c[0] / c[1]]),
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - 4.0 * a * cc).sqrt();
            // pick the sign that avoids cancellation
            let q = if (b.conj() * disc).re >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
            if q == Complex64::new(0.0, 0.0) {
                return Ok(vec![q, q]);
            }
            Ok(vec![q / a, cc / q])
        }
        _ => aberth(&c),
    }
}

/// Aberth-Ehrlich simultaneous iteration.
fn aberth(c: &[Complex64]) -> Result<Vec<Complex64>, EvalError> {
    let d = c.len() - 1;
    let lead = c[d].norm();
    // Cauchy bound for the starting circle
    let radius = 1.0 + c[..d].iter().map(|a| a.norm() / lead).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..d).map(|k| Complex64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / d as f64)).collect();
    let scale = c.iter().map(|a| a.norm()).sum::<f64>();
    for _ in 0..MAX_ITER {
        let mut max_step: f64 = 0.0;
        for k in 0..d {
            let (p, dp) = eval_poly(c, z[k]);
            if p.norm() <= 1e-15 * scale * radius.powi(d as i32).max(1.0) * 1e-3 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..d).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let step = ratio / (1.0 - ratio * sum);
            if !step.re.is_finite() || !step.im.is_finite() {
                return Err(EvalError::RootFindingFailure);
            }
            z[k] -= step;
            max_step = max_step.max(step.norm() / z[k].norm().max(1.0));
        }
        if max_step < 1e-15 {
            return Ok(z);
        }
    }
    Err(EvalError::RootFindingFailure)
}

/// Coefficients of `P - w Q` (the preimage equation `f(z) = w`).
fn preimage_equation(num: &[Complex64], den: &[Complex64], w: Complex64) -> Vec<Complex64> {
    let n = num.len().max(den.len());
    (0..n)
        .map(|k| {
            let p = num.get(k).copied().unwrap_or_default();
            let q = den.get(k).copied().unwrap_or_default();
            p - w * q
        })
        .collect()
}

/// Floating-point coefficients of a map, prepared once.
#[derive(Clone, Debug)]
pub struct MapF64 {
    pub num: Vec<Complex64>,
    pub den: Vec<Complex64>,
}

impl MapF64 {
    pub fn new(map: &MapSpec) -> Self {
        let (num, den) = map.coefficients_f64();
        let den = if map.kind == MapKind::Polynomial { Vec::new() } else { den };
        MapF64 { num, den }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (p, _) = eval_poly(&self.num, z);
        if self.den.is_empty() {
            return p;
        }
        p / eval_poly(&self.den, z).0
    }

    /// `(f(z), f'(z))`.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let (p, dp) = eval_poly(&self.num, z);
        if self.den.is_empty() {
            return (p, dp);
        }
        let (q, dq) = eval_poly(&self.den, z);
        (p / q, (dp * q - p * dq) / (q * q))
    }

    /// All preimages of `w`.
    pub fn preimages(&self, w: Complex64) -> Result<Vec<Complex64>, EvalError> {
        if self.den.is_empty() {
            let mut c = self.num.clone();
            c[0] -= w;
            return poly_roots(&c);
        }
        poly_roots(&preimage_equation(&self.num, &self.den, w))
    }

    /// Finite critical points: zeros of `P'Q - PQ'`.
    pub fn critical_points(&self) -> Result<Vec<Complex64>, EvalError> {
        poly_roots(&self.critical_polynomial())
    }

    /// Coefficients of `P'` (polynomial case) or `P'Q - PQ'`.
    pub fn critical_polynomial(&self) -> Vec<Complex64> {
        let deriv = |c: &[Complex64]| -> Vec<Complex64> { c.iter().enumerate().skip(1).map(|(k, a)| a * k as f64).collect() };
        if self.den.is_empty() {
            return deriv(&self.num);
        }
        let mul = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::default(); (a.len() + b.len()).saturating_sub(1)];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        };
        let l = mul(&deriv(&self.num), &self.den);
        let r = mul(&self.num, &deriv(&self.den));
        (0..l.len().max(r.len())).map(|k| l.get(k).copied().unwrap_or_default() - r.get(k).copied().unwrap_or_default()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_roots() {
        let r = poly_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-15 && (re[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cubic_roots() {
        // (z - 1)(z + 2)(z - i)
        let r = poly_roots(&[c(0.0, 2.0), c(-2.0, -1.0), c(1.0, -1.0), c(1.0, 0.0)]).unwrap();
        for want in [c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 1.0)] {
            assert!(r.iter().any(|z| (z - want).norm() < 1e-12), "{want} missing from {r:?}");
        }
    }
}
