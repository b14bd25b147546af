//! The certificate: non-uniform constants of a map, their derived
//! quantities, derivation helpers and a validator.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{ball_abs_bounds, ball_add, ball_mul, ball_sub, Ball};
use crate::cover::{validate_u_cond, BoxCover, JuliaApprox};
use crate::dyadic::{ComplexDyadic, Dyadic, Round};
use crate::error::{CertificateError, Error, ParseError};
use crate::map::{precision_bits, sup_df_on_cover, MapKind, MapSpec};
use crate::oracle::{Coefficient, CoefficientOracle};
use crate::roots::MapF64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Rigorous,
    Heuristic,
    UserAsserted,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Rigorous => "rigorous",
            Provenance::Heuristic => "heuristic",
            Provenance::UserAsserted => "user-asserted",
        })
    }
}

/// A constant with its provenance and a free-text derivation note.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constant {
    pub value: Dyadic,
    pub provenance: Provenance,
    #[serde(default)]
    pub note: String,
}

impl Constant {
    pub fn new(value: Dyadic, provenance: Provenance, note: impl Into<String>) -> Self {
        Constant { value, provenance, note: note.into() }
    }
}

/// One named check with its outcome and a witness string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub witness: String,
}

impl Check {
    pub fn pass(name: &str, witness: impl Into<String>) -> Self {
        Check { name: name.into(), pass: true, witness: witness.into() }
    }

    pub fn fail(name: &str, witness: impl Into<String>) -> Self {
        Check { name: name.into(), pass: false, witness: witness.into() }
    }

    fn of(name: &str, pass: bool, witness: impl Into<String>) -> Self {
        Check { name: name.into(), pass, witness: witness.into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }

    /// Conjunction of all checks.
    pub fn overall(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.witness)?;
        }
        write!(f, "overall: {}", if self.overall() { "pass" } else { "fail" })
    }
}

/// All non-uniform data the decision procedure needs for one map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// Shrinking rate of pullback components, in (0, 1).
    pub lambda: Constant,
    /// Radius of the disks whose pullbacks shrink.
    pub r: Constant,
    /// Critical recurrence bound, in (0, 1). Stored and range-checked only.
    pub mu: Constant,
    /// Neighborhood margin, in (0, r).
    pub eps: Constant,
    pub k1: Constant,
    pub k2: Constant,
    pub c: Constant,
    pub alpha: Constant,
    pub beta: Constant,
    /// Upper bound on `|f'|` over the `r`-neighborhood of the Julia set.
    pub r_hat: Constant,
    /// Radius around orbit exit points known to avoid the postcritical set.
    /// Defaults to `eps`.
    pub koebe_radius: Option<Constant>,
    pub ce_c: Option<Constant>,
    pub ce_gamma: Option<Constant>,
    pub u: BoxCover,
    pub julia_approx: Option<JuliaApprox>,
}

/// Cover stored inline or in a separate file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverRef {
    Inline(String),
    File(String),
}

#[derive(Serialize, Deserialize)]
struct ApproxFile {
    hausdorff: Dyadic,
    cover: CoverRef,
}

#[derive(Serialize, Deserialize)]
struct CertificateFile {
    format: String,
    constants: BTreeMap<String, Constant>,
    u: CoverRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    julia_approx: Option<ApproxFile>,
}

const FORMAT: &str = "certjulia-certificate 1";

const REQUIRED: [&str; 10] = ["lambda", "r", "mu", "eps", "K1", "K2", "C", "alpha", "beta", "R_hat"];

impl Certificate {
    fn named(&self) -> Vec<(&'static str, Option<&Constant>)> {
        vec![
            ("lambda", Some(&self.lambda)),
            ("r", Some(&self.r)),
            ("mu", Some(&self.mu)),
            ("eps", Some(&self.eps)),
            ("K1", Some(&self.k1)),
            ("K2", Some(&self.k2)),
            ("C", Some(&self.c)),
            ("alpha", Some(&self.alpha)),
            ("beta", Some(&self.beta)),
            ("R_hat", Some(&self.r_hat)),
            ("koebe_radius", self.koebe_radius.as_ref()),
            ("ce_C", self.ce_c.as_ref()),
            ("ce_gamma", self.ce_gamma.as_ref()),
        ]
    }

    /// Serialize with covers inline.
    pub fn to_json(&self) -> String {
        self.to_json_with(|_, text| CoverRef::Inline(text))
    }

    /// Serialize, letting `store` decide where each cover goes (`"U"` or
    /// `"julia_approx"`).
    pub fn to_json_with(&self, mut store: impl FnMut(&str, String) -> CoverRef) -> String {
        let constants = self.named().into_iter().filter_map(|(k, v)| v.map(|c| (k.to_string(), c.clone()))).collect();
        let file = CertificateFile {
            format: FORMAT.into(),
            constants,
            u: store("U", self.u.to_text()),
            julia_approx: self.julia_approx.as_ref().map(|a| ApproxFile { hausdorff: a.hausdorff.clone(), cover: store("julia_approx", a.cover.to_text()) }),
        };
        serde_json::to_string_pretty(&file).expect("certificate serializes") + "\n"
    }

    /// Parse; file references are resolved relative to `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self, Error> {
        let mut file: CertificateFile = serde_json::from_str(text)?;
        let err = |m: String| Error::Parse(ParseError::Certificate(m));
        if file.format != FORMAT {
            return Err(err(format!("unknown format `{}`", file.format)));
        }
        let load = |r: &CoverRef| -> Result<BoxCover, Error> {
            let text = match r {
                CoverRef::Inline(t) => t.clone(),
                CoverRef::File(p) => {
                    let path = base.map(|b| b.join(p)).unwrap_or_else(|| p.into());
                    std::fs::read_to_string(&path).map_err(|source| Error::Io { path: path.display().to_string(), source })?
                }
            };
            Ok(BoxCover::from_text(&text)?)
        };
        for k in REQUIRED {
            if !file.constants.contains_key(k) {
                return Err(err(format!("missing constant `{k}`")));
            }
        }
        let mut constants = std::mem::take(&mut file.constants);
        let mut take = |k: &str| constants.remove(k);
        let cert = Certificate {
            lambda: take("lambda").unwrap(),
            r: take("r").unwrap(),
            mu: take("mu").unwrap(),
            eps: take("eps").unwrap(),
            k1: take("K1").unwrap(),
            k2: take("K2").unwrap(),
            c: take("C").unwrap(),
            alpha: take("alpha").unwrap(),
            beta: take("beta").unwrap(),
            r_hat: take("R_hat").unwrap(),
            koebe_radius: take("koebe_radius"),
            ce_c: take("ce_C"),
            ce_gamma: take("ce_gamma"),
            u: load(&file.u)?,
            julia_approx: match &file.julia_approx {
                Some(a) => Some(JuliaApprox { cover: load(&a.cover)?, hausdorff: a.hausdorff.clone() }),
                None => None,
            },
        };
        if let Some(k) = constants.keys().next() {
            return Err(err(format!("unknown constant `{k}`")));
        }
        Ok(cert)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Certificate::from_json(&text, path.parent())
    }

    /// `ceil(log2(1/eps))`: the smallest `n` with `2^-n <= eps`.
    pub fn n0(&self) -> u32 {
        precision_bits(&self.eps.value)
    }

    /// Iteration bound `L(n)`: one more than the smallest `m` with
    /// `lambda^m <= 2^-(n+1)`, so that `lambda^L < 2^-(n+1)`.
    pub fn l_of(&self, n: u32) -> u32 {
        l_of(&self.lambda.value, n)
    }

    /// Upper bound on `K2 C^sqrt(i)`.
    pub fn k2_c_sqrt(&self, i: u32) -> Dyadic {
        &self.k2.value * &c_pow_sqrt_upper(&self.c.value, i)
    }

    /// Upper bound on `K2 C^sqrt(i) 2^(n+1) + 1`.
    pub fn threshold(&self, i: u32, n: u32) -> Dyadic {
        threshold_from(&self.k2_c_sqrt(i), n)
    }

    /// Lower bound on `K1 / (K2 C^sqrt(L(n)) + 1)`.
    pub fn gap_k(&self, n: u32) -> Dyadic {
        gap_from(&self.k1.value, &self.k2_c_sqrt(self.l_of(n)))
    }

    /// Radius of the disk used for the Koebe bound at orbit exits.
    pub fn koebe_radius(&self) -> &Dyadic {
        self.koebe_radius.as_ref().map(|c| &c.value).unwrap_or(&self.eps.value)
    }
}

pub(crate) fn threshold_from(k2c: &Dyadic, n: u32) -> Dyadic {
    k2c.mul_pow2(n as i64 + 1) + Dyadic::one()
}

pub(crate) fn gap_from(k1: &Dyadic, k2c: &Dyadic) -> Dyadic {
    k1.div_rel(&(k2c + &Dyadic::one()), 64, Round::Floor)
}

/// See [`Certificate::l_of`].
pub fn l_of(lambda: &Dyadic, n: u32) -> u32 {
    assert!(lambda.is_positive() && *lambda < Dyadic::one(), "lambda must lie in (0, 1)");
    let bound = Dyadic::pow2(-(n as i64) - 1);
    let mut p = Dyadic::one();
    let mut m = 0;
    // upward-rounded powers: an upper bound at or below the target is a proof
    while p > bound {
        p = (&p * lambda).round_mantissa(256, Round::Ceil);
        m += 1;
    }
    m + 1
}

/// Upper bound on `c^sqrt(i)` for `c >= 1`.
pub fn c_pow_sqrt_upper(c: &Dyadic, i: u32) -> Dyadic {
    assert!(*c >= Dyadic::one(), "C must be at least 1");
    if *c == Dyadic::one() || i == 0 {
        return Dyadic::one();
    }
    let s = (i as f64).sqrt().round() as u32;
    if s * s == i && c.mantissa().bits() <= 64 {
        return c.pow(s);
    }
    let c = c.round_mantissa(24, Round::Ceil);
    // a / 256 >= sqrt(i), found exactly
    let mut a = ((i as f64).sqrt() * 256.0).ceil() as u64;
    while a * a < 65536 * i as u64 {
        a += 1;
    }
    let mut v = pow_upper(&c, a);
    for _ in 0..8 {
        v = v.sqrt_ceil(64);
    }
    v
}

/// Upper bound on `x^k` with 128-bit intermediate mantissas.
fn pow_upper(x: &Dyadic, mut k: u64) -> Dyadic {
    let mut base = x.clone();
    let mut acc = Dyadic::one();
    while k > 0 {
        if k & 1 == 1 {
            acc = (&acc * &base).round_mantissa(128, Round::Ceil);
        }
        base = (&base * &base).round_mantissa(128, Round::Ceil);
        k >>= 1;
    }
    acc
}

/// Lower bound on `x^k` for `x >= 0`.
fn pow_lower(x: &Dyadic, mut k: u64) -> Dyadic {
    let mut base = x.clone();
    let mut acc = Dyadic::one();
    while k > 0 {
        if k & 1 == 1 {
            acc = (&acc * &base).round_mantissa(128, Round::Floor);
        }
        base = (&base * &base).round_mantissa(128, Round::Floor);
        k >>= 1;
    }
    acc
}

/// Fractional bits of the derived `beta`.
pub const BETA_BITS: u32 = 12;

/// `beta = ln(1/lambda) / ln(R_hat)` rounded down to `BETA_BITS` fractional
/// bits and `alpha = 1 / (lambda r^beta)` rounded up.
pub fn derive_alpha_beta(lambda: &Dyadic, r: &Dyadic, r_hat: &Dyadic) -> Result<(Dyadic, Dyadic), CertificateError> {
    let one = Dyadic::one();
    if *r_hat <= one {
        return Err(CertificateError::InvalidConstants("R_hat must exceed 1".into()));
    }
    if !lambda.is_positive() || *lambda >= one {
        return Err(CertificateError::InvalidConstants("lambda must lie in (0, 1)".into()));
    }
    if !r.is_positive() {
        return Err(CertificateError::InvalidConstants("r must be positive".into()));
    }
    let q = 1u64 << BETA_BITS;
    let lam_q = pow_upper(lambda, q);
    // p / 2^12 <= beta_true  iff  R_hat^p lambda^(2^12) <= 1
    let ok = |p: u64| (pow_upper(r_hat, p) * &lam_q).round_mantissa(128, Round::Ceil) <= one;
    let est = (lambda.to_f64().recip().ln() / r_hat.to_f64().ln() * q as f64).floor().max(0.0) as u64;
    let mut p = est.saturating_sub(2);
    while p > 0 && !ok(p) {
        p -= 1;
    }
    while ok(p + 1) {
        p += 1;
    }
    if p == 0 {
        return Err(CertificateError::InvalidConstants("beta rounds to zero".into()));
    }
    let beta = Dyadic::new(p, -(BETA_BITS as i64));
    // r^beta from below: 12 downward square roots of r^p
    let mut rb = pow_lower(r, p);
    for _ in 0..BETA_BITS {
        rb = rb.sqrt_floor(64);
    }
    let alpha = one.div_rel(&(lambda * &rb).round_mantissa(128, Round::Floor), 64, Round::Ceil);
    Ok((alpha, beta))
}

/// Koebe quarter bound: `K1 = eps / 4`.
pub fn derive_k1(eps: &Dyadic) -> Dyadic {
    eps.mul_pow2(-2)
}

/// Inputs for [`estimate_k2_c`].
pub struct PartialCertificate<'a> {
    pub lambda: &'a Dyadic,
    pub r: &'a Dyadic,
    pub eps: &'a Dyadic,
    pub u: &'a BoxCover,
    pub approx: &'a JuliaApprox,
}

/// Heuristic fit of the distortion constants.
#[derive(Clone, Debug)]
pub struct K2CEstimate {
    pub k2: Dyadic,
    pub c: Dyadic,
    pub samples: usize,
    pub exits: usize,
    pub provenance: Provenance,
}

const CLOUD_POINTS: usize = 1 << 18;

const C_CANDIDATES: [f64; 7] = [1.0, 1.125, 1.25, 1.5, 2.0, 3.0, 4.0];

/// Sample points near a dense backward-orbit cloud (which lies on the Julia
/// set up to `lambda^depth`), estimate their distance to the set by the
/// nearest cloud point, iterate each until its orbit first leaves `U`, and
/// fit the smallest `K2` for each candidate `C` with
/// `dist * |Df^k| <= K2 C^sqrt(k)`. The winning pair is inflated by a safety
/// factor of 2. Everything runs in floating point, so the result is
/// heuristic.
pub fn estimate_k2_c(map: &MapSpec, part: &PartialCertificate, sample_budget: usize, seed: u64) -> Result<K2CEstimate, CertificateError> {
    let f = MapF64::new(map);
    let approx = &part.approx.cover;
    let start = match approx.boxes().next() {
        Some((i, j)) if sample_budget > 0 => {
            let side = 2f64.powi(-(approx.resolution() as i32));
            num_complex::Complex64::new((i as f64 + 0.5) * side, (j as f64 + 0.5) * side)
        }
        _ => return Err(CertificateError::InsufficientSamples(0)),
    };
    let contraction = -part.lambda.to_f64().log2();
    let depth = if contraction > 0.0 { ((60.0 / contraction).ceil() as u32).min(200) } else { 200 };
    let cloud = crate::oracles::inverse_iteration_cloud(map, depth, start, CLOUD_POINTS, seed)?;
    // sample distances 2^-j for j in jmin..=jmax; cells of side 2^-jmin make
    // a 3x3 neighborhood enough for the nearest-point search
    let jmin = precision_bits(part.eps).saturating_sub(1) as i32;
    let jmax = jmin + 4;
    let cell = 2f64.powi(-jmin);
    let key = |z: num_complex::Complex64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<num_complex::Complex64>> = std::collections::HashMap::new();
    for &q in &cloud {
        buckets.entry(key(q)).or_default().push(q);
    }
    let nearest = |z: num_complex::Complex64| {
        let (a, b) = key(z);
        let mut best = f64::INFINITY;
        for da in -1..=1 {
            for db in -1..=1 {
                for q in buckets.get(&(a + da, b + db)).into_iter().flatten() {
                    best = best.min((z - q).norm());
                }
            }
        }
        best
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut obs: Vec<(u32, f64)> = Vec::new();
    for _ in 0..sample_budget {
        let base = cloud[rng.gen_range(0..cloud.len())];
        let t = 2f64.powi(-rng.gen_range(jmin..=jmax));
        let z = base + num_complex::Complex64::from_polar(t, rng.gen::<f64>() * std::f64::consts::TAU);
        let dist = nearest(z);
        // nearly tangential offsets land too close to the cloud to measure
        if dist < t / 4.0 || !part.u.contains(&ComplexDyadic::from_f64(z.re, z.im)) {
            continue;
        }
        let dist_up = dist;
        let mut p = z;
        let mut d = num_complex::Complex64::new(1.0, 0.0);
        for k in 1..=400u32 {
            let (fp, dfp) = f.eval_with_derivative(p);
            d *= dfp;
            p = fp;
            if !p.re.is_finite() || !d.re.is_finite() {
                break;
            }
            if !part.u.contains(&ComplexDyadic::from_f64(p.re, p.im)) {
                obs.push((k, dist_up * d.norm()));
                break;
            }
        }
    }
    if obs.len() < 10 {
        return Err(CertificateError::InsufficientSamples(obs.len()));
    }
    let kmax = obs.iter().map(|o| o.0).max().unwrap() as f64;
    let mut best: Option<(f64, f64, f64)> = None;
    for &c in &C_CANDIDATES {
        let k2 = obs.iter().map(|&(k, v)| v / c.powf((k as f64).sqrt())).fold(0.0, f64::max);
        let cost = k2 * c.powf(kmax.sqrt());
        if best.is_none_or(|b| cost < b.2) {
            best = Some((k2, c, cost));
        }
    }
    let (k2, c, _) = best.unwrap();
    let k2 = Dyadic::from_f64(2.0 * k2).round_mantissa(8, Round::Ceil);
    Ok(K2CEstimate { k2, c: Dyadic::from_f64(c), samples: sample_budget, exits: obs.len(), provenance: Provenance::Heuristic })
}

/// Critical points of `f` enclosed in disks, each containing a zero of
/// `P'Q - PQ'` (or `P'`), together covering all of them.
pub fn critical_point_disks(map: &MapSpec) -> Result<Vec<Ball>, CertificateError> {
    let w = 128;
    let coeff = |c: &Coefficient| {
        if c.is_exact() {
            Ball::exact(c.query(w))
        } else {
            Ball::new(c.query(w + 2), Dyadic::pow2(-(w as i64) - 2))
        }
    };
    let num: Vec<Ball> = map.numerator.iter().map(coeff).collect();
    let den: Vec<Ball> = map.denominator.iter().map(coeff).collect();
    let deriv = |c: &[Ball]| -> Vec<Ball> {
        c.iter().enumerate().skip(1).map(|(k, a)| ball_mul(a, &Ball::real(Dyadic::from_int(k as i64)), w)).collect()
    };
    let g: Vec<Ball> = if map.kind == MapKind::Polynomial {
        deriv(&num)
    } else {
        let mul = |a: &[Ball], b: &[Ball]| -> Vec<Ball> {
            let mut out = vec![Ball::zero(); (a.len() + b.len()).saturating_sub(1)];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] = ball_add(&out[i + j], &ball_mul(x, y, w), w);
                }
            }
            out
        };
        let l = mul(&deriv(&num), &den);
        let r = mul(&num, &deriv(&den));
        (0..l.len().max(r.len())).map(|k| ball_sub(l.get(k).unwrap_or(&Ball::zero()), r.get(k).unwrap_or(&Ball::zero()), w)).collect()
    };
    // drop top coefficients that are exactly zero (cancellation in the rational case)
    let mut g = g;
    while g.len() > 1 && g.last().unwrap().center.is_zero() && g.last().unwrap().radius.is_zero() {
        g.pop();
    }
    let deg = g.len() - 1;
    let lead = g.last().unwrap();
    if lead.contains_zero() {
        return Err(CertificateError::InvalidConstants("critical polynomial has an undetermined leading coefficient".into()));
    }
    let approx = MapF64::new(map).critical_points().map_err(CertificateError::Eval)?;
    let pts: Vec<ComplexDyadic> = approx.iter().map(|z| ComplexDyadic::from_f64(z.re, z.im)).collect();
    let mut disks = Vec::with_capacity(deg);
    for (j, zj) in pts.iter().enumerate() {
        let zb = Ball::exact(zj.clone());
        let mut val = Ball::zero();
        for a in g.iter().rev() {
            val = ball_add(&ball_mul(&val, &zb, w), a, w);
        }
        let (_, gv) = ball_abs_bounds(&val);
        let (mut den_lo, _) = ball_abs_bounds(lead);
        for (i, zi) in pts.iter().enumerate() {
            if i != j {
                den_lo = (&den_lo * &(zj - zi).abs_lo(64)).round_mantissa(64, Round::Floor);
            }
        }
        if !den_lo.is_positive() {
            return Err(CertificateError::InvalidConstants("critical points are not separated".into()));
        }
        let radius = (&gv * &Dyadic::from_int(deg as i64)).div_rel(&den_lo, 32, Round::Ceil);
        disks.push(Ball::new(zj.clone(), radius));
    }
    Ok(disks)
}

fn range_check(report: &mut ValidationReport, name: &str, ok: bool, what: String) {
    report.push(Check::of(name, ok, what));
}

/// Run every check on the certificate against `map`.
pub fn validate(cert: &Certificate, map: &MapSpec) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let one = Dyadic::one();
    let zero = Dyadic::zero();
    let l = &cert.lambda.value;
    range_check(&mut rep, "lambda range", l.is_positive() && *l < one, format!("lambda = {}", l.to_decimal()));
    range_check(&mut rep, "r range", cert.r.value.is_positive(), format!("r = {}", cert.r.value.to_decimal()));
    let mu = &cert.mu.value;
    range_check(&mut rep, "mu range", mu.is_positive() && *mu < one, format!("mu = {}", mu.to_decimal()));
    let eps = &cert.eps.value;
    range_check(&mut rep, "eps range", eps.is_positive() && *eps < cert.r.value, format!("eps = {}, r = {}", eps.to_decimal(), cert.r.value.to_decimal()));
    let (k1, k2, c) = (&cert.k1.value, &cert.k2.value, &cert.c.value);
    range_check(
        &mut rep,
        "distortion constants",
        k1.is_positive() && k2.is_positive() && *c >= one && k1 <= k2,
        format!("K1 = {}, K2 = {}, C = {}", k1.to_decimal(), k2.to_decimal(), c.to_decimal()),
    );
    range_check(&mut rep, "alpha beta range", cert.alpha.value > zero && cert.beta.value > zero, format!("alpha = {}, beta = {}", cert.alpha.value.to_decimal(), cert.beta.value.to_decimal()));
    range_check(&mut rep, "R_hat range", cert.r_hat.value > one, format!("R_hat = {}", cert.r_hat.value.to_decimal()));
    if let Some(k) = &cert.koebe_radius {
        range_check(&mut rep, "koebe radius range", k.value.is_positive(), format!("koebe radius = {}", k.value.to_decimal()));
    }
    if cert.k1.provenance == Provenance::Rigorous {
        let q = derive_k1(eps);
        range_check(&mut rep, "K1 = eps/4", *k1 <= q, format!("K1 = {}, eps/4 = {}", k1.to_decimal(), q.to_decimal()));
    }
    if !rep.overall() {
        return rep;
    }
    if cert.alpha.provenance == Provenance::Rigorous || cert.beta.provenance == Provenance::Rigorous {
        match derive_alpha_beta(l, &cert.r.value, &cert.r_hat.value) {
            Ok((a, b)) => range_check(
                &mut rep,
                "alpha beta derivation",
                cert.alpha.value >= a && cert.beta.value <= b,
                format!("derived alpha = {}, beta = {}", a.to_decimal(), b.to_decimal()),
            ),
            Err(e) => rep.push(Check::fail("alpha beta derivation", e.to_string())),
        }
    }
    let Some(approx) = &cert.julia_approx else {
        rep.push(Check::fail("julia approximation", "certificate carries no Julia approximation to check U against"));
        return rep;
    };
    if cert.u.is_empty() {
        rep.push(Check::fail("U nonempty", "U is empty"));
        return rep;
    }
    rep.extend(validate_u_cond(map, &cert.u, approx, eps, &cert.r.value));
    // R_hat must bound |f'| on the r-neighborhood of J, inside the (r + h)-neighborhood of the approximation
    match sup_df_on_cover(map, &approx.cover, &(&cert.r.value + &approx.hausdorff)) {
        Ok(s) => range_check(&mut rep, "R_hat bound", s <= cert.r_hat.value, format!("sup |f'| <= {} on the (r + h)-neighborhood of the approximation", s.to_decimal())),
        Err(e) => rep.push(Check::fail("R_hat bound", e.to_string())),
    }
    match critical_point_disks(map) {
        Err(e) => rep.push(Check::fail("critical point exclusion", e.to_string())),
        Ok(disks) => {
            let band = approx.cover.inflate(&(cert.r.value.mul_pow2(1) + &approx.hausdorff));
            let mut bad = Vec::new();
            for d in &disks {
                let in_j = approx.cover.ball_inside(d);
                let clear = !band.contains(&d.center) && band.dist_lower(&d.center).map(|v| v > d.radius).unwrap_or(false);
                if !(in_j || clear) {
                    bad.push(format!("{:?}", d.center.to_f64()));
                }
            }
            let w = if bad.is_empty() {
                format!("{} critical point disks lie inside the approximation or outside its 2r-neighborhood", disks.len())
            } else {
                format!("critical points near {} lie in the 2r-neighborhood but not in the approximation", bad.join(", "))
            };
            rep.push(Check::of("critical point exclusion", bad.is_empty(), w));
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn l_of_examples() {
        assert_eq!(l_of(&d("0.5"), 7), 9);
        assert_eq!(l_of(&d("0.25"), 7), 5);
        assert_eq!(l_of(&d("0.75"), 3), 11);
    }

    #[test]
    fn threshold_examples() {
        let k2c = &d("1") * &c_pow_sqrt_upper(&d("2"), 4);
        assert_eq!(threshold_from(&k2c, 7), d("1025"));
        assert_eq!(threshold_from(&c_pow_sqrt_upper(&d("1"), 17), 0), d("3"));
        let k2c = &d("0.5") * &c_pow_sqrt_upper(&d("4"), 9);
        assert_eq!(threshold_from(&k2c, 3), d("513"));
    }

    #[test]
    fn c_pow_sqrt_is_upper_bound() {
        for i in [2u32, 3, 5, 7, 10, 26, 99] {
            for c in ["1.5", "2", "1.0625", "3.75"] {
                let v = c_pow_sqrt_upper(&d(c), i).to_f64();
                let t = d(c).to_f64().powf((i as f64).sqrt());
                assert!(v >= t * (1.0 - 1e-14) && v <= t * 1.01, "{c}^sqrt({i}): {v} vs {t}");
            }
        }
    }

    #[test]
    fn gap_examples() {
        let k2c = &d("1") * &c_pow_sqrt_upper(&d("2"), 9);
        let g = gap_from(&d("0.25"), &k2c);
        assert!(g <= d("1").div_round(&d("36"), 80, Round::Ceil) && g > d("1").div_round(&d("40"), 80, Round::Floor));
        assert_eq!(gap_from(&d("1"), &d("1")), d("0.5"));
    }

    #[test]
    fn alpha_beta_examples() {
        let (a, b) = derive_alpha_beta(&d("0.5"), &d("1"), &d("4")).unwrap();
        assert_eq!(b, d("0.5"));
        assert!(a >= d("2") && a.to_f64() < 2.0 + 1e-12);
        let (a, b) = derive_alpha_beta(&d("0.5"), &d("0.5"), &d("4")).unwrap();
        assert_eq!(b, d("0.5"));
        let want = 2.0 * 2f64.sqrt();
        assert!(a.to_f64() >= want - 1e-12 && a.to_f64() < want + 1e-9);
        // exact: (a * 0.5)^2 * 0.5 >= 1
        let h = a.mul_pow2(-1);
        assert!(&(&h * &h) * &d("0.5") >= d("1"));
        let (_, b) = derive_alpha_beta(&d("0.5"), &d("1"), &d("2")).unwrap();
        assert_eq!(b, d("1"));
        assert!(matches!(derive_alpha_beta(&d("0.5"), &d("1"), &d("1")), Err(CertificateError::InvalidConstants(_))));
    }

    #[test]
    fn k1_examples() {
        assert_eq!(derive_k1(&d("1")), d("0.25"));
        assert_eq!(derive_k1(&Dyadic::pow2(-5)), Dyadic::pow2(-7));
        assert_eq!(derive_k1(&d("0.375")), d("0.09375"));
    }

    #[test]
    fn critical_disks_for_quadratic() {
        let f = MapSpec::quadratic(ComplexDyadic::real(d("-2")));
        let disks = critical_point_disks(&f).unwrap();
        assert_eq!(disks.len(), 1);
        assert!(disks[0].contains_point(&ComplexDyadic::zero()));
    }
}
