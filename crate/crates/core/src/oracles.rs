//! Ground truth for maps with explicitly known Julia sets, and the harness
//! that checks verdicts against it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decider::{Decider, Verdict};
use crate::dyadic::{ComplexDyadic, Dyadic};
use crate::error::EvalError;
use crate::map::MapSpec;
use crate::roots::MapF64;

/// Exact distance to a known Julia set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceOracle {
    /// The unit circle, Julia set of `z^2`.
    Circle,
    /// The segment `[-2, 2]`, Julia set of `z^2 - 2`.
    Segment,
}

/// Bracket `[lo, hi]` on `|x|` for `x = sqrt(s)`.
fn sqrt_bracket(s: &Dyadic, bits: u32) -> (Dyadic, Dyadic) {
    s.sqrt_bounds(bits as i64 + 1)
}

impl DistanceOracle {
    pub fn name(self) -> &'static str {
        match self {
            DistanceOracle::Circle => "circle",
            DistanceOracle::Segment => "segment",
        }
    }

    /// Bracket `(lo, hi)` on the distance from `z` with `hi - lo <= 2^-bits`.
    pub fn exact_dist(self, z: &ComplexDyadic, bits: u32) -> (Dyadic, Dyadic) {
        match self {
            DistanceOracle::Circle => exact_dist_circle(z, bits),
            DistanceOracle::Segment => exact_dist_segment(z, bits),
        }
    }

    /// Floating-point distance.
    pub fn dist_f64(self, z: Complex64) -> f64 {
        match self {
            DistanceOracle::Circle => (z.norm() - 1.0).abs(),
            DistanceOracle::Segment => {
                if z.re.abs() <= 2.0 {
                    z.im.abs()
                } else {
                    Complex64::new(z.re.abs() - 2.0, z.im).norm()
                }
            }
        }
    }

    /// The map whose Julia set this is.
    pub fn map(self) -> MapSpec {
        match self {
            DistanceOracle::Circle => MapSpec::quadratic(ComplexDyadic::zero()),
            DistanceOracle::Segment => MapSpec::quadratic(ComplexDyadic::real(Dyadic::from_int(-2))),
        }
    }

    /// A point of the set, parametrized by `t` in `[0, 1)`.
    pub fn point_on(self, t: f64) -> Complex64 {
        match self {
            DistanceOracle::Circle => Complex64::from_polar(1.0, t * std::f64::consts::TAU),
            DistanceOracle::Segment => Complex64::new(4.0 * t - 2.0, 0.0),
        }
    }

    /// A point at distance about `d` from the set, with random placement.
    pub fn point_at_distance(self, rng: &mut impl Rng, d: f64) -> Complex64 {
        match self {
            DistanceOracle::Circle => {
                let s = if rng.gen::<bool>() { 1.0 + d } else { (1.0 - d).max(0.0) };
                Complex64::from_polar(s, rng.gen::<f64>() * std::f64::consts::TAU)
            }
            DistanceOracle::Segment => {
                // mostly beside the segment, sometimes around an endpoint
                if rng.gen_range(0..8) == 0 {
                    let e: f64 = if rng.gen::<bool>() { 2.0 } else { -2.0 };
                    let a = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
                    let dir = Complex64::from_polar(d, a);
                    Complex64::new(e + dir.re * e.signum(), dir.im)
                } else {
                    let x = rng.gen_range(-2.0..2.0);
                    Complex64::new(x, if rng.gen::<bool>() { d } else { -d })
                }
            }
        }
    }

    /// Points of the grid `origin + s (i, j)` within the box `[x0, x1] x [y0, y1]`
    /// whose distance from the set is at most `radius`. Returned as `(i, j)`
    /// with `j` counted from `y0`.
    pub fn grid_points_near(self, x0: f64, y0: f64, x1: f64, y1: f64, s: f64, radius: f64) -> Vec<(i64, i64)> {
        let nx = ((x1 - x0) / s).round() as i64;
        let ny = ((y1 - y0) / s).round() as i64;
        let pad = radius * 1.001 + s;
        let mut out = Vec::new();
        for j in 0..=ny {
            let y = y0 + j as f64 * s;
            let ranges: Vec<(f64, f64)> = match self {
                DistanceOracle::Circle => {
                    let outer = 1.0 + pad;
                    if y.abs() > outer {
                        continue;
                    }
                    let xo = (outer * outer - y * y).sqrt();
                    let inner = 1.0 - pad;
                    if inner > 0.0 && y.abs() < inner {
                        let xi = (inner * inner - y * y).sqrt();
                        vec![(-xo, -xi), (xi, xo)]
                    } else {
                        vec![(-xo, xo)]
                    }
                }
                DistanceOracle::Segment => {
                    if y.abs() > pad {
                        continue;
                    }
                    vec![(-2.0 - pad, 2.0 + pad)]
                }
            };
            for (a, b) in ranges {
                let i0 = (((a - x0) / s).floor() as i64).max(0);
                let i1 = (((b - x0) / s).ceil() as i64).min(nx);
                for i in i0..=i1 {
                    let z = Complex64::new(x0 + i as f64 * s, y);
                    if self.dist_f64(z) <= radius * 1.001 + 1e-12 {
                        out.push((i, j));
                    }
                }
            }
        }
        out.sort_unstable_by_key(|&(i, j)| (j, i));
        out.dedup();
        out
    }
}

/// Bracket on `| |z| - 1 |`.
pub fn exact_dist_circle(z: &ComplexDyadic, bits: u32) -> (Dyadic, Dyadic) {
    let one = Dyadic::one();
    let (lo, hi) = sqrt_bracket(&z.norm_sqr(), bits);
    if lo >= one {
        (lo - one.clone(), hi - one)
    } else if hi <= one {
        (&one - &hi, &one - &lo)
    } else {
        (Dyadic::zero(), (&hi - &one).max(&one - &lo))
    }
}

/// Bracket on the distance to `[-2, 2]`.
pub fn exact_dist_segment(z: &ComplexDyadic, bits: u32) -> (Dyadic, Dyadic) {
    let two = Dyadic::from_int(2);
    let x = z.re.abs();
    if x <= two {
        let d = z.im.abs();
        return (d.clone(), d);
    }
    let dx = x - two;
    let s = &(&dx * &dx) + &(&z.im * &z.im);
    sqrt_bracket(&s, bits)
}

/// Sample strata of the conformance harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratum {
    /// `d < gap_K(n) 2^-n-1`: bit 0 is forced.
    Close,
    /// Between the two bounds: either bit is allowed; recorded only.
    Band,
    /// `2^-n-1 < d <= 8 * 2^-n-1`: bit 1 is forced.
    Far,
    /// Log-uniform distances up to `1/2`.
    Wide,
}

impl Stratum {
    pub const ALL: [Stratum; 4] = [Stratum::Close, Stratum::Band, Stratum::Far, Stratum::Wide];

    pub fn name(self) -> &'static str {
        match self {
            Stratum::Close => "close",
            Stratum::Band => "band",
            Stratum::Far => "far",
            Stratum::Wide => "wide",
        }
    }
}

/// One row of the harness report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformanceRow {
    pub n: u32,
    pub stratum: Stratum,
    pub samples: u64,
    pub violations: u64,
    /// Samples whose oracle bracket fell in the free band.
    pub band_occupancy: u64,
    /// Verdicts with bit 0 among the samples.
    pub zeros: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub n: u32,
    pub z: String,
    pub bit: u8,
    pub dist_lo: f64,
    pub dist_hi: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub rows: Vec<ConformanceRow>,
    pub violations: Vec<Violation>,
    pub errors: u64,
}

impl ConformanceReport {
    pub fn violation_count(&self) -> u64 {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn samples(&self) -> u64 {
        self.rows.iter().map(|r| r.samples).sum()
    }

    pub fn passed(&self) -> bool {
        self.violation_count() == 0 && self.errors == 0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,stratum,samples,violations,band_occupancy,zeros\n");
        for r in &self.rows {
            s += &format!("{},{},{},{},{},{}\n", r.n, r.stratum.name(), r.samples, r.violations, r.band_occupancy, r.zeros);
        }
        s
    }
}

/// How many samples to draw per precision and where.
#[derive(Clone, Copy, Debug)]
pub struct SampleSpec {
    pub per_n: usize,
    pub seed: u64,
}

const MAX_VIOLATIONS_KEPT: usize = 50;

/// Bits of the oracle brackets in the harness.
const ORACLE_BITS: u32 = 80;

/// Bit and distance bracket for one sample.
type VerdictWithBracket = Result<(u8, Dyadic, Dyadic), EvalError>;

/// Check routed verdicts against the oracle: flag bit 1 when the true
/// distance is below `gap_K(n) 2^-n-1` and bit 0 when it is above `2^-n-1`.
/// Samples are split evenly over the strata.
pub fn conformance_check(decider: &Decider, oracle: DistanceOracle, n_list: &[u32], spec: SampleSpec) -> ConformanceReport {
    conformance_check_with(oracle, n_list, spec, |n| decider.schedule(n).gap.clone(), |n, z| decider.decide(n, z))
}

/// The harness with the decision rule and the gap supplied by the caller.
pub fn conformance_check_with(
    oracle: DistanceOracle,
    n_list: &[u32],
    spec: SampleSpec,
    gap_of: impl Fn(u32) -> Dyadic,
    decide: impl Fn(u32, &ComplexDyadic) -> Result<Verdict, EvalError> + Sync,
) -> ConformanceReport {
    let mut report = ConformanceReport::default();
    for &n in n_list {
        let half = Dyadic::pow2(-(n as i64) - 1);
        let gap = gap_of(n);
        let close = &gap * &half;
        let (close_f, half_f) = (close.to_f64(), half.to_f64());
        let per = spec.per_n / Stratum::ALL.len();
        let samples: Vec<(Stratum, ComplexDyadic)> = Stratum::ALL
            .iter()
            .enumerate()
            .flat_map(|(k, &st)| {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ ((n as u64) << 32) ^ ((k as u64) << 48));
                let extra = if k < spec.per_n % Stratum::ALL.len() { 1 } else { 0 };
                (0..per + extra)
                    .map(|_| {
                        let d = match st {
                            Stratum::Close => close_f * rng.gen::<f64>().powi(2),
                            Stratum::Band => close_f + (half_f - close_f) * rng.gen::<f64>(),
                            Stratum::Far => half_f * (1.0 + 7.0 * rng.gen::<f64>()),
                            Stratum::Wide => half_f * (0.5 / half_f).powf(rng.gen::<f64>()),
                        };
                        let z = oracle.point_at_distance(&mut rng, d);
                        (st, ComplexDyadic::from_f64(z.re, z.im))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let results: Vec<(Stratum, VerdictWithBracket, &ComplexDyadic)> = samples
            .par_iter()
            .map(|(st, z)| {
                let (lo, hi) = oracle.exact_dist(z, ORACLE_BITS);
                (*st, decide(n, z).map(|v| (v.bit, lo, hi)), z)
            })
            .collect();
        for st in Stratum::ALL {
            let mut row = ConformanceRow { n, stratum: st, samples: 0, violations: 0, band_occupancy: 0, zeros: 0 };
            for (s, res, z) in results.iter().filter(|r| r.0 == st) {
                let _ = s;
                row.samples += 1;
                match res {
                    Err(_) => report.errors += 1,
                    Ok((bit, lo, hi)) => {
                        if *bit == 0 {
                            row.zeros += 1;
                        }
                        if !(hi < &close) && !(lo > &half) {
                            row.band_occupancy += 1;
                        }
                        let bad = (*bit == 1 && hi < &close) || (*bit == 0 && lo > &half);
                        if bad {
                            row.violations += 1;
                            if report.violations.len() < MAX_VIOLATIONS_KEPT {
                                report.violations.push(Violation { n, z: z.to_string(), bit: *bit, dist_lo: lo.to_f64(), dist_hi: hi.to_f64() });
                            }
                        }
                    }
                }
            }
            report.rows.push(row);
        }
    }
    report
}

/// Random backward orbits of length `depth` from `seed`, one point each.
/// Not certified.
pub fn inverse_iteration_cloud(map: &MapSpec, depth: u32, seed: Complex64, count: usize, rng_seed: u64) -> Result<Vec<Complex64>, EvalError> {
    let f = MapF64::new(map);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut z = seed;
        for _ in 0..depth {
            let pre = f.preimages(z)?;
            if pre.is_empty() {
                return Err(EvalError::RootFindingFailure);
            }
            z = pre[rng.gen_range(0..pre.len())];
        }
        out.push(z);
    }
    Ok(out)
}

/// Hausdorff distance between a finite point set and the oracle's set,
/// up to the sampling step `step` along the set.
pub fn hausdorff_to_oracle(points: &[Complex64], oracle: DistanceOracle, step: f64) -> f64 {
    if points.is_empty() {
        return f64::INFINITY;
    }
    let one_way = points.iter().map(|&z| oracle.dist_f64(z)).fold(0.0, f64::max);
    // the other way: grid-bucket the points and query along the set
    let cell = step.max(1e-9) * 16.0;
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<Complex64>> = std::collections::HashMap::new();
    for &z in points {
        buckets.entry(((z.re / cell).floor() as i64, (z.im / cell).floor() as i64)).or_default().push(z);
    }
    let length = match oracle {
        DistanceOracle::Circle => std::f64::consts::TAU,
        DistanceOracle::Segment => 4.0,
    };
    let count = (length / step).ceil() as usize;
    let mut other: f64 = 0.0;
    for k in 0..=count {
        let q = oracle.point_on((k as f64 / count as f64).min(1.0 - 1e-15));
        let (ci, cj) = ((q.re / cell).floor() as i64, (q.im / cell).floor() as i64);
        let mut best = f64::INFINITY;
        let mut ring: i64 = 0;
        loop {
            for a in -ring..=ring {
                for b in -ring..=ring {
                    if a.abs() != ring && b.abs() != ring {
                        continue;
                    }
                    if let Some(v) = buckets.get(&(ci + a, cj + b)) {
                        for p in v {
                            best = best.min((p - q).norm());
                        }
                    }
                }
            }
            // every unvisited bucket is at least ring * cell away
            if best <= ring as f64 * cell || ring > 100_000 {
                break;
            }
            ring += 1;
        }
        other = other.max(best);
    }
    one_way.max(other + step / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cd(re: &str, im: &str) -> ComplexDyadic {
        ComplexDyadic::new(re.parse().unwrap(), im.parse().unwrap())
    }

    #[test]
    fn circle_examples() {
        assert_eq!(exact_dist_circle(&cd("0", "0"), 64), (Dyadic::one(), Dyadic::one()));
        assert_eq!(exact_dist_circle(&cd("2", "0"), 64), (Dyadic::one(), Dyadic::one()));
        let dec = |s: &str| crate::dyadic::Decimal::parse(s).unwrap().round_to(70, crate::dyadic::Round::Nearest);
        let (lo, hi) = exact_dist_circle(&ComplexDyadic::new(dec("0.6"), dec("0.8")), 64);
        assert!(lo.is_zero() && hi < Dyadic::pow2(-60));
    }

    #[test]
    fn segment_examples() {
        assert_eq!(exact_dist_segment(&cd("3", "0"), 64), (Dyadic::one(), Dyadic::one()));
        assert_eq!(exact_dist_segment(&cd("0", "1"), 64), (Dyadic::one(), Dyadic::one()));
        assert_eq!(exact_dist_segment(&cd("1", "0"), 64), (Dyadic::zero(), Dyadic::zero()));
    }

    #[test]
    fn empty_sample_set() {
        let r = conformance_check_with(DistanceOracle::Circle, &[8], SampleSpec { per_n: 0, seed: 1 }, |_| Dyadic::one(), |_, _| unreachable!());
        assert_eq!(r.violation_count(), 0);
        assert!(r.rows.iter().all(|r| r.samples == 0 && r.band_occupancy == 0));
    }

    #[test]
    fn cloud_depth_zero() {
        let f = DistanceOracle::Circle.map();
        let c = inverse_iteration_cloud(&f, 0, Complex64::new(1.0, 0.0), 3, 7).unwrap();
        assert!(c.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }
}
