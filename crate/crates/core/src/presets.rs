//! Ready-made certificates for the two maps with explicitly known Julia
//! sets: `z^2` (the unit circle) and `z^2 - 2` (the segment `[-2, 2]`).

use crate::certificate::{derive_alpha_beta, derive_k1, Certificate, Constant, Provenance};
use crate::cover::{build_cover_inverse_iteration, JuliaApprox};
use crate::dyadic::{ComplexDyadic, Dyadic, Round};
use crate::error::CertificateError;
use crate::map::{sup_df_on_cover, MapSpec};
use crate::oracles::DistanceOracle;

pub struct Preset {
    pub name: &'static str,
    pub map: MapSpec,
    pub cert: Certificate,
    pub oracle: DistanceOracle,
}

struct Params {
    lambda: Dyadic,
    r: Dyadic,
    mu: Dyadic,
    eps: Dyadic,
    m: u32,
    depth: u32,
    seed: ComplexDyadic,
    hausdorff: Dyadic,
    k2: Dyadic,
    c: Dyadic,
    dynamics_note: &'static str,
    k2_note: &'static str,
}

fn build(map: &MapSpec, p: Params) -> Result<Certificate, CertificateError> {
    use Provenance::*;
    let cover = build_cover_inverse_iteration(map, p.depth, p.m, &p.seed)?;
    let approx = JuliaApprox { cover, hausdorff: p.hausdorff.clone() };
    let u = approx.cover.inflate(&(p.eps.mul_pow2(1) + &p.hausdorff));
    let r_hat = sup_df_on_cover(map, &approx.cover, &(&p.r + &p.hausdorff))?.round_mantissa(16, Round::Ceil);
    let (alpha, beta) = derive_alpha_beta(&p.lambda, &p.r, &r_hat)?;
    let k1 = derive_k1(&p.eps);
    Ok(Certificate {
        lambda: Constant::new(p.lambda, UserAsserted, p.dynamics_note),
        r: Constant::new(p.r.clone(), UserAsserted, p.dynamics_note),
        mu: Constant::new(p.mu, UserAsserted, "stored for reference only"),
        eps: Constant::new(p.eps, Rigorous, "checked by the U conditions against the Julia approximation"),
        k1: Constant::new(k1, Rigorous, "eps / 4 by the Koebe quarter theorem"),
        k2: Constant::new(p.k2, UserAsserted, p.k2_note),
        c: Constant::new(p.c, UserAsserted, p.k2_note),
        alpha: Constant::new(alpha, Rigorous, "1 / (lambda r^beta), rounded up"),
        beta: Constant::new(beta, Rigorous, "ln(1/lambda) / ln(R_hat), rounded down to 12 fractional bits"),
        r_hat: Constant::new(r_hat, Rigorous, "ball bound on |f'| over the (r + h)-neighborhood of the approximation"),
        koebe_radius: Some(Constant::new(p.r, UserAsserted, "disks of this radius around exit points miss the postcritical set")),
        ce_c: None,
        ce_gamma: None,
        u,
        julia_approx: Some(approx),
    })
}

fn d(s: &str) -> Dyadic {
    s.parse().expect("dyadic literal")
}

/// `z^2` with the unit circle as Julia set.
pub fn circle() -> Result<Preset, CertificateError> {
    let map = DistanceOracle::Circle.map();
    let cert = build(
        &map,
        Params {
            lambda: d("0.5"),
            r: d("0.25"),
            mu: d("0.5"),
            eps: Dyadic::pow2(-8),
            m: 10,
            depth: 13,
            seed: ComplexDyadic::one(),
            hausdorff: Dyadic::pow2(-9),
            k2: Dyadic::pow2(-4),
            c: Dyadic::one(),
            dynamics_note: "branches of the square root on disks of radius 1/4 about the circle contract by 1/2",
            k2_note: "bounds dist(z, J) |Df^i(z)| at the first exit from U; sampled maximum 0.0251, about 0.028 in closed form",
        },
    )?;
    Ok(Preset { name: "circle", map, cert, oracle: DistanceOracle::Circle })
}

/// `z^2 - 2` with the segment `[-2, 2]` as Julia set.
pub fn segment() -> Result<Preset, CertificateError> {
    let map = DistanceOracle::Segment.map();
    let cert = build(
        &map,
        Params {
            lambda: d("0.5"),
            r: Dyadic::pow2(-5),
            mu: d("0.5"),
            eps: Dyadic::pow2(-10),
            m: 13,
            depth: 15,
            seed: ComplexDyadic::real(Dyadic::from_int(2)),
            hausdorff: Dyadic::pow2(-11),
            k2: Dyadic::pow2(-4),
            c: Dyadic::one(),
            dynamics_note: "conjugate to angle doubling through z = w + 1/w; pullbacks of small disks about the segment halve",
            k2_note: "bounds dist(z, J) |Df^i(z)| at the first exit from U; sampled maximum 0.0206",
        },
    )?;
    Ok(Preset { name: "segment", map, cert, oracle: DistanceOracle::Segment })
}

pub fn by_name(name: &str) -> Option<Result<Preset, CertificateError>> {
    match name {
        "circle" => Some(circle()),
        "segment" => Some(segment()),
        _ => None,
    }
}

pub const NAMES: [&str; 2] = ["circle", "segment"];
