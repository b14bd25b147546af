//! Shared fixtures for the benchmarks.

use certjulia::ComplexDyadic;

/// Deterministic points at distance `offset` from the unit circle, spread by
/// golden-angle steps.
pub fn near_circle(count: usize, offset: f64) -> Vec<ComplexDyadic> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let t = k as f64 * golden;
            let r = 1.0 + if k % 2 == 0 { offset } else { -offset };
            ComplexDyadic::from_f64(r * t.cos(), r * t.sin())
        })
        .collect()
}
