//! Certified rendering of Julia sets.
//!
//! Each pixel decision is backed by rigorous ball arithmetic over exact
//! dyadic rationals, driven by a per-map [`Certificate`] of constants
//! (shrinking rate, neighborhoods, distortion bounds). The decision rule
//! fills a pixel centered at `z` when `d(z, J) <= 2^-n-2` and leaves it
//! blank when `d(z, J) >= 2^-n-1`.

pub mod ball;
pub mod certificate;
pub mod cover;
pub mod decider;
pub mod dyadic;
pub mod error;
mod fixed;
pub mod map;
pub mod oracle;
pub mod oracles;
pub mod presets;
pub mod render;
pub mod roots;

pub use ball::Ball;
pub use certificate::{validate, Certificate, Check, Constant, Provenance, ValidationReport};
pub use cover::{BoxCover, JuliaApprox};
pub use decider::{Decider, PixelStats, Reason, Verdict};
pub use dyadic::{ComplexDyadic, Decimal, Dyadic, Round};
pub use error::{CertificateError, Error, EvalError, ParseError};
pub use map::{MapKind, MapSpec};
pub use oracle::{Coefficient, CoefficientOracle};
pub use oracles::DistanceOracle;
pub use render::{Bitmap, Mode, PixelGrid, Region, RenderOutput, RenderStats};
