//! Coefficient oracles: precision-indexed dyadic approximations of complex
//! constants.
//!
//! An oracle for `c` answers a query for `n` bits with a dyadic point within
//! `2^-n` of `c`. Each query for `n` bits is charged `n` ticks.

use std::fmt;
use std::sync::Arc;

use crate::dyadic::{ComplexDyadic, Decimal, Dyadic, Round};
use crate::error::ParseError;

pub trait CoefficientOracle: Send + Sync {
    /// A point within `2^-bits` of the true value.
    fn query(&self, bits: u32) -> ComplexDyadic;
}

/// A map coefficient.
#[derive(Clone)]
pub enum Coefficient {
    /// A dyadic value, returned as is for every query.
    Exact(ComplexDyadic),
    /// Decimal literals that are not dyadic, truncated on demand.
    Decimal { re: Decimal, im: Decimal },
    /// Any other oracle.
    Custom(Arc<dyn CoefficientOracle>),
}

impl Coefficient {
    pub fn exact(z: ComplexDyadic) -> Self {
        Coefficient::Exact(z)
    }

    pub fn real(x: Dyadic) -> Self {
        Coefficient::Exact(ComplexDyadic::real(x))
    }

    pub fn zero() -> Self {
        Coefficient::Exact(ComplexDyadic::zero())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coefficient::Exact(_))
    }

    /// Parse `re` or `re,im`, each part an exact dyadic (`m*2^e`) or a decimal.
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let (re, im) = s.split_once(',').unwrap_or((s, "0"));
        let part = |t: &str| -> Result<Result<Dyadic, Decimal>, ParseError> {
            let t = t.trim();
            if t.contains("*2^") {
                return Ok(Ok(t.parse()?));
            }
            let d = Decimal::parse(t)?;
            Ok(d.to_dyadic().ok_or(d))
        };
        match (part(re)?, part(im)?) {
            (Ok(a), Ok(b)) => Ok(Coefficient::Exact(ComplexDyadic::new(a, b))),
            (a, b) => {
                let dec = |x: Result<Dyadic, Decimal>| match x {
                    Ok(d) => Decimal::parse(&d.to_decimal()).expect("dyadic decimal expansion parses"),
                    Err(d) => d,
                };
                Ok(Coefficient::Decimal { re: dec(a), im: dec(b) })
            }
        }
    }
}

impl CoefficientOracle for Coefficient {
    fn query(&self, bits: u32) -> ComplexDyadic {
        match self {
            Coefficient::Exact(z) => z.clone(),
            Coefficient::Decimal { re, im } => {
                // each component within 2^-(bits+2), so the point is within 2^-bits
                let b = bits as i64 + 2;
                ComplexDyadic::new(re.round_to(b, Round::Nearest), im.round_to(b, Round::Nearest))
            }
            Coefficient::Custom(o) => o.query(bits),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Exact(z) => write!(f, "Exact({z})"),
            Coefficient::Decimal { re, im } => write!(f, "Decimal({re:?}, {im:?})"),
            Coefficient::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Text form used in map files. Custom oracles have no text form.
impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Exact(z) => write!(f, "{}", z),
            Coefficient::Decimal { re, im } => write!(f, "{},{}", re, im),
            Coefficient::Custom(_) => write!(f, "<custom>"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_oracle_precision() {
        let c = Coefficient::parse("0.1,-0.3").unwrap();
        assert!(!c.is_exact());
        let tenth = Decimal::parse("0.1").unwrap();
        for bits in [1u32, 8, 30, 100] {
            let q = c.query(bits);
            let fine = tenth.round_to(bits as i64 + 20, Round::Nearest);
            // |q.re - 0.1| <= 2^-(bits+2) + rounding of the reference
            let err = (&q.re - &fine).abs();
            assert!(err <= Dyadic::pow2(-(bits as i64) - 2) + Dyadic::pow2(-(bits as i64) - 20));
        }
    }

    #[test]
    fn exact_parse() {
        let c = Coefficient::parse("-2").unwrap();
        assert!(c.is_exact());
        assert_eq!(c.query(3), ComplexDyadic::real(Dyadic::from_int(-2)));
        let c = Coefficient::parse("0,1").unwrap();
        assert_eq!(c.query(3), ComplexDyadic::new(Dyadic::zero(), Dyadic::one()));
        let c = Coefficient::parse("3*2^-4,0.5").unwrap();
        assert_eq!(c.to_string(), "3*2^-4,1*2^-1");
    }
}
