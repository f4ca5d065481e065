//! Numeric literals that remember whether they are exact.
//!
//! A [`Scalar`] is a positive-or-zero real carried as an `f64` together with
//! whatever exact information its literal supplied: the rational value itself
//! (`3`, `7/2`) or only its rational square (`sqrt(2)`). Decimal literals such
//! as `0.3` are parsed to binary and are *not* exact; their decimal source is
//! kept for reporting.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::surd::rational_sqrt;

#[derive(Clone, Debug, PartialEq)]
pub struct Scalar {
    value: f64,
    exact: Option<BigRational>,
    square: Option<BigRational>,
    source: String,
}

impl Scalar {
    pub fn rational(numer: i64, denom: i64) -> Self {
        let r = BigRational::new(BigInt::from(numer), BigInt::from(denom));
        Scalar::from_rational(r)
    }

    pub fn integer(n: i64) -> Self {
        Scalar::rational(n, 1)
    }

    pub fn from_rational(r: BigRational) -> Self {
        let source = if r.denom() == &BigInt::from(1) {
            r.numer().to_string()
        } else {
            format!("{}/{}", r.numer(), r.denom())
        };
        Scalar {
            value: ratio_to_f64(&r),
            square: Some(&r * &r),
            exact: Some(r),
            source,
        }
    }

    /// Square root of a non-negative rational; exact in its square.
    pub fn sqrt_of(r: BigRational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::Domain(format!("sqrt of negative value {r}")));
        }
        let source = format!("sqrt({})", fmt_ratio(&r));
        let exact = rational_sqrt(&r);
        Ok(Scalar {
            value: ratio_to_f64(&r).sqrt(),
            exact,
            square: Some(r),
            source,
        })
    }

    pub fn float(x: f64) -> Self {
        Scalar {
            value: x,
            exact: None,
            square: None,
            source: format!("{x:?}"),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn square(&self) -> Option<&BigRational> {
        self.square.as_ref()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(r) => r.is_zero(),
            None => self.value == 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match &self.exact {
            Some(r) => r.is_positive(),
            None => match &self.square {
                Some(s) => s.is_positive(),
                None => self.value > 0.0,
            },
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::integer(n)
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::float(x)
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            return match parse_rational(inner.trim()) {
                Some(r) => Scalar::sqrt_of(r).map(|mut sc| {
                    sc.source = t.to_string();
                    sc
                }),
                None => {
                    let x: f64 = inner
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad number `{inner}` in `{t}`")))?;
                    if x < 0.0 {
                        return Err(Error::Domain(format!("sqrt of negative value in `{t}`")));
                    }
                    Ok(Scalar {
                        value: x.sqrt(),
                        exact: None,
                        square: None,
                        source: t.to_string(),
                    })
                }
            };
        }
        if let Some(r) = parse_rational(t) {
            let mut sc = Scalar::from_rational(r);
            sc.source = t.to_string();
            return Ok(sc);
        }
        let x: f64 = t
            .parse()
            .map_err(|_| Error::Parse(format!("bad number `{t}`")))?;
        if !x.is_finite() {
            return Err(Error::Parse(format!("non-finite number `{t}`")));
        }
        Ok(Scalar {
            value: x,
            exact: None,
            square: None,
            source: t.to_string(),
        })
    }
}

/// Parses `n` or `p/q` with integer `n`, `p`, `q`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().ok()?;
    let q: BigInt = q.parse().ok()?;
    if q.is_zero() {
        return None;
    }
    Some(BigRational::new(p, q))
}

pub fn fmt_ratio(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest-ish `f64` of a big rational, robust to huge numerators/denominators.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    (n / d) * 2f64.powi((shift_n - shift_d) as i32)
}
