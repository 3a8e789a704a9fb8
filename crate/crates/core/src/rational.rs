//! Exact rational helpers shared by the algebra, the series code and the
//! serialized records.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or an integer `"p"`.
pub fn parse(text: &str) -> Result<Q> {
    let text = text.trim();
    let parsed = match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad(text))?;
            let d: BigInt = d.trim().parse().map_err(|_| bad(text))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {text:?}")));
            }
            Q::new(n, d)
        }
        None => Q::from_integer(text.parse().map_err(|_| bad(text))?),
    };
    Ok(parsed)
}

fn bad(text: &str) -> Error {
    Error::Parse(format!("expected a rational \"p/q\", got {text:?}"))
}

/// Canonical `"p/q"` form (`"p"` for integers).
pub fn format(value: &Q) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn in_unit_interval(value: &Q) -> bool {
    !value.is_negative() && *value <= Q::one()
}
