//! Exact arithmetic helpers shared by the cost/duration model and the
//! distance measures.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};

/// Exact quantity used for action costs, durations, makespans and plan costs.
pub type Quantity = Rational64;

/// Parses a plain decimal literal (`12`, `0.5`, `-3.25`, `1e-2` is rejected)
/// into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Quantity> {
    let text = text.trim();
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    if digits.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let mut numer: i64 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        numer = numer.checked_mul(10)?.checked_add(i64::from(c as u8 - b'0'))?;
    }
    let denom = 10i64.checked_pow(frac_part.len() as u32)?;
    let value = Quantity::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Converts a JSON number into an exact rational through its shortest
/// round-trip decimal form.
pub fn from_json_number(n: &serde_json::Number) -> Option<Quantity> {
    if let Some(i) = n.as_i64() {
        return Some(Quantity::from_integer(i));
    }
    let text = n.to_string();
    parse_decimal(&text).or_else(|| n.as_f64().and_then(Quantity::approximate_float))
}

pub fn to_f64(q: &Quantity) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn big(q: &Quantity) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

pub fn big_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `1 - |inter| / |union|`, with the empty/empty case defined as 0.
pub fn jaccard_distance(inter: usize, union: usize) -> BigRational {
    if union == 0 {
        return BigRational::zero();
    }
    BigRational::new(BigInt::from(union - inter), BigInt::from(union))
}

/// Renders an exact quantity as a JSON number (integers stay integral).
pub fn to_json_number(q: &Quantity) -> serde_json::Value {
    if q.is_integer() {
        serde_json::Value::from(q.to_integer())
    } else {
        serde_json::Number::from_f64(to_f64(q))
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// Decimal rendering used by the PDDL printer; falls back to a fraction
/// only for non-terminating values.
pub fn to_decimal_string(q: &Quantity) -> String {
    if q.is_integer() {
        return q.to_integer().to_string();
    }
    let mut d = *q.denom();
    while d % 2 == 0 {
        d /= 2;
    }
    while d % 5 == 0 {
        d /= 5;
    }
    if d == 1 {
        let f = to_f64(q);
        let s = format!("{f}");
        if parse_decimal(&s) == Some(*q) {
            return s;
        }
    }
    format!("{}/{}", q.numer(), q.denom())
}
