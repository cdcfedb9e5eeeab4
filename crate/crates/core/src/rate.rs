//! Exact rate and size arithmetic.
//!
//! Rates are kilobits per second and sizes are kilobits, both carried as
//! `i128` rationals so that equality tests in the flow decomposition are
//! exact. Floating point only appears inside the LP solver.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

/// Resolution used when a floating-point rate enters rational arithmetic:
/// 1 bit per second.
pub const BPS_PER_KBPS: i128 = 1000;

pub fn int(v: i128) -> Rational {
    Rational::from_integer(v)
}

/// Rationalizes a kbps value at 1 bps resolution.
pub fn from_kbps_f64(v: f64) -> Rational {
    Rational::new((v * BPS_PER_KBPS as f64).round() as i128, BPS_PER_KBPS)
}

/// Converts an arbitrary finite float to a rational with the given
/// denominator, rounding to nearest.
pub fn from_f64_with_den(v: f64, den: i128) -> Rational {
    Rational::new((v * den as f64).round() as i128, den)
}

/// Parses a decimal literal such as `"1.7"` exactly.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 18 {
        return None;
    }
    let den = 10i128.pow(frac.len() as u32);
    let w: i128 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let f: i128 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let num = w.checked_mul(den)?.checked_add(f)?;
    Some(Rational::new(if neg { -num } else { num }, den))
}

/// Exact rational for a float that was written as a short decimal in a
/// config file (e.g. `0.6`), falling back to 1e-9 resolution.
pub fn from_config_f64(v: f64) -> Rational {
    parse_decimal(&format!("{v}")).unwrap_or_else(|| from_f64_with_den(v, 1_000_000_000))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_positive(r: &Rational) -> bool {
    *r > Rational::zero()
}

pub fn fmt_exact(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("1.7"), Some(Rational::new(17, 10)));
        assert_eq!(parse_decimal("0.6"), Some(Rational::new(3, 5)));
        assert_eq!(parse_decimal("8000"), Some(int(8000)));
        assert_eq!(parse_decimal("-2.5"), Some(Rational::new(-5, 2)));
        assert_eq!(parse_decimal("x"), None);
        assert_eq!(parse_decimal("."), None);
    }

    #[test]
    fn config_floats_round_trip_short_decimals() {
        assert_eq!(from_config_f64(0.6), Rational::new(3, 5));
        assert_eq!(from_config_f64(5.0), int(5));
    }

    #[test]
    fn kbps_resolution_is_one_bit() {
        assert_eq!(from_kbps_f64(1.0004), int(1));
        assert_eq!(from_kbps_f64(2.5), Rational::new(5, 2));
    }
}
