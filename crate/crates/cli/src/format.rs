//! Number and division formatting shared by every report.

use infoseq_core::Division;
use serde_json::{Number, Value};

/// 17 significant digits, trailing zeros dropped, positional notation for
/// moderate exponents. Always parses back to the same `f64`.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    if !(-6..=16).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        return if tail.is_empty() { format!("{sign}{head}e{exp}") } else { format!("{sign}{head}.{tail}e{exp}") };
    }
    let out = if exp < 0 {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            format!("{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    };
    format!("{sign}{out}")
}

/// A JSON number carrying the `fmt17` text; `null` when not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt17(x).parse::<Number>().expect("fmt17 emits JSON numbers"))
    } else {
        Value::Null
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// `4;1;0`, the CSV-safe spelling of a division.
pub fn division_cell(d: &Division) -> String {
    d.counts().iter().map(u32::to_string).collect::<Vec<_>>().join(";")
}

pub fn division_json(d: &Division) -> Value {
    Value::Array(d.counts().iter().map(|&c| Value::from(c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(11.0 / 23.0), "0.47826086956521741");
        assert_eq!(fmt17(1.0), "1");
        assert_eq!(fmt17(-2.5), "-2.5");
        assert_eq!(fmt17(1e-12), "9.9999999999999998e-13");
        assert_eq!(fmt17(2f64.powi(-70)), "8.4703294725430034e-22");
        assert_eq!(fmt17(1234.5), "1234.5");
        assert_eq!(fmt17(100.0), "100");
        assert_eq!(fmt17(0.001), "0.001");
    }

    #[test]
    fn round_trips() {
        for x in [11.0 / 23.0, 5.0 / 11.0, 1e-300, 8.0 * 1.83 * 27f64.sqrt(), -0.1, 123456789.123, f64::MAX, 5e-324] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x, "{}", fmt17(x));
            assert_eq!(num(x).as_f64().unwrap(), x);
        }
    }
}
