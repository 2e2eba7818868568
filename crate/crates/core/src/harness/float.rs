//! Floats as JSON numbers with 17 significant digits.
//!
//! `format_g17` renders like C's `%.17g`, which is enough digits to
//! round-trip any `f64`. Under `serde_json`'s `arbitrary_precision` the
//! rendered text is emitted verbatim as a JSON number.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// `%.17g`: 17 significant digits, trailing zeros removed, scientific
/// notation when the exponent is below -4 or at least 17.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn number(x: f64) -> Option<serde_json::Number> {
    x.is_finite()
        .then(|| format_g17(x).parse().expect("formatted float is a JSON number"))
}

pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    number(*x).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Option::<f64>::deserialize(d).map(|x| x.unwrap_or(f64::NAN))
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.and_then(number).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g17() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (0.25, "0.25"),
            (1.0 / 3.0, "0.33333333333333331"),
            (0.55, "0.55000000000000004"),
            (1e-5, "1.0000000000000001e-05"),
            (123456.0, "123456"),
            (1e17, "1e+17"),
            (-2.5e-7, "-2.4999999999999999e-07"),
            (0.0001, "0.0001"),
            (9.999_999_999_999_999e16, "99999999999999984"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g17(x), want, "{x:e}");
        }
    }

    #[test]
    fn round_trips() {
        let mut x = 0.123_456_789_f64;
        for _ in 0..2000 {
            x = (x * 7.3 + 0.1).fract() * 10f64.powi((x * 40.0) as i32 - 20);
            let s = format_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Probe {
        #[serde(with = "super")]
        a: f64,
        #[serde(with = "super::option")]
        b: Option<f64>,
    }

    #[test]
    fn serde_emits_raw_digits() {
        let p = Probe { a: 0.1, b: None };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"a":0.10000000000000001,"b":null}"#);
        assert_eq!(serde_json::from_str::<Probe>(&s).unwrap(), p);
        let q = Probe { a: 2.0, b: Some(1e-9) };
        let back: Probe = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back, q);
    }
}
