//! Fixed-precision float output so regression files are stable byte for byte.

use serde_json::Value;

/// Significant digits used for every float written by the tools.
pub const OUTPUT_DIGITS: usize = 12;

/// `x` rounded to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Decimal text of `x` at `digits` significant digits; scientific notation
/// outside `[1e-4, 1e15)`.
pub fn format_float(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x, digits);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Rounds every float in a JSON tree; non-finite values were already
/// mapped to `null` by serde_json.
pub fn round_json_floats(v: &mut Value, digits: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x, digits)) {
                    *n = r;
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(|x| round_json_floats(x, digits)),
        Value::Object(m) => m.values_mut().for_each(|x| round_json_floats(x, digits)),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(std::f64::consts::LN_2, 12).to_string(), "0.69314718056");
        assert_eq!(format_float(std::f64::consts::LN_2, 12), "0.69314718056");
        assert_eq!(format_float(1.0 / 3.0 * 1e-30, 12), "3.33333333333e-31");
        assert_eq!(format_float(-0.0, 12), "0");
        assert_eq!(format_float(400.0, 12), "400");
        assert_eq!(format_float(f64::NAN, 12), "NaN");
    }

    #[test]
    fn json_floats_are_rounded_in_place() {
        let mut v = serde_json::json!({"a": [0.1 + 0.2, 3], "b": {"c": 2.0f64.sqrt()}});
        round_json_floats(&mut v, 12);
        assert_eq!(v.to_string(), r#"{"a":[0.3,3],"b":{"c":1.41421356237}}"#);
    }
}
