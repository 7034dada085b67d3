//! Fixed float formatting shared by every export.

/// Formats like C's `%.12e`: `-1.234567890123e+00`.
pub fn sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{:.12e}", v);
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{}e{}{:02}", mant, sign, e.abs())
}

/// JSON value for an extended real: finite numbers keep the fixed format,
/// infinities become the strings `"inf"` / `"-inf"`.
pub fn json_num(v: f64) -> serde_json::Value {
    if v.is_finite() {
        let n: serde_json::Number = sci(v).parse().expect("valid number literal");
        serde_json::Value::Number(n)
    } else {
        serde_json::Value::String(sci(v))
    }
}

pub fn json_opt(v: Option<f64>) -> serde_json::Value {
    v.map(json_num).unwrap_or(serde_json::Value::Null)
}
