//! Deterministic JSON: sorted keys, floats with 17 significant digits, LF endings.

use serde::Serialize;
use serde_json::{Number, Value};

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                return;
            }
            if let Some(f) = n.as_f64() {
                if let Ok(fixed) = format_f64(f).parse::<Number>() {
                    *n = fixed;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    normalize(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_and_sorted_keys() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: f64,
            count: u32,
            bad: f64,
        }
        let s = to_string(&S { zeta: 0.1, alpha: 1.0864348112133080, count: 3, bad: f64::NAN }).unwrap();
        assert!(s.contains("\"zeta\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"alpha\": 1.0864348112133080e+0"), "{s}");
        assert!(s.contains("\"count\": 3"));
        assert!(s.contains("\"bad\": null"));
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        let back: f64 = serde_json::from_str::<Value>(&s).unwrap()["zeta"].as_f64().unwrap();
        assert_eq!(back, 0.1);
    }
}
