//! Deterministic CSV, JSON and PGM writers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to twelve significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Twelve significant digits, plain notation for moderate magnitudes.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(v);
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

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                *v = Number::from_f64(round_sig(f)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and rounded floats.
pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, json_string(value)?)?;
    Ok(())
}

/// CSV with a header row; fields are written as given.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Plain-text (P2) grayscale image with values already in `0..=255`.
pub fn pgm(width: usize, height: usize, pixels: &[u8]) -> String {
    assert_eq!(pixels.len(), width * height, "pixel count mismatch");
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in pixels.chunks(width.max(1)) {
        for (i, chunk) in row.chunks(17).enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let line: Vec<String> = chunk.iter().map(u8::to_string).collect();
            let _ = write!(out, "{}", line.join(" "));
        }
        out.push('\n');
    }
    out
}

/// Linear map of `values` onto `0..=255` between their extremes.
pub fn scale_to_gray(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    values
        .iter()
        .map(|&v| {
            if !v.is_finite() || span <= 0.0 {
                0
            } else {
                (255.0 * (v - lo) / span).round() as u8
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_f64(4.0), "4");
        assert_eq!(fmt_f64(-2.5e-7), "-2.5e-7");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(std::f64::consts::PI * 1e3), "3141.59265359");
    }

    #[test]
    fn json_keys_sorted_and_rounded() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: u32,
        }
        let s = json_string(&S { zeta: 2.0 / 3.0, alpha: 7 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        assert!(s.contains("0.666666666667"), "{s}");
    }

    #[test]
    fn pgm_layout() {
        let img = pgm(2, 2, &[0, 255, 10, 20]);
        assert_eq!(img, "P2\n2 2\n255\n0 255\n10 20\n");
        assert_eq!(scale_to_gray(&[1.0, 2.0, 3.0]), vec![0, 128, 255]);
    }
}
