//! Fixed-precision number formatting shared by the CSV and JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Compact JSON with every float written by [`num`]; non-finite floats become null.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser).expect("serializing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Writes a header row and numeric rows to `path`, or to stdout when `path` is `None`.
pub fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| num(v)))?;
    }
    w.flush()
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    let mut f = File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-1.0), "-1.0000000000000000e0");
        assert_eq!(num(f64::NAN), "NaN");
    }

    #[test]
    fn json_floats_are_fixed() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            c: u32,
        }
        let s = to_json(&S { a: 0.5, b: vec![f64::NAN, -3.0], c: 7 });
        assert_eq!(s, r#"{"a":5.0000000000000000e-1,"b":[null,-3.0000000000000000e0],"c":7}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.5));
    }
}
