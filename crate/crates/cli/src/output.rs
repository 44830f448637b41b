//! Stable text encodings. Every float is written with 17 significant digits
//! (`{:.16e}`) so that it parses back to the same bits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Version tag carried by every JSON document.
pub const REPORT_SCHEMA_VERSION: &str = "1.0.0";

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Floats in `{:.16e}` form, layout from [`PrettyFormatter`].
/// Non-finite values never reach the formatter: serde_json writes `null`.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:.8e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    spec_version: &'static str,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Serializes `body` under a `{spec_version, command, ...}` envelope.
pub fn json_document<T: Serialize>(command: &str, body: &T) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    Envelope {
        spec_version: REPORT_SCHEMA_VERSION,
        command,
        body,
    }
    .serialize(&mut ser)
    .map_err(io::Error::other)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Header plus rows, comma-separated, newline-terminated.
#[derive(Debug, Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// Vector entries joined by `;` (a single number when `m = 1`).
pub fn floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| float(v))
        .collect::<Vec<_>>()
        .join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_digits() {
        for x in [0.1, -0.4, 1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(float(-0.4), "-4.0000000000000002e-1");
        assert_eq!(float(f64::NAN), "NaN");
    }

    #[test]
    fn json_envelope() {
        #[derive(Serialize)]
        struct Body {
            value: f64,
            missing: f64,
        }
        let doc = json_document(
            "oracle",
            &Body {
                value: 0.5,
                missing: f64::NAN,
            },
        )
        .unwrap();
        let text = String::from_utf8(doc).unwrap();
        assert!(text.contains("\"value\": 5.0000000000000000e-1"));
        assert!(text.contains("\"missing\": null"));
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["spec_version"], REPORT_SCHEMA_VERSION);
        assert_eq!(parsed["command"], "oracle");
        assert_eq!(parsed["value"], 0.5);
    }
}
