//! Plain-text helpers shared by the file formats.

use std::io::{self, BufRead, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

/// Formats a float with 17 significant digits, enough to round-trip `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Pretty JSON formatter that writes floats with 17 significant digits and
/// non-finite values as `null`.
struct Fmt17<'a>(PrettyFormatter<'a>);

impl Formatter for Fmt17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
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
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty-printed JSON with every float written by [`fmt_f64`].
pub fn to_json<S: Serialize + ?Sized>(value: &S) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fmt17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Reads a comma-separated file with a header row into (header, rows).
pub fn read_csv(reader: impl BufRead) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = reader.lines();
    let header = loop {
        match lines.next() {
            Some(Ok(l)) if l.trim().is_empty() => continue,
            Some(Ok(l)) => {
                break l
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .collect::<Vec<_>>()
            }
            Some(Err(e)) => return Err(e.to_string()),
            None => return Err("empty file".into()),
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", i + 2))?;
        if row.len() != header.len() {
            return Err(format!(
                "line {}: expected {} fields, got {}",
                i + 2,
                header.len(),
                row.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_csv(
    mut w: impl Write,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_floats_have_17_digits() {
        let text = to_json(&vec![0.1f64, 2.0]);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![0.1, 2.0]);
        assert_eq!(to_json(&f64::INFINITY), "null");
    }

    #[test]
    fn csv_round_trip() {
        let header = vec!["a".to_string(), "b".to_string()];
        let mut buf = Vec::new();
        write_csv(&mut buf, &header, vec![vec![1.5, -2.0], vec![0.1, 3.0]]).unwrap();
        let (h, rows) = read_csv(&buf[..]).unwrap();
        assert_eq!(h, header);
        assert_eq!(rows, vec![vec![1.5, -2.0], vec![0.1, 3.0]]);
        assert!(read_csv(&b"a,b\n1,2,3\n"[..]).is_err());
    }
}
