//! Deterministic CSV and JSON output.
//!
//! Floats are always written with 17 significant digits in scientific
//! notation, so every value round-trips exactly and identical runs give
//! identical bytes. Files end with a newline.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct EmitError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// A single table value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(i64::try_from(v).expect("count fits in i64"))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::from(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Int(v) => s.serialize_i64(*v),
            Cell::Float(v) => s.serialize_f64(*v),
            Cell::Text(v) => s.serialize_str(v),
            Cell::Bool(v) => s.serialize_bool(*v),
            Cell::Missing => s.serialize_none(),
        }
    }
}

/// A table with a fixed column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Records {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Records {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| (*c).to_owned()).collect(), rows: Vec::new() }
    }

    /// Appends a row; panics if its width differs from the header's.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the columns");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Serializes as an array of objects whose keys follow the column order.
impl Serialize for Records {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Row<'a>(&'a [String], &'a [Cell]);
        impl Serialize for Row<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0.iter().zip(self.1) {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
        let mut seq = s.serialize_seq(Some(self.rows.len()))?;
        for row in &self.rows {
            seq.serialize_element(&Row(&self.columns, row))?;
        }
        seq.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// Writes `records` to `path` in the given format.
pub fn emit_results(records: &Records, format: Format, path: &Path) -> Result<(), EmitError> {
    let bytes = match format {
        Format::Csv => to_csv(records),
        Format::Json => to_json(records),
    };
    write_bytes(path, &bytes)
}

/// Writes any serializable value as pretty JSON with the float format above.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<(), EmitError> {
    write_bytes(path, &to_json(value))
}

pub fn to_csv(records: &Records) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(&records.columns)?;
        for row in &records.rows {
            w.write_record(row.iter().map(Cell::csv_field))?;
        }
        w.flush()?;
        Ok(())
    };
    write(&mut w).expect("writing to memory cannot fail");
    w.into_inner().expect("in-memory writer")
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloatFormatter::default());
    value.serialize(&mut ser).expect("values serialize to JSON");
    out.push(b'\n');
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), EmitError> {
    fs::write(path, bytes).map_err(|source| EmitError { path: path.to_owned(), source })
}

/// Pretty printing with every float in the fixed 17-digit form.
#[derive(Default)]
struct FixedFloatFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(writer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn metrics() -> Records {
        Records::new(&["t", "ndi", "gdi"])
    }

    #[test]
    fn empty_records_give_a_header_only_csv() {
        assert_eq!(String::from_utf8(to_csv(&metrics())).unwrap(), "t,ndi,gdi\n");
        assert_eq!(String::from_utf8(to_json(&metrics())).unwrap(), "[]\n");
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let mut r = metrics();
        r.push(vec![0u64.into(), 0.1.into(), (1.0 / 3.0).into()]);
        let text = String::from_utf8(to_csv(&r)).unwrap();
        assert_eq!(text, "t,ndi,gdi\n0,1.0000000000000001e-1,3.3333333333333331e-1\n");
        for field in text.lines().nth(1).unwrap().split(',').skip(1) {
            let digits = field.split('e').next().unwrap().replace('.', "");
            assert_eq!(digits.len(), 17);
        }
        assert_eq!(format_float(f64::NAN), "NaN");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn json_round_trips_exactly() {
        let mut r = Records::new(&["z", "a", "label", "flag", "gap"]);
        let values = [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 5e-324, -0.0];
        for (i, v) in values.iter().enumerate() {
            r.push(vec![(*v).into(), Cell::Int(i as i64), "x,y".into(), true.into(), Cell::Missing]);
        }
        let text = to_json(&r);
        assert_eq!(*text.last().unwrap(), b'\n');
        let parsed: Value = serde_json::from_slice(&text).unwrap();
        for (i, v) in values.iter().enumerate() {
            let row = parsed[i].as_object().unwrap();
            // keys keep the column order in the text even though the map sorts them
            assert_eq!(row["z"].as_f64().unwrap().to_bits(), v.to_bits());
            assert_eq!(row["gap"], Value::Null);
        }
        let s = String::from_utf8(text).unwrap();
        assert!(s.find("\"z\"").unwrap() < s.find("\"a\"").unwrap());
    }

    #[test]
    fn non_finite_json_floats_become_null() {
        assert_eq!(String::from_utf8(to_json(&[f64::NAN, 1.0])).unwrap(), "[\n  null,\n  1.0000000000000000e0\n]\n");
    }

    #[test]
    fn csv_quotes_text_with_separators() {
        let mut r = Records::new(&["name"]);
        r.push(vec!["a,b".into()]);
        assert_eq!(String::from_utf8(to_csv(&r)).unwrap(), "name\n\"a,b\"\n");
    }

    #[test]
    fn unwritable_destination_names_the_path() {
        let err = emit_results(&metrics(), Format::Csv, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
