//! Deterministic output: `%.17g` floats, sorted JSON keys, LF-terminated CSV,
//! and atomic writes.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// Where a reported number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    /// A closed-form value the computation is compared against.
    Exact,
    /// Produced by a numerical computation in this run.
    Measured,
    /// Echoed from the configuration or fixed by construction.
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub tag: Tag,
}

/// One asserted invariant. `max_violation` is how far the bound was missed,
/// `0` when it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub samples: usize,
    pub max_violation: f64,
    pub pass: bool,
}

impl Check {
    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, samples: usize, value: f64, bound: f64) -> Self {
        let v = if value.is_nan() { f64::INFINITY } else { (value - bound).max(0.0) };
        Self { check: name.into(), samples, max_violation: v, pass: value <= bound }
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, samples: usize, value: f64, bound: f64) -> Self {
        let v = if value.is_nan() { f64::INFINITY } else { (bound - value).max(0.0) };
        Self { check: name.into(), samples, max_violation: v, pass: value >= bound }
    }

    pub fn flag(name: impl Into<String>, samples: usize, ok: bool) -> Self {
        Self { check: name.into(), samples, max_violation: if ok { 0.0 } else { 1.0 }, pass: ok }
    }
}

/// Summary of one run. Serialized through [`to_json`], which sorts keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDoc {
    pub scenario: String,
    pub config: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub numbers: BTreeMap<String, Quantity>,
    /// Free-form structured results (classes, witnesses, file names).
    pub details: BTreeMap<String, serde_json::Value>,
    pub pass: bool,
    /// Only present when requested: it is the one nondeterministic field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl ReportDoc {
    pub fn new(scenario: impl Into<String>, config: BTreeMap<String, String>) -> Self {
        Self { scenario: scenario.into(), config, checks: Vec::new(), numbers: BTreeMap::new(), details: BTreeMap::new(), pass: true, wall_time: None }
    }

    pub fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn number(&mut self, key: impl Into<String>, value: f64, tag: Tag) {
        self.numbers.insert(key.into(), Quantity { value, tag });
    }

    pub fn detail(&mut self, key: impl Into<String>, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(serde_json::Value::Null);
        self.details.insert(key.into(), v);
    }
}

/// C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Pretty printer that writes every float with [`fmt_g17`].
struct G17<'a>(PrettyFormatter<'a>);

impl Formatter for G17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_g17(value).as_bytes())
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

/// JSON with sorted keys (via `Value`'s ordered map), `%.17g` floats and a
/// trailing newline. Non-finite floats become `null`.
pub fn to_json(v: &impl Serialize) -> Result<String> {
    let value = serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.into_iter().map(fmt_g17).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Columns of a CSV produced by [`csv_string`], keyed by header name.
pub fn parse_csv(text: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?.split(',').map(|h| h.trim().to_string()).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, l) in lines.enumerate() {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Config(format!("CSV row {} has {} cells, header has {}", i + 2, cells.len(), header.len())));
        }
        for (c, cell) in cols.iter_mut().zip(cells) {
            c.push(cell.trim().parse().map_err(|_| Error::Config(format!("CSV row {}: not a number: {cell:?}", i + 2)))?);
        }
    }
    Ok(header.into_iter().zip(cols).collect())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_c() {
        // Reference strings from printf("%.17g").
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1e20, "1e+20"),
            (123456.0, "123456"),
            (1e16, "10000000000000000"),
            (1e17, "1e+17"),
            (0.0001, "0.0001"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (0.0, "0"),
            (5e-324, "4.9406564584124654e-324"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g17(x), want, "{x}");
        }
    }

    #[test]
    fn g17_round_trips() {
        let mut x = 1.234567e-30f64;
        while x < 1e30 {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
            x *= 7.77;
        }
    }

    #[test]
    fn json_keys_sorted_and_floats_fixed() {
        #[derive(Serialize)]
        struct S {
            zeta: f64,
            alpha: u32,
            mid: Vec<f64>,
        }
        let s = to_json(&S { zeta: 0.1, alpha: 3, mid: vec![1e-7, f64::NAN] }).unwrap();
        let a = s.find("alpha").unwrap();
        let m = s.find("mid").unwrap();
        let z = s.find("zeta").unwrap();
        assert!(a < m && m < z);
        assert!(s.contains("0.10000000000000001") && s.contains("9.9999999999999995e-08") && s.contains("null"));
        assert!(s.ends_with("}\n") && !s.contains('\r'));
    }

    #[test]
    fn csv_round_trip_and_atomic_write() {
        let text = csv_string(&["t", "f"], vec![vec![0.0, 1.0], vec![0.5, 1.0 / 3.0]]);
        assert_eq!(text, "t,f\n0,1\n0.5,0.33333333333333331\n");
        let cols = parse_csv(&text).unwrap();
        assert_eq!(cols["f"][1], 1.0 / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.csv");
        write_atomic(&p, &text).unwrap();
        write_atomic(&p, &text).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), text);
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
        assert!(parse_csv("t,f\n1,2,3\n").is_err());
    }
}
