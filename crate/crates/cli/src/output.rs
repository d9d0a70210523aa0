//! CSV tables and their `.meta` sidecars.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Significant digits in emitted numbers.
pub const DIGITS: usize = 12;

/// Shortest plain or exponent form carrying [`DIGITS`] significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mant.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }
}

/// Run metadata written next to a data file: tool version plus the
/// invocation as `key = value` lines. Never contains timestamps.
#[derive(Debug, Clone, Default)]
pub struct Meta {
    pub entries: Vec<(String, String)>,
}

impl Meta {
    pub fn add(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn render(&self) -> String {
        let mut s = format!("tool = remotefc {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}

pub fn meta_path(data: &Path) -> PathBuf {
    let mut p = data.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

/// Writes `table` to `path` (stdout when `None`) and the sidecar next to it.
pub fn emit(path: Option<&Path>, table: &Table, meta: &Meta) -> Result<()> {
    let bytes = table.to_csv()?;
    match path {
        Some(p) => {
            std::fs::write(p, &bytes).with_context(|| format!("cannot write {}", p.display()))?;
            let mp = meta_path(p);
            std::fs::write(&mp, meta.render()).with_context(|| format!("cannot write {}", mp.display()))?;
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(31.4523456789012345), "31.4523456789");
        assert_eq!(num(1e-9), "1e-9");
        assert_eq!(num(1.234e20), "1.234e20");
        assert_eq!(num(123456789012345.0), "1.23456789012e14");
    }

    #[test]
    fn round_trip_keeps_twelve_digits() {
        for x in [0.123456789012345, 9.87654321e-4, 1e-300, 4.0 / 7.0, 2.0f64.sqrt() * 1e7] {
            let back: f64 = num(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 5e-12, "{x} -> {}", num(x));
        }
    }

    #[test]
    fn header_only_and_lf() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv().unwrap(), b"a,b\n");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), b"a,b\n1,\"x,y\"\n");
    }
}
