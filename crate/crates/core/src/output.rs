//! Flat-file artifacts: versioned CSV tables and key=value reports.
//!
//! Every CSV starts with a `# schema=<name>/<version>` comment line followed by
//! the column header. Floats use Rust's shortest round-trip formatting. Files are
//! written to a temporary sibling and renamed into place.

use std::fmt::{self, Display};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

impl Schema {
    pub fn tag(&self) -> String {
        format!("# schema={}/{}", self.name, self.version)
    }
}

pub const FIG1A: Schema = Schema {
    name: "fig1a",
    version: 1,
    columns: &["g", "n_mean", "n_th"],
};

pub const FIG1B: Schema = Schema {
    name: "fig1b",
    version: 1,
    columns: &["log_mu", "v_scaled", "n_scaled", "valid_flag"],
};

pub const TRAJECTORY: Schema = Schema {
    name: "trajectory",
    version: 1,
    columns: &["t", "g", "n_mean", "n_th_exact", "n_th_asym"],
};

pub const SWEEP: Schema = Schema {
    name: "sweep",
    version: 1,
    columns: &["v", "g0", "g_star", "x0", "x_star", "n_star", "valid_flag"],
};

pub const KMC: Schema = Schema {
    name: "kmc",
    version: 1,
    columns: &["t", "n_mean", "n_stderr", "n_replicas"],
};

pub const RENORM: Schema = Schema {
    name: "renorm",
    version: 1,
    columns: &["k", "eps_k", "sigma", "sigma_mix"],
};

/// Shortest round-trip decimal, in exponent form outside [1e-4, 1e6).
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Writes `rows` under `schema` to `path`, atomically.
pub fn write_csv<I>(path: &Path, schema: &Schema, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    writeln!(tmp, "{}", schema.tag())?;
    {
        let mut w = csv::Writer::from_writer(&mut tmp);
        w.write_record(schema.columns).map_err(csv_error)?;
        for row in rows {
            if row.len() != schema.columns.len() {
                return Err(Error::Config(format!(
                    "{} row has {} fields, schema has {}",
                    schema.name,
                    row.len(),
                    schema.columns.len()
                )));
            }
            w.write_record(row.iter().map(|&x| fmt_num(x))).map_err(csv_error)?;
        }
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// A CSV table read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path)?;
    let (first, rest) = text
        .split_once('\n')
        .ok_or_else(|| Error::Config(format!("{} is empty", path.display())))?;
    let schema = first
        .strip_prefix("# schema=")
        .ok_or_else(|| Error::Config(format!("{} lacks a schema line", path.display())))?
        .to_string();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let columns = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Config(format!("bad number {f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { schema, columns, rows })
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Ordered key=value summary, one pair per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report(pub Vec<(String, String)>);

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, fmt_num(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Self {
        Report(
            text.lines()
                .filter_map(|l| l.split_once('='))
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .collect(),
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        write!(tmp, "{self}")?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
