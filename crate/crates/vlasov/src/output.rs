//! Deterministic file formats: RFC 4180 CSV with 17 significant digits and
//! JSON with sorted keys.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("serializing {what}: {source}")]
    Json {
        what: &'static str,
        source: serde_json::Error,
    },
}

/// `x` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Writes a header and rows of pre-formatted fields.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let err = |source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Pretty JSON with keys sorted at every level and a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T, what: &'static str) -> Result<String, OutputError> {
    // serde_json's map type is ordered by key unless `preserve_order` is on,
    // so a round trip through `Value` sorts struct fields too.
    let v = serde_json::to_value(value).map_err(|source| OutputError::Json { what, source })?;
    let mut text = serde_json::to_string_pretty(&v).map_err(|source| OutputError::Json { what, source })?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T, what: &'static str) -> Result<(), OutputError> {
    let text = to_sorted_json(value, what)?;
    fs::write(path, text).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.display().to_string(),
        source,
    })
}

pub fn version_string() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

#[derive(Serialize)]
struct Provenance<'a> {
    config: &'a RunConfig,
    version: String,
}

/// Echoes the effective configuration and the tool version into `dir`.
pub fn write_provenance(dir: &Path, cfg: &RunConfig) -> Result<(), OutputError> {
    ensure_dir(dir)?;
    write_json(
        &dir.join("provenance.json"),
        &Provenance {
            config: cfg,
            version: version_string(),
        },
        "provenance",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut m = HashMap::new();
        for k in ["zeta", "alpha", "mid", "beta"] {
            m.insert(k, 1);
        }
        let text = to_sorted_json(&m, "map").unwrap();
        let pos: Vec<usize> = ["alpha", "beta", "mid", "zeta"]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a", "b"], vec![vec![fmt_f64(0.5), "x,y".to_string()]]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\r\n5.0000000000000000e-1,\"x,y\"\r\n");
    }
}
