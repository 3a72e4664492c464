//! File formats of the command line pipeline.
//!
//! Every CSV starts with `# key=value` comment lines (config hash first),
//! then a header row. Floats are written with 17 significant digits so that
//! reruns can be compared byte for byte. Files are written to a temporary
//! sibling and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::domain::{Grid, Provenance, SignalTrace};
use crate::error::{Error, Result};

/// Full-precision scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// CSV text with leading metadata comments.
pub fn csv_text(meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, csv_text(meta, header, rows).as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable summary");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `t,P` columns.
pub fn write_trace(path: &Path, trace: &SignalTrace, meta: &[(&str, String)]) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .times
        .iter()
        .zip(&trace.pressures)
        .map(|(t, p)| vec![fmt_f64(*t), fmt_f64(*p)])
        .collect();
    write_csv(path, meta, &["t", "P"], &rows)
}

/// One pressure snapshot, row-major with `j` (height) as the row index.
/// The first line is `t=<s> nx=<nx> ny=<ny>` followed by the config hash.
pub fn write_snapshot(path: &Path, t: f64, grid: &Grid, pressure: &[f64], hash: &str) -> Result<()> {
    let mut out = format!("t={} nx={} ny={} config_hash={hash}\n", fmt_f64(t), grid.nx, grid.ny);
    for j in 0..grid.ny {
        let row: Vec<String> = (0..grid.nx).map(|i| fmt_f64(pressure[grid.index(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// A measured or synthetic trace read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub trace: SignalTrace,
    /// Noise-free column of a synthetic dataset; only for test oracles.
    pub clean: Option<Vec<f64>>,
    /// Noise level recorded by `synthesize`, if any.
    pub gamma: Option<f64>,
    pub meta: Vec<(String, String)>,
}

impl Dataset {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Reads a `t,P_noisy[,P_clean]` dataset or a plain `t,P` trace.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let data_err = |message: String| Error::Data {
        path: path.to_path_buf(),
        message,
    };
    let meta: Vec<(String, String)> = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.trim_start_matches('#').trim().split_once('=')?;
            Some((k.trim().to_owned(), v.trim().to_owned()))
        })
        .collect();

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| data_err(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let t_col = col("t").ok_or_else(|| data_err("missing column `t`".into()))?;
    let (p_col, provenance) = match (col("P_noisy"), col("P")) {
        (Some(c), _) => (c, Provenance::SyntheticNoisy),
        (None, Some(c)) => (c, Provenance::External),
        (None, None) => return Err(data_err("missing column `P_noisy` or `P`".into())),
    };
    let clean_col = col("P_clean");

    let (mut times, mut pressures, mut clean) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| data_err(e.to_string()))?;
        let field = |c: usize| -> Result<f64> {
            let s = rec.get(c).ok_or_else(|| data_err(format!("row {}: too few fields", k + 1)))?;
            s.parse::<f64>()
                .map_err(|e| data_err(format!("row {}: `{s}`: {e}", k + 1)))
        };
        times.push(field(t_col)?);
        pressures.push(field(p_col)?);
        if let Some(c) = clean_col {
            clean.push(field(c)?);
        }
    }
    let gamma = match meta.iter().find(|(k, _)| k == "gamma") {
        Some((_, v)) => Some(
            v.parse::<f64>()
                .map_err(|e| data_err(format!("gamma `{v}`: {e}")))?,
        ),
        None => None,
    };
    let trace = SignalTrace::new(times, pressures, provenance).map_err(|e| data_err(e.to_string()))?;
    Ok(Dataset {
        trace,
        clean: clean_col.map(|_| clean),
        gamma,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let rows = vec![
            vec![fmt_f64(1e-7), fmt_f64(0.25), fmt_f64(0.2)],
            vec![fmt_f64(2e-7), fmt_f64(-1.0 / 3.0), fmt_f64(-0.3)],
        ];
        let meta = [("config_hash", "abc".to_owned()), ("gamma", fmt_f64(0.05))];
        write_csv(&path, &meta, &["t", "P_noisy", "P_clean"], &rows).unwrap();
        let d = read_dataset(&path).unwrap();
        assert_eq!(d.trace.pressures, vec![0.25, -1.0 / 3.0]);
        assert_eq!(d.clean, Some(vec![0.2, -0.3]));
        assert_eq!(d.gamma, Some(0.05));
        assert_eq!(d.meta_value("config_hash"), Some("abc"));
        assert_eq!(d.trace.provenance, Provenance::SyntheticNoisy);
    }

    #[test]
    fn plain_trace_reads_as_external() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let tr = SignalTrace::new(vec![1.0, 2.0], vec![3.0, 4.0], Provenance::Simulated).unwrap();
        write_trace(&path, &tr, &[]).unwrap();
        let d = read_dataset(&path).unwrap();
        assert_eq!(d.trace.pressures, tr.pressures);
        assert_eq!(d.clean, None);
        assert_eq!(d.trace.provenance, Provenance::External);
    }

    #[test]
    fn malformed_rows_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,P\n1.0,abc\n").unwrap();
        let e = read_dataset(&path).unwrap_err();
        assert!(matches!(e, Error::Data { .. }), "{e}");
        std::fs::write(&path, "time,P\n1.0,2.0\n").unwrap();
        assert!(read_dataset(&path).is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("f.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
