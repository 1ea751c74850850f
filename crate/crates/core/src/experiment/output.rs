//! Per-run series, their aggregation, and CSV / plot-data files.
//!
//! Summary CSVs have the header `algorithm,index,mean,std,n_runs`, LF line
//! endings, and floats in shortest round-trip form, so a written file reads
//! back to the identical summary.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One run's metric series. `index[i]` is the step or episode at which
/// `values[i]` was recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    /// Run number; together with the base seed it selects the RNG stream.
    pub run: u64,
    pub index: Vec<u64>,
    pub values: Vec<f64>,
}

/// Mean and population standard deviation across runs at each index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub algorithm: String,
    pub index: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_runs: usize,
}

impl CurveSummary {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn last_mean(&self) -> Option<f64> {
        self.mean.last().copied()
    }

    /// First recorded index at which the mean drops below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<u64> {
        self.mean.iter().position(|&m| m < threshold).map(|i| self.index[i])
    }
}

/// Aggregate records of one algorithm. Records are ordered by run first so
/// the floating-point sums do not depend on completion order.
pub fn aggregate(records: &[RunRecord]) -> Result<CurveSummary> {
    let first = records.first().ok_or_else(|| Error::Config("nothing to aggregate".into()))?;
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.run);
    for r in &sorted {
        if r.algorithm != first.algorithm || r.index != first.index || r.values.len() != r.index.len() {
            return Err(Error::Dimension(format!("run {} of {} does not align with run {}", r.run, r.algorithm, first.run)));
        }
    }
    let n = sorted.len() as f64;
    let len = first.index.len();
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for i in 0..len {
        let m = sorted.iter().map(|r| r.values[i]).sum::<f64>() / n;
        let s = if m.is_finite() {
            (sorted.iter().map(|r| (r.values[i] - m).powi(2)).sum::<f64>() / n).sqrt()
        } else {
            // Some run diverged; the spread is unbounded too.
            f64::INFINITY
        };
        mean.push(m);
        std.push(s);
    }
    Ok(CurveSummary { algorithm: first.algorithm.clone(), index: first.index.clone(), mean, std, n_runs: sorted.len() })
}

#[derive(Serialize, Deserialize)]
struct Row {
    algorithm: String,
    index: u64,
    mean: f64,
    std: f64,
    n_runs: usize,
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

/// Write summaries as `algorithm,index,mean,std,n_runs`.
pub fn write_csv(summaries: &[CurveSummary], path: &Path) -> Result<()> {
    if summaries.is_empty() {
        return Err(Error::Config("no summaries to write".into()));
    }
    let mut w = writer(path)?;
    for s in summaries {
        for i in 0..s.len() {
            let row = Row { algorithm: s.algorithm.clone(), index: s.index[i], mean: s.mean[i], std: s.std[i], n_runs: s.n_runs };
            w.serialize(row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a file written by [`write_csv`]. Rows of one algorithm must be
/// contiguous.
pub fn read_csv(path: &Path) -> Result<Vec<CurveSummary>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["algorithm", "index", "mean", "std", "n_runs"] {
        return Err(Error::parse(path, format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out: Vec<CurveSummary> = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        match out.last_mut() {
            Some(s) if s.algorithm == row.algorithm => {
                if s.n_runs != row.n_runs {
                    return Err(Error::parse(path, format!("n_runs changes within {}", row.algorithm)));
                }
                s.index.push(row.index);
                s.mean.push(row.mean);
                s.std.push(row.std);
            }
            _ => {
                if out.iter().any(|s| s.algorithm == row.algorithm) {
                    return Err(Error::parse(path, format!("rows of {} are not contiguous", row.algorithm)));
                }
                out.push(CurveSummary {
                    algorithm: row.algorithm,
                    index: vec![row.index],
                    mean: vec![row.mean],
                    std: vec![row.std],
                    n_runs: row.n_runs,
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SeriesRow {
    index: u64,
    mean: f64,
    std: f64,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub algorithm: String,
    pub file: String,
    pub n_runs: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// Column names of every series file.
    pub columns: Vec<String>,
    pub series: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn file_stem(algorithm: &str) -> String {
    algorithm.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Write `<algorithm>.csv` per summary (`index,mean,std,lower,upper` with
/// `lower/upper = mean ∓ std`) and a `manifest.json` listing them.
pub fn emit_plot_data(summaries: &[CurveSummary], dir: &Path) -> Result<Manifest> {
    if summaries.is_empty() {
        return Err(Error::Config("no summaries to plot".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut series = Vec::new();
    for s in summaries {
        let file = format!("{}.csv", file_stem(&s.algorithm));
        if series.iter().any(|e: &ManifestEntry| e.file == file) {
            return Err(Error::Config(format!("two series map to the file name {file}")));
        }
        let path = dir.join(&file);
        let mut w = writer(&path)?;
        for i in 0..s.len() {
            let row = SeriesRow {
                index: s.index[i],
                mean: s.mean[i],
                std: s.std[i],
                lower: s.mean[i] - s.std[i],
                upper: s.mean[i] + s.std[i],
            };
            w.serialize(row).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        series.push(ManifestEntry { algorithm: s.algorithm.clone(), file, n_runs: s.n_runs, points: s.len() });
    }
    let manifest = Manifest {
        columns: ["index", "mean", "std", "lower", "upper"].map(String::from).to_vec(),
        series,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::parse(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(alg: &str, run: u64, values: &[f64]) -> RunRecord {
        RunRecord { algorithm: alg.into(), run, index: (0..values.len() as u64).collect(), values: values.to_vec() }
    }

    #[test]
    fn aggregate_matches_two_pass_formula() {
        let recs = [record("TD", 1, &[1.0, 4.0]), record("TD", 0, &[3.0, 0.0])];
        let s = aggregate(&recs).unwrap();
        assert_eq!(s.mean, vec![2.0, 2.0]);
        assert_eq!(s.std, vec![1.0, 2.0]);
        assert_eq!(s.n_runs, 2);
    }

    #[test]
    fn aggregate_is_order_independent() {
        let a = [record("X", 0, &[0.1, 0.7]), record("X", 1, &[0.2, 0.3]), record("X", 2, &[1e-17, 0.5])];
        let b = [a[2].clone(), a[0].clone(), a[1].clone()];
        assert_eq!(aggregate(&a).unwrap(), aggregate(&b).unwrap());
    }

    #[test]
    fn diverged_runs_give_infinite_spread() {
        let s = aggregate(&[record("TD", 0, &[f64::INFINITY]), record("TD", 1, &[1.0])]).unwrap();
        assert_eq!((s.mean[0], s.std[0]), (f64::INFINITY, f64::INFINITY));
    }

    #[test]
    fn misaligned_records_are_rejected() {
        assert!(aggregate(&[record("TD", 0, &[1.0]), record("TD", 1, &[1.0, 2.0])]).is_err());
        assert!(aggregate(&[record("TD", 0, &[1.0]), record("VMTD", 1, &[1.0])]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    fn summary(alg: &str, len: usize) -> CurveSummary {
        CurveSummary {
            algorithm: alg.into(),
            index: (0..len as u64).collect(),
            mean: (0..len).map(|i| 0.1 * i as f64 + 1.0 / 3.0).collect(),
            std: (0..len).map(|i| (i as f64).sqrt() / 7.0).collect(),
            n_runs: 5,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut a = summary("VMTD", 3);
        a.mean[1] = f64::INFINITY;
        a.std[1] = f64::INFINITY;
        let summaries = vec![a, summary("TD", 3)];
        write_csv(&summaries, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("algorithm,index,mean,std,n_runs\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 1 + 6);
        assert_eq!(read_csv(&path).unwrap(), summaries);
    }

    #[test]
    fn single_summary_has_header_plus_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        write_csv(&[summary("TD", 3)], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 4);
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let path = blocker.join("out.csv");
        let err = write_csv(&[summary("TD", 1)], &path).unwrap_err();
        assert!(err.to_string().contains(&blocker.display().to_string()), "{err}");
    }

    #[test]
    fn plot_data_has_one_file_per_series() {
        let dir = tempfile::tempdir().unwrap();
        let m = emit_plot_data(&[summary("TD", 4), summary("VMTD", 4)], dir.path()).unwrap();
        assert_eq!(m.series.len(), 2);
        for e in &m.series {
            let text = fs::read_to_string(dir.path().join(&e.file)).unwrap();
            assert_eq!(text.lines().count(), 5);
        }
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(manifest, m);
    }

    #[test]
    fn empty_input_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_csv(&[], &dir.path().join("x.csv")).is_err());
        assert!(emit_plot_data(&[], dir.path()).is_err());
    }
}
