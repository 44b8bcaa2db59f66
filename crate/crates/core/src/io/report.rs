//! Fixed-schema CSV outputs: train logs, evaluation reports, sweep summaries
//! and rank-correlation matrices.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{MetricReport, Summary};
use crate::train::TrainRecord;

pub const REPORT_COLUMNS: [&str; 11] = [
    "model",
    "gamma",
    "beta",
    "seed",
    "steps",
    "wdg",
    "factorvae",
    "mig",
    "modularity",
    "recon",
    "wall_s",
];

/// Suffix on the `model` column of the row holding standard deviations.
pub const STD_SUFFIX: &str = "_std";

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "model",
    "gamma",
    "runs",
    "wdg_mean",
    "wdg_std",
    "factorvae_mean",
    "factorvae_std",
    "mig_mean",
    "mig_std",
    "modularity_mean",
    "modularity_std",
    "recon_mean",
    "recon_std",
];

/// Metric order of the rank-correlation matrix.
pub const RANK_METRICS: [&str; 4] = ["factorvae", "mig", "wdg", "modularity"];

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub gamma: f64,
    pub beta: f64,
    pub seed: u64,
    pub steps: usize,
    pub wdg: f64,
    pub factorvae: f64,
    pub mig: f64,
    pub modularity: f64,
    pub recon: f64,
    pub wall_s: f64,
}

/// Identity columns shared by a mean row and its std sibling.
#[derive(Clone, Debug, PartialEq)]
pub struct RunKey {
    pub model: String,
    pub gamma: f64,
    pub beta: f64,
    pub seed: u64,
    pub steps: usize,
}

impl ReportRow {
    /// Mean row and its `_std` sibling. Reconstruction is deterministic, so
    /// its std is 0.
    pub fn pair(key: &RunKey, report: &MetricReport, wall_s: f64) -> [ReportRow; 2] {
        let row = |suffix: &str, pick: fn(&Summary) -> f64, recon: f64| ReportRow {
            model: format!("{}{suffix}", key.model),
            gamma: key.gamma,
            beta: key.beta,
            seed: key.seed,
            steps: key.steps,
            wdg: pick(&report.wdg),
            factorvae: pick(&report.factor_vae),
            mig: pick(&report.mig),
            modularity: pick(&report.modularity),
            recon,
            wall_s,
        };
        let recon = report.recon.unwrap_or(f64::NAN);
        [row("", |s| s.mean, recon), row(STD_SUFFIX, |s| s.std, 0.0)]
    }

    /// Row for a cell that produced no metrics.
    pub fn failed(key: &RunKey, wall_s: f64) -> ReportRow {
        ReportRow {
            model: key.model.clone(),
            gamma: key.gamma,
            beta: key.beta,
            seed: key.seed,
            steps: key.steps,
            wdg: f64::NAN,
            factorvae: f64::NAN,
            mig: f64::NAN,
            modularity: f64::NAN,
            recon: f64::NAN,
            wall_s,
        }
    }

    pub fn is_std(&self) -> bool {
        self.model.ends_with(STD_SUFFIX)
    }

    pub fn metrics(&self) -> [f64; 4] {
        [self.factorvae, self.mig, self.wdg, self.modularity]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.model.clone(),
            self.gamma.to_string(),
            self.beta.to_string(),
            self.seed.to_string(),
            self.steps.to_string(),
            self.wdg.to_string(),
            self.factorvae.to_string(),
            self.mig.to_string(),
            self.modularity.to_string(),
            self.recon.to_string(),
            format!("{:.3}", self.wall_s),
        ]
    }
}

fn open_append(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(header).map_err(csv_err)?;
    }
    Ok(w)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

/// Appends rows to a report CSV, writing the header when the file is new.
pub fn append_report(path: impl AsRef<Path>, rows: &[ReportRow]) -> Result<()> {
    let mut w = open_append(path.as_ref(), &REPORT_COLUMNS)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a sweep report: the report columns plus `status`.
pub fn write_sweep_report(path: impl AsRef<Path>, rows: &[(ReportRow, String)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header: Vec<&str> = REPORT_COLUMNS.to_vec();
    header.push("status");
    w.write_record(&header).map_err(csv_err)?;
    for (r, status) in rows {
        let mut f = r.fields();
        f.push(status.clone());
        w.write_record(f).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads mean rows from report or sweep CSVs, skipping `_std` rows and
/// cells whose `status` is not `ok`.
pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("{}: missing column `{name}`", path.display())))
    };
    let idx: Vec<usize> = REPORT_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let status = headers.iter().position(|h| h == "status");
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if status.is_some_and(|s| rec.get(s) != Some("ok")) {
            continue;
        }
        let get = |i: usize| rec.get(idx[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            get(i).parse().map_err(|_| {
                Error::Format(format!(
                    "{}: bad {} value `{}`",
                    path.display(),
                    REPORT_COLUMNS[i],
                    get(i)
                ))
            })
        };
        let row = ReportRow {
            model: get(0).to_string(),
            gamma: num(1)?,
            beta: num(2)?,
            seed: num(3)? as u64,
            steps: num(4)? as usize,
            wdg: num(5)?,
            factorvae: num(6)?,
            mig: num(7)?,
            modularity: num(8)?,
            recon: num(9)?,
            wall_s: num(10)?,
        };
        if !row.is_std() {
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub gamma: f64,
    pub runs: usize,
    pub wdg: Summary,
    pub factorvae: Summary,
    pub mig: Summary,
    pub modularity: Summary,
    pub recon: Summary,
}

/// Per-(model, gamma) mean and sample std over mean rows, sorted by gamma.
pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, u64), Vec<&ReportRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.is_std()) {
        // Non-negative gammas order like their bit patterns.
        groups.entry((r.model.clone(), r.gamma.to_bits())).or_default().push(r);
    }
    let mut out: Vec<SummaryRow> = groups
        .into_values()
        .map(|g| {
            let col = |f: fn(&ReportRow) -> f64| Summary::of(&g.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                model: g[0].model.clone(),
                gamma: g[0].gamma,
                runs: g.len(),
                wdg: col(|r| r.wdg),
                factorvae: col(|r| r.factorvae),
                mig: col(|r| r.mig),
                modularity: col(|r| r.modularity),
                recon: col(|r| r.recon),
            }
        })
        .collect();
    out.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then_with(|| a.model.cmp(&b.model)));
    out
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(SUMMARY_COLUMNS).map_err(csv_err)?;
    for r in rows {
        let mut f = vec![r.model.clone(), r.gamma.to_string(), r.runs.to_string()];
        for s in [r.wdg, r.factorvae, r.mig, r.modularity, r.recon] {
            f.push(s.mean.to_string());
            f.push(s.std.to_string());
        }
        w.write_record(f).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// 4x4 matrix in [`RANK_METRICS`] order with a leading `metric` column.
pub fn write_rank_corr(path: impl AsRef<Path>, matrix: &[f64]) -> Result<()> {
    if matrix.len() != RANK_METRICS.len() * RANK_METRICS.len() {
        return Err(Error::InvalidArgument(format!(
            "{} entries for a 4x4 matrix",
            matrix.len()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["metric"];
    header.extend(RANK_METRICS);
    w.write_record(&header).map_err(csv_err)?;
    for (i, name) in RANK_METRICS.iter().enumerate() {
        let mut f = vec![name.to_string()];
        f.extend(matrix[i * 4..(i + 1) * 4].iter().map(|v| v.to_string()));
        w.write_record(f).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Streaming train-log writer; every record is flushed so an aborted run
/// leaves a complete prefix on disk.
pub struct TrainLogWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrainLogWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(TrainRecord::COLUMNS).map_err(csv_err)?;
        inner.flush()?;
        Ok(TrainLogWriter { inner })
    }

    pub fn write(&mut self, r: &TrainRecord) -> Result<()> {
        let mut f = vec![r.step.to_string()];
        f.extend(r.values().iter().map(|v| v.to_string()));
        self.inner.write_record(f).map_err(csv_err)?;
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, gamma: f64, seed: u64, wdg: f64) -> ReportRow {
        ReportRow {
            model: model.into(),
            gamma,
            beta: 1.0,
            seed,
            steps: 10,
            wdg,
            factorvae: 0.5 + wdg,
            mig: 0.1,
            modularity: 0.9,
            recon: 100.0 + gamma,
            wall_s: 1.0,
        }
    }

    #[test]
    fn report_roundtrip_skips_std_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let a = row("wtc-vae", 10.0, 1, 0.125);
        let mut s = a.clone();
        s.model.push_str(STD_SUFFIX);
        append_report(&path, &[a.clone(), s]).unwrap();
        append_report(&path, &[row("wtc-vae", 40.0, 2, 0.25)]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), REPORT_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 4);
        let back = read_report(&path).unwrap();
        assert_eq!(back, vec![a, row("wtc-vae", 40.0, 2, 0.25)]);
    }

    #[test]
    fn summary_means_match_cells() {
        let rows: Vec<ReportRow> = [40.0, 0.0, 10.0]
            .iter()
            .flat_map(|&g| (0..3).map(move |s| row("wtc-vae", g, s, g / 100.0 + s as f64 * 0.01)))
            .collect();
        let sum = summarize(&rows);
        assert_eq!(sum.len(), 3);
        assert_eq!(sum.iter().map(|r| r.gamma).collect::<Vec<_>>(), vec![0.0, 10.0, 40.0]);
        for s in &sum {
            let cells: Vec<f64> = rows.iter().filter(|r| r.gamma == s.gamma).map(|r| r.wdg).collect();
            assert_eq!(s.runs, 3);
            assert!((s.wdg.mean - cells.iter().sum::<f64>() / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sweep_reader_drops_failed_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let ok = row("wae", 1.0, 0, 0.1);
        write_sweep_report(
            &path,
            &[
                (ok.clone(), "ok".into()),
                (row("wae", 1.0, 1, f64::NAN), "error: boom".into()),
            ],
        )
        .unwrap();
        assert_eq!(read_report(&path).unwrap(), vec![ok]);
    }
}
