//! CSV and JSON export of solver results.
//!
//! CSV export writes `satellites.csv` (one row per satellite per run) and
//! `summary.csv` (one row per method). JSON export writes `results.json`
//! holding both the runs and the summary.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_float;
use crate::solve::{Method, SolutionReport};

pub const SATELLITES_CSV: &str = "satellites.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const RESULTS_JSON: &str = "results.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Domain(format!("unknown export format `{other}`"))),
        }
    }
}

/// One solver run on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub scenario_id: usize,
    pub report: SolutionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteRow {
    pub scenario_id: usize,
    pub method: Method,
    pub satellite_id: usize,
    pub subcarrier_id: Option<usize>,
    pub compression_ratio: f64,
    pub length_bits: u64,
    pub rate_bps: f64,
    pub latency_s: f64,
    pub psnr_db: Option<f64>,
    pub threshold_db: f64,
    pub window_s: f64,
    pub feasible: bool,
}

/// Per-method aggregate. Means cover feasible runs only and are empty when
/// no run was feasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    #[serde(with = "serde_float::option")]
    pub mean_latency_s: Option<f64>,
    #[serde(with = "serde_float::option")]
    pub mean_compression_ratio: Option<f64>,
    pub feasibility_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub runs: Vec<ScenarioRun>,
    pub summary: Vec<MethodSummary>,
}

pub fn satellite_rows(runs: &[ScenarioRun]) -> Vec<SatelliteRow> {
    runs.iter()
        .flat_map(|run| {
            run.report.satellites.iter().map(move |s| SatelliteRow {
                scenario_id: run.scenario_id,
                method: run.report.method,
                satellite_id: s.satellite_id,
                subcarrier_id: s.subcarrier_id,
                compression_ratio: s.compression_ratio_value,
                length_bits: s.length_bits,
                rate_bps: s.rate_bps,
                latency_s: s.latency_s,
                psnr_db: s.psnr_db,
                threshold_db: s.threshold_db,
                window_s: s.window_s,
                feasible: s.subcarrier_id.is_some() && s.meets_psnr && s.meets_window,
            })
        })
        .collect()
}

/// Summaries in order of first appearance of each method.
pub fn summarize(runs: &[ScenarioRun]) -> Vec<MethodSummary> {
    let mut methods: Vec<Method> = Vec::new();
    for r in runs {
        if !methods.contains(&r.report.method) {
            methods.push(r.report.method);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let all: Vec<&SolutionReport> = runs.iter().map(|r| &r.report).filter(|r| r.method == method).collect();
            let ok: Vec<&&SolutionReport> = all.iter().filter(|r| r.feasible).collect();
            let mean = |f: &dyn Fn(&SolutionReport) -> f64| {
                (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
            };
            MethodSummary {
                method,
                mean_latency_s: mean(&|r| r.objective_s),
                mean_compression_ratio: mean(&|r| r.mean_compression_ratio()),
                feasibility_rate: ok.len() as f64 / all.len() as f64,
            }
        })
        .collect()
}

pub fn write_satellites_csv<W: Write>(w: W, runs: &[ScenarioRun]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in satellite_rows(runs) {
        out.serialize(row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, summary: &[MethodSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "mean_latency_s", "mean_compression_ratio", "feasibility_rate"])?;
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for s in summary {
        out.write_record([
            s.method.label().to_string(),
            cell(s.mean_latency_s),
            cell(s.mean_compression_ratio),
            s.feasibility_rate.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `runs` into `dir` (created if missing) and returns the files written.
pub fn export_report(runs: &[ScenarioRun], format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| {
        let p = dir.join(name);
        File::create(&p).map(|f| (f, p.clone())).map_err(|e| Error::io(&p, e))
    };
    let summary = summarize(runs);
    match format {
        ExportFormat::Csv => {
            let (f, sat_path) = create(SATELLITES_CSV)?;
            write_satellites_csv(f, runs)?;
            let (f, sum_path) = create(SUMMARY_CSV)?;
            write_summary_csv(f, &summary)?;
            Ok(vec![sat_path, sum_path])
        }
        ExportFormat::Json => {
            let (f, path) = create(RESULTS_JSON)?;
            let body = ResultsFile {
                runs: runs.to_vec(),
                summary,
            };
            serde_json::to_writer_pretty(std::io::BufWriter::new(f), &body)?;
            Ok(vec![path])
        }
    }
}

pub fn load_results_json(path: &Path) -> Result<ResultsFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_satellites_csv(path: &Path) -> Result<Vec<SatelliteRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
