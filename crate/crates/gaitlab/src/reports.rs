//! Report emission: a CSV table with one row per method/configuration
//! (scalar metrics only) and JSON files carrying the full curves.
//!
//! CSV scalars round-trip losslessly, including infinities ("inf"). JSON
//! cannot represent non-finite numbers; they serialize as null.

use std::fs;
use std::path::Path;

use gaitlab_core::eval::{
    CvMode, EvaluationReport, RepetitionReport, SetupConfig, SetupKind,
};
use serde::{Deserialize, Serialize};

use crate::error::ArchiveError;

pub const CSV_HEADER: &str = "method,distance,kind,learn_classes,eval_classes,repetitions,folds,cv,seed,dbi,di,sc,fdr,ccr,eer,auc,map,dct_ms,td";

/// Distance function a method compares templates with, for the report
/// table.
pub fn distance_name(method: &str) -> &'static str {
    match method {
        "mmc" | "pcalda" => "Mahalanobis",
        "raw" => "DTW+L2",
        "alis" | "balla" | "preisj" => "L1",
        "random" => "",
        _ => "L1",
    }
}

fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// One CSV row of averaged scalar metrics.
pub fn csv_row(report: &EvaluationReport) -> String {
    let s = &report.setup;
    let a = &report.average;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        report.method,
        distance_name(&report.method),
        s.kind.code(),
        s.learn_classes,
        s.eval_classes,
        s.repetitions,
        s.folds,
        s.cv_mode.code(),
        s.seed,
        cell(a.dbi),
        cell(a.di),
        cell(a.sc),
        cell(a.fdr),
        a.ccr,
        cell(a.eer),
        cell(a.auc),
        cell(a.map),
        cell(a.dct_ms),
        a.template_dim,
    )
}

pub fn write_csv(reports: &[EvaluationReport], path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    fs::write(path, out)
}

/// Scalar fields parsed back from a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub method: String,
    pub distance: String,
    pub kind: String,
    pub learn_classes: usize,
    pub eval_classes: usize,
    pub repetitions: usize,
    pub folds: usize,
    pub cv: String,
    pub seed: u64,
    pub dbi: Option<f64>,
    pub di: Option<f64>,
    pub sc: Option<f64>,
    pub fdr: Option<f64>,
    pub ccr: f64,
    pub eer: Option<f64>,
    pub auc: Option<f64>,
    pub map: Option<f64>,
    pub dct_ms: Option<f64>,
    pub td: f64,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty CSV")?;
    if header != CSV_HEADER {
        return Err(format!("unexpected CSV header: {header}"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 19 {
            return Err(format!("row {}: expected 19 fields, got {}", i + 2, fields.len()));
        }
        let opt = |s: &str| -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|e| format!("row {}: {e}", i + 2))
            }
        };
        let num = |s: &str| -> Result<f64, String> {
            s.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 2))
        };
        let int = |s: &str| -> Result<usize, String> {
            s.parse::<usize>().map_err(|e| format!("row {}: {e}", i + 2))
        };
        rows.push(CsvRow {
            method: fields[0].to_string(),
            distance: fields[1].to_string(),
            kind: fields[2].to_string(),
            learn_classes: int(fields[3])?,
            eval_classes: int(fields[4])?,
            repetitions: int(fields[5])?,
            folds: int(fields[6])?,
            cv: fields[7].to_string(),
            seed: fields[8].parse().map_err(|e| format!("row {}: {e}", i + 2))?,
            dbi: opt(fields[9])?,
            di: opt(fields[10])?,
            sc: opt(fields[11])?,
            fdr: opt(fields[12])?,
            ccr: num(fields[13])?,
            eer: opt(fields[14])?,
            auc: opt(fields[15])?,
            map: opt(fields[16])?,
            dct_ms: opt(fields[17])?,
            td: num(fields[18])?,
        });
    }
    Ok(rows)
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn finite_opt(v: Option<f64>) -> Option<f64> {
    v.and_then(finite)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetupDto {
    pub kind: String,
    pub learn_classes: usize,
    pub eval_classes: usize,
    pub learn_ratio: f64,
    pub repetitions: usize,
    pub folds: usize,
    pub cv: String,
    pub seed: u64,
}

impl From<&SetupConfig> for SetupDto {
    fn from(s: &SetupConfig) -> Self {
        SetupDto {
            kind: s.kind.code().to_string(),
            learn_classes: s.learn_classes,
            eval_classes: s.eval_classes,
            learn_ratio: s.learn_ratio,
            repetitions: s.repetitions,
            folds: s.folds,
            cv: s.cv_mode.code().to_string(),
            seed: s.seed,
        }
    }
}

impl SetupDto {
    pub fn to_config(&self) -> Option<SetupConfig> {
        Some(SetupConfig {
            kind: SetupKind::parse(&self.kind)?,
            learn_classes: self.learn_classes,
            eval_classes: self.eval_classes,
            learn_ratio: self.learn_ratio,
            repetitions: self.repetitions,
            folds: self.folds,
            cv_mode: CvMode::parse(&self.cv)?,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepetitionDto {
    pub learn_classes: usize,
    pub eval_classes: usize,
    pub learn_samples: usize,
    pub eval_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dbi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub di: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdr: Option<f64>,
    pub ccr: f64,
    /// Rank-k rates as (k, rate) pairs.
    pub cmc: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<f64>,
    /// (threshold, FAR) pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far: Option<Vec<(f64, f64)>>,
    /// (threshold, FRR) pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frr: Option<Vec<(f64, f64)>>,
    /// (FAR, TAR) pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roc: Option<Vec<(f64, f64)>>,
    /// (recall, precision) pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall_precision: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dct_ms: Option<f64>,
    pub template_dim: usize,
}

impl From<&RepetitionReport> for RepetitionDto {
    fn from(r: &RepetitionReport) -> Self {
        RepetitionDto {
            learn_classes: r.learn_classes,
            eval_classes: r.eval_classes,
            learn_samples: r.learn_samples,
            eval_samples: r.eval_samples,
            dbi: finite_opt(r.separability.map(|s| s.dbi)),
            di: finite_opt(r.separability.map(|s| s.di)),
            sc: finite_opt(r.separability.map(|s| s.sc)),
            fdr: finite_opt(r.separability.map(|s| s.fdr)),
            ccr: r.ccr,
            cmc: r.cmc.iter().enumerate().map(|(k, &v)| (k + 1, v)).collect(),
            eer: r.eer,
            auc: r.auc,
            map: r.map,
            far: r.far_frr.as_ref().map(|c| {
                c.thresholds.iter().cloned().zip(c.far.iter().cloned()).collect()
            }),
            frr: r.far_frr.as_ref().map(|c| {
                c.thresholds.iter().cloned().zip(c.frr.iter().cloned()).collect()
            }),
            roc: r.roc.clone(),
            recall_precision: r.recall_precision.clone(),
            dct_ms: r.dct_ms,
            template_dim: r.template_dim,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AverageDto {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dbi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub di: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdr: Option<f64>,
    pub ccr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dct_ms: Option<f64>,
    pub template_dim: f64,
    pub cmc: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDto {
    pub method: String,
    pub distance: String,
    pub setup: SetupDto,
    pub average: AverageDto,
    pub repetitions: Vec<RepetitionDto>,
}

impl From<&EvaluationReport> for ReportDto {
    fn from(r: &EvaluationReport) -> Self {
        ReportDto {
            method: r.method.clone(),
            distance: distance_name(&r.method).to_string(),
            setup: SetupDto::from(&r.setup),
            average: AverageDto {
                dbi: finite_opt(r.average.dbi),
                di: finite_opt(r.average.di),
                sc: finite_opt(r.average.sc),
                fdr: finite_opt(r.average.fdr),
                ccr: r.average.ccr,
                eer: r.average.eer,
                auc: r.average.auc,
                map: r.average.map,
                dct_ms: r.average.dct_ms,
                template_dim: r.average.template_dim,
                cmc: r
                    .average
                    .cmc
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| (k + 1, v))
                    .collect(),
            },
            repetitions: r.repetitions.iter().map(RepetitionDto::from).collect(),
        }
    }
}

pub fn write_json(reports: &[EvaluationReport], path: impl AsRef<Path>) -> Result<(), ArchiveError> {
    let dtos: Vec<ReportDto> = reports.iter().map(ReportDto::from).collect();
    let json = serde_json::to_string_pretty(&dtos)?;
    fs::write(path, json).map_err(ArchiveError::from)
}

pub fn read_json(path: impl AsRef<Path>) -> Result<Vec<ReportDto>, ArchiveError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// CSV row from a JSON report, for table regeneration.
pub fn dto_csv_row(dto: &ReportDto) -> String {
    let cell_or = |v: Option<f64>| cell(v);
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        dto.method,
        dto.distance,
        dto.setup.kind,
        dto.setup.learn_classes,
        dto.setup.eval_classes,
        dto.setup.repetitions,
        dto.setup.folds,
        dto.setup.cv,
        dto.setup.seed,
        cell_or(dto.average.dbi),
        cell_or(dto.average.di),
        cell_or(dto.average.sc),
        cell_or(dto.average.fdr),
        dto.average.ccr,
        cell_or(dto.average.eer),
        cell_or(dto.average.auc),
        cell_or(dto.average.map),
        cell_or(dto.average.dct_ms),
        dto.average.template_dim,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaitlab_core::eval::{MetricSummary, Separability};

    fn sample_report() -> EvaluationReport {
        let rep = RepetitionReport {
            learn_classes: 3,
            eval_classes: 3,
            learn_samples: 9,
            eval_samples: 18,
            separability: Some(Separability {
                dbi: 0.2,
                di: 10.0,
                sc: 0.798,
                fdr: 5.0,
            }),
            ccr: 0.9375,
            cmc: vec![0.9375, 1.0, 1.0],
            eer: Some(0.125),
            auc: Some(0.875),
            map: Some(0.75),
            far_frr: Some(gaitlab_core::eval::ThresholdCurves {
                thresholds: vec![1.0, 2.0],
                far: vec![0.0, 1.0],
                frr: vec![0.5, 0.0],
            }),
            roc: Some(vec![(0.0, 0.0), (1.0, 1.0)]),
            recall_precision: Some(vec![(0.0, 1.0), (1.0, 0.5)]),
            dct_ms: Some(0.001),
            template_dim: 2,
        };
        EvaluationReport {
            method: "mmc".to_string(),
            setup: SetupConfig::homogeneous(3, 17),
            average: MetricSummary {
                dbi: Some(0.2),
                di: Some(10.0),
                sc: Some(0.798),
                fdr: Some(5.0),
                ccr: 0.9375,
                eer: Some(0.125),
                auc: Some(0.875),
                map: Some(0.75),
                dct_ms: Some(0.001),
                template_dim: 2.0,
                cmc: vec![0.9375, 1.0, 1.0],
            },
            repetitions: vec![rep],
        }
    }

    #[test]
    fn csv_round_trips_scalars_losslessly() {
        let report = sample_report();
        let text = format!("{CSV_HEADER}\n{}\n", csv_row(&report));
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.method, "mmc");
        assert_eq!(row.distance, "Mahalanobis");
        assert_eq!(row.kind, "homogeneous");
        assert_eq!(row.seed, 17);
        assert_eq!(row.dbi, Some(0.2));
        assert_eq!(row.ccr, 0.9375);
        assert_eq!(row.eer, Some(0.125));
        assert_eq!(row.td, 2.0);
    }

    #[test]
    fn infinities_survive_csv() {
        let mut report = sample_report();
        report.average.di = Some(f64::INFINITY);
        let text = format!("{CSV_HEADER}\n{}\n", csv_row(&report));
        let rows = parse_csv(&text).unwrap();
        assert_eq!(rows[0].di, Some(f64::INFINITY));
    }

    #[test]
    fn golden_header() {
        // The documented column schema; external consumers parse this.
        assert_eq!(
            CSV_HEADER,
            "method,distance,kind,learn_classes,eval_classes,repetitions,folds,cv,seed,\
             dbi,di,sc,fdr,ccr,eer,auc,map,dct_ms,td"
        );
        let report = sample_report();
        assert_eq!(csv_row(&report).split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn json_round_trip_carries_curves() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let report = sample_report();
        write_json(std::slice::from_ref(&report), &path).unwrap();
        let back = read_json(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].method, "mmc");
        assert_eq!(back[0].repetitions[0].cmc, vec![(1, 0.9375), (2, 1.0), (3, 1.0)]);
        assert_eq!(
            back[0].repetitions[0].far.as_ref().unwrap(),
            &vec![(1.0, 0.0), (2.0, 1.0)]
        );
        assert_eq!(back[0].setup.to_config().unwrap(), SetupConfig::homogeneous(3, 17));
        // Regenerated CSV matches the direct row.
        assert_eq!(dto_csv_row(&back[0]), csv_row(&report));
    }
}
