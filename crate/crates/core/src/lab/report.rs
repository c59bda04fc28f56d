use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "trial",
    "system",
    "kind",
    "k",
    "radius",
    "tau_or_measure",
    "censored",
    "estimate_kind",
    "value",
    "flag",
];

/// One row of the per-trial table: a scale observation or a per-trial estimate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub kind: String,
    pub k: Option<u32>,
    pub radius: Option<f64>,
    pub tau_or_measure: Option<f64>,
    pub censored: bool,
    pub estimate_kind: Option<String>,
    pub value: Option<f64>,
    pub flag: Option<String>,
}

impl Observation {
    pub fn scale(kind: &str, k: u32, radius: f64, tau_or_measure: Option<f64>) -> Self {
        Observation {
            kind: kind.into(),
            k: Some(k),
            radius: Some(radius),
            censored: tau_or_measure.is_none(),
            tau_or_measure,
            ..Default::default()
        }
    }

    pub fn estimate(kind: &str, estimate_kind: &str, value: f64) -> Self {
        Observation {
            kind: kind.into(),
            estimate_kind: Some(estimate_kind.into()),
            value: Some(value),
            ..Default::default()
        }
    }

    pub fn with_flag(mut self, flag: &str) -> Self {
        self.flag = Some(flag.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub system: String,
    pub observations: Vec<Observation>,
    /// Named per-trial estimates feeding the summary.
    pub estimates: BTreeMap<String, f64>,
    pub flags: Vec<String>,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn new(trial: usize, system: String) -> Self {
        TrialRecord {
            trial,
            system,
            ..Default::default()
        }
    }

    pub fn flag(&mut self, flag: &str) {
        if !self.flags.iter().any(|f| f == flag) {
            self.flags.push(flag.into());
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    pub fn estimate(&mut self, kind: &str, name: &str, value: f64) {
        self.estimates.insert(name.into(), value);
        self.observations.push(Observation::estimate(kind, name, value));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl SummaryStat {
    pub fn of(values: &[f64]) -> Option<SummaryStat> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
        Some(SummaryStat {
            count: v.len(),
            median: quantile(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
            min: v[0],
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// `None` when no trial produced the statistic.
    pub observed: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn within(
        name: &str,
        observed: Option<f64>,
        lower: Option<f64>,
        upper: Option<f64>,
        detail: String,
    ) -> Verdict {
        let observed = observed.filter(|x| x.is_finite());
        let pass = observed.is_some_and(|x| lower.is_none_or(|l| x >= l) && upper.is_none_or(|u| x <= u));
        Verdict {
            name: name.into(),
            observed,
            lower,
            upper,
            pass,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub summary: BTreeMap<String, SummaryStat>,
    pub verdicts: Vec<Verdict>,
    pub duration_seconds: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn summary(&self, name: &str) -> Option<&SummaryStat> {
        self.summary.get(name)
    }

    /// Every value of a named per-trial estimate, in trial order.
    pub fn estimates(&self, name: &str) -> Vec<f64> {
        self.trials
            .iter()
            .filter_map(|t| t.estimates.get(name).copied())
            .collect()
    }

    pub fn csv_row_count(&self) -> usize {
        self.trials.iter().map(|t| t.observations.len()).sum()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Serialize(e.to_string());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        let experiment = self.config.name();
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for t in &self.trials {
            for o in &t.observations {
                w.write_record([
                    experiment.as_str(),
                    &t.trial.to_string(),
                    &t.system,
                    &o.kind,
                    &o.k.map(|k| k.to_string()).unwrap_or_default(),
                    &opt(o.radius),
                    &opt(o.tau_or_measure),
                    if o.censored { "true" } else { "false" },
                    o.estimate_kind.as_deref().unwrap_or(""),
                    &opt(o.value),
                    o.flag.as_deref().unwrap_or(""),
                ])
                .map_err(csv_err)?;
            }
        }
        w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<ExperimentReport> {
        serde_json::from_str(text).map_err(|e| Error::Serialize(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

/// Write `report` into `dir` as `<name>.<ext>`, returning the path.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}.{}", report.config.name(), format.extension()));
    let bytes = match format {
        ReportFormat::Csv => report.to_csv()?,
        ReportFormat::Json => report.to_json()?.into_bytes(),
    };
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::config::ExperimentKind;

    fn report(trials: Vec<TrialRecord>) -> ExperimentReport {
        ExperimentReport {
            config: ExperimentConfig::new(ExperimentKind::Lemma2, 3),
            trials,
            summary: BTreeMap::new(),
            verdicts: vec![],
            duration_seconds: 0.5,
        }
    }

    fn sample_trial(i: usize) -> TrialRecord {
        let mut t = TrialRecord::new(i, "doubling(p=0.5)".into());
        t.observations
            .push(Observation::scale("hitting", 4, 0.0625, Some(17.0)));
        t.observations
            .push(Observation::scale("hitting", 5, 0.03125, None).with_flag("CENSORED"));
        t.estimate("hitting", "R_lower", 0.1 + 0.2);
        t
    }

    #[test]
    fn quantiles_interpolate() {
        let s = SummaryStat::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.median, s.q1, s.q3), (2.5, 1.75, 3.25));
        assert_eq!(s.iqr, 1.5);
        let s = SummaryStat::of(&[5.0]).unwrap();
        assert_eq!((s.median, s.iqr), (5.0, 0.0));
        assert!(SummaryStat::of(&[]).is_none());
        assert!(SummaryStat::of(&[f64::NAN]).is_none());
    }

    #[test]
    fn empty_report_is_header_only() {
        let csv = String::from_utf8(report(vec![]).to_csv().unwrap()).unwrap();
        assert_eq!(
            csv,
            "experiment,trial,system,kind,k,radius,tau_or_measure,censored,estimate_kind,value,flag\n"
        );
    }

    #[test]
    fn csv_rows_match_observations() {
        let r = report((0..3).map(sample_trial).collect());
        let csv = String::from_utf8(r.to_csv().unwrap()).unwrap();
        assert_eq!(csv.lines().count() - 1, r.csv_row_count());
        assert_eq!(r.csv_row_count(), 9);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "lemma2,0,doubling(p=0.5),hitting,4,0.0625,17,false,,,");
        assert_eq!(lines[2], "lemma2,0,doubling(p=0.5),hitting,5,0.03125,,true,,,CENSORED");
        assert_eq!(
            lines[3],
            "lemma2,0,doubling(p=0.5),hitting,,,,false,R_lower,0.30000000000000004,"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut r = report((0..2).map(sample_trial).collect());
        r.summary
            .insert("R_lower".into(), SummaryStat::of(&r.estimates("R_lower")).unwrap());
        r.verdicts
            .push(Verdict::within("median", Some(0.3), Some(0.1), None, "x".into()));
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["config", "duration_seconds", "summary", "trials", "verdicts"]);
    }

    #[test]
    fn verdict_bounds() {
        assert!(Verdict::within("a", Some(1.0), Some(1.0), Some(1.0), String::new()).pass);
        assert!(!Verdict::within("a", Some(0.9), Some(1.0), None, String::new()).pass);
        assert!(!Verdict::within("a", Some(f64::NAN), None, None, String::new()).pass);
    }

    #[test]
    fn emit_writes_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(vec![sample_trial(0)]);
        let csv = emit_report(&r, ReportFormat::Csv, dir.path()).unwrap();
        let json = emit_report(&r, ReportFormat::Json, dir.path()).unwrap();
        assert_eq!(csv.file_name().unwrap(), "lemma2.csv");
        assert_eq!(fs::read(&csv).unwrap(), r.to_csv().unwrap());
        let back = ExperimentReport::from_json(&fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = emit_report(&report(vec![]), ReportFormat::Csv, &blocker.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
