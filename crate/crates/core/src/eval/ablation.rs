use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{format_real, DateRange, EventCalendar, SeriesFrame};
use crate::error::{Error, Result};
use crate::model::{Arm, ModelConfig};
use crate::train::TrainOptions;

use super::{rolling_one_step, train_model, EvalResult};

/// The three ablation variants of `base`, labelled `model1` to `model3`.
pub fn ablation_arms(base: &ModelConfig) -> Vec<(String, ModelConfig)> {
    Arm::ALL
        .iter()
        .map(|&a| (a.label().to_string(), base.with_arm(a)))
        .collect()
}

/// Middle value, or the mean of the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub struct AblationSpec<'a> {
    /// Dataset name written into every row.
    pub data: String,
    pub frame: &'a SeriesFrame,
    pub calendar: Option<&'a EventCalendar>,
    /// Last training date; normalization and fitting see nothing later.
    pub train_end: NaiveDate,
    pub test: DateRange,
    pub arms: Vec<(String, ModelConfig)>,
    pub seeds: Vec<u64>,
    /// Training settings shared by every run; the seed is replaced per run.
    pub train: TrainOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub data: String,
    pub label: String,
    pub seed: u64,
    pub rmse: f64,
    pub rrmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub label: String,
    pub seeds: usize,
    pub median_rmse: f64,
    pub median_rrmse: f64,
    pub negative_mean: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub data: String,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
    pub arms: Vec<ArmSummary>,
}

/// Per-run results in arm order, seeds in the order given.
#[derive(Clone, Debug)]
pub struct AblationTable {
    pub data: String,
    pub test: DateRange,
    pub rows: Vec<AblationRow>,
    pub results: Vec<EvalResult>,
}

/// Trains every arm under every seed and evaluates each one-step on the test
/// range. Runs execute in parallel; the output order does not depend on
/// scheduling.
pub fn run_ablation(spec: &AblationSpec<'_>) -> Result<AblationTable> {
    if spec.arms.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one arm and one seed".into()));
    }
    if spec.test.start <= spec.train_end {
        return Err(Error::Config(format!(
            "test range starts {} but training runs through {}",
            spec.test.start, spec.train_end
        )));
    }
    let jobs: Vec<(usize, u64)> = (0..spec.arms.len())
        .flat_map(|a| spec.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let results: Vec<(usize, u64, EvalResult)> = jobs
        .par_iter()
        .map(|&(a, seed)| {
            let (label, config) = &spec.arms[a];
            let opts = TrainOptions {
                seed,
                ..spec.train.clone()
            };
            let (model, _) = train_model::<f64>(label, spec.frame, spec.calendar, config, &opts, spec.train_end)?;
            let result = rolling_one_step(&model, spec.frame, &spec.test, spec.calendar)?;
            Ok((a, seed, result))
        })
        .collect::<Result<_>>()?;

    let rows = results
        .iter()
        .map(|(a, seed, r)| AblationRow {
            data: spec.data.clone(),
            label: spec.arms[*a].0.clone(),
            seed: *seed,
            rmse: r.rmse,
            rrmse: r.rrmse,
        })
        .collect();
    Ok(AblationTable {
        data: spec.data.clone(),
        test: spec.test,
        rows,
        results: results.into_iter().map(|(_, _, r)| r).collect(),
    })
}

impl AblationTable {
    /// Rows of one arm, in seed order.
    pub fn arm(&self, label: &str) -> Vec<&AblationRow> {
        self.rows.iter().filter(|r| r.label == label).collect()
    }

    /// Seeds where arm `a` scores an RMSE no larger than arm `b`.
    pub fn seeds_no_worse(&self, a: &str, b: &str) -> usize {
        let other: BTreeMap<u64, f64> = self.arm(b).iter().map(|r| (r.seed, r.rmse)).collect();
        self.arm(a)
            .iter()
            .filter(|r| other.get(&r.seed).is_some_and(|&o| r.rmse <= o))
            .count()
    }

    pub fn summary(&self) -> AblationSummary {
        let mut labels: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !labels.contains(&r.label.as_str()) {
                labels.push(&r.label);
            }
        }
        let arms = labels
            .into_iter()
            .map(|label| {
                let rows = self.arm(label);
                let rmse: Vec<f64> = rows.iter().map(|r| r.rmse).collect();
                let rrmse: Vec<f64> = rows.iter().map(|r| r.rrmse).collect();
                ArmSummary {
                    label: label.to_string(),
                    seeds: rows.len(),
                    median_rmse: median(&rmse).unwrap_or(f64::NAN),
                    median_rrmse: median(&rrmse).unwrap_or(f64::NAN),
                    negative_mean: self.results.iter().any(|r| r.label == label && r.negative_mean),
                }
            })
            .collect();
        AblationSummary {
            data: self.data.clone(),
            test_start: self.test.start,
            test_end: self.test.end,
            arms,
        }
    }

    /// `data,label,seed,rmse,rrmse`, one row per run.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["data", "label", "seed", "rmse", "rrmse"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.data.clone(),
                r.label.clone(),
                r.seed.to_string(),
                format_real(r.rmse),
                format_real(r.rrmse),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.summary()).map_err(|e| Error::Contract(e.to_string()))
    }
}
