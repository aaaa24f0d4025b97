//! Metrics, rolling one-step evaluation, baselines and the ablation harness.

mod ablation;
mod baselines;
mod rolling;
mod trained;

pub use ablation::{ablation_arms, median, run_ablation, AblationRow, AblationSpec, AblationSummary, AblationTable, ArmSummary};
pub use baselines::{baseline_mlstm, baseline_seasonal_naive, baseline_ulstm, SeasonalNaive};
pub use rolling::{recursive_forecast, rolling_one_step, History, OneStepForecaster};
pub use trained::{train_model, TrainedModel};

use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;

use crate::data::format_real;
use crate::error::{Error, Result};
use crate::model::Components;

fn check_lengths(preds: &[f64], truth: &[f64]) -> Result<()> {
    if preds.is_empty() || preds.len() != truth.len() {
        return Err(Error::Contract(format!(
            "metrics need equal nonempty lengths, got {} and {}",
            preds.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Root mean squared residual.
pub fn rmse(preds: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(preds, truth)?;
    let sq: f64 = preds.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / preds.len() as f64).sqrt())
}

/// RMSE divided by the signed mean of `truth`.
pub fn rrmse(preds: &[f64], truth: &[f64]) -> Result<f64> {
    let r = rmse(preds, truth)?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    if mean == 0.0 {
        return Err(Error::UndefinedMetric("relative RMSE with a zero-mean truth series".into()));
    }
    Ok(r / mean)
}

/// Forecasts of one model over a test range, in original units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalResult {
    pub label: String,
    pub rmse: f64,
    pub rrmse: f64,
    /// The truth mean was negative, so `rrmse` carries its sign.
    pub negative_mean: bool,
    pub dates: Vec<NaiveDate>,
    pub truth: Vec<f64>,
    pub forecasts: Vec<f64>,
    /// `forecast - truth` per step.
    pub residuals: Vec<f64>,
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub event: Vec<f64>,
}

impl EvalResult {
    pub fn new(label: &str, dates: Vec<NaiveDate>, truth: Vec<f64>, parts: &[Components<f64>]) -> Result<Self> {
        if dates.len() != truth.len() || parts.len() != truth.len() {
            return Err(Error::Contract("dates, truth and forecasts must align".into()));
        }
        let forecasts: Vec<f64> = parts.iter().map(|c| c.forecast).collect();
        let rmse = rmse(&forecasts, &truth)?;
        let rrmse = rrmse(&forecasts, &truth)?;
        let negative_mean = truth.iter().sum::<f64>() < 0.0;
        Ok(EvalResult {
            label: label.to_string(),
            rmse,
            rrmse,
            negative_mean,
            residuals: forecasts.iter().zip(&truth).map(|(f, t)| f - t).collect(),
            dates,
            truth,
            forecasts,
            trend: parts.iter().map(|c| c.trend).collect(),
            seasonal: parts.iter().map(|c| c.seasonal).collect(),
            event: parts.iter().map(|c| c.event).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn truth_mean(&self) -> f64 {
        self.truth.iter().sum::<f64>() / self.truth.len() as f64
    }

    /// `date,truth,forecast,d,s,e` with 17 significant digits.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["date", "truth", "forecast", "d", "s", "e"]).map_err(io)?;
        for i in 0..self.len() {
            w.write_record([
                self.dates[i].to_string(),
                format_real(self.truth[i]),
                format_real(self.forecasts[i]),
                format_real(self.trend[i]),
                format_real(self.seasonal[i]),
                format_real(self.event[i]),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}
