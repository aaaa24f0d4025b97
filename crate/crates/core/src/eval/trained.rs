use chrono::NaiveDate;

use crate::data::{build_windows, DateRange, EventCalendar, NormStats, SeriesFrame};
use crate::error::{Error, Result};
use crate::model::{decompose, forward, Components, Decomposition, DeepMstmParams, ModelConfig};
use crate::scalar::Scalar;
use crate::tensorcore::Tensor;
use crate::train::{fit, TrainOptions, TrainReport};

use super::{History, OneStepForecaster};

/// A fitted model together with the normalization it was trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel<T = f64> {
    pub label: String,
    pub config: ModelConfig,
    pub params: DeepMstmParams<T>,
    pub norm: NormStats,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn new(label: &str, config: ModelConfig, params: DeepMstmParams<T>, norm: NormStats) -> Result<Self> {
        config.validate()?;
        if norm.mean.len() != config.num_series {
            return Err(Error::Incompatible(format!(
                "normalization covers {} series, the model reads {}",
                norm.mean.len(),
                config.num_series
            )));
        }
        Ok(TrainedModel {
            label: label.to_string(),
            config,
            params,
            norm,
        })
    }

    /// Maps normalized components back to original units: the trend takes the
    /// mean offset, the other parts are only rescaled.
    fn denormalize(&self, c: Components<T>) -> Components<f64> {
        let m = self.config.target;
        let trend = self.norm.denormalize_value(m, c.trend.as_f64());
        let seasonal = self.norm.rescale(m, c.seasonal.as_f64());
        let event = self.norm.rescale(m, c.event.as_f64());
        Components {
            forecast: trend + seasonal + event,
            trend,
            seasonal,
            event,
        }
    }

    /// Components for every date in `range`, in original units, each computed
    /// from the observed window before it.
    pub fn decompose(
        &self,
        frame: &SeriesFrame,
        range: &DateRange,
        calendar: Option<&EventCalendar>,
    ) -> Result<Decomposition> {
        let normalized = self.norm.normalize(frame)?;
        let raw = decompose(&normalized, range, &self.params, &self.config, calendar)?;
        let m = self.config.target;
        Ok(Decomposition::from_parts(
            raw.dates,
            raw.trend.iter().map(|&d| self.norm.denormalize_value(m, d)).collect(),
            raw.seasonal.iter().map(|&s| self.norm.rescale(m, s)).collect(),
            raw.event.iter().map(|&e| self.norm.rescale(m, e)).collect(),
        ))
    }
}

impl<T: Scalar> OneStepForecaster for TrainedModel<T> {
    fn label(&self) -> &str {
        &self.label
    }

    fn target(&self) -> usize {
        self.config.target
    }

    fn history_needed(&self) -> usize {
        self.config.lag
    }

    fn forecast(&self, history: &History<'_>, events: &[f64]) -> Result<Components<f64>> {
        let (m, n) = (self.config.num_series, self.config.lag);
        if history.num_series() != m {
            return Err(Error::dim(
                "forecast",
                format!("history has {} series, the model reads {m}", history.num_series()),
            ));
        }
        let rows = history.window(n)?;
        let mut data = Vec::with_capacity(m * n);
        for (s, row) in rows.iter().enumerate() {
            data.extend(row.iter().map(|&v| T::lit(self.norm.normalize_value(s, v))));
        }
        let window = Tensor::new(vec![m, n], data)?;
        let events: Vec<T> = events.iter().map(|&b| T::lit(b)).collect();
        let c = forward(&window, history.next_day(), &events, &self.params, &self.config)?;
        Ok(self.denormalize(c))
    }
}

/// Normalizes on the rows up to `train_end`, fits a fresh model on every
/// window of that split and wraps the result.
pub fn train_model<T: Scalar>(
    label: &str,
    frame: &SeriesFrame,
    calendar: Option<&EventCalendar>,
    config: &ModelConfig,
    opts: &TrainOptions,
    train_end: NaiveDate,
) -> Result<(TrainedModel<T>, TrainReport<T>)> {
    config.validate()?;
    if config.num_series != frame.num_series() {
        return Err(Error::Config(format!(
            "configuration expects {} series, the data has {}",
            config.num_series,
            frame.num_series()
        )));
    }
    let train = frame.until(train_end)?;
    let norm = NormStats::fit(&train)?;
    let windows = build_windows(&norm.normalize(&train)?, config.lag, config.target, calendar)?;
    let report = fit::<T>(&windows, config, opts)?;
    let model = TrainedModel::new(label, config.clone(), report.params.clone(), norm)?;
    Ok((model, report))
}
