use crate::data::{DateRange, SeriesFrame};
use crate::error::{Error, Result};
use crate::layers::FourierSpec;
use crate::model::{Components, ModelConfig, TrendInput};

use super::{rolling_one_step, EvalResult, History, OneStepForecaster};

fn lstm_only(config: &ModelConfig, multivariate: bool) -> ModelConfig {
    ModelConfig {
        trend_input: TrendInput::Raw,
        multivariate,
        fourier: FourierSpec::default(),
        event_types: 0,
        ..config.clone()
    }
}

/// One LSTM layer and a linear dense readout over the target series alone.
pub fn baseline_ulstm(config: &ModelConfig) -> ModelConfig {
    lstm_only(config, false)
}

/// The same network reading every series.
pub fn baseline_mlstm(config: &ModelConfig) -> ModelConfig {
    lstm_only(config, true)
}

/// Repeats the value observed one period earlier.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonalNaive {
    pub period: usize,
    pub target: usize,
    pub label: String,
}

impl SeasonalNaive {
    pub fn new(period: usize, target: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::Config("seasonal naive period must be positive".into()));
        }
        Ok(SeasonalNaive {
            period,
            target,
            label: format!("seasonal_naive_{period}"),
        })
    }
}

impl OneStepForecaster for SeasonalNaive {
    fn label(&self) -> &str {
        &self.label
    }

    fn target(&self) -> usize {
        self.target
    }

    fn history_needed(&self) -> usize {
        self.period
    }

    fn forecast(&self, history: &History<'_>, _events: &[f64]) -> Result<Components<f64>> {
        let value = history.window(self.period)?[self.target][0];
        Ok(Components {
            forecast: value,
            trend: value,
            seasonal: 0.0,
            event: 0.0,
        })
    }
}

pub fn baseline_seasonal_naive(
    frame: &SeriesFrame,
    period: usize,
    target: usize,
    range: &DateRange,
) -> Result<EvalResult> {
    rolling_one_step(&SeasonalNaive::new(period, target)?, frame, range, None)
}
