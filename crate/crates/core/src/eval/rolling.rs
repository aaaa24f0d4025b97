use chrono::{Days, NaiveDate};

use crate::data::{DateRange, EventCalendar, SeriesFrame};
use crate::error::{Error, Result};
use crate::model::Components;

use super::EvalResult;

/// Observations strictly before the day being forecast.
///
/// Every series is cut at the same point, so a forecaster handed a `History`
/// cannot read the value it is asked to predict or anything later.
#[derive(Clone, Debug)]
pub struct History<'a> {
    series: Vec<&'a [f64]>,
    next_date: NaiveDate,
    next_day: i64,
}

impl<'a> History<'a> {
    pub fn new(series: Vec<&'a [f64]>, next_date: NaiveDate, next_day: i64) -> Result<Self> {
        let len = series.first().map_or(0, |s| s.len());
        if series.iter().any(|s| s.len() != len) {
            return Err(Error::Contract("history series differ in length".into()));
        }
        Ok(History {
            series,
            next_date,
            next_day,
        })
    }

    /// The first `end` rows of `frame`, for forecasting row `end`.
    pub fn of_frame(frame: &'a SeriesFrame, end: usize) -> Result<Self> {
        if end >= frame.len() {
            return Err(Error::Range(format!("row {end} of {}", frame.len())));
        }
        let series = (0..frame.num_series()).map(|m| &frame.series(m)[..end]).collect();
        History::new(series, frame.dates()[end], frame.day(end))
    }

    pub fn len(&self) -> usize {
        self.series.first().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_series(&self) -> usize {
        self.series.len()
    }

    pub fn series(&self, m: usize) -> &[f64] {
        self.series[m]
    }

    /// Date being forecast.
    pub fn next_date(&self) -> NaiveDate {
        self.next_date
    }

    /// Day index of the date being forecast.
    pub fn next_day(&self) -> i64 {
        self.next_day
    }

    /// The last `lag` observations of every series.
    pub fn window(&self, lag: usize) -> Result<Vec<&[f64]>> {
        let len = self.len();
        if len < lag {
            return Err(Error::InsufficientData {
                needed: lag,
                available: len,
            });
        }
        Ok(self.series.iter().map(|s| &s[len - lag..]).collect())
    }
}

/// A model that forecasts one series a single day ahead.
pub trait OneStepForecaster: Sync {
    fn label(&self) -> &str;

    /// Index of the forecast series.
    fn target(&self) -> usize;

    /// Observations needed before the first forecast.
    fn history_needed(&self) -> usize;

    /// Forecast for `history.next_date()`, given that day's event indicators.
    fn forecast(&self, history: &History<'_>, events: &[f64]) -> Result<Components<f64>>;
}

fn indicators(calendar: Option<&EventCalendar>, date: NaiveDate) -> Vec<f64> {
    calendar.map(|c| c.indicators(date)).unwrap_or_default()
}

/// Forecasts every date of `range` from the observed values before it.
pub fn rolling_one_step(
    model: &dyn OneStepForecaster,
    frame: &SeriesFrame,
    range: &DateRange,
    calendar: Option<&EventCalendar>,
) -> Result<EvalResult> {
    let rows = frame.rows_of(range)?;
    let needed = model.history_needed();
    if rows.start < needed {
        return Err(Error::Range(format!(
            "{} has {} days of history, {} needs {needed}",
            range.start,
            rows.start,
            model.label()
        )));
    }
    let target = model.target();
    let mut parts = Vec::with_capacity(rows.len());
    for t in rows.clone() {
        let history = History::of_frame(frame, t)?;
        parts.push(model.forecast(&history, &indicators(calendar, frame.dates()[t]))?);
    }
    EvalResult::new(
        model.label(),
        frame.dates()[rows.clone()].to_vec(),
        frame.series(target)[rows].to_vec(),
        &parts,
    )
}

/// Forecasts `horizon` consecutive days after the first `history_end` rows,
/// feeding each target forecast back in as the next day's observation.
///
/// Series other than the target are held at their last observed value.
pub fn recursive_forecast(
    model: &dyn OneStepForecaster,
    frame: &SeriesFrame,
    history_end: usize,
    horizon: usize,
    calendar: Option<&EventCalendar>,
) -> Result<Vec<(NaiveDate, Components<f64>)>> {
    if history_end == 0 || history_end > frame.len() {
        return Err(Error::Range(format!("history of {history_end} rows from {}", frame.len())));
    }
    if history_end < model.history_needed() {
        return Err(Error::Range(format!(
            "{history_end} days of history, {} needs {}",
            model.label(),
            model.history_needed()
        )));
    }
    let mut buffer: Vec<Vec<f64>> = (0..frame.num_series())
        .map(|m| frame.series(m)[..history_end].to_vec())
        .collect();
    let last = frame.dates()[history_end - 1];
    let mut out = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        let date = last + Days::new(k as u64);
        let day = (date - frame.origin()).num_days();
        let history = History::new(buffer.iter().map(Vec::as_slice).collect(), date, day)?;
        let parts = model.forecast(&history, &indicators(calendar, date))?;
        for (m, s) in buffer.iter_mut().enumerate() {
            let next = if m == model.target() {
                parts.forecast
            } else {
                *s.last().expect("nonempty history")
            };
            s.push(next);
        }
        out.push((date, parts));
    }
    Ok(out)
}
