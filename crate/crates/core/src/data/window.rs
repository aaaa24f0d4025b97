use std::ops::Range;

use chrono::NaiveDate;

use crate::error::{Error, Result};

use super::{EventCalendar, SeriesFrame};

/// Lagged inputs paired with one-step-ahead targets.
///
/// Window `i` holds all `M` series over the `N` days before `dates[i]`,
/// stored row-major as `M x N`; `targets[i]` is the target series on
/// `dates[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowBatch {
    pub num_series: usize,
    pub lag: usize,
    pub target: usize,
    inputs: Vec<f64>,
    pub targets: Vec<f64>,
    pub days: Vec<i64>,
    pub dates: Vec<NaiveDate>,
    /// Event indicators per window (`B x L`).
    pub events: Vec<Vec<f64>>,
    pub event_types: usize,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Window `i` as a flat `M x N` slice.
    pub fn input(&self, i: usize) -> &[f64] {
        let size = self.num_series * self.lag;
        &self.inputs[i * size..(i + 1) * size]
    }

    pub fn input_rows(&self, i: usize) -> Vec<Vec<f64>> {
        self.input(i).chunks(self.lag).map(<[f64]>::to_vec).collect()
    }

    /// All windows, `B x M x N` row-major.
    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }
}

/// Every window the frame supports: `T - N` of them, targets starting at row
/// `N`.
pub fn build_windows(
    frame: &SeriesFrame,
    lag: usize,
    target: usize,
    calendar: Option<&EventCalendar>,
) -> Result<WindowBatch> {
    if frame.len() < lag + 1 {
        return Err(Error::InsufficientData {
            needed: lag + 1,
            available: frame.len(),
        });
    }
    build_windows_range(frame, lag, target, calendar, lag..frame.len())
}

/// Windows whose targets are the rows in `rows`; each needs `N` rows of
/// history before it.
pub fn build_windows_range(
    frame: &SeriesFrame,
    lag: usize,
    target: usize,
    calendar: Option<&EventCalendar>,
    rows: Range<usize>,
) -> Result<WindowBatch> {
    if lag == 0 {
        return Err(Error::Config("lag window must be at least 1".into()));
    }
    if target >= frame.num_series() {
        return Err(Error::Config(format!(
            "target index {target} out of {} series",
            frame.num_series()
        )));
    }
    if rows.start < lag {
        return Err(Error::Range(format!(
            "target row {} has only {} rows of history, need {lag}",
            rows.start, rows.start
        )));
    }
    if rows.end > frame.len() || rows.start > rows.end {
        return Err(Error::Range(format!("rows {rows:?} outside {} rows", frame.len())));
    }

    let m = frame.num_series();
    let b = rows.len();
    let mut inputs = Vec::with_capacity(b * m * lag);
    let mut targets = Vec::with_capacity(b);
    let mut days = Vec::with_capacity(b);
    let mut dates = Vec::with_capacity(b);
    let mut events = Vec::with_capacity(b);
    for t in rows {
        for s in 0..m {
            inputs.extend_from_slice(&frame.series(s)[t - lag..t]);
        }
        targets.push(frame.series(target)[t]);
        days.push(frame.day(t));
        let date = frame.dates()[t];
        dates.push(date);
        events.push(calendar.map_or_else(Vec::new, |c| c.indicators(date)));
    }
    Ok(WindowBatch {
        num_series: m,
        lag,
        target,
        inputs,
        targets,
        days,
        dates,
        events,
        event_types: calendar.map_or(0, EventCalendar::len),
    })
}
