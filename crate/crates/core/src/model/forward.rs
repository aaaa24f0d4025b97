use chrono::NaiveDate;

use crate::data::{build_windows_range, DateRange, EventCalendar, SeriesFrame, WindowBatch};
use crate::error::{Error, Result};
use crate::layers::{self, fourier_matrix};
use crate::scalar::Scalar;
use crate::tensorcore::{Tape, Tensor, Var};

use super::{DeepMstmParams, ModelConfig, ModelWeights, TrendInput};

/// One forecast split into its additive parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Components<T> {
    pub forecast: T,
    pub trend: T,
    pub seasonal: T,
    pub event: T,
}

/// Per-step components over a date range.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub dates: Vec<NaiveDate>,
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub event: Vec<f64>,
    /// `trend + seasonal + event`, summed in that order.
    pub forecast: Vec<f64>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Assembles a decomposition, computing each forecast as the sum of its
    /// parts.
    pub fn from_parts(dates: Vec<NaiveDate>, trend: Vec<f64>, seasonal: Vec<f64>, event: Vec<f64>) -> Self {
        let forecast = trend
            .iter()
            .zip(&seasonal)
            .zip(&event)
            .map(|((d, s), e)| d + s + e)
            .collect();
        Decomposition {
            dates,
            trend,
            seasonal,
            event,
            forecast,
        }
    }
}

/// Model inputs for a batch of forecast steps, already shaped for the tape.
#[derive(Clone, Debug)]
pub struct PreparedBatch<T> {
    /// `B x M' x N`, where `M'` is 1 for univariate trend heads.
    trend_input: Tensor<T>,
    /// `G x B` Fourier features.
    fourier: Option<Tensor<T>>,
    /// `L x B` event indicators.
    events: Option<Tensor<T>>,
    len: usize,
}

impl<T: Scalar> PreparedBatch<T> {
    /// `windows` holds `B` windows of `M x N` values, row-major.
    pub fn new(config: &ModelConfig, windows: &[f64], days: &[i64], events: &[Vec<f64>]) -> Result<Self> {
        let (m, n) = (config.num_series, config.lag);
        let b = days.len();
        if windows.len() != b * m * n {
            return Err(Error::dim(
                "forward",
                format!("{} window values for {b} windows of {m} x {n}", windows.len()),
            ));
        }
        let trend_input = if config.multivariate {
            Tensor::new(vec![b, m, n], windows.iter().map(|&v| T::lit(v)).collect())?
        } else {
            let rows = (0..b).flat_map(|i| {
                let start = (i * m + config.target) * n;
                windows[start..start + n].iter().map(|&v| T::lit(v))
            });
            Tensor::new(vec![b, 1, n], rows.collect())?
        };
        let fourier = config.has_seasonal().then(|| fourier_matrix(days, &config.fourier));
        let events = if config.has_events() {
            let l = config.event_types;
            if events.len() != b || events.iter().any(|e| e.len() != l) {
                return Err(Error::dim("forward", format!("every step needs {l} event indicators")));
            }
            let mut data = vec![T::zero(); l * b];
            for (col, e) in events.iter().enumerate() {
                for (row, &v) in e.iter().enumerate() {
                    data[row * b + col] = T::lit(v);
                }
            }
            Some(Tensor::new(vec![l, b], data)?)
        } else {
            None
        };
        Ok(PreparedBatch {
            trend_input,
            fourier,
            events,
            len: b,
        })
    }

    pub fn from_windows(config: &ModelConfig, batch: &WindowBatch) -> Result<Self> {
        if batch.num_series != config.num_series || batch.lag != config.lag {
            return Err(Error::dim(
                "forward",
                format!(
                    "windows are {} x {}, configuration expects {} x {}",
                    batch.num_series, batch.lag, config.num_series, config.lag
                ),
            ));
        }
        Self::new(config, batch.inputs(), &batch.days, &batch.events)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The single-window batch holding window `i`.
    pub fn window(&self, i: usize) -> Result<Self> {
        if i >= self.len {
            return Err(Error::Range(format!("window {i} of {}", self.len)));
        }
        let shape = self.trend_input.shape();
        let per = shape[1] * shape[2];
        let trend_input = Tensor::new(
            vec![1, shape[1], shape[2]],
            self.trend_input.data()[i * per..(i + 1) * per].to_vec(),
        )?;
        let column = |t: &Tensor<T>| {
            let rows = t.shape()[0];
            let data = (0..rows).map(|r| t.data()[r * self.len + i]).collect();
            Tensor::new(vec![rows, 1], data)
        };
        Ok(PreparedBatch {
            trend_input,
            fourier: self.fourier.as_ref().map(column).transpose()?,
            events: self.events.as_ref().map(column).transpose()?,
            len: 1,
        })
    }
}

/// Tape nodes of one forward pass; each is `1 x B`.
#[derive(Clone, Copy, Debug)]
pub struct HeadVars {
    pub forecast: Var,
    pub trend: Var,
    pub seasonal: Option<Var>,
    pub event: Option<Var>,
}

/// Records the full model on `tape`:
/// `forecast = trend + seasonal + event`, with the trend read from the last
/// LSTM state over the convolutional feature maps of the lag window.
pub fn forward_tape<T: Scalar>(
    tape: &mut Tape<T>,
    w: &ModelWeights<Var>,
    config: &ModelConfig,
    batch: &PreparedBatch<T>,
) -> Result<HeadVars> {
    let input = tape.constant(batch.trend_input.clone());
    let features = match config.trend_input {
        TrendInput::Raw => input,
        TrendInput::Convolutional => {
            let c1 = w.conv1d.as_ref().map(|cw| layers::conv1d(tape, cw, input)).transpose()?;
            let c2 = w.conv2d.as_ref().map(|cw| layers::conv2d(tape, cw, input)).transpose()?;
            match (c1, c2) {
                (Some(c1), Some(c2)) => tape.concat_time_pad(c1, c2)?,
                (Some(c1), None) => c1,
                (None, Some(c2)) => {
                    let empty = tape.constant(Tensor::zeros(&[batch.len, 0, config.lag]));
                    tape.concat_time_pad(empty, c2)?
                }
                (None, None) => return Err(Error::Config("trend head has no convolution enabled".into())),
            }
        }
    };
    let states = layers::lstm(tape, &w.lstm, features, None)?;
    let last = *states.last().expect("lag >= 1");
    let trend = layers::dense(tape, &w.trend_dense, last)?;

    let seasonal = match (&w.seasonal, &batch.fourier) {
        (Some(sw), Some(f)) => {
            let f = tape.constant(f.clone());
            Some(layers::seasonal(tape, sw, f)?)
        }
        (None, None) => None,
        _ => return Err(Error::Config("seasonal head and Fourier features disagree".into())),
    };
    let event = match (&w.event, &batch.events) {
        (Some(ew), Some(b)) => {
            let b = tape.constant(b.clone());
            Some(layers::event(tape, ew, b)?)
        }
        (None, None) => None,
        _ => return Err(Error::Config("event head and event indicators disagree".into())),
    };

    let mut forecast = trend;
    if let Some(s) = seasonal {
        forecast = tape.add(forecast, s)?;
    }
    if let Some(e) = event {
        forecast = tape.add(forecast, e)?;
    }
    Ok(HeadVars {
        forecast,
        trend,
        seasonal,
        event,
    })
}

/// Evaluates a prepared batch without recording gradients.
pub fn forward_batch<T: Scalar>(
    params: &DeepMstmParams<T>,
    config: &ModelConfig,
    batch: &PreparedBatch<T>,
) -> Result<Vec<Components<T>>> {
    let mut tape = Tape::new();
    let w = params.map(&mut |t| tape.constant(t.clone()));
    let heads = forward_tape(&mut tape, &w, config, batch)?;
    let row = |v: Option<Var>| -> Vec<T> {
        match v {
            Some(v) => tape.value(v).data().to_vec(),
            None => vec![T::zero(); batch.len],
        }
    };
    let (f, d, s, e) = (
        row(Some(heads.forecast)),
        row(Some(heads.trend)),
        row(heads.seasonal),
        row(heads.event),
    );
    Ok((0..batch.len)
        .map(|i| Components {
            forecast: f[i],
            trend: d[i],
            seasonal: s[i],
            event: e[i],
        })
        .collect())
}

/// One-step forecast from a single `M x N` window of the `N` days before the
/// forecast day `day`, with that day's event indicators.
pub fn forward<T: Scalar>(
    window: &Tensor<T>,
    day: i64,
    events: &[T],
    params: &DeepMstmParams<T>,
    config: &ModelConfig,
) -> Result<Components<T>> {
    if window.shape() != [config.num_series, config.lag] {
        return Err(Error::dim(
            "forward",
            format!(
                "window is {:?}, expected [{}, {}]",
                window.shape(),
                config.num_series,
                config.lag
            ),
        ));
    }
    let flat: Vec<f64> = window.data().iter().map(|v| v.as_f64()).collect();
    let ev = vec![events.iter().map(|v| v.as_f64()).collect()];
    let batch = PreparedBatch::new(config, &flat, &[day], &ev)?;
    Ok(forward_batch(params, config, &batch)?[0])
}

/// Components for every date in `range`, each forecast conditioned on the
/// observed window before it. Values are in the units of `frame`.
pub fn decompose<T: Scalar>(
    frame: &SeriesFrame,
    range: &DateRange,
    params: &DeepMstmParams<T>,
    config: &ModelConfig,
    calendar: Option<&EventCalendar>,
) -> Result<Decomposition> {
    let rows = frame.rows_of(range)?;
    if rows.start < config.lag {
        return Err(Error::Range(format!(
            "{} has {} days of history, the model needs {}",
            range.start, rows.start, config.lag
        )));
    }
    let windows = build_windows_range(frame, config.lag, config.target, calendar, rows)?;
    decompose_windows(&windows, params, config)
}

pub fn decompose_windows<T: Scalar>(
    windows: &WindowBatch,
    params: &DeepMstmParams<T>,
    config: &ModelConfig,
) -> Result<Decomposition> {
    let batch = PreparedBatch::from_windows(config, windows)?;
    let comps = forward_batch(params, config, &batch)?;
    Ok(Decomposition::from_parts(
        windows.dates.clone(),
        comps.iter().map(|c| c.trend.as_f64()).collect(),
        comps.iter().map(|c| c.seasonal.as_f64()).collect(),
        comps.iter().map(|c| c.event.as_f64()).collect(),
    ))
}
