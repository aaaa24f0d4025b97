use crate::error::{Error, Result};

use super::SeriesFrame;

/// Per-series z-score statistics, fitted on the training split only.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Mean and population standard deviation of every series.
    pub fn fit(train: &SeriesFrame) -> Result<Self> {
        let mut mean = Vec::with_capacity(train.num_series());
        let mut std = Vec::with_capacity(train.num_series());
        for m in 0..train.num_series() {
            let xs = train.series(m);
            let n = xs.len() as f64;
            let mu = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd.is_nan() || sd <= 0.0 {
                return Err(Error::ConstantSeries(train.series_ids()[m].clone()));
            }
            mean.push(mu);
            std.push(sd);
        }
        Ok(NormStats { mean, std })
    }

    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::Contract("mean and std lengths differ".into()));
        }
        if let Some(i) = std.iter().position(|s| s.is_nan() || *s <= 0.0) {
            return Err(Error::ConstantSeries(format!("#{i}")));
        }
        Ok(NormStats { mean, std })
    }

    pub fn normalize(&self, frame: &SeriesFrame) -> Result<SeriesFrame> {
        if frame.num_series() != self.mean.len() {
            return Err(Error::Contract(format!(
                "stats for {} series, frame has {}",
                self.mean.len(),
                frame.num_series()
            )));
        }
        Ok(frame.map_series(|m, v| self.normalize_value(m, v)))
    }

    pub fn normalize_value(&self, m: usize, v: f64) -> f64 {
        (v - self.mean[m]) / self.std[m]
    }

    pub fn denormalize_value(&self, m: usize, z: f64) -> f64 {
        z * self.std[m] + self.mean[m]
    }

    /// Rescales a difference or additive component (no mean offset).
    pub fn rescale(&self, m: usize, z: f64) -> f64 {
        z * self.std[m]
    }

    pub fn denormalize(&self, values: &[f64], m: usize) -> Vec<f64> {
        values.iter().map(|&z| self.denormalize_value(m, z)).collect()
    }
}
