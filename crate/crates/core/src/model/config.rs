use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::FourierSpec;

/// What the LSTM of the trend head reads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendInput {
    /// Feature maps of the 1D (series-axis) and/or 2D (temporal) convolutions.
    #[default]
    Convolutional,
    /// The lag window itself, with no convolution (LSTM baselines).
    Raw,
}

/// Architecture of one model instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `M`, series in the input frame.
    pub num_series: usize,
    /// Zero-based index of the series being forecast.
    pub target: usize,
    /// `N`, lagged observations per window.
    pub lag: usize,
    /// `K1`.
    #[serde(default = "default_kernels")]
    pub conv1d_kernels: usize,
    /// `K2`.
    #[serde(default = "default_kernels")]
    pub conv2d_kernels: usize,
    /// `H`.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Seasonal cycles; an empty list disables the seasonal head.
    #[serde(default = "default_fourier")]
    pub fourier: FourierSpec,
    #[serde(default = "default_hidden")]
    pub seasonal_hidden: usize,
    /// `L`; zero disables the event head.
    #[serde(default)]
    pub event_types: usize,
    #[serde(default = "yes")]
    pub use_1d: bool,
    #[serde(default = "yes")]
    pub use_2d: bool,
    /// When false the trend head only sees the target series.
    #[serde(default = "yes")]
    pub multivariate: bool,
    #[serde(default)]
    pub trend_input: TrendInput,
}

fn default_kernels() -> usize {
    4
}

fn default_hidden() -> usize {
    8
}

fn default_fourier() -> FourierSpec {
    FourierSpec::single(7, 3)
}

fn yes() -> bool {
    true
}

/// The three ablation variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    /// Univariate input, temporal (2D) convolution only.
    Model1,
    /// Multivariate input, series-axis (1D) convolution only.
    Model2,
    /// Multivariate input, both convolutions.
    Model3,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::Model1, Arm::Model2, Arm::Model3];

    pub fn label(self) -> &'static str {
        match self {
            Arm::Model1 => "model1",
            Arm::Model2 => "model2",
            Arm::Model3 => "model3",
        }
    }
}

impl ModelConfig {
    /// Full model with the default widths (4 + 4 kernels, 8 LSTM units, 8
    /// seasonal units), weekly seasonality with 3 harmonics and no events.
    pub fn new(num_series: usize, target: usize, lag: usize) -> Self {
        ModelConfig {
            num_series,
            target,
            lag,
            conv1d_kernels: default_kernels(),
            conv2d_kernels: default_kernels(),
            hidden: default_hidden(),
            fourier: default_fourier(),
            seasonal_hidden: default_hidden(),
            event_types: 0,
            use_1d: true,
            use_2d: true,
            multivariate: true,
            trend_input: TrendInput::Convolutional,
        }
    }

    /// This configuration with the flags of an ablation arm.
    pub fn with_arm(&self, arm: Arm) -> Self {
        let (multivariate, use_1d, use_2d) = match arm {
            Arm::Model1 => (false, false, true),
            Arm::Model2 => (true, true, false),
            Arm::Model3 => (true, true, true),
        };
        ModelConfig {
            multivariate,
            use_1d,
            use_2d,
            trend_input: TrendInput::Convolutional,
            ..self.clone()
        }
    }

    /// Rows of the window the trend head reads.
    pub fn trend_series(&self) -> usize {
        if self.multivariate {
            self.num_series
        } else {
            1
        }
    }

    pub fn has_conv1d(&self) -> bool {
        self.trend_input == TrendInput::Convolutional && self.use_1d
    }

    pub fn has_conv2d(&self) -> bool {
        self.trend_input == TrendInput::Convolutional && self.use_2d
    }

    pub fn has_seasonal(&self) -> bool {
        !self.fourier.is_empty()
    }

    pub fn has_events(&self) -> bool {
        self.event_types > 0
    }

    /// Feature rows entering the LSTM.
    pub fn lstm_features(&self) -> usize {
        match self.trend_input {
            TrendInput::Raw => self.trend_series(),
            TrendInput::Convolutional => {
                let k1 = if self.use_1d { self.conv1d_kernels } else { 0 };
                let k2 = if self.use_2d { self.conv2d_kernels } else { 0 };
                k1 + k2
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_series == 0 {
            return bad("num_series must be positive".into());
        }
        if self.target >= self.num_series {
            return bad(format!("target {} out of {} series", self.target, self.num_series));
        }
        if self.lag == 0 {
            return bad("lag must be positive".into());
        }
        if self.hidden == 0 {
            return bad("hidden must be positive".into());
        }
        if self.trend_input == TrendInput::Convolutional {
            if !self.use_1d && !self.use_2d {
                return bad("at least one of use_1d / use_2d must be enabled".into());
            }
            if self.use_2d && self.lag < 2 {
                return bad("the temporal convolution needs lag >= 2".into());
            }
            if self.use_1d && self.conv1d_kernels == 0 {
                return bad("use_1d needs conv1d_kernels >= 1".into());
            }
            if self.use_2d && self.conv2d_kernels == 0 {
                return bad("use_2d needs conv2d_kernels >= 1".into());
            }
        }
        self.fourier.validate()?;
        if self.has_seasonal() && self.seasonal_hidden == 0 {
            return bad("seasonal_hidden must be positive".into());
        }
        Ok(())
    }
}
