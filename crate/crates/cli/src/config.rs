use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use deepmstm::data::{ingest_csv, DateRange, EventCalendar, SeriesFrame};
use deepmstm::layers::FourierSpec;
use deepmstm::model::{Arm, ModelConfig, TrendInput};
use deepmstm::train::TrainOptions;

use crate::error::{CliError, CliResult};

/// Everything one run needs, read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub forecast: ForecastSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Wide CSV: `date` then one column per series.
    pub series: PathBuf,
    /// Optional `date,event_type` CSV.
    #[serde(default)]
    pub events: Option<PathBuf>,
    /// Column name of the series to forecast.
    pub target: String,
    /// Label for result tables; defaults to the series file stem.
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub lag: usize,
    pub conv1d_kernels: usize,
    pub conv2d_kernels: usize,
    pub hidden: usize,
    pub seasonal_hidden: usize,
    pub fourier: FourierSpec,
    pub use_1d: bool,
    pub use_2d: bool,
    pub multivariate: bool,
    pub trend_input: TrendInput,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = ModelConfig::new(1, 0, 14);
        ModelSection {
            lag: c.lag,
            conv1d_kernels: c.conv1d_kernels,
            conv2d_kernels: c.conv2d_kernels,
            hidden: c.hidden,
            seasonal_hidden: c.seasonal_hidden,
            fourier: c.fourier,
            use_1d: c.use_1d,
            use_2d: c.use_2d,
            multivariate: c.multivariate,
            trend_input: c.trend_input,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    /// Last date used for normalization and training.
    pub split_date: NaiveDate,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub patience: Option<usize>,
}

fn default_epochs() -> usize {
    TrainOptions::default().epochs
}

fn default_lr() -> f64 {
    TrainOptions::default().lr
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Defaults to the day after the split date.
    #[serde(default)]
    pub test_start: Option<NaiveDate>,
    /// Defaults to the last date in the data.
    #[serde(default)]
    pub test_end: Option<NaiveDate>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_arms")]
    pub arms: Vec<Arm>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_arms() -> Vec<Arm> {
    Arm::ALL.to_vec()
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            test_start: None,
            test_end: None,
            seeds: default_seeds(),
            arms: default_arms(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    /// Each day conditions on observed values up to the day before.
    #[default]
    OneStep,
    /// Forecasts are fed back as inputs; other series hold their last value.
    Recursive,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    #[serde(default)]
    pub mode: ForecastMode,
    /// Days to forecast; defaults to the length of the test range.
    #[serde(default)]
    pub horizon: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl RunConfig {
    /// Parses `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> CliResult<(RunConfig, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.data.series);
        if let Some(e) = config.data.events.as_mut() {
            resolve(e);
        }
        resolve(&mut config.output.dir);
        Ok((config, text))
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            seed: self.train.seed,
            epochs: self.train.epochs,
            lr: self.train.lr,
            patience: self.train.patience,
        }
    }
}

/// A configuration together with the data it points at.
pub struct Run {
    pub config: RunConfig,
    /// The configuration file exactly as read.
    pub source: String,
    pub frame: SeriesFrame,
    pub calendar: Option<EventCalendar>,
    pub model: ModelConfig,
    pub test: DateRange,
}

impl Run {
    pub fn load(path: &Path) -> CliResult<Run> {
        let (config, source) = RunConfig::load(path)?;
        let series = &config.data.series;
        if !series.exists() {
            return Err(CliError::data(format!("data file {} does not exist", series.display())));
        }
        let frame = ingest_csv(series).map_err(|e| CliError::at(series, e))?;
        let calendar = match &config.data.events {
            Some(p) if !p.exists() => {
                return Err(CliError::data(format!("events file {} does not exist", p.display())));
            }
            Some(p) => Some(EventCalendar::from_csv(p).map_err(|e| CliError::at(p, e))?),
            None => None,
        };
        let target = frame.series_index(&config.data.target).ok_or_else(|| {
            CliError::config(format!(
                "data.target: no series named {:?} in {} (have {:?})",
                config.data.target,
                series.display(),
                frame.series_ids()
            ))
        })?;

        let first = frame.dates()[0];
        let last = *frame.dates().last().expect("frames are nonempty");
        let split = config.train.split_date;
        if split < first || split >= last {
            return Err(CliError::config(format!(
                "train.split_date: {split} must lie in [{first}, {last}) so both splits are nonempty"
            )));
        }
        let test_start = config.eval.test_start.unwrap_or(split + chrono::Days::new(1));
        let test_end = config.eval.test_end.unwrap_or(last);
        if test_start <= split || test_end > last {
            return Err(CliError::config(format!(
                "eval: test range {test_start}..{test_end} must start after {split} and end by {last}"
            )));
        }
        let test = DateRange::new(test_start, test_end).map_err(|e| CliError::config(format!("eval: {e}")))?;

        let m = &config.model;
        let model = ModelConfig {
            num_series: frame.num_series(),
            target,
            lag: m.lag,
            conv1d_kernels: m.conv1d_kernels,
            conv2d_kernels: m.conv2d_kernels,
            hidden: m.hidden,
            fourier: m.fourier.clone(),
            seasonal_hidden: m.seasonal_hidden,
            event_types: calendar.as_ref().map_or(0, EventCalendar::len),
            use_1d: m.use_1d,
            use_2d: m.use_2d,
            multivariate: m.multivariate,
            trend_input: m.trend_input,
        };
        model.validate().map_err(|e| CliError::config(format!("model: {e}")))?;
        Ok(Run {
            config,
            source,
            frame,
            calendar,
            model,
            test,
        })
    }

    pub fn data_name(&self) -> String {
        self.config.data.name.clone().unwrap_or_else(|| {
            self.config
                .data
                .series
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into())
        })
    }

    pub fn out_dir(&self) -> CliResult<&Path> {
        let dir = &self.config.output.dir;
        std::fs::create_dir_all(dir).map_err(|e| CliError::config(format!("output.dir {}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn split(&self) -> NaiveDate {
        self.config.train.split_date
    }
}
