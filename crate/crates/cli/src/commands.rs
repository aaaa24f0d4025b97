use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use deepmstm::data::{format_real, synth_generate, write_series_csv, write_truth_csv, NormStats, SynthSpec};
use deepmstm::eval::{
    recursive_forecast, rolling_one_step, run_ablation, train_model, AblationSpec, TrainedModel,
};
use deepmstm::model::{read_arrays, write_arrays, DeepMstmParams, ModelConfig};
use deepmstm::tensorcore::Tensor;
use deepmstm::train::verify_gradients;

use crate::config::{ForecastMode, Run};
use crate::error::{CliError, CliResult};

pub const PARAMS_FILE: &str = "params.txt";
pub const REPORT_FILE: &str = "train_report.jsonl";
pub const RUN_FILE: &str = "run.json";
pub const CONFIG_COPY: &str = "config.toml";
pub const FORECAST_FILE: &str = "forecast.csv";
pub const DECOMPOSITION_FILE: &str = "decomposition.csv";
pub const ABLATION_CSV: &str = "ablation.csv";
pub const ABLATION_JSON: &str = "ablation.json";

const NORM_MEAN: &str = "norm.mean";
const NORM_STD: &str = "norm.std";

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> CliResult<()> {
    w.flush()
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// Summary written next to the fitted parameters.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub data: String,
    pub split_date: chrono::NaiveDate,
    pub seed: u64,
    pub epochs_run: usize,
    pub final_mae: Option<f64>,
    pub num_parameters: usize,
    pub wall_clock_seconds: f64,
    pub model: ModelConfig,
}

/// Trains on the rows up to the split date and writes the parameter file,
/// the per-epoch report, a run summary and a copy of the configuration.
pub fn fit(config_path: &Path) -> CliResult<PathBuf> {
    let run = Run::load(config_path)?;
    let (model, report) = train_model::<f64>(
        &run.data_name(),
        &run.frame,
        run.calendar.as_ref(),
        &run.model,
        &run.config.train_options(),
        run.split(),
    )?;
    let dir = run.out_dir()?.to_path_buf();

    let path = dir.join(PARAMS_FILE);
    let mut w = create(&path)?;
    let mut arrays = model.params.to_named();
    let k = model.norm.mean.len();
    arrays.push((NORM_MEAN.into(), Tensor::new(vec![k], model.norm.mean.clone())?));
    arrays.push((NORM_STD.into(), Tensor::new(vec![k], model.norm.std.clone())?));
    write_arrays(&mut w, &arrays)?;
    finish(&path, w)?;

    let path = dir.join(REPORT_FILE);
    let mut w = create(&path)?;
    report.write_jsonl(&mut w)?;
    finish(&path, w)?;

    let summary = RunSummary {
        data: run.data_name(),
        split_date: run.split(),
        seed: report.seed,
        epochs_run: report.epochs_run(),
        final_mae: report.final_mae(),
        num_parameters: model.params.num_parameters(),
        wall_clock_seconds: report.wall_clock.as_secs_f64(),
        model: run.model.clone(),
    };
    let path = dir.join(RUN_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| CliError::config(e.to_string()))?;
    writeln!(w).map_err(|e| CliError::config(e.to_string()))?;
    finish(&path, w)?;

    let path = dir.join(CONFIG_COPY);
    std::fs::write(&path, &run.source).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(dir)
}

/// Reads a parameter file written by [`fit`] back into a model for `run`.
pub fn load_model(run: &Run, path: &Path) -> CliResult<TrainedModel<f64>> {
    let file = File::open(path).map_err(|e| {
        CliError::config(format!("cannot open parameter file {} ({e}); run `fit` first", path.display()))
    })?;
    let mut arrays = read_arrays::<f64, _>(BufReader::new(file)).map_err(|e| CliError::at(path, e))?;
    let mut take = |name: &str| -> CliResult<Vec<f64>> {
        let i = arrays
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| CliError::config(format!("{}: missing array {name}", path.display())))?;
        Ok(arrays.remove(i).1.into_data())
    };
    let mean = take(NORM_MEAN)?;
    let std = take(NORM_STD)?;
    let norm = NormStats::new(mean, std).map_err(|e| CliError::at(path, e))?;
    let params = DeepMstmParams::from_named(&run.model, &arrays).map_err(|e| CliError::at(path, e))?;
    TrainedModel::new(&run.data_name(), run.model.clone(), params, norm).map_err(|e| CliError::at(path, e))
}

fn params_path(run: &Run, params: Option<&Path>) -> PathBuf {
    params.map_or_else(|| run.config.output.dir.join(PARAMS_FILE), Path::to_path_buf)
}

/// Writes `date,forecast,truth` in original units. Truth is left empty for
/// dates past the end of the data.
pub fn forecast(
    config_path: &Path,
    params: Option<&Path>,
    mode: Option<ForecastMode>,
    horizon: Option<usize>,
) -> CliResult<PathBuf> {
    let run = Run::load(config_path)?;
    let model = load_model(&run, &params_path(&run, params))?;
    let mode = mode.unwrap_or(run.config.forecast.mode);
    let start = run.frame.rows_of(&run.test)?.start;
    let available = run.frame.rows_of(&run.test)?.len();
    let horizon = horizon.or(run.config.forecast.horizon).unwrap_or(available);
    let target = run.model.target;
    let truth = run.frame.series(target);

    let mut rows: Vec<(chrono::NaiveDate, f64, Option<f64>)> = Vec::with_capacity(horizon);
    if horizon > 0 {
        match mode {
            ForecastMode::OneStep => {
                if horizon > run.frame.len() - start {
                    return Err(CliError::data(format!(
                        "one-step forecasting needs observations: horizon {horizon} runs past the last date {}",
                        run.frame.dates()[run.frame.len() - 1]
                    )));
                }
                let end = run.frame.dates()[start + horizon - 1];
                let range = deepmstm::data::DateRange::new(run.test.start, end)?;
                let result = rolling_one_step(&model, &run.frame, &range, run.calendar.as_ref())?;
                for i in 0..result.len() {
                    rows.push((result.dates[i], result.forecasts[i], Some(result.truth[i])));
                }
            }
            ForecastMode::Recursive => {
                let path = recursive_forecast(&model, &run.frame, start, horizon, run.calendar.as_ref())?;
                for (k, (date, c)) in path.into_iter().enumerate() {
                    rows.push((date, c.forecast, truth.get(start + k).copied()));
                }
            }
        }
    }

    let dir = run.out_dir()?;
    let path = dir.join(FORECAST_FILE);
    let mut w = create(&path)?;
    let io = |e: std::io::Error| CliError::config(format!("{}: {e}", path.display()));
    writeln!(w, "date,forecast,truth").map_err(io)?;
    for (date, f, t) in rows {
        let t = t.map(format_real).unwrap_or_default();
        writeln!(w, "{date},{},{t}", format_real(f)).map_err(io)?;
    }
    finish(&path, w)?;
    Ok(path)
}

/// Writes `date,truth,d,s,e,forecast` over the test range.
pub fn decompose(config_path: &Path, params: Option<&Path>) -> CliResult<PathBuf> {
    let run = Run::load(config_path)?;
    let model = load_model(&run, &params_path(&run, params))?;
    let dec = model.decompose(&run.frame, &run.test, run.calendar.as_ref())?;
    let rows = run.frame.rows_of(&run.test)?;
    let truth = &run.frame.series(run.model.target)[rows];

    let path = run.out_dir()?.join(DECOMPOSITION_FILE);
    let mut w = create(&path)?;
    let io = |e: std::io::Error| CliError::config(format!("{}: {e}", path.display()));
    writeln!(w, "date,truth,d,s,e,forecast").map_err(io)?;
    for (i, t) in truth.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            dec.dates[i],
            format_real(*t),
            format_real(dec.trend[i]),
            format_real(dec.seasonal[i]),
            format_real(dec.event[i]),
            format_real(dec.forecast[i]),
        )
        .map_err(io)?;
    }
    finish(&path, w)?;
    Ok(path)
}

/// Trains every configured arm for every seed and writes per-run scores and
/// per-arm medians.
pub fn ablate(config_path: &Path) -> CliResult<PathBuf> {
    let run = Run::load(config_path)?;
    let spec = AblationSpec {
        data: run.data_name(),
        frame: &run.frame,
        calendar: run.calendar.as_ref(),
        train_end: run.split(),
        test: run.test,
        arms: run
            .config
            .eval
            .arms
            .iter()
            .map(|&a| (a.label().to_string(), run.model.with_arm(a)))
            .collect(),
        seeds: run.config.eval.seeds.clone(),
        train: run.config.train_options(),
    };
    if spec.arms.is_empty() || spec.seeds.is_empty() {
        return Err(CliError::config("eval: arms and seeds must both be nonempty"));
    }
    let table = run_ablation(&spec)?;
    let dir = run.out_dir()?;

    let path = dir.join(ABLATION_CSV);
    let mut w = create(&path)?;
    table.write_csv(&mut w)?;
    finish(&path, w)?;

    let path = dir.join(ABLATION_JSON);
    let mut json = table.summary_json()?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(dir.to_path_buf())
}

pub const SYNTH_SERIES: &str = "series.csv";
pub const SYNTH_TRUTH: &str = "truth.csv";
pub const SYNTH_EVENTS: &str = "events.csv";

/// Generates synthetic data from a TOML spec: the wide series file, the true
/// components and the event calendar.
pub fn synth(spec_path: &Path, seed: u64, out: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::config(format!("cannot read spec {}: {e}", spec_path.display())))?;
    let spec: SynthSpec = toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", spec_path.display())))?;
    let data = synth_generate(&spec, seed).map_err(|e| CliError::at(spec_path, e))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::config(format!("{}: {e}", out.display())))?;

    let path = out.join(SYNTH_SERIES);
    let mut w = create(&path)?;
    write_series_csv(&data.frame, &mut w)?;
    finish(&path, w)?;

    let path = out.join(SYNTH_TRUTH);
    let mut w = create(&path)?;
    write_truth_csv(&data, &mut w)?;
    finish(&path, w)?;

    let path = out.join(SYNTH_EVENTS);
    let mut w = create(&path)?;
    data.calendar.write_csv(&mut w)?;
    finish(&path, w)
}

/// Small model used when no configuration is given to `verify-grad`.
pub fn default_check_model() -> ModelConfig {
    let mut c = ModelConfig::new(2, 0, 5);
    c.conv1d_kernels = 2;
    c.conv2d_kernels = 2;
    c.hidden = 3;
    c.seasonal_hidden = 3;
    c.fourier = deepmstm::layers::FourierSpec::single(7, 2);
    c.event_types = 1;
    c
}

/// Compares tape gradients with central differences; fails with a numerical
/// error when the worst relative error exceeds `tol`.
pub fn verify_grad(model: Option<&Path>, seed: u64, tol: f64) -> CliResult<String> {
    let config = match model {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
        }
        None => default_check_model(),
    };
    let r = verify_gradients(&config, seed, tol)?;
    let line = format!(
        "max relative error {:.3e} over {} parameters (worst: {}[{}]), tolerance {:.1e}",
        r.max_rel_error, r.num_parameters, r.worst_array, r.worst_index, r.tolerance
    );
    if r.passed {
        Ok(line)
    } else {
        Err(CliError::numerical(format!("gradient check failed: {line}")))
    }
}
