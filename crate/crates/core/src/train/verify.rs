use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{forward_tape, init_params, DeepMstmParams, ModelConfig, PreparedBatch};
use crate::tensorcore::{finite_diff_check, OpKind, Tape, Tensor};

const MAX_PARAMETERS: usize = 500;
const WINDOWS: usize = 4;
const STEP: f64 = 1e-5;

/// Outcome of checking the full-model MAE gradient against central
/// differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientReport {
    pub max_rel_error: f64,
    pub passed: bool,
    pub tolerance: f64,
    pub num_parameters: usize,
    /// Array name and flat index of the worst coordinate.
    pub worst_array: String,
    pub worst_index: usize,
}

/// Checks analytic gradients of the training loss for every parameter of a
/// small model on a random batch.
///
/// Parameters start from `init_params(config, seed)` plus uniform noise so
/// that no bias sits at zero, and the batch holds a few random windows with
/// random days, event indicators and targets.
pub fn verify_gradients(config: &ModelConfig, seed: u64, tol: f64) -> Result<GradientReport> {
    run(config, seed, tol, None)
}

/// The same check with the backward rule of `kind` deliberately corrupted.
#[doc(hidden)]
pub fn verify_gradients_sabotaged(config: &ModelConfig, seed: u64, tol: f64, kind: OpKind) -> Result<GradientReport> {
    run(config, seed, tol, Some(kind))
}

fn run(config: &ModelConfig, seed: u64, tol: f64, sabotage: Option<OpKind>) -> Result<GradientReport> {
    config.validate()?;
    let mut params = init_params::<f64>(config, seed)?;
    let count = params.num_parameters();
    if count > MAX_PARAMETERS {
        return Err(Error::Contract(format!(
            "gradient check needs at most {MAX_PARAMETERS} parameters, the configuration has {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let flat: Vec<f64> = params.flatten().iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
    params.assign_flat(&flat)?;

    let (m, n, l) = (config.num_series, config.lag, config.event_types);
    let windows: Vec<f64> = (0..WINDOWS * m * n).map(|_| rng.sample(StandardNormal)).collect();
    let days: Vec<i64> = (0..WINDOWS).map(|_| rng.random_range(0..365)).collect();
    let events: Vec<Vec<f64>> = (0..WINDOWS)
        .map(|i| (0..l).map(|j| ((i + j) % 2) as f64).collect())
        .collect();
    let targets: Vec<f64> = (0..WINDOWS).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let batch = PreparedBatch::<f64>::new(config, &windows, &days, &events)?;
    let targets = Tensor::new(vec![1, WINDOWS], targets)?;

    let loss_at = |p: &DeepMstmParams<f64>, trainable: bool, sabotage: Option<OpKind>| -> Result<_> {
        let mut tape = Tape::new();
        if let Some(kind) = sabotage {
            tape.sabotage(kind);
        }
        let w = p.map(&mut |t| tape.leaf(t.clone(), trainable));
        let heads = forward_tape(&mut tape, &w, config, &batch)?;
        let y = tape.constant(targets.clone());
        let diff = tape.sub(heads.forecast, y)?;
        let loss = tape.mean_abs(diff)?;
        Ok((tape, w, loss))
    };

    let (tape, w, loss) = loss_at(&params, true, sabotage)?;
    let mut grads = tape.backward(loss)?;
    let analytic: Vec<f64> = w
        .slots()
        .into_iter()
        .flat_map(|v| grads.take(*v).expect("trainable leaf").into_data())
        .collect();

    let mut probe = params.clone();
    let mut failure = None;
    let check = finite_diff_check(
        |x: &[f64]| {
            let value = probe.assign_flat(x).and_then(|_| {
                let (tape, _, loss) = loss_at(&probe, false, None)?;
                tape.value(loss).item()
            });
            value.unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        &flat,
        &analytic,
        STEP,
    );
    if let Some(e) = failure {
        return Err(e);
    }

    let mut offset = check.worst_index;
    let mut worst_array = String::new();
    for (name, t) in params.named_slots() {
        if offset < t.numel() {
            worst_array = name;
            break;
        }
        offset -= t.numel();
    }
    Ok(GradientReport {
        max_rel_error: check.max_rel_error,
        passed: check.passes(tol),
        tolerance: tol,
        num_parameters: count,
        worst_array,
        worst_index: offset,
    })
}
