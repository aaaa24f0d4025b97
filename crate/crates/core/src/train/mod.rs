//! Joint training of all heads with an MAE objective and Adam.

mod adam;
mod fit;
mod verify;

pub use adam::{adam_step, AdamState};
pub use fit::{fit, fit_prepared, EpochRecord, TrainOptions, TrainReport};
pub use verify::{verify_gradients, verify_gradients_sabotaged, GradientReport};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean absolute difference of two equal-length, nonempty slices.
pub fn mae_loss<T: Scalar>(predictions: &[T], targets: &[T]) -> Result<T> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(Error::Contract(format!(
            "mae_loss needs equal nonempty lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    let total: T = predictions.iter().zip(targets).map(|(&p, &t)| (p - t).abs()).sum();
    Ok(total / T::lit(predictions.len() as f64))
}
