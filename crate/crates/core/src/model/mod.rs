//! The composed model: CNN-LSTM trend head, Fourier seasonal head and linear
//! event head, summed into a one-step forecast.

mod config;
mod forward;
mod io;
mod params;

pub use config::{Arm, ModelConfig, TrendInput};
pub use forward::{
    decompose, decompose_windows, forward, forward_batch, forward_tape, Components, Decomposition, HeadVars,
    PreparedBatch,
};
pub use io::{read_arrays, write_arrays, FORMAT_VERSION};
pub use params::{glorot_limit, init_params, DeepMstmParams, ModelWeights};
