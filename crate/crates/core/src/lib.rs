pub mod data;
pub mod error;
pub mod eval;
pub mod layers;
pub mod model;
pub mod scalar;
pub mod tensorcore;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instantiations used by the data, evaluation and
/// command-line layers.
pub type Tensor64 = tensorcore::Tensor<f64>;
pub type Params = model::DeepMstmParams<f64>;
pub type TrainedModel = eval::TrainedModel<f64>;
pub type TrainReport = train::TrainReport<f64>;

/// Single-precision counterparts.
pub type Tensor32 = tensorcore::Tensor<f32>;
pub type Params32 = model::DeepMstmParams<f32>;
