//! Trainable layers.
//!
//! Each layer's weights live in a small struct generic over the slot type:
//! `Tensor<T>` for stored parameters, [`Var`] once bound to a tape, and
//! again `Tensor<T>` for gradients or optimizer moments. The tape-level
//! functions here are what the model composes; the `*_forward` helpers
//! evaluate one layer in isolation on a scratch tape.

mod fourier;
mod lstm;

pub use fourier::{
    fourier_features, fourier_matrix, seasonal, seasonal_forward, Cycle, FourierSpec, SeasonalParams,
    SeasonalWeights,
};
pub use lstm::{lstm, lstm_forward, LstmParams, LstmWeights};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensorcore::{Tape, Tensor, Var};

macro_rules! weight_set {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name<A> {
            $($(#[$fmeta])* pub $field: A,)+
        }

        impl<A> $name<A> {
            pub fn map<B>(&self, f: &mut impl FnMut(&A) -> B) -> $name<B> {
                $name { $($field: f(&self.$field),)+ }
            }

            /// Fields in declaration order, with their names.
            pub fn slots(&self) -> Vec<(&'static str, &A)> {
                vec![$((stringify!($field), &self.$field),)+]
            }

            /// Same order as [`Self::slots`].
            pub fn slots_mut(&mut self) -> Vec<&mut A> {
                vec![$(&mut self.$field,)+]
            }
        }
    };
}
pub(crate) use weight_set;

weight_set! {
    /// Fully connected layer with linear activation: `weights` is `O x F`,
    /// `bias` is `O`.
    DenseWeights { weights, bias }
}

weight_set! {
    /// Convolution kernels (`K x M` for the series-axis layer, `K x M x 2` for
    /// the temporal layer) with one bias per kernel.
    ConvWeights { kernels, bias }
}

weight_set! {
    /// Event head: `weights` is the `1 x L` row of per-event effects.
    EventWeights { weights }
}

pub type DenseParams<T> = DenseWeights<Tensor<T>>;
pub type ConvParams<T> = ConvWeights<Tensor<T>>;
pub type EventParams<T> = EventWeights<Tensor<T>>;

/// `weights * x + bias` for `x` of shape `F x B`.
pub fn dense<T: Scalar>(tape: &mut Tape<T>, w: &DenseWeights<Var>, x: Var) -> Result<Var> {
    let wx = tape.matmul(w.weights, x)?;
    tape.add_bias(wx, w.bias)
}

pub fn dense_forward<T: Scalar>(x: &[T], params: &DenseParams<T>) -> Result<Vec<T>> {
    let mut tape = Tape::new();
    let w = params.map(&mut |t| tape.constant(t.clone()));
    let input = tape.constant(Tensor::column(x.to_vec()));
    let out = dense(&mut tape, &w, input)?;
    Ok(tape.value(out).data().to_vec())
}

/// `a . b` for event indicators `b` of shape `L x B`.
pub fn event<T: Scalar>(tape: &mut Tape<T>, w: &EventWeights<Var>, indicators: Var) -> Result<Var> {
    tape.matmul(w.weights, indicators)
}

pub fn event_forward<T: Scalar>(indicators: &[T], params: &EventParams<T>) -> Result<T> {
    let l = params.weights.numel();
    if indicators.len() != l {
        return Err(Error::dim(
            "event_forward",
            format!("{} indicators for {l} event types", indicators.len()),
        ));
    }
    let mut tape = Tape::new();
    let w = params.map(&mut |t| tape.constant(t.clone()));
    let b = tape.constant(Tensor::column(indicators.to_vec()));
    let out = event(&mut tape, &w, b)?;
    tape.value(out).item()
}

pub fn conv1d<T: Scalar>(tape: &mut Tape<T>, w: &ConvWeights<Var>, input: Var) -> Result<Var> {
    tape.conv_feature_1d(input, w.kernels, w.bias)
}

pub fn conv2d<T: Scalar>(tape: &mut Tape<T>, w: &ConvWeights<Var>, input: Var) -> Result<Var> {
    tape.conv_temporal_2d(input, w.kernels, w.bias)
}
