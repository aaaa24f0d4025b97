use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layers::{ConvWeights, DenseWeights, EventWeights, LstmWeights, SeasonalWeights};
use crate::scalar::Scalar;
use crate::tensorcore::Tensor;

use super::ModelConfig;

/// Every learnable array of the model. Heads the configuration disables are
/// `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights<A> {
    pub conv1d: Option<ConvWeights<A>>,
    pub conv2d: Option<ConvWeights<A>>,
    pub lstm: LstmWeights<A>,
    pub trend_dense: DenseWeights<A>,
    pub seasonal: Option<SeasonalWeights<A>>,
    pub event: Option<EventWeights<A>>,
}

pub type DeepMstmParams<T> = ModelWeights<Tensor<T>>;

/// Produces the array for a named slot of the given shape.
type SlotFn<'a, A, E> = dyn FnMut(&str, &[usize]) -> std::result::Result<A, E> + 'a;

impl<A> ModelWeights<A> {
    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> B) -> ModelWeights<B> {
        ModelWeights {
            conv1d: self.conv1d.as_ref().map(|w| w.map(f)),
            conv2d: self.conv2d.as_ref().map(|w| w.map(f)),
            lstm: self.lstm.map(f),
            trend_dense: self.trend_dense.map(f),
            seasonal: self.seasonal.as_ref().map(|w| w.map(f)),
            event: self.event.as_ref().map(|w| w.map(f)),
        }
    }

    /// `(qualified name, slot)` in a fixed order shared by every method here.
    pub fn named_slots(&self) -> Vec<(String, &A)> {
        fn push<'a, A>(out: &mut Vec<(String, &'a A)>, prefix: &str, slots: Vec<(&'static str, &'a A)>) {
            out.extend(slots.into_iter().map(|(n, a)| (format!("{prefix}.{n}"), a)));
        }
        let mut out = Vec::new();
        if let Some(w) = &self.conv1d {
            push(&mut out, "conv1d", w.slots());
        }
        if let Some(w) = &self.conv2d {
            push(&mut out, "conv2d", w.slots());
        }
        push(&mut out, "lstm", self.lstm.slots());
        push(&mut out, "trend_dense", self.trend_dense.slots());
        if let Some(w) = &self.seasonal {
            push(&mut out, "seasonal", w.slots());
        }
        if let Some(w) = &self.event {
            push(&mut out, "event", w.slots());
        }
        out
    }

    pub fn slots(&self) -> Vec<&A> {
        self.named_slots().into_iter().map(|(_, a)| a).collect()
    }

    pub fn slots_mut(&mut self) -> Vec<&mut A> {
        let mut out = Vec::new();
        if let Some(w) = &mut self.conv1d {
            out.extend(w.slots_mut());
        }
        if let Some(w) = &mut self.conv2d {
            out.extend(w.slots_mut());
        }
        out.extend(self.lstm.slots_mut());
        out.extend(self.trend_dense.slots_mut());
        if let Some(w) = &mut self.seasonal {
            out.extend(w.slots_mut());
        }
        if let Some(w) = &mut self.event {
            out.extend(w.slots_mut());
        }
        out
    }

    /// Builds the structure for `config`, calling `f(name, shape)` once per
    /// array in slot order.
    pub fn try_build<E>(
        config: &ModelConfig,
        mut f: impl FnMut(&str, &[usize]) -> std::result::Result<A, E>,
    ) -> std::result::Result<Self, E> {
        let m = config.trend_series();
        let h = config.hidden;
        let conv = |prefix: &str, kernels: Vec<usize>, f: &mut SlotFn<'_, A, E>| {
            let k = kernels[0];
            Ok::<_, E>(ConvWeights {
                kernels: f(&format!("{prefix}.kernels"), &kernels)?,
                bias: f(&format!("{prefix}.bias"), &[k])?,
            })
        };
        let conv1d = if config.has_conv1d() {
            Some(conv("conv1d", vec![config.conv1d_kernels, m], &mut f)?)
        } else {
            None
        };
        let conv2d = if config.has_conv2d() {
            Some(conv("conv2d", vec![config.conv2d_kernels, m, 2], &mut f)?)
        } else {
            None
        };
        let lstm = LstmWeights {
            input_weights: f("lstm.input_weights", &[4 * h, config.lstm_features()])?,
            recurrent_weights: f("lstm.recurrent_weights", &[4 * h, h])?,
            bias: f("lstm.bias", &[4 * h])?,
        };
        let trend_dense = DenseWeights {
            weights: f("trend_dense.weights", &[1, h])?,
            bias: f("trend_dense.bias", &[1])?,
        };
        let seasonal = if config.has_seasonal() {
            let s = config.seasonal_hidden;
            Some(SeasonalWeights {
                hidden_weights: f("seasonal.hidden_weights", &[s, config.fourier.dim()])?,
                hidden_bias: f("seasonal.hidden_bias", &[s])?,
                output_weights: f("seasonal.output_weights", &[1, s])?,
                output_bias: f("seasonal.output_bias", &[1])?,
            })
        } else {
            None
        };
        let event = if config.has_events() {
            Some(EventWeights {
                weights: f("event.weights", &[1, config.event_types])?,
            })
        } else {
            None
        };
        Ok(ModelWeights {
            conv1d,
            conv2d,
            lstm,
            trend_dense,
            seasonal,
            event,
        })
    }
}

impl<T: Scalar> DeepMstmParams<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        Self::try_build::<()>(config, |_, shape| Ok(Tensor::zeros(shape))).expect("infallible")
    }

    pub fn num_parameters(&self) -> usize {
        self.slots().iter().map(|t| t.numel()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slots().iter().all(|t| t.is_finite())
    }

    /// Flattened copy of every array, in slot order.
    pub fn flatten(&self) -> Vec<T> {
        self.slots().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    /// Overwrites every array from a flat buffer produced by [`Self::flatten`].
    pub fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(Error::Contract(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_parameters()
            )));
        }
        let mut off = 0;
        for t in self.slots_mut() {
            let n = t.numel();
            t.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Rebuilds parameters from named arrays (for example a parameter file),
    /// checking that every array the configuration needs is present with the
    /// right shape. Unrelated names are ignored.
    pub fn from_named(config: &ModelConfig, arrays: &[(String, Tensor<T>)]) -> Result<Self> {
        Self::try_build(config, |name, shape| {
            let (_, t) = arrays
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::Incompatible(format!("array {name} missing for this configuration")))?;
            if t.shape() != shape {
                return Err(Error::Incompatible(format!(
                    "array {name} has shape {:?}, configuration needs {shape:?}",
                    t.shape()
                )));
            }
            Ok(t.clone())
        })
    }

    pub fn to_named(&self) -> Vec<(String, Tensor<T>)> {
        self.named_slots().into_iter().map(|(n, t)| (n, t.clone())).collect()
    }
}

/// Glorot-uniform limit `sqrt(6 / (fan_in + fan_out))`, taking the leading
/// axis of a weight array as its fan-out and the product of the remaining axes
/// as its fan-in.
pub fn glorot_limit(shape: &[usize]) -> f64 {
    let fan_out = shape.first().copied().unwrap_or(1);
    let fan_in: usize = shape.iter().skip(1).product();
    (6.0 / (fan_in + fan_out).max(1) as f64).sqrt()
}

/// Glorot-uniform weights, zero biases, LSTM forget-gate biases at one.
/// Deterministic in `seed`; `f32` and `f64` draw the same numbers.
pub fn init_params<T: Scalar>(config: &ModelConfig, seed: u64) -> Result<DeepMstmParams<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = config.hidden;
    DeepMstmParams::try_build(config, |name, shape| {
        if name == "lstm.bias" {
            let mut b = Tensor::zeros(shape);
            b.data_mut()[h..2 * h].fill(T::one());
            return Ok(b);
        }
        if name.ends_with("bias") {
            return Ok(Tensor::zeros(shape));
        }
        let limit = glorot_limit(shape);
        let dist = Uniform::new_inclusive(-limit, limit).map_err(|e| Error::Config(e.to_string()))?;
        let n = shape.iter().product();
        let data = (0..n).map(|_| T::lit(dist.sample(&mut rng))).collect();
        Tensor::new(shape.to_vec(), data)
    })
}
