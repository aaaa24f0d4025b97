//! Fourier seasonality features and the small MLP that maps them to the
//! seasonal component.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensorcore::{Tape, Tensor, Var};

use super::weight_set;

/// One seasonal cycle: `period` days, `terms` harmonics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub period: u32,
    pub terms: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FourierSpec {
    pub cycles: Vec<Cycle>,
}

impl FourierSpec {
    pub fn single(period: u32, terms: usize) -> Self {
        FourierSpec {
            cycles: vec![Cycle { period, terms }],
        }
    }

    /// Length of the feature vector: two entries per harmonic.
    pub fn dim(&self) -> usize {
        self.cycles.iter().map(|c| 2 * c.terms).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.cycles {
            if c.period == 0 || c.terms == 0 {
                return Err(Error::Config(format!(
                    "seasonal cycle needs period > 0 and terms >= 1, got {c:?}"
                )));
            }
        }
        Ok(())
    }
}

/// `(cos l(1) .. cos l(g), sin l(1) .. sin l(g))` per cycle, cycles
/// concatenated in spec order, where `l(k) = 2 pi k t / P`.
///
/// The phase `k t mod P` is reduced in integer arithmetic first, so the
/// features are exactly periodic in `t`.
pub fn fourier_features<T: Scalar>(t: i64, spec: &FourierSpec) -> Vec<T> {
    let mut out = Vec::with_capacity(spec.dim());
    for cycle in &spec.cycles {
        let p = i128::from(cycle.period);
        let angles: Vec<f64> = (1..=cycle.terms as i128)
            .map(|k| {
                let phase = (k * i128::from(t)).rem_euclid(p);
                2.0 * PI * phase as f64 / p as f64
            })
            .collect();
        out.extend(angles.iter().map(|a| T::lit(a.cos())));
        out.extend(angles.iter().map(|a| T::lit(a.sin())));
    }
    out
}

/// Features for a batch of day indices, one column per index (`G x B`).
pub fn fourier_matrix<T: Scalar>(days: &[i64], spec: &FourierSpec) -> Tensor<T> {
    let g = spec.dim();
    let b = days.len();
    let mut data = vec![T::zero(); g * b];
    for (col, &t) in days.iter().enumerate() {
        for (row, v) in fourier_features::<T>(t, spec).into_iter().enumerate() {
            data[row * b + col] = v;
        }
    }
    Tensor::new(vec![g, b], data).expect("fourier matrix shape")
}

weight_set! {
    /// One tanh hidden layer and a linear scalar readout:
    /// `hidden_weights` is `S x G`, `output_weights` is `1 x S`.
    SeasonalWeights { hidden_weights, hidden_bias, output_weights, output_bias }
}

pub type SeasonalParams<T> = SeasonalWeights<Tensor<T>>;

/// Seasonal component for Fourier features `G x B`; returns `1 x B`.
pub fn seasonal<T: Scalar>(tape: &mut Tape<T>, w: &SeasonalWeights<Var>, features: Var) -> Result<Var> {
    let pre = tape.matmul(w.hidden_weights, features)?;
    let pre = tape.add_bias(pre, w.hidden_bias)?;
    let hidden = tape.tanh(pre);
    let out = tape.matmul(w.output_weights, hidden)?;
    tape.add_bias(out, w.output_bias)
}

pub fn seasonal_forward<T: Scalar>(features: &[T], params: &SeasonalParams<T>) -> Result<T> {
    let mut tape = Tape::new();
    let w = params.map(&mut |t| tape.constant(t.clone()));
    let f = tape.constant(Tensor::column(features.to_vec()));
    let out = seasonal(&mut tape, &w, f)?;
    tape.value(out).item()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mlp(s: usize, g: usize, fill: impl Fn(usize) -> f64) -> SeasonalParams<f64> {
        let mut i = 0;
        let mut next = |shape: &[usize]| {
            let n: usize = shape.iter().product();
            let t = Tensor::new(shape.to_vec(), (i..i + n).map(&fill).collect()).unwrap();
            i += n;
            t
        };
        SeasonalWeights {
            hidden_weights: next(&[s, g]),
            hidden_bias: next(&[s]),
            output_weights: next(&[1, s]),
            output_bias: next(&[1]),
        }
    }

    #[test]
    fn origin_is_all_cosines() {
        let spec = FourierSpec {
            cycles: vec![Cycle { period: 7, terms: 3 }, Cycle { period: 365, terms: 2 }],
        };
        let f = fourier_features::<f64>(0, &spec);
        assert_eq!(f, vec![1., 1., 1., 0., 0., 0., 1., 1., 0., 0.]);
    }

    #[test]
    fn full_cycle_returns_to_start() {
        let f = fourier_features::<f64>(7, &FourierSpec::single(7, 1));
        assert!((f[0] - 1.0).abs() <= f64::EPSILON && f[1].abs() <= f64::EPSILON);
    }

    #[test]
    fn direct_evaluation() {
        let f = fourier_features::<f64>(3, &FourierSpec::single(7, 2));
        for g in 1..=2 {
            let lambda = 2.0 * PI * g as f64 * 3.0 / 7.0;
            assert!((f[g - 1] - lambda.cos()).abs() < 1e-14);
            assert!((f[g + 1] - lambda.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_mlp_is_zero() {
        let p = mlp(8, 4, |_| 0.0);
        for t in 0..20 {
            let s = seasonal_forward(&fourier_features(t, &FourierSpec::single(7, 2)), &p).unwrap();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn single_hidden_unit_by_hand() {
        let p = SeasonalWeights {
            hidden_weights: Tensor::from_rows(&[vec![0.4, -0.7]]).unwrap(),
            hidden_bias: Tensor::vector(vec![0.1]),
            output_weights: Tensor::from_rows(&[vec![2.5]]).unwrap(),
            output_bias: Tensor::vector(vec![-0.3]),
        };
        let feats = fourier_features::<f64>(2, &FourierSpec::single(7, 1));
        let expect = 2.5 * (0.4 * feats[0] - 0.7 * feats[1] + 0.1).tanh() - 0.3;
        assert_eq!(seasonal_forward(&feats, &p).unwrap(), expect);
    }

    #[test]
    fn seasonal_is_periodic() {
        let spec = FourierSpec::single(7, 3);
        let p = mlp(8, 6, |i| ((i * 13 % 11) as f64 - 5.0) / 7.0);
        for t in 0..21 {
            let a = seasonal_forward(&fourier_features(t, &spec), &p).unwrap();
            let b = seasonal_forward(&fourier_features(t + 7, &spec), &p).unwrap();
            let c = seasonal_forward(&fourier_features(t % 7, &spec), &p).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn rejects_feature_length() {
        let p = mlp(8, 4, |_| 0.1);
        assert!(seasonal_forward(&[1.0, 0.0], &p).is_err());
    }

    #[test]
    fn validation() {
        assert!(FourierSpec::single(0, 1).validate().is_err());
        assert!(FourierSpec::single(7, 0).validate().is_err());
        assert_eq!(FourierSpec::single(7, 3).dim(), 6);
    }
}
