use crate::error::{Error, Result};
use crate::model::DeepMstmParams;
use crate::scalar::Scalar;
use crate::tensorcore::Tensor;

/// Moment buffers and hyperparameters of the Adam optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Zeroed buffers, one per array in `shapes`, with β1 = 0.9, β2 = 0.999
    /// and ε = 1e-8.
    pub fn new<'a>(shapes: impl IntoIterator<Item = &'a [usize]>, lr: T) -> Self {
        let m: Vec<Tensor<T>> = shapes.into_iter().map(Tensor::zeros).collect();
        AdamState {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            step: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn for_params(params: &DeepMstmParams<T>, lr: T) -> Self {
        Self::new(params.slots().into_iter().map(|t| t.shape()), lr)
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update to `params` in place.
    pub fn update(&mut self, params: &mut [&mut Tensor<T>], grads: &[&Tensor<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim(
                "adam",
                format!("{} params and {} grads for {} buffers", params.len(), grads.len(), self.m.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != self.m[i].shape() || g.shape() != self.m[i].shape() {
                return Err(Error::dim(
                    "adam",
                    format!("array {i}: param {:?}, grad {:?}, buffer {:?}", p.shape(), g.shape(), self.m[i].shape()),
                ));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let one = T::one();
        let c1 = one - self.beta1.powi(t);
        let c2 = one - self.beta2.powi(t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let cells = p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut().iter_mut().zip(v.data_mut()));
            for ((p, &g), (m, v)) in cells {
                *m = self.beta1 * *m + (one - self.beta1) * g;
                *v = self.beta2 * *v + (one - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// One Adam update of every model array.
pub fn adam_step<T: Scalar>(
    params: &mut DeepMstmParams<T>,
    grads: &DeepMstmParams<T>,
    state: &mut AdamState<T>,
) -> Result<()> {
    let g = grads.slots();
    state.update(&mut params.slots_mut(), &g)
}
