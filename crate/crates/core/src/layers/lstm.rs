//! Single-layer LSTM with input, forget, cell and output gates stacked in
//! that order along the rows of every weight array.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensorcore::{Tape, Tensor, Var};

use super::weight_set;

weight_set! {
    /// `input_weights` is `4H x F`, `recurrent_weights` is `4H x H`, `bias`
    /// is `4H`.
    LstmWeights { input_weights, recurrent_weights, bias }
}

pub type LstmParams<T> = LstmWeights<Tensor<T>>;

impl<T: Scalar> LstmParams<T> {
    pub fn hidden_size(&self) -> usize {
        self.bias.numel() / 4
    }

    pub fn feature_size(&self) -> usize {
        self.input_weights.shape().get(1).copied().unwrap_or(0)
    }
}

fn check_shapes<T: Scalar>(tape: &Tape<T>, w: &LstmWeights<Var>) -> Result<(usize, usize)> {
    let gates = tape.value(w.bias).numel();
    if gates == 0 || !gates.is_multiple_of(4) || tape.value(w.bias).rank() != 1 {
        return Err(Error::dim("lstm", format!("bias has {gates} entries, need 4H")));
    }
    let h = gates / 4;
    let f = match *tape.value(w.input_weights).shape() {
        [r, f] if r == gates => f,
        ref s => return Err(Error::dim("lstm", format!("input weights {s:?}, need [{gates}, F]"))),
    };
    if tape.value(w.recurrent_weights).shape() != [gates, h] {
        return Err(Error::dim(
            "lstm",
            format!("recurrent weights {:?}, need [{gates}, {h}]", tape.value(w.recurrent_weights).shape()),
        ));
    }
    Ok((h, f))
}

/// Runs the recurrence over the columns of `seq` (`F x N`, or `B x F x N`
/// for a batch) and returns the hidden state after every step, each `H x B`.
///
/// Without `initial` the state starts at zero.
pub fn lstm<T: Scalar>(
    tape: &mut Tape<T>,
    w: &LstmWeights<Var>,
    seq: Var,
    initial: Option<(Var, Var)>,
) -> Result<Vec<Var>> {
    let (h_size, f_size) = check_shapes(tape, w)?;
    let (batch, features, steps) = match *tape.value(seq).shape() {
        [f, n] => (1, f, n),
        [b, f, n] => (b, f, n),
        ref s => return Err(Error::dim("lstm", format!("sequence shape {s:?}"))),
    };
    if features != f_size {
        return Err(Error::dim(
            "lstm",
            format!("sequence has {features} features, weights expect {f_size}"),
        ));
    }
    if steps == 0 {
        return Err(Error::dim("lstm", "empty sequence"));
    }
    let (mut h, mut c) = match initial {
        Some((h0, c0)) => {
            for s in [h0, c0] {
                if tape.value(s).shape() != [h_size, batch] {
                    return Err(Error::dim(
                        "lstm",
                        format!("initial state {:?}, need [{h_size}, {batch}]", tape.value(s).shape()),
                    ));
                }
            }
            (Some(h0), Some(c0))
        }
        None => (None, None),
    };

    let mut hidden = Vec::with_capacity(steps);
    for step in 0..steps {
        let x = tape.time_step(seq, step)?;
        let mut z = tape.matmul(w.input_weights, x)?;
        if let Some(h_prev) = h {
            let rec = tape.matmul(w.recurrent_weights, h_prev)?;
            z = tape.add(z, rec)?;
        }
        let z = tape.add_bias(z, w.bias)?;

        let zi = tape.row_slice(z, 0, h_size)?;
        let zf = tape.row_slice(z, h_size, h_size)?;
        let zg = tape.row_slice(z, 2 * h_size, h_size)?;
        let zo = tape.row_slice(z, 3 * h_size, h_size)?;
        let input_gate = tape.sigmoid(zi);
        let forget_gate = tape.sigmoid(zf);
        let candidate = tape.tanh(zg);
        let output_gate = tape.sigmoid(zo);

        let write = tape.mul(input_gate, candidate)?;
        let cell = match c {
            Some(c_prev) => {
                let keep = tape.mul(forget_gate, c_prev)?;
                tape.add(keep, write)?
            }
            None => write,
        };
        let squashed = tape.tanh(cell);
        let h_next = tape.mul(output_gate, squashed)?;
        hidden.push(h_next);
        h = Some(h_next);
        c = Some(cell);
    }
    Ok(hidden)
}

/// Hidden states `H x N` for a single feature sequence `F x N`.
pub fn lstm_forward<T: Scalar>(
    seq: &Tensor<T>,
    params: &LstmParams<T>,
    initial: Option<(&[T], &[T])>,
) -> Result<Tensor<T>> {
    if seq.rank() != 2 {
        return Err(Error::dim("lstm_forward", format!("expected F x N, got {:?}", seq.shape())));
    }
    let mut tape = Tape::new();
    let w = params.map(&mut |t| tape.constant(t.clone()));
    let input = tape.constant(seq.clone());
    let init = initial.map(|(h0, c0)| {
        (
            tape.constant(Tensor::column(h0.to_vec())),
            tape.constant(Tensor::column(c0.to_vec())),
        )
    });
    let states = lstm(&mut tape, &w, input, init)?;
    let h_size = params.hidden_size();
    let n = states.len();
    let mut out = vec![T::zero(); h_size * n];
    for (j, s) in states.iter().enumerate() {
        for (r, &v) in tape.value(*s).data().iter().enumerate() {
            out[r * n + j] = v;
        }
    }
    Tensor::new(vec![h_size, n], out)
}
