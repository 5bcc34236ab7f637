use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{NumericsError, Tape, Tensor, Var};

/// Glorot-uniform matrix, the default for every trainable 2-D tensor.
pub fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::new(vec![rows, cols], data).expect("glorot shape")
}

/// Single-layer LSTM cell parameters with the four gates fused into one
/// weight matrix over [x ; h_prev]: w is [4H, I+H], b is [4H], gate order
/// i, f, g, o.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Tensor,
    pub b: Tensor,
}

impl LstmParams {
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        LstmParams {
            w: glorot(4 * hidden_dim, input_dim + hidden_dim, rng),
            b: Tensor::zeros(vec![4 * hidden_dim]),
        }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmParams {
            w: Tensor::zeros(vec![4 * hidden_dim, input_dim + hidden_dim]),
            b: Tensor::zeros(vec![4 * hidden_dim]),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w.shape[0] / 4
    }

    pub fn register(&self, tape: &mut Tape, prefix: &str) -> LstmVars {
        LstmVars {
            w: tape.named_leaf(&format!("{prefix}.w"), self.w.clone()),
            b: tape.named_leaf(&format!("{prefix}.b"), self.b.clone()),
            hidden: self.hidden_dim(),
        }
    }
}

/// Tape handles for one LSTM's parameters.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w: Var,
    pub b: Var,
    pub hidden: usize,
}

/// Standard LSTM cell (no peepholes, uncoupled gates):
/// i,f,o = sigmoid(..), g = tanh(..), c = f*c_prev + i*g, h = o*tanh(c).
pub fn lstm_step(
    tape: &mut Tape,
    p: &LstmVars,
    x: Var,
    h_prev: Var,
    c_prev: Var,
) -> Result<(Var, Var), NumericsError> {
    let hd = p.hidden;
    let xh = tape.concat(&[x, h_prev]);
    let pre = tape.matvec(p.w, xh)?;
    let pre = tape.add(pre, p.b)?;
    let i_pre = tape.slice(pre, 0, hd)?;
    let f_pre = tape.slice(pre, hd, hd)?;
    let g_pre = tape.slice(pre, 2 * hd, hd)?;
    let o_pre = tape.slice(pre, 3 * hd, hd)?;
    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let g = tape.tanh(g_pre);
    let o = tape.sigmoid(o_pre);
    let fc = tape.mul(f, c_prev)?;
    let ig = tape.mul(i, g)?;
    let c = tape.add(fc, ig)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok((h, c))
}
