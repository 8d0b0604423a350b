//! One LSTM cell: gate math for a single timestep, forward and backward.
//!
//! Gate order in the packed weight matrices is input, forget, output,
//! candidate:
//!
//! ```text
//! i = sigmoid(W_i x + U_i h + b_i)
//! f = sigmoid(W_f x + U_f h + b_f)
//! o = sigmoid(W_o x + U_o h + b_o)
//! g = tanh   (W_g x + U_g h + b_g)
//! c_t = f . c_prev + i . g
//! h_t = o . tanh(c_t)
//! ```

use super::linalg::Mat;
use crate::error::{Error, Result};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weights of one recurrent layer. `w` maps inputs, `u` maps the previous
/// hidden state; both stack the four gates row-wise (4H x In, 4H x H).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w: Mat,
    pub u: Mat,
    pub b: Vec<f64>,
}

impl LstmLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmLayerParams {
            input_dim,
            hidden_dim,
            w: Mat::zeros(4 * hidden_dim, input_dim),
            u: Mat::zeros(4 * hidden_dim, hidden_dim),
            b: vec![0.0; 4 * hidden_dim],
        }
    }
}

/// Values cached by the forward pass that backward needs.
#[derive(Debug, Clone)]
pub struct CellCache {
    pub x: Mat,
    pub h_prev: Mat,
    pub c_prev: Mat,
    pub gate_i: Mat,
    pub gate_f: Mat,
    pub gate_o: Mat,
    pub gate_g: Mat,
    pub c: Mat,
    pub tanh_c: Mat,
}

/// Gradients produced by one backward step.
pub struct CellGrads {
    pub d_w: Mat,
    pub d_u: Mat,
    pub d_b: Vec<f64>,
    pub d_x: Mat,
    pub d_h_prev: Mat,
    pub d_c_prev: Mat,
}

/// Forward one timestep for a batch. `x` is B x In; `h_prev`, `c_prev` are
/// B x H. Returns the new states plus the cache for backprop.
pub fn cell_forward(
    params: &LstmLayerParams,
    x: &Mat,
    h_prev: &Mat,
    c_prev: &Mat,
) -> (Mat, Mat, CellCache) {
    let h = params.hidden_dim;
    let batch = x.rows();
    // Pre-activations for all gates: B x 4H.
    let mut gates = x.matmul_nt(&params.w);
    gates.add_assign(&h_prev.matmul_nt(&params.u));
    gates.add_row_broadcast(&params.b);

    let mut gate_i = Mat::zeros(batch, h);
    let mut gate_f = Mat::zeros(batch, h);
    let mut gate_o = Mat::zeros(batch, h);
    let mut gate_g = Mat::zeros(batch, h);
    for r in 0..batch {
        let row = gates.row(r);
        for c in 0..h {
            *gate_i.at_mut(r, c) = sigmoid(row[c]);
            *gate_f.at_mut(r, c) = sigmoid(row[h + c]);
            *gate_o.at_mut(r, c) = sigmoid(row[2 * h + c]);
            *gate_g.at_mut(r, c) = row[3 * h + c].tanh();
        }
    }

    let c = gate_f.hadamard(c_prev).add(&gate_i.hadamard(&gate_g));
    let tanh_c = c.map(f64::tanh);
    let h_new = gate_o.hadamard(&tanh_c);
    let cache = CellCache {
        x: x.clone(),
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        gate_i,
        gate_f,
        gate_o,
        gate_g,
        c: c.clone(),
        tanh_c,
    };
    (h_new, c, cache)
}

/// Checked single-step forward; the library surface for cell evaluation.
pub fn lstm_cell_forward(
    params: &LstmLayerParams,
    x: &Mat,
    h_prev: &Mat,
    c_prev: &Mat,
) -> Result<(Mat, Mat)> {
    if x.cols() != params.input_dim {
        return Err(Error::Size(format!(
            "input has {} features, cell expects {}",
            x.cols(),
            params.input_dim
        )));
    }
    if h_prev.cols() != params.hidden_dim || c_prev.cols() != params.hidden_dim {
        return Err(Error::Size(format!(
            "state has {}/{} features, cell expects {}",
            h_prev.cols(),
            c_prev.cols(),
            params.hidden_dim
        )));
    }
    if x.rows() != h_prev.rows() || x.rows() != c_prev.rows() {
        return Err(Error::Size("batch sizes of x, h, c differ".into()));
    }
    let (h, c, _) = cell_forward(params, x, h_prev, c_prev);
    Ok((h, c))
}

/// Backward one timestep. `d_h` and `d_c_in` are the gradients flowing into
/// h_t and c_t (the latter from the next timestep's forget path).
pub fn cell_backward(
    params: &LstmLayerParams,
    cache: &CellCache,
    d_h: &Mat,
    d_c_in: &Mat,
) -> CellGrads {
    let h = params.hidden_dim;
    let batch = d_h.rows();

    let d_o = d_h.hadamard(&cache.tanh_c);
    // dc = dc_in + dh . o . (1 - tanh^2 c)
    let d_c = d_c_in.add(
        &d_h.hadamard(&cache.gate_o)
            .zip(&cache.tanh_c, |g, t| g * (1.0 - t * t)),
    );
    let d_f = d_c.hadamard(&cache.c_prev);
    let d_i = d_c.hadamard(&cache.gate_g);
    let d_g = d_c.hadamard(&cache.gate_i);
    let d_c_prev = d_c.hadamard(&cache.gate_f);

    // Pre-activation gradients, packed B x 4H in gate order.
    let mut d_gates = Mat::zeros(batch, 4 * h);
    for r in 0..batch {
        for c in 0..h {
            let i = cache.gate_i.at(r, c);
            let f = cache.gate_f.at(r, c);
            let o = cache.gate_o.at(r, c);
            let g = cache.gate_g.at(r, c);
            *d_gates.at_mut(r, c) = d_i.at(r, c) * i * (1.0 - i);
            *d_gates.at_mut(r, h + c) = d_f.at(r, c) * f * (1.0 - f);
            *d_gates.at_mut(r, 2 * h + c) = d_o.at(r, c) * o * (1.0 - o);
            *d_gates.at_mut(r, 3 * h + c) = d_g.at(r, c) * (1.0 - g * g);
        }
    }

    CellGrads {
        d_w: d_gates.matmul_tn(&cache.x),
        d_u: d_gates.matmul_tn(&cache.h_prev),
        d_b: d_gates.col_sums(),
        d_x: d_gates.matmul_nn(&params.w),
        d_h_prev: d_gates.matmul_nn(&params.u),
        d_c_prev,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn sigmoid_of_zero_is_half() {
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert!(sigmoid(-1000.0) >= 0.0);
        assert!((sigmoid(1000.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_and_state_give_zero_output() {
        let params = LstmLayerParams::zeros(3, 2);
        let x = Mat::from_vec(1, 3, vec![0.7, -0.2, 1.5]);
        let h0 = Mat::zeros(1, 2);
        let c0 = Mat::zeros(1, 2);
        let (h, c) = lstm_cell_forward(&params, &x, &h0, &c0).unwrap();
        // Gates are all 0.5, candidate tanh(0) = 0, so c = h = 0.
        assert!(h.data().iter().all(|&v| v == 0.0));
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_size_error() {
        let params = LstmLayerParams::zeros(3, 2);
        let x = Mat::zeros(1, 4);
        let h0 = Mat::zeros(1, 2);
        let c0 = Mat::zeros(1, 2);
        assert!(matches!(
            lstm_cell_forward(&params, &x, &h0, &c0),
            Err(Error::Size(_))
        ));
    }

    fn random_params(rng: &mut impl Rng, input: usize, hidden: usize) -> LstmLayerParams {
        let mut p = LstmLayerParams::zeros(input, hidden);
        for v in p.w.data_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
        for v in p.u.data_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
        for v in &mut p.b {
            *v = rng.random_range(-0.5..0.5);
        }
        p
    }

    /// Scalar loss: weighted sum of h and c outputs.
    fn cell_loss(params: &LstmLayerParams, x: &Mat, h0: &Mat, c0: &Mat, wh: &Mat, wc: &Mat) -> f64 {
        let (h, c, _) = cell_forward(params, x, h0, c0);
        h.hadamard(wh).data().iter().sum::<f64>() + c.hadamard(wc).data().iter().sum::<f64>()
    }

    #[test]
    fn analytic_cell_gradients_match_finite_differences() {
        let mut rng = crate::rng::stream_rng(55, &[0]);
        let (input, hidden, batch) = (4, 3, 2);
        let params = random_params(&mut rng, input, hidden);
        let x = Mat::from_vec(
            batch,
            input,
            (0..batch * input).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let h0 = Mat::from_vec(
            batch,
            hidden,
            (0..batch * hidden).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let c0 = Mat::from_vec(
            batch,
            hidden,
            (0..batch * hidden).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let wh = Mat::from_vec(
            batch,
            hidden,
            (0..batch * hidden).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let wc = Mat::from_vec(
            batch,
            hidden,
            (0..batch * hidden).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );

        let (_, _, cache) = cell_forward(&params, &x, &h0, &c0);
        let grads = cell_backward(&params, &cache, &wh, &wc);

        let h = 1e-6;
        let check = |get: &dyn Fn(&LstmLayerParams) -> f64,
                         set: &dyn Fn(&mut LstmLayerParams, f64),
                         analytic: f64| {
            let mut plus = params.clone();
            set(&mut plus, get(&params) + h);
            let mut minus = params.clone();
            set(&mut minus, get(&params) - h);
            let numeric = (cell_loss(&plus, &x, &h0, &c0, &wh, &wc)
                - cell_loss(&minus, &x, &h0, &c0, &wh, &wc))
                / (2.0 * h);
            let scale = analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(
                (analytic - numeric).abs() / scale < 1e-4,
                "analytic {analytic} vs numeric {numeric}"
            );
        };

        for r in 0..4 * hidden {
            for c in 0..input {
                check(
                    &|p: &LstmLayerParams| p.w.at(r, c),
                    &|p: &mut LstmLayerParams, v| *p.w.at_mut(r, c) = v,
                    grads.d_w.at(r, c),
                );
            }
            for c in 0..hidden {
                check(
                    &|p: &LstmLayerParams| p.u.at(r, c),
                    &|p: &mut LstmLayerParams, v| *p.u.at_mut(r, c) = v,
                    grads.d_u.at(r, c),
                );
            }
            check(
                &|p: &LstmLayerParams| p.b[r],
                &|p: &mut LstmLayerParams, v| p.b[r] = v,
                grads.d_b[r],
            );
        }
    }
}
