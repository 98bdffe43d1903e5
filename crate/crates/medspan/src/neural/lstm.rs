//! A single-direction LSTM with explicit forward caches and a manual
//! backward pass. Gate pre-activations are ordered [input, forget,
//! cell, output] inside the stacked weight matrices.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Input weights, stacked gates: 4h × input_dim.
    pub w: Matrix,
    /// Recurrent weights: 4h × h.
    pub u: Matrix,
    /// Gate biases: 4h.
    pub b: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmParams {
    /// Uniform init in [-0.1, 0.1) with forget-gate biases set to 1 so
    /// early training does not erase the cell state.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> LstmParams {
        let mut draw = |_: usize, _: usize| rng.gen_range(-0.1..0.1);
        let w = Matrix::from_fn(4 * hidden_dim, input_dim, &mut draw);
        let u = Matrix::from_fn(4 * hidden_dim, hidden_dim, &mut draw);
        let mut b: Vec<f64> = (0..4 * hidden_dim).map(|_| rng.gen_range(-0.1..0.1)).collect();
        for v in &mut b[hidden_dim..2 * hidden_dim] {
            *v = 1.0;
        }
        LstmParams { input_dim, hidden_dim, w, u, b }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> LstmParams {
        LstmParams {
            input_dim,
            hidden_dim,
            w: Matrix::zeros(4 * hidden_dim, input_dim),
            u: Matrix::zeros(4 * hidden_dim, hidden_dim),
            b: vec![0.0; 4 * hidden_dim],
        }
    }

    /// One cell update from `(h_prev, c_prev)` on input `x`, keeping
    /// every intermediate needed by [`LstmParams::backward_sequence`].
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmStepCache {
        let h = self.hidden_dim;
        let mut z = self.b.clone();
        self.w.matvec_add(x, &mut z);
        self.u.matvec_add(h_prev, &mut z);

        let mut i = vec![0.0; h];
        let mut f = vec![0.0; h];
        let mut g = vec![0.0; h];
        let mut o = vec![0.0; h];
        for k in 0..h {
            i[k] = sigmoid(z[k]);
            f[k] = sigmoid(z[h + k]);
            g[k] = z[2 * h + k].tanh();
            o[k] = sigmoid(z[3 * h + k]);
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut h_out = vec![0.0; h];
        for k in 0..h {
            c[k] = f[k] * c_prev[k] + i[k] * g[k];
            tanh_c[k] = c[k].tanh();
            h_out[k] = o[k] * tanh_c[k];
        }
        LstmStepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            g,
            o,
            tanh_c,
            c,
            h: h_out,
        }
    }

    /// Runs the cell over `inputs` from the zero state, returning one
    /// cache per step in input order.
    pub fn run(&self, inputs: &[Vec<f64>]) -> Vec<LstmStepCache> {
        let mut caches = Vec::with_capacity(inputs.len());
        let mut h = vec![0.0; self.hidden_dim];
        let mut c = vec![0.0; self.hidden_dim];
        for x in inputs {
            let cache = self.step(x, &h, &c);
            h.clone_from(&cache.h);
            c.clone_from(&cache.c);
            caches.push(cache);
        }
        caches
    }

    /// Backpropagates through a run. `d_hidden[t]` is the loss gradient
    /// arriving at `h_t` from outside the recurrence; parameter
    /// gradients accumulate into `grads` and the per-step input
    /// gradients are returned in input order.
    pub fn backward_sequence(
        &self,
        caches: &[LstmStepCache],
        d_hidden: &[Vec<f64>],
        grads: &mut LstmParams,
    ) -> Vec<Vec<f64>> {
        assert_eq!(caches.len(), d_hidden.len());
        let h = self.hidden_dim;
        let mut d_inputs = vec![vec![0.0; self.input_dim]; caches.len()];
        let mut dh_carry = vec![0.0; h];
        let mut dc_carry = vec![0.0; h];

        for (t, cache) in caches.iter().enumerate().rev() {
            let mut dz = vec![0.0; 4 * h];
            for k in 0..h {
                let dh = d_hidden[t][k] + dh_carry[k];
                let d_o = dh * cache.tanh_c[k];
                let dc = dh * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k])
                    + dc_carry[k];
                let d_i = dc * cache.g[k];
                let d_f = dc * cache.c_prev[k];
                let d_g = dc * cache.i[k];
                dc_carry[k] = dc * cache.f[k];
                dz[k] = d_i * cache.i[k] * (1.0 - cache.i[k]);
                dz[h + k] = d_f * cache.f[k] * (1.0 - cache.f[k]);
                dz[2 * h + k] = d_g * (1.0 - cache.g[k] * cache.g[k]);
                dz[3 * h + k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
            }
            grads.w.add_outer(&dz, &cache.x);
            grads.u.add_outer(&dz, &cache.h_prev);
            for (acc, d) in grads.b.iter_mut().zip(&dz) {
                *acc += d;
            }
            self.w.matvec_transpose_add(&dz, &mut d_inputs[t]);
            dh_carry = vec![0.0; h];
            self.u.matvec_transpose_add(&dz, &mut dh_carry);
        }
        d_inputs
    }

    pub fn sq_norm(&self) -> f64 {
        self.w.sq_norm() + self.u.sq_norm() + self.b.iter().map(|v| v * v).sum::<f64>()
    }
}

/// Intermediates for one cell update, in the notation of the standard
/// gate equations.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmStepCache {
    /// Final hidden state of a run, or zeros for an empty input.
    pub fn final_hidden(caches: &[LstmStepCache], hidden_dim: usize) -> Vec<f64> {
        caches
            .last()
            .map(|c| c.h.clone())
            .unwrap_or_else(|| vec![0.0; hidden_dim])
    }
}
