//! Feed-forward network with a single logistic output unit, trained by
//! mini-batch SGD with Nesterov momentum on the binary cross-entropy plus an
//! L2 penalty.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{sigmoid, LearnError, Matrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Logistic,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Logistic => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `a`.
    #[inline]
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Logistic => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRateSchedule {
    Constant,
    /// `lr = lr_init / (t + 1)^0.5` with `t` the number of samples seen.
    Invscaling,
    /// Divide by 5 whenever two consecutive epochs fail to improve by `tol`.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden_layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: LearningRateSchedule,
    pub learning_rate_init: f64,
    /// Maximum number of epochs.
    pub max_iter: usize,
    pub batch_size: usize,
    pub alpha: f64,
    pub momentum: f64,
    pub tol: f64,
    pub n_iter_no_change: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_layer_sizes: vec![100],
            activation: Activation::Relu,
            learning_rate: LearningRateSchedule::Constant,
            learning_rate_init: 0.001,
            max_iter: 200,
            batch_size: 200,
            alpha: 1e-4,
            momentum: 0.9,
            tol: 1e-4,
            n_iter_no_change: 10,
        }
    }
}

/// Hidden widths for `p` input features: `{1.2p, 0.9p, 0.6p, 0.3p}` rounded
/// (at least 1), truncated to `depth` layers.
pub fn mlp_hidden_layers(p: usize, depth: usize) -> Vec<usize> {
    [1.2, 0.9, 0.6, 0.3].iter().take(depth).map(|f| ((f * p as f64).round() as usize).max(1)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub activation: Activation,
    pub layers: Vec<Layer>,
    pub epochs: usize,
    pub final_loss: f64,
}

impl MlpModel {
    fn forward(&self, row: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.clear();
        acts.push(row.to_vec());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let input = &acts[li];
            let out: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    let z = layer.biases[o] + w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if li == last {
                        sigmoid(z)
                    } else {
                        self.activation.apply(z)
                    }
                })
                .collect();
            acts.push(out);
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        self.forward(row, &mut acts);
        acts.last().expect("output layer")[0]
    }
}

pub fn fit(params: &MlpParams, x: &Matrix, y: &[u8], seed_value: u64) -> Result<MlpModel, LearnError> {
    if params.hidden_layer_sizes.contains(&0)
        || params.batch_size == 0
        || params.max_iter == 0
        || !(params.learning_rate_init > 0.0)
    {
        return Err(LearnError::InvalidParams(format!("{params:?}")));
    }
    let mut rng = seed::rng(seed_value);
    let mut widths = vec![x.cols()];
    widths.extend(&params.hidden_layer_sizes);
    widths.push(1);
    let factor = if params.activation == Activation::Logistic { 2.0 } else { 6.0 };
    let layers: Vec<Layer> = widths
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (factor / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect();
            let biases = (0..fan_out).map(|_| rng.random_range(-bound..bound)).collect();
            Layer { inputs: fan_in, outputs: fan_out, weights, biases }
        })
        .collect();
    let mut model = MlpModel { activation: params.activation, layers, epochs: 0, final_loss: f64::INFINITY };

    let n = x.rows();
    let batch = params.batch_size.min(n);
    let mut vel_w: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
    let mut vel_b: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect();
    let mut grad_w = vel_w.clone();
    let mut grad_b = vel_b.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut acts: Vec<Vec<f64>> = Vec::new();
    let mut deltas: Vec<Vec<f64>> = widths[1..].iter().map(|&w| vec![0.0; w]).collect();
    let mut lr = params.learning_rate_init;
    let mut best_loss = f64::INFINITY;
    let mut no_improvement = 0usize;
    let mut samples_seen = 0usize;
    let nl = model.layers.len();

    for epoch in 0..params.max_iter {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let bs = chunk.len() as f64;
            grad_w.iter_mut().for_each(|g| g.fill(0.0));
            grad_b.iter_mut().for_each(|g| g.fill(0.0));
            let mut data_loss = 0.0;
            for &i in chunk {
                model.forward(x.row(i), &mut acts);
                let p = acts[nl][0].clamp(1e-15, 1.0 - 1e-15);
                let yi = y[i] as f64;
                data_loss -= yi * p.ln() + (1.0 - yi) * (1.0 - p).ln();
                deltas[nl - 1][0] = acts[nl][0] - yi;
                for li in (0..nl).rev() {
                    let layer = &model.layers[li];
                    let input = &acts[li];
                    let (below, current) = deltas.split_at_mut(li);
                    let delta = &current[0];
                    for o in 0..layer.outputs {
                        let d = delta[o];
                        if d != 0.0 {
                            let gw = &mut grad_w[li][o * layer.inputs..(o + 1) * layer.inputs];
                            for (g, &a) in gw.iter_mut().zip(input) {
                                *g += d * a;
                            }
                        }
                        grad_b[li][o] += d;
                    }
                    if li > 0 {
                        let prev = &mut below[li - 1];
                        for (k, pv) in prev.iter_mut().enumerate() {
                            let mut s = 0.0;
                            for o in 0..layer.outputs {
                                s += layer.weights[o * layer.inputs + k] * delta[o];
                            }
                            *pv = s * model.activation.derivative(input[k]);
                        }
                    }
                }
            }
            let sq: f64 = model.layers.iter().map(|l| l.weights.iter().map(|w| w * w).sum::<f64>()).sum();
            epoch_loss += data_loss + 0.5 * params.alpha * sq;
            for li in 0..nl {
                let layer = &mut model.layers[li];
                for (k, w) in layer.weights.iter_mut().enumerate() {
                    let g = (grad_w[li][k] + params.alpha * *w) / bs;
                    let v = params.momentum * vel_w[li][k] - lr * g;
                    vel_w[li][k] = v;
                    *w += params.momentum * v - lr * g;
                }
                for (k, b) in layer.biases.iter_mut().enumerate() {
                    let g = grad_b[li][k] / bs;
                    let v = params.momentum * vel_b[li][k] - lr * g;
                    vel_b[li][k] = v;
                    *b += params.momentum * v - lr * g;
                }
            }
        }
        samples_seen += n;
        let loss = epoch_loss / n as f64;
        model.epochs = epoch + 1;
        model.final_loss = loss;
        if !loss.is_finite() {
            break;
        }
        if params.learning_rate == LearningRateSchedule::Invscaling {
            lr = params.learning_rate_init / ((samples_seen + 1) as f64).powf(0.5);
        }
        if loss > best_loss - params.tol {
            no_improvement += 1;
        } else {
            no_improvement = 0;
        }
        best_loss = best_loss.min(loss);
        match params.learning_rate {
            LearningRateSchedule::Adaptive if no_improvement >= 2 => {
                if lr <= 1e-6 {
                    break;
                }
                lr /= 5.0;
                no_improvement = 0;
            }
            LearningRateSchedule::Adaptive => {}
            _ if no_improvement > params.n_iter_no_change => break,
            _ => {}
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::auc;

    #[test]
    fn hidden_layer_rule() {
        assert_eq!(mlp_hidden_layers(218, 4), vec![262, 196, 131, 65]);
        assert_eq!(mlp_hidden_layers(218, 2), vec![262, 196]);
        assert_eq!(mlp_hidden_layers(1, 4), vec![1, 1, 1, 1]);
    }

    fn nudge_check(activation: Activation) {
        // backpropagated step must reduce the loss on a tiny problem
        let x = Matrix::new(4, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let y = [0, 1, 1, 1];
        let params = MlpParams {
            hidden_layer_sizes: vec![4],
            activation,
            learning_rate_init: 0.1,
            max_iter: 500,
            ..Default::default()
        };
        let m = fit(&params, &x, &y, 4).unwrap();
        let scores: Vec<f64> = (0..4).map(|i| m.predict(x.row(i))).collect();
        assert_eq!(auc(&scores, &y).unwrap(), 1.0, "{activation:?} {scores:?}");
    }

    #[test]
    fn learns_or_function() {
        nudge_check(Activation::Relu);
        nudge_check(Activation::Tanh);
        nudge_check(Activation::Logistic);
    }

    #[test]
    fn deterministic() {
        let x = Matrix::new(6, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [0, 0, 1, 0, 1, 1];
        let p = MlpParams { hidden_layer_sizes: vec![3, 2], max_iter: 20, ..Default::default() };
        assert_eq!(fit(&p, &x, &y, 8).unwrap(), fit(&p, &x, &y, 8).unwrap());
    }
}
