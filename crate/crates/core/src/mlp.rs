//! Two-layer perceptron classifier trained with Adam on softmax
//! cross-entropy.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN,
            learning_rate: 1e-4,
            batch_size: 128,
            epochs: 5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("train config: {what}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.hidden == 0 {
            return bad("hidden width must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("Adam decay rates must lie in [0, 1) and epsilon be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// `F x H`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `H x C`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    /// Workload label per output index.
    pub labels: Vec<String>,
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean cross-entropy over each epoch's mini-batches.
    pub epoch_losses: Vec<f64>,
}

fn xavier(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-limit..limit))
}

/// Row-wise softmax, in place.
fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

impl MlpModel {
    /// Xavier-uniform weights and zero biases from `seed`.
    pub fn init(inputs: usize, hidden: usize, labels: Vec<String>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = labels.len();
        let w1 = xavier(&mut rng, inputs, hidden);
        let w2 = xavier(&mut rng, hidden, classes);
        Self {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(classes),
            labels,
        }
    }

    pub fn zeros(inputs: usize, hidden: usize, labels: Vec<String>) -> Self {
        let classes = labels.len();
        Self {
            w1: Array2::zeros((inputs, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, classes)),
            b2: Array1::zeros(classes),
            labels,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn classes(&self) -> usize {
        self.w2.ncols()
    }

    fn check_inputs(&self, got: usize) -> Result<()> {
        if got != self.inputs() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.inputs()),
                got: format!("{got} features"),
            });
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).all(|v| v.is_finite())
    }

    /// Hidden pre-activations and logits for a batch.
    fn forward(&self, x: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        let z1 = x.dot(&self.w1) + &self.b1;
        let a1 = z1.mapv(|v| v.max(0.0));
        let z2 = a1.dot(&self.w2) + &self.b2;
        (z1, z2)
    }

    /// Softmax probabilities for each row.
    pub fn probabilities(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_inputs(x.ncols())?;
        let (_, mut z2) = self.forward(x);
        softmax_rows(&mut z2);
        Ok(z2)
    }

    /// Predicted class (lowest index on ties) and the softmax vector.
    pub fn predict(&self, x: ArrayView1<f64>) -> Result<(usize, Array1<f64>)> {
        let p = self.probabilities(x.insert_axis(Axis(0)))?;
        let p = p.row(0).to_owned();
        Ok((argmax(p.view()), p))
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, y: &[usize]) -> Result<(f64, Gradients)> {
        self.check_inputs(x.ncols())?;
        let n = x.nrows();
        if y.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} labels"),
                got: y.len().to_string(),
            });
        }
        let (z1, z2) = self.forward(x);
        let mut loss = 0.0;
        let mut dz2 = z2;
        for (mut row, &label) in dz2.rows_mut().into_iter().zip(y) {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[label];
            row.mapv_inplace(|v| (v - lse).exp());
            row[label] -= 1.0;
        }
        let scale = 1.0 / n as f64;
        dz2.mapv_inplace(|v| v * scale);
        let a1 = z1.mapv(|v| v.max(0.0));
        let w2 = a1.t().dot(&dz2);
        let b2 = dz2.sum_axis(Axis(0));
        let mut dz1 = dz2.dot(&self.w2.t());
        ndarray::Zip::from(&mut dz1).and(&z1).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        let w1 = x.t().dot(&dz1);
        let b1 = dz1.sum_axis(Axis(0));
        Ok((loss * scale, Gradients { w1, b1, w2, b2 }))
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    fn update(&mut self, cfg: &TrainConfig, params: [&mut [f64]; 4], grads: [&[f64]; 4]) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        let mut at = 0;
        for (p, g) in params.into_iter().zip(grads) {
            for (w, &dw) in p.iter_mut().zip(g) {
                let m = &mut self.m[at];
                let v = &mut self.v[at];
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * dw;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * dw * dw;
                *w -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
                at += 1;
            }
        }
    }
}

/// Fisher-Yates over `u32` draws, so the order does not depend on the
/// platform's pointer width.
fn shuffle(idx: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..idx.len()).rev() {
        let j = rng.gen_range(0..=i as u32) as usize;
        idx.swap(i, j);
    }
}

/// Trains from a fresh initialization. `labels[i]` is the class index of
/// row `i`; `class_names` fixes the number of outputs.
pub fn train(x: &Array2<f64>, labels: &[usize], class_names: Vec<String>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} labels"),
            got: labels.len().to_string(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= class_names.len()) {
        return Err(Error::ShapeMismatch {
            expected: format!("label < {}", class_names.len()),
            got: bad.to_string(),
        });
    }
    let mut model = MlpModel::init(x.ncols(), cfg.hidden, class_names, cfg.seed);
    // separate stream for the batch order so it does not shift with layer sizes
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5348_5546_464C_4531);
    let len = model.w1.len() + model.b1.len() + model.w2.len() + model.b2.len();
    let mut adam = Adam::new(len);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            shuffle(&mut order, &mut rng);
        }
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, g) = model.loss_and_gradients(xb.view(), &yb)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
            }
            total += loss * batch.len() as f64;
            adam.update(
                cfg,
                [
                    model.w1.as_slice_mut().expect("standard layout"),
                    model.b1.as_slice_mut().expect("standard layout"),
                    model.w2.as_slice_mut().expect("standard layout"),
                    model.b2.as_slice_mut().expect("standard layout"),
                ],
                [
                    g.w1.as_slice().expect("standard layout"),
                    g.b1.as_slice().expect("standard layout"),
                    g.w2.as_slice().expect("standard layout"),
                    g.b2.as_slice().expect("standard layout"),
                ],
            );
            if !model.is_finite() {
                return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
            }
        }
        epoch_losses.push(total / n as f64);
    }
    Ok(TrainOutcome { model, epoch_losses })
}
