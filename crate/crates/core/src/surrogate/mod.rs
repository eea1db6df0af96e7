//! Feed-forward surrogate `D -> hidden (ReLU) -> (mean, variance)`.

mod gradcheck;
mod train;

pub use gradcheck::{gradient_check, gradient_check_with};
pub use train::{batch_gradients, mlp_train, split_rows, EpochStats, TrainReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Squared error on the mean head, then a variance-only likelihood phase.
    MseMean,
    /// Gaussian negative log-likelihood on both heads jointly.
    GaussianNll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain full-batch gradient descent.
    GradientDescent,
    /// Adam on shuffled mini-batches.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    /// Epochs of the variance-head phase in `mse_mean` mode.
    pub variance_epochs: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            input_dim: 1,
            hidden: 500,
            dropout_rate: 0.1,
            epochs: 200,
            learning_rate: 0.001,
            train_fraction: 0.8,
            seed: 0,
            loss_mode: LossMode::MseMean,
            optimizer: Optimizer::Adam,
            batch_size: 64,
            variance_epochs: 20,
        }
    }
}

impl MlpConfig {
    pub fn for_input(input_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig("input and hidden sizes must be positive".into()));
        }
        if !(self.dropout_rate > 0.0 && self.dropout_rate < 1.0) {
            return Err(Error::InvalidConfig("dropout_rate must lie in (0, 1)".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train_fraction must lie in (0, 1)".into()));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidConfig("learning_rate and batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Network parameters. `w1` is `input_dim x hidden`, `w2` is `hidden x 2`,
/// both row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub input_dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: [f64; 2],
    pub seed: u64,
}

/// Smooth positive map applied to the raw variance output.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// He-scaled normal initialization; biases start at zero.
pub fn mlp_init(config: &MlpConfig) -> MlpWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (d, h) = (config.input_dim, config.hidden);
    let n1 = Normal::new(0.0, (2.0 / d as f64).sqrt()).expect("finite std");
    let n2 = Normal::new(0.0, (2.0 / h as f64).sqrt()).expect("finite std");
    MlpWeights {
        input_dim: d,
        hidden: h,
        w1: (0..d * h).map(|_| n1.sample(&mut rng)).collect(),
        b1: vec![0.0; h],
        w2: (0..h * 2).map(|_| n2.sample(&mut rng)).collect(),
        b2: [0.0; 2],
        seed: config.seed,
    }
}

impl MlpWeights {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; input_dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * 2],
            b2: [0.0; 2],
            seed: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).all(|v| v.is_finite())
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 2
    }

    /// Hidden pre-activations into `z`.
    fn hidden_pre(&self, x: &[f64], z: &mut [f64]) {
        z.copy_from_slice(&self.b1);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            for (zj, wj) in z.iter_mut().zip(row) {
                *zj += xi * wj;
            }
        }
    }

    /// Raw head outputs `(mean, pre-softplus variance)` from hidden activations.
    fn heads(&self, a: &[f64]) -> (f64, f64) {
        let (mut m, mut v) = (self.b2[0], self.b2[1]);
        for (j, aj) in a.iter().enumerate() {
            m += aj * self.w2[2 * j];
            v += aj * self.w2[2 * j + 1];
        }
        (m, v)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got,
            });
        }
        Ok(())
    }

    /// Mean-head output only, evaluation mode.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        Ok(mlp_forward(self, x, None)?.0)
    }
}

/// `(mean, variance)` for one input. Pass `Some((rate, rng))` for training
/// mode, which applies inverted dropout to the hidden activations feeding
/// the output layer.
pub fn mlp_forward(w: &MlpWeights, x: &[f64], dropout: Option<(f64, &mut ChaCha8Rng)>) -> Result<(f64, f64)> {
    w.check_dim(x.len())?;
    let mut a = vec![0.0; w.hidden];
    w.hidden_pre(x, &mut a);
    for v in a.iter_mut() {
        *v = v.max(0.0);
    }
    if let Some((rate, rng)) = dropout {
        let keep = 1.0 / (1.0 - rate);
        for v in a.iter_mut() {
            *v = if rng.random::<f64>() < rate { 0.0 } else { *v * keep };
        }
    }
    let (m, z) = w.heads(&a);
    Ok((m, softplus(z)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Means clamped to the rating scale.
    pub mean: Vec<f64>,
    pub raw_mean: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn mlp_predict(w: &MlpWeights, x: &Matrix) -> Result<Prediction> {
    w.check_dim(x.cols)?;
    let mut p = Prediction {
        mean: Vec::with_capacity(x.rows),
        raw_mean: Vec::with_capacity(x.rows),
        variance: Vec::with_capacity(x.rows),
    };
    for r in 0..x.rows {
        let (m, v) = mlp_forward(w, x.row(r), None)?;
        p.raw_mean.push(m);
        p.mean.push(m.clamp(0.0, 10.0));
        p.variance.push(v);
    }
    Ok(p)
}

/// Loss of one sample and its derivatives with respect to the raw heads.
pub(crate) fn sample_loss(mode: LossMode, m: f64, z: f64, y: f64) -> (f64, f64, f64) {
    match mode {
        LossMode::MseMean => {
            let e = m - y;
            (e * e, 2.0 * e, 0.0)
        }
        LossMode::GaussianNll => {
            let var = softplus(z) + 1e-6;
            let e = m - y;
            let loss = 0.5 * (var.ln() + e * e / var);
            let dvar = 0.5 * (1.0 / var - e * e / (var * var));
            (loss, e / var, dvar * sigmoid(z))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded() {
        let c = MlpConfig::for_input(11, 3);
        let a = mlp_init(&c);
        assert_eq!(a, mlp_init(&c));
        assert_ne!(a.w1, mlp_init(&MlpConfig::for_input(11, 4)).w1);
        assert_eq!(a.w1.len(), 11 * 500);
        assert_eq!(a.w2.len(), 500 * 2);
        // He scale: sample variance near 2 / fan_in
        let var = a.w1.iter().map(|v| v * v).sum::<f64>() / a.w1.len() as f64;
        assert!((var - 2.0 / 11.0).abs() < 0.02);
    }

    #[test]
    fn zero_weights_give_softplus_zero() {
        let w = MlpWeights::zeros(4, 8);
        let (m, v) = mlp_forward(&w, &[1.0, -2.0, 3.0, 0.5], None).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(v, 2f64.ln());
    }

    #[test]
    fn eval_mode_is_deterministic_and_checks_dims() {
        let w = mlp_init(&MlpConfig::for_input(5, 1));
        let x = [0.3, -1.0, 2.0, 0.0, 1.5];
        assert_eq!(mlp_forward(&w, &x, None).unwrap(), mlp_forward(&w, &x, None).unwrap());
        assert!(matches!(
            mlp_forward(&w, &x[..4], None),
            Err(Error::DimensionMismatch { expected: 5, got: 4 })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, v) = mlp_forward(&w, &x, Some((0.1, &mut rng))).unwrap();
        assert!(v >= 0.0);
    }

    #[test]
    fn relu_blocks_negative_preactivations() {
        let mut w = MlpWeights::zeros(1, 2);
        w.w1 = vec![1.0, -1.0];
        w.w2 = vec![1.0, 0.0, 1.0, 0.0];
        assert_eq!(mlp_forward(&w, &[2.0], None).unwrap().0, 2.0);
        assert_eq!(mlp_forward(&w, &[-3.0], None).unwrap().0, 3.0);
    }

    #[test]
    fn predict_shapes_and_clamp() {
        let mut w = MlpWeights::zeros(2, 3);
        w.b2 = [12.0, -50.0];
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let p = mlp_predict(&w, &x).unwrap();
        assert_eq!(p.mean, vec![10.0; 3]);
        assert_eq!(p.raw_mean, vec![12.0; 3]);
        assert!(p.variance.iter().all(|v| *v >= 0.0));
        assert!(mlp_predict(&w, &Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn softplus_is_positive_and_stable() {
        assert!(softplus(-800.0) >= 0.0);
        assert_eq!(softplus(100.0), 100.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(MlpConfig::for_input(3, 0).validate().is_ok());
        let bad = MlpConfig {
            dropout_rate: 1.0,
            ..MlpConfig::for_input(3, 0)
        };
        assert!(bad.validate().is_err());
    }
}
