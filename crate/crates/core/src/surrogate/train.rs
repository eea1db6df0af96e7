use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mlp_init, sample_loss, LossMode, MlpConfig, MlpWeights, Optimizer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub final_train_rmse: f64,
    pub final_val_rmse: f64,
    pub train_rows: Vec<usize>,
    pub val_rows: Vec<usize>,
}

/// Mean loss and parameter gradients over `rows` of `x`, evaluation mode.
pub fn batch_gradients(w: &MlpWeights, x: &Matrix, y: &[f64], mode: LossMode) -> Result<(f64, MlpWeights)> {
    if x.rows != y.len() {
        return Err(Error::LengthMismatch(x.rows, y.len()));
    }
    w.check_dim(x.cols)?;
    let rows: Vec<usize> = (0..x.rows).collect();
    let mut g = MlpWeights::zeros(w.input_dim, w.hidden);
    let mut scratch = Scratch::new(w.hidden);
    let loss = accumulate(w, x, y, &rows, mode, None, &mut g, &mut scratch);
    Ok((loss, g))
}

struct Scratch {
    z: Vec<f64>,
    a: Vec<f64>,
    mask: Vec<f64>,
}

impl Scratch {
    fn new(h: usize) -> Self {
        Self {
            z: vec![0.0; h],
            a: vec![0.0; h],
            mask: vec![1.0; h],
        }
    }
}

/// Adds the mean gradient over `rows` into `g` (which is zeroed first) and
/// returns the mean loss.
#[allow(clippy::too_many_arguments)]
fn accumulate(
    w: &MlpWeights,
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    mode: LossMode,
    mut dropout: Option<(f64, &mut ChaCha8Rng)>,
    g: &mut MlpWeights,
    s: &mut Scratch,
) -> f64 {
    let h = w.hidden;
    g.w1.fill(0.0);
    g.b1.fill(0.0);
    g.w2.fill(0.0);
    g.b2 = [0.0; 2];
    let mut total = 0.0;
    for &r in rows {
        let xr = x.row(r);
        w.hidden_pre(xr, &mut s.z);
        match dropout.as_mut() {
            Some((rate, rng)) => {
                let keep = 1.0 / (1.0 - *rate);
                for m in s.mask.iter_mut() {
                    *m = if rng.random::<f64>() < *rate { 0.0 } else { keep };
                }
            }
            None => s.mask.fill(1.0),
        }
        for j in 0..h {
            s.a[j] = s.z[j].max(0.0) * s.mask[j];
        }
        let (m, zv) = w.heads(&s.a);
        let (loss, gm, gv) = sample_loss(mode, m, zv, y[r]);
        total += loss;
        g.b2[0] += gm;
        g.b2[1] += gv;
        for j in 0..h {
            g.w2[2 * j] += gm * s.a[j];
            g.w2[2 * j + 1] += gv * s.a[j];
            // reuse z as the pre-activation gradient
            s.z[j] = if s.z[j] > 0.0 {
                (gm * w.w2[2 * j] + gv * w.w2[2 * j + 1]) * s.mask[j]
            } else {
                0.0
            };
        }
        for (bj, dz) in g.b1.iter_mut().zip(&s.z) {
            *bj += dz;
        }
        for (i, &xi) in xr.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &mut g.w1[i * h..(i + 1) * h];
            for (gj, dz) in row.iter_mut().zip(&s.z) {
                *gj += xi * dz;
            }
        }
    }
    let n = rows.len().max(1) as f64;
    for v in g.w1.iter_mut().chain(g.b1.iter_mut()).chain(g.w2.iter_mut()).chain(g.b2.iter_mut()) {
        *v /= n;
    }
    total / n
}

fn params_mut(w: &mut MlpWeights) -> impl Iterator<Item = &mut f64> {
    w.w1.iter_mut().chain(w.b1.iter_mut()).chain(w.w2.iter_mut()).chain(w.b2.iter_mut())
}

fn params(w: &MlpWeights) -> impl Iterator<Item = &f64> {
    w.w1.iter().chain(&w.b1).chain(&w.w2).chain(&w.b2)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, w: &mut MlpWeights, g: &MlpWeights, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (k, (p, gi)) in params_mut(w).zip(params(g)).enumerate() {
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * gi;
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * gi * gi;
            *p -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

fn rmse_over(w: &MlpWeights, x: &Matrix, y: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut z = vec![0.0; w.hidden];
    let mut sse = 0.0;
    for &r in rows {
        w.hidden_pre(x.row(r), &mut z);
        for v in z.iter_mut() {
            *v = v.max(0.0);
        }
        let e = w.heads(&z).0 - y[r];
        sse += e * e;
    }
    (sse / rows.len() as f64).sqrt()
}

/// Seeded point-wise split into `(train, validation)` row indices.
pub fn split_rows(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ SPLIT_SALT));
    let n_train = ((n as f64 * fraction).round() as usize).clamp(1.min(n), n);
    let val = idx.split_off(n_train);
    (idx, val)
}

const DECAY: f64 = 0.99;
const SPLIT_SALT: u64 = 0x5eed_5017;

/// Trains a fresh network on `features` (already normalized) against
/// per-row targets.
pub fn mlp_train(features: &Matrix, targets: &[f64], config: &MlpConfig) -> Result<(MlpWeights, TrainReport)> {
    config.validate()?;
    if features.rows != targets.len() {
        return Err(Error::LengthMismatch(features.rows, targets.len()));
    }
    if features.cols != config.input_dim {
        return Err(Error::DimensionMismatch {
            expected: config.input_dim,
            got: features.cols,
        });
    }
    if features.rows == 0 {
        return Err(Error::InvalidConfig("no training rows".into()));
    }
    let mut w = mlp_init(config);
    let (mut train, val) = split_rows(features.rows, config.train_fraction, config.seed);
    // Start the mean head at the training-target mean.
    w.b2[0] = train.iter().map(|&r| targets[r]).sum::<f64>() / train.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut g = MlpWeights::zeros(w.input_dim, w.hidden);
    let mut scratch = Scratch::new(w.hidden);
    let mut adam = Adam::new(w.param_count());
    let mut report = TrainReport {
        epochs: Vec::with_capacity(config.epochs),
        final_train_rmse: f64::NAN,
        final_val_rmse: f64::NAN,
        train_rows: Vec::new(),
        val_rows: val.clone(),
    };

    for epoch in 0..config.epochs {
        match config.optimizer {
            Optimizer::GradientDescent => {
                let loss = accumulate(
                    &w,
                    features,
                    targets,
                    &train,
                    config.loss_mode,
                    Some((config.dropout_rate, &mut rng)),
                    &mut g,
                    &mut scratch,
                );
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss(epoch));
                }
                for (p, gi) in params_mut(&mut w).zip(params(&g)) {
                    *p -= config.learning_rate * gi;
                }
            }
            Optimizer::Adam => {
                // linear decay to 1% of the base rate over the run
                let lr = config.learning_rate * (1.0 - DECAY * epoch as f64 / config.epochs as f64);
                train.shuffle(&mut rng);
                for batch in train.chunks(config.batch_size) {
                    let loss = accumulate(
                        &w,
                        features,
                        targets,
                        batch,
                        config.loss_mode,
                        Some((config.dropout_rate, &mut rng)),
                        &mut g,
                        &mut scratch,
                    );
                    if !loss.is_finite() {
                        return Err(Error::NonFiniteLoss(epoch));
                    }
                    adam.step(&mut w, &g, lr);
                }
            }
        }
        let stats = EpochStats {
            epoch,
            train_rmse: rmse_over(&w, features, targets, &train),
            val_rmse: rmse_over(&w, features, targets, &val),
        };
        if !stats.train_rmse.is_finite() || !stats.val_rmse.is_finite() {
            return Err(Error::NonFiniteLoss(epoch));
        }
        report.epochs.push(stats);
    }

    if config.loss_mode == LossMode::MseMean {
        fit_variance_head(&mut w, features, targets, &train, config)?;
    }
    train.sort_unstable();
    report.final_train_rmse = report.epochs.last().map_or(rmse_over(&w, features, targets, &train), |e| e.train_rmse);
    report.final_val_rmse = report.epochs.last().map_or(rmse_over(&w, features, targets, &val), |e| e.val_rmse);
    report.train_rows = train;
    Ok((w, report))
}

/// Second phase: the hidden layer and mean head are frozen and only the
/// variance head is fitted by Gaussian likelihood.
fn fit_variance_head(w: &mut MlpWeights, x: &Matrix, y: &[f64], rows: &[usize], config: &MlpConfig) -> Result<()> {
    let h = w.hidden;
    let mut acts = Vec::with_capacity(rows.len() * h);
    let mut z = vec![0.0; h];
    let mut means = Vec::with_capacity(rows.len());
    for &r in rows {
        w.hidden_pre(x.row(r), &mut z);
        for v in z.iter_mut() {
            *v = v.max(0.0);
        }
        means.push(w.heads(&z).0);
        acts.extend_from_slice(&z);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let (mut m, mut v) = (vec![0.0; h + 1], vec![0.0; h + 1]);
    let mut t = 0;
    let mut grad = vec![0.0; h + 1];
    for epoch in 0..config.variance_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.fill(0.0);
            for &k in batch {
                let a = &acts[k * h..(k + 1) * h];
                let zv = w.b2[1] + a.iter().enumerate().map(|(j, aj)| aj * w.w2[2 * j + 1]).sum::<f64>();
                let (loss, _, gv) = sample_loss(LossMode::GaussianNll, means[k], zv, y[rows[k]]);
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss(config.epochs + epoch));
                }
                for (gj, aj) in grad.iter_mut().zip(a) {
                    *gj += gv * aj;
                }
                grad[h] += gv;
            }
            t += 1;
            let c1 = 1.0 - Adam::B1.powi(t);
            let c2 = 1.0 - Adam::B2.powi(t);
            let n = batch.len() as f64;
            for k in 0..=h {
                let gk = grad[k] / n;
                m[k] = Adam::B1 * m[k] + (1.0 - Adam::B1) * gk;
                v[k] = Adam::B2 * v[k] + (1.0 - Adam::B2) * gk * gk;
                let step = config.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + Adam::EPS);
                if k < h {
                    w.w2[2 * k + 1] -= step;
                } else {
                    w.b2[1] -= step;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_set(n: usize, d: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coef: Vec<f64> = (0..d).map(|i| 0.5 + 0.3 * i as f64).collect();
        let mut x = Matrix::zeros(n, d);
        let mut y = Vec::with_capacity(n);
        for r in 0..n {
            let mut t = 5.0;
            for c in 0..d {
                let v = rng.random_range(-1.0..1.0);
                x.set(r, c, v);
                t += coef[c] * v;
            }
            y.push(t);
        }
        (x, y)
    }

    #[test]
    fn overfits_small_linear_set() {
        let (x, y) = linear_set(32, 3, 11);
        let cfg = MlpConfig {
            epochs: 2000,
            ..MlpConfig::for_input(3, 5)
        };
        let (w, rep) = mlp_train(&x, &y, &cfg).unwrap();
        let rmse = rmse_over(&w, &x, &y, &rep.train_rows);
        assert!((rmse - rep.final_train_rmse).abs() < 1e-12);
        assert!(rmse < 0.02, "rmse {rmse}");
    }

    #[test]
    fn seeded_training_is_bit_exact() {
        let (x, y) = linear_set(200, 4, 2);
        let cfg = MlpConfig {
            epochs: 5,
            ..MlpConfig::for_input(4, 9)
        };
        let a = mlp_train(&x, &y, &cfg).unwrap();
        let b = mlp_train(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.epochs.len(), 5);
        assert_eq!(a.1.train_rows.len(), 160);
        assert_eq!(a.1.val_rows.len(), 40);
    }

    #[test]
    fn joint_nll_and_full_batch_modes_run() {
        let (x, y) = linear_set(64, 2, 3);
        for (loss_mode, optimizer) in [
            (LossMode::GaussianNll, Optimizer::Adam),
            (LossMode::MseMean, Optimizer::GradientDescent),
        ] {
            let cfg = MlpConfig {
                epochs: 20,
                loss_mode,
                optimizer,
                ..MlpConfig::for_input(2, 1)
            };
            let (w, rep) = mlp_train(&x, &y, &cfg).unwrap();
            assert!(w.is_finite());
            assert!(rep.epochs.iter().all(|e| e.train_rmse >= 0.0 && e.val_rmse >= 0.0));
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let (x, y) = linear_set(10, 2, 0);
        assert!(mlp_train(&x, &y[..9], &MlpConfig::for_input(2, 0)).is_err());
        assert!(mlp_train(&x, &y, &MlpConfig::for_input(3, 0)).is_err());
    }

    #[test]
    fn divergence_reports_epoch() {
        let (x, y) = linear_set(16, 2, 0);
        let cfg = MlpConfig {
            epochs: 50,
            learning_rate: 1e12,
            optimizer: Optimizer::GradientDescent,
            ..MlpConfig::for_input(2, 0)
        };
        assert!(matches!(mlp_train(&x, &y, &cfg), Err(Error::NonFiniteLoss(_))));
    }
}
