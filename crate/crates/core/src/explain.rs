//! Shapley attribution of a scalar model output with mean-substitution value
//! function: features outside the coalition take their baseline value.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::surrogate::MlpWeights;

pub const MAX_EXACT_FEATURES: usize = 15;

/// Scalar model explained by the attribution routines.
pub trait RiskModel: Sync {
    fn dim(&self) -> usize;

    fn predict(&self, x: &[f64]) -> f64;

    /// Values along a permutation path: `out[0]` is `f(start)` and `out[k]`
    /// is the output once the first `k` features of `order` take their
    /// `target` values.
    fn path_values(&self, start: &[f64], target: &[f64], order: &[usize], out: &mut [f64]) {
        let mut z = start.to_vec();
        out[0] = self.predict(&z);
        for (k, &i) in order.iter().enumerate() {
            z[i] = target[i];
            out[k + 1] = self.predict(&z);
        }
    }
}

impl RiskModel for MlpWeights {
    fn dim(&self) -> usize {
        self.input_dim
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.mean(x).expect("dimension checked by caller")
    }

    // Switching one input shifts every hidden pre-activation by a row of W1,
    // so each step costs O(hidden) instead of a full forward pass.
    fn path_values(&self, start: &[f64], target: &[f64], order: &[usize], out: &mut [f64]) {
        let h = self.hidden;
        let mut z = self.b1.clone();
        for (i, &xi) in start.iter().enumerate() {
            for (zj, w) in z.iter_mut().zip(&self.w1[i * h..(i + 1) * h]) {
                *zj += xi * w;
            }
        }
        let head = |z: &[f64]| {
            self.b2[0]
                + z.iter()
                    .enumerate()
                    .map(|(j, v)| v.max(0.0) * self.w2[2 * j])
                    .sum::<f64>()
        };
        out[0] = head(&z);
        for (k, &i) in order.iter().enumerate() {
            let d = target[i] - start[i];
            if d != 0.0 {
                for (zj, w) in z.iter_mut().zip(&self.w1[i * h..(i + 1) * h]) {
                    *zj += d * w;
                }
            }
            out[k + 1] = head(&z);
        }
    }
}

/// Closure-backed model, mostly for tests and toy checks.
pub struct FnModel<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> RiskModel for FnModel<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapRow {
    /// `f(baseline)`.
    pub base_value: f64,
    pub phi: Vec<f64>,
    /// Sampled mode only.
    pub std_err: Option<Vec<f64>>,
}

fn check(model: &dyn RiskModel, x: &[f64], baseline: &[f64]) -> Result<()> {
    for got in [x.len(), baseline.len()] {
        if got != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got,
            });
        }
    }
    Ok(())
}

/// `f` at the composite input: features in `subset` (bit `i` set) from `x`,
/// the rest from `baseline`.
pub fn value_function(model: &dyn RiskModel, x: &[f64], subset: u64, baseline: &[f64]) -> Result<f64> {
    check(model, x, baseline)?;
    let z: Vec<f64> = (0..x.len())
        .map(|i| if subset >> i & 1 == 1 { x[i] } else { baseline[i] })
        .collect();
    Ok(model.predict(&z))
}

/// Full subset enumeration; at most [`MAX_EXACT_FEATURES`] features.
pub fn shap_exact(model: &dyn RiskModel, x: &[f64], baseline: &[f64]) -> Result<ShapRow> {
    check(model, x, baseline)?;
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            max: MAX_EXACT_FEATURES,
            got: d,
        });
    }
    let n = 1usize << d;
    let mut v = Vec::with_capacity(n);
    let mut z = baseline.to_vec();
    for s in 0..n {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = if s >> i & 1 == 1 { x[i] } else { baseline[i] };
        }
        v.push(model.predict(&z));
    }
    // weight(|S|) = |S|! (d - |S| - 1)! / d!
    let fact: Vec<f64> = (0..=d).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
    .collect();
    let weight: Vec<f64> = (0..d).map(|s| fact[s] * fact[d - s - 1] / fact[d]).collect();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for s in 0..n {
            if s & bit == 0 {
                *p += weight[s.count_ones() as usize] * (v[s | bit] - v[s]);
            }
        }
    }
    Ok(ShapRow {
        base_value: v[0],
        phi,
        std_err: None,
    })
}

/// Monte Carlo over random feature orders. Orders come in antithetic pairs
/// (a permutation, then its reverse); standard errors are computed over pair
/// means.
pub fn shap_sampled(
    model: &dyn RiskModel,
    x: &[f64],
    baseline: &[f64],
    n_permutations: usize,
    seed: u64,
) -> Result<ShapRow> {
    check(model, x, baseline)?;
    if n_permutations == 0 {
        return Err(Error::InvalidConfig("n_permutations must be >= 1".into()));
    }
    let d = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..d).collect();
    let mut path = vec![0.0; d + 1];
    let mut unit = vec![0.0; d];
    let (mut sum, mut sumsq) = (vec![0.0; d], vec![0.0; d]);
    let mut units = 0usize;
    let mut base = model.predict(baseline);
    for k in 0..n_permutations {
        if k % 2 == 0 {
            order.shuffle(&mut rng);
        } else {
            order.reverse();
        }
        model.path_values(baseline, x, &order, &mut path);
        base = path[0];
        let pair_weight = if k % 2 == 0 && k + 1 == n_permutations { 1.0 } else { 0.5 };
        for (pos, &i) in order.iter().enumerate() {
            unit[i] += pair_weight * (path[pos + 1] - path[pos]);
        }
        if k % 2 == 1 || k + 1 == n_permutations {
            for i in 0..d {
                sum[i] += unit[i];
                sumsq[i] += unit[i] * unit[i];
                unit[i] = 0.0;
            }
            units += 1;
        }
    }
    let m = units as f64;
    let phi: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_err = (0..d)
        .map(|i| {
            if units < 2 {
                return 0.0;
            }
            let var = ((sumsq[i] - sum[i] * sum[i] / m) / (m - 1.0)).max(0.0);
            (var / m).sqrt()
        })
        .collect();
    Ok(ShapRow {
        base_value: base,
        phi,
        std_err: Some(std_err),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    pub mean_abs_phi: f64,
    /// 1-based.
    pub rank: usize,
}

/// Features ranked by mean |phi| over all rows; ties keep manifest order.
pub fn global_importance(names: &[String], rows: &[ShapRow]) -> Result<Vec<Importance>> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no attributions to rank".into()));
    }
    let mut acc = vec![0.0; names.len()];
    for r in rows {
        if r.phi.len() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: r.phi.len(),
            });
        }
        for (a, p) in acc.iter_mut().zip(&r.phi) {
            *a += p.abs();
        }
    }
    let mut idx: Vec<usize> = (0..names.len()).collect();
    idx.sort_by(|&a, &b| acc[b].total_cmp(&acc[a]));
    Ok(idx
        .into_iter()
        .enumerate()
        .map(|(k, i)| Importance {
            feature: names[i].clone(),
            mean_abs_phi: acc[i] / rows.len() as f64,
            rank: k + 1,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub event_id: u32,
    pub base_value: f64,
    /// Frames x features.
    pub phi: Matrix,
    /// Model output per frame.
    pub predicted: Vec<f64>,
}

/// Stacks one event's attribution rows next to the model's prediction.
pub fn local_heatmap(event_id: u32, rows: &[ShapRow], predicted: Vec<f64>) -> Result<Heatmap> {
    if rows.len() != predicted.len() {
        return Err(Error::LengthMismatch(rows.len(), predicted.len()));
    }
    let phi = Matrix::from_rows(&rows.iter().map(|r| r.phi.clone()).collect::<Vec<_>>())?;
    Ok(Heatmap {
        event_id,
        base_value: rows.first().map_or(0.0, |r| r.base_value),
        phi,
        predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{mlp_init, MlpConfig};
    use rand::Rng;

    fn linear() -> FnModel<impl Fn(&[f64]) -> f64 + Sync> {
        FnModel {
            dim: 2,
            f: |x: &[f64]| 3.0 * x[0] + 2.0 * x[1],
        }
    }

    fn toy() -> FnModel<impl Fn(&[f64]) -> f64 + Sync> {
        FnModel {
            dim: 4,
            f: |x: &[f64]| x[0] * x[1] + (x[2] - 0.5).powi(2) * 3.0 + x[3].sin() * x[0] + 0.2,
        }
    }

    #[test]
    fn value_function_examples() {
        let m = toy();
        let x = [0.4, -1.0, 2.0, 0.7];
        let b = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(value_function(&m, &x, 0b1111, &b).unwrap(), m.predict(&x));
        assert_eq!(value_function(&m, &x, 0, &b).unwrap(), m.predict(&b));
        for s in 0..16 {
            assert_eq!(value_function(&m, &b, s, &b).unwrap(), m.predict(&b));
        }
    }

    #[test]
    fn linear_exact_and_sampled() {
        let r = shap_exact(&linear(), &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(r.phi, vec![3.0, 2.0]);
        for n in [1, 2, 7] {
            let s = shap_sampled(&linear(), &[1.0, 1.0], &[0.0, 0.0], n, 4).unwrap();
            assert_eq!(s.phi, vec![3.0, 2.0]);
        }
    }

    #[test]
    fn missingness_and_local_accuracy() {
        let m = toy();
        let b = [0.1, 0.2, 0.3, 0.4];
        let x = [0.9, 0.2, -1.0, 2.0];
        let r = shap_exact(&m, &x, &b).unwrap();
        assert_eq!(r.phi[1], 0.0);
        assert!((r.base_value + r.phi.iter().sum::<f64>() - m.predict(&x)).abs() < 1e-12);
        assert!(shap_exact(&FnModel { dim: 16, f: |_: &[f64]| 0.0 }, &[0.0; 16], &[0.0; 16]).is_err());
    }

    #[test]
    fn sampled_is_seeded_and_close_to_exact() {
        let m = toy();
        let b = [0.1, 0.2, 0.3, 0.4];
        let x = [0.9, -0.7, -1.0, 2.0];
        let e = shap_exact(&m, &x, &b).unwrap();
        let s = shap_sampled(&m, &x, &b, 2000, 3).unwrap();
        assert_eq!(s, shap_sampled(&m, &x, &b, 2000, 3).unwrap());
        let scale = e.phi.iter().fold(0.0_f64, |a, p| a.max(p.abs()));
        for (a, b) in s.phi.iter().zip(&e.phi) {
            assert!((a - b).abs() <= 0.05 * scale);
        }
    }

    #[test]
    fn sampled_mean_within_two_standard_errors() {
        let m = toy();
        let b = [0.1, 0.2, 0.3, 0.4];
        let x = [0.9, -0.7, -1.0, 2.0];
        let e = shap_exact(&m, &x, &b).unwrap();
        let runs: Vec<ShapRow> = (0..50).map(|s| shap_sampled(&m, &x, &b, 20, s).unwrap()).collect();
        for i in 0..4 {
            let mean = runs.iter().map(|r| r.phi[i]).sum::<f64>() / 50.0;
            let se = runs.iter().map(|r| r.phi[i]).map(|p| (p - mean).powi(2)).sum::<f64>() / 49.0;
            let se = (se / 50.0).sqrt();
            assert!((mean - e.phi[i]).abs() <= 2.0 * se + 1e-12, "feature {i}");
        }
    }

    #[test]
    fn mlp_incremental_path_matches_direct() {
        let w = mlp_init(&MlpConfig {
            hidden: 40,
            ..MlpConfig::for_input(6, 2)
        });
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..0.5)).collect();
        let order = [3, 0, 5, 1, 4, 2];
        let mut fast = vec![0.0; 7];
        w.path_values(&b, &x, &order, &mut fast);
        let mut slow = vec![0.0; 7];
        FnModel {
            dim: 6,
            f: |z: &[f64]| w.predict(z),
        }
        .path_values(&b, &x, &order, &mut slow);
        for (a, s) in fast.iter().zip(&slow) {
            assert!((a - s).abs() < 1e-10);
        }
        let e = shap_exact(&w, &x, &b).unwrap();
        assert!((e.base_value + e.phi.iter().sum::<f64>() - w.predict(&x)).abs() < 1e-9);
    }

    #[test]
    fn ranking_examples() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let rows = vec![
            ShapRow {
                base_value: 0.0,
                phi: vec![0.5, -2.0, 0.0],
                std_err: None,
            },
            ShapRow {
                base_value: 0.0,
                phi: vec![-0.4, 1.0, 0.0],
                std_err: None,
            },
        ];
        let r = global_importance(&names, &rows).unwrap();
        let order: Vec<&str> = r.iter().map(|i| i.feature.as_str()).collect();
        assert_eq!(order, ["b", "a", "c"]);
        let doubled: Vec<ShapRow> = rows
            .iter()
            .map(|r| ShapRow {
                phi: r.phi.iter().map(|p| 2.0 * p).collect(),
                ..r.clone()
            })
            .collect();
        let r2 = global_importance(&names, &doubled).unwrap();
        assert!(r.iter().zip(&r2).all(|(a, b)| a.feature == b.feature));
        assert!(global_importance(&names, &[]).is_err());
    }

    #[test]
    fn heatmap_reproduces_prediction() {
        let m = toy();
        let b = [0.1, 0.2, 0.3, 0.4];
        let frames = [[0.9, -0.7, -1.0, 2.0], [0.0, 1.0, 0.5, -1.0], b];
        let rows: Vec<ShapRow> = frames.iter().map(|x| shap_exact(&m, x, &b).unwrap()).collect();
        let pred: Vec<f64> = frames.iter().map(|x| m.predict(x)).collect();
        let h = local_heatmap(7, &rows, pred.clone()).unwrap();
        assert_eq!(h.phi.rows, 3);
        for k in 0..3 {
            let s: f64 = h.base_value + h.phi.row(k).iter().sum::<f64>();
            assert!((s - pred[k]).abs() < 1e-9);
        }
        assert!(h.phi.row(2).iter().all(|p| *p == 0.0));
    }
}
