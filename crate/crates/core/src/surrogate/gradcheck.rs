use super::train::batch_gradients;
use super::{LossMode, MlpWeights};
use crate::error::Result;
use crate::matrix::Matrix;

const STEP: f64 = 1e-5;

/// Largest relative error between backprop and central differences over every
/// parameter. Relative error is `|a - n| / max(|a| + |n|, 1e-6)`.
pub fn gradient_check(w: &MlpWeights, x: &Matrix, y: &[f64], mode: LossMode) -> Result<f64> {
    gradient_check_with(w, x, y, mode, |_| {})
}

/// As [`gradient_check`], with `corrupt` applied to the analytic gradient
/// first. Used as a negative control.
pub fn gradient_check_with(
    w: &MlpWeights,
    x: &Matrix,
    y: &[f64],
    mode: LossMode,
    corrupt: impl Fn(&mut MlpWeights),
) -> Result<f64> {
    let (_, mut g) = batch_gradients(w, x, y, mode)?;
    corrupt(&mut g);
    let analytic: Vec<f64> = g.w1.iter().chain(&g.b1).chain(&g.w2).chain(&g.b2).copied().collect();
    let mut probe = w.clone();
    let mut worst = 0.0_f64;
    for (k, a) in analytic.iter().enumerate() {
        let orig = *param(&mut probe, k);
        *param(&mut probe, k) = orig + STEP;
        let up = batch_gradients(&probe, x, y, mode)?.0;
        *param(&mut probe, k) = orig - STEP;
        let down = batch_gradients(&probe, x, y, mode)?.0;
        *param(&mut probe, k) = orig;
        let n = (up - down) / (2.0 * STEP);
        worst = worst.max((a - n).abs() / (a.abs() + n.abs()).max(1e-6));
    }
    Ok(worst)
}

fn param(w: &mut MlpWeights, mut k: usize) -> &mut f64 {
    if k < w.w1.len() {
        return &mut w.w1[k];
    }
    k -= w.w1.len();
    if k < w.b1.len() {
        return &mut w.b1[k];
    }
    k -= w.b1.len();
    if k < w.w2.len() {
        return &mut w.w2[k];
    }
    &mut w.b2[k - w.w2.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::{mlp_init, MlpConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(d: usize, seed: u64) -> (MlpWeights, Matrix, Vec<f64>) {
        let w = mlp_init(&MlpConfig {
            hidden: 20,
            ..MlpConfig::for_input(d, seed)
        });
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let x = Matrix::from_vec(8, d, (0..8 * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let y = (0..8).map(|_| rng.random_range(0.0..10.0)).collect();
        (w, x, y)
    }

    #[test]
    fn backprop_matches_finite_differences() {
        for mode in [LossMode::MseMean, LossMode::GaussianNll] {
            let (w, x, y) = small(6, 4);
            let err = gradient_check(&w, &x, &y, mode).unwrap();
            assert!(err < 1e-4, "{mode:?}: {err}");
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let (w, x, y) = small(6, 4);
        let err = gradient_check_with(&w, &x, &y, LossMode::MseMean, |g| {
            for v in g.w1.iter_mut() {
                *v *= 1.5;
            }
        })
        .unwrap();
        assert!(err > 1e-2, "{err}");
    }

    #[test]
    fn zero_input_gives_zero_first_layer_gradient() {
        let (w, _, y) = small(5, 1);
        let (_, g) = batch_gradients(&w, &Matrix::zeros(8, 5), &y, LossMode::GaussianNll).unwrap();
        assert!(g.w1.iter().all(|v| *v == 0.0));
    }
}
