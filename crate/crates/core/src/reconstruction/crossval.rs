//! Hold-out check of the interpolants on a 31-sample truth curve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::interp::{Interpolant, Method};
use crate::error::{Error, Result};

pub const CROSSVAL_SAMPLES: usize = 31;
/// Sample indices kept as interpolation knots; the other 25 are held out.
pub const CROSSVAL_KNOTS: [usize; 6] = [0, 6, 12, 18, 24, 30];

/// Interpolates `truth` from its six knot samples (sample index as time)
/// and returns the RMSE over the held-out samples.
pub fn crossval_interp(method: Method, truth: &[f64]) -> Result<f64> {
    if truth.len() != CROSSVAL_SAMPLES {
        return Err(Error::LengthMismatch(CROSSVAL_SAMPLES, truth.len()));
    }
    let anchors: Vec<(f64, f64)> = CROSSVAL_KNOTS.iter().map(|&i| (i as f64, truth[i])).collect();
    let f = Interpolant::new(method, &anchors)?;
    let mut sse = 0.0;
    let mut n = 0;
    for (i, &v) in truth.iter().enumerate() {
        if CROSSVAL_KNOTS.contains(&i) {
            continue;
        }
        let e = f.eval(i as f64) - v;
        sse += e * e;
        n += 1;
    }
    Ok((sse / n as f64).sqrt())
}

/// Stimulus response sampled at integer times `0..31`: a flat baseline,
/// then a difference-of-exponentials rise and decay starting at `onset`,
/// scaled so the peak sits `amplitude` above baseline.
pub fn stimulus_decay_curve(baseline: f64, amplitude: f64, onset: f64, rise: f64, decay: f64) -> Vec<f64> {
    assert!(decay > rise && rise > 0.0);
    let shape = |s: f64| (-s / decay).exp() - (-s / rise).exp();
    let peak_at = rise * decay / (decay - rise) * (decay / rise).ln();
    let peak = shape(peak_at);
    (0..CROSSVAL_SAMPLES)
        .map(|i| {
            let s = i as f64 - onset;
            let v = if s <= 0.0 { baseline } else { baseline + amplitude * shape(s) / peak };
            v.clamp(0.0, 10.0)
        })
        .collect()
}

/// Seeded family of stimulus-decay truths with varied baseline, amplitude,
/// onset and time constants.
pub fn stimulus_decay_family(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let baseline = rng.random_range(0.5..2.0);
            let amplitude = rng.random_range(3.0..7.0);
            let onset = rng.random_range(2.0..12.0);
            let rise = rng.random_range(0.5..2.5);
            let decay = rng.random_range(3.0..9.0_f64).max(rise + 0.5);
            stimulus_decay_curve(baseline, amplitude, onset, rise, decay)
        })
        .collect()
}

/// Median hold-out RMSE of `method` over `truths`.
pub fn median_crossval_rmse(method: Method, truths: &[Vec<f64>]) -> Result<f64> {
    let mut r = truths.iter().map(|t| crossval_interp(method, t)).collect::<Result<Vec<f64>>>()?;
    if r.is_empty() {
        return Err(Error::InvalidConfig("no truth curves".into()));
    }
    r.sort_by(f64::total_cmp);
    let n = r.len();
    Ok(if n % 2 == 1 { r[n / 2] } else { 0.5 * (r[n / 2 - 1] + r[n / 2]) })
}
