//! Categorical draws from unnormalized weights.

use rand::Rng;

use crate::error::{Error, Result};

/// Turns log-weights into probabilities in place (max-shifted exp-normalize).
pub fn normalize_log_weights(weights: &mut [f64], what: &'static str) -> Result<()> {
    let mut max = f64::NEG_INFINITY;
    for &w in weights.iter() {
        if !w.is_finite() {
            return Err(Error::NonFiniteWeight { what, value: w });
        }
        max = max.max(w);
    }
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// Draws an index with probability proportional to `exp(weights[i])`.
///
/// On return `weights` holds the normalized probabilities.
pub fn sample_log_weights<R: Rng + ?Sized>(
    weights: &mut [f64],
    rng: &mut R,
    what: &'static str,
) -> Result<usize> {
    normalize_log_weights(weights, what)?;
    Ok(draw(weights, 1.0, rng))
}

/// Draws an index with probability proportional to non-negative `weights`.
pub fn sample_weights<R: Rng + ?Sized>(
    weights: &[f64],
    rng: &mut R,
    what: &'static str,
) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonFiniteWeight { what, value: total });
    }
    Ok(draw(weights, total, rng))
}

fn draw<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if target < acc {
                return i;
            }
        }
    }
    // rounding left `target` just past the final bucket
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_finite() {
        let mut w = vec![0.0, f64::NAN];
        assert!(matches!(
            normalize_log_weights(&mut w, "test"),
            Err(Error::NonFiniteWeight { .. })
        ));
        let mut rng = stream_rng(1, 0);
        assert!(sample_weights(&[0.0, 0.0], &mut rng, "test").is_err());
    }

    #[test]
    fn extreme_log_weights_do_not_underflow() {
        let mut w = vec![-1.0e3, -1.0e3 + 2.0_f64.ln()];
        normalize_log_weights(&mut w, "test").unwrap();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_frequencies() {
        let mut rng = stream_rng(7, 0);
        let weights = [1.0, 0.0, 3.0];
        let mut hits = [0usize; 3];
        let n = 200_000;
        for _ in 0..n {
            hits[sample_weights(&weights, &mut rng, "test").unwrap()] += 1;
        }
        assert_eq!(hits[1], 0);
        let p2 = hits[2] as f64 / n as f64;
        assert!((p2 - 0.75).abs() < 0.005, "{p2}");
    }

    proptest! {
        #[test]
        fn normalized_weights_sum_to_one(ws in prop::collection::vec(-800.0f64..800.0, 1..40)) {
            let mut w = ws.clone();
            normalize_log_weights(&mut w, "prop").unwrap();
            let total: f64 = w.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(w.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
