//! Inverted dropout: retained activations are scaled by 1/(1-rate) at train
//! time so evaluation needs no rescaling.

use super::linalg::Mat;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Seeded mask whose entries are 0 with probability `rate` and 1/(1-rate)
/// otherwise. A rate of exactly zero returns an all-ones mask without
/// consuming any randomness.
pub fn dropout_mask(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rate: f64) -> Mat {
    debug_assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 {
        return Mat::from_vec(rows, cols, vec![1.0; rows * cols]);
    }
    let keep_scale = 1.0 / (1.0 - rate);
    let data = (0..rows * cols)
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep_scale
            }
        })
        .collect();
    Mat::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = crate::rng::stream_rng(70, &[0]);
        let mask = dropout_mask(&mut rng, 3, 4, 0.0);
        assert!(mask.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn mask_preserves_expectation() {
        // Mean over many seeded masks converges to the undropped activation.
        let activation = 0.8;
        let rate = 0.3;
        let trials = 100_000;
        let mut rng = crate::rng::stream_rng(71, &[0]);
        let mut sum = 0.0;
        for _ in 0..trials {
            let mask = dropout_mask(&mut rng, 1, 1, rate);
            sum += activation * mask.at(0, 0);
        }
        let mean = sum / trials as f64;
        assert!(
            (mean - activation).abs() < 0.02 * activation,
            "mean {mean} vs {activation}"
        );
    }

    #[test]
    fn same_stream_gives_same_mask() {
        let a = dropout_mask(&mut crate::rng::stream_rng(72, &[1]), 4, 4, 0.5);
        let b = dropout_mask(&mut crate::rng::stream_rng(72, &[1]), 4, 4, 0.5);
        assert_eq!(a, b);
    }
}
