use rand::Rng;

/// One draw from the Laplace distribution with mean 0 and scale `b`, by
/// inverting the CDF. Scale 0 gives exactly 0.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return -b * u.signum() * tail.ln();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rng::stream_rng;

    #[test]
    fn zero_scale_is_exact() {
        let mut rng = stream_rng(1, 0);
        assert_eq!(sample_laplace(&mut rng, 0.0), 0.0);
    }

    #[test]
    fn moments_match_scale() {
        // Var = 2 b^2 and E|X| = b. With 2e5 draws the SE of E|X| is b/sqrt(2e5).
        let mut rng = stream_rng(3, 0);
        let b = 0.7;
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_laplace(&mut rng, b)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let abs = draws.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 5.0 * (2.0f64).sqrt() * b / (n as f64).sqrt());
        assert!((abs - b).abs() < 5.0 * b / (n as f64).sqrt());
        assert!((var / (2.0 * b * b) - 1.0).abs() < 0.03);
    }

    #[test]
    fn tail_frequency_matches_cdf() {
        // Pr[|X| > t] = exp(-t/b).
        let mut rng = stream_rng(5, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_laplace(&mut rng, 1.0).abs() > 2.0)
            .count();
        let p = (-2.0f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 5.0 * se);
    }
}
