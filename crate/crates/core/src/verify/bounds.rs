//! Closed-form concentration bounds.

/// Two-sided Hoeffding bound `2 exp(-2 tau^2 n)` for a mean of `n`
/// independent `[0, 1]` variables.
pub fn hoeffding_bound(n: usize, tau: f64) -> f64 {
    2.0 * (-2.0 * tau * tau * n as f64).exp()
}

/// Multiplicative Chernoff bound `exp(-n p ((1 + g) ln(1 + g) - g))` on
/// `Pr[sum >= (1 + g) n p]`.
pub fn chernoff_mult_bound(n: usize, p: f64, gamma: f64) -> f64 {
    (-(n as f64) * p * ((1.0 + gamma) * gamma.ln_1p() - gamma)).exp()
}

/// McDiarmid bound `exp(-2 alpha^2 / (n c^2))` for a function with bounded
/// differences `c`.
pub fn mcdiarmid_bound(n: usize, c: f64, alpha: f64) -> f64 {
    (-2.0 * alpha * alpha / (n as f64 * c * c)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::binomial_tail_ge;

    #[test]
    fn hoeffding_values() {
        assert!((hoeffding_bound(1000, 0.05) / (2.0 * (-5.0f64).exp()) - 1.0).abs() < 1e-14);
        assert!((hoeffding_bound(1000, 0.05) - 0.013475).abs() < 1e-6);
        assert_eq!(hoeffding_bound(10, 0.0), 2.0);
        let mut last = 2.0;
        for n in (100..10_000).step_by(100) {
            let b = hoeffding_bound(n, 0.05);
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn chernoff_values() {
        assert!((chernoff_mult_bound(100, 0.5, 1e-9) - 1.0).abs() < 1e-12);
        let b = chernoff_mult_bound(100, 0.5, 0.2);
        assert!((b - (-50.0 * (1.2 * 1.2f64.ln() - 0.2)).exp()).abs() < 1e-15);
        assert!((b - 0.3909).abs() < 1e-4);
        assert!(b >= binomial_tail_ge(100, 0.5, 60).unwrap());
        for (n, p, g) in [(50usize, 0.1, 1.0), (1000, 0.3, 0.1), (200, 0.05, 2.5)] {
            let c = ((1.0 + g) * n as f64 * p).ceil() as u64;
            assert!(chernoff_mult_bound(n, p, g) >= binomial_tail_ge(n as u64, p, c).unwrap());
        }
    }

    #[test]
    fn mcdiarmid_values() {
        assert_eq!(mcdiarmid_bound(100, 0.1, 0.0), 1.0);
        assert!((mcdiarmid_bound(100, 0.1, 0.5) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((mcdiarmid_bound(37, 0.3, 1.1) - mcdiarmid_bound(37, 0.6, 2.2)).abs() < 1e-15);
        // Bounded differences 1/n on a binomial mean: Hoeffding's one-sided tail.
        let n = 200usize;
        assert!(
            mcdiarmid_bound(n, 1.0 / n as f64, 0.15)
                >= binomial_tail_ge(n as u64, 0.5, 130).unwrap()
        );
    }
}
