//! Exact binomial probabilities in log space, without gamma functions.

use super::VerifyError;
use crate::domain::NeumaierSum;

/// Largest `n` accepted by the exact binomial routines.
pub const BINOMIAL_CAP: u64 = 10_000_000;

/// `ln pmf(j)` up to a common additive constant, for `j = 0..=n`, built by
/// the ratio recurrence outward from the mode. Requires `0 < p < 1`.
fn log_weights(n: u64, p: f64) -> Vec<f64> {
    let n_usize = n as usize;
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let lr = (p / (1.0 - p)).ln();
    let mut lw = vec![0.0; n_usize + 1];
    for j in mode..n_usize {
        lw[j + 1] = lw[j] + ((n_usize - j) as f64).ln() - ((j + 1) as f64).ln() + lr;
    }
    for j in (1..=mode).rev() {
        lw[j - 1] = lw[j] + (j as f64).ln() - ((n_usize - j + 1) as f64).ln() - lr;
    }
    lw
}

fn check(n: u64, p: f64) -> Result<(), VerifyError> {
    if n == 0 {
        return Err(VerifyError::InvalidParameter {
            name: "n",
            reason: "must be >= 1".into(),
        });
    }
    if n > BINOMIAL_CAP {
        return Err(VerifyError::TooLarge {
            n,
            cap: BINOMIAL_CAP,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(VerifyError::InvalidParameter {
            name: "p",
            reason: format!("must lie in [0, 1], got {p}"),
        });
    }
    Ok(())
}

/// `E[f(J)]` for `J ~ Bin(n, p)` where `log_f(j)` is `ln f(j)` (`-inf` for zero).
fn expect_log(n: u64, p: f64, log_f: impl Fn(u64) -> f64) -> f64 {
    if p == 0.0 {
        return log_f(0).exp();
    }
    if p == 1.0 {
        return log_f(n).exp();
    }
    let lw = log_weights(n, p);
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut norm = NeumaierSum::new();
    let mut num = NeumaierSum::new();
    let mut terms: Vec<f64> = Vec::with_capacity(lw.len());
    for (j, w) in lw.iter().enumerate() {
        norm.add((w - top).exp());
        terms.push(w + log_f(j as u64));
    }
    let t_top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if t_top == f64::NEG_INFINITY {
        return 0.0;
    }
    for t in &terms {
        num.add((t - t_top).exp());
    }
    (num.total() / norm.total()) * (t_top - top).exp()
}

/// `Pr[Bin(n, p) >= c]`.
pub fn binomial_tail_ge(n: u64, p: f64, c: u64) -> Result<f64, VerifyError> {
    check(n, p)?;
    if c == 0 {
        return Ok(1.0);
    }
    Ok(expect_log(n, p, |j| if j >= c { 0.0 } else { f64::NEG_INFINITY }).min(1.0))
}

/// `Pr[Bin(n, p) > c]`.
pub fn binomial_tail_gt(n: u64, p: f64, c: u64) -> Result<f64, VerifyError> {
    if c >= n {
        check(n, p)?;
        return Ok(0.0);
    }
    binomial_tail_ge(n, p, c + 1)
}

/// `E[(J / n)^k]` for `J ~ Bin(n, p)`.
pub(crate) fn normalized_moment(n: u64, p: f64, k: u32) -> Result<f64, VerifyError> {
    check(n, p)?;
    let ln_n = (n as f64).ln();
    Ok(expect_log(n, p, |j| {
        if j == 0 {
            if k == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            k as f64 * ((j as f64).ln() - ln_n)
        }
    }))
}

/// Significance of the one-sided acceptance limit.
pub const ACCEPTANCE_ALPHA: f64 = 0.005;

/// Smallest count `c` with `Pr[Bin(trials, p0) > c] <= alpha`: the largest
/// number of events still consistent with rate `p0`. With `alpha = 0.005`
/// this is the upper end of a two-sided 99% exact interval.
pub fn acceptance_limit(trials: u64, p0: f64, alpha: f64) -> Result<u64, VerifyError> {
    if trials == 0 {
        return Ok(0);
    }
    check(trials, p0.clamp(0.0, 1.0))?;
    let p0 = p0.clamp(0.0, 1.0);
    // Tail probabilities are monotone in c; binary search.
    let (mut lo, mut hi) = (0u64, trials);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if binomial_tail_gt(trials, p0, mid)? <= alpha {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_pmf(n: u64, p: f64, j: u64) -> f64 {
        let mut c = 1.0;
        for i in 0..j {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)
    }

    #[test]
    fn tails_match_direct_sum() {
        for (n, p, c) in [
            (10u64, 0.3, 4u64),
            (100, 0.5, 60),
            (25, 0.9, 20),
            (7, 0.01, 1),
        ] {
            let direct: f64 = (c..=n).map(|j| direct_pmf(n, p, j)).sum();
            let got = binomial_tail_ge(n, p, c).unwrap();
            assert!(
                (got - direct).abs() <= 1e-12 * direct.max(1e-300),
                "{n} {p} {c}: {got} vs {direct}"
            );
        }
        assert_eq!(binomial_tail_ge(10, 0.0, 1).unwrap(), 0.0);
        assert_eq!(binomial_tail_ge(10, 1.0, 10).unwrap(), 1.0);
        assert_eq!(binomial_tail_gt(10, 0.4, 10).unwrap(), 0.0);
    }

    #[test]
    fn acceptance_limit_brackets_alpha() {
        for (trials, p0) in [(500u64, 0.05), (20, 0.1), (100, 0.3)] {
            let c = acceptance_limit(trials, p0, ACCEPTANCE_ALPHA).unwrap();
            assert!(binomial_tail_gt(trials, p0, c).unwrap() <= ACCEPTANCE_ALPHA);
            if c > 0 {
                assert!(binomial_tail_gt(trials, p0, c - 1).unwrap() > ACCEPTANCE_ALPHA);
            }
        }
        assert_eq!(acceptance_limit(50, 0.0, ACCEPTANCE_ALPHA).unwrap(), 0);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            binomial_tail_ge(BINOMIAL_CAP + 1, 0.5, 3),
            Err(VerifyError::TooLarge { .. })
        ));
    }
}
