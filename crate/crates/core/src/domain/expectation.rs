use serde::Serialize;

use super::rng::stream_rng;
use super::{Dataset, DomainError, NeumaierSum, Point, Points, Population, Query, ENUMERATION_CAP};

/// Empirical average `E_S[q] = (1/n) sum_i q(x_i)`.
///
/// Discrete datasets are summed over their sorted histogram, so the result
/// does not depend on point order. All sums are compensated.
pub fn empirical_mean(data: &Dataset, query: &Query) -> Result<f64, DomainError> {
    query.check_universe(data.universe())?;
    let n = data.len() as f64;
    let mut acc = NeumaierSum::new();
    match data.points() {
        Points::Discrete(_) => {
            for &(x, count) in data.histogram().expect("discrete dataset") {
                acc.add(count as f64 * query.eval(Point::Discrete(x))?);
            }
        }
        Points::Real(_) => {
            for p in data.iter() {
                acc.add(query.eval(p)?);
            }
        }
    }
    Ok(acc.total() / n)
}

/// Exact population expectation `P[q]`.
///
/// Bernoulli products are enumerated point by point (no factorization is
/// assumed), which is allowed up to [`ENUMERATION_CAP`] points.
pub fn true_expectation(pop: &Population, query: &Query) -> Result<f64, DomainError> {
    query.check_universe(pop.universe())?;
    match pop {
        Population::Tabulated { weights, .. } => {
            let mut acc = NeumaierSum::new();
            for (x, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    acc.add(w * query.eval(Point::Discrete(x as u64))?);
                }
            }
            Ok(acc.total())
        }
        Population::BernoulliProduct { biases } => {
            let size = 1u64 << biases.len();
            if size > ENUMERATION_CAP {
                return Err(DomainError::EnumerationTooLarge {
                    size,
                    cap: ENUMERATION_CAP,
                });
            }
            let mut acc = NeumaierSum::new();
            for x in 0..size {
                let w: f64 = biases
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| if x >> i & 1 == 1 { b } else { 1.0 - b })
                    .product();
                if w > 0.0 {
                    acc.add(w * query.eval(Point::Discrete(x))?);
                }
            }
            Ok(acc.total())
        }
        Population::StandardGaussianProduct { .. } => Err(DomainError::GaussianNeedsMonteCarlo),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

pub const MIN_MC_TRIALS: usize = 100;

/// Sample mean of `q` over `trials` fresh draws from `pop`, with the standard
/// error `stdev / sqrt(trials)`.
pub fn monte_carlo_expectation(
    pop: &Population,
    query: &Query,
    trials: usize,
    seed: u64,
) -> Result<McEstimate, DomainError> {
    if trials < MIN_MC_TRIALS {
        return Err(DomainError::TooFewTrials {
            min: MIN_MC_TRIALS,
            got: trials,
        });
    }
    query.check_universe(pop.universe())?;
    let sampler = pop.sampler()?;
    let mut rng = stream_rng(seed, 0);
    let mut buf = vec![0.0; pop.universe().dim()];
    // Welford running mean and variance.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..trials {
        let v = if sampler.is_real() {
            sampler.fill_real(&mut rng, &mut buf);
            query.eval(Point::Real(&buf))?
        } else {
            query.eval(Point::Discrete(sampler.draw_discrete(&mut rng)))?
        };
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (trials - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / trials as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_dataset, QueryId, Universe};

    fn identity(u: Universe) -> Query {
        Query::tabulated(QueryId(0), u, vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn empirical_mean_of_identity() {
        let u = Universe::indexed(2).unwrap();
        let s = Dataset::discrete(u, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(empirical_mean(&s, &identity(u)).unwrap(), 0.5);
    }

    #[test]
    fn constant_query_mean_is_constant() {
        let u = Universe::indexed(7).unwrap();
        let s = Dataset::discrete(u, vec![0, 3, 6, 6, 2]).unwrap();
        let q = Query::constant(QueryId(0), u, 0.37).unwrap();
        assert!((empirical_mean(&s, &q).unwrap() - 0.37).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_sample_mean_matches_recount() {
        let u = Universe::indexed(2).unwrap();
        let pop = Population::tabulated(u, vec![0.7, 0.3]).unwrap();
        let s = sample_dataset(&pop, 1000, 11).unwrap();
        let Points::Discrete(p) = s.points() else {
            unreachable!()
        };
        let ones = p.iter().filter(|&&x| x == 1).count();
        assert_eq!(
            empirical_mean(&s, &identity(u)).unwrap(),
            ones as f64 / 1000.0
        );
    }

    #[test]
    fn universe_mismatch_is_an_error() {
        let u2 = Universe::indexed(2).unwrap();
        let u3 = Universe::indexed(3).unwrap();
        let s = Dataset::discrete(u3, vec![0, 1]).unwrap();
        assert!(matches!(
            empirical_mean(&s, &identity(u2)),
            Err(DomainError::UniverseMismatch { .. })
        ));
    }

    #[test]
    fn exact_expectations() {
        let u = Universe::indexed(2).unwrap();
        let pop = Population::tabulated(u, vec![0.7, 0.3]).unwrap();
        assert!((true_expectation(&pop, &identity(u)).unwrap() - 0.3).abs() < 1e-15);

        let u4 = Universe::indexed(4).unwrap();
        let q = Query::tabulated(QueryId(1), u4, vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        let uni = Population::uniform(u4).unwrap();
        assert!((true_expectation(&uni, &q).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_product_and_query_matches_enumeration() {
        let pop = Population::bernoulli_product(vec![0.5, 0.5]).unwrap();
        let and = Query::evaluable(QueryId(2), pop.universe(), |p| match p {
            Point::Discrete(x) => (x == 0b11) as u8 as f64,
            Point::Real(_) => 0.0,
        });
        assert!((true_expectation(&pop, &and).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn enumeration_and_gaussian_limits() {
        let pop = Population::bernoulli_product(vec![0.5; 21]).unwrap();
        let q = Query::constant(QueryId(0), pop.universe(), 0.5).unwrap();
        assert!(matches!(
            true_expectation(&pop, &q),
            Err(DomainError::EnumerationTooLarge { .. })
        ));
        let g = Population::standard_gaussian(2).unwrap();
        let q = Query::constant(QueryId(0), g.universe(), 0.5).unwrap();
        assert_eq!(
            true_expectation(&g, &q),
            Err(DomainError::GaussianNeedsMonteCarlo)
        );
    }

    #[test]
    fn monte_carlo_constant_and_coin() {
        let g = Population::standard_gaussian(4).unwrap();
        let q = Query::constant(QueryId(0), g.universe(), 0.5).unwrap();
        let est = monte_carlo_expectation(&g, &q, 100, 1).unwrap();
        assert_eq!(
            est,
            McEstimate {
                estimate: 0.5,
                std_error: 0.0
            }
        );
        assert!(monte_carlo_expectation(&g, &q, 99, 1).is_err());

        // Hoeffding: Pr[|mean - 1/2| > 0.002] <= 2 exp(-8) ~ 6.7e-4 at 1e6 draws.
        let u = Universe::indexed(2).unwrap();
        let coin = Population::tabulated(u, vec![0.5, 0.5]).unwrap();
        let est = monte_carlo_expectation(&coin, &identity(u), 1_000_000, 7).unwrap();
        assert!((est.estimate - 0.5).abs() <= 0.002);
        assert!((est.std_error - 0.0005).abs() < 1e-5);
    }
}
