use std::sync::Arc;

use serde::Serialize;

use super::{Analyst, AnalystError, Exchange};
use crate::domain::rng::mix64;
use crate::domain::{Point, Query, QueryId, Universe};

/// How aggregated membership counts are mapped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Renormalization {
    /// `(f - min f) / (max f - min f)`.
    MinMax,
    /// `clamp(1/2 + (f - median f) / width, 0, 1)`.
    Clamped { width: f64 },
}

/// One round of random subset probes followed by a single adaptive query.
///
/// Each probe is the indicator of a uniformly random subset of the universe.
/// Probes whose answers exceed the chosen quantile are kept; the final query
/// counts, for every point, how many kept probes contain it, and renormalizes
/// those counts into `[0, 1]`. Points of the sample tend to sit in probes with
/// high answers, so the final query concentrates on them.
#[derive(Debug, Clone)]
pub struct ReconstructionProbe {
    universe: Universe,
    size: usize,
    m_probe: usize,
    quantile: f64,
    renormalization: Renormalization,
    seed: u64,
    probes: Vec<Arc<[u64]>>,
}

impl ReconstructionProbe {
    pub fn new(
        universe: Universe,
        m_probe: usize,
        quantile: f64,
        renormalization: Renormalization,
        seed: u64,
    ) -> Result<Self, AnalystError> {
        if !universe.is_discrete() {
            return Err(AnalystError::WrongUniverse {
                strategy: "reconstruction-probe",
                universe,
            });
        }
        let size = universe.tabulation_len()?;
        if size < 2 {
            return Err(AnalystError::UniverseTooSmall {
                size: size as u64,
                need: 2,
            });
        }
        if !(0.0..1.0).contains(&quantile) {
            return Err(AnalystError::InvalidParameter {
                field: "quantile",
                reason: format!("must lie in [0, 1), got {quantile}"),
            });
        }
        if let Renormalization::Clamped { width } = renormalization {
            if !(width > 0.0 && width.is_finite()) {
                return Err(AnalystError::InvalidParameter {
                    field: "width",
                    reason: format!("must be positive, got {width}"),
                });
            }
        }
        Ok(ReconstructionProbe {
            universe,
            size,
            m_probe,
            quantile,
            renormalization,
            seed,
            probes: Vec::new(),
        })
    }

    /// Whether the universe is large enough (`|X| >= 2n`) for membership to be
    /// hidden from a data-independent query.
    pub fn attack_regime(universe: Universe, n: usize) -> bool {
        universe.size().is_some_and(|s| s >= 2 * n as u64)
    }

    fn probe_bits(&self, i: usize) -> Arc<[u64]> {
        let words = self.size.div_ceil(64);
        let key = mix64(self.seed ^ mix64(i as u64 ^ 0xA5A5_0000));
        let mut bits: Vec<u64> = (0..words).map(|w| mix64(key ^ mix64(w as u64))).collect();
        if self.size % 64 != 0 {
            bits[words - 1] &= (1u64 << (self.size % 64)) - 1;
        }
        bits.into()
    }

    fn final_query(&self, history: &[Exchange]) -> Query {
        let answers: Vec<f64> = history[..self.m_probe]
            .iter()
            .filter_map(|e| e.answer.value())
            .collect();
        let cut = quantile(&answers, self.quantile);
        let mut counts = vec![0u32; self.size];
        for (bits, e) in self.probes.iter().zip(history) {
            if !e.answer.value().is_some_and(|a| a > cut) {
                continue;
            }
            for (w, &word) in bits.iter().enumerate() {
                let mut word = word;
                while word != 0 {
                    counts[w * 64 + word.trailing_zeros() as usize] += 1;
                    word &= word - 1;
                }
            }
        }
        let f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let table = match self.renormalization {
            Renormalization::MinMax => {
                let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    f.iter().map(|v| (v - lo) / (hi - lo)).collect()
                } else {
                    vec![0.5; self.size]
                }
            }
            Renormalization::Clamped { width } => {
                let mid = quantile(&f, 0.5);
                f.iter()
                    .map(|v| (0.5 + (v - mid) / width).clamp(0.0, 1.0))
                    .collect()
            }
        };
        Query::tabulated(QueryId(self.m_probe as u64), self.universe, table)
            .expect("renormalized into [0, 1]")
    }
}

/// Linear-interpolated sample quantile; 0.5 for an empty slice.
fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.5;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

impl Analyst for ReconstructionProbe {
    fn next_query(&mut self, history: &[Exchange]) -> Option<Query> {
        let i = history.len();
        if i < self.m_probe {
            let bits = self.probe_bits(i);
            self.probes.push(bits.clone());
            return Some(Query::evaluable(
                QueryId(i as u64),
                self.universe,
                move |p| match p {
                    Point::Discrete(x) => (bits[(x / 64) as usize] >> (x % 64) & 1) as f64,
                    Point::Real(_) => f64::NAN,
                },
            ));
        }
        (i == self.m_probe).then(|| self.final_query(history))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Answer;

    #[test]
    fn quantiles() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile(&[], 0.5), 0.5);
    }

    #[test]
    fn no_probes_gives_constant_final_query() {
        let u = Universe::indexed(8).unwrap();
        let mut a = ReconstructionProbe::new(u, 0, 0.5, Renormalization::MinMax, 1).unwrap();
        let q = a.next_query(&[]).unwrap();
        assert_eq!(&*q.table().unwrap(), &[0.5; 8]);
        let hist = [Exchange {
            query: q,
            answer: Answer::Value(0.5),
        }];
        assert!(a.next_query(&hist).is_none());
    }

    #[test]
    fn final_query_favors_points_in_high_probes() {
        let u = Universe::indexed(130).unwrap();
        let mut a = ReconstructionProbe::new(u, 200, 0.5, Renormalization::MinMax, 9).unwrap();
        let mut hist = Vec::new();
        while let Some(q) = a.next_query(&hist) {
            if hist.len() == 200 {
                let t = q.table().unwrap();
                assert!(t[129] > 0.99 && t.iter().all(|v| (0.0..=1.0).contains(v)));
                break;
            }
            // Answer as if the sample were the single point 129.
            let v = q.eval(Point::Discrete(129)).unwrap();
            hist.push(Exchange {
                query: q,
                answer: Answer::Value(v),
            });
        }
        assert_eq!(hist.len(), 200);
    }

    #[test]
    fn probe_bits_stay_inside_universe() {
        let u = Universe::indexed(70).unwrap();
        let a = ReconstructionProbe::new(u, 5, 0.5, Renormalization::MinMax, 3).unwrap();
        let bits = a.probe_bits(0);
        assert_eq!(bits.len(), 2);
        assert_eq!(bits[1] >> 6, 0);
    }

    #[test]
    fn rejects_tiny_or_continuous_universes() {
        assert!(matches!(
            ReconstructionProbe::new(
                Universe::indexed(1).unwrap(),
                5,
                0.5,
                Renormalization::MinMax,
                1
            ),
            Err(AnalystError::UniverseTooSmall { .. })
        ));
        assert!(ReconstructionProbe::new(
            Universe::real_vectors(2).unwrap(),
            5,
            0.5,
            Renormalization::MinMax,
            1
        )
        .is_err());
        assert!(ReconstructionProbe::attack_regime(
            Universe::indexed(1024).unwrap(),
            100
        ));
        assert!(!ReconstructionProbe::attack_regime(
            Universe::indexed(150).unwrap(),
            100
        ));
    }
}
