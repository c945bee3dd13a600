use std::sync::Arc;

use super::{Analyst, AnalystError, Exchange};
use crate::domain::rng::{mix64, unit_f64};
use crate::domain::{Query, QueryId, Universe};

/// An analyst with `r` rounds of adaptivity and `per_round` queries per round.
///
/// Round 0 asks random tabulated queries fixed by the seed. Each later query
/// averages the previous round's queries whose answers were above that
/// round's median, and mixes the average half and half with a fresh random
/// table. Round `k` therefore depends only on answers from rounds before `k`,
/// and the round boundaries sit at multiples of `per_round`.
#[derive(Debug, Clone)]
pub struct RoundStructured {
    universe: Universe,
    size: usize,
    r: u32,
    per_round: usize,
    seed: u64,
    tables: Vec<Arc<[f64]>>,
    /// Aggregate of the previous round, built when a round starts.
    carry: Option<Vec<f64>>,
}

impl RoundStructured {
    pub fn new(
        universe: Universe,
        r: u32,
        per_round: usize,
        seed: u64,
    ) -> Result<Self, AnalystError> {
        if !universe.is_discrete() {
            return Err(AnalystError::WrongUniverse {
                strategy: "round-structured",
                universe,
            });
        }
        if per_round == 0 {
            return Err(AnalystError::InvalidParameter {
                field: "per_round",
                reason: "must be >= 1".into(),
            });
        }
        let size = universe.tabulation_len()?;
        Ok(RoundStructured {
            universe,
            size,
            r,
            per_round,
            seed,
            tables: Vec::new(),
            carry: None,
        })
    }

    /// Index of the first query of every round after round 0.
    pub fn cut_indices(&self) -> Vec<usize> {
        (1..=self.r as usize).map(|k| k * self.per_round).collect()
    }

    fn fresh(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        let key = mix64(self.seed ^ mix64(i as u64 ^ 0x5EED_0000_0000));
        (0..self.size as u64).map(move |x| unit_f64(mix64(key ^ mix64(x))))
    }

    fn aggregate(&self, round: &[Exchange], tables: &[Arc<[f64]>]) -> Vec<f64> {
        let mut answers: Vec<f64> = round
            .iter()
            .map(|e| e.answer.value().unwrap_or(0.5))
            .collect();
        let values = answers.clone();
        answers.sort_by(f64::total_cmp);
        let mid = answers.len() / 2;
        let median = if answers.len() % 2 == 0 {
            (answers[mid - 1] + answers[mid]) / 2.0
        } else {
            answers[mid]
        };
        let picked: Vec<&Arc<[f64]>> = values
            .iter()
            .zip(tables)
            .filter(|(a, _)| **a > median)
            .map(|(_, t)| t)
            .collect();
        if picked.is_empty() {
            return vec![0.5; self.size];
        }
        let mut out = vec![0.0; self.size];
        for t in &picked {
            for (o, v) in out.iter_mut().zip(t.iter()) {
                *o += v;
            }
        }
        let k = picked.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        out
    }
}

impl Analyst for RoundStructured {
    fn next_query(&mut self, history: &[Exchange]) -> Option<Query> {
        let i = history.len();
        if i >= (self.r as usize + 1) * self.per_round {
            return None;
        }
        let round = i / self.per_round;
        let table: Vec<f64> = if round == 0 {
            self.fresh(i).collect()
        } else {
            if i % self.per_round == 0 {
                let start = i - self.per_round;
                self.carry = Some(self.aggregate(&history[start..i], &self.tables[start..i]));
            }
            let carry = self.carry.as_ref().expect("aggregate set at round start");
            carry
                .iter()
                .zip(self.fresh(i))
                .map(|(c, f)| 0.5 * c + 0.5 * f)
                .collect()
        };
        let table: Arc<[f64]> = table.into();
        self.tables.push(table.clone());
        Some(
            Query::tabulated(QueryId(i as u64), self.universe, table.to_vec())
                .expect("values in [0, 1]"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Answer;

    fn run(a: &mut RoundStructured, answer: impl Fn(usize) -> f64) -> Vec<Exchange> {
        let mut hist = Vec::new();
        while let Some(q) = a.next_query(&hist) {
            let v = answer(hist.len());
            hist.push(Exchange {
                query: q,
                answer: Answer::Value(v),
            });
        }
        hist
    }

    #[test]
    fn query_count_and_cuts() {
        let u = Universe::indexed(16).unwrap();
        let mut a = RoundStructured::new(u, 3, 10, 1).unwrap();
        assert_eq!(a.cut_indices(), vec![10, 20, 30]);
        assert_eq!(run(&mut a, |_| 0.5).len(), 40);
    }

    #[test]
    fn zero_rounds_depend_only_on_seed() {
        let u = Universe::indexed(16).unwrap();
        let tables = |answers: f64| {
            let mut a = RoundStructured::new(u, 0, 5, 7).unwrap();
            run(&mut a, |i| answers * i as f64 / 10.0)
                .iter()
                .map(|e| e.query.table().unwrap().into_owned())
                .collect::<Vec<_>>()
        };
        assert_eq!(tables(0.1), tables(0.9));
    }

    #[test]
    fn later_rounds_follow_answers() {
        let u = Universe::indexed(16).unwrap();
        let tables = |flip: bool| {
            let mut a = RoundStructured::new(u, 1, 4, 7).unwrap();
            run(&mut a, |i| if (i % 2 == 0) ^ flip { 0.9 } else { 0.1 })
                .iter()
                .map(|e| e.query.table().unwrap().into_owned())
                .collect::<Vec<_>>()
        };
        let (a, b) = (tables(false), tables(true));
        assert_eq!(a[..4], b[..4]);
        assert_ne!(a[4], b[4]);
    }
}
