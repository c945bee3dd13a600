use super::{Analyst, Exchange};
use crate::domain::rng::{mix64, unit_f64};
use crate::domain::{Point, Query, QueryId, Universe};

/// `m` pseudo-random queries fixed in advance by the seed. Query `i` maps a
/// point to a uniform value in `[0, 1)` derived by hashing.
#[derive(Debug, Clone)]
pub struct NonAdaptiveRandom {
    universe: Universe,
    m: usize,
    seed: u64,
}

impl NonAdaptiveRandom {
    pub fn new(universe: Universe, m: usize, seed: u64) -> Self {
        NonAdaptiveRandom { universe, m, seed }
    }

    pub fn query(&self, i: usize) -> Query {
        random_query(
            self.universe,
            QueryId(i as u64),
            mix64(self.seed ^ mix64(i as u64)),
        )
    }
}

impl Analyst for NonAdaptiveRandom {
    fn next_query(&mut self, history: &[Exchange]) -> Option<Query> {
        (history.len() < self.m).then(|| self.query(history.len()))
    }
}

pub(crate) fn point_hash(p: Point<'_>) -> u64 {
    match p {
        Point::Discrete(x) => x,
        Point::Real(v) => v.iter().fold(0x5151_u64, |h, c| mix64(h ^ c.to_bits())),
    }
}

/// Hash-based query with values uniform on `[0, 1)`.
pub(crate) fn random_query(universe: Universe, id: QueryId, key: u64) -> Query {
    Query::evaluable(id, universe, move |p| {
        unit_f64(mix64(key ^ mix64(point_hash(p))))
    })
}
