use std::sync::{Arc, OnceLock};

use super::{DomainError, Universe};

/// Storage for dataset points.
#[derive(Debug, Clone, PartialEq)]
pub enum Points {
    Discrete(Vec<u64>),
    /// Row-major `n x dim` matrix.
    Real(Vec<f64>),
}

/// A single universe element, borrowed from a dataset or a sampler buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point<'a> {
    Discrete(u64),
    Real(&'a [f64]),
}

impl Point<'_> {
    pub fn describe(&self) -> String {
        match self {
            Point::Discrete(x) => x.to_string(),
            Point::Real(v) if v.len() <= 4 => format!("{v:?}"),
            Point::Real(v) => format!("[{}, {}, .. {} coords]", v[0], v[1], v.len()),
        }
    }
}

/// An ordered multiset of `n >= 1` universe points.
///
/// Datasets are immutable; clones share the point storage. For discrete
/// universes a sorted histogram is built on first use, which makes empirical
/// means independent of point order and cheap when `n` is large.
#[derive(Debug, Clone)]
pub struct Dataset {
    universe: Universe,
    points: Arc<Points>,
    histogram: OnceLock<Arc<[(u64, u64)]>>,
}

impl Dataset {
    pub fn discrete(universe: Universe, points: Vec<u64>) -> Result<Self, DomainError> {
        if !universe.is_discrete() {
            return Err(DomainError::UniverseMismatch {
                expected: universe,
                found: Universe::Indexed { size: 1 },
            });
        }
        if points.is_empty() {
            return Err(DomainError::EmptyDataset);
        }
        if let Some(index) = points.iter().position(|&p| !universe.contains_discrete(p)) {
            return Err(DomainError::PointOutsideUniverse { index, universe });
        }
        Ok(Self::from_parts(universe, Points::Discrete(points)))
    }

    pub fn real(universe: Universe, values: Vec<f64>) -> Result<Self, DomainError> {
        let Universe::RealVectors { dim } = universe else {
            return Err(DomainError::UniverseMismatch {
                expected: universe,
                found: Universe::RealVectors { dim: 1 },
            });
        };
        let dim = dim as usize;
        if values.is_empty() {
            return Err(DomainError::EmptyDataset);
        }
        if values.len() % dim != 0 {
            return Err(DomainError::InvalidPopulation(format!(
                "{} values do not form rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DomainError::PointOutsideUniverse {
                index: i / dim,
                universe,
            });
        }
        Ok(Self::from_parts(universe, Points::Real(values)))
    }

    pub(crate) fn from_parts(universe: Universe, points: Points) -> Self {
        Dataset {
            universe,
            points: Arc::new(points),
            histogram: OnceLock::new(),
        }
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn len(&self) -> usize {
        match &*self.points {
            Points::Discrete(p) => p.len(),
            Points::Real(v) => v.len() / self.universe.dim(),
        }
    }

    /// Datasets always hold at least one point; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> Point<'_> {
        match &*self.points {
            Points::Discrete(p) => Point::Discrete(p[i]),
            Points::Real(v) => {
                let d = self.universe.dim();
                Point::Real(&v[i * d..(i + 1) * d])
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Point<'_>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// `(point, multiplicity)` pairs sorted by point. Discrete datasets only.
    pub fn histogram(&self) -> Option<&[(u64, u64)]> {
        let Points::Discrete(points) = &*self.points else {
            return None;
        };
        Some(
            self.histogram
                .get_or_init(|| build_histogram(&self.universe, points)),
        )
    }

    /// The adjacent dataset obtained by replacing point `i`.
    pub fn replace(&self, i: usize, point: Point<'_>) -> Result<Dataset, DomainError> {
        if i >= self.len() {
            return Err(DomainError::InvalidPopulation(format!(
                "index {i} out of range for dataset of size {}",
                self.len()
            )));
        }
        match (&*self.points, point) {
            (Points::Discrete(p), Point::Discrete(x)) => {
                let mut p = p.clone();
                p[i] = x;
                Dataset::discrete(self.universe, p)
            }
            (Points::Real(v), Point::Real(x)) if x.len() == self.universe.dim() => {
                let d = self.universe.dim();
                let mut v = v.clone();
                v[i * d..(i + 1) * d].copy_from_slice(x);
                Dataset::real(self.universe, v)
            }
            _ => Err(DomainError::PointOutsideUniverse {
                index: i,
                universe: self.universe,
            }),
        }
    }

    /// A dataset made of the points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset, DomainError> {
        if indices.is_empty() {
            return Err(DomainError::EmptyDataset);
        }
        let points = match &*self.points {
            Points::Discrete(p) => Points::Discrete(indices.iter().map(|&i| p[i]).collect()),
            Points::Real(v) => {
                let d = self.universe.dim();
                let mut out = Vec::with_capacity(indices.len() * d);
                for &i in indices {
                    out.extend_from_slice(&v[i * d..(i + 1) * d]);
                }
                Points::Real(out)
            }
        };
        Ok(Dataset::from_parts(self.universe, points))
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.universe == other.universe && self.points == other.points
    }
}

fn build_histogram(universe: &Universe, points: &[u64]) -> Arc<[(u64, u64)]> {
    let size = universe.size().unwrap_or(u64::MAX);
    if size <= (1 << 22) && size <= 8 * points.len() as u64 {
        let mut counts = vec![0u64; size as usize];
        for &p in points {
            counts[p as usize] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(x, c)| (x as u64, c))
            .collect()
    } else {
        let mut sorted = points.to_vec();
        sorted.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for x in sorted {
            match out.last_mut() {
                Some((last, c)) if *last == x => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_out_of_range() {
        let u = Universe::indexed(3).unwrap();
        assert_eq!(Dataset::discrete(u, vec![]), Err(DomainError::EmptyDataset));
        assert!(matches!(
            Dataset::discrete(u, vec![0, 3]),
            Err(DomainError::PointOutsideUniverse { index: 1, .. })
        ));
    }

    #[test]
    fn histogram_dense_and_sparse_paths_agree() {
        let small = Universe::indexed(4).unwrap();
        let d = Dataset::discrete(small, vec![3, 1, 1, 0, 3, 3]).unwrap();
        assert_eq!(d.histogram().unwrap(), &[(0, 1), (1, 2), (3, 3)]);

        let big = Universe::indexed(1 << 30).unwrap();
        let d = Dataset::discrete(big, vec![900, 5, 900, 7]).unwrap();
        assert_eq!(d.histogram().unwrap(), &[(5, 1), (7, 1), (900, 2)]);
    }

    #[test]
    fn replace_gives_adjacent_dataset() {
        let u = Universe::indexed(5).unwrap();
        let d = Dataset::discrete(u, vec![0, 1, 2]).unwrap();
        let e = d.replace(1, Point::Discrete(4)).unwrap();
        let differing = (0..3).filter(|&i| d.point(i) != e.point(i)).count();
        assert_eq!(differing, 1);

        let r = Universe::real_vectors(2).unwrap();
        let d = Dataset::real(r, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let e = d.replace(0, Point::Real(&[9.0, 9.0])).unwrap();
        assert_eq!(e.point(0), Point::Real(&[9.0, 9.0]));
        assert_eq!(e.point(1), d.point(1));
    }

    #[test]
    fn subset_keeps_order() {
        let u = Universe::indexed(10).unwrap();
        let d = Dataset::discrete(u, vec![9, 8, 7, 6]).unwrap();
        let s = d.subset(&[3, 0]).unwrap();
        assert_eq!(s.points(), &Points::Discrete(vec![6, 9]));
    }
}
