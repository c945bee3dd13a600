use super::{Analyst, AnalystError, Exchange};
use crate::domain::{Point, Query, QueryId, Universe};

/// Default truncation `B = 4 sqrt(ln(d n))`, at least 1.
pub fn default_truncation(d: u32, n: usize) -> f64 {
    let dn = (d as f64 * n as f64).max(std::f64::consts::E);
    4.0 * dn.ln().sqrt()
}

/// Overfitting attack on Gaussian data. Asks for every coordinate mean,
/// takes the sign of each answer, then asks for the mean of the projection
/// onto the normalized sign vector. Each query `phi` is issued as
/// `clamp(phi, -B, B) / (2B) + 1/2`.
#[derive(Debug, Clone)]
pub struct SignAggregation {
    universe: Universe,
    d: u32,
    b: f64,
    direction: Option<Vec<f64>>,
}

impl SignAggregation {
    pub fn new(universe: Universe, d: u32, b: f64) -> Result<Self, AnalystError> {
        if universe != (Universe::RealVectors { dim: d }) {
            return Err(AnalystError::WrongUniverse {
                strategy: "sign-aggregation",
                universe,
            });
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(AnalystError::InvalidParameter {
                field: "truncation",
                reason: format!("must be positive, got {b}"),
            });
        }
        Ok(SignAggregation {
            universe,
            d,
            b,
            direction: None,
        })
    }

    pub fn truncation(&self) -> f64 {
        self.b
    }

    /// The unit vector `u = s / sqrt(d)` once all coordinate answers are in.
    pub fn direction(&self) -> Option<&[f64]> {
        self.direction.as_deref()
    }

    /// Maps a rescaled answer back to the scale of the raw function.
    pub fn unscale(&self, answer: f64) -> f64 {
        (answer - 0.5) * 2.0 * self.b
    }

    fn rescale(b: f64, v: f64) -> f64 {
        v.clamp(-b, b) / (2.0 * b) + 0.5
    }
}

impl Analyst for SignAggregation {
    fn next_query(&mut self, history: &[Exchange]) -> Option<Query> {
        let d = self.d as usize;
        let b = self.b;
        let i = history.len();
        if i < d {
            return Some(Query::evaluable(
                QueryId(i as u64),
                self.universe,
                move |p| match p {
                    Point::Real(x) => Self::rescale(b, x[i]),
                    Point::Discrete(_) => f64::NAN,
                },
            ));
        }
        if i > d {
            return None;
        }
        let scale = 1.0 / (d as f64).sqrt();
        let u: Vec<f64> = history
            .iter()
            .map(|e| {
                // A Bottom or missing answer carries no sign information.
                let a = e.answer.value().unwrap_or(0.5);
                if a >= 0.5 {
                    scale
                } else {
                    -scale
                }
            })
            .collect();
        self.direction = Some(u.clone());
        Some(Query::evaluable(
            QueryId(d as u64),
            self.universe,
            move |p| match p {
                Point::Real(x) => Self::rescale(b, x.iter().zip(&u).map(|(a, w)| a * w).sum()),
                Point::Discrete(_) => f64::NAN,
            },
        ))
    }
}
