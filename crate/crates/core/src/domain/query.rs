use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{DomainError, Point, Universe};

/// Identifier attached to a query by whoever builds it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QueryId(pub u64);

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

pub type QueryFn = dyn Fn(Point<'_>) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum QueryForm {
    Evaluable(Arc<QueryFn>),
    /// Dense value table indexed by the discrete point encoding.
    Tabulated(Arc<[f64]>),
}

/// A statistical query: a `[0, 1]`-valued function on the universe.
#[derive(Clone)]
pub struct Query {
    id: QueryId,
    universe: Universe,
    form: QueryForm,
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match &self.form {
            QueryForm::Evaluable(_) => "evaluable".to_string(),
            QueryForm::Tabulated(t) => format!("tabulated[{}]", t.len()),
        };
        f.debug_struct("Query")
            .field("id", &self.id)
            .field("universe", &self.universe)
            .field("form", &form)
            .finish()
    }
}

impl Query {
    /// Wraps a callback. Range is checked when the query is evaluated.
    pub fn evaluable<F>(id: QueryId, universe: Universe, f: F) -> Self
    where
        F: Fn(Point<'_>) -> f64 + Send + Sync + 'static,
    {
        Query {
            id,
            universe,
            form: QueryForm::Evaluable(Arc::new(f)),
        }
    }

    pub fn tabulated(
        id: QueryId,
        universe: Universe,
        values: Vec<f64>,
    ) -> Result<Self, DomainError> {
        let len = universe.tabulation_len()?;
        if values.len() != len {
            return Err(DomainError::TableLength {
                expected: len as u64,
                found: values.len(),
            });
        }
        if let Some((x, &v)) = values.iter().enumerate().find(|(_, v)| !in_unit(**v)) {
            return Err(DomainError::QueryOutOfRange {
                value: v,
                point: x.to_string(),
            });
        }
        Ok(Query {
            id,
            universe,
            form: QueryForm::Tabulated(values.into()),
        })
    }

    pub fn constant(id: QueryId, universe: Universe, c: f64) -> Result<Self, DomainError> {
        if !in_unit(c) {
            return Err(DomainError::QueryOutOfRange {
                value: c,
                point: "*".into(),
            });
        }
        Ok(Query::evaluable(id, universe, move |_| c))
    }

    pub fn id(&self) -> QueryId {
        self.id
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn form(&self) -> &QueryForm {
        &self.form
    }

    pub fn with_id(mut self, id: QueryId) -> Self {
        self.id = id;
        self
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.form, QueryForm::Tabulated(_))
    }

    /// Evaluates the query at `point`, rejecting values outside `[0, 1]`.
    #[inline]
    pub fn eval(&self, point: Point<'_>) -> Result<f64, DomainError> {
        let v = match (&self.form, point) {
            (QueryForm::Evaluable(f), p) => f(p),
            (QueryForm::Tabulated(t), Point::Discrete(x)) => t[x as usize],
            (QueryForm::Tabulated(_), Point::Real(_)) => {
                return Err(DomainError::NotTabulatable(self.universe))
            }
        };
        if in_unit(v) {
            Ok(v)
        } else {
            Err(DomainError::QueryOutOfRange {
                value: v,
                point: point.describe(),
            })
        }
    }

    /// Value table over the universe; borrowed when already tabulated.
    pub fn table(&self) -> Result<Cow<'_, [f64]>, DomainError> {
        match &self.form {
            QueryForm::Tabulated(t) => Ok(Cow::Borrowed(t)),
            QueryForm::Evaluable(_) => {
                let len = self.universe.tabulation_len()?;
                let mut out = Vec::with_capacity(len);
                for x in 0..len as u64 {
                    out.push(self.eval(Point::Discrete(x))?);
                }
                Ok(Cow::Owned(out))
            }
        }
    }

    /// The tabulated form of this query (same id).
    pub fn tabulate(&self) -> Result<Query, DomainError> {
        let values = self.table()?.into_owned();
        Query::tabulated(self.id, self.universe, values)
    }

    pub(crate) fn check_universe(&self, universe: Universe) -> Result<(), DomainError> {
        if self.universe != universe {
            return Err(DomainError::UniverseMismatch {
                expected: universe,
                found: self.universe,
            });
        }
        Ok(())
    }
}

#[inline]
fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}
