//! Universes, populations, datasets and statistical queries.

mod dataset;
mod error;
mod expectation;
pub mod io;
mod population;
mod query;
pub mod rng;
mod sum;
mod transcript;
mod universe;

pub use dataset::{Dataset, Point, Points};
pub use error::DomainError;
pub use expectation::{empirical_mean, monte_carlo_expectation, true_expectation, McEstimate};
pub use population::{sample_dataset, sample_dataset_with, Population};
pub use query::{Query, QueryFn, QueryForm, QueryId};
pub use sum::NeumaierSum;
pub use transcript::{Answer, Transcript, TranscriptEntry};
pub use universe::{Universe, ENUMERATION_CAP, TABULATION_CAP};
