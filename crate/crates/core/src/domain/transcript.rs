use std::io::Write;

use serde::Serialize;

use super::io::format_float;
use super::{DomainError, QueryId};

/// An oracle's reply: a number, or `Bottom` from a sparse-vector test that
/// stayed below threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Answer {
    Value(f64),
    Bottom,
}

impl Answer {
    pub fn value(self) -> Option<f64> {
        match self {
            Answer::Value(v) => Some(v),
            Answer::Bottom => None,
        }
    }

    pub fn is_bottom(self) -> bool {
        matches!(self, Answer::Bottom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub query_id: QueryId,
    pub answer: Answer,
    /// Empirical mean of the query on the set the answer was computed from.
    pub empirical: f64,
    pub true_expectation: Option<f64>,
    pub note: String,
}

/// Ordered history of one oracle session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    capacity: usize,
    halted: bool,
    rounds_detected: u32,
}

pub const TRANSCRIPT_COLUMNS: [&str; 5] = [
    "query_id",
    "answer_or_bottom",
    "empirical_on_answering_set",
    "true_expectation",
    "mechanism_state_note",
];

impl Transcript {
    pub fn new(capacity: usize) -> Self {
        Transcript {
            entries: Vec::new(),
            capacity,
            halted: false,
            rounds_detected: 0,
        }
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [TranscriptEntry] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn rounds_detected(&self) -> u32 {
        self.rounds_detected
    }

    pub fn last(&self) -> Option<&TranscriptEntry> {
        self.entries.last()
    }

    pub fn push(&mut self, entry: TranscriptEntry) -> Result<(), DomainError> {
        if self.halted {
            return Err(DomainError::TranscriptClosed("session halted"));
        }
        if self.entries.len() >= self.capacity {
            return Err(DomainError::TranscriptClosed("query budget reached"));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn halt(&mut self) {
        self.halted = true;
    }

    pub fn record_round(&mut self) {
        self.rounds_detected += 1;
    }

    /// Writes the transcript as CSV (RFC 4180, LF line endings).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DomainError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let err = |e: csv::Error| DomainError::Csv(e.to_string());
        w.write_record(TRANSCRIPT_COLUMNS).map_err(err)?;
        for e in &self.entries {
            let answer = match e.answer {
                Answer::Value(v) => format_float(v),
                Answer::Bottom => "bottom".to_string(),
            };
            let truth = e.true_expectation.map(format_float).unwrap_or_default();
            w.write_record([
                e.query_id.to_string(),
                answer,
                format_float(e.empirical),
                truth,
                e.note.clone(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| DomainError::Csv(e.to_string()))
    }
}
