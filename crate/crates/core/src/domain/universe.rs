use serde::Serialize;

use super::DomainError;

/// Largest universe that may be tabulated (query tables, PMW weights).
pub const TABULATION_CAP: u64 = 1 << 20;

/// Largest universe over which exact expectations are computed by enumeration.
pub const ENUMERATION_CAP: u64 = 1 << 20;

/// The data universe `X`.
///
/// Discrete points are encoded as `u64`: an index for [`Universe::Indexed`],
/// and a bit mask for [`Universe::BitVectors`] (bit `i` is coordinate `i`).
/// Real vectors are stored flat inside the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Universe {
    Indexed { size: u64 },
    BitVectors { dim: u32 },
    RealVectors { dim: u32 },
}

impl Universe {
    pub fn indexed(size: u64) -> Result<Self, DomainError> {
        if size == 0 {
            return Err(DomainError::InvalidUniverse(
                "indexed universe needs size >= 1".into(),
            ));
        }
        Ok(Universe::Indexed { size })
    }

    pub fn bit_vectors(dim: u32) -> Result<Self, DomainError> {
        if dim == 0 || dim > 63 {
            return Err(DomainError::InvalidUniverse(format!(
                "bit-vector dimension must be in 1..=63, got {dim}"
            )));
        }
        Ok(Universe::BitVectors { dim })
    }

    pub fn real_vectors(dim: u32) -> Result<Self, DomainError> {
        if dim == 0 {
            return Err(DomainError::InvalidUniverse(
                "real-vector dimension must be >= 1".into(),
            ));
        }
        Ok(Universe::RealVectors { dim })
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, Universe::RealVectors { .. })
    }

    /// Number of points for discrete universes.
    pub fn size(&self) -> Option<u64> {
        match *self {
            Universe::Indexed { size } => Some(size),
            Universe::BitVectors { dim } => Some(1u64 << dim),
            Universe::RealVectors { .. } => None,
        }
    }

    /// Natural log of the universe size.
    pub fn ln_size(&self) -> Option<f64> {
        match *self {
            Universe::Indexed { size } => Some((size as f64).ln()),
            Universe::BitVectors { dim } => Some(dim as f64 * std::f64::consts::LN_2),
            Universe::RealVectors { .. } => None,
        }
    }

    /// Coordinate dimension (1 for indexed universes).
    pub fn dim(&self) -> usize {
        match *self {
            Universe::Indexed { .. } => 1,
            Universe::BitVectors { dim } | Universe::RealVectors { dim } => dim as usize,
        }
    }

    /// Length of a dense table over this universe.
    pub fn tabulation_len(&self) -> Result<usize, DomainError> {
        let size = self.size().ok_or(DomainError::NotTabulatable(*self))?;
        if size > TABULATION_CAP {
            return Err(DomainError::UniverseTooLarge {
                size,
                cap: TABULATION_CAP,
            });
        }
        Ok(size as usize)
    }

    pub fn contains_discrete(&self, point: u64) -> bool {
        match self.size() {
            Some(size) => point < size,
            None => false,
        }
    }

    /// Short label used in CSV headers and metadata.
    pub fn describe(&self) -> String {
        match *self {
            Universe::Indexed { size } => format!("indexed({size})"),
            Universe::BitVectors { dim } => format!("bits({dim})"),
            Universe::RealVectors { dim } => format!("reals({dim})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_vector_sizes() {
        let u = Universe::bit_vectors(10).unwrap();
        assert_eq!(u.size(), Some(1024));
        assert!((u.ln_size().unwrap() - 1024f64.ln()).abs() < 1e-12);
        assert_eq!(u.tabulation_len().unwrap(), 1024);
    }

    #[test]
    fn rejects_degenerate_universes() {
        assert!(Universe::indexed(0).is_err());
        assert!(Universe::bit_vectors(0).is_err());
        assert!(Universe::bit_vectors(64).is_err());
        assert!(Universe::real_vectors(0).is_err());
    }

    #[test]
    fn tabulation_cap() {
        assert!(Universe::bit_vectors(20).unwrap().tabulation_len().is_ok());
        assert!(matches!(
            Universe::bit_vectors(21).unwrap().tabulation_len(),
            Err(DomainError::UniverseTooLarge { .. })
        ));
        assert!(matches!(
            Universe::real_vectors(3).unwrap().tabulation_len(),
            Err(DomainError::NotTabulatable(_))
        ));
    }
}
