use serde::Serialize;

use super::{compose_advanced, compose_basic, PrivacyError, PrivacyParams};

/// How a ledger turns its charges into a total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LedgerPolicy {
    Basic,
    /// Advanced composition with slack `delta_prime`; all charges must be equal.
    Advanced {
        delta_prime: f64,
    },
}

/// Ordered record of the privacy charges made by one session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetLedger {
    policy: LedgerPolicy,
    charges: Vec<PrivacyParams>,
}

impl BudgetLedger {
    pub fn new(policy: LedgerPolicy) -> Result<Self, PrivacyError> {
        if let LedgerPolicy::Advanced { delta_prime } = policy {
            if !(delta_prime > 0.0 && delta_prime < 1.0) {
                return Err(PrivacyError::InvalidParameter {
                    name: "delta_prime",
                    reason: format!("must lie in (0, 1), got {delta_prime}"),
                });
            }
        }
        Ok(BudgetLedger {
            policy,
            charges: Vec::new(),
        })
    }

    pub fn policy(&self) -> LedgerPolicy {
        self.policy
    }

    pub fn charges(&self) -> &[PrivacyParams] {
        &self.charges
    }

    pub fn charge(&mut self, p: PrivacyParams) -> Result<(), PrivacyError> {
        if let (LedgerPolicy::Advanced { .. }, Some(&first)) = (self.policy, self.charges.first()) {
            if first != p {
                return Err(PrivacyError::HeterogeneousCharges { first, other: p });
            }
        }
        self.charges.push(p);
        Ok(())
    }

    /// Composed guarantee of everything charged so far.
    pub fn total(&self) -> PrivacyParams {
        match (self.policy, self.charges.first()) {
            (LedgerPolicy::Basic, _) | (_, None) => compose_basic(&self.charges),
            (LedgerPolicy::Advanced { delta_prime }, Some(c)) => {
                compose_advanced(c.epsilon, c.delta, self.charges.len() as u32, delta_prime)
                    .expect("policy validated at construction")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_totals_are_monotone() {
        let mut l = BudgetLedger::new(LedgerPolicy::Basic).unwrap();
        let mut prev = l.total();
        for e in [0.1, 0.0, 0.3, 0.05] {
            l.charge(PrivacyParams::new(e, 1e-9).unwrap()).unwrap();
            let t = l.total();
            assert!(t.epsilon >= prev.epsilon && t.delta >= prev.delta);
            prev = t;
        }
        assert!((prev.epsilon - 0.45).abs() < 1e-15);
    }

    #[test]
    fn advanced_rejects_mixed_charges() {
        let mut l = BudgetLedger::new(LedgerPolicy::Advanced { delta_prime: 1e-6 }).unwrap();
        assert_eq!(l.total(), PrivacyParams::ZERO);
        let c = PrivacyParams::pure(0.1).unwrap();
        for _ in 0..10 {
            l.charge(c).unwrap();
        }
        assert_eq!(l.total(), compose_advanced(0.1, 0.0, 10, 1e-6).unwrap());
        assert!(l.charge(PrivacyParams::pure(0.2).unwrap()).is_err());
        assert!(BudgetLedger::new(LedgerPolicy::Advanced { delta_prime: 0.0 }).is_err());
    }
}
