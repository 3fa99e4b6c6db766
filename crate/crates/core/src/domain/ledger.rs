use serde::{Deserialize, Serialize};

use super::EpisodeSource;
use crate::{Error, Result};

/// Episode accounting against a total data budget `N`.
///
/// Offline (teacher) and online (student) episodes draw from the same budget.
/// Evaluation episodes are measurement and are never charged here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    total_budget: u64,
    offline_used: u64,
    online_used: u64,
}

impl BudgetLedger {
    pub fn new(total_budget: u64) -> Self {
        Self {
            total_budget,
            offline_used: 0,
            online_used: 0,
        }
    }

    pub fn total_budget(&self) -> u64 {
        self.total_budget
    }

    pub fn offline_used(&self) -> u64 {
        self.offline_used
    }

    pub fn online_used(&self) -> u64 {
        self.online_used
    }

    pub fn used(&self) -> u64 {
        self.offline_used + self.online_used
    }

    pub fn remaining(&self) -> u64 {
        self.total_budget - self.used()
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == 0
    }

    /// Charges `n` episodes of the given source. On error the ledger is left
    /// untouched.
    pub fn consume(&mut self, source: EpisodeSource, n: u64) -> Result<()> {
        let remaining = self.remaining();
        if n > remaining {
            return Err(Error::BudgetExhausted {
                kind: source,
                requested: n,
                remaining,
            });
        }
        match source {
            EpisodeSource::TeacherOffline => self.offline_used += n,
            EpisodeSource::StudentOnline => self.online_used += n,
        }
        Ok(())
    }

    /// Value-returning form of [`BudgetLedger::consume`].
    pub fn consumed(mut self, source: EpisodeSource, n: u64) -> Result<Self> {
        self.consume(source, n)?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ledger(n: u64, off: u64, on: u64) -> BudgetLedger {
        BudgetLedger::new(n)
            .consumed(EpisodeSource::TeacherOffline, off)
            .unwrap()
            .consumed(EpisodeSource::StudentOnline, on)
            .unwrap()
    }

    #[test]
    fn consume_to_exact_exhaustion() {
        let l = ledger(10_000, 5000, 4999)
            .consumed(EpisodeSource::StudentOnline, 1)
            .unwrap();
        assert_eq!((l.offline_used(), l.online_used()), (5000, 5000));
        assert!(l.is_exhausted());
    }

    #[test]
    fn consume_past_budget_errors_and_leaves_ledger() {
        let mut l = ledger(5000, 5000, 0);
        let err = l.consume(EpisodeSource::StudentOnline, 1).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { remaining: 0, .. }));
        assert_eq!(l, ledger(5000, 5000, 0));
    }

    #[test]
    fn remaining_arithmetic() {
        assert_eq!(ledger(10_000, 5000, 0).remaining(), 5000);
        assert_eq!(ledger(15_000, 15_000, 0).remaining(), 0);
        assert_eq!(ledger(5000, 1000, 2500).remaining(), 1500);
    }

    #[test]
    fn sweep_budgets_are_accepted() {
        for n in [5000, 10_000, 15_000] {
            let l = ledger(n, n / 2, n / 2);
            assert_eq!(l.used(), n);
        }
    }

    proptest! {
        #[test]
        fn never_exceeds_budget(total in 0u64..200, ops in prop::collection::vec((any::<bool>(), 0u64..40), 0..40)) {
            let mut l = BudgetLedger::new(total);
            for (offline, n) in ops {
                let before = l;
                let src = if offline { EpisodeSource::TeacherOffline } else { EpisodeSource::StudentOnline };
                match l.consume(src, n) {
                    Ok(()) => {
                        prop_assert!(l.offline_used() >= before.offline_used());
                        prop_assert!(l.online_used() >= before.online_used());
                        prop_assert_eq!(l.used(), before.used() + n);
                    }
                    Err(_) => {
                        prop_assert!(before.used() + n > total);
                        prop_assert_eq!(l, before);
                    }
                }
                prop_assert!(l.used() <= total);
            }
        }
    }
}
