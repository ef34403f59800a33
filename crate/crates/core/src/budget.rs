use crate::error::{Error, Result};

/// Cap on the number of entries an exhaustive enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    pub const DEFAULT: Budget = Budget(1 << 20);

    /// Fails when enumerating all strings of length `len` would exceed the budget.
    pub fn check_strings(&self, len: usize) -> Result<()> {
        let needed = if len >= 127 { u128::MAX } else { 1u128 << len };
        self.check(needed)
    }

    pub fn check(&self, needed: u128) -> Result<()> {
        if needed > self.0 as u128 {
            Err(Error::BudgetExceeded {
                needed,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}
