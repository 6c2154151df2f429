use std::fmt;

/// Operation families that consume multiply-adds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MmaKind {
    Conv,
    Dense,
}

/// Running multiply-add tally, split by operation family.
///
/// Only multiply-adds are counted; activations, pooling, element-wise
/// products and additions are free.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MmaLedger {
    conv: u64,
    dense: u64,
}

impl MmaLedger {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, kind: MmaKind, count: u64) {
        match kind {
            MmaKind::Conv => self.conv += count,
            MmaKind::Dense => self.dense += count,
        }
    }

    pub fn count(&self, kind: MmaKind) -> u64 {
        match kind {
            MmaKind::Conv => self.conv,
            MmaKind::Dense => self.dense,
        }
    }

    pub fn total(&self) -> u64 {
        self.conv + self.dense
    }

    pub fn merge(&mut self, other: &MmaLedger) {
        self.conv += other.conv;
        self.dense += other.dense;
    }
}

impl fmt::Display for MmaLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "conv={} dense={} total={}",
            self.conv,
            self.dense,
            self.total()
        )
    }
}
