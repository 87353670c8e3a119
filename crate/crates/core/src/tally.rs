//! Cost accounting shared by every instrumented operation.

use std::ops::{Add, AddAssign};

/// The cost measures tracked by a [`CostTally`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostMeasure {
    Comparisons,
    ScannedElements,
    WriteAccesses,
}

impl CostMeasure {
    pub const ALL: [CostMeasure; 3] = [
        CostMeasure::Comparisons,
        CostMeasure::ScannedElements,
        CostMeasure::WriteAccesses,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CostMeasure::Comparisons => "C",
            CostMeasure::ScannedElements => "SE",
            CostMeasure::WriteAccesses => "WA",
        }
    }
}

impl std::str::FromStr for CostMeasure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "C" | "c" | "comparisons" => Ok(CostMeasure::Comparisons),
            "SE" | "se" | "scanned" | "scanned-elements" => Ok(CostMeasure::ScannedElements),
            "WA" | "wa" | "writes" | "write-accesses" => Ok(CostMeasure::WriteAccesses),
            other => Err(format!("unknown cost measure '{other}'")),
        }
    }
}

/// Counters for one partitioning round or a whole selection run.
///
/// Scanned elements count one per array cell visited by a scanning index
/// (including its starting cell); they approximate memory transfers.
/// Tallies form a commutative monoid under [`CostTally::merge`] with
/// [`CostTally::ZERO`] as identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostTally {
    pub comparisons: u64,
    pub scanned_elements: u64,
    pub write_accesses: u64,
}

impl CostTally {
    pub const ZERO: CostTally = CostTally {
        comparisons: 0,
        scanned_elements: 0,
        write_accesses: 0,
    };

    pub fn merge(self, other: CostTally) -> CostTally {
        CostTally {
            comparisons: self.comparisons + other.comparisons,
            scanned_elements: self.scanned_elements + other.scanned_elements,
            write_accesses: self.write_accesses + other.write_accesses,
        }
    }

    pub fn get(&self, measure: CostMeasure) -> u64 {
        match measure {
            CostMeasure::Comparisons => self.comparisons,
            CostMeasure::ScannedElements => self.scanned_elements,
            CostMeasure::WriteAccesses => self.write_accesses,
        }
    }
}

impl Add for CostTally {
    type Output = CostTally;

    fn add(self, rhs: CostTally) -> CostTally {
        self.merge(rhs)
    }
}

impl AddAssign for CostTally {
    fn add_assign(&mut self, rhs: CostTally) {
        *self = self.merge(rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_identity() {
        let t = CostTally {
            comparisons: 3,
            scanned_elements: 5,
            write_accesses: 7,
        };
        assert_eq!(t.merge(CostTally::ZERO), t);
        assert_eq!(CostTally::ZERO.merge(t), t);
    }

    #[test]
    fn get_by_measure() {
        let t = CostTally {
            comparisons: 1,
            scanned_elements: 2,
            write_accesses: 3,
        };
        assert_eq!(t.get(CostMeasure::Comparisons), 1);
        assert_eq!(t.get(CostMeasure::ScannedElements), 2);
        assert_eq!(t.get(CostMeasure::WriteAccesses), 3);
    }
}
