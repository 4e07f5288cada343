use core::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use slot::Slot;

#[cfg(target_has_atomic = "64")]
mod slot {
    use core::sync::atomic::{AtomicU64, Ordering};

    pub type Slot = AtomicU64;

    pub const fn zero() -> Slot {
        AtomicU64::new(0)
    }

    pub fn add(s: &Slot, by: u64) {
        s.fetch_add(by, Ordering::Relaxed);
    }

    pub fn get(s: &Slot) -> u64 {
        s.load(Ordering::Relaxed)
    }
}

/// Targets without 64-bit atomics count in 32 bits and wrap past `u32::MAX`.
#[cfg(not(target_has_atomic = "64"))]
mod slot {
    use core::sync::atomic::{AtomicU32, Ordering};

    pub type Slot = AtomicU32;

    pub const fn zero() -> Slot {
        AtomicU32::new(0)
    }

    pub fn add(s: &Slot, by: u64) {
        s.fetch_add(by as u32, Ordering::Relaxed);
    }

    pub fn get(s: &Slot) -> u64 {
        u64::from(s.load(Ordering::Relaxed))
    }
}

/// Thread-safe tally of the expensive primitives an entity performs.
///
/// Every modular multiplication, modular exponentiation, modular inversion
/// and hash invocation made through this crate's API is recorded against the
/// counter passed in by the caller. A disabled counter ignores increments.
#[derive(Debug)]
pub struct OpCounter {
    enabled: bool,
    mod_mul: Slot,
    mod_exp: Slot,
    mod_inv: Slot,
    hash: Slot,
}

impl Default for OpCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl OpCounter {
    pub const fn new() -> Self {
        Self {
            enabled: true,
            mod_mul: slot::zero(),
            mod_exp: slot::zero(),
            mod_inv: slot::zero(),
            hash: slot::zero(),
        }
    }

    pub const fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::new()
        }
    }

    #[inline]
    fn bump(&self, s: &Slot, by: u64) {
        if self.enabled {
            slot::add(s, by);
        }
    }

    pub fn mul(&self, by: u64) {
        self.bump(&self.mod_mul, by);
    }

    pub fn exp(&self) {
        self.bump(&self.mod_exp, 1);
    }

    pub fn inv(&self) {
        self.bump(&self.mod_inv, 1);
    }

    pub fn hash(&self) {
        self.bump(&self.hash, 1);
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            mod_mul: slot::get(&self.mod_mul),
            mod_exp: slot::get(&self.mod_exp),
            mod_inv: slot::get(&self.mod_inv),
            hash: slot::get(&self.hash),
        }
    }
}

/// Plain snapshot of an [`OpCounter`].
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub mod_mul: u64,
    pub mod_exp: u64,
    pub mod_inv: u64,
    pub hash: u64,
}

impl OpCounts {
    /// Cost in modular-multiplication equivalents, assuming square-and-multiply
    /// exponentiation with `exp_bits`-bit exponents and an inversion costing
    /// about as much as one exponentiation's worth of multiplications.
    pub fn mul_equivalents(&self, exp_bits: u64) -> u64 {
        let per_exp = exp_bits + exp_bits / 2;
        self.mod_mul + (self.mod_exp + self.mod_inv) * per_exp
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            mod_mul: self.mod_mul + rhs.mod_mul,
            mod_exp: self.mod_exp + rhs.mod_exp,
            mod_inv: self.mod_inv + rhs.mod_inv,
            hash: self.hash + rhs.hash,
        }
    }
}

impl Sub for OpCounts {
    type Output = OpCounts;

    fn sub(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            mod_mul: self.mod_mul - rhs.mod_mul,
            mod_exp: self.mod_exp - rhs.mod_exp,
            mod_inv: self.mod_inv - rhs.mod_inv,
            hash: self.hash - rhs.hash,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_counter_stays_zero() {
        let ops = OpCounter::disabled();
        ops.mul(3);
        ops.exp();
        ops.hash();
        assert_eq!(ops.snapshot(), OpCounts::default());
    }

    #[test]
    fn snapshots_subtract() {
        let ops = OpCounter::new();
        ops.mul(2);
        let before = ops.snapshot();
        ops.mul(5);
        ops.exp();
        let delta = ops.snapshot() - before;
        assert_eq!(delta.mod_mul, 5);
        assert_eq!(delta.mod_exp, 1);
    }
}
