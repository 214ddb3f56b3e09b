use std::cell::Cell;
use std::ops::{Add, Mul, Sub};

use super::hamilton_expand;

thread_local! {
    static MULS: Cell<u64> = const { Cell::new(0) };
    static ADDS: Cell<u64> = const { Cell::new(0) };
}

/// Scalar that tallies every arithmetic operation applied to it.
#[derive(Debug, Clone, Copy)]
struct Counted(f64);

impl Add for Counted {
    type Output = Counted;
    fn add(self, rhs: Self) -> Self {
        ADDS.with(|c| c.set(c.get() + 1));
        Counted(self.0 + rhs.0)
    }
}

impl Sub for Counted {
    type Output = Counted;
    fn sub(self, rhs: Self) -> Self {
        ADDS.with(|c| c.set(c.get() + 1));
        Counted(self.0 - rhs.0)
    }
}

impl Mul for Counted {
    type Output = Counted;
    fn mul(self, rhs: Self) -> Self {
        MULS.with(|c| c.set(c.get() + 1));
        Counted(self.0 * rhs.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub mul: u64,
    /// Additions and subtractions.
    pub add: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.mul + self.add
    }
}

/// Runs the scalar Hamilton product body once on an instrumented scalar type
/// and reports how many real operations it performed.
pub fn hamilton_op_count() -> OpCount {
    MULS.with(|c| c.set(0));
    ADDS.with(|c| c.set(0));
    let x = [Counted(1.0), Counted(2.0), Counted(3.0), Counted(4.0)];
    let y = [Counted(5.0), Counted(6.0), Counted(7.0), Counted(8.0)];
    let out = hamilton_expand(x, y);
    debug_assert_eq!(out.map(|v| v.0), [-60.0, 12.0, 30.0, 24.0]);
    OpCount {
        mul: MULS.with(Cell::get),
        add: ADDS.with(Cell::get),
    }
}
