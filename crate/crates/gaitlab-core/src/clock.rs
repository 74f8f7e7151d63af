/// Monotonic time source used to measure distance computation times.
///
/// The core crate has no access to an operating-system clock; callers inject
/// one. The std companion crate provides an `Instant`-backed implementation.
pub trait Clock {
    /// Monotonic timestamp in nanoseconds. Only differences are meaningful.
    fn now_ns(&self) -> u64;
}

/// Clock that always reads zero. Timing-derived metrics come out as 0.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ns(&self) -> u64 {
        0
    }
}
