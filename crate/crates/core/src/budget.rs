use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("analysis exceeded its time budget")]
pub struct TimedOut;

/// Cooperative deadline, checked between functions and between call sites.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(d: Duration) -> Self {
        Deadline(Instant::now().checked_add(d))
    }

    pub fn check(&self) -> Result<(), TimedOut> {
        match self.0 {
            Some(t) if Instant::now() >= t => Err(TimedOut),
            _ => Ok(()),
        }
    }
}
