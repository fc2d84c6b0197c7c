//! Pieces shared by both synthesizers: budgets and candidate scoring.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// How long a search phase may run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Wall-clock limit.
    Seconds(f64),
    /// Limit on search iterations; runs are reproducible bit for bit.
    Iterations(u64),
}

impl Budget {
    /// Sum of two budgets of the same kind; otherwise `other`.
    pub fn combined(self, other: Budget) -> Budget {
        match (self, other) {
            (Budget::Seconds(a), Budget::Seconds(b)) => Budget::Seconds(a + b),
            (Budget::Iterations(a), Budget::Iterations(b)) => Budget::Iterations(a + b),
            (_, b) => b,
        }
    }

    pub fn start(self) -> BudgetClock {
        BudgetClock { budget: self, started: Instant::now(), used: 0, cancel: None }
    }
}

/// Tracks consumption of one [`Budget`].
#[derive(Debug, Clone)]
pub struct BudgetClock {
    budget: Budget,
    started: Instant,
    used: u64,
    cancel: Option<Arc<AtomicBool>>,
}

impl BudgetClock {
    /// Stops the clock early once `flag` is set.
    pub fn with_cancel(mut self, flag: Option<Arc<AtomicBool>>) -> Self {
        self.cancel = flag;
        self
    }

    /// Records one iteration.
    pub fn tick(&mut self) {
        self.used += 1;
    }

    pub fn iterations(&self) -> u64 {
        self.used
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|f| f.load(Ordering::Relaxed))
    }

    pub fn exhausted(&self) -> bool {
        self.cancelled()
            || match self.budget {
                Budget::Seconds(s) => self.started.elapsed().as_secs_f64() >= s,
                Budget::Iterations(n) => self.used >= n,
            }
    }

    /// Clock for a nested search: shares the deadline and cancel flag but
    /// keeps its own iteration count, which is unlimited.
    pub fn nested(&self) -> BudgetClock {
        let budget = match self.budget {
            Budget::Seconds(s) => Budget::Seconds((s - self.started.elapsed().as_secs_f64()).max(0.0)),
            Budget::Iterations(_) => Budget::Iterations(u64::MAX),
        };
        BudgetClock { budget, started: Instant::now(), used: 0, cancel: self.cancel.clone() }
    }
}

/// Score used when a candidate cannot be evaluated at all.
pub const FAULT_SCORE: f64 = f64::NEG_INFINITY;

/// Value of one candidate program. `score` is what the search maximizes;
/// the cloning score and win rate are reported when they were computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub score: f64,
    pub c_score: Option<f64>,
    pub psi: Option<f64>,
}

impl Evaluation {
    pub fn plain(score: f64) -> Self {
        Evaluation { score, c_score: None, psi: None }
    }

    pub fn fault() -> Self {
        Evaluation::plain(FAULT_SCORE)
    }
}
