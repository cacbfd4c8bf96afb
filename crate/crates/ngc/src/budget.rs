//! Wall-clock budgets.

use std::time::{Duration, Instant};

use ngc_core::pipeline::Budget;

#[derive(Clone, Copy, Debug)]
pub struct Deadline {
    start: Instant,
    limit: Option<Duration>,
}

impl Deadline {
    pub fn new(limit: Option<Duration>) -> Self {
        Deadline { start: Instant::now(), limit }
    }

    pub fn unlimited() -> Self {
        Self::new(None)
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    pub fn limit(&self) -> Option<Duration> {
        self.limit
    }
}

impl Budget for Deadline {
    fn exhausted(&mut self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }
}

/// Parses `90s`, `15m`, `1h30m`, `24h` or a bare number of seconds.
pub fn parse_duration(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<f64>() {
        return Duration::try_from_secs_f64(secs).map_err(|e| e.to_string());
    }
    humantime::parse_duration(s).map_err(|e| format!("invalid duration `{s}`: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(parse_duration("90").unwrap(), Duration::from_secs(90));
        assert_eq!(parse_duration("1h 30m").unwrap(), Duration::from_secs(5400));
        assert!(parse_duration("soon").is_err());
    }

    #[test]
    fn zero_budget_is_exhausted() {
        assert!(Deadline::new(Some(Duration::ZERO)).exhausted());
        assert!(!Deadline::unlimited().exhausted());
    }
}
