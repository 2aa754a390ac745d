//! Runner for the acceptance checks in `tests/acceptance.rs`.
//!
//! Each check prints a single `PASS` or `FAIL` line with its name and a short
//! measurement, so the output of `cargo test` doubles as a report.

use std::time::{Duration, Instant};

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

#[derive(Debug, Default)]
pub struct Suite {
    results: Vec<(String, bool)>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `check`, prints its line and records the result. A panic inside
    /// the check counts as a failure.
    pub fn check(&mut self, name: &str, check: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|e| Verdict::new(false, format!("panicked: {}", panic_text(&e))));
        let elapsed = start.elapsed();
        let tag = if verdict.passed { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{}]", verdict.detail, fmt_duration(elapsed));
        self.results.push((name.to_owned(), verdict.passed));
    }

    pub fn failures(&self) -> Vec<&str> {
        self.results.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = e.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = e.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string payload".to_owned()
    }
}

fn fmt_duration(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

/// Times `f` and returns its value with the elapsed wall time.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}
