//! One PASS/FAIL line per acceptance criterion. Exits non-zero when any
//! criterion fails.

mod fixtures;
mod invariants;
mod oracles;
mod smoke;

use std::time::{Duration, Instant};

/// Outcome of one criterion: notes on success, reasons on failure.
pub type Check = Result<Vec<String>, Vec<String>>;

/// Collects individual comparisons so a criterion reports every miss.
#[derive(Default)]
pub struct Tally {
    pub misses: Vec<String>,
    pub checked: usize,
}

impl Tally {
    pub fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.checked += 1;
        if (got - want).is_nan() || (got - want).abs() > tol {
            self.misses.push(format!("{what}: got {got:.6}, want {want} ± {tol}"));
        }
    }

    pub fn within(&mut self, what: &str, got: f64, lo: f64, hi: f64) {
        self.checked += 1;
        if !(lo..=hi).contains(&got) {
            self.misses.push(format!("{what}: got {got:.3e}, want [{lo:e}, {hi:e}]"));
        }
    }

    pub fn truth(&mut self, what: &str, ok: bool) {
        self.checked += 1;
        if !ok {
            self.misses.push(what.to_string());
        }
    }

    pub fn finish(self, note: String) -> Check {
        if self.misses.is_empty() {
            Ok(vec![format!("{} comparisons; {note}", self.checked)])
        } else {
            Err(self.misses)
        }
    }
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            name: "fixture reproduction: main analysis (203 videos)",
            budget: Duration::from_secs(1),
            run: fixtures::main_analysis,
        },
        Criterion {
            name: "fixture reproduction: supplementary strategy (209 videos)",
            budget: Duration::from_secs(1),
            run: fixtures::supplementary,
        },
        Criterion {
            name: "distribution functions against independent oracles",
            budget: Duration::from_secs(60),
            run: oracles::run,
        },
        Criterion {
            name: "invariant suite",
            budget: Duration::from_secs(30),
            run: invariants::run,
        },
        Criterion {
            name: "pipeline smoke test",
            budget: Duration::from_secs(300),
            run: smoke::run,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(vec![format!("panicked: {msg}")])
        });
        let took = start.elapsed();
        if took > c.budget {
            let over = format!("took {:.2}s, limit {}s", took.as_secs_f64(), c.budget.as_secs());
            outcome = match outcome {
                Ok(_) => Err(vec![over]),
                Err(mut v) => {
                    v.push(over);
                    Err(v)
                }
            };
        }
        match outcome {
            Ok(notes) => {
                println!("PASS  {} ({:.2}s)", c.name, took.as_secs_f64());
                for n in notes {
                    println!("        {n}");
                }
            }
            Err(reasons) => {
                failed += 1;
                println!("FAIL  {} ({:.2}s)", c.name, took.as_secs_f64());
                for r in reasons {
                    println!("        {r}");
                }
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
