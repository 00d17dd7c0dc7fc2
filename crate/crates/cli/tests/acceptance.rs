//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criteria 4 and 8 cannot hold as stated. They are still run in full and
//! reported as FAIL; the gate only checks that they fail in the known way.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use montemix::suite::{self, Outcome, SuiteOptions};

const KNOWN_FAILURES: [u8; 2] = [4, 8];

fn limit(id: u8) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(10)),
        9 => Some(Duration::from_secs(120)),
        12 => Some(Duration::from_secs(600)),
        _ => None,
    }
}

/// The failure matches its analysis: L1-scale violations with none on the
/// half-L1 scale, and a non-monotone cut-stopped kernel beside a monotone
/// plain one.
fn fails_as_documented(o: &Outcome) -> bool {
    match o.id {
        4 => o.metrics["violations"].as_u64() > Some(0) && o.metrics["half_l1_violations"] == 0,
        8 => o.metrics.as_array().is_some_and(|rows| {
            rows.iter().all(|r| r["plain"]["monotone"] == true)
                && rows.iter().any(|r| r["cut_stopped"]["monotone"] == false)
        }),
        _ => false,
    }
}

const DETERMINISM_SPECS: &[&[&str]] = &[
    &["exact", "--model", "thorp_reverse", "--n", "6"],
    &[
        "exact",
        "--model",
        "lrev_monte",
        "--n",
        "6",
        "--L",
        "2",
        "--t",
        "12",
    ],
    &[
        "match", "--preset", "thorp", "--n", "8", "--trials", "200000", "--seed", "7",
    ],
    &[
        "match",
        "--preset",
        "lrev",
        "--model",
        "lrev_monte",
        "--n",
        "48",
        "--L",
        "3",
        "--C",
        "0.5",
        "--alpha",
        "0.5",
        "--trials",
        "20000",
    ],
    &[
        "lrev-kernel",
        "--n",
        "20",
        "--L",
        "4",
        "--kernel",
        "cut_stopped",
    ],
    &[
        "lrev-kernel",
        "--n",
        "32",
        "--L",
        "2",
        "--estimator",
        "first_cut",
        "--distances",
        "2,4,8",
        "--m-prime",
        "5",
        "--t-prime",
        "40",
        "--trials",
        "50000",
    ],
    &[
        "mc",
        "--model",
        "thorp_reverse",
        "--n",
        "64",
        "--t",
        "4",
        "--trials",
        "50000",
        "--seed",
        "3",
    ],
    &[
        "mc",
        "--model",
        "lrev_plain",
        "--n",
        "30",
        "--L",
        "3",
        "--t",
        "60",
        "--projection",
        "card_pair",
        "--cards",
        "0,7",
        "--trials",
        "50000",
    ],
    &[
        "mc",
        "--estimator",
        "retention",
        "--n",
        "32",
        "--L",
        "2",
        "--t",
        "10",
        "--trials",
        "100000",
    ],
    &[
        "mc",
        "--estimator",
        "sweep",
        "--model",
        "thorp_reverse",
        "--n",
        "0",
        "--param",
        "n",
        "--grid",
        "2,4,8,16,32",
        "--trials",
        "20000",
    ],
];

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut mismatched = Vec::new();
    for (k, spec) in DETERMINISM_SPECS.iter().enumerate() {
        let mut outputs = Vec::new();
        for workers in ["1", "4"] {
            let out = dir.path().join(format!("spec{k}_w{workers}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_montemix"))
                .args(*spec)
                .args(["--workers", workers, "--out", out.to_str().unwrap()])
                .output()
                .expect("binary runs")
                .status;
            outputs.push(status.success().then(|| std::fs::read(&out).ok()).flatten());
        }
        if outputs[0].is_none() || outputs[0] != outputs[1] {
            mismatched.push(spec[0..2].join(" "));
        }
    }
    let n = DETERMINISM_SPECS.len();
    if mismatched.is_empty() {
        (true, format!("{n} specs byte-identical at 1 and 4 workers"))
    } else {
        (
            false,
            format!("differing or failed: {}", mismatched.join("; ")),
        )
    }
}

fn main() -> ExitCode {
    let opts = SuiteOptions {
        seed: 2024,
        workers: 0,
    };
    let mut passed = 0;
    let mut unexpected = Vec::new();
    for id in 1..=suite::LAST {
        let start = Instant::now();
        let outcome = suite::run(id, opts);
        let elapsed = start.elapsed();
        let (pass, title, summary, as_documented) = match &outcome {
            Ok(o) => {
                let in_time = limit(id).is_none_or(|l| elapsed <= l);
                (
                    o.pass && in_time,
                    o.title,
                    o.summary.clone(),
                    fails_as_documented(o),
                )
            }
            Err(e) => (false, suite::title(id), format!("error: {e}"), false),
        };
        println!(
            "criterion {id:>2} {} {title} [{:.1}s]: {summary}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        if pass {
            passed += 1;
        }
        let known = KNOWN_FAILURES.contains(&id);
        if pass == known || (known && !as_documented) {
            unexpected.push(id);
        }
    }
    let start = Instant::now();
    let (pass, summary) = determinism();
    println!(
        "criterion 13 {} determinism [{:.1}s]: {summary}",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if pass {
        passed += 1;
    } else {
        unexpected.push(13);
    }
    println!("acceptance: {passed}/13 PASS; known failures {KNOWN_FAILURES:?}; unexpected {unexpected:?}");
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
