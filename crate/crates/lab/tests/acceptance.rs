//! Acceptance criteria 1–12. Every test prints one pass/fail line to the
//! real stdout (bypassing the harness capture) and then asserts.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use plunge_lab::config::ExperimentConfig;
use plunge_lab::experiments::{self, Check, Outcome};

struct Run {
    outcome: Outcome,
    seconds: f64,
}

fn timed(f: impl FnOnce() -> Outcome) -> Run {
    let t = Instant::now();
    let outcome = f();
    Run {
        outcome,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1,
        ..ExperimentConfig::default()
    }
}

fn cutoffs() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig {
            r_list: vec![4, 8, 16],
            s_list: vec![1.5, 2.0],
            ..config()
        };
        timed(|| experiments::cutoffs(&cfg).expect("cutoffs run"))
    })
}

fn localize() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig {
            r: Some(4),
            s: Some(2.0),
            ..config()
        };
        timed(|| experiments::localize(&cfg).expect("localize run"))
    })
}

fn spectrum() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig {
            r_list: vec![4, 8, 16],
            epsilon: vec![0.05, 0.1, 0.25],
            ..config()
        };
        timed(|| experiments::spectrum(&cfg).expect("spectrum run"))
    })
}

fn plunge() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = ExperimentConfig {
            r_list: vec![4, 8, 16],
            s: Some(2.0),
            epsilon: vec![0.05],
            ..config()
        };
        timed(|| experiments::plunge(&cfg).expect("plunge run"))
    })
}

fn select(run: &Run, criterion: u32) -> Vec<&Check> {
    run.outcome.checks.iter().filter(|c| c.criterion == criterion).collect()
}

/// Prints the criterion line, returns whether every check passed.
fn verdict(criterion: u32, checks: &[&Check], seconds: f64, runtime_limit: Option<f64>) -> bool {
    assert!(!checks.is_empty(), "criterion {criterion} produced no checks");
    let mut pass = checks.iter().all(|c| c.pass);
    let mut detail: Vec<String> = checks
        .iter()
        .map(|c| format!("{}{} = {:.4e} (limit {:.3e})", if c.pass { "" } else { "FAILED " }, c.name, c.value, c.limit))
        .collect();
    if let Some(limit) = runtime_limit {
        let ok = seconds <= limit;
        pass &= ok;
        detail.push(format!("{}runtime {seconds:.1} s (limit {limit:.0} s)", if ok { "" } else { "FAILED " }));
    }
    let line = format!(
        "criterion {criterion:>2}: {} | {}\n",
        if pass { "PASS" } else { "FAIL" },
        detail.join("; ")
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    pass
}

#[test]
fn criterion_01_partition_of_unity() {
    let r = cutoffs();
    assert!(verdict(1, &select(r, 1), r.seconds, Some(10.0)));
}

#[test]
fn criterion_02_cutoff_supports() {
    let r = cutoffs();
    assert!(verdict(2, &select(r, 2), r.seconds, None));
}

#[test]
fn criterion_03_unit_norm_packets() {
    let cfg = ExperimentConfig {
        r: Some(8),
        s: Some(2.0),
        ..config()
    };
    let r = timed(|| experiments::sectors_run(&cfg).expect("sectors run"));
    assert!(verdict(3, &select(&r, 3), r.seconds, Some(60.0)));
}

#[test]
fn criterion_04_frame_bounds() {
    let cfg = ExperimentConfig {
        r_list: vec![4, 8, 16],
        s_list: vec![1.5, 2.0],
        trials: 64,
        grid_n: Some(256),
        ..config()
    };
    let r = timed(|| experiments::frame(&cfg).expect("frame run"));
    assert!(r.outcome.budget_failure.is_none(), "{:?}", r.outcome.budget_failure);
    assert!(verdict(4, &select(&r, 4), r.seconds, Some(600.0)));
}

#[test]
fn criterion_05_bessel_suite() {
    let r = localize();
    assert!(verdict(5, &select(r, 5), r.seconds, None));
}

#[test]
fn criterion_06_boundary_fourier_routes() {
    let r = localize();
    assert!(verdict(6, &select(r, 6), r.seconds, Some(120.0)));
}

#[test]
fn criterion_07_energy_concentration() {
    let cfg = ExperimentConfig {
        r_list: vec![4, 8],
        epsilon: vec![0.25, 0.1],
        s: Some(2.0),
        ..config()
    };
    let r = timed(|| experiments::energy(&cfg).expect("energy run"));
    assert!(r.outcome.budget_failure.is_none(), "{:?}", r.outcome.budget_failure);
    assert!(verdict(7, &select(&r, 7), r.seconds, Some(1200.0)));
}

#[test]
fn criterion_08_trace_identity() {
    let r = spectrum();
    let at8: Vec<&Check> = select(r, 8).into_iter().filter(|c| c.name.ends_with("R=8")).collect();
    assert!(verdict(8, &at8, r.seconds, Some(300.0)));
}

#[test]
fn criterion_09_weyl_trend() {
    let r = spectrum();
    assert!(verdict(9, &select(r, 9), r.seconds, None));
}

#[test]
fn criterion_10_plunge_scaling() {
    let r = plunge();
    assert!(verdict(10, &select(r, 10), r.seconds, None));
}

#[test]
fn criterion_11_counting_lemma() {
    let r = plunge();
    assert!(verdict(11, &select(r, 11), r.seconds, None));
}

#[test]
fn criterion_12_appendix_suite() {
    let a = cutoffs();
    let b = localize();
    let mut checks = select(a, 12);
    checks.extend(select(b, 12));
    assert!(verdict(12, &checks, a.seconds + b.seconds, None));
}
