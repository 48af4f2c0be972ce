//! Call-overhead benchmark: native and logic-defined methods called from
//! logic code, timed per call against an empty-loop calibration.

use std::fmt;
use std::time::Instant;

use crate::error::Error;
use crate::runtime::Runtime;
use crate::term::Term;

pub const BENCH_CLASS: &str = include_str!("../../scripts/bench.pl");

/// Batches timed per case; the reported figure is their median.
pub const BATCHES: usize = 5;

#[derive(Clone, Debug)]
pub struct Case {
    pub label: &'static str,
    pub class: &'static str,
    /// Median time per call in microseconds, calibration subtracted.
    pub micros: f64,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub iterations: u64,
    pub batches: usize,
    pub warmup_batches: usize,
    /// Median empty-loop time per iteration in microseconds.
    pub calibration: f64,
    pub cases: Vec<Case>,
}

impl BenchReport {
    pub fn case(&self, label: &str) -> Option<&Case> {
        self.cases.iter().find(|c| c.label == label)
    }

    /// Time of `label` relative to `base`.
    pub fn ratio(&self, label: &str, base: &str) -> Option<f64> {
        let (a, b) = (self.case(label)?, self.case(base)?);
        (b.micros > 0.0).then(|| a.micros / b.micros)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "iterations per batch: {}, batches: {} (+{} warm-up), calibration: {:.3} us",
            self.iterations, self.batches, self.warmup_batches, self.calibration
        )?;
        writeln!(f, "{:<34} {:<6} {:>9} {:>7}", "call", "class", "us", "ratio")?;
        let base = self.cases.first().map_or(0.0, |c| c.micros);
        for c in &self.cases {
            let ratio = if base > 0.0 { c.micros / base } else { f64::NAN };
            writeln!(f, "{:<34} {:<6} {:>9.3} {:>7.2}", c.label, c.class, c.micros, ratio)?;
        }
        Ok(())
    }
}

/// `(label, class, goal template)` for each case, `@R` standing for the
/// receiver.
const CASES: &[(&str, &str, &str)] = &[
    ("send(@R, normalise)", "area", "send(@R, normalise)"),
    ("send(@R, x, 1)", "area", "send(@R, x, 1)"),
    ("send(@R, noarg)", "bench", "send(@R, noarg)"),
    ("send(@R, intarg, 1)", "bench", "send(@R, intarg, 1)"),
    (
        "send(@R, termarg, hello(world))",
        "bench",
        "send(@R, termarg, hello(world))",
    ),
];

fn loop_goal(n: u64, body: &str) -> String {
    format!("(between(1, {n}, _), {body}, fail ; true)")
}

fn time_batch(rt: &mut Runtime, goal: &str) -> Result<f64, Error> {
    let start = Instant::now();
    if !rt.run(goal)? {
        return Err(Error::Usage(format!("benchmark goal failed: {goal}")));
    }
    Ok(start.elapsed().as_secs_f64() * 1e6)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Per-call costs in microseconds with the empty loop subtracted. Cases
/// are timed round-robin so that drift in machine load spreads evenly:
/// one discarded warm-up round, then `BATCHES` rounds, each timing a
/// calibration batch right before every case batch. Returns the median
/// calibration and, per case, the median of its differences.
fn measure(rt: &mut Runtime, bodies: &[String], iterations: u64) -> Result<(f64, Vec<f64>), Error> {
    let empty = loop_goal(iterations, "true");
    let goals: Vec<String> = bodies.iter().map(|b| loop_goal(iterations, b)).collect();
    let mut calib = Vec::new();
    let mut diffs = vec![Vec::with_capacity(BATCHES); goals.len()];
    for round in 0..=BATCHES {
        for (i, goal) in goals.iter().enumerate() {
            let c = time_batch(rt, &empty)? / iterations as f64;
            let t = time_batch(rt, goal)? / iterations as f64;
            if round > 0 {
                calib.push(c);
                diffs[i].push(t - c);
            }
        }
    }
    Ok((median(calib), diffs.into_iter().map(|d| median(d).max(0.0)).collect()))
}

pub fn run_benchmarks(rt: &mut Runtime, iterations: u64) -> Result<BenchReport, Error> {
    if iterations == 0 {
        return Err(Error::Usage("--iterations must be positive".into()));
    }
    if crate::compiler::lookup_class(rt, "bench".into())?.is_none() {
        rt.consult_named("<bench>", BENCH_CLASS)?;
    }
    let area = receiver(rt, "area(1, 2, 3, 4)")?;
    let bench = receiver(rt, "bench")?;
    let bodies: Vec<String> = CASES
        .iter()
        .map(|(_, class, template)| template.replace("@R", if *class == "area" { &area } else { &bench }))
        .collect();
    let (calibration, micros) = measure(rt, &bodies, iterations)?;
    rt.release_holds();
    Ok(BenchReport {
        iterations,
        batches: BATCHES,
        warmup_batches: 1,
        calibration,
        cases: CASES
            .iter()
            .zip(micros)
            .map(|((label, class, _), micros)| Case { label, class, micros })
            .collect(),
    })
}

/// Creates a receiver and returns its `@N` text.
fn receiver(rt: &mut Runtime, spec: &str) -> Result<String, Error> {
    let b = rt
        .once(&format!("new(X, {spec})"))?
        .ok_or_else(|| Error::Usage(format!("cannot create {spec}")))?;
    match &b[0].1 {
        Term::Obj(id) => Ok(id.to_string()),
        other => Err(Error::Usage(format!("unexpected receiver {other:?}"))),
    }
}
