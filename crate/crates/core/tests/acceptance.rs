//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::golden::{compiled, pair, published};
use common::hostdata::{conserved, new_holder, random_cycles, setup};
use common::oracle;
use objlog::cli::bench::run_benchmarks;
use objlog::syntax::parser::parse;
use objlog::term::Term;
use objlog::Runtime;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let scenarios = common::scenarios();
    for sc in &scenarios {
        let (_, got) = common::run_scenario(sc, false);
        ensure(got == sc.expected, || format!("{}: got {got:?}", sc.name))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{} transcripts in {elapsed:.2?}", scenarios.len()))
}

fn ac2() -> Outcome {
    let (head, body) = published();
    for eager in [false, true] {
        let clauses = compiled(eager);
        ensure(clauses.len() == 1, || format!("{} clauses", clauses.len()))?;
        let (h, b) = &clauses[0];
        ensure(common::alpha_equivalent(&pair(h, b), &pair(&head, &body)), || {
            format!("compiled {h:?} :- {b:?}")
        })?;
    }
    Ok("send_implementation/3 clause alpha-equivalent, eager and lazy".into())
}

fn stat_line(rt: &mut Runtime, key: &str) -> Option<u64> {
    let text = common::session(rt, ":stats\n");
    text.lines().find_map(|l| {
        l.trim_start_matches("?- ")
            .strip_prefix(key)?
            .strip_prefix(": ")?
            .trim()
            .parse()
            .ok()
    })
}

fn ac3() -> Outcome {
    let mut rt = setup();
    let h = new_holder(&mut rt);
    rt.run(&format!("send({h}, ignore, f(x, [1,2,3]))"))
        .map_err(|e| e.to_string())?;
    ensure(rt.stats().records_created == 0, || {
        "(a) ignored argument was recorded".into()
    })?;

    let payload = "f(a, [1, 2.5], g(X, Y, X))";
    rt.run(&format!("send({h}, keep, {payload})"))
        .map_err(|e| e.to_string())?;
    ensure(stat_line(&mut rt, "records-live") == Some(1), || {
        "(b) expected one live record".into()
    })?;
    let b = rt.once(&format!("get({h}, data, D)")).map_err(|e| e.to_string())?;
    let d = b.ok_or("(b) get failed")?.remove(0).1;
    ensure(common::alpha_equivalent(&d, &parse(payload).unwrap()), || {
        format!("(b) read back {d:?}")
    })?;

    rt.run(&format!("free({h})")).map_err(|e| e.to_string())?;
    ensure(stat_line(&mut rt, "records-live") == Some(0), || {
        "(c) record outlived its owner".into()
    })?;
    ensure(rt.stats().records_destroyed == 1, || "(c) record not destroyed".into())?;

    let mut rt = random_cycles(0x5eed, 10_000);
    let created = rt.stats().records_created;
    let live = stat_line(&mut rt, "records-live");
    let wrappers = stat_line(&mut rt, "wrappers-live");
    ensure(live == Some(0) && wrappers == Some(0), || {
        format!("(d) records-live {live:?}, wrappers-live {wrappers:?}")
    })?;
    ensure(conserved(&rt), || "(d) record counters do not balance".into())?;
    Ok(format!(
        "ignored 0, stored 1, freed 0 live; 10000 cycles created {created}, 0 live"
    ))
}

const BINDER: &str = r#"
:- pce_begin_class(binder, object).
unify(_, A:prolog, B:prolog) :-> A = B.
:- pce_end_class(binder).
"#;

fn shape(rng: &mut StdRng, depth: u32) -> String {
    match rng.gen_range(0..if depth == 0 { 4 } else { 7 }) {
        0 => rng.gen_range(-20..100).to_string(),
        1 => ["a", "b", "[]", "'x y'"][rng.gen_range(0..4)].to_string(),
        2 => "V".into(),
        3 => "_".into(),
        4 => format!("f({})", shape(rng, depth - 1)),
        5 => format!("g({}, {})", shape(rng, depth - 1), shape(rng, depth - 1)),
        _ => format!("[{}, {}]", shape(rng, depth - 1), shape(rng, depth - 1)),
    }
}

fn ac4() -> Outcome {
    let mut rt = common::runtime(false);
    rt.consult_str(BINDER).map_err(|e| e.to_string())?;
    let b = rt
        .once("new(O, binder)")
        .map_err(|e| e.to_string())?
        .ok_or("new failed")?;
    let Term::Obj(o) = &b[0].1 else {
        return Err("no object".into());
    };
    let mut rng = StdRng::seed_from_u64(0xb1d);
    for _ in 0..200 {
        let s = shape(&mut rng, 4);
        let s = if s.contains('V') { s } else { format!("t({s}, V)") };
        let ground = s.replace('V', "val(1)");
        let visible = format!("S = {s}, send({o}, unify, S, {ground}), V == val(1)");
        ensure(rt.run(&visible).map_err(|e| e.to_string())?, || {
            format!("not visible: {visible}")
        })?;
        let undone = format!("S = {s}, (send({o}, unify, S, {ground}), V == val(1), fail ; var(V))");
        ensure(rt.run(&undone).map_err(|e| e.to_string())?, || {
            format!("not undone: {undone}")
        })?;
    }
    ensure(rt.stats().wrappers_live == 0, || "wrappers left live".into())?;
    Ok("200 random shapes bound through send and undone on backtracking".into())
}

fn ac5() -> Outcome {
    let mut checked = 0;
    for eager in [false, true] {
        for (name, problems, leaked) in common::audit_scenarios(eager) {
            ensure(problems == 0, || format!("{name}: {problems} discrepancies"))?;
            ensure(leaked == 0, || format!("{name}: {leaked} objects survive release"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} scenario runs, zero discrepancies"))
}

fn ac6() -> Outcome {
    let mut seen = Vec::new();
    for k in [0, 1, 2, 5] {
        let (pure, once) = common::choice_counts(k);
        ensure(pure == k && once == k.min(1), || {
            format!("k={k}: pure {pure}, unflagged {once}")
        })?;
        seen.push(format!("k={k}:{pure}/{once}"));
    }
    Ok(seen.join(" "))
}

fn ac7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xa11ce);
    let tally = oracle::compare(&mut rng, 10_000, 12);
    ensure(tally.mismatches.is_empty(), || {
        format!("{} mismatches, first {}", tally.mismatches.len(), tally.mismatches[0])
    })?;

    let mut rt = common::runtime(false);
    rt.consult_str("count(0) :- !.\ncount(N) :- N1 is N - 1, count(N1).\n")
        .map_err(|e| e.to_string())?;
    let mut peak = |goal: &str| -> Result<usize, String> {
        rt.metrics.peak_depth = 0;
        ensure(rt.run(goal).map_err(|e| e.to_string())?, || format!("{goal} failed"))?;
        Ok(rt.metrics.peak_depth)
    };
    let (small, large) = (peak("count(1000)")?, peak("count(1000000)")?);
    ensure(small == large, || format!("depth {small} at 10^3, {large} at 10^6"))?;
    Ok(format!(
        "10000 unifications ({} unifiable), 0 mismatches; depth {large} at 10^3 and 10^6",
        tally.unifiable
    ))
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let mut rt = common::runtime(false);
    let r = run_benchmarks(&mut rt, 200_000).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let us = |label: &str| r.case(label).map(|c| c.micros).ok_or(format!("missing case {label}"));
    let native = us("send(@R, normalise)")?;
    let noarg = us("send(@R, noarg)")?;
    let intarg = us("send(@R, intarg, 1)")?;
    let termarg = us("send(@R, termarg, hello(world))")?;
    let ratio = noarg / native;
    let summary = format!(
        "normalise {native:.3} noarg {noarg:.3} intarg {intarg:.3} termarg {termarg:.3} us; noarg/normalise {ratio:.2}; {elapsed:.1?}"
    );
    ensure(native < noarg, || format!("native not cheaper: {summary}"))?;
    ensure(intarg >= noarg, || format!("intarg below noarg: {summary}"))?;
    ensure(termarg >= intarg, || format!("termarg below intarg: {summary}"))?;
    ensure((1.0..=8.0).contains(&ratio), || {
        format!("ratio out of [1, 8]: {summary}")
    })?;
    ensure(elapsed < Duration::from_secs(60), || format!("too slow: {summary}"))?;
    Ok(summary)
}

fn ac9() -> Outcome {
    let scenarios = common::scenarios();
    for sc in &scenarios {
        let (_, lazy) = common::run_scenario(sc, false);
        let (_, eager) = common::run_scenario(sc, true);
        ensure(lazy == eager, || {
            format!("{}: lazy {lazy:?} vs eager {eager:?}", sc.name)
        })?;
        ensure(lazy == sc.expected, || format!("{}: {lazy:?}", sc.name))?;
    }
    Ok(format!(
        "{} transcripts identical under eager and lazy realization",
        scenarios.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1", "example transcripts", ac1),
        ("AC2", "compiled clause golden", ac2),
        ("AC3", "host-data lifetime", ac3),
        ("AC4", "by-reference binding", ac4),
        ("AC5", "refcount audit", ac5),
        ("AC6", "non-deterministic dispatch", ac6),
        ("AC7", "unification oracle and last-call depth", ac7),
        ("AC8", "call-overhead ratios", ac8),
        ("AC9", "eager and lazy realization", ac9),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("{id} PASS {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {title}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
