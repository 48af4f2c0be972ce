//! A class with a `prolog`-typed slot and a seeded random workload over it.

use objlog::term::Term;
use objlog::Runtime;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const HOLDER: &str = r#"
:- pce_begin_class(holder, object).
variable(data, prolog, both, "Payload").
keep(H, T:prolog) :-> send(H, data, T).
ignore(_, _T:prolog) :-> true.
:- pce_end_class(holder).
"#;

pub fn setup() -> Runtime {
    let mut rt = super::runtime(false);
    let report = rt.consult_str(HOLDER).unwrap();
    assert!(report.is_clean(), "{:?}", report.diagnostics);
    rt
}

pub fn new_holder(rt: &mut Runtime) -> String {
    let b = rt.once("new(H, holder)").unwrap().unwrap();
    match &b[0].1 {
        Term::Obj(id) => id.to_string(),
        other => panic!("{other:?}"),
    }
}

/// Every record was made for a wrapper, every destroyed one was released
/// by a wrapper, and the live count is their difference.
pub fn conserved(rt: &Runtime) -> bool {
    let s = rt.stats();
    s.records_created == s.wrappers_recorded_total
        && s.records_destroyed == rt.kernel.host.wrappers_destroyed_recorded
        && s.records_live as u64 == s.records_created - s.records_destroyed
}

pub fn random_payload(rng: &mut StdRng, depth: u32) -> String {
    match rng.gen_range(0..if depth == 0 { 3 } else { 6 }) {
        0 => rng.gen_range(-5..50).to_string(),
        1 => ["a", "b", "'C d'", "[]"][rng.gen_range(0..4)].to_string(),
        2 => "_".to_string(),
        3 => format!("f({})", random_payload(rng, depth - 1)),
        4 => format!(
            "[{}, {}]",
            random_payload(rng, depth - 1),
            random_payload(rng, depth - 1)
        ),
        _ => format!(
            "g({}, {}, {})",
            random_payload(rng, depth - 1),
            random_payload(rng, depth - 1),
            random_payload(rng, depth - 1)
        ),
    }
}

/// Runs `steps` random create/store/ignore/read/free steps, then frees
/// every holder still alive.
pub fn random_cycles(seed: u64, steps: usize) -> Runtime {
    let mut rt = setup();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut holders: Vec<String> = Vec::new();
    for _ in 0..steps {
        match rng.gen_range(0..10) {
            0..=2 => holders.push(new_holder(&mut rt)),
            3..=5 if !holders.is_empty() => {
                let h = &holders[rng.gen_range(0..holders.len())];
                let p = random_payload(&mut rng, 3);
                rt.run(&format!("send({h}, keep, {p})")).unwrap();
            }
            6 if !holders.is_empty() => {
                let h = &holders[rng.gen_range(0..holders.len())];
                let p = random_payload(&mut rng, 3);
                rt.run(&format!("send({h}, ignore, {p})")).unwrap();
            }
            7 if !holders.is_empty() => {
                let h = &holders[rng.gen_range(0..holders.len())];
                rt.run(&format!("get({h}, data, _)")).unwrap();
            }
            _ if !holders.is_empty() => {
                let h = holders.swap_remove(rng.gen_range(0..holders.len()));
                rt.run(&format!("free({h})")).unwrap();
            }
            _ => {}
        }
    }
    for h in holders.drain(..) {
        rt.run(&format!("free({h})")).unwrap();
    }
    rt
}
