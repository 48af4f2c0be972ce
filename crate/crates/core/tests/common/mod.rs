//! Shared fixtures: the example scripts, scripted toplevel sessions and
//! term comparison helpers.
#![allow(dead_code)]

use std::collections::HashMap;

pub mod golden;
pub mod hostdata;
pub mod oracle;

use objlog::cli::repl;
use objlog::term::Term;
use objlog::{Options, Runtime};

pub const MY_BOX: &str = include_str!("../../scripts/my_box.pl");
pub const MY_NODE: &str = include_str!("../../scripts/my_node.pl");
pub const CHOICES: &str = include_str!("../../scripts/choices.pl");

pub fn runtime(eager: bool) -> Runtime {
    Runtime::new(Options {
        eager_classes: eager,
        capture_output: true,
        ..Options::default()
    })
}

/// Replaces every `@<digits>` with `@N` and every `_<digits>` variable
/// name with `_G`.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut prev = ' ';
    while let Some(c) = chars.next() {
        out.push(c);
        let fresh_var = c == '_' && !prev.is_alphanumeric() && prev != '_';
        if (c == '@' || fresh_var) && chars.peek().is_some_and(|d| d.is_ascii_digit()) {
            while chars.peek().is_some_and(|d| d.is_ascii_digit()) {
                chars.next();
            }
            out.push(if c == '@' { 'N' } else { 'G' });
        }
        prev = c;
    }
    out
}

/// Feeds `input` to the toplevel and returns the normalized transcript.
pub fn session(rt: &mut Runtime, input: &str) -> String {
    let mut out = Vec::new();
    repl(rt, &mut input.as_bytes(), &mut out);
    normalize(&String::from_utf8(out).expect("utf-8 transcript"))
}

pub struct Scenario {
    pub name: &'static str,
    pub sources: &'static [&'static str],
    pub input: &'static str,
    pub expected: &'static str,
}

pub fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "new box",
            sources: &[],
            input: "new(X, box(100,100)).\n",
            expected: "?- \nX = @N.\n\n?- ",
        },
        Scenario {
            name: "display box in picture",
            sources: &[],
            input: "new(P, picture),\n   send(P, display(box(100,50), point(20,20))).\n:scene\n",
            expected: "?- |    \nP = @N.\n\n?- box@N pos=(20,20) fill=nil\n?- ",
        },
        Scenario {
            name: "visible left edge",
            sources: &[],
            input: "new(P, picture),\n   get(P, visible, Visible),\n   get(Visible, x, X).\n",
            expected: "?- |    |    \nP = @N\nVisible = @N\nX = 0.\n\n?- ",
        },
        Scenario {
            name: "free",
            sources: &[],
            input: "new(X, box(1,1)), free(X), catch(send(X, width, 3), error(E, _), true).\n",
            expected: "?- \nX = @N\nE = freed_object(@N).\n\n?- ",
        },
        Scenario {
            name: "prolog object",
            sources: &[],
            input: "send(@prolog, writeln('Hello World')).\n",
            expected: "?- Hello World\n\ntrue.\n\n?- ",
        },
        Scenario {
            name: "button message",
            sources: &[],
            input: "new(B, button(hello,\n                 message(@prolog, call,\n                         writeln, 'Hello World'))).\n\
                    new(B, button(hi, message(@prolog, call, writeln, 'Hello World'))), pump_event(B, button_down, 5, 5).\n",
            expected: "?- |    |    \nB = @N.\n\n?- Hello World\n\nB = @N.\n\n?- ",
        },
        Scenario {
            name: "my_box events",
            sources: &[MY_BOX],
            input: "new(B, my_box(100,100)), pump_event(B, area_enter, 10, 10), get(B, fill_pattern, C), get(C, name, N).\n\
                    new(B, my_box(10,10)), pump_event(B, area_enter, 1, 1), pump_event(B, area_exit, 50, 50), get(B, fill_pattern, F).\n\
                    new(B, my_box(10,10)), pump_event(B, keyboard, 1, 1), get(B, fill_pattern, F).\n",
            expected: "?- \nB = @N\nC = @N\nN = red.\n\n?- \nB = @N\nF = @nil.\n\n?- \nB = @N\nF = @nil.\n\n?- ",
        },
        Scenario {
            name: "my_node tree",
            sources: &[MY_NODE],
            input: "new(T, my_node(node(a, d1, [node(b, d2, []), node(c, d3(x), [])]))), get(T, son_count, N), \
                    get(T, nth_son, 2, S), get(S, label, L), get(L, string, Name), get(S, data, D).\n\
                    new(T, my_node(node(root, payload(X, y), []))), get(T, data, D).\n",
            expected: "?- \nT = @N\nN = 2\nS = @N\nL = @N\nName = c\nD = d3(x).\n\n?- \nT = @N\nX = _G\nD = payload(_G,y).\n\n?- ",
        },
    ]
}

/// Loads the scenario's sources into a fresh runtime and runs its input.
pub fn run_scenario(sc: &Scenario, eager: bool) -> (Runtime, String) {
    let mut rt = runtime(eager);
    for src in sc.sources {
        let report = rt.consult_str(src).expect("example source parses");
        assert!(report.is_clean(), "{}: {:?}", sc.name, report.diagnostics);
    }
    let transcript = session(&mut rt, sc.input);
    (rt, transcript)
}

/// Structural equality up to a consistent renaming of variables.
pub fn alpha_equivalent(a: &Term, b: &Term) -> bool {
    fn walk(a: &Term, b: &Term, fwd: &mut HashMap<u32, u32>, back: &mut HashMap<u32, u32>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x,
            (Term::Compound(x), Term::Compound(y)) => {
                x.functor == y.functor
                    && x.args.len() == y.args.len()
                    && x.args.iter().zip(y.args.iter()).all(|(p, q)| walk(p, q, fwd, back))
            }
            (Term::Var(_), _) | (_, Term::Var(_)) => false,
            _ => a == b,
        }
    }
    walk(a, b, &mut HashMap::new(), &mut HashMap::new())
}

/// Solutions of the pure-flagged `pick` and the unflagged `pick_once` over a
/// `k`-element list, counted through `send`.
pub fn choice_counts(k: usize) -> (usize, usize) {
    let mut rt = runtime(false);
    rt.consult_str(CHOICES).expect("choices source");
    let items: Vec<String> = (1..=k).map(|i| format!("c{i}")).collect();
    let list = format!("[{}]", items.join(","));
    let count = |rt: &mut Runtime, sel: &str| {
        rt.all(&format!("new(O, chooser), send(O, {sel}, {list}, X)"))
            .expect("dispatch")
            .len()
    };
    (count(&mut rt, "pick"), count(&mut rt, "pick_once"))
}

/// Runs every scenario and returns the audit discrepancies found after it,
/// plus the number of live objects left once session holds are released
/// beyond the baseline of a fresh runtime.
pub fn audit_scenarios(eager: bool) -> Vec<(&'static str, usize, usize)> {
    let baseline = runtime(eager).kernel.live_count();
    scenarios()
        .iter()
        .map(|sc| {
            let (mut rt, _) = run_scenario(sc, eager);
            let report = rt.audit();
            let mut problems = report.discrepancies.len() + report.cycles.len();
            rt.release_holds();
            let after = rt.audit();
            problems += after.discrepancies.len() + after.cycles.len();
            (sc.name, problems, rt.kernel.live_count().saturating_sub(baseline))
        })
        .collect()
}
