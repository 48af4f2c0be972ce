//! Command-line driver: batch goals, the interactive toplevel and the
//! benchmark harness.

pub mod bench;

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Parser;

use crate::engine::Exception;
use crate::error::Error;
use crate::runtime::{format_bindings, Options, Runtime};
use crate::term::Atom;
use crate::toolkit;

#[derive(Parser, Debug, Clone, Default)]
#[command(name = "objlog", version, about = "Logic engine with an object kernel")]
pub struct Cli {
    /// Source file to load (repeatable).
    #[arg(long = "consult", value_name = "FILE")]
    pub consult: Vec<PathBuf>,
    /// Run this goal once and exit: 0 on success, 1 on failure, 2 on error.
    #[arg(long, value_name = "TERM")]
    pub goal: Option<String>,
    /// Run the call-overhead benchmark.
    #[arg(long)]
    pub bench: bool,
    /// Calls per benchmark batch.
    #[arg(long, default_value_t = 100_000)]
    pub iterations: u64,
    #[arg(long)]
    pub occurs_check: bool,
    /// Print each call to standard error.
    #[arg(long)]
    pub trace: bool,
    /// Realize classes as soon as they are loaded instead of on first use.
    #[arg(long)]
    pub eager: bool,
}

/// Exit statuses for batch mode.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub fn run(cli: &Cli) -> i32 {
    let mut rt = Runtime::new(Options {
        occurs_check: cli.occurs_check,
        trace: cli.trace,
        eager_classes: cli.eager,
        capture_output: false,
    });
    for path in &cli.consult {
        match rt.consult_file(path) {
            Ok(report) => {
                for d in &report.diagnostics {
                    eprintln!("warning: {d}");
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_ERROR;
            }
        }
    }
    if cli.bench {
        return match bench::run_benchmarks(&mut rt, cli.iterations) {
            Ok(report) => {
                print!("{report}");
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        };
    }
    if let Some(goal) = &cli.goal {
        let mut out = std::io::stdout();
        return run_goal(&mut rt, goal, &mut out);
    }
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    repl(&mut rt, &mut stdin.lock(), &mut out)
}

fn is_halt(e: &Exception) -> bool {
    e.ball.term.is_functor(Atom::new("halt"), 1)
}

/// Batch mode: proves `goal` once and prints its bindings.
pub fn run_goal(rt: &mut Runtime, goal: &str, out: &mut dyn Write) -> i32 {
    let result = rt.once(goal);
    let _ = out.write_all(rt.take_output().as_bytes());
    match result {
        Ok(Some(b)) => {
            let text = format_bindings(&b);
            if !text.is_empty() {
                let _ = writeln!(out, "{text}");
            }
            EXIT_OK
        }
        Ok(None) => EXIT_FAILED,
        Err(Error::Uncaught(e)) if is_halt(&e) => rt.halted.unwrap_or(0),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Reads one clause-terminated chunk of input; `None` at end of input.
fn read_chunk(input: &mut dyn BufRead, out: &mut dyn Write) -> Option<String> {
    let mut buf = String::new();
    loop {
        let _ = write!(out, "{}", if buf.is_empty() { "?- " } else { "|    " });
        let _ = out.flush();
        let mut line = String::new();
        match input.read_line(&mut line) {
            Ok(0) | Err(_) => return (!buf.trim().is_empty()).then_some(buf),
            Ok(_) => {}
        }
        if buf.is_empty() && line.trim().starts_with(':') && !line.trim().starts_with(":-") {
            return Some(line.trim().to_string());
        }
        buf.push_str(&line);
        let t = buf.trim_end();
        if t.ends_with('.') && !t.ends_with("..") {
            return Some(t.to_string());
        }
        if buf.trim().is_empty() {
            buf.clear();
        }
    }
}

enum Meta {
    Continue,
    Quit,
}

fn meta(rt: &mut Runtime, cmd: &str, out: &mut dyn Write) -> Meta {
    let lines: Vec<String> = match cmd {
        ":objects" => rt.kernel.dump_objects(),
        ":stats" => vec![rt.stats().to_string()],
        ":classes" => rt
            .kernel
            .classes()
            .map(|c| match c.super_class {
                Some(s) => format!("{} < {}", c.name, rt.kernel.class(s).name),
                None => c.name.to_string(),
            })
            .collect(),
        ":scene" => toolkit::scene_dump(rt),
        ":release" => vec![format!("released {} holds", rt.release_holds())],
        ":audit" => {
            let report = rt.audit();
            let mut lines: Vec<String> = report
                .discrepancies
                .iter()
                .map(|(id, stored, counted)| format!("{id} refcount={stored} counted={counted}"))
                .collect();
            lines.extend(report.cycles.iter().map(|id| format!("{id} on a reference cycle")));
            if report.is_clean() {
                lines.push("audit clean".into());
            }
            lines
        }
        ":quit" | ":halt" => return Meta::Quit,
        ":help" => vec![":objects :stats :classes :scene :release :audit :quit".into()],
        other => vec![format!("unknown command {other}")],
    };
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
    Meta::Continue
}

/// The interactive toplevel. After each solution with alternatives left, a
/// line starting with `;` asks for the next one.
pub fn repl(rt: &mut Runtime, input: &mut dyn BufRead, out: &mut dyn Write) -> i32 {
    while let Some(chunk) = read_chunk(input, out) {
        if chunk.starts_with(':') && !chunk.starts_with(":-") {
            match meta(rt, &chunk, out) {
                Meta::Quit => break,
                Meta::Continue => continue,
            }
        }
        let mut query = match rt.query(&chunk) {
            Ok(q) => q,
            Err(e) => {
                let _ = writeln!(out, "ERROR: {e}");
                continue;
            }
        };
        loop {
            let step = query.next(rt);
            let _ = out.write_all(rt.take_output().as_bytes());
            match step {
                Ok(Some(b)) => {
                    let text = format_bindings(&b);
                    let text = if text.is_empty() { "true".to_string() } else { text };
                    if !query.has_alternatives() {
                        let _ = writeln!(out, "\n{text}.");
                        query.commit(rt);
                        break;
                    }
                    let _ = write!(out, "\n{text} ");
                    let _ = out.flush();
                    let mut answer = String::new();
                    let more = input.read_line(&mut answer).is_ok() && answer.trim_start().starts_with(';');
                    if !more {
                        let _ = writeln!(out, ".");
                        query.commit(rt);
                        break;
                    }
                    let _ = writeln!(out, ";");
                }
                Ok(None) => {
                    let _ = writeln!(out, "\nfalse.");
                    break;
                }
                Err(e) => {
                    if !is_halt(&e) {
                        let _ = writeln!(out, "ERROR: {e}");
                    }
                    query.discard(rt);
                    break;
                }
            }
        }
        let _ = writeln!(out);
        if let Some(code) = rt.halted {
            return code;
        }
    }
    EXIT_OK
}

pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_OK
            }
        }
    }
}
