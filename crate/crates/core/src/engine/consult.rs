//! Loading program text: expansion hooks, directives and reconsult.

use std::collections::HashSet;

use super::db::{Clause, Module, PredKey};
use super::{EResult, Exception};
use crate::error::Error;
use crate::runtime::Runtime;
use crate::syntax::ops::Ops;
use crate::syntax::parser::read_all;
use crate::syntax::writer::format_plain;
use crate::term::{atoms, Term};

/// Source name of the built-in library; user files may redefine its
/// predicates.
pub const PRELUDE: &str = "<prelude>";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub clauses: usize,
    pub directives: usize,
    /// One line per clause or directive that was dropped or failed.
    pub diagnostics: Vec<String>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// State of the load in progress.
pub struct LoadContext {
    pub source: String,
    pub line: usize,
    seen: HashSet<PredKey>,
}

pub fn consult_source(rt: &mut Runtime, source: &str, src: &str) -> Result<LoadReport, Error> {
    let terms = read_all(src, Ops::standard())?;
    let outer = rt.loading.replace(LoadContext {
        source: source.to_string(),
        line: 0,
        seen: HashSet::new(),
    });
    let mut report = LoadReport::default();
    for read in terms {
        if let Some(ctx) = rt.loading.as_mut() {
            ctx.line = read.line;
        }
        let marks = rt.store.marks();
        let term = read.term.instantiate(&mut rt.store);
        if term.is_functor(atoms::END_OF_FILE, 0) {
            rt.store.undo_to(marks);
            break;
        }
        match expand(rt, term) {
            Ok(outputs) => {
                for out in outputs {
                    handle(rt, out, read.line, &mut report);
                }
            }
            Err(e) => report
                .diagnostics
                .push(format!("{source}:{}: expansion failed: {e}", read.line)),
        }
        rt.store.undo_to(marks);
    }
    if let Err(e) = crate::compiler::end_of_load(rt) {
        report.diagnostics.push(format!("{source}: {e}"));
    }
    rt.loading = outer;
    Ok(report)
}

/// Runs the hook chain: each hook sees every output of the previous one.
fn expand(rt: &mut Runtime, term: Term) -> EResult<Vec<Term>> {
    let hooks = rt.hooks.clone();
    let mut terms = vec![term];
    for hook in hooks {
        let mut next = Vec::new();
        for t in &terms {
            next.extend(hook(rt, t)?);
        }
        terms = next;
    }
    Ok(terms)
}

fn handle(rt: &mut Runtime, term: Term, line: usize, report: &mut LoadReport) {
    let source = rt.loading.as_ref().map_or(String::new(), |c| c.source.clone());
    let term = rt.store.deref(&term);
    let directive = match &term {
        Term::Compound(c) if c.args.len() == 1 && (c.functor == atoms::NECK || c.functor.name() == "?-") => {
            Some(c.args[0].clone())
        }
        _ => None,
    };
    if let Some(goal) = directive {
        report.directives += 1;
        match rt.solve_once(goal.clone(), Module::User) {
            Ok(true) => {}
            Ok(false) => report.diagnostics.push(format!(
                "{source}:{line}: directive failed: {}",
                format_plain(&rt.store.resolve(&goal).unwrap_or(goal))
            )),
            Err(e) => report
                .diagnostics
                .push(format!("{source}:{line}: directive raised {e}")),
        }
        return;
    }
    match add_loaded_clause(rt, &term) {
        Ok(()) => report.clauses += 1,
        Err(e) => report
            .diagnostics
            .push(format!("{source}:{line}: clause rejected: {e}")),
    }
}

/// Adds a consulted clause. The first clause a load gives a predicate
/// replaces clauses that an earlier load of the same source (or the
/// prelude) contributed. Method tables in `pce_principal` are maintained by
/// the class compiler instead.
pub(crate) fn add_loaded_clause(rt: &mut Runtime, term: &Term) -> EResult<()> {
    let (key, clause) = Clause::from_term(&rt.store, term)?;
    if let Some(ctx) = rt.loading.as_mut() {
        if key.0 == Module::User && ctx.seen.insert(key) {
            let previous = rt.sources.insert(key, ctx.source.clone());
            if matches!(previous.as_deref(), Some(p) if p == ctx.source || p == PRELUDE) {
                rt.db.wipe(&key);
            }
        }
    }
    rt.db.add_clause(key, clause, false)
}

/// `consult/1`: loads a file from a logic goal.
pub(crate) fn consult_goal(rt: &mut Runtime, path: &str) -> EResult<bool> {
    match rt.consult_file(std::path::Path::new(path)) {
        Ok(report) => {
            for d in &report.diagnostics {
                eprintln!("warning: {d}");
            }
            Ok(true)
        }
        Err(Error::Io { .. }) => Err(Exception::existence("source_sink", Term::atom(path))),
        Err(Error::Uncaught(e)) => Err(e),
        Err(other) => Err(Exception::error(Term::compound(
            atoms::SYNTAX_ERROR,
            vec![Term::atom(&other.to_string())],
        ))),
    }
}
