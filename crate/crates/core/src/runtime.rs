//! The runtime instance: engine state, object kernel, bridge and compiler
//! state, plus the embedding API used by the CLI and the tests.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::rc::Rc;

use crate::bridge::BridgeState;
use crate::compiler::CompilerState;
use crate::engine::consult::{self, LoadContext, LoadReport};
use crate::engine::{builtins, Database, EResult, EngineMetrics, Flags, Machine, Module, PredKey};
use crate::error::Error;
use crate::kernel::{AuditReport, Kernel};
use crate::syntax::ops::Ops;
use crate::syntax::parser::read_term;
use crate::syntax::writer::{format_term, WriteOptions};
use crate::term::{Atom, ObjId, Records, Store, Term};
use crate::{bridge, compiler, toolkit};

/// Maps one read term to zero or more clauses or directives.
pub type ExpansionHook = Rc<dyn Fn(&mut Runtime, &Term) -> EResult<Vec<Term>>>;

/// Variable bindings of one solution, in order of first occurrence.
pub type Bindings = Vec<(String, Term)>;

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub occurs_check: bool,
    pub trace: bool,
    /// Realize classes as soon as their definition has been read.
    pub eager_classes: bool,
    /// Collect output in a buffer instead of writing to stdout.
    pub capture_output: bool,
}

enum Output {
    Stdout,
    Capture(String),
}

/// An event waiting in the synthetic pump queue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendingEvent {
    pub target: ObjId,
    pub kind: Atom,
    pub x: i64,
    pub y: i64,
}

pub struct Runtime {
    pub store: Store,
    pub db: Database,
    pub records: Records,
    pub kernel: Kernel,
    pub flags: Flags,
    pub metrics: EngineMetrics,
    pub bridge: BridgeState,
    pub compiler: CompilerState,
    pub events: VecDeque<PendingEvent>,
    pub(crate) hooks: Vec<ExpansionHook>,
    /// Which load defined each consulted predicate (for reconsult).
    pub(crate) sources: HashMap<PredKey, String>,
    pub(crate) loading: Option<LoadContext>,
    anon_sources: u64,
    output: Output,
    /// Set by `halt/0,1`.
    pub halted: Option<i32>,
}

/// Counters reported by `:stats`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stats {
    pub objects_live: usize,
    pub records_live: usize,
    pub records_created: u64,
    pub records_destroyed: u64,
    pub wrappers_live: u64,
    pub wrappers_created_total: u64,
    pub wrappers_recorded_total: u64,
    pub session_holds: usize,
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "objects-live: {}", self.objects_live)?;
        writeln!(f, "records-live: {}", self.records_live)?;
        writeln!(f, "records-created: {}", self.records_created)?;
        writeln!(f, "records-destroyed: {}", self.records_destroyed)?;
        writeln!(f, "wrappers-live: {}", self.wrappers_live)?;
        writeln!(f, "wrappers-created-total: {}", self.wrappers_created_total)?;
        writeln!(f, "wrappers-recorded-total: {}", self.wrappers_recorded_total)?;
        write!(f, "session-holds: {}", self.session_holds)
    }
}

/// An open query. Finish it with [`Query::commit`] or [`Query::discard`]
/// unless it ran to exhaustion.
pub struct Query {
    machine: Machine,
    vars: Vec<(String, Term)>,
}

impl Query {
    pub fn next(&mut self, rt: &mut Runtime) -> EResult<Option<Bindings>> {
        if !self.machine.next(rt)? {
            return Ok(None);
        }
        Ok(Some(
            self.vars
                .iter()
                .map(|(name, v)| {
                    let value = rt.store.resolve(v).unwrap_or_else(|_| rt.store.deref(v));
                    (name.clone(), value)
                })
                .collect(),
        ))
    }

    pub fn is_done(&self) -> bool {
        self.machine.is_done()
    }

    /// Whether another solution might follow.
    pub fn has_alternatives(&self) -> bool {
        self.machine.has_alternatives()
    }

    /// Keeps the bindings (and side effects) of the last solution.
    pub fn commit(self, rt: &mut Runtime) {
        self.machine.commit(rt);
    }

    pub fn discard(self, rt: &mut Runtime) {
        self.machine.discard(rt);
    }
}

impl Runtime {
    pub fn new(options: Options) -> Runtime {
        let mut store = Store::new();
        store.occurs_check = options.occurs_check;
        let mut rt = Runtime {
            store,
            db: Database::new(),
            records: Records::new(),
            kernel: Kernel::new(),
            flags: Flags {
                trace: options.trace,
                ..Flags::default()
            },
            metrics: EngineMetrics::default(),
            bridge: BridgeState::default(),
            compiler: CompilerState::new(options.eager_classes),
            events: VecDeque::new(),
            hooks: Vec::new(),
            sources: HashMap::new(),
            loading: None,
            anon_sources: 0,
            output: if options.capture_output {
                Output::Capture(String::new())
            } else {
                Output::Stdout
            },
            halted: None,
        };
        builtins::install(&mut rt);
        bridge::install(&mut rt);
        toolkit::install(&mut rt);
        compiler::install(&mut rt);
        let report = consult::consult_source(&mut rt, consult::PRELUDE, builtins::PRELUDE).expect("prelude parses");
        assert!(report.diagnostics.is_empty(), "prelude: {:?}", report.diagnostics);
        rt
    }

    /// A runtime that captures its output, for tests and embedding.
    pub fn captured() -> Runtime {
        Runtime::new(Options {
            capture_output: true,
            ..Options::default()
        })
    }

    // ---- output -------------------------------------------------------

    pub fn write_out(&mut self, text: &str) {
        match &mut self.output {
            Output::Stdout => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                let _ = out.write_all(text.as_bytes());
                let _ = out.flush();
            }
            Output::Capture(buf) => buf.push_str(text),
        }
    }

    /// Returns and clears the captured output (empty when writing to stdout).
    pub fn take_output(&mut self) -> String {
        match &mut self.output {
            Output::Capture(buf) => std::mem::take(buf),
            Output::Stdout => String::new(),
        }
    }

    pub(crate) fn trace_goal(&mut self, goal: &Term) {
        let text = format_term(
            &self.store.resolve(goal).unwrap_or_else(|_| goal.clone()),
            WriteOptions {
                quoted: true,
                max_depth: 8,
            },
        );
        eprintln!("   Call: {text}");
    }

    // ---- loading ------------------------------------------------------

    pub fn register_expansion_hook(&mut self, hook: ExpansionHook) {
        self.hooks.push(hook);
    }

    /// Loads program text. Each call is its own source, so separate strings
    /// never replace each other's predicates.
    pub fn consult_str(&mut self, src: &str) -> Result<LoadReport, Error> {
        self.anon_sources += 1;
        let name = format!("<string {}>", self.anon_sources);
        consult::consult_source(self, &name, src)
    }

    /// Loads program text under a source name; loading the same name again
    /// replaces the predicates it defined.
    pub fn consult_named(&mut self, name: &str, src: &str) -> Result<LoadReport, Error> {
        consult::consult_source(self, name, src)
    }

    pub fn consult_file(&mut self, path: &Path) -> Result<LoadReport, Error> {
        let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .canonicalize()
            .unwrap_or_else(|_| path.to_path_buf())
            .display()
            .to_string();
        consult::consult_source(self, &name, &src)
    }

    // ---- queries ------------------------------------------------------

    pub fn query(&mut self, text: &str) -> Result<Query, Error> {
        let read = read_term(text, Ops::standard())?;
        let base = self.store.alloc_vars(read.term.nvars as usize);
        let goal = crate::term::shift_vars(&read.term.term, base);
        let vars = read
            .var_names
            .into_iter()
            .map(|(name, v)| (name, Term::Var(base + v)))
            .collect();
        let machine = Machine::new(self, goal, Module::User);
        Ok(Query { machine, vars })
    }

    /// First solution, committed: its bindings and side effects stay.
    pub fn once(&mut self, text: &str) -> Result<Option<Bindings>, Error> {
        let mut q = self.query(text)?;
        match q.next(self)? {
            Some(b) => {
                q.commit(self);
                Ok(Some(b))
            }
            None => Ok(None),
        }
    }

    pub fn run(&mut self, text: &str) -> Result<bool, Error> {
        Ok(self.once(text)?.is_some())
    }

    /// Every solution; the store is restored afterwards.
    pub fn all(&mut self, text: &str) -> Result<Vec<Bindings>, Error> {
        let mut q = self.query(text)?;
        let mut out = Vec::new();
        while let Some(b) = q.next(self)? {
            out.push(b);
        }
        Ok(out)
    }

    /// Proves `goal` once and keeps the bindings.
    pub fn solve_once(&mut self, goal: Term, module: Module) -> EResult<bool> {
        let mut m = Machine::new(self, goal, module);
        if m.next(self)? {
            m.commit(self);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    // ---- kernel inspection --------------------------------------------

    /// Drops every session hold taken by `new/2` and object-valued `get/3`
    /// results; returns how many were released.
    pub fn release_holds(&mut self) -> usize {
        let holds = std::mem::take(&mut self.bridge.session_holds);
        let n = holds.len();
        for id in holds {
            self.kernel.unhold(id, &mut self.records);
        }
        n
    }

    pub fn audit(&self) -> AuditReport {
        self.kernel.audit()
    }

    pub fn stats(&self) -> Stats {
        let host = self.kernel.host;
        Stats {
            objects_live: self.kernel.live_count(),
            records_live: self.records.live_count(),
            records_created: self.records.created(),
            records_destroyed: self.records.destroyed(),
            wrappers_live: host.wrappers_live,
            wrappers_created_total: host.wrappers_created_total,
            wrappers_recorded_total: host.wrappers_recorded_total,
            session_holds: self.bridge.session_holds.len(),
        }
    }
}

/// Renders bindings the way the toplevel prints them: `X = value` lines.
pub fn format_bindings(bindings: &Bindings) -> String {
    bindings
        .iter()
        .filter(|(name, _)| !name.starts_with('_'))
        .map(|(name, value)| {
            let text = format_term(value, WriteOptions::default());
            format!("{name} = {text}")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_clauses_enumerate_in_order() {
        let mut rt = Runtime::captured();
        rt.consult_str("p(1).\np(2).\n").unwrap();
        let xs: Vec<_> = rt.all("p(X)").unwrap().into_iter().map(|b| b[0].1.clone()).collect();
        assert_eq!(xs, vec![Term::Int(1), Term::Int(2)]);
    }

    #[test]
    fn writeln_prints() {
        let mut rt = Runtime::captured();
        assert!(rt.run("writeln(hello)").unwrap());
        assert_eq!(rt.take_output(), "hello\n");
    }

    #[test]
    fn bindings_print_toplevel_style() {
        let mut rt = Runtime::captured();
        let b = rt.once("X = f('A b', 1), _Y = 2").unwrap().unwrap();
        assert_eq!(format_bindings(&b), "X = f('A b',1)");
    }
}
