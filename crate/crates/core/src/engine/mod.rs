//! Clause database, resolution machine and built-in predicates.

pub mod arith;
pub mod builtins;
pub mod consult;
pub mod db;
pub mod machine;

use std::rc::Rc;

use crate::runtime::Runtime;
use crate::syntax::writer::format_plain;
use crate::term::{atoms, Atom, Detached, Store, Term, TermError};

pub use db::{Clause, Database, Module, PredKey};
pub use machine::Machine;

/// A thrown logic exception. The ball is detached from the store so it
/// survives the undoing of the bindings between `throw` and `catch`.
#[derive(Clone, Debug, PartialEq)]
pub struct Exception {
    pub ball: Detached,
}

impl Exception {
    pub fn new(store: &Store, ball: &Term) -> Exception {
        match Detached::from_store(store, ball, usize::MAX) {
            Ok(ball) => Exception { ball },
            Err(_) => Exception::ground(Term::atom("cyclic_ball")),
        }
    }

    pub fn ground(ball: Term) -> Exception {
        Exception {
            ball: Detached::ground(ball),
        }
    }

    /// `error(Formal, _)` for a formal term without store variables.
    pub fn error(formal: Term) -> Exception {
        let term = Term::compound(atoms::ERROR, vec![formal, Term::Var(0)]);
        Exception {
            ball: Detached { term, nvars: 1 },
        }
    }

    /// `error(Formal, _)` where `formal` may mention store variables.
    pub fn error_in(store: &Store, formal: Term) -> Exception {
        match Detached::from_store(store, &formal, usize::MAX) {
            Ok(f) => Exception {
                ball: Detached {
                    term: Term::compound(atoms::ERROR, vec![f.term, Term::Var(f.nvars)]),
                    nvars: f.nvars + 1,
                },
            },
            Err(_) => Exception::ground(Term::atom("cyclic_ball")),
        }
    }

    pub fn instantiation() -> Exception {
        Exception::error(Term::Atom(atoms::INSTANTIATION_ERROR))
    }

    pub fn type_error(store: &Store, expected: &str, culprit: &Term) -> Exception {
        Exception::error_in(
            store,
            Term::compound(atoms::TYPE_ERROR, vec![Term::atom(expected), culprit.clone()]),
        )
    }

    pub fn existence(kind: &str, culprit: Term) -> Exception {
        Exception::error(Term::compound(atoms::EXISTENCE_ERROR, vec![Term::atom(kind), culprit]))
    }

    pub fn permission(action: &str, kind: &str, culprit: Term) -> Exception {
        Exception::error(Term::compound(
            atoms::PERMISSION_ERROR,
            vec![Term::atom(action), Term::atom(kind), culprit],
        ))
    }

    pub fn evaluation(what: &str) -> Exception {
        Exception::error(Term::compound(atoms::EVALUATION_ERROR, vec![Term::atom(what)]))
    }

    pub fn resource(what: &str) -> Exception {
        Exception::error(Term::compound(atoms::RESOURCE_ERROR, vec![Term::atom(what)]))
    }

    pub fn procedure(name: Atom, arity: usize) -> Exception {
        let pi = Term::compound(atoms::SLASH, vec![Term::Atom(name), Term::Int(arity as i64)]);
        Exception::existence("procedure", pi)
    }

    /// The formal part of an `error/2` ball, if it is one.
    pub fn formal(&self) -> Option<&Term> {
        match &self.ball.term {
            Term::Compound(c) if c.functor == atoms::ERROR && c.args.len() == 2 => Some(&c.args[0]),
            _ => None,
        }
    }

    /// Name of the formal error term (`type_error`, `freed_object`, ...).
    pub fn kind(&self) -> Option<Atom> {
        self.formal().and_then(|f| f.functor()).map(|(name, _)| name)
    }
}

impl std::fmt::Display for Exception {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_plain(&self.ball.term))
    }
}

impl From<TermError> for Exception {
    fn from(e: TermError) -> Exception {
        match e {
            TermError::StaleReference { frame, handle } => Exception::error(Term::compound(
                atoms::STALE_REFERENCE,
                vec![Term::Int(frame as i64), Term::Int(handle as i64)],
            )),
            TermError::TooLarge { .. } => Exception::resource("record_size"),
            TermError::Cyclic => Exception::error(Term::compound(
                atoms::REPRESENTATION_ERROR,
                vec![Term::atom("cyclic_term")],
            )),
            TermError::RecordDestroyed(id) => Exception::existence("record", Term::Int(id as i64)),
            TermError::NonLifoFrame { .. } => Exception::permission("close", "frame", Term::nil()),
        }
    }
}

pub type EResult<T> = Result<T, Exception>;

/// What a built-in asks the machine to do next.
pub enum Control {
    Fail,
    True,
    /// Continue by proving this goal in place of the built-in. A `!` inside
    /// it is local to the goal.
    Call(Term),
    /// Try each goal in turn on backtracking.
    Choices(Vec<Term>),
}

impl From<bool> for Control {
    fn from(ok: bool) -> Control {
        if ok {
            Control::True
        } else {
            Control::Fail
        }
    }
}

pub type Builtin = Rc<dyn Fn(&mut Runtime, &[Term]) -> EResult<Control>>;

/// Engine-wide switches.
#[derive(Clone, Debug)]
pub struct Flags {
    /// Raise on calls to undefined predicates (otherwise fail).
    pub unknown_error: bool,
    pub indexing: bool,
    pub trace: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            unknown_error: true,
            indexing: true,
            trace: false,
        }
    }
}

/// Counters exposed for tests and the CLI.
#[derive(Clone, Debug, Default)]
pub struct EngineMetrics {
    /// Clause heads tried against a goal.
    pub clause_visits: u64,
    /// Deepest continuation chain observed since the last reset.
    pub peak_depth: usize,
    pub inferences: u64,
}
