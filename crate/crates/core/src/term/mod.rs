//! Logic terms, the binding store, frame-scoped term references and
//! permanent records.

pub mod atom;
mod copy;
mod store;
mod unify;

pub use atom::{atoms, Atom};
pub(crate) use copy::shift_vars;
pub use copy::{Detached, RecordId, Records, TermRecord};
pub use store::{FrameId, Marks, Store, TermRef};

use std::fmt;
use std::rc::Rc;

use thiserror::Error;

/// Identifier of a variable slot in a [`Store`] (or a clause-local index in a
/// [`Detached`] term).
pub type VarId = u32;

/// Identifier of a kernel object; rendered as `@N`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ObjId(pub u64);

impl ObjId {
    /// The distinguished `@nil` object.
    pub const NIL: ObjId = ObjId(0);
    /// The logic-proxy object `@prolog`.
    pub const PROLOG: ObjId = ObjId(1);

    pub fn well_known_name(self) -> Option<&'static str> {
        match self {
            ObjId::NIL => Some("nil"),
            ObjId::PROLOG => Some("prolog"),
            _ => None,
        }
    }

    pub fn from_well_known(name: &str) -> Option<ObjId> {
        match name {
            "nil" => Some(ObjId::NIL),
            "prolog" => Some(ObjId::PROLOG),
            _ => None,
        }
    }
}

impl fmt::Display for ObjId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.well_known_name() {
            Some(name) => write!(f, "@{name}"),
            None => write!(f, "@{}", self.0),
        }
    }
}

#[derive(Clone)]
pub enum Term {
    Var(VarId),
    Int(i64),
    Float(f64),
    Atom(Atom),
    Compound(Rc<Compound>),
    Obj(ObjId),
}

pub struct Compound {
    pub functor: Atom,
    pub args: Box<[Term]>,
    /// True when some `Var` node occurs below; var-free subterms can be shared
    /// instead of copied.
    has_vars: bool,
}

impl Compound {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn has_vars(&self) -> bool {
        self.has_vars
    }
}

impl Drop for Compound {
    // Long lists are right-nested compounds; dropping them recursively would
    // blow the stack.
    fn drop(&mut self) {
        let mut pending: Vec<Term> = std::mem::take(&mut self.args).into_vec();
        while let Some(term) = pending.pop() {
            if let Term::Compound(rc) = term {
                if let Ok(mut inner) = Rc::try_unwrap(rc) {
                    pending.extend(std::mem::take(&mut inner.args).into_vec());
                }
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TermError {
    #[error("stale term reference (frame {frame} closed or handle {handle} invalid)")]
    StaleReference { frame: u64, handle: usize },
    #[error("frame {closing} closed out of order (innermost open frame is {innermost:?})")]
    NonLifoFrame { closing: u64, innermost: Option<u64> },
    #[error("cyclic term cannot be copied")]
    Cyclic,
    #[error("term exceeds the copy limit of {limit} nodes")]
    TooLarge { limit: usize },
    #[error("record {0} has been destroyed")]
    RecordDestroyed(u64),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Atom::new(name))
    }

    pub fn nil() -> Term {
        Term::Atom(atoms::NIL)
    }

    /// Builds `functor(args...)`; zero arguments yield the atom itself.
    pub fn compound(functor: Atom, args: Vec<Term>) -> Term {
        if args.is_empty() {
            return Term::Atom(functor);
        }
        let has_vars = args.iter().any(Term::has_var_nodes);
        Term::Compound(Rc::new(Compound {
            functor,
            args: args.into_boxed_slice(),
            has_vars,
        }))
    }

    pub fn app(functor: &str, args: Vec<Term>) -> Term {
        Term::compound(Atom::new(functor), args)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::compound(atoms::DOT, vec![head, tail])
    }

    pub fn list(items: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail(items: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, item| Term::cons(item, acc))
    }

    /// Whether a `Var` node occurs anywhere in the term (bound or not).
    pub fn has_var_nodes(&self) -> bool {
        match self {
            Term::Var(_) => true,
            Term::Compound(c) => c.has_vars,
            _ => false,
        }
    }

    pub fn as_atom(&self) -> Option<Atom> {
        match self {
            Term::Atom(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_compound(&self) -> Option<&Compound> {
        match self {
            Term::Compound(c) => Some(c),
            _ => None,
        }
    }

    /// Name and arity of an atom or compound.
    pub fn functor(&self) -> Option<(Atom, usize)> {
        match self {
            Term::Atom(a) => Some((*a, 0)),
            Term::Compound(c) => Some((c.functor, c.args.len())),
            _ => None,
        }
    }

    /// Arguments of a compound (empty for anything else).
    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(c) => &c.args,
            _ => &[],
        }
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Compound(_))
    }

    pub fn is_functor(&self, name: Atom, arity: usize) -> bool {
        match self {
            Term::Atom(a) => arity == 0 && *a == name,
            Term::Compound(c) => c.functor == name && c.args.len() == arity,
            _ => false,
        }
    }

    /// Number of nodes (every atomic leaf and every compound counts once).
    pub fn node_count(&self) -> usize {
        let mut count = 0;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            count += 1;
            if let Term::Compound(c) = t {
                stack.extend(c.args.iter());
            }
        }
        count
    }
}

impl PartialEq for Term {
    /// Syntactic identity (no dereferencing): variables are equal iff their
    /// ids are, floats compare bitwise.
    fn eq(&self, other: &Term) -> bool {
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            match (a, b) {
                (Term::Var(x), Term::Var(y)) if x == y => {}
                (Term::Int(x), Term::Int(y)) if x == y => {}
                (Term::Float(x), Term::Float(y)) if x.to_bits() == y.to_bits() => {}
                (Term::Atom(x), Term::Atom(y)) if x == y => {}
                (Term::Obj(x), Term::Obj(y)) if x == y => {}
                (Term::Compound(x), Term::Compound(y)) => {
                    if Rc::ptr_eq(x, y) {
                        continue;
                    }
                    if x.functor != y.functor || x.args.len() != y.args.len() {
                        return false;
                    }
                    stack.extend(x.args.iter().zip(y.args.iter()));
                }
                _ => return false,
            }
        }
        true
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::writer::format_plain(self))
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Term {
        Term::Int(v)
    }
}

impl From<Atom> for Term {
    fn from(a: Atom) -> Term {
        Term::Atom(a)
    }
}

impl From<ObjId> for Term {
    fn from(o: ObjId) -> Term {
        Term::Obj(o)
    }
}

/// Key used for first-argument indexing.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum IndexKey {
    Atom(Atom),
    Int(i64),
    Float(u64),
    Functor(Atom, usize),
    Obj(ObjId),
}

impl IndexKey {
    /// Principal functor of an already dereferenced term; `None` for variables.
    pub fn of(term: &Term) -> Option<IndexKey> {
        Some(match term {
            Term::Var(_) => return None,
            Term::Int(i) => IndexKey::Int(*i),
            Term::Float(f) => IndexKey::Float(f.to_bits()),
            Term::Atom(a) => IndexKey::Atom(*a),
            Term::Compound(c) => IndexKey::Functor(c.functor, c.args.len()),
            Term::Obj(o) => IndexKey::Obj(*o),
        })
    }
}
