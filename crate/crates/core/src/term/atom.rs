//! Global, append-only atom table.

use std::collections::HashMap;
use std::fmt;
use std::sync::{LazyLock, RwLock};

/// An interned symbol. Two atoms are equal iff their table indices are equal.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom(u32);

struct Interner {
    names: Vec<&'static str>,
    ids: HashMap<&'static str, u32>,
}

impl Interner {
    fn seeded() -> Self {
        let mut interner = Interner {
            names: Vec::with_capacity(256),
            ids: HashMap::with_capacity(256),
        };
        for name in atoms::WELL_KNOWN {
            interner.insert(name);
        }
        interner
    }

    fn insert(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        // Atoms are never collected, so leaking the name gives it 'static lifetime.
        let name: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = self.names.len() as u32;
        self.names.push(name);
        self.ids.insert(name, id);
        id
    }
}

static TABLE: LazyLock<RwLock<Interner>> = LazyLock::new(|| RwLock::new(Interner::seeded()));

impl Atom {
    pub fn new(name: &str) -> Atom {
        if let Some(&id) = TABLE.read().expect("atom table poisoned").ids.get(name) {
            return Atom(id);
        }
        Atom(TABLE.write().expect("atom table poisoned").insert(name))
    }

    pub fn name(self) -> &'static str {
        TABLE.read().expect("atom table poisoned").names[self.0 as usize]
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Atom({:?})", self.name())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Atom {
        Atom::new(s)
    }
}

macro_rules! well_known {
    ($($ident:ident = $name:expr),* $(,)?) => {
        pub(super) const WELL_KNOWN: &[&str] = &[$($name),*];
        well_known!(@consts 0u32; $($ident,)*);
    };
    (@consts $n:expr; $ident:ident, $($rest:ident,)*) => {
        pub const $ident: Atom = Atom($n);
        well_known!(@consts $n + 1u32; $($rest,)*);
    };
    (@consts $n:expr;) => {};
}

/// Atoms used by the runtime itself; pre-seeded so they are usable as constants.
pub mod atoms {
    use super::Atom;

    well_known! {
        NIL = "[]",
        DOT = ".",
        COMMA = ",",
        SEMICOLON = ";",
        ARROW = "->",
        NECK = ":-",
        COLON = ":",
        NOT_PROVABLE = "\\+",
        TRUE = "true",
        FAIL = "fail",
        FALSE = "false",
        CUT = "!",
        CALL = "call",
        EQUALS = "=",
        MINUS = "-",
        PLUS = "+",
        SLASH = "/",
        AT = "@",
        CURLY = "{}",
        BAR = "|",
        USER = "user",
        PCE_PRINCIPAL = "pce_principal",
        ERROR = "error",
        CATCH = "catch",
        FINDALL = "findall",
        FORALL = "forall",
        SEND = "send",
        GET = "get",
        SEND_SUPER = "send_super",
        GET_SUPER = "get_super",
        SEND_CLASS = "send_class",
        GET_CLASS = "get_class",
        SEND_IMPLEMENTATION = "send_implementation",
        GET_IMPLEMENTATION = "get_implementation",
        SEND_METHOD_OP = ":->",
        GET_METHOD_OP = ":<-",
        DOC_OP = "::",
        NIL_OBJECT = "nil",
        PROLOG = "prolog",
        INITIALISE = "initialise",
        OBJECT = "object",
        INT = "int",
        FLOAT = "float",
        ATOM = "atom",
        ANY = "any",
        NIL_OR = "nil_or",
        BOTH = "both",
        NONE = "none",
        EVENT = "event",
        IS_A = "is_a",
        PCE_BEGIN_CLASS = "pce_begin_class",
        PCE_END_CLASS = "pce_end_class",
        VARIABLE = "variable",
        PURE_METHOD = "pure_method",
        PCE_CLASS = "pce_class",
        PCE_VARIABLE = "pce_variable",
        PCE_SEND_METHOD = "pce_send_method",
        PCE_GET_METHOD = "pce_get_method",
        PCE_PURE = "pce_pure",
        DYNAMIC = "dynamic",
        INSTANTIATION_ERROR = "instantiation_error",
        TYPE_ERROR = "type_error",
        EXISTENCE_ERROR = "existence_error",
        PERMISSION_ERROR = "permission_error",
        EVALUATION_ERROR = "evaluation_error",
        RESOURCE_ERROR = "resource_error",
        REPRESENTATION_ERROR = "representation_error",
        SYNTAX_ERROR = "syntax_error",
        UNINSTANTIATION_ERROR = "uninstantiation_error",
        FREED_OBJECT = "freed_object",
        STALE_REFERENCE = "stale_reference",
        CONTEXT = "context",
        PROCEDURE = "procedure",
        CLASS = "class",
        METHOD = "method",
        CALLABLE = "callable",
        EMPTY = "",
        END_OF_FILE = "end_of_file",
        ONCE = "once",
        IGNORE = "ignore",
        NOT = "not",
        THROW = "throw",
        BETWEEN = "between",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_known_names_are_distinct_and_stable() {
        let mut seen = std::collections::HashSet::new();
        for name in atoms::WELL_KNOWN {
            assert!(seen.insert(*name), "duplicate well-known atom {name:?}");
        }
        assert_eq!(atoms::NIL.name(), "[]");
        assert_eq!(atoms::END_OF_FILE.name(), "end_of_file");
        assert_eq!(Atom::new("pce_principal"), atoms::PCE_PRINCIPAL);
    }

    #[test]
    fn interning_is_idempotent() {
        let a = Atom::new("some_fresh_atom_name");
        assert_eq!(a, Atom::new("some_fresh_atom_name"));
        assert_eq!(a.name(), "some_fresh_atom_name");
    }
}
