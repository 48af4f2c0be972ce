//! Soft type specifications and kernel values.

use std::fmt;

use crate::term::{atoms, Atom, ObjId, Term};

#[derive(Clone, Debug, PartialEq)]
pub enum TypeSpec {
    Int,
    Float,
    Atom,
    Any,
    /// Any logic term; non-primitive terms travel as host-data wrappers.
    Prolog,
    Instance(Atom),
    NilOr(Box<TypeSpec>),
}

impl TypeSpec {
    /// Reads a type annotation: `int`, `float`, `atom`, `any`, `prolog`, a
    /// class name, `nil_or(T)` or `[T]`.
    pub fn parse(term: &Term) -> Result<TypeSpec, String> {
        match term {
            Term::Atom(a) => Ok(match a.name() {
                "int" | "integer" => TypeSpec::Int,
                "float" | "real" | "num" => TypeSpec::Float,
                "atom" | "name" => TypeSpec::Atom,
                "any" | "unchecked" => TypeSpec::Any,
                "prolog" => TypeSpec::Prolog,
                "[]" | "" => return Err(format!("malformed type `{}`", a.name())),
                _ => TypeSpec::Instance(*a),
            }),
            Term::Compound(c) if c.functor == atoms::NIL_OR && c.args.len() == 1 => {
                Ok(TypeSpec::NilOr(Box::new(TypeSpec::parse(&c.args[0])?)))
            }
            Term::Compound(c) if c.functor == atoms::DOT && c.args.len() == 2 => {
                if c.args[1] != Term::nil() {
                    return Err("malformed type list".into());
                }
                Ok(TypeSpec::NilOr(Box::new(TypeSpec::parse(&c.args[0])?)))
            }
            other => Err(format!("malformed type {other:?}")),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            TypeSpec::Int => Term::Atom(atoms::INT),
            TypeSpec::Float => Term::Atom(atoms::FLOAT),
            TypeSpec::Atom => Term::Atom(atoms::ATOM),
            TypeSpec::Any => Term::Atom(atoms::ANY),
            TypeSpec::Prolog => Term::Atom(atoms::PROLOG),
            TypeSpec::Instance(c) => Term::Atom(*c),
            TypeSpec::NilOr(inner) => Term::compound(atoms::NIL_OR, vec![inner.to_term()]),
        }
    }

    pub fn is_prolog(&self) -> bool {
        match self {
            TypeSpec::Prolog => true,
            TypeSpec::NilOr(inner) => inner.is_prolog(),
            _ => false,
        }
    }
}

impl fmt::Display for TypeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeSpec::NilOr(inner) => write!(f, "nil_or({inner})"),
            other => f.write_str(other.to_term().as_atom().expect("simple spec").name()),
        }
    }
}

/// A value stored in a slot or passed to a method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Atom(Atom),
    Object(ObjId),
    /// A `prolog_term` wrapper carrying a logic term.
    HostTerm(ObjId),
    Nil,
}

impl Value {
    /// The object this value references, if any (not counting `@nil`).
    pub fn referent(self) -> Option<ObjId> {
        match self {
            Value::Object(id) | Value::HostTerm(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_atom(self) -> Option<Atom> {
        match self {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_object(self) -> Option<ObjId> {
        match self {
            Value::Object(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&crate::syntax::writer::format_float(*x)),
            Value::Atom(a) => write!(f, "{a}"),
            Value::Object(id) | Value::HostTerm(id) => write!(f, "{id}"),
            Value::Nil => f.write_str("@nil"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse;

    #[test]
    fn parses_type_annotations() {
        let p = |s: &str| TypeSpec::parse(&parse(s).unwrap());
        assert_eq!(p("int").unwrap(), TypeSpec::Int);
        assert_eq!(p("prolog").unwrap(), TypeSpec::Prolog);
        assert_eq!(p("event").unwrap(), TypeSpec::Instance(Atom::new("event")));
        assert_eq!(
            p("nil_or(colour)").unwrap(),
            TypeSpec::NilOr(Box::new(TypeSpec::Instance(Atom::new("colour"))))
        );
        assert_eq!(p("[colour]").unwrap(), p("nil_or(colour)").unwrap());
        assert!(p("f(x)").is_err());
        assert!(p("7").is_err());
    }

    #[test]
    fn spec_round_trips_through_terms() {
        for s in ["int", "float", "atom", "any", "prolog", "box", "nil_or(int)"] {
            let spec = TypeSpec::parse(&parse(s).unwrap()).unwrap();
            assert_eq!(TypeSpec::parse(&spec.to_term()).unwrap(), spec);
            assert_eq!(spec.to_string(), s);
        }
    }
}
