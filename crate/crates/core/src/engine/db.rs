//! Predicate table with first-argument indexing and logical-update-view
//! snapshots.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::{Builtin, EResult, Exception};
use crate::term::{atoms, Atom, Detached, IndexKey, Store, Term};

/// The two namespaces: `user` and `pce_principal`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Module {
    User,
    Principal,
}

impl Module {
    pub fn from_atom(a: Atom) -> Option<Module> {
        if a == atoms::USER {
            Some(Module::User)
        } else if a == atoms::PCE_PRINCIPAL {
            Some(Module::Principal)
        } else {
            None
        }
    }

    pub fn atom(self) -> Atom {
        match self {
            Module::User => atoms::USER,
            Module::Principal => atoms::PCE_PRINCIPAL,
        }
    }
}

pub type PredKey = (Module, Atom, usize);

/// A stored clause; variables are numbered `0..nvars`.
#[derive(Debug)]
pub struct Clause {
    pub head: Term,
    pub body: Term,
    pub nvars: u32,
    pub key: Option<IndexKey>,
}

impl Clause {
    /// Builds a clause from `Head :- Body` or a fact. Variable goals in the
    /// body become `call/1`.
    pub fn from_term(store: &Store, term: &Term) -> EResult<(PredKey, Clause)> {
        let d = Detached::from_store(store, term, usize::MAX)?;
        Clause::from_detached(d, Module::User)
    }

    pub fn from_detached(d: Detached, module: Module) -> EResult<(PredKey, Clause)> {
        let (module, term) = strip_module(module, d.term);
        let (head, body) = match &term {
            Term::Compound(c) if c.functor == atoms::NECK && c.args.len() == 2 => {
                (c.args[0].clone(), c.args[1].clone())
            }
            _ => (term.clone(), Term::Atom(atoms::TRUE)),
        };
        let (module, head) = strip_module(module, head);
        let (name, arity) = match &head {
            Term::Var(_) => return Err(Exception::instantiation()),
            Term::Atom(a) => (*a, 0),
            Term::Compound(c) => (c.functor, c.args.len()),
            other => {
                return Err(Exception::error(Term::compound(
                    atoms::TYPE_ERROR,
                    vec![Term::Atom(atoms::CALLABLE), other.clone()],
                )))
            }
        };
        let key = head.args().first().and_then(IndexKey::of);
        let body = wrap_var_goals(body);
        Ok((
            (module, name, arity),
            Clause {
                head,
                body,
                nvars: d.nvars,
                key,
            },
        ))
    }

    /// The clause as a `Head :- Body` term (variables still local).
    pub fn as_term(&self) -> Term {
        Term::compound(atoms::NECK, vec![self.head.clone(), self.body.clone()])
    }
}

fn strip_module(mut module: Module, mut term: Term) -> (Module, Term) {
    loop {
        let next = match &term {
            Term::Compound(c) if c.functor == atoms::COLON && c.args.len() == 2 => c.args[0]
                .as_atom()
                .and_then(Module::from_atom)
                .map(|m| (m, c.args[1].clone())),
            _ => None,
        };
        match next {
            Some((m, t)) => {
                module = m;
                term = t;
            }
            None => return (module, term),
        }
    }
}

fn wrap_var_goals(body: Term) -> Term {
    match &body {
        Term::Var(_) => Term::compound(atoms::CALL, vec![body]),
        Term::Compound(c)
            if c.args.len() == 2
                && (c.functor == atoms::COMMA || c.functor == atoms::SEMICOLON || c.functor == atoms::ARROW) =>
        {
            Term::compound(
                c.functor,
                vec![wrap_var_goals(c.args[0].clone()), wrap_var_goals(c.args[1].clone())],
            )
        }
        _ => body,
    }
}

/// Candidate clause positions for a call.
#[derive(Clone)]
pub enum Candidates {
    All,
    Some(Rc<[u32]>),
}

impl Candidates {
    pub fn len(&self, clauses: &[Rc<Clause>]) -> usize {
        match self {
            Candidates::All => clauses.len(),
            Candidates::Some(list) => list.len(),
        }
    }

    pub fn get(&self, i: usize) -> usize {
        match self {
            Candidates::All => i,
            Candidates::Some(list) => list[i] as usize,
        }
    }
}

struct Index {
    by_key: HashMap<IndexKey, Rc<[u32]>>,
    /// Clauses whose first argument is a variable; the candidates for keys
    /// that no clause mentions.
    var_only: Rc<[u32]>,
}

#[derive(Default)]
pub struct Predicate {
    pub clauses: Rc<Vec<Rc<Clause>>>,
    pub dynamic: bool,
    index: RefCell<Option<Rc<Index>>>,
}

impl Predicate {
    fn changed(&mut self) {
        *self.index.get_mut() = None;
    }

    fn index(&self) -> Rc<Index> {
        if let Some(idx) = self.index.borrow().as_ref() {
            return idx.clone();
        }
        let mut lists: HashMap<IndexKey, Vec<u32>> = HashMap::new();
        let mut var_only = Vec::new();
        for c in self.clauses.iter() {
            if let Some(k) = c.key {
                lists.entry(k).or_default();
            }
        }
        for (i, c) in self.clauses.iter().enumerate() {
            match c.key {
                Some(k) => lists.get_mut(&k).expect("key collected").push(i as u32),
                None => {
                    var_only.push(i as u32);
                    for list in lists.values_mut() {
                        list.push(i as u32);
                    }
                }
            }
        }
        let idx = Rc::new(Index {
            by_key: lists.into_iter().map(|(k, v)| (k, v.into())).collect(),
            var_only: var_only.into(),
        });
        *self.index.borrow_mut() = Some(idx.clone());
        idx
    }

    /// Clauses that may match a call whose first argument has `key`.
    pub fn candidates(&self, key: Option<IndexKey>, indexing: bool) -> Candidates {
        match key {
            Some(k) if indexing && self.clauses.len() > 1 => {
                let idx = self.index();
                match idx.by_key.get(&k) {
                    Some(list) => Candidates::Some(list.clone()),
                    None => Candidates::Some(idx.var_only.clone()),
                }
            }
            _ => Candidates::All,
        }
    }
}

#[derive(Default)]
pub struct Database {
    preds: HashMap<PredKey, Predicate>,
    builtins: HashMap<(Atom, usize), Builtin>,
}

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    pub fn register_builtin(&mut self, name: &str, arity: usize, f: Builtin) -> EResult<()> {
        let key = (Atom::new(name), arity);
        if self.builtins.contains_key(&key) {
            return Err(Exception::permission("register", "builtin", pi_term(key.0, arity)));
        }
        self.builtins.insert(key, f);
        Ok(())
    }

    pub fn builtin(&self, name: Atom, arity: usize) -> Option<&Builtin> {
        self.builtins.get(&(name, arity))
    }

    pub fn is_builtin(&self, name: Atom, arity: usize) -> bool {
        self.builtins.contains_key(&(name, arity)) || is_control(name, arity)
    }

    pub fn predicate(&self, key: &PredKey) -> Option<&Predicate> {
        self.preds.get(key)
    }

    /// Looks a predicate up in `module`, falling back to `user`.
    pub fn resolve(&self, module: Module, name: Atom, arity: usize) -> Option<&Predicate> {
        self.preds.get(&(module, name, arity)).or_else(|| {
            if module != Module::User {
                self.preds.get(&(Module::User, name, arity))
            } else {
                None
            }
        })
    }

    pub fn add_clause(&mut self, key: PredKey, clause: Clause, front: bool) -> EResult<()> {
        if self.is_builtin(key.1, key.2) {
            return Err(Exception::permission(
                "modify",
                "static_procedure",
                pi_term(key.1, key.2),
            ));
        }
        let pred = self.preds.entry(key).or_default();
        let clauses = Rc::make_mut(&mut pred.clauses);
        if front {
            clauses.insert(0, Rc::new(clause));
        } else {
            clauses.push(Rc::new(clause));
        }
        pred.changed();
        Ok(())
    }

    pub fn declare_dynamic(&mut self, key: PredKey) -> EResult<()> {
        if self.is_builtin(key.1, key.2) {
            return Err(Exception::permission(
                "modify",
                "static_procedure",
                pi_term(key.1, key.2),
            ));
        }
        self.preds.entry(key).or_default().dynamic = true;
        Ok(())
    }

    /// Removes the clauses at the given positions.
    pub fn remove_clauses(&mut self, key: &PredKey, keep: impl Fn(&Clause) -> bool) -> usize {
        let Some(pred) = self.preds.get_mut(key) else {
            return 0;
        };
        let before = pred.clauses.len();
        Rc::make_mut(&mut pred.clauses).retain(|c| keep(c));
        let removed = before - pred.clauses.len();
        if removed > 0 {
            pred.changed();
        }
        removed
    }

    /// Removes one specific clause, identified by pointer.
    pub fn remove_clause(&mut self, key: &PredKey, clause: &Rc<Clause>) -> bool {
        let Some(pred) = self.preds.get_mut(key) else {
            return false;
        };
        let Some(pos) = pred.clauses.iter().position(|c| Rc::ptr_eq(c, clause)) else {
            return false;
        };
        Rc::make_mut(&mut pred.clauses).remove(pos);
        pred.changed();
        true
    }

    /// Drops all clauses of a predicate, keeping its flags.
    pub fn wipe(&mut self, key: &PredKey) {
        if let Some(pred) = self.preds.get_mut(key) {
            pred.clauses = Rc::new(Vec::new());
            pred.changed();
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &PredKey> {
        self.preds.keys()
    }
}

pub fn pi_term(name: Atom, arity: usize) -> Term {
    Term::compound(atoms::SLASH, vec![Term::Atom(name), Term::Int(arity as i64)])
}

/// Constructs handled directly by the machine.
pub fn is_control(name: Atom, arity: usize) -> bool {
    let n = name.name();
    matches!(
        (n, arity),
        ("true", 0)
            | ("fail", 0)
            | ("false", 0)
            | ("!", 0)
            | (",", 2)
            | (";", 2)
            | ("->", 2)
            | ("\\+", 1)
            | ("not", 1)
            | (":", 2)
            | ("catch", 3)
            | ("once", 1)
            | ("ignore", 1)
            | ("forall", 2)
    ) || (n == "call" && arity >= 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse;

    fn clause(src: &str) -> (PredKey, Clause) {
        Clause::from_detached(
            Detached {
                term: parse(src).unwrap(),
                nvars: 8,
            },
            Module::User,
        )
        .unwrap()
    }

    #[test]
    fn index_lists_include_variable_clauses_in_order() {
        let mut db = Database::new();
        for src in ["p(a, 1)", "p(X, 2)", "p(b, 3)", "p(a, 4)"] {
            let (k, c) = clause(src);
            db.add_clause(k, c, false).unwrap();
        }
        let pred = db.predicate(&(Module::User, Atom::new("p"), 2)).unwrap();
        let list = |key| match pred.candidates(Some(key), true) {
            Candidates::Some(l) => l.to_vec(),
            Candidates::All => vec![],
        };
        assert_eq!(list(IndexKey::Atom(Atom::new("a"))), vec![0, 1, 3]);
        assert_eq!(list(IndexKey::Atom(Atom::new("b"))), vec![1, 2]);
        assert_eq!(list(IndexKey::Atom(Atom::new("zz"))), vec![1]);
        assert!(matches!(pred.candidates(None, true), Candidates::All));
    }

    #[test]
    fn module_qualified_heads() {
        let (k, c) = clause("pce_principal:send_implementation(id, m, r) :- user:true");
        assert_eq!(k.0, Module::Principal);
        assert_eq!(k.2, 3);
        assert_eq!(c.key, Some(IndexKey::Atom(Atom::new("id"))));
    }

    #[test]
    fn builtins_are_protected() {
        let mut db = Database::new();
        db.register_builtin("foo", 1, Rc::new(|_, _| Ok(super::super::Control::True)))
            .unwrap();
        assert!(db
            .register_builtin("foo", 1, Rc::new(|_, _| Ok(super::super::Control::True)))
            .is_err());
        let (_, c) = clause("foo(1)");
        assert!(db.add_clause((Module::User, Atom::new("foo"), 1), c, false).is_err());
    }
}
