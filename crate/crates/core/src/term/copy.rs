//! Frame-independent term copies: clause storage, thrown balls and the
//! permanent records owned by kernel objects.

use std::collections::{HashMap, HashSet};

use super::{Atom, FrameId, Store, Term, TermError, TermRef, VarId};

/// A term whose variables are numbered `0..nvars`, independent of any store.
#[derive(Clone, Debug, PartialEq)]
pub struct Detached {
    pub term: Term,
    pub nvars: u32,
}

impl Detached {
    pub fn ground(term: Term) -> Detached {
        Detached { term, nvars: 0 }
    }

    /// Copies `term` out of the store, renaming unbound variables in order of
    /// first occurrence.
    pub fn from_store(store: &Store, term: &Term, limit: usize) -> Result<Detached, TermError> {
        let mut renames: HashMap<VarId, VarId> = HashMap::new();
        let (term, _) = rebuild(store, term, limit, &mut |v| {
            let next = renames.len() as VarId;
            Term::Var(*renames.entry(v).or_insert(next))
        })?;
        Ok(Detached {
            term,
            nvars: renames.len() as u32,
        })
    }

    /// Creates a fresh copy in the store with new variables.
    pub fn instantiate(&self, store: &mut Store) -> Term {
        if self.nvars == 0 {
            return self.term.clone();
        }
        let base = store.alloc_vars(self.nvars as usize);
        shift_vars(&self.term, base)
    }
}

/// Renames local variable `i` to store variable `base + i`.
pub(crate) fn shift_vars(term: &Term, base: VarId) -> Term {
    shift_rec(term, base, 0)
}

fn shift_rec(term: &Term, base: VarId, depth: usize) -> Term {
    match term {
        Term::Var(i) => Term::Var(base + i),
        Term::Compound(c) if c.has_vars() => {
            if depth > 256 {
                return shift_iter(term, base);
            }
            let args = c.args.iter().map(|a| shift_rec(a, base, depth + 1)).collect();
            Term::compound(c.functor, args)
        }
        _ => term.clone(),
    }
}

fn shift_iter(term: &Term, base: VarId) -> Term {
    enum Work<'a> {
        Visit(&'a Term),
        Build(Atom, usize),
    }
    let mut stack = vec![Work::Visit(term)];
    let mut out: Vec<Term> = Vec::new();
    while let Some(work) = stack.pop() {
        match work {
            Work::Visit(Term::Var(i)) => out.push(Term::Var(base + i)),
            Work::Visit(t @ Term::Compound(c)) => {
                if !c.has_vars() {
                    out.push(t.clone());
                    continue;
                }
                stack.push(Work::Build(c.functor, c.args.len()));
                stack.extend(c.args.iter().rev().map(Work::Visit));
            }
            Work::Visit(t) => out.push(t.clone()),
            Work::Build(f, n) => {
                let args = out.split_off(out.len() - n);
                out.push(Term::compound(f, args));
            }
        }
    }
    out.pop().expect("shift produced no term")
}

/// Iteratively rebuilds `term` with all bindings substituted; unbound
/// variables are mapped through `on_unbound`. Returns the copy and the number
/// of nodes visited.
pub(crate) fn rebuild(
    store: &Store,
    term: &Term,
    limit: usize,
    on_unbound: &mut dyn FnMut(VarId) -> Term,
) -> Result<(Term, usize), TermError> {
    enum Work {
        Visit(Term),
        Build(Atom, usize),
        Leave(VarId),
    }
    let mut nodes = 0usize;
    let mut on_path: HashSet<VarId> = HashSet::new();
    let mut stack = vec![Work::Visit(term.clone())];
    let mut out: Vec<Term> = Vec::new();
    while let Some(work) = stack.pop() {
        match work {
            Work::Visit(Term::Var(v)) => match store.binding(v) {
                Some(value) => {
                    if !on_path.insert(v) {
                        return Err(TermError::Cyclic);
                    }
                    stack.push(Work::Leave(v));
                    stack.push(Work::Visit(value.clone()));
                }
                None => {
                    nodes += 1;
                    out.push(on_unbound(v));
                }
            },
            Work::Visit(t @ Term::Compound(_)) => {
                let Term::Compound(c) = &t else { unreachable!() };
                if !c.has_vars() {
                    if limit != usize::MAX {
                        nodes += t.node_count();
                    } else {
                        nodes += 1;
                    }
                    out.push(t);
                } else {
                    nodes += 1;
                    stack.push(Work::Build(c.functor, c.args.len()));
                    stack.extend(c.args.iter().rev().cloned().map(Work::Visit));
                }
            }
            Work::Visit(t) => {
                nodes += 1;
                out.push(t);
            }
            Work::Build(f, n) => {
                let args = out.split_off(out.len() - n);
                out.push(Term::compound(f, args));
            }
            Work::Leave(v) => {
                on_path.remove(&v);
            }
        }
        if nodes > limit {
            return Err(TermError::TooLarge { limit });
        }
    }
    Ok((out.pop().expect("rebuild produced no term"), nodes))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct RecordId(pub u64);

/// A permanent copy of a term, independent of every engine stack.
#[derive(Clone, Debug)]
pub struct TermRecord {
    pub id: RecordId,
    pub payload: Detached,
}

/// The permanent heap: records keyed by id, with lifetime counters.
#[derive(Default)]
pub struct Records {
    live: HashMap<RecordId, TermRecord>,
    next: u64,
    created: u64,
    destroyed: u64,
    pub node_limit: usize,
}

impl Records {
    pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

    pub fn new() -> Records {
        Records {
            node_limit: Records::DEFAULT_NODE_LIMIT,
            next: 1,
            ..Records::default()
        }
    }

    /// Copies the term behind `r` onto the permanent heap.
    pub fn copy_to_record(&mut self, store: &Store, r: TermRef) -> Result<RecordId, TermError> {
        let term = store.term_of(r)?;
        self.record_term(store, &term)
    }

    pub fn record_term(&mut self, store: &Store, term: &Term) -> Result<RecordId, TermError> {
        let payload = Detached::from_store(store, term, self.node_limit)?;
        let id = RecordId(self.next);
        self.next += 1;
        self.created += 1;
        self.live.insert(id, TermRecord { id, payload });
        Ok(id)
    }

    /// Replays a record as a fresh term registered in `frame`.
    pub fn record_to_term(&self, id: RecordId, store: &mut Store, frame: FrameId) -> Result<TermRef, TermError> {
        let term = self.replay(id, store)?;
        store.new_term_ref(frame, term)
    }

    pub fn replay(&self, id: RecordId, store: &mut Store) -> Result<Term, TermError> {
        let record = self.live.get(&id).ok_or(TermError::RecordDestroyed(id.0))?;
        Ok(record.payload.instantiate(store))
    }

    pub fn get(&self, id: RecordId) -> Option<&TermRecord> {
        self.live.get(&id)
    }

    pub fn destroy(&mut self, id: RecordId) -> bool {
        if self.live.remove(&id).is_some() {
            self.destroyed += 1;
            true
        } else {
            false
        }
    }

    pub fn live_count(&self) -> usize {
        self.live.len()
    }

    pub fn created(&self) -> u64 {
        self.created
    }

    pub fn destroyed(&self) -> u64 {
        self.destroyed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    fn f(args: Vec<Term>) -> Term {
        Term::app("f", args)
    }

    #[test]
    fn ground_record_is_structurally_equal() {
        let mut store = Store::new();
        let mut records = Records::new();
        let frame = store.open_frame();
        let t = Term::app(
            "node",
            vec![Term::atom("hello"), Term::app("data", vec![Term::Int(1)]), Term::nil()],
        );
        let r = store.new_term_ref(frame, t.clone()).unwrap();
        let id = records.copy_to_record(&store, r).unwrap();
        assert_eq!(records.get(id).unwrap().payload.term, t);
        let back = records.record_to_term(id, &mut store, frame).unwrap();
        assert_eq!(store.term_of(back).unwrap(), t);
    }

    #[test]
    fn record_keeps_sharing_and_independence() {
        let mut store = Store::new();
        let mut records = Records::new();
        let frame = store.open_frame();
        let x = store.fresh_var();
        let r = store.new_term_ref(frame, f(vec![x.clone(), x.clone()])).unwrap();
        let id = records.copy_to_record(&store, r).unwrap();
        let Term::Var(xv) = x else { unreachable!() };
        store.bind(xv, Term::Int(5));
        let payload = &records.get(id).unwrap().payload;
        assert_eq!(payload.nvars, 1);
        assert_eq!(payload.term, f(vec![Term::Var(0), Term::Var(0)]));
    }

    #[test]
    fn distinct_variables_stay_distinct() {
        let mut store = Store::new();
        let x = store.fresh_var();
        let y = store.fresh_var();
        let d = Detached::from_store(&store, &f(vec![x, y]), usize::MAX).unwrap();
        assert_eq!(d.nvars, 2);
        assert_eq!(d.term, f(vec![Term::Var(0), Term::Var(1)]));
    }

    #[test]
    fn cyclic_terms_are_rejected() {
        let mut store = Store::new();
        let x = store.fresh_var();
        let Term::Var(xv) = x else { unreachable!() };
        store.bind(xv, f(vec![x.clone()]));
        assert_eq!(Detached::from_store(&store, &x, usize::MAX), Err(TermError::Cyclic));
    }

    #[test]
    fn shared_bound_subterm_is_not_a_cycle() {
        let mut store = Store::new();
        let x = store.fresh_var();
        let Term::Var(xv) = x else { unreachable!() };
        store.bind(xv, Term::atom("a"));
        let d = Detached::from_store(&store, &f(vec![x.clone(), x]), usize::MAX).unwrap();
        assert_eq!(d.term, f(vec![Term::atom("a"), Term::atom("a")]));
    }

    #[test]
    fn node_limit_raises() {
        let store = Store::new();
        let mut records = Records::new();
        records.node_limit = 10;
        let big = Term::list((0..20).map(Term::Int));
        assert_eq!(
            records.record_term(&store, &big),
            Err(TermError::TooLarge { limit: 10 })
        );
    }

    #[test]
    fn destroyed_record_cannot_be_replayed() {
        let mut store = Store::new();
        let mut records = Records::new();
        let id = records.record_term(&store, &Term::Int(1)).unwrap();
        assert!(records.destroy(id));
        assert_eq!(records.live_count(), 0);
        assert!(matches!(
            records.replay(id, &mut store),
            Err(TermError::RecordDestroyed(_))
        ));
    }

    #[test]
    fn deep_terms_copy_iteratively() {
        let mut store = Store::new();
        let x = store.fresh_var();
        let list = Term::list_with_tail((0..200_000).map(Term::Int), x);
        let d = Detached::from_store(&store, &list, usize::MAX).unwrap();
        assert_eq!(d.nvars, 1);
        let back = d.instantiate(&mut store);
        assert_eq!(back.node_count(), list.node_count());
    }
}
