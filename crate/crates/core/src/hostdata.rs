//! Logic terms travelling through the object kernel.
//!
//! A term passed to a `prolog`-typed parameter is wrapped in a
//! `prolog_term` object that refers to the term on the engine stacks. When
//! the bridge call returns, wrappers that only the call itself still holds
//! are destroyed; wrappers that something else retained are copied to a
//! record and keep that copy from then on.

use crate::engine::{EResult, Exception};
use crate::kernel::{HostState, Value};
use crate::runtime::Runtime;
use crate::term::{Atom, FrameId, ObjId, Term};

/// Name of the wrapper class.
pub const PROLOG_TERM: &str = "prolog_term";

/// Objects a single bridge call created and holds.
pub(crate) struct Ledger {
    pub frame: FrameId,
    /// Argument objects built from compound terms.
    pub transients: Vec<ObjId>,
    pub wrappers: Vec<ObjId>,
}

/// Opens the term-reference frame and ledger of a bridge call.
pub(crate) fn open(rt: &mut Runtime) {
    let frame = rt.store.open_frame();
    rt.bridge.ledgers.push(Ledger {
        frame,
        transients: Vec::new(),
        wrappers: Vec::new(),
    });
}

/// The post-call protocol. Runs on success, failure and error alike.
pub(crate) fn close(rt: &mut Runtime) -> EResult<()> {
    let ledger = rt.bridge.ledgers.pop().expect("open ledger");
    for id in ledger.transients {
        rt.kernel.unhold(id, &mut rt.records);
    }
    let mut failure = None;
    for w in ledger.wrappers {
        if !rt.kernel.is_live(w) {
            continue;
        }
        let retained = rt.kernel.object(w)?.refcount > 1;
        if retained {
            if let HostState::Live(tref) = rt.kernel.host_state(w)? {
                match rt.records.copy_to_record(&rt.store, tref) {
                    Ok(record) => rt.kernel.set_recorded(w, record)?,
                    Err(e) => {
                        // Cannot outlive the frame without a copy.
                        rt.kernel.destroy(w, &mut rt.records)?;
                        failure.get_or_insert(Exception::from(e));
                        continue;
                    }
                }
            }
        }
        rt.kernel.unhold(w, &mut rt.records);
    }
    rt.store.close_frame(ledger.frame)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Runs `f` inside a fresh ledger scope.
pub(crate) fn scoped<T>(rt: &mut Runtime, f: impl FnOnce(&mut Runtime) -> EResult<T>) -> EResult<T> {
    open(rt);
    let out = f(rt);
    let closed = close(rt);
    match (out, closed) {
        (Err(e), _) | (Ok(_), Err(e)) => Err(e),
        (Ok(v), Ok(())) => Ok(v),
    }
}

/// Wraps a non-primitive term for a `prolog`-typed parameter of the
/// current call.
pub(crate) fn wrap(rt: &mut Runtime, term: Term) -> EResult<Value> {
    let class = rt
        .kernel
        .class_named(Atom::new(PROLOG_TERM))
        .ok_or_else(|| Exception::existence("class", Term::atom(PROLOG_TERM)))?;
    let frame = rt
        .bridge
        .ledgers
        .last()
        .map(|l| l.frame)
        .expect("wrap outside a bridge call");
    let tref = rt.store.new_term_ref(frame, term)?;
    let id = rt.kernel.create_wrapper(class, tref);
    rt.kernel.hold(id);
    rt.bridge.ledgers.last_mut().expect("open ledger").wrappers.push(id);
    Ok(Value::HostTerm(id))
}

/// Presents a wrapper's term to logic code: the shared live term while its
/// frame is open, a fresh copy once recorded.
pub fn read(rt: &mut Runtime, id: ObjId) -> EResult<Term> {
    match rt.kernel.host_state(id)? {
        HostState::Live(tref) => {
            let term = rt.store.term_of(tref);
            debug_assert!(term.is_ok(), "live wrapper {id} outlived its frame");
            Ok(term?)
        }
        HostState::Recorded(record) => Ok(rt.records.replay(record, &mut rt.store)?),
    }
}

#[cfg(test)]
mod tests {
    use crate::runtime::Runtime;
    use crate::term::Term;

    const NODE: &str = r#"
:- pce_begin_class(holder, object).
variable(data, prolog, both, "Payload").
keep(H, T:prolog) :-> send(H, data, T).
ignore(_, _T:prolog) :-> true.
:- pce_end_class(holder).
"#;

    #[test]
    fn ignored_argument_leaves_no_record() {
        let mut rt = Runtime::captured();
        rt.consult_str(NODE).unwrap();
        rt.run("new(H, holder), send(H, ignore, f(x))").unwrap();
        let s = rt.stats();
        assert_eq!(s.records_created, 0);
        assert_eq!(s.wrappers_live, 0);
        assert_eq!(s.wrappers_created_total, 1);
    }

    #[test]
    fn stored_argument_is_recorded_and_replayed() {
        let mut rt = Runtime::captured();
        rt.consult_str(NODE).unwrap();
        let b = rt
            .once("new(H, holder), send(H, keep, f(X, y)), X = 1, get(H, data, D)")
            .unwrap()
            .unwrap();
        // The copy was taken when the call returned, before X was bound.
        match &b[2].1 {
            Term::Compound(c) => {
                assert!(matches!(c.args[0], Term::Var(_)));
                assert_eq!(c.args[1], Term::atom("y"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(rt.stats().records_live, 1);
        assert!(rt.kernel.live_state_wrappers().is_empty());
    }

    #[test]
    fn freeing_owner_destroys_record() {
        let mut rt = Runtime::captured();
        rt.consult_str(NODE).unwrap();
        rt.run("new(H, holder), send(H, keep, g(1)), free(H)").unwrap();
        let s = rt.stats();
        assert_eq!(s.records_created, 1);
        assert_eq!(s.records_live, 0);
        assert_eq!(s.wrappers_live, 0);
    }

    #[test]
    fn primitives_are_not_wrapped() {
        let mut rt = Runtime::captured();
        rt.consult_str(NODE).unwrap();
        rt.run("new(H, holder), send(H, keep, 42), get(H, data, 42)").unwrap();
        assert_eq!(rt.stats().wrappers_created_total, 0);
    }
}
