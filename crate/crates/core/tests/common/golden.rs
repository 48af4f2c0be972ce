//! The compiled `my_box` event method next to the published clause.

use objlog::engine::Module;
use objlog::syntax::parser::parse;
use objlog::term::{atoms, Term};

pub const PUBLISHED: &str = "\
pce_principal:send_implementation('my_box->event', event(A), B) :-
    user:
    (   (   send(A, is_a(area_enter))
        ->  send(B, fill_pattern(colour(red)))
        ;   send(A, is_a(area_exit))
        ->  send(B, fill_pattern(@nil))
        ;   send_class(B, box, event(A))
        )
    )";

/// The published clause as `(head, body)` with the module qualifier of the
/// head removed.
pub fn published() -> (Term, Term) {
    let t = parse(PUBLISHED).unwrap();
    assert!(t.is_functor(atoms::NECK, 2));
    let head = &t.args()[0];
    assert!(head.is_functor(atoms::COLON, 2));
    assert_eq!(head.args()[0], Term::Atom(atoms::PCE_PRINCIPAL));
    (head.args()[1].clone(), t.args()[1].clone())
}

pub fn compiled(eager: bool) -> Vec<(Term, Term)> {
    let mut rt = super::runtime(eager);
    let report = rt.consult_str(super::MY_BOX).unwrap();
    assert!(report.is_clean(), "{:?}", report.diagnostics);
    let pred = rt
        .db
        .predicate(&(Module::Principal, atoms::SEND_IMPLEMENTATION, 3))
        .expect("send_implementation/3 exists");
    pred.clauses.iter().map(|c| (c.head.clone(), c.body.clone())).collect()
}

/// The head and body must match under one shared renaming, so compare
/// them as a single pair term.
pub fn pair(head: &Term, body: &Term) -> Term {
    Term::app("-", vec![head.clone(), body.clone()])
}
