//! Pure-flagged methods keep the choice points of their body; unflagged
//! ones commit to the first solution.

mod common;

use objlog::term::Term;

#[test]
fn pure_method_yields_every_choice() {
    for k in [0, 1, 2, 5] {
        let (pure, committed) = common::choice_counts(k);
        assert_eq!(pure, k, "pick over {k} items");
        assert_eq!(committed, k.min(1), "pick_once over {k} items");
    }
}

#[test]
fn solutions_come_in_list_order() {
    let mut rt = common::runtime(true);
    rt.consult_str(common::CHOICES).unwrap();
    let b = rt
        .once("new(O, chooser), findall(X, send(O, pick, [z, y, x], X), L)")
        .unwrap()
        .unwrap();
    let list = b.iter().find(|(n, _)| n == "L").unwrap();
    assert_eq!(list.1, Term::list(["z", "y", "x"].map(Term::atom)));
}

#[test]
fn cut_after_pure_send_prunes_its_choices() {
    let mut rt = common::runtime(false);
    rt.consult_str(common::CHOICES).unwrap();
    let n = rt.all("new(O, chooser), send(O, pick, [a, b, c], X), !").unwrap().len();
    assert_eq!(n, 1);
}

#[test]
fn backtracking_into_pure_send_leaves_no_wrappers() {
    let mut rt = common::runtime(false);
    rt.consult_str(common::CHOICES).unwrap();
    assert!(rt
        .run("new(O, chooser), forall(send(O, pick, [f(_), g(1)], _), true)")
        .unwrap());
    assert_eq!(rt.stats().wrappers_live, 0);
    assert!(rt.audit().is_clean());
}
