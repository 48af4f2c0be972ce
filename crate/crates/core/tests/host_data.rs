//! Lifetime of terms passed to `prolog`-typed parameters.

mod common;

use common::hostdata::{conserved, new_holder, random_cycles, setup};
use objlog::syntax::parser::parse;
use objlog::term::Term;

#[test]
fn ignored_argument_creates_no_record() {
    let mut rt = setup();
    let h = new_holder(&mut rt);
    rt.run(&format!("send({h}, ignore, f(x, [1,2,3]))")).unwrap();
    let s = rt.stats();
    assert_eq!(s.records_created, 0);
    assert_eq!(s.wrappers_live, 0);
}

#[test]
fn stored_argument_is_one_record_readable_later() {
    let mut rt = setup();
    let h = new_holder(&mut rt);
    let payload = "f(a, [1, 2.5, \"s\"], g(X, Y, X))";
    rt.run(&format!("send({h}, keep, {payload})")).unwrap();
    assert_eq!(rt.stats().records_created, 1);
    assert_eq!(rt.stats().records_live, 1);
    // Later queries run after the creating frame has been closed.
    for _ in 0..2 {
        let b = rt.once(&format!("get({h}, data, D)")).unwrap().unwrap();
        assert!(
            common::alpha_equivalent(&b[0].1, &parse(payload).unwrap()),
            "{:?}",
            b[0].1
        );
    }
    assert_eq!(rt.stats().records_created, 1);
    assert!(conserved(&rt));
}

#[test]
fn freeing_owner_destroys_record() {
    let mut rt = setup();
    let h = new_holder(&mut rt);
    rt.run(&format!("send({h}, keep, g(1))")).unwrap();
    assert_eq!(rt.stats().records_live, 1);
    rt.run(&format!("free({h})")).unwrap();
    let s = rt.stats();
    assert_eq!(s.records_live, 0);
    assert_eq!(s.records_destroyed, 1);
    assert_eq!(s.wrappers_live, 0);
    assert!(conserved(&rt));
}

#[test]
fn overwriting_slot_destroys_old_record() {
    let mut rt = setup();
    let h = new_holder(&mut rt);
    rt.run(&format!("send({h}, keep, g(1)), send({h}, keep, g(2))"))
        .unwrap();
    let s = rt.stats();
    assert_eq!((s.records_created, s.records_live), (2, 1));
}

#[test]
fn tree_of_ten_nodes_frees_ten_records() {
    let mut rt = common::runtime(false);
    rt.consult_str(common::MY_NODE).unwrap();
    let leaves: Vec<String> = (1..10).map(|i| format!("node(n{i}, d({i}), [])")).collect();
    let b = rt
        .once(&format!("new(T, my_node(node(root, d(0), [{}])))", leaves.join(", ")))
        .unwrap()
        .unwrap();
    assert_eq!(rt.kernel.count_instances("my_node".into()), 10);
    assert_eq!(rt.stats().records_live, 10);
    let root = match &b[0].1 {
        Term::Obj(id) => id.to_string(),
        other => panic!("{other:?}"),
    };
    rt.run(&format!("free({root})")).unwrap();
    let s = rt.stats();
    assert_eq!(s.records_destroyed, 10);
    assert_eq!(s.records_live, 0);
    assert_eq!(rt.kernel.count_instances("my_node".into()), 0);
}

#[test]
fn random_store_free_cycles_leave_nothing_behind() {
    let rt = random_cycles(0x5eed, 10_000);
    let s = rt.stats();
    assert!(s.records_created > 0);
    assert_eq!(s.records_live, 0);
    assert_eq!(s.wrappers_live, 0);
    assert!(conserved(&rt));
    assert!(rt.audit().is_clean());
}
