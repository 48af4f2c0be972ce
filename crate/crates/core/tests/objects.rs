//! Properties of the object kernel, the bridge, compiled methods and the
//! toolkit, checked through logic queries.

mod common;

use objlog::kernel::event;
use objlog::term::{Atom, Term};
use objlog::Runtime;
use proptest::prelude::*;

fn obj(rt: &mut Runtime, spec: &str) -> String {
    let b = rt.once(&format!("new(X, {spec})")).unwrap().unwrap();
    match &b[0].1 {
        Term::Obj(id) => id.to_string(),
        other => panic!("{other:?}"),
    }
}

#[derive(Clone, Debug)]
enum Op {
    NewBox(i64),
    Display(usize, i64),
    Son(usize, usize),
    Fill(usize, bool),
    Free(usize),
    Release,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0i64..50).prop_map(Op::NewBox),
        (0usize..8, 0i64..20).prop_map(|(i, x)| Op::Display(i, x)),
        (0usize..8, 0usize..8).prop_map(|(a, b)| Op::Son(a, b)),
        (0usize..8, any::<bool>()).prop_map(|(i, red)| Op::Fill(i, red)),
        (0usize..8).prop_map(Op::Free),
        Just(Op::Release),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_operations_keep_the_audit_clean(ops in prop::collection::vec(op(), 1..40)) {
        let mut rt = common::runtime(false);
        let picture = obj(&mut rt, "picture");
        let nodes: Vec<String> = (0..4).map(|i| obj(&mut rt, &format!("node(text(n{i}))"))).collect();
        let mut boxes = Vec::new();
        for op in ops {
            // Errors (freed objects, bad indexes) are part of the exercise.
            let goal = match op {
                Op::NewBox(w) => {
                    boxes.push(obj(&mut rt, &format!("box({w}, {w})")));
                    continue;
                }
                Op::Display(i, x) if !boxes.is_empty() => {
                    format!("send({picture}, display({}, point({x}, 0)))", boxes[i % boxes.len()])
                }
                Op::Son(a, b) => format!("send({}, son, {})", nodes[a % 4], nodes[b % 4]),
                Op::Fill(i, red) if !boxes.is_empty() => {
                    let fill = if red { "colour(red)" } else { "@nil" };
                    format!("send({}, fill_pattern, {fill})", boxes[i % boxes.len()])
                }
                Op::Free(i) if !boxes.is_empty() => format!("free({})", boxes[i % boxes.len()]),
                Op::Release => {
                    rt.release_holds();
                    continue;
                }
                _ => continue,
            };
            let _ = rt.run(&format!("catch(({goal}), _, true)"));
            let report = rt.audit();
            prop_assert!(report.discrepancies.is_empty(), "{:?} after {}", report, goal);
        }
    }

    #[test]
    fn integers_round_trip(x in any::<i32>(), y in any::<i32>()) {
        let mut rt = common::runtime(false);
        let goal = format!("new(P, point({x}, {y})), get(P, x, X), get(P, y, Y), X == {x}, Y == {y}");
        prop_assert!(rt.run(&goal).unwrap());
    }

    #[test]
    fn atoms_round_trip(name in "[a-z][a-zA-Z0-9_]{0,8}|'[ a-z!?]{0,6}'") {
        let mut rt = common::runtime(false);
        let goal = format!("A = {name}, new(T, text(A)), get(T, string, S), S == A");
        prop_assert!(rt.run(&goal).unwrap(), "{}", goal);
    }

    #[test]
    fn send_then_get_returns_the_value(i in any::<i32>(), case in 0usize..4) {
        let mut rt = common::runtime(false);
        let (class, slot, value, check) = [
            ("point", "x", i.to_string(), format!("R == {i}")),
            ("box", "fill_pattern", "@nil".into(), "R == @nil".into()),
            ("box", "fill_pattern", "colour(blue)".into(), "get(R, name, blue)".into()),
            ("node", "label", format!("text(t{})", i.unsigned_abs()), format!("get(R, string, t{})", i.unsigned_abs())),
        ][case].clone();
        let goal = format!("new(O, {class}), send(O, {slot}, {value}), get(O, {slot}, R), {check}");
        prop_assert!(rt.run(&goal).unwrap(), "{}", goal);
    }

    #[test]
    fn failed_conversion_leaves_no_objects(bad in 0usize..4) {
        let mut rt = common::runtime(false);
        let mut args = ["1", "2", "3", "4"];
        args[bad] = "not_an_int";
        let before = rt.kernel.live_count();
        let goal = format!("catch(new(_, area({})), error(type_error(_, _), _), true)", args.join(", "));
        prop_assert!(rt.run(&goal).unwrap());
        prop_assert_eq!(rt.kernel.live_count(), before);
        prop_assert!(rt.audit().is_clean());
        // Same at each position of a nested construction.
        let goal = format!(
            "new(P, picture), catch(send(P, display(box(1,1), point({}, {}))), error(type_error(_, _), _), true)",
            if bad % 2 == 0 { "x" } else { "1" },
            if bad % 2 == 1 { "y" } else { "1" },
        );
        prop_assert!(rt.run(&goal).unwrap());
        prop_assert_eq!(rt.kernel.count_instances(Atom::new("box")), 0);
        prop_assert!(rt.audit().is_clean());
    }
}

#[test]
fn object_identity_survives_the_round_trip() {
    let mut rt = common::runtime(false);
    let goal = "new(N, node), new(S, node), send(N, son, S), get(N, nth_son, 1, S2), S2 == S";
    assert!(rt.run(goal).unwrap());
}

#[test]
fn compound_argument_creates_one_instance() {
    let mut rt = common::runtime(false);
    let b = obj(&mut rt, "box(1,1)");
    let colours = |rt: &Runtime| rt.kernel.count_instances(Atom::new("colour"));
    let before = colours(&rt);
    assert!(rt.run(&format!("send({b}, fill_pattern, colour(red))")).unwrap());
    assert_eq!(colours(&rt), before + 1);
}

#[test]
fn event_kinds_form_a_tree() {
    let kinds: Vec<Atom> = event::kinds().collect();
    for &a in &kinds {
        assert!(event::is_a(a, a), "reflexive at {a:?}");
        assert!(event::is_a(a, Atom::new("any")));
        for &b in &kinds {
            for &c in &kinds {
                if event::is_a(a, b) && event::is_a(b, c) {
                    assert!(event::is_a(a, c), "{a:?} {b:?} {c:?}");
                }
            }
            if a != b && event::is_a(a, b) {
                assert!(!event::is_a(b, a), "antisymmetric at {a:?} {b:?}");
            }
        }
    }
}

#[test]
fn subclass_relation_is_reflexive_and_transitive() {
    let rt = common::runtime(true);
    let ids: Vec<_> = rt
        .kernel
        .classes()
        .map(|c| rt.kernel.class_named(c.name).unwrap())
        .collect();
    for &a in &ids {
        assert!(rt.kernel.is_subclass(a, a));
        for &b in &ids {
            for &c in &ids {
                if rt.kernel.is_subclass(a, b) && rt.kernel.is_subclass(b, c) {
                    assert!(rt.kernel.is_subclass(a, c));
                }
            }
        }
    }
}

const DIRECT: &str = r#"
body(X, Y) :- between(1, X, I), ( Y = i(I) ; Y = j(I, X) ).
:- pce_begin_class(mirror, object).
:- pure_method(body).
body(_, X:int, Y:prolog) :-> between(1, X, I), ( Y = i(I) ; Y = j(I, X) ).
:- pce_end_class(mirror).
"#;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn compiled_body_keeps_its_solutions(x in 0i64..6, eager in any::<bool>()) {
        let mut rt = common::runtime(eager);
        rt.consult_str(DIRECT).unwrap();
        let goal = format!("findall(Y, body({x}, Y), A), new(O, mirror), findall(Y, send(O, body, {x}, Y), B), A == B");
        prop_assert!(rt.run(&goal).unwrap(), "{}", goal);
    }

    #[test]
    fn no_live_wrappers_at_quiescence(terms in prop::collection::vec("[a-c]|f\\(_\\)|g\\([a-c], _\\)|\\[_, 1\\]", 1..10)) {
        let mut rt = common::runtime(false);
        rt.consult_str(common::MY_NODE).unwrap();
        for t in &terms {
            let _ = rt.run(&format!("new(N, my_node(node(x, {t}, []))), get(N, data, _), free(N)"));
            prop_assert!(rt.kernel.live_state_wrappers().is_empty());
        }
        prop_assert_eq!(rt.stats().wrappers_live, 0);
    }

    #[test]
    fn stored_copy_is_isolated(k in 1usize..4) {
        let mut rt = common::runtime(false);
        rt.consult_str(common::MY_NODE).unwrap();
        let vars: Vec<String> = (0..k).map(|i| format!("V{i}")).collect();
        let payload = format!("p({})", vars.join(", "));
        let bind: Vec<String> = vars.iter().map(|v| format!("{v} = bound")).collect();
        let goal = format!(
            "new(N, my_node(node(x, {payload}, []))), {}, get(N, data, D), D = p(A{}), var(A)",
            bind.join(", "),
            ", _".repeat(k - 1),
        );
        prop_assert!(rt.run(&goal).unwrap(), "{}", goal);
    }
}

#[derive(Clone, Debug)]
struct TreeShape {
    name: String,
    data: String,
    sons: Vec<TreeShape>,
}

impl TreeShape {
    fn text(&self) -> String {
        let sons: Vec<String> = self.sons.iter().map(TreeShape::text).collect();
        format!("node({}, {}, [{}])", self.name, self.data, sons.join(", "))
    }

    fn size(&self) -> usize {
        1 + self.sons.iter().map(TreeShape::size).sum::<usize>()
    }
}

fn tree_shape() -> impl Strategy<Value = TreeShape> {
    let leaf = ("[a-e]{1,3}", "d[0-9]|f\\([a-z]\\)|g\\(1, [a-z]\\)").prop_map(|(name, data)| TreeShape {
        name,
        data,
        sons: vec![],
    });
    leaf.prop_recursive(3, 16, 4, |inner| {
        ("[a-e]{1,3}", "f\\([a-z]\\)", prop::collection::vec(inner, 0..4)).prop_map(|(name, data, sons)| TreeShape {
            name,
            data,
            sons,
        })
    })
}

const READ_BACK: &str = r#"
tree(N, node(Name, Data, Sons)) :-
    get(N, label, L), get(L, string, Name),
    get(N, data, Data),
    get(N, son_count, C),
    findall(S, (between(1, C, I), get(N, nth_son, I, SN), tree(SN, S)), Sons).
"#;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn built_tree_matches_its_shape(s in tree_shape()) {
        let mut rt = common::runtime(false);
        rt.consult_str(common::MY_NODE).unwrap();
        rt.consult_str(READ_BACK).unwrap();
        let text = s.text();
        let goal = format!("new(T, my_node({text})), tree(T, Back), Back == {text}");
        prop_assert!(rt.run(&goal).unwrap(), "{}", goal);
        prop_assert_eq!(rt.kernel.count_instances(Atom::new("my_node")), s.size());
    }

    #[test]
    fn fill_follows_the_event_sequence(kinds in prop::collection::vec(0usize..5, 0..16)) {
        const KINDS: [&str; 5] = ["area_enter", "area_exit", "button_down", "button_up", "keyboard"];
        let mut rt = common::runtime(false);
        rt.consult_str(common::MY_BOX).unwrap();
        let b = obj(&mut rt, "my_box(10, 10)");
        let mut expected = "nil";
        for k in kinds {
            expected = match KINDS[k] {
                "area_enter" => "red",
                "area_exit" => "nil",
                _ => expected,
            };
            let goal = format!(
                "pump_event({b}, {}, 1, 1), get({b}, fill_pattern, F), \
                 ( F == @nil -> S = nil ; get(F, name, S) ), S == {expected}",
                KINDS[k]
            );
            prop_assert!(rt.run(&goal).unwrap(), "{}", goal);
        }
    }
}
