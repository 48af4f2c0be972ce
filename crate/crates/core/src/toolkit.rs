//! Headless toolkit classes used by the examples: `point`, `colour`,
//! `text`, `area`, `graphical`, `box`, `picture`, `node`, `message`,
//! `event` and `button`, plus a synthetic event pump.

use std::rc::Rc;

use crate::bridge;
use crate::engine::{Control, EResult, Exception};
use crate::hostdata::PROLOG_TERM;
use crate::kernel::{event, Access, ClassId, Method, NativeFn, Param, Payload, SlotDef, TypeSpec, Value};
use crate::runtime::{PendingEvent, Runtime};
use crate::term::{atoms, Atom, ObjId, Term};

fn native(f: impl Fn(&mut Runtime, ObjId, &[Value]) -> EResult<Option<Value>> + 'static) -> NativeFn {
    Rc::new(f)
}

fn inst(name: &str) -> TypeSpec {
    TypeSpec::Instance(Atom::new(name))
}

fn nil_or(spec: TypeSpec) -> TypeSpec {
    TypeSpec::NilOr(Box::new(spec))
}

fn class(rt: &mut Runtime, name: &str, super_name: &str) -> ClassId {
    rt.kernel
        .define_class(Atom::new(name), Some(Atom::new(super_name)), false)
        .expect("toolkit class")
}

fn slot(rt: &mut Runtime, class: ClassId, name: &str, spec: TypeSpec, access: Access) {
    rt.kernel
        .define_slot(
            class,
            SlotDef {
                name: Atom::new(name),
                spec,
                access,
                doc: String::new(),
            },
        )
        .expect("toolkit slot");
}

fn method(rt: &mut Runtime, class: ClassId, m: Method) {
    rt.kernel.define_method(class, m).expect("toolkit method");
}

fn set(rt: &mut Runtime, id: ObjId, name: &str, v: Value) -> EResult<()> {
    rt.kernel.set_slot(id, Atom::new(name), v, &mut rt.records)
}

fn get(rt: &Runtime, id: ObjId, name: &str) -> EResult<Value> {
    rt.kernel.slot(id, Atom::new(name))
}

fn int(rt: &Runtime, id: ObjId, name: &str) -> EResult<i64> {
    Ok(get(rt, id, name)?.as_int().unwrap_or(0))
}

/// Initialiser storing each argument in the slot of the same position.
fn initialise_slots(names: &'static [&'static str]) -> NativeFn {
    native(move |rt, id, args| {
        for (name, v) in names.iter().zip(args) {
            set(rt, id, name, *v)?;
        }
        Ok(Some(Value::Nil))
    })
}

fn non_negative(v: Value) -> EResult<Value> {
    match v {
        Value::Int(i) if i < 0 => Err(Exception::error(Term::app(
            "domain_error",
            vec![Term::atom("not_less_than_zero"), Term::Int(i)],
        ))),
        other => Ok(other),
    }
}

/// Creates an object of a toolkit class with the given slot values; the
/// caller stores or holds it.
fn make(rt: &mut Runtime, class: &str, slots: &[(&str, Value)]) -> EResult<ObjId> {
    let c = rt
        .kernel
        .class_named(Atom::new(class))
        .ok_or_else(|| Exception::existence("class", Term::atom(class)))?;
    let id = rt.kernel.create(c);
    for (name, v) in slots {
        set(rt, id, name, *v)?;
    }
    Ok(id)
}

pub fn install(rt: &mut Runtime) {
    let object = rt.kernel.class_named(atoms::OBJECT).expect("root class");
    install_object_methods(rt, object);

    let prolog = class(rt, "prolog", "object");
    let proxy = rt.kernel.create_permanent(prolog);
    assert_eq!(proxy, ObjId::PROLOG, "@prolog must be the first object after @nil");
    class(rt, "host_data", "object");
    class(rt, PROLOG_TERM, "host_data");

    let point = class(rt, "point", "object");
    slot(rt, point, "x", TypeSpec::Int, Access::Both);
    slot(rt, point, "y", TypeSpec::Int, Access::Both);
    let opt_int = |v| Param::optional(TypeSpec::Int, Value::Int(v));
    method(
        rt,
        point,
        Method::native_send(
            "initialise",
            vec![opt_int(0), opt_int(0)],
            initialise_slots(&["x", "y"]),
        ),
    );

    let colour = class(rt, "colour", "object");
    slot(rt, colour, "name", TypeSpec::Atom, Access::Get);
    method(
        rt,
        colour,
        Method::native_send(
            "initialise",
            vec![Param::new(TypeSpec::Atom)],
            initialise_slots(&["name"]),
        ),
    );

    let text = class(rt, "text", "object");
    slot(rt, text, "string", TypeSpec::Atom, Access::Both);
    method(
        rt,
        text,
        Method::native_send(
            "initialise",
            vec![Param::optional(TypeSpec::Atom, Value::Atom(atoms::EMPTY))],
            initialise_slots(&["string"]),
        ),
    );

    install_area(rt);
    install_graphicals(rt);
    install_picture(rt);
    install_node(rt);
    install_message(rt);
    install_event(rt);
    install_button(rt);
    install_pump(rt);
}

fn install_object_methods(rt: &mut Runtime, object: ClassId) {
    method(
        rt,
        object,
        Method::native_send(
            "lock",
            vec![],
            native(|rt, id, _| {
                rt.kernel.lock(id)?;
                Ok(Some(Value::Nil))
            }),
        ),
    );
    method(
        rt,
        object,
        Method::native_send(
            "unlock",
            vec![],
            native(|rt, id, _| {
                rt.kernel.unlock(id, &mut rt.records)?;
                Ok(Some(Value::Nil))
            }),
        ),
    );
    method(
        rt,
        object,
        Method::native_send(
            "free",
            vec![],
            native(|rt, id, _| {
                rt.kernel.destroy(id, &mut rt.records)?;
                rt.bridge.session_holds.retain(|h| *h != id);
                Ok(Some(Value::Nil))
            }),
        ),
    );
    method(
        rt,
        object,
        Method::native_get(
            "class_name",
            vec![],
            TypeSpec::Atom,
            native(|rt, id, _| {
                let name = rt.kernel.class_name_of(id).expect("live receiver");
                Ok(Some(Value::Atom(name)))
            }),
        ),
    );
}

fn install_area(rt: &mut Runtime) {
    let area = class(rt, "area", "object");
    for s in ["x", "y", "w", "h"] {
        slot(rt, area, s, TypeSpec::Int, Access::Both);
    }
    let opt_int = || Param::optional(TypeSpec::Int, Value::Int(0));
    method(
        rt,
        area,
        Method::native_send(
            "initialise",
            vec![opt_int(), opt_int(), opt_int(), opt_int()],
            initialise_slots(&["x", "y", "w", "h"]),
        ),
    );
    // Makes width and height non-negative, keeping the covered region.
    method(
        rt,
        area,
        Method::native_send(
            "normalise",
            vec![],
            native(|rt, id, _| {
                for (pos, size) in [("x", "w"), ("y", "h")] {
                    let (p, s) = (int(rt, id, pos)?, int(rt, id, size)?);
                    if s < 0 {
                        set(rt, id, pos, Value::Int(p + s))?;
                        set(rt, id, size, Value::Int(-s))?;
                    }
                }
                Ok(Some(Value::Nil))
            }),
        ),
    );
}

fn install_graphicals(rt: &mut Runtime) {
    let graphical = class(rt, "graphical", "object");
    slot(rt, graphical, "position", nil_or(inst("point")), Access::Both);
    // Default event handling: accept and do nothing.
    method(
        rt,
        graphical,
        Method::native_send(
            "event",
            vec![Param::new(inst("event"))],
            native(|_, _, _| Ok(Some(Value::Nil))),
        ),
    );

    let bx = class(rt, "box", "graphical");
    slot(rt, bx, "width", TypeSpec::Int, Access::Get);
    slot(rt, bx, "height", TypeSpec::Int, Access::Get);
    slot(rt, bx, "fill_pattern", nil_or(inst("colour")), Access::Both);
    let size = || Param::optional(TypeSpec::Int, Value::Int(0));
    method(
        rt,
        bx,
        Method::native_send(
            "initialise",
            vec![size(), size()],
            native(|rt, id, a| {
                set(rt, id, "width", non_negative(a[0])?)?;
                set(rt, id, "height", non_negative(a[1])?)?;
                Ok(Some(Value::Nil))
            }),
        ),
    );
    for dim in ["width", "height"] {
        method(
            rt,
            bx,
            Method::native_send(
                dim,
                vec![Param::new(TypeSpec::Int)],
                native(move |rt, id, a| {
                    set(rt, id, dim, non_negative(a[0])?)?;
                    Ok(Some(Value::Nil))
                }),
            ),
        );
    }
}

fn install_picture(rt: &mut Runtime) {
    let picture = class(rt, "picture", "object");
    slot(rt, picture, "visible", inst("area"), Access::Get);
    method(
        rt,
        picture,
        Method::native_send(
            "initialise",
            vec![],
            native(|rt, id, _| {
                let area = make(
                    rt,
                    "area",
                    &[
                        ("x", Value::Int(0)),
                        ("y", Value::Int(0)),
                        ("w", Value::Int(400)),
                        ("h", Value::Int(300)),
                    ],
                )?;
                set(rt, id, "visible", Value::Object(area))?;
                rt.kernel.object_mut(id)?.payload = Payload::Chain(Vec::new());
                Ok(Some(Value::Nil))
            }),
        ),
    );
    // Displaying an already displayed graphical only moves it.
    method(
        rt,
        picture,
        Method::native_send(
            "display",
            vec![
                Param::new(inst("graphical")),
                Param::optional(nil_or(inst("point")), Value::Nil),
            ],
            native(|rt, id, a| {
                let g = a[0];
                if a[1] != Value::Nil {
                    set(rt, g.referent().expect("graphical"), "position", a[1])?;
                }
                if !rt.kernel.chain(id)?.contains(&g) {
                    rt.kernel.chain_append(id, g)?;
                }
                Ok(Some(Value::Nil))
            }),
        ),
    );
    method(
        rt,
        picture,
        Method::native_get(
            "count",
            vec![],
            TypeSpec::Int,
            native(|rt, id, _| Ok(Some(Value::Int(rt.kernel.chain(id)?.len() as i64)))),
        ),
    );
}

fn install_node(rt: &mut Runtime) {
    let node = class(rt, "node", "object");
    slot(rt, node, "label", nil_or(inst("text")), Access::Both);
    method(
        rt,
        node,
        Method::native_send(
            "initialise",
            vec![Param::optional(nil_or(inst("text")), Value::Nil)],
            initialise_slots(&["label"]),
        ),
    );
    method(
        rt,
        node,
        Method::native_send(
            "son",
            vec![Param::new(inst("node"))],
            native(|rt, id, a| {
                rt.kernel.chain_append(id, a[0])?;
                Ok(Some(Value::Nil))
            }),
        ),
    );
    method(
        rt,
        node,
        Method::native_get(
            "son_count",
            vec![],
            TypeSpec::Int,
            native(|rt, id, _| Ok(Some(Value::Int(rt.kernel.chain(id)?.len() as i64)))),
        ),
    );
    method(
        rt,
        node,
        Method::native_get(
            "nth_son",
            vec![Param::new(TypeSpec::Int)],
            inst("node"),
            native(|rt, id, a| {
                let n = a[0].as_int().unwrap_or(0);
                let sons = rt.kernel.chain(id)?;
                Ok(usize::try_from(n - 1).ok().and_then(|i| sons.get(i)).copied())
            }),
        ),
    );
}

fn install_message(rt: &mut Runtime) {
    let message = class(rt, "message", "object");
    slot(rt, message, "receiver", TypeSpec::Any, Access::Both);
    slot(rt, message, "selector", TypeSpec::Atom, Access::Both);
    method(
        rt,
        message,
        Method::native_send(
            "initialise",
            vec![
                Param::new(TypeSpec::Any),
                Param::new(TypeSpec::Atom),
                Param::new(TypeSpec::Prolog),
            ],
            native(|rt, id, a| {
                set(rt, id, "receiver", a[0])?;
                set(rt, id, "selector", a[1])?;
                rt.kernel.object_mut(id)?.payload = Payload::Chain(Vec::new());
                for v in &a[2..] {
                    rt.kernel.chain_append(id, *v)?;
                }
                Ok(Some(Value::Nil))
            }),
        )
        .variadic(),
    );
    method(
        rt,
        message,
        Method::native_send(
            "execute",
            vec![],
            native(|rt, id, _| {
                let recv = get(rt, id, "receiver")?;
                let sel = get(rt, id, "selector")?.as_atom().expect("selector slot");
                let args = rt.kernel.chain(id)?.to_vec();
                Ok(bridge::send_values(rt, recv, sel, args)?.then_some(Value::Nil))
            }),
        ),
    );
}

fn event_kind(v: Value) -> EResult<Value> {
    match v {
        Value::Atom(k) if event::is_kind(k) => Ok(v),
        Value::Atom(k) => Err(Exception::existence("event_kind", Term::Atom(k))),
        _ => Err(Exception::existence("event_kind", Term::nil())),
    }
}

fn install_event(rt: &mut Runtime) {
    let ev = class(rt, "event", "object");
    slot(rt, ev, "kind", TypeSpec::Atom, Access::Get);
    slot(rt, ev, "x", TypeSpec::Int, Access::Get);
    slot(rt, ev, "y", TypeSpec::Int, Access::Get);
    let coord = || Param::optional(TypeSpec::Int, Value::Int(0));
    method(
        rt,
        ev,
        Method::native_send(
            "initialise",
            vec![Param::new(TypeSpec::Atom), coord(), coord()],
            native(|rt, id, a| {
                set(rt, id, "kind", event_kind(a[0])?)?;
                set(rt, id, "x", a[1])?;
                set(rt, id, "y", a[2])?;
                Ok(Some(Value::Nil))
            }),
        ),
    );
    method(
        rt,
        ev,
        Method::native_send(
            "is_a",
            vec![Param::new(TypeSpec::Atom)],
            native(|rt, id, a| {
                let kind = get(rt, id, "kind")?.as_atom().expect("kind slot");
                let ancestor = event_kind(a[0])?.as_atom().expect("atom");
                Ok(event::is_a(kind, ancestor).then_some(Value::Nil))
            }),
        ),
    );
}

fn install_button(rt: &mut Runtime) {
    let button = class(rt, "button", "graphical");
    slot(rt, button, "label", TypeSpec::Atom, Access::Both);
    slot(rt, button, "message", nil_or(inst("message")), Access::Both);
    method(
        rt,
        button,
        Method::native_send(
            "initialise",
            vec![
                Param::new(TypeSpec::Atom),
                Param::optional(nil_or(inst("message")), Value::Nil),
            ],
            initialise_slots(&["label", "message"]),
        ),
    );
    // A button_down fires the message; other events are ignored.
    method(
        rt,
        button,
        Method::native_send(
            "event",
            vec![Param::new(inst("event"))],
            native(|rt, id, a| {
                let ev = a[0].referent().expect("event");
                let kind = get(rt, ev, "kind")?.as_atom().expect("kind slot");
                let msg = get(rt, id, "message")?;
                if !event::is_a(kind, Atom::new("button_down")) || msg == Value::Nil {
                    return Ok(Some(Value::Nil));
                }
                Ok(bridge::send_values(rt, msg, Atom::new("execute"), vec![])?.then_some(Value::Nil))
            }),
        ),
    );
}

/// Builds an event object and sends it to `target` as `event`.
pub fn deliver(rt: &mut Runtime, e: PendingEvent) -> EResult<bool> {
    rt.kernel.object(e.target)?;
    event_kind(Value::Atom(e.kind))?;
    let ev = make(
        rt,
        "event",
        &[
            ("kind", Value::Atom(e.kind)),
            ("x", Value::Int(e.x)),
            ("y", Value::Int(e.y)),
        ],
    )?;
    rt.kernel.hold(ev);
    let out = bridge::send_values(rt, Value::Object(e.target), atoms::EVENT, vec![Value::Object(ev)]);
    rt.kernel.unhold(ev, &mut rt.records);
    out
}

fn pending(rt: &Runtime, a: &[Term]) -> EResult<PendingEvent> {
    let target = bridge::receiver(rt, &a[0])?;
    let kind = match rt.store.deref(&a[1]) {
        Term::Atom(k) => k,
        Term::Var(_) => return Err(Exception::instantiation()),
        other => return Err(Exception::type_error(&rt.store, "atom", &other)),
    };
    let coord = |t: &Term| match rt.store.deref(t) {
        Term::Int(i) => Ok(i),
        Term::Var(_) => Err(Exception::instantiation()),
        other => Err(Exception::type_error(&rt.store, "integer", &other)),
    };
    Ok(PendingEvent {
        target,
        kind,
        x: coord(&a[2])?,
        y: coord(&a[3])?,
    })
}

fn install_pump(rt: &mut Runtime) {
    let reg = |rt: &mut Runtime, name: &str, arity: usize, f: crate::engine::Builtin| {
        rt.db.register_builtin(name, arity, f).expect("pump builtin");
    };
    reg(
        rt,
        "pump_event",
        4,
        Rc::new(|rt, a| {
            let e = pending(rt, a)?;
            Ok(deliver(rt, e)?.into())
        }),
    );
    reg(
        rt,
        "post_event",
        4,
        Rc::new(|rt, a| {
            let e = pending(rt, a)?;
            event_kind(Value::Atom(e.kind))?;
            rt.events.push_back(e);
            Ok(Control::True)
        }),
    );
    // Delivers queued events in order; a refused event does not stop the
    // queue, a freed target is skipped.
    reg(
        rt,
        "dispatch_events",
        0,
        Rc::new(|rt, _| {
            while let Some(e) = rt.events.pop_front() {
                if rt.kernel.is_live(e.target) {
                    deliver(rt, e)?;
                }
            }
            Ok(Control::True)
        }),
    );
}

/// One line per graphical displayed on a live picture:
/// `class@id pos=(x,y) fill=<name|nil>`.
pub fn scene_dump(rt: &Runtime) -> Vec<String> {
    let Some(picture) = rt.kernel.class_named(Atom::new("picture")) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let pictures: Vec<ObjId> = rt
        .kernel
        .live_ids()
        .filter(|id| rt.kernel.class_of(*id).is_ok_and(|c| rt.kernel.is_subclass(c, picture)))
        .collect();
    for p in pictures {
        for g in rt.kernel.chain(p).unwrap_or(&[]) {
            let Some(g) = g.referent() else { continue };
            let Some(class) = rt.kernel.class_name_of(g) else {
                continue;
            };
            let pos = match rt.kernel.slot(g, Atom::new("position")) {
                Ok(Value::Object(pt)) => {
                    format!("({},{})", int(rt, pt, "x").unwrap_or(0), int(rt, pt, "y").unwrap_or(0))
                }
                _ => "(0,0)".to_string(),
            };
            let fill = match rt.kernel.slot(g, Atom::new("fill_pattern")) {
                Ok(Value::Object(c)) => get(rt, c, "name")
                    .ok()
                    .and_then(|v| v.as_atom())
                    .map_or_else(|| "nil".to_string(), |a| a.name().to_string()),
                _ => "nil".to_string(),
            };
            out.push(format!("{class}@{} pos={pos} fill={fill}", g.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MY_BOX: &str = r#"
:- pce_begin_class(my_box, box).

event(Box, Event:event) :->
        (   send(Event, is_a, area_enter)
        ->  send(Box, fill_pattern, colour(red))
        ;   send(Event, is_a, area_exit)
        ->  send(Box, fill_pattern, @nil)
        ;   send_super(Box, event, Event)
        ).

:- pce_end_class(my_box).
"#;

    #[test]
    fn prolog_proxy_is_object_one() {
        let rt = Runtime::captured();
        assert_eq!(rt.kernel.class_name_of(ObjId::PROLOG), Some(Atom::new("prolog")));
    }

    #[test]
    fn display_places_box() {
        let mut rt = Runtime::captured();
        assert!(rt
            .run("new(P, picture), send(P, display(box(100,50), point(20,20))), get(P, count, 1)")
            .unwrap());
        let scene = scene_dump(&rt);
        assert_eq!(scene.len(), 1);
        assert!(
            scene[0].starts_with("box@") && scene[0].ends_with(" pos=(20,20) fill=nil"),
            "{scene:?}"
        );
    }

    #[test]
    fn redisplay_repositions() {
        let mut rt = Runtime::captured();
        assert!(rt
            .run(
                "new(P, picture), new(B, box(10,10)), send(P, display(B, point(1,2))), \
                 send(P, display(B, point(5,6))), get(P, count, 1), \
                 get(B, position, Pt), get(Pt, x, 5)"
            )
            .unwrap());
    }

    #[test]
    fn fresh_picture_visible_left_edge_is_zero() {
        let mut rt = Runtime::captured();
        let b = rt
            .once("new(P, picture), get(P, visible, V), get(V, x, X)")
            .unwrap()
            .unwrap();
        assert_eq!(b[2].1, Term::Int(0));
    }

    #[test]
    fn negative_box_size_rejected() {
        let mut rt = Runtime::captured();
        let before = rt.kernel.live_count();
        assert!(rt.run("new(_, box(-1, 5))").is_err());
        assert_eq!(rt.kernel.live_count(), before);
    }

    #[test]
    fn area_normalise() {
        let mut rt = Runtime::captured();
        assert!(rt
            .run("new(A, area(10, 10, -4, 3)), send(A, normalise), get(A, x, 6), get(A, w, 4)")
            .unwrap());
    }

    #[test]
    fn my_box_follows_pointer() {
        let mut rt = Runtime::captured();
        rt.consult_str(MY_BOX).unwrap();
        let b = rt.once("new(B, my_box(20, 20))").unwrap().unwrap();
        let Term::Obj(id) = b[0].1 else { panic!() };
        let fill = |rt: &Runtime| rt.kernel.slot(id, Atom::new("fill_pattern")).unwrap();
        rt.run(&format!("pump_event({id}, area_enter, 1, 1)")).unwrap();
        let Value::Object(c) = fill(&rt) else {
            panic!("no colour")
        };
        assert_eq!(get(&rt, c, "name").unwrap(), Value::Atom(Atom::new("red")));
        rt.run(&format!("pump_event({id}, keyboard, 0, 0)")).unwrap();
        assert!(matches!(fill(&rt), Value::Object(_)));
        rt.run(&format!("pump_event({id}, area_exit, 1, 1)")).unwrap();
        assert_eq!(fill(&rt), Value::Nil);
        assert!(rt.audit().is_clean());
    }

    #[test]
    fn default_event_changes_nothing() {
        let mut rt = Runtime::captured();
        let b = rt.once("new(B, box(3, 4))").unwrap().unwrap();
        let Term::Obj(id) = b[0].1 else { panic!() };
        let before = rt.kernel.object(id).unwrap().slots.clone();
        assert!(rt.run(&format!("pump_event({id}, button_down, 0, 0)")).unwrap());
        assert_eq!(rt.kernel.object(id).unwrap().slots, before);
    }

    #[test]
    fn unknown_event_kind() {
        let mut rt = Runtime::captured();
        let e = rt.run("new(B, box), pump_event(B, wiggle, 0, 0)").unwrap_err();
        assert!(e.to_string().contains("event_kind"), "{e}");
    }

    #[test]
    fn button_fires_message() {
        let mut rt = Runtime::captured();
        assert!(rt
            .run(
                "new(B, button(hello, message(@prolog, call, writeln, 'Hello World'))), \
                 post_event(B, button_down, 0, 0), post_event(B, area_enter, 0, 0), dispatch_events"
            )
            .unwrap());
        assert_eq!(rt.take_output(), "Hello World\n");
    }

    #[test]
    fn object_methods() {
        let mut rt = Runtime::captured();
        let b = rt
            .once("new(B, box), get(B, class_name, N), send(B, free)")
            .unwrap()
            .unwrap();
        assert_eq!(b[1].1, Term::atom("box"));
        assert!(rt.run("new(B, point), send(B, lock), send(B, unlock)").unwrap());
    }
}
