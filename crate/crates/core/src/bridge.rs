//! The bridge predicates `new/2`, `send/2..`, `get/3..`, `send_class/3`,
//! `get_class/4` and `free/1`, plus value conversion in both directions.

use std::rc::Rc;

use crate::compiler::lookup_class;
use crate::engine::{Control, EResult, Exception, Machine, Module};
use crate::hostdata::{self, Ledger};
use crate::kernel::{ClassId, Method, MethodKind, TypeSpec, Value};
use crate::runtime::Runtime;
use crate::term::{atoms, Atom, ObjId, Term};

/// Highest spread-form arity registered for `send` (receiver and selector
/// included).
const MAX_SPREAD: usize = 9;

#[derive(Default)]
pub struct BridgeState {
    /// Objects kept alive for the toplevel: instances made by `new/2` and
    /// otherwise unreferenced objects returned by `get/3`.
    pub session_holds: Vec<ObjId>,
    pub(crate) ledgers: Vec<Ledger>,
}

impl BridgeState {
    /// Number of bridge calls in progress.
    pub fn depth(&self) -> usize {
        self.ledgers.len()
    }
}

enum Args<'a> {
    Terms(&'a [Term]),
    Values(Vec<Value>),
}

impl Args<'_> {
    fn len(&self) -> usize {
        match self {
            Args::Terms(t) => t.len(),
            Args::Values(v) => v.len(),
        }
    }
}

pub fn install(rt: &mut Runtime) {
    let reg = |rt: &mut Runtime, name: &str, arity: usize, f: crate::engine::Builtin| {
        rt.db.register_builtin(name, arity, f).expect("bridge builtin");
    };
    reg(rt, "new", 2, Rc::new(|rt, a| new_builtin(rt, &a[0], &a[1])));
    for arity in 2..=MAX_SPREAD {
        reg(
            rt,
            "send",
            arity,
            Rc::new(|rt, a| send_builtin(rt, &a[0], &a[1], &a[2..], None)),
        );
    }
    for arity in 3..=MAX_SPREAD + 1 {
        reg(
            rt,
            "get",
            arity,
            Rc::new(|rt, a| {
                let n = a.len();
                get_builtin(rt, &a[0], &a[1], &a[2..n - 1], &a[n - 1], None)
            }),
        );
    }
    reg(
        rt,
        "send_class",
        3,
        Rc::new(|rt, a| {
            let class = class_arg(rt, &a[1])?;
            send_builtin(rt, &a[0], &a[2], &[], Some(class))
        }),
    );
    reg(
        rt,
        "get_class",
        4,
        Rc::new(|rt, a| {
            let class = class_arg(rt, &a[1])?;
            get_builtin(rt, &a[0], &a[2], &[], &a[3], Some(class))
        }),
    );
    reg(
        rt,
        "free",
        1,
        Rc::new(|rt, a| {
            let id = receiver(rt, &a[0])?;
            rt.kernel.destroy(id, &mut rt.records)?;
            rt.bridge.session_holds.retain(|h| *h != id);
            Ok(Control::True)
        }),
    );
    reg(
        rt,
        "object",
        1,
        Rc::new(|rt, a| {
            Ok(match rt.store.deref(&a[0]) {
                Term::Obj(id) => rt.kernel.is_live(id).into(),
                _ => Control::Fail,
            })
        }),
    );
}

fn class_arg(rt: &Runtime, t: &Term) -> EResult<Atom> {
    match rt.store.deref(t) {
        Term::Atom(a) => Ok(a),
        Term::Var(_) => Err(Exception::instantiation()),
        other => Err(Exception::type_error(&rt.store, "class", &other)),
    }
}

/// The object a reference term denotes. Freed and unknown objects raise.
pub fn receiver(rt: &Runtime, t: &Term) -> EResult<ObjId> {
    match rt.store.deref(t) {
        Term::Obj(id) => {
            rt.kernel.object(id)?;
            Ok(id)
        }
        Term::Var(_) => Err(Exception::instantiation()),
        other => Err(Exception::type_error(&rt.store, "object", &other)),
    }
}

/// Selector and arguments of `send(R, sel(A...))` or `send(R, sel, A...)`.
fn message_parts(rt: &Runtime, msg: &Term, extra: &[Term]) -> EResult<(Atom, Vec<Term>)> {
    match rt.store.deref(msg) {
        Term::Atom(sel) => Ok((sel, extra.to_vec())),
        Term::Compound(c) if extra.is_empty() => Ok((c.functor, c.args.to_vec())),
        Term::Var(_) => Err(Exception::instantiation()),
        other => Err(Exception::type_error(&rt.store, "selector", &other)),
    }
}

fn message_term(sel: Atom, args: Vec<Term>) -> Term {
    Term::compound(sel, args)
}

fn arity_error(sel: Atom, expected: usize, given: usize) -> Exception {
    Exception::error(Term::compound(
        atoms::TYPE_ERROR,
        vec![
            Term::app("arity", vec![Term::Int(expected as i64)]),
            Term::compound(atoms::SLASH, vec![Term::Atom(sel), Term::Int(given as i64)]),
        ],
    ))
}

fn check_arity(method: &Method, given: usize) -> EResult<()> {
    let p = method.params.len();
    let required = method
        .params
        .iter()
        .take(if method.variadic { p.saturating_sub(1) } else { p })
        .rposition(|param| param.default.is_none())
        .map_or(0, |i| i + 1);
    if given < required || (!method.variadic && given > p) {
        return Err(arity_error(method.selector, p, given));
    }
    Ok(())
}

fn find_method(rt: &mut Runtime, id: ObjId, start: Option<Atom>, sel: Atom, kind: MethodKind) -> EResult<Rc<Method>> {
    let class = rt.kernel.class_of(id)?;
    let from = match start {
        None => class,
        Some(name) => {
            let c = lookup_class(rt, name)?.ok_or_else(|| Exception::existence("class", Term::Atom(name)))?;
            if !rt.kernel.is_subclass(class, c) {
                return Err(Exception::type_error(&rt.store, name.name(), &Term::Obj(id)));
            }
            c
        }
    };
    rt.kernel.resolve_method(from, sel, kind).ok_or_else(|| {
        let class_name = Term::Atom(rt.kernel.class(from).name);
        Exception::existence(
            "method",
            Term::compound(Atom::new(kind.arrow()), vec![class_name, Term::Atom(sel)]),
        )
    })
}

/// Goal run for a message to `@prolog`: `call(P, A...)` calls `P(A...)`,
/// any other selector is called as a predicate with its arguments.
fn prolog_goal(sel: Atom, mut args: Vec<Term>, result: Option<Term>) -> Term {
    args.extend(result);
    let goal = Term::compound(sel, args);
    let goal = Term::compound(atoms::COLON, vec![Term::Atom(atoms::USER), goal]);
    Term::compound(atoms::ONCE, vec![goal])
}

fn implementation_goal(id: Atom, msg: Term, recv: ObjId, result: Option<Term>) -> Term {
    let (name, mut args) = match result {
        None => (atoms::SEND_IMPLEMENTATION, vec![Term::Atom(id), msg, Term::Obj(recv)]),
        Some(_) => (atoms::GET_IMPLEMENTATION, vec![Term::Atom(id), msg, Term::Obj(recv)]),
    };
    args.extend(result);
    Term::compound(
        atoms::COLON,
        vec![Term::Atom(atoms::PCE_PRINCIPAL), Term::compound(name, args)],
    )
}

fn send_builtin(rt: &mut Runtime, recv: &Term, msg: &Term, extra: &[Term], start: Option<Atom>) -> EResult<Control> {
    let id = receiver(rt, recv)?;
    let (sel, args) = message_parts(rt, msg, extra)?;
    if id == ObjId::PROLOG && start.is_none() {
        return Ok(Control::Call(prolog_goal(sel, args, None)));
    }
    let method = find_method(rt, id, start, sel, MethodKind::Send)?;
    check_arity(&method, args.len())?;
    if let (true, Some(mid)) = (method.pure, method.logic_id()) {
        return Ok(Control::Call(implementation_goal(
            mid,
            message_term(sel, args),
            id,
            None,
        )));
    }
    Ok(call_method(rt, id, &method, Args::Terms(&args))?.is_some().into())
}

fn get_builtin(
    rt: &mut Runtime,
    recv: &Term,
    msg: &Term,
    extra: &[Term],
    result: &Term,
    start: Option<Atom>,
) -> EResult<Control> {
    let id = receiver(rt, recv)?;
    let (sel, args) = message_parts(rt, msg, extra)?;
    if id == ObjId::PROLOG && start.is_none() {
        return Ok(Control::Call(prolog_goal(sel, args, Some(result.clone()))));
    }
    let method = find_method(rt, id, start, sel, MethodKind::Get)?;
    check_arity(&method, args.len())?;
    if let (true, Some(mid)) = (method.pure, method.logic_id()) {
        let goal = implementation_goal(mid, message_term(sel, args), id, Some(result.clone()));
        return Ok(Control::Call(goal));
    }
    let Some(value) = call_method(rt, id, &method, Args::Terms(&args))? else {
        return Ok(Control::Fail);
    };
    let term = to_logic(rt, value);
    settle_result(rt, value);
    Ok(rt.store.unify(result, &term?).into())
}

/// Releases the hold `call_method` took on an object-valued get result.
/// An object nothing else references becomes a session hold so that its
/// `@N` reference stays usable.
fn settle_result(rt: &mut Runtime, value: Value) {
    let Some(r) = value.referent() else {
        return;
    };
    let only_ours = rt.kernel.object(r).map(|o| o.refcount == 1).unwrap_or(false);
    if only_ours && matches!(value, Value::Object(_)) {
        rt.bridge.session_holds.push(r);
    } else {
        rt.kernel.unhold(r, &mut rt.records);
    }
}

fn new_builtin(rt: &mut Runtime, reference: &Term, spec: &Term) -> EResult<Control> {
    let r = rt.store.deref(reference);
    if !matches!(r, Term::Var(_)) {
        return Err(Exception::error_in(
            &rt.store,
            Term::compound(atoms::UNINSTANTIATION_ERROR, vec![r]),
        ));
    }
    let (name, args) = match rt.store.deref(spec) {
        Term::Atom(a) => (a, Vec::new()),
        Term::Compound(c) => (c.functor, c.args.to_vec()),
        Term::Var(_) => return Err(Exception::instantiation()),
        other => return Err(Exception::type_error(&rt.store, "class", &other)),
    };
    let class = lookup_class(rt, name)?.ok_or_else(|| Exception::existence("class", Term::Atom(name)))?;
    match instantiate(rt, class, &args)? {
        None => Ok(Control::Fail),
        Some(id) => {
            rt.bridge.session_holds.push(id);
            Ok(rt.store.unify(reference, &Term::Obj(id)).into())
        }
    }
}

/// Creates an instance holding one bridge hold and runs `initialise`.
/// Failure or error destroys the partial object.
fn instantiate(rt: &mut Runtime, class: ClassId, args: &[Term]) -> EResult<Option<ObjId>> {
    let id = rt.kernel.create(class);
    rt.kernel.hold(id);
    let outcome = match rt.kernel.resolve_method(class, atoms::INITIALISE, MethodKind::Send) {
        Some(m) => {
            check_arity(&m, args.len()).and_then(|()| call_method(rt, id, &m, Args::Terms(args)).map(|r| r.is_some()))
        }
        None if args.is_empty() => Ok(true),
        None => Err(arity_error(atoms::INITIALISE, 0, args.len())),
    };
    match outcome {
        Ok(true) => Ok(Some(id)),
        Ok(false) => {
            discard(rt, id);
            Ok(None)
        }
        Err(e) => {
            discard(rt, id);
            Err(e)
        }
    }
}

fn discard(rt: &mut Runtime, id: ObjId) {
    if rt.kernel.is_live(id) {
        rt.kernel
            .destroy(id, &mut rt.records)
            .expect("fresh instances are not permanent");
    }
}

/// Converts arguments, invokes the method and runs the post-call protocol.
/// A get result that references an object comes back with one hold the
/// caller must settle.
fn call_method(rt: &mut Runtime, recv: ObjId, method: &Method, args: Args<'_>) -> EResult<Option<Value>> {
    hostdata::scoped(rt, |rt| {
        let Some(values) = convert_args(rt, method, args)? else {
            return Ok(None);
        };
        let out = invoke(rt, recv, method, values)?;
        Ok(match (method.kind, out) {
            (MethodKind::Send, Some(_)) => Some(Value::Nil),
            (MethodKind::Get, Some(v)) => {
                if let Some(r) = v.referent() {
                    rt.kernel.hold(r);
                }
                Some(v)
            }
            (_, None) => None,
        })
    })
}

fn convert_args(rt: &mut Runtime, method: &Method, args: Args<'_>) -> EResult<Option<Vec<Value>>> {
    let given = args.len();
    check_arity(method, given)?;
    let p = method.params.len();
    let spec_at = |i: usize| &method.params[i.min(p.saturating_sub(1))].spec;
    let mut values = Vec::with_capacity(given.max(p));
    match args {
        Args::Terms(terms) => {
            for (i, t) in terms.iter().enumerate() {
                match to_kernel(rt, t, spec_at(i))? {
                    Some(v) => values.push(v),
                    None => return Ok(None),
                }
            }
        }
        Args::Values(vs) => {
            for (i, v) in vs.into_iter().enumerate() {
                values.push(check_value(rt, v, spec_at(i))?);
            }
        }
    }
    let fixed = if method.variadic { p.saturating_sub(1) } else { p };
    for param in method.params.iter().take(fixed).skip(given) {
        values.push(param.default.expect("arity checked"));
    }
    Ok(Some(values))
}

fn invoke(rt: &mut Runtime, recv: ObjId, method: &Method, values: Vec<Value>) -> EResult<Option<Value>> {
    use crate::kernel::Implementation::*;
    match &method.imp {
        Native(f) => f(rt, recv, &values),
        SlotGet(slot) => Ok(Some(rt.kernel.slot(recv, *slot)?)),
        SlotSend(slot) => {
            rt.kernel.set_slot(recv, *slot, values[0], &mut rt.records)?;
            Ok(Some(Value::Nil))
        }
        Logic(id) => {
            let mut args = Vec::with_capacity(values.len());
            for v in values {
                args.push(to_logic(rt, v)?);
            }
            let msg = message_term(method.selector, args);
            let result = match method.kind {
                MethodKind::Send => None,
                MethodKind::Get => Some(rt.store.fresh_var()),
            };
            let goal = implementation_goal(*id, msg, recv, result.clone());
            let mut m = Machine::new(rt, goal, Module::Principal);
            if !m.next(rt)? {
                return Ok(None);
            }
            m.commit(rt);
            match result {
                None => Ok(Some(Value::Nil)),
                Some(r) => to_kernel(rt, &r, &method.ret),
            }
        }
    }
}

fn split_spec(spec: &TypeSpec) -> (&TypeSpec, bool) {
    match spec {
        TypeSpec::NilOr(inner) => (inner, true),
        other => (other, false),
    }
}

fn host_term_class(rt: &Runtime, id: ObjId) -> bool {
    rt.kernel.instance_of(id, Atom::new(hostdata::PROLOG_TERM))
}

/// Converts a logic term for a parameter typed `spec`. `Ok(None)` means an
/// argument object's `initialise` failed.
pub fn to_kernel(rt: &mut Runtime, term: &Term, spec: &TypeSpec) -> EResult<Option<Value>> {
    let t = rt.store.deref(term);
    let (base, nil_ok) = split_spec(spec);
    let open = matches!(base, TypeSpec::Any | TypeSpec::Prolog);
    let mismatch = |rt: &Runtime| Exception::type_error(&rt.store, &spec.to_string(), &t);
    let value = match (&t, base) {
        (Term::Var(_), TypeSpec::Prolog) => hostdata::wrap(rt, t.clone())?,
        (Term::Var(_), _) => return Err(Exception::instantiation()),
        (Term::Int(i), TypeSpec::Float) => Value::Float(*i as f64),
        (Term::Int(i), TypeSpec::Int | TypeSpec::Any | TypeSpec::Prolog) => Value::Int(*i),
        (Term::Float(f), TypeSpec::Float | TypeSpec::Any | TypeSpec::Prolog) => Value::Float(*f),
        (Term::Atom(a), TypeSpec::Atom | TypeSpec::Any | TypeSpec::Prolog) => Value::Atom(*a),
        (Term::Obj(id), _) if *id == ObjId::NIL => {
            if !(nil_ok || open) {
                return Err(mismatch(rt));
            }
            Value::Nil
        }
        (Term::Obj(id), _) => {
            rt.kernel.object(*id)?;
            let ok = match base {
                TypeSpec::Instance(c) => rt.kernel.instance_of(*id, *c),
                _ => open,
            };
            if !ok {
                return Err(mismatch(rt));
            }
            if host_term_class(rt, *id) {
                Value::HostTerm(*id)
            } else {
                Value::Object(*id)
            }
        }
        (Term::Compound(_), TypeSpec::Prolog) => hostdata::wrap(rt, t.clone())?,
        (Term::Compound(c), TypeSpec::Any | TypeSpec::Instance(_)) => {
            let class =
                lookup_class(rt, c.functor)?.ok_or_else(|| Exception::existence("class", Term::Atom(c.functor)))?;
            if let TypeSpec::Instance(want) = base {
                let fits = lookup_class(rt, *want)?.is_some_and(|w| rt.kernel.is_subclass(class, w));
                if !fits {
                    return Err(mismatch(rt));
                }
            }
            let Some(id) = instantiate(rt, class, &c.args)? else {
                return Ok(None);
            };
            if let Some(ledger) = rt.bridge.ledgers.last_mut() {
                ledger.transients.push(id);
            } else {
                rt.bridge.session_holds.push(id);
            }
            Value::Object(id)
        }
        _ => return Err(mismatch(rt)),
    };
    Ok(Some(value))
}

/// Checks a kernel value against a parameter type (kernel-to-kernel
/// sends, such as message execution).
pub fn check_value(rt: &Runtime, v: Value, spec: &TypeSpec) -> EResult<Value> {
    let (base, nil_ok) = split_spec(spec);
    let open = matches!(base, TypeSpec::Any | TypeSpec::Prolog);
    let ok = match (v, base) {
        (Value::Nil, _) => nil_ok || open,
        (Value::Int(i), TypeSpec::Float) => return Ok(Value::Float(i as f64)),
        (Value::Int(_), TypeSpec::Int) | (Value::Float(_), TypeSpec::Float) | (Value::Atom(_), TypeSpec::Atom) => true,
        (Value::Int(_) | Value::Float(_) | Value::Atom(_), _) => open,
        (Value::Object(id) | Value::HostTerm(id), _) => {
            rt.kernel.object(id)?;
            match base {
                TypeSpec::Instance(c) => rt.kernel.instance_of(id, *c),
                _ => open,
            }
        }
    };
    if ok {
        Ok(v)
    } else {
        let culprit = match v {
            Value::Int(i) => Term::Int(i),
            Value::Float(f) => Term::Float(f),
            Value::Atom(a) => Term::Atom(a),
            Value::Object(id) | Value::HostTerm(id) => Term::Obj(id),
            Value::Nil => Term::Obj(ObjId::NIL),
        };
        Err(Exception::type_error(&rt.store, &spec.to_string(), &culprit))
    }
}

/// Converts a kernel value for logic code.
pub fn to_logic(rt: &mut Runtime, v: Value) -> EResult<Term> {
    Ok(match v {
        Value::Int(i) => Term::Int(i),
        Value::Float(f) => Term::Float(f),
        Value::Atom(a) => Term::Atom(a),
        Value::Object(id) => Term::Obj(id),
        Value::Nil => Term::Obj(ObjId::NIL),
        Value::HostTerm(id) => hostdata::read(rt, id)?,
    })
}

/// A send issued by the kernel itself (message objects, event delivery).
/// Messages to `@prolog` run the goal deterministically in `user`.
pub fn send_values(rt: &mut Runtime, recv: Value, sel: Atom, args: Vec<Value>) -> EResult<bool> {
    let id = match recv {
        Value::Object(id) => {
            rt.kernel.object(id)?;
            id
        }
        other => {
            let t = match other {
                Value::Nil => Term::Obj(ObjId::NIL),
                v => to_logic(rt, v)?,
            };
            return Err(Exception::type_error(&rt.store, "object", &t));
        }
    };
    if id == ObjId::PROLOG {
        let mut terms = Vec::with_capacity(args.len());
        for v in args {
            terms.push(to_logic(rt, v)?);
        }
        let goal = prolog_goal(sel, terms, None);
        return rt.solve_once(goal, Module::User);
    }
    let method = find_method(rt, id, None, sel, MethodKind::Send)?;
    Ok(call_method(rt, id, &method, Args::Values(args))?.is_some())
}
