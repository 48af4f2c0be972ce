//! The class compiler: turns `pce_begin_class` ... `pce_end_class` regions
//! into `pce_principal` method clauses and fact tables at consult time, and
//! builds kernel classes from those facts when first needed.

use std::collections::HashSet;
use std::rc::Rc;

use crate::engine::{Control, EResult, Exception, Module};
use crate::kernel::{Access, ClassId, Implementation, Method, MethodKind, Param, SlotDef, TypeSpec};
use crate::runtime::Runtime;
use crate::syntax::writer::format_unquoted;
use crate::term::{atoms, Atom, Term};

/// Directive the hook emits to finish a region once its clauses are stored.
const END_DIRECTIVE: &str = "$pce_end_class";

pub struct CompilerState {
    /// Realize each class as soon as its region has been read.
    pub eager: bool,
    region: Option<Region>,
    /// Classes whose realization is in progress (cycle guard).
    realizing: Vec<Atom>,
}

struct Region {
    class: Atom,
    super_class: Atom,
    /// `(selector, kind)` pairs that already have a fact.
    methods: HashSet<(Atom, MethodKind)>,
    pure: Vec<Atom>,
}

impl CompilerState {
    pub fn new(eager: bool) -> CompilerState {
        CompilerState {
            eager,
            region: None,
            realizing: Vec::new(),
        }
    }

    /// Name of the class whose region is open, if any.
    pub fn open_region(&self) -> Option<Atom> {
        self.region.as_ref().map(|r| r.class)
    }
}

fn syntax_error(what: &str, culprit: Term) -> Exception {
    Exception::error(Term::compound(
        atoms::SYNTAX_ERROR,
        vec![Term::app(what, vec![culprit])],
    ))
}

fn principal(goal: Term) -> Term {
    Term::compound(atoms::COLON, vec![Term::Atom(atoms::PCE_PRINCIPAL), goal])
}

fn fact_keys() -> [(Atom, usize); 5] {
    [
        (atoms::PCE_CLASS, 2),
        (atoms::PCE_VARIABLE, 5),
        (atoms::PCE_SEND_METHOD, 5),
        (atoms::PCE_GET_METHOD, 6),
        (atoms::PCE_PURE, 2),
    ]
}

pub fn install(rt: &mut Runtime) {
    for (name, arity) in fact_keys() {
        rt.db
            .declare_dynamic((Module::Principal, name, arity))
            .expect("fact table");
    }
    rt.db
        .declare_dynamic((Module::Principal, atoms::SEND_IMPLEMENTATION, 3))
        .expect("method table");
    rt.db
        .declare_dynamic((Module::Principal, atoms::GET_IMPLEMENTATION, 4))
        .expect("method table");
    rt.register_expansion_hook(Rc::new(expand));
    rt.db
        .register_builtin(
            END_DIRECTIVE,
            1,
            Rc::new(|rt, a| {
                let name = rt.store.deref(&a[0]).as_atom().ok_or_else(Exception::instantiation)?;
                finish_class(rt, name)?;
                Ok(Control::True)
            }),
        )
        .expect("compiler builtin");
}

/// Reports a region left open at the end of a load.
pub fn end_of_load(rt: &mut Runtime) -> EResult<()> {
    match rt.compiler.region.take() {
        Some(r) => Err(syntax_error("unterminated_class", Term::Atom(r.class))),
        None => Ok(()),
    }
}

fn directive(term: &Term) -> Option<&Term> {
    match term {
        Term::Compound(c) if c.functor == atoms::NECK && c.args.len() == 1 => Some(&c.args[0]),
        _ => None,
    }
}

/// The expansion hook.
pub fn expand(rt: &mut Runtime, term: &Term) -> EResult<Vec<Term>> {
    let term = rt.store.resolve(term)?;
    if let Some(d) = directive(&term) {
        if d.is_functor(atoms::PCE_BEGIN_CLASS, 2) || d.is_functor(atoms::PCE_BEGIN_CLASS, 3) {
            return begin_class(rt, d.args());
        }
        if d.is_functor(atoms::PCE_END_CLASS, 1) {
            return end_class(rt, &d.args()[0]);
        }
        if d.is_functor(atoms::PURE_METHOD, 1) {
            let Some(region) = rt.compiler.region.as_mut() else {
                return Err(syntax_error("pure_method_outside_class", d.args()[0].clone()));
            };
            let sel = d.args()[0]
                .as_atom()
                .ok_or_else(|| syntax_error("pure_method", d.args()[0].clone()))?;
            region.pure.push(sel);
            return Ok(vec![]);
        }
        return Ok(vec![term]);
    }
    let kind = if term.is_functor(atoms::SEND_METHOD_OP, 2) {
        Some(MethodKind::Send)
    } else if term.is_functor(atoms::GET_METHOD_OP, 2) {
        Some(MethodKind::Get)
    } else {
        None
    };
    let Some(region) = rt.compiler.region.as_mut() else {
        if kind.is_some() {
            return Err(syntax_error("method_outside_class", term.args()[0].clone()));
        }
        return Ok(vec![term]);
    };
    if let Some(kind) = kind {
        return compile_method(region, kind, &term.args()[0], &term.args()[1]);
    }
    if term.is_functor(atoms::VARIABLE, 4) || term.is_functor(atoms::VARIABLE, 3) {
        return variable(region.class, term.args());
    }
    Ok(vec![term])
}

fn begin_class(rt: &mut Runtime, args: &[Term]) -> EResult<Vec<Term>> {
    if let Some(open) = rt.compiler.open_region() {
        return Err(syntax_error("nested_class", Term::Atom(open)));
    }
    let (Some(name), Some(super_class)) = (args[0].as_atom(), args[1].as_atom()) else {
        return Err(syntax_error(
            "class_header",
            Term::compound(atoms::PCE_BEGIN_CLASS, args.to_vec()),
        ));
    };
    forget_class(rt, name);
    rt.compiler.region = Some(Region {
        class: name,
        super_class,
        methods: HashSet::new(),
        pure: Vec::new(),
    });
    Ok(vec![principal(Term::compound(
        atoms::PCE_CLASS,
        vec![Term::Atom(name), Term::Atom(super_class)],
    ))])
}

/// Drops the facts and method clauses an earlier load produced for `name`.
fn forget_class(rt: &mut Runtime, name: Atom) {
    let is_name = |t: &Term| t.as_atom() == Some(name);
    for (fact, arity) in fact_keys() {
        rt.db
            .remove_clauses(&(Module::Principal, fact, arity), |c| !is_name(&c.head.args()[0]));
    }
    for (pred, arity, arrow) in [
        (atoms::SEND_IMPLEMENTATION, 3, "->"),
        (atoms::GET_IMPLEMENTATION, 4, "<-"),
    ] {
        let prefix = format!("{}{arrow}", name.name());
        rt.db.remove_clauses(
            &(Module::Principal, pred, arity),
            |c| !matches!(c.head.args()[0].as_atom(), Some(id) if id.name().starts_with(&prefix)),
        );
    }
}

fn end_class(rt: &mut Runtime, name: &Term) -> EResult<Vec<Term>> {
    let Some(region) = rt.compiler.region.take() else {
        return Err(syntax_error("end_without_begin", name.clone()));
    };
    if name.as_atom() != Some(region.class) {
        let class = region.class;
        rt.compiler.region = Some(region);
        return Err(syntax_error("mismatched_end", Term::Atom(class)));
    }
    for sel in &region.pure {
        let defined =
            region.methods.contains(&(*sel, MethodKind::Send)) || region.methods.contains(&(*sel, MethodKind::Get));
        if !defined {
            return Err(Exception::permission(
                "declare",
                "pure_method",
                Term::compound(atoms::ARROW, vec![Term::Atom(region.class), Term::Atom(*sel)]),
            ));
        }
    }
    let _ = region.super_class;
    let mut out: Vec<Term> = region
        .pure
        .iter()
        .map(|sel| {
            principal(Term::compound(
                atoms::PCE_PURE,
                vec![Term::Atom(region.class), Term::Atom(*sel)],
            ))
        })
        .collect();
    out.push(Term::compound(
        atoms::NECK,
        vec![Term::app(END_DIRECTIVE, vec![Term::Atom(region.class)])],
    ));
    Ok(out)
}

/// After a region's clauses are stored: realize it (eager mode) or patch
/// the method table of an already realized class.
fn finish_class(rt: &mut Runtime, name: Atom) -> EResult<()> {
    if let Some(id) = rt.kernel.class_named(name) {
        if rt.kernel.class(id).from_logic {
            for m in method_facts(rt, name, id)? {
                rt.kernel.replace_method(id, m);
            }
        }
        return Ok(());
    }
    if rt.compiler.eager {
        lookup_class(rt, name)?;
    }
    Ok(())
}

fn variable(class: Atom, args: &[Term]) -> EResult<Vec<Term>> {
    let name = args[0]
        .as_atom()
        .ok_or_else(|| syntax_error("variable_name", args[0].clone()))?;
    TypeSpec::parse(&args[1]).map_err(|_| syntax_error("type", args[1].clone()))?;
    let access = args[2]
        .as_atom()
        .filter(|a| Access::parse(a.name()).is_some())
        .ok_or_else(|| syntax_error("access", args[2].clone()))?;
    let doc = args.get(3).cloned().unwrap_or(Term::Atom(atoms::EMPTY));
    Ok(vec![principal(Term::compound(
        atoms::PCE_VARIABLE,
        vec![
            Term::Atom(class),
            Term::Atom(name),
            args[1].clone(),
            Term::Atom(access),
            doc,
        ],
    ))])
}

/// Splits `Name:Type` into the parameter term and its type annotation.
fn param(t: &Term) -> EResult<(Term, Term)> {
    if t.is_functor(atoms::COLON, 2) {
        let ty = &t.args()[1];
        TypeSpec::parse(ty).map_err(|_| syntax_error("type", ty.clone()))?;
        Ok((t.args()[0].clone(), ty.clone()))
    } else {
        Ok((t.clone(), Term::Atom(atoms::ANY)))
    }
}

fn compile_method(region: &mut Region, kind: MethodKind, head: &Term, body: &Term) -> EResult<Vec<Term>> {
    let Term::Compound(h) = head else {
        return Err(syntax_error("method_head", head.clone()));
    };
    let sel = h.functor;
    let mut rest: Vec<Term> = h.args[1..].to_vec();
    let recv = h.args[0].clone();
    let result = match kind {
        MethodKind::Send => None,
        MethodKind::Get => {
            Some(param(&rest.pop().ok_or_else(|| {
                syntax_error("get_method_without_result", head.clone())
            })?)?)
        }
    };
    let mut params = Vec::with_capacity(rest.len());
    let mut types = Vec::with_capacity(rest.len());
    for p in &rest {
        let (t, ty) = param(p)?;
        params.push(t);
        types.push(ty);
    }
    let (doc, body) = strip_doc(body).unwrap_or_else(|| (Term::Atom(atoms::EMPTY), body.clone()));
    let id = Atom::new(&format!("{}{}{}", region.class.name(), kind.arrow(), sel.name()));
    let msg = Term::compound(sel, params);
    let body = Term::compound(
        atoms::COLON,
        vec![Term::Atom(atoms::USER), rewrite(&body, region.super_class)],
    );
    let clause_head = match &result {
        None => Term::compound(atoms::SEND_IMPLEMENTATION, vec![Term::Atom(id), msg, recv]),
        Some((r, _)) => Term::compound(atoms::GET_IMPLEMENTATION, vec![Term::Atom(id), msg, recv, r.clone()]),
    };
    let mut out = Vec::with_capacity(2);
    if region.methods.insert((sel, kind)) {
        let cls = Term::Atom(region.class);
        let fact = match &result {
            None => Term::compound(
                atoms::PCE_SEND_METHOD,
                vec![cls, Term::Atom(sel), Term::list(types), Term::Atom(id), doc],
            ),
            Some((_, ret)) => Term::compound(
                atoms::PCE_GET_METHOD,
                vec![
                    cls,
                    Term::Atom(sel),
                    Term::list(types),
                    ret.clone(),
                    Term::Atom(id),
                    doc,
                ],
            ),
        };
        out.push(principal(fact));
    }
    out.push(principal(Term::compound(atoms::NECK, vec![clause_head, body])));
    Ok(out)
}

/// Detaches a leading `"Doc"::` from a method body. `::` binds tighter
/// than `,`, so the prefix sits on the first conjunct.
fn strip_doc(body: &Term) -> Option<(Term, Term)> {
    if body.is_functor(atoms::DOC_OP, 2) {
        return Some((body.args()[0].clone(), body.args()[1].clone()));
    }
    if body.is_functor(atoms::COMMA, 2) {
        let (doc, first) = strip_doc(&body.args()[0])?;
        return Some((doc, Term::compound(atoms::COMMA, vec![first, body.args()[1].clone()])));
    }
    None
}

fn spread(sel: &Term, args: &[Term]) -> Term {
    match (sel, args.is_empty()) {
        (_, true) => sel.clone(),
        (Term::Atom(a), false) => Term::compound(*a, args.to_vec()),
        _ => sel.clone(),
    }
}

/// Normalizes message sends in a method body: spread-form `send`/`get`
/// become the compound-message form, and `send_super`/`get_super` become
/// `send_class`/`get_class` on the statically known super class.
pub fn rewrite(body: &Term, super_class: Atom) -> Term {
    let Term::Compound(c) = body else {
        return body.clone();
    };
    let (f, n) = (c.functor, c.args.len());
    let args = &c.args;
    let sup = Term::Atom(super_class);
    let rec = |t: &Term| rewrite(t, super_class);
    if (f == atoms::SEND && n > 2) || (f == atoms::SEND_SUPER && n >= 2) {
        let msg = spread(&args[1], &args[2..]);
        return if f == atoms::SEND {
            Term::compound(atoms::SEND, vec![args[0].clone(), msg])
        } else {
            Term::compound(atoms::SEND_CLASS, vec![args[0].clone(), sup, msg])
        };
    }
    if (f == atoms::GET && n > 3) || (f == atoms::GET_SUPER && n >= 3) {
        let msg = spread(&args[1], &args[2..n - 1]);
        let result = args[n - 1].clone();
        return if f == atoms::GET {
            Term::compound(atoms::GET, vec![args[0].clone(), msg, result])
        } else {
            Term::compound(atoms::GET_CLASS, vec![args[0].clone(), sup, msg, result])
        };
    }
    // Goal positions of control constructs and common meta-predicates.
    let goal_args: &[usize] = match (f.name(), n) {
        (",", 2) | (";", 2) | ("->", 2) => &[0, 1],
        ("\\+", 1) | ("not", 1) | ("once", 1) | ("ignore", 1) | ("call", _) => &[0],
        ("forall", 2) => &[0, 1],
        ("findall", 3) | ("aggregate_all", 3) => &[1],
        ("catch", 3) => &[0, 2],
        (":", 2) => &[1],
        _ => &[],
    };
    if goal_args.is_empty() {
        return body.clone();
    }
    let new_args = args
        .iter()
        .enumerate()
        .map(|(i, a)| if goal_args.contains(&i) { rec(a) } else { a.clone() })
        .collect();
    Term::compound(f, new_args)
}

// ---- realization ------------------------------------------------------

/// Ground head arguments of every fact of `fact/arity` whose first
/// argument is `class`.
fn facts(rt: &Runtime, fact: Atom, arity: usize, class: Atom) -> Vec<Vec<Term>> {
    rt.db
        .predicate(&(Module::Principal, fact, arity))
        .map(|p| {
            p.clauses
                .iter()
                .filter(|c| c.head.args()[0].as_atom() == Some(class))
                .map(|c| c.head.args().to_vec())
                .collect()
        })
        .unwrap_or_default()
}

fn bad_fact(class: Atom) -> Exception {
    Exception::existence("class_facts", Term::Atom(class))
}

fn spec(t: &Term, class: Atom) -> EResult<TypeSpec> {
    TypeSpec::parse(t).map_err(|_| bad_fact(class))
}

fn doc_text(t: &Term) -> String {
    format_unquoted(t)
}

fn method_facts(rt: &Runtime, class: Atom, id: ClassId) -> EResult<Vec<Method>> {
    let pure: HashSet<Atom> = facts(rt, atoms::PCE_PURE, 2, class)
        .into_iter()
        .filter_map(|a| a[1].as_atom())
        .collect();
    let mut out = Vec::new();
    let sends = facts(rt, atoms::PCE_SEND_METHOD, 5, class).into_iter().map(|a| {
        (
            MethodKind::Send,
            a[1].clone(),
            a[2].clone(),
            Term::Atom(atoms::ANY),
            a[3].clone(),
            a[4].clone(),
        )
    });
    let gets = facts(rt, atoms::PCE_GET_METHOD, 6, class).into_iter().map(|a| {
        (
            MethodKind::Get,
            a[1].clone(),
            a[2].clone(),
            a[3].clone(),
            a[4].clone(),
            a[5].clone(),
        )
    });
    for (kind, sel, types, ret, mid, doc) in sends.chain(gets) {
        let (Some(sel), Some(mid)) = (sel.as_atom(), mid.as_atom()) else {
            return Err(bad_fact(class));
        };
        let types = crate::engine::builtins::list_items(&rt.store, &types).ok_or_else(|| bad_fact(class))?;
        let params = types
            .iter()
            .map(|t| spec(t, class).map(Param::new))
            .collect::<EResult<Vec<_>>>()?;
        out.push(Method {
            selector: sel,
            kind,
            params,
            variadic: false,
            ret: spec(&ret, class)?,
            imp: Implementation::Logic(mid),
            pure: pure.contains(&sel),
            class: id,
            doc: doc_text(&doc),
        });
    }
    Ok(out)
}

/// The kernel class called `name`, realizing it (and its super chain) from
/// compiled facts on first use. `None` when no such class is known.
pub fn lookup_class(rt: &mut Runtime, name: Atom) -> EResult<Option<ClassId>> {
    if let Some(id) = rt.kernel.class_named(name) {
        return Ok(Some(id));
    }
    let Some(header) = facts(rt, atoms::PCE_CLASS, 2, name).into_iter().next() else {
        return Ok(None);
    };
    let super_name = header[1].as_atom().ok_or_else(|| bad_fact(name))?;
    if rt.compiler.realizing.contains(&name) {
        return Err(Exception::permission("inherit", "class", Term::Atom(name)));
    }
    rt.compiler.realizing.push(name);
    let realized = realize(rt, name, super_name);
    rt.compiler.realizing.pop();
    realized.map(Some)
}

fn realize(rt: &mut Runtime, name: Atom, super_name: Atom) -> EResult<ClassId> {
    if super_name != name {
        lookup_class(rt, super_name)?.ok_or_else(|| Exception::existence("class", Term::Atom(super_name)))?;
    }
    let slots: Vec<SlotDef> = facts(rt, atoms::PCE_VARIABLE, 5, name)
        .into_iter()
        .map(|a| {
            let slot = a[1].as_atom().ok_or_else(|| bad_fact(name))?;
            let access = a[3]
                .as_atom()
                .and_then(|x| Access::parse(x.name()))
                .ok_or_else(|| bad_fact(name))?;
            Ok(SlotDef {
                name: slot,
                spec: spec(&a[2], name)?,
                access,
                doc: doc_text(&a[4]),
            })
        })
        .collect::<EResult<_>>()?;
    let id = rt.kernel.define_class(name, Some(super_name), true)?;
    let methods = method_facts(rt, name, id)?;
    for slot in slots {
        rt.kernel.define_slot(id, slot)?;
    }
    for m in methods {
        rt.kernel.replace_method(id, m);
    }
    Ok(id)
}
