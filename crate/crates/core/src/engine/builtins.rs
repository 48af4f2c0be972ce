//! Built-in predicates and the library prelude.

use std::cmp::Ordering;
use std::rc::Rc;

use super::arith::{self, Num};
use super::db::{pi_term, Clause, Module};
use super::{consult, Control, EResult, Exception, Machine};
use crate::runtime::Runtime;
use crate::syntax::ops::Ops;
use crate::syntax::parser::read_term;
use crate::syntax::writer::{format_float, format_term, format_unquoted, WriteOptions};
use crate::term::{atoms, Atom, Detached, Store, Term};

/// Library predicates written in logic; loaded into `user` at startup.
pub const PRELUDE: &str = r#"
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).

member(X, [X|_]).
member(X, [_|T]) :- member(X, T).

memberchk(X, L) :- member(X, L), !.

reverse(L, R) :- reverse_(L, [], R).
reverse_([], A, A).
reverse_([H|T], A, R) :- reverse_(T, [H|A], R).

nth0(I, L, E) :- nth_(L, 0, I, E).
nth1(I, L, E) :- nth_(L, 1, I, E).
nth_(L, B, I, E) :- integer(I), !, Skip is I - B, Skip >= 0, nth_fixed(Skip, L, E).
nth_([H|T], B, I, E) :- nth_var_(T, H, B, I, E).
nth_fixed(0, [E|_], E) :- !.
nth_fixed(N, [_|T], E) :- N1 is N - 1, nth_fixed(N1, T, E).
nth_var_(_, H, B, B, H).
nth_var_([H|T], _, B, I, E) :- B1 is B + 1, nth_var_(T, H, B1, I, E).

last([X], X) :- !.
last([_|T], X) :- last(T, X).

select(X, [X|T], T).
select(X, [H|T], [H|R]) :- select(X, T, R).

sum_list(L, S) :- sum_list_(L, 0, S).
sum_list_([], S, S).
sum_list_([H|T], A, S) :- A1 is A + H, sum_list_(T, A1, S).

max_list([H|T], M) :- max_list_(T, H, M).
max_list_([], M, M).
max_list_([H|T], A, M) :- A1 is max(A, H), max_list_(T, A1, M).

min_list([H|T], M) :- min_list_(T, H, M).
min_list_([], M, M).
min_list_([H|T], A, M) :- A1 is min(A, H), min_list_(T, A1, M).

numlist(L, H, []) :- L > H, !.
numlist(L, H, [L|T]) :- L1 is L + 1, numlist(L1, H, T).

maplist(_, []).
maplist(G, [X|Xs]) :- call(G, X), maplist(G, Xs).
maplist(_, [], []).
maplist(G, [X|Xs], [Y|Ys]) :- call(G, X, Y), maplist(G, Xs, Ys).

exclude(_, [], []).
exclude(P, [H|T], R) :- ( call(P, H) -> R = R1 ; R = [H|R1] ), exclude(P, T, R1).
include(_, [], []).
include(P, [H|T], R) :- ( call(P, H) -> R = [H|R1] ; R = R1 ), include(P, T, R1).

aggregate_all(count, G, N) :- findall(x, G, L), length(L, N).
aggregate_all(sum(E), G, S) :- findall(E, G, L), sum_list(L, S).
aggregate_all(bag(E), G, L) :- findall(E, G, L).
aggregate_all(max(E), G, M) :- findall(E, G, L), max_list(L, M).
"#;

fn reg(rt: &mut Runtime, name: &str, arity: usize, f: impl Fn(&mut Runtime, &[Term]) -> EResult<Control> + 'static) {
    rt.db
        .register_builtin(name, arity, Rc::new(f))
        .expect("builtin registered once");
}

pub fn install(rt: &mut Runtime) {
    // Unification and comparison.
    reg(rt, "=", 2, |rt, a| Ok(rt.store.unify(&a[0], &a[1]).into()));
    reg(rt, "\\=", 2, |rt, a| {
        Ok((!unify_probe(&mut rt.store, &a[0], &a[1])).into())
    });
    reg(rt, "==", 2, |rt, a| {
        Ok((compare_terms(&rt.store, &a[0], &a[1]) == Ordering::Equal).into())
    });
    reg(rt, "\\==", 2, |rt, a| {
        Ok((compare_terms(&rt.store, &a[0], &a[1]) != Ordering::Equal).into())
    });
    for (name, want) in [
        ("@<", &[Ordering::Less][..]),
        ("@>", &[Ordering::Greater][..]),
        ("@=<", &[Ordering::Less, Ordering::Equal][..]),
        ("@>=", &[Ordering::Greater, Ordering::Equal][..]),
    ] {
        reg(rt, name, 2, move |rt, a| {
            Ok(want.contains(&compare_terms(&rt.store, &a[0], &a[1])).into())
        });
    }
    reg(rt, "compare", 3, |rt, a| {
        let o = match compare_terms(&rt.store, &a[1], &a[2]) {
            Ordering::Less => "<",
            Ordering::Equal => "=",
            Ordering::Greater => ">",
        };
        Ok(rt.store.unify(&a[0], &Term::atom(o)).into())
    });

    // Arithmetic.
    reg(rt, "is", 2, |rt, a| {
        let v = arith::eval(&rt.store, &a[1])?.to_term();
        Ok(rt.store.unify(&a[0], &v).into())
    });
    for (name, want) in [
        ("=:=", &[Ordering::Equal][..]),
        ("=\\=", &[Ordering::Less, Ordering::Greater][..]),
        ("<", &[Ordering::Less][..]),
        (">", &[Ordering::Greater][..]),
        ("=<", &[Ordering::Less, Ordering::Equal][..]),
        (">=", &[Ordering::Greater, Ordering::Equal][..]),
    ] {
        reg(rt, name, 2, move |rt, a| {
            let x = arith::eval(&rt.store, &a[0])?;
            let y = arith::eval(&rt.store, &a[1])?;
            Ok(want.contains(&arith::compare(x, y)).into())
        });
    }
    reg(rt, "succ", 2, |rt, a| {
        match (rt.store.deref(&a[0]), rt.store.deref(&a[1])) {
            (Term::Int(x), _) if x >= 0 => Ok(rt.store.unify(&a[1], &Term::Int(x + 1)).into()),
            (Term::Var(_), Term::Int(y)) if y > 0 => Ok(rt.store.unify(&a[0], &Term::Int(y - 1)).into()),
            (Term::Var(_), Term::Int(0)) => Ok(Control::Fail),
            (Term::Var(_), Term::Var(_)) => Err(Exception::instantiation()),
            (x, _) => Err(Exception::type_error(&rt.store, "not_less_than_zero", &x)),
        }
    });

    // Type checks.
    type Check = fn(&Term) -> bool;
    let checks: [(&str, Check); 9] = [
        ("var", |t| matches!(t, Term::Var(_))),
        ("nonvar", |t| !matches!(t, Term::Var(_))),
        ("atom", |t| matches!(t, Term::Atom(_))),
        ("number", |t| matches!(t, Term::Int(_) | Term::Float(_))),
        ("integer", |t| matches!(t, Term::Int(_))),
        ("float", |t| matches!(t, Term::Float(_))),
        ("atomic", |t| {
            matches!(t, Term::Atom(_) | Term::Int(_) | Term::Float(_) | Term::Obj(_))
        }),
        ("compound", |t| matches!(t, Term::Compound(_))),
        ("callable", |t| t.is_callable()),
    ];
    for (name, check) in checks {
        reg(rt, name, 1, move |rt, a| Ok(check(&rt.store.deref(&a[0])).into()));
    }
    reg(rt, "is_list", 1, |rt, a| {
        Ok(list_items(&rt.store, &a[0]).is_some().into())
    });
    reg(rt, "ground", 1, |rt, a| {
        let t = rt.store.resolve(&a[0])?;
        Ok((!t.has_var_nodes()).into())
    });

    // Term construction and inspection.
    reg(rt, "functor", 3, builtin_functor);
    reg(rt, "arg", 3, builtin_arg);
    reg(rt, "=..", 2, builtin_univ);
    reg(rt, "copy_term", 2, |rt, a| {
        let d = Detached::from_store(&rt.store, &a[0], usize::MAX)?;
        let copy = d.instantiate(&mut rt.store);
        Ok(rt.store.unify(&a[1], &copy).into())
    });
    reg(rt, "length", 2, builtin_length);
    reg(rt, "msort", 2, |rt, a| sort_builtin(rt, a, false));
    reg(rt, "sort", 2, |rt, a| sort_builtin(rt, a, true));

    // Atoms and text.
    reg(rt, "atom_codes", 2, |rt, a| text_conv(rt, a, TextForm::Codes, false));
    reg(rt, "atom_chars", 2, |rt, a| text_conv(rt, a, TextForm::Chars, false));
    reg(rt, "number_codes", 2, |rt, a| text_conv(rt, a, TextForm::Codes, true));
    reg(rt, "atom_length", 2, |rt, a| {
        let s = text_of(&rt.store, &a[0])?;
        Ok(rt.store.unify(&a[1], &Term::Int(s.chars().count() as i64)).into())
    });
    reg(rt, "atom_number", 2, |rt, a| {
        let t = rt.store.deref(&a[0]);
        match t {
            Term::Var(_) => {
                let n = rt.store.deref(&a[1]);
                match n {
                    Term::Int(_) | Term::Float(_) => {
                        let s = text_of(&rt.store, &n)?;
                        Ok(rt.store.unify(&a[0], &Term::atom(&s)).into())
                    }
                    _ => Err(Exception::instantiation()),
                }
            }
            _ => match parse_number(&text_of(&rt.store, &t)?) {
                Some(n) => Ok(rt.store.unify(&a[1], &n).into()),
                None => Ok(Control::Fail),
            },
        }
    });
    reg(rt, "atom_concat", 3, builtin_atom_concat);
    reg(rt, "atomic_list_concat", 2, |rt, a| {
        let items = list_items(&rt.store, &a[0]).ok_or_else(Exception::instantiation)?;
        let mut s = String::new();
        for it in &items {
            s.push_str(&text_of(&rt.store, it)?);
        }
        Ok(rt.store.unify(&a[1], &Term::atom(&s)).into())
    });
    reg(rt, "atomic_list_concat", 3, |rt, a| {
        let sep = text_of(&rt.store, &a[1])?;
        if let Some(items) = list_items(&rt.store, &a[0]) {
            if items.iter().all(|t| !matches!(rt.store.deref(t), Term::Var(_))) {
                let parts: EResult<Vec<String>> = items.iter().map(|t| text_of(&rt.store, t)).collect();
                return Ok(rt.store.unify(&a[2], &Term::atom(&parts?.join(&sep))).into());
            }
        }
        if sep.is_empty() {
            return Err(Exception::instantiation());
        }
        let whole = text_of(&rt.store, &a[2])?;
        let parts = Term::list(whole.split(sep.as_str()).map(Term::atom).collect::<Vec<_>>());
        Ok(rt.store.unify(&a[0], &parts).into())
    });
    reg(rt, "term_to_atom", 2, |rt, a| {
        let t = rt.store.deref(&a[0]);
        if let Term::Var(_) = t {
            let text = text_of(&rt.store, &a[1])?;
            let read = read_term(&text, Ops::standard())
                .map_err(|e| Exception::error(Term::compound(atoms::SYNTAX_ERROR, vec![Term::atom(&e.message)])))?;
            let parsed = read.term.instantiate(&mut rt.store);
            return Ok(rt.store.unify(&a[0], &parsed).into());
        }
        let text = format_term(&rt.store.resolve(&t)?, WriteOptions::default());
        Ok(rt.store.unify(&a[1], &Term::atom(&text)).into())
    });

    // Output.
    reg(rt, "write", 1, |rt, a| write_term(rt, &a[0], false, ""));
    reg(rt, "print", 1, |rt, a| write_term(rt, &a[0], true, ""));
    reg(rt, "writeln", 1, |rt, a| write_term(rt, &a[0], false, "\n"));
    reg(rt, "writeq", 1, |rt, a| write_term(rt, &a[0], true, ""));
    reg(rt, "write_canonical", 1, |rt, a| write_term(rt, &a[0], true, ""));
    reg(rt, "nl", 0, |rt, _| {
        rt.write_out("\n");
        Ok(Control::True)
    });
    reg(rt, "tab", 1, |rt, a| {
        let n = match arith::eval(&rt.store, &a[0])? {
            Num::Int(n) => n.max(0) as usize,
            Num::Float(_) => return Err(Exception::type_error(&rt.store, "integer", &a[0])),
        };
        rt.write_out(&" ".repeat(n));
        Ok(Control::True)
    });
    reg(rt, "format", 1, |rt, a| format_builtin(rt, &a[0], &Term::nil()));
    reg(rt, "format", 2, |rt, a| format_builtin(rt, &a[0], &a[1]));

    // Database.
    reg(rt, "assert", 1, |rt, a| assert_builtin(rt, &a[0], false));
    reg(rt, "assertz", 1, |rt, a| assert_builtin(rt, &a[0], false));
    reg(rt, "asserta", 1, |rt, a| assert_builtin(rt, &a[0], true));
    reg(rt, "retract", 1, builtin_retract);
    reg(rt, "retractall", 1, |rt, a| {
        let head = rt.store.deref(&a[0]);
        let (key, _) = Clause::from_term(&rt.store, &head)?;
        if rt.db.is_builtin(key.1, key.2) {
            return Err(Exception::permission(
                "modify",
                "static_procedure",
                pi_term(key.1, key.2),
            ));
        }
        let Some(pred) = rt.db.predicate(&key) else {
            rt.db.declare_dynamic(key)?;
            return Ok(Control::True);
        };
        let clauses = pred.clauses.clone();
        let goal_head = strip_qualifier(&rt.store, &head);
        for c in clauses.iter() {
            let marks = rt.store.marks();
            let base = rt.store.alloc_vars(c.nvars as usize);
            let h = crate::term::shift_vars(&c.head, base);
            let matched = unify_probe(&mut rt.store, &h, &goal_head);
            rt.store.undo_to(marks);
            if matched {
                rt.db.remove_clause(&key, c);
            }
        }
        Ok(Control::True)
    });
    reg(rt, "clause", 2, |rt, a| {
        let head = strip_qualifier(&rt.store, &rt.store.deref(&a[0]));
        let (name, arity) = match &head {
            Term::Var(_) => return Err(Exception::instantiation()),
            t => t
                .functor()
                .ok_or_else(|| Exception::type_error(&rt.store, "callable", t))?,
        };
        let Some(pred) = rt.db.resolve(Module::User, name, arity) else {
            return Ok(Control::Fail);
        };
        let clauses = pred.clauses.clone();
        let pair = Term::app("-", vec![head, a[1].clone()]);
        let goals = clauses
            .iter()
            .map(|c| {
                let base = rt.store.alloc_vars(c.nvars as usize);
                let copy = Term::app(
                    "-",
                    vec![
                        crate::term::shift_vars(&c.head, base),
                        crate::term::shift_vars(&c.body, base),
                    ],
                );
                Term::compound(atoms::EQUALS, vec![pair.clone(), copy])
            })
            .collect();
        Ok(Control::Choices(goals))
    });
    reg(rt, "dynamic", 1, |rt, a| {
        let mut specs = Vec::new();
        flatten_specs(&rt.store, &a[0], &mut specs);
        for spec in specs {
            let (module, name, arity) = parse_pi(&rt.store, &spec)?;
            rt.db.declare_dynamic((module, name, arity))?;
        }
        Ok(Control::True)
    });
    reg(rt, "discontiguous", 1, |_, _| Ok(Control::True));
    reg(rt, "multifile", 1, |_, _| Ok(Control::True));

    // Solutions and control.
    reg(rt, "findall", 3, |rt, a| {
        let template = a[0].clone();
        let mut results = Vec::new();
        let mut m = Machine::new(rt, a[1].clone(), Module::User);
        while m.next(rt)? {
            results.push(Detached::from_store(&rt.store, &template, usize::MAX)?);
        }
        let items: Vec<Term> = results.iter().map(|d| d.instantiate(&mut rt.store)).collect();
        Ok(rt.store.unify(&a[2], &Term::list(items)).into())
    });
    reg(rt, "throw", 1, |rt, a| {
        let ball = rt.store.deref(&a[0]);
        if let Term::Var(_) = ball {
            return Err(Exception::instantiation());
        }
        Err(Exception::new(&rt.store, &ball))
    });
    reg(rt, "halt", 0, |rt, _| halt(rt, 0));
    reg(rt, "halt", 1, |rt, a| match rt.store.deref(&a[0]) {
        Term::Int(n) => halt(rt, n as i32),
        other => Err(Exception::type_error(&rt.store, "integer", &other)),
    });
    reg(rt, "consult", 1, |rt, a| {
        let path = text_of(&rt.store, &a[0])?;
        Ok(consult::consult_goal(rt, &path)?.into())
    });
}

fn halt(rt: &mut Runtime, code: i32) -> EResult<Control> {
    rt.halted = Some(code);
    Err(Exception::ground(Term::app("halt", vec![Term::Int(code as i64)])))
}

/// Unifies and undoes the bindings again; reports whether they unify.
fn unify_probe(store: &mut Store, a: &Term, b: &Term) -> bool {
    let marks = store.marks();
    let saved = store.boundary();
    // Trail everything so the probe can be undone exactly.
    store.set_boundary(usize::MAX);
    let ok = store.unify(a, b);
    store.undo_trail(marks.trail);
    store.set_boundary(saved);
    ok
}

fn strip_qualifier(store: &Store, t: &Term) -> Term {
    let mut t = store.deref(t);
    while t.is_functor(atoms::COLON, 2) {
        t = store.deref(&t.args()[1]);
    }
    t
}

fn rank(t: &Term) -> u8 {
    match t {
        Term::Var(_) => 0,
        Term::Int(_) | Term::Float(_) => 1,
        Term::Obj(_) => 2,
        Term::Atom(_) => 3,
        Term::Compound(_) => 4,
    }
}

/// Standard order of terms: Var < Number < Object < Atom < Compound.
pub fn compare_terms(store: &Store, a: &Term, b: &Term) -> Ordering {
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = store.deref(&x);
        let y = store.deref(&y);
        let ord = match (&x, &y) {
            (Term::Var(p), Term::Var(q)) => p.cmp(q),
            (Term::Int(p), Term::Int(q)) => p.cmp(q),
            (Term::Int(_) | Term::Float(_), Term::Int(_) | Term::Float(_)) => {
                let nx = num_of(&x);
                let ny = num_of(&y);
                match arith::compare(nx, ny) {
                    Ordering::Equal => match (&x, &y) {
                        (Term::Float(_), Term::Int(_)) => Ordering::Less,
                        (Term::Int(_), Term::Float(_)) => Ordering::Greater,
                        _ => Ordering::Equal,
                    },
                    o => o,
                }
            }
            (Term::Obj(p), Term::Obj(q)) => p.cmp(q),
            (Term::Atom(p), Term::Atom(q)) => p.name().cmp(q.name()),
            (Term::Compound(p), Term::Compound(q)) => {
                let o = p
                    .args
                    .len()
                    .cmp(&q.args.len())
                    .then_with(|| p.functor.name().cmp(q.functor.name()));
                if o == Ordering::Equal {
                    for (s, t) in p.args.iter().zip(q.args.iter()).rev() {
                        stack.push((s.clone(), t.clone()));
                    }
                }
                o
            }
            _ => rank(&x).cmp(&rank(&y)),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

fn num_of(t: &Term) -> Num {
    match t {
        Term::Int(i) => Num::Int(*i),
        Term::Float(f) => Num::Float(*f),
        _ => unreachable!("numeric term"),
    }
}

/// Items of a proper list, or `None` for partial and non-lists.
pub fn list_items(store: &Store, t: &Term) -> Option<Vec<Term>> {
    let mut items = Vec::new();
    let mut t = store.deref(t);
    loop {
        match &t {
            Term::Atom(a) if *a == atoms::NIL => return Some(items),
            Term::Compound(c) if c.functor == atoms::DOT && c.args.len() == 2 => {
                items.push(c.args[0].clone());
                let next = store.deref(&c.args[1]);
                t = next;
            }
            _ => return None,
        }
    }
}

pub fn text_of(store: &Store, t: &Term) -> EResult<String> {
    match store.deref(t) {
        Term::Atom(a) => Ok(a.name().to_string()),
        Term::Int(i) => Ok(i.to_string()),
        Term::Float(f) => Ok(format_float(f)),
        Term::Obj(o) => Ok(o.to_string()),
        Term::Var(_) => Err(Exception::instantiation()),
        other => Err(Exception::type_error(store, "atomic", &other)),
    }
}

fn parse_number(s: &str) -> Option<Term> {
    let s = s.trim();
    if let Ok(i) = s.parse::<i64>() {
        return Some(Term::Int(i));
    }
    if s.contains(['.', 'e', 'E']) && !s.contains("inf") && !s.contains("nan") {
        if let Ok(f) = s.parse::<f64>() {
            return Some(Term::Float(f));
        }
    }
    None
}

fn builtin_functor(rt: &mut Runtime, a: &[Term]) -> EResult<Control> {
    let t = rt.store.deref(&a[0]);
    match &t {
        Term::Var(_) => {
            let name = rt.store.deref(&a[1]);
            let arity = match rt.store.deref(&a[2]) {
                Term::Int(n) if n >= 0 => n as usize,
                Term::Var(_) => return Err(Exception::instantiation()),
                other => return Err(Exception::type_error(&rt.store, "integer", &other)),
            };
            let built = match (&name, arity) {
                (Term::Var(_), _) => return Err(Exception::instantiation()),
                (_, 0) => name.clone(),
                (Term::Atom(f), n) => {
                    let base = rt.store.alloc_vars(n);
                    Term::compound(*f, (0..n as u32).map(|i| Term::Var(base + i)).collect())
                }
                (other, _) => return Err(Exception::type_error(&rt.store, "atomic", other)),
            };
            Ok(rt.store.unify(&a[0], &built).into())
        }
        Term::Compound(c) => {
            let lhs = Term::app("-", vec![a[1].clone(), a[2].clone()]);
            let rhs = Term::app("-", vec![Term::Atom(c.functor), Term::Int(c.args.len() as i64)]);
            Ok(rt.store.unify(&lhs, &rhs).into())
        }
        atomic => {
            let lhs = Term::app("-", vec![a[1].clone(), a[2].clone()]);
            let rhs = Term::app("-", vec![atomic.clone(), Term::Int(0)]);
            Ok(rt.store.unify(&lhs, &rhs).into())
        }
    }
}

fn builtin_arg(rt: &mut Runtime, a: &[Term]) -> EResult<Control> {
    let t = rt.store.deref(&a[1]);
    let Term::Compound(c) = &t else {
        return match t {
            Term::Var(_) => Err(Exception::instantiation()),
            other => Err(Exception::type_error(&rt.store, "compound", &other)),
        };
    };
    match rt.store.deref(&a[0]) {
        Term::Int(n) => {
            if n < 1 || n as usize > c.args.len() {
                return Ok(Control::Fail);
            }
            Ok(rt.store.unify(&a[2], &c.args[n as usize - 1]).into())
        }
        Term::Var(_) => Ok(Control::Choices(
            c.args
                .iter()
                .enumerate()
                .map(|(i, arg)| {
                    let lhs = Term::app("-", vec![a[0].clone(), a[2].clone()]);
                    let rhs = Term::app("-", vec![Term::Int(i as i64 + 1), arg.clone()]);
                    Term::compound(atoms::EQUALS, vec![lhs, rhs])
                })
                .collect(),
        )),
        other => Err(Exception::type_error(&rt.store, "integer", &other)),
    }
}

fn builtin_univ(rt: &mut Runtime, a: &[Term]) -> EResult<Control> {
    let t = rt.store.deref(&a[0]);
    match &t {
        Term::Var(_) => {
            let items = list_items(&rt.store, &a[1]).ok_or_else(Exception::instantiation)?;
            let Some((head, rest)) = items.split_first() else {
                return Err(Exception::error(Term::compound(
                    Atom::new("domain_error"),
                    vec![Term::atom("non_empty_list"), Term::nil()],
                )));
            };
            let head = rt.store.deref(head);
            let built = match (&head, rest.len()) {
                (Term::Var(_), _) => return Err(Exception::instantiation()),
                (_, 0) => head.clone(),
                (Term::Atom(f), _) => Term::compound(*f, rest.to_vec()),
                (other, _) => return Err(Exception::type_error(&rt.store, "atom", other)),
            };
            Ok(rt.store.unify(&a[0], &built).into())
        }
        Term::Compound(c) => {
            let list = Term::list(
                std::iter::once(Term::Atom(c.functor))
                    .chain(c.args.iter().cloned())
                    .collect::<Vec<_>>(),
            );
            Ok(rt.store.unify(&a[1], &list).into())
        }
        atomic => {
            let list = Term::list(vec![atomic.clone()]);
            Ok(rt.store.unify(&a[1], &list).into())
        }
    }
}

fn builtin_length(rt: &mut Runtime, a: &[Term]) -> EResult<Control> {
    if let Some(items) = list_items(&rt.store, &a[0]) {
        return Ok(rt.store.unify(&a[1], &Term::Int(items.len() as i64)).into());
    }
    // Partial list: walk to the open tail.
    let mut prefix = 0usize;
    let mut t = rt.store.deref(&a[0]);
    while t.is_functor(atoms::DOT, 2) {
        prefix += 1;
        t = rt.store.deref(&t.args()[1]);
    }
    if !matches!(t, Term::Var(_)) {
        return Ok(Control::Fail);
    }
    match rt.store.deref(&a[1]) {
        Term::Int(n) if n >= prefix as i64 => {
            let extra = n as usize - prefix;
            let base = rt.store.alloc_vars(extra);
            let tail = Term::list((0..extra as u32).map(|i| Term::Var(base + i)).collect::<Vec<_>>());
            Ok(rt.store.unify(&t, &tail).into())
        }
        Term::Int(_) => Ok(Control::Fail),
        Term::Var(_) => Err(Exception::instantiation()),
        other => Err(Exception::type_error(&rt.store, "integer", &other)),
    }
}

fn sort_builtin(rt: &mut Runtime, a: &[Term], dedup: bool) -> EResult<Control> {
    let mut items = list_items(&rt.store, &a[0]).ok_or_else(Exception::instantiation)?;
    let store = &rt.store;
    items.sort_by(|x, y| compare_terms(store, x, y));
    if dedup {
        items.dedup_by(|x, y| compare_terms(store, x, y) == Ordering::Equal);
    }
    Ok(rt.store.unify(&a[1], &Term::list(items)).into())
}

#[derive(Clone, Copy)]
enum TextForm {
    Codes,
    Chars,
}

fn text_conv(rt: &mut Runtime, a: &[Term], form: TextForm, number: bool) -> EResult<Control> {
    let t = rt.store.deref(&a[0]);
    if !matches!(t, Term::Var(_)) {
        if number && !matches!(t, Term::Int(_) | Term::Float(_)) {
            return Err(Exception::type_error(&rt.store, "number", &t));
        }
        let s = text_of(&rt.store, &t)?;
        let list = Term::list(
            s.chars()
                .map(|ch| match form {
                    TextForm::Codes => Term::Int(ch as i64),
                    TextForm::Chars => Term::atom(&ch.to_string()),
                })
                .collect::<Vec<_>>(),
        );
        return Ok(rt.store.unify(&a[1], &list).into());
    }
    let items = list_items(&rt.store, &a[1]).ok_or_else(Exception::instantiation)?;
    let mut s = String::new();
    for it in items {
        match (form, rt.store.deref(&it)) {
            (TextForm::Codes, Term::Int(c)) => s.push(char::from_u32(c as u32).ok_or_else(|| {
                Exception::error(Term::compound(
                    atoms::REPRESENTATION_ERROR,
                    vec![Term::atom("character_code")],
                ))
            })?),
            (TextForm::Chars, Term::Atom(ch)) if ch.name().chars().count() == 1 => s.push_str(ch.name()),
            (_, Term::Var(_)) => return Err(Exception::instantiation()),
            (_, other) => return Err(Exception::type_error(&rt.store, "character", &other)),
        }
    }
    let value = if number {
        match parse_number(&s) {
            Some(n) => n,
            None => {
                return Err(Exception::error(Term::compound(
                    atoms::SYNTAX_ERROR,
                    vec![Term::atom("illegal_number")],
                )))
            }
        }
    } else {
        Term::atom(&s)
    };
    Ok(rt.store.unify(&a[0], &value).into())
}

fn builtin_atom_concat(rt: &mut Runtime, a: &[Term]) -> EResult<Control> {
    let x = rt.store.deref(&a[0]);
    let y = rt.store.deref(&a[1]);
    if !matches!(x, Term::Var(_)) && !matches!(y, Term::Var(_)) {
        let s = text_of(&rt.store, &x)? + &text_of(&rt.store, &y)?;
        return Ok(rt.store.unify(&a[2], &Term::atom(&s)).into());
    }
    let whole = text_of(&rt.store, &a[2])?;
    let splits: Vec<usize> = whole
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(whole.len()))
        .collect();
    let goals = splits
        .into_iter()
        .map(|i| {
            let lhs = Term::app("-", vec![a[0].clone(), a[1].clone()]);
            let rhs = Term::app("-", vec![Term::atom(&whole[..i]), Term::atom(&whole[i..])]);
            Term::compound(atoms::EQUALS, vec![lhs, rhs])
        })
        .collect();
    Ok(Control::Choices(goals))
}

fn write_term(rt: &mut Runtime, t: &Term, quoted: bool, suffix: &str) -> EResult<Control> {
    let t = rt.store.resolve(t)?;
    let mut text = if quoted {
        format_term(&t, WriteOptions::default())
    } else {
        format_unquoted(&t)
    };
    text.push_str(suffix);
    rt.write_out(&text);
    Ok(Control::True)
}

fn format_builtin(rt: &mut Runtime, fmt: &Term, args: &Term) -> EResult<Control> {
    let f = match rt.store.deref(fmt) {
        t @ Term::Compound(_) => {
            let codes = list_items(&rt.store, &t).ok_or_else(|| Exception::type_error(&rt.store, "text", &t))?;
            codes
                .iter()
                .filter_map(|c| match rt.store.deref(c) {
                    Term::Int(i) => char::from_u32(i as u32),
                    _ => None,
                })
                .collect()
        }
        other => text_of(&rt.store, &other)?,
    };
    let args = match list_items(&rt.store, args) {
        Some(items) => items,
        None => vec![args.clone()],
    };
    let mut args = args.into_iter();
    let mut next_arg = |store: &Store| -> EResult<Term> {
        args.next()
            .map(|a| store.resolve(&a).map_err(Exception::from))
            .unwrap_or_else(|| {
                Err(Exception::error(Term::compound(
                    Atom::new("format"),
                    vec![Term::atom("not enough arguments")],
                )))
            })
    };
    let mut out = String::new();
    let mut chars = f.chars().peekable();
    while let Some(ch) = chars.next() {
        if ch != '~' {
            out.push(ch);
            continue;
        }
        let mut num = String::new();
        while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
            num.push(*d);
            chars.next();
        }
        match chars.next() {
            Some('w') => out.push_str(&format_unquoted(&next_arg(&rt.store)?)),
            Some('p') | Some('q') => out.push_str(&format_term(&next_arg(&rt.store)?, WriteOptions::default())),
            Some('a') => out.push_str(&text_of(&rt.store, &next_arg(&rt.store)?)?),
            Some('d') => match next_arg(&rt.store)? {
                Term::Int(i) => out.push_str(&i.to_string()),
                other => return Err(Exception::type_error(&rt.store, "integer", &other)),
            },
            Some('f') | Some('e') | Some('g') => {
                let x = match arith::eval(&rt.store, &next_arg(&rt.store)?)? {
                    Num::Int(i) => i as f64,
                    Num::Float(f) => f,
                };
                let prec = num.parse::<usize>().unwrap_or(6);
                out.push_str(&format!("{x:.prec$}"));
            }
            Some('s') => {
                let t = next_arg(&rt.store)?;
                let codes = list_items(&rt.store, &t).unwrap_or_default();
                for c in codes {
                    if let Term::Int(i) = rt.store.deref(&c) {
                        out.extend(char::from_u32(i as u32));
                    }
                }
            }
            Some('n') => {
                let n = num.parse::<usize>().unwrap_or(1);
                out.push_str(&"\n".repeat(n));
            }
            Some('~') => out.push('~'),
            other => {
                return Err(Exception::error(Term::compound(
                    Atom::new("format"),
                    vec![Term::atom(&format!("unknown directive ~{}", other.unwrap_or(' ')))],
                )))
            }
        }
    }
    rt.write_out(&out);
    Ok(Control::True)
}

fn assert_builtin(rt: &mut Runtime, t: &Term, front: bool) -> EResult<Control> {
    let t = rt.store.deref(t);
    if let Term::Var(_) = t {
        return Err(Exception::instantiation());
    }
    let (key, clause) = Clause::from_term(&rt.store, &t)?;
    if rt.db.is_builtin(key.1, key.2) {
        return Err(Exception::permission(
            "modify",
            "static_procedure",
            pi_term(key.1, key.2),
        ));
    }
    rt.db.add_clause(key, clause, front)?;
    Ok(Control::True)
}

fn builtin_retract(rt: &mut Runtime, a: &[Term]) -> EResult<Control> {
    let t = strip_qualifier(&rt.store, &a[0]);
    let (head, body) = if t.is_functor(atoms::NECK, 2) {
        (rt.store.deref(&t.args()[0]), t.args()[1].clone())
    } else {
        (t.clone(), Term::Atom(atoms::TRUE))
    };
    let head = strip_qualifier(&rt.store, &head);
    let (name, arity) = match &head {
        Term::Var(_) => return Err(Exception::instantiation()),
        h => h
            .functor()
            .ok_or_else(|| Exception::type_error(&rt.store, "callable", h))?,
    };
    if rt.db.is_builtin(name, arity) {
        return Err(Exception::permission(
            "modify",
            "static_procedure",
            pi_term(name, arity),
        ));
    }
    let module = match rt.store.deref(&a[0]) {
        q if q.is_functor(atoms::COLON, 2) => rt
            .store
            .deref(&q.args()[0])
            .as_atom()
            .and_then(Module::from_atom)
            .unwrap_or(Module::User),
        _ => Module::User,
    };
    let key = (module, name, arity);
    let Some(pred) = rt.db.predicate(&key) else {
        return Ok(Control::Fail);
    };
    let clauses = pred.clauses.clone();
    let target = Term::app("-", vec![head, body]);
    for c in clauses.iter() {
        let base = rt.store.alloc_vars(c.nvars as usize);
        let copy = Term::app(
            "-",
            vec![
                crate::term::shift_vars(&c.head, base),
                crate::term::shift_vars(&c.body, base),
            ],
        );
        if rt.store.unify(&target, &copy) {
            rt.db.remove_clause(&key, c);
            return Ok(Control::True);
        }
    }
    Ok(Control::Fail)
}

fn flatten_specs(store: &Store, t: &Term, out: &mut Vec<Term>) {
    let t = store.deref(t);
    if t.is_functor(atoms::COMMA, 2) {
        flatten_specs(store, &t.args()[0], out);
        flatten_specs(store, &t.args()[1], out);
    } else if let Some(items) = list_items(store, &t).filter(|_| t.is_functor(atoms::DOT, 2)) {
        for it in items {
            flatten_specs(store, &it, out);
        }
    } else {
        out.push(t);
    }
}

fn parse_pi(store: &Store, t: &Term) -> EResult<(Module, Atom, usize)> {
    let t = store.deref(t);
    if t.is_functor(atoms::COLON, 2) {
        let m = store
            .deref(&t.args()[0])
            .as_atom()
            .and_then(Module::from_atom)
            .ok_or_else(|| Exception::existence("module", t.args()[0].clone()))?;
        let (_, n, a) = parse_pi(store, &t.args()[1])?;
        return Ok((m, n, a));
    }
    if t.is_functor(atoms::SLASH, 2) {
        if let (Term::Atom(n), Term::Int(a)) = (store.deref(&t.args()[0]), store.deref(&t.args()[1])) {
            if a >= 0 {
                return Ok((Module::User, n, a as usize));
            }
        }
    }
    Err(Exception::type_error(store, "predicate_indicator", &t))
}
