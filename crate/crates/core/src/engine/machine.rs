//! Tree-walking SLD resolution with a linked continuation and an explicit
//! choice-point stack.

use std::rc::Rc;

use super::db::{Candidates, Clause, Module};
use super::{Control, EResult, Exception};
use crate::runtime::Runtime;
use crate::term::{atoms, shift_vars, Atom, IndexKey, Marks, Term};

enum Goal {
    Call {
        term: Term,
        module: Module,
        /// Choice-point height a `!` in this goal cuts back to.
        cutb: usize,
    },
    CutTo(usize),
    PopCatch(usize),
}

struct Frame {
    goal: Goal,
    next: Cont,
    depth: usize,
}

type Cont = Option<Rc<Frame>>;

fn push(next: &Cont, goal: Goal) -> Cont {
    let depth = next.as_ref().map_or(0, |f| f.depth) + 1;
    Some(Rc::new(Frame {
        goal,
        next: next.clone(),
        depth,
    }))
}

enum Alt {
    Base,
    Clauses {
        goal: Term,
        clauses: Rc<Vec<Rc<Clause>>>,
        cands: Candidates,
        pos: usize,
        module: Module,
    },
    Goal {
        term: Term,
        module: Module,
        cutb: usize,
    },
    Goals {
        goals: Rc<[Term]>,
        pos: usize,
        module: Module,
        cutb: usize,
    },
    Catch {
        catcher: Term,
        recovery: Term,
        module: Module,
        cutb: usize,
    },
    /// Remaining integers of `between/3`, bound to `var` one at a time.
    Range {
        var: Term,
        next: i64,
        hi: i64,
    },
}

struct ChoicePoint {
    marks: Marks,
    alt: Alt,
    cont: Cont,
}

/// One resolution of a goal. Solutions are produced by [`Machine::next`];
/// a machine must be finished with [`Machine::commit`] or
/// [`Machine::discard`] unless it ran to exhaustion or raised.
pub struct Machine {
    cps: Vec<ChoicePoint>,
    cont: Cont,
    saved_boundary: usize,
    started: bool,
    done: bool,
}

enum Step {
    Continue,
    Fail,
}

impl Machine {
    pub fn new(rt: &mut Runtime, goal: Term, module: Module) -> Machine {
        let saved_boundary = rt.store.boundary();
        let marks = rt.store.marks();
        let mut m = Machine {
            cps: vec![ChoicePoint {
                marks,
                alt: Alt::Base,
                cont: None,
            }],
            cont: None,
            saved_boundary,
            started: false,
            done: false,
        };
        m.cont = push(
            &None,
            Goal::Call {
                term: goal,
                module,
                cutb: 1,
            },
        );
        m.sync_boundary(rt);
        m
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Whether backtracking could produce another solution.
    pub fn has_alternatives(&self) -> bool {
        !self.done
            && self
                .cps
                .iter()
                .any(|cp| !matches!(cp.alt, Alt::Base | Alt::Catch { .. }))
    }

    fn sync_boundary(&self, rt: &mut Runtime) {
        let b = self.cps.last().map_or(self.saved_boundary, |cp| cp.marks.vars);
        rt.store.set_boundary(b);
    }

    fn finish(&mut self, rt: &mut Runtime) {
        if let Some(base) = self.cps.first() {
            rt.store.undo_to(base.marks);
        }
        self.cps.clear();
        self.cont = None;
        self.done = true;
        rt.store.set_boundary(self.saved_boundary);
    }

    /// Keeps the bindings of the last solution and drops all alternatives.
    pub fn commit(mut self, rt: &mut Runtime) {
        if !self.done {
            self.cps.clear();
            self.done = true;
            rt.store.set_boundary(self.saved_boundary);
        }
    }

    /// Undoes everything the machine did.
    pub fn discard(mut self, rt: &mut Runtime) {
        if !self.done {
            self.finish(rt);
        }
    }

    /// Finds the next solution. Returns `Ok(false)` when exhausted; after an
    /// error or exhaustion the machine has restored the store.
    pub fn next(&mut self, rt: &mut Runtime) -> EResult<bool> {
        if self.done {
            return Ok(false);
        }
        if self.started && !self.backtrack(rt) {
            return Ok(false);
        }
        self.started = true;
        loop {
            let Some(frame) = self.cont.take() else {
                return Ok(true);
            };
            self.cont = frame.next.clone();
            let step = match &frame.goal {
                Goal::Call { term, module, cutb } => {
                    let depth = frame.depth;
                    if depth > rt.metrics.peak_depth {
                        rt.metrics.peak_depth = depth;
                    }
                    self.call(rt, term, *module, *cutb)
                }
                Goal::CutTo(h) => {
                    self.cut_to(rt, *h);
                    Ok(Step::Continue)
                }
                Goal::PopCatch(h) => {
                    if self.cps.len() == h + 1 && matches!(self.cps[*h].alt, Alt::Catch { .. }) {
                        self.cps.pop();
                        self.sync_boundary(rt);
                    }
                    Ok(Step::Continue)
                }
            };
            match step {
                Ok(Step::Continue) => {}
                Ok(Step::Fail) => {
                    if !self.backtrack(rt) {
                        return Ok(false);
                    }
                }
                Err(e) => self.recover(rt, e)?,
            }
        }
    }

    fn cut_to(&mut self, rt: &mut Runtime, h: usize) {
        // The base choice point is never cut.
        let h = h.max(1);
        if self.cps.len() > h {
            self.cps.truncate(h);
            self.sync_boundary(rt);
        }
    }

    fn push_cp(&mut self, rt: &mut Runtime, alt: Alt, cont: Cont) {
        self.cps.push(ChoicePoint {
            marks: rt.store.marks(),
            alt,
            cont,
        });
        self.sync_boundary(rt);
    }

    fn push_goal(&mut self, term: Term, module: Module, cutb: usize) {
        self.cont = push(&self.cont, Goal::Call { term, module, cutb });
    }

    /// Resumes the newest alternative. Returns false once the base choice
    /// point is reached.
    fn backtrack(&mut self, rt: &mut Runtime) -> bool {
        loop {
            let Some(cp) = self.cps.last_mut() else {
                self.done = true;
                return false;
            };
            rt.store.undo_to(cp.marks);
            match &mut cp.alt {
                Alt::Base => {
                    self.finish(rt);
                    return false;
                }
                Alt::Catch { .. } => {
                    self.cps.pop();
                    self.sync_boundary(rt);
                }
                Alt::Goal { .. } => {
                    let cp = self.cps.pop().expect("choice point");
                    self.sync_boundary(rt);
                    let Alt::Goal { term, module, cutb } = cp.alt else {
                        unreachable!()
                    };
                    self.cont = cp.cont;
                    self.push_goal(term, module, cutb);
                    return true;
                }
                Alt::Goals {
                    goals,
                    pos,
                    module,
                    cutb,
                } => {
                    let term = goals[*pos].clone();
                    let (module, cutb) = (*module, *cutb);
                    *pos += 1;
                    let last = *pos >= goals.len();
                    let cont = cp.cont.clone();
                    if last {
                        self.cps.pop();
                        self.sync_boundary(rt);
                    }
                    self.cont = cont;
                    self.push_goal(term, module, cutb);
                    return true;
                }
                Alt::Clauses { .. } => {
                    if self.resume_clauses(rt) {
                        return true;
                    }
                }
                Alt::Range { var, next, hi } => {
                    let (var, value) = (var.clone(), *next);
                    *next += 1;
                    let cont = cp.cont.clone();
                    if value >= *hi {
                        self.cps.pop();
                        self.sync_boundary(rt);
                    }
                    self.cont = cont;
                    if rt.store.unify(&var, &Term::Int(value)) {
                        return true;
                    }
                }
            }
        }
    }

    /// Tries the next candidate of the clause choice point on top of the
    /// stack. The choice point is popped before its last candidate runs.
    fn resume_clauses(&mut self, rt: &mut Runtime) -> bool {
        let h = self.cps.len() - 1;
        let cp = &mut self.cps[h];
        let Alt::Clauses {
            goal,
            clauses,
            cands,
            pos,
            module,
        } = &mut cp.alt
        else {
            unreachable!()
        };
        let idx = cands.get(*pos);
        *pos += 1;
        let clause = clauses[idx].clone();
        let goal = goal.clone();
        let module = *module;
        let cont = cp.cont.clone();
        if *pos >= cands.len(clauses) {
            self.cps.pop();
            self.sync_boundary(rt);
        }
        self.cont = cont;
        self.try_clause(rt, &clause, &goal, module, h)
    }

    fn try_clause(&mut self, rt: &mut Runtime, clause: &Clause, goal: &Term, module: Module, cutb: usize) -> bool {
        rt.metrics.clause_visits += 1;
        let base = rt.store.alloc_vars(clause.nvars as usize);
        let ok = match (&clause.head, goal) {
            (Term::Compound(h), Term::Compound(g)) => {
                let mut ok = true;
                for (ha, ga) in h.args.iter().zip(g.args.iter()) {
                    let ha = shift_vars(ha, base);
                    if !rt.store.unify(&ha, ga) {
                        ok = false;
                        break;
                    }
                }
                ok
            }
            _ => true,
        };
        if !ok {
            return false;
        }
        match &clause.body {
            Term::Atom(a) if *a == atoms::TRUE => {}
            body => {
                let body = shift_vars(body, base);
                self.push_goal(body, module, cutb);
            }
        }
        true
    }

    fn recover(&mut self, rt: &mut Runtime, e: Exception) -> EResult<()> {
        while let Some(cp) = self.cps.pop() {
            rt.store.undo_to(cp.marks);
            match cp.alt {
                Alt::Catch {
                    catcher,
                    recovery,
                    module,
                    cutb,
                } => {
                    self.sync_boundary(rt);
                    let ball = e.ball.instantiate(&mut rt.store);
                    let marks = rt.store.marks();
                    if rt.store.unify(&catcher, &ball) {
                        self.cont = cp.cont;
                        self.push_goal(recovery, module, cutb);
                        return Ok(());
                    }
                    rt.store.undo_to(marks);
                }
                Alt::Base => {
                    self.cps.push(cp);
                    self.finish(rt);
                    return Err(e);
                }
                _ => {}
            }
        }
        self.finish(rt);
        Err(e)
    }

    fn call(&mut self, rt: &mut Runtime, term: &Term, module: Module, cutb: usize) -> EResult<Step> {
        let goal = rt.store.deref(term);
        let (name, arity) = match &goal {
            Term::Atom(a) => (*a, 0),
            Term::Compound(c) => (c.functor, c.args.len()),
            Term::Var(_) => return Err(Exception::instantiation()),
            other => return Err(Exception::type_error(&rt.store, "callable", other)),
        };
        rt.metrics.inferences += 1;
        let args = goal.args();
        if let Some(step) = self.control(rt, &goal, name, arity, module, cutb)? {
            return Ok(step);
        }
        if let Some(b) = rt.db.builtin(name, arity).cloned() {
            if rt.flags.trace {
                rt.trace_goal(&goal);
            }
            return match b(rt, args)? {
                Control::Fail => Ok(Step::Fail),
                Control::True => Ok(Step::Continue),
                Control::Call(g) => {
                    let h = self.cps.len();
                    self.push_goal(g, module, h);
                    Ok(Step::Continue)
                }
                Control::Choices(goals) => {
                    if goals.is_empty() {
                        return Ok(Step::Fail);
                    }
                    let h = self.cps.len();
                    let goals: Rc<[Term]> = goals.into();
                    let first = goals[0].clone();
                    if goals.len() > 1 {
                        let cont = self.cont.clone();
                        self.push_cp(
                            rt,
                            Alt::Goals {
                                goals,
                                pos: 1,
                                module,
                                cutb: h,
                            },
                            cont,
                        );
                    }
                    self.push_goal(first, module, h);
                    Ok(Step::Continue)
                }
            };
        }
        self.call_user(rt, goal, name, arity, module)
    }

    /// Control constructs handled inline; `None` when `goal` is not one.
    fn control(
        &mut self,
        rt: &mut Runtime,
        goal: &Term,
        name: Atom,
        arity: usize,
        module: Module,
        cutb: usize,
    ) -> EResult<Option<Step>> {
        let args = goal.args();
        match (name, arity) {
            t if t == (atoms::TRUE, 0) => return Ok(Some(Step::Continue)),
            t if t == (atoms::FAIL, 0) || t == (atoms::FALSE, 0) => return Ok(Some(Step::Fail)),
            t if t == (atoms::CUT, 0) => {
                self.cut_to(rt, cutb);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::COMMA, 2) => {
                self.push_goal(args[1].clone(), module, cutb);
                self.push_goal(args[0].clone(), module, cutb);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::SEMICOLON, 2) => {
                let left = rt.store.deref(&args[0]);
                if left.is_functor(atoms::ARROW, 2) {
                    let la = left.args();
                    self.if_then_else(rt, la[0].clone(), la[1].clone(), args[1].clone(), module, cutb);
                } else {
                    let cont = self.cont.clone();
                    self.push_cp(
                        rt,
                        Alt::Goal {
                            term: args[1].clone(),
                            module,
                            cutb,
                        },
                        cont,
                    );
                    self.push_goal(left, module, cutb);
                }
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::ARROW, 2) => {
                let fail = Term::Atom(atoms::FAIL);
                self.if_then_else(rt, args[0].clone(), args[1].clone(), fail, module, cutb);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::NOT_PROVABLE, 1) || t == (atoms::NOT, 1) => {
                let (t, f) = (Term::Atom(atoms::TRUE), Term::Atom(atoms::FAIL));
                self.if_then_else(rt, args[0].clone(), f, t, module, cutb);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::ONCE, 1) => {
                let t = Term::Atom(atoms::TRUE);
                let f = Term::Atom(atoms::FAIL);
                self.if_then_else(rt, args[0].clone(), t, f, module, cutb);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::IGNORE, 1) => {
                let t = Term::Atom(atoms::TRUE);
                self.if_then_else(rt, args[0].clone(), t.clone(), t, module, cutb);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::FORALL, 2) => {
                // \+ (Cond, \+ Action)
                let inner = Term::compound(
                    atoms::COMMA,
                    vec![
                        args[0].clone(),
                        Term::compound(atoms::NOT_PROVABLE, vec![args[1].clone()]),
                    ],
                );
                let (t, f) = (Term::Atom(atoms::TRUE), Term::Atom(atoms::FAIL));
                self.if_then_else(rt, inner, f, t, module, cutb);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::COLON, 2) => {
                let m = rt.store.deref(&args[0]);
                let Some(m) = m.as_atom().and_then(Module::from_atom) else {
                    return Err(match m {
                        Term::Var(_) => Exception::instantiation(),
                        other => Exception::existence("module", other),
                    });
                };
                self.push_goal(args[1].clone(), m, cutb);
                return Ok(Some(Step::Continue));
            }
            (c, n) if c == atoms::CALL && n >= 1 => {
                let target = add_args(rt, &args[0], &args[1..])?;
                let h = self.cps.len();
                self.push_goal(target, module, h);
                return Ok(Some(Step::Continue));
            }
            t if t == (atoms::BETWEEN, 3) => return self.between(rt, args).map(Some),
            t if t == (atoms::CATCH, 3) => {
                let h = self.cps.len();
                let cont = self.cont.clone();
                self.push_cp(
                    rt,
                    Alt::Catch {
                        catcher: args[1].clone(),
                        recovery: args[2].clone(),
                        module,
                        cutb,
                    },
                    cont,
                );
                self.cont = push(&self.cont, Goal::PopCatch(h));
                self.push_goal(args[0].clone(), module, h + 1);
                return Ok(Some(Step::Continue));
            }
            _ => {}
        }
        Ok(None)
    }

    fn between(&mut self, rt: &mut Runtime, args: &[Term]) -> EResult<Step> {
        let bound = |rt: &Runtime, t: &Term| match rt.store.deref(t) {
            Term::Int(i) => Ok(i),
            Term::Atom(a) if a.name() == "inf" || a.name() == "infinite" => Ok(i64::MAX),
            Term::Var(_) => Err(Exception::instantiation()),
            other => Err(Exception::type_error(&rt.store, "integer", &other)),
        };
        let lo = bound(rt, &args[0])?;
        let hi = bound(rt, &args[1])?;
        let x = rt.store.deref(&args[2]);
        match x {
            Term::Int(i) => Ok(if lo <= i && i <= hi { Step::Continue } else { Step::Fail }),
            Term::Var(_) if lo > hi => Ok(Step::Fail),
            Term::Var(_) => {
                if lo < hi {
                    let cont = self.cont.clone();
                    self.push_cp(
                        rt,
                        Alt::Range {
                            var: x.clone(),
                            next: lo + 1,
                            hi,
                        },
                        cont,
                    );
                }
                rt.store.unify(&x, &Term::Int(lo));
                Ok(Step::Continue)
            }
            other => Err(Exception::type_error(&rt.store, "integer", &other)),
        }
    }

    fn if_then_else(&mut self, rt: &mut Runtime, cond: Term, then: Term, otherwise: Term, module: Module, cutb: usize) {
        let h = self.cps.len();
        let cont = self.cont.clone();
        self.push_cp(
            rt,
            Alt::Goal {
                term: otherwise,
                module,
                cutb,
            },
            cont,
        );
        self.push_goal(then, module, cutb);
        self.cont = push(&self.cont, Goal::CutTo(h));
        self.push_goal(cond, module, h + 1);
    }

    fn call_user(&mut self, rt: &mut Runtime, goal: Term, name: Atom, arity: usize, module: Module) -> EResult<Step> {
        let Some(pred) = rt.db.resolve(module, name, arity) else {
            if rt.flags.unknown_error {
                return Err(Exception::procedure(name, arity));
            }
            return Ok(Step::Fail);
        };
        let key = goal
            .args()
            .first()
            .map(|a| rt.store.deref(a))
            .and_then(|a| IndexKey::of(&a));
        let cands = pred.candidates(key, rt.flags.indexing);
        let clauses = pred.clauses.clone();
        // Modules only qualify lookup; bodies run in the clause's own module.
        let clause_module = if rt.db.predicate(&(module, name, arity)).is_some() {
            module
        } else {
            Module::User
        };
        if rt.flags.trace {
            rt.trace_goal(&goal);
        }
        let n = cands.len(&clauses);
        match n {
            0 => Ok(Step::Fail),
            1 => {
                let h = self.cps.len();
                let clause = clauses[cands.get(0)].clone();
                if self.try_clause(rt, &clause, &goal, clause_module, h) {
                    Ok(Step::Continue)
                } else {
                    Ok(Step::Fail)
                }
            }
            _ => {
                let cont = self.cont.clone();
                self.push_cp(
                    rt,
                    Alt::Clauses {
                        goal,
                        clauses,
                        cands,
                        pos: 0,
                        module: clause_module,
                    },
                    cont,
                );
                if self.resume_clauses(rt) {
                    Ok(Step::Continue)
                } else {
                    Ok(Step::Fail)
                }
            }
        }
    }
}

/// `call/N`: appends extra arguments to a goal.
fn add_args(rt: &Runtime, goal: &Term, extra: &[Term]) -> EResult<Term> {
    let goal = rt.store.deref(goal);
    if extra.is_empty() {
        return match goal {
            Term::Var(_) => Err(Exception::instantiation()),
            g if g.is_callable() => Ok(g),
            other => Err(Exception::type_error(&rt.store, "callable", &other)),
        };
    }
    match &goal {
        Term::Atom(a) => Ok(Term::compound(*a, extra.to_vec())),
        Term::Compound(c) if c.functor == atoms::COLON && c.args.len() == 2 => {
            let inner = add_args(rt, &c.args[1], extra)?;
            Ok(Term::compound(atoms::COLON, vec![c.args[0].clone(), inner]))
        }
        Term::Compound(c) => {
            let mut args = c.args.to_vec();
            args.extend_from_slice(extra);
            Ok(Term::compound(c.functor, args))
        }
        Term::Var(_) => Err(Exception::instantiation()),
        other => Err(Exception::type_error(&rt.store, "callable", other)),
    }
}
