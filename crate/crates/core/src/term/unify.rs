use std::rc::Rc;

use super::{Store, Term, VarId};

impl Store {
    /// Unifies two terms. On failure every binding made by this call is
    /// undone, trailed or not.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let trail_mark = self.trail_len();
        let mut bound: Vec<VarId> = Vec::new();
        let mut stack = self.take_scratch();
        stack.push((a.clone(), b.clone()));
        let ok = self.unify_loop(&mut stack, &mut bound);
        self.return_scratch(stack);
        if !ok {
            for v in bound {
                self.unbind_untrailed(v);
            }
            self.undo_trail(trail_mark);
        }
        ok
    }

    fn unbind_untrailed(&mut self, v: VarId) {
        if (v as usize) < self.var_count() {
            self.clear_binding(v);
        }
    }

    fn unify_loop(&mut self, stack: &mut Vec<(Term, Term)>, bound: &mut Vec<VarId>) -> bool {
        while let Some((a, b)) = stack.pop() {
            let a = self.deref(&a);
            let b = self.deref(&b);
            match (&a, &b) {
                (Term::Var(x), Term::Var(y)) => {
                    if x == y {
                        continue;
                    }
                    // Bind the younger variable to the older one so that
                    // bindings point towards older cells.
                    let (young, old) = if x > y { (*x, b) } else { (*y, a) };
                    self.bind(young, old);
                    bound.push(young);
                }
                (Term::Var(x), other) | (other, Term::Var(x)) => {
                    if self.occurs_check && self.occurs(*x, other) {
                        return false;
                    }
                    self.bind(*x, other.clone());
                    bound.push(*x);
                }
                (Term::Int(x), Term::Int(y)) => {
                    if x != y {
                        return false;
                    }
                }
                (Term::Float(x), Term::Float(y)) => {
                    if x.to_bits() != y.to_bits() {
                        return false;
                    }
                }
                (Term::Atom(x), Term::Atom(y)) => {
                    if x != y {
                        return false;
                    }
                }
                (Term::Obj(x), Term::Obj(y)) => {
                    if x != y {
                        return false;
                    }
                }
                (Term::Compound(x), Term::Compound(y)) => {
                    if Rc::ptr_eq(x, y) {
                        continue;
                    }
                    if x.functor != y.functor || x.args.len() != y.args.len() {
                        return false;
                    }
                    for (p, q) in x.args.iter().zip(y.args.iter()).rev() {
                        stack.push((p.clone(), q.clone()));
                    }
                }
                _ => return false,
            }
        }
        true
    }

    /// Whether variable `v` occurs in `term` after dereferencing.
    pub fn occurs(&self, v: VarId, term: &Term) -> bool {
        let mut stack = vec![term.clone()];
        while let Some(t) = stack.pop() {
            match self.deref(&t) {
                Term::Var(w) if w == v => return true,
                Term::Compound(c) => stack.extend(c.args.iter().cloned()),
                _ => {}
            }
        }
        false
    }
}
