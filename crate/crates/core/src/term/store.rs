use super::{Term, TermError, VarId};

/// Identifier of an open term-reference frame.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FrameId(pub u64);

/// Frame-scoped handle to a live term. Valid only while its frame is open.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct TermRef {
    pub frame: FrameId,
    pub handle: usize,
}

/// Snapshot of the store used to undo bindings on backtracking.
#[derive(Clone, Copy, Debug)]
pub struct Marks {
    pub trail: usize,
    pub vars: usize,
}

struct Frame {
    id: FrameId,
    refs: Vec<Term>,
}

/// Variable bindings with a trail, plus the stack of term-reference frames.
///
/// Only bindings of variables older than `boundary` (the variable high-water
/// mark of the newest choice point) are trailed; younger variables are
/// discarded wholesale when backtracking truncates the variable table.
pub struct Store {
    vars: Vec<Option<Term>>,
    trail: Vec<VarId>,
    boundary: usize,
    frames: Vec<Frame>,
    next_frame: u64,
    pub occurs_check: bool,
    scratch: Vec<(Term, Term)>,
}

impl Default for Store {
    fn default() -> Self {
        Store::new()
    }
}

impl Store {
    pub fn new() -> Store {
        Store {
            vars: Vec::new(),
            trail: Vec::new(),
            boundary: 0,
            frames: Vec::new(),
            next_frame: 1,
            occurs_check: false,
            scratch: Vec::new(),
        }
    }

    pub fn fresh_var(&mut self) -> Term {
        let id = self.vars.len() as VarId;
        self.vars.push(None);
        Term::Var(id)
    }

    /// Reserves `n` consecutive unbound variables and returns the first id.
    pub fn alloc_vars(&mut self, n: usize) -> VarId {
        let base = self.vars.len();
        self.vars.resize(base + n, None);
        base as VarId
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn trail_len(&self) -> usize {
        self.trail.len()
    }

    pub fn marks(&self) -> Marks {
        Marks {
            trail: self.trail.len(),
            vars: self.vars.len(),
        }
    }

    pub fn boundary(&self) -> usize {
        self.boundary
    }

    pub fn set_boundary(&mut self, boundary: usize) {
        self.boundary = boundary;
    }

    /// Unbinds every trailed variable above `marks` and discards younger
    /// variables.
    pub fn undo_to(&mut self, marks: Marks) {
        while self.trail.len() > marks.trail {
            let v = self.trail.pop().expect("trail underflow") as usize;
            if v < self.vars.len() {
                self.vars[v] = None;
            }
        }
        if self.vars.len() > marks.vars {
            self.vars.truncate(marks.vars);
        }
    }

    /// Undoes trailed bindings without discarding variables.
    pub fn undo_trail(&mut self, trail_mark: usize) {
        while self.trail.len() > trail_mark {
            let v = self.trail.pop().expect("trail underflow") as usize;
            if v < self.vars.len() {
                self.vars[v] = None;
            }
        }
    }

    pub fn binding(&self, v: VarId) -> Option<&Term> {
        self.vars.get(v as usize).and_then(Option::as_ref)
    }

    pub fn is_bound(&self, v: VarId) -> bool {
        self.binding(v).is_some()
    }

    pub(crate) fn bind(&mut self, v: VarId, value: Term) {
        debug_assert!(self.vars[v as usize].is_none());
        self.vars[v as usize] = Some(value);
        if (v as usize) < self.boundary {
            self.trail.push(v);
        }
    }

    pub(crate) fn clear_binding(&mut self, v: VarId) {
        self.vars[v as usize] = None;
    }

    /// Follows variable bindings until reaching a non-variable or an unbound
    /// variable.
    pub fn deref(&self, term: &Term) -> Term {
        let mut current = term;
        while let Term::Var(v) = current {
            match self.vars.get(*v as usize).and_then(Option::as_ref) {
                Some(next) => current = next,
                None => break,
            }
        }
        current.clone()
    }

    /// Replaces every bound variable by its value, recursively. Cyclic
    /// bindings are reported as [`TermError::Cyclic`].
    pub fn resolve(&self, term: &Term) -> Result<Term, TermError> {
        super::copy::rebuild(self, term, usize::MAX, &mut |v| Term::Var(v)).map(|(t, _)| t)
    }

    pub(crate) fn take_scratch(&mut self) -> Vec<(Term, Term)> {
        let mut s = std::mem::take(&mut self.scratch);
        s.clear();
        s
    }

    pub(crate) fn return_scratch(&mut self, mut s: Vec<(Term, Term)>) {
        s.clear();
        self.scratch = s;
    }

    // ---- frames -------------------------------------------------------

    pub fn open_frame(&mut self) -> FrameId {
        let id = FrameId(self.next_frame);
        self.next_frame += 1;
        self.frames.push(Frame { id, refs: Vec::new() });
        id
    }

    /// Closes the innermost frame; closing any other frame is an error.
    pub fn close_frame(&mut self, frame: FrameId) -> Result<(), TermError> {
        match self.frames.last() {
            Some(top) if top.id == frame => {
                self.frames.pop();
                Ok(())
            }
            top => Err(TermError::NonLifoFrame {
                closing: frame.0,
                innermost: top.map(|f| f.id.0),
            }),
        }
    }

    pub fn frame_is_open(&self, frame: FrameId) -> bool {
        self.frames.iter().rev().any(|f| f.id == frame)
    }

    pub fn current_frame(&self) -> Option<FrameId> {
        self.frames.last().map(|f| f.id)
    }

    pub fn open_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn new_term_ref(&mut self, frame: FrameId, term: Term) -> Result<TermRef, TermError> {
        let f = self
            .frames
            .iter_mut()
            .rev()
            .find(|f| f.id == frame)
            .ok_or(TermError::StaleReference {
                frame: frame.0,
                handle: 0,
            })?;
        f.refs.push(term);
        Ok(TermRef {
            frame,
            handle: f.refs.len() - 1,
        })
    }

    pub fn term_of(&self, r: TermRef) -> Result<Term, TermError> {
        self.frames
            .iter()
            .rev()
            .find(|f| f.id == r.frame)
            .and_then(|f| f.refs.get(r.handle))
            .cloned()
            .ok_or(TermError::StaleReference {
                frame: r.frame.0,
                handle: r.handle,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ref_is_stale_after_frame_close() {
        let mut store = Store::new();
        let f = store.open_frame();
        let r = store.new_term_ref(f, Term::Int(3)).unwrap();
        assert_eq!(store.term_of(r).unwrap(), Term::Int(3));
        store.close_frame(f).unwrap();
        assert!(matches!(store.term_of(r), Err(TermError::StaleReference { .. })));
    }

    #[test]
    fn inner_close_keeps_outer_refs() {
        let mut store = Store::new();
        let outer = store.open_frame();
        let r = store.new_term_ref(outer, Term::atom("a")).unwrap();
        let inner = store.open_frame();
        let r2 = store.new_term_ref(inner, Term::atom("b")).unwrap();
        store.close_frame(inner).unwrap();
        assert_eq!(store.term_of(r).unwrap(), Term::atom("a"));
        assert!(store.term_of(r2).is_err());
    }

    #[test]
    fn out_of_order_close_is_rejected() {
        let mut store = Store::new();
        let outer = store.open_frame();
        let inner = store.open_frame();
        assert!(matches!(store.close_frame(outer), Err(TermError::NonLifoFrame { .. })));
        store.close_frame(inner).unwrap();
        store.close_frame(outer).unwrap();
    }

    #[test]
    fn only_old_variables_are_trailed() {
        let mut store = Store::new();
        let old = store.fresh_var();
        store.set_boundary(store.var_count());
        let young = store.fresh_var();
        let (Term::Var(o), Term::Var(y)) = (old, young) else {
            unreachable!()
        };
        store.bind(o, Term::Int(1));
        store.bind(y, Term::Int(2));
        assert_eq!(store.trail_len(), 1);
    }
}
