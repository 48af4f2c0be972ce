//! The object kernel: class table, instances, reference counting and the
//! heap audit.

pub mod class;
pub mod event;
pub mod types;

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

pub use class::{Access, Class, ClassId, Implementation, Method, MethodKind, NativeFn, Param, SlotDef};
pub use types::{TypeSpec, Value};

use crate::engine::{EResult, Exception};
use crate::term::{atoms, Atom, ObjId, RecordId, Records, Term, TermRef};

/// Where a host-data wrapper keeps its term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HostState {
    /// Still on the engine stacks, valid while the creating frame is open.
    Live(TermRef),
    /// Copied to the permanent heap.
    Recorded(RecordId),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    None,
    /// Ordered references (picture contents, node sons, message arguments).
    Chain(Vec<Value>),
    Host(HostState),
}

#[derive(Clone, Debug)]
pub struct Object {
    pub class: ClassId,
    pub slots: Vec<Value>,
    pub refcount: u32,
    pub locked: bool,
    pub payload: Payload,
    /// Well-known singletons (`@nil`, `@prolog`) are never counted or freed.
    pub permanent: bool,
}

enum Entry {
    Live(Box<Object>),
    /// Tombstone of a destroyed object.
    Dead(ClassId),
}

/// Host-data counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HostCounters {
    pub wrappers_live: u64,
    pub wrappers_created_total: u64,
    pub wrappers_recorded_total: u64,
    pub wrappers_destroyed_recorded: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    /// `(object, stored refcount, counted references)` where they differ.
    pub discrepancies: Vec<(ObjId, u32, u32)>,
    /// Live objects that lie on a reference cycle (never collected).
    pub cycles: Vec<ObjId>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

pub struct Kernel {
    classes: Vec<Class>,
    by_name: HashMap<Atom, ClassId>,
    objects: Vec<Entry>,
    holds: HashMap<ObjId, u32>,
    live: usize,
    pub host: HostCounters,
}

pub fn freed_object(id: ObjId) -> Exception {
    Exception::error(Term::compound(atoms::FREED_OBJECT, vec![Term::Obj(id)]))
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::new()
    }
}

impl Kernel {
    /// A kernel with the root class `object` and the `@nil` singleton.
    pub fn new() -> Kernel {
        let mut k = Kernel {
            classes: Vec::new(),
            by_name: HashMap::new(),
            objects: Vec::new(),
            holds: HashMap::new(),
            live: 0,
            host: HostCounters::default(),
        };
        let root = k.define_class(atoms::OBJECT, None, false).expect("fresh kernel");
        let nil = k.alloc(root);
        debug_assert_eq!(nil, ObjId::NIL);
        k.object_mut(nil).expect("nil").permanent = true;
        k
    }

    // ---- classes ------------------------------------------------------

    pub fn define_class(&mut self, name: Atom, super_name: Option<Atom>, from_logic: bool) -> EResult<ClassId> {
        if self.by_name.contains_key(&name) {
            return Err(Exception::permission("create", "class", Term::Atom(name)));
        }
        let super_class = match super_name {
            Some(s) if s == name => return Err(Exception::permission("inherit", "class", Term::Atom(name))),
            Some(s) => Some(
                *self
                    .by_name
                    .get(&s)
                    .ok_or_else(|| Exception::existence("class", Term::Atom(s)))?,
            ),
            None => None,
        };
        let layout = super_class.map_or_else(Vec::new, |s| self.class(s).layout.clone());
        let slot_index = layout.iter().enumerate().map(|(i, s)| (s.name, i)).collect();
        let id = ClassId(self.classes.len() as u32);
        self.classes.push(Class {
            id,
            name,
            super_class,
            own_slots: Vec::new(),
            layout,
            slot_index,
            send_methods: HashMap::new(),
            get_methods: HashMap::new(),
            from_logic,
        });
        self.by_name.insert(name, id);
        Ok(id)
    }

    pub fn class(&self, id: ClassId) -> &Class {
        &self.classes[id.0 as usize]
    }

    pub fn class_mut(&mut self, id: ClassId) -> &mut Class {
        &mut self.classes[id.0 as usize]
    }

    pub fn class_named(&self, name: Atom) -> Option<ClassId> {
        self.by_name.get(&name).copied()
    }

    pub fn classes(&self) -> impl Iterator<Item = &Class> {
        self.classes.iter()
    }

    pub fn is_subclass(&self, class: ClassId, ancestor: ClassId) -> bool {
        let mut current = Some(class);
        while let Some(c) = current {
            if c == ancestor {
                return true;
            }
            current = self.class(c).super_class;
        }
        false
    }

    pub fn instance_of(&self, id: ObjId, class_name: Atom) -> bool {
        match (self.object(id), self.class_named(class_name)) {
            (Ok(o), Some(c)) => self.is_subclass(o.class, c),
            _ => false,
        }
    }

    /// Adds a slot and its accessor methods. Slots must be declared before
    /// subclasses or instances exist.
    pub fn define_slot(&mut self, class: ClassId, slot: SlotDef) -> EResult<()> {
        if self.class(class).slot_index.contains_key(&slot.name) {
            return Err(Exception::permission("redefine", "slot", Term::Atom(slot.name)));
        }
        let name = slot.name;
        let accessors = match slot.access {
            Access::Both => vec![MethodKind::Get, MethodKind::Send],
            Access::Get => vec![MethodKind::Get],
            Access::Send => vec![MethodKind::Send],
            Access::None => vec![],
        };
        for kind in accessors {
            let (params, ret, imp) = match kind {
                MethodKind::Get => (vec![], slot.spec.clone(), Implementation::SlotGet(name)),
                MethodKind::Send => (
                    vec![Param::new(slot.spec.clone())],
                    TypeSpec::Any,
                    Implementation::SlotSend(name),
                ),
            };
            let method = Method {
                selector: name,
                kind,
                params,
                variadic: false,
                ret,
                imp,
                pure: false,
                class,
                doc: slot.doc.clone(),
            };
            self.class_mut(class).methods_mut(kind).insert(name, Rc::new(method));
        }
        let c = self.class_mut(class);
        c.slot_index.insert(name, c.layout.len());
        c.layout.push(slot.clone());
        c.own_slots.push(slot);
        Ok(())
    }

    pub fn define_method(&mut self, class: ClassId, mut method: Method) -> EResult<()> {
        method.class = class;
        let table = self.class_mut(class).methods_mut(method.kind);
        if table.contains_key(&method.selector) {
            return Err(Exception::permission("redefine", "method", Term::Atom(method.selector)));
        }
        table.insert(method.selector, Rc::new(method));
        Ok(())
    }

    /// Replaces (or adds) an own method in place.
    pub fn replace_method(&mut self, class: ClassId, mut method: Method) {
        method.class = class;
        self.class_mut(class)
            .methods_mut(method.kind)
            .insert(method.selector, Rc::new(method));
    }

    /// Nearest definition of `selector` along the super chain.
    pub fn resolve_method(&self, class: ClassId, selector: Atom, kind: MethodKind) -> Option<Rc<Method>> {
        let mut current = Some(class);
        while let Some(c) = current {
            let cls = self.class(c);
            if let Some(m) = cls.methods(kind).get(&selector) {
                return Some(m.clone());
            }
            current = cls.super_class;
        }
        None
    }

    // ---- objects ------------------------------------------------------

    fn alloc(&mut self, class: ClassId) -> ObjId {
        let id = ObjId(self.objects.len() as u64);
        let slots = vec![Value::Nil; self.class(class).layout.len()];
        self.objects.push(Entry::Live(Box::new(Object {
            class,
            slots,
            refcount: 0,
            locked: false,
            payload: Payload::None,
            permanent: false,
        })));
        self.live += 1;
        id
    }

    /// Allocates an uninitialised instance with refcount 0. The caller must
    /// hold or store it.
    pub fn create(&mut self, class: ClassId) -> ObjId {
        self.alloc(class)
    }

    pub fn create_permanent(&mut self, class: ClassId) -> ObjId {
        let id = self.alloc(class);
        self.object_mut(id).expect("fresh object").permanent = true;
        id
    }

    pub fn object(&self, id: ObjId) -> EResult<&Object> {
        match self.objects.get(id.0 as usize) {
            Some(Entry::Live(o)) => Ok(o),
            Some(Entry::Dead(_)) => Err(freed_object(id)),
            None => Err(Exception::existence("object", Term::Obj(id))),
        }
    }

    pub fn object_mut(&mut self, id: ObjId) -> EResult<&mut Object> {
        match self.objects.get_mut(id.0 as usize) {
            Some(Entry::Live(o)) => Ok(o),
            Some(Entry::Dead(_)) => Err(freed_object(id)),
            None => Err(Exception::existence("object", Term::Obj(id))),
        }
    }

    pub fn is_live(&self, id: ObjId) -> bool {
        matches!(self.objects.get(id.0 as usize), Some(Entry::Live(_)))
    }

    pub fn is_freed(&self, id: ObjId) -> bool {
        matches!(self.objects.get(id.0 as usize), Some(Entry::Dead(_)))
    }

    pub fn class_of(&self, id: ObjId) -> EResult<ClassId> {
        self.object(id).map(|o| o.class)
    }

    pub fn class_name_of(&self, id: ObjId) -> Option<Atom> {
        match self.objects.get(id.0 as usize) {
            Some(Entry::Live(o)) => Some(self.class(o.class).name),
            Some(Entry::Dead(c)) => Some(self.class(*c).name),
            None => None,
        }
    }

    /// Number of live objects, the well-known singletons included.
    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn live_ids(&self) -> impl Iterator<Item = ObjId> + '_ {
        self.objects.iter().enumerate().filter_map(|(i, e)| match e {
            Entry::Live(_) => Some(ObjId(i as u64)),
            Entry::Dead(_) => None,
        })
    }

    pub fn count_instances(&self, class_name: Atom) -> usize {
        let Some(c) = self.class_named(class_name) else {
            return 0;
        };
        self.objects
            .iter()
            .filter(|e| matches!(e, Entry::Live(o) if self.is_subclass(o.class, c)))
            .count()
    }

    pub fn slot(&self, id: ObjId, name: Atom) -> EResult<Value> {
        let o = self.object(id)?;
        let idx = *self
            .class(o.class)
            .slot_index
            .get(&name)
            .ok_or_else(|| Exception::existence("slot", Term::Atom(name)))?;
        Ok(o.slots[idx])
    }

    /// Stores a value, moving the reference count from the old value to the
    /// new one.
    pub fn set_slot(&mut self, id: ObjId, name: Atom, value: Value, records: &mut Records) -> EResult<()> {
        let o = self.object(id)?;
        let idx = *self
            .class(o.class)
            .slot_index
            .get(&name)
            .ok_or_else(|| Exception::existence("slot", Term::Atom(name)))?;
        if let Some(r) = value.referent() {
            self.object(r)?;
            self.retain(r);
        }
        let old = std::mem::replace(&mut self.object_mut(id)?.slots[idx], value);
        if let Some(r) = old.referent() {
            self.release(r, records);
        }
        Ok(())
    }

    pub fn chain(&self, id: ObjId) -> EResult<&[Value]> {
        match &self.object(id)?.payload {
            Payload::Chain(items) => Ok(items),
            _ => Ok(&[]),
        }
    }

    pub fn chain_append(&mut self, id: ObjId, value: Value) -> EResult<()> {
        if let Some(r) = value.referent() {
            self.object(r)?;
            self.retain(r);
        }
        let o = self.object_mut(id)?;
        match &mut o.payload {
            Payload::Chain(items) => items.push(value),
            p => *p = Payload::Chain(vec![value]),
        }
        Ok(())
    }

    pub fn retain(&mut self, id: ObjId) {
        if let Some(Entry::Live(o)) = self.objects.get_mut(id.0 as usize) {
            if !o.permanent {
                o.refcount += 1;
            }
        }
    }

    /// Drops one reference; the object is destroyed when none remain.
    pub fn release(&mut self, id: ObjId, records: &mut Records) {
        if let Some(Entry::Live(o)) = self.objects.get_mut(id.0 as usize) {
            if o.permanent {
                return;
            }
            assert!(o.refcount > 0, "refcount underflow on {id}");
            o.refcount -= 1;
            if o.refcount == 0 {
                self.cascade(id, records);
            }
        }
    }

    /// Adds a bridge hold (transient or session).
    pub fn hold(&mut self, id: ObjId) {
        if let Some(Entry::Live(o)) = self.objects.get(id.0 as usize) {
            if o.permanent {
                return;
            }
            *self.holds.entry(id).or_default() += 1;
            self.retain(id);
        }
    }

    pub fn unhold(&mut self, id: ObjId, records: &mut Records) {
        let Some(n) = self.holds.get_mut(&id) else {
            return;
        };
        *n -= 1;
        if *n == 0 {
            self.holds.remove(&id);
        }
        self.release(id, records);
    }

    pub fn holds_on(&self, id: ObjId) -> u32 {
        self.holds.get(&id).copied().unwrap_or(0)
    }

    pub fn lock(&mut self, id: ObjId) -> EResult<()> {
        let o = self.object_mut(id)?;
        if !o.permanent && !o.locked {
            o.locked = true;
            o.refcount += 1;
        }
        Ok(())
    }

    pub fn unlock(&mut self, id: ObjId, records: &mut Records) -> EResult<()> {
        let o = self.object_mut(id)?;
        if o.locked {
            o.locked = false;
            self.release(id, records);
        }
        Ok(())
    }

    /// Forces destruction regardless of references, leaving a tombstone.
    pub fn destroy(&mut self, id: ObjId, records: &mut Records) -> EResult<()> {
        let o = self.object(id)?;
        if o.permanent {
            return Err(Exception::permission("free", "object", Term::Obj(id)));
        }
        self.cascade(id, records);
        Ok(())
    }

    fn cascade(&mut self, id: ObjId, records: &mut Records) {
        let mut work = vec![id];
        while let Some(id) = work.pop() {
            let idx = id.0 as usize;
            let Entry::Live(o) = &self.objects[idx] else {
                continue;
            };
            let class = o.class;
            let Entry::Live(o) = std::mem::replace(&mut self.objects[idx], Entry::Dead(class)) else {
                unreachable!()
            };
            self.live -= 1;
            self.holds.remove(&id);
            let mut refs: Vec<ObjId> = o.slots.iter().filter_map(|v| v.referent()).collect();
            match o.payload {
                Payload::Chain(items) => refs.extend(items.iter().filter_map(|v| v.referent())),
                Payload::Host(state) => {
                    self.host.wrappers_live -= 1;
                    if let HostState::Recorded(r) = state {
                        records.destroy(r);
                        self.host.wrappers_destroyed_recorded += 1;
                    }
                }
                Payload::None => {}
            }
            for r in refs {
                if let Some(Entry::Live(target)) = self.objects.get_mut(r.0 as usize) {
                    if target.permanent {
                        continue;
                    }
                    assert!(target.refcount > 0, "refcount underflow on {r}");
                    target.refcount -= 1;
                    if target.refcount == 0 {
                        work.push(r);
                    }
                }
            }
        }
    }

    // ---- host data ----------------------------------------------------

    pub fn create_wrapper(&mut self, class: ClassId, tref: TermRef) -> ObjId {
        let id = self.alloc(class);
        self.object_mut(id).expect("fresh object").payload = Payload::Host(HostState::Live(tref));
        self.host.wrappers_live += 1;
        self.host.wrappers_created_total += 1;
        id
    }

    pub fn host_state(&self, id: ObjId) -> EResult<HostState> {
        match self.object(id)?.payload {
            Payload::Host(state) => Ok(state),
            _ => Err(Exception::error(Term::compound(
                atoms::TYPE_ERROR,
                vec![Term::atom("host_data"), Term::Obj(id)],
            ))),
        }
    }

    pub fn set_recorded(&mut self, id: ObjId, record: RecordId) -> EResult<()> {
        let o = self.object_mut(id)?;
        o.payload = Payload::Host(HostState::Recorded(record));
        self.host.wrappers_recorded_total += 1;
        Ok(())
    }

    /// Live wrappers still in the `Live` state (must be zero when no bridge
    /// call is active).
    pub fn live_state_wrappers(&self) -> Vec<ObjId> {
        self.objects
            .iter()
            .enumerate()
            .filter_map(|(i, e)| match e {
                Entry::Live(o) if matches!(o.payload, Payload::Host(HostState::Live(_))) => Some(ObjId(i as u64)),
                _ => None,
            })
            .collect()
    }

    // ---- inspection ---------------------------------------------------

    /// Recounts every reference from scratch and compares with the stored
    /// counts.
    pub fn audit(&self) -> AuditReport {
        let mut expected: BTreeMap<ObjId, u32> = BTreeMap::new();
        let mut edges: HashMap<ObjId, Vec<ObjId>> = HashMap::new();
        for (i, e) in self.objects.iter().enumerate() {
            let Entry::Live(o) = e else { continue };
            let id = ObjId(i as u64);
            if o.permanent {
                continue;
            }
            *expected.entry(id).or_default() += u32::from(o.locked) + self.holds_on(id);
            let chain: &[Value] = match &o.payload {
                Payload::Chain(items) => items,
                _ => &[],
            };
            for r in o.slots.iter().chain(chain.iter()).filter_map(|v| v.referent()) {
                if self.is_live(r) && !self.object(r).map(|t| t.permanent).unwrap_or(true) {
                    *expected.entry(r).or_default() += 1;
                    edges.entry(id).or_default().push(r);
                }
            }
        }
        let mut report = AuditReport::default();
        for id in self.live_ids() {
            let o = self.object(id).expect("live");
            if o.permanent {
                continue;
            }
            let want = expected.get(&id).copied().unwrap_or(0);
            if want != o.refcount {
                report.discrepancies.push((id, o.refcount, want));
            }
        }
        report.cycles = cyclic_nodes(&edges);
        report
    }

    /// One line per live object: `@N class=... refcount=... locked=...`.
    pub fn dump_objects(&self) -> Vec<String> {
        self.live_ids()
            .map(|id| {
                let o = self.object(id).expect("live");
                format!(
                    "{id} class={} refcount={} locked={}",
                    self.class(o.class).name,
                    o.refcount,
                    o.locked
                )
            })
            .collect()
    }
}

fn cyclic_nodes(edges: &HashMap<ObjId, Vec<ObjId>>) -> Vec<ObjId> {
    // Iterative Tarjan: nodes in non-trivial strongly connected components.
    let mut index: HashMap<ObjId, usize> = HashMap::new();
    let mut low: HashMap<ObjId, usize> = HashMap::new();
    let mut on_stack: HashMap<ObjId, bool> = HashMap::new();
    let mut stack: Vec<ObjId> = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    let mut nodes: Vec<ObjId> = edges.keys().copied().collect();
    nodes.sort();
    let empty = Vec::new();
    for &start in &nodes {
        if index.contains_key(&start) {
            continue;
        }
        let mut call: Vec<(ObjId, usize)> = vec![(start, 0)];
        index.insert(start, counter);
        low.insert(start, counter);
        counter += 1;
        stack.push(start);
        on_stack.insert(start, true);
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            let succ = edges.get(&v).unwrap_or(&empty);
            if *i < succ.len() {
                let w = succ[*i];
                *i += 1;
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(w) {
                    e.insert(counter);
                    low.insert(w, counter);
                    counter += 1;
                    stack.push(w);
                    on_stack.insert(w, true);
                    call.push((w, 0));
                } else if on_stack.get(&w).copied().unwrap_or(false) {
                    let lw = index[&w].min(low[&v]);
                    low.insert(v, lw);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    let lp = low[&parent].min(low[&v]);
                    low.insert(parent, lp);
                }
                if low[&v] == index[&v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("scc stack");
                        on_stack.insert(w, false);
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    let self_loop = edges.get(&v).is_some_and(|s| s.contains(&v));
                    if comp.len() > 1 || self_loop {
                        out.extend(comp);
                    }
                }
            }
        }
    }
    out.sort();
    out
}
