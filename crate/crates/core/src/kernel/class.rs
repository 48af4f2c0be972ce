//! Classes, slots and methods.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use super::types::{TypeSpec, Value};
use crate::engine::EResult;
use crate::runtime::Runtime;
use crate::term::{Atom, ObjId};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct ClassId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Access {
    Both,
    Get,
    Send,
    None,
}

impl Access {
    pub fn parse(name: &str) -> Option<Access> {
        Some(match name {
            "both" => Access::Both,
            "get" => Access::Get,
            "send" => Access::Send,
            "none" => Access::None,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Access::Both => "both",
            Access::Get => "get",
            Access::Send => "send",
            Access::None => "none",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SlotDef {
    pub name: Atom,
    pub spec: TypeSpec,
    pub access: Access,
    pub doc: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum MethodKind {
    Send,
    Get,
}

impl MethodKind {
    /// Separator used in method ids: `'Class->Sel'` or `'Class<-Sel'`.
    pub fn arrow(self) -> &'static str {
        match self {
            MethodKind::Send => "->",
            MethodKind::Get => "<-",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: Option<Atom>,
    pub spec: TypeSpec,
    /// Filled in when the caller omits the argument.
    pub default: Option<Value>,
}

impl Param {
    pub fn new(spec: TypeSpec) -> Param {
        Param {
            name: None,
            spec,
            default: None,
        }
    }

    pub fn optional(spec: TypeSpec, default: Value) -> Param {
        Param {
            name: None,
            spec,
            default: Some(default),
        }
    }
}

/// Native method body. Send methods return `Some(_)` for success and `None`
/// for failure; get methods return their result.
pub type NativeFn = Rc<dyn Fn(&mut Runtime, ObjId, &[Value]) -> EResult<Option<Value>>>;

#[derive(Clone)]
pub enum Implementation {
    Native(NativeFn),
    /// Clause of `send_implementation/3` or `get_implementation/4` keyed
    /// by this method id.
    Logic(Atom),
    SlotGet(Atom),
    SlotSend(Atom),
}

impl fmt::Debug for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Implementation::Native(_) => f.write_str("Native"),
            Implementation::Logic(id) => write!(f, "Logic({:?})", id.name()),
            Implementation::SlotGet(s) => write!(f, "SlotGet({s})"),
            Implementation::SlotSend(s) => write!(f, "SlotSend({s})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Method {
    pub selector: Atom,
    pub kind: MethodKind,
    pub params: Vec<Param>,
    /// The last parameter absorbs any number of trailing arguments.
    pub variadic: bool,
    pub ret: TypeSpec,
    pub imp: Implementation,
    /// Dispatched in-engine, keeping the body's choice points.
    pub pure: bool,
    pub class: ClassId,
    pub doc: String,
}

impl Method {
    pub fn native_send(selector: &str, params: Vec<Param>, f: NativeFn) -> Method {
        Method {
            selector: Atom::new(selector),
            kind: MethodKind::Send,
            params,
            variadic: false,
            ret: TypeSpec::Any,
            imp: Implementation::Native(f),
            pure: false,
            class: ClassId(0),
            doc: String::new(),
        }
    }

    pub fn native_get(selector: &str, params: Vec<Param>, ret: TypeSpec, f: NativeFn) -> Method {
        Method {
            kind: MethodKind::Get,
            ret,
            ..Method::native_send(selector, params, f)
        }
    }

    pub fn variadic(mut self) -> Method {
        self.variadic = true;
        self
    }

    pub fn is_native(&self) -> bool {
        matches!(self.imp, Implementation::Native(_))
    }

    pub fn logic_id(&self) -> Option<Atom> {
        match self.imp {
            Implementation::Logic(id) => Some(id),
            _ => None,
        }
    }
}

pub struct Class {
    pub id: ClassId,
    pub name: Atom,
    pub super_class: Option<ClassId>,
    /// Slots declared by this class itself.
    pub own_slots: Vec<SlotDef>,
    /// All slots, inherited ones first; instance slot vectors follow it.
    pub layout: Vec<SlotDef>,
    pub slot_index: HashMap<Atom, usize>,
    pub send_methods: HashMap<Atom, Rc<Method>>,
    pub get_methods: HashMap<Atom, Rc<Method>>,
    /// Defined from logic code (as opposed to built into the toolkit).
    pub from_logic: bool,
}

impl Class {
    pub fn methods(&self, kind: MethodKind) -> &HashMap<Atom, Rc<Method>> {
        match kind {
            MethodKind::Send => &self.send_methods,
            MethodKind::Get => &self.get_methods,
        }
    }

    pub fn methods_mut(&mut self, kind: MethodKind) -> &mut HashMap<Atom, Rc<Method>> {
        match kind {
            MethodKind::Send => &mut self.send_methods,
            MethodKind::Get => &mut self.get_methods,
        }
    }
}
