use std::collections::HashMap;
use std::sync::LazyLock;

use crate::term::Atom;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OpType {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
}

#[derive(Clone, Copy, Debug)]
pub struct OpDef {
    pub priority: u16,
    pub kind: OpType,
}

impl OpDef {
    /// Maximum priorities of the (left, right) operands of an infix operator.
    pub fn infix_arg_priorities(self) -> (u16, u16) {
        let p = self.priority;
        match self.kind {
            OpType::Xfx => (p - 1, p - 1),
            OpType::Xfy => (p - 1, p),
            OpType::Yfx => (p, p - 1),
            _ => unreachable!("not an infix operator"),
        }
    }

    pub fn prefix_arg_priority(self) -> u16 {
        match self.kind {
            OpType::Fy => self.priority,
            _ => self.priority - 1,
        }
    }
}

#[derive(Default)]
pub struct Ops {
    prefix: HashMap<Atom, OpDef>,
    infix: HashMap<Atom, OpDef>,
}

impl Ops {
    pub fn standard() -> &'static Ops {
        static STANDARD: LazyLock<Ops> = LazyLock::new(Ops::build_standard);
        &STANDARD
    }

    fn build_standard() -> Ops {
        use OpType::*;
        let mut ops = Ops::default();
        let table: &[(u16, OpType, &[&str])] = &[
            (1200, Xfx, &[":-", "-->", ":->", ":<-"]),
            (1200, Fx, &[":-", "?-"]),
            (1150, Fx, &["dynamic", "multifile", "discontiguous"]),
            (1100, Xfy, &[";", "|"]),
            (1050, Xfy, &["->"]),
            (1000, Xfy, &[","]),
            (990, Xfx, &["::"]),
            (900, Fy, &["\\+"]),
            (
                700,
                Xfx,
                &[
                    "=", "\\=", "==", "\\==", "@<", "@>", "@=<", "@>=", "=..", "is", "=:=", "=\\=", "<", ">", "=<",
                    ">=",
                ],
            ),
            (500, Yfx, &["+", "-", "/\\", "\\/", "xor"]),
            (400, Yfx, &["*", "/", "//", "mod", "rem", "<<", ">>", "div"]),
            (200, Xfx, &["**"]),
            (200, Xfy, &["^", ":"]),
            (200, Fy, &["-", "+", "\\"]),
            (200, Fx, &["@"]),
        ];
        for (priority, kind, names) in table {
            for name in names.iter() {
                ops.add(Atom::new(name), *priority, *kind);
            }
        }
        ops
    }

    pub fn add(&mut self, name: Atom, priority: u16, kind: OpType) {
        let def = OpDef { priority, kind };
        match kind {
            OpType::Fx | OpType::Fy => self.prefix.insert(name, def),
            _ => self.infix.insert(name, def),
        };
    }

    pub fn prefix(&self, name: Atom) -> Option<OpDef> {
        self.prefix.get(&name).copied()
    }

    pub fn infix(&self, name: Atom) -> Option<OpDef> {
        self.infix.get(&name).copied()
    }

    pub fn is_op(&self, name: Atom) -> bool {
        self.prefix.contains_key(&name) || self.infix.contains_key(&name)
    }
}
