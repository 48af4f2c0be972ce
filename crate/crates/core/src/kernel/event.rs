//! The fixed event-kind taxonomy.

use crate::term::Atom;

/// `(kind, parent)` pairs; `any` is the root.
const TAXONOMY: &[(&str, Option<&str>)] = &[
    ("any", None),
    ("area", Some("any")),
    ("area_enter", Some("area")),
    ("area_exit", Some("area")),
    ("button", Some("any")),
    ("button_down", Some("button")),
    ("button_up", Some("button")),
    ("keyboard", Some("any")),
];

pub fn is_kind(kind: Atom) -> bool {
    TAXONOMY.iter().any(|(k, _)| *k == kind.name())
}

pub fn parent(kind: Atom) -> Option<Atom> {
    TAXONOMY
        .iter()
        .find(|(k, _)| *k == kind.name())
        .and_then(|(_, p)| p.map(Atom::new))
}

pub fn kinds() -> impl Iterator<Item = Atom> {
    TAXONOMY.iter().map(|(k, _)| Atom::new(k))
}

/// True iff `kind` equals `ancestor` or descends from it.
pub fn is_a(kind: Atom, ancestor: Atom) -> bool {
    let mut current = Some(kind);
    while let Some(k) = current {
        if k == ancestor {
            return true;
        }
        current = parent(k);
    }
    false
}
