//! A substitution-based reference unifier and a random term generator for
//! checking the store's unification.

use std::collections::HashMap;

use objlog::term::{Atom, Store, Term};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum O {
    V(u32),
    A(&'static str),
    I(i64),
    F(&'static str, Vec<O>),
}

pub const VARS: u32 = 4;

impl O {
    pub fn nodes(&self) -> usize {
        match self {
            O::F(_, args) => 1 + args.iter().map(O::nodes).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn to_term(&self, base: u32) -> Term {
        match self {
            O::V(v) => Term::Var(base + v),
            O::A(a) => Term::atom(a),
            O::I(i) => Term::Int(*i),
            O::F(f, args) => Term::compound(Atom::new(f), args.iter().map(|a| a.to_term(base)).collect()),
        }
    }
}

/// A random term of at most `budget` nodes.
pub fn random_term(rng: &mut impl Rng, budget: usize) -> O {
    let leaf = |rng: &mut dyn rand::RngCore| match rng.gen_range(0..5) {
        0 | 1 => O::V(rng.gen_range(0..VARS)),
        2 => O::A(["a", "b"][rng.gen_range(0..2)]),
        3 => O::I(rng.gen_range(1..3)),
        _ => O::A("[]"),
    };
    if budget < 2 || rng.gen_bool(0.4) {
        return leaf(rng);
    }
    let (name, arity) = [("f", 1), ("g", 2), ("h", 3)][rng.gen_range(0..3)];
    let arity = arity.min(budget - 1);
    let mut left = budget - 1 - arity;
    let mut args = Vec::with_capacity(arity);
    for _ in 0..arity {
        let extra = if left > 0 { rng.gen_range(0..=left) } else { 0 };
        let arg = random_term(rng, 1 + extra);
        left -= arg.nodes() - 1;
        args.push(arg);
    }
    O::F(name, args)
}

fn walk(s: &HashMap<u32, O>, t: &O) -> O {
    let mut t = t.clone();
    while let O::V(v) = t {
        match s.get(&v) {
            Some(next) => t = next.clone(),
            None => break,
        }
    }
    t
}

fn occurs(s: &HashMap<u32, O>, v: u32, t: &O) -> bool {
    match walk(s, t) {
        O::V(w) => v == w,
        O::F(_, args) => args.iter().any(|a| occurs(s, v, a)),
        _ => false,
    }
}

/// Robinson unification with occurs check; the most general unifier.
pub fn unify(a: &O, b: &O) -> Option<HashMap<u32, O>> {
    let mut s = HashMap::new();
    let mut work = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = work.pop() {
        let (x, y) = (walk(&s, &x), walk(&s, &y));
        match (&x, &y) {
            (O::V(p), O::V(q)) if p == q => {}
            (O::V(p), t) | (t, O::V(p)) => {
                if occurs(&s, *p, t) {
                    return None;
                }
                s.insert(*p, t.clone());
            }
            (O::F(f, xs), O::F(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                work.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ if x == y => {}
            _ => return None,
        }
    }
    Some(s)
}

pub fn apply(s: &HashMap<u32, O>, t: &O) -> O {
    match walk(s, t) {
        O::F(f, args) => O::F(f, args.iter().map(|a| apply(s, a)).collect()),
        other => other,
    }
}

#[derive(Debug, Default)]
pub struct Tally {
    pub cases: usize,
    pub unifiable: usize,
    pub mismatches: Vec<String>,
}

/// Runs `cases` random pairs through the store (with occurs check) and the
/// reference unifier, in both argument orders.
pub fn compare(rng: &mut impl Rng, cases: usize, max_nodes: usize) -> Tally {
    let mut tally = Tally::default();
    for _ in 0..cases {
        let (na, nb) = (rng.gen_range(1..=max_nodes), rng.gen_range(1..=max_nodes));
        let a = random_term(rng, na);
        let b = random_term(rng, nb);
        assert!(a.nodes() <= max_nodes && b.nodes() <= max_nodes);
        tally.cases += 1;
        let expected = unify(&a, &b);
        if expected.is_some() {
            tally.unifiable += 1;
        }
        for (x, y) in [(&a, &b), (&b, &a)] {
            if let Err(why) = check_pair(x, y, expected.as_ref()) {
                tally.mismatches.push(format!("{a:?} = {b:?}: {why}"));
            }
        }
    }
    tally
}

fn check_pair(x: &O, y: &O, expected: Option<&HashMap<u32, O>>) -> Result<(), String> {
    let mut store = Store::new();
    store.occurs_check = true;
    let base = store.alloc_vars(VARS as usize);
    let (tx, ty) = (x.to_term(base), y.to_term(base));
    // A choice point would set the boundary here; bindings above it are trailed.
    store.set_boundary(store.var_count());
    let marks = store.marks();
    let ok = store.unify(&tx, &ty);
    match (ok, expected) {
        (false, None) => {}
        (true, Some(s)) => {
            let rx = store.resolve(&tx).map_err(|e| e.to_string())?;
            let ry = store.resolve(&ty).map_err(|e| e.to_string())?;
            if rx != ry {
                return Err(format!("sides differ after unify: {rx:?} vs {ry:?}"));
            }
            // Compare the full substitution, not just the unified term.
            let got: Vec<Term> = (0..VARS)
                .map(|v| store.resolve(&Term::Var(base + v)).expect("acyclic"))
                .collect();
            let want: Vec<Term> = (0..VARS).map(|v| apply(s, &O::V(v)).to_term(base)).collect();
            let (got, want) = (Term::app("s", got), Term::app("s", want));
            if !super::alpha_equivalent(&got, &want) {
                return Err(format!("substitution {got:?} is not a variant of {want:?}"));
            }
        }
        (got, want) => return Err(format!("store says {got}, oracle says {}", want.is_some())),
    }
    store.undo_to(marks);
    if (0..VARS).any(|v| store.is_bound(base + v)) {
        return Err("bindings survive undo".into());
    }
    Ok(())
}
