//! Term output: canonical quoted form (`writeq`) and plain form (`write`).

use super::lexer::{is_alnum, is_symbol_char};
use super::ops::{OpType, Ops};
use crate::term::{atoms, Atom, Term};

#[derive(Clone, Copy, Debug)]
pub struct WriteOptions {
    pub quoted: bool,
    pub max_depth: usize,
}

impl Default for WriteOptions {
    fn default() -> Self {
        WriteOptions {
            quoted: true,
            max_depth: 10_000,
        }
    }
}

/// Quoted rendering of an already resolved term.
pub fn format_plain(term: &Term) -> String {
    format_term(term, WriteOptions::default())
}

/// Unquoted rendering, as `write/1` prints.
pub fn format_unquoted(term: &Term) -> String {
    format_term(
        term,
        WriteOptions {
            quoted: false,
            ..WriteOptions::default()
        },
    )
}

pub fn format_term(term: &Term, opts: WriteOptions) -> String {
    let mut w = Writer {
        out: String::new(),
        opts,
        ops: Ops::standard(),
    };
    w.write(term, 1200, 0);
    w.out
}

struct Writer {
    out: String,
    opts: WriteOptions,
    ops: &'static Ops,
}

pub fn atom_needs_quotes(name: &str) -> bool {
    if name.is_empty() {
        return true;
    }
    if matches!(name, "[]" | "!" | ";" | "{}") {
        return false;
    }
    let mut chars = name.chars();
    let first = chars.next().unwrap();
    if first.is_lowercase() {
        return !name.chars().all(is_alnum);
    }
    if name.chars().all(is_symbol_char) {
        return false;
    }
    true
}

pub fn quote_atom(name: &str) -> String {
    let mut s = String::with_capacity(name.len() + 2);
    s.push('\'');
    for c in name.chars() {
        match c {
            '\'' => s.push_str("\\'"),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s.push('\'');
    s
}

pub fn format_float(f: f64) -> String {
    if !f.is_finite() {
        return if f.is_nan() {
            "nan".into()
        } else if f > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{f:?}");
    if s.contains('.') {
        s
    } else if let Some(pos) = s.find('e') {
        format!("{}.0{}", &s[..pos], &s[pos..])
    } else {
        format!("{s}.0")
    }
}

impl Writer {
    /// Appends a token, inserting a space when it would otherwise fuse with
    /// the previous one.
    fn emit(&mut self, s: &str) {
        if let (Some(prev), Some(next)) = (self.out.chars().last(), s.chars().next()) {
            let fuse = (is_symbol_char(prev) && is_symbol_char(next)) || (is_alnum(prev) && is_alnum(next));
            if fuse {
                self.out.push(' ');
            }
        }
        self.out.push_str(s);
    }

    fn atom_text(&self, a: Atom) -> String {
        let name = a.name();
        if self.opts.quoted && atom_needs_quotes(name) {
            quote_atom(name)
        } else {
            name.to_owned()
        }
    }

    fn write_atom(&mut self, a: Atom, prec: u16) {
        let text = self.atom_text(a);
        // Bare operators as operands are bracketed.
        if self.ops.is_op(a) && prec < 1200 && a != atoms::NIL && a != atoms::CURLY {
            let p = self
                .ops
                .infix(a)
                .map(|d| d.priority)
                .max(self.ops.prefix(a).map(|d| d.priority))
                .unwrap_or(0);
            // Operands of operators are always bracketed; plain arguments only
            // when the operator outranks the argument priority.
            if p > prec || prec < 999 {
                self.emit("(");
                self.out.push_str(&text);
                self.out.push(')');
                return;
            }
        }
        if a == atoms::COMMA && self.opts.quoted {
            self.emit("','");
            return;
        }
        self.emit(&text);
    }

    fn write(&mut self, term: &Term, prec: u16, depth: usize) {
        if depth > self.opts.max_depth {
            self.emit("...");
            return;
        }
        match term {
            Term::Var(v) => self.emit(&format!("_{v}")),
            Term::Int(i) => self.emit(&i.to_string()),
            Term::Float(f) => self.emit(&format_float(*f)),
            Term::Atom(a) => self.write_atom(*a, prec),
            Term::Obj(o) => self.emit(&o.to_string()),
            Term::Compound(c) => {
                let f = c.functor;
                let n = c.args.len();
                if f == atoms::DOT && n == 2 {
                    return self.write_list(term, depth);
                }
                if f == atoms::CURLY && n == 1 {
                    self.emit("{");
                    self.write(&c.args[0], 1200, depth + 1);
                    self.out.push('}');
                    return;
                }
                if n == 2 {
                    if let Some(def) = self.ops.infix(f) {
                        let (lp, rp) = def.infix_arg_priorities();
                        let open = def.priority > prec;
                        if open {
                            self.emit("(");
                        }
                        self.write(&c.args[0], lp, depth + 1);
                        if f == atoms::COMMA {
                            self.out.push(',');
                        } else {
                            let name = self.atom_text(f);
                            if name.chars().all(is_alnum) {
                                self.out.push(' ');
                                self.out.push_str(&name);
                                self.out.push(' ');
                            } else {
                                self.emit(&name);
                            }
                        }
                        self.write(&c.args[1], rp, depth + 1);
                        if open {
                            self.out.push(')');
                        }
                        return;
                    }
                }
                if n == 1 {
                    if let Some(def) = self.ops.prefix(f) {
                        let arg = &c.args[0];
                        let open = def.priority > prec;
                        if open {
                            self.emit("(");
                        }
                        let name = self.atom_text(f);
                        self.emit(&name);
                        let arg_prec = if def.kind == OpType::Fy {
                            def.priority
                        } else {
                            def.priority - 1
                        };
                        // `- 1` must not read back as the literal -1, and an
                        // operand starting with '(' would read as a call.
                        let needs_space = matches!(arg, Term::Int(_) | Term::Float(_))
                            && (f == atoms::MINUS || f == atoms::PLUS)
                            || self.ops.is_op_term(arg)
                            || name.chars().all(is_alnum);
                        if needs_space {
                            self.out.push(' ');
                        }
                        self.write(arg, arg_prec, depth + 1);
                        if open {
                            self.out.push(')');
                        }
                        return;
                    }
                }
                let name = if self.opts.quoted && (f == atoms::NIL || f == atoms::CURLY) {
                    quote_atom(f.name())
                } else {
                    self.atom_text(f)
                };
                self.emit(&name);
                self.out.push('(');
                for (i, arg) in c.args.iter().enumerate() {
                    if i > 0 {
                        self.out.push(',');
                    }
                    self.write(arg, 999, depth + 1);
                }
                self.out.push(')');
            }
        }
    }

    fn write_list(&mut self, term: &Term, depth: usize) {
        self.emit("[");
        let mut current = term;
        let mut first = true;
        loop {
            match current {
                Term::Compound(c) if c.functor == atoms::DOT && c.args.len() == 2 => {
                    if !first {
                        self.out.push(',');
                    }
                    first = false;
                    self.write(&c.args[0], 999, depth + 1);
                    current = &c.args[1];
                }
                Term::Atom(a) if *a == atoms::NIL => break,
                other => {
                    self.out.push('|');
                    self.write(other, 999, depth + 1);
                    break;
                }
            }
        }
        self.out.push(']');
    }
}

impl Ops {
    /// Whether the term is an operator atom or an operator-headed compound
    /// (used to decide spacing after prefix operators).
    fn is_op_term(&self, t: &Term) -> bool {
        match t {
            Term::Atom(a) => self.is_op(*a),
            Term::Compound(c) => {
                (c.args.len() == 2 && self.infix(c.functor).is_some())
                    || (c.args.len() == 1 && self.prefix(c.functor).is_some())
            }
            _ => false,
        }
    }
}
