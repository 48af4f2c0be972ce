use std::collections::HashMap;

use super::lexer::{Lexer, Tok, Token};
use super::ops::Ops;
use super::SyntaxError;
use crate::term::{atoms, Atom, Detached, ObjId, Term, VarId};

/// A clause or query as read from text: variables are numbered locally.
#[derive(Clone, Debug)]
pub struct ReadTerm {
    pub term: Detached,
    /// Named variables in order of first occurrence (anonymous `_` excluded).
    pub var_names: Vec<(String, VarId)>,
    pub line: usize,
}

/// Reads every clause of a source text.
pub fn read_all(src: &str, ops: &Ops) -> Result<Vec<ReadTerm>, SyntaxError> {
    let tokens = Lexer::new(src).tokenize()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        ops,
        vars: HashMap::new(),
        var_order: Vec::new(),
        nvars: 0,
        depth: 0,
    };
    let mut out = Vec::new();
    while parser.pos < parser.tokens.len() {
        out.push(parser.read_clause()?);
    }
    Ok(out)
}

/// Reads exactly one term; the terminating `.` is optional.
pub fn read_term(src: &str, ops: &Ops) -> Result<ReadTerm, SyntaxError> {
    let mut tokens = Lexer::new(src).tokenize()?;
    if !matches!(tokens.last().map(|t| &t.tok), Some(Tok::End)) {
        let (line, col) = tokens.last().map_or((1, 1), |t| (t.line, t.col + 1));
        tokens.push(Token {
            tok: Tok::End,
            line,
            col,
            layout_before: true,
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        ops,
        vars: HashMap::new(),
        var_order: Vec::new(),
        nvars: 0,
        depth: 0,
    };
    let read = parser.read_clause()?;
    if parser.pos < parser.tokens.len() {
        return Err(parser.error_here("unexpected text after end of term"));
    }
    Ok(read)
}

/// Parses a term and returns it with its local variables (for tests and
/// embedding code).
pub fn parse(src: &str) -> Result<Term, SyntaxError> {
    read_term(src, Ops::standard()).map(|r| r.term.term)
}

const MAX_NESTING: usize = 2_000;

struct Parser<'o> {
    tokens: Vec<Token>,
    pos: usize,
    ops: &'o Ops,
    vars: HashMap<String, VarId>,
    var_order: Vec<(String, VarId)>,
    nvars: u32,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_token(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> SyntaxError {
        let (line, col) = self
            .tokens
            .get(self.pos)
            .or(self.tokens.last())
            .map_or((1, 1), |t| (t.line, t.col));
        SyntaxError {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(format!("expected {what}")))
        }
    }

    fn read_clause(&mut self) -> Result<ReadTerm, SyntaxError> {
        self.vars.clear();
        self.var_order.clear();
        self.nvars = 0;
        self.depth = 0;
        let line = self.tokens.get(self.pos).map_or(1, |t| t.line);
        let result = self.parse(1200).and_then(|(term, _)| {
            self.expect(Tok::End, "operator or end of clause")?;
            Ok(term)
        });
        match result {
            Ok(term) => Ok(ReadTerm {
                term: Detached {
                    term,
                    nvars: self.nvars,
                },
                var_names: self.var_order.clone(),
                line,
            }),
            Err(e) => {
                // Resynchronise on the next end token so callers may continue.
                while let Some(t) = self.next() {
                    if t.tok == Tok::End {
                        break;
                    }
                }
                Err(e)
            }
        }
    }

    fn var(&mut self, name: &str) -> Term {
        if name == "_" {
            let v = self.nvars;
            self.nvars += 1;
            return Term::Var(v);
        }
        if let Some(&v) = self.vars.get(name) {
            return Term::Var(v);
        }
        let v = self.nvars;
        self.nvars += 1;
        self.vars.insert(name.to_owned(), v);
        self.var_order.push((name.to_owned(), v));
        Term::Var(v)
    }

    /// Whether the current token can start a term.
    fn starts_term(&self) -> bool {
        match self.peek() {
            None
            | Some(Tok::End)
            | Some(Tok::Close)
            | Some(Tok::CloseList)
            | Some(Tok::CloseCurly)
            | Some(Tok::Comma)
            | Some(Tok::Bar) => false,
            Some(Tok::Name(n)) => {
                // An infix operator here means the prefix operator is used as an atom,
                // unless it is also a plausible term start like `-` `(`.
                let a = Atom::new(n);
                !(self.ops.infix(a).is_some()
                    && self.ops.prefix(a).is_none()
                    && !matches!(self.peek_token(1).map(|t| &t.tok), Some(Tok::OpenCt)))
            }
            _ => true,
        }
    }

    fn parse(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.error_here("term nesting too deep"));
        }
        let result = self.parse_inner(max);
        self.depth -= 1;
        result
    }

    fn parse_inner(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let (mut left, mut left_prec) = self.parse_primary(max)?;
        loop {
            let name = match self.peek() {
                Some(Tok::Name(n)) => Atom::new(n),
                Some(Tok::Comma) => atoms::COMMA,
                Some(Tok::Bar) => atoms::BAR,
                _ => break,
            };
            let Some(def) = self.ops.infix(name) else { break };
            let (left_max, right_max) = def.infix_arg_priorities();
            if def.priority > max || left_prec > left_max {
                break;
            }
            self.pos += 1;
            let (right, _) = self.parse(right_max)?;
            let functor = if name == atoms::BAR { atoms::SEMICOLON } else { name };
            left = Term::compound(functor, vec![left, right]);
            left_prec = def.priority;
        }
        Ok((left, left_prec))
    }

    fn parse_primary(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let Some(token) = self.next() else {
            return Err(self.error_here("unexpected end of input"));
        };
        match token.tok {
            Tok::Int(i) => Ok((Term::Int(i), 0)),
            Tok::Float(f) => Ok((Term::Float(f), 0)),
            Tok::Var(name) => Ok((self.var(&name), 0)),
            Tok::Str(s) => Ok((Term::Atom(Atom::new(&s)), 0)),
            Tok::Open | Tok::OpenCt => {
                let (t, _) = self.parse(1200)?;
                self.expect(Tok::Close, "')'")?;
                Ok((t, 0))
            }
            Tok::OpenList => {
                if self.peek() == Some(&Tok::CloseList) {
                    self.pos += 1;
                    return self.after_name(atoms::NIL, max, false);
                }
                let mut items = vec![self.parse(999)?.0];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    items.push(self.parse(999)?.0);
                }
                let tail = if self.peek() == Some(&Tok::Bar) {
                    self.pos += 1;
                    self.parse(999)?.0
                } else {
                    Term::nil()
                };
                self.expect(Tok::CloseList, "']'")?;
                Ok((Term::list_with_tail(items, tail), 0))
            }
            Tok::OpenCurly => {
                if self.peek() == Some(&Tok::CloseCurly) {
                    self.pos += 1;
                    return self.after_name(atoms::CURLY, max, false);
                }
                let (t, _) = self.parse(1200)?;
                self.expect(Tok::CloseCurly, "'}'")?;
                Ok((Term::compound(atoms::CURLY, vec![t]), 0))
            }
            Tok::Name(n) => self.after_name(Atom::new(&n), max, true),
            Tok::Quoted(n) => self.after_name(Atom::new(&n), max, false),
            Tok::Comma => Err(self.error_here("unexpected ','")),
            Tok::Bar => Err(self.error_here("unexpected '|'")),
            Tok::Close | Tok::CloseList | Tok::CloseCurly => {
                self.pos -= 1;
                Err(self.error_here("unexpected closing bracket"))
            }
            Tok::End => {
                self.pos -= 1;
                Err(self.error_here("unexpected end of clause"))
            }
        }
    }

    fn after_name(&mut self, name: Atom, max: u16, may_be_op: bool) -> Result<(Term, u16), SyntaxError> {
        if self.peek() == Some(&Tok::OpenCt) {
            self.pos += 1;
            let mut args = vec![self.parse(999)?.0];
            while self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                args.push(self.parse(999)?.0);
            }
            self.expect(Tok::Close, "',' or ')'")?;
            return Ok((Term::compound(name, args), 0));
        }
        // Negative numeric literal: '-' directly followed by a number.
        if may_be_op && name == atoms::MINUS {
            if let Some(next) = self.peek_token(0) {
                if !next.layout_before {
                    match next.tok {
                        Tok::Int(i) => {
                            self.pos += 1;
                            return Ok((Term::Int(-i), 0));
                        }
                        Tok::Float(f) => {
                            self.pos += 1;
                            return Ok((Term::Float(-f), 0));
                        }
                        _ => {}
                    }
                }
            }
        }
        if may_be_op {
            if let Some(def) = self.ops.prefix(name) {
                if self.starts_term() {
                    let mut priority = def.priority;
                    let mut arg_max = def.prefix_arg_priority();
                    if priority > max {
                        priority = 999;
                        arg_max = arg_max.min(999);
                    }
                    let save = self.pos;
                    match self.parse(arg_max) {
                        Ok((arg, _)) => {
                            let term = if name == atoms::AT {
                                object_reference(arg)
                            } else {
                                Term::compound(name, vec![arg])
                            };
                            return Ok((term, priority));
                        }
                        Err(e) => {
                            // `- (a)` style ambiguity: fall back to the atom when the
                            // operand cannot be parsed.
                            self.pos = save;
                            if self.ops.infix(name).is_none() {
                                return Err(e);
                            }
                        }
                    }
                }
                let p = if def.priority > max { 0 } else { def.priority };
                return Ok((Term::Atom(name), p));
            }
            if let Some(def) = self.ops.infix(name) {
                let p = if def.priority > max { 0 } else { def.priority };
                return Ok((Term::Atom(name), p));
            }
        }
        Ok((Term::Atom(name), 0))
    }
}

/// `@N` and the reserved `@name` references read as object terms.
fn object_reference(arg: Term) -> Term {
    match &arg {
        Term::Int(n) if *n >= 0 => Term::Obj(ObjId(*n as u64)),
        Term::Atom(a) => match ObjId::from_well_known(a.name()) {
            Some(id) => Term::Obj(id),
            None => Term::compound(atoms::AT, vec![arg]),
        },
        _ => Term::compound(atoms::AT, vec![arg]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::writer::format_plain;

    fn show(src: &str) -> String {
        format_plain(&parse(src).unwrap())
    }

    #[test]
    fn operators_and_precedence() {
        assert_eq!(show("a :- b, c ; d -> e"), "a:-b,c;d->e");
        assert_eq!(show("X is 1 + 2 * 3"), "_0 is 1+2*3");
        assert_eq!(show("1 - 2 - 3"), "1-2-3");
        assert_eq!(show("a - (b - c)"), "a-(b-c)");
        assert_eq!(show("- 1"), "- 1");
        assert_eq!(show("-1"), "-1");
        assert_eq!(show("a- -1"), "a- -1");
        assert_eq!(show("\\+ a"), "\\+a");
    }

    #[test]
    fn class_syntax() {
        let t = parse("event(Box, Event:event) :-> ( send(Event, is_a, area_enter) -> true ; fail )").unwrap();
        assert!(t.is_functor(atoms::SEND_METHOD_OP, 2));
        let t = parse("init(N, T:prolog) :-> \"The constructor\":: T = x, true").unwrap();
        let body = &t.args()[1];
        assert!(body.is_functor(atoms::COMMA, 2));
        assert!(body.args()[0].is_functor(atoms::DOC_OP, 2));
    }

    #[test]
    fn object_references() {
        assert_eq!(parse("@nil").unwrap(), Term::Obj(ObjId::NIL));
        assert_eq!(parse("@prolog").unwrap(), Term::Obj(ObjId::PROLOG));
        assert_eq!(parse("@459337").unwrap(), Term::Obj(ObjId(459337)));
        assert_eq!(show("@foo"), "@foo");
        assert_eq!(show("f(@nil, @12)"), "f(@nil,@12)");
    }

    #[test]
    fn lists_and_curly() {
        assert_eq!(show("[a, b | T]"), "[a,b|_0]");
        assert_eq!(show("[]"), "[]");
        assert_eq!(show("{a, b}"), "{a,b}");
        assert_eq!(show("'[]'"), "[]");
    }

    #[test]
    fn variables_share_by_name() {
        let r = read_term("f(X, Y, X, _, _)", Ops::standard()).unwrap();
        assert_eq!(r.term.nvars, 4);
        assert_eq!(r.var_names.len(), 2);
        assert_eq!(format_plain(&r.term.term), "f(_0,_1,_0,_2,_3)");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = read_all("p(1).\np(2.\n", Ops::standard()).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn operator_atoms_as_arguments() {
        assert_eq!(show("f(-, +)"), "f(-,+)");
        assert_eq!(show("X = (-)"), "_0=(-)");
        assert_eq!(show("[-]"), "[-]");
    }

    #[test]
    fn module_qualification() {
        let t = parse("pce_principal:send_implementation(a, b, c) :- user:(x, y)").unwrap();
        assert!(t.is_functor(atoms::NECK, 2));
        assert!(t.args()[0].is_functor(atoms::COLON, 2));
        assert!(t.args()[1].is_functor(atoms::COLON, 2));
    }
}
