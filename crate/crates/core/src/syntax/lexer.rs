use super::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Name(String),
    /// A name written in quotes; never treated as an operator in functional
    /// position checks, but otherwise identical to `Name`.
    Quoted(String),
    Var(String),
    Int(i64),
    Float(f64),
    Str(String),
    Open,
    /// `(` immediately following a name, i.e. functional notation.
    OpenCt,
    Close,
    OpenList,
    CloseList,
    OpenCurly,
    CloseCurly,
    Comma,
    Bar,
    End,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Whitespace or a comment precedes this token.
    pub layout_before: bool,
}

pub fn is_symbol_char(c: char) -> bool {
    "+-*/\\^<>=~:.?@#&$".contains(c)
}

pub fn is_alnum(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    /// Skips layout; returns whether any was skipped.
    fn skip_layout(&mut self) -> Result<bool, SyntaxError> {
        let start = self.pos;
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some('/') if self.peek_at(1) == Some('*') => {
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => return Err(self.error("unterminated block comment")),
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(self.pos > start)
    }

    pub fn tokenize(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let layout_before = self.skip_layout()? || out.is_empty();
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else { break };
            let tok = self.next_tok(c, &out, layout_before)?;
            out.push(Token {
                tok,
                line,
                col,
                layout_before,
            });
        }
        Ok(out)
    }

    fn next_tok(&mut self, c: char, prev: &[Token], layout: bool) -> Result<Tok, SyntaxError> {
        let after_name = !layout && matches!(prev.last().map(|t| &t.tok), Some(Tok::Name(_)) | Some(Tok::Quoted(_)));
        Ok(match c {
            '(' => {
                self.bump();
                if after_name {
                    Tok::OpenCt
                } else {
                    Tok::Open
                }
            }
            ')' => {
                self.bump();
                Tok::Close
            }
            '[' => {
                self.bump();
                Tok::OpenList
            }
            ']' => {
                self.bump();
                Tok::CloseList
            }
            '{' => {
                self.bump();
                Tok::OpenCurly
            }
            '}' => {
                self.bump();
                Tok::CloseCurly
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '|' if self.peek_at(1) != Some('|') => {
                self.bump();
                Tok::Bar
            }
            '!' | ';' => {
                self.bump();
                Tok::Name(c.to_string())
            }
            '\'' => {
                self.bump();
                Tok::Quoted(self.quoted('\'')?)
            }
            '"' => {
                self.bump();
                Tok::Str(self.quoted('"')?)
            }
            '0'..='9' => self.number()?,
            '_' => Tok::Var(self.word()),
            c if c.is_uppercase() => Tok::Var(self.word()),
            c if c.is_alphabetic() => Tok::Name(self.word()),
            '.' if self.peek_at(1).is_none_or(|n| n.is_whitespace() || n == '%') => {
                self.bump();
                Tok::End
            }
            c if is_symbol_char(c) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if !is_symbol_char(c) {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Tok::Name(s)
            }
            '|' => {
                self.bump();
                self.bump();
                Tok::Name("||".into())
            }
            other => return Err(self.error(format!("unexpected character {other:?}"))),
        })
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !is_alnum(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn number(&mut self) -> Result<Tok, SyntaxError> {
        if self.peek() == Some('0') {
            match self.peek_at(1) {
                Some('\'') => {
                    self.bump();
                    self.bump();
                    let c = match self.bump() {
                        Some('\\') => self.escape()?,
                        Some('\'') if self.peek() == Some('\'') => {
                            self.bump();
                            '\''
                        }
                        Some(c) => c,
                        None => return Err(self.error("unterminated character code")),
                    };
                    return Ok(Tok::Int(c as i64));
                }
                Some(r @ ('x' | 'o' | 'b')) => {
                    let radix = match r {
                        'x' => 16,
                        'o' => 8,
                        _ => 2,
                    };
                    if self.peek_at(2).is_some_and(|d| d.is_digit(radix)) {
                        self.bump();
                        self.bump();
                        let mut s = String::new();
                        while let Some(d) = self.peek().filter(|d| d.is_digit(radix)) {
                            s.push(d);
                            self.bump();
                        }
                        return i64::from_str_radix(&s, radix)
                            .map(Tok::Int)
                            .map_err(|_| self.error("integer literal out of range"));
                    }
                }
                _ => {}
            }
        }
        let mut s = String::new();
        while let Some(d) = self.peek().filter(char::is_ascii_digit) {
            s.push(d);
            self.bump();
        }
        let mut is_float = false;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
            is_float = true;
            s.push('.');
            self.bump();
            while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                s.push(d);
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let signed = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if signed { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                is_float = true;
                s.push('e');
                self.bump();
                if signed {
                    s.push(self.bump().unwrap());
                }
                while let Some(d) = self.peek().filter(char::is_ascii_digit) {
                    s.push(d);
                    self.bump();
                }
            }
        }
        if is_float {
            s.parse::<f64>()
                .map(Tok::Float)
                .map_err(|_| self.error("malformed float"))
        } else {
            s.parse::<i64>()
                .map(Tok::Int)
                .map_err(|_| self.error("integer literal out of range"))
        }
    }

    fn escape(&mut self) -> Result<char, SyntaxError> {
        Ok(match self.bump() {
            Some('n') => '\n',
            Some('t') => '\t',
            Some('r') => '\r',
            Some('a') => '\x07',
            Some('b') => '\x08',
            Some('f') => '\x0c',
            Some('v') => '\x0b',
            Some('0') => '\0',
            Some('e') => '\x1b',
            Some('s') => ' ',
            Some(c @ ('\\' | '\'' | '"' | '`')) => c,
            Some(c) => return Err(self.error(format!("unknown escape \\{c}"))),
            None => return Err(self.error("unterminated escape")),
        })
    }

    fn quoted(&mut self, quote: char) -> Result<String, SyntaxError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                Some(c) if c == quote => {
                    if self.peek() == Some(quote) {
                        self.bump();
                        s.push(quote);
                    } else {
                        return Ok(s);
                    }
                }
                Some('\\') => {
                    if self.peek() == Some('\n') {
                        self.bump();
                        continue;
                    }
                    s.push(self.escape()?);
                }
                Some(c) => s.push(c),
                None => return Err(self.error("unterminated quoted text")),
            }
        }
    }
}
