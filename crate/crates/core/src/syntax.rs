//! Textual term syntax: an operator-precedence reader and a matching printer.
//!
//! The syntax is Prolog-like. Quoted atoms are never treated as operators,
//! which is what the printer relies on to keep `print ∘ read` the identity.

use std::collections::HashMap;
use std::fmt;

use crate::term::{Symbol, Term, Var, VarSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Xfx,
    Xfy,
    Yfx,
    Fy,
    Fx,
}

#[derive(Debug, Clone, Copy)]
pub struct Op {
    pub priority: u16,
    pub kind: OpKind,
}

const fn op(priority: u16, kind: OpKind) -> Op {
    Op { priority, kind }
}

pub fn infix_op(name: &str) -> Option<Op> {
    use OpKind::*;
    Some(match name {
        ":-" | "@" => op(1200, Xfx),
        "pragma" => op(1195, Xfx),
        "==>" | "<=>" | "-->" | "<->" => op(1190, Xfx),
        "\\" => op(1100, Xfx),
        "|" | ";" => op(1100, Xfy),
        "&" => op(1095, Xfx),
        "->" => op(1050, Xfy),
        "/-" => op(1050, Xfx),
        "," => op(1000, Xfy),
        "=" | "\\=" | "<" | ">" | "=<" | ">=" | "==" | "\\==" | "is" => op(700, Xfx),
        "+" | "-" => op(500, Yfx),
        "*" | "/" => op(400, Yfx),
        "^" => op(200, Xfy),
        "#" => op(150, Xfx),
        _ => return None,
    })
}

pub fn prefix_op(name: &str) -> Option<Op> {
    use OpKind::*;
    Some(match name {
        ":-" => op(1200, Fx),
        "ruleLR" => op(1195, Fx),
        "-\\" => op(1050, Fy),
        "\\+" | "not" => op(900, Fy),
        "-" => op(200, Fy),
        _ => return None,
    })
}

fn is_symbol_char(c: char) -> bool {
    "+-*/\\^<>=~:.?@#&$".contains(c)
}

fn is_alnum(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Quoted(String),
    Var(String),
    Int(i64),
    Punct(char),
    End,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    layout_before: bool,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
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

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
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

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    /// Skips whitespace and comments; reports whether anything was skipped.
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
                            None => return Err(self.err("unterminated block comment")),
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(self.pos > start)
    }

    fn tokens(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let layout_before = self.skip_layout()? || out.is_empty();
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    layout_before,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = if c.is_ascii_digit() {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| d.is_ascii_digit()) {
                    s.push(d);
                    self.bump();
                }
                Tok::Int(s.parse().map_err(|_| self.err("integer out of range"))?)
            } else if c == '_' || c.is_uppercase() {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| is_alnum(*d)) {
                    s.push(d);
                    self.bump();
                }
                Tok::Var(s)
            } else if c.is_alphabetic() {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| is_alnum(*d)) {
                    s.push(d);
                    self.bump();
                }
                Tok::Name(s)
            } else if c == '\'' {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err("unterminated quoted atom")),
                        Some('\'') if self.peek() == Some('\'') => {
                            self.bump();
                            s.push('\'');
                        }
                        Some('\'') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('\\') => s.push('\\'),
                            Some('\'') => s.push('\''),
                            _ => return Err(self.err("bad escape in quoted atom")),
                        },
                        Some(d) => s.push(d),
                    }
                }
                Tok::Quoted(s)
            } else if c == '.' && self.peek_at(1).is_none_or(|d| d.is_whitespace() || d == '%') {
                self.bump();
                Tok::End
            } else if is_symbol_char(c) {
                let mut s = String::new();
                while let Some(d) = self.peek().filter(|d| is_symbol_char(*d)) {
                    s.push(d);
                    self.bump();
                }
                Tok::Name(s)
            } else if c == '!' || c == ';' {
                self.bump();
                Tok::Name(c.to_string())
            } else if "()[]{},|".contains(c) {
                self.bump();
                Tok::Punct(c)
            } else {
                return Err(self.err(format!("unexpected character {c:?}")));
            };
            out.push(Token {
                tok,
                layout_before,
                line,
                col,
            });
        }
    }
}

/// Reader state for one source text; variable names are scoped per clause.
pub struct Reader<'s> {
    toks: Vec<Token>,
    pos: usize,
    vars: HashMap<String, Var>,
    source: &'s mut VarSource,
}

impl<'s> Reader<'s> {
    pub fn new(text: &str, source: &'s mut VarSource) -> Result<Self, SyntaxError> {
        Ok(Reader {
            toks: Lexer::new(text).tokens()?,
            pos: 0,
            vars: HashMap::new(),
            source,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek2(&self) -> &Token {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, tok: &Token, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: tok.line,
            col: tok.col,
            message: message.into(),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().tok, Tok::Eof)
    }

    /// Position of the next token, for diagnostics.
    pub fn location(&self) -> (usize, usize) {
        (self.peek().line, self.peek().col)
    }

    /// Reads one clause terminated by `.`; `None` at end of input.
    pub fn read_clause(&mut self) -> Result<Option<Term>, SyntaxError> {
        if self.at_eof() {
            return Ok(None);
        }
        self.vars.clear();
        let (t, _) = self.parse(1200)?;
        let tok = self.next();
        if tok.tok != Tok::End {
            return Err(self.err_at(&tok, "operator expected or missing '.'"));
        }
        Ok(Some(t))
    }

    /// Reads a single term spanning the whole input (a trailing `.` is optional).
    pub fn read_term(&mut self) -> Result<Term, SyntaxError> {
        self.vars.clear();
        let (t, _) = self.parse(1200)?;
        if self.peek().tok == Tok::End {
            self.next();
        }
        let tok = self.peek().clone();
        if tok.tok != Tok::Eof {
            return Err(self.err_at(&tok, "unexpected trailing input"));
        }
        Ok(t)
    }

    fn make_var(&mut self, name: &str) -> Term {
        if name == "_" {
            return Term::Var(self.source.fresh("_"));
        }
        if let Some(v) = self.vars.get(name) {
            return Term::Var(v.clone());
        }
        let v = self.source.fresh(name);
        self.vars.insert(name.to_string(), v.clone());
        Term::Var(v)
    }

    /// True if the next token can begin a term.
    fn starts_term(&self) -> bool {
        match &self.peek().tok {
            Tok::Name(n) => infix_op(n).is_none() || prefix_op(n).is_some(),
            Tok::Quoted(_) | Tok::Var(_) | Tok::Int(_) => true,
            Tok::Punct(c) => "([{".contains(*c),
            Tok::End | Tok::Eof => false,
        }
    }

    fn parse(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let (mut left, mut left_prec) = self.parse_primary(max)?;
        loop {
            let name = match &self.peek().tok {
                Tok::Name(n) => n.clone(),
                Tok::Punct(',') => ",".to_string(),
                Tok::Punct('|') => "|".to_string(),
                _ => break,
            };
            let Some(op) = infix_op(&name) else { break };
            let (lmax, rmax) = match op.kind {
                OpKind::Xfx => (op.priority - 1, op.priority - 1),
                OpKind::Xfy => (op.priority - 1, op.priority),
                OpKind::Yfx => (op.priority, op.priority - 1),
                _ => unreachable!(),
            };
            if op.priority > max || left_prec > lmax {
                break;
            }
            self.next();
            let (right, _) = self.parse(rmax)?;
            left = Term::Compound(Symbol::new(&name), vec![left, right]);
            left_prec = op.priority;
        }
        Ok((left, left_prec))
    }

    fn parse_arglist(&mut self, close: char) -> Result<Vec<Term>, SyntaxError> {
        let mut args = vec![self.parse(999)?.0];
        loop {
            let tok = self.next();
            match tok.tok {
                Tok::Punct(',') => args.push(self.parse(999)?.0),
                Tok::Punct(c) if c == close => return Ok(args),
                _ => return Err(self.err_at(&tok, format!("expected ',' or '{close}'"))),
            }
        }
    }

    fn parse_primary(&mut self, max: u16) -> Result<(Term, u16), SyntaxError> {
        let tok = self.next();
        match tok.tok {
            Tok::Int(v) => Ok((Term::Int(v), 0)),
            Tok::Var(ref name) => Ok((self.make_var(name), 0)),
            Tok::Quoted(name) => {
                if self.peek().tok == Tok::Punct('(') && !self.peek().layout_before {
                    self.next();
                    let args = self.parse_arglist(')')?;
                    Ok((Term::compound(&name, args), 0))
                } else {
                    Ok((Term::atom(&name), 0))
                }
            }
            Tok::Name(name) => {
                let next = self.peek().clone();
                if next.tok == Tok::Punct('(') && !next.layout_before {
                    self.next();
                    let args = self.parse_arglist(')')?;
                    return Ok((Term::compound(&name, args), 0));
                }
                if name == "-" && !next.layout_before {
                    if let Tok::Int(v) = next.tok {
                        self.next();
                        return Ok((Term::Int(-v), 0));
                    }
                }
                if let Some(op) = prefix_op(&name) {
                    // A prefix operator followed by an infix operator or a
                    // closing token is a plain atom.
                    let is_atom = !self.starts_term()
                        || matches!(&self.peek().tok, Tok::Name(n) if infix_op(n).is_some() && prefix_op(n).is_none());
                    if !is_atom {
                        let mut pri = op.priority;
                        let mut amax = if op.kind == OpKind::Fy { pri } else { pri - 1 };
                        if pri > max {
                            pri = 999;
                            amax = 999;
                        }
                        let (arg, _) = self.parse(amax)?;
                        return Ok((Term::compound(&name, vec![arg]), pri));
                    }
                }
                Ok((Term::atom(&name), 0))
            }
            Tok::Punct('(') => {
                let (t, _) = self.parse(1200)?;
                self.expect(')')?;
                Ok((t, 0))
            }
            Tok::Punct('[') => {
                if self.peek().tok == Tok::Punct(']') {
                    self.next();
                    return Ok((Term::nil(), 0));
                }
                let mut items = vec![self.parse(999)?.0];
                loop {
                    let t = self.next();
                    match t.tok {
                        Tok::Punct(',') => items.push(self.parse(999)?.0),
                        Tok::Punct('|') => {
                            let tail = self.parse(999)?.0;
                            self.expect(']')?;
                            return Ok((Term::list_with_tail(items, tail), 0));
                        }
                        Tok::Punct(']') => return Ok((Term::list(items), 0)),
                        _ => return Err(self.err_at(&t, "expected ',', '|' or ']' in list")),
                    }
                }
            }
            Tok::Punct('{') => {
                if self.peek().tok == Tok::Punct('}') {
                    self.next();
                    return Ok((Term::atom("{}"), 0));
                }
                let (t, _) = self.parse(1200)?;
                self.expect('}')?;
                Ok((Term::compound("{}", vec![t]), 0))
            }
            Tok::Punct(c) => Err(self.err_at(&tok, format!("unexpected '{c}'"))),
            Tok::End => Err(self.err_at(&tok, "unexpected end of clause")),
            Tok::Eof => Err(self.err_at(&tok, "unexpected end of input")),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SyntaxError> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(())
        } else {
            Err(self.err_at(&t, format!("expected '{c}'")))
        }
    }

    #[allow(dead_code)]
    fn lookahead_is_end(&self) -> bool {
        matches!(self.peek2().tok, Tok::End)
    }
}

/// Parses a single term, using fresh serials from `source`.
pub fn parse_term_with(text: &str, source: &mut VarSource) -> Result<Term, SyntaxError> {
    Reader::new(text, source)?.read_term()
}

/// Parses a single term with a throwaway variable source.
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    parse_term_with(text, &mut VarSource::default())
}

/// Parses all `.`-terminated clauses of `text`.
pub fn parse_clauses(text: &str, source: &mut VarSource) -> Result<Vec<Term>, SyntaxError> {
    let mut reader = Reader::new(text, source)?;
    let mut out = Vec::new();
    while let Some(t) = reader.read_clause()? {
        out.push(t);
    }
    Ok(out)
}

fn atom_needs_quotes(name: &str) -> bool {
    if matches!(name, "[]" | "{}" | "!" | ";") {
        return false;
    }
    let mut chars = name.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_lowercase() => !name.chars().all(is_alnum),
        Some(_) if name == "." => true,
        Some(_) => !(name.chars().all(is_symbol_char) && !name.starts_with("/*")),
    }
}

fn quote_atom(name: &str) -> String {
    let mut s = String::from("'");
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

/// An atom as it appears in argument position.
pub fn format_atom(name: &str) -> String {
    if atom_needs_quotes(name) {
        quote_atom(name)
    } else {
        name.to_string()
    }
}

/// An atom as the operand of an operator: operators get quoted.
fn format_operand_atom(name: &str) -> String {
    if !atom_needs_quotes(name) && (infix_op(name).is_some() || prefix_op(name).is_some()) {
        quote_atom(name)
    } else {
        format_atom(name)
    }
}

fn format_var(v: &Var) -> String {
    if v.is_anonymous() {
        format!("_G{}", v.serial)
    } else {
        v.name.to_string()
    }
}

/// Renders `t` so that the result reads back at priority `max`.
pub fn format_term(t: &Term, max: u16) -> String {
    match t {
        Term::Var(v) => format_var(v),
        Term::Int(i) => i.to_string(),
        Term::Const(s) => format_atom(s.as_str()),
        Term::Compound(f, args) => {
            let name = f.as_str();
            if name == "." && args.len() == 2 {
                return format_list(t);
            }
            if name == "{}" && args.len() == 1 {
                return format!("{{{}}}", format_term(&args[0], 1200));
            }
            if args.len() == 2 && (!atom_needs_quotes(name) || name == ",") {
                if let Some(op) = infix_op(name) {
                    return format_infix(name, op, &args[0], &args[1], max);
                }
            }
            let inner: Vec<String> = args.iter().map(|a| format_term(a, 999)).collect();
            format!("{}({})", format_atom(name), inner.join(","))
        }
    }
}

fn format_operand(t: &Term, max: u16) -> String {
    match t {
        Term::Const(s) => format_operand_atom(s.as_str()),
        _ => format_term(t, max),
    }
}

fn format_infix(name: &str, op: Op, l: &Term, r: &Term, max: u16) -> String {
    let (lmax, rmax) = match op.kind {
        OpKind::Xfx => (op.priority - 1, op.priority - 1),
        OpKind::Xfy => (op.priority - 1, op.priority),
        _ => (op.priority, op.priority - 1),
    };
    let ls = format_operand(l, lmax);
    let rs = format_operand(r, rmax);
    let body = if name == "," {
        format!("{ls},{rs}")
    } else if name.chars().all(is_alnum) || matches!(name, "|" | ";") {
        format!("{ls} {name} {rs}")
    } else {
        let lsp = if ls.ends_with(is_symbol_char) { " " } else { "" };
        let rsp = if rs.starts_with(is_symbol_char) { " " } else { "" };
        format!("{ls}{lsp}{name}{rsp}{rs}")
    };
    if op.priority > max {
        format!("({body})")
    } else {
        body
    }
}

fn format_list(t: &Term) -> String {
    let mut items = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Compound(f, args) if f.as_str() == "." && args.len() == 2 => {
                items.push(format_term(&args[0], 999));
                cur = &args[1];
            }
            Term::Const(s) if s.as_str() == "[]" => return format!("[{}]", items.join(",")),
            other => return format!("[{}|{}]", items.join(","), format_term(other, 999)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_term(self, 1200))
    }
}

/// Canonical `functor(arg,...)` form with the top-level functor never
/// written as an operator; used by store dumps.
pub fn format_constraint(t: &Term) -> String {
    match t {
        Term::Compound(f, args) => {
            let inner: Vec<String> = args.iter().map(|a| format_term(a, 999)).collect();
            format!("{}({})", format_atom(f.as_str()), inner.join(","))
        }
        other => format_term(other, 999),
    }
}
