//! Tokenizer shared with the IR parser, plus affine expression and set parsing.

use num_traits::{One, Zero};

use super::{AffineForm, ConvexSet, Space};
use crate::error::{Error, Result};
use crate::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCTS: &[&str] = &[
    "<=", ">=", "==", "!=", "+=", "*=", "->", "&&", "[", "]", "{", "}", "(", ")", ",", ":", ";",
    "+", "-", "*", "/", "<", ">", "=", "?",
];

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = chars[s..i].iter().collect();
            let v = lit.parse::<i64>().map_err(|_| Error::Parse {
                line,
                col: start_col,
                msg: format!("integer literal `{lit}` out of range"),
            })?;
            col += i - s;
            out.push(Token { tok: Tok::Int(v), line, col: start_col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            col += i - s;
            out.push(Token { tok: Tok::Ident(chars[s..i].iter().collect()), line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token { tok: Tok::Punct(p), line, col: start_col });
            }
            None => {
                return Err(Error::Parse { line, col, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Cursor over a token list.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Cursor> {
        Ok(Cursor { toks: tokenize(text)?, pos: 0 })
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn set_pos(&mut self, pos: usize) {
        self.pos = pos.min(self.toks.len() - 1);
    }

    pub fn location(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(Error::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(q) if q == s)
    }

    pub fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, p: &str) -> Result<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", describe(self.peek())))
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", describe(&other))),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    /// Comma-separated identifiers inside brackets.
    pub fn name_list(&mut self) -> Result<Vec<String>> {
        self.expect("[")?;
        let mut names = Vec::new();
        if !self.is_punct("]") {
            loop {
                names.push(self.ident()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("]")?;
        Ok(names)
    }
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Affine expression over `space`; products need a constant side.
pub fn parse_affine(c: &mut Cursor, space: &Space) -> Result<AffineForm> {
    let mut acc = parse_affine_term(c, space)?;
    loop {
        if c.eat("+") {
            acc = acc.add(&parse_affine_term(c, space)?);
        } else if c.is_punct("-") {
            c.next();
            acc = acc.sub(&parse_affine_term(c, space)?);
        } else {
            return Ok(acc);
        }
    }
}

fn parse_affine_term(c: &mut Cursor, space: &Space) -> Result<AffineForm> {
    let mut acc = parse_affine_unary(c, space)?;
    loop {
        if c.eat("*") {
            let rhs = parse_affine_unary(c, space)?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant_term())
            } else if rhs.is_constant() {
                acc.scale(rhs.constant_term())
            } else {
                return c.error("non-affine index: product of two variables");
            };
        } else if c.is_punct("/") {
            c.next();
            let rhs = parse_affine_unary(c, space)?;
            if !rhs.is_constant() || rhs.constant_term().is_zero() {
                return c.error("non-affine index: division by a non-constant");
            }
            acc = acc.scale(&(Rat::one() / rhs.constant_term()));
        } else {
            return Ok(acc);
        }
    }
}

fn parse_affine_unary(c: &mut Cursor, space: &Space) -> Result<AffineForm> {
    if c.eat("-") {
        return Ok(parse_affine_unary(c, space)?.neg());
    }
    match c.peek().clone() {
        Tok::Int(v) => {
            c.next();
            Ok(AffineForm::constant(space, Rat::from_integer(v.into())))
        }
        Tok::Ident(name) => {
            c.next();
            match space.column(&name) {
                Some(col) if col < space.n_vars() => Ok(AffineForm::var(space, col)),
                Some(col) => Ok(AffineForm::param(space, col - space.n_vars())),
                None => c.error(format!("unknown identifier `{name}`")),
            }
        }
        Tok::Punct("(") => {
            c.next();
            let e = parse_affine(c, space)?;
            c.expect(")")?;
            Ok(e)
        }
        other => c.error(format!("expected affine expression, found {}", describe(&other))),
    }
}

fn comparison(c: &mut Cursor) -> Option<&'static str> {
    for op in ["<=", ">=", "==", "<", ">", "="] {
        if c.eat(op) {
            return Some(op);
        }
    }
    None
}

/// Constraint conjunction such as `0 <= i < N and j = i`.
pub fn parse_constraints(c: &mut Cursor, space: &Space) -> Result<(Vec<AffineForm>, Vec<AffineForm>)> {
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    loop {
        let mut lhs = parse_affine(c, space)?;
        let mut any = false;
        while let Some(op) = comparison(c) {
            any = true;
            let rhs = parse_affine(c, space)?;
            let one = Rat::one();
            match op {
                "<=" => ineqs.push(rhs.sub(&lhs)),
                ">=" => ineqs.push(lhs.sub(&rhs)),
                "<" => ineqs.push(rhs.sub(&lhs).add_constant(&-one)),
                ">" => ineqs.push(lhs.sub(&rhs).add_constant(&-one)),
                _ => eqs.push(lhs.sub(&rhs)),
            }
            lhs = rhs;
        }
        if !any {
            return c.error("expected a comparison");
        }
        if !(c.eat("&&") || (c.is_ident("and") && {
            c.next();
            true
        })) {
            return Ok((ineqs, eqs));
        }
    }
}

/// `{ [vars] : constraints }` with parameters from `params`.
pub fn parse_set_body(c: &mut Cursor, params: &[String]) -> Result<ConvexSet> {
    c.expect("{")?;
    let vars = c.name_list()?;
    let space = Space::new(&vars, params)?;
    let (ineqs, eqs) = if c.eat(":") && !c.is_punct("}") {
        parse_constraints(c, &space)?
    } else {
        (Vec::new(), Vec::new())
    };
    c.expect("}")?;
    Ok(ConvexSet::from_constraints(space, &ineqs, &eqs)?.irredundant())
}

/// Full set text with an optional `[params]` prefix; `extra_params` are
/// appended after the prefix's own names.
pub fn parse_set(text: &str, extra_params: &[String]) -> Result<ConvexSet> {
    let mut c = Cursor::new(text)?;
    let mut params = if c.is_punct("[") { c.name_list()? } else { Vec::new() };
    for p in extra_params {
        if !params.contains(p) {
            params.push(p.clone());
        }
    }
    let set = parse_set_body(&mut c, &params)?;
    if !c.at_eof() {
        return c.error(format!("trailing input {}", describe(c.peek())));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_with_comments() {
        let t = tokenize("B[i] += A[j] // note\n : {}").unwrap();
        let kinds: Vec<Tok> = t.into_iter().map(|t| t.tok).collect();
        assert_eq!(kinds[4], Tok::Punct("+="));
        assert_eq!(kinds.last(), Some(&Tok::Eof));
    }

    #[test]
    fn chained_constraints() {
        let s = parse_set("[N] { [i,j] : 0 <= i < N and 0 <= j <= i }", &[]).unwrap();
        assert_eq!(s.ineq_rows().len(), 3);
        assert!(s.eq_rows().is_empty());
    }

    #[test]
    fn nonaffine_rejected() {
        let err = parse_set("{ [i,j] : i*j >= 0 }", &[]).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse_set("{ [i] : k >= 0 }", &[]).unwrap_err();
        assert!(err.to_string().contains("unknown identifier"));
    }
}
