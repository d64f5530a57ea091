//! Text format for PDE systems and expressions.
//!
//! ```text
//! dim 1;
//! param nu = 0.1;
//! eq: dt(v) = nu*D(v;x,x) - v*D(v;x);
//! init: v = sin(x);
//! ```
//!
//! Identifiers resolve as follows: declared (or `dt`-introduced) unknowns, then
//! the spatial variables `x` / `x1..xn`, then the clock `s` in time-dependent
//! systems; anything else is a named parameter.

mod lexer;
mod system;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{normalize, Expr, ExprError, Func, MultiIndex, Rational};
use lexer::{tokenize, Pos, Tok, Token};

pub use system::PdeSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{message}")]
    Semantic { symbol: String, message: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl ParseError {
    fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Syntax { line: pos.line, col: pos.col, message: message.into() }
    }

    fn semantic(symbol: &str, message: impl Into<String>) -> Self {
        ParseError::Semantic { symbol: symbol.to_string(), message: message.into() }
    }
}

/// Unresolved expression syntax.
#[derive(Clone, Debug)]
enum Raw {
    Num(Rational),
    Ident(String, Pos),
    Call(String, Vec<Raw>, Pos),
    Deriv(Box<Raw>, Vec<(String, Pos)>),
    Add(Box<Raw>, Box<Raw>),
    Sub(Box<Raw>, Box<Raw>),
    Mul(Box<Raw>, Box<Raw>),
    Div(Box<Raw>, Box<Raw>),
    Pow(Box<Raw>, Box<Raw>),
    Neg(Box<Raw>),
}

/// Name-resolution context for expression text.
#[derive(Clone, Debug, Default)]
pub struct Symbols {
    pub unknowns: Vec<Arc<str>>,
    /// Spatial dimension; `None` accepts any `x` / `xK`.
    pub dim: Option<usize>,
    /// Whether `s` denotes the clock symbol.
    pub time: bool,
}

impl Symbols {
    pub fn with_unknowns(names: &[&str]) -> Self {
        Symbols { unknowns: names.iter().map(|n| Arc::from(*n)).collect(), dim: None, time: false }
    }
}

/// Parses and normalizes a standalone expression.
pub fn parse_expression(text: &str, symbols: &Symbols) -> Result<Expr, ParseError> {
    let mut p = Parser::new(tokenize(text)?);
    let raw = p.expr()?;
    p.expect(&Tok::Eof, "end of input")?;
    let e = resolve(&raw, symbols)?;
    Ok(normalize(&e)?)
}

/// Parses a full system description and validates it.
pub fn parse_system(text: &str) -> Result<PdeSystem, ParseError> {
    let mut p = Parser::new(tokenize(text)?);
    let mut dim: Option<usize> = None;
    let mut declared: Option<Vec<(String, Pos)>> = None;
    let mut params: Vec<(String, Raw, Pos)> = Vec::new();
    let mut time_dependent = false;
    let mut eqs: Vec<(String, Raw, Pos)> = Vec::new();
    let mut inits: Vec<(String, Raw, Pos)> = Vec::new();

    while p.peek() != &Tok::Eof {
        let (word, pos) = p.ident("a declaration, `eq:` or `init:`")?;
        match word.as_str() {
            "dim" => {
                let n = p.integer()?;
                p.expect(&Tok::Semi, "`;`")?;
                if dim.replace(n).is_some() {
                    return Err(ParseError::syntax(pos, "duplicate `dim` declaration"));
                }
            }
            "unknowns" => {
                let mut names = vec![p.ident("an unknown name")?];
                while p.eat(&Tok::Comma) {
                    names.push(p.ident("an unknown name")?);
                }
                p.expect(&Tok::Semi, "`;`")?;
                if declared.replace(names).is_some() {
                    return Err(ParseError::syntax(pos, "duplicate `unknowns` declaration"));
                }
            }
            "param" => {
                let (name, npos) = p.ident("a parameter name")?;
                p.expect(&Tok::Eq, "`=`")?;
                let value = p.expr()?;
                p.expect(&Tok::Semi, "`;`")?;
                params.push((name, value, npos));
            }
            "time_dependent" => {
                p.expect(&Tok::Semi, "`;`")?;
                time_dependent = true;
            }
            "eq" => {
                p.expect(&Tok::Colon, "`:` after `eq`")?;
                let (dt, dpos) = p.ident("`dt`")?;
                if dt != "dt" {
                    return Err(ParseError::syntax(dpos, format!("expected `dt(..)`, found `{dt}`")));
                }
                p.expect(&Tok::LParen, "`(`")?;
                let (name, npos) = p.ident("an unknown name")?;
                p.expect(&Tok::RParen, "`)`")?;
                p.expect(&Tok::Eq, "`=`")?;
                let rhs = p.expr()?;
                p.expect(&Tok::Semi, "`;`")?;
                eqs.push((name, rhs, npos));
            }
            "init" => {
                p.expect(&Tok::Colon, "`:` after `init`")?;
                let (name, npos) = p.ident("an unknown name")?;
                p.expect(&Tok::Eq, "`=`")?;
                let rhs = p.expr()?;
                p.expect(&Tok::Semi, "`;`")?;
                inits.push((name, rhs, npos));
            }
            other => return Err(ParseError::syntax(pos, format!("unexpected `{other}`"))),
        }
    }

    if eqs.is_empty() {
        return Err(ParseError::syntax(p.pos(), "at least one `eq:` is required"));
    }

    let unknowns: Vec<Arc<str>> = match &declared {
        Some(names) => names.iter().map(|(n, _)| Arc::from(n.as_str())).collect(),
        None => eqs.iter().map(|(n, _, _)| Arc::from(n.as_str())).collect(),
    };
    for (i, u) in unknowns.iter().enumerate() {
        if unknowns[..i].contains(u) {
            return Err(ParseError::semantic(u, format!("unknown {u} declared twice")));
        }
        if is_reserved(u) {
            return Err(ParseError::semantic(u, format!("`{u}` is reserved and cannot name an unknown")));
        }
    }

    let symbols = Symbols { unknowns: unknowns.clone(), dim, time: time_dependent };

    let mut rhs: Vec<Option<Expr>> = vec![None; unknowns.len()];
    for (name, raw, _) in &eqs {
        let idx = unknowns
            .iter()
            .position(|u| u.as_ref() == name)
            .ok_or_else(|| ParseError::semantic(name, format!("unknown {name} not declared")))?;
        if rhs[idx].is_some() {
            return Err(ParseError::semantic(name, format!("duplicate equation for {name}")));
        }
        rhs[idx] = Some(normalize(&resolve(raw, &symbols)?)?);
    }
    let mut init: Vec<Option<Expr>> = vec![None; unknowns.len()];
    for (name, raw, _) in &inits {
        let idx = unknowns
            .iter()
            .position(|u| u.as_ref() == name)
            .ok_or_else(|| ParseError::semantic(name, format!("unknown {name} not declared")))?;
        if init[idx].is_some() {
            return Err(ParseError::semantic(name, format!("duplicate initial data for {name}")));
        }
        let e = normalize(&resolve(raw, &symbols)?)?;
        if let Some(u) = e.unknown_names().first() {
            return Err(ParseError::semantic(u, format!("initial data for {name} references unknown {u}")));
        }
        if e.mentions_time() {
            return Err(ParseError::semantic("s", format!("initial data for {name} references the time symbol s")));
        }
        init[idx] = Some(e);
    }

    let mut rhs_done = Vec::with_capacity(unknowns.len());
    let mut init_done = Vec::with_capacity(unknowns.len());
    for (i, u) in unknowns.iter().enumerate() {
        rhs_done.push(rhs[i].take().ok_or_else(|| ParseError::semantic(u, format!("no equation for unknown {u}")))?);
        init_done.push(init[i].take().ok_or_else(|| ParseError::semantic(u, format!("no initial data for unknown {u}")))?);
    }

    let mut param_values = BTreeMap::new();
    for (name, raw, _) in &params {
        if is_reserved(name) || unknowns.iter().any(|u| u.as_ref() == name) {
            return Err(ParseError::semantic(name, format!("`{name}` cannot be used as a parameter name")));
        }
        let value = normalize(&resolve(raw, &Symbols::default())?)?;
        let c = match value {
            Expr::Num(c) => c,
            _ => return Err(ParseError::semantic(name, format!("parameter {name} must have a constant value"))),
        };
        if param_values.insert(name.clone(), c).is_some() {
            return Err(ParseError::semantic(name, format!("parameter {name} declared twice")));
        }
    }

    let dim = match dim {
        Some(d) => d,
        None => rhs_done
            .iter()
            .chain(init_done.iter())
            .filter_map(|e| e.max_var_index())
            .max()
            .map_or(0, |j| j + 1)
            .max(usize::from(uses_single_x(&eqs, &inits))),
    };

    PdeSystem::new(dim, unknowns, rhs_done, init_done, param_values, time_dependent)
}

fn uses_single_x(eqs: &[(String, Raw, Pos)], inits: &[(String, Raw, Pos)]) -> bool {
    fn walk(r: &Raw) -> bool {
        match r {
            Raw::Ident(n, _) => n == "x",
            Raw::Num(_) => false,
            Raw::Call(_, args, _) => args.iter().any(walk),
            Raw::Deriv(inner, vars) => walk(inner) || vars.iter().any(|(v, _)| v == "x"),
            Raw::Add(a, b) | Raw::Sub(a, b) | Raw::Mul(a, b) | Raw::Div(a, b) | Raw::Pow(a, b) => walk(a) || walk(b),
            Raw::Neg(a) => walk(a),
        }
    }
    eqs.iter().chain(inits.iter()).any(|(_, r, _)| walk(r))
}

fn is_reserved(name: &str) -> bool {
    matches!(
        name,
        "s" | "x" | "D" | "dt" | "dim" | "param" | "unknowns" | "eq" | "init" | "time_dependent" | "leray_pressure"
    ) || Func::from_name(name).is_some()
        || spatial_index(name).is_some()
}

/// `x` -> 0, `xK` -> K-1.
fn spatial_index(name: &str) -> Option<usize> {
    if name == "x" {
        return Some(0);
    }
    let digits = name.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse::<usize>().ok().map(|k| k - 1)
}

fn resolve_var(name: &str, pos: Pos, symbols: &Symbols) -> Result<usize, ParseError> {
    let j = spatial_index(name).ok_or_else(|| ParseError::syntax(pos, format!("`{name}` is not a spatial variable")))?;
    if let Some(dim) = symbols.dim {
        let ok = if name == "x" { dim == 1 } else { j < dim };
        if !ok {
            return Err(ParseError::semantic(
                name,
                format!("dimension mismatch: `{name}` is not a spatial variable of a {dim}-dimensional system"),
            ));
        }
    }
    Ok(j)
}

fn resolve(raw: &Raw, symbols: &Symbols) -> Result<Expr, ParseError> {
    let r = |x: &Raw| resolve(x, symbols);
    Ok(match raw {
        Raw::Num(c) => Expr::Num(c.clone()),
        Raw::Ident(name, pos) => {
            if let Some(u) = symbols.unknowns.iter().find(|u| u.as_ref() == name) {
                Expr::Unknown(u.clone())
            } else if spatial_index(name).is_some() {
                Expr::Var(resolve_var(name, *pos, symbols)?)
            } else if name == "s" {
                if !symbols.time {
                    return Err(ParseError::semantic("s", "time symbol s used but the system is not time_dependent"));
                }
                Expr::Time
            } else if is_reserved(name) {
                return Err(ParseError::syntax(*pos, format!("`{name}` is reserved")));
            } else {
                Expr::Param(Arc::from(name.as_str()))
            }
        }
        Raw::Call(name, args, pos) => {
            if name == "leray_pressure" {
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    match a {
                        Raw::Ident(n, _) if symbols.unknowns.iter().any(|u| u.as_ref() == n) => out.push(r(a)?),
                        Raw::Ident(n, _) => {
                            return Err(ParseError::semantic(n, format!("unknown {n} not declared")));
                        }
                        _ => return Err(ParseError::syntax(*pos, "leray_pressure takes a list of unknowns")),
                    }
                }
                Expr::Pressure(out)
            } else {
                let f = Func::from_name(name)
                    .ok_or_else(|| ParseError::syntax(*pos, format!("unknown function `{name}`")))?;
                if args.len() != 1 {
                    return Err(ParseError::syntax(*pos, format!("`{name}` takes one argument")));
                }
                Expr::func(f, r(&args[0])?)
            }
        }
        Raw::Deriv(inner, vars) => {
            if let Raw::Ident(n, _) = inner.as_ref() {
                let known = symbols.unknowns.iter().any(|u| u.as_ref() == n);
                if !known && spatial_index(n).is_none() {
                    return Err(ParseError::semantic(n, format!("unknown {n} not declared")));
                }
            }
            let mut dims = Vec::with_capacity(vars.len());
            for (v, pos) in vars {
                dims.push(resolve_var(v, *pos, symbols)?);
            }
            Expr::Deriv(Box::new(r(inner)?), MultiIndex::from_dims(&dims))
        }
        Raw::Add(a, b) => r(a)? + r(b)?,
        Raw::Sub(a, b) => r(a)? - r(b)?,
        Raw::Mul(a, b) => r(a)? * r(b)?,
        Raw::Div(a, b) => r(a)? / r(b)?,
        Raw::Pow(a, b) => Expr::Pow(Box::new(r(a)?), Box::new(r(b)?)),
        Raw::Neg(a) => -r(a)?,
    })
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, i: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(ParseError::syntax(self.pos(), format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(w) => {
                self.bump();
                Ok((w, pos))
            }
            other => Err(ParseError::syntax(pos, format!("expected {what}, found {}", describe(&other)))),
        }
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(c) if c.is_integer() => {
                self.bump();
                use num_traits::ToPrimitive;
                c.to_integer().to_usize().ok_or_else(|| ParseError::syntax(pos, "integer out of range"))
            }
            other => Err(ParseError::syntax(pos, format!("expected an integer, found {}", describe(&other)))),
        }
    }

    fn expr(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Raw::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Raw::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Raw::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&Tok::Slash) {
                lhs = Raw::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Raw, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Raw::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Raw, ParseError> {
        let base = self.primary()?;
        if self.eat(&Tok::Caret) {
            let exponent = self.unary()?;
            return Ok(Raw::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Raw, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(c) => {
                self.bump();
                Ok(Raw::Num(c))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() != &Tok::LParen {
                    return Ok(Raw::Ident(name, pos));
                }
                self.bump();
                if name == "D" {
                    let inner = self.expr()?;
                    self.expect(&Tok::Semi, "`;` in D(..; ..)")?;
                    let mut vars = vec![self.ident("a spatial variable")?];
                    while self.eat(&Tok::Comma) {
                        vars.push(self.ident("a spatial variable")?);
                    }
                    self.expect(&Tok::RParen, "`)`")?;
                    return Ok(Raw::Deriv(Box::new(inner), vars));
                }
                let mut args = Vec::new();
                if self.peek() != &Tok::RParen {
                    args.push(self.expr()?);
                    while self.eat(&Tok::Comma) {
                        args.push(self.expr()?);
                    }
                }
                self.expect(&Tok::RParen, "`)`")?;
                Ok(Raw::Call(name, args, pos))
            }
            other => Err(ParseError::syntax(pos, format!("expected an expression, found {}", describe(&other)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(w) => format!("`{w}`"),
        Tok::Number(c) => format!("number `{c}`"),
        Tok::Eof => "end of input".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
    }
}

#[cfg(test)]
mod tests;
