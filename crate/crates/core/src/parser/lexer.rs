use num_bigint::BigInt;
use num_traits::pow;

use super::ParseError;
use crate::expr::Rational;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(Rational),
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(word), pos });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let (value, len) = scan_number(&chars[i..]).ok_or_else(|| ParseError::Syntax {
                line,
                col,
                message: "malformed number".into(),
            })?;
            i = start + len;
            col += len;
            out.push(Token { tok: Tok::Number(value), pos });
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '=' => Tok::Eq,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            other => {
                return Err(ParseError::Syntax { line, col, message: format!("unexpected character `{other}`") })
            }
        };
        out.push(Token { tok, pos });
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

/// Decimal literal with optional fraction and exponent, converted exactly.
fn scan_number(chars: &[char]) -> Option<(Rational, usize)> {
    let mut i = 0;
    let mut digits = String::new();
    let mut frac_len = 0usize;
    while i < chars.len() && chars[i].is_ascii_digit() {
        digits.push(chars[i]);
        i += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        while i < chars.len() && chars[i].is_ascii_digit() {
            digits.push(chars[i]);
            frac_len += 1;
            i += 1;
        }
    }
    if digits.is_empty() {
        return None;
    }
    let mut exp: i64 = 0;
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        let mut sign = 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            if chars[j] == '-' {
                sign = -1;
            }
            j += 1;
        }
        let start = j;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j > start {
            let e: String = chars[start..j].iter().collect();
            exp = sign * e.parse::<i64>().ok()?;
            i = j;
        }
    }
    let mantissa: BigInt = digits.parse().ok()?;
    let scale = exp - frac_len as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(mantissa * pow(ten, scale as usize))
    } else {
        Rational::new(mantissa, pow(ten, (-scale) as usize))
    };
    Some((value, i))
}
