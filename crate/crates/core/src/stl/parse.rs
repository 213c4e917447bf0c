//! Recursive-descent parser for the formula text grammar.
//!
//! ```text
//! or      := and ("or" and)*
//! and     := until ("and" until)*
//! until   := unary ("U" interval? unary)?
//! unary   := "not" unary | ("F" | "G") interval? unary | primary
//! primary := "(" or ")" | "true" | atom
//! atom    := "x" INDEX ("<=" | ">=") NUMBER
//! interval:= "[" NUMBER "," (NUMBER | "inf") "]"
//! ```
//!
//! A temporal operator without an interval means `[0,inf]`.

use std::fmt;

use thiserror::Error;

use super::formula::{Atom, Direction, Formula, Interval};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Le,
    Ge,
    Ident(String),
    Number(f64),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::LBracket => write!(f, "'['"),
            Tok::RBracket => write!(f, "']'"),
            Tok::Comma => write!(f, "','"),
            Tok::Le => write!(f, "'<='"),
            Tok::Ge => write!(f, "'>='"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Number(x) => write!(f, "number {x}"),
        }
    }
}

fn err(pos: usize, message: impl Into<String>) -> ParseError {
    ParseError { pos, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'[' => out.push((start, Tok::LBracket)),
            b']' => out.push((start, Tok::RBracket)),
            b',' => out.push((start, Tok::Comma)),
            b'<' | b'>' => {
                if bytes.get(i + 1) != Some(&b'=') {
                    return Err(err(start, "expected '<=' or '>='"));
                }
                out.push((start, if c == b'<' { Tok::Le } else { Tok::Ge }));
                i += 2;
                continue;
            }
            b'0'..=b'9' | b'.' | b'-' | b'+' => {
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i];
                    let exp_sign = (d == b'-' || d == b'+') && matches!(bytes[i - 1], b'e' | b'E');
                    if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let lexeme = &text[start..i];
                let value: f64 = lexeme.parse().map_err(|_| err(start, format!("invalid number '{lexeme}'")))?;
                out.push((start, Tok::Number(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(err(start, format!("unexpected character '{ch}'")));
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(err(at, format!("expected {want}, found {t}"))),
            None => Err(err(at, format!("expected {want}, found end of input"))),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Number(x)) => Ok(x),
            Some(t) => Err(err(at, format!("expected a number, found {t}"))),
            None => Err(err(at, "expected a number, found end of input")),
        }
    }

    fn or_expr(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.is_keyword("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until_expr()?;
        while self.is_keyword("and") {
            self.bump();
            let rhs = self.until_expr()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until_expr(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_keyword("U") {
            self.bump();
            let interval = self.opt_interval()?;
            let rhs = self.unary()?;
            return Ok(Formula::until(interval, lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.is_keyword("not") {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if self.is_keyword("F") || self.is_keyword("G") {
            let eventually = self.is_keyword("F");
            self.bump();
            let interval = self.opt_interval()?;
            let body = self.unary()?;
            return Ok(if eventually {
                Formula::eventually(interval, body)
            } else {
                Formula::globally(interval, body)
            });
        }
        self.primary()
    }

    fn opt_interval(&mut self) -> Result<Interval, ParseError> {
        if self.peek() != Some(&Tok::LBracket) {
            return Ok(Interval::unbounded(0.0).expect("[0,inf] is valid"));
        }
        let at = self.offset();
        self.bump();
        let lo = self.number()?;
        self.expect(Tok::Comma)?;
        let hi = if self.is_keyword("inf") {
            self.bump();
            f64::INFINITY
        } else {
            self.number()?
        };
        self.expect(Tok::RBracket)?;
        Interval::new(lo, hi).map_err(|e| err(at, e.to_string()))
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::LParen) => {
                let inner = self.or_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) if name == "true" => Ok(Formula::True),
            Some(Tok::Ident(name)) if name.starts_with('x') => {
                let var: usize = name[1..]
                    .parse()
                    .map_err(|_| err(at, format!("invalid variable name '{name}'")))?;
                let dir_at = self.offset();
                let dir = match self.bump() {
                    Some(Tok::Le) => Direction::Le,
                    Some(Tok::Ge) => Direction::Ge,
                    _ => return Err(err(dir_at, "expected '<=' or '>=' after variable")),
                };
                let thr_at = self.offset();
                let threshold = self.number()?;
                if !threshold.is_finite() {
                    return Err(err(thr_at, "threshold must be finite"));
                }
                Ok(Formula::Atom(Atom::new(var, dir, threshold)))
            }
            Some(t) => Err(err(at, format!("unexpected {t}"))),
            None => Err(err(at, "unexpected end of input")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let f = p.or_expr()?;
    if p.pos < p.toks.len() {
        let at = p.offset();
        let t = p.bump().expect("token present");
        return Err(err(at, format!("unexpected trailing {t}")));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn globally_atom() {
        let f = parse_formula("G[0,36] (x0 <= 37.0)").unwrap();
        let want = Formula::globally(Interval::new(0.0, 36.0).unwrap(), Formula::atom(Atom::le(0, 37.0)));
        assert_eq!(f, want);
    }

    #[test]
    fn until_unbounded() {
        let f = parse_formula("(x1 >= 23.19) U[0,inf] (x0 <= 32.56)").unwrap();
        let want = Formula::until(
            Interval::unbounded(0.0).unwrap(),
            Formula::atom(Atom::ge(1, 23.19)),
            Formula::atom(Atom::le(0, 32.56)),
        );
        assert_eq!(f, want);
        assert_eq!(parse_formula("(x1 >= 23.19) U (x0 <= 32.56)").unwrap(), want);
    }

    #[test]
    fn single_atom_and_compact_spacing() {
        assert_eq!(parse_formula("x0 >= 0").unwrap(), Formula::atom(Atom::ge(0, 0.0)));
        let f = parse_formula("F[70,100](x0<=1.16)").unwrap();
        assert_eq!(f.to_string(), "F[70,100] (x0 <= 1.16)");
    }

    #[test]
    fn precedence() {
        let f = parse_formula("x0 >= 1 or x0 <= 0 and not x1 >= 2").unwrap();
        assert_eq!(f.to_string(), "(x0 >= 1) or ((x0 <= 0) and (not (x1 >= 2)))");
        let g = parse_formula("F[0,5] x0 >= 1 and x0 <= 3").unwrap();
        assert_eq!(g.to_string(), "(F[0,5] (x0 >= 1)) and (x0 <= 3)");
    }

    #[test]
    fn negative_and_exponent_numbers() {
        let f = parse_formula("x2 <= -1.5e-3").unwrap();
        assert_eq!(f, Formula::atom(Atom::le(2, -1.5e-3)));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("G[5,5] (x0 <= 1)").unwrap_err();
        assert_eq!(e.pos, 1);
        let e = parse_formula("G[-1,5] (x0 <= 1)").unwrap_err();
        assert_eq!(e.pos, 1);
        let e = parse_formula("x0 <= ").unwrap_err();
        assert_eq!(e.pos, 6);
        let e = parse_formula("(x0 <= 1").unwrap_err();
        assert_eq!(e.pos, 8);
        let e = parse_formula("x0 < 1").unwrap_err();
        assert_eq!(e.pos, 3);
        let e = parse_formula("x0 <= 1 x1 >= 2").unwrap_err();
        assert_eq!(e.pos, 8);
        assert!(parse_formula("y0 <= 1").is_err());
        assert!(parse_formula("x0 <= inf").is_err());
    }
}
