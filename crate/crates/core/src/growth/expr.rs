//! Sequence expressions in the variable `n`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'n' | func '(' args ')' | '(' expr ')'
//! func    := ln | exp | min | max
//! ```

use std::fmt;

use thiserror::Error;

use super::{GrowthError, GrowthSeries};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at column {}: {message}", .position + 1)]
pub struct ParseError {
    /// Character offset into the source expression.
    pub position: usize,
    pub message: String,
}

impl ParseError {
    /// Two lines: the source and a caret under the offending character.
    pub fn render(&self, source: &str) -> String {
        format!("{source}\n{}^ {}", " ".repeat(self.position), self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    N,
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Ln,
    Exp,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Ln | Func::Exp => 1,
            Func::Min | Func::Max => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Min => "min",
            Func::Max => "max",
        }
    }
}

impl Expr {
    pub fn eval(&self, n: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::N => n,
            Expr::Neg(e) => -e.eval(n),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(n), b.eval(n));
                match op {
                    Op::Add => x + y,
                    Op::Sub => x - y,
                    Op::Mul => x * y,
                    Op::Div => x / y,
                    Op::Pow => x.powf(y),
                }
            }
            Expr::Call(f, args) => match f {
                Func::Ln => args[0].eval(n).ln(),
                Func::Exp => args[0].eval(n).exp(),
                Func::Min => args[0].eval(n).min(args[1].eval(n)),
                Func::Max => args[0].eval(n).max(args[1].eval(n)),
            },
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::N => f.write_str("n"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    Op::Add => "+",
                    Op::Sub => "-",
                    Op::Mul => "*",
                    Op::Div => "/",
                    Op::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ParseError {
                position: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(ParseError {
                position: i,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            position: self.at(),
            message: message.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => Op::Add,
                Tok::Sym('-') => Op::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => Op::Mul,
                Tok::Sym('/') => Op::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.at();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "n" => Ok(Expr::N),
            Tok::Ident(name) => {
                let func = Func::from_name(&name).ok_or_else(|| ParseError {
                    position: start,
                    message: format!("unknown identifier '{name}'"),
                })?;
                self.expect('(')?;
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Sym(',') {
                    self.bump();
                    args.push(self.expr()?);
                }
                if args.len() != func.arity() {
                    return Err(ParseError {
                        position: start,
                        message: format!(
                            "{} takes {} argument(s), got {}",
                            func.name(),
                            func.arity(),
                            args.len()
                        ),
                    });
                }
                self.expect(')')?;
                Ok(Expr::Call(func, args))
            }
            Tok::End => Err(ParseError {
                position: start,
                message: "unexpected end of expression".into(),
            }),
            Tok::Sym(c) => Err(ParseError {
                position: start,
                message: format!("unexpected '{c}'"),
            }),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut lx = Lexer {
        toks: lex(src)?,
        pos: 0,
    };
    let e = lx.expr()?;
    if *lx.peek() != Tok::End {
        return Err(lx.error("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Replace a decreasing result by its running maximum instead of failing.
    pub clamp_monotone: bool,
}

/// Evaluates `src` at `n = 1..=horizon`.
pub fn parse_sequence(src: &str, horizon: usize, opts: ParseOptions) -> Result<GrowthSeries, GrowthError> {
    let e = parse_expr(src)?;
    if horizon == 0 {
        return Err(GrowthError::EmptySeries);
    }
    let values: Vec<f64> = (1..=horizon).map(|n| e.eval(n as f64)).collect();
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            return Err(GrowthError::NotANumber { n: i + 1 });
        }
        if v < 0.0 {
            return Err(GrowthError::Negative { n: i + 1, value: v });
        }
    }
    if opts.clamp_monotone {
        GrowthSeries::monotone_envelope(&values)
    } else {
        GrowthSeries::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str, n: usize) -> Vec<f64> {
        parse_sequence(s, n, ParseOptions::default()).unwrap().values().to_vec()
    }

    #[test]
    fn examples() {
        assert_eq!(seq("2*n+5", 8), vec![7., 9., 11., 13., 15., 17., 19., 21.]);
        assert_eq!(seq("n^2", 4), vec![1., 4., 9., 16.]);
        assert!(matches!(
            parse_sequence("n - 10", 8, ParseOptions::default()),
            Err(GrowthError::Negative { n: 1, .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(seq("2^3^2", 1), vec![512.0]);
        assert_eq!(seq("-2^2 + 5", 1), vec![1.0]);
        assert_eq!(seq("12/3/2", 1), vec![2.0]);
        assert_eq!(seq("2^-1", 1), vec![0.5]);
        assert_eq!(seq(" max( n , 3 ) * min(n,2)", 3), vec![3.0, 6.0, 6.0]);
        assert_eq!(seq("exp(ln(n))", 2)[1], 2.0);
        assert_eq!(seq("1e1 + n", 1), vec![11.0]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expr("n + * 2").unwrap_err();
        assert_eq!(e.position, 4);
        assert_eq!(e.render("n + * 2"), "n + * 2\n    ^ unexpected '*'");
        assert_eq!(parse_expr("foo(n)").unwrap_err().position, 0);
        assert_eq!(parse_expr("(n").unwrap_err().position, 2);
        assert_eq!(parse_expr("n $").unwrap_err().position, 2);
        assert_eq!(parse_expr("ln(n, 2)").unwrap_err().position, 0);
        assert_eq!(parse_expr("n n").unwrap_err().position, 2);
    }

    #[test]
    fn clamp_flag() {
        let opts = ParseOptions { clamp_monotone: true };
        assert!(parse_sequence("5 - n/4", 4, ParseOptions::default()).is_err());
        assert_eq!(parse_sequence("5 - n/4", 4, opts).unwrap().values(), &[4.75; 4]);
    }
}
