//! A small arithmetic expression language over the coordinates `x` and `y`.
//!
//! Grammar (standard precedence, `^` binds tightest and is right-associative):
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := number | "x" | "y" | func "(" expr ("," expr)? ")" | "(" expr ")"
//! func  := sin | cos | exp | log | abs | min | max
//! ```
//!
//! `min` and `max` take two arguments, every other function takes one.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            len: src.chars().count(),
        };
        let expr = parser.expr()?;
        match parser.peek() {
            None => Ok(expr),
            Some((tok, col)) => Err(parse_error(col, format!("unexpected token {tok:?}"))),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(e) => -e.eval(x, y),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y), b.eval(x, y));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x, y);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval(x, y)),
                    Func::Max => a.max(args[1].eval(x, y)),
                }
            }
        }
    }

    /// Returns `Some(v)` when the expression does not reference `x` or `y`.
    pub fn as_constant(&self) -> Option<f64> {
        if self.uses_coordinates() {
            None
        } else {
            Some(self.eval(0.0, 0.0))
        }
    }

    pub fn uses_coordinates(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::X | Expr::Y => true,
            Expr::Neg(e) => e.uses_coordinates(),
            Expr::Bin(_, a, b) => a.uses_coordinates() || b.uses_coordinates(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_coordinates),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn parse_error(column: usize, message: String) -> Error {
    Error::Parse {
        line: 1,
        column,
        message,
    }
}

/// Tokens carry their 1-based column.
fn tokenize(src: &str) -> Result<Vec<(Token, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| parse_error(col, format!("malformed number {text:?}")))?;
            out.push((Token::Num(value), col));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Token::Ident(chars[start..i].iter().collect()), col));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::LParen,
                ')' => Token::RParen,
                ',' => Token::Comma,
                _ => return Err(parse_error(col, format!("unexpected character {c:?}"))),
            };
            out.push((tok, col));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<(Token, usize)> {
        self.tokens.get(self.pos).cloned()
    }

    fn next(&mut self) -> Option<(Token, usize)> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn end_column(&self) -> usize {
        self.len + 1
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some((tok, _)) if tok == want => Ok(()),
            Some((tok, col)) => Err(parse_error(col, format!("expected {want:?}, found {tok:?}"))),
            None => Err(parse_error(
                self.end_column(),
                format!("expected {want:?}, found end of input"),
            )),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some((Token::Op(c @ ('+' | '-')), _)) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some((Token::Op(c @ ('*' | '/')), _)) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some((Token::Op('-'), _)) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some((Token::Op('^'), _)) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some((Token::Num(v), _)) => Ok(Expr::Num(v)),
            Some((Token::LParen, _)) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some((Token::Ident(name), col)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "y" => Ok(Expr::Y),
                _ => {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| parse_error(col, format!("unknown identifier {name:?}")))?;
                    self.expect(Token::LParen)?;
                    let mut args = vec![self.expr()?];
                    while let Some((Token::Comma, _)) = self.peek() {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Token::RParen)?;
                    if args.len() != func.arity() {
                        return Err(parse_error(
                            col,
                            format!(
                                "{name} takes {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                        ));
                    }
                    Ok(Expr::Call(func, args))
                }
            },
            Some((tok, col)) => Err(parse_error(col, format!("unexpected token {tok:?}"))),
            None => Err(parse_error(self.end_column(), "unexpected end of input".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64) -> f64 {
        Expr::parse(s).unwrap().eval(x, 0.0)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2*3", 0.0), 7.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("(1+2)*3", 0.0), 9.0);
        assert_eq!(ev("8/2/2", 0.0), 2.0);
        assert_eq!(ev("1 - 2 - 3", 0.0), -4.0);
    }

    #[test]
    fn variables_and_functions() {
        assert!((ev("1.2 + 0.3*x^2", 0.5) - 1.275).abs() < 1e-15);
        assert_eq!(ev("max(x, 2)", 1.0), 2.0);
        assert_eq!(ev("min(x, 2)", 1.0), 1.0);
        assert!((ev("exp(log(x))", 3.0) - 3.0).abs() < 1e-14);
        assert_eq!(ev("abs(-x)", 4.0), 4.0);
        assert_eq!(Expr::parse("y").unwrap().eval(0.0, 7.0), 7.0);
        assert_eq!(ev("1e-3*1000", 0.0), 1.0);
    }

    #[test]
    fn constants() {
        assert_eq!(Expr::parse("2*1.5").unwrap().as_constant(), Some(3.0));
        assert_eq!(Expr::parse("x+1").unwrap().as_constant(), None);
    }

    #[test]
    fn errors_carry_columns() {
        match Expr::parse("1 + * 2") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        match Expr::parse("foo(1)") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 1),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("x $ 2").is_err());
    }
}
