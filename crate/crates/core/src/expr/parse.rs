//! Recursive-descent parser for the expression grammar.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := factor (('*'|'/') factor)*
//! factor   := ('-'|'+')* power
//! power    := atom ('^' exponent)*
//! exponent := ['-'] digits | '(' ['-'] digits ')'
//! atom     := number | 'z' digit | 'exp' '(' expr ')' | '(' expr ')' | 'i'
//! number   := digits ['.' digits] ['i'] | '.' digits ['i']
//! ```
//!
//! Variables are `z1`..`z9`; complex literals are `3`, `2.5i`, `1+2i` (the
//! latter parses as an addition, which evaluates identically).

use num_complex::Complex64;

use super::Expr;
use crate::error::{Error, Result};

/// Nesting limit so untrusted input cannot overflow the stack.
const MAX_DEPTH: usize = 200;

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
}

pub fn parse_expr(input: &str) -> Result<Expr> {
    let mut p = Parser {
        bytes: input.as_bytes(),
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Parse a single complex constant such as `3`, `-2.5i` or `1+2i`.
/// Accepts any constant expression in the grammar (no variables).
pub fn parse_complex(input: &str) -> Result<Complex64> {
    let e = parse_expr(input)?;
    if e.max_var() > 0 {
        return Err(Error::Parse {
            position: 0,
            message: "expected a constant, found a variable".into(),
        });
    }
    e.eval(&[])
}

/// Parse a comma-separated list of complex constants, e.g. `1+2i,0.5,-3i`.
pub fn parse_complex_list(input: &str) -> Result<Vec<Complex64>> {
    input.split(',').map(|s| parse_complex(s.trim())).collect()
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.error("expression nested too deeply"))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(lhs.into(), rhs.into());
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(lhs.into(), rhs.into());
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(lhs.into(), rhs.into());
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Div(lhs.into(), rhs.into());
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        self.enter()?;
        self.skip_ws();
        let e = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Expr::Neg(self.factor()?.into())
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()?
            }
            _ => self.power()?,
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut base = self.atom()?;
        while self.eat(b'^') {
            let k = self.exponent()?;
            base = Expr::IntPow(base.into(), k);
        }
        self.depth -= 1;
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let parenthesised = self.eat(b'(');
        self.skip_ws();
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an integer exponent"));
        }
        let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let mag: i32 = digits
            .parse()
            .map_err(|_| self.error("integer exponent out of range"))?;
        if parenthesised && !self.eat(b')') {
            return Err(self.error("expected ')' after exponent"));
        }
        Ok(if negative { -mag } else { mag })
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(b'z') => {
                self.pos += 1;
                match self.bump() {
                    Some(d @ b'1'..=b'9') => Ok(Expr::Var((d - b'0') as usize)),
                    _ => Err(self.error("expected variable index 1..9 after 'z'")),
                }
            }
            Some(b'e') => {
                if self.bytes[self.pos..].starts_with(b"exp") {
                    self.pos += 3;
                    if !self.eat(b'(') {
                        return Err(self.error("expected '(' after 'exp'"));
                    }
                    let e = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected ')'"));
                    }
                    Ok(Expr::Exp(e.into()))
                } else {
                    Err(self.error("unknown identifier (only 'exp' is supported)"))
                }
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Expr::Const(Complex64::new(0.0, 1.0)))
            }
            Some(b'0'..=b'9' | b'.') => self.number(),
            Some(_) => Err(self.error("expected a number, variable, 'exp(', '(' or 'i'")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut seen_digit = false;
        let mut seen_dot = false;
        while let Some(b) = self.peek() {
            match b {
                b'0'..=b'9' => {
                    seen_digit = true;
                    self.pos += 1;
                }
                b'.' if !seen_dot => {
                    seen_dot = true;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if !seen_digit {
            return Err(self.error("expected digits"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| self.error("malformed numeric literal"))?;
        if self.peek() == Some(b'i') {
            self.pos += 1;
            Ok(Expr::Const(Complex64::new(0.0, value)))
        } else {
            Ok(Expr::Const(Complex64::new(value, 0.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_literals() {
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("2.5i").unwrap(), c(0.0, 2.5));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("-1.5-0.5i").unwrap(), c(-1.5, -0.5));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
    }

    #[test]
    fn parses_list() {
        let v = parse_complex_list("1+2i, 0.5 ,-3i").unwrap();
        assert_eq!(v, vec![c(1.0, 2.0), c(0.5, 0.0), c(0.0, -3.0)]);
    }

    #[test]
    fn parses_expressions() {
        let e = parse_expr("exp(z1^2) * (z1 - 1/3)").unwrap();
        let z = [c(0.4, 0.7)];
        let expect = (z[0] * z[0]).exp() * (z[0] - 1.0 / 3.0);
        assert!((e.eval(&z).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn parses_negative_exponents() {
        let e = parse_expr("z1^-2").unwrap();
        let z = [c(2.0, 0.0)];
        assert!((e.eval(&z).unwrap() - c(0.25, 0.0)).norm() < 1e-15);
        let e2 = parse_expr("z1^(-2)").unwrap();
        assert_eq!(e2.eval(&z).unwrap(), e.eval(&z).unwrap());
    }

    #[test]
    fn precedence_and_chained_powers() {
        // -z1^2 is -(z1^2); 2^3 as plain constant power
        let e = parse_expr("-z1^2").unwrap();
        assert!((e.eval(&[c(2.0, 0.0)]).unwrap() - c(-4.0, 0.0)).norm() < 1e-15);
        let e = parse_expr("(z1^2)^3").unwrap();
        assert!((e.eval(&[c(2.0, 0.0)]).unwrap() - c(64.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_expr("").is_err());
        assert!(parse_expr("z0").is_err());
        assert!(parse_expr("exp[z1]").is_err());
        assert!(parse_expr("1 + ").is_err());
        assert!(parse_expr("log(z1)").is_err());
        assert!(parse_expr("z1 ^ z1").is_err());
        assert!(parse_expr("1..2").is_err());
    }

    #[test]
    fn depth_limit_holds() {
        let deep = "(".repeat(100_000) + "1" + &")".repeat(100_000);
        assert!(parse_expr(&deep).is_err());
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "exp(z1^2)*(z1-1/3)",
            "z1*z2 - 2",
            "-(z1 + 2.5i)^3",
            "1+2i",
            "exp(exp(z1))",
            "z1^-2 / (z2 - i)",
        ] {
            let e = parse_expr(src).unwrap();
            let rendered = e.to_string();
            let back = parse_expr(&rendered).unwrap();
            let z = [c(0.37, -0.81), c(1.1, 0.6)];
            let a = e.eval(&z);
            let b = back.eval(&z);
            match (a, b) {
                (Ok(x), Ok(y)) => assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm())),
                (x, y) => assert_eq!(x, y),
            }
        }
    }
}
