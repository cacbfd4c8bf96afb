//! Reader for the textual form of polynomials and multivectors, e.g.
//! `(rho_y^3*rho_xxx - 3*rho_x*rho_y^2*rho_xxy)*xi0*xi1` or `1/2*a1_z*x`.
//! Odd symbols are `xi0 .. xi3` (0-based, as printed).

use alloc::format;
use alloc::string::String;

use crate::error::Error;
use crate::jet::{DiffPolynomial, Field, JetVariable, COORD_NAMES};
use crate::multivector::Multivector;
use crate::rational::Rational;

pub fn parse_multivector(text: &str, dim: usize) -> Result<Multivector, Error> {
    let mut p = Parser { s: text.as_bytes(), pos: 0, dim };
    let mv = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(mv)
}

/// Parses a degree-zero expression.
pub fn parse_polynomial(text: &str, dim: usize) -> Result<DiffPolynomial, Error> {
    let mv = parse_multivector(text, dim)?;
    match mv.degree() {
        None | Some(0) => Ok(mv.component(0)),
        _ => Err(Error::Parse { column: 0, message: "expected a function, found odd symbols".into() }),
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> Error {
        Error::Parse { column: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Multivector, Error> {
        let mut acc = Multivector::zero(self.dim);
        let mut first = true;
        loop {
            let negative = match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                _ if first => false,
                _ => break,
            };
            let t = self.term()?;
            acc = if negative { acc.sub(&t) } else { acc.add(&t) };
            first = false;
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Multivector, Error> {
        let mut acc = self.power()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let f = self.power()?;
            acc = acc.wedge(&f)?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Multivector, Error> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.integer()?;
            let mut out = Multivector::function(self.dim, DiffPolynomial::constant(Rational::one()));
            for _ in 0..e {
                out = out.wedge(&base)?;
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64, Error> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        core::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse { column: start, message: "expected an integer".into() })
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
            self.pos += 1;
        }
        core::str::from_utf8(&self.s[start..self.pos]).unwrap()
    }

    fn atom(&mut self) -> Result<Multivector, Error> {
        let dim = self.dim;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                let mut q = Rational::from(n as i64);
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    self.skip_ws();
                    let d = self.integer()?;
                    if d == 0 {
                        return Err(self.err("zero denominator"));
                    }
                    q = &q / &Rational::from(d as i64);
                }
                Ok(Multivector::function(dim, DiffPolynomial::constant(q)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = String::from(self.ident());
                let bad = |m: String| Error::Parse { column: start, message: m };
                if let Some(k) = name.strip_prefix("xi") {
                    let i: usize = k.parse().map_err(|_| bad(format!("bad odd symbol `{name}`")))?;
                    if i >= dim {
                        return Err(bad(format!("`{name}` out of range in dimension {dim}")));
                    }
                    return Ok(Multivector::xi(dim, i + 1));
                }
                let var = parse_variable(&name, dim).ok_or_else(|| bad(format!("unknown variable `{name}`")))?;
                Ok(Multivector::function(dim, DiffPolynomial::variable(var)))
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

/// `rho`, `rho_xy`, `a1_z`, or a bare coordinate name.
pub fn parse_variable(name: &str, dim: usize) -> Option<JetVariable> {
    if let Some(i) = COORD_NAMES[..dim].iter().position(|&c| name.len() == 1 && name.starts_with(c)) {
        return Some(JetVariable::base(i + 1));
    }
    let (head, subs) = match name.split_once('_') {
        Some((h, s)) => (h, s),
        None => (name, ""),
    };
    let field = if head == "rho" {
        Field::Rho
    } else {
        let k: u8 = head.strip_prefix('a')?.parse().ok()?;
        if k == 0 || k as usize > dim.saturating_sub(2) {
            return None;
        }
        Field::Casimir(k)
    };
    let mut orders = [0u8; 4];
    for ch in subs.chars() {
        let i = COORD_NAMES[..dim].iter().position(|&c| c == ch)?;
        orders[i] += 1;
    }
    Some(JetVariable::new(field, &orders[..dim]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn round_trips_display() {
        for s in [
            "(rho_y*rho_xx*rho_yy - rho_y*rho_xy^2)*xi0 + (-rho_x*rho_xx*rho_yy + rho_x*rho_xy^2)*xi1",
            "(rho_y^3*rho_xxx)*xi0*xi1",
        ] {
            let mv = parse_multivector(s, 2).unwrap();
            assert_eq!(parse_multivector(&mv.to_string(), 2).unwrap(), mv);
        }
    }

    #[test]
    fn arithmetic() {
        let p = parse_polynomial("(rho_x + rho_y)*(rho_x - rho_y)", 2).unwrap();
        assert_eq!(p, parse_polynomial("rho_x^2 - rho_y^2", 2).unwrap());
        let q = parse_polynomial("1/2*a1_z*x + 0*rho", 3).unwrap();
        assert_eq!(q.to_string(), "1/2*a1_z*x");
        assert_eq!(parse_multivector("xi1*xi0", 2).unwrap(), parse_multivector("-xi0*xi1", 2).unwrap());
    }

    #[test]
    fn errors() {
        assert!(parse_polynomial("rho_q", 2).is_err());
        assert!(parse_polynomial("a1", 2).is_err());
        assert!(parse_polynomial("(rho", 2).is_err());
        assert!(parse_polynomial("xi0", 2).is_err());
        assert!(matches!(parse_polynomial("rho +", 2), Err(Error::Parse { column: 5, .. })));
    }
}
