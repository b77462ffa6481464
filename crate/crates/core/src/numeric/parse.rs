//! Parser for the scalar expression grammar:
//!   integer | p/q | decimal | (a +- b*sqrt(d))/c
//! Whitespace insensitive. Decimal literals become tagged approximations
//! with the default epsilon of 1e-30 unless overridden.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::scalar::{default_epsilon, Scalar};
use crate::error::{Error, Result};

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        Cursor {
            src: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(&format!("'{}'", c as char))),
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<()> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(w.as_bytes()) {
            self.pos += w.len();
            Ok(())
        } else {
            Err(self.err(&format!("'{w}'")))
        }
    }

    fn err(&self, expected: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            expected: expected.to_string(),
        }
    }

    fn digits(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("digits"));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .unwrap())
    }

    fn sign(&mut self) -> i8 {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1
            }
            Some(b'+') => {
                self.pos += 1;
                1
            }
            _ => 1,
        }
    }

    fn signed_int(&mut self) -> Result<BigInt> {
        let s = self.sign();
        let d = self.digits()?;
        Ok(if s < 0 { -d } else { d })
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

/// Parse a scalar expression; see the module docs for the grammar.
pub fn parse_scalar(text: &str) -> Result<Scalar> {
    parse_scalar_with_epsilon(text, &default_epsilon())
}

pub fn parse_scalar_with_epsilon(text: &str, eps: &BigRational) -> Result<Scalar> {
    let mut c = Cursor::new(text);
    let value = if c.peek() == Some(b'(') {
        parse_surd(&mut c)?
    } else {
        parse_number(&mut c, eps)?
    };
    if !c.at_end() {
        return Err(c.err("end of input"));
    }
    Ok(value)
}

fn parse_number(c: &mut Cursor, eps: &BigRational) -> Result<Scalar> {
    let int = c.signed_int()?;
    match c.peek() {
        Some(b'/') => {
            c.pos += 1;
            let den = c.digits()?;
            if den.is_zero() {
                return Err(Error::Domain("denominator must be nonzero".into()));
            }
            Ok(Scalar::Rational(BigRational::new(int, den)))
        }
        Some(b'.') => {
            c.pos += 1;
            c.skip_ws();
            let start = c.pos;
            let frac = c.digits()?;
            let places = c.pos - start;
            let neg = int < BigInt::zero() || text_has_leading_minus(c);
            let scale = BigInt::from(10u32).pow(places as u32);
            let abs = num_traits::Signed::abs(&int) * &scale + frac;
            let value = BigRational::new(if neg { -abs } else { abs }, scale);
            Scalar::approx(value, eps.clone())
        }
        _ => Ok(Scalar::Rational(BigRational::from_integer(int))),
    }
}

fn text_has_leading_minus(c: &Cursor) -> bool {
    c.src
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .copied()
        == Some(b'-')
}

fn parse_surd(c: &mut Cursor) -> Result<Scalar> {
    c.expect(b'(')?;
    let a = c.signed_int()?;
    let sign = match c.bump() {
        Some(b'+') => 1i8,
        Some(b'-') => -1,
        _ => return Err(c.err("'+' or '-'")),
    };
    let b = c.digits()?;
    c.expect(b'*')?;
    c.expect_word("sqrt")?;
    c.expect(b'(')?;
    let d = c.signed_int()?;
    c.expect(b')')?;
    c.expect(b')')?;
    let den = if c.peek() == Some(b'/') {
        c.pos += 1;
        let den = c.signed_int()?;
        if den.is_zero() {
            return Err(Error::Domain("denominator must be nonzero".into()));
        }
        den
    } else {
        BigInt::from(1)
    };
    let d: i64 = d
        .try_into()
        .map_err(|_| Error::Domain("sqrt argument too large".into()))?;
    let b = if sign < 0 { -b } else { b };
    Scalar::surd(
        BigRational::new(a, den.clone()),
        BigRational::new(b, den),
        d,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn parses_rational_literal() {
        assert_eq!(parse_scalar("1/3").unwrap(), Scalar::ratio(1, 3).unwrap());
        assert_eq!(parse_scalar(" -7 / 2 ").unwrap(), Scalar::ratio(-7, 2).unwrap());
        assert_eq!(parse_scalar("5").unwrap(), Scalar::from_int(5));
    }

    #[test]
    fn parses_surd_literal() {
        // sqrt(2) - 1 as written in the canonical form
        let s = parse_scalar("(-1+1*sqrt(2))/1").unwrap();
        match &s {
            Scalar::Surd { a, b, d } => {
                assert_eq!(a, &BigRational::from_integer((-1).into()));
                assert_eq!(b, &BigRational::one());
                assert_eq!(*d, 2);
            }
            other => panic!("expected surd, got {other:?}"),
        }
    }

    #[test]
    fn surd_with_zero_b_collapses_to_rational() {
        assert_eq!(
            parse_scalar("(3+0*sqrt(2))/1").unwrap(),
            Scalar::from_int(3)
        );
    }

    #[test]
    fn non_squarefree_d_is_normalized() {
        // sqrt(8) = 2 sqrt(2)
        let s = parse_scalar("(0+1*sqrt(8))/1").unwrap();
        let t = parse_scalar("(0+2*sqrt(2))/1").unwrap();
        assert!(s.eq_exact(&t));
    }

    #[test]
    fn decimal_becomes_approx() {
        match parse_scalar("0.25").unwrap() {
            Scalar::Approx { value, eps } => {
                assert_eq!(value, BigRational::new(1.into(), 4.into()));
                assert_eq!(eps, default_epsilon());
            }
            other => panic!("expected approx, got {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_sqrt_argument() {
        assert!(matches!(
            parse_scalar("(1+1*sqrt(0))/1"),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reports_syntax_position() {
        match parse_scalar("1/") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }
}
