//! Exact scalars: rationals, quadratic surds `a + b*sqrt(d)`, and a tagged
//! approximate fallback. These carry every map parameter, orbit point and
//! interval endpoint in the library, so comparison must never guess:
//! exact variants compare algebraically, approximate ones report
//! `Indeterminate` when the gap is within epsilon.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::highprec::{self, DEFAULT_BITS};
use crate::error::{Error, Result};

/// Outcome of a scalar comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Less,
    Equal,
    Greater,
    Indeterminate,
}

impl Cmp {
    pub fn from_ordering(o: Ordering) -> Cmp {
        match o {
            Ordering::Less => Cmp::Less,
            Ordering::Equal => Cmp::Equal,
            Ordering::Greater => Cmp::Greater,
        }
    }
}

/// An exact real number: rational, quadratic surd, or tagged approximation.
///
/// Invariants kept by the constructors:
/// - rationals are reduced with positive denominator (num-rational does this);
/// - surds have squarefree d >= 2 and b != 0 (b = 0 collapses to `Rational`);
/// - approximate values carry a strictly positive epsilon.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Surd {
        a: BigRational,
        b: BigRational,
        d: u64,
    },
    Approx {
        value: BigRational,
        eps: BigRational,
    },
}

pub fn default_epsilon() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u32).pow(30))
}

/// Strip square factors: returns (squarefree part, extracted root).
fn squarefree_part(mut d: u64) -> (u64, u64) {
    let mut root = 1u64;
    let mut p = 2u64;
    while p * p <= d && p <= 1_000_000 {
        while d % (p * p) == 0 {
            d /= p * p;
            root *= p;
        }
        p += 1;
    }
    // remainder could itself be a perfect square of a large prime
    let s = (d as f64).sqrt() as u64;
    for c in s.saturating_sub(1)..=s + 1 {
        if c > 1 && c * c == d {
            d = 1;
            root *= c;
            break;
        }
    }
    (d, root)
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar::Rational(BigRational::zero())
    }

    pub fn one() -> Scalar {
        Scalar::Rational(BigRational::one())
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Scalar {
        Scalar::Rational(BigRational::from_integer(n))
    }

    pub fn ratio(p: i64, q: i64) -> Result<Scalar> {
        if q == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Scalar::Rational(BigRational::new(p.into(), q.into())))
    }

    pub fn from_ratio(r: BigRational) -> Scalar {
        Scalar::Rational(r)
    }

    /// a + b*sqrt(d), normalized (squarefree d, b = 0 collapses).
    pub fn surd(a: BigRational, b: BigRational, d: i64) -> Result<Scalar> {
        if d <= 0 {
            return Err(Error::Domain(format!("sqrt argument must be positive, got {d}")));
        }
        let (df, root) = squarefree_part(d as u64);
        let b = b * BigRational::from_integer(BigInt::from(root));
        if df == 1 {
            return Ok(Scalar::Rational(a + b));
        }
        if b.is_zero() {
            return Ok(Scalar::Rational(a));
        }
        Ok(Scalar::Surd { a, b, d: df })
    }

    /// sqrt(d) for a positive integer d.
    pub fn sqrt_int(d: i64) -> Result<Scalar> {
        Scalar::surd(BigRational::zero(), BigRational::one(), d)
    }

    pub fn approx(value: BigRational, eps: BigRational) -> Result<Scalar> {
        if !eps.is_positive() {
            return Err(Error::Domain("epsilon must be positive".into()));
        }
        Ok(Scalar::Approx { value, eps })
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Scalar::Approx { .. })
    }

    pub fn is_zero_exact(&self) -> bool {
        matches!(self, Scalar::Rational(r) if r.is_zero())
    }

    /// Best-effort rational view with an error bound (exact surds get a
    /// tight high-precision enclosure).
    pub fn to_rational_enclosure(&self, bits: u64) -> (BigRational, BigRational) {
        match self {
            Scalar::Rational(r) => (r.clone(), BigRational::zero()),
            Scalar::Surd { a, b, d } => {
                let s = highprec::sqrt_rational(&BigRational::from_integer((*d).into()), bits);
                let err = (b.abs() + BigRational::one())
                    * BigRational::new(BigInt::one(), BigInt::one() << (bits - 4));
                (a + b * s, err)
            }
            Scalar::Approx { value, eps } => (value.clone(), eps.clone()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        let (v, _) = self.to_rational_enclosure(96);
        highprec::ratio_to_f64(&v)
    }

    fn demote(&self, bits: u64) -> (BigRational, BigRational) {
        // approx view with a guaranteed positive epsilon
        let (v, e) = self.to_rational_enclosure(bits);
        if e.is_zero() {
            (v, BigRational::new(BigInt::one(), BigInt::one() << (bits - 4)))
        } else {
            (v, e)
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Surd { a, b, d } => Scalar::Surd {
                a: -a,
                b: -b,
                d: *d,
            },
            Scalar::Approx { value, eps } => Scalar::Approx {
                value: -value,
                eps: eps.clone(),
            },
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        use Scalar::*;
        match (self, other) {
            (Rational(x), Rational(y)) => Rational(x + y),
            (Rational(x), Surd { a, b, d }) | (Surd { a, b, d }, Rational(x)) => Surd {
                a: a + x,
                b: b.clone(),
                d: *d,
            },
            (Surd { a, b, d }, Surd { a: a2, b: b2, d: d2 }) if d == d2 => {
                let nb = b + b2;
                if nb.is_zero() {
                    Rational(a + a2)
                } else {
                    Surd {
                        a: a + a2,
                        b: nb,
                        d: *d,
                    }
                }
            }
            _ => {
                let (v1, e1) = self.demote(DEFAULT_BITS);
                let (v2, e2) = other.demote(DEFAULT_BITS);
                Approx {
                    value: v1 + v2,
                    eps: e1 + e2,
                }
            }
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        use Scalar::*;
        match (self, other) {
            (Rational(x), Rational(y)) => Rational(x * y),
            (Rational(x), Surd { a, b, d }) | (Surd { a, b, d }, Rational(x)) => {
                if x.is_zero() {
                    Scalar::zero()
                } else {
                    Surd {
                        a: a * x,
                        b: b * x,
                        d: *d,
                    }
                }
            }
            (Surd { a, b, d }, Surd { a: a2, b: b2, d: d2 }) if d == d2 => {
                let dd = BigRational::from_integer(BigInt::from(*d));
                let na = a * a2 + b * b2 * dd;
                let nb = a * b2 + b * a2;
                if nb.is_zero() {
                    Rational(na)
                } else {
                    Surd {
                        a: na,
                        b: nb,
                        d: *d,
                    }
                }
            }
            _ => {
                let (v1, e1) = self.demote(DEFAULT_BITS);
                let (v2, e2) = other.demote(DEFAULT_BITS);
                Approx {
                    value: &v1 * &v2,
                    eps: v1.abs() * &e2 + v2.abs() * &e1 + &e1 * &e2,
                }
            }
        }
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        use Scalar::*;
        match other {
            Rational(y) => {
                if y.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Ok(self.mul(&Rational(y.recip())))
            }
            Surd { a, b, d } => {
                // 1/(a + b sqrt d) = (a - b sqrt d) / (a^2 - b^2 d)
                let dd = BigRational::from_integer(BigInt::from(*d));
                let den = a * a - b * b * dd;
                if den.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                let inv = Surd {
                    a: a / &den,
                    b: -(b / &den),
                    d: *d,
                };
                Ok(self.mul(&inv))
            }
            Approx { value, eps } => {
                if value.abs() <= *eps {
                    return Err(Error::DivisionByZero);
                }
                let (v1, e1) = self.demote(DEFAULT_BITS);
                let q = &v1 / value;
                let eps_out = (&e1 + q.abs() * eps) / (value.abs() - eps);
                Ok(Approx {
                    value: q,
                    eps: eps_out,
                })
            }
        }
    }

    /// Exact sign for exact variants.
    fn sign_exact(&self) -> Option<Ordering> {
        match self {
            Scalar::Rational(r) => Some(r.cmp(&BigRational::zero())),
            Scalar::Surd { a, b, d } => Some(surd_sign(a, b, *d)),
            Scalar::Approx { .. } => None,
        }
    }

    pub fn cmp_scalar(&self, other: &Scalar) -> Cmp {
        use Scalar::*;
        match (self, other) {
            (Approx { .. }, _) | (_, Approx { .. }) => {
                let (v1, e1) = self.demote(DEFAULT_BITS);
                let (v2, e2) = other.demote(DEFAULT_BITS);
                let diff = v1 - v2;
                let tol = e1 + e2;
                if diff.abs() <= tol {
                    Cmp::Indeterminate
                } else if diff.is_negative() {
                    Cmp::Less
                } else {
                    Cmp::Greater
                }
            }
            (Surd { d, .. }, Surd { d: d2, .. }) if d != d2 => {
                Cmp::from_ordering(cross_field_sign(self, other))
            }
            _ => Cmp::from_ordering(self.sub(other).sign_exact().expect("exact same-field diff")),
        }
    }

    /// Total order on exact scalars; errors on approximate operands whose
    /// gap is within epsilon.
    pub fn cmp_exact(&self, other: &Scalar) -> Result<Ordering> {
        match self.cmp_scalar(other) {
            Cmp::Less => Ok(Ordering::Less),
            Cmp::Equal => Ok(Ordering::Equal),
            Cmp::Greater => Ok(Ordering::Greater),
            Cmp::Indeterminate => Err(Error::ApproxIndeterminate(format!(
                "cannot order {} and {}",
                self.render(),
                other.render()
            ))),
        }
    }

    pub fn eq_exact(&self, other: &Scalar) -> bool {
        self.cmp_scalar(other) == Cmp::Equal
    }

    pub fn floor(&self) -> Result<BigInt> {
        match self {
            Scalar::Rational(r) => Ok(r.floor().to_integer()),
            Scalar::Surd { .. } => {
                // estimate, then verify exactly against integer neighbours
                let (v, _) = self.to_rational_enclosure(DEFAULT_BITS);
                let mut n = v.floor().to_integer();
                loop {
                    let lo = Scalar::from_bigint(n.clone());
                    let hi = Scalar::from_bigint(&n + 1);
                    match (self.cmp_scalar(&lo), self.cmp_scalar(&hi)) {
                        (Cmp::Less, _) => n -= 1,
                        (_, Cmp::Greater) | (_, Cmp::Equal) => n += 1,
                        _ => return Ok(n),
                    }
                }
            }
            Scalar::Approx { value, eps } => {
                let fl = value.floor();
                let frac = value - &fl;
                if &frac <= eps || frac >= BigRational::one() - eps {
                    return Err(Error::IndeterminateFloor);
                }
                Ok(fl.to_integer())
            }
        }
    }

    /// Fractional part a - floor(a), in [0,1[.
    pub fn frac(&self) -> Result<Scalar> {
        let fl = self.floor()?;
        Ok(self.sub(&Scalar::from_bigint(fl)))
    }

    /// Alias for `frac`: reduction mod 1.
    pub fn mod1(&self) -> Result<Scalar> {
        self.frac()
    }

    pub fn abs(&self) -> Scalar {
        match self.sign_exact() {
            Some(Ordering::Less) => self.neg(),
            Some(_) => self.clone(),
            None => match self {
                Scalar::Approx { value, eps } => Scalar::Approx {
                    value: value.abs(),
                    eps: eps.clone(),
                },
                _ => unreachable!(),
            },
        }
    }

    /// Canonical text form: "p/q", "(a+b*sqrt(d))/c", or a decimal.
    pub fn render(&self) -> String {
        match self {
            Scalar::Rational(r) => format!("{}/{}", r.numer(), r.denom()),
            Scalar::Surd { a, b, d } => {
                let c = a.denom().lcm(b.denom());
                let na = a.numer() * (&c / a.denom());
                let nb = b.numer() * (&c / b.denom());
                if nb.is_negative() {
                    format!("({}-{}*sqrt({}))/{}", na, -nb, d, c)
                } else {
                    format!("({}+{}*sqrt({}))/{}", na, nb, d, c)
                }
            }
            Scalar::Approx { value, .. } => render_decimal(value, 40),
        }
    }
}

/// Exact sign of a + b*sqrt(d) with d squarefree >= 2.
fn surd_sign(a: &BigRational, b: &BigRational, d: u64) -> Ordering {
    let za = a.cmp(&BigRational::zero());
    let zb = b.cmp(&BigRational::zero());
    match (za, zb) {
        (Ordering::Equal, _) => zb,
        (_, Ordering::Equal) => za,
        (x, y) if x == y => x,
        _ => {
            // opposite signs: compare a^2 against b^2 d
            let lhs = a * a;
            let rhs = b * b * BigRational::from_integer(BigInt::from(d));
            match lhs.cmp(&rhs) {
                Ordering::Greater => za,
                Ordering::Less => zb,
                // a^2 = b^2 d would make sqrt(d) rational
                Ordering::Equal => unreachable!("squarefree d cannot satisfy a^2 = b^2 d"),
            }
        }
    }
}

/// Sign of the difference of two exact surds over distinct fields; the
/// difference is never zero, so escalating precision terminates.
fn cross_field_sign(x: &Scalar, y: &Scalar) -> Ordering {
    let mut bits = DEFAULT_BITS;
    loop {
        let (v1, e1) = x.to_rational_enclosure(bits);
        let (v2, e2) = y.to_rational_enclosure(bits);
        let diff = v1 - v2;
        if diff.abs() > e1 + e2 {
            return diff.cmp(&BigRational::zero());
        }
        bits *= 2;
        assert!(bits <= 1 << 16, "cross-field comparison failed to separate");
    }
}

/// Decimal rendering of a rational, up to `digits` fractional digits,
/// trailing zeros trimmed (at least one kept).
pub fn render_decimal(r: &BigRational, digits: usize) -> String {
    let neg = r.is_negative();
    let v = r.abs();
    let int = v.floor().to_integer();
    let mut rem = (&v - BigRational::from_integer(int.clone())) * BigRational::from_integer(BigInt::from(10u32).pow(digits as u32));
    let frac_int = rem.floor().to_integer();
    rem -= BigRational::from_integer(frac_int.clone());
    let mut frac = format!("{:0>width$}", frac_int, width = digits);
    while frac.len() > 1 && frac.ends_with('0') {
        frac.pop();
    }
    format!("{}{}.{}", if neg { "-" } else { "" }, int, frac)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Key wrapper giving exact scalars a total order for use in ordered maps.
/// Panics on indeterminate comparisons, so only exact values may be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactKey(pub Scalar);

impl Eq for ExactKey {}

impl PartialOrd for ExactKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .cmp_exact(&other.0)
            .expect("ExactKey holds exact scalars")
    }
}

// serde: scalars serialize as their canonical rendering
impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl ToPrimitive for Scalar {
    fn to_i64(&self) -> Option<i64> {
        None
    }
    fn to_u64(&self) -> Option<u64> {
        None
    }
    fn to_f64(&self) -> Option<f64> {
        Some(Scalar::to_f64(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt2_minus_1() -> Scalar {
        Scalar::sqrt_int(2).unwrap().sub(&Scalar::one())
    }

    #[test]
    fn floor_of_sqrt2_is_one() {
        assert_eq!(Scalar::sqrt_int(2).unwrap().floor().unwrap(), BigInt::from(1));
    }

    #[test]
    fn mod1_of_five_fourths() {
        let x = Scalar::ratio(5, 4).unwrap();
        assert!(x.mod1().unwrap().eq_exact(&Scalar::ratio(1, 4).unwrap()));
    }

    #[test]
    fn mod1_of_two_thirds_plus_alpha() {
        // 2/3 + (sqrt(2)-1) = sqrt(2) - 1/3 > 1, reduces to sqrt(2) - 4/3
        let v = Scalar::ratio(2, 3).unwrap().add(&sqrt2_minus_1());
        let m = v.mod1().unwrap();
        let expected = Scalar::sqrt_int(2).unwrap().sub(&Scalar::ratio(4, 3).unwrap());
        assert!(m.eq_exact(&expected));
        assert!((m.to_f64() - 0.080880).abs() < 1e-6);
    }

    #[test]
    fn surd_compares_exactly_against_rational() {
        assert_eq!(sqrt2_minus_1().cmp_scalar(&Scalar::ratio(1, 2).unwrap()), Cmp::Less);
    }

    #[test]
    fn unreduced_rational_compares_equal() {
        let a = Scalar::ratio(2, 4).unwrap();
        assert_eq!(a.cmp_scalar(&Scalar::ratio(1, 2).unwrap()), Cmp::Equal);
    }

    #[test]
    fn approx_within_epsilon_is_indeterminate() {
        let eps = default_epsilon();
        let half = BigRational::new(1.into(), 2.into());
        let shift = BigRational::new(1.into(), BigInt::from(10u32).pow(31));
        let a = Scalar::approx(half.clone(), eps.clone()).unwrap();
        let b = Scalar::approx(half + shift, eps).unwrap();
        assert_eq!(a.cmp_scalar(&b), Cmp::Indeterminate);
    }

    #[test]
    fn cross_field_surds_are_ordered() {
        let s2 = Scalar::sqrt_int(2).unwrap();
        let s3 = Scalar::sqrt_int(3).unwrap();
        assert_eq!(s2.cmp_scalar(&s3), Cmp::Less);
        assert_eq!(s3.cmp_scalar(&s2), Cmp::Greater);
    }

    #[test]
    fn mixed_field_arithmetic_demotes_to_approx() {
        let v = Scalar::sqrt_int(2).unwrap().add(&Scalar::sqrt_int(3).unwrap());
        assert!(!v.is_exact());
    }

    #[test]
    fn surd_floor_handles_negative_values() {
        // -(sqrt(2)) floors to -2
        let v = Scalar::sqrt_int(2).unwrap().neg();
        assert_eq!(v.floor().unwrap(), BigInt::from(-2));
    }

    #[test]
    fn render_forms() {
        assert_eq!(Scalar::ratio(1, 3).unwrap().render(), "1/3");
        assert_eq!(sqrt2_minus_1().render(), "(-1+1*sqrt(2))/1");
    }
}
