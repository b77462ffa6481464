//! Fixed-point helpers for the few places where exact arithmetic is not
//! enough: square roots of integers, pi, sine, and chord lengths on the
//! unit circle. Values are `BigInt`s scaled by `2^bits`.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Default working precision in fractional bits (>= the 256 bits the
/// report format promises, with headroom for rounding).
pub const DEFAULT_BITS: u64 = 320;

/// 200 decimal digits of pi.
const PI_DIGITS: &str = "31415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679821480865132823066470938446095505822317253594081284811174502841027019385211055596446229489549303819";

pub fn fx_from_rational(r: &BigRational, bits: u64) -> BigInt {
    (r.numer() << bits).div_floor(r.denom())
}

pub fn fx_to_rational(x: &BigInt, bits: u64) -> BigRational {
    BigRational::new(x.clone(), BigInt::one() << bits)
}

pub fn fx_mul(a: &BigInt, b: &BigInt, bits: u64) -> BigInt {
    (a * b) >> bits
}

/// floor(sqrt(n) * 2^bits) for a nonnegative fixed-point input.
pub fn fx_sqrt(x: &BigInt, bits: u64) -> BigInt {
    assert!(x.sign() != Sign::Minus, "fx_sqrt of negative value");
    (x << bits).sqrt()
}

/// sqrt of a plain integer as fixed point.
pub fn fx_sqrt_u64(n: u64, bits: u64) -> BigInt {
    fx_sqrt(&(BigInt::from(n) << bits), bits)
}

pub fn fx_pi(bits: u64) -> BigInt {
    assert!(bits <= 640, "pi constant holds 200 digits (~660 bits)");
    let digits: BigInt = PI_DIGITS.parse().unwrap();
    let scale = BigInt::from(10u32).pow((PI_DIGITS.len() - 1) as u32);
    (digits << bits) / scale
}

/// sin of a fixed-point value, |x| <= pi. Plain Taylor series; terms decay
/// fast enough in this range.
pub fn fx_sin(x: &BigInt, bits: u64) -> BigInt {
    let x2 = fx_mul(x, x, bits);
    let mut term = x.clone();
    let mut sum = x.clone();
    let mut n: u64 = 1;
    while !term.is_zero() {
        term = fx_mul(&term, &x2, bits) / BigInt::from((2 * n) * (2 * n + 1));
        term = -term;
        sum += &term;
        n += 1;
        if n > 200 {
            break;
        }
    }
    sum
}

/// |e^{2 pi i a} - e^{2 pi i b}| given the angle difference t = (a - b) mod 1,
/// as a rational approximation accurate to ~2^-(bits-8).
pub fn chord_from_angle_delta(t: &BigRational, bits: u64) -> BigRational {
    let one = BigRational::one();
    let mut t = t.clone();
    // reduce to [0, 1/2]
    t -= t.floor();
    if t > &one / BigRational::from_integer(2.into()) {
        t = one - t;
    }
    let pi = fx_pi(bits);
    let arg = fx_mul(&pi, &fx_from_rational(&t, bits), bits);
    let s = fx_sin(&arg, bits);
    fx_to_rational(&(s << 1u8), bits)
}

/// sqrt of a nonnegative rational, accurate to ~2^-(bits-4).
pub fn sqrt_rational(r: &BigRational, bits: u64) -> BigRational {
    assert!(!r.is_negative());
    fx_to_rational(&fx_sqrt(&fx_from_rational(r, bits), bits), bits)
}

/// Crude f64 view of a big rational (display only).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let a = r.numer().abs();
    let b = r.denom().clone();
    let shift = 64i64 + (b.bits() as i64) - (a.bits() as i64);
    let q = if shift >= 0 {
        (a << (shift as u64)).div_floor(&b)
    } else {
        (a >> ((-shift) as u64)).div_floor(&b)
    };
    let mut v = 0.0f64;
    for d in q.to_u64_digits().1.iter().rev() {
        v = v * (u64::MAX as f64 + 1.0) + *d as f64;
    }
    v *= 2f64.powi(-shift as i32);
    if neg {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn pi_matches_f64() {
        let pi = fx_to_rational(&fx_pi(DEFAULT_BITS), DEFAULT_BITS);
        assert!((ratio_to_f64(&pi) - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn sqrt2_squared_is_two() {
        let s = sqrt_rational(&BigRational::from_integer(2.into()), DEFAULT_BITS);
        let err = (&s * &s - BigRational::from_integer(2.into())).abs();
        assert!(err < BigRational::new(1.into(), BigInt::one() << 300));
    }

    #[test]
    fn chord_of_half_turn_is_two() {
        let t = BigRational::new(1.into(), 2.into());
        let c = chord_from_angle_delta(&t, DEFAULT_BITS);
        assert!((ratio_to_f64(&c) - 2.0).abs() < 1e-30);
    }

    #[test]
    fn chord_matches_float_formula() {
        let t = BigRational::from_f64(0.137).unwrap();
        let c = ratio_to_f64(&chord_from_angle_delta(&t, DEFAULT_BITS));
        let expected = 2.0 * (std::f64::consts::PI * 0.137).sin();
        assert!((c - expected).abs() < 1e-12);
    }
}
