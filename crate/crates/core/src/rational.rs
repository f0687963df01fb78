//! Exact rational arithmetic helpers.
//!
//! All geometry and step-function algebra is closed over `Rat` (arbitrary
//! precision rationals); floating point only appears at the oracle boundary,
//! where decimal values are rounded onto a configurable rational grid.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Write as _;

pub type Rat = BigRational;

/// A point in Q^n.
pub type Point = Vec<Rat>;

/// `n/d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `2^k` for possibly negative `k`.
pub fn pow2(k: i32) -> Rat {
    let one = BigInt::one();
    if k >= 0 {
        Rat::from_integer(one << k as usize)
    } else {
        Rat::new(one, BigInt::one() << (-k) as usize)
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

/// Exact conversion of a finite float (every finite f64 is rational).
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Round a float onto the grid of integer multiples of `grid` (ties away
/// from zero). This is the single place decimals enter exact arithmetic.
///
/// A float fast path handles the common case (unit-denominator-over-q grids,
/// moderate magnitudes) and defers to exact rational arithmetic whenever the
/// float-computed quotient sits close enough to a rounding boundary that its
/// representation error could flip the answer, so the result always equals
/// the exact computation.
pub fn round_to_grid(x: f64, grid: &Rat) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    if let (Some(1), Some(q)) = (grid.numer().to_u64(), grid.denom().to_u64()) {
        if x.abs() <= 1e3 && (q as f64) <= 1e12 {
            let scaled = x * q as f64;
            // Upper bound on the product's representation error, padded.
            let err = scaled.abs() * 2f64.powi(-50) + 1e-300;
            // Rounding flips only at half-integer boundaries; stay clear.
            let boundary_distance = ((scaled - scaled.floor()) - 0.5).abs();
            if boundary_distance > err {
                let n = BigInt::from(round_half_away_f64(scaled) as i128);
                return Some(Rat::new(n, BigInt::from(q)));
            }
        }
    }
    let exact = Rat::from_float(x)?;
    let scaled = &exact / grid;
    Some(round_half_away(&scaled) * grid)
}

fn round_half_away_f64(x: f64) -> f64 {
    // f64::round already rounds half away from zero.
    x.round()
}

fn round_half_away(r: &Rat) -> Rat {
    let two = BigInt::from(2);
    let (num, den) = (r.numer(), r.denom());
    let doubled = num * &two + den * num.signum();
    Rat::from_integer(doubled / (den * two))
}

/// Format as `p/q`, or just `p` for integers.
pub fn fmt_rat(r: &Rat) -> String {
    let mut s = String::new();
    write!(s, "{}", r.numer()).unwrap();
    if !r.denom().is_one() {
        write!(s, "/{}", r.denom()).unwrap();
    }
    s
}

/// Parse `p/q`, an integer, or a plain decimal like `-0.25` (kept exact).
pub fn parse_rat(text: &str) -> Result<Rat, RationalParseError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(RationalParseError::new(text, "empty string"));
    }
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| RationalParseError::new(text, "bad numerator"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| RationalParseError::new(text, "bad denominator"))?;
        if d.is_zero() {
            return Err(RationalParseError::new(text, "zero denominator"));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let i: BigInt = if int == "-" || int.is_empty() {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| RationalParseError::new(text, "bad integer part"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(RationalParseError::new(text, "bad fractional part"));
        }
        let f: BigInt = frac
            .parse()
            .map_err(|_| RationalParseError::new(text, "bad fractional part"))?;
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let magnitude = Rat::from_integer(i.abs()) + Rat::new(f, scale);
        return Ok(if sign < 0 { -magnitude } else { magnitude });
    }
    let n: BigInt = t
        .parse()
        .map_err(|_| RationalParseError::new(text, "not a rational"))?;
    Ok(Rat::from_integer(n))
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("cannot parse {text:?} as a rational: {reason}")]
pub struct RationalParseError {
    pub text: String,
    pub reason: &'static str,
}

impl RationalParseError {
    fn new(text: &str, reason: &'static str) -> Self {
        Self { text: text.to_string(), reason }
    }
}

/// Serde adapter: rationals serialize as `"p/q"` strings.
pub mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        parse_rat(&text).map_err(serde::de::Error::custom)
    }
}

/// Best rational approximation with denominator at most `max_den`, via the
/// continued fraction of `x`. Used for denominator-bounded rationality
/// detection of decimal inputs.
pub fn best_approximation(x: f64, max_den: u64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let exact = Rat::from_float(x)?;
    let mut a = exact.clone();
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (a.floor().to_integer(), BigInt::one());
    let bound = BigInt::from(max_den);
    loop {
        let frac = &a - Rat::from_integer(a.floor().to_integer());
        if frac.is_zero() {
            break;
        }
        a = frac.recip();
        let digit = a.floor().to_integer();
        let p2 = &digit * &p1 + &p0;
        let q2 = &digit * &q1 + &q0;
        if q2 > bound {
            break;
        }
        (p0, q0) = (p1, q1);
        (p1, q1) = (p2, q2);
    }
    Some(Rat::new(p1, q1))
}

/// Smallest-denominator rational strictly inside `(lo, hi)` (Stern-Brocot
/// descent). Returns `None` for an empty open interval.
pub fn simplest_in_open(lo: &Rat, hi: &Rat) -> Option<Rat> {
    if lo >= hi {
        return None;
    }
    fn go(lo: &Rat, hi: &Rat) -> Rat {
        let fl = lo.floor().to_integer();
        let next_int = Rat::from_integer(&fl + BigInt::one());
        // floor(lo)+1 > lo always holds, so it is the simplest candidate
        // whenever it lies below hi.
        if &next_int < hi {
            return next_int;
        }
        let base = Rat::from_integer(fl);
        let lo_f = lo - &base;
        let hi_f = hi - &base;
        if lo_f.is_zero() {
            // (0, h): the simplest fraction is 1/(floor(1/h)+1).
            let d = hi_f.recip().floor().to_integer() + BigInt::one();
            return base + Rat::new(BigInt::one(), d);
        }
        let sub = go(&hi_f.recip(), &lo_f.recip());
        base + sub.recip()
    }
    Some(go(lo, hi))
}
