//! Exact dyadic Gaussian numbers `(re + i·im) / 2^d`.
//!
//! Every amplitude produced by the walk is a Gaussian integer over a power of
//! two: the coin phases are `(1 ± i)/4` and the coin matrices have entries in
//! `{0, ±1}`. Values are kept fully reduced, so structural equality is value
//! equality.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::FloatOverflow;

/// Power of `i`, reduced mod 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct QuarterTurns(u8);

impl QuarterTurns {
    pub const ZERO: QuarterTurns = QuarterTurns(0);

    pub fn new(q: i64) -> Self {
        QuarterTurns(q.rem_euclid(4) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl Add for QuarterTurns {
    type Output = QuarterTurns;

    fn add(self, rhs: QuarterTurns) -> QuarterTurns {
        QuarterTurns((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Amplitude {
    re: BigInt,
    im: BigInt,
    log2_den: u32,
}

impl Amplitude {
    /// Builds `(re + i·im) / 2^log2_den` and reduces it.
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>, log2_den: u32) -> Self {
        let mut a = Amplitude { re: re.into(), im: im.into(), log2_den };
        a.reduce();
        a
    }

    pub fn gaussian(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        Self::new(re, im, 0)
    }

    pub fn zero() -> Self {
        Amplitude { re: BigInt::zero(), im: BigInt::zero(), log2_den: 0 }
    }

    pub fn one() -> Self {
        Self::gaussian(1, 0)
    }

    pub fn i() -> Self {
        Self::gaussian(0, 1)
    }

    pub fn re(&self) -> &BigInt {
        &self.re
    }

    pub fn im(&self) -> &BigInt {
        &self.im
    }

    pub fn log2_den(&self) -> u32 {
        self.log2_den
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// True when the value has no imaginary part.
    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Canonical form: `d = 0` or at least one numerator is odd.
    pub fn is_canonical(&self) -> bool {
        self.log2_den == 0 || self.re.bit(0) || self.im.bit(0)
    }

    pub fn conj(&self) -> Self {
        Amplitude { re: self.re.clone(), im: -&self.im, log2_den: self.log2_den }
    }

    /// Multiply by `i^q`.
    pub fn rotate(&self, q: QuarterTurns) -> Self {
        let (re, im) = match q.0 {
            0 => (self.re.clone(), self.im.clone()),
            1 => (-&self.im, self.re.clone()),
            2 => (-&self.re, -&self.im),
            _ => (self.im.clone(), -&self.re),
        };
        Amplitude { re, im, log2_den: self.log2_den }
    }

    /// `|z|²` as a real amplitude.
    pub fn norm_sqr(&self) -> Self {
        Self::new(&self.re * &self.re + &self.im * &self.im, BigInt::zero(), 2 * self.log2_den)
    }

    /// Multiply by `2^-k`.
    pub fn div_pow2(&self, k: u32) -> Self {
        Self::new(self.re.clone(), self.im.clone(), self.log2_den + k)
    }

    /// Multiply by `2^k`.
    pub fn mul_pow2(&self, k: u32) -> Self {
        let drop = k.min(self.log2_den);
        let extra = k - drop;
        Self::new(&self.re << extra, &self.im << extra, self.log2_den - drop)
    }

    /// Integer power.
    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Amplitude::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Largest numerator size in bits.
    pub fn bits(&self) -> u64 {
        self.re.bits().max(self.im.bits())
    }

    /// Nearest double-precision pair `(re, im)`.
    pub fn to_f64(&self) -> Result<(f64, f64), FloatOverflow> {
        Ok((dyadic_to_f64(&self.re, self.log2_den)?, dyadic_to_f64(&self.im, self.log2_den)?))
    }

    fn reduce(&mut self) {
        if self.re.is_zero() && self.im.is_zero() {
            self.log2_den = 0;
            return;
        }
        let tz = |v: &BigInt| v.trailing_zeros().unwrap_or(u64::MAX);
        let k = tz(&self.re).min(tz(&self.im)).min(self.log2_den as u64) as u32;
        if k > 0 {
            self.re >>= k;
            self.im >>= k;
            self.log2_den -= k;
        }
    }

    fn aligned(&self, other: &Amplitude) -> (BigInt, BigInt, BigInt, BigInt, u32) {
        let d = self.log2_den.max(other.log2_den);
        let sa = d - self.log2_den;
        let sb = d - other.log2_den;
        (&self.re << sa, &self.im << sa, &other.re << sb, &other.im << sb, d)
    }
}

fn dyadic_to_f64(num: &BigInt, log2_den: u32) -> Result<f64, FloatOverflow> {
    if num.is_zero() {
        return Ok(0.0);
    }
    let mag = num.magnitude();
    let bits = mag.bits();
    // Keep 64 leading bits plus a sticky bit so the u64 -> f64 conversion
    // rounds to nearest exactly once.
    let (mantissa, shift) = if bits <= 64 {
        (mag.to_u64().expect("fits in 64 bits"), 0i64)
    } else {
        let shift = bits - 63;
        let top = (mag >> shift).to_u64().expect("63 bits");
        let sticky = mag.trailing_zeros().map_or(0, |tz| u64::from(tz < shift));
        ((top << 1) | sticky, shift as i64 - 1)
    };
    let exponent = shift - log2_den as i64;
    let approx = bits as i64 - log2_den as i64;
    if approx > 1025 {
        return Err(FloatOverflow { exponent: approx });
    }
    let mut v = mantissa as f64;
    // Scale in chunks that cannot overflow the intermediate.
    let mut e = exponent;
    while e != 0 {
        let step = e.clamp(-1000, 1000);
        v *= 2f64.powi(step as i32);
        e -= step;
    }
    if v.is_infinite() {
        return Err(FloatOverflow { exponent: approx });
    }
    Ok(if num.sign() == Sign::Minus { -v } else { v })
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude::zero()
    }
}

impl fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Amplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.im.is_negative() { '-' } else { '+' };
        write!(f, "({} {} {}i)", self.re, sign, self.im.abs())?;
        if self.log2_den > 0 {
            write!(f, "/2^{}", self.log2_den)?;
        }
        Ok(())
    }
}

impl From<i64> for Amplitude {
    fn from(v: i64) -> Self {
        Amplitude::gaussian(v, 0)
    }
}

impl From<BigInt> for Amplitude {
    fn from(v: BigInt) -> Self {
        Amplitude::gaussian(v, BigInt::zero())
    }
}

impl<'a> Add<&'a Amplitude> for &'a Amplitude {
    type Output = Amplitude;

    fn add(self, rhs: &Amplitude) -> Amplitude {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        let (ar, ai, br, bi, d) = self.aligned(rhs);
        Amplitude::new(ar + br, ai + bi, d)
    }
}

impl<'a> Sub<&'a Amplitude> for &'a Amplitude {
    type Output = Amplitude;

    fn sub(self, rhs: &Amplitude) -> Amplitude {
        let (ar, ai, br, bi, d) = self.aligned(rhs);
        Amplitude::new(ar - br, ai - bi, d)
    }
}

impl<'a> Mul<&'a Amplitude> for &'a Amplitude {
    type Output = Amplitude;

    fn mul(self, rhs: &Amplitude) -> Amplitude {
        if self.is_zero() || rhs.is_zero() {
            return Amplitude::zero();
        }
        Amplitude::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
            self.log2_den + rhs.log2_den,
        )
    }
}

impl Add for Amplitude {
    type Output = Amplitude;

    fn add(self, rhs: Amplitude) -> Amplitude {
        &self + &rhs
    }
}

impl Sub for Amplitude {
    type Output = Amplitude;

    fn sub(self, rhs: Amplitude) -> Amplitude {
        &self - &rhs
    }
}

impl Mul for Amplitude {
    type Output = Amplitude;

    fn mul(self, rhs: Amplitude) -> Amplitude {
        &self * &rhs
    }
}

impl AddAssign<&Amplitude> for Amplitude {
    fn add_assign(&mut self, rhs: &Amplitude) {
        *self = &*self + rhs;
    }
}

impl Neg for &Amplitude {
    type Output = Amplitude;

    fn neg(self) -> Amplitude {
        Amplitude { re: -&self.re, im: -&self.im, log2_den: self.log2_den }
    }
}

impl Neg for Amplitude {
    type Output = Amplitude;

    fn neg(self) -> Amplitude {
        -&self
    }
}

impl std::iter::Sum for Amplitude {
    fn sum<I: Iterator<Item = Amplitude>>(iter: I) -> Self {
        iter.fold(Amplitude::zero(), |acc, x| &acc + &x)
    }
}

impl One for Amplitude {
    fn one() -> Self {
        Amplitude::one()
    }
}
