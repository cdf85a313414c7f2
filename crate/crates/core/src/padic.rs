//! Finite-precision p-adic scalars and vectors.
//!
//! A [`PAdic`] is stored as a valuation plus a window of `N` base-p digits,
//! least significant first. The stored digits are taken at face value: a
//! `PAdic` is the finite sum `sum digits[i] * p^(v + i)`, and every arithmetic
//! result is computed exactly and then truncated to the `N` lowest significant
//! digits (high-order carries beyond the window are dropped). Zero is a
//! distinguished value and is exact.
//!
//! Text grammar (digits in `0-9a-z`, so `p <= 36`):
//!
//! ```text
//! literal  := ["-"] int-part ["." frac-part]
//! int-part := digits at positions 0, 1, 2, ...   (lowest power first)
//! frac-part:= digits at positions -1, -2, ...    (nearest the point first)
//! ```
//!
//! so `"01"` is `p`, `".1"` is `1/p` and `"1.01"` is `1 + p^-2`. A leading `-`
//! negates within the window. The canonical form printed by [`PAdic::format`]
//! has no redundant zeros; zero prints as `"0"`.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 16;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PAdic {
    p: u32,
    prec: u32,
    // None for zero
    val: Option<i32>,
    // len == prec when nonzero, digits[0] != 0
    digits: Vec<u8>,
}

/// Exact element `m * p^e` of `Z[1/p]`, used for carry-exact arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Exact {
    pub p: u32,
    pub m: BigInt,
    pub e: i32,
}

impl Exact {
    pub fn zero(p: u32) -> Self {
        Exact { p, m: BigInt::zero(), e: 0 }
    }

    pub fn from_i64(p: u32, n: i64) -> Self {
        Exact { p, m: BigInt::from(n), e: 0 }
    }

    fn pow(p: u32, k: u32) -> BigInt {
        num_traits::pow(BigInt::from(p), k as usize)
    }

    pub fn align(&self, e: i32) -> BigInt {
        debug_assert!(e <= self.e);
        &self.m * Self::pow(self.p, (self.e - e) as u32)
    }

    pub fn add(&self, o: &Exact) -> Exact {
        let e = self.e.min(o.e);
        Exact { p: self.p, m: self.align(e) + o.align(e), e }
    }

    pub fn sub(&self, o: &Exact) -> Exact {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Exact {
        Exact { p: self.p, m: -&self.m, e: self.e }
    }

    pub fn mul(&self, o: &Exact) -> Exact {
        Exact { p: self.p, m: &self.m * &o.m, e: self.e + o.e }
    }

    pub fn valuation(&self) -> Option<i32> {
        if self.m.is_zero() {
            return None;
        }
        let pb = BigInt::from(self.p);
        let mut m = self.m.clone();
        let mut v = self.e;
        loop {
            let (q, r) = m.div_rem(&pb);
            if !r.is_zero() {
                return Some(v);
            }
            m = q;
            v += 1;
        }
    }

    /// Base-p digits at positions `lo..hi` of the p-adic expansion.
    pub fn digits(&self, lo: i32, hi: i32) -> Vec<u8> {
        if hi <= lo {
            return Vec::new();
        }
        let mut out = vec![0u8; (hi - lo) as usize];
        if self.m.is_zero() || hi <= self.e {
            return out;
        }
        let modulus = Self::pow(self.p, (hi - self.e) as u32);
        let mut r = self.m.mod_floor(&modulus);
        let pb = BigInt::from(self.p);
        let mut pos = self.e;
        while pos < hi && !r.is_zero() {
            let (q, d) = r.div_rem(&pb);
            if pos >= lo {
                out[(pos - lo) as usize] = d.to_u8().expect("digit fits");
            }
            r = q;
            pos += 1;
        }
        out
    }

    pub fn to_padic(&self, prec: u32) -> PAdic {
        match self.valuation() {
            None => PAdic::zero(self.p, prec),
            Some(v) => {
                let digits = self.digits(v, v + prec as i32);
                PAdic { p: self.p, prec, val: Some(v), digits }
            }
        }
    }
}

impl PAdic {
    pub fn zero(p: u32, prec: u32) -> Self {
        PAdic { p, prec, val: None, digits: Vec::new() }
    }

    pub fn one(p: u32, prec: u32) -> Self {
        Self::from_i64(1, p, prec)
    }

    pub fn from_i64(n: i64, p: u32, prec: u32) -> Self {
        Exact::from_i64(p, n).to_padic(prec)
    }

    /// `p^k`, exact.
    pub fn p_power(k: i32, p: u32, prec: u32) -> Self {
        let mut digits = vec![0u8; prec as usize];
        digits[0] = 1;
        PAdic { p, prec, val: Some(k), digits }
    }

    /// Builds `sum digits[i] p^(low + i)`, truncated to `prec` significant digits.
    pub fn from_digits(p: u32, prec: u32, low: i32, digits: &[u8]) -> Result<Self> {
        if let Some(&bad) = digits.iter().find(|&&d| d as u32 >= p) {
            return Err(Error::MalformedLiteral(format!("digit {bad} is not below p={p}")));
        }
        let Some(first) = digits.iter().position(|&d| d != 0) else {
            return Ok(Self::zero(p, prec));
        };
        let mut window: Vec<u8> = digits[first..].iter().copied().take(prec as usize).collect();
        window.resize(prec as usize, 0);
        Ok(PAdic { p, prec, val: Some(low + first as i32), digits: window })
    }

    pub(crate) fn exact(&self) -> Exact {
        match self.val {
            None => Exact::zero(self.p),
            Some(v) => {
                let m = self
                    .digits
                    .iter()
                    .rev()
                    .fold(BigUint::zero(), |acc, &d| acc * self.p + d);
                Exact { p: self.p, m: BigInt::from_biguint(Sign::Plus, m), e: v }
            }
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    pub fn valuation(&self) -> Option<i32> {
        self.val
    }

    /// The stored digit window (empty for zero).
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// One past the highest known position; `None` for the exact zero.
    pub fn abs_precision(&self) -> Option<i32> {
        self.val.map(|v| v + self.prec as i32)
    }

    /// Digit at position `pos`; `None` if `pos` is beyond the window.
    pub fn digit(&self, pos: i32) -> Option<u8> {
        match self.val {
            None => Some(0),
            Some(v) if pos < v => Some(0),
            Some(v) => self.digits.get((pos - v) as usize).copied(),
        }
    }

    /// Digits at positions `lo..hi`, or an error if the window does not reach `hi`.
    pub fn digits_in(&self, lo: i32, hi: i32) -> Result<Vec<u8>> {
        (lo..hi)
            .map(|pos| {
                self.digit(pos).ok_or_else(|| {
                    Error::InsufficientPrecision(format!("digit at position {pos} of {self} is beyond the window"))
                })
            })
            .collect()
    }

    pub fn norm(&self) -> f64 {
        match self.val {
            None => 0.0,
            Some(v) => (self.p as f64).powi(-v),
        }
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        self.exact().to_padic(prec)
    }

    fn check(&self, o: &PAdic) -> Result<()> {
        if self.p != o.p {
            return Err(Error::PrimeMismatch(self.p, o.p));
        }
        Ok(())
    }

    pub fn add(&self, o: &PAdic) -> Result<PAdic> {
        self.check(o)?;
        Ok(self.settle_sum(self.exact().add(&o.exact()), o))
    }

    pub fn sub(&self, o: &PAdic) -> Result<PAdic> {
        self.check(o)?;
        Ok(self.settle_sum(self.exact().sub(&o.exact()), o))
    }

    // A sum is only known below the smaller absolute window of its (inexact) operands;
    // if it cancels beyond that it is reported as zero.
    fn settle_sum(&self, sum: Exact, o: &PAdic) -> PAdic {
        let prec = self.prec.min(o.prec);
        let known = [self.abs_precision(), o.abs_precision()].into_iter().flatten().min();
        match (sum.valuation(), known) {
            (Some(v), Some(a)) if v >= a => PAdic::zero(self.p, prec),
            _ => sum.to_padic(prec),
        }
    }

    pub fn neg(&self) -> PAdic {
        self.exact().neg().to_padic(self.prec)
    }

    pub fn mul(&self, o: &PAdic) -> Result<PAdic> {
        self.check(o)?;
        Ok(self.exact().mul(&o.exact()).to_padic(self.prec.min(o.prec)))
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, k: i32) -> PAdic {
        let mut out = self.clone();
        if let Some(v) = out.val.as_mut() {
            *v += k;
        }
        out
    }

    /// Inverse of a unit (norm 1) to the full window.
    pub fn invert_unit(&self) -> Result<PAdic> {
        if self.val != Some(0) {
            return Err(Error::NotAUnit);
        }
        let n = self.prec as usize;
        let p = self.p;
        let x0_inv = crate::fp::inv(self.digits[0] as u32, p).ok_or(Error::NotAUnit)?;
        // Digit-wise long division of 1 by x: residual r, quotient y.
        let mut r = vec![0u32; n];
        r[0] = 1;
        let mut y = vec![0u8; n];
        for i in 0..n {
            let yi = (r[i] * x0_inv) % p;
            y[i] = yi as u8;
            if yi == 0 {
                continue;
            }
            // r -= yi * x * p^i  (mod p^n)
            let mut borrow = 0i64;
            for j in i..n {
                let prod = yi as i64 * self.digits[j - i] as i64 + borrow;
                let mut cur = r[j] as i64 - prod;
                borrow = 0;
                if cur < 0 {
                    let k = (-cur + p as i64 - 1) / p as i64;
                    cur += k * p as i64;
                    borrow = k;
                }
                r[j] = cur as u32;
            }
        }
        PAdic::from_digits(p, self.prec, 0, &y)
    }

    /// The additive character `chi(x) = exp(2 pi i {x}_p)`.
    pub fn character(&self) -> UnitComplex {
        let p = self.p;
        let v = match self.val {
            Some(v) if v < 0 => v,
            _ => return UnitComplex::one(p),
        };
        let k = (-v) as u32;
        // fractional digits are positions v..-1, truncated to the window
        let mut num: BigUint = BigUint::zero();
        for pos in (v..0).rev() {
            let d = self.digit(pos).unwrap_or(0);
            num = num * p + d;
        }
        UnitComplex::new(p, num, k)
    }

    pub fn parse(text: &str, p: u32, prec: u32) -> Result<PAdic> {
        if !(2..=36).contains(&p) {
            return Err(Error::MalformedLiteral(format!("unsupported prime {p} for text literals")));
        }
        let (negate, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        if body.is_empty() || body == "." {
            return Err(Error::MalformedLiteral("empty literal".into()));
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((a, b)) => (a, b),
            None => (body, ""),
        };
        let parse_digit = |c: char| -> Result<u8> {
            let d = c
                .to_digit(36)
                .ok_or_else(|| Error::MalformedLiteral(format!("unexpected character {c:?}")))?;
            if d >= p {
                return Err(Error::MalformedLiteral(format!("digit {c:?} is not below p={p}")));
            }
            Ok(d as u8)
        };
        let int_digits: Vec<u8> = int_part.chars().map(parse_digit).collect::<Result<_>>()?;
        let frac_digits: Vec<u8> = frac_part.chars().map(parse_digit).collect::<Result<_>>()?;
        // lowest position first
        let low = -(frac_digits.len() as i32);
        let all: Vec<u8> = frac_digits.iter().rev().chain(int_digits.iter()).copied().collect();
        let x = PAdic::from_digits(p, prec, low, &all)?;
        Ok(if negate { x.neg() } else { x })
    }

    pub fn format(&self) -> String {
        let Some(v) = self.val else {
            return "0".to_string();
        };
        let top = v + self.digits.iter().rposition(|&d| d != 0).unwrap_or(0) as i32;
        let ch = |pos: i32| std::char::from_digit(self.digit(pos).unwrap_or(0) as u32, 36).unwrap();
        let int: String = if top >= 0 { (0..=top).map(ch).collect() } else { String::new() };
        let frac: String = if v < 0 { (v..0).rev().map(ch).collect() } else { String::new() };
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int
        } else {
            format!("{int}.{frac}")
        }
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.format())
    }
}

impl fmt::Debug for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PAdic(p={}, {})", self.p, self.format())
    }
}

#[derive(Serialize, Deserialize)]
struct PAdicJson {
    p: u32,
    v: Option<i32>,
    digits: Vec<u8>,
}

impl Serialize for PAdic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PAdicJson { p: self.p, v: self.val, digits: self.digits.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PAdic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PAdicJson::deserialize(d)?;
        let prec = (j.digits.len() as u32).max(if j.v.is_none() { DEFAULT_PRECISION } else { 1 });
        match j.v {
            None => Ok(PAdic::zero(j.p, prec)),
            Some(v) => {
                if j.digits.first() == Some(&0) {
                    return Err(serde::de::Error::custom("leading digit must be nonzero"));
                }
                PAdic::from_digits(j.p, prec, v, &j.digits).map_err(serde::de::Error::custom)
            }
        }
    }
}

/// A point of `Q_p^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PAdicVec(pub Vec<PAdic>);

impl PAdicVec {
    pub fn new(comps: Vec<PAdic>) -> Result<Self> {
        if let Some(first) = comps.first() {
            for c in &comps {
                c.check(first)?;
            }
        }
        Ok(PAdicVec(comps))
    }

    pub fn zero(p: u32, d: usize, prec: u32) -> Self {
        PAdicVec(vec![PAdic::zero(p, prec); d])
    }

    pub fn from_i64s(xs: &[i64], p: u32, prec: u32) -> Self {
        PAdicVec(xs.iter().map(|&x| PAdic::from_i64(x, p, prec)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn p(&self) -> u32 {
        self.0[0].p
    }

    /// `min_l v(x_l)`; `None` for the zero vector.
    pub fn valuation(&self) -> Option<i32> {
        self.0.iter().filter_map(PAdic::valuation).min()
    }

    /// `max_l |x_l|_p`.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(PAdic::norm).fold(0.0, f64::max)
    }

    /// Lowest abs precision over nonzero components (`None` if all are exact zeros).
    pub fn abs_precision(&self) -> Option<i32> {
        self.0.iter().filter_map(PAdic::abs_precision).min()
    }

    pub fn add(&self, o: &PAdicVec) -> Result<PAdicVec> {
        if self.dim() != o.dim() {
            return Err(Error::DimensionMismatch(self.dim(), o.dim()));
        }
        Ok(PAdicVec(self.0.iter().zip(&o.0).map(|(a, b)| a.add(b)).collect::<Result<_>>()?))
    }

    pub fn sub(&self, o: &PAdicVec) -> Result<PAdicVec> {
        if self.dim() != o.dim() {
            return Err(Error::DimensionMismatch(self.dim(), o.dim()));
        }
        Ok(PAdicVec(self.0.iter().zip(&o.0).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?))
    }

    pub fn scale(&self, c: &PAdic) -> Result<PAdicVec> {
        Ok(PAdicVec(self.0.iter().map(|a| a.mul(c)).collect::<Result<_>>()?))
    }
}

/// `exp(2 pi i num / p^exp)` with the phase kept as an exact reduced fraction in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnitComplex {
    p: u32,
    num: BigUint,
    exp: u32,
}

impl UnitComplex {
    pub fn one(p: u32) -> Self {
        UnitComplex { p, num: BigUint::zero(), exp: 0 }
    }

    pub fn new(p: u32, num: BigUint, exp: u32) -> Self {
        let modulus = num_traits::pow(BigUint::from(p), exp as usize);
        let mut u = UnitComplex { p, num: num % modulus, exp };
        u.reduce();
        u
    }

    fn reduce(&mut self) {
        let pb = BigUint::from(self.p);
        while self.exp > 0 && (&self.num % &pb).is_zero() {
            self.num /= &pb;
            self.exp -= 1;
        }
        if self.num.is_zero() {
            self.exp = 0;
        }
    }

    /// Phase as `(numerator, exponent)`, meaning `numerator / p^exponent`.
    pub fn phase(&self) -> (&BigUint, u32) {
        (&self.num, self.exp)
    }

    pub fn mul(&self, o: &UnitComplex) -> UnitComplex {
        let e = self.exp.max(o.exp);
        let pb = BigUint::from(self.p);
        let a = &self.num * num_traits::pow(pb.clone(), (e - self.exp) as usize);
        let b = &o.num * num_traits::pow(pb, (e - o.exp) as usize);
        UnitComplex::new(self.p, a + b, e)
    }

    pub fn is_one(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.num.is_zero() {
            return Complex64::one();
        }
        let den = num_traits::pow(BigUint::from(self.p), self.exp as usize);
        let num = self.num.to_f64().unwrap_or(0.0);
        let den = den.to_f64().unwrap_or(f64::INFINITY);
        let theta = 2.0 * std::f64::consts::PI * (num / den);
        Complex64::from_polar(1.0, theta)
    }
}
