//! The tree of balls of `Q_p^d`.
//!
//! A ball of level `L` has diameter `p^-L` and is determined by the digits of
//! its points at positions `< L`. Each coordinate stores those digits from the
//! lowest nonzero one up to position `L - 1` (least significant first), so the
//! representation is canonical and `==` is ball equality. Children have level
//! `L + 1` and are indexed by the tangent class in `F_p^d` (the digits at
//! position `L`), ordered lexicographically.
//!
//! Translation from "diameter `p^g`" statements: `L = -g`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fp::{self, FpVec};
use crate::padic::{Exact, PAdic, PAdicVec};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ball {
    p: u32,
    level: i32,
    // per coordinate: digits at positions level - len .. level, first digit nonzero
    coords: Vec<Vec<u8>>,
}

/// Element of the tangent module `F_p^d` of a ball.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TangentClass(pub FpVec);

impl Ball {
    pub fn new(p: u32, level: i32, coords: Vec<Vec<u8>>) -> Result<Ball> {
        if coords.is_empty() {
            return Err(Error::UnsupportedDimension(0, "balls need d >= 1"));
        }
        let mut out = Vec::with_capacity(coords.len());
        for c in coords {
            if let Some(&bad) = c.iter().find(|&&x| x as u32 >= p) {
                return Err(Error::MalformedLiteral(format!("digit {bad} is not below p={p}")));
            }
            let first = c.iter().position(|&x| x != 0).unwrap_or(c.len());
            out.push(c[first..].to_vec());
        }
        Ok(Ball { p, level, coords: out })
    }

    /// `Z_p^d`.
    pub fn unit(p: u32, d: usize) -> Ball {
        Ball { p, level: 0, coords: vec![Vec::new(); d] }
    }

    /// The ball of level `level` containing the origin.
    pub fn around_origin(p: u32, d: usize, level: i32) -> Ball {
        Ball { p, level, coords: vec![Vec::new(); d] }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn coord_digits(&self, i: usize) -> &[u8] {
        &self.coords[i]
    }

    pub fn diameter(&self) -> f64 {
        (self.p as f64).powi(-self.level)
    }

    /// Haar measure `p^(-L d)`.
    pub fn measure(&self) -> f64 {
        (self.p as f64).powi(-self.level * self.dim() as i32)
    }

    pub fn measure_exact(&self) -> BigRational {
        pow_rational(self.p, -(self.level as i64) * self.dim() as i64)
    }

    /// Digit of coordinate `i` at position `pos < level`.
    pub fn digit(&self, i: usize, pos: i32) -> u8 {
        debug_assert!(pos < self.level);
        let c = &self.coords[i];
        let idx = pos - (self.level - c.len() as i32);
        if idx < 0 {
            0
        } else {
            c[idx as usize]
        }
    }

    /// Lowest position carrying a nonzero center digit (or `level` if none).
    pub fn floor(&self) -> i32 {
        self.coords
            .iter()
            .map(|c| self.level - c.len() as i32)
            .min()
            .unwrap_or(self.level)
    }

    /// Tangent class of this ball inside its parent.
    pub fn class_in_parent(&self) -> FpVec {
        (0..self.dim()).map(|i| self.digit(i, self.level - 1) as u32).collect()
    }

    /// Tangent class of the child of `self` that contains `sub` (which must lie strictly inside).
    pub fn class_of(&self, sub: &Ball) -> FpVec {
        debug_assert!(sub.level > self.level);
        (0..self.dim()).map(|i| sub.digit(i, self.level) as u32).collect()
    }

    pub fn child(&self, class: &[u32]) -> Ball {
        debug_assert_eq!(class.len(), self.dim());
        let coords = self
            .coords
            .iter()
            .zip(class)
            .map(|(c, &x)| {
                let mut c = c.clone();
                if !(c.is_empty() && x == 0) {
                    c.push(x as u8);
                }
                c
            })
            .collect();
        Ball { p: self.p, level: self.level + 1, coords }
    }

    pub fn child_by_index(&self, idx: usize) -> Ball {
        self.child(&fp::class_from_index(idx, self.p, self.dim()))
    }

    pub fn children(&self) -> Vec<Ball> {
        (0..fp::class_count(self.p, self.dim())).map(|i| self.child_by_index(i)).collect()
    }

    pub fn parent(&self) -> Ball {
        self.ancestor(self.level - 1)
    }

    pub fn ancestor(&self, level: i32) -> Ball {
        debug_assert!(level <= self.level);
        let drop = (self.level - level) as usize;
        let coords = self
            .coords
            .iter()
            .map(|c| c[..c.len().saturating_sub(drop)].to_vec())
            .collect();
        Ball { p: self.p, level, coords }
    }

    /// All sub-balls at `level >= self.level`, in lexicographic path order.
    pub fn descendants(&self, level: i32) -> Vec<Ball> {
        let mut out = vec![self.clone()];
        for _ in self.level..level {
            out = out.iter().flat_map(Ball::children).collect();
        }
        out
    }

    pub fn contains(&self, other: &Ball) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }

    /// Minimal ball containing both.
    pub fn sup(&self, other: &Ball) -> Ball {
        let top = self.level.min(other.level);
        let low = self.floor().min(other.floor());
        let mut level = top;
        'scan: for pos in low..top {
            for i in 0..self.dim() {
                if self.digit(i, pos) != other.digit(i, pos) {
                    level = pos;
                    break 'scan;
                }
            }
        }
        self.ancestor(level)
    }

    /// The unique ball of level `level` containing `x`.
    pub fn from_point(x: &PAdicVec, level: i32) -> Result<Ball> {
        let p = x.p();
        let coords = x
            .0
            .iter()
            .map(|c| match c.valuation() {
                Some(v) if v < level => c.digits_in(v, level),
                _ => Ok(Vec::new()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ball { p, level, coords })
    }

    pub fn contains_point(&self, x: &PAdicVec) -> Result<bool> {
        Ok(Ball::from_point(x, self.level)? == *self)
    }

    /// The canonical center: digits at positions `>= level` all zero.
    pub fn center(&self, prec: u32) -> PAdicVec {
        PAdicVec(
            self.coords
                .iter()
                .map(|c| {
                    let prec = prec.max(c.len() as u32);
                    PAdic::from_digits(self.p, prec, self.level - c.len() as i32, c).expect("valid digits")
                })
                .collect(),
        )
    }

    /// Multiplication by `p^k`: same digits, level shifted by `k`.
    pub fn shifted(&self, k: i32) -> Ball {
        Ball { p: self.p, level: self.level + k, coords: self.coords.clone() }
    }

    /// Frozen encoding `p=<p>;d=<d>;L=<L>;c=<coord>;<coord>...`, each coordinate
    /// listing its center digits from the lowest nonzero position up to `L-1`.
    /// Digits are base-36 characters for `p <= 36` and comma-separated decimals otherwise.
    pub fn encode(&self) -> String {
        let coord = |c: &Vec<u8>| -> String {
            if self.p <= 36 {
                c.iter().map(|&x| std::char::from_digit(x as u32, 36).unwrap()).collect()
            } else {
                c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        let cs: Vec<String> = self.coords.iter().map(coord).collect();
        format!("p={};d={};L={};c={}", self.p, self.dim(), self.level, cs.join(";"))
    }

    pub fn decode(s: &str) -> Result<Ball> {
        let bad = || Error::MalformedLiteral(format!("bad ball encoding {s:?}"));
        let rest = s.strip_prefix("p=").ok_or_else(bad)?;
        let (p, rest) = rest.split_once(";d=").ok_or_else(bad)?;
        let (d, rest) = rest.split_once(";L=").ok_or_else(bad)?;
        let (l, cs) = rest.split_once(";c=").ok_or_else(bad)?;
        let p: u32 = p.parse().map_err(|_| bad())?;
        let d: usize = d.parse().map_err(|_| bad())?;
        let level: i32 = l.parse().map_err(|_| bad())?;
        let parts: Vec<&str> = cs.split(';').collect();
        if parts.len() != d {
            return Err(bad());
        }
        let coords = parts
            .iter()
            .map(|part| -> Result<Vec<u8>> {
                if part.is_empty() {
                    return Ok(Vec::new());
                }
                if p <= 36 {
                    part.chars()
                        .map(|c| c.to_digit(36).map(|x| x as u8).ok_or_else(bad))
                        .collect()
                } else {
                    part.split(',').map(|x| x.parse::<u8>().map_err(|_| bad())).collect()
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let b = Ball::new(p, level, coords)?;
        if b.encode() != s {
            return Err(bad());
        }
        Ok(b)
    }

    /// Graphviz rendering of the subtree of `self` down to `depth` levels.
    pub fn to_dot(&self, depth: u32) -> String {
        let mut out = String::from("digraph balls {\n  node [shape=box];\n");
        let mut frontier = vec![self.clone()];
        out.push_str(&format!("  \"{}\";\n", self.encode()));
        for _ in 0..depth {
            let mut next = Vec::new();
            for b in &frontier {
                for c in b.children() {
                    out.push_str(&format!("  \"{}\" -> \"{}\";\n", b.encode(), c.encode()));
                    next.push(c);
                }
            }
            frontier = next;
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Debug for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ball({})", self.encode())
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

#[derive(Serialize, Deserialize)]
struct BallJson {
    p: u32,
    d: usize,
    #[serde(rename = "L")]
    level: i32,
    c: Vec<Vec<u8>>,
}

impl Serialize for Ball {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BallJson { p: self.p, d: self.dim(), level: self.level, c: self.coords.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ball {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = BallJson::deserialize(d)?;
        if j.c.len() != j.d {
            return Err(serde::de::Error::custom(format!("ball.c has {} coordinates, expected d={}", j.c.len(), j.d)));
        }
        Ball::new(j.p, j.level, j.c).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn pow_rational(p: u32, e: i64) -> BigRational {
    let base = BigInt::from(p);
    let mag = num_traits::pow(base, e.unsigned_abs() as usize);
    if e >= 0 {
        BigRational::from_integer(mag)
    } else {
        BigRational::new(BigInt::one(), mag)
    }
}

/// `T_B(x) = (x - x_B) diam(B) mod p Z_p^d`.
pub fn tangent_class(ball: &Ball, x: &PAdicVec, x_b: &PAdicVec) -> Result<TangentClass> {
    for pt in [x, x_b] {
        if !ball.contains_point(pt)? {
            return Err(Error::NotInBall(ball.encode()));
        }
        for c in &pt.0 {
            c.digits_in(ball.level, ball.level + 1)?;
        }
    }
    let diff = x.sub(x_b)?;
    let scaled: Vec<PAdic> = diff.0.iter().map(|c| c.shift(-ball.level)).collect();
    let class = scaled
        .iter()
        .map(|c| {
            c.digit(0).map(u32::from).ok_or_else(|| {
                Error::InsufficientPrecision(format!("difference {c} does not reach position 0"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TangentClass(class))
}

/// Tangent class with the canonical center as base point: the digits of `x` at position `L`.
pub fn canonical_tangent_class(ball: &Ball, x: &PAdicVec) -> Result<TangentClass> {
    let center = ball.center(x.0.iter().map(PAdic::precision).max().unwrap_or(16));
    tangent_class(ball, x, &center)
}

/// The union of the `p - 1` children of `parent` lying on the `k1`-line through `b0`,
/// with `b0` itself removed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetS {
    pub parent: Ball,
    pub k1: FpVec,
    pub b0: Ball,
    pub members: Vec<Ball>,
}

impl PartialEq for SetS {
    fn eq(&self, other: &Self) -> bool {
        self.member_set() == other.member_set()
    }
}

impl Eq for SetS {}

impl SetS {
    pub fn member_set(&self) -> BTreeSet<Ball> {
        self.members.iter().cloned().collect()
    }

    /// `(p - 1) p^(-(L+1) d)`.
    pub fn measure(&self) -> BigRational {
        let d = self.parent.dim() as i64;
        let l = self.parent.level() as i64;
        BigRational::from_integer(BigInt::from(self.parent.p() - 1)) * pow_rational(self.parent.p(), -(l + 1) * d)
    }
}

pub fn build_set_s(parent: &Ball, k1: &[u32], b0: &Ball) -> Result<SetS> {
    let p = parent.p();
    if k1.len() != parent.dim() || k1.iter().any(|&x| x >= p) {
        return Err(Error::InvalidDirection);
    }
    let k1 = fp::canonical_direction(k1, p).ok_or(Error::InvalidDirection)?;
    if b0.level() != parent.level() + 1 || b0.parent() != *parent {
        return Err(Error::NotInBall(format!("{} is not a child of {}", b0.encode(), parent.encode())));
    }
    let t0 = b0.class_in_parent();
    let members = (1..p)
        .map(|j| parent.child(&fp::add(&t0, &fp::scale(j, &k1, p), p)))
        .collect();
    Ok(SetS { parent: parent.clone(), k1, b0: b0.clone(), members })
}

/// Recovers the pair `(F_p^* k1, B0)` from the member balls.
///
/// For `p = 2` and `d >= 2` the set is a single child and the pair is not
/// unique; the returned pair takes `B0` to be the class-0 child when possible.
pub fn recover_from_s(members: &[Ball]) -> Result<(FpVec, Ball)> {
    let first = members.first().ok_or_else(|| Error::NotASetS("empty".into()))?;
    let p = first.p();
    let d = first.dim();
    if members.len() != (p - 1) as usize {
        return Err(Error::NotASetS(format!("expected {} balls, got {}", p - 1, members.len())));
    }
    let parent = first.parent();
    if members.iter().any(|m| m.level() != first.level() || m.parent() != parent) {
        return Err(Error::NotASetS("members are not siblings".into()));
    }
    let classes: Vec<FpVec> = members.iter().map(Ball::class_in_parent).collect();
    if p == 2 {
        let t1 = &classes[0];
        let t0 = if fp::is_zero(t1) {
            let mut e = vec![0u32; d];
            e[d - 1] = 1;
            e
        } else {
            vec![0u32; d]
        };
        let k1 = fp::sub(t1, &t0, p);
        return Ok((k1, parent.child(&t0)));
    }
    let dir = fp::sub(&classes[1], &classes[0], p);
    let k1 = fp::canonical_direction(&dir, p).ok_or_else(|| Error::NotASetS("repeated member".into()))?;
    let line: Vec<FpVec> = (0..p).map(|s| fp::add(&classes[0], &fp::scale(s, &k1, p), p)).collect();
    let given: BTreeSet<&FpVec> = classes.iter().collect();
    if given.len() != classes.len() {
        return Err(Error::NotASetS("repeated member".into()));
    }
    if classes.iter().any(|c| !line.contains(c)) {
        return Err(Error::NotASetS("members are not collinear".into()));
    }
    let t0 = line.into_iter().find(|c| !given.contains(c)).expect("p points, p-1 given");
    Ok((k1, parent.child(&t0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// `|z| <= p^-L`
    Ball,
    /// `|z| = p^-L`
    Sphere,
    /// `|z_1| = p^-L`, `|z_l| <= p^-L` for `l >= 2`
    Tube,
}

pub const SPAN_ENUMERATION_CAP: u128 = 1_000_000;

/// Residue classes mod `p^precision` (balls of level `precision`) of the points
/// `x0 + sum z_l k_l` with `z` ranging over `region` at level `level`.
pub fn span_region(
    x0: &PAdicVec,
    basis: &[PAdicVec],
    region: Region,
    level: i32,
    precision: i32,
) -> Result<BTreeSet<Ball>> {
    let p = x0.p();
    let d = x0.dim();
    if basis.len() != d || basis.iter().any(|b| b.dim() != d) {
        return Err(Error::DegenerateBasis(format!("need {d} vectors of dimension {d}")));
    }
    if precision <= level {
        return Err(Error::InsufficientPrecision(format!("precision {precision} must exceed level {level}")));
    }
    check_basis(basis, region)?;

    let span = (precision - level) as u32;
    let count = (p as u128).checked_pow(span * d as u32).unwrap_or(u128::MAX);
    if count > SPAN_ENUMERATION_CAP {
        return Err(Error::EnumerationCap(count, SPAN_ENUMERATION_CAP));
    }

    // Work with integers mod p^(precision - lo), where every input is X * p^lo.
    let min_v = |v: &PAdicVec| v.valuation().unwrap_or(precision);
    let lo = basis
        .iter()
        .map(|b| level + min_v(b))
        .chain(std::iter::once(min_v(x0)))
        .min()
        .unwrap()
        .min(level);
    let width = (precision - lo) as u32;
    let modulus = (p as i128)
        .checked_pow(width)
        .filter(|m| *m < (1i128 << 62))
        .ok_or_else(|| Error::InsufficientPrecision(format!("modulus p^{width} is too large")))?;
    // x p^shift = X p^lo (mod p^precision); returns X mod p^width
    let to_int = |x: &PAdic, shift: i32| -> Result<i128> {
        let Some(v) = x.valuation() else { return Ok(0) };
        let start = v + shift;
        if start >= precision {
            return Ok(0);
        }
        let mut acc = 0i128;
        for dgt in x.digits_in(v, precision - shift)?.into_iter().rev() {
            acc = acc * p as i128 + dgt as i128;
        }
        for _ in lo..start {
            acc *= p as i128;
        }
        Ok(acc % modulus)
    };
    let x0_int: Vec<i128> = x0.0.iter().map(|c| to_int(c, 0)).collect::<Result<_>>()?;
    // columns p^level k_l
    let cols: Vec<Vec<i128>> = basis
        .iter()
        .map(|b| b.0.iter().map(|c| to_int(c, level)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let per = (p as u64).pow(span);
    let mut out = BTreeSet::new();
    let mut m = vec![0u64; d];
    loop {
        let admissible = match region {
            Region::Ball => true,
            Region::Sphere => m.iter().any(|&x| x % p as u64 != 0),
            Region::Tube => m[0] % p as u64 != 0,
        };
        if admissible {
            let mut coords = Vec::with_capacity(d);
            for i in 0..d {
                let mut acc = x0_int[i];
                for (l, col) in cols.iter().enumerate() {
                    acc = (acc + (m[l] as i128 % modulus) * col[i]) % modulus;
                }
                let mut digits = Vec::with_capacity(width as usize);
                let mut r = acc;
                for _ in 0..width {
                    digits.push((r % p as i128) as u8);
                    r /= p as i128;
                }
                coords.push(digits);
            }
            out.insert(Ball::new(p, precision, coords)?);
        }
        // odometer
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            m[i] += 1;
            if m[i] < per {
                break;
            }
            m[i] = 0;
            i += 1;
        }
    }
}

fn check_basis(basis: &[PAdicVec], region: Region) -> Result<()> {
    let p = basis[0].p();
    let d = basis.len();
    let mut rows: Vec<FpVec> = Vec::with_capacity(d);
    for (l, b) in basis.iter().enumerate() {
        let want = if region == Region::Tube && l > 0 { 1 } else { 0 };
        if b.valuation() != Some(want) {
            return Err(Error::DegenerateBasis(format!("k_{} must have norm p^-{want}", l + 1)));
        }
        let row = b
            .0
            .iter()
            .map(|c| c.digit(want).map(u32::from))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InsufficientPrecision(format!("k_{} window", l + 1)))?;
        rows.push(row);
    }
    if fp::rank(&rows, p) != d {
        return Err(Error::DegenerateBasis("reductions mod p do not generate F_p^d".into()));
    }
    Ok(())
}

/// `v_p(det K)` for the matrix with columns `basis`, computed exactly.
pub fn det_valuation(basis: &[PAdicVec]) -> Option<i32> {
    let d = basis.len();
    let p = basis[0].p();
    let entries: Vec<Vec<Exact>> = basis.iter().map(|b| b.0.iter().map(PAdic::exact).collect()).collect();
    let e = entries.iter().flatten().map(|x| x.e).min().unwrap_or(0);
    let mut m: Vec<Vec<BigInt>> = (0..d).map(|i| (0..d).map(|j| entries[j][i].align(e)).collect()).collect();
    // Bareiss fraction-free elimination
    let mut sign = 1;
    let mut prev = BigInt::one();
    for k in 0..d {
        if m[k][k].is_zero() {
            let swap = (k + 1..d).find(|&r| !m[r][k].is_zero())?;
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..d {
            for j in k + 1..d {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let det = Exact { p, m: &m[d - 1][d - 1] * sign, e: e * d as i32 };
    det.valuation()
}

/// Union measure of a tube image computed from the basis: `(1 - 1/p) p^(-L d) |det K|_p`.
pub fn tube_measure_from_basis(basis: &[PAdicVec], level: i32) -> Option<BigRational> {
    let p = basis[0].p();
    let d = basis.len() as i64;
    let v = det_valuation(basis)?;
    let z_measure = (BigRational::one() - pow_rational(p, -1)) * pow_rational(p, -(level as i64) * d);
    Some(z_measure * pow_rational(p, -(v as i64)))
}
