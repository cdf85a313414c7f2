//! Automorphisms of the tree of balls that fix the point at infinity.
//!
//! Every morphism moves balls of level `L` to balls of level `L + s`, where `s`
//! is its level shift (`x -> p^s x` has shift `s`). Isometries have shift 0 and
//! are given by a child action at every ball: the child of `B` with class `c`
//! goes to the child of `phi(B)` with class `sigma_B(c)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::fp::{self, FpMat, FpVec};
use crate::padic::{PAdic, PAdicVec};
use crate::rng::SplitMix64;
use crate::sample;

/// A bijection of `F_p^d`, the children of a ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChildAction {
    /// Image class index of every class index.
    Permutation(Vec<u32>),
    /// `c -> A c + b` with `det A != 0 mod p`.
    Affine { a: FpMat, b: FpVec },
}

impl ChildAction {
    pub fn identity(d: usize) -> Self {
        ChildAction::Affine { a: fp::identity(d), b: vec![0; d] }
    }

    pub fn permutation(perm: Vec<u32>, p: u32, d: usize) -> Result<Self> {
        let n = fp::class_count(p, d);
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::InvalidAction(format!("permutation has {} entries, expected {n}", perm.len())));
        }
        for &x in &perm {
            if x as usize >= n || std::mem::replace(&mut seen[x as usize], true) {
                return Err(Error::InvalidAction(format!("{perm:?} is not a bijection")));
            }
        }
        Ok(ChildAction::Permutation(perm))
    }

    pub fn affine(a: FpMat, b: FpVec, p: u32) -> Result<Self> {
        let d = b.len();
        if a.len() != d || a.iter().any(|r| r.len() != d) || a.iter().flatten().chain(&b).any(|&x| x >= p) {
            return Err(Error::InvalidAction("malformed affine action".into()));
        }
        if fp::det(&a, p) == 0 {
            return Err(Error::InvalidAction(format!("singular linear part {a:?}")));
        }
        Ok(ChildAction::Affine { a, b })
    }

    pub fn apply(&self, c: &[u32], p: u32) -> FpVec {
        match self {
            ChildAction::Permutation(perm) => {
                fp::class_from_index(perm[fp::class_index(c, p)] as usize, p, c.len())
            }
            ChildAction::Affine { a, b } => fp::add(&fp::mat_vec(a, c, p), b, p),
        }
    }

    /// The action as a permutation of class indices.
    pub fn table(&self, p: u32, d: usize) -> Vec<u32> {
        match self {
            ChildAction::Permutation(perm) => perm.clone(),
            ChildAction::Affine { .. } => (0..fp::class_count(p, d))
                .map(|i| fp::class_index(&self.apply(&fp::class_from_index(i, p, d), p), p) as u32)
                .collect(),
        }
    }

    /// Equality as maps.
    pub fn same_map(&self, other: &ChildAction, p: u32, d: usize) -> bool {
        self.table(p, d) == other.table(p, d)
    }

    /// `self o first`.
    pub fn after(&self, first: &ChildAction, p: u32, d: usize) -> ChildAction {
        match (self, first) {
            (ChildAction::Affine { a: a1, b: b1 }, ChildAction::Affine { a: a2, b: b2 }) => ChildAction::Affine {
                a: fp::mat_mul(a1, a2, p),
                b: fp::add(&fp::mat_vec(a1, b2, p), b1, p),
            },
            _ => {
                let t1 = self.table(p, d);
                ChildAction::Permutation(first.table(p, d).iter().map(|&i| t1[i as usize]).collect())
            }
        }
    }

    pub fn inverse(&self, p: u32, d: usize) -> ChildAction {
        match self {
            ChildAction::Affine { a, b } => {
                let ai = fp::inverse(a, p).expect("invertible by construction");
                let bi = fp::scale(p - 1, &fp::mat_vec(&ai, b, p), p);
                ChildAction::Affine { a: ai, b: bi }
            }
            ChildAction::Permutation(_) => {
                let t = self.table(p, d);
                let mut inv = vec![0u32; t.len()];
                for (i, &j) in t.iter().enumerate() {
                    inv[j as usize] = i as u32;
                }
                ChildAction::Permutation(inv)
            }
        }
    }

    /// The affine form of a class permutation, if it has one.
    pub fn fit_affine(perm: &[u32], p: u32, d: usize) -> Option<ChildAction> {
        let at = |c: &[u32]| fp::class_from_index(perm[fp::class_index(c, p)] as usize, p, d);
        let b = at(&vec![0; d]);
        let cols: Vec<FpVec> = (0..d)
            .map(|j| {
                let mut e = vec![0; d];
                e[j] = 1;
                fp::sub(&at(&e), &b, p)
            })
            .collect();
        let a = fp::transpose(&cols);
        let candidate = ChildAction::affine(a, b, p).ok()?;
        (candidate.table(p, d) == perm).then_some(candidate)
    }

    pub fn linear_part(&self) -> Option<&FpMat> {
        match self {
            ChildAction::Affine { a, .. } => Some(a),
            ChildAction::Permutation(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    Permutation,
    Affine,
}

impl ActionMode {
    pub fn default_for(d: usize) -> Self {
        if d == 1 {
            ActionMode::Permutation
        } else {
            ActionMode::Affine
        }
    }
}

/// Balls above this level are fixed by seeded isometries unless told otherwise.
pub const DEFAULT_TOP_LEVEL: i32 = -2;

/// The frozen per-ball action of a seeded isometry.
pub fn seeded_action(seed: u64, mode: ActionMode, ball: &Ball) -> ChildAction {
    let p = ball.p();
    let d = ball.dim();
    let mut rng = SplitMix64::keyed(seed, ball.encode().as_bytes());
    match mode {
        ActionMode::Permutation => ChildAction::Permutation(rng.permutation(fp::class_count(p, d))),
        ActionMode::Affine => {
            let a = loop {
                let a: FpMat = (0..d).map(|_| (0..d).map(|_| rng.uniform(p as u64) as u32).collect()).collect();
                if fp::det(&a, p) != 0 {
                    break a;
                }
            };
            let b = (0..d).map(|_| rng.uniform(p as u64) as u32).collect();
            ChildAction::Affine { a, b }
        }
    }
}

/// `x -> a + p^shift U x` with `U` in `GL_d(Z_p)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentiableSpec {
    pub translation: PAdicVec,
    pub shift: i32,
    pub matrix: Vec<Vec<PAdic>>,
}

impl DifferentiableSpec {
    pub fn new(translation: PAdicVec, shift: i32, matrix: Vec<Vec<PAdic>>) -> Result<Self> {
        let d = translation.dim();
        let p = translation.p();
        if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(matrix.len(), d));
        }
        let residue = matrix
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| match x.valuation() {
                        Some(v) if v < 0 => None,
                        _ => x.digit(0).map(u32::from),
                    })
                    .collect::<Option<FpVec>>()
            })
            .collect::<Option<FpMat>>()
            .ok_or(Error::NotAUnit)?;
        if fp::det(&residue, p) == 0 {
            return Err(Error::NotAUnit);
        }
        Ok(DifferentiableSpec { translation, shift, matrix })
    }

    /// `x -> a + u x` on `Q_p`.
    pub fn scalar(a: PAdic, u: PAdic) -> Result<Self> {
        let s = u.valuation().ok_or(Error::NotAUnit)?;
        Self::new(PAdicVec(vec![a]), s, vec![vec![u.shift(-s)]])
    }

    pub fn p(&self) -> u32 {
        self.translation.p()
    }

    pub fn dim(&self) -> usize {
        self.translation.dim()
    }

    pub fn apply(&self, x: &PAdicVec) -> Result<PAdicVec> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(x.dim(), self.dim()));
        }
        let mut out = Vec::with_capacity(self.dim());
        for (row, a) in self.matrix.iter().zip(&self.translation.0) {
            let mut acc = PAdic::zero(self.p(), a.precision());
            for (m, xj) in row.iter().zip(&x.0) {
                acc = acc.add(&m.mul(xj)?)?;
            }
            out.push(a.add(&acc.shift(self.shift))?);
        }
        Ok(PAdicVec(out))
    }

    pub fn image_ball(&self, b: &Ball) -> Result<Ball> {
        let prec = self.translation.0.iter().map(PAdic::precision).max().unwrap_or(16);
        let y = self.apply(&b.center(prec))?;
        Ball::from_point(&y, b.level() + self.shift)
    }

    /// `|f'|_p`, the factor in `|f(x) - f(a)| = |f'| |x - a|`.
    pub fn derivative_norm(&self) -> f64 {
        (self.p() as f64).powi(-self.shift)
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Identity,
    Table(Arc<BTreeMap<Ball, ChildAction>>),
    Seeded { seed: u64, mode: ActionMode, top_level: i32 },
    Dilation(i32),
    Affine(Arc<DifferentiableSpec>),
    /// Applied right to left.
    Compose(Vec<Morphism>),
    Inverse(Box<Morphism>),
}

#[derive(Clone, Debug)]
pub struct Morphism {
    p: u32,
    d: usize,
    kind: Kind,
}

impl Morphism {
    pub fn identity(p: u32, d: usize) -> Self {
        Morphism { p, d, kind: Kind::Identity }
    }

    /// Isometry with the listed child actions and the identity action elsewhere.
    pub fn isometry_table(p: u32, d: usize, entries: Vec<(Ball, ChildAction)>) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (ball, action) in entries {
            if ball.p() != p {
                return Err(Error::PrimeMismatch(p, ball.p()));
            }
            if ball.dim() != d {
                return Err(Error::DimensionMismatch(d, ball.dim()));
            }
            let action = match action {
                ChildAction::Permutation(perm) => ChildAction::permutation(perm, p, d)?,
                ChildAction::Affine { a, b } => {
                    if b.len() != d {
                        return Err(Error::InvalidAction("affine action of the wrong dimension".into()));
                    }
                    ChildAction::affine(a, b, p)?
                }
            };
            table.insert(ball, action);
        }
        Ok(Morphism { p, d, kind: Kind::Table(Arc::new(table)) })
    }

    pub fn seeded_isometry(p: u32, d: usize, seed: u64) -> Self {
        Self::seeded_isometry_with(p, d, seed, ActionMode::default_for(d), DEFAULT_TOP_LEVEL)
    }

    pub fn seeded_isometry_with(p: u32, d: usize, seed: u64, mode: ActionMode, top_level: i32) -> Self {
        Morphism { p, d, kind: Kind::Seeded { seed, mode, top_level } }
    }

    /// `x -> p^gamma x`.
    pub fn dilation(p: u32, d: usize, gamma: i32) -> Self {
        Morphism { p, d, kind: Kind::Dilation(gamma) }
    }

    pub fn affine(spec: DifferentiableSpec) -> Self {
        Morphism { p: spec.p(), d: spec.dim(), kind: Kind::Affine(Arc::new(spec)) }
    }

    /// `self o first`.
    pub fn compose(&self, first: &Morphism) -> Result<Self> {
        if self.p != first.p {
            return Err(Error::PrimeMismatch(self.p, first.p));
        }
        if self.d != first.d {
            return Err(Error::DimensionMismatch(self.d, first.d));
        }
        Ok(Morphism { p: self.p, d: self.d, kind: Kind::Compose(vec![self.clone(), first.clone()]) })
    }

    pub fn inverse(&self) -> Self {
        match &self.kind {
            Kind::Inverse(inner) => (**inner).clone(),
            Kind::Identity => self.clone(),
            Kind::Dilation(g) => Morphism::dilation(self.p, self.d, -g),
            _ => Morphism { p: self.p, d: self.d, kind: Kind::Inverse(Box::new(self.clone())) },
        }
    }

    /// The explicit affine map behind this morphism, if it was built from one.
    pub fn as_differentiable(&self) -> Option<&DifferentiableSpec> {
        match &self.kind {
            Kind::Affine(spec) => Some(spec),
            _ => None,
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `s` such that balls of level `L` map to balls of level `L + s`.
    pub fn level_shift(&self) -> i32 {
        match &self.kind {
            Kind::Identity | Kind::Table(_) | Kind::Seeded { .. } => 0,
            Kind::Dilation(g) => *g,
            Kind::Affine(spec) => spec.shift,
            Kind::Compose(parts) => parts.iter().map(Morphism::level_shift).sum(),
            Kind::Inverse(inner) => -inner.level_shift(),
        }
    }

    // Level above which the walk-based isometries act trivially.
    fn fixed_above(&self) -> i32 {
        match &self.kind {
            Kind::Table(t) => t.keys().map(Ball::level).min().unwrap_or(i32::MAX),
            Kind::Seeded { top_level, .. } => *top_level,
            _ => unreachable!("only walk-based isometries"),
        }
    }

    fn action_at(&self, b: &Ball) -> ChildAction {
        match &self.kind {
            Kind::Table(t) => t.get(b).cloned().unwrap_or_else(|| ChildAction::identity(self.d)),
            Kind::Seeded { seed, mode, top_level } => {
                if b.level() < *top_level {
                    ChildAction::identity(self.d)
                } else {
                    seeded_action(*seed, *mode, b)
                }
            }
            _ => unreachable!("only walk-based isometries"),
        }
    }

    fn check_ball(&self, b: &Ball) -> Result<()> {
        if b.p() != self.p {
            return Err(Error::PrimeMismatch(self.p, b.p()));
        }
        if b.dim() != self.d {
            return Err(Error::DimensionMismatch(self.d, b.dim()));
        }
        Ok(())
    }

    pub fn image_ball(&self, b: &Ball) -> Result<Ball> {
        self.check_ball(b)?;
        match &self.kind {
            Kind::Identity => Ok(b.clone()),
            Kind::Dilation(g) => Ok(b.shifted(*g)),
            Kind::Table(_) | Kind::Seeded { .. } => Ok(self.walk(b, false)),
            Kind::Affine(spec) => spec.image_ball(b),
            Kind::Compose(parts) => parts.iter().rev().try_fold(b.clone(), |acc, m| m.image_ball(&acc)),
            Kind::Inverse(inner) => inner.preimage(b),
        }
    }

    pub fn preimage(&self, b: &Ball) -> Result<Ball> {
        self.check_ball(b)?;
        match &self.kind {
            Kind::Identity => Ok(b.clone()),
            Kind::Dilation(g) => Ok(b.shifted(-g)),
            Kind::Table(_) | Kind::Seeded { .. } => Ok(self.walk(b, true)),
            Kind::Affine(_) => self.search_preimage(b),
            Kind::Compose(parts) => parts.iter().try_fold(b.clone(), |acc, m| m.preimage(&acc)),
            Kind::Inverse(inner) => inner.image_ball(b),
        }
    }

    // Follows the chain of `b` from the fixed levels down, applying (or undoing) child actions.
    fn walk(&self, b: &Ball, inverse: bool) -> Ball {
        let top = self.fixed_above().min(b.level());
        let mut src = b.ancestor(top);
        let mut dst = src.clone();
        for _ in top..b.level() {
            let c = src.class_of(b);
            if inverse {
                // src runs along the target chain, dst along the domain chain
                let back = self.action_at(&dst).inverse(self.p, self.d).apply(&c, self.p);
                dst = dst.child(&back);
            } else {
                let fwd = self.action_at(&src).apply(&c, self.p);
                dst = dst.child(&fwd);
            }
            src = src.child(&c);
        }
        dst
    }

    // Descends from a ball whose image is known to contain `b`, picking the child that maps inside `b`.
    fn search_preimage(&self, b: &Ball) -> Result<Ball> {
        let s = self.level_shift();
        let anchor = self.image_ball(&Ball::unit(self.p, self.d))?.sup(b);
        let mut dom = Ball::around_origin(self.p, self.d, anchor.level() - s);
        for level in anchor.level()..b.level() {
            let target = b.ancestor(level + 1);
            let mut found = None;
            for c in dom.children() {
                if self.image_ball(&c)? == target {
                    found = Some(c);
                    break;
                }
            }
            dom = found.ok_or_else(|| Error::InsufficientPrecision(format!("no preimage found for {target}")))?;
        }
        Ok(dom)
    }

    pub fn apply_point(&self, x: &PAdicVec) -> Result<PAdicVec> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch(self.d, x.dim()));
        }
        if x.p() != self.p {
            return Err(Error::PrimeMismatch(self.p, x.p()));
        }
        match &self.kind {
            Kind::Identity => Ok(x.clone()),
            Kind::Dilation(g) => Ok(PAdicVec(x.0.iter().map(|c| c.shift(*g)).collect())),
            Kind::Affine(spec) => spec.apply(x),
            Kind::Compose(parts) => parts.iter().rev().try_fold(x.clone(), |acc, m| m.apply_point(&acc)),
            _ => {
                let window = x.0.iter().map(PAdic::precision).min().unwrap_or(16);
                let known = x.abs_precision().unwrap_or(window as i32);
                let image = self.image_ball(&Ball::from_point(x, known)?)?;
                Ok(point_of(&image, window))
            }
        }
    }

    /// The map induced on the children of `b`, in canonical tangent coordinates.
    pub fn tangent_map(&self, b: &Ball) -> Result<ChildAction> {
        self.check_ball(b)?;
        match &self.kind {
            Kind::Identity | Kind::Dilation(_) => Ok(ChildAction::identity(self.d)),
            Kind::Table(_) | Kind::Seeded { .. } => Ok(self.action_at(b)),
            Kind::Affine(_) => self.tangent_map_by_images(b),
            Kind::Compose(parts) => {
                let mut acc = ChildAction::identity(self.d);
                let mut cur = b.clone();
                for m in parts.iter().rev() {
                    acc = m.tangent_map(&cur)?.after(&acc, self.p, self.d);
                    cur = m.image_ball(&cur)?;
                }
                Ok(acc)
            }
            Kind::Inverse(inner) => Ok(inner.tangent_map(&inner.preimage(b)?)?.inverse(self.p, self.d)),
        }
    }

    /// The tangent map read off from the images of the children of `b`.
    pub fn tangent_map_by_images(&self, b: &Ball) -> Result<ChildAction> {
        let image = self.image_ball(b)?;
        let perm = b
            .children()
            .iter()
            .map(|c| Ok(fp::class_index(&image.class_of(&self.image_ball(c)?), self.p) as u32))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChildAction::fit_affine(&perm, self.p, self.d).unwrap_or(ChildAction::Permutation(perm)))
    }

    /// `(s, eta)` with `self = dilation(s) o eta` and `eta` an isometry.
    pub fn parabolic_normalize(&self) -> Result<(i32, Morphism)> {
        let s = self.image_ball(&Ball::unit(self.p, self.d))?.level();
        let eta = Morphism::dilation(self.p, self.d, -s).compose(self)?;
        Ok((s, eta))
    }

    /// Samples point pairs and balls and checks exact preservation of distances
    /// and diameters, and that every ball containing `sup(x, phi(x))` is fixed.
    pub fn isometry_check(&self, samples: usize, levels: (i32, i32), seed: u64) -> IsometryReport {
        let mut rng = SplitMix64::new(seed);
        let (lo, hi) = levels;
        let prec = (hi - lo).max(1) as u32 + 4;
        let fail = |msg: String| IsometryReport { passed: false, samples, counterexample: Some(msg) };
        for _ in 0..samples {
            let x = sample::random_point(&mut rng, self.p, self.d, lo, prec);
            let y = sample::random_point(&mut rng, self.p, self.d, lo, prec);
            let (fx, fy) = match (self.apply_point(&x), self.apply_point(&y)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return fail(format!("evaluation failed: {e}")),
            };
            let before = x.sub(&y).map(|v| v.valuation());
            let after = fx.sub(&fy).map(|v| v.valuation());
            if before != after {
                return fail(format!("|x-y| changed for x={x:?}, y={y:?}"));
            }
            let level = rng.uniform((hi - lo + 1) as u64) as i32 + lo;
            let ball = sample::random_ball(&mut rng, self.p, self.d, lo, level);
            match self.image_ball(&ball) {
                Ok(img) if img.level() == ball.level() => {}
                Ok(img) => return fail(format!("diameter of {ball} changed: image {img}")),
                Err(e) => return fail(format!("image of {ball} failed: {e}")),
            }
            // the chain above sup(x, phi(x)) is fixed
            let known = x.abs_precision().unwrap_or(prec as i32).min(fx.abs_precision().unwrap_or(prec as i32));
            let (bx, bfx) = match (Ball::from_point(&x, known), Ball::from_point(&fx, known)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => continue,
            };
            let top = bx.sup(&bfx);
            for l in (lo.min(top.level()) - 2..=top.level()).rev() {
                let anc = top.ancestor(l);
                if self.image_ball(&anc).as_ref() != Ok(&anc) {
                    return fail(format!("ball {anc} containing sup(x, phi(x)) is moved"));
                }
            }
        }
        IsometryReport { passed: true, samples, counterexample: None }
    }

    /// Checks that every sampled tangent map is affine with invertible linear part.
    pub fn mod_p_affine_check(&self, balls: &[Ball]) -> Result<()> {
        for b in balls {
            let t = self.tangent_map(b)?;
            if t.linear_part().is_none() && ChildAction::fit_affine(&t.table(self.p, self.d), self.p, self.d).is_none() {
                return Err(Error::NotAffine(b.encode()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub passed: bool,
    pub samples: usize,
    pub counterexample: Option<String>,
}

// Center of `b` with `window` significant digits per coordinate.
fn point_of(b: &Ball, window: u32) -> PAdicVec {
    PAdicVec(
        (0..b.dim())
            .map(|i| {
                let c = b.coord_digits(i);
                PAdic::from_digits(b.p(), window, b.level() - c.len() as i32, c).expect("valid digits")
            })
            .collect(),
    )
}

/// Checks `|f(x) - f(a)| = |f'| |x - a|` exactly on seeded pairs.
pub fn derivative_law_check(spec: &DifferentiableSpec, samples: usize, seed: u64) -> Result<()> {
    let mut rng = SplitMix64::new(seed);
    let (p, d) = (spec.p(), spec.dim());
    for _ in 0..samples {
        let x = sample::random_point(&mut rng, p, d, -2, 12);
        let a = sample::random_point(&mut rng, p, d, -2, 12);
        let Some(dx) = x.sub(&a)?.valuation() else { continue };
        let dy = spec.apply(&x)?.sub(&spec.apply(&a)?)?.valuation();
        if dy != Some(dx + spec.shift) {
            return Err(Error::OutOfDomain(format!("derivative law fails at x={x:?}, a={a:?}")));
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    ball: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perm: Option<Vec<u32>>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    a: Option<FpMat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<FpVec>,
}

#[derive(Serialize, Deserialize)]
struct MorphismJson {
    kind: String,
    p: u32,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<ActionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    top_level: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<TableEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    affine: Option<DifferentiableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parts: Option<Vec<Morphism>>,
}

impl Serialize for Morphism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut j = MorphismJson {
            kind: String::new(),
            p: self.p,
            d: self.d,
            seed: None,
            mode: None,
            top_level: None,
            table: None,
            gamma: None,
            affine: None,
            parts: None,
        };
        match &self.kind {
            Kind::Identity => j.kind = "identity".into(),
            Kind::Table(t) => {
                j.kind = "isometry".into();
                j.table = Some(
                    t.iter()
                        .map(|(ball, act)| match act {
                            ChildAction::Permutation(perm) => {
                                TableEntry { ball: ball.encode(), perm: Some(perm.clone()), a: None, b: None }
                            }
                            ChildAction::Affine { a, b } => {
                                TableEntry { ball: ball.encode(), perm: None, a: Some(a.clone()), b: Some(b.clone()) }
                            }
                        })
                        .collect(),
                );
            }
            Kind::Seeded { seed, mode, top_level } => {
                j.kind = "isometry".into();
                j.seed = Some(*seed);
                j.mode = Some(*mode);
                j.top_level = Some(*top_level);
            }
            Kind::Dilation(g) => {
                j.kind = "dilation".into();
                j.gamma = Some(*g);
            }
            Kind::Affine(spec) => {
                j.kind = "affine".into();
                j.affine = Some((**spec).clone());
            }
            Kind::Compose(parts) => {
                j.kind = "compose".into();
                j.parts = Some(parts.clone());
            }
            Kind::Inverse(inner) => {
                j.kind = "inverse".into();
                j.parts = Some(vec![(**inner).clone()]);
            }
        }
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Morphism {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = MorphismJson::deserialize(de)?;
        let (p, d) = (j.p, j.d);
        let missing = |f: &str| D::Error::custom(format!("morphism kind {:?} needs field {f:?}", j.kind));
        let m = match j.kind.as_str() {
            "identity" => Morphism::identity(p, d),
            "isometry" => match (&j.table, j.seed) {
                (Some(table), _) => {
                    let entries = table
                        .iter()
                        .map(|e| {
                            let ball = Ball::decode(&e.ball)?;
                            let act = match (&e.perm, &e.a, &e.b) {
                                (Some(perm), _, _) => ChildAction::Permutation(perm.clone()),
                                (None, Some(a), Some(b)) => ChildAction::Affine { a: a.clone(), b: b.clone() },
                                _ => return Err(Error::Schema(format!("table entry for {} has no action", e.ball))),
                            };
                            Ok((ball, act))
                        })
                        .collect::<Result<Vec<_>>>()
                        .map_err(D::Error::custom)?;
                    Morphism::isometry_table(p, d, entries).map_err(D::Error::custom)?
                }
                (None, Some(seed)) => Morphism::seeded_isometry_with(
                    p,
                    d,
                    seed,
                    j.mode.unwrap_or(ActionMode::default_for(d)),
                    j.top_level.unwrap_or(DEFAULT_TOP_LEVEL),
                ),
                (None, None) => return Err(missing("seed or table")),
            },
            "dilation" => Morphism::dilation(p, d, j.gamma.ok_or_else(|| missing("gamma"))?),
            "affine" => {
                let spec = j.affine.ok_or_else(|| missing("affine"))?;
                let spec = DifferentiableSpec::new(spec.translation, spec.shift, spec.matrix).map_err(D::Error::custom)?;
                Morphism::affine(spec)
            }
            "compose" => {
                let parts = j.parts.ok_or_else(|| missing("parts"))?;
                let mut it = parts.into_iter().rev();
                let mut acc = it.next().ok_or_else(|| missing("parts"))?;
                for m in it {
                    acc = m.compose(&acc).map_err(D::Error::custom)?;
                }
                acc
            }
            "inverse" => {
                let mut parts = j.parts.ok_or_else(|| missing("parts"))?;
                if parts.len() != 1 {
                    return Err(D::Error::custom("inverse takes exactly one part"));
                }
                parts.remove(0).inverse()
            }
            other => return Err(D::Error::custom(format!("unknown morphism kind {other:?}"))),
        };
        if m.p != p || m.d != d {
            return Err(D::Error::custom("parts disagree with the declared p or d"));
        }
        Ok(m)
    }
}
