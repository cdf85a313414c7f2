//! Tree-local pseudodifferential operators.
//!
//! All operators are evaluated on a [`Window`]: a ball and a resolution. For a
//! window cell `x` the integral over `y` is grouped by the ball `sup(x, y)`.
//! Levels finer than the input's resolution contribute nothing, and the large
//! balls that contain both `x` and the support are summed in closed form.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ball::Ball;
use crate::error::{Error, Result};
use crate::fp::{self, FpVec};
use crate::function::{pushforward, LCFunction, Pyramid};
use crate::morphism::{ChildAction, Morphism};
use crate::rng::SplitMix64;

fn pw(p: u32, e: f64) -> f64 {
    (p as f64).powf(e)
}

/// The constant `(p^alpha - 1) / (1 - p^(-1-alpha))`; it multiplies the
/// Vladimirov integral `int (f(x) - f(y)) |x - y|^(-1-alpha) dy`.
pub fn gamma_p(alpha: f64, p: u32) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::OutOfDomain(format!("alpha = {alpha} must be positive")));
    }
    Ok((pw(p, alpha) - 1.0) / (1.0 - pw(p, -1.0 - alpha)))
}

/// `p^(alpha (1 - gamma))`, the eigenvalue of `D^alpha` on wavelets with support diameter `p^gamma`.
pub fn wavelet_eigenvalue(alpha: f64, gamma: i32, p: u32) -> f64 {
    pw(p, alpha * (1 - gamma) as f64)
}

/// Power-law part of a kernel: `F(B) = c diam(B)^-(d + alpha)` on every level below `from_level`
/// (on every level if `from_level` is `None`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tail {
    pub c: Complex64,
    pub alpha: f64,
    pub from_level: Option<i32>,
}

/// A complex function of balls.
pub trait Kernel {
    fn p(&self) -> u32;
    fn dim(&self) -> usize;
    fn value(&self, b: &Ball) -> Result<Complex64>;
    fn tail(&self) -> Tail;
}

/// Explicit values on balls of level `>= from_level`; the power law everywhere else.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    p: u32,
    d: usize,
    table: BTreeMap<Ball, Complex64>,
    tail: Tail,
}

impl KernelSpec {
    pub fn new(p: u32, d: usize, tail: Tail, table: BTreeMap<Ball, Complex64>) -> Result<Self> {
        if !(tail.alpha > 0.0) {
            return Err(Error::DivergentKernel(format!("tail exponent alpha = {} must be positive", tail.alpha)));
        }
        for b in table.keys() {
            if b.p() != p {
                return Err(Error::PrimeMismatch(p, b.p()));
            }
            if b.dim() != d {
                return Err(Error::DimensionMismatch(d, b.dim()));
            }
            match tail.from_level {
                Some(l) if b.level() >= l => {}
                _ => return Err(Error::Schema(format!("table ball {b} lies in the power-law range"))),
            }
        }
        Ok(KernelSpec { p, d, table, tail })
    }

    /// `gamma_p(alpha) |x - y|^(-1 - alpha)` on `Q_p`.
    pub fn vladimirov(p: u32, alpha: f64) -> Result<Self> {
        let c = gamma_p(alpha, p)?;
        Self::new(p, 1, Tail { c: Complex64::new(c, 0.0), alpha, from_level: None }, BTreeMap::new())
    }

    pub fn power_law(p: u32, d: usize, c: Complex64, alpha: f64) -> Result<Self> {
        Self::new(p, d, Tail { c, alpha, from_level: None }, BTreeMap::new())
    }

    pub fn zero(p: u32, d: usize) -> Self {
        KernelSpec { p, d, table: BTreeMap::new(), tail: Tail { c: Complex64::new(0.0, 0.0), alpha: 1.0, from_level: None } }
    }

    /// Random table values on every ball at levels `from_level ..= deepest` inside `region`.
    pub fn seeded_table(p: u32, d: usize, tail: Tail, region: &Ball, deepest: i32, seed: u64) -> Result<Self> {
        let from = tail.from_level.ok_or_else(|| Error::Schema("a table needs from_level".into()))?;
        let mut rng = SplitMix64::new(seed);
        let mut table = BTreeMap::new();
        for level in from.max(region.level())..=deepest {
            for b in region.descendants(level) {
                table.insert(b, Complex64::new(rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0));
            }
        }
        Self::new(p, d, tail, table)
    }

    pub fn table(&self) -> &BTreeMap<Ball, Complex64> {
        &self.table
    }
}

impl Kernel for KernelSpec {
    fn p(&self) -> u32 {
        self.p
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, b: &Ball) -> Result<Complex64> {
        if let Some(v) = self.table.get(b) {
            return Ok(*v);
        }
        Ok(self.tail.c * pw(self.p, b.level() as f64 * (self.d as f64 + self.tail.alpha)))
    }

    fn tail(&self) -> Tail {
        self.tail
    }
}

/// `B -> F(phi(B))`.
pub struct TransportedKernel<'a> {
    pub inner: &'a dyn Kernel,
    pub phi: &'a Morphism,
}

impl Kernel for TransportedKernel<'_> {
    fn p(&self) -> u32 {
        self.inner.p()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, b: &Ball) -> Result<Complex64> {
        self.inner.value(&self.phi.image_ball(b)?)
    }

    fn tail(&self) -> Tail {
        let t = self.inner.tail();
        let s = self.phi.level_shift();
        Tail {
            c: t.c * pw(self.p(), s as f64 * (self.dim() as f64 + t.alpha)),
            alpha: t.alpha,
            from_level: t.from_level.map(|l| l - s),
        }
    }
}

/// A nonzero direction `k1(B)` in `F_p^d` for every ball.
pub trait VectorField {
    fn k1(&self, b: &Ball) -> Result<FpVec>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VectorFieldSpec {
    /// `k1(B) = class_from_index(uniform(p^d - 1) + 1)` from the stream keyed by `B`.
    Seeded { seed: u64 },
    Table { entries: BTreeMap<Ball, FpVec>, default: FpVec },
}

impl VectorFieldSpec {
    pub fn seeded(seed: u64) -> Self {
        VectorFieldSpec::Seeded { seed }
    }

    pub fn table(entries: BTreeMap<Ball, FpVec>, default: FpVec, p: u32) -> Result<Self> {
        for k in entries.values().chain(std::iter::once(&default)) {
            if fp::is_zero(k) || k.iter().any(|&x| x >= p) {
                return Err(Error::InvalidDirection);
            }
        }
        Ok(VectorFieldSpec::Table { entries, default })
    }
}

impl VectorField for VectorFieldSpec {
    fn k1(&self, b: &Ball) -> Result<FpVec> {
        match self {
            VectorFieldSpec::Seeded { seed } => {
                let (p, d) = (b.p(), b.dim());
                let mut rng = SplitMix64::keyed(*seed, b.encode().as_bytes());
                let idx = rng.uniform(fp::class_count(p, d) as u64 - 1) + 1;
                Ok(fp::class_from_index(idx as usize, p, d))
            }
            VectorFieldSpec::Table { entries, default } => {
                let k = entries.get(b).unwrap_or(default);
                if k.len() != b.dim() {
                    return Err(Error::DimensionMismatch(b.dim(), k.len()));
                }
                Ok(k.clone())
            }
        }
    }
}

/// `B -> A_B^-1 k1(phi(B))`, with `A_B` the linear part of the tangent map of `phi` at `B`.
pub struct TransportedField<'a> {
    pub inner: &'a dyn VectorField,
    pub phi: &'a Morphism,
}

impl VectorField for TransportedField<'_> {
    fn k1(&self, b: &Ball) -> Result<FpVec> {
        let (p, d) = (b.p(), b.dim());
        let t = self.phi.tangent_map(b)?;
        let t = match t.linear_part() {
            Some(_) => t,
            None => ChildAction::fit_affine(&t.table(p, d), p, d).ok_or_else(|| Error::NotAffine(b.encode()))?,
        };
        let a = t.linear_part().expect("affine action");
        let ai = fp::inverse(a, p).ok_or_else(|| Error::NotAffine(b.encode()))?;
        Ok(fp::mat_vec(&ai, &self.inner.k1(&self.phi.image_ball(b)?)?, b.p()))
    }
}

/// `B -> factor k1(B)`.
pub struct ScaledField<'a> {
    pub inner: &'a dyn VectorField,
    pub factor: u32,
}

impl VectorField for ScaledField<'_> {
    fn k1(&self, b: &Ball) -> Result<FpVec> {
        Ok(fp::scale(self.factor, &self.inner.k1(b)?, b.p()))
    }
}

/// Where an operator's output is reported.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub ball: Ball,
    pub resolution: i32,
}

impl Window {
    pub fn new(ball: Ball, resolution: i32) -> Self {
        Window { ball, resolution }
    }

    /// The window of `f`'s own support and resolution.
    pub fn of(f: &LCFunction) -> Self {
        Window { ball: f.support().clone(), resolution: f.resolution() }
    }

    fn output_resolution(&self, f: &LCFunction) -> i32 {
        self.resolution.max(f.resolution()).max(self.ball.level())
    }

    pub fn image(&self, phi: &Morphism) -> Result<Window> {
        Ok(Window { ball: phi.image_ball(&self.ball)?, resolution: self.resolution + phi.level_shift() })
    }
}

fn check_inputs(p: u32, d: usize, f: &LCFunction, w: &Window) -> Result<()> {
    if f.p() != p || w.ball.p() != p {
        return Err(Error::PrimeMismatch(p, if f.p() != p { f.p() } else { w.ball.p() }));
    }
    if f.dim() != d || w.ball.dim() != d {
        return Err(Error::DimensionMismatch(d, if f.dim() != d { f.dim() } else { w.ball.dim() }));
    }
    Ok(())
}

// Memoized kernel lookups for one operator call.
struct KernelCache<'a> {
    kernel: &'a dyn Kernel,
    memo: RefCell<HashMap<Ball, Complex64>>,
}

impl<'a> KernelCache<'a> {
    fn new(kernel: &'a dyn Kernel) -> Self {
        KernelCache { kernel, memo: RefCell::new(HashMap::new()) }
    }

    fn get(&self, b: &Ball) -> Result<Complex64> {
        if let Some(v) = self.memo.borrow().get(b) {
            return Ok(*v);
        }
        let v = self.kernel.value(b)?;
        self.memo.borrow_mut().insert(b.clone(), v);
        Ok(v)
    }
}

// Highest level whose shell is summed explicitly minus one, and the closed-form tail factor
// `sum_{l <= l0} p^(l alpha) = p^(l0 alpha) / (1 - p^-alpha)`.
fn tail_start(cell: &Ball, f: &LCFunction, tail: &Tail) -> (i32, f64) {
    let top = cell.sup(f.support()).level();
    let l0 = tail.from_level.map_or(top, |from| top.min(from)) - 1;
    (l0, pw(cell.p(), l0 as f64 * tail.alpha) / (1.0 - pw(cell.p(), -tail.alpha)))
}

/// `int F(sup(x, y)) (f(x) - f(y)) dy` on the window.
pub fn kernel_op(kernel: &dyn Kernel, f: &LCFunction, w: &Window) -> Result<LCFunction> {
    let (p, d) = (kernel.p(), kernel.dim());
    check_inputs(p, d, f, w)?;
    let tail = kernel.tail();
    if !(tail.alpha > 0.0) {
        return Err(Error::DivergentKernel(format!("alpha = {}", tail.alpha)));
    }
    let pyr = f.pyramid();
    let cache = KernelCache::new(kernel);
    let res = w.output_resolution(f);
    let shell_factor = 1.0 - pw(p, -(d as f64));
    let values = w
        .ball
        .descendants(res)
        .iter()
        .map(|x| {
            let fx = f.value_on(x)?;
            let (l0, geo) = tail_start(x, f, &tail);
            let mut acc = fx * tail.c * shell_factor * geo;
            let mut outer = pyr.integral(&x.ancestor(l0 + 1));
            for level in l0 + 1..f.resolution() {
                let ball = x.ancestor(level);
                let inner = pyr.integral(&x.ancestor(level + 1));
                let shell_measure = pw(p, -(level as f64) * d as f64) * shell_factor;
                acc += cache.get(&ball)? * (fx * shell_measure - (outer - inner));
                outer = inner;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    LCFunction::new(w.ball.clone(), res, values)
}

/// The Vladimirov operator `D^alpha` on `Q_p`, summed over sibling balls cell by cell.
pub fn vladimirov(alpha: f64, f: &LCFunction, w: &Window) -> Result<LCFunction> {
    let p = f.p();
    if f.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim(), "the Vladimirov operator is one-dimensional"));
    }
    check_inputs(p, 1, f, w)?;
    let k = gamma_p(alpha, p)?;
    let pyr: Pyramid = f.pyramid();
    let supp = f.support();
    let total = pyr.total();
    let res = w.output_resolution(f);
    let dist = |level: i32| pw(p, level as f64 * (1.0 + alpha));
    let values = w
        .ball
        .descendants(res)
        .iter()
        .map(|x| {
            if !supp.contains(x) {
                // f(x) = 0 and every y in the support is at the same distance
                return Ok(-total * dist(x.sup(supp).level()) * k);
            }
            let fx = f.value_on(x)?;
            // y outside the support
            let outside = fx * (1.0 - 1.0 / p as f64) * pw(p, (supp.level() - 1) as f64 * alpha)
                / (1.0 - pw(p, -alpha));
            let mut inside = Complex64::new(0.0, 0.0);
            for level in supp.level()..f.resolution() {
                let ball = x.ancestor(level);
                let own = ball.class_of(x);
                for c in 0..p {
                    if c == own[0] {
                        continue;
                    }
                    let sib = ball.child(&[c]);
                    inside += (fx * sib.measure() - pyr.integral(&sib)) * dist(level);
                }
            }
            Ok((outside + inside) * k)
        })
        .collect::<Result<Vec<_>>>()?;
    LCFunction::new(w.ball.clone(), res, values)
}

/// The pseudodifferential vector field `D_{F,k}` on the window.
///
/// At each level the integral runs over the set S of the ball `B` around `x`:
/// the `p - 1` children on the `k1(B)`-line through the child containing `x`,
/// other than that child, each weighted by `p^(-L d - 1)` in the `z` measure.
pub fn vf_op(kernel: &dyn Kernel, field: &dyn VectorField, f: &LCFunction, w: &Window) -> Result<LCFunction> {
    let (p, d) = (kernel.p(), kernel.dim());
    check_inputs(p, d, f, w)?;
    let tail = kernel.tail();
    if !(tail.alpha > 0.0) {
        return Err(Error::DivergentKernel(format!("alpha = {}", tail.alpha)));
    }
    let pyr = f.pyramid();
    let cache = KernelCache::new(kernel);
    let mut fields: HashMap<Ball, FpVec> = HashMap::new();
    let res = w.output_resolution(f);
    let set_factor = 1.0 - 1.0 / p as f64;
    let mut values = Vec::new();
    for x in w.ball.descendants(res) {
        let fx = f.value_on(&x)?;
        let (l0, geo) = tail_start(&x, f, &tail);
        let mut acc = fx * tail.c * set_factor * geo;
        for level in l0 + 1..f.resolution() {
            let ball = x.ancestor(level);
            let k1 = match fields.get(&ball) {
                Some(k) => k.clone(),
                None => {
                    let k = field.k1(&ball)?;
                    if fp::is_zero(&k) || k.len() != d {
                        return Err(Error::InvalidDirection);
                    }
                    fields.insert(ball.clone(), k.clone());
                    k
                }
            };
            let t0 = ball.class_of(&x);
            let member_weight = pw(p, -(level as f64) * d as f64 - 1.0);
            let member_avg = pw(p, (level + 1) as f64 * d as f64);
            let mut members = Complex64::new(0.0, 0.0);
            for j in 1..p {
                let cls = fp::add(&t0, &fp::scale(j, &k1, p), p);
                members += pyr.integral(&ball.child(&cls)) * member_avg;
            }
            acc += cache.get(&ball)? * (fx * (p - 1) as f64 - members) * member_weight;
        }
        values.push(acc);
    }
    LCFunction::new(w.ball.clone(), res, values)
}

/// Cellwise comparison of two operator outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub max_abs_diff: f64,
    pub argmax_cell: String,
    /// Largest `|lhs|` over the window.
    pub scale: f64,
    /// `|p^(-s alpha) - |phi'|^alpha|` when the morphism is an explicit affine map.
    pub factor_check: Option<f64>,
}

impl Residual {
    pub fn compare(lhs: &LCFunction, rhs: &LCFunction) -> Result<Residual> {
        let support = lhs.support().sup(rhs.support());
        let res = lhs.resolution().max(rhs.resolution());
        let a = lhs.tabulate_on(&support, res)?;
        let b = rhs.tabulate_on(&support, res)?;
        let mut best = (0usize, -1.0f64);
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            let diff = (x - y).norm();
            if diff > best.1 {
                best = (i, diff);
            }
        }
        let cell = support.descendants(res).swap_remove(best.0);
        Ok(Residual {
            lhs: a[best.0],
            rhs: b[best.0],
            max_abs_diff: best.1.max(0.0),
            argmax_cell: cell.encode(),
            scale: a.iter().map(|v| v.norm()).fold(0.0, f64::max),
            factor_check: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ResidualJson {
    lhs: [f64; 2],
    rhs: [f64; 2],
    max_abs_diff: f64,
    argmax_cell: String,
    scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor_check: Option<f64>,
}

impl Serialize for Residual {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ResidualJson {
            lhs: [self.lhs.re, self.lhs.im],
            rhs: [self.rhs.re, self.rhs.im],
            max_abs_diff: self.max_abs_diff,
            argmax_cell: self.argmax_cell.clone(),
            scale: self.scale,
            factor_check: self.factor_check,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Residual {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let j = ResidualJson::deserialize(de)?;
        Ok(Residual {
            lhs: Complex64::new(j.lhs[0], j.lhs[1]),
            rhs: Complex64::new(j.rhs[0], j.rhs[1]),
            max_abs_diff: j.max_abs_diff,
            argmax_cell: j.argmax_cell,
            scale: j.scale,
            factor_check: j.factor_check,
        })
    }
}

/// `Phi o D_F = p^(-s d) D_{F o phi} o Phi` on the window, for `phi` with level shift `s`.
pub fn verify_transform_rule(phi: &Morphism, kernel: &dyn Kernel, f: &LCFunction, w: &Window) -> Result<Residual> {
    let s = phi.level_shift();
    let lhs = pushforward(phi, &kernel_op(kernel, f, &w.image(phi)?)?)?;
    let transported = TransportedKernel { inner: kernel, phi };
    let factor = pw(f.p(), -(s as f64) * f.dim() as f64);
    let rhs = kernel_op(&transported, &pushforward(phi, f)?, w)?.scale(Complex64::new(factor, 0.0));
    Residual::compare(&lhs, &rhs)
}

/// `D^alpha o Phi = p^(-s alpha) Phi o D^alpha` on the window.
pub fn verify_chain_rule(phi: &Morphism, alpha: f64, f: &LCFunction, w: &Window) -> Result<Residual> {
    let s = phi.level_shift();
    let factor = pw(f.p(), -(s as f64) * alpha);
    let lhs = vladimirov(alpha, &pushforward(phi, f)?, w)?;
    let rhs = pushforward(phi, &vladimirov(alpha, f, &w.image(phi)?)?)?.scale(Complex64::new(factor, 0.0));
    let mut r = Residual::compare(&lhs, &rhs)?;
    r.factor_check = phi.as_differentiable().map(|spec| (factor - spec.derivative_norm().powf(alpha)).abs());
    Ok(r)
}

/// `Phi o D_{F,k} = p^(-s d) D_{F o phi, A^-1 k o phi} o Phi` on the window.
pub fn verify_covariance(
    phi: &Morphism,
    kernel: &dyn Kernel,
    field: &dyn VectorField,
    f: &LCFunction,
    w: &Window,
) -> Result<Residual> {
    let s = phi.level_shift();
    let lhs = pushforward(phi, &vf_op(kernel, field, f, &w.image(phi)?)?)?;
    let tk = TransportedKernel { inner: kernel, phi };
    let tf = TransportedField { inner: field, phi };
    let factor = pw(f.p(), -(s as f64) * f.dim() as f64);
    let rhs = vf_op(&tk, &tf, &pushforward(phi, f)?, w)?.scale(Complex64::new(factor, 0.0));
    Residual::compare(&lhs, &rhs)
}

#[derive(Serialize, Deserialize)]
struct KernelEntryJson {
    ball: String,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TailJson {
    c_re: f64,
    c_im: f64,
    alpha: f64,
    from_level: Option<i32>,
}

#[derive(Serialize, Deserialize)]
struct KernelJson {
    p: u32,
    d: usize,
    #[serde(default)]
    table: Vec<KernelEntryJson>,
    tail: TailJson,
}

impl Serialize for KernelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelJson {
            p: self.p,
            d: self.d,
            table: self.table.iter().map(|(b, v)| KernelEntryJson { ball: b.encode(), re: v.re, im: v.im }).collect(),
            tail: TailJson { c_re: self.tail.c.re, c_im: self.tail.c.im, alpha: self.tail.alpha, from_level: self.tail.from_level },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = KernelJson::deserialize(de)?;
        let table = j
            .table
            .iter()
            .map(|e| Ok((Ball::decode(&e.ball)?, Complex64::new(e.re, e.im))))
            .collect::<Result<BTreeMap<_, _>>>()
            .map_err(D::Error::custom)?;
        let tail = Tail { c: Complex64::new(j.tail.c_re, j.tail.c_im), alpha: j.tail.alpha, from_level: j.tail.from_level };
        KernelSpec::new(j.p, j.d, tail, table).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct FieldEntryJson {
    ball: String,
    k1: FpVec,
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<FieldEntryJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<FpVec>,
}

impl Serialize for VectorFieldSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            VectorFieldSpec::Seeded { seed } => {
                FieldJson { kind: "seeded".into(), seed: Some(*seed), entries: None, default: None }
            }
            VectorFieldSpec::Table { entries, default } => FieldJson {
                kind: "table".into(),
                seed: None,
                entries: Some(entries.iter().map(|(b, k)| FieldEntryJson { ball: b.encode(), k1: k.clone() }).collect()),
                default: Some(default.clone()),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VectorFieldSpec {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = FieldJson::deserialize(de)?;
        match j.kind.as_str() {
            "seeded" => Ok(VectorFieldSpec::Seeded { seed: j.seed.ok_or_else(|| D::Error::custom("seeded field needs a seed"))? }),
            "table" => {
                let default = j.default.ok_or_else(|| D::Error::custom("table field needs a default"))?;
                let mut entries = BTreeMap::new();
                let mut p = None;
                for e in j.entries.unwrap_or_default() {
                    let b = Ball::decode(&e.ball).map_err(D::Error::custom)?;
                    p = Some(b.p());
                    entries.insert(b, e.k1);
                }
                let p = p.unwrap_or(u32::MAX);
                VectorFieldSpec::table(entries, default, p).map_err(D::Error::custom)
            }
            other => Err(D::Error::custom(format!("unknown vector field kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{wavelet, WaveletIndex};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gamma_p_examples() {
        assert!((gamma_p(1.0, 2).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((gamma_p(2.0, 3).unwrap() - 8.0 * 27.0 / 26.0).abs() < 1e-13);
        assert!(matches!(gamma_p(0.0, 3), Err(Error::OutOfDomain(_))));
        assert!(matches!(gamma_p(-1.0, 3), Err(Error::OutOfDomain(_))));
        for p in [2u32, 3, 5, 7] {
            let mut last = 0.0;
            for i in 1..60 {
                let g = gamma_p(i as f64 * 0.1, p).unwrap();
                assert!(g > last);
                last = g;
            }
        }
    }

    #[test]
    fn eigenvalue_recurrence() {
        for g in -3..4 {
            let a = wavelet_eigenvalue(1.5, g + 1, 3);
            let b = wavelet_eigenvalue(1.5, g, 3) * pw(3, -1.5);
            assert!((a - b).abs() < 1e-12 * b);
        }
        assert_eq!(wavelet_eigenvalue(1.0, 1, 2), 1.0);
        assert_eq!(wavelet_eigenvalue(1.0, 0, 2), 2.0);
    }

    #[test]
    fn zero_in_zero_out() {
        let f = LCFunction::zero(3, 1);
        let w = Window::new(Ball::around_origin(3, 1, -1), 2);
        let out = vladimirov(1.0, &f, &w).unwrap();
        assert!(out.sup_norm() == 0.0);
        let psi = wavelet(&WaveletIndex::new(3, 0, vec![vec![]], vec![1]).unwrap()).unwrap();
        assert!(kernel_op(&KernelSpec::zero(3, 1), &psi, &w).unwrap().sup_norm() == 0.0);
        assert!(matches!(KernelSpec::power_law(3, 1, c(1.0), 0.0), Err(Error::DivergentKernel(_))));
    }

    #[test]
    fn wavelets_are_eigenfunctions() {
        for p in [2u32, 3, 5] {
            for alpha in [0.5, 1.0, 2.0] {
                for gamma in -2..=2 {
                    let idx = WaveletIndex::new(p, gamma, vec![vec![1]], vec![1]).unwrap();
                    let psi = wavelet(&idx).unwrap();
                    let w = Window::new(psi.support().ancestor(psi.support().level() - 1), psi.resolution() + 1);
                    let out = vladimirov(alpha, &psi, &w).unwrap();
                    let lam = wavelet_eigenvalue(alpha, gamma, p);
                    let expect = psi.scale(c(lam));
                    let err = out.max_abs_diff(&expect).unwrap();
                    assert!(err <= 1e-10 * lam * psi.sup_norm(), "p={p} a={alpha} g={gamma}: {err}");
                }
            }
        }
    }

    #[test]
    fn kernel_op_agrees_with_vladimirov() {
        let p = 3;
        let mut rng = SplitMix64::new(3);
        let f = LCFunction::from_cells(Ball::around_origin(p, 1, -1), 2, |_| {
            Complex64::new(rng.next_f64(), rng.next_f64())
        })
        .unwrap();
        let w = Window::new(Ball::around_origin(p, 1, -3), 2);
        for alpha in [0.5, 1.0, 2.0] {
            let a = vladimirov(alpha, &f, &w).unwrap();
            let b = kernel_op(&KernelSpec::vladimirov(p, alpha).unwrap(), &f, &w).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() <= 1e-12 * a.sup_norm().max(1.0));
        }
    }

    #[test]
    fn mean_zero_input_vanishes_outside_support() {
        let psi = wavelet(&WaveletIndex::new(2, 0, vec![vec![]], vec![1]).unwrap()).unwrap();
        let kernel = KernelSpec::new(
            2,
            1,
            Tail { c: c(0.7), alpha: 1.3, from_level: Some(-1) },
            [(Ball::around_origin(2, 1, -1), c(5.0))].into_iter().collect(),
        )
        .unwrap();
        let w = Window::new(Ball::around_origin(2, 1, -3), 1);
        let out = kernel_op(&kernel, &psi, &w).unwrap();
        for cell in out.cells() {
            if !psi.support().contains(&cell) {
                assert!(out.value_on(&cell).unwrap().norm() < 1e-14);
            }
        }
    }

    #[test]
    fn one_dimensional_vector_field_is_the_kernel_operator() {
        for p in [2u32, 3] {
            let mut rng = SplitMix64::new(p as u64);
            let f = LCFunction::from_cells(Ball::around_origin(p, 1, -1), 2, |_| {
                Complex64::new(rng.next_f64(), rng.next_f64())
            })
            .unwrap();
            let kernel = KernelSpec::seeded_table(
                p,
                1,
                Tail { c: c(1.1), alpha: 0.8, from_level: Some(-2) },
                &Ball::around_origin(p, 1, -2),
                1,
                9,
            )
            .unwrap();
            let w = Window::new(Ball::around_origin(p, 1, -2), 2);
            let a = kernel_op(&kernel, &f, &w).unwrap();
            let b = vf_op(&kernel, &VectorFieldSpec::seeded(4), &f, &w).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() <= 1e-12 * a.sup_norm());
        }
    }

    #[test]
    fn vector_field_is_invariant_under_rescaling_k1() {
        let (p, d) = (3, 2);
        let mut rng = SplitMix64::new(1);
        let f = LCFunction::from_cells(Ball::unit(p, d), 2, |_| Complex64::new(rng.next_f64(), 0.0)).unwrap();
        let kernel = KernelSpec::power_law(p, d, c(1.0), 1.0).unwrap();
        let field = VectorFieldSpec::seeded(8);
        let w = Window::new(Ball::around_origin(p, d, -1), 2);
        let a = vf_op(&kernel, &field, &f, &w).unwrap();
        let b = vf_op(&kernel, &ScaledField { inner: &field, factor: 2 }, &f, &w).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_residuals_are_tiny() {
        let p = 3;
        let id = Morphism::identity(p, 1);
        let psi = wavelet(&WaveletIndex::new(p, 1, vec![vec![2]], vec![1]).unwrap()).unwrap();
        let w = Window::new(psi.support().parent(), psi.resolution());
        let k = KernelSpec::vladimirov(p, 1.0).unwrap();
        assert!(verify_transform_rule(&id, &k, &psi, &w).unwrap().max_abs_diff <= 1e-12);
        assert!(verify_chain_rule(&id, 1.0, &psi, &w).unwrap().max_abs_diff <= 1e-12);
        let id2 = Morphism::identity(p, 2);
        let f = wavelet(&WaveletIndex::new(p, 0, vec![vec![], vec![]], vec![1, 1]).unwrap()).unwrap();
        let r = verify_covariance(&id2, &KernelSpec::power_law(p, 2, c(1.0), 1.0).unwrap(), &VectorFieldSpec::seeded(1), &f, &Window::of(&f))
            .unwrap();
        assert!(r.max_abs_diff <= 1e-12);
    }

    #[test]
    fn dilation_transform_rule_and_chain_rule() {
        let p = 2;
        let psi = wavelet(&WaveletIndex::new(p, 0, vec![vec![]], vec![1]).unwrap()).unwrap();
        let w = Window::new(Ball::around_origin(p, 1, -2), 1);
        let k = KernelSpec::vladimirov(p, 1.0).unwrap();
        let dil = Morphism::dilation(p, 1, 1);
        assert!(verify_transform_rule(&dil, &k, &psi, &w).unwrap().max_abs_diff <= 1e-9);
        // x -> x / p: D^a o Phi = p^a Phi o D^a
        let shrink = Morphism::dilation(p, 1, -1);
        let r = verify_chain_rule(&shrink, 1.0, &psi, &w).unwrap();
        assert!(r.max_abs_diff <= 1e-9);
        let lhs = vladimirov(1.0, &pushforward(&shrink, &psi).unwrap(), &w).unwrap();
        let rhs = pushforward(&shrink, &vladimirov(1.0, &psi, &w.image(&shrink).unwrap()).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs.scale(c(2.0))).unwrap() <= 1e-12);
    }

    #[test]
    fn json_shapes() {
        let k = KernelSpec::new(
            2,
            1,
            Tail { c: c(1.0), alpha: 1.0, from_level: Some(0) },
            [(Ball::unit(2, 1), c(3.0))].into_iter().collect(),
        )
        .unwrap();
        let j = serde_json::to_string(&k).unwrap();
        assert_eq!(
            j,
            r#"{"p":2,"d":1,"table":[{"ball":"p=2;d=1;L=0;c=","re":3.0,"im":0.0}],"tail":{"c_re":1.0,"c_im":0.0,"alpha":1.0,"from_level":0}}"#
        );
        assert_eq!(serde_json::from_str::<KernelSpec>(&j).unwrap(), k);
        let f = VectorFieldSpec::seeded(5);
        let j = serde_json::to_string(&f).unwrap();
        assert_eq!(j, r#"{"kind":"seeded","seed":5}"#);
        assert_eq!(serde_json::from_str::<VectorFieldSpec>(&j).unwrap(), f);
    }
}
