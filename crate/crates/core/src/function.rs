//! Locally constant, compactly supported complex functions on `Q_p^d`.
//!
//! A function is a dense table over the balls of level `R` (the resolution)
//! inside its support ball, in lexicographic path order from the support.

use itertools::Itertools;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ball::{pow_rational, Ball};
use crate::cyclotomic::{root_of_unity, Cyclotomic};
use crate::error::{Error, Result};
use crate::fp::{self, FpVec};
use crate::morphism::Morphism;
use crate::padic::{PAdicVec, DEFAULT_PRECISION};

/// Largest table the function space will build.
pub const MAX_CELLS: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct LCFunction {
    support: Ball,
    resolution: i32,
    values: Vec<Complex64>,
}

/// Index of `b` among the descendants of `anc` at `b`'s level.
pub fn path_index(anc: &Ball, b: &Ball) -> usize {
    let p = anc.p();
    let q = fp::class_count(p, anc.dim());
    (anc.level()..b.level()).fold(0usize, |idx, l| {
        let c: FpVec = (0..anc.dim()).map(|i| b.digit(i, l) as u32).collect();
        idx * q + fp::class_index(&c, p)
    })
}

fn powf(p: u32, e: f64) -> f64 {
    (p as f64).powf(e)
}

impl LCFunction {
    pub fn new(support: Ball, resolution: i32, values: Vec<Complex64>) -> Result<Self> {
        if resolution < support.level() {
            return Err(Error::OutOfDomain(format!(
                "resolution {resolution} is coarser than the support level {}",
                support.level()
            )));
        }
        let expected = cell_count(&support, resolution)?;
        if values.len() != expected {
            return Err(Error::MissingCells { expected, got: values.len() });
        }
        Ok(LCFunction { support, resolution, values })
    }

    /// Tabulates `value` on every cell of level `resolution` inside `support`.
    pub fn from_cells(support: Ball, resolution: i32, value: impl FnMut(&Ball) -> Complex64) -> Result<Self> {
        cell_count(&support, resolution)?;
        let values = support.descendants(resolution).iter().map(value).collect();
        Self::new(support, resolution, values)
    }

    pub fn constant(support: Ball, value: Complex64) -> Self {
        LCFunction { resolution: support.level(), support, values: vec![value] }
    }

    pub fn indicator(b: &Ball) -> Self {
        Self::constant(b.clone(), Complex64::new(1.0, 0.0))
    }

    /// Indicator of `Z_p^d`.
    pub fn omega(p: u32, d: usize) -> Self {
        Self::indicator(&Ball::unit(p, d))
    }

    pub fn zero(p: u32, d: usize) -> Self {
        Self::constant(Ball::unit(p, d), Complex64::new(0.0, 0.0))
    }

    pub fn p(&self) -> u32 {
        self.support.p()
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &Ball {
        &self.support
    }

    pub fn resolution(&self) -> i32 {
        self.resolution
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn cells(&self) -> Vec<Ball> {
        self.support.descendants(self.resolution)
    }

    /// Haar measure of one cell.
    pub fn cell_measure(&self) -> f64 {
        powf(self.p(), -(self.resolution as f64) * self.dim() as f64)
    }

    /// Value on a ball of level `>= resolution` (zero outside the support).
    pub fn value_on(&self, b: &Ball) -> Result<Complex64> {
        if b.level() < self.resolution {
            return Err(Error::OutOfDomain(format!("{b} is coarser than the resolution {}", self.resolution)));
        }
        if !self.support.contains(b) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.values[path_index(&self.support, &b.ancestor(self.resolution))])
    }

    pub fn evaluate(&self, x: &PAdicVec) -> Result<Complex64> {
        if !self.support.contains_point(x)? {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.value_on(&Ball::from_point(x, self.resolution)?)
    }

    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.cell_measure()
    }

    /// Values on the cells of level `resolution` inside `target`.
    pub fn tabulate_on(&self, target: &Ball, resolution: i32) -> Result<Vec<Complex64>> {
        if resolution < self.resolution || resolution < target.level() {
            return Err(Error::OutOfDomain(format!("cannot tabulate at resolution {resolution}")));
        }
        let n = cell_count(target, resolution)?;
        let q = fp::class_count(self.p(), self.dim());
        let below = q.pow((resolution - self.resolution) as u32);
        if self.support.contains(target) {
            let offset = path_index(&self.support, target) * q.pow((resolution - target.level()) as u32);
            Ok((0..n).map(|i| self.values[(offset + i) / below]).collect())
        } else if target.contains(&self.support) {
            let inner = q.pow((resolution - self.support.level()) as u32);
            let start = path_index(target, &self.support) * inner;
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (i, slot) in out[start..start + inner].iter_mut().enumerate() {
                *slot = self.values[i / below];
            }
            Ok(out)
        } else {
            Ok(vec![Complex64::new(0.0, 0.0); n])
        }
    }

    pub fn refine(&self, resolution: i32) -> Result<LCFunction> {
        LCFunction::new(self.support.clone(), resolution, self.tabulate_on(&self.support, resolution)?)
    }

    /// `sum_i c_i f_i` on the smallest common support.
    pub fn combination(terms: &[(Complex64, &LCFunction)]) -> Result<LCFunction> {
        let (_, first) = terms.first().ok_or_else(|| Error::OutOfDomain("empty combination".into()))?;
        let support = terms.iter().fold(first.support.clone(), |acc, (_, f)| acc.sup(&f.support));
        let resolution = terms.iter().map(|(_, f)| f.resolution).max().unwrap();
        let mut values = vec![Complex64::new(0.0, 0.0); cell_count(&support, resolution)?];
        for (c, f) in terms {
            for (v, x) in values.iter_mut().zip(f.tabulate_on(&support, resolution)?) {
                *v += c * x;
            }
        }
        LCFunction::new(support, resolution, values)
    }

    pub fn scale(&self, c: Complex64) -> LCFunction {
        LCFunction { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub fn add(&self, o: &LCFunction) -> Result<LCFunction> {
        let one = Complex64::new(1.0, 0.0);
        Self::combination(&[(one, self), (one, o)])
    }

    pub fn sub(&self, o: &LCFunction) -> Result<LCFunction> {
        Self::combination(&[(Complex64::new(1.0, 0.0), self), (Complex64::new(-1.0, 0.0), o)])
    }

    /// `int f conj(g)`.
    pub fn inner(&self, g: &LCFunction) -> Result<Complex64> {
        let support = if self.support.contains(&g.support) {
            g.support.clone()
        } else if g.support.contains(&self.support) {
            self.support.clone()
        } else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let resolution = self.resolution.max(g.resolution);
        let a = self.tabulate_on(&support, resolution)?;
        let b = g.tabulate_on(&support, resolution)?;
        let mu = powf(self.p(), -(resolution as f64) * self.dim() as f64);
        Ok(a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum::<Complex64>() * mu)
    }

    pub fn l2norm(&self) -> f64 {
        (self.values.iter().map(Complex64::norm_sqr).sum::<f64>() * self.cell_measure()).sqrt()
    }

    /// Largest absolute difference from `g` on a common refinement.
    pub fn max_abs_diff(&self, g: &LCFunction) -> Result<f64> {
        let d = self.sub(g)?;
        Ok(d.values.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `x -> f(x - a)`.
    pub fn translate(&self, a: &PAdicVec) -> Result<LCFunction> {
        let prec = DEFAULT_PRECISION.max((self.resolution - self.support.floor()).max(0) as u32 + 4);
        let center = self.support.center(prec).add(a)?;
        let support = Ball::from_point(&center, self.support.level())?;
        let cells = support.descendants(self.resolution);
        let values = cells
            .iter()
            .map(|c| {
                let back = c.center(prec).sub(a)?;
                self.value_on(&Ball::from_point(&back, self.resolution)?)
            })
            .collect::<Result<Vec<_>>>()?;
        LCFunction::new(support, self.resolution, values)
    }

    /// Sums over every ball between the support and the cells.
    pub fn pyramid(&self) -> Pyramid {
        let q = fp::class_count(self.p(), self.dim());
        let depth = (self.resolution - self.support.level()) as usize;
        let mut levels = vec![self.values.clone()];
        for _ in 0..depth {
            let last = levels.last().unwrap();
            levels.push(last.chunks(q).map(|c| c.iter().sum()).collect());
        }
        levels.reverse();
        Pyramid { support: self.support.clone(), resolution: self.resolution, levels, cell_measure: self.cell_measure() }
    }

    /// `c` and the index of a wavelet with `self = c psi`, if there is one.
    pub fn as_wavelet_multiple(&self, tol: f64) -> Option<(WaveletIndex, Complex64)> {
        let (p, d) = (self.p(), self.dim());
        let table = if self.resolution == self.support.level() + 1 {
            self.values.clone()
        } else if self.resolution > self.support.level() + 1 {
            // must be constant on the children of the support
            let per = fp::class_count(p, d).pow((self.resolution - self.support.level() - 1) as u32);
            let coarse: Vec<Complex64> = self.values.chunks(per).map(|c| c[0]).collect();
            let ok = self.values.chunks(per).zip(&coarse).all(|(c, v)| c.iter().all(|x| (x - v).norm() <= tol));
            if !ok {
                return None;
            }
            coarse
        } else {
            return None;
        };
        for jidx in 1..fp::class_count(p, d) {
            let idx = WaveletIndex::on_ball(&self.support, fp::class_from_index(jidx, p, d)).ok()?;
            let psi = wavelet(&idx).ok()?;
            let c = table[0] / psi.values[0];
            if table.iter().zip(&psi.values).all(|(v, w)| (v - c * w).norm() <= tol * c.norm().max(1.0)) {
                return Some((idx, c));
            }
        }
        None
    }
}

fn cell_count(support: &Ball, resolution: i32) -> Result<usize> {
    let q = fp::class_count(support.p(), support.dim()) as u128;
    let n = q.checked_pow((resolution - support.level()) as u32).unwrap_or(u128::MAX);
    if n > MAX_CELLS as u128 {
        return Err(Error::EnumerationCap(n, MAX_CELLS as u128));
    }
    Ok(n as usize)
}

/// Integrals of a function over every ball, by table lookup.
#[derive(Clone, Debug)]
pub struct Pyramid {
    support: Ball,
    resolution: i32,
    // levels[k] holds sums of cell values over the balls of level support + k
    levels: Vec<Vec<Complex64>>,
    cell_measure: f64,
}

impl Pyramid {
    pub fn integral(&self, b: &Ball) -> Complex64 {
        if b.level() <= self.support.level() {
            if b.contains(&self.support) {
                return self.levels[0][0] * self.cell_measure;
            }
            return Complex64::new(0.0, 0.0);
        }
        if !self.support.contains(b) {
            return Complex64::new(0.0, 0.0);
        }
        if b.level() <= self.resolution {
            let depth = (b.level() - self.support.level()) as usize;
            self.levels[depth][path_index(&self.support, b)] * self.cell_measure
        } else {
            let cell = b.ancestor(self.resolution);
            let sub = powf(b.p(), -((b.level() - self.resolution) as f64) * b.dim() as f64);
            self.levels.last().unwrap()[path_index(&self.support, &cell)] * self.cell_measure * sub
        }
    }

    pub fn total(&self) -> Complex64 {
        self.levels[0][0] * self.cell_measure
    }
}

/// Wavelet `psi_{gamma n J}`: supported on the ball of level `-gamma` centered at `p^-gamma n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveletIndex {
    pub p: u32,
    pub gamma: i32,
    /// Per coordinate, the digits of `n` at positions `-len .. -1`, least significant first.
    pub n: Vec<Vec<u8>>,
    #[serde(rename = "J")]
    pub j: FpVec,
}

impl WaveletIndex {
    pub fn new(p: u32, gamma: i32, n: Vec<Vec<u8>>, j: FpVec) -> Result<Self> {
        if fp::is_zero(&j) || j.iter().any(|&x| x >= p) {
            return Err(Error::InvalidIndex(format!("J = {j:?}")));
        }
        if n.len() != j.len() {
            return Err(Error::InvalidIndex(format!("n has {} coordinates, J has {}", n.len(), j.len())));
        }
        // canonical n: drop zero digits at the low end
        let support = Ball::new(p, 0, n).map_err(|e| Error::InvalidIndex(e.to_string()))?;
        let n = (0..j.len()).map(|i| support.coord_digits(i).to_vec()).collect();
        Ok(WaveletIndex { p, gamma, n, j })
    }

    /// The wavelet with character `J` on `support`.
    pub fn on_ball(support: &Ball, j: FpVec) -> Result<Self> {
        let n = (0..support.dim()).map(|i| support.coord_digits(i).to_vec()).collect();
        Self::new(support.p(), -support.level(), n, j)
    }

    pub fn dim(&self) -> usize {
        self.j.len()
    }

    pub fn support(&self) -> Ball {
        Ball::new(self.p, -self.gamma, self.n.clone()).expect("validated")
    }
}

/// `psi_{gamma n J}(x) = p^(-d gamma / 2) chi(p^-1 J . (p^gamma x - n)) Omega(|p^gamma x - n|)`.
pub fn wavelet(idx: &WaveletIndex) -> Result<LCFunction> {
    let p = idx.p;
    let d = idx.dim();
    if fp::is_zero(&idx.j) {
        return Err(Error::InvalidIndex("J must be nonzero".into()));
    }
    let support = idx.support();
    let amp = powf(p, -(d as f64) * idx.gamma as f64 / 2.0);
    let values = (0..fp::class_count(p, d))
        .map(|ci| {
            let c = fp::class_from_index(ci, p, d);
            let phase = fp::dot(&idx.j, &c, p);
            root_of_unity(phase as i64, p) * amp
        })
        .collect();
    LCFunction::new(support.clone(), support.level() + 1, values)
}

/// `x -> f(phi(x))`.
pub fn pushforward(phi: &Morphism, f: &LCFunction) -> Result<LCFunction> {
    let s = phi.level_shift();
    let support = phi.preimage(f.support())?;
    let resolution = f.resolution() - s;
    let depth = (resolution - support.level()) as u32;
    cell_count(&support, resolution)?;
    // images of the cells, by descending the tree along tangent maps
    let mut pairs = vec![(support.clone(), phi.image_ball(&support)?)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pairs.len() * fp::class_count(f.p(), f.dim()));
        for (b, img) in &pairs {
            let t = phi.tangent_map(b)?;
            for c in b.children() {
                let cls = c.class_in_parent();
                next.push((c, img.child(&t.apply(&cls, f.p()))));
            }
        }
        pairs = next;
    }
    let values = pairs.iter().map(|(_, img)| f.value_on(img)).collect::<Result<Vec<_>>>()?;
    LCFunction::new(support, resolution, values)
}

/// `p^(-s d / 2) f(phi(x))`, an isometry of `L^2` for a parabolic `phi` with level shift `s`.
pub fn unitary_action(phi: &Morphism, f: &LCFunction) -> Result<LCFunction> {
    let s = phi.level_shift();
    let g = pushforward(phi, f)?;
    Ok(g.scale(Complex64::new(powf(f.p(), -(s as f64) * f.dim() as f64 / 2.0), 0.0)))
}

/// Permutations of `0..p` in lexicographic order.
pub fn orbit_permutations(p: u32) -> Vec<Vec<u32>> {
    (0..p).permutations(p as usize).collect()
}

/// The `p!` functions on `b` taking the values `p^(L/2) zeta^pi(c)` on its children (`d = 1`).
pub fn ball_orbit_functions(b: &Ball) -> Result<Vec<LCFunction>> {
    if b.dim() != 1 {
        return Err(Error::UnsupportedDimension(b.dim(), "orbit functions are one-dimensional"));
    }
    let p = b.p();
    let amp = powf(p, b.level() as f64 / 2.0);
    orbit_permutations(p)
        .into_iter()
        .map(|perm| {
            let values = perm
                .iter()
                .map(|&k| root_of_unity(k as i64, p) * amp)
                .collect();
            LCFunction::new(b.clone(), b.level() + 1, values)
        })
        .collect()
}

/// `<1_s, psi>` for the orbit function of `perm` on `b`, as `p^(L/2) w` with `w` exact.
pub fn orbit_inner_with_indicator(b: &Ball, perm: &[u32], s: &Ball) -> (i32, Cyclotomic) {
    let p = b.p();
    let mut w = Cyclotomic::zero(p);
    for (ci, &k) in perm.iter().enumerate() {
        let child = b.child_by_index(ci);
        let mu = if child.contains(s) {
            s.measure_exact()
        } else if s.contains(&child) {
            child.measure_exact()
        } else {
            continue;
        };
        w = w.add(&Cyclotomic::monomial(p, -(k as i64), mu));
    }
    (b.level(), w)
}

/// `|<1_s, psi>|^2 = p^L |w|^2`, exactly.
pub fn orbit_inner_norm_sqr(b: &Ball, perm: &[u32], s: &Ball) -> Option<num_rational::BigRational> {
    let (level, w) = orbit_inner_with_indicator(b, perm, s);
    Some(w.mul(&w.conj()).to_rational()? * pow_rational(b.p(), level as i64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSum {
    pub partial: f64,
    pub tail_bound: f64,
    /// `(gamma, contribution)` with `gamma = -level` of the balls summed.
    pub per_gamma: Vec<(i32, f64)>,
}

impl FrameSum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,contribution,cumulative\n");
        let mut acc = 0.0;
        for (g, c) in &self.per_gamma {
            acc += c;
            out.push_str(&format!("{g},{c:.17e},{acc:.17e}\n"));
        }
        out
    }
}

/// `sum |<g, psi>|^2` over the orbit functions of every ball meeting `supp g`
/// with diameter at most `p^gamma_max`, plus the exact geometric tail beyond.
pub fn frame_partial_sum(g: &LCFunction, gamma_max: i32) -> Result<FrameSum> {
    if g.dim() != 1 {
        return Err(Error::UnsupportedDimension(g.dim(), "frame sums are one-dimensional"));
    }
    let p = g.p();
    let perms = orbit_permutations(p);
    let roots: Vec<Complex64> = (0..p).map(|k| root_of_unity(-(k as i64), p)).collect();
    let orbit_sum = |level: i32, child_integrals: &[Complex64]| -> f64 {
        let amp2 = powf(p, level as f64);
        perms
            .iter()
            .map(|perm| {
                let z: Complex64 = child_integrals.iter().zip(perm).map(|(i, &k)| i * roots[k as usize]).sum();
                z.norm_sqr() * amp2
            })
            .sum()
    };
    let pyr = g.pyramid();
    let total = pyr.total();
    let supp = g.support();
    let mut per_gamma = Vec::new();
    // balls containing the support
    for level in -gamma_max..=supp.level() {
        let contrib = if level == supp.level() {
            let ints: Vec<Complex64> = supp.children().iter().map(|c| pyr.integral(c)).collect();
            orbit_sum(level, &ints)
        } else {
            let ball = supp.ancestor(level);
            let inside = ball.class_of(supp);
            let ints: Vec<Complex64> = (0..p)
                .map(|c| if c == inside[0] { total } else { Complex64::new(0.0, 0.0) })
                .collect();
            orbit_sum(level, &ints)
        };
        per_gamma.push((-level, contrib));
    }
    // balls strictly inside the support and coarser than the cells
    for level in supp.level() + 1..g.resolution() {
        if -level > gamma_max {
            continue;
        }
        let contrib = supp
            .descendants(level)
            .iter()
            .map(|b| {
                let ints: Vec<Complex64> = b.children().iter().map(|c| pyr.integral(c)).collect();
                orbit_sum(level, &ints)
            })
            .sum();
        per_gamma.push((-level, contrib));
    }
    let partial = per_gamma.iter().map(|(_, c)| c).sum();
    let fact: f64 = (1..=p).map(f64::from).product();
    let tail_bound = fact * total.norm_sqr() * powf(p, -(gamma_max as f64)) / (p as f64 - 1.0);
    Ok(FrameSum { partial, tail_bound, per_gamma })
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    path: Vec<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct FunctionJson {
    support: Ball,
    #[serde(rename = "R")]
    resolution: i32,
    cells: Vec<CellJson>,
}

impl Serialize for LCFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let q = fp::class_count(self.p(), self.dim());
        let depth = (self.resolution - self.support.level()) as usize;
        let cells = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut path = vec![0usize; depth];
                let mut r = i;
                for slot in path.iter_mut().rev() {
                    *slot = r % q;
                    r /= q;
                }
                CellJson { path, re: v.re, im: v.im }
            })
            .collect();
        FunctionJson { support: self.support.clone(), resolution: self.resolution, cells }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LCFunction {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = FunctionJson::deserialize(de)?;
        let n = cell_count(&j.support, j.resolution).map_err(D::Error::custom)?;
        let q = fp::class_count(j.support.p(), j.support.dim());
        let depth = (j.resolution - j.support.level()).max(0) as usize;
        let mut values = vec![None; n];
        for c in &j.cells {
            if c.path.len() != depth || c.path.iter().any(|&x| x >= q) {
                return Err(D::Error::custom(format!("bad cell path {:?}", c.path)));
            }
            let idx = c.path.iter().fold(0usize, |acc, &x| acc * q + x);
            values[idx] = Some(Complex64::new(c.re, c.im));
        }
        let got = values.iter().filter(|v| v.is_some()).count();
        if got != n {
            return Err(D::Error::custom(Error::MissingCells { expected: n, got }));
        }
        LCFunction::new(j.support, j.resolution, values.into_iter().map(Option::unwrap).collect())
            .map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PAdic;
    use crate::rng::SplitMix64;
    use crate::sample;

    const N: u32 = DEFAULT_PRECISION;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn omega_examples() {
        let om = LCFunction::omega(3, 1);
        assert_eq!(om.evaluate(&PAdicVec::from_i64s(&[0], 3, N)).unwrap(), c(1.0, 0.0));
        let third = PAdicVec(vec![PAdic::parse(".1", 3, N).unwrap()]);
        assert_eq!(om.evaluate(&third).unwrap(), c(0.0, 0.0));
        assert_eq!(om.integral(), c(1.0, 0.0));
    }

    #[test]
    fn indicator_of_child_has_child_measure() {
        for (p, d) in [(2, 1), (3, 2), (5, 1)] {
            let f = LCFunction::indicator(&Ball::unit(p, d).child_by_index(1));
            assert!(close(f.integral(), c((p as f64).powi(-(d as i32)), 0.0), 1e-15));
        }
    }

    #[test]
    fn missing_cells_is_an_error() {
        let r = LCFunction::new(Ball::unit(2, 1), 2, vec![c(1.0, 0.0); 3]);
        assert_eq!(r, Err(Error::MissingCells { expected: 4, got: 3 }));
    }

    #[test]
    fn refinement_keeps_values() {
        let mut rng = SplitMix64::new(1);
        let supp = Ball::unit(3, 1);
        let f = LCFunction::from_cells(supp.clone(), 2, |_| c(rng.next_f64(), 0.0)).unwrap();
        let g = f.refine(3).unwrap();
        for n in 0..81 {
            let x = PAdicVec::from_i64s(&[n], 3, N);
            assert_eq!(f.evaluate(&x).unwrap(), g.evaluate(&x).unwrap());
        }
        assert!(close(f.integral(), g.integral(), 1e-14));
    }

    #[test]
    fn wavelet_examples() {
        let idx = WaveletIndex::new(2, 0, vec![vec![]], vec![1]).unwrap();
        let psi = wavelet(&idx).unwrap();
        assert_eq!(psi.values(), &[c(1.0, 0.0), c(-1.0, 0.0)]);
        let psi3 = wavelet(&WaveletIndex::new(3, 0, vec![vec![]], vec![1]).unwrap()).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!(close(psi3.values()[1], w, 1e-15));
        assert!(close(psi3.values()[2], w * w, 1e-15));
        assert!(matches!(WaveletIndex::new(3, 0, vec![vec![]], vec![0]), Err(Error::InvalidIndex(_))));
        // support of psi_{1, n, J}: level -1 ball around p^-1 n
        let idx = WaveletIndex::new(3, 1, vec![vec![2]], vec![1]).unwrap();
        assert_eq!(idx.support().encode(), "p=3;d=1;L=-1;c=2");
    }

    #[test]
    fn wavelets_are_orthonormal_and_mean_zero() {
        for (p, d) in [(2, 1), (3, 1), (3, 2), (2, 3)] {
            let supp = Ball::new(p, -1, vec![vec![1]; d]).unwrap();
            let psis: Vec<LCFunction> = (1..fp::class_count(p, d))
                .map(|j| wavelet(&WaveletIndex::on_ball(&supp, fp::class_from_index(j, p, d)).unwrap()).unwrap())
                .collect();
            for (a, fa) in psis.iter().enumerate() {
                assert!(fa.integral().norm() < 1e-12);
                assert!((fa.l2norm() - 1.0).abs() < 1e-12);
                for (b, fb) in psis.iter().enumerate() {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!(close(fa.inner(fb).unwrap(), c(expect, 0.0), 1e-12));
                }
            }
        }
    }

    #[test]
    fn wavelets_on_nested_balls_are_orthogonal() {
        let p = 3;
        let big = wavelet(&WaveletIndex::new(p, 1, vec![vec![]], vec![1]).unwrap()).unwrap();
        let small = wavelet(&WaveletIndex::new(p, -1, vec![vec![]], vec![2]).unwrap()).unwrap();
        assert!(big.inner(&small).unwrap().norm() < 1e-12);
    }

    #[test]
    fn haar_translation_invariance() {
        let mut rng = SplitMix64::new(4);
        let f = LCFunction::from_cells(Ball::unit(3, 1), 3, |_| c(rng.next_f64(), rng.next_f64())).unwrap();
        for a in [1i64, 5, -7] {
            let g = f.translate(&PAdicVec::from_i64s(&[a], 3, N)).unwrap();
            assert!(close(g.integral(), f.integral(), 1e-13));
            let x = PAdicVec::from_i64s(&[4 + a], 3, N);
            assert_eq!(g.evaluate(&x).unwrap(), f.evaluate(&PAdicVec::from_i64s(&[4], 3, N)).unwrap());
        }
        let shift = PAdicVec(vec![PAdic::parse(".2", 3, N).unwrap()]);
        let g = f.translate(&shift).unwrap();
        assert!(close(g.integral(), f.integral(), 1e-13));
    }

    #[test]
    fn pushforward_by_identity_and_isometry() {
        let mut rng = SplitMix64::new(2);
        let f = LCFunction::from_cells(Ball::around_origin(3, 1, -1), 2, |_| c(rng.next_f64(), rng.next_f64())).unwrap();
        let g = LCFunction::from_cells(Ball::unit(3, 1), 3, |_| c(rng.next_f64(), 0.0)).unwrap();
        assert_eq!(pushforward(&Morphism::identity(3, 1), &f).unwrap(), f);
        let phi = Morphism::seeded_isometry(3, 1, 17);
        let pf = pushforward(&phi, &f).unwrap();
        let pg = pushforward(&phi, &g).unwrap();
        assert!((pf.l2norm() - f.l2norm()).abs() < 1e-12);
        assert!(close(pf.inner(&pg).unwrap(), f.inner(&g).unwrap(), 1e-12));
        // pointwise definition
        for _ in 0..20 {
            let x = sample::random_point(&mut rng, 3, 1, -2, N);
            assert_eq!(pf.evaluate(&x).unwrap(), f.evaluate(&phi.apply_point(&x).unwrap()).unwrap());
        }
    }

    #[test]
    fn unitary_action_preserves_norm() {
        let om = LCFunction::omega(5, 1);
        for g in [-2, 1, 3] {
            let u = unitary_action(&Morphism::dilation(5, 1, g), &om).unwrap();
            assert!((u.l2norm() - 1.0).abs() < 1e-12);
        }
        let phi = Morphism::seeded_isometry(3, 2, 1).compose(&Morphism::dilation(3, 2, -1)).unwrap();
        let psi = wavelet(&WaveletIndex::new(3, 0, vec![vec![], vec![]], vec![1, 2]).unwrap()).unwrap();
        assert!((unitary_action(&phi, &psi).unwrap().l2norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orbit_functions() {
        assert_eq!(ball_orbit_functions(&Ball::unit(2, 1)).unwrap().len(), 2);
        let fs = ball_orbit_functions(&Ball::around_origin(3, 1, -2)).unwrap();
        assert_eq!(fs.len(), 6);
        for (i, f) in fs.iter().enumerate() {
            assert!(f.integral().norm() < 1e-12);
            assert!((f.l2norm() - 1.0).abs() < 1e-12);
            for g in &fs[i + 1..] {
                assert!(f.max_abs_diff(g).unwrap() > 1e-6);
            }
        }
        assert!(matches!(ball_orbit_functions(&Ball::unit(3, 2)), Err(Error::UnsupportedDimension(2, _))));
    }

    #[test]
    fn frame_sums_match_bound() {
        for (p, bound) in [(2, 2.0), (3, 3.0), (5, 30.0)] {
            let s = frame_partial_sum(&LCFunction::omega(p, 1), 40).unwrap();
            assert!((s.partial - bound).abs() < 1e-9, "p={p}: {}", s.partial);
            assert!((s.partial + s.tail_bound - bound).abs() < 1e-12);
        }
        let psi = wavelet(&WaveletIndex::new(3, 0, vec![vec![]], vec![1]).unwrap()).unwrap();
        assert!(frame_partial_sum(&psi, 20).unwrap().partial >= 1.0 - 1e-12);
    }

    #[test]
    fn orbit_inner_law_is_exact() {
        for p in [2u32, 3, 5] {
            let unit = Ball::unit(p, 1);
            for gamma in 1..=6 {
                let b = Ball::around_origin(p, 1, -gamma);
                for perm in orbit_permutations(p) {
                    let v = orbit_inner_norm_sqr(&b, &perm, &unit).unwrap();
                    assert_eq!(v, pow_rational(p, -gamma as i64));
                }
            }
        }
    }

    #[test]
    fn wavelet_multiple_detection() {
        let idx = WaveletIndex::new(3, 2, vec![vec![1, 2]], vec![2]).unwrap();
        let psi = wavelet(&idx).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let (found, coef) = psi.scale(w).refine(1).unwrap().as_wavelet_multiple(1e-12).unwrap();
        assert_eq!(found, idx);
        assert!(close(coef, w, 1e-12));
        assert!(LCFunction::omega(3, 1).refine(1).unwrap().as_wavelet_multiple(1e-12).is_none());
    }

    #[test]
    fn json_round_trip() {
        let psi = wavelet(&WaveletIndex::new(3, 0, vec![vec![]], vec![1]).unwrap()).unwrap();
        let j = serde_json::to_string(&psi).unwrap();
        assert!(j.starts_with(r#"{"support":{"p":3,"d":1,"L":0,"c":[[]]},"R":1,"cells":[{"path":[0],"re":1.0,"im":0.0}"#));
        let back: LCFunction = serde_json::from_str(&j).unwrap();
        assert_eq!(back, psi);
        let broken = j.replace(r#"{"path":[0],"re":1.0,"im":0.0},"#, "");
        assert!(serde_json::from_str::<LCFunction>(&broken).is_err());
    }
}
