use num_complex::Complex64;
use serde_json::json;

use padic_tree::ball::{build_set_s, recover_from_s, span_region, tube_measure_from_basis, Region};
use padic_tree::cyclotomic::int;
use padic_tree::fp;
use padic_tree::function::{frame_partial_sum, orbit_inner_norm_sqr, orbit_permutations, pushforward, wavelet};
use padic_tree::morphism::ActionMode;
use padic_tree::operators::{
    kernel_op, verify_chain_rule, verify_covariance, verify_transform_rule, vladimirov, wavelet_eigenvalue, KernelSpec,
    Residual, Tail, TransportedKernel, VectorFieldSpec, Window,
};
use padic_tree::rng::SplitMix64;
use padic_tree::sample::{random_ball, random_point};
use padic_tree::{Ball, DifferentiableSpec, LCFunction, Morphism, PAdic, PAdicVec, WaveletIndex};

use crate::config::ExperimentConfig;
use crate::oracle::quadrature_vladimirov;
use crate::report::{CaseBuilder, Provenance, Report};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn stream(seed: u64, tag: &str) -> SplitMix64 {
    SplitMix64::keyed(seed, tag.as_bytes())
}

fn random_complex(rng: &mut SplitMix64) -> Complex64 {
    Complex64::new(rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0)
}

fn random_direction(rng: &mut SplitMix64, p: u32, d: usize) -> Vec<u32> {
    fp::class_from_index(rng.uniform(fp::class_count(p, d) as u64 - 1) as usize + 1, p, d)
}

/// A random combination of `count` wavelets supported in `region`, at most two levels below it.
pub fn random_wavelet_span(rng: &mut SplitMix64, region: &Ball, count: usize) -> Result<LCFunction, String> {
    let (p, d) = (region.p(), region.dim());
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let level = region.level() + rng.uniform(3) as i32;
        let b = random_ball(rng, p, d, region.level(), level);
        let b = if region.contains(&b) { b } else { region.clone() };
        let j = random_direction(rng, p, d);
        terms.push((random_complex(rng), wavelet(&WaveletIndex::on_ball(&b, j).map_err(err)?).map_err(err)?));
    }
    let refs: Vec<(Complex64, &LCFunction)> = terms.iter().map(|(c, f)| (*c, f)).collect();
    LCFunction::combination(&refs).map_err(err)
}

/// `dilation(s) o eta` with `s` in `{-1, 0, 1}` and `eta` a seeded isometry.
pub fn random_parabolic(p: u32, seed: u64) -> (i32, Morphism) {
    let s = (seed % 3) as i32 - 1;
    let eta = Morphism::seeded_isometry(p, 1, seed);
    (s, Morphism::dilation(p, 1, s).compose(&eta).expect("same p and d"))
}

fn window_for(cfg: &ExperimentConfig, f: &LCFunction) -> Window {
    let ball = f.support().ancestor(f.support().level() - cfg.window.above);
    Window::new(ball, f.resolution() + cfg.window.extra_resolution)
}

// A window around `f o phi`, and its image, which holds the support of `f`.
fn pulled_window(cfg: &ExperimentConfig, phi: &Morphism, f: &LCFunction) -> Result<(Window, Window), String> {
    let w = window_for(cfg, &pushforward(phi, f).map_err(err)?);
    let image = w.image(phi).map_err(err)?;
    Ok((w, image))
}

fn residual_json(r: &Residual) -> serde_json::Value {
    serde_json::to_value(r).expect("serializable")
}

fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

/// Frame sums of the indicator of `Z_p` against `p!/(p-1)`, and the exact inner-product law.
pub fn run_frame_bound(cfg: &ExperimentConfig) -> Report {
    let mut report = Report::new(cfg);
    for &p in &cfg.p {
        let mut table = None;
        report.run("frame bound", p, 1, || {
            let fs = frame_partial_sum(&LCFunction::omega(p, 1), cfg.gamma_max).map_err(err)?;
            let expect = factorial(p) / (p as f64 - 1.0);
            table = Some(fs.to_csv());
            Ok(CaseBuilder::new("frame bound", Provenance::PaperFormula, p, 1)
                .inputs(json!({"g": "indicator of Z_p", "gamma_max": cfg.gamma_max}))
                .expected(json!(expect))
                .observed(json!({"partial": fs.partial, "tail_bound": fs.tail_bound}))
                .residual((fs.partial - expect).abs(), cfg.tolerances.composed))
        });
        if let Some(t) = table {
            report.tables.push((format!("frame_p{p}.csv"), t));
        }
        for gamma in 1..=10 {
            report.run("frame inner product", p, 1, || {
                let b = Ball::around_origin(p, 1, -gamma);
                let s = Ball::unit(p, 1);
                let want = int(1) / int((p as i64).pow(gamma as u32));
                let perms = orbit_permutations(p);
                let bad = perms.iter().filter(|perm| orbit_inner_norm_sqr(&b, perm, &s).as_ref() != Some(&want)).count();
                Ok(CaseBuilder::new("frame inner product", Provenance::PaperFormula, p, 1)
                    .inputs(json!({"gamma": gamma, "orbit_functions": perms.len()}))
                    .expected(json!(format!("|<g, psi>|^2 = {want}")))
                    .observed(json!({"mismatches": bad}))
                    .exact(bad == 0))
            });
        }
    }
    report
}

fn table_kernel(p: u32, d: usize, alpha: f64, region: &Ball, deepest: i32, seed: u64) -> Result<KernelSpec, String> {
    let mut rng = stream(seed, "kernel");
    let tail = Tail { c: random_complex(&mut rng), alpha, from_level: Some(region.level()) };
    KernelSpec::seeded_table(p, d, tail, region, deepest, seed).map_err(err)
}

/// Chain rule, transformation rule and covariance residuals over the configured sweep.
pub fn run_identity_suite(cfg: &ExperimentConfig) -> Report {
    let mut report = Report::new(cfg);
    let tol = cfg.tolerances.composed;
    let one_dim: Vec<u32> = cfg.p.clone();
    for &p in &one_dim {
        // identity rows
        let psi = wavelet(&WaveletIndex::new(p, 0, vec![vec![1]], vec![1]).expect("valid")).expect("valid");
        let w = window_for(cfg, &psi);
        let id = Morphism::identity(p, 1);
        for &alpha in &cfg.alphas {
            report.run("chain rule, identity", p, 1, || {
                let r = verify_chain_rule(&id, alpha, &psi, &w).map_err(err)?;
                Ok(CaseBuilder::new("chain rule, identity", Provenance::Triviality, p, 1)
                    .alpha(alpha)
                    .observed(residual_json(&r))
                    .residual(r.max_abs_diff, cfg.tolerances.single))
            });
            report.run("transform rule, identity", p, 1, || {
                let k = KernelSpec::vladimirov(p, alpha).map_err(err)?;
                let r = verify_transform_rule(&id, &k, &psi, &w).map_err(err)?;
                Ok(CaseBuilder::new("transform rule, identity", Provenance::Triviality, p, 1)
                    .alpha(alpha)
                    .observed(residual_json(&r))
                    .residual(r.max_abs_diff, cfg.tolerances.single))
            });
        }
        for &seed in &cfg.seeds {
            let (s, phi) = random_parabolic(p, seed);
            let mut rng = stream(seed, "span");
            let f = match random_wavelet_span(&mut rng, &Ball::around_origin(p, 1, -1), cfg.span_size) {
                Ok(f) => f,
                Err(e) => {
                    report.run("test function", p, 1, || Err(e));
                    continue;
                }
            };
            let (w, image) = match pulled_window(cfg, &phi, &f) {
                Ok(pair) => pair,
                Err(e) => {
                    report.run("window", p, 1, || Err(e));
                    continue;
                }
            };
            for &alpha in &cfg.alphas {
                report.run("chain rule", p, 1, || {
                    let r = verify_chain_rule(&phi, alpha, &f, &w).map_err(err)?;
                    Ok(CaseBuilder::new("chain rule", Provenance::PaperFormula, p, 1)
                        .seed(seed)
                        .alpha(alpha)
                        .inputs(json!({"shift": s, "wavelets": cfg.span_size, "window": w.ball.encode()}))
                        .expected(json!(format!("factor p^(-s alpha) = {}", (p as f64).powf(-(s as f64) * alpha))))
                        .observed(residual_json(&r))
                        .residual(r.max_abs_diff, tol))
                });
                report.run("transform rule", p, 1, || {
                    let kernel = table_kernel(p, 1, alpha, &image.ball.ancestor(image.ball.level() - 1), f.resolution(), seed)?;
                    let r = if cfg.negative_control {
                        corrupted_transform(&phi, &kernel, &f, &w)?
                    } else {
                        verify_transform_rule(&phi, &kernel, &f, &w).map_err(err)?
                    };
                    Ok(CaseBuilder::new("transform rule", Provenance::PaperFormula, p, 1)
                        .seed(seed)
                        .alpha(alpha)
                        .inputs(json!({"shift": s, "kernel_entries": kernel.table().len(), "negative_control": cfg.negative_control}))
                        .expected(json!(format!("factor p^(-s d) = {}", (p as f64).powi(-s))))
                        .observed(residual_json(&r))
                        .residual(r.max_abs_diff, tol))
                });
            }
        }
    }
    run_covariance(cfg, &mut report);
    report
}

// The transformation rule with the kernel transported along `phi` after a small
// translation, which swaps sibling balls one level above the finest cells.
fn corrupted_transform(phi: &Morphism, kernel: &KernelSpec, f: &LCFunction, w: &Window) -> Result<Residual, String> {
    let (p, d) = (f.p(), f.dim());
    let s = phi.level_shift();
    let prec = 40;
    let mut shift = vec![PAdic::zero(p, prec); d];
    shift[0] = PAdic::p_power(f.resolution() - s - 2, p, prec);
    let identity = (0..d)
        .map(|i| (0..d).map(|j| if i == j { PAdic::one(p, prec) } else { PAdic::zero(p, prec) }).collect())
        .collect();
    let tau = DifferentiableSpec::new(PAdicVec(shift), 0, identity).map_err(err)?;
    let wrong = phi.compose(&Morphism::affine(tau)).map_err(err)?;
    let lhs = pushforward(phi, &kernel_op(kernel, f, &w.image(phi).map_err(err)?).map_err(err)?).map_err(err)?;
    let transported = TransportedKernel { inner: kernel, phi: &wrong };
    let factor = (p as f64).powf(-(s as f64) * d as f64);
    let rhs = kernel_op(&transported, &pushforward(phi, f).map_err(err)?, w)
        .map_err(err)?
        .scale(Complex64::new(factor, 0.0));
    Residual::compare(&lhs, &rhs).map_err(err)
}

fn covariance_function(rng: &mut SplitMix64, p: u32, d: usize) -> Result<LCFunction, String> {
    let region = Ball::unit(p, d);
    let level = rng_level(rng, 0, 2);
    let b = random_ball(rng, p, d, 0, level);
    let j = random_direction(rng, p, d);
    let psi = wavelet(&WaveletIndex::on_ball(&b, j).map_err(err)?).map_err(err)?;
    if rng.uniform(2) == 0 {
        return Ok(psi);
    }
    let other = wavelet(&WaveletIndex::on_ball(&region, random_direction(rng, p, d)).map_err(err)?).map_err(err)?;
    LCFunction::combination(&[(random_complex(rng), &psi), (random_complex(rng), &other)]).map_err(err)
}

fn rng_level(rng: &mut SplitMix64, lo: i32, span: u64) -> i32 {
    lo + rng.uniform(span) as i32
}

fn run_covariance(cfg: &ExperimentConfig, report: &mut Report) {
    let tol = cfg.tolerances.composed;
    for &p in &cfg.p {
        for &d in &cfg.d {
            report.run("covariance, identity", p, d, || {
                let id = Morphism::identity(p, d);
                let mut rng = stream(0, "covariance function");
                let f = covariance_function(&mut rng, p, d)?;
                let w = window_for(cfg, &f);
                let kernel = table_kernel(p, d, 1.0, &w.ball, f.resolution() - 1, 0)?;
                let r = verify_covariance(&id, &kernel, &VectorFieldSpec::seeded(0), &f, &w).map_err(err)?;
                Ok(CaseBuilder::new("covariance, identity", Provenance::Triviality, p, d)
                    .observed(residual_json(&r))
                    .residual(r.max_abs_diff, cfg.tolerances.single))
            });
            for &seed in &cfg.seeds {
                let phi = Morphism::seeded_isometry_with(p, d, seed, ActionMode::Affine, padic_tree::morphism::DEFAULT_TOP_LEVEL);
                let alpha = cfg.alphas[seed as usize % cfg.alphas.len().max(1)];
                for fi in 0..cfg.fields_per_morphism {
                    let field_seed = SplitMix64::keyed(seed, format!("field {fi}").as_bytes()).next_u64();
                    let field = VectorFieldSpec::seeded(field_seed);
                    for gi in 0..cfg.functions_per_field {
                        report.run("covariance", p, d, || {
                            let mut rng = stream(seed, &format!("covariance function {fi} {gi}"));
                            let f = covariance_function(&mut rng, p, d)?;
                            let (w, image) = pulled_window(cfg, &phi, &f)?;
                            let kernel = table_kernel(p, d, alpha, &image.ball, f.resolution() - 1, seed)?;
                            let r = verify_covariance(&phi, &kernel, &field, &f, &w).map_err(err)?;
                            Ok(CaseBuilder::new("covariance", Provenance::PaperFormula, p, d)
                                .seed(seed)
                                .alpha(alpha)
                                .inputs(json!({"field_seed": field_seed, "function": gi, "window": w.ball.encode()}))
                                .expected(json!(0.0))
                                .observed(residual_json(&r))
                                .residual(r.max_abs_diff, tol))
                        });
                    }
                }
            }
        }
    }
}

// The basis `k1, p e_j` completing `k1` to a tube basis.
fn tube_basis(k1: &[u32], p: u32, precision: u32) -> Vec<PAdicVec> {
    let d = k1.len();
    let pivot = k1.iter().position(|&x| x != 0).expect("nonzero direction");
    let mut basis = vec![PAdicVec::from_i64s(&k1.iter().map(|&x| x as i64).collect::<Vec<_>>(), p, precision)];
    for j in (0..d).filter(|&j| j != pivot) {
        let mut e = vec![0i64; d];
        e[j] = p as i64;
        basis.push(PAdicVec::from_i64s(&e, p, precision));
    }
    basis
}

struct Tally {
    ok: usize,
    total: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { ok: 0, total: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.ok += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(what());
        }
    }

    fn case(self, name: &str, p: u32, d: usize, provenance: Provenance) -> CaseBuilder {
        let passed = self.ok == self.total;
        CaseBuilder::new(name, provenance, p, d)
            .expected(json!(format!("{}/{}", self.total, self.total)))
            .observed(json!({"passed": format!("{}/{}", self.ok, self.total), "first_failure": self.first_failure}))
            .exact(passed)
    }
}

/// Exact checks of the set S, tangent maps, the wavelet lemma and the group structure.
pub fn run_structure_suite(cfg: &ExperimentConfig) -> Report {
    let mut report = Report::new(cfg);
    let seeds = &cfg.seeds;
    let fifty: Vec<u64> = seeds.iter().copied().take(50).collect();
    for &p in &cfg.p {
        for &d in &cfg.d {
            report.run("set S equals the tube", p, d, || {
                let mut t = Tally::new();
                for &seed in seeds {
                    let mut rng = stream(seed, "set S");
                    let (b, k1, b0) = random_set_s_input(&mut rng, p, d);
                    let s = build_set_s(&b, &k1, &b0).map_err(err)?;
                    let fine = b.level() + 2;
                    let tube = span_region(&b0.center(cfg.precision), &tube_basis(&k1, p, cfg.precision), Region::Tube, b.level(), fine)
                        .map_err(err)?;
                    let expect: std::collections::BTreeSet<Ball> = s.members.iter().flat_map(|m| m.descendants(fine)).collect();
                    t.record(tube == expect, || format!("seed {seed}: {b} k1={k1:?}"));
                }
                Ok(t.case("set S equals the tube", p, d, Provenance::PaperFormula))
            });
            report.run("set S measure", p, d, || {
                let mut t = Tally::new();
                for &seed in seeds {
                    let mut rng = stream(seed, "set S");
                    let (b, k1, b0) = random_set_s_input(&mut rng, p, d);
                    let s = build_set_s(&b, &k1, &b0).map_err(err)?;
                    let union = s.members.iter().fold(int(0), |acc, m| acc + m.measure_exact());
                    let from_basis = tube_measure_from_basis(&tube_basis(&k1, p, cfg.precision), b.level());
                    t.record(union == s.measure() && from_basis.as_ref() == Some(&union), || format!("seed {seed}: {b}"));
                }
                Ok(t.case("set S measure", p, d, Provenance::PaperFormula))
            });
            report.run("set S recovery", p, d, || {
                let mut t = Tally::new();
                for &seed in seeds {
                    let mut rng = stream(seed, "set S");
                    let (b, k1, b0) = random_set_s_input(&mut rng, p, d);
                    let s = build_set_s(&b, &k1, &b0).map_err(err)?;
                    let (k, c0) = recover_from_s(&s.members).map_err(err)?;
                    t.record(build_set_s(&b, &k, &c0).map_err(err)? == s, || format!("seed {seed}: {b}"));
                }
                Ok(t.case("set S recovery", p, d, Provenance::PaperFormula))
            });
            report.run("set S scaling", p, d, || {
                let mut t = Tally::new();
                for &seed in seeds {
                    let mut rng = stream(seed, "set S");
                    let (b, k1, b0) = random_set_s_input(&mut rng, p, d);
                    let s = build_set_s(&b, &k1, &b0).map_err(err)?;
                    for c in 1..p {
                        t.record(build_set_s(&b, &fp::scale(c, &k1, p), &b0).map_err(err)? == s, || format!("seed {seed}, c={c}"));
                    }
                }
                Ok(t.case("set S scaling", p, d, Provenance::PaperFormula))
            });
            report.run("tangent map moves S", p, d, || {
                let mut t = Tally::new();
                for &seed in &fifty {
                    let phi = Morphism::seeded_isometry_with(p, d, seed, ActionMode::Affine, padic_tree::morphism::DEFAULT_TOP_LEVEL);
                    let mut rng = stream(seed, "tangent");
                    let (b, k1, b0) = random_set_s_input(&mut rng, p, d);
                    let s = build_set_s(&b, &k1, &b0).map_err(err)?;
                    let image: std::collections::BTreeSet<Ball> =
                        s.members.iter().map(|m| phi.image_ball(m)).collect::<Result<_, _>>().map_err(err)?;
                    let tm = phi.tangent_map(&b).map_err(err)?;
                    let a = tm.linear_part().ok_or("tangent map is not affine")?;
                    let moved = build_set_s(&phi.image_ball(&b).map_err(err)?, &fp::mat_vec(a, &k1, p), &phi.image_ball(&b0).map_err(err)?)
                        .map_err(err)?;
                    t.record(image == moved.member_set(), || format!("seed {seed}: {b}"));
                }
                Ok(t.case("tangent map moves S", p, d, Provenance::PaperFormula))
            });
            report.run("wavelet lemma", p, d, || {
                let mut worst: f64 = 0.0;
                let mut t = Tally::new();
                for &seed in &fifty {
                    let phi = Morphism::seeded_isometry_with(p, d, seed, ActionMode::Affine, padic_tree::morphism::DEFAULT_TOP_LEVEL);
                    let mut rng = stream(seed, "wavelet lemma");
                    let level = rng_level(&mut rng, -1, 3);
                    let b = random_ball(&mut rng, p, d, -1, level);
                    let j = random_direction(&mut rng, p, d);
                    let psi = wavelet(&WaveletIndex::on_ball(&b, j.clone()).map_err(err)?).map_err(err)?;
                    let image = pushforward(&phi, &psi).map_err(err)?;
                    let Some((idx, c)) = image.as_wavelet_multiple(1e-12) else {
                        t.record(false, || format!("seed {seed}: image is not a wavelet multiple"));
                        continue;
                    };
                    worst = worst.max((c.norm() - 1.0).abs()).max((c.powu(p) - 1.0).norm());
                    let pre = phi.preimage(&b).map_err(err)?;
                    let a = phi.tangent_map(&pre).map_err(err)?;
                    let a = a.linear_part().ok_or("tangent map is not affine")?;
                    let j_image = fp::mat_vec(&fp::transpose(a), &j, p);
                    t.record(idx.support() == pre && idx.j == j_image, || format!("seed {seed}: index {idx:?}"));
                }
                let ok = t.ok == t.total;
                let tally = json!({"passed": format!("{}/{}", t.ok, t.total), "first_failure": t.first_failure});
                Ok(CaseBuilder::new("wavelet lemma", Provenance::PaperFormula, p, d)
                    .expected(json!("c psi with |c| = 1, c^p = 1, J' = A^T J"))
                    .observed(json!({"indices": tally, "max_deviation": worst}))
                    .residual(if ok { worst } else { f64::INFINITY }, cfg.tolerances.composed))
            });
            report.run("isometries preserve distances", p, d, || {
                let mut t = Tally::new();
                for &seed in seeds.iter().take(10) {
                    let phi = Morphism::seeded_isometry(p, d, seed);
                    let r = phi.isometry_check(500, (-3, 3), seed);
                    t.record(r.passed, || format!("seed {seed}: {:?}", r.counterexample));
                }
                Ok(t.case("isometries preserve distances", p, d, Provenance::PaperFormula))
            });
            report.run("parabolic decomposition", p, d, || {
                let mut t = Tally::new();
                for &seed in seeds.iter().take(20) {
                    let mut rng = stream(seed, "chain");
                    let mut chain = Morphism::identity(p, d);
                    let mut total = 0;
                    for k in 0..6 {
                        let s = rng_level(&mut rng, -1, 3);
                        total += s;
                        let step = Morphism::dilation(p, d, s)
                            .compose(&Morphism::seeded_isometry(p, d, seed.wrapping_mul(7).wrapping_add(k)))
                            .map_err(err)?;
                        chain = step.compose(&chain).map_err(err)?;
                    }
                    let (g, eta) = chain.parabolic_normalize().map_err(err)?;
                    let (g2, _) = eta.parabolic_normalize().map_err(err)?;
                    let mut uniform = true;
                    for _ in 0..5 {
                        let level = rng_level(&mut rng, -2, 4);
                        let b = random_ball(&mut rng, p, d, -3, level);
                        uniform &= chain.image_ball(&b).map_err(err)?.level() - b.level() == g;
                        uniform &= eta.image_ball(&b).map_err(err)?.level() == b.level();
                    }
                    let x = random_point(&mut rng, p, d, -2, cfg.precision / 2);
                    let y = random_point(&mut rng, p, d, -2, cfg.precision / 2);
                    let (ex, ey) = (eta.apply_point(&x).map_err(err)?, eta.apply_point(&y).map_err(err)?);
                    let same = ex.sub(&ey).map_err(err)?.valuation() == x.sub(&y).map_err(err)?.valuation();
                    t.record(g == total && g2 == 0 && uniform && same, || format!("seed {seed}: shift {g} vs {total}"));
                }
                Ok(t.case("parabolic decomposition", p, d, Provenance::PaperFormula))
            });
        }
    }
    report
}

fn random_set_s_input(rng: &mut SplitMix64, p: u32, d: usize) -> (Ball, Vec<u32>, Ball) {
    let level = rng_level(rng, -1, 3);
    let b = random_ball(rng, p, d, -1, level);
    let k1 = random_direction(rng, p, d);
    let b0 = b.child_by_index(rng.uniform(fp::class_count(p, d) as u64) as usize);
    (b, k1, b0)
}

/// Certifies the wavelet eigenvalue and the Vladimirov operator against the quadrature oracle.
pub fn run_oracle(cfg: &ExperimentConfig) -> Report {
    let mut report = Report::new(cfg);
    let tol = cfg.tolerances.relative;
    for &p in &cfg.p {
        for &gamma in &cfg.gammas {
            let n = vec![vec![(p - 1) as u8]];
            let idx = WaveletIndex::new(p, gamma, n, vec![1]).expect("valid index");
            let psi = wavelet(&idx).expect("valid index");
            let window = psi.support().parent();
            for &alpha in &cfg.alphas {
                let oracle = quadrature_vladimirov(alpha, &psi, &window, psi.resolution(), cfg.precision);
                report.run("eigenvalue against oracle", p, 1, || {
                    let oracle = oracle.clone().map_err(err)?;
                    let lam = wavelet_eigenvalue(alpha, gamma, p);
                    let expect = psi.scale(Complex64::new(lam, 0.0));
                    let diff = oracle.max_abs_diff(&expect).map_err(err)?;
                    Ok(CaseBuilder::new("eigenvalue against oracle", Provenance::Oracle, p, 1)
                        .alpha(alpha)
                        .inputs(json!({"gamma": gamma}))
                        .expected(json!(lam))
                        .observed(json!({"max_abs_diff": diff}))
                        .residual(diff / (lam * psi.sup_norm()), tol))
                });
                report.run("vladimirov against oracle", p, 1, || {
                    let oracle = oracle.map_err(err)?;
                    let out = vladimirov(alpha, &psi, &Window::new(window.clone(), psi.resolution())).map_err(err)?;
                    let diff = out.max_abs_diff(&oracle).map_err(err)?;
                    Ok(CaseBuilder::new("vladimirov against oracle", Provenance::Oracle, p, 1)
                        .alpha(alpha)
                        .inputs(json!({"gamma": gamma}))
                        .observed(json!({"max_abs_diff": diff}))
                        .residual(diff / oracle.sup_norm(), tol))
                });
            }
        }
        for &alpha in &cfg.alphas {
            report.run("vladimirov of the indicator", p, 1, || {
                let omega = LCFunction::omega(p, 1);
                let window = Ball::around_origin(p, 1, -1);
                let oracle = quadrature_vladimirov(alpha, &omega, &window, 1, cfg.precision).map_err(err)?;
                let out = vladimirov(alpha, &omega, &Window::new(window.clone(), 1)).map_err(err)?;
                let on_zp = out.tabulate_on(&Ball::unit(p, 1), 1).map_err(err)?;
                let spread = on_zp.iter().map(|v| (v - on_zp[0]).norm()).fold(0.0, f64::max);
                let diff = out.max_abs_diff(&oracle).map_err(err)?;
                Ok(CaseBuilder::new("vladimirov of the indicator", Provenance::Oracle, p, 1)
                    .alpha(alpha)
                    .observed(json!({"value_on_zp": [on_zp[0].re, on_zp[0].im], "spread_on_zp": spread, "max_abs_diff": diff}))
                    .residual((diff + spread) / oracle.sup_norm(), tol))
            });
        }
    }
    report
}
