use std::collections::BTreeMap;

use num_complex::Complex64;
use padic_tree::ball::{span_region, Region};
use padic_tree::fp;
use padic_tree::function::{pushforward, wavelet};
use padic_tree::operators::*;
use padic_tree::rng::SplitMix64;
use padic_tree::{Ball, LCFunction, Morphism, PAdicVec, WaveletIndex};
use proptest::prelude::*;

const N: u32 = 16;

fn random_fn(seed: u64, support: Ball, res: i32) -> LCFunction {
    let mut rng = SplitMix64::new(seed);
    LCFunction::from_cells(support, res, |_| Complex64::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5)).unwrap()
}

fn lift(v: &[u32], p: u32) -> PAdicVec {
    PAdicVec::from_i64s(&v.iter().map(|&x| x as i64).collect::<Vec<_>>(), p, N)
}

// Completes k1 with p * (e_j + t k1) + p^2 * extra for every j except one pivot coordinate.
fn completion(k1: &[u32], p: u32, t: u32, extra: i64) -> Vec<PAdicVec> {
    let d = k1.len();
    let pivot = k1.iter().position(|&x| x != 0).unwrap();
    let mut basis = vec![lift(k1, p)];
    for j in (0..d).filter(|&j| j != pivot) {
        let mut e = vec![0u32; d];
        e[j] = 1;
        let dir = fp::add(&e, &fp::scale(t, k1, p), p);
        let coords: Vec<i64> = dir.iter().map(|&x| x as i64 * p as i64 + extra * (p as i64).pow(2)).collect();
        basis.push(PAdicVec::from_i64s(&coords, p, N));
    }
    basis
}

// Evaluates the vector field operator by enumerating the residue classes of
// x + z_1 k_1 + ... + z_d k_d over the tube at each level.
fn vf_oracle(
    kernel: &KernelSpec,
    field: &VectorFieldSpec,
    f: &LCFunction,
    w: &Window,
    t: u32,
    extra: i64,
) -> LCFunction {
    let (p, d) = (f.p(), f.dim());
    let res = w.resolution.max(f.resolution()).max(w.ball.level());
    let tail = kernel.tail();
    let mut values = Vec::new();
    for x in w.ball.descendants(res) {
        let fx = f.value_on(&x).unwrap();
        let top = x.sup(f.support()).level();
        let l0 = top.min(tail.from_level.unwrap_or(i32::MAX)) - 1;
        let geo = (p as f64).powf(l0 as f64 * tail.alpha) / (1.0 - (p as f64).powf(-tail.alpha));
        let mut acc = fx * tail.c * (1.0 - 1.0 / p as f64) * geo;
        let x0 = x.center(N);
        for level in l0 + 1..f.resolution() {
            let b = x.ancestor(level);
            let k1 = field.k1(&b).unwrap();
            let cells = span_region(&x0, &completion(&k1, p, t, extra), Region::Tube, level, f.resolution()).unwrap();
            let mz = (1.0 - 1.0 / p as f64) * (p as f64).powf(-(level as f64) * d as f64);
            let weight = mz / cells.len() as f64;
            let mut sum = Complex64::new(0.0, 0.0);
            for y in &cells {
                let fy = if f.support().contains(y) { f.value_on(y).unwrap() } else { Complex64::new(0.0, 0.0) };
                sum += (fx - fy) * weight;
            }
            acc += kernel.value(&b).unwrap() * sum;
        }
        values.push(acc);
    }
    LCFunction::new(w.ball.clone(), res, values).unwrap()
}

#[test]
fn vector_field_operator_matches_residue_enumeration_for_two_completions() {
    for (p, d) in [(3u32, 2usize), (2, 2), (2, 3)] {
        let f = random_fn(p as u64 * 10 + d as u64, Ball::unit(p, d), 2);
        let tail = Tail { c: Complex64::new(0.8, 0.1), alpha: 1.2, from_level: Some(0) };
        let kernel = KernelSpec::seeded_table(p, d, tail, &Ball::unit(p, d), 1, 17).unwrap();
        let field = VectorFieldSpec::seeded(21);
        let w = Window::new(Ball::around_origin(p, d, -1), 2);
        let direct = vf_op(&kernel, &field, &f, &w).unwrap();
        let first = vf_oracle(&kernel, &field, &f, &w, 0, 0);
        let second = vf_oracle(&kernel, &field, &f, &w, 1, 1);
        let scale = direct.sup_norm();
        assert!(first.max_abs_diff(&second).unwrap() <= 1e-12 * scale, "p={p} d={d}");
        assert!(direct.max_abs_diff(&first).unwrap() <= 1e-12 * scale, "p={p} d={d}");
    }
}

#[test]
fn wavelets_are_multiples_of_themselves_with_level_only_multiplier() {
    let p = 3;
    let kernel = KernelSpec::power_law(p, 1, Complex64::new(1.3, -0.4), 0.7).unwrap();
    for gamma in -1..=1 {
        let mut multiplier: Option<Complex64> = None;
        let anchor = Ball::around_origin(p, 1, -gamma - 2);
        for b in anchor.descendants(-gamma) {
            for j in 1..p {
                let psi = wavelet(&WaveletIndex::on_ball(&b, vec![j]).unwrap()).unwrap();
                let out = kernel_op(&kernel, &psi, &Window::of(&psi)).unwrap();
                let (idx, c) = out.as_wavelet_multiple(1e-12).unwrap();
                assert_eq!(idx, WaveletIndex::on_ball(&b, vec![j]).unwrap());
                match multiplier {
                    None => multiplier = Some(c),
                    Some(m) => assert!((m - c).norm() <= 1e-12 * m.norm()),
                }
            }
        }
    }

    // a table kernel still keeps wavelets as multiples of themselves
    let tail = Tail { c: Complex64::new(1.0, 0.0), alpha: 1.0, from_level: Some(-1) };
    let table = KernelSpec::seeded_table(p, 1, tail, &Ball::around_origin(p, 1, -1), 1, 5).unwrap();
    for b in Ball::unit(p, 1).descendants(1) {
        let psi = wavelet(&WaveletIndex::on_ball(&b, vec![1]).unwrap()).unwrap();
        let out = kernel_op(&table, &psi, &Window::new(Ball::around_origin(p, 1, -1), 2)).unwrap();
        for cell in out.cells().iter().filter(|c| !b.contains(c)) {
            assert!(out.value_on(cell).unwrap().norm() <= 1e-12);
        }
        let local = LCFunction::new(b.clone(), 2, out.tabulate_on(&b, 2).unwrap()).unwrap();
        let (idx, _) = local.as_wavelet_multiple(1e-12).unwrap();
        assert_eq!(idx, WaveletIndex::on_ball(&b, vec![1]).unwrap());
    }
}

#[test]
fn covariance_under_seeded_isometries_in_two_dimensions() {
    for p in [2u32, 3] {
        for seed in 0..4u64 {
            let phi = Morphism::seeded_isometry(p, 2, seed);
            let kernel = KernelSpec::seeded_table(
                p,
                2,
                Tail { c: Complex64::new(1.0, 0.5), alpha: 1.5, from_level: Some(-1) },
                &Ball::around_origin(p, 2, -1),
                0,
                seed + 100,
            )
            .unwrap();
            let field = VectorFieldSpec::seeded(seed + 7);
            let b = Ball::unit(p, 2).child(&[1, 0]);
            let psi = wavelet(&WaveletIndex::on_ball(&b, vec![1, 1]).unwrap()).unwrap();
            let w = Window::new(Ball::around_origin(p, 2, -1), 2);
            let r = verify_covariance(&phi, &kernel, &field, &psi, &w).unwrap();
            assert!(r.max_abs_diff <= 1e-9, "p={p} seed={seed}: {}", r.max_abs_diff);
        }
    }
}

#[test]
fn corrupted_kernel_transport_is_detected() {
    // Transporting by a different isometry than the one applied breaks the rule.
    let p = 3;
    let phi = Morphism::seeded_isometry(p, 1, 4);
    let other = Morphism::seeded_isometry(p, 1, 5);
    let tail = Tail { c: Complex64::new(1.0, 0.0), alpha: 1.0, from_level: Some(-2) };
    let kernel = KernelSpec::seeded_table(p, 1, tail, &Ball::around_origin(p, 1, -2), 1, 3).unwrap();
    let f = random_fn(3, Ball::around_origin(p, 1, -1), 2);
    let w = Window::new(Ball::around_origin(p, 1, -2), 2);
    let lhs = pushforward(&phi, &kernel_op(&kernel, &f, &w.image(&phi).unwrap()).unwrap()).unwrap();
    let wrong = TransportedKernel { inner: &kernel, phi: &other };
    let rhs = kernel_op(&wrong, &pushforward(&phi, &f).unwrap(), &w).unwrap();
    assert!(Residual::compare(&lhs, &rhs).unwrap().max_abs_diff > 1e-3);
    assert!(verify_transform_rule(&phi, &kernel, &f, &w).unwrap().max_abs_diff <= 1e-9);
}

#[test]
fn explicit_affine_maps_satisfy_the_chain_rule() {
    use padic_tree::{DifferentiableSpec, PAdic};
    let p = 3;
    let spec = DifferentiableSpec::scalar(PAdic::from_i64(2, p, N), PAdic::from_i64(9, p, N)).unwrap();
    let phi = Morphism::affine(spec);
    let f = random_fn(8, Ball::around_origin(p, 1, 0), 2);
    let w = Window::new(Ball::around_origin(p, 1, -1), 2);
    let r = verify_chain_rule(&phi, 1.5, &f, &w).unwrap();
    assert!(r.max_abs_diff <= 1e-9, "{}", r.max_abs_diff);
    assert!(r.factor_check.unwrap() <= 1e-12);
}

#[test]
fn residual_json_round_trip() {
    let f = random_fn(1, Ball::unit(2, 1), 2);
    let r = Residual::compare(&f, &f.scale(Complex64::new(2.0, 0.0))).unwrap();
    let j = serde_json::to_value(&r).unwrap();
    for key in ["lhs", "rhs", "max_abs_diff", "argmax_cell"] {
        assert!(j.get(key).is_some());
    }
    let back: Residual = serde_json::from_value(j).unwrap();
    assert_eq!(back, r);
    let table: BTreeMap<Ball, Vec<u32>> = [(Ball::unit(3, 2), vec![1, 2])].into_iter().collect();
    let field = VectorFieldSpec::table(table, vec![0, 1], 3).unwrap();
    let s = serde_json::to_string(&field).unwrap();
    assert_eq!(serde_json::from_str::<VectorFieldSpec>(&s).unwrap(), field);
    assert!(VectorFieldSpec::table(BTreeMap::new(), vec![0, 0], 3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_linear(p in prop::sample::select(vec![2u32, 3, 5]), seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let f = random_fn(seed, Ball::around_origin(p, 1, -1), 1);
        let g = random_fn(seed ^ 0xabc, Ball::unit(p, 1), 2);
        let (ca, cb) = (Complex64::new(a, 0.3), Complex64::new(b, -0.1));
        let combo = LCFunction::combination(&[(ca, &f), (cb, &g)]).unwrap();
        let w = Window::new(Ball::around_origin(p, 1, -2), 2);
        let kernel = KernelSpec::seeded_table(p, 1, Tail { c: Complex64::new(1.0, 0.0), alpha: 0.9, from_level: Some(-1) }, &Ball::around_origin(p, 1, -1), 1, seed).unwrap();
        let field = VectorFieldSpec::seeded(seed);
        let ops: Vec<Box<dyn Fn(&LCFunction) -> LCFunction>> = vec![
            Box::new(|h| vladimirov(1.5, h, &w).unwrap()),
            Box::new(|h| kernel_op(&kernel, h, &w).unwrap()),
            Box::new(|h| vf_op(&kernel, &field, h, &w).unwrap()),
        ];
        for op in &ops {
            let lhs = op(&combo);
            let rhs = LCFunction::combination(&[(ca, &op(&f)), (cb, &op(&g))]).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * lhs.sup_norm().max(1.0));
        }
    }

    #[test]
    fn vladimirov_agrees_with_its_kernel(p in prop::sample::select(vec![2u32, 3, 5]), seed in any::<u64>(), alpha in 0.2f64..3.0) {
        let f = random_fn(seed, Ball::unit(p, 1), 2);
        let w = Window::new(Ball::around_origin(p, 1, -2), 2);
        let a = vladimirov(alpha, &f, &w).unwrap();
        let b = kernel_op(&KernelSpec::vladimirov(p, alpha).unwrap(), &f, &w).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-12 * a.sup_norm().max(1.0));
    }

    #[test]
    fn covariance_holds_across_seeds(p in prop::sample::select(vec![2u32, 3]), seed in any::<u64>()) {
        let phi = Morphism::seeded_isometry(p, 2, seed);
        let kernel = KernelSpec::power_law(p, 2, Complex64::new(0.6, 0.0), 1.0).unwrap();
        let field = VectorFieldSpec::seeded(seed.rotate_left(7));
        let f = random_fn(seed, Ball::unit(p, 2), 1);
        let r = verify_covariance(&phi, &kernel, &field, &f, &Window::new(Ball::around_origin(p, 2, -1), 1)).unwrap();
        prop_assert!(r.max_abs_diff <= 1e-9);
    }
}
