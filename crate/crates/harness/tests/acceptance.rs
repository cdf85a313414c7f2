//! The ten acceptance criteria, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use padic_tree::function::wavelet;
use padic_tree::operators::{vladimirov, wavelet_eigenvalue, Window};
use padic_tree::WaveletIndex;
use padic_tree_harness::suites::{run_frame_bound, run_identity_suite, run_oracle, run_structure_suite};
use padic_tree_harness::{ExperimentConfig, Report};

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn cases<'a>(report: &'a Report, name: &'a str) -> impl Iterator<Item = &'a padic_tree_harness::Case> + 'a {
    report.cases.iter().filter(move |c| c.name == name)
}

// All cases with this name pass, and there is at least one.
fn named_pass(report: &Report, name: &str) -> (bool, usize, f64) {
    let mut n = 0;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for c in cases(report, name) {
        n += 1;
        ok &= c.pass;
        worst = worst.max(c.residual);
    }
    (ok && n > 0, n, worst)
}

fn frame_bound() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [2u32, 3, 5] {
        let cfg = ExperimentConfig { p: vec![p], gamma_max: 40, ..ExperimentConfig::for_experiment("frame-bound") };
        let (report, t) = timed(|| run_frame_bound(&cfg));
        let (ok, _, worst) = named_pass(&report, "frame bound");
        pass &= ok && t < Duration::from_secs(1);
        detail.push(format!("p={p} |partial - p!/(p-1)| = {worst:.2e} in {:.3}s", t.as_secs_f64()));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn inner_product_law() -> Outcome {
    let cfg = ExperimentConfig { p: vec![2, 3], ..ExperimentConfig::for_experiment("frame-bound") };
    let report = run_frame_bound(&cfg);
    let (ok, n, _) = named_pass(&report, "frame inner product");
    Outcome { pass: ok && n == 20, detail: format!("{n} (p, gamma) pairs, every orbit function exact") }
}

fn chain_and_transform() -> (Outcome, Outcome) {
    let cfg = ExperimentConfig {
        p: vec![2, 3, 5],
        d: vec![],
        seeds: (0..50).collect(),
        alphas: vec![0.5, 1.0, 2.0],
        ..ExperimentConfig::for_experiment("identities")
    };
    let (report, t) = timed(|| run_identity_suite(&cfg));
    let (ok_c, n_c, worst_c) = named_pass(&report, "chain rule");
    let (ok_t, n_t, worst_t) = named_pass(&report, "transform rule");
    let chain_time: f64 = report
        .cases
        .iter()
        .zip(&report.timings)
        .filter(|(c, _)| c.name == "chain rule")
        .map(|(_, t)| t.as_secs_f64())
        .sum();
    let chain = Outcome {
        pass: ok_c && n_c == 450 && chain_time < 30.0,
        detail: format!("{n_c} cases, max residual {worst_c:.2e}, {chain_time:.2}s (sweep {:.2}s)", t.as_secs_f64()),
    };

    // the corrupted transport must be caught
    let negative = ExperimentConfig { seeds: (0..5).collect(), negative_control: true, ..cfg };
    let neg = run_identity_suite(&negative);
    let caught = cases(&neg, "transform rule").filter(|c| !c.pass).count();
    let total = cases(&neg, "transform rule").count();
    let transform = Outcome {
        pass: ok_t && n_t == 450 && caught == total && total > 0,
        detail: format!("{n_t} cases, max residual {worst_t:.2e}; negative control caught {caught}/{total}"),
    };
    (chain, transform)
}

fn covariance() -> Outcome {
    let cfg = ExperimentConfig {
        p: vec![2, 3],
        d: vec![2, 3],
        seeds: (0..20).collect(),
        fields_per_morphism: 5,
        functions_per_field: 5,
        ..ExperimentConfig::for_experiment("identities")
    };
    let (report, t) = timed(|| run_identity_suite(&cfg));
    let (ok, n, worst) = named_pass(&report, "covariance");
    let cov_time: f64 = report
        .cases
        .iter()
        .zip(&report.timings)
        .filter(|(c, _)| c.name.starts_with("covariance"))
        .map(|(_, t)| t.as_secs_f64())
        .sum();
    Outcome {
        pass: ok && n == 2000 && cov_time < 120.0,
        detail: format!("{n} cases, max residual {worst:.2e}, {cov_time:.2}s (sweep {:.2}s)", t.as_secs_f64()),
    }
}

fn eigenvalue() -> Outcome {
    let cfg = ExperimentConfig {
        p: vec![2, 3, 5],
        gammas: vec![-2, -1, 0, 1, 2],
        alphas: vec![0.5, 1.0, 2.0],
        ..ExperimentConfig::for_experiment("oracle")
    };
    let report = run_oracle(&cfg);
    let (cert, n_cert, w_cert) = named_pass(&report, "eigenvalue against oracle");
    let (agree, _, w_agree) = named_pass(&report, "vladimirov against oracle");
    let mut worst: f64 = 0.0;
    for p in [2u32, 3, 5] {
        for gamma in -2..=2 {
            for alpha in [0.5, 1.0, 2.0] {
                for digit in 0..p as u8 {
                    let idx = WaveletIndex::new(p, gamma, vec![vec![digit]], vec![1 + digit as u32 % (p - 1)]).unwrap();
                    let psi = wavelet(&idx).unwrap();
                    let out = vladimirov(alpha, &psi, &Window::new(psi.support().parent(), psi.resolution())).unwrap();
                    let lam = wavelet_eigenvalue(alpha, gamma, p);
                    let rel = out.max_abs_diff(&psi.scale(Complex64::new(lam, 0.0))).unwrap() / (lam * psi.sup_norm());
                    worst = worst.max(rel);
                }
            }
        }
    }
    Outcome {
        pass: cert && agree && n_cert == 45 && worst < 1e-10,
        detail: format!(
            "oracle certifies p^(a(1-gamma)) on {n_cert} cases (max rel {w_cert:.2e}, operator vs oracle {w_agree:.2e}); operator max rel err {worst:.2e}"
        ),
    }
}

fn structure() -> Report {
    let cfg = ExperimentConfig {
        p: vec![2, 3, 5],
        d: vec![1, 2, 3],
        seeds: (0..100).collect(),
        ..ExperimentConfig::for_experiment("structure")
    };
    run_structure_suite(&cfg)
}

fn structure_outcome(report: &Report, names: &[&str], what: &str) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let (ok, n, _) = named_pass(report, name);
        pass &= ok && n == 9;
        let tallies: Vec<String> = cases(report, name)
            .map(|c| c.observed.get("passed").and_then(|v| v.as_str()).unwrap_or("-").to_string())
            .collect();
        parts.push(format!("{name}: {}", tallies.join(" ")));
    }
    Outcome { pass, detail: format!("{what}; {}", parts.join("; ")) }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut line = |k: usize, title: &str, o: Outcome| {
        all &= o.pass;
        println!("criterion {k} ({title}): {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    line(1, "frame bound", frame_bound());
    line(2, "frame inner-product law", inner_product_law());
    let (chain, transform) = chain_and_transform();
    line(3, "chain rule", chain);
    line(4, "transformation rule", transform);
    line(5, "covariance", covariance());
    line(6, "wavelet eigenvalue", eigenvalue());
    let s = structure();
    line(7, "set S", structure_outcome(&s, &["set S equals the tube", "set S measure", "set S recovery", "set S scaling"], "p in {2,3,5}, d in {1,2,3}"));
    line(8, "tangent-map lemma", structure_outcome(&s, &["tangent map moves S"], "50 seeded mod-p-affine isometries each"));
    let (ok9, n9, worst9) = named_pass(&s, "wavelet lemma");
    line(9, "wavelet lemma", Outcome { pass: ok9 && n9 == 9, detail: format!("50 wavelets per (p, d), max deviation {worst9:.2e}") });
    line(10, "group structure", structure_outcome(&s, &["isometries preserve distances", "parabolic decomposition"], "500 pairs per seed, chains of length 6"));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
