use std::path::Path;

use num_complex::Complex64;
use serde_json::json;

use padic_tree::function::pushforward;
use padic_tree::operators::{kernel_op, vf_op, vladimirov, wavelet_eigenvalue, KernelSpec, VectorFieldSpec, Window};
use padic_tree::{LCFunction, Morphism};

use crate::config::{parse_json, ApplyConfig, ExperimentConfig, Operator};
use crate::report::{CaseBuilder, Provenance, Report};

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T, String> {
    v.as_ref().ok_or_else(|| format!("field `apply.{what}` is required for this operator"))
}

/// Applies one operator to a function read from disk.
pub fn evaluate(spec: &ApplyConfig) -> Result<(LCFunction, LCFunction), String> {
    let f: LCFunction = load(&spec.function)?;
    let window = spec.window.clone().unwrap_or_else(|| Window::of(&f));
    let out = match spec.operator {
        Operator::Vladimirov => vladimirov(*need(&spec.alpha, "alpha")?, &f, &window),
        Operator::Kernel => {
            let kernel: KernelSpec = load(need(&spec.kernel, "kernel")?)?;
            kernel_op(&kernel, &f, &window)
        }
        Operator::Field => {
            let kernel: KernelSpec = load(need(&spec.kernel, "kernel")?)?;
            let field: VectorFieldSpec = load(need(&spec.field, "field")?)?;
            vf_op(&kernel, &field, &f, &window)
        }
        Operator::Pushforward => {
            let phi: Morphism = load(need(&spec.morphism, "morphism")?)?;
            pushforward(&phi, &f)
        }
    }
    .map_err(|e| e.to_string())?;
    Ok((f, out))
}

/// Window-cell values as CSV with columns `cell, re, im`.
pub fn values_csv(f: &LCFunction) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cell", "re", "im"]).expect("in-memory write");
    for (cell, v) in f.cells().iter().zip(f.values()) {
        w.write_record([cell.encode(), crate::report::fmt17(v.re), crate::report::fmt17(v.im)]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Runs the `apply` experiment; the output function goes to `output.json` and `values.csv`.
pub fn run_apply(cfg: &ExperimentConfig) -> Result<Report, String> {
    let spec = cfg.apply.as_ref().ok_or("field `apply` is missing from the config")?;
    let (f, out) = evaluate(spec)?;
    let mut report = Report::new(cfg);
    let (p, d) = (f.p(), f.dim());
    report.run("apply", p, d, || {
        Ok(CaseBuilder::new("apply", Provenance::Triviality, p, d)
            .inputs(json!({"operator": spec.operator, "support": f.support().encode(), "R": f.resolution()}))
            .observed(json!({"support": out.support().encode(), "R": out.resolution(), "sup_norm": out.sup_norm()}))
            .residual(0.0, 0.0))
    });
    // a wavelet input must come back scaled by its eigenvalue
    let wavelet = f.as_wavelet_multiple(1e-12).filter(|_| f.sup_norm() > 0.0);
    if let (Operator::Vladimirov, Some((idx, _))) = (spec.operator, wavelet) {
        let alpha = spec.alpha.unwrap_or(1.0);
        report.run("apply eigenvalue", p, d, || {
            let lam = wavelet_eigenvalue(alpha, idx.gamma, p);
            let diff = out.max_abs_diff(&f.scale(Complex64::new(lam, 0.0))).map_err(|e| e.to_string())?;
            Ok(CaseBuilder::new("apply eigenvalue", Provenance::Oracle, p, d)
                .alpha(alpha)
                .expected(json!(lam))
                .observed(json!({"max_abs_diff": diff}))
                .residual(diff / (lam * f.sup_norm()), cfg.tolerances.relative))
        });
    }
    report.tables.push(("output.json".into(), crate::report::to_json_17(&out)));
    report.tables.push(("values.csv".into(), values_csv(&out)));
    Ok(report)
}
