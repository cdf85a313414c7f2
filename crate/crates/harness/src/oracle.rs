//! Brute-force quadrature for the Vladimirov operator.
//!
//! Nothing here calls into `padic_tree::operators`. The support is cut into cells
//! a few levels finer than the function's resolution, distances are measured
//! between cell centers with p-adic subtraction, and the part of the integral
//! outside the support is a plain geometric series.

use num_complex::Complex64;
use padic_tree::{Ball, Error, LCFunction, PAdicVec, Result};

/// Levels of refinement beyond the input resolution.
pub const REFINEMENT: i32 = 4;

/// The Vladimirov operator on the cells of `window` at level `resolution`.
pub fn quadrature_vladimirov(alpha: f64, f: &LCFunction, window: &Ball, resolution: i32, precision: u32) -> Result<LCFunction> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedDimension(f.dim(), "the quadrature oracle is one-dimensional"));
    }
    if !(alpha > 0.0) {
        return Err(Error::OutOfDomain(format!("alpha = {alpha}")));
    }
    let p = f.p();
    let pf = p as f64;
    let constant = (pf.powf(alpha) - 1.0) / (1.0 - pf.powf(-1.0 - alpha));
    let fine = f.resolution() + REFINEMENT;
    let supp = f.support();
    let cell_measure = pf.powi(-fine);
    let samples: Vec<(PAdicVec, Complex64)> = supp
        .descendants(fine)
        .iter()
        .map(|c| Ok((c.center(precision), f.value_on(c)?)))
        .collect::<Result<_>>()?;
    let res = resolution.max(f.resolution()).max(window.level());
    let values = window
        .descendants(res)
        .iter()
        .map(|x| {
            let x0 = x.center(precision);
            let inside = supp.contains(x);
            let fx = if inside { f.value_on(x)? } else { Complex64::new(0.0, 0.0) };
            let mut acc = Complex64::new(0.0, 0.0);
            for (y0, fy) in &samples {
                let diff = fx - fy;
                if diff == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let v = x0.sub(y0)?.valuation().ok_or_else(|| {
                    Error::InsufficientPrecision("distinct values at one point".into())
                })?;
                acc += diff * cell_measure * pf.powf(v as f64 * (1.0 + alpha));
            }
            if inside {
                // |x - y| = p^-l on the part of each sphere around x outside the support
                let mut outside = 0.0;
                let mut term = (1.0 - 1.0 / pf) * pf.powf((supp.level() - 1) as f64 * alpha);
                let ratio = pf.powf(-alpha);
                while term > 1e-300 && term > outside * 1e-18 {
                    outside += term;
                    term *= ratio;
                }
                acc += fx * outside;
            }
            Ok(acc * constant)
        })
        .collect::<Result<Vec<_>>>()?;
    LCFunction::new(window.clone(), res, values)
}
