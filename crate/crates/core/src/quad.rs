//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//!
//! Known kinks of the integrand can be passed as breakpoints; the initial
//! partition is split there so every panel starts out smooth. Refinement
//! always bisects the panel with the largest error estimate (first one on
//! ties), so results are reproducible bit for bit.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Upper limit on the number of panels before giving up.
pub const MAX_PANELS: usize = 4000;

/// A numerical value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * x;
        let s = f(c - dx) + f(c + dx);
        kronrod += wk * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * h;
    let err = ((kronrod - gauss) * h).abs();
    Panel { a, b, value, err }
}

fn run<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breakpoints: &[f64], abs_tol: f64, rel_tol: f64) -> (Estimate, bool) {
    if a == b {
        return (Estimate { value: 0.0, err: 0.0 }, true);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);
    let mut panels: Vec<Panel> = edges.windows(2).map(|w| gk15(f, w[0], w[1])).collect();
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        let tol = abs_tol.max(rel_tol * value.abs());
        if err <= tol {
            return (Estimate { value: sign * value, err }, true);
        }
        if panels.len() >= MAX_PANELS {
            return (Estimate { value: sign * value, err }, false);
        }
        let worst = panels
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if p.err > panels[best].err { i } else { best });
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // panel cannot be split further in floating point
            return (Estimate { value: sign * value, err }, false);
        }
        panels[worst] = gk15(f, p.a, mid);
        panels.push(gk15(f, mid, p.b));
    }
}

/// Integrate `f` over `[a, b]` to within `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    let (est, ok) = run(f, a, b, breakpoints, abs_tol, rel_tol);
    if ok {
        Ok(est)
    } else {
        Err(Error::Quadrature { err: est.err, tol: abs_tol.max(rel_tol * est.value.abs()) })
    }
}

/// Like [`integrate`], but returns the last estimate even when the tolerance
/// was not reached. Used for inner integrals, whose errors are accumulated
/// and checked by the caller.
pub fn integrate_best_effort<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Estimate {
    run(f, a, b, breakpoints, abs_tol, rel_tol).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let est = integrate(&|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[], 1e-14, 1e-14).unwrap();
        assert!((est.value - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn square_root_endpoint() {
        let est = integrate(&|x: f64| x.sqrt(), 0.0, 1.0, &[], 1e-10, 1e-10).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn kink_with_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let est = integrate(&f, 0.0, 1.0, &[0.3], 1e-13, 1e-13).unwrap();
        assert!((est.value - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let f = |x: f64| x;
        assert!((integrate(&f, 1.0, 0.0, &[], 1e-12, 0.0).unwrap().value + 0.5).abs() < 1e-14);
        assert_eq!(integrate(&f, 1.0, 1.0, &[], 1e-12, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn reports_non_convergence() {
        let f = |x: f64| if x > 0.0 { 1.0 / x } else { 0.0 };
        assert!(matches!(integrate(&f, 0.0, 1.0, &[], 1e-12, 0.0), Err(Error::Quadrature { .. })));
    }
}
