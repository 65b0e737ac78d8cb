//! The leading constant `alpha * omega_inf * prod_p (1 - 1/p)^6 omega_p`.
//!
//! `alpha` is a difference of two simplex volumes and is exact. `omega_inf`
//! is a three-dimensional volume, computed as a two-dimensional adaptive
//! quadrature of an exact one-dimensional section length. The Euler product
//! is truncated with an explicit bound on the tail.
//!
//! # Tail bound
//!
//! With `x = 1/p` the Euler factor is `f(x) = (1 - x)^6 (1 + 6x + x^2)`, and
//!
//! ```text
//! log f(x) = -20 x^2 + 64 x^3 - 159 x^4 + ...
//! ```
//!
//! On `0 < x <= 1/2` the ratio `|log f(x)| / x^2` increases monotonically
//! to its limit 20 as `x -> 0` (it is 10.85 at `x = 1/2` and 15.88 at
//! `x = 1/11`), so `|log f(1/p)| <= 20 / p^2` for every prime. Hence the
//! primes above `P` change the logarithm of the product by at most
//! `20 * sum_{n > P} n^-2 <= 20 / (P - 1)`, and since every factor is
//! below 1 the full product lies in `[value * (1 - tail), value]`.

use num_traits::One;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{int, primes_up_to, ratio, to_f64, ExactRational};
use crate::error::{invalid, Result};
use crate::quad::Estimate;
use crate::series::{self, nested_integral, square_section, QuadSettings};

/// Exponents `k` of the simplex `{x >= 0 : k1 x1 + .. + k5 x5 <= 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimplexSpec {
    k: [u64; 5],
}

impl SimplexSpec {
    pub fn new(k: [u64; 5]) -> Result<Self> {
        if k.contains(&0) {
            return Err(invalid("simplex coefficients must be positive"));
        }
        Ok(SimplexSpec { k })
    }

    pub fn k(&self) -> [u64; 5] {
        self.k
    }

    /// Coefficientwise `self <= other`, i.e. `other`'s simplex lies inside
    /// `self`'s.
    pub fn dominated_by(&self, other: &SimplexSpec) -> bool {
        self.k.iter().zip(other.k).all(|(&a, b)| a <= b)
    }
}

/// `1 / (5! k1 k2 k3 k4 k5)`.
pub fn simplex_volume(s: &SimplexSpec) -> ExactRational {
    let d: i64 = 120 * s.k.iter().map(|&k| k as i64).product::<i64>();
    ratio(1, d)
}

pub const K_OUTER: [u64; 5] = [2, 4, 3, 2, 3];
pub const K_INNER: [u64; 5] = [3, 6, 4, 2, 5];

/// `vol P_(2,4,3,2,3) - vol P_(3,6,4,2,5)`.
pub fn alpha_constant() -> ExactRational {
    let outer = SimplexSpec { k: K_OUTER };
    let inner = SimplexSpec { k: K_INNER };
    assert!(outer.dominated_by(&inner), "difference formula needs nested simplices");
    simplex_volume(&outer) - simplex_volume(&inner)
}

/// The same constant as `(1/180) * (1/5!)`.
pub fn alpha_weyl() -> ExactRational {
    ratio(1, 180) * ratio(1, 120)
}

/// Monte Carlo estimate of the volume of
/// `{x >= 0 : 2x1+4x2+3x3+2x4+3x5 <= 1, 3x1+6x2+4x3+2x4+5x5 >= 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub value: f64,
    pub sigma: f64,
    pub samples: u64,
}

pub fn alpha_monte_carlo(samples: u64, seed: u64) -> MonteCarlo {
    // bounding box of the outer simplex
    let side = [0.5, 0.25, 1.0 / 3.0, 0.5, 1.0 / 3.0];
    let box_volume: f64 = side.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let x: [f64; 5] = std::array::from_fn(|i| rng.gen::<f64>() * side[i]);
        let lin = |k: &[u64; 5]| k.iter().zip(&x).map(|(&k, &x)| k as f64 * x).sum::<f64>();
        if lin(&K_OUTER) <= 1.0 && lin(&K_INNER) >= 1.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    MonteCarlo {
        value: p * box_volume,
        sigma: (p * (1.0 - p) / samples as f64).sqrt() * box_volume,
        samples,
    }
}

/// `omega_p = 1 + 6/p + 1/p^2`.
pub fn omega_p(p: u64) -> Result<ExactRational> {
    if !crate::arith::is_prime(p) {
        return Err(crate::error::Error::NotPrime(p));
    }
    let p = p as i64;
    Ok(ratio(p * p + 6 * p + 1, p * p))
}

/// `(1 - 1/p)^6 omega_p`.
pub fn euler_factor(p: u64) -> Result<ExactRational> {
    let a = ratio(p as i64 - 1, p as i64);
    Ok(num_traits::pow(a, 6) * omega_p(p)?)
}

/// Constant `C` with `|log((1 - 1/p)^6 omega_p)| <= C / p^2` for all primes.
pub const EULER_TAIL_CONSTANT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerProduct {
    pub value: f64,
    /// Relative: the full product lies in `[value (1 - tail), value]`.
    pub tail: f64,
    pub cutoff: u64,
}

/// `prod_{p <= P} (1 - 1/p)^6 (1 + 6/p + 1/p^2)` with its tail bound.
pub fn euler_product(prime_cutoff: u64) -> Result<EulerProduct> {
    if prime_cutoff < 2 {
        return Err(invalid("prime cutoff must be at least 2"));
    }
    let mut log = 0.0;
    for p in primes_up_to(prime_cutoff) {
        let x = 1.0 / p as f64;
        log += 6.0 * (-x).ln_1p() + (6.0 * x + x * x).ln_1p();
    }
    Ok(EulerProduct {
        value: log.exp(),
        tail: EULER_TAIL_CONSTANT / (prime_cutoff - 1) as f64,
        cutoff: prime_cutoff,
    })
}

/// The truncated product as an exact rational; only sensible for small
/// cutoffs.
pub fn euler_product_exact(prime_cutoff: u64) -> Result<ExactRational> {
    primes_up_to(prime_cutoff)
        .into_iter()
        .try_fold(ExactRational::one(), |acc, p| Ok(acc * euler_factor(p)?))
}

/// How `omega_inf` is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaMethod {
    /// Integrate the section length in `t2` over `(t6, t7)`, `0 < t6 <= 1`.
    TParam,
    /// Integrate `x0^-2` over the region in `(x0, x2, x3)`, `x0 > 0`.
    XParam,
    /// `t0^2 G2(t0)`.
    G2Route { t0: f64 },
}

/// Length of `{x2 : (x0, x2, x3) in region}` with its branch tag.
fn x_section(x0: f64, x3: f64) -> (f64, u32) {
    if !(x0 > 0.0 && x0 <= 1.0) || x3.abs() > 1.0 {
        return (0.0, 0);
    }
    // |x2| <= 1 and |x2 x3| <= x0
    let (cap, which) = if x3.abs() > x0 { (x0 / x3.abs(), 8) } else { (1.0, 0) };
    // |x2^2 x3 + x0 x3^2| <= x0^2
    let a = x0 * x3 * x3;
    let x02 = x0 * x0;
    let (lo, hi) = if x3 > 0.0 {
        ((-x02 - a) / x3, (x02 - a) / x3)
    } else if x3 < 0.0 {
        ((a - x02) / -x3, (a + x02) / -x3)
    } else {
        (0.0, f64::INFINITY)
    };
    let (v, tag) = square_section(lo, hi, cap * cap);
    (v, tag | which | if x3 < 0.0 { 16 } else { 0 })
}

/// `omega_inf` and its error estimate.
pub fn omega_infinity(method: OmegaMethod, tol: f64) -> Result<Estimate> {
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let s = QuadSettings::new(tol);
    match method {
        OmegaMethod::TParam => {
            // t6 = v^4
            let inner = |v: f64, t7: f64| {
                let (g, tag) = series::g0_tagged(1.0, v.powi(4), t7);
                (g * 4.0 * v.powi(3), tag)
            };
            nested_integral(inner, |_| 1e-4, |v| v.powi(-8), s)
        }
        OmegaMethod::XParam => {
            // x0 = v^4; the symmetry x -> -x accounts for the factor 1/2
            let inner = |v: f64, x3: f64| {
                let x0 = v.powi(4);
                let (g, tag) = x_section(x0, x3);
                (g * 4.0 * v.powi(3) / (x0 * x0), tag)
            };
            nested_integral(inner, |v| 1e-4 * v.powi(8), |_| 1.0, s)
        }
        OmegaMethod::G2Route { t0 } => {
            let g = series::g2(t0, tol)?;
            let t02 = t0 * t0;
            Ok(Estimate { value: g.value * t02, err: g.err * t02 })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueWithError {
    pub value: f64,
    pub err: f64,
}

/// `c = alpha * omega_inf * euler` with first-order error propagation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantBreakdown {
    pub schema: u32,
    #[serde(serialize_with = "as_string")]
    pub alpha: ExactRational,
    pub omega_infinity: ValueWithError,
    pub euler: EulerProduct,
    pub c: ValueWithError,
}

fn as_string<S: serde::Serializer>(r: &ExactRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Assemble the constant from its pieces. The error is
/// `alpha * (omega_err * euler + omega * euler * tail)`.
pub fn assemble(omega: Estimate, euler: EulerProduct) -> ConstantBreakdown {
    let alpha = alpha_constant();
    let a = to_f64(&alpha);
    ConstantBreakdown {
        schema: 1,
        omega_infinity: ValueWithError { value: omega.value, err: omega.err },
        c: ValueWithError {
            value: a * omega.value * euler.value,
            err: a * (omega.err * euler.value + omega.value * euler.value * euler.tail),
        },
        alpha,
        euler,
    }
}

pub fn c_constant(prime_cutoff: u64, tol: f64) -> Result<ConstantBreakdown> {
    let omega = omega_infinity(OmegaMethod::TParam, tol)?;
    Ok(assemble(omega, euler_product(prime_cutoff)?))
}

/// Exact check that the finite-field count matches `omega_p`:
/// `(#S(F_p) + 4p) / p^2 = 1 + 6/p + 1/p^2`.
pub fn fp_density_matches(p: u64) -> Result<bool> {
    let n = crate::surface::count_fp(p)?;
    let lhs = int((n + 4 * p) as i64) / int((p * p) as i64);
    Ok(lhs == omega_p(p)?)
}

/// `|a - b| / max(|a|, |b|)`.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_volumes() {
        assert_eq!(simplex_volume(&SimplexSpec::new([1; 5]).unwrap()), ratio(1, 120));
        assert_eq!(simplex_volume(&SimplexSpec::new(K_OUTER).unwrap()), ratio(1, 17280));
        assert_eq!(simplex_volume(&SimplexSpec::new(K_INNER).unwrap()), ratio(1, 86400));
        assert!(SimplexSpec::new([1, 0, 1, 1, 1]).is_err());
    }

    #[test]
    fn alpha_value() {
        assert_eq!(alpha_constant(), ratio(1, 21600));
        assert_eq!(alpha_weyl(), alpha_constant());
    }

    #[test]
    fn alpha_monte_carlo_is_close() {
        let mc = alpha_monte_carlo(1_000_000, 7);
        assert!((mc.value - 1.0 / 21600.0).abs() < 4.0 * mc.sigma, "{mc:?}");
    }

    #[test]
    fn omega_p_values() {
        assert_eq!(omega_p(2).unwrap(), ratio(17, 4));
        assert_eq!(omega_p(3).unwrap(), ratio(28, 9));
        assert_eq!(omega_p(5).unwrap(), ratio(56, 25));
        assert_eq!(euler_factor(2).unwrap(), ratio(17, 256));
        assert_eq!(euler_factor(3).unwrap(), ratio(1792, 6561));
        assert!(omega_p(4).is_err());
    }

    #[test]
    fn fp_density() {
        for p in [3, 5, 7] {
            assert!(fp_density_matches(p).unwrap());
        }
    }

    #[test]
    fn euler_tail_constant_holds() {
        for p in primes_up_to(100_000) {
            let x = 1.0 / p as f64;
            let log = 6.0 * (-x).ln_1p() + (6.0 * x + x * x).ln_1p();
            assert!(log < 0.0 && log.abs() <= EULER_TAIL_CONSTANT * x * x, "p = {p}");
        }
    }

    #[test]
    fn euler_product_brackets() {
        let small = euler_product(100).unwrap();
        let exact = to_f64(&euler_product_exact(100).unwrap());
        assert!((small.value - exact).abs() < 1e-14);
        let large = euler_product(1_000_000).unwrap();
        assert!(large.value < small.value);
        assert!(large.value >= small.value * (1.0 - small.tail));
        assert!(large.tail < small.tail);
        assert!(euler_product(1).is_err());
    }

    #[test]
    fn x_section_matches_scan() {
        for &(x0, x3) in &[(0.5, 0.1), (0.5, -0.3), (0.2, -0.05), (0.9, 0.6), (0.3, -0.9)] {
            let n = 400_000;
            let step = 2.0 / n as f64;
            let scan = (0..n)
                .filter(|&i| {
                    let x2 = -1.0 + step * (i as f64 + 0.5);
                    (x2 * x3 / x0).abs() <= 1.0 && (x2 * x2 * x3 + x0 * x3 * x3).abs() <= x0 * x0
                })
                .count() as f64
                * step;
            assert!((x_section(x0, x3).0 - scan).abs() < 1e-4, "{x0} {x3}");
        }
    }

    #[test]
    fn assembly_identity() {
        let e = euler_product(1000).unwrap();
        let b = assemble(Estimate { value: 1.0, err: 0.0 }, e);
        assert!((b.c.value - e.value / 21600.0).abs() < 1e-18);
        assert!((b.c.err - e.value * e.tail / 21600.0).abs() < 1e-18);
    }

    /// Length of `{t7 : h(1, t2, t6, t7) <= 1}`, from the quadratic
    /// `|t6^3 t7^2 + t2^2 t7| <= 1` cut by `|t7| <= min(t6^-2, 1/|t2 t6|)`.
    fn t7_section(t2: f64, t6: f64) -> (f64, u32) {
        let (a, b) = (t6.powi(3), t2 * t2);
        let cap = if t2 == 0.0 { t6.powi(-2) } else { t6.powi(-2).min(1.0 / (t2.abs() * t6)) };
        let r = (b * b + 4.0 * a).sqrt();
        let (r_lo, r_hi) = (-(b + r) / (2.0 * a), 2.0 / (b + r));
        let clip = |lo: f64, hi: f64| (hi.min(cap) - lo.max(-cap)).max(0.0);
        let mut len = clip(r_lo, r_hi);
        let mut tag = 1 | ((r_lo < -cap) as u32 * 2) | ((r_hi > cap) as u32 * 4);
        if b * b > 4.0 * a {
            let r = (b * b - 4.0 * a).sqrt();
            let (s_lo, s_hi) = (-(b + r) / (2.0 * a), -2.0 / (b + r));
            len -= clip(s_lo, s_hi);
            tag |= 8 | ((s_lo < -cap) as u32 * 16) | ((s_hi < -cap) as u32 * 32);
        }
        (len, tag)
    }

    #[test]
    fn t7_section_matches_scan() {
        for &(t2, t6) in &[(0.3, 0.5), (-0.9, 0.1), (0.05, 0.9), (0.7, 0.02), (0.0, 0.3)] {
            let (len, _) = t7_section(t2, t6);
            let cap = 1.0 / (t6 * t6);
            let n = 400_000;
            let step = 2.0 * cap / n as f64;
            let inside = (0..n)
                .filter(|&i| series::h_func(1.0, t2, t6, -cap + (i as f64 + 0.5) * step) <= 1.0)
                .count();
            assert!((len - inside as f64 * step).abs() <= 4.0 * step, "({t2}, {t6}): {len}");
        }
    }

    #[test]
    fn omega_infinity_in_the_other_order() {
        // outer t6 = v^4, inner t2, t7 measured exactly
        let inner = |v: f64, t2: f64| {
            let (len, tag) = t7_section(t2, v.powi(4));
            (len * 4.0 * v.powi(3), tag)
        };
        let other = nested_integral(inner, |v| 1e-3 * v.powi(4), |_| 1.0, QuadSettings::new(1e-7)).unwrap();
        let t = omega_infinity(OmegaMethod::TParam, 1e-7).unwrap();
        assert!(relative_difference(other.value, t.value) < 1e-5, "{} vs {}", other.value, t.value);
    }

    #[test]
    fn g2_scaling_off_dyadic_points() {
        let t = omega_infinity(OmegaMethod::TParam, 1e-7).unwrap().value;
        for t0 in [0.37, 0.8, 1.3, 2.9] {
            let g = omega_infinity(OmegaMethod::G2Route { t0 }, 1e-6).unwrap().value;
            assert!(relative_difference(g, t) < 1e-4, "t0 = {t0}: {g} vs {t}");
        }
    }
}
