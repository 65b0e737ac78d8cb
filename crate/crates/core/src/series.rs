//! Densities and series attached to the torsor count.
//!
//! * `h`, `g0` and `G2`: the real-variable side. `g0` is the length of the
//!   `t2`-section of `{h <= 1}` and is computed in closed form.
//! * `theta0` and `theta2`: the arithmetic densities left after summing over
//!   `alpha` and over `(alpha, eta6, eta7)` respectively.
//! * The main-term predictor `omega_inf * B * sum theta2(eta) / (eta1..eta5)`
//!   over the dominant box, its Dirichlet series `F_k` and their local
//!   factors.
//!
//! Quantities of the form `c / zeta(2)` are returned as [`OverZeta2`].

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::{factorize, inv_zeta2, mobius, phi_star, ratio, squarefree_divisors, ExactRational, OverZeta2};
use crate::error::{invalid, Error, Result};
use crate::modsqrt::sqrt_mod;
use crate::quad::{self, Estimate};
use crate::torsor::{coprime_to_all, eta_coprime, height_ok, y_quantities, TorsorPoint};

/// `max{|t0^4 t6|, |t0^2 t2 t6 t7|, |t0^4 t2|, |t0^2 t6^2 t7|, |t7 (t6^3 t7 + t0^2 t2^2)|}`.
pub fn h_func(t0: f64, t2: f64, t6: f64, t7: f64) -> f64 {
    let t02 = t0 * t0;
    let t04 = t02 * t02;
    [
        (t04 * t6).abs(),
        (t02 * t2 * t6 * t7).abs(),
        (t04 * t2).abs(),
        (t02 * t6 * t6 * t7).abs(),
        (t7 * (t6 * t6 * t6 * t7 + t02 * t2 * t2)).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Measure of `{u >= 0 : lo <= u <= hi} ∩ [0, cap]` pulled back along
/// `u = t^2`, i.e. the length of `{t : t^2 in [lo, hi], t^2 <= cap}`.
/// The second value tags which constraints are active, so callers can
/// locate the points where the section changes shape.
pub(crate) fn square_section(lo: f64, hi: f64, cap: f64) -> (f64, u32) {
    let l = lo.max(0.0);
    let u = hi.min(cap);
    if !(u >= l) {
        return (0.0, 0);
    }
    let tag = 1 | ((lo > 0.0) as u32) << 1 | ((hi < cap) as u32) << 2;
    (2.0 * (u.sqrt() - l.sqrt()), tag)
}

/// [`g0`] together with a tag that changes exactly where the closed form
/// switches branch.
pub fn g0_tagged(t0: f64, t6: f64, t7: f64) -> (f64, u32) {
    let t02 = t0 * t0;
    let t04 = t02 * t02;
    if (t04 * t6).abs() > 1.0 || (t02 * t6 * t6 * t7).abs() > 1.0 {
        return (0.0, 0);
    }
    // |t2| <= m from the two bounds linear in t2
    let lin = (t02 * t6 * t7).abs();
    let (m, which) = if lin > t04 {
        (1.0 / lin, 8)
    } else {
        (1.0 / t04, 0)
    };
    // |t6^3 t7^2 + t0^2 t7 u| <= 1 with u = t2^2
    let a = t6 * t6 * t6 * t7 * t7;
    let c = t02 * t7;
    let (lo, hi) = if c > 0.0 {
        ((-1.0 - a) / c, (1.0 - a) / c)
    } else if c < 0.0 {
        ((a - 1.0) / -c, (a + 1.0) / -c)
    } else if a.abs() <= 1.0 {
        (0.0, f64::INFINITY)
    } else {
        return (0.0, 0);
    };
    let (v, tag) = square_section(lo, hi, m * m);
    (v, tag | which | if c < 0.0 { 16 } else { 0 })
}

/// Length of the section `{t2 : h(t0, t2, t6, t7) <= 1}`.
pub fn g0(t0: f64, t6: f64, t7: f64) -> f64 {
    g0_tagged(t0, t6, t7).0
}

/// Points where `tag(x)` changes, found on a logarithmic grid of `|x|` in
/// `[lo, hi]` (both signs, plus zero) and refined by bisection.
pub(crate) fn find_kinks<F: Fn(f64) -> u32>(tag: &F, lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10().max(1.0);
    let n = (decades * per_decade as f64).ceil() as usize;
    let step = (hi / lo).ln() / n as f64;
    let mut grid: Vec<f64> = (0..=n).map(|i| -hi * (-(step * i as f64)).exp()).collect();
    grid.push(0.0);
    grid.extend((0..=n).rev().map(|i| hi * (-(step * i as f64)).exp()));
    let mut kinks = Vec::new();
    let mut prev = (grid[0], tag(grid[0]));
    for &x in &grid[1..] {
        let tx = tag(x);
        if tx != prev.1 {
            let (mut a, mut b) = (prev.0, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if !(mid > a && mid < b) {
                    break;
                }
                if tag(mid) == prev.1 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            kinks.push(0.5 * (a + b));
        }
        prev = (x, tx);
    }
    kinks
}

/// Tolerances and grid density for the two-dimensional integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    /// Relative tolerance of the outer integral.
    pub tol: f64,
    /// Grid points per decade when locating branch changes.
    pub per_decade: usize,
}

impl QuadSettings {
    pub fn new(tol: f64) -> Self {
        QuadSettings { tol, per_decade: 24 }
    }
}

/// `int_0^1 [ int F(v, x) dx ] dv` where the inner integrand is tagged,
/// `x` ranges over `[-hi(v), hi(v)]` and branch points are searched down
/// to `|x| = lo(v)`.
pub(crate) fn nested_integral<F, L, H>(inner: F, lo: L, hi: H, s: QuadSettings) -> Result<Estimate>
where
    F: Fn(f64, f64) -> (f64, u32),
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_tol = s.tol * 1e-2;
    let outer = |v: f64| -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        let (l, h) = (lo(v), hi(v));
        let kinks = find_kinks(&|x| inner(v, x).1, l, h, s.per_decade);
        let f = |x: f64| inner(v, x).0;
        let (a, b) = match (kinks.first(), kinks.last()) {
            // the integrand vanishes outside the outermost branch points
            // when the outermost tag is "empty"
            (Some(&first), Some(&last)) => (
                if inner(v, -h).1 == 0 { first } else { -h },
                if inner(v, h).1 == 0 { last } else { h },
            ),
            _ => (-h, h),
        };
        quad::integrate_best_effort(&f, a, b, &kinks, 0.0, inner_tol).value
    };
    quad::integrate(&outer, 0.0, 1.0, &[], 0.0, s.tol)
}

/// `G2(t0) = int_{h(t0, t2, t6, t7) <= 1, t6 > 0} dt2 dt6 dt7`.
///
/// The outer variable is `t6 = t0^-4 v^4`, which removes the integrable
/// `t6^{-3/4}` singularity at `t6 = 0`.
pub fn g2(t0: f64, tol: f64) -> Result<Estimate> {
    g2_with(t0, QuadSettings::new(tol))
}

pub fn g2_with(t0: f64, s: QuadSettings) -> Result<Estimate> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(invalid("t0 must be positive"));
    }
    let t04 = t0.powi(4);
    let t6_of = |v: f64| v.powi(4) / t04;
    let jac = |v: f64| 4.0 * v.powi(3) / t04;
    let inner = |v: f64, t7: f64| {
        let (g, tag) = g0_tagged(t0, t6_of(v), t7);
        (g * jac(v), tag)
    };
    // |t0^2 t6^2 t7| <= 1
    let hi = |v: f64| 1.0 / (t0 * t0 * t6_of(v).powi(2));
    // every branch change happens at |t7| of order t0^6 or larger
    let lo = |_: f64| 1e-4 * t0.powi(6);
    nested_integral(inner, lo, hi, s)
}

/// Oracle set of `(alpha1, alpha2)` with the torsor equation, the two
/// `alpha` coprimality conditions and height at most `B`, for fixed
/// `eta' = (eta1, .., eta7)`. Counted by scanning `alpha2`.
pub fn count_alpha_pairs(eta: [i64; 7], b: u64) -> Result<u64> {
    if eta[..6].iter().any(|&e| e < 1) || eta[6] == 0 {
        return Err(invalid("eta1..eta6 must be positive and eta7 nonzero"));
    }
    if b == 0 {
        return Ok(0);
    }
    let [e1, e2, e3, e4, e5, e6, e7] = eta.map(|e| e as i128);
    let k = e3 * e4 * e4 * e6 * e6 * e6 * e7;
    // |eta1^2 eta2^3 eta3^2 eta4 eta5^2 alpha2| <= B
    let mono = e1 * e1 * e2 * e2 * e2 * e3 * e3 * e4 * e5 * e5;
    let amax = (b as i128 / mono) as i64;
    let mut count = 0;
    for a2 in -amax..=amax {
        let num = -(e1 * (a2 as i128) * (a2 as i128) + k);
        if num % e5 != 0 {
            continue;
        }
        let Ok(a1) = i64::try_from(num / e5) else { continue };
        if !coprime_to_all(a1, &[e2 as i64, e6 as i64]) || !coprime_to_all(a2, &[e2 as i64, e3 as i64, e4 as i64]) {
            continue;
        }
        let t = TorsorPoint { eta, alpha1: a1, alpha2: a2 };
        if height_ok(&t, b)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Number of `rho mod n` with `gcd(rho, n) = 1` and `rho^2 a = c (mod n)`,
/// for `a` a unit mod `n`.
fn rho_count(a: i64, c: i64, n: u64) -> u64 {
    let inv = crate::modsqrt::inv_mod(a.rem_euclid(n as i64) as u64, n).expect("unit");
    let target = ((c.rem_euclid(n as i64) as u128 * inv as u128) % n as u128) as i64;
    sqrt_mod(target, n).into_iter().filter(|&r| r.gcd(&n) == 1 || n == 1).count() as u64
}

/// The density `theta0(eta, eta6, eta7)` of admissible `alpha2` residues.
pub fn theta0(eta: [i64; 5], eta6: i64, eta7: i64) -> Result<ExactRational> {
    if eta.iter().any(|&e| e < 1) || eta6 < 1 || eta7 == 0 {
        return Err(invalid("eta1..eta6 must be positive and eta7 nonzero"));
    }
    let [e1, e2, e3, e4, e5] = eta;
    if !eta_coprime(&eta)
        || !coprime_to_all(eta6, &[e1, e2, e3, e5])
        || !coprime_to_all(eta7, &[e1, e2, e3, e4, e5])
    {
        return Err(invalid("theta0 requires the eta coprimality conditions"));
    }
    let u = |x: i64| x as u64;
    let mut total = ExactRational::zero();
    for k in squarefree_divisors(u(e2)) {
        if !coprime_to_all(k as i64, &[e1, e3, e4]) {
            continue;
        }
        let n = k * u(e5);
        let c = -((e3 as i128 * eta6 as i128 * eta7 as i128).rem_euclid(n as i128) as i64);
        let rhos = rho_count(e1, c, n);
        let term = ratio(mobius(k as i64) as i64 * rhos as i64, k as i64) / phi_star(u(e2).gcd(&n));
        total += term;
    }
    Ok(total * phi_star(u(eta6)) * phi_star(u(e2) * u(e3) * u(e4)) / phi_star(u(eta6).gcd(&u(e4))))
}

/// The main term `Y2/eta5 * g0(Y0, eta6/Y6, eta7/Y7) * theta0` that
/// [`count_alpha_pairs`] approximates.
pub fn theta0_main_term(eta: [i64; 7], b: u64) -> Result<f64> {
    let base = [eta[0], eta[1], eta[2], eta[3], eta[4]];
    let y = y_quantities(base, b as f64)?;
    let th = crate::arith::to_f64(&theta0(base, eta[5], eta[6])?);
    Ok(y.y2 / eta[4] as f64 * g0(y.y0, eta[5] as f64 / y.y6, eta[6] as f64 / y.y7) * th)
}

/// Exponents of `p` in `(eta1, .., eta5)` are a local coprimality pattern.
pub fn local_coprime(e: &[u32; 5]) -> bool {
    let [e1, e2, e3, e4, e5] = e.map(|x| x > 0);
    !(e1 && (e3 || e4 || e5)) && !(e2 && e4) && !(e5 && (e3 || e4))
}

/// The `p`-part of the coefficient of `theta2`, for `eta_i = p^{e_i}`.
///
/// `theta2` is multiplicative over primes, so its coefficient is the
/// product of these local values over the primes dividing `eta1..eta5`.
pub fn theta2_local(p: u64, e: &[u32; 5]) -> ExactRational {
    let p = p as i64;
    if e.iter().all(|&x| x == 0) {
        return ExactRational::one();
    }
    if !local_coprime(e) {
        return ExactRational::zero();
    }
    let [e1, e2, e3, e4, e5] = e.map(|x| x > 0);
    let star = ratio(p - 1, p);
    let mut value = ratio(p * p, p * p - 1) * &star;
    if e1 || e2 || e3 {
        value *= &star;
    }
    if e2 || e3 || e4 || e5 {
        value *= &star;
    }
    // k12 = 1 term, then k12 = p when allowed
    let mut sum = if e2 && e5 { ratio(p, p - 1) } else { ExactRational::one() };
    if e2 && !(e1 || e3 || e4) {
        sum -= ratio(1, p - 1);
    }
    value * sum
}

fn theta2_local_f64(p: u64, e: &[u32; 5]) -> f64 {
    let pf = p as f64;
    if e.iter().all(|&x| x == 0) {
        return 1.0;
    }
    if !local_coprime(e) {
        return 0.0;
    }
    let [e1, e2, e3, e4, e5] = e.map(|x| x > 0);
    let star = 1.0 - 1.0 / pf;
    let mut value = star / (1.0 - 1.0 / (pf * pf));
    if e1 || e2 || e3 {
        value *= star;
    }
    if e2 || e3 || e4 || e5 {
        value *= star;
    }
    let mut sum = if e2 && e5 { 1.0 / star } else { 1.0 };
    if e2 && !(e1 || e3 || e4) {
        sum -= 1.0 / (pf - 1.0);
    }
    value * sum
}

/// Primes of `eta1 .. eta5` with their exponent vectors.
fn local_exponents(eta: &[u64; 5]) -> Vec<(u64, [u32; 5])> {
    let mut out: Vec<(u64, [u32; 5])> = Vec::new();
    for (i, &n) in eta.iter().enumerate() {
        for (p, k) in factorize(n).factors {
            match out.iter_mut().find(|(q, _)| *q == p) {
                Some((_, e)) => e[i] = k,
                None => {
                    let mut e = [0; 5];
                    e[i] = k;
                    out.push((p, e));
                }
            }
        }
    }
    out
}

fn check_eta(eta: &[u64; 5]) -> Result<()> {
    if eta.contains(&0) {
        return Err(invalid("eta entries must be positive"));
    }
    Ok(())
}

/// `theta2(eta)` as a multiple of `1/zeta(2)`; zero when the coprimality
/// conditions on `(eta1, .., eta5)` fail.
pub fn theta2(eta: [u64; 5]) -> Result<OverZeta2> {
    check_eta(&eta)?;
    let coef = local_exponents(&eta)
        .iter()
        .fold(ExactRational::one(), |acc, (p, e)| acc * theta2_local(*p, e));
    Ok(OverZeta2::new(coef))
}

/// Coefficient of `theta2(eta)` (without `1/zeta(2)`), in floating point.
pub fn theta2_coefficient_f64(eta: [u64; 5]) -> f64 {
    local_exponents(&eta).iter().map(|(p, e)| theta2_local_f64(*p, e)).product()
}

/// Exponent vector of a height box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KVector(pub [u32; 5]);

impl KVector {
    /// The box `eta1^2 eta2^4 eta3^3 eta4^2 eta5^3 <= B`.
    pub const A: KVector = KVector([2, 4, 3, 2, 3]);
    /// The box `eta1^3 eta2^6 eta3^4 eta4^2 eta5^5 <= B`.
    pub const B: KVector = KVector([3, 6, 4, 2, 5]);

    pub fn new(k: [u32; 5]) -> Result<Self> {
        if k.contains(&0) {
            return Err(invalid("k entries must be positive"));
        }
        Ok(KVector(k))
    }

    /// `eta1^k1 .. eta5^k5`, or `None` on overflow.
    pub fn monomial(&self, eta: &[u64; 5]) -> Option<u128> {
        eta.iter()
            .zip(self.0)
            .try_fold(1u128, |acc, (&e, k)| acc.checked_mul((e as u128).checked_pow(k)?))
    }

    pub fn product(&self) -> u64 {
        self.0.iter().map(|&k| k as u64).product()
    }
}

/// `(eta1, .., eta5)` satisfy the coprimality conditions and
/// `eta1^2 eta2^4 eta3^3 eta4^2 eta5^3 <= B`.
pub fn in_eb(eta: [u64; 5], b: u64) -> bool {
    let as_i = eta.map(|e| e as i64);
    eta.iter().all(|&e| e >= 1)
        && eta_coprime(&as_i)
        && KVector::A.monomial(&eta).is_some_and(|m| m <= b as u128)
}

/// [`in_eb`] and additionally `eta1^3 eta2^6 eta3^4 eta4^2 eta5^5 > B`.
pub fn in_ebstar(eta: [u64; 5], b: u64) -> bool {
    in_eb(eta, b) && KVector::B.monomial(&eta).is_none_or(|m| m > b as u128)
}

/// Visit every `eta` in `Z_{>0}^5` with `prod eta_i^{k_i} <= t`, passing
/// the monomial value along.
pub fn for_each_eta<F: FnMut([u64; 5], u128)>(k: KVector, t: u64, mut f: F) {
    fn rec<F: FnMut([u64; 5], u128)>(k: &[u32; 5], i: usize, t: u128, acc: u128, eta: &mut [u64; 5], f: &mut F) {
        if i == 5 {
            f(*eta, acc);
            return;
        }
        let mut e = 1u64;
        loop {
            let Some(m) = (e as u128).checked_pow(k[i]).and_then(|m| m.checked_mul(acc)) else { break };
            if m > t {
                break;
            }
            eta[i] = e;
            rec(k, i + 1, t, m, eta, f);
            e += 1;
        }
    }
    let mut eta = [1; 5];
    rec(&k.0, 0, t as u128, 1, &mut eta, &mut f);
}

fn eta_product(eta: &[u64; 5]) -> u64 {
    eta.iter().product()
}

/// `Delta_k(n) = sum over eta with prod eta_i^{k_i} = n of theta2(eta)/(eta1..eta5)`.
pub fn delta_k(k: KVector, n: u64) -> Result<OverZeta2> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let mut total = OverZeta2::zero();
    for_each_eta(k, n, |eta, m| {
        if m == n as u128 {
            let th = theta2(eta).expect("positive eta");
            total = total.clone() + OverZeta2::new(th.coefficient / int_u(eta_product(&eta)));
        }
    });
    Ok(total)
}

fn int_u(n: u64) -> ExactRational {
    ExactRational::from_integer(n.into())
}

/// `M_k(t) = sum_{n <= t} Delta_k(n)`, exactly.
pub fn m_k_partial(k: KVector, t: u64) -> OverZeta2 {
    let mut coef = ExactRational::zero();
    for_each_eta(k, t, |eta, _| {
        let th = theta2(eta).expect("positive eta");
        if !th.is_zero() {
            coef += th.coefficient / int_u(eta_product(&eta));
        }
    });
    OverZeta2::new(coef)
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// `M_k(t)` in floating point (including the `1/zeta(2)` factor).
pub fn m_k_partial_f64(k: KVector, t: u64) -> f64 {
    let mut acc = Compensated::default();
    for_each_eta(k, t, |eta, _| {
        let c = theta2_coefficient_f64(eta);
        if c != 0.0 {
            acc.add(c / eta_product(&eta) as f64);
        }
    });
    acc.value() * inv_zeta2()
}

/// `sum_{eta in E*(B)} theta2(eta)/(eta1..eta5)`, exactly.
pub fn ebstar_sum(b: u64) -> OverZeta2 {
    let mut coef = ExactRational::zero();
    for_each_eta(KVector::A, b, |eta, _| {
        if in_ebstar(eta, b) {
            coef += theta2(eta).expect("positive eta").coefficient / int_u(eta_product(&eta));
        }
    });
    OverZeta2::new(coef)
}

/// `sum_{eta in E*(B)} theta2(eta)/(eta1..eta5)` in floating point.
///
/// The terms are exact rationals, but their common denominator grows like
/// a primorial, so large heights are summed in compensated floating point.
pub fn ebstar_sum_f64(b: u64) -> f64 {
    let mut acc = Compensated::default();
    for_each_eta(KVector::A, b, |eta, _| {
        if in_ebstar(eta, b) {
            acc.add(theta2_coefficient_f64(eta) / eta_product(&eta) as f64);
        }
    });
    acc.value() * inv_zeta2()
}

/// `omega_inf * B * sum_{eta in E*(B)} theta2(eta)/(eta1..eta5)`.
pub fn main_term_prediction(b: u64, omega_inf: f64) -> f64 {
    omega_inf * b as f64 * ebstar_sum_f64(b)
}

fn check_local_args(p: u64) -> Result<()> {
    if !crate::arith::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(())
}

/// The local factor `F_{k,p}(s)` from its closed form.
pub fn local_factor_closed(k: KVector, p: u64, s: f64) -> Result<f64> {
    check_local_args(p)?;
    let pf = p as f64;
    let q: Vec<f64> = k.0.iter().map(|&kj| pf.powf(kj as f64 * s + 1.0) - 1.0).collect();
    if q.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(invalid("local factor requires p^{k_j s + 1} > 1 for all j"));
    }
    let a = 1.0 - 1.0 / pf;
    let inner = (1.0 + 1.0 / pf)
        + a / q[0]
        + a / q[1] * ((1.0 - 2.0 / pf) + a / q[0] + a / q[2] + a / q[4])
        + a * a / q[2] * (1.0 + 1.0 / q[3])
        + a / q[3]
        + a / q[4];
    Ok(a * inner)
}

/// The closed form of `F_{k,p}` evaluated exactly at `s = 0`, where every
/// `p^{k_j s + 1} - 1` equals `p - 1`.
pub fn local_factor_closed_at_zero(p: u64) -> Result<ExactRational> {
    check_local_args(p)?;
    let p = p as i64;
    let a = ratio(p - 1, p);
    let over_q = || a.clone() / int_u(p as u64 - 1);
    let inner = ratio(p + 1, p)
        + over_q()
        + over_q() * (ratio(p - 2, p) + over_q() + over_q() + over_q())
        + a.clone() * a.clone() / int_u(p as u64 - 1) * (ExactRational::one() + ratio(1, p - 1))
        + over_q()
        + over_q();
    Ok(a * inner)
}

/// `F_{k,p}(s)` by direct summation of `theta2(p^e1, .., p^e5) p^{-sum e_i (k_i s + 1)}`
/// over `0 <= e_i <= truncation`.
pub fn local_factor_direct(k: KVector, p: u64, s: f64, truncation: u32) -> Result<f64> {
    check_local_args(p)?;
    if k.0.iter().any(|&kj| !(kj as f64 * s + 1.0 > 0.0)) {
        return Err(invalid("direct local factor diverges unless k_j s + 1 > 0"));
    }
    if truncation < 10 {
        return Err(invalid("truncation exponent must be at least 10"));
    }
    let pf = p as f64;
    let w: Vec<f64> = k.0.iter().map(|&kj| pf.powf(-(kj as f64 * s + 1.0))).collect();
    let mut acc = Compensated::default();
    let mut e = [0u32; 5];
    fn rec(i: usize, e: &mut [u32; 5], weight: f64, w: &[f64], t: u32, p: u64, acc: &mut Compensated) {
        if i == 5 {
            acc.add(theta2_local_f64(p, e) * weight);
            return;
        }
        let mut wi = 1.0;
        for x in 0..=t {
            e[i] = x;
            // the support pattern only depends on which entries are nonzero
            if x <= 1 && !local_coprime(&mask_prefix(e, i)) {
                break;
            }
            rec(i + 1, e, weight * wi, w, t, p, acc);
            wi *= w[i];
        }
        e[i] = 0;
    }
    rec(0, &mut e, 1.0, &w, truncation, p, &mut acc);
    Ok(acc.value() * (1.0 - 1.0 / (pf * pf)))
}

fn mask_prefix(e: &[u32; 5], i: usize) -> [u32; 5] {
    let mut m = [0; 5];
    m[..=i].copy_from_slice(&e[..=i]);
    m
}

/// `G_k(0) = prod_{p <= cutoff} F_{k,p}(0) (1 - 1/p)^5`. The right-hand
/// side does not depend on `k`; the product is computed from the exact
/// per-prime values.
pub fn g_k_at_zero(prime_cutoff: u64) -> Result<f64> {
    if prime_cutoff < 2 {
        return Err(invalid("prime cutoff must be at least 2"));
    }
    let mut log = 0.0;
    for p in crate::arith::primes_up_to(prime_cutoff) {
        log += crate::arith::to_f64(&g_k_local_at_zero(p)?).ln();
    }
    Ok(log.exp())
}

/// `F_{k,p}(0) (1 - 1/p)^5`, exactly.
pub fn g_k_local_at_zero(p: u64) -> Result<ExactRational> {
    let f = local_factor_closed_at_zero(p)?;
    let a = ratio(p as i64 - 1, p as i64);
    Ok(f * num_traits::pow(a, 5))
}

/// Largest observed `theta2(eta) / phi_dagger(eta2)` over `E(B)`.
pub fn theta2_dagger_ratio_max(b: u64) -> (f64, [u64; 5]) {
    let mut best = (0.0, [1; 5]);
    for_each_eta(KVector::A, b, |eta, _| {
        let r = theta2_coefficient_f64(eta) * inv_zeta2() / crate::arith::to_f64(&crate::arith::phi_dagger(eta[1]));
        if r > best.0 {
            best = (r, eta);
        }
    });
    best
}

/// Ratio `M_k(t) / [G_k(0) (log t)^5 / (5! prod k)]` for a list of `t`;
/// tends to 1 since the polynomial in the asymptotic is monic of degree 5.
pub fn m_k_leading_ratio(k: KVector, ts: &[u64], g0_value: f64) -> Vec<(u64, f64)> {
    ts.iter()
        .map(|&t| {
            let lead = g0_value * (t as f64).ln().powi(5) / (120.0 * k.product() as f64);
            (t, m_k_partial_f64(k, t) / lead)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;
    use num_traits::ToPrimitive;

    #[test]
    fn h_examples() {
        assert_eq!(h_func(1.0, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(h_func(1.0, 1.0, 1.0, 1.0), 2.0);
    }

    #[test]
    fn g0_examples() {
        assert_eq!(g0(1.0, 0.0, 0.0), 2.0);
        assert_eq!(g0(1.0, 2.0, 0.0), 0.0);
    }

    fn g0_scan(t0: f64, t6: f64, t7: f64) -> f64 {
        let n = 200_000;
        let step = 4.0 / n as f64;
        (0..n)
            .filter(|&i| h_func(t0, -2.0 + step * (i as f64 + 0.5), t6, t7) <= 1.0)
            .count() as f64
            * step
    }

    #[test]
    fn g0_matches_section_scan() {
        for &(t0, t6, t7) in &[
            (1.0, 0.5, 1.0),
            (1.0, 0.5, -3.0),
            (1.0, 0.1, -20.0),
            (1.0, 0.2, 5.0),
            (0.8, 0.3, -4.0),
            (1.1, 0.05, 50.0),
            (1.0, 0.9, -1.2),
        ] {
            let exact = g0(t0, t6, t7);
            assert!((exact - g0_scan(t0, t6, t7)).abs() < 1e-4, "{t0} {t6} {t7}: {exact}");
        }
    }

    #[test]
    fn theta2_examples() {
        assert_eq!(theta2([1; 5]).unwrap().coefficient, int(1));
        assert!(theta2([2, 1, 2, 1, 1]).unwrap().is_zero());
        // (2,1,1,1,1): phi*(2) phi*(2) phi*(1) / (1 - 1/4) * 1
        assert_eq!(theta2([2, 1, 1, 1, 1]).unwrap().coefficient, ratio(1, 3));
    }

    /// The defining formula evaluated literally.
    fn theta2_formula(eta: [u64; 5]) -> ExactRational {
        let as_i = eta.map(|e| e as i64);
        if !eta_coprime(&as_i) {
            return ExactRational::zero();
        }
        let [e1, e2, e3, e4, e5] = eta;
        let all = e1 * e2 * e3 * e4 * e5;
        let mut v = phi_star(e1 * e2 * e3) * phi_star(all) * phi_star(e2 * e3 * e4 * e5);
        for p in factorize(all).primes() {
            v *= ratio((p * p) as i64, (p * p - 1) as i64);
        }
        let mut sum = ExactRational::zero();
        for k in squarefree_divisors(e2) {
            if (e1 * e3 * e4).gcd(&k) != 1 {
                continue;
            }
            sum += ratio(mobius(k as i64) as i64, k as i64) / phi_star(e2.gcd(&(k * e5)));
        }
        v * sum
    }

    #[test]
    fn theta2_matches_formula() {
        for_each_eta(KVector::A, 3000, |eta, _| {
            assert_eq!(theta2(eta).unwrap().coefficient, theta2_formula(eta), "{eta:?}");
        });
    }

    #[test]
    fn theta2_local_matches_prime_powers() {
        for p in [2u64, 3, 5, 7] {
            for idx in 0..4u32.pow(5) {
                let e: [u32; 5] = std::array::from_fn(|i| (idx / 4u32.pow(i as u32)) % 4);
                let eta = e.map(|x| p.pow(x));
                assert_eq!(theta2(eta).unwrap().coefficient, theta2_local(p, &e));
                let f = theta2_coefficient_f64(eta);
                assert!((f - theta2_local(p, &e).to_f64().unwrap()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn theta2_is_nonnegative() {
        for_each_eta(KVector::A, 20_000, |eta, _| {
            assert!(theta2(eta).unwrap().coefficient >= ExactRational::zero(), "{eta:?}");
        });
    }

    #[test]
    fn membership_examples() {
        assert!(in_eb([1; 5], 1));
        assert!(!in_ebstar([1; 5], 1));
        assert!(!in_eb([1; 5], 0));
        assert!(in_eb([2, 1, 1, 1, 1], 8));
        assert!(!in_ebstar([2, 1, 1, 1, 1], 8));
        assert!(in_ebstar([2, 1, 1, 1, 1], 7));
    }

    #[test]
    fn prediction_vanishes_for_tiny_heights() {
        assert_eq!(main_term_prediction(1, 1.0), 0.0);
        assert_eq!(main_term_prediction(2, 1.0), 0.0);
        // first nonzero height: eta = (2,1,1,1,1) has monomials 4 and 8
        let first = (1..100).find(|&b| main_term_prediction(b, 1.0) > 0.0).unwrap();
        assert_eq!(first, 4);
    }

    #[test]
    fn exact_and_float_sums_agree() {
        for b in [10u64, 100, 1000] {
            let exact = ebstar_sum(b).to_f64();
            assert!((exact - ebstar_sum_f64(b)).abs() < 1e-12 * exact.max(1.0));
        }
    }

    #[test]
    fn delta_examples() {
        for k in [KVector::A, KVector::B] {
            assert_eq!(delta_k(k, 1).unwrap().coefficient, int(1));
        }
        assert!(delta_k(KVector::A, 2).unwrap().is_zero());
        let expected = (theta2([2, 1, 1, 1, 1]).unwrap().coefficient + theta2([1, 1, 1, 2, 1]).unwrap().coefficient)
            / int(2);
        assert_eq!(delta_k(KVector::A, 4).unwrap().coefficient, expected);
        let m: ExactRational = (1..=200).map(|n| delta_k(KVector::A, n).unwrap().coefficient).sum();
        assert_eq!(m_k_partial(KVector::A, 200).coefficient, m);
    }

    #[test]
    fn local_factor_limits() {
        for k in [KVector::A, KVector::B] {
            for p in [2u64, 3, 5] {
                let v = local_factor_closed(k, p, 60.0).unwrap();
                assert!((v - (1.0 - 1.0 / (p * p) as f64)).abs() < 1e-12);
            }
            assert!((local_factor_closed(k, 2, 0.0).unwrap() - 17.0 / 8.0).abs() < 1e-14);
        }
        assert_eq!(local_factor_closed_at_zero(2).unwrap(), ratio(17, 8));
        assert_eq!(g_k_local_at_zero(2).unwrap(), ratio(17, 256));
    }

    #[test]
    fn local_factor_closed_matches_direct() {
        for k in [KVector::A, KVector::B] {
            let c = local_factor_closed(k, 3, 0.5).unwrap();
            let d = local_factor_direct(k, 3, 0.5, 60).unwrap();
            assert!((c - d).abs() < 1e-12, "{c} {d}");
        }
    }

    #[test]
    fn theta0_examples() {
        assert_eq!(theta0([1; 5], 1, 1).unwrap(), int(1));
        // k12 = 1 and k12 = 2 contribute 1 and -1
        assert_eq!(theta0([1, 2, 1, 1, 1], 1, 1).unwrap(), int(0));
        assert!(theta0([2, 1, 1, 1, 1], 2, 1).is_err());
    }

    #[test]
    fn alpha_pair_examples() {
        assert_eq!(count_alpha_pairs([1, 1, 1, 1, 1, 1, -2], 2).unwrap(), 2);
        assert_eq!(count_alpha_pairs([1, 1, 1, 1, 1, 1, -2], 0).unwrap(), 0);
    }

    #[test]
    fn kink_finder_locates_steps() {
        let k = find_kinks(&|x: f64| (x > 3.5) as u32 + (x > -0.25) as u32, 1e-3, 10.0, 10);
        assert_eq!(k.len(), 2);
        assert!((k[0] + 0.25).abs() < 1e-12 && (k[1] - 3.5).abs() < 1e-12);
    }
}
