//! Multiplicative functions and progression sums.
//!
//! The two local products
//!
//! ```text
//! phi*(n) = prod_{p | n} (1 - 1/p),    phi†(n) = prod_{p | n} (1 + 1/p)
//! ```
//!
//! and the function `f_{a,b}(n) = phi*(n) / phi*(gcd(n, a))` (zero unless
//! `gcd(n, b) = 1`) are the arithmetic weights that show up when the torsor
//! count is summed over one variable at a time. This module evaluates them
//! exactly and provides the progression-sum estimates together with the
//! observed error ratio against their `2^omega(b) log|I|` error scale.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Result};
use crate::quad;

/// Arbitrary precision rational used for every exact quantity.
pub type ExactRational = BigRational;

/// Largest integer covered by the smallest-prime-factor table.
pub const SIEVE_LIMIT: usize = 10_000_000;

/// `1/zeta(2) = 6/pi^2`.
pub fn inv_zeta2() -> f64 {
    6.0 / (PI * PI)
}

pub(crate) fn ratio(n: i64, d: i64) -> ExactRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub(crate) fn int(n: i64) -> ExactRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn to_f64(r: &ExactRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// An exact rational multiple of `1/zeta(2)`.
///
/// The factor `1/zeta(2)` is kept symbolic; it is only replaced by `6/pi^2`
/// in [`OverZeta2::to_f64`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverZeta2 {
    pub coefficient: ExactRational,
}

impl OverZeta2 {
    pub fn new(coefficient: ExactRational) -> Self {
        OverZeta2 { coefficient }
    }

    pub fn zero() -> Self {
        OverZeta2::new(ExactRational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coefficient.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.coefficient) * inv_zeta2()
    }
}

impl std::ops::Add for OverZeta2 {
    type Output = OverZeta2;
    fn add(self, rhs: OverZeta2) -> OverZeta2 {
        OverZeta2::new(self.coefficient + rhs.coefficient)
    }
}

impl std::ops::Sub for OverZeta2 {
    type Output = OverZeta2;
    fn sub(self, rhs: OverZeta2) -> OverZeta2 {
        OverZeta2::new(self.coefficient - rhs.coefficient)
    }
}

impl std::iter::Sum for OverZeta2 {
    fn sum<I: Iterator<Item = OverZeta2>>(iter: I) -> OverZeta2 {
        OverZeta2::new(iter.map(|x| x.coefficient).sum())
    }
}

impl std::fmt::Display for OverZeta2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})/zeta(2)", self.coefficient)
    }
}

struct Sieve {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl Sieve {
    fn new(limit: usize) -> Sieve {
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::new();
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si || i * p as usize > limit {
                    break;
                }
                spf[i * p as usize] = p;
            }
        }
        Sieve { spf, primes }
    }
}

fn sieve() -> &'static Sieve {
    static SIEVE: OnceLock<Sieve> = OnceLock::new();
    SIEVE.get_or_init(|| Sieve::new(SIEVE_LIMIT))
}

/// A positive integer together with its prime factorisation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInteger {
    pub n: u64,
    /// `(prime, exponent)` pairs, primes strictly increasing.
    pub factors: Vec<(u64, u32)>,
}

impl FactoredInteger {
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// `omega(n)`, the number of distinct prime factors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }
}

/// Factorise `n >= 1`: sieve lookup below [`SIEVE_LIMIT`], trial division by
/// the sieved primes above it.
pub fn factorize(n: u64) -> FactoredInteger {
    assert!(n >= 1, "factorize requires n >= 1");
    let s = sieve();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut m = n;
    let push = |p: u64, factors: &mut Vec<(u64, u32)>| match factors.last_mut() {
        Some((q, e)) if *q == p => *e += 1,
        _ => factors.push((p, 1)),
    };
    if (m as usize) > SIEVE_LIMIT {
        for &p in &s.primes {
            let p = p as u64;
            if p * p > m || (m as usize) <= SIEVE_LIMIT {
                break;
            }
            while m.is_multiple_of(p) {
                m /= p;
                push(p, &mut factors);
            }
        }
        if (m as usize) > SIEVE_LIMIT {
            // no factor up to the square root (or beyond the table): prime
            push(m, &mut factors);
            m = 1;
        }
    }
    while m > 1 {
        let p = s.spf[m as usize] as u64;
        m /= p;
        push(p, &mut factors);
    }
    FactoredInteger { n, factors }
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).factors == [(n, 1)]
}

/// Primes up to and including `limit`.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if (limit as usize) <= SIEVE_LIMIT {
        sieve()
            .primes
            .iter()
            .map(|&p| p as u64)
            .take_while(|&p| p <= limit)
            .collect()
    } else {
        (2..=limit).filter(|&n| is_prime(n)).collect()
    }
}

/// Möbius function with the conventions `mu(-n) = mu(n)` and `mu(0) = 0`.
pub fn mobius(n: i64) -> i32 {
    if n == 0 {
        return 0;
    }
    let f = factorize(n.unsigned_abs());
    if !f.is_squarefree() {
        0
    } else if f.omega().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn omega_distinct(n: u64) -> u32 {
    factorize(n).omega()
}

/// All positive divisors of `n`, increasing.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n).factors {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Squarefree divisors of `n`, increasing.
pub fn squarefree_divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for p in factorize(n).primes() {
        let len = out.len();
        for i in 0..len {
            out.push(out[i] * p);
        }
    }
    out.sort_unstable();
    out
}

pub fn phi_star(n: u64) -> ExactRational {
    factorize(n)
        .primes()
        .fold(ExactRational::one(), |acc, p| acc * ratio(p as i64 - 1, p as i64))
}

pub fn phi_dagger(n: u64) -> ExactRational {
    factorize(n)
        .primes()
        .fold(ExactRational::one(), |acc, p| acc * ratio(p as i64 + 1, p as i64))
}

pub fn phi_star_f64(n: u64) -> f64 {
    factorize(n).primes().map(|p| 1.0 - 1.0 / p as f64).product()
}

/// `f_{a,b}(n)`: zero when `gcd(n, b) > 1`, else `phi*(n) / phi*(gcd(n, a))`.
pub fn f_ab(a: u64, b: u64, n: u64) -> ExactRational {
    if n.gcd(&b) != 1 {
        return ExactRational::zero();
    }
    phi_star(n) / phi_star(n.gcd(&a))
}

pub fn f_ab_f64(a: u64, b: u64, n: u64) -> f64 {
    if n.gcd(&b) != 1 {
        return 0.0;
    }
    factorize(n)
        .primes()
        .filter(|p| !a.is_multiple_of(*p))
        .map(|p| 1.0 - 1.0 / p as f64)
        .product()
}

/// The Dirichlet convolution `(f_{a,b} * mu)(n)` in closed form:
/// `mu(n) gcd(b, n) / n` when `gcd(a, n) | b`, else zero.
pub fn f_ab_mobius(a: u64, b: u64, n: u64) -> ExactRational {
    if !b.is_multiple_of(n.gcd(&a)) {
        return ExactRational::zero();
    }
    ratio(mobius(n as i64) as i64 * n.gcd(&b) as i64, n as i64)
}

/// Leading constant of the progression sums, as a multiple of `1/zeta(2)`:
/// `phi*(b) / phi*(gcd(b, q)) * prod_{p | abq} (1 - 1/p^2)^{-1}`.
pub fn c0(a: u64, b: u64, q: u64) -> Result<OverZeta2> {
    if a == 0 || b == 0 || q == 0 {
        return Err(invalid("c0 requires a, b, q >= 1"));
    }
    let mut coef = phi_star(b) / phi_star(b.gcd(&q));
    let abq = (a as u128) * (b as u128) * (q as u128);
    let abq = u64::try_from(abq).map_err(|_| crate::error::Error::Overflow("c0"))?;
    for p in factorize(abq).primes() {
        let p = p as i64;
        coef *= ratio(p * p, p * p - 1);
    }
    Ok(OverZeta2::new(coef))
}

/// A closed window `[t1, t2]` together with the residue class `n = residue mod q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressionWindow {
    pub t1: f64,
    pub t2: f64,
    pub q: u64,
    pub residue: i64,
}

impl ProgressionWindow {
    pub fn new(t1: f64, t2: f64, q: u64, residue: i64) -> Result<Self> {
        if !(t1 < t2) || !t1.is_finite() || !t2.is_finite() {
            return Err(invalid(format!("window requires t1 < t2, got [{t1}, {t2}]")));
        }
        if q == 0 {
            return Err(invalid("modulus q must be positive"));
        }
        if residue.unsigned_abs().gcd(&q) != 1 {
            return Err(invalid(format!("residue {residue} is not coprime to q = {q}")));
        }
        Ok(ProgressionWindow { t1, t2, q, residue })
    }

    /// `|I| = 2 + max(|t1|, |t2|)`.
    pub fn size(&self) -> f64 {
        2.0 + self.t1.abs().max(self.t2.abs())
    }

    /// Nonzero integers of the window lying in the residue class.
    pub fn members(&self) -> impl Iterator<Item = i64> {
        let q = self.q as i64;
        let lo = self.t1.ceil() as i64;
        let hi = self.t2.floor() as i64;
        let r = self.residue.rem_euclid(q);
        let first = lo + (r - lo).rem_euclid(q);
        (first..=hi).step_by(q as usize).filter(|&n| n != 0)
    }
}

/// Observed sum against the predicted main term.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressionEstimate<T> {
    pub sum: T,
    pub predicted: f64,
    /// `|sum - predicted|` divided by the error scale of the estimate.
    pub error_ratio: f64,
}

fn error_ratio(diff: f64, scale: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn check_positive(a: u64, b: u64) -> Result<()> {
    if a == 0 || b == 0 {
        return Err(invalid("a and b must be positive"));
    }
    Ok(())
}

/// Exact `sum f_{a,b}(n)` over the nonzero `n` of the window, with
/// `f(-n) = f(n)`.
///
/// The exact sum carries denominators as large as the primorial of the
/// window end, so keep windows below about `10^4` here and use
/// [`sum_f_progression_f64`] for the long ones.
pub fn sum_f_progression(
    a: u64,
    b: u64,
    w: &ProgressionWindow,
) -> Result<ProgressionEstimate<ExactRational>> {
    check_positive(a, b)?;
    let mut sum = ExactRational::zero();
    for n in w.members() {
        sum += f_ab(a, b, n.unsigned_abs());
    }
    let predicted = predicted_main(a, b, w)?;
    let ratio = error_ratio((to_f64(&sum) - predicted).abs(), scale(b, w));
    Ok(ProgressionEstimate { sum, predicted, error_ratio: ratio })
}

/// Floating-point version of [`sum_f_progression`].
pub fn sum_f_progression_f64(a: u64, b: u64, w: &ProgressionWindow) -> Result<ProgressionEstimate<f64>> {
    check_positive(a, b)?;
    let mut sum = 0.0;
    for n in w.members() {
        sum += f_ab_f64(a, b, n.unsigned_abs());
    }
    let predicted = predicted_main(a, b, w)?;
    let ratio = error_ratio((sum - predicted).abs(), scale(b, w));
    Ok(ProgressionEstimate { sum, predicted, error_ratio: ratio })
}

fn predicted_main(a: u64, b: u64, w: &ProgressionWindow) -> Result<f64> {
    Ok((w.t2 - w.t1) * c0(a, b, w.q)?.to_f64() / w.q as f64)
}

fn scale(b: u64, w: &ProgressionWindow) -> f64 {
    2f64.powi(omega_distinct(b) as i32) * w.size().ln()
}

/// Variation data of a weight `g` on the window: the number of sign changes
/// of `g'` and `sup |g|`. Missing entries are estimated by sampling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Variation {
    pub sign_changes: Option<u32>,
    pub sup: Option<f64>,
}

const VARIATION_SAMPLES: usize = 2048;

fn estimate_variation<G: Fn(f64) -> f64>(g: &G, t1: f64, t2: f64, given: Variation) -> (u32, f64) {
    let step = (t2 - t1) / VARIATION_SAMPLES as f64;
    let values: Vec<f64> = (0..=VARIATION_SAMPLES).map(|i| g(t1 + step * i as f64)).collect();
    let sup = given
        .sup
        .unwrap_or_else(|| values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let changes = given.sign_changes.unwrap_or_else(|| {
        let mut last = 0.0f64;
        let mut count = 0;
        for d in values.windows(2).map(|w| w[1] - w[0]) {
            if d != 0.0 {
                if last != 0.0 && d.signum() != last.signum() {
                    count += 1;
                }
                last = d;
            }
        }
        count
    });
    (changes, sup)
}

/// `sum f_{a,b}(n) g(n)` over the window against `c0/q * int_I g`, with the
/// error ratio normalised by `2^omega(b) log|I| (1 + R_g) sup|g|`.
pub fn sum_f_g_progression<G: Fn(f64) -> f64>(
    a: u64,
    b: u64,
    w: &ProgressionWindow,
    g: G,
    variation: Variation,
) -> Result<ProgressionEstimate<f64>> {
    check_positive(a, b)?;
    let mut sum = 0.0;
    for n in w.members() {
        let gn = g(n as f64);
        if gn != 0.0 {
            sum += f_ab_f64(a, b, n.unsigned_abs()) * gn;
        }
    }
    let integral = quad::integrate(&g, w.t1, w.t2, &[], 1e-12, 1e-12)?.value;
    let predicted = c0(a, b, w.q)?.to_f64() / w.q as f64 * integral;
    let (changes, sup) = estimate_variation(&g, w.t1, w.t2, variation);
    let m = (1.0 + changes as f64) * sup;
    let ratio = error_ratio((sum - predicted).abs(), scale(b, w) * m);
    Ok(ProgressionEstimate { sum, predicted, error_ratio: ratio })
}
