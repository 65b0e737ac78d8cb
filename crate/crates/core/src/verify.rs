//! Consistency suites shared by the `verify` subcommand and the test
//! harness. Each suite returns a [`SuiteReport`] with one line per check.

use std::fmt;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{c0, factorize, omega_distinct, ratio, to_f64};
use crate::constants::{
    alpha_constant, alpha_monte_carlo, alpha_weyl, fp_density_matches, simplex_volume, SimplexSpec, K_INNER,
    K_OUTER,
};
use crate::enumerate::{count_brute, count_direct, count_torsor_ranges, eta1_max, split_range, torsor_points};
use crate::error::{invalid, Error, Result};
use crate::series::{h_func, local_factor_closed, local_factor_closed_at_zero, local_factor_direct, KVector};
use crate::surface::count_fp;
use crate::torsor::{big_psi, gcd_chain, height_ok, height_ok_scaled, psi0};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Alpha,
    Fp,
    Bijection,
    Euler,
    Lemma31,
    Scaling,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Alpha, Suite::Fp, Suite::Bijection, Suite::Euler, Suite::Lemma31, Suite::Scaling];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Alpha => "alpha",
            Suite::Fp => "fp",
            Suite::Bijection => "bijection",
            Suite::Euler => "euler",
            Suite::Lemma31 => "lemma31",
            Suite::Scaling => "scaling",
        }
    }

    pub fn parse(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|x| x.name() == s)
            .map(|&x| vec![x])
            .ok_or_else(|| invalid(format!("unknown suite {s:?}")))
    }

    pub fn run(&self, seed: u64) -> Result<SuiteReport> {
        match self {
            Suite::Alpha => alpha_suite(seed),
            Suite::Fp => fp_suite(),
            Suite::Bijection => bijection_suite(),
            Suite::Euler => euler_suite(),
            Suite::Lemma31 => lemma31_suite(),
            Suite::Scaling => scaling_suite(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport { suite: suite.name(), checks: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{status} {}/{}: {}", self.suite, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn alpha_suite(seed: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Alpha);
    let alpha = alpha_constant();
    r.check("exact", alpha == ratio(1, 21600), alpha.to_string());
    let outer = simplex_volume(&SimplexSpec::new(K_OUTER)?);
    let inner = simplex_volume(&SimplexSpec::new(K_INNER)?);
    r.check(
        "simplices",
        outer == ratio(1, 17280) && inner == ratio(1, 86400),
        format!("{outer} - {inner}"),
    );
    r.check("weyl", alpha_weyl() == alpha, alpha_weyl().to_string());
    let mc = alpha_monte_carlo(1_000_000, seed);
    let dev = (mc.value - to_f64(&alpha)).abs();
    r.check(
        "monte-carlo",
        dev <= 4.0 * mc.sigma,
        format!("{:.4e} +- {:.1e} (seed {seed})", mc.value, mc.sigma),
    );
    Ok(r)
}

fn fp_suite() -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Fp);
    for p in [3u64, 5, 7, 11, 13] {
        let n = count_fp(p)?;
        let ok = n == (p + 1) * (p + 1) && fp_density_matches(p)?;
        r.check(format!("p={p}"), ok, format!("#S(F_{p}) = {n}"));
    }
    r.check("p=2 (informational)", true, format!("#S(F_2) = {}", count_fp(2)?));
    Ok(r)
}

/// Check `big_psi(gcd_chain(.)) = normalize(psi0(.))` for every primitive
/// `(alpha1, alpha2, eta5)` with `|alpha1|, |alpha2|, eta5 <= n` and
/// `eta7 != 0`. Returns the number of triples checked.
pub fn gcd_chain_contract(n: i64) -> Result<u64> {
    let mut checked = 0;
    for e5 in 1..=n {
        for a2 in -n..=n {
            let g = a2.gcd(&e5);
            for a1 in -n..=n {
                if a1.gcd(&g) != 1 {
                    continue;
                }
                let (p, e7) = match psi0(a1, a2, e5) {
                    Ok(v) => v,
                    Err(Error::OnLines) => continue,
                    Err(e) => return Err(e),
                };
                let t = gcd_chain(a1, a2, e5, e7)?;
                t.validate()?;
                if big_psi(&t)? != p.normalize() {
                    return Err(invalid(format!("contract fails at ({a1}, {a2}, {e5})")));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn bijection_suite() -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Bijection);
    match gcd_chain_contract(60) {
        Ok(n) => r.check("gcd-chain", true, format!("{n} triples in the box 60")),
        Err(e) => r.check("gcd-chain", false, e.to_string()),
    }
    for b in [5u64, 10, 15] {
        let t = count_torsor_ranges(b, &split_range(eta1_max(b), 1), false)?[0].0;
        let d = count_direct(b, 1.0)?.count;
        let br = count_brute(b)?.count;
        r.check(format!("B={b}"), t == d && d == br, format!("torsor {t}, direct {d}, brute {br}"));
    }
    for b in [100u64, 1000] {
        let t = count_torsor_ranges(b, &split_range(eta1_max(b), 1), false)?[0].0;
        let d = count_direct(b, 1.0)?.count;
        r.check(format!("B={b}"), t == d, format!("torsor {t}, direct {d}"));
    }
    Ok(r)
}

/// Largest `|closed - direct|` of the local factors over the given grid.
pub fn local_factor_max_gap(primes: &[u64], ss: &[f64], truncation: u32) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in [KVector::A, KVector::B] {
        for &p in primes {
            for &s in ss {
                let c = local_factor_closed(k, p, s)?;
                let d = local_factor_direct(k, p, s, truncation)?;
                worst = worst.max((c - d).abs());
            }
        }
    }
    Ok(worst)
}

/// Primes `p <= cutoff` at which `F(0) (1 - 1/p)^5 = (1 - 1/p)^6 (1 + 6/p + 1/p^2)`
/// fails as an identity of rationals.
pub fn local_identity_failures(cutoff: u64) -> Result<Vec<u64>> {
    let mut bad = Vec::new();
    for p in crate::arith::primes_up_to(cutoff) {
        let a = ratio(p as i64 - 1, p as i64);
        let lhs = local_factor_closed_at_zero(p)? * num_traits::pow(a.clone(), 5);
        let rhs = num_traits::pow(a, 6) * crate::constants::omega_p(p)?;
        if lhs != rhs {
            bad.push(p);
        }
    }
    Ok(bad)
}

fn euler_suite() -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Euler);
    let gap = local_factor_max_gap(&[2, 3, 5], &[0.0, 0.25, 1.0], 60)?;
    r.check("closed-vs-direct", gap <= 1e-8, format!("max |closed - direct| = {gap:.3e}"));
    let bad = local_identity_failures(50)?;
    r.check("identity p<=50", bad.is_empty(), format!("failures {bad:?}"));
    Ok(r)
}

/// Worst observation of the progression harness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma31Report {
    pub max_ratio: f64,
    pub a: u64,
    pub b: u64,
    pub q: u64,
    pub residue: u64,
    pub t2: u64,
    pub windows: usize,
}

fn radical(n: u64) -> u64 {
    factorize(n).primes().product()
}

/// Error ratio of `sum f_{a,b}(n)` over `n = r mod q`, `1 <= n <= t2`,
/// maximised over `a, b, q <= max_abq`, coprime residues and the window
/// ends in `ends`.
///
/// `f_{a,b}` and `c0` only depend on the radicals of `a` and `b`, so one
/// pass per pair of radicals covers the grid.
pub fn lemma31_harness(max_abq: u64, ends: &[u64]) -> Result<Lemma31Report> {
    let n_max = *ends.iter().max().ok_or_else(|| invalid("no windows"))?;
    let mut ends = ends.to_vec();
    ends.sort_unstable();
    // phi*(n) for all n <= n_max from the smallest-prime-factor sieve
    let mut spf = vec![0u32; n_max as usize + 1];
    let mut phi = vec![1.0f64; n_max as usize + 1];
    for i in 2..=n_max as usize {
        if spf[i] == 0 {
            for j in (i..=n_max as usize).step_by(i) {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                phi[j] *= 1.0 - 1.0 / i as f64;
            }
        }
    }
    let mut rads: Vec<u64> = (1..=max_abq).map(radical).collect();
    rads.sort_unstable();
    rads.dedup();
    let mut worst = Lemma31Report { max_ratio: 0.0, a: 1, b: 1, q: 1, residue: 0, t2: 0, windows: 0 };
    let mut f = vec![0.0f64; n_max as usize + 1];
    for &ra in &rads {
        for &rb in &rads {
            for n in 1..=n_max as usize {
                let nn = n as u64;
                f[n] = if nn.gcd(&rb) != 1 { 0.0 } else { phi[n] / phi[nn.gcd(&ra) as usize] };
            }
            let scale_b = 2f64.powi(omega_distinct(rb) as i32);
            for q in 1..=max_abq {
                let c = c0(ra, rb, q)?.to_f64() / q as f64;
                for r in 0..q {
                    if r.gcd(&q) != 1 {
                        continue;
                    }
                    let mut sum = 0.0;
                    let mut n = if r == 0 { q } else { r };
                    for &end in &ends {
                        while n <= end {
                            sum += f[n as usize];
                            n += q;
                        }
                        let predicted = (end as f64 - 1.0) * c;
                        let ratio = (sum - predicted).abs() / (scale_b * (2.0 + end as f64).ln());
                        worst.windows += 1;
                        if ratio > worst.max_ratio {
                            worst = Lemma31Report { max_ratio: ratio, a: ra, b: rb, q, residue: r, t2: end, ..worst };
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Window ends `10^{k/4}` for `k = 4, .., 4 * decades`.
pub fn lemma31_windows(decades: u32) -> Vec<u64> {
    let mut v: Vec<u64> = (4..=4 * decades).map(|k| 10f64.powf(k as f64 / 4.0).round() as u64).collect();
    v.dedup();
    v
}

/// Threshold on the normalised error ratio.
pub const LEMMA31_BOUND: f64 = 10.0;

fn lemma31_suite() -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Lemma31);
    let w = lemma31_harness(30, &lemma31_windows(5))?;
    r.check(
        "error-ratio",
        w.max_ratio <= LEMMA31_BOUND,
        format!(
            "max {:.3} at rad a={}, rad b={}, q={}, n={} mod q, I=[1,{}] over {} windows",
            w.max_ratio, w.a, w.b, w.q, w.residue, w.t2, w.windows
        ),
    );
    Ok(r)
}

/// Worst relative violation of `h(t0, T2 t0^-4, T6 t0^-4, T7 t0^6) = h(1, T2, T6, T7)`
/// over random samples.
pub fn h_scaling_defect(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let t0 = 10f64.powf(rng.gen_range(-1.0..1.0));
        let t: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let lhs = h_func(t0, t[0] * t0.powi(-4), t[1] * t0.powi(-4), t[2] * t0.powi(6));
        let rhs = h_func(1.0, t[0], t[1], t[2]);
        if rhs > 0.0 {
            worst = worst.max((lhs - rhs).abs() / rhs);
        }
    }
    worst
}

/// Compare the exact and scaled height tests on the torsor points of
/// height `<= b_points` against random bounds. Returns (compared,
/// disagreements); bounds within `1e-9` relative of a monomial are skipped.
pub fn height_route_disagreements(b_points: u64, trials: usize, seed: u64) -> Result<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges = split_range(eta1_max(b_points), 1);
    let pts = count_torsor_ranges(b_points, &ranges, true)?.remove(0).1;
    let (mut compared, mut bad) = (0, 0);
    for _ in 0..trials {
        let t = &pts[rng.gen_range(0..pts.len())];
        let b = rng.gen_range(1..=2 * b_points);
        let mons = crate::torsor::height_monomials(t)?;
        if mons.iter().any(|&m| ((m as f64) / b as f64 - 1.0).abs() < 1e-9) {
            continue;
        }
        compared += 1;
        if height_ok(t, b)? != height_ok_scaled(t, b)?.0 {
            bad += 1;
        }
    }
    Ok((compared, bad))
}

fn scaling_suite(seed: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(Suite::Scaling);
    let d = h_scaling_defect(10_000, seed);
    r.check("h-scaling", d <= 1e-9, format!("max relative defect {d:.2e} (seed {seed})"));
    let (n, bad) = height_route_disagreements(1000, 20_000, seed)?;
    r.check("height-routes", bad == 0, format!("{bad} disagreements in {n} comparisons"));
    let pts = torsor_points(1000, 1)?;
    let ok = pts.iter().all(|p| p.contains().unwrap_or(false) && p.is_primitive() && p.coords()[3] != 0);
    r.check("emitted-points", ok, format!("{} points of height <= 1000", pts.len()));
    Ok(r)
}
