//! Counting `N(B)`, the number of rational points of height at most `B` on
//! the complement of the lines.
//!
//! * [`count_torsor`] walks the torsor variables under the height monomials
//!   and solves the torsor equation for `alpha1`; it is complete by
//!   construction and is the fast method.
//! * [`count_direct`] walks the plane parametrisation `psi0` and
//!   normalises every image.
//! * [`count_brute`] scans integer 5-tuples of the box `[-B, B]^5`.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::thread;
use std::time::Instant;

use num_integer::{Integer, Roots};
use serde::Serialize;

use crate::arith::factorize;
use crate::error::{invalid, Error, Result};
use crate::modsqrt::{inv_mod, SquareRootTable};
use crate::surface::ProjectivePoint;
use crate::torsor::{big_psi, coprime_to_all, eta_coprime, TorsorPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Torsor,
    Direct,
    Brute,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Torsor => "torsor",
            Method::Direct => "direct",
            Method::Brute => "brute",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torsor" => Ok(Method::Torsor),
            "direct" => Ok(Method::Direct),
            "brute" => Ok(Method::Brute),
            _ => Err(invalid(format!("unknown method {s:?}"))),
        }
    }
}

/// One row of a count table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRecord {
    pub b: u64,
    pub method: Method,
    pub count: u64,
    pub seconds: f64,
}

impl CountRecord {
    /// `B,method,count,seconds`
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{:.3}", self.b, self.method, self.count, self.seconds)
    }
}

/// Largest brute-force height accepted.
pub const BRUTE_CAP: u64 = 30;

/// Worker count used when the caller does not specify one.
pub fn default_workers() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64())
}

/// Split `1..=n` into at most `parts` contiguous ranges.
pub fn split_range(n: u64, parts: usize) -> Vec<RangeInclusive<u64>> {
    if n == 0 {
        return Vec::new();
    }
    let parts = (parts.max(1) as u64).min(n);
    let size = n.div_ceil(parts);
    (0..parts)
        .map(|i| (1 + i * size)..=((i + 1) * size).min(n))
        .filter(|r| !r.is_empty())
        .collect()
}

/// Run `work` on each range in its own scoped thread and collect the
/// results in range order.
fn run_partitioned<T: Send>(ranges: &[RangeInclusive<u64>], work: impl Fn(RangeInclusive<u64>) -> T + Sync) -> Vec<T> {
    if ranges.len() <= 1 {
        return ranges.iter().cloned().map(&work).collect();
    }
    thread::scope(|s| {
        let handles: Vec<_> = ranges.iter().cloned().map(|r| s.spawn(|| work(r))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

// ----------------------------------------------------------------------------
// torsor enumeration

/// Integer `k`-th root, rounded down.
fn iroot(n: u128, k: u32) -> u64 {
    n.nth_root(k) as u64
}

struct TorsorCounter<'a> {
    b: i128,
    tables: &'a [SquareRootTable],
    emit: bool,
    count: u64,
    points: Vec<TorsorPoint>,
}

impl TorsorCounter<'_> {
    fn run_eta1(&mut self, e1: i64) {
        let b = self.b;
        let e1w = e1 as i128;
        // eta1^2 eta2^4 eta3^3 eta4^2 eta5^3 eta6 <= B
        let m1 = e1w * e1w;
        for e2 in 1.. {
            let m2 = m1 * (e2 as i128).pow(4);
            if m2 > b {
                break;
            }
            for e3 in 1.. {
                let m3 = m2 * (e3 as i128).pow(3);
                if m3 > b {
                    break;
                }
                if e1.gcd(&e3) != 1 {
                    continue;
                }
                for e5 in 1.. {
                    let m5 = m3 * (e5 as i128).pow(3);
                    if m5 > b {
                        break;
                    }
                    if e1.gcd(&e5) != 1 || e5.gcd(&e3) != 1 {
                        continue;
                    }
                    for e4 in 1.. {
                        let m4 = m5 * (e4 as i128).pow(2);
                        if m4 > b {
                            break;
                        }
                        let eta = [e1, e2, e3, e4, e5];
                        if !eta_coprime(&eta) {
                            continue;
                        }
                        self.run_eta_base(eta, m4);
                    }
                }
            }
        }
    }

    fn run_eta_base(&mut self, eta: [i64; 5], m0: i128) {
        let b = self.b;
        let [e1, e2, e3, _, e5] = eta;
        let w = eta.map(|e| e as i128);
        let table = &self.tables[e5 as usize];
        let inv1 = inv_mod(e1 as u64 % e5 as u64, e5 as u64).expect("gcd(eta1, eta5) = 1") as i128;
        // eta1 eta2^2 eta3^2 eta4^2 eta5 (eta6^2 |eta7|) <= B
        let m_e7 = w[0] * w[1] * w[1] * w[2] * w[2] * w[3] * w[3] * w[4];
        // eta1^2 eta2^3 eta3^2 eta4 eta5^2 |alpha2| <= B
        let a2_cap_1 = b / (w[0] * w[0] * w[1] * w[1] * w[1] * w[2] * w[2] * w[3] * w[4] * w[4]);
        // eta1 eta2 eta3 eta4 eta6 |eta7 alpha2| <= B
        let m_a2 = w[0] * w[1] * w[2] * w[3];
        for e6 in 1..=(b / m0) as i64 {
            if !coprime_to_all(e6, &[e1, e2, e3, e5]) {
                continue;
            }
            let e6w = e6 as i128;
            let k = w[2] * w[3] * w[3] * e6w * e6w * e6w;
            let e7_cap = b / (m_e7 * e6w * e6w);
            // eta7 > 0: alpha1 < 0 and |eta7 alpha1| >= K eta7^2 / eta5
            let pos_cap = ((b * w[4] / k) as u128).sqrt() as i128;
            for e7 in 1..=e7_cap.min(pos_cap) {
                self.run_eta7(eta, e6, e7 as i64, k, inv1, a2_cap_1, m_a2, table);
            }
            for s in 1..=e7_cap {
                if !self.run_eta7(eta, e6, -(s as i64), k, inv1, a2_cap_1, m_a2, table) {
                    break;
                }
            }
        }
    }

    /// Count the `alpha2` for one `eta'`. Returns `false` once negative
    /// `eta7` has moved past the feasible range (the range only shrinks as
    /// `|eta7|` grows).
    #[allow(clippy::too_many_arguments)]
    fn run_eta7(
        &mut self,
        eta: [i64; 5],
        e6: i64,
        e7: i64,
        k: i128,
        inv1: i128,
        a2_cap_1: i128,
        m_a2: i128,
        table: &SquareRootTable,
    ) -> bool {
        let b = self.b;
        let [e1, e2, e3, e4, e5] = eta;
        if !coprime_to_all(e7, &[e1, e2, e3, e4, e5]) {
            return true;
        }
        let (e1w, e5w, e7w) = (e1 as i128, e5 as i128, e7 as i128);
        let a2_cap = a2_cap_1.min(b / (m_a2 * e6 as i128 * e7w.abs()));
        // eta5 alpha1 = -(eta1 alpha2^2 + c) and |eta7 alpha1| <= B
        let c = k * e7w;
        let wdt = b * e5w / e7w.abs();
        let u_lo = (-c - wdt).max(0);
        let u_hi = (-c + wdt).min(e1w * a2_cap * a2_cap);
        if u_lo > u_hi {
            return e7 > 0 || (-c - wdt) <= e1w * a2_cap * a2_cap;
        }
        // alpha2^2 in [ceil(u_lo/eta1), floor(u_hi/eta1)]
        let s_lo = isqrt_ceil(((u_lo + e1w - 1) / e1w) as u128);
        let s_hi = ((u_hi / e1w) as u128).sqrt() as i128;
        let target = (-c).rem_euclid(e5w) * inv1 % e5w;
        for &r in table.roots(target as i64) {
            let r = r as i128;
            let mut a = s_lo + (r - s_lo).rem_euclid(e5w);
            while a <= s_hi {
                for sign in [1i128, -1] {
                    if sign < 0 && a == 0 {
                        continue;
                    }
                    self.try_alpha2(eta, e6, e7, c, sign * a);
                }
                a += e5w;
            }
        }
        true
    }

    fn try_alpha2(&mut self, eta: [i64; 5], e6: i64, e7: i64, c: i128, a2: i128) {
        let [e1, e2, e3, e4, e5] = eta;
        let num = -(e1 as i128 * a2 * a2 + c);
        debug_assert_eq!(num % e5 as i128, 0);
        let a1 = num / e5 as i128;
        if (a1 * e7 as i128).abs() > self.b {
            return;
        }
        let (a1, a2) = (a1 as i64, a2 as i64);
        if !coprime_to_all(a1, &[e2, e6]) || !coprime_to_all(a2, &[e2, e3, e4]) {
            return;
        }
        self.count += 1;
        if self.emit {
            self.points.push(TorsorPoint { eta: [e1, e2, e3, e4, e5, e6, e7], alpha1: a1, alpha2: a2 });
        }
    }
}

fn isqrt_ceil(n: u128) -> i128 {
    let r = n.sqrt();
    (if r * r < n { r + 1 } else { r }) as i128
}

/// Largest `eta1` that can occur at height `B`.
pub fn eta1_max(b: u64) -> u64 {
    iroot(b as u128, 2)
}

fn root_tables(b: u64) -> Vec<SquareRootTable> {
    let e5_max = iroot(b as u128, 3).max(1);
    (0..=e5_max).map(|n| SquareRootTable::new(n.max(1))).collect()
}

/// Torsor points counted with `eta1` restricted to each range. Ranges
/// should be disjoint; the result is per range.
pub fn count_torsor_ranges(b: u64, ranges: &[RangeInclusive<u64>], emit: bool) -> Result<Vec<(u64, Vec<TorsorPoint>)>> {
    check_height(b)?;
    if b == 0 {
        return Ok(ranges.iter().map(|_| (0, Vec::new())).collect());
    }
    let tables = root_tables(b);
    Ok(run_partitioned(ranges, |r| {
        let mut c = TorsorCounter { b: b as i128, tables: &tables, emit, count: 0, points: Vec::new() };
        for e1 in r {
            c.run_eta1(e1 as i64);
        }
        (c.count, c.points)
    }))
}

fn check_height(b: u64) -> Result<()> {
    // keeps every monomial and alpha2^2 term inside 128 bits
    if b > 1 << 40 {
        return Err(Error::Overflow("height bound above 2^40"));
    }
    Ok(())
}

/// Points of height at most `B`, counted on the torsor.
pub fn count_torsor(b: u64) -> Result<CountRecord> {
    count_torsor_with(b, 1)
}

pub fn count_torsor_with(b: u64, workers: usize) -> Result<CountRecord> {
    let ranges = split_range(eta1_max(b), workers);
    let (res, seconds) = timed(|| count_torsor_ranges(b, &ranges, false));
    let count = res?.iter().map(|(c, _)| c).sum();
    Ok(CountRecord { b, method: Method::Torsor, count, seconds })
}

/// The points of height at most `B`, as torsor points mapped to the
/// surface, sorted lexicographically.
pub fn torsor_points(b: u64, workers: usize) -> Result<Vec<ProjectivePoint>> {
    let ranges = split_range(eta1_max(b), workers);
    let mut out = Vec::new();
    for (_, pts) in count_torsor_ranges(b, &ranges, true)? {
        for t in pts {
            out.push(big_psi(&t)?);
        }
    }
    out.sort_unstable();
    Ok(out)
}

// ----------------------------------------------------------------------------
// plane parametrisation

/// `psi0` images of height at most `B` with `eta5` in the given range and
/// `|alpha1|, |alpha2|, eta5 <= limit`.
///
/// Write `g` for the gcd of the image. A prime dividing `g` divides `eta5`
/// and `alpha2` but not `alpha1`, and reading valuations off the
/// coordinates gives `g = gcd(eta7, D)` with
/// `D = prod_{p | gcd(eta5, alpha2)} p^min(3a, c + 2a)`, `a = v_p(eta5)`,
/// `c = v_p(alpha2)`. So for each `(eta5, alpha2)` the candidates split by
/// the divisor `d = g` of `D`: `d | eta7` fixes `alpha1` modulo
/// `d / gcd(d, eta5)`, and `|alpha1 eta7| <= B d` confines it to at most two
/// intervals. `eta5^3 <= B d` and `|alpha2| eta5^2 <= B d` prune `d`, and
/// every `alpha2` is tagged by the radical `s` of `gcd(eta5, alpha2)`;
/// only `s` whose cofactor in `eta5` has cube at most `B` survive.
fn direct_points(b: u64, limit: i64, e5_range: RangeInclusive<u64>) -> Result<HashSet<[i64; 5]>> {
    let mut seen = HashSet::new();
    let bw = b as i128;
    for e5 in e5_range {
        let e5 = e5 as i64;
        if e5 > limit {
            break;
        }
        let primes = factorize(e5 as u64).factors;
        let e5w = e5 as i128;
        for mask in 0u32..(1 << primes.len()) {
            let mut s = 1i64;
            let mut d_max = 1i128;
            for (i, &(p, a)) in primes.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s *= p as i64;
                    d_max *= (p as i128).pow(3 * a);
                }
            }
            if e5w.pow(3) > bw * d_max {
                continue;
            }
            let a2_max = (limit as i128).min(bw * d_max / (e5w * e5w)) as i64;
            let mut a2 = -(a2_max - a2_max % s);
            while a2 <= a2_max {
                if radical_of_gcd_is(&primes, a2, mask) {
                    let big_d = gcd_bound(&primes, a2);
                    let need = e5w.pow(3).max((a2 as i128).abs() * e5w * e5w);
                    for d in divisors_of(&big_d) {
                        if need <= bw * d {
                            scan_alpha1(bw, limit, e5, a2, d, &big_d, &mut seen)?;
                        }
                    }
                }
                a2 += s;
            }
        }
    }
    Ok(seen)
}

fn radical_of_gcd_is(primes: &[(u64, u32)], a2: i64, mask: u32) -> bool {
    primes.iter().enumerate().all(|(i, &(p, _))| (a2 % p as i64 == 0) == (mask >> i & 1 == 1))
}

/// `D` as a list of prime powers `(p, min(3a, c + 2a))` over
/// `p | gcd(eta5, alpha2)`; `c` is infinite for `alpha2 = 0`.
fn gcd_bound(primes: &[(u64, u32)], a2: i64) -> Vec<(i128, u32)> {
    let mut out = Vec::new();
    for &(p, a) in primes {
        let p = p as i64;
        if a2 % p != 0 {
            continue;
        }
        let mut c = 0;
        let mut x = a2;
        while x != 0 && x % p == 0 && c < 3 * a {
            x /= p;
            c += 1;
        }
        let v = if a2 == 0 { 3 * a } else { (3 * a).min(c + 2 * a) };
        out.push((p as i128, v));
    }
    out
}

fn divisors_of(d: &[(i128, u32)]) -> Vec<i128> {
    let mut out = vec![1i128];
    for &(p, v) in d {
        let n = out.len();
        let mut pk = 1;
        for _ in 0..v {
            pk *= p;
            for i in 0..n {
                out.push(out[i] * pk);
            }
        }
    }
    out
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    a % m * (b % m) % m
}

/// `alpha1` with `gcd(eta7, D) = d` and `|alpha1 eta7| <= B d`.
fn scan_alpha1(
    bw: i128,
    limit: i64,
    e5: i64,
    a2: i64,
    d: i128,
    big_d: &[(i128, u32)],
    seen: &mut HashSet<[i64; 5]>,
) -> Result<()> {
    let e5w = e5 as i128;
    let s = (a2 as i128) * (a2 as i128);
    // d | eta7 = -(alpha1 eta5 + alpha2^2)
    let g0 = d.gcd(&e5w);
    if s % g0 != 0 {
        return Ok(());
    }
    let m = d / g0;
    let r = if m == 1 {
        0
    } else {
        let target = (-(s / g0)).rem_euclid(m) as u128;
        let inv = inv_mod(((e5w / g0) % m) as u64, m as u64).ok_or(Error::Overflow("direct modulus"))?;
        mul_mod(target, inv as u128, m as u128) as i128
    };
    // |alpha1 eta7| = |eta5 t^2 + alpha2^2 t| <= B d at t = alpha1: between
    // the roots of eta5 t^2 + alpha2^2 t - B d, outside those of
    // eta5 t^2 + alpha2^2 t + B d.
    let bd = bw * d;
    let (ef, sf, bdf) = (e5 as f64, s as f64, bd as f64);
    let outer = (sf * sf + 4.0 * ef * bdf).sqrt();
    let r1 = ((-sf - outer) / (2.0 * ef)).floor() as i128 - 2;
    let r2 = ((-sf + outer) / (2.0 * ef)).ceil() as i128 + 2;
    let mut parts = [(r1, r2), (1, 0)];
    let inner = sf * sf - 4.0 * ef * bdf;
    if inner > 0.0 {
        let inner = inner.sqrt();
        let s1 = ((-sf - inner) / (2.0 * ef)).ceil() as i128 + 2;
        let s2 = ((-sf + inner) / (2.0 * ef)).floor() as i128 - 2;
        if s1 < s2 {
            parts = [(r1, s1), (s2, r2)];
        }
    }
    let full: i128 = big_d.iter().map(|&(p, v)| p.pow(v)).product();
    for (lo, hi) in parts {
        let lo = lo.max(-(limit as i128));
        let hi = hi.min(limit as i128);
        if lo > hi {
            continue;
        }
        let mut a1 = lo + (r - lo).rem_euclid(m);
        while a1 <= hi {
            let e7 = -(a1 * e5w + s);
            if e7 != 0 && (a1 * e7).abs() <= bd && e7.gcd(&full) == d && (a1 as i64).gcd(&a2).gcd(&e5) == 1 {
                let x = [e5w.pow(3), a2 as i128 * e7, a2 as i128 * e5w * e5w, e5w * e7, a1 * e7];
                if x.iter().all(|v| v.abs() <= bd) {
                    let mut n = [0i64; 5];
                    for (o, v) in n.iter_mut().zip(x) {
                        *o = i64::try_from(v / d).map_err(|_| Error::Overflow("direct"))?;
                    }
                    seen.insert(n);
                }
            }
            a1 += m;
        }
    }
    Ok(())
}

/// Points of height at most `B`, counted through the plane
/// parametrisation over `|alpha1|, |alpha2|, eta5 <= box_factor * B`.
///
/// The box with `box_factor = 1` is already complete: `(alpha2, eta5,
/// alpha1)` is the primitive vector proportional to `(x1, x3, x4)`.
pub fn count_direct(b: u64, box_factor: f64) -> Result<CountRecord> {
    count_direct_with(b, box_factor, 1)
}

pub fn count_direct_with(b: u64, box_factor: f64, workers: usize) -> Result<CountRecord> {
    let (pts, seconds) = timed(|| direct_point_set(b, box_factor, workers));
    Ok(CountRecord { b, method: Method::Direct, count: pts?.len() as u64, seconds })
}

fn direct_limit(b: u64, box_factor: f64) -> Result<i64> {
    if !(box_factor > 0.0 && box_factor.is_finite()) {
        return Err(invalid("box factor must be positive"));
    }
    check_height(b)?;
    Ok((box_factor * b as f64).floor() as i64)
}

/// Distinct normalised `psi0` images, merged from per-range sets.
pub fn direct_point_set(b: u64, box_factor: f64, workers: usize) -> Result<HashSet<[i64; 5]>> {
    let limit = direct_limit(b, box_factor)?;
    if b == 0 || limit < 1 {
        return Ok(HashSet::new());
    }
    let ranges = split_range(limit as u64, workers);
    direct_point_set_ranges(b, box_factor, &ranges)
}

pub fn direct_point_set_ranges(b: u64, box_factor: f64, ranges: &[RangeInclusive<u64>]) -> Result<HashSet<[i64; 5]>> {
    let limit = direct_limit(b, box_factor)?;
    let mut all = HashSet::new();
    for part in run_partitioned(ranges, |r| direct_points(b, limit, r)) {
        all.extend(part?);
    }
    Ok(all)
}

// ----------------------------------------------------------------------------
// brute force

/// Points of height at most `B` by scanning `[-B, B]^5`, `B <= 30`.
pub fn count_brute(b: u64) -> Result<CountRecord> {
    let (pts, seconds) = timed(|| brute_points(b));
    Ok(CountRecord { b, method: Method::Brute, count: pts?.len() as u64, seconds })
}

/// Primitive tuples with positive first nonzero coordinate, on the surface
/// and off the lines.
pub fn brute_points(b: u64) -> Result<Vec<ProjectivePoint>> {
    if b > BRUTE_CAP {
        return Err(invalid(format!("brute force is limited to B <= {BRUTE_CAP}")));
    }
    let b = b as i64;
    let mut out = Vec::new();
    let r = -b..=b;
    for x0 in r.clone() {
        for x1 in r.clone() {
            for x2 in r.clone() {
                for x3 in r.clone() {
                    if x0 * x1 != x2 * x3 {
                        continue;
                    }
                    for x4 in r.clone() {
                        let x = [x0, x1, x2, x3, x4];
                        let Some(&first) = x.iter().find(|&&c| c != 0) else { continue };
                        if first < 0 {
                            continue;
                        }
                        let p = ProjectivePoint::new(x)?;
                        if p.is_primitive() && p.in_open_subset()? {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

// ----------------------------------------------------------------------------
// output

/// Write points as `x0,x1,x2,x3,x4,height`, one per line and without a
/// header, so the line count is the point count. Points are normalised and
/// sorted first.
pub fn write_points<W: Write>(mut w: W, points: &[ProjectivePoint]) -> std::io::Result<()> {
    let mut pts: Vec<ProjectivePoint> = points.iter().map(|p| p.normalize()).collect();
    pts.sort_unstable();
    for p in &pts {
        let [a, b, c, d, e] = p.coords();
        writeln!(w, "{a},{b},{c},{d},{e},{}", p.height())?;
    }
    w.flush()
}
