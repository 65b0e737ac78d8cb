//! Square roots modulo composite integers.
//!
//! Roots modulo `n` are assembled from roots modulo each prime power by CRT.
//! Odd prime powers use Tonelli-Shanks followed by Hensel lifting; powers of
//! two are handled explicitly, and non-unit residues are reduced to the unit
//! case by pulling out even powers of `p`.

use std::collections::HashMap;

use crate::arith::factorize;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// A square root of the unit `a` modulo the odd prime `p`.
fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if p == 2 || a == 0 {
        return Some(a);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    // Tonelli-Shanks
    let mut q = p - 1;
    let mut s = 0;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| pow_mod(z, (p - 1) / 2, p) == p - 1)?;
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// Roots of `x^2 = a (mod p^f)` for a unit `a`.
fn unit_roots_prime_power(a: u64, p: u64, f: u32) -> Vec<u64> {
    let pf = p.pow(f);
    let a = a % pf;
    if p == 2 {
        return match f {
            1 => vec![1],
            2 => {
                if a % 4 == 1 {
                    vec![1, 3]
                } else {
                    vec![]
                }
            }
            _ => {
                if a % 8 != 1 {
                    return vec![];
                }
                let mut r: u64 = 1;
                for j in 3..f {
                    // r^2 = a mod 2^j; fix the next bit
                    let m = 1u64 << (j + 1);
                    if mul_mod(r, r, m) != a % m {
                        r += 1 << (j - 1);
                    }
                }
                let half = pf / 2;
                let mut v = vec![r % pf, (pf - r) % pf, (r + half) % pf, (pf - r + half) % pf];
                v.sort_unstable();
                v.dedup();
                v
            }
        };
    }
    let Some(mut r) = sqrt_mod_prime(a, p) else {
        return vec![];
    };
    let mut pj = p;
    for _ in 1..f {
        pj *= p;
        // r <- r - (r^2 - a) / (2r)  (mod p^j)
        let fr = (mul_mod(r, r, pj) + pj - a % pj) % pj;
        let inv = inv_mod(mul_mod(2, r, pj), pj).expect("2r is a unit");
        r = (r + pj - mul_mod(fr, inv, pj)) % pj;
    }
    let mut v = vec![r, (pf - r) % pf];
    v.sort_unstable();
    v.dedup();
    v
}

/// Roots of `x^2 = a (mod p^e)` for arbitrary `a`.
fn roots_prime_power(a: u64, p: u64, e: u32) -> Vec<u64> {
    let pe = p.pow(e);
    let a = a % pe;
    if a == 0 {
        let step = p.pow(e.div_ceil(2));
        return (0..pe / step).map(|k| k * step).collect();
    }
    let mut k = 0;
    let mut unit = a;
    while unit.is_multiple_of(p) {
        unit /= p;
        k += 1;
    }
    if k % 2 == 1 {
        return vec![];
    }
    let m = k / 2;
    let f = e - k;
    let pm = p.pow(m);
    let pf = p.pow(f);
    let mut out = Vec::new();
    for y0 in unit_roots_prime_power(unit, p, f) {
        for j in 0..pm {
            let y = y0 + j * pf;
            out.push(mul_mod(pm, y, pe));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// All `x` in `[0, n)` with `x^2 = a (mod n)`, increasing.
pub fn sqrt_mod(a: i64, n: u64) -> Vec<u64> {
    assert!(n >= 1, "modulus must be positive");
    if n == 1 {
        return vec![0];
    }
    let a = a.rem_euclid(n as i64) as u64;
    let mut roots = vec![0u64];
    let mut modulus = 1u64;
    for (p, e) in factorize(n).factors {
        let pe = p.pow(e);
        let local = roots_prime_power(a, p, e);
        if local.is_empty() {
            return vec![];
        }
        // combine x = r (mod modulus), x = s (mod pe)
        let inv = inv_mod(modulus % pe, pe).expect("coprime moduli");
        let new_mod = modulus * pe;
        let mut next = Vec::with_capacity(roots.len() * local.len());
        for &r in &roots {
            for &s in &local {
                let diff = (s + pe - r % pe) % pe;
                let t = mul_mod(diff, inv, pe);
                next.push((r + modulus * t) % new_mod);
            }
        }
        roots = next;
        modulus = new_mod;
    }
    roots.sort_unstable();
    roots
}

/// Square-root lookup for one modulus: every residue mapped to its roots.
///
/// Small moduli are tabulated by squaring every residue; larger ones call
/// [`sqrt_mod`] per residue.
#[derive(Debug, Clone)]
pub struct SquareRootTable {
    modulus: u64,
    roots: Vec<Vec<u64>>,
}

/// Moduli at or below this size are tabulated by a full residue scan.
pub const SCAN_LIMIT: u64 = 64;

impl SquareRootTable {
    pub fn new(modulus: u64) -> Self {
        assert!(modulus >= 1);
        let n = modulus as usize;
        let mut roots = vec![Vec::new(); n];
        if modulus <= SCAN_LIMIT {
            for x in 0..modulus {
                roots[mul_mod(x, x, modulus) as usize].push(x);
            }
        } else {
            for (v, slot) in roots.iter_mut().enumerate() {
                *slot = sqrt_mod(v as i64, modulus);
            }
        }
        SquareRootTable { modulus, roots }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Roots of `x^2 = v (mod modulus)`.
    pub fn roots(&self, v: i64) -> &[u64] {
        &self.roots[v.rem_euclid(self.modulus as i64) as usize]
    }
}

/// Lazily filled collection of [`SquareRootTable`]s keyed by modulus.
#[derive(Debug, Default)]
pub struct SquareRootCache {
    tables: HashMap<u64, SquareRootTable>,
}

impl SquareRootCache {
    pub fn table(&mut self, modulus: u64) -> &SquareRootTable {
        self.tables
            .entry(modulus)
            .or_insert_with(|| SquareRootTable::new(modulus))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(a: i64, n: u64) -> Vec<u64> {
        let a = a.rem_euclid(n as i64) as u64;
        (0..n).filter(|&x| mul_mod(x, x, n) == a).collect()
    }

    #[test]
    fn exhaustive_small_moduli() {
        for n in 1..=300u64 {
            for a in 0..n as i64 {
                assert_eq!(sqrt_mod(a, n), brute(a, n), "a = {a}, n = {n}");
            }
        }
    }

    #[test]
    fn powers_of_two_and_odd_prime_powers() {
        for n in [512u64, 1024, 729, 3125, 2401, 4096 * 3, 8 * 27 * 25] {
            for a in [0i64, 1, 4, 9, 17, 25, 33, 49, 64, 100, 144, 7 * 7 * 11] {
                assert_eq!(sqrt_mod(a, n), brute(a, n), "a = {a}, n = {n}");
            }
        }
    }

    #[test]
    fn inverses() {
        assert_eq!(inv_mod(3, 7), Some(5));
        assert_eq!(inv_mod(2, 4), None);
        assert_eq!(inv_mod(5, 1), Some(0));
    }

    #[test]
    fn table_matches_direct_roots() {
        for n in [7u64, 64, 65, 100, 121, 200] {
            let t = SquareRootTable::new(n);
            for v in -5..n as i64 {
                assert_eq!(t.roots(v), brute(v, n).as_slice());
            }
        }
    }

    proptest! {
        #[test]
        fn roots_square_to_a(a in -10_000i64..10_000, n in 1u64..5000) {
            let roots = sqrt_mod(a, n);
            for &x in &roots {
                prop_assert_eq!(mul_mod(x, x, n) as i64, a.rem_euclid(n as i64));
            }
            prop_assert_eq!(roots, brute(a, n));
        }
    }
}
