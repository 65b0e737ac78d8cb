//! The quartic del Pezzo surface `S` in projective 4-space,
//!
//! ```text
//! x0 x1 - x2 x3 = 0,    x0 x4 + x1 x2 + x3^2 = 0,
//! ```
//!
//! with its singular point `(0:0:0:0:1)`, its three lines and the
//! max-norm height of primitive integer representatives.

use std::fmt;
use std::thread;

use num_integer::Integer;

use crate::arith::is_prime;
use crate::error::{Error, Result};

/// Nonzero integer 5-tuple representing a point of projective 4-space.
///
/// The tuple is not required to be primitive; [`ProjectivePoint::normalize`]
/// produces the canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectivePoint {
    coords: [i64; 5],
}

impl ProjectivePoint {
    pub fn new(coords: [i64; 5]) -> Result<Self> {
        if coords.iter().all(|&c| c == 0) {
            return Err(Error::ZeroPoint);
        }
        Ok(ProjectivePoint { coords })
    }

    pub fn coords(&self) -> [i64; 5] {
        self.coords
    }

    /// `(f1(x), f2(x))` in 128-bit arithmetic.
    pub fn eval_forms(&self) -> Result<(i128, i128)> {
        let [x0, x1, x2, x3, x4] = self.coords.map(|c| c as i128);
        let f1 = (x0 * x1).checked_sub(x2 * x3).ok_or(Error::Overflow("f1"))?;
        let f2 = (x0 * x4)
            .checked_add(x1 * x2)
            .and_then(|s| s.checked_add(x3 * x3))
            .ok_or(Error::Overflow("f2"))?;
        Ok((f1, f2))
    }

    pub fn contains(&self) -> Result<bool> {
        Ok(self.eval_forms()? == (0, 0))
    }

    /// Divide by the gcd and make the first nonzero coordinate positive.
    pub fn normalize(&self) -> ProjectivePoint {
        let g = self.coords.iter().fold(0i64, |g, &c| g.gcd(&c));
        let first = *self.coords.iter().find(|&&c| c != 0).expect("nonzero point");
        let g = if first < 0 { -g } else { g };
        ProjectivePoint { coords: self.coords.map(|c| c / g) }
    }

    pub fn is_primitive(&self) -> bool {
        self.coords.iter().fold(0i64, |g, &c| g.gcd(&c)) == 1
    }

    /// Max-norm of the primitive representative.
    pub fn height(&self) -> u64 {
        self.normalize().coords.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    /// The lines of `S` passing through this point. Only meaningful for
    /// points on the surface.
    pub fn on_lines(&self) -> LineSet {
        let [x0, x1, x2, x3, x4] = self.coords;
        let mut set = LineSet::default();
        if x0 == 0 && x2 == 0 && x3 == 0 {
            set.insert(Line::E5);
        }
        if x0 == 0 && x1 == 0 && x3 == 0 {
            set.insert(Line::E6);
        }
        if x1 == 0 && x3 == 0 && x4 == 0 {
            set.insert(Line::E7);
        }
        set
    }

    /// On `S` and off all three lines.
    pub fn in_open_subset(&self) -> Result<bool> {
        Ok(self.contains()? && self.on_lines().is_empty())
    }
}

impl fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e] = self.coords;
        write!(f, "({a}:{b}:{c}:{d}:{e})")
    }
}

/// The singular point of `S`.
pub const SINGULAR_POINT: [i64; 5] = [0, 0, 0, 0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Line {
    /// `x0 = x2 = x3 = 0`
    E5,
    /// `x0 = x1 = x3 = 0`
    E6,
    /// `x1 = x3 = x4 = 0`
    E7,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LineSet(u8);

impl LineSet {
    fn bit(line: Line) -> u8 {
        match line {
            Line::E5 => 1,
            Line::E6 => 2,
            Line::E7 => 4,
        }
    }

    pub fn insert(&mut self, line: Line) {
        self.0 |= Self::bit(line);
    }

    pub fn contains(&self, line: Line) -> bool {
        self.0 & Self::bit(line) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn lines(&self) -> Vec<Line> {
        [Line::E5, Line::E6, Line::E7].into_iter().filter(|&l| self.contains(l)).collect()
    }
}

impl FromIterator<Line> for LineSet {
    fn from_iter<I: IntoIterator<Item = Line>>(iter: I) -> Self {
        let mut s = LineSet::default();
        for l in iter {
            s.insert(l);
        }
        s
    }
}

/// Default upper bound on the characteristic accepted by [`count_fp`].
pub const FP_CAP: u64 = 50;

fn check_prime(p: u64, cap: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p > cap {
        return Err(Error::AboveCap { p, cap });
    }
    Ok(())
}

/// Number of points of `S` over `F_p`, by scanning every normalised
/// representative of projective 4-space.
pub fn count_fp(p: u64) -> Result<u64> {
    count_fp_with(p, FP_CAP, 1)
}

/// [`count_fp`] with an explicit cap and the scan split over `workers`
/// threads (by the value of the leading coordinate block).
pub fn count_fp_with(p: u64, cap: u64, workers: usize) -> Result<u64> {
    check_prime(p, cap)?;
    // Representatives: (0,..,0,1,*,..,*) with the 1 in position `lead`.
    // Work items are (lead, first free coordinate value) pairs.
    let items: Vec<(usize, u64)> = (0..5)
        .flat_map(|lead| {
            let n = if lead < 4 { p } else { 1 };
            (0..n).map(move |v| (lead, v))
        })
        .collect();
    let workers = workers.max(1).min(items.len());
    let chunk = items.len().div_ceil(workers);
    let total = thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&(lead, v)| count_fp_block(p, lead, v)).sum::<u64>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
    });
    Ok(total)
}

fn count_fp_block(p: u64, lead: usize, first_free: u64) -> u64 {
    let free = 4 - lead;
    let mut x = [0u64; 5];
    x[lead] = 1;
    let rest = free.saturating_sub(1);
    let mut count = 0;
    let total = p.pow(rest as u32);
    for idx in 0..total {
        let mut k = idx;
        if free > 0 {
            x[lead + 1] = first_free;
        }
        for slot in x.iter_mut().skip(lead + 2) {
            *slot = k % p;
            k /= p;
        }
        let [x0, x1, x2, x3, x4] = x;
        let f1 = (x0 * x1 + (p - x2 * x3 % p)) % p;
        let f2 = (x0 * x4 + x1 * x2 + x3 * x3) % p;
        if f1 == 0 && f2 == 0 {
            count += 1;
        }
    }
    count
}
