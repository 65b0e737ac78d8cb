//! The universal torsor
//!
//! ```text
//! eta5 alpha1 + eta1 alpha2^2 + eta3 eta4^2 eta6^3 eta7 = 0
//! ```
//!
//! together with its coprimality conditions, the plane parametrisation
//! `psi`, the torsor map `big_psi`, the gcd chain inverting it, and the two
//! formulations of the height condition.

use std::fmt;

use num_integer::Integer;

use crate::error::{invalid, Error, Result};
use crate::series::h_func;
use crate::surface::ProjectivePoint;

/// A point `(eta1, .., eta7, alpha1, alpha2)` of the torsor.
///
/// Construction does not validate; use [`TorsorPoint::validate`] or
/// [`coprimality_check`] and [`torsor_form`] as needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorsorPoint {
    /// `eta1 .. eta7`; the first six are positive, `eta7` is nonzero.
    pub eta: [i64; 7],
    pub alpha1: i64,
    pub alpha2: i64,
}

impl TorsorPoint {
    /// From the nine coordinates in the order `eta1..eta7, alpha1, alpha2`.
    pub const fn new(c: [i64; 9]) -> Self {
        TorsorPoint {
            eta: [c[0], c[1], c[2], c[3], c[4], c[5], c[6]],
            alpha1: c[7],
            alpha2: c[8],
        }
    }

    pub fn coords(&self) -> [i64; 9] {
        let e = self.eta;
        [e[0], e[1], e[2], e[3], e[4], e[5], e[6], self.alpha1, self.alpha2]
    }

    /// `(eta1, .., eta5)`.
    pub fn eta_base(&self) -> [i64; 5] {
        [self.eta[0], self.eta[1], self.eta[2], self.eta[3], self.eta[4]]
    }

    /// Check positivity, the torsor equation and every coprimality condition.
    pub fn validate(&self) -> Result<()> {
        if self.eta[..6].iter().any(|&e| e <= 0) {
            return Err(invalid("eta1..eta6 must be positive"));
        }
        if self.eta[6] == 0 {
            return Err(Error::OnLines);
        }
        let v = torsor_form(self)?;
        if v != 0 {
            return Err(Error::NotOnTorsor(v));
        }
        coprimality_check(self)
    }
}

impl fmt::Display for TorsorPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coords();
        write!(f, "eta=({},{},{},{},{},{},{}) alpha=({},{})", c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8])
    }
}

/// Identifier of a coprimality condition on torsor points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoprimeCondition {
    /// `gcd(alpha1, eta2 eta6) = 1`
    Alpha1,
    /// `gcd(alpha2, eta2 eta3 eta4) = 1`
    Alpha2,
    /// `gcd(eta6, eta1 eta2 eta3 eta5) = 1`
    Eta6,
    /// `gcd(eta7, eta1 eta2 eta3 eta4 eta5) = 1`
    Eta7,
    /// `gcd(eta1, eta3 eta4 eta5) = gcd(eta2, eta4) = gcd(eta5, eta3 eta4) = 1`
    Eta,
}

impl CoprimeCondition {
    pub fn id(&self) -> &'static str {
        match self {
            CoprimeCondition::Alpha1 => "cpal1",
            CoprimeCondition::Alpha2 => "cpal2",
            CoprimeCondition::Eta6 => "cpe6",
            CoprimeCondition::Eta7 => "cpe7",
            CoprimeCondition::Eta => "cpe",
        }
    }
}

impl fmt::Display for CoprimeCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Pairwise coprimality of `a` with every entry of `bs`, which is the same
/// as `gcd(a, prod bs) = 1` without forming the product.
pub(crate) fn coprime_to_all(a: i64, bs: &[i64]) -> bool {
    bs.iter().all(|&b| a.gcd(&b) == 1)
}

/// The conditions on `(eta1, .., eta5)` alone.
pub fn eta_coprime(e: &[i64; 5]) -> bool {
    let [e1, e2, e3, e4, e5] = *e;
    coprime_to_all(e1, &[e3, e4, e5]) && e2.gcd(&e4) == 1 && coprime_to_all(e5, &[e3, e4])
}

/// `eta5 alpha1 + eta1 alpha2^2 + eta3 eta4^2 eta6^3 eta7`.
pub fn torsor_form(t: &TorsorPoint) -> Result<i128> {
    let [e1, _, e3, e4, e5, e6, e7] = t.eta.map(|e| e as i128);
    let (a1, a2) = (t.alpha1 as i128, t.alpha2 as i128);
    let ovf = || Error::Overflow("torsor equation");
    let term3 = [e4, e4, e6, e6, e6, e7]
        .iter()
        .try_fold(e3, |acc, &x| acc.checked_mul(x))
        .ok_or_else(ovf)?;
    let term2 = e1.checked_mul(a2 * a2).ok_or_else(ovf)?;
    (e5 * a1)
        .checked_add(term2)
        .and_then(|s| s.checked_add(term3))
        .ok_or_else(ovf)
}

/// The first violated coprimality condition, in the order
/// `cpal1, cpal2, cpe6, cpe7, cpe`.
pub fn coprimality_check(t: &TorsorPoint) -> Result<()> {
    let [e1, e2, e3, e4, e5, e6, e7] = t.eta;
    let checks = [
        (CoprimeCondition::Alpha1, coprime_to_all(t.alpha1, &[e2, e6])),
        (CoprimeCondition::Alpha2, coprime_to_all(t.alpha2, &[e2, e3, e4])),
        (CoprimeCondition::Eta6, coprime_to_all(e6, &[e1, e2, e3, e5])),
        (CoprimeCondition::Eta7, coprime_to_all(e7, &[e1, e2, e3, e4, e5])),
        (CoprimeCondition::Eta, eta_coprime(&[e1, e2, e3, e4, e5])),
    ];
    match checks.iter().find(|(_, ok)| !ok) {
        Some((c, _)) => Err(Error::Coprimality(*c)),
        None => Ok(()),
    }
}

/// `eta7 = -(alpha1 eta5 + alpha2^2)`.
pub fn eta7_of(alpha1: i64, alpha2: i64, eta5: i64) -> Result<i64> {
    let v = -((alpha1 as i128) * (eta5 as i128) + (alpha2 as i128) * (alpha2 as i128));
    i64::try_from(v).map_err(|_| Error::Overflow("eta7"))
}

fn to_i64(v: i128, what: &'static str) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::Overflow(what))
}

/// The plane parametrisation: returns the (unnormalised) image
/// `(eta5^3 : alpha2 eta7 : alpha2 eta5^2 : eta5 eta7 : alpha1 eta7)`
/// together with `eta7`.
pub fn psi(alpha2: i64, eta5: i64, alpha1: i64) -> Result<(ProjectivePoint, i64)> {
    if eta5 < 1 {
        return Err(invalid("eta5 must be positive"));
    }
    if alpha1.gcd(&alpha2).gcd(&eta5) != 1 {
        return Err(invalid("gcd(alpha1, alpha2, eta5) must be 1"));
    }
    let eta7 = eta7_of(alpha1, alpha2, eta5)?;
    if eta7 == 0 {
        return Err(Error::OnLines);
    }
    let (a1, a2, e5, e7) = (alpha1 as i128, alpha2 as i128, eta5 as i128, eta7 as i128);
    let x = [
        to_i64(e5 * e5 * e5, "psi")?,
        to_i64(a2 * e7, "psi")?,
        to_i64(a2 * e5 * e5, "psi")?,
        to_i64(e5 * e7, "psi")?,
        to_i64(a1 * e7, "psi")?,
    ];
    Ok((ProjectivePoint::new(x)?, eta7))
}

/// [`psi`] with the arguments in the order `(alpha1, alpha2, eta5)`.
pub fn psi0(alpha1: i64, alpha2: i64, eta5: i64) -> Result<(ProjectivePoint, i64)> {
    psi(alpha2, eta5, alpha1)
}

fn monomial(eta: &[i64], exps: &[u32]) -> Option<i128> {
    eta.iter()
        .zip(exps)
        .try_fold(1i128, |acc, (&e, &k)| acc.checked_mul((e as i128).checked_pow(k)?))
}

/// The five coordinates of `big_psi(t)` in 128-bit arithmetic.
pub fn big_psi_coords(t: &TorsorPoint) -> Result<[i128; 5]> {
    let e = &t.eta;
    let ovf = || Error::Overflow("big_psi");
    let m = |exps: &[u32]| monomial(&e[..5], exps).ok_or_else(ovf);
    let (e6, e7) = (e[5] as i128, e[6] as i128);
    let (a1, a2) = (t.alpha1 as i128, t.alpha2 as i128);
    let x0 = m(&[2, 4, 3, 2, 3])?.checked_mul(e6).ok_or_else(ovf)?;
    let x1 = m(&[1, 1, 1, 1, 0])?
        .checked_mul(e6 * e7)
        .and_then(|v| v.checked_mul(a2))
        .ok_or_else(ovf)?;
    let x2 = m(&[2, 3, 2, 1, 2])?.checked_mul(a2).ok_or_else(ovf)?;
    let x3 = m(&[1, 2, 2, 2, 1])?
        .checked_mul(e6 * e6)
        .and_then(|v| v.checked_mul(e7))
        .ok_or_else(ovf)?;
    let x4 = e7.checked_mul(a1).ok_or_else(ovf)?;
    Ok([x0, x1, x2, x3, x4])
}

/// The torsor map to the surface. For valid torsor points the image is
/// already primitive with positive first coordinate.
pub fn big_psi(t: &TorsorPoint) -> Result<ProjectivePoint> {
    let x = big_psi_coords(t)?;
    let mut out = [0i64; 5];
    for (o, v) in out.iter_mut().zip(x) {
        *o = to_i64(v, "big_psi")?;
    }
    ProjectivePoint::new(out)
}

/// Recover the torsor point above `psi0(alpha1, alpha2, eta5)` by repeated
/// gcd extraction.
///
/// Each step pulls out the common factor of the variables whose curves meet
/// the next exceptional curve, and divides exactly those variables by it.
pub fn gcd_chain(alpha1: i64, alpha2: i64, eta5: i64, eta7: i64) -> Result<TorsorPoint> {
    if eta5 < 1 {
        return Err(invalid("eta5 must be positive"));
    }
    if eta7 == 0 {
        return Err(Error::OnLines);
    }
    if alpha1.gcd(&alpha2).gcd(&eta5) != 1 {
        return Err(invalid("gcd(alpha1, alpha2, eta5) must be 1"));
    }
    if eta7_of(alpha1, alpha2, eta5)? != eta7 {
        return Err(invalid("eta7 must equal -(alpha1 eta5 + alpha2^2)"));
    }
    let (mut a2, mut e5, mut e7) = (alpha2, eta5, eta7);

    let e1 = a2.gcd(&e5).gcd(&e7);
    a2 /= e1;
    e5 /= e1;
    e7 /= e1;

    let e2 = e1.gcd(&e5).gcd(&e7);
    let e1 = e1 / e2;
    e5 /= e2;
    e7 /= e2;

    let e3 = e2.gcd(&e7);
    let e2 = e2 / e3;
    e7 /= e3;

    let e4 = e3.gcd(&e7);
    let e3 = e3 / e4;
    e7 /= e4;

    let e6 = e4.gcd(&e7);
    let e4 = e4 / e6;
    e7 /= e6;

    Ok(TorsorPoint { eta: [e1, e2, e3, e4, e5, e6, e7], alpha1, alpha2: a2 })
}

/// Exponent vectors of the four height monomials in `(eta1, .., eta5)`.
pub const HEIGHT_EXPONENTS: [[u32; 5]; 4] = [[2, 4, 3, 2, 3], [1, 1, 1, 1, 0], [2, 3, 2, 1, 2], [1, 2, 2, 2, 1]];

/// The absolute values of the five coordinates of `big_psi(t)`; the height
/// condition is that all of them are at most `B`.
pub fn height_monomials(t: &TorsorPoint) -> Result<[i128; 5]> {
    Ok(big_psi_coords(t)?.map(|v| v.abs()))
}

/// Height condition, exact.
pub fn height_ok(t: &TorsorPoint, b: u64) -> Result<bool> {
    Ok(height_monomials(t)?.iter().all(|&m| m <= b as i128))
}

/// The scaling quantities `Y0, Y2, Y6, Y7` attached to `(eta1, .., eta5)`
/// and a height bound `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YQuantities {
    pub y0: f64,
    pub y2: f64,
    pub y6: f64,
    pub y7: f64,
    pub eta: [i64; 5],
    pub b: f64,
}

fn signed_monomial_f64(eta: &[i64; 5], exps: [i32; 5]) -> f64 {
    eta.iter().zip(exps).map(|(&e, k)| (e as f64).powi(k)).product()
}

pub fn y_quantities(eta: [i64; 5], b: f64) -> Result<YQuantities> {
    if eta.iter().any(|&e| e < 1) {
        return Err(invalid("eta entries must be positive"));
    }
    if !(b >= 1.0 && b.is_finite()) {
        return Err(invalid("B must be a finite real >= 1"));
    }
    let fifth = |v: f64| v.powf(0.2);
    let y0 = fifth(signed_monomial_f64(&eta, [2, 4, 3, 2, 3]) / b);
    let y2 = fifth(b / signed_monomial_f64(&eta, [2, -1, -2, -3, -2]));
    let y7 = fifth(b / signed_monomial_f64(&eta, [-3, -6, -2, 2, -7]));
    Ok(YQuantities { y0, y2, y6: 1.0 / y0, y7, eta, b })
}

/// Height condition through `h(Y0, alpha2/Y2, eta6/Y6, eta7/Y7) <= 1`, in
/// floating point. Returns the value of `h` as well.
pub fn height_ok_scaled(t: &TorsorPoint, b: u64) -> Result<(bool, f64)> {
    let y = y_quantities(t.eta_base(), b as f64)?;
    let h = h_func(y.y0, t.alpha2 as f64 / y.y2, t.eta[5] as f64 / y.y6, t.eta[6] as f64 / y.y7);
    Ok((h <= 1.0, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONES: TorsorPoint = TorsorPoint::new([1, 1, 1, 1, 1, 1, -2, 1, 1]);
    const T2: TorsorPoint = TorsorPoint::new([1, 1, 1, 1, 1, 1, 2, -3, 1]);
    const T3: TorsorPoint = TorsorPoint::new([2, 1, 1, 1, 1, 1, -3, 1, 1]);

    fn pt(c: [i64; 5]) -> ProjectivePoint {
        ProjectivePoint::new(c).unwrap()
    }

    #[test]
    fn torsor_equation_examples() {
        for t in [ONES, T2, T3] {
            assert_eq!(torsor_form(&t).unwrap(), 0);
        }
        assert_eq!(torsor_form(&TorsorPoint::new([1, 1, 1, 1, 1, 1, 1, 1, 1])).unwrap(), 3);
    }

    #[test]
    fn coprimality_examples() {
        assert_eq!(coprimality_check(&ONES), Ok(()));
        let t = TorsorPoint::new([1, 1, 1, 1, 2, 1, 2, 1, 1]);
        assert_eq!(coprimality_check(&t), Err(Error::Coprimality(CoprimeCondition::Eta7)));
        let t = TorsorPoint::new([2, 1, 2, 1, 1, 1, 1, 1, 1]);
        assert_eq!(coprimality_check(&t), Err(Error::Coprimality(CoprimeCondition::Eta)));
        let t = TorsorPoint::new([1, 2, 1, 1, 1, 1, 1, 2, 1]);
        assert_eq!(coprimality_check(&t), Err(Error::Coprimality(CoprimeCondition::Alpha1)));
        assert_eq!(CoprimeCondition::Alpha2.to_string(), "cpal2");
    }

    #[test]
    fn psi_examples() {
        let (x, e7) = psi(1, 1, 1).unwrap();
        assert_eq!((x, e7), (pt([1, -2, 1, -2, -2]), -2));
        let (x, e7) = psi(0, 1, 1).unwrap();
        assert_eq!((x, e7), (pt([1, 0, 0, -1, -1]), -1));
        assert_eq!(psi(1, 1, -1), Err(Error::OnLines));
        assert!(matches!(psi(2, 2, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn big_psi_examples() {
        assert_eq!(big_psi(&ONES).unwrap(), pt([1, -2, 1, -2, -2]));
        assert_eq!(big_psi(&T3).unwrap(), pt([4, -6, 4, -6, -3]));
        assert_eq!(big_psi(&T2).unwrap(), pt([1, 2, 1, 2, -6]));
        let (x, _) = psi0(1, 2, 2).unwrap();
        assert_eq!(x.normalize(), big_psi(&T3).unwrap());
    }

    #[test]
    fn gcd_chain_examples() {
        assert_eq!(gcd_chain(1, 1, 1, -2).unwrap(), ONES);
        assert_eq!(gcd_chain(1, 2, 2, -6).unwrap(), T3);
        assert_eq!(gcd_chain(-3, 1, 1, 2).unwrap(), T2);
        assert!(gcd_chain(1, 1, 1, -3).is_err());
        assert_eq!(gcd_chain(1, 1, 1, 0), Err(Error::OnLines));
    }

    #[test]
    fn gcd_chain_inverts_psi_on_a_box() {
        for e5 in 1..=30 {
            for a2 in -30..=30i64 {
                for a1 in -30..=30i64 {
                    if a1.gcd(&a2).gcd(&e5) != 1 {
                        continue;
                    }
                    let Ok((x, e7)) = psi0(a1, a2, e5) else { continue };
                    let t = gcd_chain(a1, a2, e5, e7).unwrap();
                    t.validate().unwrap();
                    assert_eq!(big_psi(&t).unwrap(), x.normalize());
                }
            }
        }
    }

    #[test]
    fn y_quantity_examples() {
        let y = y_quantities([1; 5], 32.0).unwrap();
        assert!((y.y0 - 0.5).abs() < 1e-15);
        for v in [y.y2, y.y6, y.y7] {
            assert!((v - 2.0).abs() < 1e-14);
        }
        let y = y_quantities([1; 5], 1.0).unwrap();
        assert_eq!([y.y0, y.y2, y.y6, y.y7], [1.0; 4]);
        let y = y_quantities([3, 1, 2, 5, 7], 1e6).unwrap();
        assert!((y.y0 * y.y6 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn height_examples() {
        assert!(height_ok(&ONES, 2).unwrap());
        assert!(!height_ok(&ONES, 1).unwrap());
        assert!(height_ok(&T3, 6).unwrap());
        assert!(!height_ok(&T3, 5).unwrap());
        assert!(height_ok_scaled(&ONES, 3).unwrap().0);
        assert!(!height_ok_scaled(&T3, 5).unwrap().0);
    }
}
