use num_integer::Integer;
use num_traits::Zero;
use proptest::prelude::*;

use a4_manin::arith::{divisors, f_ab, f_ab_mobius, phi_dagger, phi_star, ExactRational};
use a4_manin::series::{g0, h_func, theta2};
use a4_manin::surface::ProjectivePoint;
use a4_manin::torsor::{big_psi, gcd_chain, height_monomials, height_ok, height_ok_scaled, psi0, torsor_form};

fn nonzero_point() -> impl Strategy<Value = [i64; 5]> {
    prop::array::uniform5(-1000i64..=1000).prop_filter("nonzero", |c| c.iter().any(|&x| x != 0))
}

proptest! {
    #[test]
    fn normalize_is_idempotent(c in nonzero_point(), k in 1i64..50, neg: bool) {
        let p = ProjectivePoint::new(c).unwrap();
        let n = p.normalize();
        prop_assert_eq!(n.normalize(), n);
        prop_assert!(n.is_primitive());
        prop_assert_eq!(n.height(), p.height());
        let k = if neg { -k } else { k };
        let scaled = ProjectivePoint::new(c.map(|x| x * k)).unwrap();
        prop_assert_eq!(scaled.normalize(), n);
    }

    #[test]
    fn h_scaling_identity(t0 in 0.1f64..10.0, t2 in -3.0f64..3.0, t6 in -3.0f64..3.0, t7 in -3.0f64..3.0) {
        let lhs = h_func(t0, t2 * t0.powi(-4), t6 * t0.powi(-4), t7 * t0.powi(6));
        let rhs = h_func(1.0, t2, t6, t7);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300));
    }

    #[test]
    fn g0_is_a_section_length(t0 in 0.3f64..3.0, t6 in 0.01f64..1.0, t7 in -4.0f64..4.0) {
        // g0 is the measure of {t2 : h <= 1}; compare with a fine scan
        let g = g0(t0, t6, t7);
        let n = 20_000;
        let span = t0.powi(-4) * 1.01;
        let step = 2.0 * span / n as f64;
        let inside = (0..n)
            .filter(|&i| h_func(t0, -span + (i as f64 + 0.5) * step, t6, t7) <= 1.0)
            .count();
        let scanned = inside as f64 * step;
        prop_assert!((g - scanned).abs() <= 4.0 * step, "g0 {} scan {}", g, scanned);
    }

    #[test]
    fn f_ab_is_multiplicative(a in 1u64..60, b in 1u64..60, m in 1u64..400, n in 1u64..400) {
        prop_assume!(m.gcd(&n) == 1);
        prop_assert_eq!(f_ab(a, b, m * n), f_ab(a, b, m) * f_ab(a, b, n));
    }

    #[test]
    fn f_ab_convolution_identity(a in 1u64..60, b in 1u64..60, n in 1u64..10_000) {
        let s: ExactRational = divisors(n).into_iter().map(|d| f_ab_mobius(a, b, d)).sum();
        prop_assert_eq!(s, f_ab(a, b, n));
    }

    #[test]
    fn phi_functions_bracket_one(n in 1u64..100_000) {
        let one = ExactRational::from_integer(1.into());
        prop_assert!(phi_star(n) <= one && phi_dagger(n) >= one);
    }

    #[test]
    fn theta2_is_multiplicative(
        e in prop::array::uniform5(prop::array::uniform3(0u32..3)),
        f in prop::array::uniform5(prop::array::uniform3(0u32..3)),
    ) {
        // entries supported on {2, 3, 5} and {7, 11, 13}
        let build = |x: [[u32; 3]; 5], ps: [u64; 3]| x.map(|v| (0..3).map(|i| ps[i].pow(v[i])).product::<u64>());
        let e = build(e, [2, 3, 5]);
        let f = build(f, [7, 11, 13]);
        let ef: [u64; 5] = std::array::from_fn(|i| e[i] * f[i]);
        let prod = theta2(e).unwrap().coefficient * theta2(f).unwrap().coefficient;
        prop_assert_eq!(theta2(ef).unwrap().coefficient, prod);
    }

    #[test]
    fn gcd_chain_inverts_psi0(a1 in -5000i64..5000, a2 in -5000i64..5000, e5 in 1i64..5000) {
        prop_assume!(a1.gcd(&a2).gcd(&e5) == 1);
        prop_assume!(a1 * e5 + a2 * a2 != 0);
        let (p, e7) = psi0(a1, a2, e5).unwrap();
        let t = gcd_chain(a1, a2, e5, e7).unwrap();
        prop_assert!(torsor_form(&t).unwrap().is_zero());
        t.validate().unwrap();
        prop_assert_eq!(big_psi(&t).unwrap(), p.normalize());
    }

    #[test]
    fn height_routes_agree(a1 in -300i64..300, a2 in -300i64..300, e5 in 1i64..300, b in 1u64..5_000_000) {
        prop_assume!(a1.gcd(&a2).gcd(&e5) == 1);
        prop_assume!(a1 * e5 + a2 * a2 != 0);
        let (_, e7) = psi0(a1, a2, e5).unwrap();
        let t = gcd_chain(a1, a2, e5, e7).unwrap();
        let near = height_monomials(&t).unwrap().iter().any(|&m| (m as f64 / b as f64 - 1.0).abs() < 1e-9);
        prop_assume!(!near);
        prop_assert_eq!(height_ok(&t, b).unwrap(), height_ok_scaled(&t, b).unwrap().0);
    }
}
