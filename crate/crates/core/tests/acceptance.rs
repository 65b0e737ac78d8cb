//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use a4_manin::arith::ExactRational;
use a4_manin::constants::{
    alpha_constant, alpha_weyl, fp_density_matches, omega_infinity, relative_difference, simplex_volume,
    OmegaMethod, SimplexSpec, K_INNER, K_OUTER,
};
use a4_manin::enumerate::{
    count_brute, count_direct, count_torsor, count_torsor_ranges, direct_point_set_ranges, eta1_max, split_range,
    torsor_points,
};
use a4_manin::series::main_term_prediction;
use a4_manin::surface::count_fp;
use a4_manin::verify::{
    gcd_chain_contract, lemma31_harness, lemma31_windows, local_factor_max_gap, local_identity_failures,
    LEMMA31_BOUND,
};

fn ratio(n: i64, d: i64) -> ExactRational {
    ExactRational::new(n.into(), d.into())
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let alpha = alpha_constant();
    let elapsed = start.elapsed();
    let outer = simplex_volume(&SimplexSpec::new(K_OUTER).unwrap());
    let inner = simplex_volume(&SimplexSpec::new(K_INNER).unwrap());
    let ok = alpha == ratio(1, 21600)
        && outer == ratio(1, 17280)
        && inner == ratio(1, 86400)
        && alpha_weyl() == outer.clone() - inner.clone()
        && elapsed < Duration::from_millis(1);
    outcome(ok, format!("alpha = {alpha} = {outer} - {inner}, weyl {}, {elapsed:?}", alpha_weyl()))
}

fn criterion2() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for b in [5, 10, 15] {
        let (t, d, r) = (
            count_torsor(b).unwrap().count,
            count_direct(b, 1.0).unwrap().count,
            count_brute(b).unwrap().count,
        );
        ok &= t == d && d == r;
        lines.push(format!("N({b}) = {t}/{d}/{r}"));
    }
    for b in [100, 1000, 10_000] {
        let (t, d) = (count_torsor(b).unwrap().count, count_direct(b, 1.0).unwrap().count);
        ok &= t == d;
        lines.push(format!("N({b}) = {t}/{d}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(300);
    outcome(ok, format!("{} in {:.1}s", lines.join(", "), elapsed.as_secs_f64()))
}

fn criterion3() -> Outcome {
    let mut ok = true;
    let mut counts = Vec::new();
    for p in [3u64, 5, 7, 11, 13] {
        let n = count_fp(p).unwrap();
        ok &= n == (p + 1) * (p + 1) && fp_density_matches(p).unwrap();
        counts.push(format!("{p}:{n}"));
    }
    outcome(ok, format!("#S(F_p) = {} (p = 2 gives {})", counts.join(" "), count_fp(2).unwrap()))
}

fn criterion4() -> Outcome {
    let start = Instant::now();
    let t = omega_infinity(OmegaMethod::TParam, 1e-7).unwrap();
    let x = omega_infinity(OmegaMethod::XParam, 1e-7).unwrap();
    let rel = relative_difference(t.value, x.value);
    let g: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&t0| omega_infinity(OmegaMethod::G2Route { t0 }, 1e-5).unwrap().value)
        .collect();
    let (lo, hi) = g.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = (hi - lo) / hi;
    let elapsed = start.elapsed();
    let ok = rel <= 1e-3 && spread <= 1e-2 && elapsed < Duration::from_secs(120);
    outcome(
        ok,
        format!(
            "omega t {:.8} x {:.8} (rel {rel:.1e}); t0^2 G2 {:.6} {:.6} {:.6} (spread {spread:.1e}); {:.1}s",
            t.value,
            x.value,
            g[0],
            g[1],
            g[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion5() -> Outcome {
    let gap = local_factor_max_gap(&[2, 3, 5], &[0.0, 0.25, 1.0], 60).unwrap();
    let bad = local_identity_failures(50).unwrap();
    outcome(gap <= 1e-8 && bad.is_empty(), format!("max |closed - direct| = {gap:.2e}, identity failures {bad:?}"))
}

fn criterion6() -> Outcome {
    let w = lemma31_harness(30, &lemma31_windows(5)).unwrap();
    outcome(
        w.max_ratio <= LEMMA31_BOUND,
        format!(
            "empirical max error ratio {:.3} (rad a {}, rad b {}, q {}, residue {}, I = [1, {}]) over {} windows",
            w.max_ratio, w.a, w.b, w.q, w.residue, w.t2, w.windows
        ),
    )
}

fn criterion7() -> Outcome {
    let omega = omega_infinity(OmegaMethod::TParam, 1e-7).unwrap().value;
    let mut ratios = Vec::new();
    let mut lines = Vec::new();
    let mut time_1e6 = 0.0;
    for b in [10_000u64, 100_000, 1_000_000] {
        let rec = count_torsor(b).unwrap();
        if b == 1_000_000 {
            time_1e6 = rec.seconds;
        }
        let r = rec.count as f64 / main_term_prediction(b, omega);
        lines.push(format!("R({b}) = {r:.4}"));
        ratios.push(r);
    }
    let in_band = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let monotone = dev.windows(2).all(|w| w[1] <= w[0]);
    let fast = time_1e6 < 60.0;
    outcome(
        in_band && monotone && fast,
        format!(
            "{}; in [0.5, 2]: {in_band}; |R - 1| = {:.4} {:.4} {:.4} non-increasing: {monotone}; N(10^6) in {time_1e6:.1}s",
            lines.join(", "),
            dev[0],
            dev[1],
            dev[2]
        ),
    )
}

fn criterion8() -> Outcome {
    let checked = gcd_chain_contract(200);
    let contract = checked.is_ok();

    let pts = torsor_points(2000, 1).unwrap();
    let distinct: HashSet<_> = pts.iter().collect();
    let points_ok = distinct.len() == pts.len()
        && pts.iter().all(|p| p.eval_forms().unwrap() == (0, 0) && p.is_primitive() && p.coords()[3] != 0);

    let b = 20_000;
    let single = count_torsor_ranges(b, &split_range(eta1_max(b), 1), false).unwrap()[0].0;
    let mut partitions_ok = true;
    for parts in [2, 3, 7, 64] {
        let counts = count_torsor_ranges(b, &split_range(eta1_max(b), parts), false).unwrap();
        partitions_ok &= counts.iter().map(|c| c.0).sum::<u64>() == single;
    }
    let direct_one = direct_point_set_ranges(2000, 1.0, &split_range(2000, 1)).unwrap();
    let direct_many = direct_point_set_ranges(2000, 1.0, &split_range(2000, 5)).unwrap();
    partitions_ok &= direct_one == direct_many;

    outcome(
        contract && points_ok && partitions_ok,
        format!(
            "gcd chain on the 200-box: {}; {} emitted points valid: {points_ok}; partition independence: {partitions_ok}",
            match &checked {
                Ok(n) => format!("{n} triples"),
                Err(e) => e.to_string(),
            },
            pts.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("exact constant", criterion1),
        ("bijection and oracle equality", criterion2),
        ("finite-field densities", criterion3),
        ("real density consistency", criterion4),
        ("local-factor identity", criterion5),
        ("progression error ratio", criterion6),
        ("asymptotic tracking", criterion7),
        ("property suites", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {} ({name}): {}", i + 1, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
