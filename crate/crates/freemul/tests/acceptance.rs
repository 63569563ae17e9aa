//! Acceptance checks. Runs as a plain binary so that every line is printed
//! whether or not a check fails; the process exits nonzero on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use freemul::rmt::{compare_histogram, product_spectrum, EnsemblePair, SimConfig};
use freemul_core::{
    branch_moments, cauchy_from_moments, cumulants_from_moments, enumerate_nc,
    free_mult_convolve, mixed_moment_enumerated, mixed_moment_xy, moment_from_cumulants_nc,
    moments_from_cumulants, moments_of, psi_from_moments, s_transform,
    second_moment_identity, solve_density, uniform_grid, verify_proof_identities,
    BuiltinCurve, CaseTag, CumulantSequence, HalfSeries, LawSpec, MomentSequence, Word,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;
const SEMI: LawSpec = LawSpec::Semicircle { variance: 1.0 };
const FP: LawSpec = LawSpec::FreePoisson { rate: 1.0 };
const SHIFTED: LawSpec = LawSpec::ShiftedFreePoisson { rate: 1.0, shift: 1.0 };
const UNIT: LawSpec = LawSpec::PointMass { c: 1.0 };

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn law(l: LawSpec, order: usize) -> MomentSequence {
    moments_of(&l, order).expect("law moments")
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

/// Trusted window of a series as `(grade, coefficient)` pairs.
fn window(s: &HalfSeries) -> Vec<(i32, f64)> {
    (s.min_grade()..=s.trunc_grade()).map(|g| (g, s.coeff(g))).collect()
}

fn s_closed_forms() -> Check {
    let s = s_transform(&law(SEMI, 12)).map_err(err)?;
    let p = s.primary().ok_or("no primary branch")?;
    let lead = (p.coeff(-1) - 1.0).abs();
    let rest = window(p)
        .into_iter()
        .filter(|&(g, _)| g >= 0)
        .map(|(_, c)| c.abs())
        .fold(0.0, f64::max);
    let s = s_transform(&law(FP, 12)).map_err(err)?;
    let q = s.primary().ok_or("no primary branch")?;
    let fp_err = window(q)
        .into_iter()
        .map(|(g, c)| {
            let expected = if g % 2 != 0 {
                0.0
            } else if (g / 2) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            (c - expected).abs()
        })
        .fold(0.0, f64::max);
    ensure(
        lead < TOL && rest < TOL && fp_err < TOL && p.trunc_grade() >= 9 && q.trunc_grade() >= 22,
        format!(
            "semicircle |γ₋₁−1|={lead:.1e}, max|γ_k≥0|={rest:.1e} through grade {}; free Poisson max|γ_k−(−1)^k|={fp_err:.1e} through grade {}",
            p.trunc_grade(),
            q.trunc_grade()
        ),
    )
}

fn vanishing_mean_convolution() -> Check {
    let (mx, my) = (law(SEMI, 6), law(FP, 6));
    let r = free_mult_convolve(&mx, &my, 6).map_err(err)?;
    let expected = [0.0, 1.0, 0.0, 4.0, 0.0, 22.0];
    let got = r.moments.as_slice();
    let table_err = got
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let m2_identity = second_moment_identity(&mx, &my).map_err(err)?;
    let (kx, ky) = (cumulants_from_moments(&mx), cumulants_from_moments(&my));
    let mut oracle_err = 0.0f64;
    for n in [4, 6] {
        let dp = mixed_moment_xy(&kx, &ky, Word::XyPower, n).map_err(err)?;
        let brute = mixed_moment_enumerated(&kx, &ky, Word::XyPower, n).map_err(err)?;
        oracle_err = oracle_err
            .max((got[n - 1] - dp).abs())
            .max((got[n - 1] - brute).abs());
    }
    ensure(
        r.case_tag == CaseTag::OneZeroMean
            && table_err < TOL
            && (got[1] - m2_identity).abs() < TOL
            && oracle_err < TOL,
        format!(
            "moments {got:?}, max deviation {table_err:.1e}; m₂ vs second-moment identity {:.1e}; m₄, m₆ vs oracle {oracle_err:.1e}",
            (got[1] - m2_identity).abs()
        ),
    )
}

fn branch_invariance() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, a, b) in [("semicircle⊠freePoisson", SEMI, FP), ("freePoisson⊠shiftedFreePoisson", FP, SHIFTED)] {
        let r = free_mult_convolve(&law(a, 10), &law(b, 10), 10).map_err(err)?;
        let product = r.s_product.ok_or("no S-transform product")?;
        let (p, q) = branch_moments(&product, 10).map_err(err)?;
        let diff = p
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        ok &= r.case_tag == CaseTag::OneZeroMean && p.order() == 10 && diff < TOL;
        details.push(format!("{name}: max branch difference {diff:.1e} over 10 moments"));
    }
    ensure(ok, details.join("; "))
}

fn branch_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_beta = 0.0f64;
    let mut worst_gamma = 0.0f64;
    let mut min_k = i32::MAX;
    for _ in 0..20 {
        let mut m = vec![0.0, rng.random_range(0.5..=2.0)];
        m.extend((0..14).map(|_| rng.random_range(-1.0..=1.0)));
        let m = MomentSequence::new(m).map_err(err)?;
        let (chi, chi_t) = psi_from_moments(&m).invert_two_branch().map_err(err)?;
        let s = s_transform(&m).map_err(err)?;
        let (g, g_t) = (s.primary().ok_or("no primary")?, s.secondary().ok_or("no secondary")?);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        for k in 1..=12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            worst_beta = worst_beta.max(rel(chi_t.coeff(k), sign * chi.coeff(k)));
        }
        for k in -1i32..=12 {
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            worst_gamma = worst_gamma.max(rel(g_t.coeff(k), sign * g.coeff(k)));
        }
        min_k = min_k.min(chi.trunc_grade().min(g.trunc_grade()));
    }
    ensure(
        worst_beta < TOL && worst_gamma < TOL && min_k >= 12,
        format!(
            "20 sequences with 16 moments: max |β̃_k − (−1)^k β_k| = {worst_beta:.1e}, max |γ̃_k − (−1)^k γ_k| = {worst_gamma:.1e} (relative), both through k = 12"
        ),
    )
}

fn proof_identities() -> Check {
    let pairs = [
        ("(semicircle, freePoisson)", SEMI, FP),
        ("(freePoisson, shiftedFreePoisson(1,1))", FP, SHIFTED),
        ("(freePoisson, shiftedFreePoisson(1,−1))", FP, LawSpec::ShiftedFreePoisson { rate: 1.0, shift: -1.0 }),
        ("(pointMass(1), freePoisson)", UNIT, FP),
    ];
    let mut details = Vec::new();
    let mut ok = true;
    for (name, a, b) in pairs {
        let report = verify_proof_identities(&law(a, 8), &law(b, 8), 8).map_err(err)?;
        ok &= report.passed(TOL);
        details.push(format!("{name} max residual {:.1e}", report.max_residual()));
    }
    ensure(ok, format!("order 8: {}", details.join(", ")))
}

fn both_zero_mean() -> Check {
    let (mx, my) = (law(SEMI, 6), law(SEMI, 6));
    let r = free_mult_convolve(&mx, &my, 6).map_err(err)?;
    let (kx, ky) = (cumulants_from_moments(&mx), cumulants_from_moments(&my));
    let mut oracle = Vec::new();
    for n in 1..=6 {
        oracle.push(mixed_moment_xy(&kx, &ky, Word::XyPower, n).map_err(err)?);
    }
    let zeros = r.moments.as_slice().iter().all(|&v| v == 0.0);
    let oracle_zero = oracle.iter().all(|v| v.abs() < TOL);
    let root = HalfSeries::monomial(-1, 1.0, 12);
    let product = &root * &root;
    let flagged = !product.is_moment_series();
    ensure(
        r.case_tag == CaseTag::BothZeroMean && r.s_product.is_none() && zeros && oracle_zero && flagged,
        format!(
            "moments {:?}, oracle {oracle:?}; (1/√z)² = {product} fails the moment-series predicate: {flagged}",
            r.moments.as_slice()
        ),
    )
}

fn first_quartic_density() -> Check {
    let grid = uniform_grid(-4.0005, 4.0005, 1e-3).map_err(err)?;
    let d = solve_density(&BuiltinCurve::SemicircleXFreepoisson.curve(), &grid, 1e-4).map_err(err)?;
    let (m0, m2, m4) = (d.mass(), d.moment(2), d.moment(4));
    let covered = d.values[0] < 1e-3 && d.values[d.values.len() - 1] < 1e-3;
    ensure(
        (m0 - 1.0).abs() <= 1e-2 && (m2 - 1.0).abs() <= 2e-2 && (m4 - 4.0).abs() <= 5e-2 && covered,
        format!(
            "ε=1e-4, step 1e-3 on [−4.0005, 4.0005]: ∫f={m0:.5}, ∫x²f={m2:.5}, ∫x⁴f={m4:.5}, support ≈ {:?}",
            d.support(1e-3)
        ),
    )
}

fn second_quartic_consistency() -> Check {
    let r = free_mult_convolve(&law(FP, 10), &law(SHIFTED, 10), 10).map_err(err)?;
    let curve = BuiltinCurve::FreepoissonXShiftedfreepoisson.curve();
    let residual_at = |radius: f64| {
        (0..16)
            .map(|k| {
                let z = Complex64::from_polar(radius, (k as f64 + 0.5) * PI / 8.0);
                curve.evaluate(cauchy_from_moments(&r.moments, z), z).norm()
            })
            .fold(0.0, f64::max)
    };
    let (r10, r20) = (residual_at(10.0), residual_at(20.0));

    // The moment series must sit on the same branch as the tracked root.
    let far = uniform_grid(9.0, 10.0, 0.5).map_err(err)?;
    let tracked = freemul_core::solve_cauchy_transform(&curve, &far, 1e-4).map_err(err)?;
    let z = Complex64::new(10.0, 1e-4);
    let branch_gap = (tracked[tracked.len() - 1] - cauchy_from_moments(&r.moments, z)).norm();

    let grid = uniform_grid(-6.0005, 8.0005, 1e-3).map_err(err)?;
    let d = solve_density(&curve, &grid, 1e-4).map_err(err)?;
    let mass = d.mass();
    ensure(
        r10 < 1e-3 && r20 < r10 && branch_gap < 1e-6 && (mass - 1.0).abs() <= 1e-2,
        format!(
            "10 S-route moments: max |P(g,z)| = {r10:.1e} at |z|=10, {r20:.1e} at |z|=20; tracked root vs moment series at z=10 {branch_gap:.1e}; ∫f={mass:.5}"
        ),
    )
}

fn monte_carlo() -> Check {
    let config = SimConfig {
        n: 50,
        trials: 4000,
        seed: 0,
        ensemble_pair: EnsemblePair::WignerXWishart,
        bins: 100,
    };
    let grid = uniform_grid(-4.0005, 4.0005, 1e-3).map_err(err)?;
    let density = solve_density(&BuiltinCurve::SemicircleXFreepoisson.curve(), &grid, 1e-4).map_err(err)?;
    let sample = product_spectrum(&config).map_err(err)?;
    let report = compare_histogram(&sample.eigenvalues, &density, config.bins).map_err(err)?;
    let (m2, m4) = (sample.moment(2), sample.moment(4));
    let (e2, e4) = ((m2 - 1.0).abs(), (m4 - 4.0).abs() / 4.0);
    ensure(
        report.l1_distance < 0.08 && e2 < 0.05 && e4 < 0.15,
        format!(
            "n=50, 4000 trials, seed 0, {} bins: L1={:.4}, KS={:.4}, m₂={m2:.4} ({:.1}% off), m₄={m4:.4} ({:.1}% off)",
            config.bins,
            report.l1_distance,
            report.ks_distance,
            100.0 * e2,
            100.0 * e4
        ),
    )
}

fn catalan(n: u64) -> u64 {
    // binom(2n, n) / (n + 1)
    let mut c = 1u64;
    for k in 0..n {
        c = c * (2 * n - k) / (k + 1);
    }
    c / (n + 1)
}

fn oracle_consistency() -> Check {
    let mut counts = Vec::new();
    let mut ok = true;
    for n in 1..=12 {
        let count = enumerate_nc(n).map_err(err)?.len() as u64;
        ok &= count == catalan(n as u64);
        counts.push(count);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let k = CumulantSequence::new((0..10).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .map_err(err)?;
        let recursion = moments_from_cumulants(&k);
        for n in 1..=10 {
            let nc = moment_from_cumulants_nc(&k, n).map_err(err)?;
            let r = recursion.as_slice()[n - 1];
            worst = worst.max((nc - r).abs() / r.abs().max(1.0));
        }
    }
    ok &= worst < TOL;
    ensure(
        ok,
        format!("NC counts for n=1..12: {counts:?}; 50 random inputs, max difference to the recursion through order 10: {worst:.1e}"),
    )
}

fn main() -> ExitCode {
    let checks: [Criterion; 10] = [
        ("S-transform closed forms from 12 moments", s_closed_forms),
        ("vanishing-mean convolution semicircle⊠freePoisson", vanishing_mean_convolution),
        ("branch invariance of recovered moments", branch_invariance),
        ("two-branch sign structure on random sequences", branch_structure),
        ("auxiliary-series identities", proof_identities),
        ("both means zero", both_zero_mean),
        ("first quartic density", first_quartic_density),
        ("second quartic consistency", second_quartic_consistency),
        ("Monte Carlo product spectrum", monte_carlo),
        ("partition oracle self-consistency", oracle_consistency),
    ];
    let mut failures = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({elapsed:.2}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({elapsed:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", checks.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
