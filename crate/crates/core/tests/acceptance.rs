//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use sphere_moments::{
    build_cross, build_grid, convergence_study, estimate_moments_mc, estimate_moments_quadrature,
    linearization_error_study, operator_eigenvalue, solve_covariance, surface_divergence,
    surface_gradient, Example1, HarmonicIndex, OperatorKind, PerturbationModel, SpectralField,
    StudyQuantity, TransmissionCoefficients,
};

fn tc(am: f64, ap: f64) -> TransmissionCoefficients {
    TransmissionCoefficients::new(am, ap).unwrap()
}

fn report(criterion: u32, started: Instant, ok: bool, detail: &str) {
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion {criterion}: {} ({elapsed:.2}s) - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_operator_identities() {
    let started = Instant::now();
    let mut worst_dtn: f64 = 0.0;
    let mut worst_jump: f64 = 0.0;
    let mut elliptic = true;
    for (am, ap) in [(1.0, 1.0), (2.0, 1.0), (1.0, 10.0)] {
        let t = tc(am, ap);
        for l in 0..=32u32 {
            let v = operator_eigenvalue(OperatorKind::SingleLayer, &t, l);
            let k = operator_eigenvalue(OperatorKind::DoubleLayer, &t, l);
            let s_minus = (0.5 + k) / v;
            let s_plus = (k - 0.5) / v;
            worst_dtn = worst_dtn.max((s_minus - l as f64).abs());
            let composed = am * s_minus - ap * s_plus;
            let closed = operator_eigenvalue(OperatorKind::AlphaJump, &t, l);
            worst_jump = worst_jump
                .max((closed - (am * l as f64 + ap * (l as f64 + 1.0))).abs())
                .max((composed - closed).abs());
            elliptic &= closed >= am.min(ap) * (1.0 + l as f64) - 1e-12;
        }
    }
    let ok = worst_dtn <= 1e-12 && worst_jump <= 1e-12 && elliptic;
    report(
        1,
        started,
        ok,
        &format!(
            "DtN composition defect {worst_dtn:.2e}, jump defect {worst_jump:.2e}, ellipticity {elliptic}"
        ),
    );
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn criterion_2_example1_closed_form_equality() {
    let started = Instant::now();
    let band = 4;
    let grid = build_grid(band);
    let t = tc(2.0, 1.0);
    let example = Example1::new(t, 0.1).unwrap();
    let nominal = example.nominal_trace(&grid, band);
    let mut profile = SpectralField::zeros(band);
    profile
        .set_coefficient(
            HarmonicIndex::new(0, 0).unwrap(),
            (4.0 * std::f64::consts::PI).sqrt(),
        )
        .unwrap();
    let model = PerturbationModel::single_uniform(profile, 2).unwrap();
    let cross = build_cross(2, 2).unwrap();
    let solution = solve_covariance(&t, &nominal, &model, &cross, &grid, band).unwrap();

    let expected = (1.0 / 3.0) * (1.0 / 210.0f64).powi(2);
    let interior = [[0.0, 0.0, 0.2], [0.3, 0.0, 0.0], [0.0, 0.0, 0.5]];
    let exterior = [[0.0, 0.0, 5.0], [2.0, 0.0, 0.0]];
    let mut worst: f64 = 0.0;
    for &x in &interior {
        for &y in &interior {
            worst = worst.max((solution.evaluate(x, y).unwrap() - expected).abs());
        }
    }
    for &x in &exterior {
        for &y in exterior.iter().chain(&interior) {
            worst = worst.max(solution.evaluate(x, y).unwrap().abs());
            worst = worst.max(solution.evaluate(y, x).unwrap().abs());
        }
    }
    let ok = worst <= 1e-12;
    report(
        2,
        started,
        ok,
        &format!("covariance defect {worst:.2e} against (1/3)(1/210)² = {expected:.6e}"),
    );
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn criterion_3_mean_linearization_rate() {
    let started = Instant::now();
    let t = tc(2.0, 1.0);
    let epsilons = [0.2, 0.1, 0.05, 0.025];
    let report_mean =
        linearization_error_study(&t, &epsilons, &[[0.0, 0.0, 0.2]], StudyQuantity::Mean).unwrap();
    let slope = report_mean.slope.unwrap();

    let mut worst_factor: f64 = 0.0;
    for &eps in &epsilons {
        let solution = move |_x: [f64; 3], a: f64| 1.0 / (1.0 + eps * a);
        let quad = estimate_moments_quadrature(&solution, &[[0.0, 0.0, 0.2]], 1, 64).unwrap()[0];
        let closed = Example1::mean_inverse_radius_factor(eps);
        worst_factor = worst_factor.max((quad.mean - closed).abs());
    }
    let ok = (slope - 2.0).abs() <= 0.1 && worst_factor <= 1e-12;
    report(
        3,
        started,
        ok,
        &format!("slope {slope:.4} (target 2.0 ± 0.1), factor defect {worst_factor:.2e}"),
    );
    assert!(started.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn criterion_4_covariance_linearization_rate() {
    let started = Instant::now();
    let t = tc(2.0, 1.0);
    let epsilons = [0.2, 0.1, 0.05, 0.025];
    let points = [[0.0, 0.0, 0.2], [0.0, 0.0, 0.5], [0.0, 0.0, 5.0]];
    let study =
        linearization_error_study(&t, &epsilons, &points, StudyQuantity::Covariance).unwrap();
    let slope = study.slope.unwrap();
    let ok = (slope - 4.0).abs() <= 0.2;
    report(
        4,
        started,
        ok,
        &format!("slope {slope:.4} (target 4.0 ± 0.2)"),
    );
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn criterion_5_central_moment_discrepancy_rate() {
    let started = Instant::now();
    let t = tc(2.0, 1.0);
    let epsilons = [0.2, 0.1, 0.05, 0.025];
    let points = [[0.0, 0.0, 0.2], [0.45, 0.0, 0.0]];
    let central =
        linearization_error_study(&t, &epsilons, &points, StudyQuantity::CentralSecondMoment)
            .unwrap();
    let raw =
        linearization_error_study(&t, &epsilons, &points, StudyQuantity::RawSecondMoment).unwrap();
    let central_slope = central.slope.unwrap();
    let raw_slope = raw.slope.unwrap();
    let ok = central_slope >= 3.8 && (central_slope - raw_slope).abs() <= 0.2;
    report(
        5,
        started,
        ok,
        &format!("central slope {central_slope:.4} (≥ 3.8), raw slope {raw_slope:.4} (within 0.2)"),
    );
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn criterion_6_example2_self_convergence() {
    let started = Instant::now();
    let t = tc(2.0, 1.0);
    let p_list = [4usize, 8, 16, 32];
    let reference_p = 64;
    let mut detail = String::new();
    let mut ok = true;
    for (point, interior) in [
        ([0.0, 0.0, 0.2], true),
        ([0.0, 0.0, 0.5], true),
        ([0.0, 0.0, 5.0], false),
    ] {
        let study = convergence_study(&t, &p_list, point, reference_p).unwrap();
        for pair in study.rows.windows(2) {
            if pair[1].error > pair[0].error * 1.1 {
                ok = false;
                detail.push_str(&format!(
                    "error grew {} → {} at p {}→{}; ",
                    pair[0].error, pair[1].error, pair[0].parameter, pair[1].parameter
                ));
            }
        }
        let rate = study.slope.map(|s| -s);
        if interior {
            match rate {
                Some(r) if r >= 1.5 => {
                    detail.push_str(&format!("rate {:.2} at {:?}; ", r, point));
                }
                other => {
                    ok = false;
                    detail.push_str(&format!("bad interior rate {:?} at {:?}; ", other, point));
                }
            }
        } else {
            detail.push_str(&format!(
                "exterior rate {:?}; ",
                rate.map(|r| (r * 100.0).round() / 100.0)
            ));
        }
    }
    // Unknown count N(p) = Σ Π(2l_i+1) over the cross tracks p² log p.
    let mut ratios = Vec::new();
    for p in [8usize, 16, 32, 64] {
        let n = build_cross(p, 2).unwrap().dimension() as f64;
        let model = (p * p) as f64 * (p as f64).ln();
        ratios.push(n / model);
    }
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
        / ratios.iter().cloned().fold(f64::MAX, f64::min);
    if spread > 2.0 {
        ok = false;
    }
    detail.push_str(&format!("count/(p² ln p) spread {spread:.3}"));
    report(6, started, ok, &detail);
    assert!(started.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn criterion_7_spectral_infrastructure() {
    let started = Instant::now();
    use rand::prelude::*;
    let band = 16;
    let grid = build_grid(band);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let coeffs: Vec<f64> = (0..(band + 1) * (band + 1))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let field = SpectralField::from_coefficients(band, coeffs).unwrap();
    let roundtrip = field
        .try_sub(&grid.analyze(&grid.synthesize(&field), band).unwrap())
        .unwrap()
        .sobolev_norm(0.0);

    let mut eigen_defect: f64 = 0.0;
    for (l, m) in [(1u32, 0i32), (4, 3), (9, -5), (16, 8)] {
        let mode = SpectralField::delta(band, HarmonicIndex::new(l, m).unwrap()).unwrap();
        let div = surface_divergence(&surface_gradient(&mode, &grid).unwrap(), band).unwrap();
        let got = div.coefficient(HarmonicIndex::new(l, m).unwrap());
        eigen_defect = eigen_defect.max((got + (l * (l + 1)) as f64).abs());
    }

    // Green adjointness on a random gradient field.
    let grad = surface_gradient(&field, &grid).unwrap();
    let mut test_coeffs: Vec<f64> = (0..(band + 1) * (band + 1))
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    test_coeffs[0] = 0.5;
    let test_fn = SpectralField::from_coefficients(band, test_coeffs).unwrap();
    let div = surface_divergence(&grad, band).unwrap();
    let lhs: f64 = div
        .coefficients()
        .iter()
        .zip(test_fn.coefficients())
        .map(|(a, b)| a * b)
        .sum();
    let grad_test = surface_gradient(&test_fn, &grid).unwrap();
    let dots: Vec<f64> = grad
        .vectors()
        .iter()
        .zip(grad_test.vectors())
        .map(|(f, g)| f[0] * g[0] + f[1] * g[1] + f[2] * g[2])
        .collect();
    let rhs = grid.integrate(&dots).unwrap();
    let adjoint = (lhs + rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()));

    let ok = roundtrip <= 1e-11 && eigen_defect <= 1e-9 && adjoint <= 1e-9;
    report(
        7,
        started,
        ok,
        &format!(
            "roundtrip {roundtrip:.2e} (≤1e-11), eigenrelation {eigen_defect:.2e} (≤1e-9), adjointness {adjoint:.2e} (≤1e-9)"
        ),
    );
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn criterion_8_oracle_cross_check() {
    let started = Instant::now();
    let t = tc(2.0, 1.0);
    let example = Example1::new(t, 0.1).unwrap();
    let points = [
        [0.0, 0.0, 0.2],
        [0.0, 0.0, 0.5],
        [0.0, 0.0, 2.0],
        [0.0, 0.0, 5.0],
    ];
    let solution = move |x: [f64; 3], a: f64| example.exact_solution(x, a).unwrap();
    let quad = estimate_moments_quadrature(&solution, &points, 2, 64).unwrap();
    let seed = 2024;
    let mc = estimate_moments_mc(&solution, &points, 2, 100_000, seed).unwrap();
    let rerun = estimate_moments_mc(&solution, &points, 2, 100_000, seed).unwrap();

    let mut ok = true;
    let mut detail = String::new();
    for (i, (q, m)) in quad.iter().zip(&mc).enumerate() {
        let mean_gap = (q.mean - m.mean).abs();
        let central_gap = (q.central_kth - m.central_kth).abs();
        if mean_gap > 3.0 * m.se_mean + 1e-12 || central_gap > 3.0 * m.se_central + 1e-12 {
            ok = false;
            detail.push_str(&format!(
                "point {i}: mean gap {mean_gap:.2e} vs SE {:.2e}, central gap {central_gap:.2e} vs SE {:.2e}; ",
                m.se_mean, m.se_central
            ));
        }
    }
    for (a, b) in mc.iter().zip(&rerun) {
        if a.mean.to_bits() != b.mean.to_bits()
            || a.central_kth.to_bits() != b.central_kth.to_bits()
            || a.se_central.to_bits() != b.se_central.to_bits()
        {
            ok = false;
            detail.push_str("rerun with the same seed differed; ");
        }
    }
    if detail.is_empty() {
        detail = format!(
            "{} points within 3 standard errors, reruns bit-identical",
            points.len()
        );
    }
    report(8, started, ok, &detail);
    assert!(started.elapsed().as_secs_f64() < 10.0);
}
