//! Command implementations: each returns the CSV text to emit.

use sphere_moments::{
    assemble_kth_moment_rhs, build_cross, build_grid, convergence_study, estimate_moments_mc,
    estimate_moments_quadrature, evaluate_moment, linearization_error_study, operator_eigenvalue,
    solve_covariance, solve_kth_moment, solve_trace, Example1, Example2, NominalTraceData,
    OperatorKind, PerturbationModel, QuadratureGrid, Side, StudyQuantity, StudyReport,
    TransmissionCoefficients,
};

use crate::config::RunConfig;

/// Failure modes mapped to exit codes: configuration and I/O problems exit
/// with 2, violated numerical invariants with 3.
#[derive(Debug)]
pub enum CommandError {
    Config(String),
    Numerical(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CommandError::Config(m) | CommandError::Numerical(m) => m,
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

const TRACE_RESIDUAL_TOL: f64 = 1e-10;

struct BenchmarkSetup {
    tc: TransmissionCoefficients,
    grid: QuadratureGrid,
    nominal: NominalTraceData,
}

fn setup(config: &RunConfig) -> Result<BenchmarkSetup, CommandError> {
    let tc = config.transmission().map_err(CommandError::Config)?;
    let kappa_degree = match config.kappa {
        crate::config::KappaSpec::Constant { .. } => 0,
        crate::config::KappaSpec::Harmonic { degree, .. } => degree as usize,
    };
    let grid = build_grid(config.band_limit + kappa_degree);
    let nominal = match config.benchmark.as_str() {
        "example1" => Example1::new(tc, config.epsilon)
            .map_err(|e| CommandError::Config(e.to_string()))?
            .nominal_trace(&grid, config.band_limit),
        "example2" => Example2::new(tc).nominal_trace(&grid, config.band_limit),
        other => {
            return Err(CommandError::Config(format!(
                "benchmark: unknown benchmark \"{other}\""
            )))
        }
    };
    Ok(BenchmarkSetup { tc, grid, nominal })
}

/// Build the jump data once to report how much product energy the band
/// limit discards.
fn warn_if_aliased(
    nominal: &NominalTraceData,
    kappa: &sphere_moments::SpectralField,
    grid: &QuadratureGrid,
    band_limit: usize,
) -> Result<(), CommandError> {
    let g_d = sphere_moments::build_dirichlet_jump(nominal, kappa, grid, band_limit)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let g_n = sphere_moments::build_neumann_jump(nominal, kappa, grid, band_limit)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    for (name, projection) in [("g_D", &g_d), ("g_N", &g_n)] {
        if projection.is_aliased() {
            eprintln!(
                "warning: {name} loses {:.2e} of its energy above band limit {band_limit}",
                projection.tail_fraction
            );
        }
    }
    Ok(())
}

/// Solve the linearized problem for the configured κ and write one row per
/// evaluation point.
pub fn shape_derivative(config: &RunConfig) -> Result<String, CommandError> {
    let BenchmarkSetup { tc, grid, nominal } = setup(config)?;
    let kappa = config
        .kappa
        .profile(config.band_limit)
        .map_err(CommandError::Config)?;
    let g_d = sphere_moments::build_dirichlet_jump(&nominal, &kappa, &grid, config.band_limit)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let g_n = sphere_moments::build_neumann_jump(&nominal, &kappa, &grid, config.band_limit)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    for (name, projection) in [("g_D", &g_d), ("g_N", &g_n)] {
        if projection.is_aliased() {
            eprintln!(
                "warning: {name} loses {:.2e} of its energy above band limit {}",
                projection.tail_fraction, config.band_limit
            );
        }
    }
    let trace = solve_trace(&tc, &g_d.field, &g_n.field)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    if trace.residual > TRACE_RESIDUAL_TOL {
        return Err(CommandError::Numerical(format!(
            "trace equation residual {:.3e} exceeds {TRACE_RESIDUAL_TOL:.0e}",
            trace.residual
        )));
    }
    let mut csv = format!("# config_hash={}\n", config.hash());
    csv.push_str("point_x,point_y,point_z,u_prime\n");
    for &point in &config.evaluation_points {
        let value = trace
            .evaluate(point)
            .map_err(|e| CommandError::Config(format!("evaluation_points: {e}")))?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt(point[0]),
            fmt(point[1]),
            fmt(point[2]),
            fmt(value)
        ));
    }
    Ok(csv)
}

/// Solve the k-th moment problem and tabulate it at the evaluation points.
pub fn moments(config: &RunConfig) -> Result<String, CommandError> {
    let BenchmarkSetup { tc, grid, nominal } = setup(config)?;
    let kappa = config
        .kappa
        .profile(config.band_limit)
        .map_err(CommandError::Config)?;
    warn_if_aliased(&nominal, &kappa, &grid, config.band_limit)?;
    let k = config.moment_order;
    let model = PerturbationModel::single_uniform(kappa, k.max(2))
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let mut csv = format!("# config_hash={}\n", config.hash());
    let scale = config.epsilon.powi(k as i32);
    if k == 2 {
        let cross =
            build_cross(config.cross_order, 2).map_err(|e| CommandError::Config(e.to_string()))?;
        let solution = solve_covariance(&tc, &nominal, &model, &cross, &grid, config.band_limit)
            .map_err(|e| CommandError::Config(e.to_string()))?;
        csv.push_str("x1,y1,z1,x2,y2,z2,cov_uprime,scaled_cov\n");
        let points = &config.evaluation_points;
        for i in 0..points.len() {
            for j in i..points.len() {
                let value = solution
                    .evaluate(points[i], points[j])
                    .map_err(|e| CommandError::Config(format!("evaluation_points: {e}")))?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt(points[i][0]),
                    fmt(points[i][1]),
                    fmt(points[i][2]),
                    fmt(points[j][0]),
                    fmt(points[j][1]),
                    fmt(points[j][2]),
                    fmt(value),
                    fmt(scale * value)
                ));
            }
        }
    } else {
        let cross =
            build_cross(config.cross_order, k).map_err(|e| CommandError::Config(e.to_string()))?;
        csv.push_str("point_x,point_y,point_z,mk_uprime,scaled_mk\n");
        for &point in &config.evaluation_points {
            let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
            let side = if r < 1.0 {
                Side::Interior
            } else {
                Side::Exterior
            };
            let rhs = assemble_kth_moment_rhs(
                &tc,
                &nominal,
                &model,
                k,
                &cross,
                &grid,
                config.band_limit,
                side,
            )
            .map_err(|e| CommandError::Config(e.to_string()))?;
            let solution = solve_kth_moment(&tc, &rhs);
            let value = evaluate_moment(&solution, &vec![point; k], &vec![side; k])
                .map_err(|e| CommandError::Config(format!("evaluation_points: {e}")))?;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(point[0]),
                fmt(point[1]),
                fmt(point[2]),
                fmt(value),
                fmt(scale * value)
            ));
        }
    }
    Ok(csv)
}

fn study_csv(config: &RunConfig, report: &StudyReport) -> String {
    let mut csv = format!("# config_hash={}\n", config.hash());
    csv.push_str("parameter,error,reference\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            fmt(row.parameter),
            fmt(row.error),
            fmt(row.reference)
        ));
    }
    let footer = serde_json::json!({
        "slope": report.slope,
        "r_squared": report.r_squared,
        "seed": config.seed,
        "config_hash": config.hash(),
        "summary": report.config_summary,
    });
    csv.push_str(&format!("# {footer}\n"));
    csv
}

/// Run a linearization-rate or self-convergence study.
pub fn study(config: &RunConfig) -> Result<String, CommandError> {
    let tc = config.transmission().map_err(CommandError::Config)?;
    let kind = config.study_kind.as_deref().unwrap_or("linearization");
    match kind {
        "linearization" => {
            let quantity = match config.study_quantity.as_deref().unwrap_or("covariance") {
                "mean" => StudyQuantity::Mean,
                "covariance" => StudyQuantity::Covariance,
                "raw-second" => StudyQuantity::RawSecondMoment,
                "central-second" => StudyQuantity::CentralSecondMoment,
                other => {
                    return Err(CommandError::Config(format!(
                        "study_quantity: unknown quantity \"{other}\""
                    )))
                }
            };
            let report = linearization_error_study(
                &tc,
                &config.epsilons,
                &config.evaluation_points,
                quantity,
            )
            .map_err(|e| CommandError::Config(e.to_string()))?;
            Ok(study_csv(config, &report))
        }
        "convergence" => {
            let point = config.evaluation_points[0];
            let report = convergence_study(&tc, &config.p_list, point, config.reference_p)
                .map_err(|e| CommandError::Config(e.to_string()))?;
            Ok(study_csv(config, &report))
        }
        other => Err(CommandError::Config(format!(
            "study_kind: expected \"linearization\" or \"convergence\", got \"{other}\""
        ))),
    }
}

/// Fast numerical-invariant checks; any failure exits with code 3.
pub fn validate(config: &RunConfig) -> Result<String, CommandError> {
    let tc = config.transmission().map_err(CommandError::Config)?;
    let mut lines = Vec::new();
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        lines.push(format!(
            "check {name}: {} - {detail}",
            if ok { "PASS" } else { "FAIL" }
        ));
        all_ok &= ok;
    };

    // Dirichlet-to-Neumann composition and ellipticity.
    let mut worst = 0.0f64;
    let mut elliptic = true;
    for l in 0..=32u32 {
        let v = operator_eigenvalue(OperatorKind::SingleLayer, &tc, l);
        let kk = operator_eigenvalue(OperatorKind::DoubleLayer, &tc, l);
        worst = worst.max(((0.5 + kk) / v - l as f64).abs());
        let lambda = operator_eigenvalue(OperatorKind::AlphaJump, &tc, l);
        elliptic &= lambda >= tc.alpha_minus().min(tc.alpha_plus()) * (1.0 + l as f64) - 1e-12;
    }
    check(
        "operator_identities",
        worst <= 1e-12 && elliptic,
        format!("composition defect {worst:.2e}, ellipticity {elliptic}"),
    );

    // End-to-end closed-form covariance for the radial benchmark.
    let example =
        Example1::new(tc, config.epsilon).map_err(|e| CommandError::Config(e.to_string()))?;
    let band = 4;
    let grid = build_grid(band);
    let nominal = example.nominal_trace(&grid, band);
    let profile = crate::config::KappaSpec::default()
        .profile(band)
        .map_err(CommandError::Config)?;
    let model = PerturbationModel::single_uniform(profile, 2)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let cross = build_cross(2, 2).map_err(|e| CommandError::Config(e.to_string()))?;
    let solution = solve_covariance(&tc, &nominal, &model, &cross, &grid, band)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let interior = solution
        .evaluate([0.0, 0.0, 0.2], [0.0, 0.0, 0.2])
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let exterior = solution
        .evaluate([0.0, 0.0, 5.0], [0.0, 0.0, 5.0])
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let expected = example.linearized_interior_variance();
    check(
        "closed_form_covariance",
        (interior - expected).abs() <= 1e-12 && exterior.abs() <= 1e-12,
        format!(
            "interior defect {:.2e}, exterior {exterior:.2e}",
            interior - expected
        ),
    );

    // Quadrature vs seeded Monte Carlo on the configured points.
    let solution_fn = move |x: [f64; 3], a: f64| example.exact_solution(x, a).unwrap_or(f64::NAN);
    let usable: Vec<[f64; 3]> = config
        .evaluation_points
        .iter()
        .copied()
        .filter(|p| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            r < 1.0 - config.epsilon || r > 1.0 + config.epsilon
        })
        .collect();
    if usable.is_empty() {
        return Err(CommandError::Config(
            "evaluation_points: all points lie in the perturbation annulus".into(),
        ));
    }
    let quad = estimate_moments_quadrature(&solution_fn, &usable, 2, 64)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let mc = estimate_moments_mc(&solution_fn, &usable, 2, config.mc_samples, config.seed)
        .map_err(|e| CommandError::Config(e.to_string()))?;
    let mut oracle_ok = true;
    let mut worst_gap = 0.0f64;
    for (q, m) in quad.iter().zip(&mc) {
        let mean_gap = (q.mean - m.mean).abs();
        let central_gap = (q.central_kth - m.central_kth).abs();
        oracle_ok &= mean_gap <= 3.0 * m.se_mean + 1e-12;
        oracle_ok &= central_gap <= 3.0 * m.se_central + 1e-12;
        worst_gap = worst_gap.max(mean_gap).max(central_gap);
    }
    check(
        "oracle_agreement",
        oracle_ok,
        format!(
            "{} points, worst gap {worst_gap:.2e}, {} samples, seed {}",
            usable.len(),
            config.mc_samples,
            config.seed
        ),
    );

    let mut out = format!("# config_hash={}\n", config.hash());
    out.push_str(&lines.join("\n"));
    out.push('\n');
    if all_ok {
        Ok(out)
    } else {
        print!("{out}");
        Err(CommandError::Numerical(
            "one or more validation checks failed".into(),
        ))
    }
}
