//! Linearized response of the transmission solution to a normal
//! perturbation of the interface.
//!
//! The linearization solves a homogeneous transmission problem on the
//! nominal sphere whose data are built from the nominal solution's trace
//! jumps and the perturbation profile κ:
//!
//! ```text
//! g_D = −⟦∂u⁰/∂n⟧ κ,        g_N = ∇_Γ·(κ ⟦α∇_Γ u⁰⟧),
//! ```
//!
//! with the normal pointing out of the interior domain and jumps taken as
//! interior minus exterior. The exterior trace solves
//! ⟦αS⟧ u'₊ = g_N − α₋S₋ g_D and the interior trace is u'₋ = u'₊ + g_D;
//! off the interface the solution is the harmonic extension of the
//! matching trace.

use crate::error::{Error, Result};
use crate::harmonics::{surface_divergence, QuadratureGrid, SpectralField, TangentField};
use crate::operators::{
    evaluate_exterior, evaluate_interior, solve_jump, BoundaryOperator, OperatorKind,
    TransmissionCoefficients,
};

/// Fraction of product energy above the band limit that triggers the
/// aliasing diagnostic.
pub const ALIASING_TOL: f64 = 1e-8;
/// Points closer than this to the interface cannot be evaluated.
const INTERFACE_TOL: f64 = 1e-9;

/// Trace jumps of the nominal solution on the unit sphere.
#[derive(Debug, Clone)]
pub struct NominalTraceData {
    /// ⟦∂u⁰/∂n⟧ as a spectral field.
    pub jump_normal_derivative: SpectralField,
    /// ⟦α ∇_Γ u⁰⟧ sampled at the grid nodes.
    pub jump_tangential_gradient: TangentField,
}

/// A band-limited projection together with the relative energy that the
/// projection could not represent.
#[derive(Debug, Clone)]
pub struct BandProjection {
    pub field: SpectralField,
    /// ‖samples − Π_L samples‖²_{L²} / ‖samples‖²_{L²} under grid quadrature.
    pub tail_fraction: f64,
}

impl BandProjection {
    pub fn is_aliased(&self) -> bool {
        self.tail_fraction > ALIASING_TOL
    }
}

/// Boundary traces of the linearized solution.
#[derive(Debug, Clone)]
pub struct ShapeDerivativeTrace {
    pub trace_plus: SpectralField,
    pub trace_minus: SpectralField,
    pub g_dirichlet: SpectralField,
    pub g_neumann: SpectralField,
    /// Relative H^{−1/2} residual of ⟦αS⟧·trace_plus against the right side.
    pub residual: f64,
}

fn project_samples(
    samples: &[f64],
    grid: &QuadratureGrid,
    band_limit: usize,
) -> Result<BandProjection> {
    let field = grid.analyze(samples, band_limit)?;
    let back = grid.synthesize(&field);
    let diff_sq: Vec<f64> = samples
        .iter()
        .zip(&back)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    let sq: Vec<f64> = samples.iter().map(|a| a * a).collect();
    let total = grid.integrate(&sq)?;
    let tail = grid.integrate(&diff_sq)?;
    let tail_fraction = if total > 0.0 {
        (tail / total).max(0.0)
    } else {
        0.0
    };
    Ok(BandProjection {
        field,
        tail_fraction,
    })
}

/// Dirichlet jump g_D = −⟦∂u⁰/∂n⟧ κ, formed pointwise on the grid and
/// re-projected onto the band limit.
pub fn build_dirichlet_jump(
    nominal: &NominalTraceData,
    kappa: &SpectralField,
    grid: &QuadratureGrid,
    band_limit: usize,
) -> Result<BandProjection> {
    if kappa.band_limit() > band_limit {
        return Err(Error::Usage(format!(
            "perturbation band limit {} exceeds target band limit {band_limit}",
            kappa.band_limit()
        )));
    }
    let jump = grid.synthesize(&nominal.jump_normal_derivative);
    let kappa_samples = grid.synthesize(kappa);
    let product: Vec<f64> = jump
        .iter()
        .zip(&kappa_samples)
        .map(|(j, k)| -j * k)
        .collect();
    project_samples(&product, grid, band_limit)
}

/// Neumann jump g_N = ∇_Γ·(κ ⟦α∇_Γ u⁰⟧): the tangential jump is scaled by κ
/// pointwise, then the weak surface divergence is taken at the band limit.
/// The tail fraction is the worst over the three Cartesian components of
/// the scaled tangent field.
pub fn build_neumann_jump(
    nominal: &NominalTraceData,
    kappa: &SpectralField,
    grid: &QuadratureGrid,
    band_limit: usize,
) -> Result<BandProjection> {
    if kappa.band_limit() > band_limit {
        return Err(Error::Usage(format!(
            "perturbation band limit {} exceeds target band limit {band_limit}",
            kappa.band_limit()
        )));
    }
    if nominal.jump_tangential_gradient.grid() != grid {
        return Err(Error::Usage(
            "tangential jump is sampled on a different grid".into(),
        ));
    }
    let kappa_samples = grid.synthesize(kappa);
    let scaled = nominal
        .jump_tangential_gradient
        .scaled_pointwise(&kappa_samples)?;
    let mut tail_fraction: f64 = 0.0;
    for axis in 0..3 {
        let component: Vec<f64> = scaled.vectors().iter().map(|v| v[axis]).collect();
        let projection = project_samples(&component, grid, band_limit)?;
        tail_fraction = tail_fraction.max(projection.tail_fraction);
    }
    let field = surface_divergence(&scaled, band_limit)?;
    Ok(BandProjection {
        field,
        tail_fraction,
    })
}

/// Solve for the boundary traces of the linearized solution.
pub fn solve_trace(
    tc: &TransmissionCoefficients,
    g_dirichlet: &SpectralField,
    g_neumann: &SpectralField,
) -> Result<ShapeDerivativeTrace> {
    if g_dirichlet.band_limit() != g_neumann.band_limit() {
        return Err(Error::Usage(format!(
            "jump data band limits differ: {} vs {}",
            g_dirichlet.band_limit(),
            g_neumann.band_limit()
        )));
    }
    let s_minus = BoundaryOperator::new(OperatorKind::InteriorDtn, *tc);
    let rhs = g_neumann.try_sub(&s_minus.apply(g_dirichlet).scaled(tc.alpha_minus()))?;
    let trace_plus = solve_jump(tc, &rhs);
    let trace_minus = trace_plus.try_add(g_dirichlet)?;
    let jump_op = BoundaryOperator::new(OperatorKind::AlphaJump, *tc);
    let defect = jump_op.apply(&trace_plus).try_sub(&rhs)?.sobolev_norm(-0.5);
    let scale = rhs.sobolev_norm(-0.5);
    let residual = if scale > 0.0 { defect / scale } else { defect };
    Ok(ShapeDerivativeTrace {
        trace_plus,
        trace_minus,
        g_dirichlet: g_dirichlet.clone(),
        g_neumann: g_neumann.clone(),
        residual,
    })
}

impl ShapeDerivativeTrace {
    /// Value of the linearized solution at a point off the interface.
    pub fn evaluate(&self, point: [f64; 3]) -> Result<f64> {
        let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
        if (r - 1.0).abs() < INTERFACE_TOL {
            return Err(Error::Domain(format!(
                "evaluation point lies on the interface (|x| = {r})"
            )));
        }
        if r < 1.0 {
            Ok(evaluate_interior(&self.trace_minus, &[point])?[0])
        } else {
            Ok(evaluate_exterior(&self.trace_plus, &[point])?[0])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{build_grid, surface_gradient, HarmonicIndex, SpectralField};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn idx(l: u32, m: i32) -> HarmonicIndex {
        HarmonicIndex::new(l, m).unwrap()
    }

    fn tc(am: f64, ap: f64) -> TransmissionCoefficients {
        TransmissionCoefficients::new(am, ap).unwrap()
    }

    fn constant_field(band: usize, value: f64) -> SpectralField {
        let mut f = SpectralField::zeros(band);
        f.set_coefficient(idx(0, 0), value * (4.0 * PI).sqrt())
            .unwrap();
        f
    }

    fn constant_nominal(band: usize, jump: f64, grid: &QuadratureGrid) -> NominalTraceData {
        NominalTraceData {
            jump_normal_derivative: constant_field(band, jump),
            jump_tangential_gradient: TangentField::zeros(grid),
        }
    }

    #[test]
    fn zero_kappa_gives_zero_jump() {
        let band = 4;
        let grid = build_grid(band);
        let nominal = constant_nominal(band, 0.3, &grid);
        let kappa = SpectralField::zeros(band);
        let g_d = build_dirichlet_jump(&nominal, &kappa, &grid, band).unwrap();
        assert_eq!(g_d.field.sobolev_norm(0.0), 0.0);
        let g_n = build_neumann_jump(&nominal, &kappa, &grid, band).unwrap();
        assert_eq!(g_n.field.sobolev_norm(0.0), 0.0);
    }

    #[test]
    fn constant_jump_times_constant_kappa() {
        let band = 4;
        let grid = build_grid(band);
        let jump = -1.0 / 210.0;
        let nominal = constant_nominal(band, jump, &grid);
        let kappa = constant_field(band, 1.0);
        let g_d = build_dirichlet_jump(&nominal, &kappa, &grid, band).unwrap();
        assert!(!g_d.is_aliased());
        assert_relative_eq!(
            g_d.field.coefficient(idx(0, 0)),
            -jump * (4.0 * PI).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn radial_nominal_gives_zero_neumann_jump() {
        let band = 5;
        let grid = build_grid(band);
        let nominal = constant_nominal(band, 0.7, &grid);
        let kappa = constant_field(band, 1.0);
        let g_n = build_neumann_jump(&nominal, &kappa, &grid, band).unwrap();
        assert!(g_n.field.sobolev_norm(0.0) < 1e-14);
    }

    #[test]
    fn gradient_jump_reproduces_laplace_beltrami() {
        let band = 6;
        let grid = build_grid(band);
        let y10 = SpectralField::delta(band, idx(1, 0)).unwrap();
        let nominal = NominalTraceData {
            jump_normal_derivative: SpectralField::zeros(band),
            jump_tangential_gradient: surface_gradient(&y10, &grid).unwrap(),
        };
        let kappa = constant_field(band, 1.0);
        let g_n = build_neumann_jump(&nominal, &kappa, &grid, band).unwrap();
        for (i, c) in g_n.field.iter() {
            let expected = if i == idx(1, 0) { -2.0 } else { 0.0 };
            assert!((c - expected).abs() < 1e-10, "coefficient {i} = {c}");
        }
    }

    #[test]
    fn aliased_product_reports_diagnostic() {
        // Product of two degree-4 fields has degree-8 content which the
        // band limit 4 cannot hold; the grid sees the residual.
        let band = 4;
        let grid = build_grid(2 * band);
        let mut high = SpectralField::zeros(band);
        high.set_coefficient(idx(4, 0), 1.0).unwrap();
        let nominal = NominalTraceData {
            jump_normal_derivative: high.clone(),
            jump_tangential_gradient: TangentField::zeros(&grid),
        };
        let g_d = build_dirichlet_jump(&nominal, &high, &grid, band).unwrap();
        assert!(g_d.is_aliased());
    }

    #[test]
    fn solve_trace_constant_dirichlet_data() {
        // S₋ annihilates constants, so the exterior trace vanishes and the
        // interior trace equals g_D.
        let band = 3;
        let t = tc(2.0, 1.0);
        let g_d = constant_field(band, 1.0 / 210.0);
        let g_n = SpectralField::zeros(band);
        let trace = solve_trace(&t, &g_d, &g_n).unwrap();
        assert!(trace.trace_plus.sobolev_norm(0.0) < 1e-15);
        assert_relative_eq!(
            trace.trace_minus.coefficient(idx(0, 0)),
            g_d.coefficient(idx(0, 0)),
            epsilon = 1e-15
        );
        assert!(trace.residual < 1e-10);
    }

    #[test]
    fn solve_trace_zero_data() {
        let t = tc(1.0, 1.0);
        let zero = SpectralField::zeros(2);
        let trace = solve_trace(&t, &zero, &zero).unwrap();
        assert_eq!(trace.trace_plus.sobolev_norm(0.0), 0.0);
        assert_eq!(trace.trace_minus.sobolev_norm(0.0), 0.0);
    }

    #[test]
    fn solve_trace_neumann_mode() {
        let t = tc(1.0, 1.0);
        let g_n = SpectralField::delta(3, idx(2, 0)).unwrap();
        let trace = solve_trace(&t, &SpectralField::zeros(3), &g_n).unwrap();
        assert_relative_eq!(
            trace.trace_plus.coefficient(idx(2, 0)),
            1.0 / 5.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn trace_minus_is_trace_plus_plus_dirichlet() {
        let t = tc(2.5, 0.5);
        let mut g_d = SpectralField::zeros(4);
        g_d.set_coefficient(idx(1, 1), 0.3).unwrap();
        g_d.set_coefficient(idx(3, -2), -0.9).unwrap();
        let mut g_n = SpectralField::zeros(4);
        g_n.set_coefficient(idx(2, 0), 1.1).unwrap();
        let trace = solve_trace(&t, &g_d, &g_n).unwrap();
        let diff = trace
            .trace_minus
            .try_sub(&trace.trace_plus)
            .unwrap()
            .try_sub(&g_d)
            .unwrap();
        assert!(diff.sobolev_norm(0.0) < 1e-15);
        assert!(trace.residual < 1e-10);
    }

    #[test]
    fn linearity_in_kappa() {
        let band = 5;
        let grid = build_grid(band);
        let t = tc(2.0, 1.0);
        let mut jn = SpectralField::zeros(band);
        jn.set_coefficient(idx(0, 0), 0.4).unwrap();
        jn.set_coefficient(idx(2, 1), -0.2).unwrap();
        let y22 = SpectralField::delta(band, idx(2, 2)).unwrap();
        let nominal = NominalTraceData {
            jump_normal_derivative: jn,
            jump_tangential_gradient: surface_gradient(&y22, &grid).unwrap(),
        };
        let mut kappa = SpectralField::zeros(band);
        kappa.set_coefficient(idx(0, 0), 1.0).unwrap();
        kappa.set_coefficient(idx(1, 0), 0.5).unwrap();
        let scale = 2.0;

        let solve = |k: &SpectralField| {
            let g_d = build_dirichlet_jump(&nominal, k, &grid, band).unwrap();
            let g_n = build_neumann_jump(&nominal, k, &grid, band).unwrap();
            solve_trace(&t, &g_d.field, &g_n.field).unwrap()
        };
        let base = solve(&kappa);
        let scaled = solve(&kappa.scaled(scale));
        for (a, b) in base
            .trace_minus
            .coefficients()
            .iter()
            .zip(scaled.trace_minus.coefficients())
        {
            assert_relative_eq!(scale * a, *b, epsilon = 1e-14, max_relative = 1e-13);
        }
        let p = [0.1, -0.2, 0.3];
        assert_relative_eq!(
            scale * base.evaluate(p).unwrap(),
            scaled.evaluate(p).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn evaluate_rejects_interface_points() {
        let t = tc(1.0, 1.0);
        let zero = SpectralField::zeros(1);
        let trace = solve_trace(&t, &zero, &zero).unwrap();
        assert!(trace.evaluate([1.0, 0.0, 0.0]).is_err());
        assert_eq!(trace.evaluate([0.0, 0.0, 0.5]).unwrap(), 0.0);
        assert_eq!(trace.evaluate([0.0, 0.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn jump_consistency_near_interface() {
        // u'₋ − u'₊ approaches g_D when the interface is approached from
        // matched radii 1 ∓ δ.
        let band = 4;
        let t = tc(2.0, 1.0);
        let mut g_d = SpectralField::zeros(band);
        g_d.set_coefficient(idx(1, 0), 0.6).unwrap();
        let mut g_n = SpectralField::zeros(band);
        g_n.set_coefficient(idx(1, 0), -0.4).unwrap();
        let trace = solve_trace(&t, &g_d, &g_n).unwrap();
        let direction = [0.0, 0.0, 1.0];
        let g_d_value = crate::harmonics::synthesize_at(&g_d, &[direction]).unwrap()[0];
        let mut previous = f64::INFINITY;
        for delta in [1e-2, 1e-3, 1e-4] {
            let inside = trace.evaluate([0.0, 0.0, 1.0 - delta]).unwrap();
            let outside = trace.evaluate([0.0, 0.0, 1.0 + delta]).unwrap();
            let gap = ((inside - outside) - g_d_value).abs();
            assert!(gap < previous, "gap {gap} did not shrink at δ = {delta}");
            assert!(gap < 5.0 * delta * g_d_value.abs().max(1.0));
            previous = gap;
        }
    }
}
