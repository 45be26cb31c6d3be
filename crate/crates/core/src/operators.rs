//! Boundary integral operators of the Laplacian on the unit sphere.
//!
//! With the normalized fundamental solution G(x,y) = 1/(4π|x−y|), every
//! operator here is diagonal in the spherical-harmonic basis. The single
//! layer has eigenvalue 1/(2l+1), the double layer and its adjoint
//! −1/(2(2l+1)), the hypersingular operator l(l+1)/(2l+1). The
//! Dirichlet-to-Neumann maps follow from the harmonic extensions r^l and
//! r^{−l−1}: the interior map has eigenvalue l, the exterior one −(l+1),
//! both with the normal pointing out of the interior domain. The jump
//! operator α₋S₋ − α₊S₊ therefore has eigenvalue α₋l + α₊(l+1) > 0, which
//! makes the trace equations uniquely solvable degree by degree.

use crate::error::{Error, Result};
use crate::harmonics::{HarmonicIndex, SpectralField};

/// Piecewise-constant diffusivities of the two media.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionCoefficients {
    alpha_minus: f64,
    alpha_plus: f64,
}

impl TransmissionCoefficients {
    pub fn new(alpha_minus: f64, alpha_plus: f64) -> Result<Self> {
        let valid = |a: f64| a.is_finite() && a > 0.0;
        if !valid(alpha_minus) || !valid(alpha_plus) {
            return Err(Error::Usage(format!(
                "diffusivities must be strictly positive, got ({alpha_minus}, {alpha_plus})"
            )));
        }
        Ok(Self {
            alpha_minus,
            alpha_plus,
        })
    }

    pub fn alpha_minus(&self) -> f64 {
        self.alpha_minus
    }

    pub fn alpha_plus(&self) -> f64 {
        self.alpha_plus
    }

    /// Jump α₋ − α₊.
    pub fn alpha_jump(&self) -> f64 {
        self.alpha_minus - self.alpha_plus
    }
}

/// Which side of the interface a point or harmonic extension belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// The boundary operators realized spectrally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Single layer V.
    SingleLayer,
    /// Double layer K.
    DoubleLayer,
    /// Adjoint double layer K'.
    AdjointDoubleLayer,
    /// Hypersingular operator D.
    Hypersingular,
    /// Interior Dirichlet-to-Neumann map S₋ = V⁻¹(½I + K).
    InteriorDtn,
    /// Exterior Dirichlet-to-Neumann map S₊ = V⁻¹(K − ½I).
    ExteriorDtn,
    /// Jump operator α₋S₋ − α₊S₊.
    AlphaJump,
}

/// A diagonal boundary operator: (Op v)^_{l,m} = λ_l · v̂_{l,m}.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryOperator {
    kind: OperatorKind,
    tc: TransmissionCoefficients,
}

impl BoundaryOperator {
    pub fn new(kind: OperatorKind, tc: TransmissionCoefficients) -> Self {
        Self { kind, tc }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Eigenvalue λ_l on degree-l harmonics.
    pub fn eigenvalue(&self, degree: u32) -> f64 {
        operator_eigenvalue(self.kind, &self.tc, degree)
    }

    /// Coefficient-wise application.
    pub fn apply(&self, v: &SpectralField) -> SpectralField {
        let mut out = SpectralField::zeros(v.band_limit());
        for (idx, c) in v.iter() {
            out.set_coefficient(idx, self.eigenvalue(idx.degree()) * c)
                .expect("index within band limit");
        }
        out
    }
}

/// Eigenvalue of a boundary operator on degree-l harmonics.
pub fn operator_eigenvalue(kind: OperatorKind, tc: &TransmissionCoefficients, degree: u32) -> f64 {
    let l = degree as f64;
    match kind {
        OperatorKind::SingleLayer => 1.0 / (2.0 * l + 1.0),
        OperatorKind::DoubleLayer | OperatorKind::AdjointDoubleLayer => -0.5 / (2.0 * l + 1.0),
        OperatorKind::Hypersingular => l * (l + 1.0) / (2.0 * l + 1.0),
        OperatorKind::InteriorDtn => l,
        OperatorKind::ExteriorDtn => -(l + 1.0),
        OperatorKind::AlphaJump => tc.alpha_minus() * l + tc.alpha_plus() * (l + 1.0),
    }
}

/// Solve ⟦αS⟧ u = rhs degree by degree; always well-posed since every
/// eigenvalue α₋l + α₊(l+1) is strictly positive.
pub fn solve_jump(tc: &TransmissionCoefficients, rhs: &SpectralField) -> SpectralField {
    let mut out = SpectralField::zeros(rhs.band_limit());
    for (idx, c) in rhs.iter() {
        let lambda = operator_eigenvalue(OperatorKind::AlphaJump, tc, idx.degree());
        out.set_coefficient(idx, c / lambda)
            .expect("index within band limit");
    }
    out
}

/// Harmonic-extension factor of one mode at a point off the interface:
/// r^l Y_{l,m}(x/r) inside, r^{−l−1} Y_{l,m}(x/r) outside.
pub fn extension_factor(side: Side, idx: HarmonicIndex, point: [f64; 3]) -> Result<f64> {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    match side {
        Side::Interior => {
            if r >= 1.0 {
                return Err(Error::Domain(format!(
                    "interior evaluation needs |x| < 1, got |x| = {r}"
                )));
            }
        }
        Side::Exterior => {
            if r <= 1.0 {
                return Err(Error::Domain(format!(
                    "exterior evaluation needs |x| > 1, got |x| = {r}"
                )));
            }
        }
    }
    let l = idx.degree() as i32;
    let radial = match side {
        Side::Interior => {
            if r == 0.0 {
                if l == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                r.powi(l)
            }
        }
        Side::Exterior => r.powi(-l - 1),
    };
    let unit = if r == 0.0 {
        [0.0, 0.0, 1.0]
    } else {
        [point[0] / r, point[1] / r, point[2] / r]
    };
    Ok(radial * crate::harmonics::eval_ylm(idx, unit)?)
}

fn evaluate_extension(side: Side, trace: &SpectralField, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len());
    for &point in points {
        let mut value = 0.0;
        for (idx, c) in trace.iter() {
            if c != 0.0 {
                value += c * extension_factor(side, idx, point)?;
            }
        }
        out.push(value);
    }
    Ok(out)
}

/// Interior harmonic extension Σ û_{l,m} r^l Y_{l,m}(x/r) of a boundary trace.
pub fn evaluate_interior(trace: &SpectralField, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    evaluate_extension(Side::Interior, trace, points)
}

/// Exterior harmonic extension Σ û_{l,m} r^{−l−1} Y_{l,m}(x/r); decays as
/// O(|x|⁻¹), matching the radiation condition.
pub fn evaluate_exterior(trace: &SpectralField, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    evaluate_extension(Side::Exterior, trace, points)
}
