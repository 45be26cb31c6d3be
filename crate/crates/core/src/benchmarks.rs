//! Closed-form benchmark problems used as fixtures and oracles.
//!
//! Both benchmarks perturb the unit sphere along its normal by a spatially
//! constant amplitude a(ω) uniform on [−1, 1], so the perturbed interface
//! is a sphere of radius R(ω) = 1 + ε·a(ω).
//!
//! The first benchmark has a radially symmetric source supported in the
//! ball of radius 1/2; the sampled solution, its mean and its covariance
//! are known in closed form, which pins every linearization-error rate.
//! The second has a non-symmetric solution that vanishes on the nominal
//! interface; its normal-derivative jump −2(1/α₋ − 1/α₊)|x − e₃| is zonal
//! about the north pole, and its harmonic coefficients follow from
//!
//! ```text
//! ∫_{−1}^{1} √(2−2t) P_l(t) dt = −8 / ((2l−1)(2l+1)(2l+3)).
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::harmonics::{HarmonicIndex, QuadratureGrid, SpectralField, TangentField};
use crate::operators::TransmissionCoefficients;
use crate::shape::NominalTraceData;

/// Radially symmetric benchmark with a fully closed-form solution.
#[derive(Debug, Clone, Copy)]
pub struct Example1 {
    tc: TransmissionCoefficients,
    epsilon: f64,
}

impl Example1 {
    pub fn new(tc: TransmissionCoefficients, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Usage(format!(
                "perturbation amplitude must lie in (0,1), got {epsilon}"
            )));
        }
        Ok(Self { tc, epsilon })
    }

    pub fn tc(&self) -> TransmissionCoefficients {
        self.tc
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Interior constant (α₊−α₋)/(105 α₋ α₊); the only part of the sampled
    /// solution that depends on the random radius (through 1/R).
    fn radius_coupling(&self) -> f64 {
        (self.tc.alpha_plus() - self.tc.alpha_minus())
            / (105.0 * self.tc.alpha_minus() * self.tc.alpha_plus())
    }

    /// Sampled solution u(x, a) for an amplitude draw a ∈ [−1, 1].
    pub fn exact_solution(&self, x: [f64; 3], a: f64) -> Result<f64> {
        if a.abs() > 1.0 {
            return Err(Error::Domain(format!(
                "amplitude {a} lies outside the uniform law's support [−1, 1]"
            )));
        }
        let r = norm(x);
        let radius = 1.0 + self.epsilon * a;
        let am = self.tc.alpha_minus();
        let ap = self.tc.alpha_plus();
        let coupling = self.radius_coupling();
        if r <= 0.5 {
            Ok(
                (8.0 / 21.0 * r.powi(6) - 0.4 * r.powi(4) + r * r / 6.0) / am
                    - 3.0 / 105.0 * r / am
                    - 23.0 / (840.0 * am)
                    + coupling / radius,
            )
        } else if r <= radius {
            Ok(-1.0 / (105.0 * am * r) + coupling / radius)
        } else {
            Ok(-1.0 / (105.0 * ap * r))
        }
    }

    /// Solution on the nominal interface, u⁰ = u(·, a = 0).
    pub fn nominal_solution(&self, x: [f64; 3]) -> f64 {
        let r = norm(x);
        let am = self.tc.alpha_minus();
        let ap = self.tc.alpha_plus();
        let coupling = self.radius_coupling();
        if r <= 0.5 {
            (8.0 / 21.0 * r.powi(6) - 0.4 * r.powi(4) + r * r / 6.0) / am
                - 3.0 / 105.0 * r / am
                - 23.0 / (840.0 * am)
                + coupling
        } else if r <= 1.0 {
            -1.0 / (105.0 * am * r) + coupling
        } else {
            -1.0 / (105.0 * ap * r)
        }
    }

    /// Trace jumps of u⁰ on the nominal sphere:
    /// ⟦∂u⁰/∂n⟧ = (1/105)(1/α₋ − 1/α₊) constant, ⟦α∇_Γu⁰⟧ = 0.
    pub fn nominal_trace(&self, grid: &QuadratureGrid, band_limit: usize) -> NominalTraceData {
        let jump = (1.0 / 105.0) * (1.0 / self.tc.alpha_minus() - 1.0 / self.tc.alpha_plus());
        let mut field = SpectralField::zeros(band_limit);
        field
            .set_coefficient(
                HarmonicIndex::new(0, 0).expect("valid index"),
                jump * (4.0 * PI).sqrt(),
            )
            .expect("index within band limit");
        NominalTraceData {
            jump_normal_derivative: field,
            jump_tangential_gradient: TangentField::zeros(grid),
        }
    }

    /// E[1/R] = (ln(1+ε) − ln(1−ε)) / (2ε) for R = 1 + εa, a uniform.
    pub fn mean_inverse_radius_factor(epsilon: f64) -> f64 {
        ((1.0 + epsilon).ln() - (1.0 - epsilon).ln()) / (2.0 * epsilon)
    }

    /// Exact mean E[u(x, ·)] away from the perturbation annulus
    /// 1 − ε ≤ |x| ≤ 1 + ε.
    pub fn exact_mean(&self, x: [f64; 3]) -> Result<f64> {
        let r = norm(x);
        if r < 1.0 - self.epsilon {
            let factor = Self::mean_inverse_radius_factor(self.epsilon);
            Ok(self.nominal_solution(x) + self.radius_coupling() * (factor - 1.0))
        } else if r > 1.0 + self.epsilon {
            Ok(self.nominal_solution(x))
        } else {
            Err(Error::Domain(format!(
                "|x| = {r} lies in the perturbation annulus [1−ε, 1+ε]"
            )))
        }
    }

    /// Exact covariance `Cov[u](x, y)` by Gauss–Legendre quadrature of the
    /// sampled solutions over the amplitude.
    pub fn exact_covariance(&self, x: [f64; 3], y: [f64; 3], nodes: usize) -> Result<f64> {
        for p in [x, y] {
            let r = norm(p);
            if (1.0 - self.epsilon..=1.0 + self.epsilon).contains(&r) {
                return Err(Error::Domain(format!(
                    "|x| = {r} lies in the perturbation annulus [1−ε, 1+ε]"
                )));
            }
        }
        let (a_nodes, weights) = amplitude_quadrature(nodes)?;
        let mut mean_x = 0.0;
        let mut mean_y = 0.0;
        let mut cross = 0.0;
        for (&a, &w) in a_nodes.iter().zip(&weights) {
            let ux = self.exact_solution(x, a)?;
            let uy = self.exact_solution(y, a)?;
            mean_x += w * ux;
            mean_y += w * uy;
            cross += w * ux * uy;
        }
        Ok(cross - mean_x * mean_y)
    }

    /// Leading covariance term (1/3)(⟦α⟧/(105α₋α₊))² ε² of two interior
    /// points; the remainder is O(ε⁴).
    pub fn covariance_leading_term(&self) -> f64 {
        let jump = self.tc.alpha_jump();
        let c = jump / (105.0 * self.tc.alpha_minus() * self.tc.alpha_plus());
        c * c / 3.0 * self.epsilon * self.epsilon
    }

    /// Variance of the linearized solution at interior points,
    /// (1/3)(⟦α⟧/(105α₋α₊))²; zero at exterior points.
    pub fn linearized_interior_variance(&self) -> f64 {
        let c = self.tc.alpha_jump() / (105.0 * self.tc.alpha_minus() * self.tc.alpha_plus());
        c * c / 3.0
    }
}

/// Benchmark with a zonal normal-derivative jump |x − e₃| and a solution
/// that vanishes on the nominal interface.
#[derive(Debug, Clone, Copy)]
pub struct Example2 {
    tc: TransmissionCoefficients,
}

impl Example2 {
    pub fn new(tc: TransmissionCoefficients) -> Self {
        Self { tc }
    }

    pub fn tc(&self) -> TransmissionCoefficients {
        self.tc
    }

    /// Source term; singular at e₃, which quadrature grids never hit.
    pub fn source(&self, x: [f64; 3]) -> Result<f64> {
        let d = distance_to_north_pole(x);
        if d == 0.0 {
            return Err(Error::Domain(
                "source is singular at the north pole e₃".into(),
            ));
        }
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        Ok(2.0 / d * (1.0 - r2) - 4.0 / d * (r2 - x[2]) - 6.0 * d)
    }

    /// Piecewise solution u± = (1/α±)·|x−e₃|·(1−|x|²) on the nominal
    /// partition.
    pub fn nominal_solution(&self, x: [f64; 3]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let alpha = if r2 < 1.0 {
            self.tc.alpha_minus()
        } else {
            self.tc.alpha_plus()
        };
        distance_to_north_pole(x) * (1.0 - r2) / alpha
    }

    /// Pointwise ⟦∂u⁰/∂n⟧(x) = −2(1/α₋ − 1/α₊)·|x − e₃| on the sphere.
    pub fn normal_jump_value(&self, x: [f64; 3]) -> f64 {
        -2.0 * (1.0 / self.tc.alpha_minus() - 1.0 / self.tc.alpha_plus())
            * distance_to_north_pole(x)
    }

    /// Zonal harmonic coefficient of |x − e₃| on Y_{l,0}.
    pub fn chord_coefficient(degree: u32) -> f64 {
        let l = degree as f64;
        -8.0 * (PI * (2.0 * l + 1.0)).sqrt() / ((2.0 * l - 1.0) * (2.0 * l + 1.0) * (2.0 * l + 3.0))
    }

    /// Trace jumps on the nominal sphere from the closed-form zonal
    /// coefficients: u⁰ vanishes on the interface, so the tangential jump
    /// is identically zero.
    pub fn nominal_trace(&self, grid: &QuadratureGrid, band_limit: usize) -> NominalTraceData {
        let scale = -2.0 * (1.0 / self.tc.alpha_minus() - 1.0 / self.tc.alpha_plus());
        let mut field = SpectralField::zeros(band_limit);
        for l in 0..=band_limit as u32 {
            field
                .set_coefficient(
                    HarmonicIndex::new(l, 0).expect("valid index"),
                    scale * Self::chord_coefficient(l),
                )
                .expect("index within band limit");
        }
        NominalTraceData {
            jump_normal_derivative: field,
            jump_tangential_gradient: TangentField::zeros(grid),
        }
    }
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn distance_to_north_pole(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + (x[2] - 1.0) * (x[2] - 1.0)).sqrt()
}

/// Gauss–Legendre nodes and weights for expectations over the uniform
/// amplitude on [−1, 1] (weights carry the density 1/2 and sum to one).
pub fn amplitude_quadrature(nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if nodes < 2 {
        return Err(Error::Usage(format!(
            "amplitude quadrature needs at least 2 nodes, got {nodes}"
        )));
    }
    let (a, mut w) = crate::harmonics::gauss_legendre(nodes);
    for weight in &mut w {
        *weight *= 0.5;
    }
    Ok((a, w))
}
