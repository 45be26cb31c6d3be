//! Deterministic k-th moment problems on hyperbolic-cross tensor spaces.
//!
//! Taking the mean of the k-fold tensorization of the boundary trace
//! equation turns the stochastic problem into a deterministic one for the
//! k-th moment of the trace. Because the jump operator is diagonal in
//! spherical harmonics, the tensor Galerkin system is diagonal as well:
//! each coefficient is divided by the product of the per-leg eigenvalues
//! α₋l_i + α₊(l_i+1). The Galerkin space is the hyperbolic cross
//! {(l₁,…,l_k) : Π(1+l_i) ≤ 1+p}, which for k = 2 carries O(p² log p)
//! unknowns instead of the full tensor product's O(p⁴).
//!
//! For a separable perturbation κ = Σ_j a_j φ_j with uncorrelated centered
//! amplitudes, the moment right-hand sides collapse to per-mode rank-one
//! tensors of the one-leg vectors g_N − α₋S₋ g_D (exterior legs) or
//! g_N − α₊S₊ g_D (interior legs), with κ := φ_j inside the jump builders.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::harmonics::{HarmonicIndex, QuadratureGrid, SpectralField};
use crate::operators::{
    extension_factor, operator_eigenvalue, BoundaryOperator, OperatorKind, Side,
    TransmissionCoefficients,
};
use crate::shape::{build_dirichlet_jump, build_neumann_jump, NominalTraceData};

/// Sparse set of degree tuples (l₁,…,l_k) with Π(1+l_i) ≤ 1+p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperbolicCross {
    order: usize,
    legs: usize,
    degree_tuples: Vec<Vec<u32>>,
}

/// Enumerate the hyperbolic cross of order p with k legs.
pub fn build_cross(order: usize, legs: usize) -> Result<HyperbolicCross> {
    if legs == 0 {
        return Err(Error::Usage(
            "a moment tensor needs at least one leg".into(),
        ));
    }
    let mut degree_tuples = Vec::new();
    let mut current = vec![0u32; legs];
    enumerate_tuples(order, legs, 0, 1, &mut current, &mut degree_tuples);
    Ok(HyperbolicCross {
        order,
        legs,
        degree_tuples,
    })
}

fn enumerate_tuples(
    order: usize,
    legs: usize,
    leg: usize,
    product_so_far: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if leg == legs {
        out.push(current.clone());
        return;
    }
    let mut degree = 0u32;
    loop {
        let product = match product_so_far.checked_mul(1 + degree as usize) {
            Some(p) if p <= order + 1 => p,
            _ => break,
        };
        current[leg] = degree;
        enumerate_tuples(order, legs, leg + 1, product, current, out);
        degree += 1;
    }
}

impl HyperbolicCross {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn legs(&self) -> usize {
        self.legs
    }

    pub fn degree_tuples(&self) -> &[Vec<u32>] {
        &self.degree_tuples
    }

    /// Membership test Π(1+l_i) ≤ 1+p.
    pub fn contains(&self, degrees: &[u32]) -> bool {
        degrees.len() == self.legs
            && degrees
                .iter()
                .try_fold(1usize, |acc, &l| {
                    let next = acc.checked_mul(1 + l as usize)?;
                    (next <= self.order + 1).then_some(next)
                })
                .is_some()
    }

    /// Largest degree appearing in any tuple (= p).
    pub fn max_degree(&self) -> u32 {
        self.degree_tuples
            .iter()
            .flat_map(|t| t.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Number of scalar unknowns once every order m is counted:
    /// Σ_tuples Π(2l_i + 1).
    pub fn dimension(&self) -> usize {
        self.degree_tuples
            .iter()
            .map(|t| t.iter().map(|&l| 2 * l as usize + 1).product::<usize>())
            .sum()
    }
}

/// Coefficients of a k-leg tensor field restricted to a hyperbolic cross.
/// Only structurally nonzero entries are stored.
#[derive(Debug, Clone)]
pub struct TensorSpectralField {
    cross: HyperbolicCross,
    coefficients: BTreeMap<Vec<HarmonicIndex>, f64>,
}

impl TensorSpectralField {
    pub fn zeros(cross: HyperbolicCross) -> Self {
        Self {
            cross,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn cross(&self) -> &HyperbolicCross {
        &self.cross
    }

    pub fn legs(&self) -> usize {
        self.cross.legs()
    }

    pub fn coefficient(&self, key: &[HarmonicIndex]) -> f64 {
        self.coefficients.get(key).copied().unwrap_or(0.0)
    }

    pub fn add_coefficient(&mut self, key: Vec<HarmonicIndex>, value: f64) -> Result<()> {
        let degrees: Vec<u32> = key.iter().map(|i| i.degree()).collect();
        if !self.cross.contains(&degrees) {
            return Err(Error::Usage(format!(
                "degree tuple {degrees:?} lies outside the hyperbolic cross (p = {})",
                self.cross.order()
            )));
        }
        if value != 0.0 {
            *self.coefficients.entry(key).or_insert(0.0) += value;
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<HarmonicIndex>, f64)> + '_ {
        self.coefficients.iter().map(|(k, &v)| (k, v))
    }

    pub fn stored_len(&self) -> usize {
        self.coefficients.len()
    }

    /// Tensor Sobolev norm √( Σ Π(1+l_i)^{2s} c² ).
    pub fn hs_mix_norm(&self, s: f64) -> f64 {
        let mut sum = 0.0;
        for (key, value) in self.iter() {
            let weight: f64 = key
                .iter()
                .map(|i| ((1 + i.degree()) as f64).powf(2.0 * s))
                .product();
            sum += weight * value * value;
        }
        sum.sqrt()
    }

    /// Largest |c(i,j) − c(j,i)| over stored entries (two-leg fields).
    pub fn symmetry_defect(&self) -> Result<f64> {
        if self.legs() != 2 {
            return Err(Error::Usage(
                "symmetry defect needs a two-leg tensor".into(),
            ));
        }
        let mut worst: f64 = 0.0;
        for (key, value) in self.iter() {
            let swapped = vec![key[1], key[0]];
            worst = worst.max((value - self.coefficient(&swapped)).abs());
        }
        Ok(worst)
    }
}

/// One Karhunen–Loève-style mode of the perturbation: κ contribution
/// `a_j(ω) φ_j(x)` with weight `σ_j = E[a_j²]`.
#[derive(Debug, Clone)]
pub struct KlMode {
    pub weight: f64,
    pub profile: SpectralField,
}

/// Finite separable expansion of the random perturbation amplitude κ, with
/// centered uncorrelated scalar amplitudes: `Cov[κ](x,y) = Σ σ_j φ_j(x)φ_j(y)`.
#[derive(Debug, Clone)]
pub struct PerturbationModel {
    modes: Vec<KlMode>,
    /// E[aⁿ] for n = 1.. of the single mode's amplitude, when known.
    amplitude_moments: Option<Vec<f64>>,
}

impl PerturbationModel {
    /// Multi-mode model carrying only second-order amplitude information.
    pub fn separable(modes: Vec<KlMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Usage(
                "perturbation model needs at least one mode".into(),
            ));
        }
        if modes
            .iter()
            .any(|m| !m.weight.is_finite() || m.weight < 0.0)
        {
            return Err(Error::Usage(
                "mode weights must be nonnegative for a positive semidefinite covariance".into(),
            ));
        }
        Ok(Self {
            modes,
            amplitude_moments: None,
        })
    }

    /// Single mode `κ = a(ω) φ(x)` with the raw moments `E[aⁿ]` supplied for
    /// n = 1..=moments.len(). The amplitude must be centered.
    pub fn single_mode(profile: SpectralField, amplitude_moments: Vec<f64>) -> Result<Self> {
        if amplitude_moments.len() < 2 {
            return Err(Error::Usage(
                "single-mode model needs at least E[a] and E[a²]".into(),
            ));
        }
        if amplitude_moments[0].abs() > 1e-14 {
            return Err(Error::Usage(format!(
                "amplitude must be centered, got E[a] = {}",
                amplitude_moments[0]
            )));
        }
        let weight = amplitude_moments[1];
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Usage(format!(
                "E[a²] must be nonnegative, got {weight}"
            )));
        }
        Ok(Self {
            modes: vec![KlMode { weight, profile }],
            amplitude_moments: Some(amplitude_moments),
        })
    }

    /// Single mode with a(ω) uniform on [−1, 1]: `E[aⁿ] = 0` for odd n and
    /// 1/(n+1) for even n.
    pub fn single_uniform(profile: SpectralField, max_moment: usize) -> Result<Self> {
        let moments = (1..=max_moment.max(2))
            .map(|n| {
                if n % 2 == 1 {
                    0.0
                } else {
                    1.0 / (n as f64 + 1.0)
                }
            })
            .collect();
        Self::single_mode(profile, moments)
    }

    pub fn modes(&self) -> &[KlMode] {
        &self.modes
    }

    pub fn is_single_mode(&self) -> bool {
        self.modes.len() == 1
    }

    /// E[a^k] of the single mode's amplitude, when carried by the model.
    pub fn amplitude_moment(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(1.0);
        }
        self.amplitude_moments
            .as_ref()
            .and_then(|m| m.get(k - 1))
            .copied()
    }
}

/// One-leg right-hand-side vector for a given mode profile:
/// g_N − α₋S₋ g_D (exterior trace legs) or g_N − α₊S₊ g_D (interior legs).
pub fn one_leg_rhs(
    tc: &TransmissionCoefficients,
    nominal: &NominalTraceData,
    profile: &SpectralField,
    grid: &QuadratureGrid,
    band_limit: usize,
    side: Side,
) -> Result<SpectralField> {
    let g_d = build_dirichlet_jump(nominal, profile, grid, band_limit)?;
    let g_n = build_neumann_jump(nominal, profile, grid, band_limit)?;
    let (kind, alpha) = match side {
        Side::Exterior => (OperatorKind::InteriorDtn, tc.alpha_minus()),
        Side::Interior => (OperatorKind::ExteriorDtn, tc.alpha_plus()),
    };
    let dtn = BoundaryOperator::new(kind, *tc);
    g_n.field.try_sub(&dtn.apply(&g_d.field).scaled(alpha))
}

/// Second-moment right-hand side Σ_j σ_j (b_j ⊗ b_j) restricted to the
/// cross, with per-leg sides selecting which trace the legs belong to.
pub fn assemble_second_moment_rhs(
    tc: &TransmissionCoefficients,
    nominal: &NominalTraceData,
    model: &PerturbationModel,
    cross: &HyperbolicCross,
    grid: &QuadratureGrid,
    band_limit: usize,
    sides: (Side, Side),
) -> Result<TensorSpectralField> {
    if cross.legs() != 2 {
        return Err(Error::Usage(format!(
            "second-moment assembly needs a two-leg cross, got {}",
            cross.legs()
        )));
    }
    if band_limit < cross.max_degree() as usize {
        return Err(Error::Usage(format!(
            "band limit {band_limit} is below the cross's maximum degree {}",
            cross.max_degree()
        )));
    }
    let mut tensor = TensorSpectralField::zeros(cross.clone());
    for mode in model.modes() {
        if mode.weight == 0.0 {
            continue;
        }
        let b_first = one_leg_rhs(tc, nominal, &mode.profile, grid, band_limit, sides.0)?;
        let b_second = if sides.1 == sides.0 {
            b_first.clone()
        } else {
            one_leg_rhs(tc, nominal, &mode.profile, grid, band_limit, sides.1)?
        };
        accumulate_rank_one(&mut tensor, mode.weight, &[&b_first, &b_second])?;
    }
    Ok(tensor)
}

/// k-th moment right-hand side E[a^k]·(b ⊗ … ⊗ b) for a single-mode model.
#[allow(clippy::too_many_arguments)]
pub fn assemble_kth_moment_rhs(
    tc: &TransmissionCoefficients,
    nominal: &NominalTraceData,
    model: &PerturbationModel,
    k: usize,
    cross: &HyperbolicCross,
    grid: &QuadratureGrid,
    band_limit: usize,
    side: Side,
) -> Result<TensorSpectralField> {
    if cross.legs() != k {
        return Err(Error::Usage(format!(
            "cross has {} legs but the moment order is {k}",
            cross.legs()
        )));
    }
    if !model.is_single_mode() {
        if k == 2 {
            return assemble_second_moment_rhs(
                tc,
                nominal,
                model,
                cross,
                grid,
                band_limit,
                (side, side),
            );
        }
        return Err(Error::UnsupportedModel(format!(
            "k = {k} moments of a multi-mode model need joint amplitude moments the model does not carry"
        )));
    }
    let weight = model.amplitude_moment(k).ok_or_else(|| {
        Error::UnsupportedModel(format!(
            "model does not carry the amplitude moment E[a^{k}]"
        ))
    })?;
    let mut tensor = TensorSpectralField::zeros(cross.clone());
    if weight == 0.0 {
        return Ok(tensor);
    }
    let b = one_leg_rhs(
        tc,
        nominal,
        &model.modes()[0].profile,
        grid,
        band_limit,
        side,
    )?;
    let legs: Vec<&SpectralField> = std::iter::repeat_n(&b, k).collect();
    accumulate_rank_one(&mut tensor, weight, &legs)?;
    Ok(tensor)
}

fn accumulate_rank_one(
    tensor: &mut TensorSpectralField,
    weight: f64,
    legs: &[&SpectralField],
) -> Result<()> {
    let cross = tensor.cross().clone();
    let mut key = Vec::with_capacity(legs.len());
    for tuple in cross.degree_tuples() {
        key.clear();
        key.resize(legs.len(), HarmonicIndex::new(0, 0).expect("valid index"));
        accumulate_orders(tensor, weight, legs, tuple, 0, 1.0, &mut key)?;
    }
    Ok(())
}

fn accumulate_orders(
    tensor: &mut TensorSpectralField,
    weight: f64,
    legs: &[&SpectralField],
    tuple: &[u32],
    leg: usize,
    partial: f64,
    key: &mut Vec<HarmonicIndex>,
) -> Result<()> {
    if partial == 0.0 {
        return Ok(());
    }
    if leg == legs.len() {
        return tensor.add_coefficient(key.clone(), weight * partial);
    }
    let l = tuple[leg];
    for m in -(l as i32)..=l as i32 {
        let idx = HarmonicIndex::new(l, m).expect("valid index");
        key[leg] = idx;
        let c = legs[leg].coefficient(idx);
        accumulate_orders(tensor, weight, legs, tuple, leg + 1, partial * c, key)?;
    }
    Ok(())
}

/// Diagonal tensor Galerkin solve: each coefficient is divided by the
/// product of the jump-operator eigenvalues of its leg degrees.
pub fn solve_kth_moment(
    tc: &TransmissionCoefficients,
    rhs: &TensorSpectralField,
) -> TensorSpectralField {
    let mut out = TensorSpectralField::zeros(rhs.cross().clone());
    for (key, value) in rhs.iter() {
        let denom: f64 = key
            .iter()
            .map(|i| operator_eigenvalue(OperatorKind::AlphaJump, tc, i.degree()))
            .product();
        out.add_coefficient(key.clone(), value / denom)
            .expect("key drawn from the same cross");
    }
    out
}

/// Two-leg alias of [`solve_kth_moment`].
pub fn solve_second_moment(
    tc: &TransmissionCoefficients,
    rhs: &TensorSpectralField,
) -> TensorSpectralField {
    solve_kth_moment(tc, rhs)
}

/// Evaluate a boundary moment tensor at points off the interface by
/// applying the harmonic-extension factor on each leg.
pub fn evaluate_moment(
    moment: &TensorSpectralField,
    points: &[[f64; 3]],
    sides: &[Side],
) -> Result<f64> {
    if points.len() != moment.legs() || sides.len() != moment.legs() {
        return Err(Error::Usage(format!(
            "moment has {} legs but {} points / {} sides were supplied",
            moment.legs(),
            points.len(),
            sides.len()
        )));
    }
    for &point in points {
        let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
        if (r - 1.0).abs() < 1e-9 {
            return Err(Error::Domain(format!(
                "evaluation point lies on the interface (|x| = {r})"
            )));
        }
    }
    let mut total = 0.0;
    for (key, value) in moment.iter() {
        let mut term = value;
        for (leg, idx) in key.iter().enumerate() {
            if term == 0.0 {
                break;
            }
            term *= extension_factor(sides[leg], *idx, points[leg])?;
        }
        total += term;
    }
    Ok(total)
}

/// Two-leg covariance propagation: interior legs extend with r^l, exterior
/// legs with r^{−l−1}.
pub fn propagate_covariance(
    trace_moment: &TensorSpectralField,
    x1: [f64; 3],
    x2: [f64; 3],
    sides: (Side, Side),
) -> Result<f64> {
    evaluate_moment(trace_moment, &[x1, x2], &[sides.0, sides.1])
}

/// The three second-moment tensors needed to evaluate Cov[u'] anywhere off
/// the interface: interior×interior, exterior×exterior and the mixed
/// interior×exterior tensor.
#[derive(Debug, Clone)]
pub struct CovarianceSolution {
    pub minus: TensorSpectralField,
    pub plus: TensorSpectralField,
    pub mixed: TensorSpectralField,
}

/// Assemble and solve the covariance problems for all side combinations.
pub fn solve_covariance(
    tc: &TransmissionCoefficients,
    nominal: &NominalTraceData,
    model: &PerturbationModel,
    cross: &HyperbolicCross,
    grid: &QuadratureGrid,
    band_limit: usize,
) -> Result<CovarianceSolution> {
    let assemble = |sides| -> Result<TensorSpectralField> {
        let rhs = assemble_second_moment_rhs(tc, nominal, model, cross, grid, band_limit, sides)?;
        Ok(solve_second_moment(tc, &rhs))
    };
    Ok(CovarianceSolution {
        minus: assemble((Side::Interior, Side::Interior))?,
        plus: assemble((Side::Exterior, Side::Exterior))?,
        mixed: assemble((Side::Interior, Side::Exterior))?,
    })
}

impl CovarianceSolution {
    /// Cov[u'](x1, x2), choosing the tensor by the points' radii.
    pub fn evaluate(&self, x1: [f64; 3], x2: [f64; 3]) -> Result<f64> {
        let side = |p: [f64; 3]| -> Result<Side> {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if (r - 1.0).abs() < 1e-9 {
                Err(Error::Domain(format!(
                    "evaluation point lies on the interface (|x| = {r})"
                )))
            } else if r < 1.0 {
                Ok(Side::Interior)
            } else {
                Ok(Side::Exterior)
            }
        };
        match (side(x1)?, side(x2)?) {
            (Side::Interior, Side::Interior) => {
                propagate_covariance(&self.minus, x1, x2, (Side::Interior, Side::Interior))
            }
            (Side::Exterior, Side::Exterior) => {
                propagate_covariance(&self.plus, x1, x2, (Side::Exterior, Side::Exterior))
            }
            (Side::Interior, Side::Exterior) => {
                propagate_covariance(&self.mixed, x1, x2, (Side::Interior, Side::Exterior))
            }
            (Side::Exterior, Side::Interior) => {
                propagate_covariance(&self.mixed, x2, x1, (Side::Interior, Side::Exterior))
            }
        }
    }
}
