//! Real orthonormal spherical harmonics on the unit sphere.
//!
//! The basis is the real-valued one: for order m = 0 the zonal functions
//! `Y_{l,0} = p_l^0(cos θ)`, and for m ≠ 0
//!
//! ```text
//! Y_{l,m}  = √2 · p_l^|m|(cos θ) · cos(|m| φ),   m > 0,
//! Y_{l,-m} = √2 · p_l^|m|(cos θ) · sin(|m| φ),   m > 0,
//! ```
//!
//! where `p_l^m` are the orthonormalized associated Legendre functions with
//! a *positive* sectorial seed (no Condon–Shortley sign on the tables).
//! This equals the Condon–Shortley-phased complex basis recombined with the
//! usual (−1)^m real-harmonic factors, so `Y_{1,1} ∝ +x`, `Y_{1,-1} ∝ +y`,
//! `Y_{1,0} ∝ +z` and `∫_S Y_{l,m}² dσ = 1`.
//!
//! Quadrature is Gauss–Legendre in cos θ crossed with a uniform azimuthal
//! rule, which integrates products of harmonics exactly up to the grid's
//! exactness degree. All transforms run ring by ring (an azimuthal Fourier
//! stage followed by a Legendre stage) in a fixed order, so results are
//! bitwise reproducible.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative tolerance for the "point lies on the unit sphere" check.
const UNIT_SPHERE_TOL: f64 = 1e-12;
/// sin θ below which tangential derivatives switch to the pole limits.
const POLE_SIN_TOL: f64 = 1e-8;
/// Largest tolerated |v·n| / |v| for externally supplied tangent vectors.
const TANGENCY_TOL: f64 = 1e-10;

/// Index (l, m) of a real spherical harmonic, with |m| ≤ l.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HarmonicIndex {
    degree: u32,
    order: i32,
}

impl HarmonicIndex {
    pub fn new(degree: u32, order: i32) -> Result<Self> {
        if order.unsigned_abs() > degree {
            return Err(Error::Usage(format!(
                "harmonic order {order} exceeds degree {degree}"
            )));
        }
        Ok(Self { degree, order })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    /// Position in the flat (l,m) packing: l² + l + m.
    pub fn flat(&self) -> usize {
        let l = self.degree as usize;
        l * l + (self.order + self.degree as i32) as usize
    }
}

impl std::fmt::Display for HarmonicIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.degree, self.order)
    }
}

/// A function on the unit sphere given by real harmonic coefficients up to
/// a band limit L; the coefficient vector has length (L+1)².
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    band_limit: usize,
    coefficients: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(band_limit: usize) -> Self {
        Self {
            band_limit,
            coefficients: vec![0.0; (band_limit + 1) * (band_limit + 1)],
        }
    }

    pub fn from_coefficients(band_limit: usize, coefficients: Vec<f64>) -> Result<Self> {
        let expected = (band_limit + 1) * (band_limit + 1);
        if coefficients.len() != expected {
            return Err(Error::Usage(format!(
                "coefficient vector has length {}, band limit {} needs {}",
                coefficients.len(),
                band_limit,
                expected
            )));
        }
        Ok(Self {
            band_limit,
            coefficients,
        })
    }

    /// Field with a single unit coefficient at `idx`.
    pub fn delta(band_limit: usize, idx: HarmonicIndex) -> Result<Self> {
        if idx.degree() as usize > band_limit {
            return Err(Error::Usage(format!(
                "index {idx} exceeds band limit {band_limit}"
            )));
        }
        let mut field = Self::zeros(band_limit);
        field.coefficients[idx.flat()] = 1.0;
        Ok(field)
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient at `idx`; zero above the band limit.
    pub fn coefficient(&self, idx: HarmonicIndex) -> f64 {
        if idx.degree() as usize > self.band_limit {
            0.0
        } else {
            self.coefficients[idx.flat()]
        }
    }

    pub fn set_coefficient(&mut self, idx: HarmonicIndex, value: f64) -> Result<()> {
        if idx.degree() as usize > self.band_limit {
            return Err(Error::Usage(format!(
                "index {idx} exceeds band limit {}",
                self.band_limit
            )));
        }
        self.coefficients[idx.flat()] = value;
        Ok(())
    }

    pub fn indices(band_limit: usize) -> impl Iterator<Item = HarmonicIndex> {
        (0..=band_limit as u32).flat_map(|l| {
            (-(l as i32)..=l as i32).map(move |m| HarmonicIndex {
                degree: l,
                order: m,
            })
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (HarmonicIndex, f64)> + '_ {
        Self::indices(self.band_limit).map(|idx| (idx, self.coefficients[idx.flat()]))
    }

    /// Sobolev norm √( Σ (1+l)^{2s} |v̂_{l,m}|² ).
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut sum = 0.0;
        for (idx, c) in self.iter() {
            let weight = ((1 + idx.degree()) as f64).powf(2.0 * s);
            sum += weight * c * c;
        }
        sum.sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            band_limit: self.band_limit,
            coefficients: self.coefficients.iter().map(|c| factor * c).collect(),
        }
    }

    /// Coefficient-wise sum; both fields must share the band limit.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.band_limit != other.band_limit {
            return Err(Error::Usage(format!(
                "band limits differ: {} vs {}",
                self.band_limit, other.band_limit
            )));
        }
        let coefficients = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            band_limit: self.band_limit,
            coefficients,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scaled(-1.0))
    }
}

/// Product Gauss–Legendre × uniform-azimuth quadrature on the sphere.
///
/// Weights carry the steradian measure: they sum to 4π, and products of
/// harmonics `Y_{l,m} Y_{l',m'}` with l + l' ≤ exactness are integrated
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    polar_nodes: Vec<f64>,
    polar_weights: Vec<f64>,
    azimuthal_count: usize,
    exactness: usize,
}

/// Grid exact for products of harmonics up to degree 2·band_limit.
pub fn build_grid(band_limit: usize) -> QuadratureGrid {
    let n_theta = band_limit + 1;
    let n_phi = 2 * band_limit + 1;
    let (polar_nodes, polar_weights) = gauss_legendre(n_theta);
    QuadratureGrid {
        polar_nodes,
        polar_weights,
        azimuthal_count: n_phi,
        exactness: (2 * n_theta - 1).min(n_phi - 1).min(2 * band_limit),
    }
}

impl QuadratureGrid {
    pub fn polar_count(&self) -> usize {
        self.polar_nodes.len()
    }

    pub fn azimuthal_count(&self) -> usize {
        self.azimuthal_count
    }

    pub fn node_count(&self) -> usize {
        self.polar_nodes.len() * self.azimuthal_count
    }

    /// Degree up to which products of harmonics are integrated exactly.
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    fn azimuth(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.azimuthal_count as f64
    }

    /// Cartesian position of node (ring i, azimuth j).
    pub fn position(&self, i: usize, j: usize) -> [f64; 3] {
        let t = self.polar_nodes[i];
        let s = (1.0 - t * t).sqrt();
        let phi = self.azimuth(j);
        [s * phi.cos(), s * phi.sin(), t]
    }

    /// Quadrature weight of any node in ring i (steradians).
    pub fn ring_weight(&self, i: usize) -> f64 {
        self.polar_weights[i] * 2.0 * PI / self.azimuthal_count as f64
    }

    /// All node positions in ring-major order.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.node_count());
        for i in 0..self.polar_count() {
            for j in 0..self.azimuthal_count {
                out.push(self.position(i, j));
            }
        }
        out
    }

    /// ∫_S f dσ for per-node samples in ring-major order.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        self.check_sample_count(samples.len())?;
        let mut sum = NeumaierSum::default();
        let mut k = 0;
        for i in 0..self.polar_count() {
            let w = self.ring_weight(i);
            for _ in 0..self.azimuthal_count {
                sum.add(w * samples[k]);
                k += 1;
            }
        }
        Ok(sum.value())
    }

    fn check_sample_count(&self, n: usize) -> Result<()> {
        if n != self.node_count() {
            return Err(Error::Usage(format!(
                "sample count {} does not match grid node count {}",
                n,
                self.node_count()
            )));
        }
        Ok(())
    }

    fn check_exactness(&self, band_limit: usize, what: &str) -> Result<()> {
        if self.exactness < 2 * band_limit {
            return Err(Error::Usage(format!(
                "grid exactness {} is below 2·{band_limit} required for {what}",
                self.exactness
            )));
        }
        Ok(())
    }

    /// Harmonic coefficients of per-node samples:
    /// v̂_{l,m} = Σ_nodes w · sample · Y_{l,m}(node).
    pub fn analyze(&self, samples: &[f64], band_limit: usize) -> Result<SpectralField> {
        self.check_sample_count(samples.len())?;
        self.check_exactness(band_limit, "analysis")?;
        let n_phi = self.azimuthal_count;
        let w_phi = 2.0 * PI / n_phi as f64;
        let (cos_tab, sin_tab) = self.azimuth_tables(band_limit);
        let mut field = SpectralField::zeros(band_limit);
        let layout = TriangleLayout::new(band_limit);
        for i in 0..self.polar_count() {
            // Azimuthal Fourier stage.
            let ring = &samples[i * n_phi..(i + 1) * n_phi];
            let mut fc = vec![0.0; band_limit + 1];
            let mut fs = vec![0.0; band_limit + 1];
            for j in 0..n_phi {
                let v = w_phi * ring[j];
                for m in 0..=band_limit {
                    fc[m] += v * cos_tab[j][m];
                    fs[m] += v * sin_tab[j][m];
                }
            }
            // Legendre stage.
            let w = self.polar_weights[i];
            let p = nalf_table(band_limit, self.polar_nodes[i]);
            for m in 0..=band_limit {
                let scale = if m == 0 {
                    w
                } else {
                    std::f64::consts::SQRT_2 * w
                };
                for l in m..=band_limit {
                    let plm = p[layout.index(l, m)];
                    let idx_pos = flat_index(l, m as i32);
                    field.coefficients[idx_pos] += scale * plm * fc[m];
                    if m > 0 {
                        let idx_neg = flat_index(l, -(m as i32));
                        field.coefficients[idx_neg] += scale * plm * fs[m];
                    }
                }
            }
        }
        Ok(field)
    }

    /// Per-node values of the field, ring-major.
    pub fn synthesize(&self, field: &SpectralField) -> Vec<f64> {
        let band_limit = field.band_limit;
        let n_phi = self.azimuthal_count;
        let (cos_tab, sin_tab) = self.azimuth_tables(band_limit);
        let layout = TriangleLayout::new(band_limit);
        let mut out = Vec::with_capacity(self.node_count());
        for i in 0..self.polar_count() {
            let p = nalf_table(band_limit, self.polar_nodes[i]);
            let mut gc = vec![0.0; band_limit + 1];
            let mut gs = vec![0.0; band_limit + 1];
            for m in 0..=band_limit {
                for l in m..=band_limit {
                    let plm = p[layout.index(l, m)];
                    gc[m] += field.coefficients[flat_index(l, m as i32)] * plm;
                    if m > 0 {
                        gs[m] += field.coefficients[flat_index(l, -(m as i32))] * plm;
                    }
                }
            }
            for j in 0..n_phi {
                let mut v = gc[0];
                for m in 1..=band_limit {
                    v += std::f64::consts::SQRT_2 * (gc[m] * cos_tab[j][m] + gs[m] * sin_tab[j][m]);
                }
                out.push(v);
            }
        }
        out
    }

    fn azimuth_tables(&self, band_limit: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n_phi = self.azimuthal_count;
        let mut cos_tab = Vec::with_capacity(n_phi);
        let mut sin_tab = Vec::with_capacity(n_phi);
        for j in 0..n_phi {
            let phi = self.azimuth(j);
            let mut cj = Vec::with_capacity(band_limit + 1);
            let mut sj = Vec::with_capacity(band_limit + 1);
            for m in 0..=band_limit {
                let a = m as f64 * phi;
                cj.push(a.cos());
                sj.push(a.sin());
            }
            cos_tab.push(cj);
            sin_tab.push(sj);
        }
        (cos_tab, sin_tab)
    }
}

/// Per-node tangent vectors on a quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    grid: QuadratureGrid,
    vectors: Vec<[f64; 3]>,
}

impl TangentField {
    pub fn zeros(grid: &QuadratureGrid) -> Self {
        Self {
            grid: grid.clone(),
            vectors: vec![[0.0; 3]; grid.node_count()],
        }
    }

    pub fn from_vectors(grid: &QuadratureGrid, vectors: Vec<[f64; 3]>) -> Result<Self> {
        grid.check_sample_count(vectors.len())?;
        let field = Self {
            grid: grid.clone(),
            vectors,
        };
        let defect = field.max_normal_defect();
        if defect > TANGENCY_TOL {
            return Err(Error::Usage(format!(
                "vectors are not tangent to the sphere (worst |v·n|/|v| = {defect:.3e})"
            )));
        }
        Ok(field)
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    /// Pointwise scaling by per-node values (e.g. a synthesized scalar).
    pub fn scaled_pointwise(&self, factors: &[f64]) -> Result<Self> {
        self.grid.check_sample_count(factors.len())?;
        let vectors = self
            .vectors
            .iter()
            .zip(factors)
            .map(|(v, f)| [v[0] * f, v[1] * f, v[2] * f])
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            vectors,
        })
    }

    /// Largest |v·n| / |v| over the nodes; zero vectors contribute 0.
    pub fn max_normal_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut k = 0;
        for i in 0..self.grid.polar_count() {
            for j in 0..self.grid.azimuthal_count() {
                let n = self.grid.position(i, j);
                let v = self.vectors[k];
                let dot = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
                let mag = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if mag > 0.0 {
                    worst = worst.max(dot.abs() / mag);
                }
                k += 1;
            }
        }
        worst
    }
}

/// Value of the real harmonic Y_{l,m} at a unit vector.
pub fn eval_ylm(idx: HarmonicIndex, point: [f64; 3]) -> Result<f64> {
    let (t, _s, phi) = unit_sphere_angles(point)?;
    let l = idx.degree() as usize;
    let m_abs = idx.order().unsigned_abs() as usize;
    let p = nalf_single(l, m_abs, t);
    Ok(attach_azimuth(p, idx.order(), phi))
}

/// Pointwise synthesis Σ v̂_{l,m} Y_{l,m}(point) at arbitrary unit vectors.
pub fn synthesize_at(field: &SpectralField, points: &[[f64; 3]]) -> Result<Vec<f64>> {
    let band_limit = field.band_limit;
    let layout = TriangleLayout::new(band_limit);
    let mut out = Vec::with_capacity(points.len());
    for &point in points {
        let (t, _s, phi) = unit_sphere_angles(point)?;
        let p = nalf_table(band_limit, t);
        let mut v = 0.0;
        for m in 0..=band_limit {
            let (c, s) = ((m as f64 * phi).cos(), (m as f64 * phi).sin());
            for l in m..=band_limit {
                let plm = p[layout.index(l, m)];
                if m == 0 {
                    v += field.coefficients[flat_index(l, 0)] * plm;
                } else {
                    v += std::f64::consts::SQRT_2
                        * plm
                        * (field.coefficients[flat_index(l, m as i32)] * c
                            + field.coefficients[flat_index(l, -(m as i32))] * s);
                }
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// Tangential gradient at the grid nodes, from the analytic derivatives of
/// the harmonics in (θ, φ).
pub fn surface_gradient(field: &SpectralField, grid: &QuadratureGrid) -> Result<TangentField> {
    grid.check_exactness(field.band_limit, "surface_gradient")?;
    let band_limit = field.band_limit;
    let n_phi = grid.azimuthal_count;
    let (cos_tab, sin_tab) = grid.azimuth_tables(band_limit);
    let layout = TriangleLayout::new(band_limit);
    let mut vectors = Vec::with_capacity(grid.node_count());
    for i in 0..grid.polar_count() {
        let t = grid.polar_nodes[i];
        let s = (1.0 - t * t).sqrt();
        let (p, dp) = nalf_table_with_derivative(band_limit, t);
        // Ring-wise Fourier coefficients of the two angular components.
        let mut theta_c = vec![0.0; band_limit + 1];
        let mut theta_s = vec![0.0; band_limit + 1];
        let mut phi_c = vec![0.0; band_limit + 1];
        let mut phi_s = vec![0.0; band_limit + 1];
        for m in 0..=band_limit {
            for l in m.max(1)..=band_limit {
                let k = layout.index(l, m);
                let cp = field.coefficients[flat_index(l, m as i32)];
                theta_c[m] += cp * dp[k];
                if m > 0 {
                    let cm = field.coefficients[flat_index(l, -(m as i32))];
                    theta_s[m] += cm * dp[k];
                    phi_c[m] += cp * p[k] * m as f64 / s;
                    phi_s[m] += cm * p[k] * m as f64 / s;
                }
            }
        }
        for j in 0..n_phi {
            let mut d_theta = theta_c[0];
            let mut d_phi = 0.0;
            for m in 1..=band_limit {
                let (c, sn) = (cos_tab[j][m], sin_tab[j][m]);
                d_theta += std::f64::consts::SQRT_2 * (theta_c[m] * c + theta_s[m] * sn);
                d_phi += std::f64::consts::SQRT_2 * (-phi_c[m] * sn + phi_s[m] * c);
            }
            let phi = grid.azimuth(j);
            let (cphi, sphi) = (phi.cos(), phi.sin());
            let e_theta = [t * cphi, t * sphi, -s];
            let e_phi = [-sphi, cphi, 0.0];
            vectors.push([
                d_theta * e_theta[0] + d_phi * e_phi[0],
                d_theta * e_theta[1] + d_phi * e_phi[1],
                d_theta * e_theta[2] + d_phi * e_phi[2],
            ]);
        }
    }
    Ok(TangentField {
        grid: grid.clone(),
        vectors,
    })
}

/// Weak surface divergence: (∇_Γ·F)^_{l,m} = −∫_S F·∇_Γ Y_{l,m} dσ.
pub fn surface_divergence(tf: &TangentField, band_limit: usize) -> Result<SpectralField> {
    let grid = &tf.grid;
    grid.check_exactness(band_limit, "surface_divergence")?;
    let n_phi = grid.azimuthal_count;
    let w_phi = 2.0 * PI / n_phi as f64;
    let (cos_tab, sin_tab) = grid.azimuth_tables(band_limit);
    let layout = TriangleLayout::new(band_limit);
    let mut field = SpectralField::zeros(band_limit);
    for i in 0..grid.polar_count() {
        let t = grid.polar_nodes[i];
        let s = (1.0 - t * t).sqrt();
        let (p, dp) = nalf_table_with_derivative(band_limit, t);
        // Project node vectors on the angular frame and Fourier-transform.
        let mut a_c = vec![0.0; band_limit + 1];
        let mut a_s = vec![0.0; band_limit + 1];
        let mut b_c = vec![0.0; band_limit + 1];
        let mut b_s = vec![0.0; band_limit + 1];
        for j in 0..n_phi {
            let v = tf.vectors[i * n_phi + j];
            let phi = grid.azimuth(j);
            let (cphi, sphi) = (phi.cos(), phi.sin());
            let f_theta = v[0] * t * cphi + v[1] * t * sphi - v[2] * s;
            let f_phi = -v[0] * sphi + v[1] * cphi;
            for m in 0..=band_limit {
                let (c, sn) = (cos_tab[j][m], sin_tab[j][m]);
                a_c[m] += w_phi * f_theta * c;
                a_s[m] += w_phi * f_theta * sn;
                b_c[m] += w_phi * f_phi * c;
                b_s[m] += w_phi * f_phi * sn;
            }
        }
        let w = grid.polar_weights[i];
        for m in 0..=band_limit {
            for l in m.max(1)..=band_limit {
                let k = layout.index(l, m);
                if m == 0 {
                    field.coefficients[flat_index(l, 0)] -= w * a_c[0] * dp[k];
                } else {
                    let ms = m as f64 / s;
                    field.coefficients[flat_index(l, m as i32)] -=
                        std::f64::consts::SQRT_2 * w * (a_c[m] * dp[k] - b_s[m] * ms * p[k]);
                    field.coefficients[flat_index(l, -(m as i32))] -=
                        std::f64::consts::SQRT_2 * w * (a_s[m] * dp[k] + b_c[m] * ms * p[k]);
                }
            }
        }
    }
    Ok(field)
}

/// Tangential gradient of a field at an arbitrary unit vector, with the
/// analytic limit formulas at the poles (only |m| = 1 contributes there).
pub fn eval_gradient(field: &SpectralField, point: [f64; 3]) -> Result<[f64; 3]> {
    let (t, s, phi) = unit_sphere_angles(point)?;
    let band_limit = field.band_limit;
    if s < POLE_SIN_TOL {
        let north = t > 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for l in 1..=band_limit {
            let lf = l as f64;
            let c_l = 0.5 * ((2.0 * lf + 1.0) * lf * (lf + 1.0) / (4.0 * PI)).sqrt();
            let parity = if north || l % 2 == 1 { 1.0 } else { -1.0 };
            let amp = std::f64::consts::SQRT_2 * c_l * parity;
            gx += amp * field.coefficients[flat_index(l, 1)];
            gy += amp * field.coefficients[flat_index(l, -1)];
        }
        return Ok([gx, gy, 0.0]);
    }
    let layout = TriangleLayout::new(band_limit);
    let (p, dp) = nalf_table_with_derivative(band_limit, t);
    let mut d_theta = 0.0;
    let mut d_phi = 0.0;
    for m in 0..=band_limit {
        let (c, sn) = ((m as f64 * phi).cos(), (m as f64 * phi).sin());
        for l in m.max(1)..=band_limit {
            let k = layout.index(l, m);
            if m == 0 {
                d_theta += field.coefficients[flat_index(l, 0)] * dp[k];
            } else {
                let cp = field.coefficients[flat_index(l, m as i32)];
                let cm = field.coefficients[flat_index(l, -(m as i32))];
                d_theta += std::f64::consts::SQRT_2 * dp[k] * (cp * c + cm * sn);
                d_phi += std::f64::consts::SQRT_2 * p[k] * (m as f64 / s) * (-cp * sn + cm * c);
            }
        }
    }
    let (cphi, sphi) = (phi.cos(), phi.sin());
    let e_theta = [t * cphi, t * sphi, -s];
    let e_phi = [-sphi, cphi, 0.0];
    Ok([
        d_theta * e_theta[0] + d_phi * e_phi[0],
        d_theta * e_theta[1] + d_phi * e_phi[1],
        d_theta * e_theta[2] + d_phi * e_phi[2],
    ])
}

fn unit_sphere_angles(point: [f64; 3]) -> Result<(f64, f64, f64)> {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    if (r - 1.0).abs() > UNIT_SPHERE_TOL {
        return Err(Error::Domain(format!(
            "point ({}, {}, {}) is not on the unit sphere (|x| = {r})",
            point[0], point[1], point[2]
        )));
    }
    let t = (point[2] / r).clamp(-1.0, 1.0);
    let s = ((point[0] * point[0] + point[1] * point[1]).sqrt() / r).min(1.0);
    let phi = point[1].atan2(point[0]);
    Ok((t, s, phi))
}

fn attach_azimuth(p: f64, order: i32, phi: f64) -> f64 {
    use std::cmp::Ordering;
    let m = order.unsigned_abs() as f64;
    match order.cmp(&0) {
        Ordering::Equal => p,
        Ordering::Greater => std::f64::consts::SQRT_2 * p * (m * phi).cos(),
        Ordering::Less => std::f64::consts::SQRT_2 * p * (m * phi).sin(),
    }
}

pub(crate) fn flat_index(l: usize, m: i32) -> usize {
    l * l + (m + l as i32) as usize
}

/// Packing of the (l ≥ m) triangle, m-major.
struct TriangleLayout {
    band_limit: usize,
}

impl TriangleLayout {
    fn new(band_limit: usize) -> Self {
        Self { band_limit }
    }

    fn len(&self) -> usize {
        (self.band_limit + 1) * (self.band_limit + 2) / 2
    }

    #[inline]
    fn index(&self, l: usize, m: usize) -> usize {
        m * (self.band_limit + 1) - m * (m.saturating_sub(1)) / 2 + (l - m)
    }
}

/// Orthonormalized associated Legendre values p_l^m(t) for all l ≤ L, m ≤ l,
/// with a positive sectorial seed. Normalization: ∫ p_l^m p_{l'}^m dt = δ/(2π).
fn nalf_table(band_limit: usize, t: f64) -> Vec<f64> {
    let layout = TriangleLayout::new(band_limit);
    let mut p = vec![0.0; layout.len()];
    let s = (1.0 - t * t).max(0.0).sqrt();
    p[layout.index(0, 0)] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=band_limit {
        let prev = p[layout.index(m - 1, m - 1)];
        p[layout.index(m, m)] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * prev;
    }
    for m in 0..=band_limit {
        if m < band_limit {
            p[layout.index(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * t * p[layout.index(m, m)];
        }
        for l in (m + 2)..=band_limit {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((2.0 * lf + 1.0) * (lf - 1.0 + mf) * (lf - 1.0 - mf))
                / ((2.0 * lf - 3.0) * (lf * lf - mf * mf)))
                .sqrt();
            p[layout.index(l, m)] =
                a * t * p[layout.index(l - 1, m)] - b * p[layout.index(l - 2, m)];
        }
    }
    p
}

/// Values and θ-derivatives of the orthonormalized associated Legendre
/// functions. Requires |t| < 1.
fn nalf_table_with_derivative(band_limit: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let layout = TriangleLayout::new(band_limit);
    let p = nalf_table(band_limit, t);
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut dp = vec![0.0; layout.len()];
    for m in 0..=band_limit {
        for l in m.max(1)..=band_limit {
            let lf = l as f64;
            let mf = m as f64;
            let below = if l > m {
                p[layout.index(l - 1, m)]
            } else {
                0.0
            };
            let e = ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt();
            dp[layout.index(l, m)] = (lf * t * p[layout.index(l, m)] - e * below) / s;
        }
    }
    (p, dp)
}

/// Single p_l^m(t) without building the whole table.
fn nalf_single(l: usize, m: usize, t: f64) -> f64 {
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        pmm *= ((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = ((2 * m + 3) as f64).sqrt() * t * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((2.0 * lf + 1.0) * (lf - 1.0 + mf) * (lf - 1.0 - mf))
            / ((2.0 * lf - 3.0) * (lf * lf - mf * mf)))
            .sqrt();
        let next = a * t * cur - b * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let mid = n / 2;
        let (_, d) = legendre_with_derivative(n, 0.0);
        nodes[mid] = 0.0;
        weights[mid] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Compensated (Neumaier) accumulator with a fixed summation order.
#[derive(Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
