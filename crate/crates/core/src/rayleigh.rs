//! Boundary-layer test functions phi_k(foot) e^{-sigma_k y} chi(y) supported
//! on single boundary nodal arcs, their Rayleigh quotients, the asymptotic
//! quotient sweep, the boundary-operator boundedness probe, and the linear
//! Weyl fit of the eigenvalue staircase.

use crate::assembly::{boundary_laplacian, FormMatrices};
use crate::error::{Result, SpectralError};
use crate::geometry::{DistanceField, Mesh};
use crate::linalg::{generalized_sym_eigen, DenseMatrix};
use crate::nodal::boundary_nodal_labels;
use crate::spectra::Spectrum;

/// C1 cutoff: 1 on [0, delta/2], 0 from 3 delta/4 on, monotone cubic between
/// with vanishing slope at both knots.
pub fn cutoff(y: f64, delta: f64) -> f64 {
    let a = 0.5 * delta;
    let b = 0.75 * delta;
    if y <= a {
        1.0
    } else if y >= b {
        0.0
    } else {
        let s = (y - a) / (b - a);
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

/// A single-arc boundary-layer extension with its vertex coefficients.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub k: usize,
    pub label: usize,
    pub delta: f64,
    pub coefficients: Vec<f64>,
    pub rayleigh: Option<f64>,
}

/// Builds the test function for arc `ell` of the boundary density `phi`
/// (boundary-position indexed) with decay rate `sigma`. Labels and distances
/// are derived from the mesh; use [`build_test_function_with`] to amortize
/// them over a sweep.
pub fn build_test_function(
    mesh: &Mesh,
    k: usize,
    phi: &[f64],
    sigma: f64,
    ell: usize,
    delta: f64,
) -> Result<TestFunction> {
    let df = mesh.distance_field();
    let (labels, count) = boundary_nodal_labels(mesh, phi, crate::nodal::DEFAULT_ZERO_TOL)?;
    if ell >= count {
        return Err(SpectralError::ZeroBoundaryTrace);
    }
    build_test_function_with(mesh, &df, &labels, k, phi, sigma, ell, delta)
}

#[allow(clippy::too_many_arguments)]
pub fn build_test_function_with(
    mesh: &Mesh,
    df: &DistanceField,
    labels: &[Option<usize>],
    k: usize,
    phi: &[f64],
    sigma: f64,
    ell: usize,
    delta: f64,
) -> Result<TestFunction> {
    if sigma <= 0.0 {
        return Err(SpectralError::NonPositiveSigma { sigma });
    }
    if !(delta > 0.0) {
        return Err(SpectralError::InvalidDomain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let bmap = mesh.boundary_index_map();
    let mut coefficients = vec![0.0; mesh.n_vertices()];
    for v in 0..mesh.n_vertices() {
        let y = df.y[v];
        if y >= delta {
            continue;
        }
        let foot_pos = bmap[df.foot[v]].expect("foot is a boundary vertex");
        if labels[foot_pos] == Some(ell) {
            coefficients[v] = phi[foot_pos] * (-sigma * y).exp() * cutoff(y, delta);
        }
    }
    Ok(TestFunction {
        k,
        label: ell,
        delta,
        coefficients,
        rayleigh: None,
    })
}

/// R(v) = v^T (K + Mq) v / v^T Bb v.
pub fn rayleigh_quotient(fm: &FormMatrices, v: &[f64]) -> Result<f64> {
    let num = fm.stiffness.quadratic_form(v, v) + fm.potential_mass.quadratic_form(v, v);
    let den = fm.boundary_mass.quadratic_form(v, v);
    if den <= 1e-300 {
        return Err(SpectralError::ZeroBoundaryTrace);
    }
    Ok(num / den)
}

/// One (k, arc) entry of the quotient sweep.
#[derive(Debug, Clone, Copy)]
pub struct LemmaEntry {
    pub k: usize,
    pub label: usize,
    pub sigma: f64,
    pub ratio: f64,
}

/// Sweep result: all per-arc quotient ratios R/sigma_k, their maximum, and
/// the smallest index beyond which every ratio stays within 1 + epsilon.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub epsilon: f64,
    pub delta: f64,
    pub entries: Vec<LemmaEntry>,
    pub max_ratio: f64,
    /// Smallest N with all ratios <= 1 + epsilon for k in (N, k_hi]; equals
    /// k_lo - 1 when the whole range passes and k_hi when nothing does.
    pub threshold: usize,
}

impl LemmaReport {
    /// CSV export: `k,ell,sigma,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,ell,sigma,ratio\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e}\n",
                e.k, e.label, e.sigma, e.ratio
            ));
        }
        out
    }
}

/// Builds every per-arc test function for k in `[k_lo, k_hi]` and records the
/// quotient ratios R(u_{k,ell}) / sigma_k. All sigma_k in range must be
/// positive.
pub fn check_lemma(
    mesh: &Mesh,
    fm: &FormMatrices,
    spectrum: &Spectrum,
    epsilon: f64,
    k_range: (usize, usize),
    delta: f64,
) -> Result<LemmaReport> {
    let (k_lo, k_hi) = k_range;
    assert!(k_lo >= 1 && k_lo <= k_hi);
    if spectrum.values.len() < k_hi {
        return Err(SpectralError::TooFewEigenvalues {
            needed: k_hi,
            got: spectrum.values.len(),
        });
    }
    let df = mesh.distance_field();
    let mut entries = Vec::new();
    for k in k_lo..=k_hi {
        let sigma = spectrum.values[k - 1];
        if sigma <= 0.0 {
            return Err(SpectralError::NonPositiveSigma { sigma });
        }
        let phi = &spectrum.vectors[k - 1];
        let (labels, count) = boundary_nodal_labels(mesh, phi, crate::nodal::DEFAULT_ZERO_TOL)?;
        for ell in 0..count {
            let tf = build_test_function_with(mesh, &df, &labels, k, phi, sigma, ell, delta)?;
            let r = rayleigh_quotient(fm, &tf.coefficients)?;
            entries.push(LemmaEntry {
                k,
                label: ell,
                sigma,
                ratio: r / sigma,
            });
        }
    }
    let max_ratio = entries.iter().fold(0.0f64, |m, e| m.max(e.ratio));
    let bound = 1.0 + epsilon;
    let threshold = entries
        .iter()
        .filter(|e| e.ratio > bound)
        .map(|e| e.k)
        .max()
        .unwrap_or(k_lo - 1);
    Ok(LemmaReport {
        epsilon,
        delta,
        entries,
        max_ratio,
        threshold,
    })
}

/// Largest Rayleigh quotient over the span of a test-function family,
/// computed from the projected pencil. Feeding the discrete variational
/// principle: sigma_m is at most this value for any family of m independent
/// functions.
pub fn span_max_rayleigh(fm: &FormMatrices, family: &[TestFunction]) -> Result<f64> {
    let m = family.len();
    if m == 0 {
        return Err(SpectralError::TooFewEigenvalues { needed: 1, got: 0 });
    }
    let mut a_proj = DenseMatrix::zeros(m, m);
    let mut b_proj = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let vi = &family[i].coefficients;
            let vj = &family[j].coefficients;
            let av = fm.stiffness.quadratic_form(vi, vj) + fm.potential_mass.quadratic_form(vi, vj);
            a_proj.set(i, j, av);
            b_proj.set(i, j, fm.boundary_mass.quadratic_form(vi, vj));
        }
    }
    a_proj.symmetrize();
    b_proj.symmetrize();
    let eig = generalized_sym_eigen(&a_proj, &b_proj, false)?;
    Ok(*eig.values.last().unwrap())
}

/// Per-index comparison of the boundary-polygon Laplacian spectrum against
/// the squared Steklov values: r_k = |lambda_k^bdry - sigma_k^2| / (1 + sigma_k).
/// Indices where 1 + sigma_k is numerically zero are skipped.
#[derive(Debug, Clone)]
pub struct BtildeReport {
    pub entries: Vec<(usize, f64)>,
    pub max_r: f64,
}

impl BtildeReport {
    /// CSV export: `k,r_k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,r_k\n");
        for (k, r) in &self.entries {
            out.push_str(&format!("{k},{r:.12e}\n"));
        }
        out
    }
}

pub fn btilde_probe(mesh: &Mesh, spectrum: &Spectrum, k_max: usize) -> Result<BtildeReport> {
    if spectrum.values.len() < k_max {
        return Err(SpectralError::TooFewEigenvalues {
            needed: k_max,
            got: spectrum.values.len(),
        });
    }
    let (stiff, mass) = boundary_laplacian(mesh);
    let nb = stiff.n;
    if k_max > nb {
        return Err(SpectralError::CountTooLarge {
            requested: k_max,
            available: nb,
        });
    }
    let all: Vec<usize> = (0..nb).collect();
    let eig = generalized_sym_eigen(
        &stiff.to_dense(&all, &all),
        &mass.to_dense(&all, &all),
        false,
    )?;
    let mut entries = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let sigma = spectrum.values[k - 1];
        let denom = 1.0 + sigma;
        if denom.abs() < 1e-9 {
            continue;
        }
        let r = (eig.values[k - 1] - sigma * sigma).abs() / denom;
        entries.push((k, r));
    }
    let max_r = entries.iter().fold(0.0f64, |m, (_, r)| m.max(*r));
    Ok(BtildeReport { entries, max_r })
}

/// Least-squares line through the top half of the eigenvalue staircase.
#[derive(Debug, Clone, Copy)]
pub struct WeylFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// slope * |boundary|; compare against pi in two dimensions.
    pub predicted_constant: f64,
}

impl WeylFit {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"slope\":{},\"intercept\":{},\"r_squared\":{},\"predicted_constant\":{}}}",
            self.slope, self.intercept, self.r_squared, self.predicted_constant
        )
    }
}

pub fn weyl_fit(spectrum: &Spectrum, boundary_length: f64) -> Result<WeylFit> {
    let n = spectrum.values.len();
    if n < 20 {
        return Err(SpectralError::TooFewEigenvalues { needed: 20, got: n });
    }
    let start = n / 2; // top half, 0-based
    let xs: Vec<f64> = (start..n).map(|i| (i + 1) as f64).collect();
    let ys: Vec<f64> = spectrum.values[start..].to_vec();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxy += (x - xbar) * (y - ybar);
        sxx += (x - xbar) * (x - xbar);
        syy += (y - ybar) * (y - ybar);
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(WeylFit {
        slope,
        intercept,
        r_squared,
        predicted_constant: slope * boundary_length,
    })
}
