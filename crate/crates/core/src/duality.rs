//! The Steklov-Robin correspondence as an executable algorithm.
//!
//! For fixed lambda, each Steklov eigenvalue sigma_k is the unique root s_k
//! of lambda_{q,k+d}(sigma) = lambda along the (k+d)-th Robin branch, where d
//! counts the Dirichlet eigenvalues at or below lambda. The solver brackets
//! the root by doubling expansion and bisects on the inertia count of the
//! shifted form, which jumps exactly where a Robin branch crosses lambda; the
//! certificate then re-verifies the residual with a dense Robin solve and
//! compares against the directly computed Steklov value.

use crate::assembly::FormMatrices;
use crate::error::{Result, SpectralError};
use crate::spectra::{robin_count_below, robin_values, steklov_spectrum};

/// Sampled Robin branches lambda_{q,k}(sigma) over a sigma grid.
#[derive(Debug, Clone)]
pub struct RobinCurve {
    pub sigma_grid: Vec<f64>,
    /// `branches[k][i]` is the (k+1)-th eigenvalue at `sigma_grid[i]`.
    pub branches: Vec<Vec<f64>>,
}

impl RobinCurve {
    /// CSV export: header `sigma,lambda_1,...`, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma");
        for k in 0..self.branches.len() {
            out.push_str(&format!(",lambda_{}", k + 1));
        }
        out.push('\n');
        for (i, s) in self.sigma_grid.iter().enumerate() {
            out.push_str(&format!("{s:.12e}"));
            for branch in &self.branches {
                out.push_str(&format!(",{:.12e}", branch[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Root-finding record for one index k: the duality residual
/// |lambda_{q,k+d}(s_k) - lambda| and the mismatch against the direct solve.
#[derive(Debug, Clone, Copy)]
pub struct DualityCertificate {
    pub k: usize,
    pub d: usize,
    pub s_k: f64,
    pub residual: f64,
    pub sigma_k_direct: f64,
    pub mismatch: f64,
}

impl DualityCertificate {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"k\":{},\"d\":{},\"s_k\":{},\"residual\":{},\"sigma_k_direct\":{},\"mismatch\":{}}}",
            self.k, self.d, self.s_k, self.residual, self.sigma_k_direct, self.mismatch
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DualityOptions {
    /// Initial symmetric bracket half-width.
    pub bracket_init: f64,
    /// Doubling expansions allowed before giving up.
    pub max_expansions: u32,
    /// Bisection iterations.
    pub max_bisections: u32,
    /// Residual target |lambda_{q,k+d}(s_k) - lambda| <= residual_tol (1 + |lambda|).
    pub residual_tol: f64,
}

impl Default for DualityOptions {
    fn default() -> Self {
        DualityOptions {
            bracket_init: 10.0,
            max_expansions: 20,
            max_bisections: 60,
            residual_tol: 1e-6,
        }
    }
}

/// d = #{ discrete Dirichlet eigenvalues <= lambda + tol }, computed on the
/// same discretization as everything else so the duality identity holds at
/// the discrete level.
pub fn count_d(fm: &FormMatrices, lambda: f64) -> Result<usize> {
    let tol = 1e-6 * (1.0 + lambda.abs());
    crate::spectra::dirichlet_count_below(fm, lambda + tol)
}

/// Samples the first `k_max` Robin branches over a uniform sigma grid and
/// enforces the monotonicity invariant: every branch must be nonincreasing
/// along the grid up to solver tolerance.
pub fn trace_robin_curves(
    fm: &FormMatrices,
    sigma_lo: f64,
    sigma_hi: f64,
    n_grid: usize,
    k_max: usize,
) -> Result<RobinCurve> {
    if !(sigma_lo < sigma_hi) || n_grid < 2 {
        return Err(SpectralError::InvalidDomain(format!(
            "need sigma_lo < sigma_hi and n_grid >= 2, got [{sigma_lo}, {sigma_hi}] x {n_grid}"
        )));
    }
    let sigma_grid: Vec<f64> = (0..n_grid)
        .map(|i| sigma_lo + (sigma_hi - sigma_lo) * i as f64 / (n_grid - 1) as f64)
        .collect();
    let mut branches = vec![Vec::with_capacity(n_grid); k_max];
    for &s in &sigma_grid {
        let vals = robin_values(fm, s, k_max)?;
        for (k, branch) in branches.iter_mut().enumerate() {
            branch.push(vals[k]);
        }
    }
    for (k, branch) in branches.iter().enumerate() {
        for i in 1..branch.len() {
            let tol = 1e-8 * (1.0 + branch[i - 1].abs());
            if branch[i] > branch[i - 1] + tol {
                return Err(SpectralError::MonotonicityViolation {
                    branch: k + 1,
                    sigma: sigma_grid[i],
                });
            }
        }
    }
    Ok(RobinCurve {
        sigma_grid,
        branches,
    })
}

/// Solves lambda_{q,k+d}(s_k) = lambda for s_k and certifies it against the
/// direct Steklov eigenvalue sigma_k.
pub fn solve_s_k(fm: &FormMatrices, lambda: f64, k: usize) -> Result<DualityCertificate> {
    solve_s_k_with(fm, lambda, k, &DualityOptions::default())
}

pub fn solve_s_k_with(
    fm: &FormMatrices,
    lambda: f64,
    k: usize,
    opts: &DualityOptions,
) -> Result<DualityCertificate> {
    assert!(k >= 1, "duality indices are 1-based");
    let d = count_d(fm, lambda)?;
    let m = k + d;

    // The branch count #{ lambda_{q,j}(sigma) < lambda } is nondecreasing in
    // sigma and jumps past m-1 exactly at s_k; bracket where it crosses.
    let crossed = |sigma: f64| -> Result<bool> { Ok(robin_count_below(fm, sigma, lambda)? >= m) };

    let mut half = opts.bracket_init;
    let mut expansions = 0;
    let (mut lo, mut hi);
    loop {
        let lo_c = crossed(-half)?;
        let hi_c = crossed(half)?;
        if !lo_c && hi_c {
            lo = -half;
            hi = half;
            break;
        }
        expansions += 1;
        if expansions > opts.max_expansions {
            return Err(SpectralError::BracketExpansionFailed { k, bound: half });
        }
        half *= 2.0;
    }

    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        if crossed(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
    }
    let s_k = 0.5 * (lo + hi);

    // Certify with the dense Robin solve at the root, then compare with the
    // direct boundary solve.
    let branch_vals = robin_values(fm, s_k, m)?;
    let residual = (branch_vals[m - 1] - lambda).abs();
    let target = opts.residual_tol * (1.0 + lambda.abs());
    if residual > target {
        return Err(SpectralError::RootResidualTooLarge { k, residual });
    }
    let direct = steklov_spectrum(fm, lambda, k)?;
    let sigma_k_direct = direct.values[k - 1];
    let mismatch = (s_k - sigma_k_direct).abs();
    Ok(DualityCertificate {
        k,
        d,
        s_k,
        residual,
        sigma_k_direct,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Potential};
    use crate::geometry::{mesh_domain, Domain};
    use crate::oracle;

    fn disk_fm(h: f64, q: f64) -> FormMatrices {
        let mesh = mesh_domain(&Domain::Disk { radius: 1.0 }, h).unwrap();
        assemble(&mesh, &Potential::Constant(q)).unwrap()
    }

    #[test]
    fn count_d_disk_examples() {
        // q = 0: Dirichlet spectrum is positive, so d = 0 at lambda = 0.
        let fm0 = disk_fm(0.15, 0.0);
        assert_eq!(count_d(&fm0, 0.0).unwrap(), 0);

        // q = -30: zeros j_{0,1}, j_{1,1} (x2), j_{2,1} (x2) sit below 30,
        // j_{0,2}^2 ~ 30.47 above.
        let fm30 = disk_fm(0.08, -30.0);
        assert_eq!(count_d(&fm30, 0.0).unwrap(), 5);
    }

    #[test]
    fn count_d_diverging_branch_case() {
        // Zeros j_{0,1}, j_{1,1} (x2), j_{2,1} (x2), j_{0,2} all lie below
        // j_{3,1}; the order-3 pair sits just above mu.
        let j31 = oracle::bessel_zero(3, 1).unwrap();
        let mu = j31 * j31 - 0.1;
        let fm = disk_fm(0.06, -mu);
        assert_eq!(count_d(&fm, 0.0).unwrap(), 6);
    }

    #[test]
    fn bracket_expansion_failure_is_reported() {
        // A target far below every reachable branch value exhausts the
        // doubling expansion.
        let fm = disk_fm(0.3, 0.0);
        let err = solve_s_k(&fm, -1e15, 1);
        assert!(
            matches!(err, Err(SpectralError::BracketExpansionFailed { .. })),
            "{err:?}"
        );
    }

    #[test]
    fn robin_branches_monotone_and_limit() {
        let fm = disk_fm(0.2, 0.0);
        let curve = trace_robin_curves(&fm, -5.0, 5.0, 9, 3).unwrap();
        // Branch 1 passes through 0 at sigma = 0.
        let mid = curve
            .sigma_grid
            .iter()
            .position(|&s| s.abs() < 1e-12)
            .unwrap();
        assert!(curve.branches[0][mid].abs() < 1e-9);
        // Pointwise branch ordering.
        for i in 0..curve.sigma_grid.len() {
            assert!(curve.branches[0][i] <= curve.branches[1][i] + 1e-12);
            assert!(curve.branches[1][i] <= curve.branches[2][i] + 1e-12);
        }
        // Strict decrease across a coarse grid step.
        for k in 0..3 {
            for i in 1..curve.sigma_grid.len() {
                assert!(curve.branches[k][i] < curve.branches[k][i - 1]);
            }
        }
        let csv = curve.to_csv();
        assert!(csv.starts_with("sigma,lambda_1,lambda_2,lambda_3\n"));
    }

    #[test]
    fn s_2_is_one_on_the_disk() {
        let fm = disk_fm(0.12, 0.0);
        let cert = solve_s_k(&fm, 0.0, 2).unwrap();
        assert_eq!(cert.d, 0);
        assert!((cert.s_k - 1.0).abs() < 0.02, "s_2 = {}", cert.s_k);
        assert!(cert.residual <= 1e-6);
        assert!(
            cert.mismatch <= 0.01 * (1.0 + cert.sigma_k_direct.abs()),
            "mismatch {}",
            cert.mismatch
        );
    }

    #[test]
    fn s_1_matches_bessel_quotient_for_q_minus_one() {
        let fm = disk_fm(0.1, -1.0);
        let cert = solve_s_k(&fm, 0.0, 1).unwrap();
        assert_eq!(cert.d, 0);
        let j0 = oracle::bessel_j(0, 1.0).unwrap();
        let target = j0.derivative / j0.value;
        assert!(
            (cert.s_k - target).abs() < 0.02 * (1.0 + target.abs()),
            "s_1 = {}",
            cert.s_k
        );
    }

    #[test]
    fn s_k_ordered_and_matching_direct_solve() {
        let fm = disk_fm(0.15, -1.0);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=5 {
            let cert = solve_s_k(&fm, 0.0, k).unwrap();
            assert!(cert.s_k >= prev - 1e-9, "s_k not nondecreasing at k = {k}");
            prev = cert.s_k;
            let denom = 1.0 + cert.sigma_k_direct.abs();
            assert!(
                cert.mismatch / denom <= 0.01,
                "k = {k} mismatch {}",
                cert.mismatch
            );
        }
    }

    #[test]
    fn multiplicity_consistency_on_the_disk() {
        let fm = disk_fm(0.15, 0.0);
        // sigma ~ 1 (k = 2, 3) and sigma ~ 2 (k = 4, 5): each duality pair
        // collapses to one root, and lambda = 0 appears twice in the Robin
        // spectrum there.
        for (ka, kb, count) in [(2, 3, 5), (4, 5, 7)] {
            let ca = solve_s_k(&fm, 0.0, ka).unwrap();
            let cb = solve_s_k(&fm, 0.0, kb).unwrap();
            assert!((ca.s_k - cb.s_k).abs() < 1e-6 * (1.0 + ca.s_k.abs()));
            let vals = robin_values(&fm, ca.s_k, count).unwrap();
            let tol = 1e-5 * (1.0 + ca.s_k.abs());
            let mult = vals.iter().filter(|v| v.abs() <= tol).count();
            assert_eq!(mult, 2, "k = {ka}: robin values near zero: {vals:?}");
        }
    }

    #[test]
    fn bad_grid_is_rejected() {
        let fm = disk_fm(0.3, 0.0);
        assert!(trace_robin_curves(&fm, 1.0, -1.0, 5, 2).is_err());
        assert!(trace_robin_curves(&fm, -1.0, 1.0, 1, 2).is_err());
    }
}
