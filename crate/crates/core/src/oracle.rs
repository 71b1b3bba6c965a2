//! Closed-form reference spectra: Bessel functions for the unit disk with a
//! constant potential, and the separated flat cylinder bound.
//!
//! The disk branches use the argument sqrt(mu) throughout, which is what
//! consistency of the radial equation forces.

use crate::error::{Result, SpectralError};

/// Largest supported argument and order for the Bessel evaluations.
pub const BESSEL_MAX_X: f64 = 60.0;
pub const BESSEL_MAX_ORDER: u32 = 30;

/// A Bessel evaluation: value and derivative of the requested kind at `(order, argument)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselValue {
    pub order: u32,
    pub argument: f64,
    pub value: f64,
    pub derivative: f64,
}

/// One branch of the disk Dirichlet-to-Neumann spectrum for potential `-mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskDtnBranch {
    /// Angular order.
    pub n: u32,
    pub mu: f64,
    pub sigma: f64,
}

/// Sorted branch values with multiplicity, plus the angular orders that were
/// excluded as resonant (sqrt(mu) sitting on a zero of J_n).
#[derive(Debug, Clone, PartialEq)]
pub struct DiskDtnSpectrum {
    pub branches: Vec<DiskDtnBranch>,
    pub resonant_orders: Vec<u32>,
}

fn check_range(n: u32, x: f64) -> Result<()> {
    if x < 0.0 || x > BESSEL_MAX_X || n > BESSEL_MAX_ORDER {
        return Err(SpectralError::UnsupportedArgument(format!(
            "Bessel evaluation supports 0 <= x <= {BESSEL_MAX_X}, n <= {BESSEL_MAX_ORDER}; got n = {n}, x = {x}"
        )));
    }
    Ok(())
}

// Ascending series for J_n, reliable for x <= 12 where cancellation stays
// below ~6 digits.
fn bessel_j_series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    // Leading term (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let x2 = half * half;
    let mut m = 1u32;
    loop {
        term *= -x2 / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() <= 1e-16 * sum.abs().max(1e-300) && (2 * m) as f64 >= x {
            break;
        }
        m += 1;
        if m > 400 {
            break;
        }
    }
    sum
}

// Downward (Miller) recurrence with even-order normalization; stable for all
// orders once x is past the series regime.
fn bessel_j_miller(max_order: u32, x: f64) -> Vec<f64> {
    let start = (x.ceil() as u32).max(max_order) + 34;
    let mut jp1 = 0.0f64;
    let mut j = 1e-30f64;
    let mut out = vec![0.0f64; max_order as usize + 1];
    let mut norm = 0.0f64;
    for k in (0..=start).rev() {
        let jm1 = (2.0 * (k + 1) as f64 / x) * j - jp1;
        jp1 = j;
        j = jm1;
        // k is now the order carried by `j`.
        if k <= max_order {
            out[k as usize] = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if j.abs() > 1e250 {
            jp1 /= 1e250;
            j /= 1e250;
            norm /= 1e250;
            for v in out.iter_mut() {
                *v /= 1e250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

fn bessel_j_value(n: u32, x: f64) -> f64 {
    if x <= 12.0 {
        bessel_j_series(n, x)
    } else {
        bessel_j_miller(n, x)[n as usize]
    }
}

/// Bessel function of the first kind with its derivative.
/// Uses the ascending series for small arguments and downward recurrence
/// beyond; the derivative comes from J_n' = (J_{n-1} - J_{n+1})/2 with
/// J_0' = -J_1.
pub fn bessel_j(n: u32, x: f64) -> Result<BesselValue> {
    check_range(n, x)?;
    let (value, derivative) = if x <= 12.0 {
        let value = bessel_j_series(n, x);
        let derivative = if n == 0 {
            -bessel_j_series(1, x)
        } else {
            0.5 * (bessel_j_series(n - 1, x) - bessel_j_series(n + 1, x))
        };
        (value, derivative)
    } else {
        let table = bessel_j_miller(n + 1, x);
        let value = table[n as usize];
        let derivative = if n == 0 {
            -table[1]
        } else {
            0.5 * (table[(n - 1) as usize] - table[(n + 1) as usize])
        };
        (value, derivative)
    };
    Ok(BesselValue {
        order: n,
        argument: x,
        value,
        derivative,
    })
}

// Modified Bessel I_n by its (all-positive) ascending series.
fn bessel_i_series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let x2 = half * half;
    let mut m = 1u32;
    loop {
        term *= x2 / (m as f64 * (m + n) as f64);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
        m += 1;
        if m > 500 {
            break;
        }
    }
    sum
}

/// Modified Bessel function of the first kind with its derivative
/// I_n' = (I_{n-1} + I_{n+1})/2, I_0' = I_1.
pub fn bessel_i(n: u32, x: f64) -> Result<BesselValue> {
    check_range(n, x)?;
    let value = bessel_i_series(n, x);
    let derivative = if n == 0 {
        bessel_i_series(1, x)
    } else {
        0.5 * (bessel_i_series(n - 1, x) + bessel_i_series(n + 1, x))
    };
    Ok(BesselValue {
        order: n,
        argument: x,
        value,
        derivative,
    })
}

/// m-th positive zero of J_n by a 0.1-step sign scan followed by bisection to
/// 1e-10. The scan starts just above n since the first zero exceeds the order.
pub fn bessel_zero(n: u32, m: u32) -> Result<f64> {
    if n > BESSEL_MAX_ORDER || m == 0 || m > 10 {
        return Err(SpectralError::UnsupportedArgument(format!(
            "bessel_zero supports n <= {BESSEL_MAX_ORDER}, 1 <= m <= 10; got ({n}, {m})"
        )));
    }
    let step = 0.1;
    let mut x = (n as f64).max(step);
    let mut fx = bessel_j_value(n, x);
    let mut found = 0u32;
    while x + step <= BESSEL_MAX_X {
        let x_next = x + step;
        let f_next = bessel_j_value(n, x_next);
        if fx == 0.0 {
            found += 1;
            if found == m {
                return Ok(x);
            }
        } else if fx.signum() != f_next.signum() {
            found += 1;
            if found == m {
                let (mut lo, mut hi) = (x, x_next);
                let mut flo = fx;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = bessel_j_value(n, mid);
                    if fm == 0.0 {
                        return Ok(mid);
                    }
                    if flo.signum() != fm.signum() {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                    if hi - lo < 1e-10 {
                        break;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
        }
        x = x_next;
        fx = f_next;
    }
    Err(SpectralError::ScanBoundExceeded { order: n, index: m })
}

/// Branch values of the unit-disk Dirichlet-to-Neumann spectrum at `lambda = 0`
/// for the constant potential `q = -mu`:
///   mu > 0: sigma_n = sqrt(mu) J_n'(sqrt(mu)) / J_n(sqrt(mu))
///   mu = 0: sigma_n = n
///   mu < 0: sigma_n = sqrt(-mu) I_n'(sqrt(-mu)) / I_n(sqrt(-mu))
/// Each n >= 1 branch is emitted twice so the sorted output aligns
/// index-by-index with a discrete spectrum counted with multiplicity. At most
/// `count` leading values are returned. Branches whose sqrt(mu) sits within
/// 1e-9 of a zero of J_n are excluded and reported as resonant.
pub fn disk_dtn_spectrum(mu: f64, n_max: u32, count: usize) -> Result<DiskDtnSpectrum> {
    let mut branches = Vec::new();
    let mut resonant = Vec::new();
    for n in 0..=n_max {
        let sigma = if mu == 0.0 {
            n as f64
        } else if mu > 0.0 {
            let s = mu.sqrt();
            if near_bessel_zero(n, s)? {
                resonant.push(n);
                continue;
            }
            let bv = bessel_j(n, s)?;
            s * bv.derivative / bv.value
        } else {
            let s = (-mu).sqrt();
            let bv = bessel_i(n, s)?;
            s * bv.derivative / bv.value
        };
        let mult = if n == 0 { 1 } else { 2 };
        for _ in 0..mult {
            branches.push(DiskDtnBranch { n, mu, sigma });
        }
    }
    branches.sort_by(|a, b| a.sigma.partial_cmp(&b.sigma).unwrap());
    branches.truncate(count);
    Ok(DiskDtnSpectrum {
        branches,
        resonant_orders: resonant,
    })
}

fn near_bessel_zero(n: u32, s: f64) -> Result<bool> {
    for m in 1..=10 {
        match bessel_zero(n, m) {
            Ok(z) => {
                if (z - s).abs() < 1e-9 {
                    return Ok(true);
                }
                if z > s + 1.0 {
                    break;
                }
            }
            Err(SpectralError::ScanBoundExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(false)
}

/// Nodal-count bound for the flat product cylinder over the unit circle:
/// twice the nodal count of the ceil(k/2)-th circle eigenfunction. The m-th
/// nontrivial pair cos/sin(m theta) has 2m nodal domains, the constant has 1.
pub fn cylinder_spectrum_bound(k: usize) -> usize {
    assert!(k >= 1, "eigenvalue indices are 1-based");
    let k_bar = k.div_ceil(2);
    let circle_count = if k_bar == 1 { 1 } else { 2 * (k_bar / 2) };
    2 * circle_count
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent high-precision check values: direct factorial summation,
    // accumulated smallest-term-first.
    fn series_reference(n: u32, x: f64, terms: usize) -> f64 {
        let mut vals = Vec::with_capacity(terms);
        for m in 0..terms {
            let mut t = 1.0f64;
            for k in 1..=m {
                t /= k as f64;
            }
            for k in 1..=(m as u32 + n) {
                t /= k as f64;
            }
            t *= (0.5 * x).powi(2 * m as i32 + n as i32);
            if m % 2 == 1 {
                t = -t;
            }
            vals.push(t);
        }
        vals.iter().rev().sum()
    }

    #[test]
    fn series_values_at_zero_and_one() {
        assert_eq!(bessel_j(0, 0.0).unwrap().value, 1.0);
        for n in 1..=8 {
            assert_eq!(bessel_j(n, 0.0).unwrap().value, 0.0);
        }
        let j0 = bessel_j(0, 1.0).unwrap().value;
        let j1 = bessel_j(1, 1.0).unwrap().value;
        assert!((j0 - series_reference(0, 1.0, 30)).abs() < 1e-15);
        assert!((j1 - series_reference(1, 1.0, 30)).abs() < 1e-15);
        assert!((j0 - 0.7651976865579666).abs() < 1e-9);
        assert!((j1 - 0.4400505857449335).abs() < 1e-9);
    }

    #[test]
    fn miller_agrees_with_series_at_crossover() {
        // Both routes are valid near x = 12; they must agree tightly.
        for n in 0..=6u32 {
            let miller = bessel_j_miller(n, 12.5)[n as usize];
            let series = bessel_j_series(n, 12.5);
            assert!(
                (miller - series).abs() < 1e-9,
                "n = {n}: {miller} vs {series}"
            );
        }
    }

    #[test]
    fn three_term_recurrence_consistency() {
        // J_{n-1}(x) + J_{n+1}(x) = (2n/x) J_n(x) across the working range.
        let mut x = 0.5;
        while x <= 20.0 {
            for n in 1..=12u32 {
                let jm = bessel_j(n - 1, x).unwrap().value;
                let j = bessel_j(n, x).unwrap().value;
                let jp = bessel_j(n + 1, x).unwrap().value;
                let lhs = jm + jp;
                let rhs = 2.0 * n as f64 / x * j;
                assert!(
                    (lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()),
                    "recurrence off at n = {n}, x = {x}: {lhs} vs {rhs}"
                );
            }
            x += 0.7;
        }
    }

    #[test]
    fn known_zeros() {
        assert!((bessel_zero(0, 1).unwrap() - 2.404825557695773).abs() < 1e-9);
        assert!((bessel_zero(1, 1).unwrap() - 3.831705970207512).abs() < 1e-9);
        assert!((bessel_zero(2, 1).unwrap() - 5.135622301840683).abs() < 1e-9);
        assert!((bessel_zero(0, 2).unwrap() - 5.520078110286311).abs() < 1e-9);
        assert!((bessel_zero(3, 1).unwrap() - 6.380161895923984).abs() < 1e-9);
        assert!((bessel_zero(4, 1).unwrap() - 7.588342434503804).abs() < 1e-9);
    }

    #[test]
    fn first_zero_exceeds_order() {
        for n in 0..=12u32 {
            assert!(bessel_zero(n, 1).unwrap() > n as f64);
        }
    }

    #[test]
    fn zero_of_j_vanishes() {
        for (n, m) in [(0u32, 1u32), (1, 1), (3, 1), (0, 3), (2, 2)] {
            let z = bessel_zero(n, m).unwrap();
            assert!(bessel_j(n, z).unwrap().value.abs() < 1e-9);
        }
    }

    #[test]
    fn disk_spectrum_limits() {
        let spec = disk_dtn_spectrum(0.0, 3, 7).unwrap();
        let got: Vec<f64> = spec.branches.iter().map(|b| b.sigma).collect();
        assert_eq!(got, vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(spec.resonant_orders.is_empty());
    }

    #[test]
    fn disk_spectrum_mu_one_ground_state() {
        let spec = disk_dtn_spectrum(1.0, 4, 9).unwrap();
        let j0 = bessel_j(0, 1.0).unwrap();
        let expected = 1.0 * j0.derivative / j0.value; // = -J_1(1)/J_0(1)
        assert!((spec.branches[0].sigma - expected).abs() < 1e-14);
        assert_eq!(spec.branches[0].n, 0);
        assert!((expected + 0.5750809150).abs() < 1e-9);
    }

    #[test]
    fn disk_spectrum_diverging_branch() {
        let j31 = bessel_zero(3, 1).unwrap();
        let mu = j31 * j31 - 0.1;
        let spec = disk_dtn_spectrum(mu, 6, 16).unwrap();
        assert_eq!(spec.branches[0].n, 3);
        assert_eq!(spec.branches[1].n, 3);
        assert!(spec.branches[0].sigma < -10.0);
        assert!((spec.branches[0].sigma - spec.branches[1].sigma).abs() < 1e-12);
    }

    #[test]
    fn resonant_branch_is_excluded() {
        let j01 = bessel_zero(0, 1).unwrap();
        let spec = disk_dtn_spectrum(j01 * j01, 3, 10).unwrap();
        assert_eq!(spec.resonant_orders, vec![0]);
        assert!(spec.branches.iter().all(|b| b.n != 0));
    }

    #[test]
    fn branch_decreasing_in_mu_between_zeros() {
        // On an interval free of J_n zeros, sigma_n decreases in mu.
        for n in 0..=3u32 {
            let z1 = bessel_zero(n, 1).unwrap();
            let lo = 0.2 * z1 * z1;
            let hi = 0.9 * z1 * z1;
            let mut prev = f64::INFINITY;
            for s in 0..=10 {
                let mu = lo + (hi - lo) * s as f64 / 10.0;
                let b = disk_dtn_spectrum(mu, n, usize::MAX).unwrap();
                let sigma_n = b.branches.iter().find(|x| x.n == n).unwrap().sigma;
                assert!(sigma_n < prev, "branch {n} not decreasing at mu = {mu}");
                prev = sigma_n;
            }
        }
    }

    #[test]
    fn modified_branch_exceeds_order() {
        // Positive constant potential pushes every branch above its order.
        for n in 0..=4u32 {
            for &mu in &[-0.5, -2.0, -10.0] {
                let b = disk_dtn_spectrum(mu, n, usize::MAX).unwrap();
                let sigma_n = b.branches.iter().find(|x| x.n == n).unwrap().sigma;
                assert!(sigma_n > n as f64, "n = {n}, mu = {mu}, sigma = {sigma_n}");
            }
        }
    }

    #[test]
    fn cylinder_bounds() {
        assert_eq!(cylinder_spectrum_bound(1), 2);
        assert_eq!(cylinder_spectrum_bound(2), 2);
        assert_eq!(cylinder_spectrum_bound(5), 4);
        assert_eq!(cylinder_spectrum_bound(6), 4);
        assert_eq!(cylinder_spectrum_bound(9), 8);
    }

    #[test]
    fn out_of_range_arguments_error() {
        assert!(bessel_j(31, 1.0).is_err());
        assert!(bessel_j(0, 61.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
        assert!(bessel_zero(0, 0).is_err());
    }
}
