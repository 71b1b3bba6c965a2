//! Dense and banded linear algebra kernels used by the spectral solvers.
//!
//! Everything is desk-scale by design: dense symmetric eigensolves go through
//! Householder tridiagonalization followed by the implicit-shift QL sweep
//! (the classical EISPACK/JAMA route), generalized pencils are reduced with a
//! Cholesky factor of the mass matrix, and the larger shifted interior solves
//! use a banded LDL^T factorization that doubles as an inertia counter.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Cholesky hit a non-positive pivot; the matrix is not positive definite.
    NotPositiveDefinite {
        pivot_index: usize,
    },
    /// An LU or LDL^T pivot fell below the breakdown threshold.
    SingularPivot {
        pivot_index: usize,
    },
    /// The QL iteration failed to deflate an eigenvalue.
    NoConvergence {
        eigen_index: usize,
    },
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotPositiveDefinite { pivot_index } => {
                write!(f, "matrix not positive definite (pivot {pivot_index})")
            }
            LinalgError::SingularPivot { pivot_index } => {
                write!(f, "near-singular pivot at index {pivot_index}")
            }
            LinalgError::NoConvergence { eigen_index } => {
                write!(
                    f,
                    "QL iteration did not converge for eigenvalue {eigen_index}"
                )
            }
            LinalgError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
        }
    }
}

impl std::error::Error for LinalgError {}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DenseMatrix({}x{})", self.nrows, self.ncols)
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        for (i, &v) in col.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let row = self.row(i);
            let mut s = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                s += a * b;
            }
            y[i] = s;
        }
        y
    }

    /// Largest deviation from symmetry, for sanity checks.
    pub fn asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.nrows {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.nrows {
            for j in 0..i {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }
}

/// Result of a symmetric eigensolve: values ascending, eigenvectors (when
/// requested) stored as columns aligned with `values`.
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Option<DenseMatrix>,
}

/// Symmetric eigendecomposition via Householder tridiagonalization (tred2)
/// and the implicit-shift QL sweep (tql2). Eigenvalues are returned in
/// ascending order.
pub fn sym_eigen(a: &DenseMatrix, want_vectors: bool) -> Result<SymEigen, LinalgError> {
    assert_eq!(a.nrows, a.ncols, "sym_eigen needs a square matrix");
    let n = a.nrows;
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: Some(DenseMatrix::zeros(0, 0)),
        });
    }
    let mut v = a.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(
        n,
        &mut d,
        &mut e,
        if want_vectors { Some(&mut v) } else { None },
    )?;

    // Ascending sort; permute eigenvector columns alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = if want_vectors {
        let mut vm = DenseMatrix::zeros(n, n);
        for (newcol, &oldcol) in order.iter().enumerate() {
            for r in 0..n {
                vm.set(r, newcol, v[r * n + oldcol]);
            }
        }
        Some(vm)
    } else {
        None
    };
    Ok(SymEigen { values, vectors })
}

// Householder reduction to tridiagonal form, after the Algol procedure tred2
// (Bowdler, Martin, Reinsch, Wilkinson) as in EISPACK/JAMA. `v` enters as the
// symmetric matrix and leaves as the accumulated orthogonal transform; the
// tridiagonal diagonal ends in `d`, the subdiagonal in `e[1..]`.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        // Scale to avoid under/overflow.
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            // Generate Householder vector.
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }

            // Apply similarity transformation to remaining columns.
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + (i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + (i + 1)] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + (i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit-shift QL iteration on a symmetric tridiagonal matrix, after the
// Algol procedure tql2. Rotations are accumulated into `v` when provided.
fn tql2(
    n: usize,
    d: &mut [f64],
    e: &mut [f64],
    mut v: Option<&mut [f64]>,
) -> Result<(), LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(LinalgError::NoConvergence { eigen_index: l });
                }

                // Compute implicit shift.
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in (l + 2)..n {
                    d[i] -= h;
                }
                f += h;

                // Implicit QL transformation.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if let Some(vm) = v.as_deref_mut() {
                        for k in 0..n {
                            h = vm[k * n + (i + 1)];
                            vm[k * n + (i + 1)] = s * vm[k * n + i] + c * h;
                            vm[k * n + i] = c * vm[k * n + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    assert_eq!(a.nrows, a.ncols);
    let n = a.nrows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            let v = l.get(j, k);
            diag -= v * v;
        }
        if diag <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite { pivot_index: j });
        }
        let dj = diag.sqrt();
        l.set(j, j, dj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / dj);
        }
    }
    Ok(l)
}

/// Solve L y = b in place (L lower triangular).
pub fn solve_lower(l: &DenseMatrix, b: &mut [f64]) {
    let n = l.nrows;
    for i in 0..n {
        let mut s = b[i];
        let row = l.row(i);
        for k in 0..i {
            s -= row[k] * b[k];
        }
        b[i] = s / row[i];
    }
}

/// Solve L^T x = b in place (L lower triangular).
pub fn solve_lower_transposed(l: &DenseMatrix, b: &mut [f64]) {
    let n = l.nrows;
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}

/// Generalized symmetric eigenproblem A x = lambda M x with M positive
/// definite, reduced through M = L L^T to a standard symmetric problem.
/// Returned eigenvectors are M-orthonormal, values ascending.
pub fn generalized_sym_eigen(
    a: &DenseMatrix,
    m: &DenseMatrix,
    want_vectors: bool,
) -> Result<SymEigen, LinalgError> {
    assert_eq!(a.nrows, a.ncols);
    if m.nrows != a.nrows {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows,
            got: m.nrows,
        });
    }
    let n = a.nrows;
    let l = cholesky(m)?;

    // C = L^-1 A L^-T, built column by column.
    let mut c = DenseMatrix::zeros(n, n);
    let mut work = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            work[i] = a.get(i, j);
        }
        solve_lower(&l, &mut work);
        c.set_column(j, &work);
    }
    // Now c = L^-1 A; apply L^-1 from the right via transposition.
    let mut ct = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            work[i] = c.get(j, i);
        }
        solve_lower(&l, &mut work);
        ct.set_column(j, &work);
    }
    // ct = L^-1 (L^-1 A)^T is symmetric up to roundoff.
    ct.symmetrize();

    let eig = sym_eigen(&ct, want_vectors)?;
    let vectors = match eig.vectors {
        Some(y) if want_vectors => {
            let mut x = DenseMatrix::zeros(n, n);
            for j in 0..n {
                let mut col = y.column(j);
                solve_lower_transposed(&l, &mut col);
                x.set_column(j, &col);
            }
            Some(x)
        }
        other => other,
    };
    Ok(SymEigen {
        values: eig.values,
        vectors,
    })
}

/// Dense LU factorization with partial pivoting.
pub struct LuFactor {
    n: usize,
    lu: DenseMatrix,
    piv: Vec<usize>,
}

pub fn lu_factor(a: DenseMatrix) -> Result<LuFactor, LinalgError> {
    assert_eq!(a.nrows, a.ncols);
    let n = a.nrows;
    let mut lu = a;
    let mut piv: Vec<usize> = (0..n).collect();
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(lu.get(i, j).abs());
        }
    }
    let tiny = scale.max(f64::MIN_POSITIVE) * 1e-14 * f64::EPSILON.sqrt();
    for k in 0..n {
        // Pivot search.
        let mut p = k;
        let mut pmax = lu.get(k, k).abs();
        for i in (k + 1)..n {
            let v = lu.get(i, k).abs();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax <= tiny {
            return Err(LinalgError::SingularPivot { pivot_index: k });
        }
        if p != k {
            for j in 0..n {
                let a = lu.get(k, j);
                let b = lu.get(p, j);
                lu.set(k, j, b);
                lu.set(p, j, a);
            }
            piv.swap(k, p);
        }
        let pivot = lu.get(k, k);
        for i in (k + 1)..n {
            let factor = lu.get(i, k) / pivot;
            lu.set(i, k, factor);
            if factor != 0.0 {
                for j in (k + 1)..n {
                    let v = lu.get(k, j);
                    lu.add_to(i, j, -factor * v);
                }
            }
        }
    }
    Ok(LuFactor { n, lu, piv })
}

impl LuFactor {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Apply the permutation.
        let permuted: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        // Forward substitution with unit lower part.
        for i in 1..n {
            let mut s = b[i];
            let row = self.lu.row(i);
            for k in 0..i {
                s -= row[k] * b[k];
            }
            b[i] = s;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut s = b[i];
            let row = self.lu.row(i);
            for k in (i + 1)..n {
                s -= row[k] * b[k];
            }
            b[i] = s / row[i];
        }
    }
}

/// Symmetric banded matrix, lower storage: `ab[j*(hb+1)+d]` holds `A[j+d][j]`.
#[derive(Clone)]
pub struct BandedSym {
    pub n: usize,
    pub half_bandwidth: usize,
    ab: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        BandedSym {
            n,
            half_bandwidth,
            ab: vec![0.0; n * (half_bandwidth + 1)],
        }
    }

    /// Add to entry (i, j) of the lower triangle (i >= j).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j && i - j <= self.half_bandwidth);
        self.ab[j * (self.half_bandwidth + 1) + (i - j)] += v;
    }

    #[inline]
    fn get(&self, j: usize, d: usize) -> f64 {
        self.ab[j * (self.half_bandwidth + 1) + d]
    }
}

/// LDL^T factorization of a banded symmetric matrix (no pivoting). Suitable
/// for shifted stiffness matrices; reports inertia through the pivot signs.
pub struct BandedLdlt {
    n: usize,
    hb: usize,
    // l[j*(hb)+d-1] = L[j+d][j] for d = 1..=hb
    l: Vec<f64>,
    d: Vec<f64>,
}

pub fn banded_ldlt(a: &BandedSym) -> Result<BandedLdlt, LinalgError> {
    let n = a.n;
    let hb = a.half_bandwidth;
    let mut l = vec![0.0; n * hb];
    let mut d = vec![0.0; n];
    let mut scale = 0.0f64;
    for j in 0..n {
        scale = scale.max(a.get(j, 0).abs());
    }
    let breakdown = scale.max(f64::MIN_POSITIVE) * 1e-13;

    for j in 0..n {
        let mut dj = a.get(j, 0);
        let kmin = j.saturating_sub(hb);
        for k in kmin..j {
            let ljk = l[k * hb + (j - k - 1)];
            dj -= ljk * ljk * d[k];
        }
        if dj.abs() <= breakdown {
            return Err(LinalgError::SingularPivot { pivot_index: j });
        }
        d[j] = dj;
        let imax = (j + hb).min(n - 1);
        for i in (j + 1)..=imax {
            let mut s = a.get(j, i - j);
            let kmin_i = i.saturating_sub(hb);
            for k in kmin_i.max(kmin)..j {
                // both L[i][k] and L[j][k] must be in band
                if i - k <= hb {
                    s -= l[k * hb + (i - k - 1)] * l[k * hb + (j - k - 1)] * d[k];
                }
            }
            l[j * hb + (i - j - 1)] = s / dj;
        }
    }
    Ok(BandedLdlt { n, hb, l, d })
}

impl BandedLdlt {
    pub fn inertia_negative(&self) -> usize {
        self.d.iter().filter(|&&p| p < 0.0).count()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let hb = self.hb;
        assert_eq!(b.len(), n);
        // Forward: L y = b (unit diagonal).
        for j in 0..n {
            let yj = b[j];
            if yj != 0.0 {
                let imax = (j + hb).min(n - 1);
                for i in (j + 1)..=imax {
                    b[i] -= self.l[j * hb + (i - j - 1)] * yj;
                }
            }
        }
        // Diagonal.
        for j in 0..n {
            b[j] /= self.d[j];
        }
        // Back: L^T x = y.
        for j in (0..n).rev() {
            let imax = (j + hb).min(n - 1);
            let mut s = b[j];
            for i in (j + 1)..=imax {
                s -= self.l[j * hb + (i - j - 1)] * b[i];
            }
            b[j] = s;
        }
    }
}

/// Small deterministic xorshift generator for iteration seeds.
pub struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        XorShift64 { state: seed.max(1) }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.state = x;
        x
    }

    /// Uniform in [-1, 1).
    pub fn next_symmetric(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}
