//! Dirichlet, Robin, and Steklov eigensolvers over the assembled form
//! matrices.
//!
//! Dirichlet and Robin problems go through a dense generalized symmetric
//! solve. The Steklov problem is reduced to the boundary through the Schur
//! complement S = A_bb - A_bi A_ii^-1 A_ib of the shifted operator
//! A = K + Mq - lambda M, factored with the banded LDL^T so that fine meshes
//! stay cheap. When lambda lands on the discrete Dirichlet spectrum the
//! solver deflates: it restricts the boundary pencil to the complement of the
//! kernel traces and solves the interior systems through a rank-corrected
//! operator that is exact on the constraint subspace.

use crate::assembly::{robin_form, shifted_operator, FormMatrices, SymSparse};
use crate::error::{Result, SpectralError};
use crate::linalg::{
    banded_ldlt, generalized_sym_eigen, lu_factor, sym_eigen, BandedLdlt, DenseMatrix, XorShift64,
};

/// Size cap for dense eigensolves; the Schur route has no such cap.
pub const DENSE_EIGEN_CAP: usize = 3200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumKind {
    Dirichlet,
    Robin { sigma: f64 },
    Steklov { lambda: f64 },
}

/// An ordered batch of eigenpairs.
///
/// For `Dirichlet` and `Robin` the vectors live on all mesh vertices
/// (Dirichlet modes carry zeros on the boundary) and are M-orthonormal. For
/// `Steklov` the vectors are the boundary densities phi_k indexed by boundary
/// position, Bb-orthonormal, and `extensions` holds the full-mesh interior
/// extensions u_k.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub kind: SpectrumKind,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub extensions: Option<Vec<Vec<f64>>>,
}

impl Spectrum {
    /// JSON export: `{kind, parameter, values[], vectors?}`.
    pub fn to_json(&self, include_vectors: bool) -> String {
        let (kind, parameter) = match self.kind {
            SpectrumKind::Dirichlet => ("dirichlet", None),
            SpectrumKind::Robin { sigma } => ("robin", Some(sigma)),
            SpectrumKind::Steklov { lambda } => ("steklov", Some(lambda)),
        };
        let mut out = String::from("{");
        out.push_str(&format!("\"kind\":\"{kind}\","));
        match parameter {
            Some(p) => out.push_str(&format!("\"parameter\":{p},")),
            None => out.push_str("\"parameter\":null,"),
        }
        out.push_str("\"values\":[");
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
        }
        out.push(']');
        if include_vectors {
            out.push_str(",\"vectors\":[");
            for (i, vec) in self.vectors.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('[');
                for (j, c) in vec.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    out.push_str(&format!("{c}"));
                }
                out.push(']');
            }
            out.push(']');
        }
        out.push('}');
        out
    }
}

fn position_map(n: usize, idx: &[usize]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (p, &g) in idx.iter().enumerate() {
        pos[g] = p;
    }
    pos
}

/// y = A[idx, idx] x for a vector on the subindex set.
fn sub_matvec(a: &SymSparse, idx: &[usize], pos: &[usize], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; idx.len()];
    for (r, &g) in idx.iter().enumerate() {
        let mut s = 0.0;
        for &(j, v) in a.row(g) {
            let p = pos[j];
            if p != usize::MAX {
                s += v * x[p];
            }
        }
        y[r] = s;
    }
    y
}

fn embed(n: usize, idx: &[usize], x: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; n];
    for (p, &g) in idx.iter().enumerate() {
        full[g] = x[p];
    }
    full
}

fn check_count(requested: usize, available: usize) -> Result<()> {
    if requested > available {
        Err(SpectralError::CountTooLarge {
            requested,
            available,
        })
    } else {
        Ok(())
    }
}

fn check_dense(size: usize) -> Result<()> {
    if size > DENSE_EIGEN_CAP {
        Err(SpectralError::DenseProblemTooLarge {
            size,
            cap: DENSE_EIGEN_CAP,
        })
    } else {
        Ok(())
    }
}

/// First `count` eigenpairs of the Dirichlet pencil ((K+Mq)_ii, M_ii);
/// vectors come back embedded on all vertices with zero boundary values.
pub fn dirichlet_spectrum(fm: &FormMatrices, count: usize) -> Result<Spectrum> {
    let ni = fm.interior.len();
    check_count(count, ni)?;
    check_dense(ni)?;
    let op = shifted_operator(fm, 0.0);
    let a = op.to_dense(&fm.interior, &fm.interior);
    let m = fm.mass.to_dense(&fm.interior, &fm.interior);
    let eig = generalized_sym_eigen(&a, &m, true)?;
    let vecs = eig.vectors.unwrap();
    let vectors: Vec<Vec<f64>> = (0..count)
        .map(|k| embed(fm.n, &fm.interior, &vecs.column(k)))
        .collect();
    Ok(Spectrum {
        kind: SpectrumKind::Dirichlet,
        values: eig.values[..count].to_vec(),
        vectors,
        extensions: None,
    })
}

/// Eigenvalue-only variant of [`dirichlet_spectrum`].
pub fn dirichlet_values(fm: &FormMatrices, count: usize) -> Result<Vec<f64>> {
    let ni = fm.interior.len();
    check_count(count, ni)?;
    check_dense(ni)?;
    let op = shifted_operator(fm, 0.0);
    let a = op.to_dense(&fm.interior, &fm.interior);
    let m = fm.mass.to_dense(&fm.interior, &fm.interior);
    let eig = generalized_sym_eigen(&a, &m, false)?;
    Ok(eig.values[..count].to_vec())
}

/// First `count` Robin eigenpairs of the pencil (K+Mq-sigma Bb, M).
pub fn robin_spectrum(fm: &FormMatrices, sigma: f64, count: usize) -> Result<Spectrum> {
    check_count(count, fm.n)?;
    check_dense(fm.n)?;
    let all: Vec<usize> = (0..fm.n).collect();
    let pencil = robin_form(fm, sigma, 0.0);
    let a = pencil.a.to_dense(&all, &all);
    let m = pencil.m.to_dense(&all, &all);
    let eig = generalized_sym_eigen(&a, &m, true)?;
    let vecs = eig.vectors.unwrap();
    Ok(Spectrum {
        kind: SpectrumKind::Robin { sigma },
        values: eig.values[..count].to_vec(),
        vectors: (0..count).map(|k| vecs.column(k)).collect(),
        extensions: None,
    })
}

/// Eigenvalue-only variant of [`robin_spectrum`].
pub fn robin_values(fm: &FormMatrices, sigma: f64, count: usize) -> Result<Vec<f64>> {
    check_count(count, fm.n)?;
    check_dense(fm.n)?;
    let all: Vec<usize> = (0..fm.n).collect();
    let pencil = robin_form(fm, sigma, 0.0);
    let a = pencil.a.to_dense(&all, &all);
    let m = pencil.m.to_dense(&all, &all);
    Ok(generalized_sym_eigen(&a, &m, false)?.values[..count].to_vec())
}

/// Number of Robin eigenvalues of (K+Mq-sigma Bb, M) strictly below `lambda`,
/// counted through the inertia of the banded LDL^T (Sylvester's law). Retries
/// with a relative nudge of `lambda` when a pivot degenerates.
pub fn robin_count_below(fm: &FormMatrices, sigma: f64, lambda: f64) -> Result<usize> {
    let all: Vec<usize> = (0..fm.n).collect();
    let pencil = robin_form(fm, sigma, lambda);
    inertia_with_retry(&pencil.a, &fm.mass, lambda, &all)
}

/// Number of Dirichlet eigenvalues strictly below `lambda` on the interior
/// block, by banded inertia.
pub fn dirichlet_count_below(fm: &FormMatrices, lambda: f64) -> Result<usize> {
    let op = shifted_operator(fm, lambda);
    inertia_with_retry(&op, &fm.mass, lambda, &fm.interior)
}

fn inertia_with_retry(a: &SymSparse, m: &SymSparse, lambda: f64, idx: &[usize]) -> Result<usize> {
    let mut nudge = 0.0;
    for attempt in 0..6 {
        let shifted = if nudge == 0.0 {
            a.to_banded(idx)
        } else {
            SymSparse::combine(&[(1.0, a), (-nudge, m)]).to_banded(idx)
        };
        match banded_ldlt(&shifted) {
            Ok(f) => return Ok(f.inertia_negative()),
            Err(_) if attempt < 5 => {
                nudge = (1.0 + lambda.abs()) * 1e-11 * 10f64.powi(attempt);
            }
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, Copy)]
pub struct SteklovOptions {
    /// Deflate the kernel traces when lambda sits on the discrete Dirichlet
    /// spectrum; with `false` a resonant lambda is an error.
    pub deflate: bool,
    /// Resonance-detection tolerance; defaults to 1e-6 (1 + |lambda|).
    pub dirichlet_tol: Option<f64>,
}

impl Default for SteklovOptions {
    fn default() -> Self {
        SteklovOptions {
            deflate: true,
            dirichlet_tol: None,
        }
    }
}

/// First `count` Steklov eigenpairs of the boundary pencil (S, Bb) at shift
/// `lambda`, via the Schur complement of the interior block.
pub fn steklov_spectrum(fm: &FormMatrices, lambda: f64, count: usize) -> Result<Spectrum> {
    steklov_spectrum_with(fm, lambda, count, &SteklovOptions::default())
}

struct InteriorSolver {
    banded: Option<BandedLdlt>,
    dense: Option<crate::linalg::LuFactor>,
}

impl InteriorSolver {
    fn solve_in_place(&self, x: &mut [f64]) {
        if let Some(f) = &self.banded {
            f.solve_in_place(x);
        } else {
            self.dense.as_ref().unwrap().solve_in_place(x);
        }
    }
}

fn factor_interior(op: &SymSparse, interior: &[usize]) -> Result<InteriorSolver> {
    let banded = op.to_banded(interior);
    match banded_ldlt(&banded) {
        Ok(f) => Ok(InteriorSolver {
            banded: Some(f),
            dense: None,
        }),
        Err(_) => {
            check_dense(interior.len())?;
            let dense = op.to_dense(interior, interior);
            let f = lu_factor(dense)?;
            Ok(InteriorSolver {
                banded: None,
                dense: Some(f),
            })
        }
    }
}

pub fn steklov_spectrum_with(
    fm: &FormMatrices,
    lambda: f64,
    count: usize,
    opts: &SteklovOptions,
) -> Result<Spectrum> {
    let nb = fm.boundary.len();
    let ni = fm.interior.len();
    check_count(count, nb)?;
    let tol = opts.dirichlet_tol.unwrap_or(1e-6 * (1.0 + lambda.abs()));

    // Resonance probe: an eigenvalue inside (lambda - tol, lambda + tol)
    // shows up as an inertia difference between the two shifts.
    let below = dirichlet_count_below(fm, lambda - tol)?;
    let above = dirichlet_count_below(fm, lambda + tol)?;
    let resonant = above > below;

    if resonant {
        if !opts.deflate {
            return Err(SpectralError::DirichletResonance { lambda });
        }
        return steklov_deflated(fm, lambda, count, tol, above - below);
    }

    let op = shifted_operator(fm, lambda);
    let solver = factor_interior(&op, &fm.interior)?;
    let ipos = position_map(fm.n, &fm.interior);

    // X = A_ii^-1 A_ib, one column per boundary vertex.
    let mut x_cols: Vec<Vec<f64>> = Vec::with_capacity(nb);
    for &g in &fm.boundary {
        let mut col = vec![0.0; ni];
        for &(j, v) in op.row(g) {
            let p = ipos[j];
            if p != usize::MAX {
                col[p] = v;
            }
        }
        solver.solve_in_place(&mut col);
        x_cols.push(col);
    }

    // S = A_bb - A_bi X.
    let mut s = op.to_dense(&fm.boundary, &fm.boundary);
    for (r, &g) in fm.boundary.iter().enumerate() {
        for &(j, v) in op.row(g) {
            let p = ipos[j];
            if p != usize::MAX {
                for c in 0..nb {
                    s.add_to(r, c, -v * x_cols[c][p]);
                }
            }
        }
    }
    s.symmetrize();

    let bb = fm.boundary_mass.to_dense(&fm.boundary, &fm.boundary);
    let eig = generalized_sym_eigen(&s, &bb, true)?;
    let vecs = eig.vectors.unwrap();

    let mut vectors = Vec::with_capacity(count);
    let mut extensions = Vec::with_capacity(count);
    for k in 0..count {
        let phi = vecs.column(k);
        let mut u = embed(fm.n, &fm.boundary, &phi);
        for (c, &pc) in phi.iter().enumerate() {
            if pc != 0.0 {
                for (p, &g) in fm.interior.iter().enumerate() {
                    u[g] -= pc * x_cols[c][p];
                }
            }
        }
        vectors.push(phi);
        extensions.push(u);
    }

    Ok(Spectrum {
        kind: SpectrumKind::Steklov { lambda },
        values: eig.values[..count].to_vec(),
        vectors,
        extensions: Some(extensions),
    })
}

// Resonant path: restrict the boundary pencil to the Bb-orthogonal
// complement of the kernel traces and solve the interior systems through
// A_reg = A_ii + beta sum (M w_j)(M w_j)^T, which inverts the consistent
// systems exactly on the constraint subspace.
fn steklov_deflated(
    fm: &FormMatrices,
    lambda: f64,
    count: usize,
    tol: f64,
    kernel_hint: usize,
) -> Result<Spectrum> {
    let nb = fm.boundary.len();
    let ni = fm.interior.len();
    check_dense(ni)?;
    let ipos = position_map(fm.n, &fm.interior);

    // Kernel vectors of the interior pencil at lambda.
    let near = dirichlet_eigen_near(fm, lambda, kernel_hint + 2)?;
    let kernel: Vec<&(f64, Vec<f64>)> = near
        .iter()
        .filter(|(val, _)| (val - lambda).abs() <= tol)
        .collect();
    if kernel.is_empty() {
        // Inertia said resonant but the iteration found nothing closer than
        // tol; treat as a hard resonance failure.
        return Err(SpectralError::DirichletResonance { lambda });
    }

    let op = shifted_operator(fm, lambda);
    let bb = fm.boundary_mass.to_dense(&fm.boundary, &fm.boundary);

    // Traces t_j = A_bi w_j, Bb-orthonormalized.
    let bpos = position_map(fm.n, &fm.boundary);
    let mut traces: Vec<Vec<f64>> = Vec::new();
    for (_, w_full) in kernel.iter() {
        let mut t = vec![0.0; nb];
        for (r, &g) in fm.boundary.iter().enumerate() {
            let mut s = 0.0;
            for &(j, v) in op.row(g) {
                s += v * w_full[j];
            }
            t[r] = s;
        }
        // Bb-orthogonalize against the accepted traces.
        for prev in &traces {
            let c = bb_dot(&bb, prev, &t);
            for i in 0..nb {
                t[i] -= c * prev[i];
            }
        }
        let norm = bb_dot(&bb, &t, &t).sqrt();
        if norm > 1e-10 {
            for v in t.iter_mut() {
                *v /= norm;
            }
            traces.push(t);
        }
    }
    let m_defl = traces.len();
    check_count(count, nb - m_defl)?;

    // Bb-orthonormal basis of the complement, by projecting unit columns.
    let mut q_cols: Vec<Vec<f64>> = Vec::with_capacity(nb - m_defl);
    for cand in 0..nb {
        if q_cols.len() == nb - m_defl {
            break;
        }
        let mut v = vec![0.0; nb];
        v[cand] = 1.0;
        for _ in 0..2 {
            for t in &traces {
                let c = bb_dot(&bb, t, &v);
                for i in 0..nb {
                    v[i] -= c * t[i];
                }
            }
            for q in &q_cols {
                let c = bb_dot(&bb, q, &v);
                for i in 0..nb {
                    v[i] -= c * q[i];
                }
            }
        }
        let norm = bb_dot(&bb, &v, &v).sqrt();
        if norm > 1e-8 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            q_cols.push(v);
        }
    }
    if q_cols.len() < count {
        return Err(SpectralError::CountTooLarge {
            requested: count,
            available: q_cols.len(),
        });
    }
    let nq = q_cols.len();

    // Rank-corrected interior operator.
    let mut a_reg = op.to_dense(&fm.interior, &fm.interior);
    let mut beta = 1.0 + lambda.abs();
    for i in 0..ni {
        beta = beta.max(a_reg.get(i, i).abs());
    }
    let g_vecs: Vec<Vec<f64>> = kernel
        .iter()
        .map(|(_, w_full)| {
            let w_i: Vec<f64> = fm.interior.iter().map(|&g| w_full[g]).collect();
            sub_matvec(&fm.mass, &fm.interior, &ipos, &w_i)
        })
        .collect();
    for g in &g_vecs {
        for i in 0..ni {
            if g[i] != 0.0 {
                for j in 0..ni {
                    a_reg.add_to(i, j, beta * g[i] * g[j]);
                }
            }
        }
    }
    let lu = lu_factor(a_reg)?;

    // Interior responses and the reduced pencil.
    let mut x_cols: Vec<Vec<f64>> = Vec::with_capacity(nq);
    let mut s_reduced = DenseMatrix::zeros(nq, nq);
    let mut mass_reduced = DenseMatrix::zeros(nq, nq);
    for (c, q) in q_cols.iter().enumerate() {
        // rhs = -A_ib q
        let mut rhs = vec![0.0; ni];
        for (r, &g) in fm.boundary.iter().enumerate() {
            if q[r] != 0.0 {
                for &(j, v) in op.row(g) {
                    let p = ipos[j];
                    if p != usize::MAX {
                        rhs[p] -= v * q[r];
                    }
                }
            }
        }
        lu.solve_in_place(&mut rhs);
        // y = A_bb q + A_bi x
        let mut y = vec![0.0; nb];
        for (r, &g) in fm.boundary.iter().enumerate() {
            let mut s = 0.0;
            for &(j, v) in op.row(g) {
                let bp = bpos[j];
                if bp != usize::MAX {
                    s += v * q[bp];
                }
                let p = ipos[j];
                if p != usize::MAX {
                    s += v * rhs[p];
                }
            }
            y[r] = s;
        }
        for (rc, qr) in q_cols.iter().enumerate() {
            s_reduced.set(rc, c, qr.iter().zip(y.iter()).map(|(a, b)| a * b).sum());
            mass_reduced.set(rc, c, bb_dot(&bb, qr, q));
        }
        x_cols.push(rhs);
    }
    s_reduced.symmetrize();
    mass_reduced.symmetrize();

    let eig = generalized_sym_eigen(&s_reduced, &mass_reduced, true)?;
    let yv = eig.vectors.unwrap();
    let mut vectors = Vec::with_capacity(count);
    let mut extensions = Vec::with_capacity(count);
    for k in 0..count {
        let yk = yv.column(k);
        let mut phi = vec![0.0; nb];
        let mut ui = vec![0.0; ni];
        for (c, &w) in yk.iter().enumerate() {
            for i in 0..nb {
                phi[i] += w * q_cols[c][i];
            }
            for i in 0..ni {
                ui[i] += w * x_cols[c][i];
            }
        }
        let mut u = embed(fm.n, &fm.boundary, &phi);
        for (p, &g) in fm.interior.iter().enumerate() {
            u[g] = ui[p];
        }
        vectors.push(phi);
        extensions.push(u);
    }

    Ok(Spectrum {
        kind: SpectrumKind::Steklov { lambda },
        values: eig.values[..count].to_vec(),
        vectors,
        extensions: Some(extensions),
    })
}

fn bb_dot(bb: &DenseMatrix, a: &[f64], b: &[f64]) -> f64 {
    let mb = bb.matvec(b);
    a.iter().zip(mb.iter()).map(|(x, y)| x * y).sum()
}

/// Steklov eigenpairs through the full generalized pencil (A, Bb) on all
/// vertices, by shift-inversion: the finite eigenvalues of the pencil are
/// sigma = shift + 1/theta over the nonzero eigenvalues theta of
/// Bb^{1/2} (A - shift Bb)^{-1} Bb^{1/2}. Algebraically independent of the
/// Schur route; dense, so meshes are capped.
pub fn steklov_full_pencil(
    fm: &FormMatrices,
    lambda: f64,
    count: usize,
    shift: f64,
) -> Result<Spectrum> {
    let nb = fm.boundary.len();
    check_count(count, nb)?;
    check_dense(fm.n)?;
    let all: Vec<usize> = (0..fm.n).collect();
    let op = shifted_operator(fm, lambda);
    let c_mat = SymSparse::combine(&[(1.0, &op), (-shift, &fm.boundary_mass)]);
    let lu = lu_factor(c_mat.to_dense(&all, &all))?;

    // Square root of the boundary mass block.
    let bb = fm.boundary_mass.to_dense(&fm.boundary, &fm.boundary);
    let bb_eig = sym_eigen(&bb, true)?;
    let bv = bb_eig.vectors.unwrap();
    let mut root = DenseMatrix::zeros(nb, nb);
    let mut root_inv = DenseMatrix::zeros(nb, nb);
    for i in 0..nb {
        for j in 0..nb {
            let mut s = 0.0;
            let mut si = 0.0;
            for k in 0..nb {
                let lk = bb_eig.values[k].max(1e-300);
                s += bv.get(i, k) * lk.sqrt() * bv.get(j, k);
                si += bv.get(i, k) * bv.get(j, k) / lk.sqrt();
            }
            root.set(i, j, s);
            root_inv.set(i, j, si);
        }
    }

    // G = R W_bb R with W_bb the boundary block of C^{-1}.
    let mut w_bb = DenseMatrix::zeros(nb, nb);
    for (c, &g) in fm.boundary.iter().enumerate() {
        let mut e = vec![0.0; fm.n];
        e[g] = 1.0;
        lu.solve_in_place(&mut e);
        for (r, &gr) in fm.boundary.iter().enumerate() {
            w_bb.set(r, c, e[gr]);
        }
    }
    w_bb.symmetrize();
    let mut g_mat = DenseMatrix::zeros(nb, nb);
    for i in 0..nb {
        for j in 0..nb {
            let mut s = 0.0;
            for a in 0..nb {
                for b in 0..nb {
                    s += root.get(i, a) * w_bb.get(a, b) * root.get(b, j);
                }
            }
            g_mat.set(i, j, s);
        }
    }
    g_mat.symmetrize();

    let eig = sym_eigen(&g_mat, true)?;
    let gv = eig.vectors.unwrap();
    let theta_scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pairs: Vec<(f64, usize)> = Vec::new();
    for (k, &theta) in eig.values.iter().enumerate() {
        if theta.abs() > 1e-12 * theta_scale.max(1e-300) {
            pairs.push((shift + 1.0 / theta, k));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    check_count(count, pairs.len())?;

    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut extensions = Vec::with_capacity(count);
    for &(sigma, k) in pairs.iter().take(count) {
        let v = gv.column(k);
        let f = root_inv.matvec(&v);
        // u = (sigma - shift) C^{-1} (Bb f), embedded on all vertices.
        let bf = bb.matvec(&f);
        let mut u = embed(fm.n, &fm.boundary, &bf);
        lu.solve_in_place(&mut u);
        for x in u.iter_mut() {
            *x *= sigma - shift;
        }
        // Normalize in the boundary mass inner product.
        let ub: Vec<f64> = fm.boundary.iter().map(|&g| u[g]).collect();
        let norm = bb_dot(&bb, &ub, &ub).sqrt();
        let phi: Vec<f64> = ub.iter().map(|x| x / norm).collect();
        for x in u.iter_mut() {
            *x /= norm;
        }
        values.push(sigma);
        vectors.push(phi);
        extensions.push(u);
    }

    Ok(Spectrum {
        kind: SpectrumKind::Steklov { lambda },
        values,
        vectors,
        extensions: Some(extensions),
    })
}

/// Dirichlet eigenpairs nearest to `tau`, by blocked shift-inverted subspace
/// iteration with the banded factorization. Returns `(value, full vector)`
/// pairs ordered by distance from `tau`; vectors are M-orthonormal with zero
/// boundary entries. This is how large meshes get their targeted interior
/// eigenvalues without a dense solve.
pub fn dirichlet_eigen_near(
    fm: &FormMatrices,
    tau: f64,
    count: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let ni = fm.interior.len();
    check_count(count, ni)?;
    let ipos = position_map(fm.n, &fm.interior);
    let block = (count + 3).min(ni);

    // Factor (K + Mq - tau M)_ii, nudging tau off exact resonance.
    let mut tau_eff = tau;
    let mut solver = None;
    for attempt in 0..6 {
        let op = shifted_operator(fm, tau_eff);
        match banded_ldlt(&op.to_banded(&fm.interior)) {
            Ok(f) => {
                solver = Some(f);
                break;
            }
            Err(e) => {
                if attempt == 5 {
                    return Err(e.into());
                }
                tau_eff = tau + (1.0 + tau.abs()) * 1e-7 * 10f64.powi(attempt);
            }
        }
    }
    let solver = solver.unwrap();

    let mut rng = XorShift64::new(0x5D1_EC0DE);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..ni).map(|_| rng.next_symmetric()).collect())
        .collect();

    let mut ritz: Vec<f64> = vec![tau; block];
    for _sweep in 0..40 {
        // Power step through the shifted inverse, applied to M x.
        for col in basis.iter_mut() {
            let mut z = sub_matvec(&fm.mass, &fm.interior, &ipos, col);
            solver.solve_in_place(&mut z);
            *col = z;
        }
        m_orthonormalize(&mut basis, fm, &ipos);

        // Rayleigh-Ritz on the original pencil.
        let op0 = shifted_operator(fm, 0.0);
        let mut a_proj = DenseMatrix::zeros(block, block);
        let av: Vec<Vec<f64>> = basis
            .iter()
            .map(|x| sub_matvec(&op0, &fm.interior, &ipos, x))
            .collect();
        for i in 0..block {
            for j in 0..block {
                a_proj.set(
                    i,
                    j,
                    basis[i].iter().zip(av[j].iter()).map(|(a, b)| a * b).sum(),
                );
            }
        }
        a_proj.symmetrize();
        let small = sym_eigen(&a_proj, true)?;
        let sv = small.vectors.unwrap();
        let rotated: Vec<Vec<f64>> = (0..block)
            .map(|k| {
                let mut out = vec![0.0; ni];
                for c in 0..block {
                    let w = sv.get(c, k);
                    if w != 0.0 {
                        for i in 0..ni {
                            out[i] += w * basis[c][i];
                        }
                    }
                }
                out
            })
            .collect();
        basis = rotated;
        let converged = small
            .values
            .iter()
            .zip(ritz.iter())
            .all(|(new, old)| (new - old).abs() <= 1e-12 * (1.0 + new.abs()));
        ritz = small.values;
        if converged && _sweep >= 3 {
            break;
        }
    }

    // Final residual-ordered extraction.
    let mut order: Vec<usize> = (0..block).collect();
    order.sort_by(|&i, &j| {
        (ritz[i] - tau)
            .abs()
            .partial_cmp(&(ritz[j] - tau).abs())
            .unwrap()
    });
    let mut out = Vec::with_capacity(count);
    for &k in order.iter().take(count) {
        out.push((ritz[k], embed(fm.n, &fm.interior, &basis[k])));
    }
    Ok(out)
}

fn m_orthonormalize(basis: &mut [Vec<f64>], fm: &FormMatrices, ipos: &[usize]) {
    let n = basis.len();
    for k in 0..n {
        for _ in 0..2 {
            for j in 0..k {
                let mj = sub_matvec(&fm.mass, &fm.interior, ipos, &basis[j]);
                let c: f64 = basis[k].iter().zip(mj.iter()).map(|(a, b)| a * b).sum();
                let (head, tail) = basis.split_at_mut(k);
                let bj = &head[j];
                for (x, y) in tail[0].iter_mut().zip(bj.iter()) {
                    *x -= c * y;
                }
            }
        }
        let mk = sub_matvec(&fm.mass, &fm.interior, ipos, &basis[k]);
        let norm: f64 = basis[k]
            .iter()
            .zip(mk.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for x in basis[k].iter_mut() {
                *x /= norm;
            }
        }
    }
}

/// Worst relative eigen-equation residual over the stored pairs; used by the
/// invariant tests. For Steklov spectra the full rows of A u - sigma Bb u are
/// measured (interior rows are the extension residual).
pub fn max_relative_residual(fm: &FormMatrices, spectrum: &Spectrum) -> f64 {
    let mut worst = 0.0f64;
    match spectrum.kind {
        SpectrumKind::Dirichlet => {
            let op = shifted_operator(fm, 0.0);
            let ipos = position_map(fm.n, &fm.interior);
            for (k, v) in spectrum.vectors.iter().enumerate() {
                let xi: Vec<f64> = fm.interior.iter().map(|&g| v[g]).collect();
                let ax = sub_matvec(&op, &fm.interior, &ipos, &xi);
                let mx = sub_matvec(&fm.mass, &fm.interior, &ipos, &xi);
                worst = worst.max(residual_ratio(&ax, &mx, spectrum.values[k]));
            }
        }
        SpectrumKind::Robin { sigma } => {
            let a = SymSparse::combine(&[
                (1.0, &fm.stiffness),
                (1.0, &fm.potential_mass),
                (-sigma, &fm.boundary_mass),
            ]);
            for (k, v) in spectrum.vectors.iter().enumerate() {
                let ax = a.matvec(v);
                let mx = fm.mass.matvec(v);
                worst = worst.max(residual_ratio(&ax, &mx, spectrum.values[k]));
            }
        }
        SpectrumKind::Steklov { lambda } => {
            let op = shifted_operator(fm, lambda);
            let exts = spectrum
                .extensions
                .as_ref()
                .expect("steklov spectra carry extensions");
            for (k, u) in exts.iter().enumerate() {
                let au = op.matvec(u);
                let bu = fm.boundary_mass.matvec(u);
                worst = worst.max(residual_ratio(&au, &bu, spectrum.values[k]));
            }
        }
    }
    worst
}

fn residual_ratio(ax: &[f64], mx: &[f64], lambda: f64) -> f64 {
    let mut res = 0.0;
    let mut scale = 0.0;
    for (a, m) in ax.iter().zip(mx.iter()) {
        res += (a - lambda * m).powi(2);
        scale += a.powi(2) + (lambda * m).powi(2);
    }
    (res / scale.max(1e-300)).sqrt()
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
    fn neumann_ground_state_is_constant_zero() {
        let fm = disk_fm(0.25, 0.0);
        let spec = robin_spectrum(&fm, 0.0, 3).unwrap();
        assert!(spec.values[0].abs() < 1e-10);
        let v0 = &spec.vectors[0];
        let mean = v0.iter().sum::<f64>() / v0.len() as f64;
        assert!(v0.iter().all(|x| (x - mean).abs() < 1e-6 * mean.abs()));
        assert!(spec.values[1] > 1e-3);
    }

    #[test]
    fn smallest_stiffness_pencil_value_is_zero() {
        let fm = disk_fm(0.3, 0.0);
        // sigma = 0, lambda = 0: pencil (K, M).
        let vals = robin_values(&fm, 0.0, 2).unwrap();
        assert!(vals[0].abs() < 1e-10);
    }

    #[test]
    fn robin_ground_state_negative_for_positive_sigma() {
        let fm = disk_fm(0.25, 0.0);
        let vals = robin_values(&fm, 1.0, 1).unwrap();
        assert!(vals[0] < 0.0);
        let vals0 = robin_values(&fm, 0.0, 1).unwrap();
        assert!(vals0[0].abs() < 1e-10);
    }

    #[test]
    fn dirichlet_disk_matches_bessel_zero() {
        let fm = disk_fm(0.1, 0.0);
        let j01 = oracle::bessel_zero(0, 1).unwrap();
        let vals = dirichlet_values(&fm, 3).unwrap();
        let rel = (vals[0] - j01 * j01).abs() / (j01 * j01);
        assert!(rel < 0.02, "lambda_1 = {}, target {}", vals[0], j01 * j01);
    }

    #[test]
    fn dirichlet_square_matches_separation() {
        let mesh = mesh_domain(
            &Domain::Rectangle {
                width: 1.0,
                height: 1.0,
            },
            0.05,
        )
        .unwrap();
        let fm = assemble(&mesh, &Potential::Constant(0.0)).unwrap();
        let vals = dirichlet_values(&fm, 1).unwrap();
        let target = 2.0 * std::f64::consts::PI.powi(2);
        assert!((vals[0] - target).abs() / target < 0.02, "got {}", vals[0]);
    }

    #[test]
    fn constant_potential_shifts_dirichlet_exactly() {
        let mesh = mesh_domain(&Domain::Disk { radius: 1.0 }, 0.3).unwrap();
        let fm0 = assemble(&mesh, &Potential::Constant(0.0)).unwrap();
        let fmc = assemble(&mesh, &Potential::Constant(-7.25)).unwrap();
        let v0 = dirichlet_values(&fm0, 5).unwrap();
        let vc = dirichlet_values(&fmc, 5).unwrap();
        for k in 0..5 {
            assert!((vc[k] - (v0[k] - 7.25)).abs() < 1e-9 * (1.0 + v0[k].abs()));
        }
    }

    #[test]
    fn robin_limit_approaches_dirichlet() {
        let fm = disk_fm(0.2, 0.0);
        let dir = dirichlet_values(&fm, 1).unwrap();
        let rob = robin_values(&fm, -1e4, 1).unwrap();
        assert!(
            (rob[0] - dir[0]).abs() / dir[0] < 0.05,
            "robin {} dirichlet {}",
            rob[0],
            dir[0]
        );
    }

    #[test]
    fn steklov_disk_harmonic_spectrum() {
        let fm = disk_fm(0.05, 0.0);
        let spec = steklov_spectrum(&fm, 0.0, 6).unwrap();
        let target = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        for (k, &t) in target.iter().enumerate() {
            assert!(
                (spec.values[k] - t).abs() <= 0.02 * (1.0 + t),
                "sigma_{k} = {}, want {t}",
                spec.values[k]
            );
        }
    }

    #[test]
    fn steklov_disk_with_potential_matches_oracle() {
        let fm = disk_fm(0.05, -1.0);
        let spec = steklov_spectrum(&fm, 0.0, 1).unwrap();
        let j0 = oracle::bessel_j(0, 1.0).unwrap();
        let target = j0.derivative / j0.value;
        assert!((spec.values[0] - target).abs() <= 0.02 * (1.0 + target.abs()));
    }

    #[test]
    fn steklov_orthonormality_and_residuals() {
        let fm = disk_fm(0.15, -1.0);
        let spec = steklov_spectrum(&fm, 0.0, 5).unwrap();
        let bb = fm.boundary_mass.to_dense(&fm.boundary, &fm.boundary);
        for a in 0..5 {
            for b in 0..=a {
                let d = bb_dot(&bb, &spec.vectors[a], &spec.vectors[b]);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-9, "gram({a},{b}) = {d}");
            }
        }
        assert!(max_relative_residual(&fm, &spec) < 1e-8);
    }

    #[test]
    fn robin_and_dirichlet_residuals_small() {
        let fm = disk_fm(0.25, -2.0);
        let rob = robin_spectrum(&fm, 0.7, 4).unwrap();
        assert!(max_relative_residual(&fm, &rob) < 1e-9);
        let dir = dirichlet_spectrum(&fm, 4).unwrap();
        assert!(max_relative_residual(&fm, &dir) < 1e-9);
    }

    #[test]
    fn schur_and_full_pencil_routes_agree() {
        let fm = disk_fm(0.15, -1.0);
        assert!(
            fm.n <= 500,
            "route-agreement mesh should stay small, got {}",
            fm.n
        );
        let a = steklov_spectrum(&fm, 0.0, 6).unwrap();
        let b = steklov_full_pencil(&fm, 0.0, 6, -7.321).unwrap();
        for k in 0..6 {
            let denom = 1.0 + a.values[k].abs();
            assert!(
                (a.values[k] - b.values[k]).abs() / denom < 1e-8,
                "k = {k}: schur {} vs pencil {}",
                a.values[k],
                b.values[k]
            );
        }
        // The shift-inverted route also returns faithful eigenpairs.
        assert!(max_relative_residual(&fm, &b) < 1e-8);
    }

    #[test]
    fn count_below_matches_eigenvalue_list() {
        let fm = disk_fm(0.25, -10.0);
        let dir = dirichlet_values(&fm, 8).unwrap();
        for &lambda in &[-5.0, 0.0, dir[2] + 1e-3, dir[5] + 1e-3, 40.0] {
            let count = dirichlet_count_below(&fm, lambda).unwrap();
            let reference = dir.iter().filter(|&&v| v < lambda).count();
            // Only valid while lambda stays below the 9th value.
            if lambda < *dir.last().unwrap() {
                assert_eq!(count, reference, "lambda = {lambda}");
            }
        }
    }

    #[test]
    fn eigen_near_matches_dense_route() {
        let fm = disk_fm(0.2, 0.0);
        let dense = dirichlet_values(&fm, 6).unwrap();
        let near = dirichlet_eigen_near(&fm, dense[3] + 0.05, 2).unwrap();
        let mut got: Vec<f64> = near.iter().map(|(v, _)| *v).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Values 3 and 4 straddle the shift (indices depend on degeneracy).
        for v in got {
            assert!(
                dense.iter().any(|d| (d - v).abs() < 1e-7 * (1.0 + d.abs())),
                "ritz value {v} not in dense list {dense:?}"
            );
        }
        // Residual of the best pair.
        let op = shifted_operator(&fm, 0.0);
        let (val, vec) = &near[0];
        let au = op.matvec(vec);
        let mu = fm.mass.matvec(vec);
        let ipos = position_map(fm.n, &fm.interior);
        let mut res = 0.0f64;
        for (i, p) in ipos.iter().enumerate() {
            if *p != usize::MAX {
                res = res.max((au[i] - val * mu[i]).abs());
            }
        }
        assert!(res < 1e-7, "interior residual {res}");
    }

    #[test]
    fn resonance_errors_without_deflation() {
        let fm = disk_fm(0.2, 0.0);
        let dir = dirichlet_values(&fm, 1).unwrap();
        let opts = SteklovOptions {
            deflate: false,
            dirichlet_tol: None,
        };
        let err = steklov_spectrum_with(&fm, dir[0], 3, &opts);
        assert!(matches!(err, Err(SpectralError::DirichletResonance { .. })));
    }

    #[test]
    fn deflated_resonant_solve_matches_shifted_oracle() {
        let fm = disk_fm(0.15, 0.0);
        let dir = dirichlet_values(&fm, 1).unwrap();
        let lambda = dir[0];
        let spec = steklov_spectrum(&fm, lambda, 4).unwrap();
        // The radial branch is deflated; the surviving branches follow
        // sigma_n(s) = s J_n'(s)/J_n(s) at s = sqrt(lambda_h).
        let s = lambda.sqrt();
        let b1 = oracle::bessel_j(1, s).unwrap();
        let sig1 = s * b1.derivative / b1.value;
        let b2 = oracle::bessel_j(2, s).unwrap();
        let sig2 = s * b2.derivative / b2.value;
        assert!(
            (spec.values[0] - sig1).abs() < 0.08 * (1.0 + sig1.abs()),
            "{} vs {}",
            spec.values[0],
            sig1
        );
        assert!((spec.values[1] - sig1).abs() < 0.08 * (1.0 + sig1.abs()));
        assert!(
            (spec.values[2] - sig2).abs() < 0.08 * (1.0 + sig2.abs()),
            "{} vs {}",
            spec.values[2],
            sig2
        );
        // Interior rows of the extension residual stay small in the deflated solve.
        let op = shifted_operator(&fm, lambda);
        let u = &spec.extensions.as_ref().unwrap()[0];
        let au = op.matvec(u);
        let worst = fm
            .interior
            .iter()
            .map(|&g| au[g].abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-6, "interior residual {worst}");
    }

    #[test]
    fn diverging_branch_ground_state_is_a_double_pair() {
        // q = -(j_{3,1}^2 - 0.1): the order-3 branch sits a hair below its
        // pole, so the ground state is large negative and exactly double on
        // the rotation-symmetric mesh.
        let j31 = oracle::bessel_zero(3, 1).unwrap();
        let fm = disk_fm(0.1, -(j31 * j31 - 0.1));
        let spec = steklov_spectrum(&fm, 0.0, 4).unwrap();
        assert!(spec.values[0] < -10.0, "sigma_1 = {}", spec.values[0]);
        assert!(
            (spec.values[0] - spec.values[1]).abs() <= 1e-6 * spec.values[0].abs(),
            "pair split: {} vs {}",
            spec.values[0],
            spec.values[1]
        );
        assert!(spec.values[2] > spec.values[1] + 1.0);
        // Traces oscillate with angular order 3: six sign arcs each.
        for k in 0..2 {
            let phi = &spec.vectors[k];
            let mut arcs = 0;
            let nb = phi.len();
            for i in 0..nb {
                if phi[i].signum() != phi[(i + 1) % nb].signum() {
                    arcs += 1;
                }
            }
            assert_eq!(arcs, 6, "trace {k} has {arcs} sign changes");
        }
    }

    #[test]
    fn count_too_large_is_rejected() {
        let fm = disk_fm(0.3, 0.0);
        let nb = fm.boundary.len();
        assert!(matches!(
            steklov_spectrum(&fm, 0.0, nb + 1),
            Err(SpectralError::CountTooLarge { .. })
        ));
        let ni = fm.interior.len();
        assert!(dirichlet_values(&fm, ni + 1).is_err());
    }

    #[test]
    fn spectrum_json_shape() {
        let fm = disk_fm(0.3, 0.0);
        let spec = steklov_spectrum(&fm, 0.0, 2).unwrap();
        let json = spec.to_json(false);
        assert!(json.starts_with("{\"kind\":\"steklov\",\"parameter\":0,"));
        assert!(json.contains("\"values\":["));
        assert!(!json.contains("vectors"));
        let with_vecs = spec.to_json(true);
        assert!(with_vecs.contains("\"vectors\":[["));
    }
}
