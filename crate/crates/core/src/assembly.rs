//! P1 finite-element assembly of the quadratic form
//!   b(u, v) = int grad u . grad v + int q u v - sigma int_bdry u v
//! split into its four constituent matrices.
//!
//! Stiffness and mass are exact for piecewise linears; the potential is
//! sampled at vertices, interpolated linearly, and integrated exactly (cubic
//! quadrature), which keeps `q = const` reducing to a scaled mass matrix
//! without error. Boundary terms use the 1D P1 mass matrix on the inscribed
//! polygon.

use crate::error::{Result, SpectralError};
use crate::geometry::Mesh;
use crate::linalg::{BandedSym, DenseMatrix};

/// Symmetric sparse matrix stored as full adjacency rows with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparse {
    pub n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymSparse {
    pub fn zeros(n: usize) -> Self {
        SymSparse {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    fn add_entry(&mut self, i: usize, j: usize, v: f64) {
        let row = &mut self.rows[i];
        match row.binary_search_by(|&(c, _)| c.cmp(&j)) {
            Ok(pos) => row[pos].1 += v,
            Err(pos) => row.insert(pos, (j, v)),
        }
    }

    /// Symmetric insertion: updates (i, j) and, for i != j, (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.add_entry(i, j, v);
        if i != j {
            self.add_entry(j, i, v);
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].binary_search_by(|&(c, _)| c.cmp(&j)) {
            Ok(pos) => self.rows[i][pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = 0.0;
            for &(j, v) in &self.rows[i] {
                s += v * x[j];
            }
            y[i] = s;
        }
        y
    }

    /// x^T A y.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(ay.iter()).map(|(a, b)| a * b).sum()
    }

    /// Linear combination sum_i c_i A_i over matrices of equal size.
    pub fn combine(terms: &[(f64, &SymSparse)]) -> SymSparse {
        let n = terms.first().map(|(_, m)| m.n).unwrap_or(0);
        let mut out = SymSparse::zeros(n);
        for &(c, m) in terms {
            assert_eq!(m.n, n);
            if c == 0.0 {
                continue;
            }
            for i in 0..n {
                for &(j, v) in &m.rows[i] {
                    if i <= j {
                        out.add_sym(i, j, c * v);
                    }
                }
            }
        }
        out
    }

    /// Dense submatrix selected by `rows_idx` x `cols_idx` (global indices).
    pub fn to_dense(&self, rows_idx: &[usize], cols_idx: &[usize]) -> DenseMatrix {
        let mut pos = vec![usize::MAX; self.n];
        for (p, &c) in cols_idx.iter().enumerate() {
            pos[c] = p;
        }
        let mut out = DenseMatrix::zeros(rows_idx.len(), cols_idx.len());
        for (r, &gi) in rows_idx.iter().enumerate() {
            for &(j, v) in &self.rows[gi] {
                if pos[j] != usize::MAX {
                    out.add_to(r, pos[j], v);
                }
            }
        }
        out
    }

    /// Banded lower storage for the principal submatrix on `idx`.
    pub fn to_banded(&self, idx: &[usize]) -> BandedSym {
        let mut pos = vec![usize::MAX; self.n];
        for (p, &g) in idx.iter().enumerate() {
            pos[g] = p;
        }
        let mut hb = 0usize;
        for (r, &gi) in idx.iter().enumerate() {
            for &(j, _) in &self.rows[gi] {
                if pos[j] != usize::MAX {
                    hb = hb.max(r.abs_diff(pos[j]));
                }
            }
        }
        let mut out = BandedSym::zeros(idx.len(), hb);
        for (r, &gi) in idx.iter().enumerate() {
            for &(j, v) in &self.rows[gi] {
                let c = pos[j];
                if c != usize::MAX && c <= r {
                    out.add(r, c, v);
                }
            }
        }
        out
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for &(j, v) in &self.rows[i] {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Bounded potential on the domain, evaluated at mesh vertices.
#[derive(Debug, Clone)]
pub enum Potential {
    Constant(f64),
    /// Radially symmetric sample function of r = |x|.
    Radial(fn(f64) -> f64),
    /// Explicit values at mesh vertices.
    Grid(Vec<f64>),
}

impl Potential {
    /// Vertex samples; rejects non-finite values naming the vertex.
    pub fn values_at(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        let nv = mesh.n_vertices();
        let vals: Vec<f64> = match self {
            Potential::Constant(c) => vec![*c; nv],
            Potential::Radial(f) => mesh
                .vertices
                .iter()
                .map(|p| f((p[0] * p[0] + p[1] * p[1]).sqrt()))
                .collect(),
            Potential::Grid(values) => {
                if values.len() != nv {
                    return Err(SpectralError::NonFinitePotential {
                        vertex: values.len().min(nv),
                    });
                }
                values.clone()
            }
        };
        for (v, &q) in vals.iter().enumerate() {
            if !q.is_finite() {
                return Err(SpectralError::NonFinitePotential { vertex: v });
            }
        }
        Ok(vals)
    }
}

/// The four matrices realizing the quadratic form: stiffness K, interior mass
/// M, potential mass Mq, and boundary mass Bb (supported on boundary
/// vertices). The interior/boundary vertex partition is carried along so the
/// eigensolvers need no mesh access.
#[derive(Debug, Clone)]
pub struct FormMatrices {
    pub n: usize,
    pub stiffness: SymSparse,
    pub mass: SymSparse,
    pub potential_mass: SymSparse,
    pub boundary_mass: SymSparse,
    /// Global ids of boundary vertices in canonical loop order.
    pub boundary: Vec<usize>,
    /// Global ids of interior vertices, ascending.
    pub interior: Vec<usize>,
}

/// Matrix pencil (A, M) whose generalized eigenvalues are the Robin values
/// shifted by lambda.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub a: SymSparse,
    pub m: SymSparse,
}

/// Assembles all four form matrices for the mesh and potential.
pub fn assemble(mesh: &Mesh, q: &Potential) -> Result<FormMatrices> {
    let qv = q.values_at(mesh)?;
    let n = mesh.n_vertices();
    let mut k = SymSparse::zeros(n);
    let mut m = SymSparse::zeros(n);
    let mut mq = SymSparse::zeros(n);

    for tri in &mesh.triangles {
        let p: [[f64; 2]; 3] = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
        // Barycentric gradients: grad l_i = perp(edge opposite i) / (2 area).
        let grads = [
            [
                (p[1][1] - p[2][1]) / (2.0 * area),
                (p[2][0] - p[1][0]) / (2.0 * area),
            ],
            [
                (p[2][1] - p[0][1]) / (2.0 * area),
                (p[0][0] - p[2][0]) / (2.0 * area),
            ],
            [
                (p[0][1] - p[1][1]) / (2.0 * area),
                (p[1][0] - p[0][0]) / (2.0 * area),
            ],
        ];
        let qt = [qv[tri[0]], qv[tri[1]], qv[tri[2]]];
        for a in 0..3 {
            for b in a..3 {
                let kv = area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                k.add_sym(tri[a], tri[b], kv);
                let mv = if a == b { area / 6.0 } else { area / 12.0 };
                m.add_sym(tri[a], tri[b], mv);
                // Exact integral of (sum_c q_c l_c) l_a l_b using
                // int l_a^3 = A/10, int l_a^2 l_b = A/30, int l_a l_b l_c = A/60.
                let mqv = if a == b {
                    let others: f64 = (0..3).filter(|&t| t != a).map(|t| qt[t]).sum();
                    qt[a] * area / 10.0 + others * area / 30.0
                } else {
                    let c = 3 - a - b;
                    (qt[a] + qt[b]) * area / 30.0 + qt[c] * area / 60.0
                };
                mq.add_sym(tri[a], tri[b], mqv);
            }
        }
    }

    let mut bb = SymSparse::zeros(n);
    for lp in &mesh.boundary_loops {
        for i in 0..lp.len() {
            let a = lp[i];
            let b = lp[(i + 1) % lp.len()];
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            bb.add_sym(a, a, len / 3.0);
            bb.add_sym(b, b, len / 3.0);
            bb.add_sym(a, b, len / 6.0);
        }
    }

    Ok(FormMatrices {
        n,
        stiffness: k,
        mass: m,
        potential_mass: mq,
        boundary_mass: bb,
        boundary: mesh.boundary_vertices(),
        interior: mesh.interior_vertices(),
    })
}

/// A(sigma, lambda) = K + Mq - sigma Bb - lambda M together with M; the
/// generalized eigenvalues of the pencil are the Robin eigenvalues minus
/// lambda.
pub fn robin_form(fm: &FormMatrices, sigma: f64, lambda: f64) -> Pencil {
    let a = SymSparse::combine(&[
        (1.0, &fm.stiffness),
        (1.0, &fm.potential_mass),
        (-sigma, &fm.boundary_mass),
        (-lambda, &fm.mass),
    ]);
    Pencil {
        a,
        m: fm.mass.clone(),
    }
}

/// Shifted operator K + Mq - lambda M used by the boundary reduction.
pub fn shifted_operator(fm: &FormMatrices, lambda: f64) -> SymSparse {
    SymSparse::combine(&[
        (1.0, &fm.stiffness),
        (1.0, &fm.potential_mass),
        (-lambda, &fm.mass),
    ])
}

/// 1D P1 stiffness and mass on the boundary polygon, indexed by boundary
/// position (the canonical loop order). Each loop is periodic.
pub fn boundary_laplacian(mesh: &Mesh) -> (SymSparse, SymSparse) {
    let nb: usize = mesh.boundary_loops.iter().map(|l| l.len()).sum();
    let mut stiff = SymSparse::zeros(nb);
    let mut mass = SymSparse::zeros(nb);
    let mut offset = 0;
    for lp in &mesh.boundary_loops {
        let nl = lp.len();
        for i in 0..nl {
            let a = offset + i;
            let b = offset + (i + 1) % nl;
            let pa = mesh.vertices[lp[i]];
            let pb = mesh.vertices[lp[(i + 1) % nl]];
            let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            stiff.add_sym(a, a, 1.0 / len);
            stiff.add_sym(b, b, 1.0 / len);
            stiff.add_sym(a, b, -1.0 / len);
            mass.add_sym(a, a, len / 3.0);
            mass.add_sym(b, b, len / 3.0);
            mass.add_sym(a, b, len / 6.0);
        }
        offset += nl;
    }
    (stiff, mass)
}
