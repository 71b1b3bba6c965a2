//! Nodal domain counting: connected sign components of an eigenfunction over
//! the mesh graph, and maximal constant-sign arcs of a boundary density along
//! the boundary loops.
//!
//! Vertices within `zero_tol * max|u|` of zero belong to no domain; they
//! separate, which mirrors nodal sets having measure zero. Counts are scale
//! invariant by construction.

use crate::assembly::FormMatrices;
use crate::error::{Result, SpectralError};
use crate::geometry::Mesh;
use crate::spectra::steklov_spectrum;

/// Relative zero tolerance guarding symmetry-induced exact zeros.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

fn classify(values: &[f64], zero_tol: f64) -> Result<Vec<i8>> {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(SpectralError::AllZeroVector);
    }
    let cut = zero_tol * max;
    Ok(values
        .iter()
        .map(|&v| {
            if v.abs() <= cut {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// Number of connected sign components of `u` over the mesh edges.
pub fn count_interior_nodal(mesh: &Mesh, u: &[f64], zero_tol: f64) -> Result<usize> {
    assert_eq!(u.len(), mesh.n_vertices());
    let signs = classify(u, zero_tol)?;
    let mut uf = UnionFind::new(u.len());
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if signs[a] != 0 && signs[a] == signs[b] {
                uf.union(a, b);
            }
        }
    }
    let mut roots = std::collections::BTreeSet::new();
    for v in 0..u.len() {
        if signs[v] != 0 {
            let r = uf.find(v);
            roots.insert(r);
        }
    }
    Ok(roots.len())
}

/// Per-position nodal-arc labels of a boundary density, `phi` indexed by
/// boundary position (canonical loop order). Returns the labels (None on
/// zero-tagged positions) and the total arc count; labels are unique across
/// loops.
pub fn boundary_nodal_labels(
    mesh: &Mesh,
    phi: &[f64],
    zero_tol: f64,
) -> Result<(Vec<Option<usize>>, usize)> {
    let nb: usize = mesh.boundary_loops.iter().map(|l| l.len()).sum();
    assert_eq!(phi.len(), nb);
    let signs = classify(phi, zero_tol)?;
    let mut labels = vec![None; nb];
    let mut next_label = 0usize;
    let mut offset = 0usize;
    for lp in &mesh.boundary_loops {
        let n = lp.len();
        let loop_signs = &signs[offset..offset + n];
        if let Some(anchor) = loop_signs.iter().position(|&s| s != 0) {
            let base = next_label;
            let mut run = 0usize;
            let mut current = loop_signs[anchor];
            labels[offset + anchor] = Some(base);
            let mut broken = false;
            for step in 1..n {
                let p = (anchor + step) % n;
                let s = loop_signs[p];
                if s == 0 {
                    broken = true;
                    continue;
                }
                if broken || s != current {
                    run += 1;
                    current = s;
                    broken = false;
                }
                labels[offset + p] = Some(base + run);
            }
            // Cyclic wrap: the last unbroken run may continue into the anchor.
            let merged = !broken && run > 0 && current == loop_signs[anchor];
            if merged {
                for l in labels[offset..offset + n].iter_mut() {
                    if *l == Some(base + run) {
                        *l = Some(base);
                    }
                }
                next_label = base + run;
            } else {
                next_label = base + run + 1;
            }
        }
        offset += n;
    }
    if next_label == 0 {
        return Err(SpectralError::AllZeroVector);
    }
    Ok((labels, next_label))
}

/// Number of maximal constant-sign arcs of `phi` over all boundary loops; a
/// loop with no sign change contributes one.
pub fn count_boundary_nodal(mesh: &Mesh, phi: &[f64], zero_tol: f64) -> Result<usize> {
    boundary_nodal_labels(mesh, phi, zero_tol).map(|(_, count)| count)
}

/// Per-index nodal counts and the Courant-type verdict N_k <= k + d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalReport {
    pub k: usize,
    pub n_interior: usize,
    pub m_boundary: usize,
    pub d: usize,
    pub theorem_ok: bool,
    pub ratio: f64,
}

/// CSV export: `k,N_k,M_k,d,bound_ok,ratio`.
pub fn reports_to_csv(reports: &[NodalReport]) -> String {
    let mut out = String::from("k,N_k,M_k,d,bound_ok,ratio\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{:.12e}\n",
            r.k, r.n_interior, r.m_boundary, r.d, r.theorem_ok, r.ratio
        ));
    }
    out
}

/// Solves the Steklov problem at `lambda`, counts interior domains of every
/// extension u_k and boundary arcs of every density phi_k for k = 1..k_max,
/// and checks the bound N_k <= k + d with d from the same discretization.
pub fn nodal_sweep(
    mesh: &Mesh,
    fm: &FormMatrices,
    lambda: f64,
    k_max: usize,
    zero_tol: f64,
) -> Result<Vec<NodalReport>> {
    let spectrum = steklov_spectrum(fm, lambda, k_max)?;
    let d = crate::duality::count_d(fm, lambda)?;
    let extensions = spectrum
        .extensions
        .as_ref()
        .expect("steklov spectra carry extensions");
    let mut reports = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let n_interior = count_interior_nodal(mesh, &extensions[k - 1], zero_tol)?;
        let m_boundary = count_boundary_nodal(mesh, &spectrum.vectors[k - 1], zero_tol)?;
        reports.push(NodalReport {
            k,
            n_interior,
            m_boundary,
            d,
            theorem_ok: n_interior <= k + d,
            ratio: m_boundary as f64 / k as f64,
        });
    }
    Ok(reports)
}
