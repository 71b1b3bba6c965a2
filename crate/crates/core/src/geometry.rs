//! Parametric domains and their structured triangulations.
//!
//! Disks and annuli are meshed on a polar grid, rectangles on a diagonally
//! split Cartesian grid, so boundary loops come out cyclically ordered for
//! free and the output is deterministic. Curved boundaries are replaced by
//! their inscribed polygons; all boundary integrals downstream use the
//! polygon.

use crate::error::{Result, SpectralError};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Hard cap on generated vertices; protects against runaway `target_h`.
pub const MAX_MESH_VERTICES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Disk {
        radius: f64,
    },
    Annulus {
        r_inner: f64,
        r_outer: f64,
    },
    Rectangle {
        width: f64,
        height: f64,
    },
    /// Flat product cylinder of half-length `delta` over a circle; treated
    /// analytically only, never meshed.
    Cylinder {
        half_length: f64,
        radius: f64,
    },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Disk { radius } if radius > 0.0 => Ok(()),
            Domain::Disk { radius } => Err(SpectralError::InvalidDomain(format!(
                "disk radius must be positive, got {radius}"
            ))),
            Domain::Annulus { r_inner, r_outer } if 0.0 < r_inner && r_inner < r_outer => Ok(()),
            Domain::Annulus { r_inner, r_outer } => Err(SpectralError::InvalidDomain(format!(
                "annulus needs 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
            ))),
            Domain::Rectangle { width, height } if width > 0.0 && height > 0.0 => Ok(()),
            Domain::Rectangle { width, height } => Err(SpectralError::InvalidDomain(format!(
                "rectangle sides must be positive, got ({width}, {height})"
            ))),
            Domain::Cylinder {
                half_length,
                radius,
            } if half_length > 0.0 && radius > 0.0 => Ok(()),
            Domain::Cylinder {
                half_length,
                radius,
            } => Err(SpectralError::InvalidDomain(format!(
                "cylinder needs positive half-length and radius, got ({half_length}, {radius})"
            ))),
        }
    }

    /// Radius of the largest inscribed disk; sets the default tubular width.
    pub fn inradius(&self) -> f64 {
        match *self {
            Domain::Disk { radius } => radius,
            Domain::Annulus { r_inner, r_outer } => 0.5 * (r_outer - r_inner),
            Domain::Rectangle { width, height } => 0.5 * width.min(height),
            Domain::Cylinder { half_length, .. } => half_length,
        }
    }
}

/// Conforming triangle mesh with counterclockwise triangles and cyclically
/// ordered boundary loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_loops: Vec<Vec<usize>>,
    /// Maximum edge length.
    pub h: f64,
}

/// Per-vertex distance to the boundary polygon plus the nearest boundary
/// vertex, cached for the boundary-layer constructions.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub y: Vec<f64>,
    pub foot: Vec<usize>,
}

fn triangle_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

impl Mesh {
    /// Builds a mesh from raw data, computing `h` and checking the structural
    /// invariants (positive areas, each boundary edge in exactly one triangle,
    /// interior edges in exactly two, loops covering the topological boundary).
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_loops: Vec<Vec<usize>>,
    ) -> Result<Mesh> {
        let mut h = 0.0f64;
        for t in &triangles {
            for e in 0..3 {
                let a = vertices[t[e]];
                let b = vertices[t[(e + 1) % 3]];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        let mesh = Mesh {
            vertices,
            triangles,
            boundary_loops,
            h,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Distinct undirected edges.
    pub fn n_edges(&self) -> usize {
        self.edge_counts().len()
    }

    fn edge_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.n_vertices();
        for (ti, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(SpectralError::MeshFormat(format!(
                    "triangle {ti} references a missing vertex"
                )));
            }
            let area = triangle_area(
                self.vertices[t[0]],
                self.vertices[t[1]],
                self.vertices[t[2]],
            );
            if area <= 0.0 {
                return Err(SpectralError::MeshFormat(format!(
                    "triangle {ti} has non-positive area {area}"
                )));
            }
        }
        let counts = self.edge_counts();
        let mut loop_edges = BTreeMap::new();
        for (li, lp) in self.boundary_loops.iter().enumerate() {
            if lp.len() < 3 {
                return Err(SpectralError::MeshFormat(format!(
                    "boundary loop {li} has fewer than 3 vertices"
                )));
            }
            let mut seen = std::collections::BTreeSet::new();
            for &v in lp {
                if v >= nv {
                    return Err(SpectralError::MeshFormat(format!(
                        "loop {li} references a missing vertex"
                    )));
                }
                if !seen.insert(v) {
                    return Err(SpectralError::MeshFormat(format!(
                        "loop {li} repeats vertex {v}"
                    )));
                }
            }
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                let key = (a.min(b), a.max(b));
                loop_edges.insert(key, ());
                match counts.get(&key) {
                    Some(1) => {}
                    Some(c) => {
                        return Err(SpectralError::MeshFormat(format!(
                            "boundary edge {key:?} belongs to {c} triangles"
                        )))
                    }
                    None => {
                        return Err(SpectralError::MeshFormat(format!(
                            "loop edge {key:?} is not a mesh edge"
                        )))
                    }
                }
            }
        }
        for (key, c) in &counts {
            match c {
                1 => {
                    if !loop_edges.contains_key(key) {
                        return Err(SpectralError::MeshFormat(format!(
                            "boundary edge {key:?} is missing from the loops"
                        )));
                    }
                }
                2 => {}
                c => {
                    return Err(SpectralError::MeshFormat(format!(
                        "edge {key:?} belongs to {c} triangles"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                triangle_area(
                    self.vertices[t[0]],
                    self.vertices[t[1]],
                    self.vertices[t[2]],
                )
            })
            .sum()
    }

    /// Total length of the boundary polygon(s).
    pub fn boundary_length(&self) -> f64 {
        let mut total = 0.0;
        for lp in &self.boundary_loops {
            for i in 0..lp.len() {
                let a = self.vertices[lp[i]];
                let b = self.vertices[lp[(i + 1) % lp.len()]];
                total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            }
        }
        total
    }

    /// Boundary vertices in canonical order: loops concatenated, each in its
    /// stored cyclic order. This ordering indexes all boundary-supported
    /// eigenvectors.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary_loops.iter().flatten().copied().collect()
    }

    /// Maps a global vertex id to its position in `boundary_vertices()`.
    pub fn boundary_index_map(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.n_vertices()];
        for (pos, v) in self.boundary_loops.iter().flatten().enumerate() {
            map[*v] = Some(pos);
        }
        map
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        let map = self.boundary_index_map();
        (0..self.n_vertices())
            .filter(|&v| map[v].is_none())
            .collect()
    }

    /// Distance-to-boundary and nearest-foot data for every vertex.
    pub fn distance_field(&self) -> DistanceField {
        let mut y = Vec::with_capacity(self.n_vertices());
        let mut foot = Vec::with_capacity(self.n_vertices());
        for v in 0..self.n_vertices() {
            let (d, f) = distance_to_boundary(self, self.vertices[v]);
            y.push(d);
            foot.push(f);
        }
        DistanceField { y, foot }
    }

    /// Plain-text export: header `V E F`, vertex coordinates, triangle index
    /// triples, then the boundary loops. Floats use the shortest round-trip
    /// form, so export/import is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} {} {}\n",
            self.n_vertices(),
            self.n_edges(),
            self.n_triangles()
        ));
        for v in &self.vertices {
            out.push_str(&format!("{} {}\n", v[0], v[1]));
        }
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out.push_str(&format!("{}\n", self.boundary_loops.len()));
        for lp in &self.boundary_loops {
            out.push_str(&lp.len().to_string());
            for v in lp {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| SpectralError::MeshFormat("empty input".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(SpectralError::MeshFormat("header must be 'V E F'".into()));
        }
        let nv: usize = parts[0]
            .parse()
            .map_err(|_| SpectralError::MeshFormat("bad V".into()))?;
        let ne: usize = parts[1]
            .parse()
            .map_err(|_| SpectralError::MeshFormat("bad E".into()))?;
        let nf: usize = parts[2]
            .parse()
            .map_err(|_| SpectralError::MeshFormat("bad F".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines
                .next()
                .ok_or_else(|| SpectralError::MeshFormat("missing vertex line".into()))?;
            let xy: Vec<&str> = line.split_whitespace().collect();
            if xy.len() != 2 {
                return Err(SpectralError::MeshFormat(format!(
                    "bad vertex line '{line}'"
                )));
            }
            let x: f64 = xy[0]
                .parse()
                .map_err(|_| SpectralError::MeshFormat("bad coordinate".into()))?;
            let y: f64 = xy[1]
                .parse()
                .map_err(|_| SpectralError::MeshFormat("bad coordinate".into()))?;
            vertices.push([x, y]);
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let line = lines
                .next()
                .ok_or_else(|| SpectralError::MeshFormat("missing triangle line".into()))?;
            let abc: Vec<&str> = line.split_whitespace().collect();
            if abc.len() != 3 {
                return Err(SpectralError::MeshFormat(format!(
                    "bad triangle line '{line}'"
                )));
            }
            let mut t = [0usize; 3];
            for (k, s) in abc.iter().enumerate() {
                t[k] = s
                    .parse()
                    .map_err(|_| SpectralError::MeshFormat("bad triangle index".into()))?;
            }
            triangles.push(t);
        }
        let nl_line = lines
            .next()
            .ok_or_else(|| SpectralError::MeshFormat("missing loop count".into()))?;
        let nl: usize = nl_line
            .trim()
            .parse()
            .map_err(|_| SpectralError::MeshFormat("bad loop count".into()))?;
        let mut boundary_loops = Vec::with_capacity(nl);
        for _ in 0..nl {
            let line = lines
                .next()
                .ok_or_else(|| SpectralError::MeshFormat("missing loop line".into()))?;
            let ids: Vec<&str> = line.split_whitespace().collect();
            if ids.is_empty() {
                return Err(SpectralError::MeshFormat("empty loop line".into()));
            }
            let len: usize = ids[0]
                .parse()
                .map_err(|_| SpectralError::MeshFormat("bad loop length".into()))?;
            if ids.len() != len + 1 {
                return Err(SpectralError::MeshFormat("loop length mismatch".into()));
            }
            let mut lp = Vec::with_capacity(len);
            for s in &ids[1..] {
                lp.push(
                    s.parse()
                        .map_err(|_| SpectralError::MeshFormat("bad loop index".into()))?,
                );
            }
            boundary_loops.push(lp);
        }
        let mesh = Mesh::new(vertices, triangles, boundary_loops)?;
        if mesh.n_edges() != ne {
            return Err(SpectralError::MeshFormat(format!(
                "header claims {ne} edges, mesh has {}",
                mesh.n_edges()
            )));
        }
        Ok(mesh)
    }
}

/// Triangulates a domain with target edge length `target_h`; the result
/// satisfies `h <= 1.5 * target_h`. Boundary vertices lie on the exact
/// boundary curve. Cylinders are rejected: they are handled analytically.
pub fn mesh_domain(domain: &Domain, target_h: f64) -> Result<Mesh> {
    domain.validate()?;
    if !(target_h > 0.0) {
        return Err(SpectralError::InvalidDomain(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    match *domain {
        Domain::Disk { radius } => mesh_disk(radius, target_h),
        Domain::Annulus { r_inner, r_outer } => mesh_annulus(r_inner, r_outer, target_h),
        Domain::Rectangle { width, height } => mesh_rectangle(width, height, target_h),
        Domain::Cylinder { .. } => Err(SpectralError::UnmeshableDomain(
            "cylinder cross-products are treated by separation of variables".into(),
        )),
    }
}

fn check_cap(nv: usize) -> Result<()> {
    if nv > MAX_MESH_VERTICES {
        Err(SpectralError::MeshTooFine {
            vertices: nv,
            cap: MAX_MESH_VERTICES,
        })
    } else {
        Ok(())
    }
}

fn ring_counts(radius: f64, target_h: f64) -> (usize, usize) {
    let n_theta = ((2.0 * PI * radius / target_h).ceil() as usize).max(8);
    let n_r = ((radius / target_h).ceil() as usize).max(1);
    (n_theta, n_r)
}

fn mesh_disk(radius: f64, target_h: f64) -> Result<Mesh> {
    let (n_theta, n_r) = ring_counts(radius, target_h);
    check_cap(1 + n_r * n_theta)?;
    let mut vertices = Vec::with_capacity(1 + n_r * n_theta);
    vertices.push([0.0, 0.0]);
    for i in 1..=n_r {
        let r = radius * i as f64 / n_r as f64;
        for j in 0..n_theta {
            let th = 2.0 * PI * j as f64 / n_theta as f64;
            vertices.push([r * th.cos(), r * th.sin()]);
        }
    }
    let id = |i: usize, j: usize| 1 + (i - 1) * n_theta + (j % n_theta);
    let mut triangles = Vec::new();
    for j in 0..n_theta {
        triangles.push([0, id(1, j), id(1, j + 1)]);
    }
    for i in 1..n_r {
        for j in 0..n_theta {
            let a = id(i, j);
            let b = id(i, j + 1);
            let c = id(i + 1, j);
            let d = id(i + 1, j + 1);
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    let boundary: Vec<usize> = (0..n_theta).map(|j| id(n_r, j)).collect();
    Mesh::new(vertices, triangles, vec![boundary])
}

fn mesh_annulus(r_inner: f64, r_outer: f64, target_h: f64) -> Result<Mesh> {
    let n_theta = ((2.0 * PI * r_outer / target_h).ceil() as usize).max(8);
    let n_rad = (((r_outer - r_inner) / target_h).ceil() as usize).max(1);
    check_cap((n_rad + 1) * n_theta)?;
    let mut vertices = Vec::with_capacity((n_rad + 1) * n_theta);
    for i in 0..=n_rad {
        let r = r_inner + (r_outer - r_inner) * i as f64 / n_rad as f64;
        for j in 0..n_theta {
            let th = 2.0 * PI * j as f64 / n_theta as f64;
            vertices.push([r * th.cos(), r * th.sin()]);
        }
    }
    let id = |i: usize, j: usize| i * n_theta + (j % n_theta);
    let mut triangles = Vec::new();
    for i in 0..n_rad {
        for j in 0..n_theta {
            let a = id(i, j);
            let b = id(i, j + 1);
            let c = id(i + 1, j);
            let d = id(i + 1, j + 1);
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    let outer: Vec<usize> = (0..n_theta).map(|j| id(n_rad, j)).collect();
    let inner: Vec<usize> = (0..n_theta).map(|j| id(0, j)).collect();
    Mesh::new(vertices, triangles, vec![outer, inner])
}

fn mesh_rectangle(width: f64, height: f64, target_h: f64) -> Result<Mesh> {
    let nx = ((width / target_h).ceil() as usize).max(1);
    let ny = ((height / target_h).ceil() as usize).max(1);
    check_cap((nx + 1) * (ny + 1))?;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let v00 = id(i, j);
            let v10 = id(i + 1, j);
            let v01 = id(i, j + 1);
            let v11 = id(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let mut boundary = Vec::new();
    for i in 0..nx {
        boundary.push(id(i, 0));
    }
    for j in 0..ny {
        boundary.push(id(nx, j));
    }
    for i in (1..=nx).rev() {
        boundary.push(id(i, ny));
    }
    for j in (1..=ny).rev() {
        boundary.push(id(0, j));
    }
    Mesh::new(vertices, triangles, vec![boundary])
}

/// Distance from `point` to the boundary polygon, along with the nearest
/// boundary vertex (ties broken by smallest vertex index).
pub fn distance_to_boundary(mesh: &Mesh, point: [f64; 2]) -> (f64, usize) {
    let mut best = f64::INFINITY;
    for lp in &mesh.boundary_loops {
        for i in 0..lp.len() {
            let a = mesh.vertices[lp[i]];
            let b = mesh.vertices[lp[(i + 1) % lp.len()]];
            let d = point_segment_distance(point, a, b);
            if d < best {
                best = d;
            }
        }
    }
    let mut foot = usize::MAX;
    let mut foot_d2 = f64::INFINITY;
    for lp in &mesh.boundary_loops {
        for &v in lp {
            let p = mesh.vertices[v];
            let d2 = (p[0] - point[0]).powi(2) + (p[1] - point[1]).powi(2);
            if d2 < foot_d2 || (d2 == foot_d2 && v < foot) {
                foot_d2 = d2;
                foot = v;
            }
        }
    }
    (best, foot)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}
