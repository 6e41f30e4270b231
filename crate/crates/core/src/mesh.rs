//! Lattice-periodic triangulated surfaces in cusp coordinates.
//!
//! A [`PeriodicMesh`] stores one chart representative per vertex; triangles
//! carry per-edge integer lattice offsets so that a triangle crossing the
//! fundamental-domain seam closes up in the universal cover. All metric
//! quantities are computed in the deformed conformal metric of a
//! [`PsiProfile`]: triangle area by a 3-point edge-midpoint quadrature of the
//! conformal factor, with an analytic gradient per free vertex.

use serde::{Deserialize, Serialize};

use crate::cusp::{CuspEnd, PsiProfile, CHART_FLOOR};
use crate::error::{Error, Result};
use crate::geom::{add, cross, dot, norm, scale, sub, triangle_area, triangle_normal, Vec3};
use crate::quad::adaptive_simpson;

const QUAD_TOL: f64 = 1e-10;

/// Oriented triangle with per-edge lattice offsets.
///
/// `offsets[e]` shifts vertex `verts[(e+1)%3]` relative to the chart copy of
/// `verts[e]`; the three offsets of a triangle must sum to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    pub verts: [usize; 3],
    pub offsets: [[i32; 2]; 3],
}

impl Triangle {
    pub fn flat(verts: [usize; 3]) -> Self {
        Triangle {
            verts,
            offsets: [[0, 0]; 3],
        }
    }

    /// Per-corner lattice shifts in the triangle's own chart, with corner 0
    /// pinned at shift zero.
    pub fn corner_shifts(&self) -> [[i32; 2]; 3] {
        let o0 = self.offsets[0];
        let o1 = self.offsets[1];
        [[0, 0], o0, [o0[0] + o1[0], o0[1] + o1[1]]]
    }
}

/// A triangulated surface in the cusp chart, periodic under the lattice of
/// its [`CuspEnd`]. Boundary vertices are fixed by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<Triangle>,
    pub boundary: Vec<bool>,
    pub end: CuspEnd,
}

/// Canonical undirected edge key: vertex pair plus canonical offset.
fn edge_key(i: usize, j: usize, o: [i32; 2]) -> (usize, usize, [i32; 2]) {
    if i <= j {
        (i, j, o)
    } else {
        (j, i, [-o[0], -o[1]])
    }
}

impl PeriodicMesh {
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<Triangle>,
        boundary: Vec<bool>,
        end: CuspEnd,
    ) -> Result<Self> {
        let mesh = PeriodicMesh {
            vertices,
            triangles,
            boundary,
            end,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Chart displacement of a lattice offset.
    pub fn offset_displacement(&self, o: [i32; 2]) -> Vec3 {
        let v1 = self.end.v1();
        let v2 = self.end.v2();
        [
            o[0] as f64 * v1[0] + o[1] as f64 * v2[0],
            o[0] as f64 * v1[1] + o[1] as f64 * v2[1],
            0.0,
        ]
    }

    /// Chart positions of a triangle's corners (corner 0 unshifted).
    pub fn corner_positions(&self, t: &Triangle) -> [Vec3; 3] {
        let shifts = t.corner_shifts();
        let mut out = [[0.0; 3]; 3];
        for k in 0..3 {
            out[k] = add(
                self.vertices[t.verts[k]],
                self.offset_displacement(shifts[k]),
            );
        }
        out
    }

    /// Full validation: chart floor, offset cocycles, positive coordinate
    /// areas, and manifold edge sharing.
    pub fn validate(&self) -> Result<()> {
        if self.boundary.len() != self.vertices.len() {
            return Err(Error::Mesh("boundary flag count != vertex count".into()));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v[2] < CHART_FLOOR {
                return Err(Error::Mesh(format!(
                    "vertex {i} at z = {} below the chart floor",
                    v[2]
                )));
            }
        }
        let mut edge_count: std::collections::BTreeMap<(usize, usize, [i32; 2]), usize> =
            std::collections::BTreeMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in &t.verts {
                if v >= self.vertices.len() {
                    return Err(Error::Mesh(format!("triangle {ti} references vertex {v}")));
                }
            }
            let total = [
                t.offsets[0][0] + t.offsets[1][0] + t.offsets[2][0],
                t.offsets[0][1] + t.offsets[1][1] + t.offsets[2][1],
            ];
            if total != [0, 0] {
                return Err(Error::Mesh(format!(
                    "triangle {ti} offsets do not close up (sum {total:?})"
                )));
            }
            let p = self.corner_positions(t);
            if triangle_area(p[0], p[1], p[2]) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {ti} is degenerate")));
            }
            for e in 0..3 {
                let (i, j) = (t.verts[e], t.verts[(e + 1) % 3]);
                if i == j {
                    return Err(Error::Mesh(format!("triangle {ti} repeats vertex {i}")));
                }
                *edge_count.entry(edge_key(i, j, t.offsets[e])).or_insert(0) += 1;
            }
        }
        for (key, count) in &edge_count {
            match count {
                1 => {
                    if !self.boundary[key.0] || !self.boundary[key.1] {
                        return Err(Error::Mesh(format!(
                            "edge {key:?} has one triangle but unflagged endpoints"
                        )));
                    }
                }
                2 => {}
                n => {
                    return Err(Error::Mesh(format!("edge {key:?} shared by {n} triangles")));
                }
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Distinct edges (canonical keys).
    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::BTreeSet::new();
        for t in &self.triangles {
            for e in 0..3 {
                edges.insert(edge_key(t.verts[e], t.verts[(e + 1) % 3], t.offsets[e]));
            }
        }
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.triangle_count() as i64
    }

    pub fn is_closed(&self) -> bool {
        !self.boundary.iter().any(|&b| b)
    }

    /// Orientability via sign propagation across shared edges.
    pub fn is_orientable(&self) -> bool {
        let mut edge_tris: std::collections::BTreeMap<
            (usize, usize, [i32; 2]),
            Vec<(usize, bool)>,
        > = std::collections::BTreeMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for e in 0..3 {
                let (i, j, o) = (t.verts[e], t.verts[(e + 1) % 3], t.offsets[e]);
                let key = edge_key(i, j, o);
                let forward = i <= j;
                edge_tris.entry(key).or_default().push((ti, forward));
            }
        }
        let n = self.triangles.len();
        let mut sign = vec![0i8; n];
        for start in 0..n {
            if sign[start] != 0 {
                continue;
            }
            sign[start] = 1;
            let mut stack = vec![start];
            while let Some(ti) = stack.pop() {
                let t = &self.triangles[ti];
                for e in 0..3 {
                    let dir_i = t.verts[e] <= t.verts[(e + 1) % 3];
                    let key = edge_key(t.verts[e], t.verts[(e + 1) % 3], t.offsets[e]);
                    for &(tj, dir_j) in &edge_tris[&key] {
                        if tj == ti {
                            continue;
                        }
                        // Opposite traversal directions mean compatible
                        // orientations (same sign).
                        let want = if dir_i != dir_j { sign[ti] } else { -sign[ti] };
                        if sign[tj] == 0 {
                            sign[tj] = want;
                            stack.push(tj);
                        } else if sign[tj] != want {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Genus of a closed orientable mesh.
    pub fn genus(&self) -> Option<i64> {
        if self.is_closed() && self.is_orientable() {
            Some((2 - self.euler_characteristic()) / 2)
        } else {
            None
        }
    }

    /// Wraps every vertex into the fundamental domain, renormalizing the
    /// triangle offsets so all chart geometry is unchanged.
    pub fn canonicalize(&mut self) {
        let v1 = self.end.v1();
        let v2 = self.end.v2();
        let det = v1[0] * v2[1] - v1[1] * v2[0];
        let mut wraps: Vec<[i32; 2]> = Vec::with_capacity(self.vertices.len());
        for v in &mut self.vertices {
            // Lattice coordinates of the horizontal part.
            let s = (v[0] * v2[1] - v[1] * v2[0]) / det;
            let t = (v[1] * v1[0] - v[0] * v1[1]) / det;
            let k = [s.floor() as i32, t.floor() as i32];
            v[0] -= k[0] as f64 * v1[0] + k[1] as f64 * v2[0];
            v[1] -= k[0] as f64 * v1[1] + k[1] as f64 * v2[1];
            wraps.push(k);
        }
        for t in &mut self.triangles {
            for e in 0..3 {
                let (i, j) = (t.verts[e], t.verts[(e + 1) % 3]);
                t.offsets[e][0] += wraps[j][0] - wraps[i][0];
                t.offsets[e][1] += wraps[j][1] - wraps[i][1];
            }
        }
    }

    /// Chart-local self-intersection test between non-adjacent triangles.
    pub fn has_self_intersection(&self) -> bool {
        let tris: Vec<[Vec3; 3]> = self
            .triangles
            .iter()
            .map(|t| self.corner_positions(t))
            .collect();
        let boxes: Vec<(Vec3, Vec3)> = tris
            .iter()
            .map(|p| {
                let mut lo = p[0];
                let mut hi = p[0];
                for q in &p[1..] {
                    for k in 0..3 {
                        lo[k] = lo[k].min(q[k]);
                        hi[k] = hi[k].max(q[k]);
                    }
                }
                (lo, hi)
            })
            .collect();
        for a in 0..tris.len() {
            'pair: for b in (a + 1)..tris.len() {
                for k in 0..3 {
                    if boxes[a].1[k] < boxes[b].0[k] - 1e-12
                        || boxes[b].1[k] < boxes[a].0[k] - 1e-12
                    {
                        continue 'pair;
                    }
                }
                let ta = &self.triangles[a];
                let tb = &self.triangles[b];
                if ta.verts.iter().any(|v| tb.verts.contains(v)) {
                    continue;
                }
                if triangles_intersect(&tris[a], &tris[b]) {
                    return true;
                }
            }
        }
        false
    }
}

fn triangles_intersect(a: &[Vec3; 3], b: &[Vec3; 3]) -> bool {
    for e in 0..3 {
        if segment_hits_triangle(a[e], a[(e + 1) % 3], b)
            || segment_hits_triangle(b[e], b[(e + 1) % 3], a)
        {
            return true;
        }
    }
    false
}

fn segment_hits_triangle(p: Vec3, q: Vec3, tri: &[Vec3; 3]) -> bool {
    let n = cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]));
    let dp = dot(n, sub(p, tri[0]));
    let dq = dot(n, sub(q, tri[0]));
    if (dp > 0.0 && dq > 0.0) || (dp < 0.0 && dq < 0.0) {
        return false;
    }
    let denom = dp - dq;
    if denom.abs() < 1e-300 {
        return false; // coplanar contacts are not flagged
    }
    let t = dp / denom;
    let x = add(p, scale(sub(q, p), t));
    // Barycentric containment.
    let v0 = sub(tri[1], tri[0]);
    let v1 = sub(tri[2], tri[0]);
    let v2 = sub(x, tri[0]);
    let d00 = dot(v0, v0);
    let d01 = dot(v0, v1);
    let d11 = dot(v1, v1);
    let d20 = dot(v2, v0);
    let d21 = dot(v2, v1);
    let den = d00 * d11 - d01 * d01;
    if den.abs() < 1e-300 {
        return false;
    }
    let u = (d11 * d20 - d01 * d21) / den;
    let v = (d00 * d21 - d01 * d20) / den;
    let eps = 1e-10;
    u > eps && v > eps && u + v < 1.0 - eps
}

/// Conformal length of the coordinate-straight segment from `p` to `q`
/// shifted by the lattice offset: the quadrature of `|q_hat - p| / psi(z)`.
pub fn edge_length(
    psi: &PsiProfile,
    end: &CuspEnd,
    p: Vec3,
    q: Vec3,
    offset: [i32; 2],
) -> Result<f64> {
    if p[2] < CHART_FLOOR || q[2] < CHART_FLOOR {
        return Err(Error::Domain("edge endpoint below the chart floor".into()));
    }
    let v1 = end.v1();
    let v2 = end.v2();
    let q_hat = [
        q[0] + offset[0] as f64 * v1[0] + offset[1] as f64 * v2[0],
        q[1] + offset[0] as f64 * v1[1] + offset[1] as f64 * v2[1],
        q[2],
    ];
    edge_length_direct(psi, p, q_hat)
}

fn edge_length_direct(psi: &PsiProfile, p: Vec3, q: Vec3) -> Result<f64> {
    let chord = norm(sub(q, p));
    if chord == 0.0 {
        return Ok(0.0);
    }
    Ok(adaptive_simpson(
        |t| chord / psi.eval(p[2] + t * (q[2] - p[2])),
        0.0,
        1.0,
        QUAD_TOL,
    ))
}

/// Conformal factor of the area form.
fn area_density(psi: &PsiProfile, z: f64) -> f64 {
    let f = psi.eval(z);
    1.0 / (f * f)
}

fn area_density_d1(psi: &PsiProfile, z: f64) -> f64 {
    let f = psi.eval(z);
    -2.0 * psi.d1(z) / (f * f * f)
}

/// Riemannian area of one triangle: coordinate area times the edge-midpoint
/// quadrature of the conformal factor.
fn triangle_riemannian_area(psi: &PsiProfile, p: &[Vec3; 3]) -> f64 {
    let ae = triangle_area(p[0], p[1], p[2]);
    let q = (area_density(psi, 0.5 * (p[0][2] + p[1][2]))
        + area_density(psi, 0.5 * (p[1][2] + p[2][2]))
        + area_density(psi, 0.5 * (p[2][2] + p[0][2])))
        / 3.0;
    ae * q
}

/// Total Riemannian area of the mesh.
pub fn mesh_area(psi: &PsiProfile, mesh: &PeriodicMesh) -> Result<f64> {
    let mut total = 0.0;
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let p = mesh.corner_positions(t);
        if triangle_area(p[0], p[1], p[2]) <= 0.0 {
            return Err(Error::Mesh(format!("triangle {ti} is degenerate")));
        }
        total += triangle_riemannian_area(psi, &p);
    }
    Ok(total)
}

/// Area together with its analytic gradient per vertex; boundary vertices
/// receive the zero vector. Also returns the Riemannian dual area per vertex
/// (one third of the incident triangle areas).
pub fn area_and_gradient(
    psi: &PsiProfile,
    mesh: &PeriodicMesh,
) -> Result<(f64, Vec<Vec3>, Vec<f64>)> {
    let n = mesh.vertices.len();
    let mut grad: Vec<Vec3> = vec![[0.0; 3]; n];
    let mut dual: Vec<f64> = vec![0.0; n];
    let mut total = 0.0;
    for t in &mesh.triangles {
        let p = mesh.corner_positions(t);
        let nrm = triangle_normal(p[0], p[1], p[2]);
        let ae = triangle_area(p[0], p[1], p[2]);
        let mids = [
            0.5 * (p[0][2] + p[1][2]),
            0.5 * (p[1][2] + p[2][2]),
            0.5 * (p[2][2] + p[0][2]),
        ];
        let f = [
            area_density(psi, mids[0]),
            area_density(psi, mids[1]),
            area_density(psi, mids[2]),
        ];
        let df = [
            area_density_d1(psi, mids[0]),
            area_density_d1(psi, mids[1]),
            area_density_d1(psi, mids[2]),
        ];
        let q = (f[0] + f[1] + f[2]) / 3.0;
        let area_t = ae * q;
        total += area_t;
        for k in 0..3 {
            let vi = t.verts[k];
            dual[vi] += area_t / 3.0;
            // Coordinate-area gradient: half the opposite edge crossed with
            // the unit normal.
            let opp = sub(p[(k + 1) % 3], p[(k + 2) % 3]);
            let dae = scale(cross(opp, nrm), 0.5);
            // Corner k enters the midpoints of its two edges, weight 1/2 each.
            let dq_dz = (df[k] + df[(k + 2) % 3]) / 6.0;
            grad[vi] = add(grad[vi], [dae[0] * q, dae[1] * q, dae[2] * q + ae * dq_dz]);
        }
    }
    for (vi, g) in grad.iter_mut().enumerate() {
        if mesh.boundary[vi] {
            *g = [0.0; 3];
        }
    }
    Ok((total, grad, dual))
}

/// A per-slab Riemannian area entry: the slab `{k <= z <= k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabArea {
    pub k: i64,
    pub area: f64,
}

/// Riemannian area of the mesh clipped to each unit slab `{k <= z <= k+1}`.
///
/// Each triangle's conformal factor is replaced by the linear interpolant of
/// its three midpoint samples, which integrates to exactly the same total as
/// the area quadrature; the clipped sub-polygons then integrate that linear
/// density exactly, so the slab areas sum to `mesh_area` up to roundoff.
pub fn slab_area_profile(psi: &PsiProfile, mesh: &PeriodicMesh) -> Result<Vec<SlabArea>> {
    let mut zmin = f64::INFINITY;
    let mut zmax = f64::NEG_INFINITY;
    for v in &mesh.vertices {
        zmin = zmin.min(v[2]);
        zmax = zmax.max(v[2]);
    }
    if !zmin.is_finite() {
        return Ok(Vec::new());
    }
    let k_lo = zmin.floor() as i64;
    let k_hi = (zmax.ceil() as i64 - 1).max(k_lo);
    let mut slabs: Vec<SlabArea> = (k_lo..=k_hi).map(|k| SlabArea { k, area: 0.0 }).collect();

    for t in &mesh.triangles {
        let p = mesh.corner_positions(t);
        let f01 = area_density(psi, 0.5 * (p[0][2] + p[1][2]));
        let f12 = area_density(psi, 0.5 * (p[1][2] + p[2][2]));
        let f20 = area_density(psi, 0.5 * (p[2][2] + p[0][2]));
        // Corner values of the linear function matching the midpoint samples.
        let w = [f01 + f20 - f12, f12 + f01 - f20, f20 + f12 - f01];
        for slab in slabs.iter_mut() {
            let lo = slab.k as f64;
            let poly = clip_band(&p, &w, lo, lo + 1.0);
            if poly.len() >= 3 {
                slab.area += polygon_linear_integral(&poly);
            }
        }
    }
    Ok(slabs)
}

/// Clips a triangle (with per-corner density values) to `lo <= z <= hi`.
fn clip_band(p: &[Vec3; 3], w: &[f64; 3], lo: f64, hi: f64) -> Vec<(Vec3, f64)> {
    let poly: Vec<(Vec3, f64)> = (0..3).map(|k| (p[k], w[k])).collect();
    let poly = clip_half(&poly, |pt| pt[2] - lo); // keep z >= lo
    clip_half(&poly, |pt| hi - pt[2]) // keep z <= hi
}

fn clip_half<F: Fn(Vec3) -> f64>(poly: &[(Vec3, f64)], side: F) -> Vec<(Vec3, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let n = poly.len();
    for i in 0..n {
        let (a, wa) = poly[i];
        let (b, wb) = poly[(i + 1) % n];
        let da = side(a);
        let db = side(b);
        if da >= 0.0 {
            out.push((a, wa));
        }
        if (da > 0.0 && db < 0.0) || (da < 0.0 && db > 0.0) {
            let t = da / (da - db);
            out.push((add(a, scale(sub(b, a), t)), wa + t * (wb - wa)));
        }
    }
    out
}

/// Exact integral of a linear density over a planar polygon (fan rule).
fn polygon_linear_integral(poly: &[(Vec3, f64)]) -> f64 {
    let mut total = 0.0;
    for i in 1..(poly.len() - 1) {
        let a = triangle_area(poly[0].0, poly[i].0, poly[i + 1].0);
        total += a * (poly[0].1 + poly[i].1 + poly[i + 1].1) / 3.0;
    }
    total
}

/// Incidence angles of a mesh against the horotorus `{z = c}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncidenceReport {
    pub level: f64,
    /// One angle per triangle crossing the level, in radians within
    /// `[0, pi/2]`; conformality makes Euclidean and Riemannian angles equal.
    pub angles: Vec<f64>,
    pub min_angle: f64,
    pub median_angle: f64,
    /// Number of vertices nudged off the slicing plane.
    pub perturbed_vertices: usize,
}

/// Measures the angle between each crossing triangle's plane and the
/// horizontal plane `{z = c}`. Vertices within `1e-9` of the plane are lifted
/// deterministically (seeded by vertex index) before slicing.
pub fn incidence_angle(mesh: &PeriodicMesh, c: f64) -> Result<IncidenceReport> {
    let mut z: Vec<f64> = mesh.vertices.iter().map(|v| v[2]).collect();
    let mut perturbed = 0;
    for (i, zi) in z.iter_mut().enumerate() {
        if (*zi - c).abs() < 1e-9 {
            *zi += 1e-8 * (1.0 + (i % 5) as f64 / 5.0);
            perturbed += 1;
        }
    }
    let mut angles = Vec::new();
    for t in &mesh.triangles {
        let zs = [z[t.verts[0]], z[t.verts[1]], z[t.verts[2]]];
        if !(zs.iter().any(|&v| v < c) && zs.iter().any(|&v| v > c)) {
            continue;
        }
        let mut p = mesh.corner_positions(t);
        for k in 0..3 {
            p[k][2] = zs[k];
        }
        let n = triangle_normal(p[0], p[1], p[2]);
        angles.push(n[2].abs().min(1.0).acos());
    }
    if angles.is_empty() {
        return Ok(IncidenceReport {
            level: c,
            angles,
            min_angle: f64::NAN,
            median_angle: f64::NAN,
            perturbed_vertices: perturbed,
        });
    }
    let mut sorted = angles.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    Ok(IncidenceReport {
        level: c,
        min_angle: sorted[0],
        median_angle: median,
        angles,
        perturbed_vertices: perturbed,
    })
}

/// Discrete Gauss-Bonnet data from Riemannian angle defects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnet {
    /// Full defect sum (interior `2 pi - sum`, boundary `pi - sum`);
    /// combinatorially equal to `2 pi chi`.
    pub total_defect: f64,
    pub euler_characteristic: i64,
    /// Defect sum over interior vertices: estimates the curvature integral
    /// over the interior dual region.
    pub interior_defect: f64,
    /// Riemannian dual area of the interior vertices.
    pub interior_dual_area: f64,
}

/// Angle-defect totals using Riemannian edge lengths.
///
/// Angles come from the Euclidean realization of each triangle's three
/// conformal edge lengths; triangle-inequality violations are reported with
/// the offending triangle indices.
pub fn total_gauss_curvature(psi: &PsiProfile, mesh: &PeriodicMesh) -> Result<GaussBonnet> {
    let lengths: Vec<[f64; 3]> = mesh
        .triangles
        .iter()
        .map(|t| {
            let p = mesh.corner_positions(t);
            Ok([
                edge_length_direct(psi, p[0], p[1])?,
                edge_length_direct(psi, p[1], p[2])?,
                edge_length_direct(psi, p[2], p[0])?,
            ])
        })
        .collect::<Result<_>>()?;
    let corners: Vec<[usize; 3]> = mesh.triangles.iter().map(|t| t.verts).collect();
    let riem_areas: Vec<f64> = mesh
        .triangles
        .iter()
        .map(|t| triangle_riemannian_area(psi, &mesh.corner_positions(t)))
        .collect();
    angle_defect_totals(
        mesh.vertices.len(),
        &corners,
        &lengths,
        &mesh.boundary,
        Some(&riem_areas),
        mesh.euler_characteristic(),
    )
}

/// Pure combinatorial/metric angle-defect computation: triangles given by
/// vertex triples with metric side lengths `[l01, l12, l20]`.
pub fn angle_defect_totals(
    vertex_count: usize,
    triangles: &[[usize; 3]],
    lengths: &[[f64; 3]],
    boundary: &[bool],
    riem_areas: Option<&[f64]>,
    euler_characteristic: i64,
) -> Result<GaussBonnet> {
    let mut angle_sum = vec![0.0_f64; vertex_count];
    let mut dual = vec![0.0_f64; vertex_count];
    let mut violations = Vec::new();
    for (ti, (tri, l)) in triangles.iter().zip(lengths).enumerate() {
        let [l01, l12, l20] = *l;
        if l01 + l12 <= l20 || l12 + l20 <= l01 || l20 + l01 <= l12 {
            violations.push(ti);
            continue;
        }
        let angles = [
            corner_angle(l20, l01, l12),
            corner_angle(l01, l12, l20),
            corner_angle(l12, l20, l01),
        ];
        for k in 0..3 {
            angle_sum[tri[k]] += angles[k];
            if let Some(areas) = riem_areas {
                dual[tri[k]] += areas[ti] / 3.0;
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::Geometry(format!(
            "triangle inequality violated in Riemannian lengths for triangles {violations:?}"
        )));
    }
    let mut total = 0.0;
    let mut interior = 0.0;
    let mut interior_dual = 0.0;
    for v in 0..vertex_count {
        if boundary[v] {
            total += std::f64::consts::PI - angle_sum[v];
        } else {
            let defect = std::f64::consts::TAU - angle_sum[v];
            total += defect;
            interior += defect;
            interior_dual += dual[v];
        }
    }
    Ok(GaussBonnet {
        total_defect: total,
        euler_characteristic,
        interior_defect: interior,
        interior_dual_area: interior_dual,
    })
}

/// Angle between the two sides of lengths `a` and `b` whose opposite side
/// has length `c`.
fn corner_angle(a: f64, b: f64, c: f64) -> f64 {
    let cos = ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0);
    cos.acos()
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// A lattice-periodic height field over the fundamental domain: the solver
/// state for the graph experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGraphFn {
    pub end: CuspEnd,
    pub n: usize,
    pub m: usize,
    /// Row-major `n x m` heights, all above the chart floor.
    pub heights: Vec<f64>,
}

impl PeriodicGraphFn {
    pub fn new(end: CuspEnd, n: usize, m: usize, heights: Vec<f64>) -> Result<Self> {
        if n < 4 || m < 4 {
            return Err(Error::Argument("graph grid must be at least 4x4".into()));
        }
        if heights.len() != n * m {
            return Err(Error::Argument("height count must equal n*m".into()));
        }
        if heights.iter().any(|&h| h <= CHART_FLOOR) {
            return Err(Error::Domain(
                "graph heights must stay above z = 1/2".into(),
            ));
        }
        Ok(PeriodicGraphFn { end, n, m, heights })
    }

    pub fn constant(end: CuspEnd, n: usize, m: usize, z: f64) -> Result<Self> {
        Self::new(end, n, m, vec![z; n * m])
    }

    /// Induced torus mesh: two triangles per grid cell, wrap-around offsets
    /// along the seams, no boundary.
    pub fn to_mesh(&self) -> Result<PeriodicMesh> {
        let (n, m) = (self.n, self.m);
        let v1 = self.end.v1();
        let v2 = self.end.v2();
        let mut vertices = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                let (s, t) = (i as f64 / n as f64, j as f64 / m as f64);
                vertices.push([
                    s * v1[0] + t * v2[0],
                    s * v1[1] + t * v2[1],
                    self.heights[i * m + j],
                ]);
            }
        }
        let idx = |i: usize, j: usize| (i % n) * m + (j % m);
        let mut triangles = Vec::with_capacity(2 * n * m);
        for i in 0..n {
            for j in 0..m {
                let wrap_i = (i + 1 == n) as i32;
                let wrap_j = (j + 1 == m) as i32;
                let a = idx(i, j);
                let b = idx(i + 1, j);
                let c = idx(i + 1, j + 1);
                let d = idx(i, j + 1);
                let sb = [wrap_i, 0];
                let sc = [wrap_i, wrap_j];
                let sd = [0, wrap_j];
                triangles.push(shifted_triangle([a, b, c], [[0, 0], sb, sc]));
                triangles.push(shifted_triangle([a, c, d], [[0, 0], sc, sd]));
            }
        }
        PeriodicMesh::new(vertices, triangles, vec![false; n * m], self.end.clone())
    }
}

/// Builds a triangle from per-corner lattice shifts.
fn shifted_triangle(verts: [usize; 3], shifts: [[i32; 2]; 3]) -> Triangle {
    Triangle {
        verts,
        offsets: [
            [shifts[1][0] - shifts[0][0], shifts[1][1] - shifts[0][1]],
            [shifts[2][0] - shifts[1][0], shifts[2][1] - shifts[1][1]],
            [shifts[0][0] - shifts[2][0], shifts[0][1] - shifts[2][1]],
        ],
    }
}

/// Flat horotorus mesh at height `z` over the fundamental domain.
pub fn flat_torus(end: &CuspEnd, n: usize, m: usize, z: f64) -> Result<PeriodicMesh> {
    PeriodicGraphFn::constant(end.clone(), n, m, z)?.to_mesh()
}

/// A vertical plane strip `{y = 0, 0 <= x <= length, z_lo <= z <= z_hi}`
/// with all four sides flagged as boundary.
pub fn vertical_strip(
    end: &CuspEnd,
    length: f64,
    nx: usize,
    z_lo: f64,
    z_hi: f64,
    nz: usize,
) -> Result<PeriodicMesh> {
    if nx < 1 || nz < 1 || !(z_hi > z_lo) || !(length > 0.0) {
        return Err(Error::Argument("strip needs positive extent".into()));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (nz + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (nz + 1));
    for i in 0..=nx {
        for j in 0..=nz {
            let x = length * i as f64 / nx as f64;
            let z = z_lo + (z_hi - z_lo) * j as f64 / nz as f64;
            vertices.push([x, 0.0, z]);
            boundary.push(i == 0 || i == nx || j == 0 || j == nz);
        }
    }
    let idx = |i: usize, j: usize| i * (nz + 1) + j;
    let mut triangles = Vec::with_capacity(2 * nx * nz);
    for i in 0..nx {
        for j in 0..nz {
            triangles.push(Triangle::flat([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]));
            triangles.push(Triangle::flat([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]));
        }
    }
    PeriodicMesh::new(vertices, triangles, boundary, end.clone())
}

/// A triangulated disk spanning the horizontal circle of the given radius at
/// height `z`, centered at `(cx, cy)`; only the outer ring is boundary.
pub fn spanning_disk(
    end: &CuspEnd,
    cx: f64,
    cy: f64,
    radius: f64,
    z: f64,
    rings: usize,
    sectors: usize,
) -> Result<PeriodicMesh> {
    if rings < 1 || sectors < 3 {
        return Err(Error::Argument(
            "disk needs rings >= 1 and sectors >= 3".into(),
        ));
    }
    let mut vertices = vec![[cx, cy, z]];
    let mut boundary = vec![false];
    for r in 1..=rings {
        let rho = radius * r as f64 / rings as f64;
        for s in 0..sectors {
            let phi = std::f64::consts::TAU * s as f64 / sectors as f64;
            vertices.push([cx + rho * phi.cos(), cy + rho * phi.sin(), z]);
            boundary.push(r == rings);
        }
    }
    let ring_start = |r: usize| 1 + (r - 1) * sectors;
    let mut triangles = Vec::new();
    for s in 0..sectors {
        let a = ring_start(1) + s;
        let b = ring_start(1) + (s + 1) % sectors;
        triangles.push(Triangle::flat([0, a, b]));
    }
    for r in 1..rings {
        for s in 0..sectors {
            let a = ring_start(r) + s;
            let b = ring_start(r) + (s + 1) % sectors;
            let c = ring_start(r + 1) + s;
            let d = ring_start(r + 1) + (s + 1) % sectors;
            triangles.push(Triangle::flat([a, c, d]));
            triangles.push(Triangle::flat([a, d, b]));
        }
    }
    PeriodicMesh::new(vertices, triangles, boundary, end.clone())
}

/// A closed octahedral sphere around `(0, 0, z)`; needs `radius < z - 1/2`.
pub fn octahedron_sphere(end: &CuspEnd, z: f64, radius: f64) -> Result<PeriodicMesh> {
    if radius <= 0.0 || z - radius < CHART_FLOOR {
        return Err(Error::Argument(
            "octahedron must stay above the chart floor".into(),
        ));
    }
    let r = radius;
    let vertices = vec![
        [r, 0.0, z],
        [-r, 0.0, z],
        [0.0, r, z],
        [0.0, -r, z],
        [0.0, 0.0, z + r],
        [0.0, 0.0, z - r],
    ];
    let triangles = vec![
        Triangle::flat([0, 2, 4]),
        Triangle::flat([2, 1, 4]),
        Triangle::flat([1, 3, 4]),
        Triangle::flat([3, 0, 4]),
        Triangle::flat([2, 0, 5]),
        Triangle::flat([1, 2, 5]),
        Triangle::flat([3, 1, 5]),
        Triangle::flat([0, 3, 5]),
    ];
    PeriodicMesh::new(vertices, triangles, vec![false; 6], end.clone())
}

// ---------------------------------------------------------------------------
// Exchange format
// ---------------------------------------------------------------------------

/// JSON exchange mirror of [`PeriodicMesh`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    /// Per-triangle edge offsets, aligned with `triangles`.
    pub offsets: Vec<[[i32; 2]; 3]>,
    /// Indices of boundary vertices.
    pub boundary: Vec<usize>,
    /// Lattice generators `[v1, v2]`.
    pub lattice: [[f64; 2]; 2],
}

impl PeriodicMesh {
    pub fn to_file(&self) -> MeshFile {
        MeshFile {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|t| t.verts).collect(),
            offsets: self.triangles.iter().map(|t| t.offsets).collect(),
            boundary: self
                .boundary
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect(),
            lattice: [self.end.v1(), self.end.v2()],
        }
    }

    pub fn from_file(file: &MeshFile) -> Result<Self> {
        if file.triangles.len() != file.offsets.len() {
            return Err(Error::Mesh("offsets must align with triangles".into()));
        }
        let end = CuspEnd::new(file.lattice[0], file.lattice[1])?;
        let mut boundary = vec![false; file.vertices.len()];
        for &i in &file.boundary {
            if i >= boundary.len() {
                return Err(Error::Mesh(format!("boundary index {i} out of range")));
            }
            boundary[i] = true;
        }
        let triangles = file
            .triangles
            .iter()
            .zip(&file.offsets)
            .map(|(&verts, &offsets)| Triangle { verts, offsets })
            .collect();
        PeriodicMesh::new(file.vertices.clone(), triangles, boundary, end)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }
}
