//! Ideal tetrahedra and the one-tetrahedron example constructions:
//! dihedral angles in the half-space model, Lobachevsky-function volumes,
//! a Klein-model volume quadrature, the orientation-reversing face pairing
//! whose quotient is the classical one-cusp non-orientable manifold, the
//! 24-piece barycentric tessellation, and Euler-characteristic bookkeeping
//! for the associated minimal surfaces.
//!
//! Two dihedral-angle conventions coexist here. The *interior* angle of an
//! edge (the argument of the edge's cross-ratio shape; the angles at each
//! ideal vertex sum to pi) drives volumes and edge-class angle sums. The
//! public [`dihedral_angle`] reports the angle between the outward co-normals
//! of the two faces, `pi` minus the interior angle, which is `2 pi / 3` for
//! the regular ideal tetrahedron.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{add, cross, dot, norm, scale, sub, Vec3};
use crate::mobius::{apply, ExtComplex, MobiusMap};
use crate::quad::{adaptive_simpson, gauss_legendre_unit};

/// Hyperbolic-space model tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Klein,
    Halfspace,
}

/// An ideal tetrahedron in either model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum IdealTetrahedron {
    Klein { vertices: [Vec3; 4] },
    Halfspace { vertices: [ExtComplex; 4] },
}

impl IdealTetrahedron {
    pub fn klein(vertices: [Vec3; 4]) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if (norm(*v) - 1.0).abs() > 1e-12 {
                return Err(Error::Geometry(format!(
                    "klein vertex {i} not on the unit sphere"
                )));
            }
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                if norm(sub(vertices[i], vertices[j])) < 1e-12 {
                    return Err(Error::Geometry("ideal vertices must be distinct".into()));
                }
            }
        }
        Ok(IdealTetrahedron::Klein { vertices })
    }

    pub fn halfspace(vertices: [ExtComplex; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if vertices[i].approx_eq(&vertices[j], 1e-12) {
                    return Err(Error::Geometry("ideal vertices must be distinct".into()));
                }
            }
        }
        Ok(IdealTetrahedron::Halfspace { vertices })
    }

    /// Ideal vertices as boundary points of the half-space model.
    pub fn halfspace_vertices(&self) -> [ExtComplex; 4] {
        match self {
            IdealTetrahedron::Halfspace { vertices } => *vertices,
            IdealTetrahedron::Klein { vertices } => {
                let mut out = [ExtComplex::Infinity; 4];
                for (i, v) in vertices.iter().enumerate() {
                    out[i] = sphere_to_boundary(*v);
                }
                out
            }
        }
    }

    pub fn klein_vertices(&self) -> Result<[Vec3; 4]> {
        match self {
            IdealTetrahedron::Klein { vertices } => Ok(*vertices),
            IdealTetrahedron::Halfspace { .. } => Err(Error::Argument(
                "tetrahedron is in the half-space model".into(),
            )),
        }
    }
}

/// Stereographic projection of the unit sphere from the south pole onto the
/// boundary plane of the half-space model.
pub fn sphere_to_boundary(k: Vec3) -> ExtComplex {
    let denom = 1.0 + k[2];
    if denom.abs() < 1e-14 {
        ExtComplex::Infinity
    } else {
        ExtComplex::finite(k[0] / denom, k[1] / denom)
    }
}

/// Interior point map from the Klein ball to the upper half-space:
/// Klein -> Poincare ball -> inversion through the sphere of radius
/// `sqrt(2)` centered at the south pole.
pub fn klein_to_halfspace_point(k: Vec3) -> Result<Vec3> {
    let r2 = dot(k, k);
    if r2 >= 1.0 {
        return Err(Error::Domain("point outside the open Klein ball".into()));
    }
    let p = scale(k, 1.0 / (1.0 + (1.0 - r2).sqrt()));
    let c = [0.0, 0.0, -1.0];
    let d = sub(p, c);
    Ok(add(c, scale(d, 2.0 / dot(d, d))))
}

/// The regular ideal tetrahedron: in the Klein model a regular Euclidean
/// tetrahedron inscribed in the unit sphere.
pub fn regular_ideal_tetrahedron(model: Model) -> IdealTetrahedron {
    let s = 1.0 / 3.0_f64.sqrt();
    let klein = [
        [s, s, s],
        [s, -s, -s],
        [-s, s, -s],
        [-s, -s, s],
    ];
    match model {
        Model::Klein => IdealTetrahedron::Klein { vertices: klein },
        Model::Halfspace => {
            let tet = IdealTetrahedron::Klein { vertices: klein };
            IdealTetrahedron::Halfspace {
                vertices: tet.halfspace_vertices(),
            }
        }
    }
}

/// Interior dihedral angle along the edge joining vertices `edge.0` and
/// `edge.1`: normalize the edge to the vertical axis; the two faces become
/// vertical half-planes and the angle is the planar angle between them.
pub fn interior_dihedral_angle(tet: &IdealTetrahedron, edge: (usize, usize)) -> Result<f64> {
    let (i, j) = edge;
    if i >= 4 || j >= 4 || i == j {
        return Err(Error::Argument("edge must join two distinct vertices".into()));
    }
    let v = tet.halfspace_vertices();
    let others: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
    let (k, l) = (others[0], others[1]);
    let m = MobiusMap::map_three_points(
        [v[i], v[j], v[k]],
        [
            ExtComplex::finite(0.0, 0.0),
            ExtComplex::Infinity,
            ExtComplex::finite(1.0, 0.0),
        ],
    )?;
    match apply(&m, v[l]) {
        ExtComplex::Finite(z) => {
            if z.norm() < 1e-14 {
                return Err(Error::Geometry("degenerate tetrahedron".into()));
            }
            Ok(z.arg().abs())
        }
        ExtComplex::Infinity => Err(Error::Geometry("degenerate tetrahedron".into())),
    }
}

/// Dihedral angle between the two face planes along an edge, measured
/// between outward co-normals: `pi` minus the interior angle. The regular
/// ideal tetrahedron gives `2 pi / 3` on every edge.
pub fn dihedral_angle(tet: &IdealTetrahedron, edge: (usize, usize)) -> Result<f64> {
    Ok(std::f64::consts::PI - interior_dihedral_angle(tet, edge)?)
}

/// The Lobachevsky function: minus the integral of `ln |2 sin t|` from zero.
/// Odd and pi-periodic; the endpoint log-singularity is split off in closed
/// form before quadrature.
pub fn lobachevsky(theta: f64) -> f64 {
    // Reduce into [-pi/2, pi/2] by periodicity, then use oddness.
    let reduced = theta - std::f64::consts::PI * (theta / std::f64::consts::PI).round();
    let t = reduced.abs();
    if t < 1e-300 {
        return 0.0;
    }
    // -int_0^t ln(2s) ds = t - t ln(2t); remainder has a smooth integrand.
    let main = t - t * (2.0 * t).ln();
    let smooth = adaptive_simpson(
        |s| {
            if s < 1e-8 {
                -s * s / 6.0 // ln(sin s / s) to leading order
            } else {
                (s.sin() / s).ln()
            }
        },
        0.0,
        t,
        1e-13,
    );
    (main - smooth) * reduced.signum()
}

/// Volume of an ideal tetrahedron: the sum of the Lobachevsky function over
/// its three (pairwise-equal opposite) interior dihedral angles. The angle
/// sum `pi` is verified as a validity check.
pub fn tetra_volume(tet: &IdealTetrahedron) -> Result<f64> {
    let pairs = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))];
    let mut angles = [0.0_f64; 3];
    for (idx, (e1, e2)) in pairs.iter().enumerate() {
        let a1 = interior_dihedral_angle(tet, *e1)?;
        let a2 = interior_dihedral_angle(tet, *e2)?;
        if (a1 - a2).abs() > 1e-8 {
            return Err(Error::Geometry(format!(
                "opposite edges {e1:?}, {e2:?} disagree: {a1} vs {a2}"
            )));
        }
        angles[idx] = 0.5 * (a1 + a2);
    }
    let sum: f64 = angles.iter().sum();
    if (sum - std::f64::consts::PI).abs() > 1e-8 {
        return Err(Error::Geometry(format!(
            "dihedral angle sum {sum} differs from pi"
        )));
    }
    Ok(angles.iter().map(|&a| lobachevsky(a)).sum())
}

// ---------------------------------------------------------------------------
// Klein-model volume quadrature
// ---------------------------------------------------------------------------

/// Hyperbolic volume of a Euclidean tetrahedron inside the Klein ball with
/// at most one ideal vertex, by Gauss-Legendre quadrature of the volume form
/// `dX / (1 - |X|^2)^2`. An ideal vertex is handled by cone coordinates from
/// it, which cancel the boundary singularity exactly.
pub fn klein_tetrahedron_volume(vertices: [Vec3; 4], order: usize) -> Result<f64> {
    let ideal: Vec<usize> = (0..4)
        .filter(|&i| (norm(vertices[i]) - 1.0).abs() <= 1e-12)
        .collect();
    for (i, v) in vertices.iter().enumerate() {
        if norm(*v) > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("vertex {i} outside the Klein ball")));
        }
    }
    if ideal.len() > 1 {
        return Err(Error::Argument(
            "volume quadrature handles at most one ideal vertex; subdivide first".into(),
        ));
    }
    let rule = gauss_legendre_unit(order.max(4));
    match ideal.first() {
        None => Ok(finite_cell_volume(&vertices, &rule)),
        Some(&qi) => {
            let q = vertices[qi];
            let face: Vec<Vec3> = (0..4).filter(|&i| i != qi).map(|i| vertices[i]).collect();
            Ok(ideal_cone_volume(q, [face[0], face[1], face[2]], &rule))
        }
    }
}

fn finite_cell_volume(v: &[Vec3; 4], rule: &[(f64, f64)]) -> f64 {
    let e1 = sub(v[1], v[0]);
    let e2 = sub(v[2], v[0]);
    let e3 = sub(v[3], v[0]);
    let det = dot(e1, cross(e2, e3)).abs();
    let mut total = 0.0;
    for &(a, wa) in rule {
        for &(b, wb) in rule {
            for &(c, wc) in rule {
                // Collapsed map of the unit cube onto the simplex.
                let u1 = a;
                let u2 = (1.0 - a) * b;
                let u3 = (1.0 - a) * (1.0 - b) * c;
                let jac = (1.0 - a) * (1.0 - a) * (1.0 - b);
                let x = add(add(v[0], scale(e1, u1)), add(scale(e2, u2), scale(e3, u3)));
                let r2 = dot(x, x);
                let den = 1.0 - r2;
                total += wa * wb * wc * jac / (den * den);
            }
        }
    }
    total * det
}

fn ideal_cone_volume(q: Vec3, face: [Vec3; 3], rule: &[(f64, f64)]) -> f64 {
    let e1 = sub(face[1], face[0]);
    let e2 = sub(face[2], face[0]);
    let det = dot(sub(face[0], q), cross(e1, e2)).abs();
    let mut total = 0.0;
    for &(t, wt) in rule {
        for &(b, wb) in rule {
            for &(c, wc) in rule {
                let u = b;
                let v = (1.0 - b) * c;
                let jac = 1.0 - b;
                let y = add(face[0], add(scale(e1, u), scale(e2, v)));
                // 1 - |q + t (y - q)|^2 = t * g with g smooth and positive.
                let d = sub(y, q);
                let g = -2.0 * dot(q, d) - t * dot(d, d);
                total += wt * wb * wc * jac / (g * g);
            }
        }
    }
    total * det
}

// ---------------------------------------------------------------------------
// Barycentric tessellation
// ---------------------------------------------------------------------------

/// The 24-piece barycentric tessellation of the regular ideal tetrahedron:
/// pieces span an ideal vertex, an edge midpoint, a face centroid and the
/// common intersection point of the four vertex-to-opposite-face geodesics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tessellation {
    /// Meeting point of the four vertex-to-face geodesics (Klein model).
    pub apex: Vec3,
    /// Klein-model corners `[ideal vertex, edge midpoint, face centroid, apex]`.
    pub pieces: Vec<[Vec3; 4]>,
}

/// Builds the tessellation; rejects non-regular input.
pub fn barycentric_tessellation(tet: &IdealTetrahedron) -> Result<Tessellation> {
    let v = tet.klein_vertices()?;
    // Regularity: all pairwise dot products equal -1/3.
    for i in 0..4 {
        for j in (i + 1)..4 {
            if (dot(v[i], v[j]) + 1.0 / 3.0).abs() > 1e-10 {
                return Err(Error::Argument(
                    "tessellation requires the regular ideal tetrahedron".into(),
                ));
            }
        }
    }
    // In the Klein model geodesics are chords, so the vertex-to-centroid
    // lines are straight; their common point solves a small least-squares
    // system (the symmetric placement gives the origin).
    let apex = common_line_point(&v)?;
    let mut pieces = Vec::with_capacity(24);
    for opposite in 0..4 {
        let face: Vec<usize> = (0..4).filter(|&i| i != opposite).collect();
        let centroid = scale(
            add(add(v[face[0]], v[face[1]]), v[face[2]]),
            1.0 / 3.0,
        );
        for a in 0..3 {
            for b in 0..3 {
                if a == b {
                    continue;
                }
                let mid = scale(add(v[face[a]], v[face[b]]), 0.5);
                pieces.push([v[face[a]], mid, centroid, apex]);
            }
        }
    }
    Ok(Tessellation { apex, pieces })
}

/// Least-squares intersection of the four vertex-to-opposite-centroid lines.
fn common_line_point(v: &[Vec3; 4]) -> Result<Vec3> {
    let mut m = [[0.0_f64; 3]; 3];
    let mut rhs = [0.0_f64; 3];
    for opposite in 0..4 {
        let face: Vec<usize> = (0..4).filter(|&i| i != opposite).collect();
        let centroid = scale(add(add(v[face[0]], v[face[1]]), v[face[2]]), 1.0 / 3.0);
        let dir = sub(centroid, v[opposite]);
        let d = scale(dir, 1.0 / norm(dir));
        // Accumulate (I - d d^T) and (I - d d^T) a.
        for r in 0..3 {
            for c in 0..3 {
                let proj = if r == c { 1.0 } else { 0.0 };
                m[r][c] += proj - d[r] * d[c];
            }
            rhs[r] += (if r == 0 { v[opposite][0] } else if r == 1 { v[opposite][1] } else { v[opposite][2] })
                - d[r] * dot(d, v[opposite]);
        }
    }
    solve3(m, rhs).ok_or_else(|| Error::Geometry("vertex-to-face lines are parallel".into()))
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<Vec3> {
    for col in 0..3 {
        let mut pivot = col;
        for row in (col + 1)..3 {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in 0..3 {
                    m[row][k] -= f * m[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some([b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2]])
}

/// Volumes of the tessellation pieces by the Klein quadrature.
pub fn tessellation_volumes(tess: &Tessellation, order: usize) -> Result<Vec<f64>> {
    tess.pieces
        .iter()
        .map(|p| klein_tetrahedron_volume(*p, order))
        .collect()
}

// ---------------------------------------------------------------------------
// Face pairing
// ---------------------------------------------------------------------------

/// One face identification of the tetrahedron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacePairing {
    /// Source face as an ordered vertex triple.
    pub source: [usize; 3],
    /// Image vertices, in the order matching `source`.
    pub target: [usize; 3],
    /// The orientation-preserving half-space isometry realizing the vertex
    /// correspondence (an order-three rotation for the pairings built here).
    pub isometry: MobiusMap,
    /// Whether the actual gluing composes with the reflection through the
    /// target plane (it must, for the quotient of a single tetrahedron).
    pub orientation_reversing: bool,
}

impl FacePairing {
    /// Checks that the isometry maps the source ideal vertices onto the
    /// target ideal vertices within the given tolerance.
    pub fn verify(&self, tet: &IdealTetrahedron, tol: f64) -> Result<()> {
        let v = tet.halfspace_vertices();
        for k in 0..3 {
            let img = apply(&self.isometry, v[self.source[k]]);
            if !img.approx_eq(&v[self.target[k]], tol) {
                return Err(Error::Geometry(format!(
                    "pairing sends vertex {} off its target {}",
                    self.source[k], self.target[k]
                )));
            }
        }
        Ok(())
    }
}

/// Abstract closed/punctured surface bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinatorialSurface {
    pub vertices: i64,
    pub edges: i64,
    pub faces: i64,
    pub orientable: bool,
    pub punctures: i64,
}

impl CombinatorialSurface {
    /// Euler characteristic of the closed surface.
    pub fn chi_closed(&self) -> i64 {
        self.vertices - self.edges + self.faces
    }

    /// Euler characteristic after removing the punctures.
    pub fn chi(&self) -> i64 {
        self.chi_closed() - self.punctures
    }

    /// Orientable genus or cross-cap number of the closed surface.
    pub fn genus(&self) -> i64 {
        if self.orientable {
            (2 - self.chi_closed()) / 2
        } else {
            2 - self.chi_closed()
        }
    }
}

/// Everything the face pairing determines about the quotient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiesekingReport {
    pub tetrahedron: IdealTetrahedron,
    pub pairings: [FacePairing; 2],
    /// Edge classes as lists of vertex pairs.
    pub edge_classes: Vec<Vec<(usize, usize)>>,
    /// Interior dihedral angle total around each class.
    pub edge_class_angle_sums: Vec<f64>,
    pub cusp_count: usize,
    pub orientable: bool,
    pub double_cover_tetrahedra: usize,
    /// The link surface of the single cusp.
    pub cusp_link: CombinatorialSurface,
}

/// Builds the two order-three face identifications of the regular ideal
/// tetrahedron (each a rotation about a vertex axis composed with the
/// reflection through the target face), verifies them, and derives the
/// quotient combinatorics: one edge class with angle sum `2 pi`, one cusp,
/// a non-orientable quotient whose orientation double cover has two
/// tetrahedra, and a Klein-bottle cusp link.
pub fn gieseking_pairing() -> Result<GiesekingReport> {
    let tet = regular_ideal_tetrahedron(Model::Klein);
    let v = tet.halfspace_vertices();
    // Face (0,1,2) -> (3,1,0): the order-three rotation about vertex 1.
    // Face (0,2,3) -> (3,2,1): the order-three rotation about vertex 2.
    let faces = [([0usize, 1, 2], [3usize, 1, 0]), ([0, 2, 3], [3, 2, 1])];
    let mut pairings = Vec::with_capacity(2);
    for (source, target) in faces {
        let isometry = MobiusMap::map_three_points(
            [v[source[0]], v[source[1]], v[source[2]]],
            [v[target[0]], v[target[1]], v[target[2]]],
        )?;
        let pairing = FacePairing {
            source,
            target,
            isometry,
            orientation_reversing: true,
        };
        pairing.verify(&tet, 1e-10)?;
        pairings.push(pairing);
    }
    let pairings: [FacePairing; 2] = [pairings[0].clone(), pairings[1].clone()];

    // Vertex map of each pairing, defined on its source face.
    let vertex_map = |p: &FacePairing, i: usize| -> Option<usize> {
        p.source.iter().position(|&s| s == i).map(|k| p.target[k])
    };

    // Edge classes under the two identifications.
    let edges: Vec<(usize, usize)> = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let edge_index = |a: usize, b: usize| -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        edges.iter().position(|&e| e == (a, b)).unwrap()
    };
    let mut parent: Vec<usize> = (0..edges.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for p in &pairings {
        for a in 0..3 {
            for b in (a + 1)..3 {
                let (i, j) = (p.source[a], p.source[b]);
                let (ti, tj) = (vertex_map(p, i).unwrap(), vertex_map(p, j).unwrap());
                let (e1, e2) = (edge_index(i, j), edge_index(ti, tj));
                let (r1, r2) = (find(&mut parent, e1), find(&mut parent, e2));
                if r1 != r2 {
                    parent[r1] = r2;
                }
            }
        }
    }
    let mut classes: std::collections::BTreeMap<usize, Vec<(usize, usize)>> = Default::default();
    for (idx, &e) in edges.iter().enumerate() {
        classes.entry(find(&mut parent, idx)).or_default().push(e);
    }
    let edge_classes: Vec<Vec<(usize, usize)>> = classes.into_values().collect();
    let mut edge_class_angle_sums = Vec::with_capacity(edge_classes.len());
    for class in &edge_classes {
        let mut sum = 0.0;
        for &e in class {
            sum += interior_dihedral_angle(&tet, e)?;
        }
        edge_class_angle_sums.push(sum);
    }

    // Cusp count: vertex classes under the pairings.
    let mut vparent: Vec<usize> = (0..4).collect();
    for p in &pairings {
        for &i in &p.source {
            let j = vertex_map(p, i).unwrap();
            let (r1, r2) = (find(&mut vparent, i), find(&mut vparent, j));
            if r1 != r2 {
                vparent[r1] = r2;
            }
        }
    }
    let cusp_count = (0..4)
        .map(|i| find(&mut vparent, i))
        .collect::<std::collections::BTreeSet<_>>()
        .len();

    // Orientability: a single tetrahedron glued by orientation-reversing
    // maps has a non-orientable quotient; the orientation double cover uses
    // one sheet of each sign.
    let any_reversing = pairings.iter().any(|p| p.orientation_reversing);
    let orientable = !any_reversing;
    let double_cover_tetrahedra = if orientable { 1 } else { 2 };

    let cusp_link = cusp_link_surface(&pairings)?;

    Ok(GiesekingReport {
        tetrahedron: tet,
        pairings,
        edge_classes,
        edge_class_angle_sums,
        cusp_count,
        orientable,
        double_cover_tetrahedra,
        cusp_link,
    })
}

/// Builds the cusp link surface of the one-vertex quotient: one triangle per
/// tetrahedron vertex, sides glued by the face pairings, corners tracked for
/// the Euler characteristic and orientability via sign propagation.
fn cusp_link_surface(pairings: &[FacePairing; 2]) -> Result<CombinatorialSurface> {
    let faces = [[0usize, 1, 2], [3, 1, 0], [0, 2, 3], [3, 2, 1]];
    let face_set = |f: &[usize; 3]| -> [usize; 3] {
        let mut s = *f;
        s.sort_unstable();
        s
    };
    // A corner of the link is (vertex i, incident edge (i, x)); a side is
    // (vertex i, face containing i), joining the two corners of that face.
    type Corner = (usize, usize); // (vertex, other endpoint of the edge)
    let corners: Vec<Corner> = (0..4)
        .flat_map(|i| (0..4).filter(move |&x| x != i).map(move |x| (i, x)))
        .collect();
    let corner_index = |c: Corner| corners.iter().position(|&x| x == c).unwrap();
    let mut cparent: Vec<usize> = (0..corners.len()).collect();
    fn cfind(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = cfind(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }

    // Sides with orientation data: (triangle vertex, ordered corner pair,
    // in-triangle direction).
    struct Glue {
        tri_a: usize,
        corners_a: [Corner; 2],
        tri_b: usize,
        corners_b: [Corner; 2],
    }
    let mut glues: Vec<Glue> = Vec::new();
    for p in pairings {
        let sigma = |i: usize| -> usize {
            let k = p.source.iter().position(|&s| s == i).unwrap();
            p.target[k]
        };
        let src_sorted = face_set(&p.source);
        let src_face = faces
            .iter()
            .find(|f| face_set(f) == src_sorted)
            .expect("source face listed");
        for &i in src_face {
            // Side (i, src_face): corners are the two edges of the face at i.
            let others: Vec<usize> = src_face.iter().copied().filter(|&x| x != i).collect();
            let ca = [(i, others[0]), (i, others[1])];
            let j = sigma(i);
            let cb = [(j, sigma(others[0])), (j, sigma(others[1]))];
            for k in 0..2 {
                let (r1, r2) = (
                    cfind(&mut cparent, corner_index(ca[k])),
                    cfind(&mut cparent, corner_index(cb[k])),
                );
                if r1 != r2 {
                    cparent[r1] = r2;
                }
            }
            glues.push(Glue {
                tri_a: i,
                corners_a: ca,
                tri_b: j,
                corners_b: cb,
            });
        }
    }

    let link_vertices = (0..corners.len())
        .map(|i| cfind(&mut cparent, i))
        .collect::<std::collections::BTreeSet<_>>()
        .len() as i64;
    let link_edges = glues.len() as i64; // each glue identifies two sides
    let link_faces = 4_i64;

    // Orientability: reference cyclic order of the corners of triangle i is
    // the sorted list of other vertices; each glue relates traversal
    // directions, and a consistent sign assignment must flip direction.
    let tri_corners = |i: usize| -> Vec<usize> { (0..4).filter(|&x| x != i).collect() };
    let direction = |tri: usize, pair: &[Corner; 2]| -> i8 {
        let order = tri_corners(tri);
        let a = order.iter().position(|&x| x == pair[0].1).unwrap();
        let b = order.iter().position(|&x| x == pair[1].1).unwrap();
        if (a + 1) % 3 == b {
            1
        } else {
            -1
        }
    };
    let mut sign = [0i8; 4];
    sign[0] = 1;
    let mut changed = true;
    let mut orientable = true;
    while changed {
        changed = false;
        for g in &glues {
            let d1 = direction(g.tri_a, &g.corners_a);
            let d2 = direction(g.tri_b, &g.corners_b);
            // Opposite traversal across a glued side keeps orientation.
            let rel = -(d1 * d2);
            if sign[g.tri_a] != 0 && sign[g.tri_b] == 0 {
                sign[g.tri_b] = sign[g.tri_a] * rel;
                changed = true;
            } else if sign[g.tri_b] != 0 && sign[g.tri_a] == 0 {
                sign[g.tri_a] = sign[g.tri_b] * rel;
                changed = true;
            } else if sign[g.tri_a] != 0 && sign[g.tri_b] != 0 && sign[g.tri_a] * rel != sign[g.tri_b]
            {
                orientable = false;
            }
        }
    }

    Ok(CombinatorialSurface {
        vertices: link_vertices,
        edges: link_edges,
        faces: link_faces,
        orientable,
        punctures: 0,
    })
}

// ---------------------------------------------------------------------------
// Surface bookkeeping
// ---------------------------------------------------------------------------

/// Euler-characteristic ledger for the surfaces associated with the
/// one-tetrahedron quotient and the once-punctured torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzBookkeeping {
    /// Witness for the four-punctured sphere (octahedron with 4 punctures).
    pub four_punctured_sphere: CombinatorialSurface,
    pub four_punctured_sphere_chi: i64,
    /// Connected sum of two Klein bottles: chi by the connected-sum formula.
    pub klein_bottle_sum_chi: i64,
    pub quotient_orientable: bool,
    pub double_cover_chi: i64,
    pub double_cover_genus: i64,
    pub punctured_torus_chi: i64,
    /// Strict upper area bound `2 pi` for the minimal representative.
    pub punctured_torus_area_bound: f64,
}

/// Verifies the Euler-characteristic facts of the example surfaces.
pub fn schwarz_surface_bookkeeping() -> Result<SchwarzBookkeeping> {
    // Sphere witness: the octahedron, with the four equatorial vertices
    // marked as punctures.
    let sphere = CombinatorialSurface {
        vertices: 6,
        edges: 12,
        faces: 8,
        orientable: true,
        punctures: 4,
    };
    if sphere.chi_closed() != 2 {
        return Err(Error::Geometry("octahedron witness must have chi 2".into()));
    }
    let four_punctured_chi = sphere.chi(); // 2 - 4 = -2

    // chi(K # K) by the connected-sum formula with chi(K) = 0; the quotient
    // surface inherits non-orientability from the reversing pairings.
    let gieseking = gieseking_pairing()?;
    let klein_bottle_sum_chi = 0 + 0 - 2;
    if klein_bottle_sum_chi != four_punctured_chi {
        return Err(Error::Geometry(
            "quotient surface chi must match the glued-up punctured sphere".into(),
        ));
    }

    // Orientation double cover doubles chi; genus from 2 - 2g = chi.
    let double_cover_chi = 2 * klein_bottle_sum_chi;
    let double_cover_genus = (2 - double_cover_chi) / 2;

    let punctured_torus_chi = 2 - 2 * 1 - 1;
    Ok(SchwarzBookkeeping {
        four_punctured_sphere: sphere,
        four_punctured_sphere_chi: four_punctured_chi,
        klein_bottle_sum_chi,
        quotient_orientable: gieseking.orientable,
        double_cover_chi,
        double_cover_genus,
        punctured_torus_chi,
        punctured_torus_area_bound: std::f64::consts::TAU,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REGULAR_VOLUME: f64 = 1.014941606409653;

    #[test]
    fn regular_tetrahedron_symmetric() {
        let tet = regular_ideal_tetrahedron(Model::Klein);
        let v = tet.klein_vertices().unwrap();
        for i in 0..4 {
            assert!((norm(v[i]) - 1.0).abs() < 1e-15);
            for j in (i + 1)..4 {
                assert!((dot(v[i], v[j]) + 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn regular_dihedral_angles() {
        for model in [Model::Klein, Model::Halfspace] {
            let tet = regular_ideal_tetrahedron(model);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let interior = interior_dihedral_angle(&tet, (i, j)).unwrap();
                    assert!(
                        (interior - std::f64::consts::FRAC_PI_3).abs() < 1e-9,
                        "interior angle {interior}"
                    );
                    let outward = dihedral_angle(&tet, (i, j)).unwrap();
                    assert!((outward - 2.0 * std::f64::consts::FRAC_PI_3).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn vertex_angle_sums_are_pi() {
        let tet = regular_ideal_tetrahedron(Model::Halfspace);
        for v in 0..4 {
            let mut sum = 0.0;
            for o in 0..4 {
                if o != v {
                    sum += interior_dihedral_angle(&tet, (v, o)).unwrap();
                }
            }
            assert!((sum - std::f64::consts::PI).abs() < 1e-9);
        }
    }

    #[test]
    fn random_ideal_tetrahedra_angle_structure() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let verts: [ExtComplex; 4] = [
                ExtComplex::finite(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                ExtComplex::finite(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                ExtComplex::finite(rng.gen_range(-2.0..2.0), rng.gen_range(0.5..2.0)),
                ExtComplex::Infinity,
            ];
            let tet = match IdealTetrahedron::halfspace(verts) {
                Ok(t) => t,
                Err(_) => continue,
            };
            // Opposite edges share their interior angle.
            for (e1, e2) in [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))] {
                let a1 = interior_dihedral_angle(&tet, e1).unwrap();
                let a2 = interior_dihedral_angle(&tet, e2).unwrap();
                assert!((a1 - a2).abs() < 1e-8, "{a1} vs {a2}");
            }
            // Angle sums at each vertex equal pi.
            for v in 0..4 {
                let mut sum = 0.0;
                for o in 0..4 {
                    if o != v {
                        sum += interior_dihedral_angle(&tet, (v, o)).unwrap();
                    }
                }
                assert!((sum - std::f64::consts::PI).abs() < 1e-8);
            }
            // Volume positive and maximized by the regular tetrahedron.
            let vol = tetra_volume(&tet).unwrap();
            assert!(vol >= 0.0);
            assert!(vol <= REGULAR_VOLUME + 1e-6);
        }
    }

    #[test]
    fn lobachevsky_reference_values() {
        assert_eq!(lobachevsky(0.0), 0.0);
        assert!(lobachevsky(std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        let max = lobachevsky(std::f64::consts::PI / 6.0);
        assert!((max - 0.5074708).abs() < 1e-6, "L(pi/6) = {max}");
        // Odd and pi-periodic on a sampled grid; maximal at pi/6.
        for k in 0..50 {
            let t = -2.0 + 4.4 * k as f64 / 49.0;
            assert!((lobachevsky(-t) + lobachevsky(t)).abs() < 1e-9);
            assert!(
                (lobachevsky(t + std::f64::consts::PI) - lobachevsky(t)).abs() < 1e-9
            );
            assert!(lobachevsky(t) <= max + 1e-12);
        }
    }

    #[test]
    fn regular_volume_via_angles() {
        let tet = regular_ideal_tetrahedron(Model::Klein);
        let vol = tetra_volume(&tet).unwrap();
        assert!((vol - REGULAR_VOLUME).abs() < 1e-6, "volume {vol}");
        // Equals 2 L(pi/6) by the duplication identity.
        assert!((vol - 2.0 * lobachevsky(std::f64::consts::PI / 6.0)).abs() < 1e-9);
        // Figure-eight-style double: two regular tetrahedra.
        assert!((2.0 * vol - 2.0298832).abs() < 2e-6);
    }

    #[test]
    fn degenerate_tetrahedron_zero_volume() {
        // Four concyclic points: all shapes real.
        let tet = IdealTetrahedron::halfspace([
            ExtComplex::finite(0.0, 0.0),
            ExtComplex::finite(1.0, 0.0),
            ExtComplex::finite(3.0, 0.0),
            ExtComplex::Infinity,
        ])
        .unwrap();
        let vol = tetra_volume(&tet).unwrap();
        assert!(vol.abs() < 1e-9);
        for e in [(0usize, 1usize), (0, 3), (1, 3)] {
            let a = dihedral_angle(&tet, e).unwrap();
            assert!(a.abs() < 1e-9 || (a - std::f64::consts::PI).abs() < 1e-9);
        }
    }

    #[test]
    fn klein_point_map() {
        let origin = klein_to_halfspace_point([0.0, 0.0, 0.0]).unwrap();
        assert!(norm(sub(origin, [0.0, 0.0, 1.0])) < 1e-14);
        assert!(klein_to_halfspace_point([0.0, 0.0, 1.5]).is_err());
    }

    #[test]
    fn tessellation_structure() {
        let tet = regular_ideal_tetrahedron(Model::Klein);
        let tess = barycentric_tessellation(&tet).unwrap();
        assert_eq!(tess.pieces.len(), 24);
        assert!(norm(tess.apex) < 1e-12, "apex at the origin");
        // Non-regular input rejected.
        let skew = IdealTetrahedron::halfspace([
            ExtComplex::finite(0.0, 0.0),
            ExtComplex::finite(1.0, 0.0),
            ExtComplex::finite(0.3, 1.7),
            ExtComplex::Infinity,
        ])
        .unwrap();
        assert!(barycentric_tessellation(&skew).is_err());
    }

    #[test]
    fn tessellation_volumes_partition_total() {
        let tet = regular_ideal_tetrahedron(Model::Klein);
        let tess = barycentric_tessellation(&tet).unwrap();
        let volumes = tessellation_volumes(&tess, 32).unwrap();
        let total: f64 = volumes.iter().sum();
        assert!(
            (total - REGULAR_VOLUME).abs() < 1e-6,
            "quadrature total {total}"
        );
        let mean = total / 24.0;
        for v in &volumes {
            assert!((v - mean).abs() <= 1e-8 * mean.max(1.0), "piece {v} vs {mean}");
        }
    }

    #[test]
    fn gieseking_combinatorics() {
        let report = gieseking_pairing().unwrap();
        // One edge class containing all six edges, angle sum 2 pi.
        assert_eq!(report.edge_classes.len(), 1);
        assert_eq!(report.edge_classes[0].len(), 6);
        assert!(
            (report.edge_class_angle_sums[0] - std::f64::consts::TAU).abs() < 1e-9,
            "angle sum {}",
            report.edge_class_angle_sums[0]
        );
        assert_eq!(report.cusp_count, 1);
        assert!(!report.orientable);
        assert_eq!(report.double_cover_tetrahedra, 2);
        // Cusp link: chi 0 and non-orientable, hence a Klein bottle.
        assert_eq!(report.cusp_link.chi_closed(), 0);
        assert!(!report.cusp_link.orientable);
        for p in &report.pairings {
            p.verify(&report.tetrahedron, 1e-10).unwrap();
            // Order-three rotation: |trace| = 2 cos(pi/3) = 1.
            assert!((p.isometry.trace().norm() - 1.0).abs() < 1e-9);
            let cubed = crate::mobius::compose(
                &p.isometry,
                &crate::mobius::compose(&p.isometry, &p.isometry),
            );
            assert!(cubed.is_identity(1e-9));
        }
    }

    #[test]
    fn bookkeeping_values() {
        let facts = schwarz_surface_bookkeeping().unwrap();
        assert_eq!(facts.four_punctured_sphere_chi, -2);
        assert_eq!(facts.klein_bottle_sum_chi, -2);
        assert!(!facts.quotient_orientable);
        assert_eq!(facts.double_cover_chi, -4);
        assert_eq!(facts.double_cover_genus, 3);
        assert_eq!(facts.punctured_torus_chi, -1);
        assert!((facts.punctured_torus_area_bound - std::f64::consts::TAU).abs() < 1e-15);
    }

    #[test]
    fn klein_volume_finite_cell() {
        // A small Euclidean tetrahedron near the origin: volume close to the
        // Euclidean value since the density is ~1.
        let eps = 1e-3;
        let v = [
            [0.0, 0.0, 0.0],
            [eps, 0.0, 0.0],
            [0.0, eps, 0.0],
            [0.0, 0.0, eps],
        ];
        let vol = klein_tetrahedron_volume(v, 8).unwrap();
        let euclid = eps * eps * eps / 6.0;
        assert!((vol - euclid).abs() < 1e-6 * euclid.max(1e-12) + 1e-12);
    }
}
