//! Cusp-end geometry: the deformed conformal metrics on the chart
//! `{(x, y, z) : z >= 1/2}`, their curvatures, horotorus quantities, and the
//! rescaling maps that shrink a cusp end.
//!
//! A profile `psi` turns the chart into the metric `(1/psi(z)^2) dX^2`; the
//! hyperbolic case is `psi(z) = z`. Profiles are non-decreasing, equal to the
//! identity low in the chart, and carry certified bounds on `|psi'|` and
//! `|psi psi''|` so curvature stays uniformly bounded under deformation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{cross2, norm2, Vec2};
use crate::quad::adaptive_simpson;

/// Chart floor: operations reject points below this height.
pub const CHART_FLOOR: f64 = 0.5;

const QUAD_TOL: f64 = 1e-10;

/// A cusp end: the chart quotient by the lattice spanned by `v1`, `v2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspEnd {
    v1: Vec2,
    v2: Vec2,
}

impl CuspEnd {
    pub fn new(v1: Vec2, v2: Vec2) -> Result<Self> {
        if cross2(v1, v2).abs() <= 0.0 {
            return Err(Error::Argument(
                "lattice generators must be linearly independent".into(),
            ));
        }
        Ok(CuspEnd { v1, v2 })
    }

    pub fn v1(&self) -> Vec2 {
        self.v1
    }

    pub fn v2(&self) -> Vec2 {
        self.v2
    }

    /// Maximum Euclidean generator length; shrinks as `1/z0` under rescaling.
    pub fn lambda(&self) -> f64 {
        norm2(self.v1).max(norm2(self.v2))
    }

    /// Euclidean area of the fundamental parallelogram.
    pub fn cell_area(&self) -> f64 {
        cross2(self.v1, self.v2).abs()
    }
}

/// A point of the cusp chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CuspPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        CuspPoint { x, y, z }
    }
}

/// Symmetric 3x3 metric tensor in an ordered coordinate frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    m: [[f64; 3]; 3],
}

impl MetricTensor {
    /// Builds from entries, enforcing symmetry within a small tolerance.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (m[i][j] - m[j][i]).abs() > 1e-12 * (1.0 + m[i][j].abs()) {
                    return Err(Error::Geometry(format!(
                        "metric tensor not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(MetricTensor { m })
    }

    pub fn diagonal(d: f64) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = d;
        }
        MetricTensor { m }
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    /// Positive-definiteness via leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        let m = &self.m;
        let m1 = m[0][0];
        let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let m3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        m1 > 0.0 && m2 > 0.0 && m3 > 0.0
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Parameter data for the supported profile families.
///
/// Serialized form is a tagged JSON document, e.g.
/// `{"family":"ramp","flat_end":1.0,"critical":2.0,"plateau":1.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PsiFamily {
    /// The identity profile `psi(z) = z` (hyperbolic metric).
    Hyperbolic,
    /// Identity up to `flat_end`, then a C^2 quintic ramp that flattens at
    /// `critical` and stays at `plateau` beyond it.
    Ramp {
        flat_end: f64,
        critical: f64,
        plateau: f64,
    },
    /// `psi(z) = z^exponent`. A test family for curvature oracles; skips the
    /// identity normalization below z = 1.
    Power { exponent: f64 },
    /// `psi(z) = (1/lambda) base(lambda z)`, the pullback under
    /// `(x,y,z) -> (lambda x, lambda y, lambda z)`.
    Scaled { base: Box<PsiFamily>, lambda: f64 },
}

impl PsiFamily {
    fn eval(&self, z: f64) -> f64 {
        match self {
            PsiFamily::Hyperbolic => z,
            PsiFamily::Ramp {
                flat_end,
                critical,
                plateau,
            } => {
                if z <= *flat_end {
                    z
                } else if z >= *critical {
                    *plateau
                } else {
                    let (width, t) = ramp_coord(*flat_end, *critical, z);
                    let (a, b, c) = ramp_coeffs(*flat_end, *critical, *plateau);
                    flat_end + width * (t + a * t.powi(3) + b * t.powi(4) + c * t.powi(5))
                }
            }
            PsiFamily::Power { exponent } => z.powf(*exponent),
            PsiFamily::Scaled { base, lambda } => base.eval(lambda * z) / lambda,
        }
    }

    fn d1(&self, z: f64) -> f64 {
        match self {
            PsiFamily::Hyperbolic => 1.0,
            PsiFamily::Ramp {
                flat_end,
                critical,
                plateau,
            } => {
                if z <= *flat_end {
                    1.0
                } else if z >= *critical {
                    0.0
                } else {
                    let (_, t) = ramp_coord(*flat_end, *critical, z);
                    let (a, b, c) = ramp_coeffs(*flat_end, *critical, *plateau);
                    1.0 + 3.0 * a * t * t + 4.0 * b * t.powi(3) + 5.0 * c * t.powi(4)
                }
            }
            PsiFamily::Power { exponent } => exponent * z.powf(exponent - 1.0),
            PsiFamily::Scaled { base, lambda } => base.d1(lambda * z),
        }
    }

    fn d2(&self, z: f64) -> f64 {
        match self {
            PsiFamily::Hyperbolic => 0.0,
            PsiFamily::Ramp {
                flat_end,
                critical,
                plateau,
            } => {
                if z <= *flat_end || z >= *critical {
                    0.0
                } else {
                    let (width, t) = ramp_coord(*flat_end, *critical, z);
                    let (a, b, c) = ramp_coeffs(*flat_end, *critical, *plateau);
                    (6.0 * a * t + 12.0 * b * t * t + 20.0 * c * t.powi(3)) / width
                }
            }
            PsiFamily::Power { exponent } => {
                exponent * (exponent - 1.0) * z.powf(exponent - 2.0)
            }
            PsiFamily::Scaled { base, lambda } => lambda * base.d2(lambda * z),
        }
    }
}

fn ramp_coord(flat_end: f64, critical: f64, z: f64) -> (f64, f64) {
    let width = critical - flat_end;
    (width, (z - flat_end) / width)
}

/// Coefficients of the quintic `g(t) = t + a t^3 + b t^4 + c t^5` with
/// `g(0)=0, g'(0)=1, g''(0)=0, g(1)=m, g'(1)=0, g''(1)=0` where
/// `m = (plateau - flat_end) / (critical - flat_end)`.
fn ramp_coeffs(flat_end: f64, critical: f64, plateau: f64) -> (f64, f64, f64) {
    let m = (plateau - flat_end) / (critical - flat_end);
    (10.0 * m - 6.0, 8.0 - 15.0 * m, 6.0 * m - 3.0)
}

/// A deformation profile with derivative access and certified bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PsiFamily", into = "PsiFamily")]
pub struct PsiProfile {
    family: PsiFamily,
    b1: f64,
    b2: f64,
    critical_points: Vec<f64>,
}

impl TryFrom<PsiFamily> for PsiProfile {
    type Error = Error;

    fn try_from(family: PsiFamily) -> Result<Self> {
        PsiProfile::from_family(family)
    }
}

impl From<PsiProfile> for PsiFamily {
    fn from(p: PsiProfile) -> PsiFamily {
        p.family
    }
}

impl PsiProfile {
    /// The hyperbolic profile `psi(z) = z`.
    pub fn hyperbolic() -> Self {
        PsiProfile {
            family: PsiFamily::Hyperbolic,
            b1: 1.0,
            b2: 0.0,
            critical_points: Vec::new(),
        }
    }

    /// The quintic ramp: identity on `(0, flat_end]`, flattening exactly at
    /// `critical`, constant `plateau` beyond.
    ///
    /// `flat_end >= 1` keeps the identity normalization on `[1/2, 1]`. The
    /// ramp is rejected if the plateau makes it non-monotone.
    pub fn ramp(flat_end: f64, critical: f64, plateau: f64) -> Result<Self> {
        if flat_end < 1.0 {
            return Err(Error::Argument(format!(
                "flat_end {flat_end} < 1 breaks the identity normalization on [1/2, 1]"
            )));
        }
        if !(critical > flat_end) {
            return Err(Error::Argument(
                "critical height must exceed flat_end".into(),
            ));
        }
        if !(plateau > flat_end) {
            return Err(Error::Argument("plateau must exceed flat_end".into()));
        }
        let family = PsiFamily::Ramp {
            flat_end,
            critical,
            plateau,
        };
        Self::from_family(family)
    }

    /// Test profile `psi(z) = z^exponent`; does not satisfy the identity
    /// normalization unless `exponent = 1`. Bounds are unbounded on the
    /// half-line, stored as infinity.
    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::Argument("exponent must be positive".into()));
        }
        Self::from_family(PsiFamily::Power { exponent })
    }

    /// The rescaled profile `(1/lambda) psi(lambda z)`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Argument("scale factor must be positive".into()));
        }
        // Flatten nested scalings so composed rescalings agree exactly.
        let family = match self.family.clone() {
            PsiFamily::Scaled { base, lambda: l0 } => PsiFamily::Scaled {
                base,
                lambda: l0 * lambda,
            },
            other => PsiFamily::Scaled {
                base: Box::new(other),
                lambda,
            },
        };
        Self::from_family(family)
    }

    fn from_family(family: PsiFamily) -> Result<Self> {
        match &family {
            PsiFamily::Hyperbolic => Ok(Self::hyperbolic()),
            PsiFamily::Ramp {
                flat_end,
                critical,
                plateau,
            } => {
                let (flat_end, critical, plateau) = (*flat_end, *critical, *plateau);
                let (a, b, c) = ramp_coeffs(flat_end, critical, plateau);
                let d1 = |t: f64| 1.0 + 3.0 * a * t * t + 4.0 * b * t.powi(3) + 5.0 * c * t.powi(4);
                // g' is critical exactly where g'' vanishes: t = 0 or the
                // roots of 20c t^2 + 12b t + 6a.
                let mut candidates = vec![0.0, 1.0];
                let (qa, qb, qc) = (20.0 * c, 12.0 * b, 6.0 * a);
                if qa.abs() > 1e-300 {
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc >= 0.0 {
                        let r = disc.sqrt();
                        for t in [(-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa)] {
                            if (0.0..=1.0).contains(&t) {
                                candidates.push(t);
                            }
                        }
                    }
                } else if qb.abs() > 1e-300 {
                    let t = -qc / qb;
                    if (0.0..=1.0).contains(&t) {
                        candidates.push(t);
                    }
                }
                let mut min_d1 = f64::INFINITY;
                let mut max_d1 = f64::NEG_INFINITY;
                for &t in &candidates {
                    min_d1 = min_d1.min(d1(t));
                    max_d1 = max_d1.max(d1(t));
                }
                if min_d1 < -1e-12 {
                    return Err(Error::Argument(format!(
                        "ramp (flat_end={flat_end}, critical={critical}, plateau={plateau}) \
                         is not monotone: min psi' = {min_d1:.3e}"
                    )));
                }
                let b1 = max_d1.max(1.0);
                // |psi psi''| certified by dense sampling of the ramp.
                let width = critical - flat_end;
                let mut b2: f64 = 0.0;
                let n = 8192;
                for i in 0..=n {
                    let z = flat_end + width * i as f64 / n as f64;
                    b2 = b2.max((family.eval(z) * family.d2(z)).abs());
                }
                let b2 = b2 * (1.0 + 1e-9) + 1e-15;
                Ok(PsiProfile {
                    family,
                    b1,
                    b2,
                    critical_points: vec![critical],
                })
            }
            PsiFamily::Power { .. } => Ok(PsiProfile {
                family,
                b1: f64::INFINITY,
                b2: f64::INFINITY,
                critical_points: Vec::new(),
            }),
            PsiFamily::Scaled { base, lambda } => {
                let base_profile = Self::from_family((**base).clone())?;
                let critical_points = base_profile
                    .critical_points
                    .iter()
                    .map(|zc| zc / lambda)
                    .collect();
                // Rescaling changes neither sup|psi'| nor sup|psi psi''|.
                Ok(PsiProfile {
                    b1: base_profile.b1,
                    b2: base_profile.b2,
                    critical_points,
                    family,
                })
            }
        }
    }

    pub fn family(&self) -> &PsiFamily {
        &self.family
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.family.eval(z)
    }

    pub fn d1(&self, z: f64) -> f64 {
        self.family.d1(z)
    }

    pub fn d2(&self, z: f64) -> f64 {
        self.family.d2(z)
    }

    /// Certified bound on `sup |psi'|`.
    pub fn b1(&self) -> f64 {
        self.b1
    }

    /// Certified bound on `sup |psi psi''|`.
    pub fn b2(&self) -> f64 {
        self.b2
    }

    /// Heights where `psi'` first vanishes. For ramp profiles the derivative
    /// stays zero on the plateau beyond the listed height.
    pub fn critical_points(&self) -> &[f64] {
        &self.critical_points
    }

    /// Checks the profile invariants on a sampled grid: identity on
    /// `[1/2, 1]`, monotonicity, and the certified bounds.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let n = samples.max(2);
        for i in 0..n {
            let z = 0.5 + 0.5 * i as f64 / (n - 1) as f64;
            if (self.eval(z) - z).abs() > 1e-12 {
                return Err(Error::Geometry(format!(
                    "psi({z}) = {} violates the identity normalization on [1/2, 1]",
                    self.eval(z)
                )));
            }
        }
        for i in 0..n {
            let z = 0.5 + 10.0 * i as f64 / (n - 1) as f64;
            let d1 = self.d1(z);
            if d1 < -1e-12 {
                return Err(Error::Geometry(format!("psi'({z}) = {d1} < 0")));
            }
            if d1.abs() > self.b1 * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::Geometry(format!("|psi'({z})| exceeds B1")));
            }
            let p2 = (self.eval(z) * self.d2(z)).abs();
            if p2 > self.b2 * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::Geometry(format!("|psi psi''|({z}) exceeds B2")));
            }
        }
        Ok(())
    }
}

fn require_chart(z: f64) -> Result<()> {
    if z < CHART_FLOOR {
        return Err(Error::Domain(format!("z = {z} below the chart floor 1/2")));
    }
    Ok(())
}

/// The metric tensor `(1/psi(z)^2) I` at a chart point.
pub fn metric_eval(psi: &PsiProfile, p: CuspPoint) -> Result<MetricTensor> {
    require_chart(p.z)?;
    let f = psi.eval(p.z);
    Ok(MetricTensor::diagonal(1.0 / (f * f)))
}

/// Sectional curvatures of the deformed metric at height `z`:
/// the horizontal `(x, y)` plane and the two vertical planes.
///
/// Returns `(-psi'^2, psi psi'' - psi'^2)`.
pub fn sectional_curvature(psi: &PsiProfile, z: f64) -> Result<(f64, f64)> {
    require_chart(z)?;
    let d1 = psi.d1(z);
    let horizontal = -d1 * d1;
    let vertical = psi.eval(z) * psi.d2(z) - d1 * d1;
    Ok((horizontal, vertical))
}

/// Mean curvature of the horotorus `{z = const}` with respect to the unit
/// normal `psi(z) dz` pointing toward the cusp: equals `psi'(z)`.
pub fn torus_mean_curvature(psi: &PsiProfile, z: f64) -> Result<f64> {
    require_chart(z)?;
    Ok(psi.d1(z))
}

/// Rescales the end by `(x,y,z) -> (z0 x, z0 y, z0 z)`: the lattice shrinks
/// by `1/z0` and the profile pulls back to `(1/z0) psi(z0 z)`.
pub fn rescale_end(end: &CuspEnd, psi: &PsiProfile, z0: f64) -> Result<(CuspEnd, PsiProfile)> {
    if z0 < 1.0 {
        return Err(Error::Argument(format!("rescale factor {z0} < 1")));
    }
    let scaled_end = CuspEnd::new(
        [end.v1[0] / z0, end.v1[1] / z0],
        [end.v2[0] / z0, end.v2[1] / z0],
    )?;
    Ok((scaled_end, psi.scaled(z0)?))
}

/// Arc length of the vertical segment between heights `z1 <= z2`:
/// the quadrature of `1/psi`. Equals `ln(z2/z1)` in the hyperbolic case.
pub fn vertical_arc_length(psi: &PsiProfile, z1: f64, z2: f64) -> Result<f64> {
    require_chart(z1)?;
    if z1 > z2 {
        return Err(Error::Argument(format!("z1 = {z1} exceeds z2 = {z2}")));
    }
    Ok(adaptive_simpson(|z| 1.0 / psi.eval(z), z1, z2, QUAD_TOL))
}

/// Horotorus area and shortest-generator length at height `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusQuantities {
    pub area: f64,
    pub shortest_generator_length: f64,
}

pub fn torus_quantities(end: &CuspEnd, psi: &PsiProfile, z: f64) -> Result<TorusQuantities> {
    require_chart(z)?;
    let f = psi.eval(z);
    Ok(TorusQuantities {
        area: end.cell_area() / (f * f),
        shortest_generator_length: norm2(end.v1()).min(norm2(end.v2())) / f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_eval_hyperbolic() {
        let psi = PsiProfile::hyperbolic();
        let g = metric_eval(&psi, CuspPoint::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(g.entry(0, 0), 1.0);
        assert_eq!(g.entry(1, 1), 1.0);
        assert_eq!(g.entry(2, 2), 1.0);
        assert_eq!(g.entry(0, 1), 0.0);

        let g = metric_eval(&psi, CuspPoint::new(3.0, -1.0, 2.0)).unwrap();
        for i in 0..3 {
            assert!((g.entry(i, i) - 0.25).abs() < 1e-15);
        }
        assert!(g.is_positive_definite());
    }

    #[test]
    fn metric_eval_plateau() {
        // Constant 3/2 beyond the ramp: conformal factor 4/9.
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let g = metric_eval(&psi, CuspPoint::new(0.0, 0.0, 10.0)).unwrap();
        assert!((g.entry(0, 0) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn metric_eval_rejects_below_chart() {
        let psi = PsiProfile::hyperbolic();
        assert!(matches!(
            metric_eval(&psi, CuspPoint::new(0.0, 0.0, 0.3)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hyperbolic_curvature_is_minus_one() {
        let psi = PsiProfile::hyperbolic();
        for z in [0.5, 1.0, 3.7, 40.0] {
            let (kh, kv) = sectional_curvature(&psi, z).unwrap();
            assert!((kh + 1.0).abs() < 1e-15);
            assert!((kv + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn power_profile_curvature() {
        // psi(z) = z^2 at z = 2: psi' = 4, psi'' = 2.
        let psi = PsiProfile::power(2.0).unwrap();
        let (kh, kv) = sectional_curvature(&psi, 2.0).unwrap();
        assert!((kh + 16.0).abs() < 1e-12);
        assert!((kv + 8.0).abs() < 1e-12);
    }

    #[test]
    fn flat_slab_curvature_vanishes() {
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let (kh, kv) = sectional_curvature(&psi, 3.0).unwrap();
        assert_eq!(kh, 0.0);
        assert_eq!(kv, 0.0);
    }

    #[test]
    fn mean_curvature_values() {
        let psi = PsiProfile::hyperbolic();
        assert_eq!(torus_mean_curvature(&psi, 5.0).unwrap(), 1.0);

        let ramp = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let zc = ramp.critical_points()[0];
        assert_eq!(torus_mean_curvature(&ramp, zc).unwrap(), 0.0);

        // m = 1/2 ramp: psi'(midpoint) = 1/2 exactly.
        let ramp = PsiProfile::ramp(1.0, 1.4, 1.2).unwrap();
        assert!((torus_mean_curvature(&ramp, 1.2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ramp_is_c2_at_junctions() {
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let eps = 1e-9;
        for z in [1.0, 2.0] {
            assert!((psi.eval(z - eps) - psi.eval(z + eps)).abs() < 1e-8);
            assert!((psi.d1(z - eps) - psi.d1(z + eps)).abs() < 1e-7);
            assert!((psi.d2(z - eps) - psi.d2(z + eps)).abs() < 1e-6);
        }
        assert!((psi.eval(2.0) - 1.5).abs() < 1e-15);
        assert_eq!(psi.d1(2.0), 0.0);
        psi.validate(512).unwrap();
    }

    #[test]
    fn non_monotone_ramp_rejected() {
        // Tiny plateau over a wide ramp dips below zero slope.
        assert!(PsiProfile::ramp(1.0, 3.0, 1.05).is_err());
    }

    #[test]
    fn rescale_identity_factor() {
        let end = CuspEnd::new([0.8, 0.0], [0.0, 0.6]).unwrap();
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let (end1, psi1) = rescale_end(&end, &psi, 1.0).unwrap();
        assert_eq!(end1.v1(), end.v1());
        for z in [0.6, 1.3, 2.5] {
            assert!((psi1.eval(z) - psi.eval(z)).abs() < 1e-15);
        }
    }

    #[test]
    fn rescale_shrinks_lambda() {
        let end = CuspEnd::new([0.8, 0.0], [0.0, 0.5]).unwrap();
        let psi = PsiProfile::hyperbolic();
        let (end4, _) = rescale_end(&end, &psi, 4.0).unwrap();
        assert!((end4.lambda() - 0.2).abs() < 1e-15);
        assert!(rescale_end(&end, &psi, 0.5).is_err());
    }

    #[test]
    fn rescale_curvature_chain_rule() {
        let end = CuspEnd::new([1.0, 0.0], [0.0, 1.0]).unwrap();
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let z0 = 2.5;
        let (_, psi_scaled) = rescale_end(&end, &psi, z0).unwrap();
        for z in [0.5, 0.7, 0.9] {
            let (kh_s, kv_s) = sectional_curvature(&psi_scaled, z).unwrap();
            let (kh, kv) = sectional_curvature(&psi, z0 * z).unwrap();
            assert!((kh_s - kh).abs() < 1e-10);
            assert!((kv_s - kv).abs() < 1e-10);
        }
        // Bounds carry over unchanged.
        assert_eq!(psi_scaled.b1(), psi.b1());
        assert_eq!(psi_scaled.b2(), psi.b2());
    }

    #[test]
    fn rescale_composition() {
        let end = CuspEnd::new([0.9, 0.1], [-0.2, 0.7]).unwrap();
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let (end_a, psi_a) = rescale_end(&end, &psi, 2.0).unwrap();
        let (end_ab, psi_ab) = rescale_end(&end_a, &psi_a, 3.0).unwrap();
        let (end_c, psi_c) = rescale_end(&end, &psi, 6.0).unwrap();
        for i in 0..2 {
            assert!((end_ab.v1()[i] - end_c.v1()[i]).abs() < 1e-12);
            assert!((end_ab.v2()[i] - end_c.v2()[i]).abs() < 1e-12);
        }
        for i in 0..50 {
            let z = 0.5 + 0.1 * i as f64;
            assert!((psi_ab.eval(z) - psi_c.eval(z)).abs() < 1e-12);
            assert!((psi_ab.d1(z) - psi_c.d1(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn vertical_arc_length_hyperbolic() {
        let psi = PsiProfile::hyperbolic();
        assert_eq!(vertical_arc_length(&psi, 2.0, 2.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((vertical_arc_length(&psi, 1.0, e).unwrap() - 1.0).abs() < 1e-9);
        assert!(
            (vertical_arc_length(&psi, 1.0, 2.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-9
        );
        assert!(vertical_arc_length(&psi, 2.0, 1.0).is_err());
    }

    #[test]
    fn torus_quantities_unit_lattice() {
        let end = CuspEnd::new([1.0, 0.0], [0.0, 1.0]).unwrap();
        let psi = PsiProfile::hyperbolic();
        let q1 = torus_quantities(&end, &psi, 1.0).unwrap();
        assert_eq!(q1.area, 1.0);
        assert_eq!(q1.shortest_generator_length, 1.0);
        let q2 = torus_quantities(&end, &psi, 2.0).unwrap();
        assert!((q2.area - 0.25).abs() < 1e-15);
        assert!((q2.shortest_generator_length - 0.5).abs() < 1e-15);
    }

    #[test]
    fn torus_lengths_decay_exponentially() {
        // In the hyperbolic case, length at arc parameter s is length(1) e^{-s}.
        let end = CuspEnd::new([1.0, 0.0], [0.0, 1.0]).unwrap();
        let psi = PsiProfile::hyperbolic();
        let base = torus_quantities(&end, &psi, 1.0)
            .unwrap()
            .shortest_generator_length;
        for s in [0.0_f64, 1.0, 2.0] {
            let q = torus_quantities(&end, &psi, s.exp()).unwrap();
            assert!((q.shortest_generator_length * s.exp() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_mean_curvature_is_area_first_variation() {
        let end = CuspEnd::new([1.0, 0.2], [0.1, 0.8]).unwrap();
        for psi in [
            PsiProfile::hyperbolic(),
            PsiProfile::ramp(1.0, 2.0, 1.5).unwrap(),
        ] {
            for z in [0.8, 1.2, 1.6, 2.4] {
                let h = torus_mean_curvature(&psi, z).unwrap();
                // Arc-length displacement along the unit normal psi dz.
                let delta = 1e-5;
                let f = psi.eval(z);
                let zp = z + delta * f + 0.5 * delta * delta * psi.d1(z) * f;
                let zm = z - delta * f + 0.5 * delta * delta * psi.d1(z) * f;
                let ap = torus_quantities(&end, &psi, zp).unwrap().area;
                let am = torus_quantities(&end, &psi, zm).unwrap().area;
                let a0 = torus_quantities(&end, &psi, z).unwrap().area;
                let h_fd = -(ap - am) / (2.0 * delta) / (2.0 * a0);
                assert!(
                    (h - h_fd).abs() < 1e-5,
                    "z = {z}: formula {h} vs variation {h_fd}"
                );
            }
        }
    }

    #[test]
    fn psi_profile_json_round_trip() {
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let text = serde_json::to_string(&psi).unwrap();
        assert!(text.contains("\"family\":\"ramp\""));
        let back: PsiProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, psi);
        assert_eq!(back.b1(), psi.b1());

        let scaled = psi.scaled(3.0).unwrap();
        let text = serde_json::to_string(&scaled).unwrap();
        let back: PsiProfile = serde_json::from_str(&text).unwrap();
        for z in [0.5, 0.6, 0.8] {
            assert_eq!(back.eval(z), scaled.eval(z));
        }
    }

    #[test]
    fn degenerate_lattice_rejected() {
        assert!(CuspEnd::new([1.0, 0.0], [2.0, 0.0]).is_err());
    }
}
