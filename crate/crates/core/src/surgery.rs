//! The Dehn-filling metric on a truncated cusp end: lattice coefficients,
//! the surgered tensor on `{L <= z <= L+1}`, the solid-torus pullback that
//! closes the end smoothly, the surgery mean-curvature formula, and the
//! rescaled profile builders used for truncated-manifold minimization.
//!
//! Writing the horotorus as `u v1/(2 pi) + v v2/(2 pi)` with `(u, v)` on the
//! square torus, the deformed metric takes the form
//! `(1/psi(z)^2)(a^2 du^2 + 2 b du dv + c^2 dv^2 + dz^2)`; the filling
//! multiplies the `u`-circle by a profile `phi` that shrinks it to a point at
//! `z = L + 1`, the core of the glued solid torus.

use serde::{Deserialize, Serialize};

use crate::cusp::{CuspEnd, MetricTensor, PsiProfile};
use crate::error::{Error, Result};
use crate::geom::{dot2, norm2};

/// Lattice coefficients of the square-torus parametrization:
/// `a = |v1|/(2 pi)`, `b = <v1, v2>/(4 pi^2)`, `c = |v2|/(2 pi)`.
pub fn lattice_coefficients(end: &CuspEnd) -> (f64, f64, f64) {
    let two_pi = std::f64::consts::TAU;
    (
        norm2(end.v1()) / two_pi,
        dot2(end.v1(), end.v2()) / (two_pi * two_pi),
        norm2(end.v2()) / two_pi,
    )
}

/// The collapse profile `phi` on `[L, L+1]`: identically one near `L`,
/// exactly `(L+1-z)/a` near `L+1`, and a non-increasing C^2 quintic between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiProfileData", into = "PhiProfileData")]
pub struct PhiProfile {
    length: f64,
    a_coeff: f64,
    flat_width: f64,
    linear_width: f64,
}

#[derive(Serialize, Deserialize)]
struct PhiProfileData {
    length: f64,
    a_coeff: f64,
    flat_width: f64,
    linear_width: f64,
}

impl TryFrom<PhiProfileData> for PhiProfile {
    type Error = Error;
    fn try_from(d: PhiProfileData) -> Result<Self> {
        PhiProfile::with_zones(d.length, d.a_coeff, d.flat_width, d.linear_width)
    }
}

impl From<PhiProfile> for PhiProfileData {
    fn from(p: PhiProfile) -> PhiProfileData {
        PhiProfileData {
            length: p.length,
            a_coeff: p.a_coeff,
            flat_width: p.flat_width,
            linear_width: p.linear_width,
        }
    }
}

impl PhiProfile {
    /// Default zones: flat on `[L, L+1/4]`, linear on `[L+3/4, L+1]`.
    pub fn new(length: f64, a_coeff: f64) -> Result<Self> {
        Self::with_zones(length, a_coeff, 0.25, 0.25)
    }

    /// Explicit zone widths. The linear zone value at its start is
    /// `linear_width / a`, which must stay below one for `phi` to decrease.
    pub fn with_zones(
        length: f64,
        a_coeff: f64,
        flat_width: f64,
        linear_width: f64,
    ) -> Result<Self> {
        if length < 1.0 {
            return Err(Error::Argument("surgery height L must be at least 1".into()));
        }
        if !(a_coeff > 0.0) {
            return Err(Error::Argument("lattice coefficient a must be positive".into()));
        }
        if !(flat_width > 0.0 && linear_width > 0.0 && flat_width + linear_width < 1.0) {
            return Err(Error::Argument("zone widths must be positive and sum below 1".into()));
        }
        if linear_width / a_coeff >= 1.0 {
            return Err(Error::Argument(format!(
                "linear zone value {}/a = {} reaches 1; shrink the zone or enlarge a",
                linear_width,
                linear_width / a_coeff
            )));
        }
        let phi = PhiProfile {
            length,
            a_coeff,
            flat_width,
            linear_width,
        };
        // Certify monotonicity of the blending quintic by dense sampling.
        let lo = length + flat_width;
        let hi = length + 1.0 - linear_width;
        let n = 4096;
        for i in 0..=n {
            let z = lo + (hi - lo) * i as f64 / n as f64;
            if phi.d1(z)? > 1e-12 {
                return Err(Error::Argument(
                    "collapse profile is not non-increasing with these zones".into(),
                ));
            }
        }
        Ok(phi)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn a_coeff(&self) -> f64 {
        self.a_coeff
    }

    /// Start of the zone where `phi` is exactly `(L+1-z)/a`.
    pub fn linear_zone_start(&self) -> f64 {
        self.length + 1.0 - self.linear_width
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        if z < self.length || z >= self.length + 1.0 {
            return Err(Error::Domain(format!(
                "z = {z} outside the surgery band [{}, {})",
                self.length,
                self.length + 1.0
            )));
        }
        Ok(())
    }

    /// Hermite data of the blend: from `(1, 0, 0)` at the end of the flat
    /// zone to `(w/a, -1/a, 0)` at the start of the linear zone.
    fn blend(&self, z: f64) -> (f64, f64) {
        let lo = self.length + self.flat_width;
        let hi = self.linear_zone_start();
        let width = hi - lo;
        let t = (z - lo) / width;
        let v1 = self.linear_width / self.a_coeff;
        let s1 = -width / self.a_coeff;
        // Quintic with h(0)=1, h'(0)=0, h''(0)=0, h(1)=v1, h'(1)=s1, h''(1)=0,
        // in the parameter t; slopes are with respect to t.
        let dv = v1 - 1.0;
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        let h = 1.0
            + (10.0 * dv - 4.0 * s1) * t3
            + (-15.0 * dv + 7.0 * s1) * t4
            + (6.0 * dv - 3.0 * s1) * t5;
        let dh = (30.0 * dv - 12.0 * s1) * t2
            + (-60.0 * dv + 28.0 * s1) * t3
            + (30.0 * dv - 15.0 * s1) * t4;
        (h, dh / width)
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        if z <= self.length + self.flat_width {
            Ok(1.0)
        } else if z >= self.linear_zone_start() {
            Ok((self.length + 1.0 - z) / self.a_coeff)
        } else {
            Ok(self.blend(z).0)
        }
    }

    pub fn d1(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        if z <= self.length + self.flat_width {
            Ok(0.0)
        } else if z >= self.linear_zone_start() {
            Ok(-1.0 / self.a_coeff)
        } else {
            Ok(self.blend(z).1)
        }
    }
}

/// The Dehn-filling metric data on a truncated cusp end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryMetric {
    psi: PsiProfile,
    phi: PhiProfile,
    a: f64,
    b: f64,
    c: f64,
}

impl SurgeryMetric {
    pub fn new(end: &CuspEnd, psi: PsiProfile, surgery_height: f64) -> Result<Self> {
        let (a, b, c) = lattice_coefficients(end);
        let phi = PhiProfile::new(surgery_height, a)?;
        Self::with_phi(psi, phi, a, b, c)
    }

    pub fn with_phi(psi: PsiProfile, phi: PhiProfile, a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0) {
            return Err(Error::Argument("lattice coefficients a, c must be positive".into()));
        }
        if b * b >= a * a * c * c {
            return Err(Error::Argument(
                "b^2 < a^2 c^2 fails; generators not independent".into(),
            ));
        }
        if (phi.a_coeff() - a).abs() > 1e-12 * (1.0 + a) {
            return Err(Error::Argument(
                "collapse profile built for a different lattice coefficient".into(),
            ));
        }
        Ok(SurgeryMetric { psi, phi, a, b, c })
    }

    pub fn psi(&self) -> &PsiProfile {
        &self.psi
    }

    pub fn phi(&self) -> &PhiProfile {
        &self.phi
    }

    pub fn coefficients(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }

    pub fn surgery_height(&self) -> f64 {
        self.phi.length()
    }
}

/// The surgered tensor in the `(u, v, z)` frame:
/// `(1/psi^2)(a^2 phi^2 du^2 + 2 b phi du dv + c^2 dv^2 + dz^2)`.
/// Below the surgery band `phi` is taken as one.
pub fn surgery_metric_eval(sm: &SurgeryMetric, z: f64) -> Result<MetricTensor> {
    if z < 0.5 {
        return Err(Error::Domain(format!("z = {z} below the chart floor 1/2")));
    }
    let length = sm.surgery_height();
    if z >= length + 1.0 {
        return Err(Error::Domain(format!(
            "z = {z} beyond the solid-torus core at {}",
            length + 1.0
        )));
    }
    let phi = if z < length { 1.0 } else { sm.phi.eval(z)? };
    let f = sm.psi.eval(z);
    let s = 1.0 / (f * f);
    let (a, b, c) = (sm.a, sm.b, sm.c);
    MetricTensor::new([
        [s * a * a * phi * phi, s * b * phi, 0.0],
        [s * b * phi, s * c * c, 0.0],
        [0.0, 0.0, s],
    ])
}

/// The pulled-back tensor in solid-torus polar coordinates `(r, theta, v)`
/// under `(r, theta, v) -> (theta, v, L+1-r)`:
/// `(1/psi(L+1-r)^2)(dr^2 + r^2 dtheta^2 + 2 (b/a) r dtheta dv + c^2 dv^2)`.
///
/// Valid for `r` inside the zone where `phi` has its exact linear form.
pub fn solid_torus_pullback(sm: &SurgeryMetric, r: f64) -> Result<MetricTensor> {
    let linear_extent = sm.surgery_height() + 1.0 - sm.phi.linear_zone_start();
    if !(0.0..=linear_extent).contains(&r) {
        return Err(Error::Domain(format!(
            "r = {r} outside the linear collapse zone [0, {linear_extent}]"
        )));
    }
    let f = sm.psi.eval(sm.surgery_height() + 1.0 - r);
    let s = 1.0 / (f * f);
    let (a, b, c) = (sm.a, sm.b, sm.c);
    MetricTensor::new([
        [s, 0.0, 0.0],
        [0.0, s * r * r, s * (b / a) * r],
        [0.0, s * (b / a) * r, s * c * c],
    ])
}

/// Mean curvature of the torus `{z = const}` in the surgered metric:
/// `psi'(z) - (phi'(z) / (2 phi(z))) psi(z)`, diverging at the core.
pub fn surgery_mean_curvature(sm: &SurgeryMetric, z: f64) -> Result<f64> {
    let length = sm.surgery_height();
    if z < length || z >= length + 1.0 {
        return Err(Error::Domain(format!(
            "z = {z} outside the surgery band [{}, {})",
            length,
            length + 1.0
        )));
    }
    let phi = sm.phi.eval(z)?;
    let dphi = sm.phi.d1(z)?;
    Ok(sm.psi.d1(z) - dphi / (2.0 * phi) * sm.psi.eval(z))
}

/// Smoothness diagnostic at the core: the ratio of the `theta`-circle
/// circumference at radius `r` to the radial geodesic distance from the core.
/// Tends to `2 pi` exactly when the filling has no cone singularity.
pub fn core_smoothness_ratio(sm: &SurgeryMetric, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Argument("radius must be positive".into()));
    }
    let g = solid_torus_pullback(sm, r)?;
    let circumference = std::f64::consts::TAU * g.entry(1, 1).sqrt();
    let core = sm.surgery_height() + 1.0;
    let radial = crate::quad::adaptive_simpson(|t| 1.0 / sm.psi.eval(core - t), 0.0, r, 1e-12);
    Ok(circumference / radial)
}

/// Which theorem's rescaled profile to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiNFlavor {
    /// `psi_n(z) = n psi(z/n)`: identity on `[1/2, n]`, critical at `2n`.
    /// Requires the base to flatten at 2.
    TheoremB,
    /// `psi_n(z) = 3n psi(z/(3n))`: identity on `[1/2, 3n]`, critical at `4n`.
    /// Requires the base to flatten at 4/3.
    Isotopy,
}

/// Builds the truncation profile `psi_n` from a base profile with the
/// flavor's required critical height.
pub fn psi_n_profile(base: &PsiProfile, n: u32, flavor: PsiNFlavor) -> Result<PsiProfile> {
    if n < 1 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let required = match flavor {
        PsiNFlavor::TheoremB => 2.0,
        PsiNFlavor::Isotopy => 4.0 / 3.0,
    };
    let has_critical = base
        .critical_points()
        .iter()
        .any(|&zc| (zc - required).abs() < 1e-9);
    if !has_critical {
        return Err(Error::Argument(format!(
            "base profile must have a critical height at {required}"
        )));
    }
    let scale = match flavor {
        PsiNFlavor::TheoremB => n as f64,
        PsiNFlavor::Isotopy => 3.0 * n as f64,
    };
    // psi_n(z) = scale * psi(z / scale) is the lambda = 1/scale rescaling.
    base.scaled(1.0 / scale)
}
