//! SL2(C) Moebius algebra for the three-punctured-sphere representation:
//! parabolic classification, the `c = -4/w` branch, fixed points, the
//! invariant boundary circle and orbit sampling toward the limit set.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DET_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;

/// A point of the extended complex plane (the boundary sphere minus a chart
/// choice): either finite or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(re: f64, im: f64) -> Self {
        ExtComplex::Finite(Complex64::new(re, im))
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    /// Chordal-style distance that treats infinity as equal only to itself.
    pub fn approx_eq(&self, other: &ExtComplex, tol: f64) -> bool {
        match (self, other) {
            (ExtComplex::Infinity, ExtComplex::Infinity) => true,
            (ExtComplex::Finite(a), ExtComplex::Finite(b)) => (a - b).norm() <= tol,
            _ => false,
        }
    }
}

impl Serialize for ExtComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // Complex numbers serialize as [re, im]; infinity as the string "inf".
        match self {
            ExtComplex::Finite(z) => [z.re, z.im].serialize(s),
            ExtComplex::Infinity => "inf".serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ExtComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => Ok(ExtComplex::finite(re, im)),
            Repr::Tag(t) if t == "inf" => Ok(ExtComplex::Infinity),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "expected [re, im] or \"inf\", got {t:?}"
            ))),
        }
    }
}

fn c64_serialize<S: serde::Serializer>(
    z: &Complex64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn c64_deserialize<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Complex64, D::Error> {
    let [re, im] = <[f64; 2]>::deserialize(d)?;
    Ok(Complex64::new(re, im))
}

/// An element of SL2(C) acting on the boundary sphere by
/// `z -> (a z + b) / (c z + d)`, kept normalized to determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
    pub a: Complex64,
    #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
    pub b: Complex64,
    #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
    pub c: Complex64,
    #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
    pub d: Complex64,
}

impl MobiusMap {
    /// Builds and normalizes to `ad - bc = 1`.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(Error::Argument("singular matrix".into()));
        }
        let k = det.sqrt().inv();
        Ok(MobiusMap {
            a: a * k,
            b: b * k,
            c: c * k,
            d: d * k,
        })
    }

    pub fn identity() -> Self {
        MobiusMap {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// The parabolic translation `z -> z + w`.
    pub fn translation(w: Complex64) -> Self {
        MobiusMap {
            a: Complex64::new(1.0, 0.0),
            b: w,
            c: Complex64::new(0.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let one = Complex64::new(1.0, 0.0);
        for sign in [1.0, -1.0] {
            if (self.a - sign * one).norm() <= tol
                && self.b.norm() <= tol
                && self.c.norm() <= tol
                && (self.d - sign * one).norm() <= tol
            {
                return true;
            }
        }
        false
    }

    /// The unique Moebius map sending `(p1, p2, p3)` to `(q1, q2, q3)`.
    pub fn map_three_points(
        p: [ExtComplex; 3],
        q: [ExtComplex; 3],
    ) -> Result<MobiusMap> {
        let to_standard = standard_frame(p)?;
        let from_standard = standard_frame(q)?.inverse();
        Ok(compose(&from_standard, &to_standard))
    }
}

/// The map sending `(p1, p2, p3)` to `(0, 1, infinity)`.
fn standard_frame(p: [ExtComplex; 3]) -> Result<MobiusMap> {
    use ExtComplex::*;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in (i + 1)..3 {
            if p[i].approx_eq(&p[j], 0.0) {
                return Err(Error::Argument("three-point map needs distinct points".into()));
            }
        }
    }
    let m = match (p[0], p[1], p[2]) {
        (Infinity, Finite(z2), Finite(z3)) => MobiusMap::new(zero, -(z2 - z3), -one, z3)?,
        (Finite(z1), Infinity, Finite(z3)) => MobiusMap::new(one, -z1, one, -z3)?,
        (Finite(z1), Finite(z2), Infinity) => MobiusMap::new(-one, z1, zero, -(z2 - z1))?,
        (Finite(z1), Finite(z2), Finite(z3)) => {
            MobiusMap::new(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))?
        }
        _ => return Err(Error::Argument("three-point map needs distinct points".into())),
    };
    Ok(m)
}

/// The boundary action `z -> (a z + b) / (c z + d)` with the usual
/// conventions at infinity and at the pole.
pub fn apply(m: &MobiusMap, zeta: ExtComplex) -> ExtComplex {
    match zeta {
        ExtComplex::Infinity => {
            if m.c.norm() == 0.0 {
                ExtComplex::Infinity
            } else {
                ExtComplex::Finite(m.a / m.c)
            }
        }
        ExtComplex::Finite(z) => {
            let den = m.c * z + m.d;
            if den.norm() == 0.0 {
                ExtComplex::Infinity
            } else {
                ExtComplex::Finite((m.a * z + m.b) / den)
            }
        }
    }
}

/// Matrix product, renormalized to determinant one.
pub fn compose(m1: &MobiusMap, m2: &MobiusMap) -> MobiusMap {
    MobiusMap::new(
        m1.a * m2.a + m1.b * m2.c,
        m1.a * m2.b + m1.b * m2.d,
        m1.c * m2.a + m1.d * m2.c,
        m1.c * m2.b + m1.d * m2.d,
    )
    .expect("product of unimodular matrices is invertible")
}

/// True iff `m` is parabolic: trace within `1e-10` of +-2 and not +-identity.
pub fn is_parabolic(m: &MobiusMap) -> bool {
    if m.is_identity(TRACE_TOL) {
        return false;
    }
    let tr = m.trace();
    (tr - 2.0).norm() <= TRACE_TOL || (tr + 2.0).norm() <= TRACE_TOL
}

/// The unique fixed point of a parabolic map: infinity when `c = 0`, else
/// `(a - d) / (2c)`.
pub fn fixed_point(m: &MobiusMap) -> Result<ExtComplex> {
    if !is_parabolic(m) {
        return Err(Error::Classification(
            "fixed_point requires a parabolic map".into(),
        ));
    }
    if m.c.norm() <= DET_TOL {
        Ok(ExtComplex::Infinity)
    } else {
        Ok(ExtComplex::Finite((m.a - m.d) / (2.0 * m.c)))
    }
}

/// The trace branch of the composed generator `T_alpha T_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `lambda = 2`, forcing `c = 0`: every generator fixes infinity.
    Plus,
    /// `lambda = -2`, forcing `c = -4/w`: the generic three-punctured sphere.
    Minus,
}

/// The `(T_alpha, T_beta)` pair of a three-punctured-sphere representation:
/// `T_alpha = [[1, w], [0, 1]]` and a trace-two `T_beta` whose product with
/// `T_alpha` is again parabolic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicTriple {
    #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
    w: Complex64,
    beta: MobiusMap,
    branch: Branch,
}

impl ParabolicTriple {
    pub fn w(&self) -> Complex64 {
        self.w
    }

    pub fn alpha(&self) -> MobiusMap {
        MobiusMap::translation(self.w)
    }

    pub fn beta(&self) -> &MobiusMap {
        &self.beta
    }

    /// `T_gamma = T_alpha T_beta`.
    pub fn gamma(&self) -> MobiusMap {
        compose(&self.alpha(), &self.beta)
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Consistency of the stored data: unit determinant, trace two, and the
    /// branch equation on `c`.
    pub fn validate(&self) -> Result<()> {
        if self.w.norm() == 0.0 {
            return Err(Error::Argument("w must be nonzero".into()));
        }
        if (self.beta.determinant() - 1.0).norm() > DET_TOL {
            return Err(Error::Geometry("beta is not unimodular".into()));
        }
        if (self.beta.trace() - 2.0).norm() > DET_TOL {
            return Err(Error::Geometry("beta must have trace two".into()));
        }
        if self.branch == Branch::Minus {
            let expected = -4.0 / self.w;
            if (self.beta.c - expected).norm() > DET_TOL * (1.0 + expected.norm()) {
                return Err(Error::Geometry("branch -2 requires c = -4/w".into()));
            }
        }
        Ok(())
    }
}

/// Builds the branch `-2` triple from `w` and the free entry `a`:
/// `d = 2 - a`, `c = -4/w`, `b = (ad - 1)/c`.
///
/// The `+2` branch is the degenerate common-fixed-point case and is not
/// produced here.
pub fn solve_triple(w: Complex64, a: Complex64) -> Result<ParabolicTriple> {
    if w.norm() == 0.0 {
        return Err(Error::Argument("w must be nonzero".into()));
    }
    let d = 2.0 - a;
    let c = -4.0 / w;
    let b = (a * d - 1.0) / c;
    let beta = MobiusMap { a, b, c, d };
    let triple = ParabolicTriple {
        w,
        beta,
        branch: Branch::Minus,
    };
    triple.validate()?;
    Ok(triple)
}

/// A circle on the boundary sphere: a Euclidean line through the chart
/// (together with infinity) or a proper circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCircle {
    Line {
        #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
        base: Complex64,
        #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
        direction: Complex64,
    },
    Circle {
        #[serde(serialize_with = "c64_serialize", deserialize_with = "c64_deserialize")]
        center: Complex64,
        radius: f64,
    },
}

impl BoundaryCircle {
    pub fn line(base: Complex64, direction: Complex64) -> Result<Self> {
        if direction.norm() == 0.0 {
            return Err(Error::Argument("line direction must be nonzero".into()));
        }
        Ok(BoundaryCircle::Line { base, direction })
    }

    pub fn circle(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Argument("radius must be positive".into()));
        }
        Ok(BoundaryCircle::Circle { center, radius })
    }

    /// A point at line parameter `t` (lines only).
    pub fn point_at(&self, t: f64) -> Result<ExtComplex> {
        match self {
            BoundaryCircle::Line { base, direction } => {
                Ok(ExtComplex::Finite(base + t * direction))
            }
            BoundaryCircle::Circle { .. } => Err(Error::Argument(
                "point_at parametrizes the line form".into(),
            )),
        }
    }

    /// Distance from a boundary point to the circle; infinity lies on every
    /// line and on no proper circle.
    pub fn distance(&self, p: ExtComplex) -> f64 {
        match (self, p) {
            (BoundaryCircle::Line { .. }, ExtComplex::Infinity) => 0.0,
            (BoundaryCircle::Circle { .. }, ExtComplex::Infinity) => f64::INFINITY,
            (BoundaryCircle::Line { base, direction }, ExtComplex::Finite(z)) => {
                let rel = (z - base) / direction;
                rel.im.abs() * direction.norm()
            }
            (BoundaryCircle::Circle { center, radius }, ExtComplex::Finite(z)) => {
                ((z - center).norm() - radius).abs()
            }
        }
    }

    /// Line parameter of a finite point (its projection onto the line).
    pub fn line_parameter(&self, z: Complex64) -> Result<f64> {
        match self {
            BoundaryCircle::Line { base, direction } => Ok(((z - base) / direction).re),
            BoundaryCircle::Circle { .. } => Err(Error::Argument(
                "line_parameter applies to the line form".into(),
            )),
        }
    }
}

/// The circle left invariant by both generators of a branch `-2` triple:
/// `{w(d - a)/8 + t w} u {infinity}`.
pub fn invariant_circle(t: &ParabolicTriple) -> Result<BoundaryCircle> {
    if t.branch() == Branch::Plus {
        return Err(Error::DegenerateBranch(
            "branch +2 has no invariant circle; all generators fix infinity".into(),
        ));
    }
    let base = t.w * (t.beta.d - t.beta.a) / 8.0;
    BoundaryCircle::line(base, t.w)
}

/// Distances of orbit points to the invariant circle, grouped by word length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitSample {
    pub word_length: usize,
    pub count: usize,
    pub max_distance: f64,
    pub median_distance: f64,
}

/// Applies all reduced words in the generators (up to the given length) to the
/// seeds and reports max and median distance to the invariant circle per word
/// length. Word lengths above 12 are rejected.
pub fn orbit_limit_sample(
    t: &ParabolicTriple,
    word_length: usize,
    seeds: &[ExtComplex],
) -> Result<Vec<OrbitSample>> {
    if word_length < 1 {
        return Err(Error::Argument("word_length must be at least 1".into()));
    }
    if word_length > 12 {
        return Err(Error::Argument(
            "word_length > 12 rejected (combinatorial explosion guard)".into(),
        ));
    }
    let circle = invariant_circle(t)?;
    let gens = [
        t.alpha(),
        t.alpha().inverse(),
        t.beta().clone(),
        t.beta().inverse(),
    ];
    // Letter i cancels with letter i ^ 1.
    let mut frontier: Vec<(usize, MobiusMap)> = (0..4).map(|i| (i, gens[i])).collect();
    let mut samples = Vec::with_capacity(word_length);
    for len in 1..=word_length {
        let mut distances: Vec<f64> = Vec::with_capacity(frontier.len() * seeds.len());
        for (_, word) in &frontier {
            for &seed in seeds {
                distances.push(circle.distance(apply(word, seed)));
            }
        }
        distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let count = distances.len();
        let median = if count % 2 == 1 {
            distances[count / 2]
        } else {
            0.5 * (distances[count / 2 - 1] + distances[count / 2])
        };
        samples.push(OrbitSample {
            word_length: len,
            count,
            max_distance: *distances.last().unwrap(),
            median_distance: median,
        });
        if len < word_length {
            let mut next = Vec::with_capacity(frontier.len() * 3);
            for (last, word) in &frontier {
                for (i, gen) in gens.iter().enumerate() {
                    if i == last ^ 1 {
                        continue;
                    }
                    next.push((i, compose(gen, word)));
                }
            }
            frontier = next;
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn apply_identity_and_translation() {
        let id = MobiusMap::identity();
        let z = ExtComplex::finite(0.3, -0.7);
        assert!(apply(&id, z).approx_eq(&z, 0.0));
        assert!(apply(&id, ExtComplex::Infinity).is_infinity());

        let t = MobiusMap::translation(c(2.0, 1.0));
        let img = apply(&t, ExtComplex::finite(0.0, 0.0));
        assert!(img.approx_eq(&ExtComplex::finite(2.0, 1.0), 1e-15));
    }

    #[test]
    fn apply_inverse_round_trip() {
        let m = MobiusMap::new(c(1.2, 0.3), c(-0.4, 1.1), c(0.7, -0.2), c(0.9, 0.5)).unwrap();
        let inv = m.inverse();
        for seed in [ExtComplex::finite(0.4, 0.8), ExtComplex::finite(-3.0, 0.1)] {
            let back = apply(&m, apply(&inv, seed));
            assert!(back.approx_eq(&seed, 1e-12));
        }
        // The pole round-trips to infinity or to a huge value, depending on
        // whether the denominator cancels exactly in floating point.
        match apply(&m, apply(&inv, ExtComplex::Infinity)) {
            ExtComplex::Infinity => {}
            ExtComplex::Finite(z) => assert!(z.norm() > 1e12),
        }
    }

    #[test]
    fn compose_is_action_homomorphism() {
        let m1 = MobiusMap::new(c(2.0, 0.1), c(0.3, -0.4), c(1.0, 0.0), c(0.8, 0.2)).unwrap();
        let m2 = MobiusMap::new(c(0.5, -1.0), c(1.5, 0.0), c(0.0, 0.3), c(1.1, 0.7)).unwrap();
        let prod = compose(&m1, &m2);
        assert!((prod.determinant() - 1.0).norm() < 1e-12);
        for k in 0..100 {
            let z = ExtComplex::finite((k as f64) * 0.13 - 6.0, ((k * k) % 17) as f64 * 0.21 - 1.5);
            let lhs = apply(&prod, z);
            let rhs = apply(&m1, apply(&m2, z));
            if let (ExtComplex::Finite(a), ExtComplex::Finite(b)) = (lhs, rhs) {
                assert!((a - b).norm() < 1e-10);
            }
        }
        let id = MobiusMap::identity();
        let same = compose(&m1, &id);
        assert!((same.a - m1.a).norm() < 1e-15 && (same.b - m1.b).norm() < 1e-15);
    }

    #[test]
    fn parabolic_classification() {
        assert!(!is_parabolic(&MobiusMap::identity()));
        assert!(is_parabolic(&MobiusMap::translation(c(2.0, 1.0))));
        // Trace 2 with a nontrivial Jordan block.
        let m = MobiusMap::new(c(2.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(is_parabolic(&m));
        // Loxodromic: trace 3 1/3.
        let m = MobiusMap::new(c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 / 3.0, 0.0)).unwrap();
        assert!(!is_parabolic(&m));
    }

    #[test]
    fn fixed_points_of_triple() {
        let w = c(1.3, -0.4);
        let a = c(0.7, 0.9);
        let triple = solve_triple(w, a).unwrap();
        assert!(fixed_point(&triple.alpha()).unwrap().is_infinity());

        let beta = triple.beta();
        let expected_beta = w * (beta.d - beta.a) / 8.0;
        match fixed_point(beta).unwrap() {
            ExtComplex::Finite(z) => assert!((z - expected_beta).norm() < 1e-12),
            _ => panic!("beta fixes a finite point"),
        }
        match fixed_point(&triple.gamma()).unwrap() {
            ExtComplex::Finite(z) => assert!((z - (expected_beta + w / 2.0)).norm() < 1e-12),
            _ => panic!("gamma fixes a finite point"),
        }
        // Residual check: the fixed point is actually fixed.
        let fp = fixed_point(beta).unwrap();
        assert!(apply(beta, fp).approx_eq(&fp, 1e-10));

        let loxo =
            MobiusMap::new(c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 / 3.0, 0.0)).unwrap();
        assert!(matches!(fixed_point(&loxo), Err(Error::Classification(_))));
    }

    #[test]
    fn solve_triple_reference_values() {
        let triple = solve_triple(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let beta = triple.beta();
        assert!((beta.a - 1.0).norm() < 1e-15);
        assert!(beta.b.norm() < 1e-15);
        assert!((beta.c + 4.0).norm() < 1e-15);
        assert!((beta.d - 1.0).norm() < 1e-15);
        assert!((triple.gamma().trace() + 2.0).norm() < 1e-12);

        assert!(solve_triple(c(0.0, 0.0), c(1.0, 0.0)).is_err());

        let triple = solve_triple(c(0.0, 2.0), c(1.0, 1.0)).unwrap();
        assert!(is_parabolic(triple.beta()));
        assert!(is_parabolic(&triple.gamma()));
    }

    #[test]
    fn invariant_circle_membership() {
        let w = c(0.9, 1.7);
        let a = c(-0.3, 0.8);
        let triple = solve_triple(w, a).unwrap();
        let circle = invariant_circle(&triple).unwrap();
        let beta = triple.beta();

        // T_beta(x_gamma) = x_beta - w/2, a point of the circle.
        let x_gamma = match fixed_point(&triple.gamma()).unwrap() {
            ExtComplex::Finite(z) => z,
            _ => panic!(),
        };
        let x_beta = match fixed_point(beta).unwrap() {
            ExtComplex::Finite(z) => z,
            _ => panic!(),
        };
        match apply(beta, ExtComplex::Finite(x_gamma)) {
            ExtComplex::Finite(z) => assert!((z - (x_beta - w / 2.0)).norm() < 1e-12),
            _ => panic!(),
        }

        // T_beta(infinity) = -wa/4 lands on the circle at parameter -(a+d)/8 = -1/4.
        match apply(beta, ExtComplex::Infinity) {
            ExtComplex::Finite(z) => {
                assert!((z - (-w * a / 4.0)).norm() < 1e-12);
                assert!(circle.distance(ExtComplex::Finite(z)) < 1e-12);
                assert!((circle.line_parameter(z).unwrap() + 0.25).abs() < 1e-12);
            }
            _ => panic!(),
        }

        // Both generators map sampled circle points back onto the circle.
        for k in -3..=3 {
            let p = circle.point_at(k as f64).unwrap();
            assert!(circle.distance(apply(&triple.alpha(), p)) < 1e-10);
            assert!(circle.distance(apply(beta, p)) < 1e-10);
        }
    }

    #[test]
    fn orbit_limit_sampling() {
        let triple = solve_triple(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let circle = invariant_circle(&triple).unwrap();

        // Seeds on the circle stay on it.
        let on_circle = [circle.point_at(0.3).unwrap(), circle.point_at(-2.0).unwrap()];
        let samples = orbit_limit_sample(&triple, 4, &on_circle).unwrap();
        for s in &samples {
            assert!(s.max_distance < 1e-9, "invariance at length {}", s.word_length);
        }

        // The image of infinity under T_beta is -wa/4, a circle point.
        let first = apply(triple.beta(), ExtComplex::Infinity);
        assert!(circle.distance(first) < 1e-12);

        // Off-circle seed: medians decrease toward the limit set.
        let seeds = [ExtComplex::finite(0.0, 1.0)];
        let samples = orbit_limit_sample(&triple, 8, &seeds).unwrap();
        for pair in samples.windows(2) {
            assert!(
                pair[1].median_distance <= pair[0].median_distance + 1e-12,
                "median not non-increasing: {:?}",
                samples
            );
        }

        assert!(orbit_limit_sample(&triple, 13, &seeds).is_err());
        assert!(orbit_limit_sample(&triple, 0, &seeds).is_err());
    }

    #[test]
    fn plus_branch_fixes_infinity() {
        // Hand-built branch +2 data: c = 0, everything upper triangular.
        let w = c(1.0, 0.5);
        let beta = MobiusMap::new(c(1.0, 0.0), c(0.7, -0.3), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let triple = ParabolicTriple {
            w,
            beta,
            branch: Branch::Plus,
        };
        triple.validate().unwrap();
        for m in [triple.alpha(), triple.beta().clone(), triple.gamma()] {
            assert!(apply(&m, ExtComplex::Infinity).is_infinity());
        }
        assert!(matches!(
            invariant_circle(&triple),
            Err(Error::DegenerateBranch(_))
        ));
    }

    #[test]
    fn three_point_map() {
        let p = [
            ExtComplex::finite(0.0, 0.0),
            ExtComplex::finite(1.0, 0.0),
            ExtComplex::Infinity,
        ];
        let q = [
            ExtComplex::finite(2.0, 1.0),
            ExtComplex::finite(-1.0, 0.5),
            ExtComplex::finite(0.0, -3.0),
        ];
        let m = MobiusMap::map_three_points(p, q).unwrap();
        for i in 0..3 {
            assert!(apply(&m, p[i]).approx_eq(&q[i], 1e-10), "point {i}");
        }
    }

    #[test]
    fn ext_complex_serde() {
        let z = ExtComplex::finite(1.5, -2.0);
        assert_eq!(serde_json::to_string(&z).unwrap(), "[1.5,-2.0]");
        let inf = ExtComplex::Infinity;
        assert_eq!(serde_json::to_string(&inf).unwrap(), "\"inf\"");
        let back: ExtComplex = serde_json::from_str("[1.5,-2.0]").unwrap();
        assert!(back.approx_eq(&z, 0.0));
    }
}
