//! Descent solver for the discrete area functional and the numeric
//! maximum-principle experiments built on it.
//!
//! The solver is plain gradient descent on free vertex coordinates,
//! preconditioned by the Riemannian dual areas, with a backtracking Armijo
//! line search. Steps that would drop a vertex below the chart floor or flip
//! a triangle are treated as infeasible and backtracked. The stopping rule is
//! the sup-norm of the dual-area-normalized gradient, which is insensitive to
//! mesh resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cusp::{CuspEnd, PsiProfile, CHART_FLOOR};
use crate::error::{Error, Result};
use crate::geom::{add, norm, scale, sub, triangle_area, Vec3};
use crate::mesh::{
    area_and_gradient, incidence_angle, mesh_area, slab_area_profile, spanning_disk,
    total_gauss_curvature, PeriodicGraphFn, PeriodicMesh, SlabArea,
};

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    /// First trial step of the first iteration.
    pub initial_step: f64,
    /// Multiplier applied on rejection, in (0, 1).
    pub backtrack_factor: f64,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    /// Multiplier applied to the accepted step for the next trial.
    pub growth: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            initial_step: 1.0,
            backtrack_factor: 0.5,
            sufficient_decrease: 1e-4,
            growth: 2.0,
        }
    }
}

/// Experiment constants carried alongside the solver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConstants {
    /// Boundary clearance for curvature estimates.
    pub epsilon0: f64,
    /// Assumed curvature bound for stable pieces.
    pub k0: f64,
    /// Largest admissible lattice diameter.
    pub lambda0: f64,
    /// Transversality angle floor (recorded, not asserted a priori).
    pub theta0: f64,
    /// Boundary-torus depth parameter, in (0, 1/2).
    pub t0: f64,
}

impl Default for ExperimentConstants {
    fn default() -> Self {
        ExperimentConstants {
            epsilon0: 0.1,
            k0: 10.0,
            lambda0: 0.5,
            theta0: 0.1,
            t0: 0.1,
        }
    }
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Sup-norm threshold on the dual-area-normalized gradient.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub step: StepRule,
    pub constants: ExperimentConstants,
    /// Horotorus levels at which the report measures incidence angles.
    #[serde(default)]
    pub report_levels: Vec<f64>,
}

impl SolveConfig {
    pub fn new(grad_tol: f64, max_iter: usize) -> Result<Self> {
        let config = SolveConfig {
            grad_tol,
            max_iter,
            step: StepRule::default(),
            constants: ExperimentConstants::default(),
            report_levels: Vec::new(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Argument("grad_tol must be positive".into()));
        }
        if !(self.step.backtrack_factor > 0.0 && self.step.backtrack_factor < 1.0) {
            return Err(Error::Argument("backtracking factor must be in (0, 1)".into()));
        }
        if !(self.step.initial_step > 0.0
            && self.step.sufficient_decrease > 0.0
            && self.step.growth >= 1.0)
        {
            return Err(Error::Argument("step rule parameters must be positive".into()));
        }
        let c = &self.constants;
        if !(c.epsilon0 > 0.0 && c.k0 > 0.0 && c.lambda0 > 0.0 && c.theta0 > 0.0 && c.t0 > 0.0) {
            return Err(Error::Argument("experiment constants must be positive".into()));
        }
        Ok(())
    }
}

/// Why a solve stopped short of the gradient tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveFlag {
    /// Iteration budget exhausted; the final residual is in the outcome.
    NonConvergence,
    /// Forty backtracking halvings without an acceptable step.
    LineSearchFailure,
}

/// Per-level incidence summary for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidenceSummary {
    pub level: f64,
    pub crossings: usize,
    pub min_angle: f64,
    pub median_angle: f64,
}

/// Measured summary of a (final) mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReport {
    pub area: f64,
    /// Largest pointwise mean-curvature residual over free vertices.
    pub max_abs_mean_curvature: f64,
    /// Interior angle-defect total: the discrete curvature integral.
    pub total_gauss_curvature: f64,
    /// Full defect total; combinatorially `2 pi chi`.
    pub gauss_bonnet_total: f64,
    pub euler_characteristic: i64,
    pub genus: Option<i64>,
    /// Riemannian dual area covered by the interior vertices.
    pub interior_dual_area: f64,
    pub z_range: (f64, f64),
    pub incidence_angles: Vec<IncidenceSummary>,
    pub slab_areas: Vec<SlabArea>,
    pub stability_bounds_ok: Option<bool>,
    pub self_intersecting: bool,
}

/// Builds the report of a mesh: areas, curvature residual, defect totals,
/// slab profile and incidence summaries at the requested levels.
pub fn make_report(
    psi: &PsiProfile,
    mesh: &PeriodicMesh,
    levels: &[f64],
) -> Result<SurfaceReport> {
    let (area, grad, dual) = area_and_gradient(psi, mesh)?;
    let mut max_h = 0.0_f64;
    for (i, g) in grad.iter().enumerate() {
        if !mesh.boundary[i] && dual[i] > 0.0 {
            let h = norm(*g) * psi.eval(mesh.vertices[i][2]) / (2.0 * dual[i]);
            max_h = max_h.max(h);
        }
    }
    let gb = total_gauss_curvature(psi, mesh)?;
    let mut z_lo = f64::INFINITY;
    let mut z_hi = f64::NEG_INFINITY;
    for v in &mesh.vertices {
        z_lo = z_lo.min(v[2]);
        z_hi = z_hi.max(v[2]);
    }
    let mut incidences = Vec::with_capacity(levels.len());
    for &c in levels {
        let rep = incidence_angle(mesh, c)?;
        incidences.push(IncidenceSummary {
            level: c,
            crossings: rep.angles.len(),
            min_angle: rep.min_angle,
            median_angle: rep.median_angle,
        });
    }
    let slabs = slab_area_profile(psi, mesh)?;
    // Aggregate curvature bound: the discrete form of K <= -1 on the region
    // the interior defects cover, within 2%.
    let stability = if gb.interior_dual_area > 0.0 {
        Some(gb.interior_defect <= -0.98 * gb.interior_dual_area)
    } else {
        None
    };
    Ok(SurfaceReport {
        area,
        max_abs_mean_curvature: max_h,
        total_gauss_curvature: gb.interior_defect,
        gauss_bonnet_total: gb.total_defect,
        euler_characteristic: gb.euler_characteristic,
        genus: mesh.genus(),
        interior_dual_area: gb.interior_dual_area,
        z_range: (z_lo, z_hi),
        incidence_angles: incidences,
        slab_areas: slabs,
        stability_bounds_ok: stability,
        self_intersecting: mesh.has_self_intersection(),
    })
}

/// Result of a descent solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub mesh: PeriodicMesh,
    pub report: SurfaceReport,
    pub iterations: usize,
    pub converged: bool,
    pub flag: Option<SolveFlag>,
    pub initial_area: f64,
    pub final_area: f64,
    pub final_residual: f64,
    /// Area after each accepted step (starting value first).
    pub area_trace: Vec<f64>,
    /// Largest z reached by any vertex across accepted iterates.
    pub z_max_envelope: f64,
}

const MAX_HALVINGS: usize = 40;

fn max_z(vertices: &[Vec3]) -> f64 {
    vertices.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v[2]))
}

/// Area of the mesh with candidate positions; `None` if any vertex drops
/// below the chart floor or any triangle degenerates or flips.
fn candidate_area(psi: &PsiProfile, mesh: &PeriodicMesh, positions: &[Vec3]) -> Option<f64> {
    for p in positions {
        if !(p[2] >= CHART_FLOOR) {
            return None;
        }
    }
    let mut total = 0.0;
    for t in &mesh.triangles {
        let shifts = t.corner_shifts();
        let mut corners = [[0.0_f64; 3]; 3];
        for k in 0..3 {
            corners[k] = add(
                positions[t.verts[k]],
                mesh.offset_displacement(shifts[k]),
            );
        }
        let ae = triangle_area(corners[0], corners[1], corners[2]);
        if !(ae > 0.0) {
            return None;
        }
        let q = ((0..3)
            .map(|e| {
                let zm = 0.5 * (corners[e][2] + corners[(e + 1) % 3][2]);
                let f = psi.eval(zm);
                1.0 / (f * f)
            })
            .sum::<f64>())
            / 3.0;
        total += ae * q;
    }
    total.is_finite().then_some(total)
}

fn normalized_residual(mesh: &PeriodicMesh, grad: &[Vec3], dual: &[f64]) -> f64 {
    let mut residual = 0.0_f64;
    for (i, g) in grad.iter().enumerate() {
        if !mesh.boundary[i] && dual[i] > 0.0 {
            residual = residual.max(norm(*g) / dual[i]);
        }
    }
    residual
}

/// Gradient descent with backtracking line search until the normalized
/// gradient drops below `grad_tol` or the iteration budget runs out.
/// Boundary vertices stay fixed; accepted steps strictly decrease area.
pub fn minimize(psi: &PsiProfile, mesh: &PeriodicMesh, config: &SolveConfig) -> Result<SolveOutcome> {
    config.validate()?;
    mesh.validate()?;
    let mut mesh = mesh.clone();
    let (mut area, mut grad, mut dual) = area_and_gradient(psi, &mesh)?;
    let initial_area = area;
    let mut residual = normalized_residual(&mesh, &grad, &dual);
    let mut area_trace = vec![area];
    let mut envelope = max_z(&mesh.vertices);
    let mut step = config.step.initial_step;
    let mut iterations = 0;
    let mut flag = None;

    while iterations < config.max_iter && residual > config.grad_tol {
        // Dual-area preconditioned descent direction.
        let mut dir: Vec<Vec3> = vec![[0.0; 3]; mesh.vertices.len()];
        let mut slope = 0.0;
        for i in 0..mesh.vertices.len() {
            if !mesh.boundary[i] && dual[i] > 0.0 {
                dir[i] = scale(grad[i], -1.0 / dual[i]);
                slope += grad[i][0] * dir[i][0] + grad[i][1] * dir[i][1] + grad[i][2] * dir[i][2];
            }
        }
        if slope >= 0.0 {
            break; // gradient vanished on free vertices
        }
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<Vec3> = mesh
                .vertices
                .iter()
                .zip(&dir)
                .map(|(x, d)| add(*x, scale(*d, step)))
                .collect();
            if let Some(new_area) = candidate_area(psi, &mesh, &candidate) {
                if new_area <= area + config.step.sufficient_decrease * step * slope {
                    mesh.vertices = candidate;
                    area = new_area;
                    accepted = true;
                    step *= config.step.growth;
                    break;
                }
            }
            step *= config.step.backtrack_factor;
        }
        if !accepted {
            flag = Some(SolveFlag::LineSearchFailure);
            break;
        }
        iterations += 1;
        area_trace.push(area);
        envelope = envelope.max(max_z(&mesh.vertices));
        let out = area_and_gradient(psi, &mesh)?;
        area = out.0;
        grad = out.1;
        dual = out.2;
        residual = normalized_residual(&mesh, &grad, &dual);
    }

    let converged = residual <= config.grad_tol;
    if !converged && flag.is_none() {
        flag = Some(SolveFlag::NonConvergence);
    }
    let report = make_report(psi, &mesh, &config.report_levels)?;
    Ok(SolveOutcome {
        final_area: area,
        initial_area,
        iterations,
        converged,
        flag,
        final_residual: residual,
        area_trace,
        z_max_envelope: envelope,
        report,
        mesh,
    })
}

/// Smooth lattice-periodic random field on an `n x m` grid, normalized to
/// sup-norm one: a few low-frequency Fourier modes with seeded coefficients.
pub fn seeded_smooth_field(n: usize, m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.2..1.0),
            )
        })
        .collect();
    let mut field = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let (s, t) = (i as f64 / n as f64, j as f64 / m as f64);
            let mut v = 0.0;
            for &(ku, kv, phase, amp) in &modes {
                v += amp * (std::f64::consts::TAU * (ku * s + kv * t) + phase).sin();
            }
            field[i * m + j] = v;
        }
    }
    let sup = field.iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(1e-12);
    for v in &mut field {
        *v /= sup;
    }
    field
}

/// Adds a compactly supported bump of the given amplitude along one
/// coordinate axis, centered at `(cx, cy)` with the given support radius;
/// boundary vertices are left untouched.
pub fn add_bump(mesh: &mut PeriodicMesh, axis: usize, center: [f64; 2], radius: f64, amplitude: f64) {
    for (i, v) in mesh.vertices.iter_mut().enumerate() {
        if mesh.boundary[i] {
            continue;
        }
        let dx = v[0] - center[0];
        let dy = v[1] - center[1];
        let d = (dx * dx + dy * dy).sqrt();
        if d < radius {
            let w = (std::f64::consts::FRAC_PI_2 * d / radius).cos();
            v[axis] += amplitude * w * w;
        }
    }
}

/// Report of the first maximum-principle experiment: descent of a periodic
/// graph toward the flat torus at the profile's critical height.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxPrinciple1Report {
    pub target_height: f64,
    pub max_height_deviation: f64,
    pub derivative_at_target: f64,
    pub final_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs descent on the graph's induced torus mesh (no boundary) and measures
/// how far the final heights sit from the critical height.
///
/// The profile must have a critical height at or above the lowest initial
/// height; descent pushes the graph up toward it, so initial data is
/// expected at or below the target.
pub fn max_principle_i_experiment(
    psi: &PsiProfile,
    graph: &PeriodicGraphFn,
    config: &SolveConfig,
) -> Result<MaxPrinciple1Report> {
    let min_h = graph.heights.iter().cloned().fold(f64::INFINITY, f64::min);
    let target = psi
        .critical_points()
        .iter()
        .cloned()
        .filter(|&zc| zc >= min_h - 1e-9)
        .fold(f64::INFINITY, f64::min);
    if !target.is_finite() {
        return Err(Error::Argument(
            "profile has no critical height reachable from the graph's range".into(),
        ));
    }
    let mesh = graph.to_mesh()?;
    let outcome = minimize(psi, &mesh, config)?;
    let mut deviation = 0.0_f64;
    for v in &outcome.mesh.vertices {
        deviation = deviation.max((v[2] - target).abs());
    }
    Ok(MaxPrinciple1Report {
        target_height: target,
        max_height_deviation: deviation,
        derivative_at_target: psi.d1(target),
        final_residual: outcome.final_residual,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

/// Convenience init for the graph experiment: the critical height minus a
/// seeded smooth perturbation of the given amplitude.
pub fn graph_below_critical(
    psi: &PsiProfile,
    end: &CuspEnd,
    n: usize,
    m: usize,
    amplitude: f64,
    seed: u64,
) -> Result<PeriodicGraphFn> {
    let target = psi
        .critical_points()
        .first()
        .copied()
        .ok_or_else(|| Error::Argument("profile has no critical height".into()))?;
    let field = seeded_smooth_field(n, m, seed);
    let heights = field
        .iter()
        .map(|f| target - amplitude * (0.5 + 0.5 * f))
        .collect();
    PeriodicGraphFn::new(end.clone(), n, m, heights)
}

/// Boundary data for the second maximum-principle experiment: a horizontal
/// circle spanned by a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanningBoundary {
    pub center: [f64; 2],
    pub radius: f64,
    pub rings: usize,
    pub sectors: usize,
}

/// Report of the second maximum-principle experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxPrinciple2Report {
    pub boundary_height: f64,
    pub z_max_final: f64,
    pub z_max_envelope: f64,
    pub final_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes a disk spanning a horizontal circle in the torus at height
/// `1 - t0` under the given (plateau-type) profile, from a seeded upward
/// perturbation, and reports the height envelope.
pub fn max_principle_ii_experiment(
    psi: &PsiProfile,
    end: &CuspEnd,
    t0: f64,
    boundary: &SpanningBoundary,
    config: &SolveConfig,
    init_amplitude: f64,
    seed: u64,
) -> Result<MaxPrinciple2Report> {
    if !(t0 > 0.0 && t0 < 0.5) {
        return Err(Error::Argument(format!("t0 = {t0} outside (0, 1/2)")));
    }
    if end.lambda() > config.constants.lambda0 {
        return Err(Error::Argument(format!(
            "lattice diameter {} exceeds Lambda_0 = {}",
            end.lambda(),
            config.constants.lambda0
        )));
    }
    let z_boundary = 1.0 - t0;
    let mut mesh = spanning_disk(
        end,
        boundary.center[0],
        boundary.center[1],
        boundary.radius,
        z_boundary,
        boundary.rings,
        boundary.sectors,
    )?;
    // Seeded upward bulge on the interior, strongest at the disk center.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bulge = rng.gen_range(0.3..1.0) * init_amplitude;
    for (i, v) in mesh.vertices.iter_mut().enumerate() {
        if mesh.boundary[i] {
            continue;
        }
        let dx = v[0] - boundary.center[0];
        let dy = v[1] - boundary.center[1];
        let rho = (dx * dx + dy * dy).sqrt() / boundary.radius;
        let w = (std::f64::consts::FRAC_PI_2 * rho.min(1.0)).cos();
        v[2] += bulge * w * w + 0.02 * init_amplitude * rng.gen_range(-1.0..1.0);
    }
    let outcome = minimize(psi, &mesh, config)?;
    Ok(MaxPrinciple2Report {
        boundary_height: z_boundary,
        z_max_final: max_z(&outcome.mesh.vertices),
        z_max_envelope: outcome.z_max_envelope,
        final_residual: outcome.final_residual,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

/// Outcome of the stability-window check of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBounds {
    pub genus: Option<i64>,
    /// True when the genus makes the area window empty (g <= 1).
    pub vacuous: bool,
    /// The admissible window `[2 pi (g-1), 4 pi (g-1)]` when applicable.
    pub window: Option<(f64, f64)>,
    pub area_in_window: Option<bool>,
    /// Aggregate curvature bound: interior defect <= -(area it covers),
    /// within the relative tolerance.
    pub curvature_bound_ok: bool,
    pub passed: bool,
}

/// Checks the stable-surface area window `2 pi (g-1) <= area <= 4 pi (g-1)`
/// and the aggregate curvature bound `total curvature <= -area` (within
/// `tol_rel`). Genus `None` limits the check to the curvature bound; genus
/// at most one is flagged vacuous.
pub fn stability_bound_check(
    report: &SurfaceReport,
    genus: Option<i64>,
    tol_rel: f64,
) -> StabilityBounds {
    let curvature_bound_ok = report.interior_dual_area > 0.0
        && report.total_gauss_curvature <= -(1.0 - tol_rel) * report.interior_dual_area;
    match genus {
        Some(g) if g <= 1 => StabilityBounds {
            genus,
            vacuous: true,
            window: None,
            area_in_window: None,
            curvature_bound_ok,
            passed: false,
        },
        Some(g) => {
            let lower = std::f64::consts::TAU * (g - 1) as f64;
            let upper = 2.0 * std::f64::consts::TAU * (g - 1) as f64;
            let ok = report.area >= lower * (1.0 - tol_rel) && report.area <= upper * (1.0 + tol_rel);
            StabilityBounds {
                genus,
                vacuous: false,
                window: Some((lower, upper)),
                area_in_window: Some(ok),
                curvature_bound_ok,
                passed: ok && curvature_bound_ok,
            }
        }
        None => StabilityBounds {
            genus,
            vacuous: false,
            window: None,
            area_in_window: None,
            curvature_bound_ok,
            passed: curvature_bound_ok,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::vertical_strip;

    fn unit_end() -> CuspEnd {
        CuspEnd::new([1.0, 0.0], [0.0, 1.0]).unwrap()
    }

    fn small_end() -> CuspEnd {
        CuspEnd::new([0.4, 0.0], [0.0, 0.4]).unwrap()
    }

    #[test]
    fn vertical_plane_already_critical() {
        let psi = PsiProfile::hyperbolic();
        let mesh = vertical_strip(&unit_end(), 1.0, 16, 1.0, 2.0, 16).unwrap();
        let mut config = SolveConfig::new(5e-3, 100).unwrap();
        config.report_levels = vec![1.5];
        let outcome = minimize(&psi, &mesh, &config).unwrap();
        assert!(outcome.converged, "residual {}", outcome.final_residual);
        assert_eq!(outcome.iterations, 0, "no descent needed");
        assert_eq!(outcome.mesh.vertices, mesh.vertices);
    }

    #[test]
    fn perturbed_plane_recovers_and_decreases_area() {
        let psi = PsiProfile::hyperbolic();
        let mut mesh = vertical_strip(&unit_end(), 1.0, 12, 1.0, 2.0, 12).unwrap();
        add_bump(&mut mesh, 1, [0.5, 0.0], 0.3, 0.05);
        let flat_area = 0.5;
        let config = SolveConfig::new(5e-3, 4000).unwrap();
        let outcome = minimize(&psi, &mesh, &config).unwrap();
        assert!(outcome.final_area <= outcome.initial_area);
        assert!(outcome.final_area < outcome.initial_area - 1e-6);
        // Ends near the flat strip's area.
        assert!((outcome.final_area - flat_area).abs() < 0.01);
        // Monotone trace.
        for pair in outcome.area_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-14);
        }
    }

    #[test]
    fn zero_iterations_is_identity() {
        let psi = PsiProfile::hyperbolic();
        let mut mesh = vertical_strip(&unit_end(), 1.0, 8, 1.0, 2.0, 8).unwrap();
        add_bump(&mut mesh, 1, [0.5, 0.0], 0.3, 0.05);
        let config = SolveConfig::new(1e-12, 0).unwrap();
        let outcome = minimize(&psi, &mesh, &config).unwrap();
        assert_eq!(outcome.mesh.vertices, mesh.vertices);
        assert_eq!(outcome.iterations, 0);
        assert_eq!(outcome.flag, Some(SolveFlag::NonConvergence));
    }

    #[test]
    fn graph_descends_to_critical_torus() {
        let psi = PsiProfile::ramp(1.0, 4.0 / 3.0, 7.0 / 6.0).unwrap();
        let end = small_end();
        let graph = graph_below_critical(&psi, &end, 8, 8, 0.2, 3).unwrap();
        let mut config = SolveConfig::new(1e-8, 20_000).unwrap();
        config.step.initial_step = 0.05;
        let report = max_principle_i_experiment(&psi, &graph, &config).unwrap();
        assert!(report.converged, "residual {}", report.final_residual);
        assert!((report.target_height - 4.0 / 3.0).abs() < 1e-12);
        assert!(
            report.max_height_deviation <= 1e-4,
            "deviation {}",
            report.max_height_deviation
        );
        assert!(report.derivative_at_target.abs() < 1e-12);
    }

    #[test]
    fn constant_graph_at_critical_height_is_fixed() {
        let psi = PsiProfile::ramp(1.0, 4.0 / 3.0, 7.0 / 6.0).unwrap();
        let end = small_end();
        let graph = PeriodicGraphFn::constant(end, 6, 6, 4.0 / 3.0).unwrap();
        let config = SolveConfig::new(1e-10, 100).unwrap();
        let report = max_principle_i_experiment(&psi, &graph, &config).unwrap();
        assert_eq!(report.iterations, 0);
        assert!(report.max_height_deviation < 1e-14);
    }

    #[test]
    fn spanning_disk_stays_below_one() {
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let end = small_end();
        let boundary = SpanningBoundary {
            center: [0.0, 0.0],
            radius: 0.3,
            rings: 6,
            sectors: 12,
        };
        let config = SolveConfig::new(2e-3, 6000).unwrap();
        let report =
            max_principle_ii_experiment(&psi, &end, 0.1, &boundary, &config, 0.2, 11).unwrap();
        assert!((report.boundary_height - 0.9).abs() < 1e-15);
        assert!(report.z_max_final <= 1.01, "z_max {}", report.z_max_final);
    }

    #[test]
    fn t0_outside_range_rejected() {
        let psi = PsiProfile::ramp(1.0, 2.0, 1.5).unwrap();
        let end = small_end();
        let boundary = SpanningBoundary {
            center: [0.0, 0.0],
            radius: 0.2,
            rings: 3,
            sectors: 8,
        };
        let config = SolveConfig::new(1e-3, 10).unwrap();
        for t0 in [0.5, 0.0, 0.7] {
            assert!(max_principle_ii_experiment(
                &psi, &end, t0, &boundary, &config, 0.1, 1
            )
            .is_err());
        }
    }

    #[test]
    fn stability_window_values() {
        let psi = PsiProfile::hyperbolic();
        let mesh = vertical_strip(&unit_end(), 1.0, 16, 1.0, 2.0, 16).unwrap();
        let report = make_report(&psi, &mesh, &[]).unwrap();
        // Genus 2 window.
        let bounds = stability_bound_check(&report, Some(2), 0.02);
        let (lo, hi) = bounds.window.unwrap();
        assert!((lo - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((hi - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        // Genus 1 vacuous.
        assert!(stability_bound_check(&report, Some(1), 0.02).vacuous);
        // Open geodesic surface: aggregate curvature bound holds.
        let bounds = stability_bound_check(&report, None, 0.02);
        assert!(bounds.curvature_bound_ok);
        assert!(bounds.passed);
    }
}
