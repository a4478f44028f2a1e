//! Linearized collision operators applied to test functions at a single velocity.
//!
//! All three operators share one product rule for `v2 = v1 + w n`: Gauss-Kronrod panels
//! in the relative speed `w` (geometric below 1, unit width above), a Gauss-Legendre ×
//! trapezoid rule on the sphere of directions `n`, and for the Boltzmann operators an
//! impact-parameter rule with one deflection table per speed node, shared by every
//! direction and azimuth. Each rule carries an embedded lower-order companion, and the
//! reported error is the sum of the companion differences plus a rounding floor.

use crate::moments::rho_breaks;
use crate::potential::Potential;
use crate::quad::{circle_rule, gk15_nodes, maxwellian, pairwise_sum, panel_nodes, radial_breaks, sphere_rule, MeanAccumulator, QuadSpec};
use crate::scattering::deflection;
use crate::testfn::TestFunction;
use crate::vec3::{Mat3, Vec3};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Breakdown {
    /// Contribution of relative speeds `w < 1`.
    pub near_field: f64,
    /// Contribution of `w ≥ 1`.
    pub far_field: f64,
    pub quadrature_error: f64,
    pub rounding_floor: f64,
    /// Extrapolated contribution beyond the impact-parameter cutoff (non-cutoff operator).
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorValue {
    pub value: f64,
    pub error_estimate: f64,
    pub breakdown: Breakdown,
    pub nodes: usize,
    /// Set when the coupling is so strong that no impact parameter is in the weak regime.
    pub strong_coupling: bool,
}

/// Product rule over `v2 = v1 + w n`.
#[derive(Debug, Clone)]
pub struct VelocityLayout {
    center: Vec3,
    speeds: Vec<(f64, f64, f64)>,
    /// `(n, weight, weight of the half-azimuth companion)`.
    sphere: Vec<(Vec3, f64, f64)>,
    /// `(cos, sin, weight, weight of the half companion)`.
    circle: Vec<(f64, f64, f64, f64)>,
}

impl VelocityLayout {
    /// Speed panels start geometric at `w_lo` (with one panel `[0, w_lo]` below).
    pub fn new(center: Vec3, w_lo: f64, spec: &QuadSpec) -> Self {
        let radius = center.norm() + spec.gaussian_radius();
        let speeds = panel_nodes(&radial_breaks(w_lo, radius, spec.radial_nodes));
        let polar = spec.sphere_nodes.max(2);
        let naz = 2 * polar;
        let sphere = sphere_rule(polar)
            .into_iter()
            .enumerate()
            .map(|(i, (n, w))| (n, w, if (i % naz) % 2 == 0 { 2.0 * w } else { 0.0 }))
            .collect();
        let circle = circle_rule(spec.circle_nodes, spec.circle_phase)
            .into_iter()
            .enumerate()
            .map(|(i, (a, w))| (a.cos(), a.sin(), w, if i % 2 == 0 { 2.0 * w } else { 0.0 }))
            .collect();
        VelocityLayout { center, speeds, sphere, circle }
    }

    /// Layout resolving the strong-coupling speeds `w ≲ √(2ε f(0))`.
    pub fn for_coupling(center: Vec3, epsilon: f64, f0: f64, spec: &QuadSpec) -> Self {
        Self::new(center, (1e-2 * (2.0 * epsilon * f0).sqrt().min(1.0)).max(1e-8), spec)
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn speed_nodes(&self) -> usize {
        self.speeds.len()
    }
}

/// Per-speed accumulators: the full rule and its embedded companions.
#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    full: f64,
    coarse_rho: f64,
    half_circle: f64,
    half_sphere: f64,
    abs: f64,
    tail: f64,
    count: usize,
}

fn combine(layout: &VelocityLayout, cells: &[Cell], spec: &QuadSpec, strong_coupling: bool) -> Result<OperatorValue> {
    let pick = |f: &dyn Fn(&Cell, &(f64, f64, f64)) -> f64| -> f64 {
        let terms: Vec<f64> = cells.iter().zip(&layout.speeds).map(|(c, n)| f(c, n)).collect();
        pairwise_sum(&terms)
    };
    let value = pick(&|c, n| n.1 * c.full);
    let gauss = pick(&|c, n| n.2 * c.full);
    let rho = pick(&|c, n| n.1 * c.coarse_rho);
    let circle = pick(&|c, n| n.1 * c.half_circle);
    let sphere = pick(&|c, n| n.1 * c.half_sphere);
    let near = pick(&|c, n| if n.0 < 1.0 { n.1 * c.full } else { 0.0 });
    let abs = pick(&|c, n| n.1.abs() * c.abs);
    let tail = pick(&|c, n| n.1.abs() * c.tail.abs());
    let quadrature_error = (value - gauss).abs() + (value - rho).abs() + (value - circle).abs() + (value - sphere).abs();
    let rounding_floor = 16.0 * f64::EPSILON * abs + spec.abs_tol * 1e-3;
    if !value.is_finite() {
        return Err(Error::NonConvergence { value, error: f64::INFINITY, panels: layout.speeds.len() / 15 });
    }
    Ok(OperatorValue {
        value,
        error_estimate: quadrature_error + rounding_floor + tail,
        breakdown: Breakdown { near_field: near, far_field: value - near, quadrature_error, rounding_floor, tail_bound: tail },
        nodes: cells.iter().map(|c| c.count).sum(),
        strong_coupling,
    })
}

/// Impact-parameter rule at one coupling: nodes carry the `ρ dρ` weight.
struct RhoRule {
    /// `∫₀^{cutoff} ρ dρ`, where θ is replaced by its head-on limit.
    head_weight: f64,
    head_theta: f64,
    /// `(ρ, K weight, G weight)`, Jacobians included.
    nodes: Vec<(f64, f64, f64)>,
    /// Index of the first node of the outermost panel (non-compact potentials only).
    tail_from: Option<usize>,
}

impl RhoRule {
    fn new(p: &Potential, kappa: f64, rho_max: Option<f64>) -> RhoRule {
        let upper = if p.is_compact() { p.range() } else { rho_max.unwrap_or(1.0) };
        let (cutoff, breaks) = rho_breaks(p, kappa, upper);
        let mut nodes: Vec<(f64, f64, f64)> = panel_nodes(&breaks).into_iter().map(|(r, k, g)| (r, k * r, g * r)).collect();
        let mut tail_from = None;
        if p.is_compact() {
            // ρ = R - t² on [R/2, R].
            let tmax = (0.5 * upper).sqrt();
            for (a, b) in [(0.0, 0.5 * tmax), (0.5 * tmax, tmax)] {
                for (t, k, g) in gk15_nodes(a, b) {
                    let r = upper - t * t;
                    nodes.push((r, k * 2.0 * t * r, g * 2.0 * t * r));
                }
            }
        } else {
            tail_from = Some(nodes.len());
            for (r, k, g) in gk15_nodes(0.5 * upper, upper) {
                nodes.push((r, k * r, g * r));
            }
        }
        RhoRule { head_weight: 0.5 * cutoff * cutoff, head_theta: 0.0, nodes, tail_from }
    }
}

/// Deflection table `(−2 sin²(θ/2), sin θ)` on the rule's nodes.
fn angle_table(p: &Potential, kappa: f64, rule: &mut RhoRule, spec: &QuadSpec) -> Result<Vec<(f64, f64)>> {
    rule.head_theta = deflection(p, 0.0, kappa, spec)?.theta;
    rule.nodes
        .iter()
        .map(|&(r, _, _)| {
            let t = deflection(p, r, kappa, spec)?.theta;
            let s = (0.5 * t).sin();
            Ok((-2.0 * s * s, t.sin()))
        })
        .collect()
}

fn check_velocity(v1: Vec3) -> Result<()> {
    if !v1.0.iter().all(|x| x.is_finite()) {
        return Err(Error::domain("velocity must be finite"));
    }
    Ok(())
}

/// `ℒ_ε ψ(v1) = ∫∫∫ (ψ(v1') + ψ(v2') − ψ(v1) − ψ(v2)) ρ M(v2) |v1 − v2| dρ dη⊥ dv2`.
pub fn apply_linearized_boltzmann<T: TestFunction>(psi: &T, v1: Vec3, epsilon: f64, p: &Potential, spec: &QuadSpec) -> Result<OperatorValue> {
    let layout = VelocityLayout::for_coupling(v1, epsilon, p.f_at_zero(), spec);
    apply_linearized_boltzmann_on(psi, epsilon, p, None, &layout, spec)
}

/// As [`apply_linearized_boltzmann`] on a caller-supplied layout; `rho_max` truncates
/// the impact parameter for non-compact potentials.
pub fn apply_linearized_boltzmann_on<T: TestFunction>(
    psi: &T,
    epsilon: f64,
    p: &Potential,
    rho_max: Option<f64>,
    layout: &VelocityLayout,
    spec: &QuadSpec,
) -> Result<OperatorValue> {
    spec.validate()?;
    let v1 = layout.center;
    check_velocity(v1)?;
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("ε must be ≥ 0, got {epsilon}")));
    }
    if !p.is_compact() && rho_max.is_none() {
        return Err(Error::domain("non-compact potentials need an impact-parameter cutoff"));
    }
    let strong = 2.0 * epsilon * p.f_at_zero() >= 1.0;
    if epsilon == 0.0 {
        return combine(layout, &vec![Cell::default(); layout.speeds.len()], spec, strong);
    }
    let cells: Vec<Cell> = layout
        .speeds
        .par_iter()
        .map(|&(w, _, _)| boltzmann_cell(psi, v1, w, epsilon, p, rho_max, layout, spec))
        .collect::<Result<_>>()?;
    combine(layout, &cells, spec, strong)
}

#[allow(clippy::too_many_arguments)]
fn boltzmann_cell<T: TestFunction>(
    psi: &T,
    v1: Vec3,
    w: f64,
    epsilon: f64,
    p: &Potential,
    rho_max: Option<f64>,
    layout: &VelocityLayout,
    spec: &QuadSpec,
) -> Result<Cell> {
    let kappa = 2.0 * epsilon / (w * w);
    let mut rule = RhoRule::new(p, kappa, rho_max);
    let table = angle_table(p, kappa, &mut rule, spec)?;
    let half_w = 0.5 * w;
    let hs = (0.5 * rule.head_theta).sin();
    let head = (-2.0 * hs * hs * half_w, rule.head_theta.sin() * half_w);
    let mut cell = Cell::default();
    let mut dirs = Vec::with_capacity(layout.circle.len());
    for &(n, wn, wn_half) in &layout.sphere {
        let v2 = v1 + w * n;
        let eta = -n;
        let (e1, e2) = eta.orthonormal_pair();
        dirs.clear();
        dirs.extend(layout.circle.iter().map(|&(c, s, _, _)| c * e1 + s * e2));
        // (full, coarse ρ, half circle, abs, tail) for this direction.
        let mut acc = [0.0f64; 5];
        let mut add = |a: f64, b: f64, wk: f64, wg: f64, tail: bool| {
            let (mut full, mut half, mut abs) = (0.0, 0.0, 0.0);
            for (perp, &(_, _, wc, wc_half)) in dirs.iter().zip(&layout.circle) {
                let vhat = a * eta + b * *perp;
                let d1 = psi.diff(v1, vhat);
                let d2 = psi.diff(v2, -vhat);
                let d = d1 + d2;
                full += wc * d;
                half += wc_half * d;
                abs += wc * (d1.abs() + d2.abs());
            }
            acc[0] += wk * full;
            acc[1] += wg * full;
            acc[2] += wk * half;
            acc[3] += wk.abs() * abs;
            if tail {
                acc[4] += wk * full;
            }
        };
        add(head.0, head.1, rule.head_weight, rule.head_weight, false);
        for (j, (&(_, wk, wg), &(c, s))) in rule.nodes.iter().zip(&table).enumerate() {
            add(half_w * c, half_w * s, wk, wg, rule.tail_from.is_some_and(|t| j >= t));
        }
        let scale = maxwellian(v2) * w * w * w;
        cell.full += wn * scale * acc[0];
        cell.coarse_rho += wn * scale * acc[1];
        cell.half_circle += wn * scale * acc[2];
        cell.half_sphere += wn_half * scale * acc[0];
        cell.abs += wn * scale * acc[3];
        cell.tail += wn * scale * acc[4];
    }
    if let Some(_) = rule.tail_from {
        // The outer panel [ρ/2, ρ] of a ρ^{1-2s} integrand; the rest of the tail is
        // that panel times 1/(2^{2s-2} - 1).
        let s = p.s();
        cell.tail *= 1.0 / (2f64.powf(2.0 * s - 2.0) - 1.0);
    }
    cell.count = layout.sphere.len() * (rule.nodes.len() + 1) * layout.circle.len();
    Ok(cell)
}

/// `𝒦ψ(v1)` through `∫ [4η·(∇ψ(v2) − ∇ψ(v1))/|v1−v2|² + P⊥η:(∇²ψ(v1) + ∇²ψ(v2))/|v1−v2|] M(v2) dv2`.
pub fn apply_linearized_landau<T: TestFunction>(psi: &T, v1: Vec3, spec: &QuadSpec) -> Result<OperatorValue> {
    spec.validate()?;
    check_velocity(v1)?;
    let layout = VelocityLayout::new(v1, 1.0 / 16.0, spec);
    let g1 = psi.gradient(v1);
    let h1 = psi.hessian(v1);
    let cells: Vec<Cell> = layout
        .speeds
        .par_iter()
        .map(|&(w, _, _)| {
            let mut cell = Cell::default();
            for &(n, wn, wn_half) in &layout.sphere {
                let v2 = v1 + w * n;
                let eta = -n;
                let h = h1.plus(psi.hessian(v2));
                let drift = 4.0 * eta.dot(psi.gradient(v2) - g1);
                let diffusion = w * (h.trace() - eta.dot(h.mul_vec(eta)));
                let m = maxwellian(v2);
                let y = m * (drift + diffusion);
                cell.full += wn * y;
                cell.half_sphere += wn_half * y;
                cell.abs += wn * m * (drift.abs() + diffusion.abs());
            }
            cell.coarse_rho = cell.full;
            cell.half_circle = cell.full;
            cell.count = layout.sphere.len();
            cell
        })
        .collect();
    combine(&layout, &cells, spec, false)
}

/// Truncated non-cutoff operator `ℒ_∞` for the homogeneous potential `f(0)/r^s`, `s > 1`,
/// with `κ = 2/|v1 − v2|²` and `ρ < ρ_max`.
pub fn apply_noncutoff_boltzmann<T: TestFunction>(psi: &T, v1: Vec3, p_hom: &Potential, rho_max: f64, spec: &QuadSpec) -> Result<OperatorValue> {
    if !(p_hom.s() > 1.0) {
        return Err(Error::domain(format!("non-cutoff operator needs s > 1, got {}", p_hom.s())));
    }
    if p_hom.is_compact() {
        return Err(Error::domain("non-cutoff operator needs the untruncated power law"));
    }
    if !(rho_max >= 10.0) {
        return Err(Error::domain(format!("rho_max must be ≥ 10, got {rho_max}")));
    }
    let layout = VelocityLayout::for_coupling(v1, 1.0, p_hom.f_at_zero(), spec);
    apply_linearized_boltzmann_on(psi, 1.0, p_hom, Some(rho_max), &layout, spec)
}

/// Seeded Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

fn sample_maxwellian(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Total change `ψ(v1') + ψ(v2') − ψ(v1) − ψ(v2)` for one collision.
fn collision_change<T: TestFunction>(psi: &T, v1: Vec3, v2: Vec3, rho: f64, azimuth: f64, epsilon: f64, p: &Potential, spec: &QuadSpec) -> Result<f64> {
    let rel = v1 - v2;
    let w = rel.norm();
    if w == 0.0 {
        return Ok(0.0);
    }
    let eta = (1.0 / w) * rel;
    let (e1, e2) = eta.orthonormal_pair();
    let perp = azimuth.cos() * e1 + azimuth.sin() * e2;
    let theta = deflection(p, rho, 2.0 * epsilon / (w * w), spec)?.theta;
    let s = (0.5 * theta).sin();
    let vhat = (-w * s * s) * eta + (0.5 * w * theta.sin()) * perp;
    Ok(psi.diff(v1, vhat) + psi.diff(v2, -vhat))
}

/// Monte-Carlo evaluation of `ℒ_ε ψ(v1)` with `v2 ~ M`, `ρ` drawn with density `2ρ/R²`
/// and antithetic azimuth pairs.
pub fn monte_carlo_boltzmann<T: TestFunction>(psi: &T, v1: Vec3, epsilon: f64, p: &Potential, spec: &QuadSpec) -> Result<McEstimate> {
    if !p.is_compact() {
        return Err(Error::domain("Monte-Carlo path needs a compact potential"));
    }
    let range = p.range();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut acc = MeanAccumulator::default();
    for _ in 0..spec.mc_samples {
        let v2 = sample_maxwellian(&mut rng);
        let rho = range * rng.gen::<f64>().sqrt();
        let az = 2.0 * PI * rng.gen::<f64>();
        let w = (v1 - v2).norm();
        let a = collision_change(psi, v1, v2, rho, az, epsilon, p, spec)?;
        let b = collision_change(psi, v1, v2, rho, az + PI, epsilon, p, spec)?;
        acc.push(PI * range * range * w * 0.5 * (a + b));
    }
    Ok(McEstimate { mean: acc.mean(), std_error: acc.std_error(), samples: acc.count() })
}

/// Monte-Carlo estimate of `(ℒ_ε ψ, ψ)_{L²_M}` via the symmetrized form
/// `−¼ ∬∫ (ψ1' + ψ2' − ψ1 − ψ2)² M(v1) M(v2) (v1 − v2)·ν dν dv1 dv2`.
pub fn quadratic_form<T: TestFunction>(psi: &T, epsilon: f64, p: &Potential, spec: &QuadSpec) -> Result<McEstimate> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("ε must be > 0, got {epsilon}")));
    }
    if !p.is_compact() {
        return Err(Error::domain("quadratic form needs a compact potential"));
    }
    let range = p.range();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut acc = MeanAccumulator::default();
    for _ in 0..spec.mc_samples {
        let v1 = sample_maxwellian(&mut rng);
        let v2 = sample_maxwellian(&mut rng);
        let rho = range * rng.gen::<f64>().sqrt();
        let az = 2.0 * PI * rng.gen::<f64>();
        let w = (v1 - v2).norm();
        let d = collision_change(psi, v1, v2, rho, az, epsilon, p, spec)?;
        acc.push(-0.25 * PI * range * range * w * d * d);
    }
    Ok(McEstimate { mean: acc.mean(), std_error: acc.std_error(), samples: acc.count() })
}

/// Second-order expansion of `ℒ_ε ψ(v1)` in `v̂` with a bound on the cubic remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorCheck {
    pub value: f64,
    pub remainder_bound: f64,
}

/// `∫ M(v2) [first·(∇ψ(v1) − ∇ψ(v2)) + ½ second:(∇²ψ(v1) + ∇²ψ(v2))] dv2` from the
/// `v̂` moments, with remainder `⅓ ‖D³ψ‖ ∫ M(v2) third_abs dv2`.
pub fn taylor_expansion<T: TestFunction>(psi: &T, v1: Vec3, epsilon: f64, p: &Potential, spec: &QuadSpec) -> Result<TaylorCheck> {
    if !p.is_compact() {
        return Err(Error::domain("Taylor expansion needs a compact potential"));
    }
    let layout = VelocityLayout::for_coupling(v1, epsilon, p.f_at_zero(), spec);
    let g1 = psi.gradient(v1);
    let h1 = psi.hessian(v1);
    let c3 = psi.third_derivative_bound();
    let parts: Vec<(f64, f64)> = layout
        .speeds
        .par_iter()
        .map(|&(w, wk, _)| {
            let kappa = 2.0 * epsilon / (w * w);
            let mut rule = RhoRule::new(p, kappa, None);
            rule.head_theta = deflection(p, 0.0, kappa, spec)?.theta;
            let (mut s2, mut s4, mut s3) = (0.0, 0.0, 0.0);
            let mut add = |theta: f64, weight: f64| {
                let s = (0.5 * theta).sin().abs();
                s2 += weight * s * s;
                s4 += weight * s.powi(4);
                s3 += weight * s.powi(3);
            };
            add(rule.head_theta, rule.head_weight);
            for &(r, k, _) in &rule.nodes {
                add(deflection(p, r, kappa, spec)?.theta, k);
            }
            let mixed = s2 - s4;
            let (mut value, mut rem) = (0.0, 0.0);
            for &(n, wn, _) in &layout.sphere {
                let v2 = v1 + w * n;
                let eta = -n;
                let first = (-2.0 * PI * w * w * s2) * eta;
                let second = eta.outer(eta).scaled(2.0 * PI * w.powi(3) * s4).plus(Mat3::perp_projector(eta).scaled(PI * w.powi(3) * mixed));
                let m = maxwellian(v2);
                value += wn * m * (first.dot(g1 - psi.gradient(v2)) + 0.5 * second.contract(&h1.plus(psi.hessian(v2))));
                rem += wn * m * 2.0 * PI * w.powi(4) * s3;
            }
            Ok((wk * w * w * value, wk.abs() * w * w * rem * c3 / 3.0))
        })
        .collect::<Result<_>>()?;
    let v: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let r: Vec<f64> = parts.iter().map(|p| p.1).collect();
    Ok(TaylorCheck { value: pairwise_sum(&v), remainder_bound: pairwise_sum(&r) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_maxwellian_3d;
    use crate::testfn::Psi;

    fn fast() -> QuadSpec {
        QuadSpec { sphere_nodes: 4, circle_nodes: 8, rel_tol: 1e-9, ..QuadSpec::default() }
    }

    #[test]
    fn constant_is_annihilated_exactly() {
        let p = Potential::default_bump(0.5).unwrap();
        let v = apply_linearized_boltzmann(&Psi::Constant { c: 3.0 }, Vec3::new(0.3, 0.0, -0.2), 0.01, &p, &fast()).unwrap();
        assert_eq!(v.value, 0.0);
        let v = apply_linearized_landau(&Psi::Constant { c: 3.0 }, Vec3::new(0.3, 0.0, -0.2), &fast()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn invariants_within_error_estimate() {
        let p = Potential::default_bump(1.0).unwrap();
        let v1 = Vec3::new(0.5, -0.5, 0.2);
        for psi in Psi::invariants() {
            let b = apply_linearized_boltzmann(&psi, v1, 0.05, &p, &fast()).unwrap();
            assert!(b.value.abs() <= 10.0 * b.error_estimate, "{psi:?} {b:?}");
            let l = apply_linearized_landau(&psi, v1, &fast()).unwrap();
            assert!(l.value.abs() <= 10.0 * l.error_estimate, "{psi:?} {l:?}");
        }
    }

    #[test]
    fn zero_coupling_vanishes() {
        let p = Potential::default_bump(1.0).unwrap();
        let v = apply_linearized_boltzmann(&Psi::by_name("gaussian").unwrap(), Vec3::default(), 0.0, &p, &fast()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn landau_matches_divergence_form() {
        // 𝒦ψ(v1) = M(v1)⁻¹ ∇·[M(v1) ∫ P⊥/|v1−v2| (∇ψ(v1) − ∇ψ(v2)) M(v2) dv2], differentiated numerically.
        let psi = Psi::by_name("gaussian").unwrap();
        let spec = QuadSpec { sphere_nodes: 8, ..QuadSpec::default() };
        let flux = |v: Vec3, i: usize| {
            let g1 = psi.gradient(v);
            let f = |v2: Vec3| {
                let rel = v - v2;
                let w = rel.norm();
                if w == 0.0 {
                    return 0.0;
                }
                let eta = (1.0 / w) * rel;
                let d = g1 - psi.gradient(v2);
                (d.0[i] - eta.0[i] * eta.dot(d)) / w
            };
            maxwellian(v) * integrate_maxwellian_3d(f, &spec, v).unwrap().value
        };
        let h = 1e-3;
        let v1 = Vec3::default();
        let mut div = 0.0;
        for i in 0..3 {
            let e = Vec3::unit(i).scale(h);
            div += (flux(v1 + e, i) - flux(v1 - e, i)) / (2.0 * h);
        }
        let oracle = div / maxwellian(v1);
        let k = apply_linearized_landau(&psi, v1, &spec).unwrap();
        assert!((k.value - oracle).abs() <= 1e-4 * oracle.abs(), "{} vs {oracle}", k.value);
    }

    #[test]
    fn isotropy_under_azimuth_rotation() {
        let p = Potential::default_bump(0.5).unwrap();
        let psi = Psi::by_name("gaussian").unwrap();
        let a = apply_linearized_boltzmann(&psi, Vec3::default(), 0.05, &p, &fast()).unwrap().value;
        let b = apply_linearized_boltzmann(&psi, Vec3::default(), 0.05, &p, &QuadSpec { circle_phase: 0.37, ..fast() }).unwrap().value;
        assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} {b}");
    }

    #[test]
    fn noncutoff_rejections() {
        let psi = Psi::by_name("gaussian").unwrap();
        let p = Potential::pure_power(1.0, 1.0).unwrap();
        assert!(apply_noncutoff_boltzmann(&psi, Vec3::default(), &p, 100.0, &fast()).is_err());
        let p = Potential::pure_power(2.0, 1.0).unwrap();
        assert!(apply_noncutoff_boltzmann(&psi, Vec3::default(), &p, 5.0, &fast()).is_err());
    }
}
