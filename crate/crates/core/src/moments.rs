//! Impact-parameter moments of the deflection angle and of the velocity change `v̂`.

use crate::potential::Potential;
use crate::quad::{find_root_increasing, integrate_1d, integrate_breaks, Estimate, QuadSpec, Singularity};
use crate::scattering::deflection;
use crate::vec3::{Mat3, Vec3};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Radius where `κφ(r) = 1`, the scale below which collisions are hard. Returns the
/// support radius when the potential never reaches `1/κ`.
pub fn collision_length(p: &Potential, kappa: f64) -> f64 {
    let upper = if p.is_compact() { p.range() } else { 1.0 };
    let g = |r: f64| 1.0 - kappa * p.value(r);
    if kappa <= 0.0 || g(1e-300) >= 0.0 {
        return upper;
    }
    let mut hi = upper;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.5 * hi;
    while g(lo) >= 0.0 {
        lo *= 0.5;
    }
    find_root_increasing(g, lo, hi, 1e-12).unwrap_or(hi)
}

/// Breakpoints in ρ for integrals over the impact parameter: one per decade from a
/// head-on cutoff up to `upper / 2`. Returns `(cutoff, breaks)`.
pub(crate) fn rho_breaks(p: &Potential, kappa: f64, upper: f64) -> (f64, Vec<f64>) {
    let ell = collision_length(p, kappa).min(upper);
    let cutoff = 1e-6 * ell;
    let half = 0.5 * upper;
    let mut breaks = vec![cutoff];
    let mut x = cutoff;
    while x * 10.0 < half {
        x *= 10.0;
        breaks.push(x);
    }
    for k in p.kinks() {
        if k > cutoff && k < half {
            breaks.push(k);
        }
    }
    breaks.push(half);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    (cutoff, breaks)
}

/// `∫₀^R g(θ(ρ)) ρ dρ` for a compact potential, with `g(0) = 0`.
///
/// Below a cutoff far inside the collision length the head-on limit of θ is used
/// exactly; near the support edge the substitution `ρ = R - t²` resolves the
/// square-root approach of θ to zero.
pub fn rho_moment<G: Fn(f64) -> f64>(p: &Potential, kappa: f64, g: G, spec: &QuadSpec) -> Result<Estimate> {
    if !p.is_compact() {
        return Err(Error::domain("impact-parameter moments need a compactly supported potential"));
    }
    if !(kappa >= 0.0) {
        return Err(Error::domain(format!("κ must be ≥ 0, got {kappa}")));
    }
    if kappa == 0.0 {
        return Ok(Estimate::zero());
    }
    let range = p.range();
    let (cutoff, breaks) = rho_breaks(p, kappa, range);
    let head_on = deflection(p, 0.0, kappa, spec)?.theta;
    let head = g(head_on) * 0.5 * cutoff * cutoff;
    // θ errors are ~rel_tol; asking the outer rule for more is pointless.
    let outer = QuadSpec { rel_tol: 100.0 * spec.rel_tol, abs_tol: 1e-300, ..spec.clone() };
    let failure = std::cell::Cell::new(None);
    let integrand = |rho: f64| match deflection(p, rho, kappa, spec) {
        Ok(d) => g(d.theta) * rho,
        Err(e) => {
            failure.set(Some(e.to_string()));
            0.0
        }
    };
    let body = integrate_breaks(integrand, &breaks, &outer)?;
    let edge = integrate_1d(integrand, 0.5 * range, range, Singularity::InverseSqrtRight, &outer)?;
    if let Some(msg) = failure.take() {
        return Err(Error::domain(msg));
    }
    Ok(Estimate { value: head + body.value + edge.value, error: body.error + edge.error, panels: body.panels + edge.panels })
}

/// `∫₀¹ sin²(θ(ρ)/2) ρ dρ`.
pub fn sin2_moment(p: &Potential, kappa: f64, spec: &QuadSpec) -> Result<f64> {
    Ok(rho_moment(p, kappa, |t| (0.5 * t).sin().powi(2), spec)?.value)
}

/// `∫₀¹ |θ(ρ)|³ ρ dρ`.
pub fn cube_moment(p: &Potential, kappa: f64, spec: &QuadSpec) -> Result<f64> {
    Ok(rho_moment(p, kappa, |t| t.abs().powi(3), spec)?.value)
}

/// Moments of `v̂ = v1' - v1` against the rate `(v1 - v2)·ν dν` over the hemisphere.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentSet {
    pub first: Vec3,
    pub second: Mat3,
    pub third_abs: f64,
    pub kappa: f64,
    pub v_rel: f64,
}

/// Reduces the hemisphere integrals with `∫ η⊥ dη⊥ = 0` and `∫ η⊥⊗η⊥ dη⊥ = π P⊥`:
/// with `w = |v1 - v2|` and `S_k = ∫ sin^k(θ/2) ρ dρ`,
/// `first = -2π w² S₂ η`, `second = w³ (2π S₄ η⊗η + π ∫ sin²cos²(θ/2) ρ dρ P⊥)`,
/// `third_abs = 2π w⁴ S₃`.
pub fn vhat_moments(v1: Vec3, v2: Vec3, epsilon: f64, p: &Potential, spec: &QuadSpec) -> Result<MomentSet> {
    let rel = v1 - v2;
    let w = rel.norm();
    if !(w > 0.0) {
        return Err(Error::domain("vhat moments need v1 ≠ v2"));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("ε must be ≥ 0, got {epsilon}")));
    }
    let eta = (1.0 / w) * rel;
    let kappa = 2.0 * epsilon / (w * w);
    let sin4 = rho_moment(p, kappa, |t| (0.5 * t).sin().powi(4), spec)?.value;
    let mixed = rho_moment(p, kappa, |t| (0.5 * t.sin()).powi(2), spec)?.value;
    let sin3 = rho_moment(p, kappa, |t| (0.5 * t).sin().abs().powi(3), spec)?.value;
    let sin2 = sin4 + mixed;
    let w2 = w * w;
    let w3 = w2 * w;
    let second = eta.outer(eta).scaled(2.0 * PI * w3 * sin4).plus(Mat3::perp_projector(eta).scaled(PI * w3 * mixed));
    Ok(MomentSet { first: (-2.0 * PI * w2 * sin2) * eta, second, third_abs: 2.0 * PI * w2 * w2 * sin3, kappa, v_rel: w })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::circle_rule;
    use crate::scattering::{deflection_angle, velocity_change, CollisionGeometry};
    use approx::assert_relative_eq;

    fn spec() -> QuadSpec {
        QuadSpec::default()
    }

    #[test]
    fn zero_coupling() {
        let p = Potential::default_bump(1.0).unwrap();
        assert_eq!(sin2_moment(&p, 0.0, &spec()).unwrap(), 0.0);
        assert_eq!(cube_moment(&p, 0.0, &spec()).unwrap(), 0.0);
        let m = vhat_moments(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 0.0, &p, &spec()).unwrap();
        assert_eq!(m.first.norm(), 0.0);
        assert_eq!(m.third_abs, 0.0);
        assert_eq!(m.second.trace(), 0.0);
    }

    #[test]
    fn coulomb_moment_against_closed_form() {
        // For the untruncated Rutherford law sin²(θ/2) = κ²/(κ² + ρ²), so on (0, 1)
        // the moment is (κ²/2) ln(1 + 1/κ²).
        let p = Potential::pure_power(1.0, 1.0).unwrap();
        let kappa: f64 = 1e-3;
        let est = {
            let g = |rho: f64| (0.5 * deflection_angle(&p, rho, kappa, &spec()).unwrap()).sin().powi(2) * rho;
            let mut breaks = vec![0.0, 1e-9];
            let mut x: f64 = 1e-9;
            while x < 1.0 {
                x *= 10.0;
                breaks.push(x.min(1.0));
            }
            crate::quad::integrate_breaks(g, &breaks, &QuadSpec { rel_tol: 1e-9, ..spec() }).unwrap().value
        };
        let exact = 0.5 * kappa * kappa * (1.0 + 1.0 / (kappa * kappa)).ln();
        assert_relative_eq!(est, exact, max_relative = 1e-8);
    }

    #[test]
    fn moment_is_resolution_stable() {
        let p = Potential::default_bump(1.0).unwrap();
        for kappa in [1e-2, 1e-4] {
            let a = sin2_moment(&p, kappa, &spec()).unwrap();
            let b = sin2_moment(&p, kappa, &QuadSpec { rel_tol: 1e-13, abs_tol: 1e-18, ..spec() }).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn cube_moment_scales_like_kappa_squared_at_coulomb_order() {
        let p = Potential::default_bump(1.0).unwrap();
        let c1 = cube_moment(&p, 1e-3, &spec()).unwrap() / 1e-6;
        let c2 = cube_moment(&p, 5e-4, &spec()).unwrap() / 2.5e-7;
        assert!(c2 <= 1.2 * c1 && c1 <= 1.2 * c2, "{c1} {c2}");
    }

    #[test]
    fn trace_identity_and_direction() {
        let p = Potential::default_bump(0.5).unwrap();
        let v1 = Vec3::new(0.2, -0.4, 1.0);
        let v2 = Vec3::new(-0.3, 0.1, 0.0);
        let eps = 0.02;
        let m = vhat_moments(v1, v2, eps, &p, &spec()).unwrap();
        let w = (v1 - v2).norm();
        let eta = (1.0 / w) * (v1 - v2);
        let s2 = sin2_moment(&p, m.kappa, &spec()).unwrap();
        assert_relative_eq!(m.second.trace(), 2.0 * PI * w.powi(3) * s2, max_relative = 1e-9);
        assert_relative_eq!(m.first.dot(eta), -m.first.norm(), max_relative = 1e-14);
        let (e1, e2) = eta.orthonormal_pair();
        assert_relative_eq!(m.second.mul_vec(e1).dot(e1), m.second.mul_vec(e2).dot(e2), max_relative = 1e-12);
    }

    #[test]
    fn hemisphere_reduction_matches_direct_tensor_quadrature() {
        let p = Potential::default_bump(1.0).unwrap();
        let v1 = Vec3::new(0.5, 0.2, -0.1);
        let v2 = Vec3::new(-0.4, 0.3, 0.6);
        let eps = 0.05;
        let m = vhat_moments(v1, v2, eps, &p, &spec()).unwrap();
        let w = (v1 - v2).norm();
        let circle = circle_rule(12, 0.3);
        let mut direct = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let g = |rho: f64| {
                    let mut acc = 0.0;
                    for &(az, wt) in &circle {
                        let geo = CollisionGeometry::new(v1, v2, rho, az, eps).unwrap();
                        let th = deflection_angle(&p, rho, geo.kappa(), &spec()).unwrap();
                        let dv = velocity_change(&geo, th);
                        acc += wt * dv.0[i] * dv.0[j];
                    }
                    acc * w * rho
                };
                let mut breaks = vec![0.0];
                let mut x = 1e-7;
                while x < 0.5 {
                    breaks.push(x);
                    x *= 10.0;
                }
                breaks.extend([0.5, 1.0]);
                direct[i][j] = crate::quad::integrate_breaks(g, &breaks, &QuadSpec { rel_tol: 1e-10, ..spec() }).unwrap().value;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((direct[i][j] - m.second.0[i][j]).abs() <= 1e-8 * m.second.trace(), "{i}{j}");
            }
        }
    }
}
