//! Two-body scattering off a repulsive radial potential: turning point, deflection
//! angle, Born approximation, and the elastic collision rule.
//!
//! Relative motion is normalized to unit incoming speed, so a trajectory with impact
//! parameter `ρ` obeys `F(r) = 1 - ρ²/r² - 2κφ(r)` with `κ = 2ε/|v1 - v2|²`.

use crate::potential::Potential;
use crate::quad::{find_root_increasing, integrate_1d, integrate_breaks, Estimate, QuadSpec, Singularity};
use crate::vec3::Vec3;
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// Incoming pair of velocities together with the collision parameters.
#[derive(Debug, Clone, Copy)]
pub struct CollisionGeometry {
    v1: Vec3,
    v2: Vec3,
    rho: f64,
    azimuth: f64,
    epsilon: f64,
    kappa: f64,
    eta: Vec3,
    eta_perp: Vec3,
}

impl CollisionGeometry {
    pub fn new(v1: Vec3, v2: Vec3, rho: f64, azimuth: f64, epsilon: f64) -> Result<Self> {
        let rel = v1 - v2;
        let w = rel.norm();
        if !(w > 0.0) {
            return Err(Error::domain("colliding velocities must differ"));
        }
        if !(rho >= 0.0) || !(epsilon >= 0.0) {
            return Err(Error::domain(format!("need ρ ≥ 0 and ε ≥ 0, got ρ={rho}, ε={epsilon}")));
        }
        let eta = (1.0 / w) * rel;
        let (e1, e2) = eta.orthonormal_pair();
        let eta_perp = azimuth.cos() * e1 + azimuth.sin() * e2;
        Ok(CollisionGeometry { v1, v2, rho, azimuth, epsilon, kappa: 2.0 * epsilon / (w * w), eta, eta_perp })
    }

    pub fn v1(&self) -> Vec3 {
        self.v1
    }
    pub fn v2(&self) -> Vec3 {
        self.v2
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn relative_speed(&self) -> f64 {
        (self.v1 - self.v2).norm()
    }
    /// Unit incoming relative velocity.
    pub fn eta(&self) -> Vec3 {
        self.eta
    }
    pub fn eta_perp(&self) -> Vec3 {
        self.eta_perp
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Diagnostics {
    pub theta_error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CollisionOutcome {
    pub theta: f64,
    pub v1p: Vec3,
    pub v2p: Vec3,
    pub r_min: f64,
    pub diagnostics: Diagnostics,
}

/// Quadrature deflection with its turning point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Deflection {
    pub theta: f64,
    pub r_min: f64,
    pub error: f64,
    pub panels: usize,
    /// Set for head-on (`ρ = 0`) collisions that never turn around.
    pub no_turning_point: bool,
}

fn check_scattering_potential(p: &Potential) -> Result<()> {
    if p.has_edge_jump() {
        return Err(Error::domain("scattering needs f(1) = 0; this potential jumps at its support edge"));
    }
    Ok(())
}

/// Distance of closest approach. Returns 0 for head-on collisions that pass through
/// a bounded core (`s = 0`, `2κf(0) ≤ 1`).
pub fn r_min(p: &Potential, rho: f64, kappa: f64) -> Result<f64> {
    if !(rho >= 0.0) || !(kappa >= 0.0) {
        return Err(Error::domain(format!("need ρ ≥ 0 and κ ≥ 0, got ρ={rho}, κ={kappa}")));
    }
    if rho == 0.0 && kappa == 0.0 {
        return Err(Error::domain("r_min is undefined at ρ = 0, κ = 0"));
    }
    check_scattering_potential(p)?;
    let range = p.range();
    if rho > 0.0 && (kappa == 0.0 || rho >= range) {
        return Ok(rho);
    }
    if rho == 0.0 {
        if p.s() == 0.0 && 2.0 * kappa * p.f_at_zero() <= 1.0 {
            return Ok(0.0);
        }
        let g = |r: f64| 1.0 - 2.0 * kappa * p.value(r);
        let mut hi = if p.is_compact() { range } else { 1.0 };
        while g(hi) <= 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.5 * hi;
        while g(lo) >= 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Ok(lo);
            }
        }
        return find_root_increasing(g, lo, hi, 1e-15);
    }
    // Solve for the excess t = r - ρ so small κ keeps full relative precision.
    let g = |t: f64| {
        let r = rho + t;
        t * (t + 2.0 * rho) / (r * r) - 2.0 * kappa * p.value(r)
    };
    let mut hi = if p.is_compact() { range - rho } else { rho.max(2.0 * kappa * p.f_at_zero()).max(1e-300) };
    let mut doublings = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2100 {
            return Err(Error::Bracket("no upper bracket for the turning point".into()));
        }
    }
    let t = find_root_increasing(g, 0.0, hi, 1e-15)?;
    Ok(rho + t)
}

/// Deflection angle `θ ∈ [0, π]`.
pub fn deflection_angle(p: &Potential, rho: f64, kappa: f64, spec: &QuadSpec) -> Result<f64> {
    Ok(deflection(p, rho, kappa, spec)?.theta)
}

/// Deflection angle with diagnostics.
///
/// With `r = r_min / sin τ`, `b = ρ / r_min` and `D = 2κ(φ(r_min) - φ(r)) / b²`,
/// `θ = 2∫₀^{π/2} D / (√(cos²τ + D) (cos τ + √(cos²τ + D))) dτ`, whose integrand is
/// smooth and free of cancellation. Outside a compact support `D` is constant and the
/// piece integrates to `asin(r_min/R) - asin(ρ/R)`.
pub fn deflection(p: &Potential, rho: f64, kappa: f64, spec: &QuadSpec) -> Result<Deflection> {
    if !(rho >= 0.0) || !(kappa >= 0.0) {
        return Err(Error::domain(format!("need ρ ≥ 0 and κ ≥ 0, got ρ={rho}, κ={kappa}")));
    }
    check_scattering_potential(p)?;
    let free = |r_min| Deflection { theta: 0.0, r_min, error: 0.0, panels: 0, no_turning_point: false };
    if rho == 0.0 {
        if kappa == 0.0 {
            return Ok(Deflection { no_turning_point: true, ..free(0.0) });
        }
        let r0 = r_min(p, 0.0, kappa)?;
        return Ok(if r0 > 0.0 {
            Deflection { theta: PI, ..free(r0) }
        } else {
            Deflection { no_turning_point: true, ..free(0.0) }
        });
    }
    let range = p.range();
    if kappa == 0.0 || rho >= range {
        return Ok(free(rho));
    }
    let rm = r_min(p, rho, kappa)?;
    let b = rho / rm;
    let phi_m = p.value(rm);
    let d0 = 2.0 * kappa * phi_m / (b * b);
    if !(d0 > 0.0) {
        return Ok(free(rm));
    }
    let integrand = |tau: f64| {
        let (sn, cs) = tau.sin_cos();
        let q = cs * cs;
        let drop = p.drop_from(rm, sn, q / (1.0 + sn));
        let d = 2.0 * kappa * drop / (b * b);
        let root = (q + d).sqrt();
        if root == 0.0 {
            return 0.0;
        }
        d / (root * (root + cs))
    };
    let (tau_c, outer) = if p.is_compact() {
        let tc = (rm / range).min(1.0).asin();
        (tc, tc - (rho / range).asin())
    } else {
        (0.0, 0.0)
    };
    let mut breaks = vec![tau_c];
    for k in p.kinks() {
        if k > rm {
            let tk = (rm / k).asin();
            if tk > tau_c && tk < FRAC_PI_2 {
                breaks.push(tk);
            }
        }
    }
    breaks.push(FRAC_PI_2);
    breaks.sort_by(f64::total_cmp);
    let local = QuadSpec { abs_tol: spec.abs_tol * d0.min(1.0), ..spec.clone() };
    let est = integrate_breaks(integrand, &breaks, &local)?;
    let theta = (2.0 * (outer + est.value)).clamp(0.0, PI);
    Ok(Deflection { theta, r_min: rm, error: 2.0 * est.error, panels: est.panels, no_turning_point: false })
}

/// `θ = π - 2 asin(ρ/R) - 2∫_{r_min}^R ρ / (r² √F(r)) dr` evaluated literally with an
/// inverse-square-root substitution at `r_min`. Kept as a cross-check; compact only.
pub fn deflection_angle_direct(p: &Potential, rho: f64, kappa: f64, spec: &QuadSpec) -> Result<f64> {
    if !p.is_compact() {
        return Err(Error::domain("direct deflection form needs a compact potential"));
    }
    let range = p.range();
    if !(rho > 0.0) || kappa == 0.0 || rho >= range {
        return deflection_angle(p, rho, kappa, spec);
    }
    let rm = r_min(p, rho, kappa)?;
    let f = |r: f64| {
        let big_f = (r - rho) * (r + rho) / (r * r) - 2.0 * kappa * p.value(r);
        if big_f <= 0.0 {
            0.0
        } else {
            rho / (r * r * big_f.sqrt())
        }
    };
    let est = integrate_1d(f, rm, range, Singularity::InverseSqrtLeft, spec)?;
    Ok((PI - 2.0 * (rho / range).asin() - 2.0 * est.value).clamp(0.0, PI))
}

/// Result of integrating the relative trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OdeDeflection {
    pub theta: f64,
    /// Largest |E - E₀| / E₀ of the reduced energy `½|ẋ|² + κφ(|x|)` along the path.
    pub energy_drift: f64,
    pub r_closest: f64,
    pub steps: usize,
}

/// Deflection by integrating `ẍ = -κ∇φ(|x|)` with Dormand-Prince 5(4).
///
/// Compact potentials start and end on the support sphere, where free flight is exact.
/// The untruncated power law starts on a large sphere with the asymptotic energy and
/// angular momentum, and the far-field Born deflection beyond it is added back.
pub fn deflection_angle_ode(p: &Potential, rho: f64, kappa: f64, ode_tol: f64) -> Result<OdeDeflection> {
    if !(ode_tol > 0.0) {
        return Err(Error::domain("ode_tol must be > 0"));
    }
    check_scattering_potential(p)?;
    if !(rho > 0.0) || !(kappa >= 0.0) {
        return Err(Error::domain(format!("trajectory oracle needs ρ > 0 and κ ≥ 0, got ρ={rho}, κ={kappa}")));
    }
    let none = OdeDeflection { theta: 0.0, energy_drift: 0.0, r_closest: rho, steps: 0 };
    if kappa == 0.0 || rho >= p.range() {
        return Ok(none);
    }
    let (start, tail) = if p.is_compact() {
        (p.range(), 0.0)
    } else {
        let l = 1e3 * rho.max(1.0).max((2.0 * kappa * p.f_at_zero()).powf(1.0 / p.s().max(1e-3)));
        // Per leg, -κρ ∫_L^∞ φ'(r)/r dr for φ = f0 r^{-s}.
        let s = p.s();
        (l, 2.0 * kappa * rho * s * p.f_at_zero() * l.powf(-s - 1.0) / (s + 1.0))
    };
    let e0 = 0.5;
    let speed = (1.0 - 2.0 * kappa * p.value(start)).sqrt();
    let offset = rho / speed;
    let mut y = [-(start * start - offset * offset).sqrt(), offset, speed, 0.0];
    let accel = |y: &[f64; 4]| -> [f64; 4] {
        let r = y[0].hypot(y[1]);
        let (_, d1, _) = p.value_and_derivatives(r);
        let k = -kappa * d1 / r;
        [y[2], y[3], k * y[0], k * y[1]]
    };
    let energy = |y: &[f64; 4]| 0.5 * (y[2] * y[2] + y[3] * y[3]) + kappa * p.value(y[0].hypot(y[1]));
    let mut t: f64 = 0.0;
    let mut h = 1e-3 * start.min(1.0);
    let mut drift: f64 = 0.0;
    let mut r_closest = start;
    let mut steps = 0usize;
    let mut k1 = accel(&y);
    loop {
        if h < 1e-14 * t.max(1.0) {
            return Err(Error::StepUnderflow { r: y[0].hypot(y[1]), t, r_closest });
        }
        if steps > 5_000_000 {
            return Err(Error::NonConvergence { value: f64::NAN, error: f64::INFINITY, panels: steps });
        }
        let (ynew, k7, err) = dopri_step(&accel, &y, &k1, h, ode_tol);
        if err <= 1.0 {
            let r = ynew[0].hypot(ynew[1]);
            if r > start && ynew[0] * ynew[2] + ynew[1] * ynew[3] > 0.0 {
                // Land exactly on the exit sphere so no step straddles the edge of the support.
                let exit = |hh: f64| {
                    let (yy, _, _) = dopri_step(&accel, &y, &k1, hh, ode_tol);
                    yy[0].hypot(yy[1]) - start
                };
                let hx = if exit(0.0) < 0.0 { find_root_increasing(exit, 0.0, h, 1e-15)? } else { h };
                y = dopri_step(&accel, &y, &k1, hx, ode_tol).0;
                steps += 1;
                drift = drift.max((energy(&y) - e0).abs() / e0);
                break;
            }
            t += h;
            y = ynew;
            k1 = k7;
            steps += 1;
            r_closest = r_closest.min(r);
            drift = drift.max((energy(&y) - e0).abs() / e0);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    let theta = y[3].abs().atan2(y[2]) + tail;
    Ok(OdeDeflection { theta: theta.min(PI), energy_drift: drift, r_closest, steps })
}

const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// One Dormand-Prince step of the autonomous system; returns the new state, its
/// derivative (first-same-as-last) and the scaled error norm.
fn dopri_step<F: Fn(&[f64; 4]) -> [f64; 4]>(f: &F, y: &[f64; 4], k1: &[f64; 4], h: f64, tol: f64) -> ([f64; 4], [f64; 4], f64) {
    let comb = |ks: &[&[f64; 4]], a: &[f64]| {
        let mut out = *y;
        for i in 0..4 {
            let mut acc = 0.0;
            for (k, c) in ks.iter().zip(a) {
                acc += c * k[i];
            }
            out[i] += h * acc;
        }
        out
    };
    let k2 = f(&comb(&[k1], &[A21]));
    let k3 = f(&comb(&[k1, &k2], &A3));
    let k4 = f(&comb(&[k1, &k2, &k3], &A4));
    let k5 = f(&comb(&[k1, &k2, &k3, &k4], &A5));
    let k6 = f(&comb(&[k1, &k2, &k3, &k4, &k5], &A6));
    let ynew = comb(&[k1, &k2, &k3, &k4, &k5, &k6], &B);
    let k7 = f(&ynew);
    let ks = [k1, &k2, &k3, &k4, &k5, &k6, &k7];
    let mut sq = 0.0;
    for i in 0..4 {
        let mut e = 0.0;
        for (k, c) in ks.iter().zip(E.iter()) {
            e += c * k[i];
        }
        let scale = tol + tol * y[i].abs().max(ynew[i].abs());
        sq += (h * e / scale).powi(2);
    }
    (ynew, k7, (sq / 4.0).sqrt())
}

/// Leading-order (straight-line) deflection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BornAngle {
    pub theta: f64,
    /// Whether `κ < ρ^s / (4 f(0))`, where the linearization is controlled.
    pub in_validity_region: bool,
}

/// `I(ρ) = ∫₀^{acos(ρ/R)} r φ'(r) dτ` along the straight line `r = ρ / cos τ`, i.e. half
/// the transverse force integrated over a rectilinear pass at impact parameter `ρ`.
pub fn straight_line_integral(p: &Potential, rho: f64, spec: &QuadSpec) -> Result<Estimate> {
    if !(rho > 0.0) {
        return Err(Error::domain(format!("straight-line integral needs ρ > 0, got {rho}")));
    }
    let range = p.range();
    if rho >= range {
        return Ok(Estimate::zero());
    }
    let upper = if p.is_compact() { (rho / range).acos() } else { FRAC_PI_2 };
    let mut breaks = vec![0.0];
    for k in p.kinks() {
        if k > rho {
            breaks.push((rho / k).acos());
        }
    }
    breaks.push(upper);
    breaks.sort_by(f64::total_cmp);
    let f = |tau: f64| {
        let c = tau.cos();
        if c <= 0.0 {
            return 0.0;
        }
        let r = rho / c;
        let (_, d1, _) = p.value_and_derivatives(r);
        r * d1
    };
    integrate_breaks(f, &breaks, spec)
}

/// `θ_B = -2κ I(ρ)`.
pub fn born_angle(p: &Potential, rho: f64, kappa: f64, spec: &QuadSpec) -> Result<BornAngle> {
    if !(rho > 0.0) || !(kappa >= 0.0) {
        return Err(Error::domain(format!("Born angle needs ρ > 0 and κ ≥ 0, got ρ={rho}, κ={kappa}")));
    }
    let in_validity_region = kappa < rho.powf(p.s()) / (4.0 * p.f_at_zero());
    if kappa == 0.0 {
        return Ok(BornAngle { theta: 0.0, in_validity_region });
    }
    let theta = -2.0 * kappa * straight_line_integral(p, rho, spec)?.value;
    Ok(BornAngle { theta, in_validity_region })
}

/// Velocity change of particle 1, `v̂ = (w/2)((cos θ - 1) η + sin θ η⊥)`.
pub fn velocity_change(g: &CollisionGeometry, theta: f64) -> Vec3 {
    let half_w = 0.5 * g.relative_speed();
    let s = (0.5 * theta).sin();
    (half_w * (-2.0 * s * s)) * g.eta() + (half_w * theta.sin()) * g.eta_perp()
}

/// Post-collision velocities for a given deflection angle.
pub fn outgoing_velocities(g: &CollisionGeometry, theta: f64) -> Result<CollisionOutcome> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain(format!("θ must lie in [0, π], got {theta}")));
    }
    let dv = velocity_change(g, theta);
    Ok(CollisionOutcome { theta, v1p: g.v1() + dv, v2p: g.v2() - dv, r_min: f64::NAN, diagnostics: Diagnostics::default() })
}

/// Full collision: deflection by quadrature, then the collision rule.
pub fn collide(p: &Potential, g: &CollisionGeometry, spec: &QuadSpec) -> Result<CollisionOutcome> {
    let d = deflection(p, g.rho(), g.kappa(), spec)?;
    let mut out = outgoing_velocities(g, d.theta)?;
    out.r_min = d.r_min;
    out.diagnostics = Diagnostics { theta_error: d.error, panels: d.panels };
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AngleComparison {
    pub theta_eps: f64,
    pub theta_hom: f64,
    /// `ε^{3/10} + min(1, ε^{4/10} / ρ^{s-1})`, the shape of the bound up to a constant.
    pub bound: f64,
}

/// Compares the deflection off `f(εr)/r^s` with that off the homogeneous `f(0)/r^s`
/// at coupling `κ = 2/|v_rel|²`, inside the region `|v_rel| > 3ε^{s/20}`, `ρ < ε^{-1/10}/2`.
pub fn angle_comparison(p: &Potential, eps: f64, rho: f64, v_rel: f64, spec: &QuadSpec) -> Result<AngleComparison> {
    let s = p.s();
    if !(s > 1.0) || !p.is_compact() {
        return Err(Error::domain("angle comparison needs a compact potential with s > 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("ε must lie in (0, 1), got {eps}")));
    }
    let v_min = 3.0 * eps.powf(s / 20.0);
    if !(v_rel > v_min) {
        return Err(Error::domain(format!("region violated: |v1 - v2| > 3ε^(s/20) = {v_min} fails for {v_rel}")));
    }
    let rho_max = 0.5 * eps.powf(-0.1);
    if !(rho > 0.0 && rho < rho_max) {
        return Err(Error::domain(format!("region violated: 0 < ρ < ε^(-1/10)/2 = {rho_max} fails for {rho}")));
    }
    let kappa = 2.0 / (v_rel * v_rel);
    let theta_eps = deflection_angle(&p.dilated(eps)?, rho, kappa, spec)?;
    let theta_hom = deflection_angle(&Potential::pure_power(s, p.f_at_zero())?, rho, kappa, spec)?;
    let bound = eps.powf(0.3) + (eps.powf(0.4) / rho.powf(s - 1.0)).min(1.0);
    Ok(AngleComparison { theta_eps, theta_hom, bound })
}
