//! ε-sweeps comparing the collision operators with their grazing and non-cutoff limits.

use crate::constants::{c_phi_radial, measured_coulomb_coefficient, timescale, CoulombCandidates};
use crate::moments::sin2_moment;
use crate::operators::{apply_linearized_boltzmann_on, apply_linearized_landau, apply_noncutoff_boltzmann, VelocityLayout};
use crate::potential::Potential;
use crate::quad::QuadSpec;
use crate::scattering::angle_comparison;
use crate::testfn::{Psi, TestFunction};
use crate::vec3::Vec3;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Grazing,
    Hard,
    CoulombLog,
    AngleBound,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Grazing => "grazing",
            StudyKind::Hard => "hard",
            StudyKind::CoulombLog => "coulomb-log",
            StudyKind::AngleBound => "angle-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Failed,
    Skipped,
}

/// One cell of a sweep. `parameter` is ε, or κ for the Coulomb-logarithm study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRecord {
    pub parameter: f64,
    pub v1: Vec3,
    /// Impact parameter (angle-bound study only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Operator value divided by the timescale, or the tabulated moment ratio.
    pub value: f64,
    pub value_error: f64,
    pub reference: f64,
    pub error: f64,
    pub timescale: f64,
    /// Error when the timescale drops its `|log ε|` factor (s = 1 grazing only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation_error: Option<f64>,
    /// Relative mismatch of the scaling identity (hard study only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_mismatch: Option<f64>,
    pub nodes: usize,
    pub status: RecordStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StudyRecord {
    fn new(parameter: f64, v1: Vec3) -> Self {
        StudyRecord {
            parameter,
            v1,
            rho: None,
            value: f64::NAN,
            value_error: f64::NAN,
            reference: f64::NAN,
            error: f64::NAN,
            timescale: f64::NAN,
            ablation_error: None,
            identity_mismatch: None,
            nodes: 0,
            status: RecordStatus::Ok,
            note: None,
        }
    }

    fn failed(parameter: f64, v1: Vec3, e: &Error) -> Self {
        StudyRecord { status: RecordStatus::Failed, note: Some(e.to_string()), ..Self::new(parameter, v1) }
    }
}

/// Least-squares fit `err ≈ slope · x` through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Option<RateFit> {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if xs.len() < 2 || xs.len() != ys.len() || !(sxx > 0.0) {
        return None;
    }
    let slope = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x).powi(2)).sum();
    Some(RateFit { slope, residual: (ss / xs.len() as f64).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub study_kind: StudyKind,
    pub potential: Potential,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<Psi>,
    pub v1_grid: Vec<Vec3>,
    pub schedule: Vec<f64>,
    pub records: Vec<StudyRecord>,
    /// Fit of error against `1/|log ε|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
    /// Observed convergence orders `log(err_i/err_{i+1}) / log(ε_i/ε_{i+1})` at the first velocity.
    pub observed_rates: Vec<f64>,
    /// Diffusion coefficient, extrapolated coefficient, or fitted angle constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<CoulombCandidates>,
    /// Whether the error without the `|log ε|` factor grows along the schedule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation_diverges: Option<bool>,
    pub total_nodes: usize,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl StudyReport {
    /// Records whose velocity is `v1`, in schedule order.
    pub fn series(&self, v1: Vec3) -> Vec<&StudyRecord> {
        self.records.iter().filter(|r| r.v1 == v1).collect()
    }

    /// CSV table with a `# config_sha256=` comment line and a header row.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = format!("# config_sha256={config_hash}\n");
        out.push_str("study,parameter,v1_x,v1_y,v1_z,rho,value,value_error,reference,error,timescale,ablation_error,identity_mismatch,nodes,status\n");
        let opt = |x: Option<f64>| x.map(csv_number).unwrap_or_default();
        let n = csv_number;
        for r in &self.records {
            let status = match r.status {
                RecordStatus::Ok => "ok",
                RecordStatus::Failed => "failed",
                RecordStatus::Skipped => "skipped",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.study_kind.name(),
                n(r.parameter),
                n(r.v1.0[0]),
                n(r.v1.0[1]),
                n(r.v1.0[2]),
                opt(r.rho),
                n(r.value),
                n(r.value_error),
                n(r.reference),
                n(r.error),
                n(r.timescale),
                opt(r.ablation_error),
                opt(r.identity_mismatch),
                r.nodes,
                status
            );
        }
        out
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e15)`.
pub fn csv_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn check_schedule(schedule: &[f64], min_len: usize, min_decades: f64, what: &str) -> Result<()> {
    if schedule.len() < min_len {
        return Err(Error::config(format!("{what} needs at least {min_len} values")));
    }
    if !schedule.iter().all(|&e| e > 0.0 && e < 1.0) {
        return Err(Error::config(format!("{what} values must lie in (0, 1)")));
    }
    if !schedule.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::config(format!("{what} must be strictly decreasing")));
    }
    let span = (schedule[0] / schedule[schedule.len() - 1]).log10();
    if span < min_decades - 1e-9 {
        return Err(Error::config(format!("{what} must span at least {min_decades} decades")));
    }
    Ok(())
}

/// Indices `i + 1` where `err` grows beyond the combined noise of neighbours.
fn non_monotone(errs: &[f64], noise: &[f64]) -> Vec<usize> {
    (1..errs.len()).filter(|&i| errs[i] > errs[i - 1] + noise[i] + noise[i - 1]).collect()
}

fn observed_rates(schedule: &[f64], errs: &[f64]) -> Vec<f64> {
    schedule.windows(2).zip(errs.windows(2)).map(|(e, r)| (r[0] / r[1]).ln() / (e[0] / e[1]).ln()).collect()
}

/// Compares `ℒ_ε ψ / 𝔡_ε` with `2π c 𝒦ψ` along the schedule, `0 ≤ s ≤ 1`.
pub fn grazing_study(p: &Potential, psi: &Psi, v1_grid: &[Vec3], eps_schedule: &[f64], spec: &QuadSpec) -> Result<StudyReport> {
    let s = p.s();
    if !(0.0..=1.0).contains(&s) || !p.is_compact() {
        return Err(Error::config("grazing study needs a compact potential with 0 ≤ s ≤ 1"));
    }
    check_schedule(eps_schedule, 4, 2.0, "eps_schedule")?;
    if v1_grid.is_empty() {
        return Err(Error::config("v1_grid must not be empty"));
    }
    let (coefficient, candidates) = if s < 1.0 {
        (c_phi_radial(p, spec)?.value, None)
    } else {
        let c = measured_coulomb_coefficient(p, &[1e-4, 1e-5, 1e-6, 1e-7, 1e-8], spec)?;
        (c.value, c.candidates)
    };
    let landau: Vec<_> = v1_grid.iter().map(|&v| apply_linearized_landau(psi, v, spec)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..eps_schedule.len()).flat_map(|i| (0..v1_grid.len()).map(move |j| (i, j))).collect();
    let records: Vec<StudyRecord> = cells
        .par_iter()
        .map(|&(i, j)| {
            let eps = eps_schedule[i];
            let v1 = v1_grid[j];
            let layout = VelocityLayout::for_coupling(v1, eps, p.f_at_zero(), spec);
            match apply_linearized_boltzmann_on(psi, eps, p, None, &layout, spec) {
                Ok(l) => {
                    let d = timescale(eps, s);
                    let reference = 2.0 * PI * coefficient * landau[j].value;
                    let value = l.value / d;
                    StudyRecord {
                        value,
                        value_error: l.error_estimate / d + 2.0 * PI * coefficient * landau[j].error_estimate,
                        reference,
                        error: (value - reference).abs(),
                        timescale: d,
                        ablation_error: (s == 1.0).then(|| (l.value / (eps * eps) - reference).abs()),
                        nodes: l.nodes,
                        ..StudyRecord::new(eps, v1)
                    }
                }
                Err(e) => StudyRecord::failed(eps, v1, &e),
            }
        })
        .collect();
    let mut report = StudyReport {
        study_kind: StudyKind::Grazing,
        potential: p.clone(),
        psi: Some(psi.clone()),
        v1_grid: v1_grid.to_vec(),
        schedule: eps_schedule.to_vec(),
        total_nodes: records.iter().map(|r| r.nodes).sum(),
        records,
        fit: None,
        observed_rates: Vec::new(),
        coefficient: Some(coefficient),
        candidates,
        ablation_diverges: None,
        pass: true,
        failures: Vec::new(),
    };
    collect_failures(&mut report);
    let mut ablation = true;
    for &v1 in v1_grid {
        let series: Vec<StudyRecord> = report.series(v1).into_iter().cloned().collect();
        let errs: Vec<f64> = series.iter().map(|r| r.error).collect();
        let noise: Vec<f64> = series.iter().map(|r| r.value_error).collect();
        if psi.is_invariant() {
            for r in &series {
                if r.error > 10.0 * r.value_error {
                    report.failures.push(format!("invariant not annihilated at ε={} v1={:?}: {} > 10 × {}", r.parameter, v1.0, r.error, r.value_error));
                }
            }
            continue;
        }
        for i in non_monotone(&errs, &noise) {
            report.failures.push(format!("error grows at ε={} v1={:?}: {} after {}", eps_schedule[i], v1.0, errs[i], errs[i - 1]));
        }
        if s == 1.0 {
            let abl: Vec<f64> = series.iter().filter_map(|r| r.ablation_error).collect();
            ablation &= abl.windows(2).all(|w| w[1] > w[0]);
        }
    }
    if s == 1.0 {
        report.ablation_diverges = Some(ablation);
    }
    if !psi.is_invariant() {
        let first = report.series(v1_grid[0]);
        let xs: Vec<f64> = first.iter().map(|r| 1.0 / r.parameter.ln().abs()).collect();
        let ys: Vec<f64> = first.iter().map(|r| r.error).collect();
        report.fit = fit_through_origin(&xs, &ys);
        report.observed_rates = observed_rates(eps_schedule, &ys);
    }
    report.pass = report.failures.is_empty();
    Ok(report)
}

fn collect_failures(report: &mut StudyReport) {
    for r in &report.records {
        if r.status == RecordStatus::Failed {
            report.failures.push(format!("cell ε={} v1={:?} failed: {}", r.parameter, r.v1.0, r.note.as_deref().unwrap_or("")));
        }
    }
}

/// Scaling identity and convergence to the non-cutoff operator for `s > 1`.
pub fn hard_potential_study(p: &Potential, psi: &Psi, v1_grid: &[Vec3], eps_schedule: &[f64], rho_max: f64, spec: &QuadSpec) -> Result<StudyReport> {
    let s = p.s();
    if !(s > 1.0) || !p.is_compact() {
        return Err(Error::config("hard-potential study needs a compact potential with s > 1"));
    }
    check_schedule(eps_schedule, 2, 0.0, "eps_schedule")?;
    if v1_grid.is_empty() {
        return Err(Error::config("v1_grid must not be empty"));
    }
    let hom = Potential::pure_power(s, p.f_at_zero())?;
    let limit: Vec<_> = v1_grid.iter().map(|&v| apply_noncutoff_boltzmann(psi, v, &hom, rho_max, spec)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..eps_schedule.len()).flat_map(|i| (0..v1_grid.len()).map(move |j| (i, j))).collect();
    let records: Vec<StudyRecord> = cells
        .par_iter()
        .map(|&(i, j)| {
            let eps = eps_schedule[i];
            let v1 = v1_grid[j];
            let layout = VelocityLayout::for_coupling(v1, eps, p.f_at_zero(), spec);
            let run = || -> Result<StudyRecord> {
                let l = apply_linearized_boltzmann_on(psi, eps, p, None, &layout, spec)?;
                let dil = apply_linearized_boltzmann_on(psi, 1.0, &p.dilated(eps.powf(1.0 / s))?, None, &layout, spec)?;
                let d = timescale(eps, s);
                let value = l.value / d;
                let scale = dil.value.abs().max(dil.error_estimate);
                let mismatch = if scale > 0.0 { (value - dil.value).abs() / scale } else { (value - dil.value).abs() };
                Ok(StudyRecord {
                    value,
                    value_error: l.error_estimate / d + limit[j].error_estimate,
                    reference: limit[j].value,
                    error: (value - limit[j].value).abs(),
                    timescale: d,
                    identity_mismatch: Some(mismatch),
                    nodes: l.nodes + dil.nodes,
                    ..StudyRecord::new(eps, v1)
                })
            };
            run().unwrap_or_else(|e| StudyRecord::failed(eps, v1, &e))
        })
        .collect();
    let mut report = StudyReport {
        study_kind: StudyKind::Hard,
        potential: p.clone(),
        psi: Some(psi.clone()),
        v1_grid: v1_grid.to_vec(),
        schedule: eps_schedule.to_vec(),
        total_nodes: records.iter().map(|r| r.nodes).sum::<usize>() + limit.iter().map(|l| l.nodes).sum::<usize>(),
        records,
        fit: None,
        observed_rates: Vec::new(),
        coefficient: None,
        candidates: None,
        ablation_diverges: None,
        pass: true,
        failures: Vec::new(),
    };
    collect_failures(&mut report);
    for r in &report.records {
        if let Some(m) = r.identity_mismatch {
            if !(m <= 1e-8) {
                report.failures.push(format!("scaling identity violated at ε={} v1={:?}: relative mismatch {m}", r.parameter, r.v1.0));
            }
        }
    }
    if !psi.is_invariant() {
        for &v1 in v1_grid {
            let series = report.series(v1);
            let errs: Vec<f64> = series.iter().map(|r| r.error).collect();
            let noise: Vec<f64> = series.iter().map(|r| r.value_error).collect();
            for i in non_monotone(&errs, &noise) {
                report.failures.push(format!("distance to the non-cutoff limit grows at ε={} v1={:?}", eps_schedule[i], v1.0));
            }
        }
        let ys: Vec<f64> = report.series(v1_grid[0]).iter().map(|r| r.error).collect();
        report.observed_rates = observed_rates(eps_schedule, &ys);
    }
    report.pass = report.failures.is_empty();
    Ok(report)
}

/// Tabulates `∫ sin²(θ/2) ρ dρ / (κ² |log κ|)` and extrapolates its limit in `1/|log κ|`.
pub fn coulomb_log_study(p: &Potential, kappa_schedule: &[f64], spec: &QuadSpec) -> Result<StudyReport> {
    if !p.is_compact() || p.s() > 1.0 {
        return Err(Error::config("Coulomb-logarithm study needs a compact potential with s ≤ 1"));
    }
    check_schedule(kappa_schedule, 3, 3.0, "kappa_schedule")?;
    let values: Vec<Result<f64>> = kappa_schedule.par_iter().map(|&k| sin2_moment(p, k, spec)).collect();
    let mut records = Vec::with_capacity(values.len());
    for (&k, v) in kappa_schedule.iter().zip(values) {
        let lg = k.ln().abs();
        records.push(match v {
            Ok(m) => StudyRecord { value: m / (k * k * lg), value_error: spec.rel_tol * 100.0 * m / (k * k * lg), timescale: k * k * lg, ..StudyRecord::new(k, Vec3::default()) },
            Err(e) => StudyRecord::failed(k, Vec3::default(), &e),
        });
    }
    // value ≈ a + b/|log κ|; a is the coefficient of the logarithm.
    let xs: Vec<f64> = kappa_schedule.iter().map(|k| 1.0 / k.ln().abs()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.value).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let b = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let a = my - b * mx;
    for r in records.iter_mut() {
        r.reference = a;
        r.error = (r.value - a).abs();
    }
    let f0 = p.f_at_zero();
    let mut report = StudyReport {
        study_kind: StudyKind::CoulombLog,
        potential: p.clone(),
        psi: None,
        v1_grid: Vec::new(),
        schedule: kappa_schedule.to_vec(),
        total_nodes: 0,
        records,
        fit: None,
        observed_rates: Vec::new(),
        coefficient: Some(a),
        candidates: Some(CoulombCandidates { linear: f0, squared: f0 * f0 }),
        ablation_diverges: None,
        pass: true,
        failures: Vec::new(),
    };
    collect_failures(&mut report);
    if p.s() == 1.0 {
        let diffs: Vec<f64> = ys.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for (i, w) in diffs.windows(2).enumerate() {
            if !(w[1] < w[0]) {
                report.failures.push(format!("successive differences do not shrink at κ={}", kappa_schedule[i + 2]));
            }
        }
    }
    report.pass = report.failures.is_empty();
    Ok(report)
}

/// Ratio `|θ_ε − θ| / (ε^{3/10} + min(1, ε^{4/10}/ρ^{s−1}))` over a grid inside the
/// comparison region; the constant is the largest ratio per ε.
pub fn angle_bound_study(p: &Potential, eps_schedule: &[f64], rho_grid: &[f64], v_rel: f64, spec: &QuadSpec) -> Result<StudyReport> {
    if !(p.s() > 1.0) || !p.is_compact() {
        return Err(Error::config("angle-bound study needs a compact potential with s > 1"));
    }
    check_schedule(eps_schedule, 2, 0.0, "eps_schedule")?;
    if rho_grid.is_empty() {
        return Err(Error::config("rho_grid must not be empty"));
    }
    let cells: Vec<(f64, f64)> = eps_schedule.iter().flat_map(|&e| rho_grid.iter().map(move |&r| (e, r))).collect();
    let records: Vec<StudyRecord> = cells
        .par_iter()
        .map(|&(eps, rho)| {
            let base = StudyRecord { rho: Some(rho), ..StudyRecord::new(eps, Vec3::new(v_rel, 0.0, 0.0)) };
            match angle_comparison(p, eps, rho, v_rel, spec) {
                Ok(c) => StudyRecord {
                    value: c.theta_eps,
                    value_error: spec.rel_tol,
                    reference: c.theta_hom,
                    error: (c.theta_eps - c.theta_hom).abs(),
                    timescale: c.bound,
                    ..base
                },
                Err(e @ Error::Domain(_)) => StudyRecord { status: RecordStatus::Skipped, note: Some(e.to_string()), ..base },
                Err(e) => StudyRecord { status: RecordStatus::Failed, note: Some(e.to_string()), ..base },
            }
        })
        .collect();
    // Largest ratio per ε, or None when every point at that ε was skipped.
    let per_eps: Vec<Option<f64>> = eps_schedule
        .iter()
        .map(|&e| {
            let ok = records.iter().filter(|r| r.parameter == e && r.status == RecordStatus::Ok);
            ok.map(|r| r.error / r.timescale).reduce(f64::max)
        })
        .collect();
    let mut report = StudyReport {
        study_kind: StudyKind::AngleBound,
        potential: p.clone(),
        psi: None,
        v1_grid: Vec::new(),
        schedule: eps_schedule.to_vec(),
        total_nodes: 0,
        records,
        fit: None,
        observed_rates: Vec::new(),
        coefficient: per_eps.iter().flatten().copied().reduce(f64::max),
        candidates: None,
        ablation_diverges: None,
        pass: true,
        failures: Vec::new(),
    };
    collect_failures(&mut report);
    match per_eps.iter().position(Option::is_some) {
        None => report.failures.push("no sample lies inside the comparison region".into()),
        Some(i0) => {
            let first = per_eps[i0].unwrap();
            for (i, c) in per_eps.iter().enumerate().skip(i0 + 1) {
                if let Some(c) = *c {
                    if c > 2.0 * first && c > 1e-12 {
                        report.failures.push(format!("angle constant grows from {first:e} to {c:e} at ε={}", eps_schedule[i]));
                    }
                }
            }
        }
    }
    report.pass = report.failures.is_empty();
    Ok(report)
}
