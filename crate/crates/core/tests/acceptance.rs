//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use grazing::constants::{c_phi_fourier, c_phi_radial};
use grazing::operators::{apply_linearized_boltzmann, apply_linearized_landau, quadratic_form};
use grazing::potential::{Potential, Shape};
use grazing::quad::QuadSpec;
use grazing::scattering::{born_angle, deflection_angle, deflection_angle_ode, r_min};
use grazing::studies::{coulomb_log_study, grazing_study, hard_potential_study};
use grazing::testfn::Psi;
use grazing::vec3::Vec3;
use std::process::Command;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn scattering_oracle() -> Outcome {
    let spec = QuadSpec::default();
    let mut worst = 0.0f64;
    for s in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let p = Potential::default_bump(s).unwrap();
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for kappa in [1e-3, 1e-2, 1e-1] {
                let q = deflection_angle(&p, rho, kappa, &spec).unwrap();
                let o = deflection_angle_ode(&p, rho, kappa, 1e-10).unwrap().theta;
                worst = worst.max((q - o).abs());
            }
        }
    }
    outcome(worst <= 1e-6, format!("max |θ_quad − θ_ode| = {worst:.2e} (tol 1e-6)"))
}

fn coulomb_closed_forms() -> Outcome {
    let spec = QuadSpec::default();
    let f0 = 1.0;
    let p = Potential::pure_power(1.0, f0).unwrap();
    let (mut rmin_err, mut born_err) = (0.0f64, 0.0f64);
    for rho in [0.05f64, 0.3, 1.0, 4.0] {
        for kappa in [1e-4f64, 1e-2, 0.5] {
            let exact = kappa + (kappa * kappa + rho * rho).sqrt();
            rmin_err = rmin_err.max((r_min(&p, rho, kappa).unwrap() - exact).abs());
            let b = born_angle(&p, rho, kappa, &spec).unwrap().theta;
            born_err = born_err.max((b - 2.0 * kappa * f0 / rho).abs());
        }
    }
    outcome(rmin_err <= 1e-10 && born_err <= 1e-10, format!("r_min err {rmin_err:.2e}, Born err {born_err:.2e} (tol 1e-10)"))
}

fn c_phi_identity() -> Outcome {
    let spec = QuadSpec::default();
    let mut worst = 0.0f64;
    for s in [0.0, 0.25, 0.5, 0.75] {
        let p = Potential::default_bump(s).unwrap();
        let r = c_phi_radial(&p, &spec).unwrap().value;
        let f = c_phi_fourier(&p, &spec).unwrap().value;
        worst = worst.max((r - f).abs() / r.abs());
    }
    outcome(worst <= 1e-4, format!("max relative radial/Fourier gap {worst:.2e} (tol 1e-4)"))
}

fn coulomb_log_onset() -> Outcome {
    let spec = QuadSpec::default();
    let kappas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let study = |f0: f64| coulomb_log_study(&Potential::new(1.0, Shape::PolyBump { f0, q: 2 }).unwrap(), &kappas, &spec).unwrap();
    let one = study(1.0);
    let two = study(2.0);
    let seq: Vec<f64> = one.records.iter().map(|r| r.value).collect();
    let diffs: Vec<f64> = seq.windows(2).map(|w| w[1] - w[0]).collect();
    let shrink: Vec<f64> = diffs.windows(2).map(|w| w[0] / w[1]).collect();
    let shrinking = shrink.iter().all(|&r| r >= 1.5);
    let ratio = two.coefficient.unwrap() / one.coefficient.unwrap();
    let decisive = (ratio / 2.0 - 1.0).abs() <= 0.1 || (ratio / 4.0 - 1.0).abs() <= 0.1;
    outcome(
        shrinking && decisive,
        format!(
            "difference ratios {:?} (need ≥ 1.5 each); f0=2/f0=1 coefficient ratio {ratio:.3} (within 10% of 2 or 4: {decisive})",
            shrink.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn collision_invariants() -> Outcome {
    let spec = QuadSpec { sphere_nodes: 4, circle_nodes: 8, ..QuadSpec::default() };
    let p = Potential::default_bump(0.5).unwrap();
    let d = 1.0 / 3f64.sqrt();
    let mut worst = 0.0f64;
    for psi in Psi::invariants() {
        for v1 in [Vec3::default(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(d, d, d)] {
            let k = apply_linearized_landau(&psi, v1, &spec).unwrap();
            worst = worst.max(k.value.abs() / k.error_estimate);
            for eps in [1e-1, 1e-3] {
                let l = apply_linearized_boltzmann(&psi, v1, eps, &p, &spec).unwrap();
                worst = worst.max(l.value.abs() / l.error_estimate);
            }
        }
    }
    outcome(worst <= 10.0, format!("max |value| / error_estimate = {worst:.3} (tol 10)"))
}

fn grazing_desk_scale() -> Outcome {
    let spec = QuadSpec::default();
    let psi = Psi::by_name("gaussian").unwrap();
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut pass = true;
    let mut detail = Vec::new();
    for s in [0.5, 1.0] {
        let r = grazing_study(&Potential::default_bump(s).unwrap(), &psi, &[Vec3::default()], &eps, &spec).unwrap();
        let errs: Vec<f64> = r.records.iter().map(|r| r.error).collect();
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        let factor = errs[0] / errs[3];
        pass &= decreasing && factor >= 3.0;
        detail.push(format!("s={s}: err {:.3e}..{:.3e} decreasing={decreasing} drop×{factor:.1}", errs[0], errs[3]));
        if s == 1.0 {
            let abl: Vec<f64> = r.records.iter().map(|r| r.ablation_error.unwrap()).collect();
            let grows = abl.windows(2).all(|w| w[1] > w[0]);
            pass &= grows;
            detail.push(format!("ablation {:.3e}..{:.3e} increasing={grows}", abl[0], abl[3]));
        }
    }
    outcome(pass, detail.join("; "))
}

fn hard_potential() -> (Outcome, Outcome) {
    let spec = QuadSpec::default();
    let psi = Psi::by_name("gaussian").unwrap();
    let eps = [1e-2, 1e-3, 1e-4, 1e-5];
    let r = hard_potential_study(&Potential::default_bump(2.0).unwrap(), &psi, &[Vec3::default()], &eps, 1e4, &spec).unwrap();
    let mismatch = r
        .records
        .iter()
        .filter(|r| r.parameter == 1e-2 || r.parameter == 1e-4)
        .map(|r| r.identity_mismatch.unwrap())
        .fold(0.0f64, f64::max);
    let errs: Vec<f64> = r.records.iter().map(|r| r.error).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    (
        outcome(mismatch <= 1e-8, format!("max relative mismatch {mismatch:.2e} at ε ∈ {{1e-2, 1e-4}} (tol 1e-8)")),
        outcome(decreasing, format!("|ε⁻¹ℒ_ε ψ − ℒ_∞ ψ| = {:?}", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>())),
    )
}

fn non_positivity() -> Outcome {
    let spec = QuadSpec::default();
    let p = Potential::default_bump(0.5).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for name in ["gaussian", "gaussian_narrow", "gaussian_shifted", "sine", "sine_x"] {
        let q = quadratic_form(&Psi::by_name(name).unwrap(), 0.1, &p, &spec).unwrap();
        worst = worst.max(q.mean / q.std_error);
    }
    outcome(worst <= 3.0, format!("max mean / std_error = {worst:.2} (tol +3)"))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("grazing-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("c.json");
    std::fs::write(&config, r#"{"s":1,"f":{"kind":"poly_bump","f0":1,"q":2},"v1_grid":[[0,0,0]],"eps_schedule":[0.1,0.01,0.001,0.0001]}"#).unwrap();
    let angle = dir.join("a.json");
    std::fs::write(&angle, r#"{"s":2,"f":{"kind":"poly_bump","f0":1,"q":2}}"#).unwrap();
    let bin = env!("CARGO_BIN_EXE_grazing");
    let run = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let out = dir.join(tag);
        for (kind, cfg) in [("coulomb-log", &config), ("angle-bound", &angle)] {
            let st = Command::new(bin)
                .args(["--threads", "1", "study", "--kind", kind, "--config"])
                .arg(cfg)
                .arg("--out-dir")
                .arg(&out)
                .output()
                .unwrap();
            assert!(st.status.code().is_some());
        }
        let st = Command::new(bin)
            .args(["--threads", "1", "apply", "--op", "boltzmann", "--psi", "gaussian", "--v1", "0.3,0,0", "--eps", "0.01", "--s", "0.5", "--out"])
            .arg(out.join("apply.json"))
            .output()
            .unwrap();
        assert!(st.status.success());
        let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.into_iter().map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())).collect()
    };
    let a = run("first");
    let b = run("second");
    let _ = std::fs::remove_dir_all(&dir);
    let same = a == b && a.len() == 5;
    outcome(same, format!("{} output files compared byte for byte", a.len()))
}

fn main() {
    let mut all = true;
    let mut report = |id: &str, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome, extra: Duration| {
        let t = Instant::now();
        let o = f();
        let el = t.elapsed() + extra;
        let pass = o.pass && el <= budget;
        all &= pass;
        println!(
            "ACCEPTANCE {id} {}: {name}: {} [{:.1} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64(),
            budget.as_secs()
        );
    };
    let min = |m: u64| Duration::from_secs(60 * m);
    report("1", "scattering oracle equivalence", min(2), &mut scattering_oracle, Duration::ZERO);
    report("2", "Coulomb closed forms", min(1), &mut coulomb_closed_forms, Duration::ZERO);
    report("3", "diffusion constant radial vs Fourier", min(1), &mut c_phi_identity, Duration::ZERO);
    report("4", "Coulomb logarithm onset", min(10), &mut coulomb_log_onset, Duration::ZERO);
    report("5", "collision invariants", min(5), &mut collision_invariants, Duration::ZERO);
    report("6", "grazing limit at desk scale", min(30), &mut grazing_desk_scale, Duration::ZERO);
    let t = Instant::now();
    let (identity, convergence) = hard_potential();
    let shared = t.elapsed();
    let mut once = Some(identity);
    report("7", "scale identity", min(5), &mut || once.take().unwrap(), shared);
    let mut once = Some(convergence);
    report("8", "non-cutoff convergence", min(20), &mut || once.take().unwrap(), shared);
    report("9", "quadratic form non-positivity", min(5), &mut non_positivity, Duration::ZERO);
    report("10", "determinism with --threads 1", min(10), &mut determinism, Duration::ZERO);
    if !all {
        std::process::exit(1);
    }
}
