use clap::{Args, Parser, Subcommand, ValueEnum};
use grazing::config::{parse_config, RunConfig};
use grazing::constants::{c_phi_fourier, c_phi_radial, DiffusionConstant};
use grazing::moments::{collision_length, cube_moment, sin2_moment};
use grazing::operators::{apply_linearized_boltzmann, apply_linearized_landau, apply_noncutoff_boltzmann, Breakdown};
use grazing::potential::{Potential, Shape};
use grazing::quad::QuadSpec;
use grazing::scattering::deflection;
use grazing::studies::{angle_bound_study, coulomb_log_study, grazing_study, hard_potential_study, csv_number, StudyReport};
use grazing::testfn::Psi;
use grazing::vec3::Vec3;
use grazing::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "grazing", version, about = "Grazing-collision limits of the linearized Boltzmann operator")]
struct Cli {
    /// Worker threads; 1 reproduces results bit for bit.
    #[arg(long, global = true, env = "GRAZING_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Serialize)]
struct PotentialArgs {
    #[arg(long)]
    s: f64,
    /// Value of the shape function at the origin.
    #[arg(long, default_value_t = 1.0)]
    f0: f64,
    /// Order of the polynomial bump.
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Untruncated power law instead of the bump.
    #[arg(long)]
    pure_power: bool,
}

impl PotentialArgs {
    fn build(&self) -> grazing::Result<Potential> {
        if self.pure_power {
            Potential::pure_power(self.s, self.f0)
        } else {
            Potential::new(self.s, Shape::PolyBump { f0: self.f0, q: self.q })
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Op {
    Boltzmann,
    Landau,
    Noncutoff,
}

#[derive(Subcommand)]
enum Command {
    /// Deflection angle as one CSV row: rho, kappa, theta, r_min, error.
    #[command(allow_negative_numbers = true)]
    Theta {
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Impact-parameter moments of the deflection angle.
    #[command(allow_negative_numbers = true)]
    Moments {
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diffusion constant by the radial and Fourier routes.
    #[command(allow_negative_numbers = true)]
    Cphi {
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a collision operator to a named test function at one velocity.
    #[command(allow_negative_numbers = true)]
    Apply {
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long)]
        psi: String,
        #[arg(long, value_parser = parse_vec3)]
        v1: Vec3,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long, default_value_t = 1e4)]
        rho_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence study from a JSON config.
    Study {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Grazing,
    Hard,
    CoulombLog,
    AngleBound,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s}")),
    }
}

enum Failure {
    Error(Error),
    StudyFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Json(_) => 2,
        Error::NonConvergence { .. } | Error::Bracket(_) | Error::StepUnderflow { .. } => 3,
        Error::Io { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be ≥ 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let result = run(cli.command);
    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::StudyFailed) => ExitCode::from(4),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn args_hash<T: Serialize>(args: &T) -> String {
    let text = serde_json::to_string(args).expect("arguments serialize");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to a sibling temporary file and renames it over `path`.
fn write_atomic(path: &Path, contents: &str) -> grazing::Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

fn emit(out: Option<&Path>, contents: &str, what: &str) -> grazing::Result<()> {
    match out {
        Some(path) => {
            write_atomic(path, contents)?;
            println!("{what} -> {}", path.display());
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CphiOutput {
    s: f64,
    radial: DiffusionConstant,
    fourier: Option<DiffusionConstant>,
    /// `|radial − fourier| / |radial|`.
    relative_difference: Option<f64>,
    agree: Option<bool>,
    config_sha256: String,
}

#[derive(Serialize)]
struct MomentsOutput {
    s: f64,
    kappa: f64,
    sin2_moment: f64,
    cube_moment: f64,
    collision_length: f64,
    config_sha256: String,
}

#[derive(Serialize)]
struct ApplyOutput {
    value: f64,
    error_estimate: f64,
    breakdown: Breakdown,
    nodes: usize,
    strong_coupling: bool,
    config_sha256: String,
}

#[derive(Serialize)]
struct StudyOutput<'a> {
    config_sha256: String,
    config: &'a RunConfig,
    report: &'a StudyReport,
}

fn run(command: Command) -> Result<(), Failure> {
    let spec = QuadSpec::default();
    match command {
        Command::Theta { potential, rho, kappa, out } => {
            let hash = args_hash(&("theta", &potential, rho, kappa));
            let d = deflection(&potential.build()?, rho, kappa, &spec)?;
            let csv = format!(
                "# config_sha256={hash}\nrho,kappa,theta,r_min,error\n{},{},{},{},{}\n",
                csv_number(rho),
                csv_number(kappa),
                csv_number(d.theta),
                csv_number(d.r_min),
                csv_number(d.error)
            );
            emit(out.as_deref(), &csv, "theta")?;
        }
        Command::Moments { potential, kappa, out } => {
            let p = potential.build()?;
            let o = MomentsOutput {
                s: p.s(),
                kappa,
                sin2_moment: sin2_moment(&p, kappa, &spec)?,
                cube_moment: cube_moment(&p, kappa, &spec)?,
                collision_length: collision_length(&p, kappa),
                config_sha256: args_hash(&("moments", &potential, kappa)),
            };
            emit(out.as_deref(), &to_json(&o), "moments")?;
        }
        Command::Cphi { potential, out } => {
            let p = potential.build()?;
            let radial = c_phi_radial(&p, &spec)?;
            let fourier = if p.s() < 2.0 { Some(c_phi_fourier(&p, &spec)?) } else { None };
            let rel = fourier.map(|f| (radial.value - f.value).abs() / radial.value.abs());
            let o = CphiOutput {
                s: p.s(),
                radial,
                fourier,
                relative_difference: rel,
                agree: rel.map(|r| r <= 1e-4),
                config_sha256: args_hash(&("cphi", &potential)),
            };
            emit(out.as_deref(), &to_json(&o), "cphi")?;
        }
        Command::Apply { op, psi: name, v1, eps, potential, rho_max, out } => {
            let psi = Psi::by_name(&name)?;
            let v = match op {
                Op::Boltzmann => apply_linearized_boltzmann(&psi, v1, eps, &potential.build()?, &spec)?,
                Op::Landau => apply_linearized_landau(&psi, v1, &spec)?,
                Op::Noncutoff => {
                    let p = Potential::pure_power(potential.s, potential.f0)?;
                    apply_noncutoff_boltzmann(&psi, v1, &p, rho_max, &spec)?
                }
            };
            let o = ApplyOutput {
                value: v.value,
                error_estimate: v.error_estimate,
                breakdown: v.breakdown,
                nodes: v.nodes,
                strong_coupling: v.strong_coupling,
                config_sha256: args_hash(&("apply", op, &name, v1, eps, &potential, rho_max)),
            };
            emit(out.as_deref(), &to_json(&o), "apply")?;
        }
        Command::Study { kind, config, out_dir } => {
            let text = std::fs::read_to_string(&config).map_err(|source| Error::Io { path: config.clone(), source })?;
            let cfg = parse_config(&text)?;
            let p = cfg.potential()?;
            let q = cfg.quad_spec();
            let report = match kind {
                Kind::Grazing => grazing_study(&p, &cfg.psi()?, &cfg.v1_grid, &cfg.eps_schedule, &q)?,
                Kind::Hard => hard_potential_study(&p, &cfg.psi()?, &cfg.v1_grid, &cfg.eps_schedule, cfg.rho_max, &q)?,
                Kind::CoulombLog => coulomb_log_study(&p, &cfg.kappa_schedule, &q)?,
                Kind::AngleBound => angle_bound_study(&p, &cfg.eps_schedule, &cfg.rho_grid, cfg.v_rel, &q)?,
            };
            let hash = cfg.sha256();
            let dir = out_dir.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let stem = cfg.output.stem.clone().unwrap_or_else(|| report.study_kind.name().to_string());
            let csv_path = dir.join(format!("{stem}.csv"));
            let json_path = dir.join(format!("{stem}.json"));
            write_atomic(&csv_path, &report.to_csv(&hash))?;
            write_atomic(&json_path, &to_json(&StudyOutput { config_sha256: hash, config: &cfg, report: &report }))?;
            let failed = report.records.iter().filter(|r| r.status == grazing::studies::RecordStatus::Failed).count();
            println!(
                "study {}: {} ({} records, {} failed cells) -> {}, {}",
                report.study_kind.name(),
                if report.pass { "PASS" } else { "FAIL" },
                report.records.len(),
                failed,
                csv_path.display(),
                json_path.display()
            );
            for f in &report.failures {
                eprintln!("  {f}");
            }
            if !report.pass {
                return Err(Failure::StudyFailed);
            }
        }
    }
    Ok(())
}
