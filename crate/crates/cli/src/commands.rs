//! Subcommand implementations. Each returns a short summary for stdout and
//! writes its files under the configured output directory.

use crate::config::{RunConfig, VERSION};
use crate::error::{certificate_error, CliError, CliResult};
use crate::formats::{self, Problem};
use borel_ns_core::certifier::{self, CmTable};
use borel_ns_core::forcing::Forcing;
use borel_ns_core::marcher::{run, BorelTrajectory};
use borel_ns_core::special_functions::FGEvaluator;
use borel_ns_core::spectral_field::{kida_initial, SpectralVectorField, WavevectorGrid};
use borel_ns_core::startup::taylor_coeffs;
use borel_ns_core::synthesis::{self, LaplaceEvaluator, StudyConfig};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const TRAJECTORY_FILE: &str = "trajectory.bnst";

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let p = dir.join(name);
    std::fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
    Ok(p)
}

fn load_field(path: &Path, nu: f64, modes: usize) -> CliResult<SpectralVectorField> {
    let f = formats::decode_field(&read(path)?, nu, &path.display().to_string())?;
    if f.grid().half_width() != modes {
        return Err(CliError::Config(format!("{} has N = {}, config says {modes}", path.display(), f.grid().half_width())));
    }
    Ok(f)
}

/// Initial field and forcing of the configured problem.
pub fn problem_data(cfg: &RunConfig) -> CliResult<(SpectralVectorField, Forcing)> {
    let grid = WavevectorGrid::new(cfg.modes, cfg.nu)?;
    let steady = |cfg: &RunConfig| -> CliResult<Forcing> {
        match &cfg.forcing_file {
            Some(p) => Ok(Forcing::steady(load_field(p, cfg.nu, cfg.modes)?)),
            None => Ok(Forcing::none(grid)),
        }
    };
    match cfg.problem {
        Problem::Kida => Ok((kida_initial(grid)?, steady(cfg)?)),
        Problem::Manufactured => {
            let case = synthesis::manufactured_case(grid, cfg.n)?;
            Ok((case.w.clone(), case.forcing))
        }
        Problem::File => {
            let path = cfg.v0_file.as_ref().ok_or_else(|| CliError::Config("problem = file needs v0_file".into()))?;
            let v0 = load_field(path, cfg.nu, cfg.modes)?;
            if !v0.flags.real || !v0.flags.solenoidal {
                return Err(CliError::Config("v0_file must hold a real, divergence-free field".into()));
            }
            Ok((v0, steady(cfg)?))
        }
    }
}

pub fn load_trajectory(path: &Path) -> CliResult<(Problem, BorelTrajectory)> {
    formats::decode_trajectory(&read(path)?, &path.display().to_string())
}

/// March the configured problem; writes the trajectory and `norms.csv`.
pub fn cmd_solve(cfg: &RunConfig) -> CliResult<String> {
    cfg.validate()?;
    let (v0, forcing) = problem_data(cfg)?;
    let traj = run(&cfg.march_config(), &v0, &forcing)?;
    let dir = &cfg.output_dir;
    write(dir, TRAJECTORY_FILE, &formats::encode_trajectory(cfg.problem, &traj))?;
    let rows: Vec<Vec<f64>> = traj.norm_log(cfg.alpha0).into_iter().map(|(q, u, w)| vec![q, u, w]).collect();
    let csv = formats::csv_with_preamble(&cfg.echo(), "q,l1_norm,weighted_norm", &rows);
    write(dir, "norms.csv", csv.as_bytes())?;
    write(dir, "run.cfg", cfg.echo().as_bytes())?;
    let last = rows.last().map(|r| r[1]).unwrap_or(0.0);
    Ok(format!("solved {} nodes up to q0 = {}; final l1 norm {last:.6e}\n", rows.len(), cfg.q0))
}

/// Injected-constants check of the existence-time arithmetic.
pub fn certify_self_test(b: f64, eps: f64, eps1: f64, n: u32, alpha0: f64) -> CliResult<String> {
    let (alpha, t) = certifier::solve_alpha(b, eps, eps1, n, alpha0).map_err(certificate_error)?;
    Ok(format!(
        "self-test: b = {b}, epsilon = {eps}, epsilon1 = {eps1}, n = {n}, alpha0 = {alpha0}\nalpha* = {alpha:.6}\nT = {t:.6}\n"
    ))
}

fn read_cm_table(path: &Path) -> CliResult<CmTable> {
    let text = String::from_utf8(read(path)?).map_err(|_| CliError::Config(format!("{} is not text", path.display())))?;
    let mut pts = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('m') {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| CliError::Config(format!("c_m table line {line:?} is not `m,c_m`")))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad number {s:?}")));
        pts.push((parse(a)?, parse(b)?));
    }
    CmTable::new(pts).map_err(|e| CliError::Config(e.to_string()))
}

/// Certificate for a stored trajectory plus the comparison times.
///
/// `calibrate_tcl` fits the classical-time table to the given target on this
/// `v₀`; otherwise `c_m_table` from the config is used when present.
pub fn cmd_certify(cfg: &RunConfig, trajectory: &Path, calibrate_tcl: Option<f64>) -> CliResult<String> {
    if !(cfg.alpha0 > 0.0) || !(cfg.c4 > 0.0) {
        return Err(CliError::Config("alpha0 and c4 must be positive".into()));
    }
    let (_, traj) = load_trajectory(trajectory)?;
    let cert = certifier::certify(&traj, cfg.alpha0).map_err(certificate_error)?;
    let mut report = cert.report();
    let v0 = traj.v0();
    let energy = certifier::initial_energy(v0);
    let (tc, _) = certifier::leray_tc(energy, traj.config().nu, cfg.c4, 0.0)?;
    let _ = writeln!(report, "comparison: E = {energy:.6e}, T_c = {tc:.6e} (c4 = {})", cfg.c4);
    let table = match (calibrate_tcl, &cfg.c_m_table) {
        (Some(target), _) => Some(CmTable::calibrated(&CmTable::lattice_shape(), v0, target)?),
        (None, Some(p)) => Some(read_cm_table(p)?),
        (None, None) => None,
    };
    match table {
        Some(t) => {
            let (tcl, m) = certifier::classical_time(v0, Some(&t))?;
            let _ = writeln!(report, "comparison: T_cl = {tcl:.6e} at m = {m:.2}");
        }
        None => {
            let _ = writeln!(report, "comparison: T_cl not computed (no c_m table)");
        }
    }
    let dir = &cfg.output_dir;
    write(dir, "certificate.txt", report.as_bytes())?;
    let kv = format!("# borel-ns {VERSION}\n{}", cert.to_key_value());
    write(dir, "certificate.kv", kv.as_bytes())?;
    Ok(report)
}

fn time_tag(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

/// Resummed fields at the requested times; an error CSV for the manufactured case.
pub fn cmd_synthesize(cfg: &RunConfig, trajectory: &Path, times: &[f64], csv: bool) -> CliResult<String> {
    if times.is_empty() {
        return Err(CliError::Config("synthesize needs at least one time".into()));
    }
    let (problem, traj) = load_trajectory(trajectory)?;
    let ev = LaplaceEvaluator::new(&traj)?;
    let exact = if problem == Problem::Manufactured {
        Some(synthesis::manufactured_case(*traj.grid(), traj.config().n)?)
    } else {
        None
    };
    let dir = &cfg.output_dir;
    let mut summary = String::new();
    let mut rows = Vec::new();
    for &t in times {
        let v = ev.eval(t)?;
        let tag = time_tag(t);
        write(dir, &format!("field_t{tag}.bnsf"), &formats::encode_field(&v))?;
        if csv {
            write(dir, &format!("field_t{tag}.csv"), formats::field_csv(&v).as_bytes())?;
        }
        let _ = write!(summary, "t = {t}: l1 norm {:.6e}", v.l1_norm());
        if let Some(case) = &exact {
            let err = synthesis::physical_field(&v.sub(&case.exact_field(t)))?.max_abs();
            rows.push(vec![t, err]);
            let _ = write!(summary, ", max error {err:.3e}");
        }
        summary.push('\n');
    }
    if exact.is_some() {
        let pre = format!("# borel-ns {VERSION}\ntrajectory = {}", trajectory.display());
        write(dir, "synthesis_error.csv", formats::csv_with_preamble(&pre, "t,max_error", &rows).as_bytes())?;
    }
    Ok(summary)
}

/// Refinement table of the manufactured case; no `beta` column for one step.
pub fn cmd_convergence(cfg: &RunConfig, deltas: &[f64]) -> CliResult<String> {
    if cfg.problem != Problem::Manufactured {
        return Err(CliError::Config("convergence studies need problem = manufactured".into()));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(CliError::Config("deltas must be a nonempty list of positive steps".into()));
    }
    for &d in deltas {
        RunConfig { delta: d, ..cfg.clone() }.validate()?;
    }
    let study = StudyConfig { modes: cfg.modes, nu: cfg.nu, n: cfg.n, q0: cfg.q0, qm: cfg.qm, m0: cfg.m0 };
    let rows = synthesis::convergence_study(&study, deltas)?;
    let with_beta = rows.len() > 1;
    let mut text = format!("{:>10} {:>14}{}\n", "delta", "e_delta", if with_beta { "   beta" } else { "" });
    let mut csv = String::new();
    for line in cfg.echo().lines() {
        let _ = writeln!(csv, "{}{line}", if line.starts_with('#') { "" } else { "# " });
    }
    csv += if with_beta { "delta,error,beta\n" } else { "delta,error\n" };
    for r in &rows {
        let _ = write!(text, "{:>10.6} {:>14.4e}", r.delta, r.error);
        let _ = write!(csv, "{:e},{:e}", r.delta, r.error);
        if with_beta {
            match r.beta {
                Some(b) => {
                    let _ = write!(text, " {b:>6.2}");
                    let _ = write!(csv, ",{b:e}");
                }
                None => csv.push(','),
            }
        }
        text.push('\n');
        csv.push('\n');
    }
    write(&cfg.output_dir, "convergence.csv", csv.as_bytes())?;
    Ok(text)
}

/// `(μ, F, G, regime)` on a uniform grid of `[0, mu_max]`.
pub fn cmd_kernel_table(n: u32, mu_max: f64, points: usize, out: &Path) -> CliResult<String> {
    if !(mu_max > 0.0) || points < 2 {
        return Err(CliError::Config("kernel-table needs mu_max > 0 and at least 2 points".into()));
    }
    let ev = FGEvaluator::new(n)?;
    let mut s = format!("# borel-ns {VERSION}\n# n = {n}\nmu,F,G,regime\n");
    for i in 0..points {
        let mu = mu_max * i as f64 / (points - 1) as f64;
        let _ = writeln!(s, "{mu:e},{:e},{:e},{}", ev.eval_f(mu)?, ev.eval_g(mu)?, ev.regime(mu).name());
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(out, &s).map_err(|e| CliError::io(out, e))?;
    Ok(format!("wrote {points} rows to {}\n", out.display()))
}

/// `(m, ‖ĉ_m‖, ‖d̂_m‖)` of the startup series.
pub fn cmd_startup_dump(cfg: &RunConfig) -> CliResult<String> {
    cfg.validate()?;
    let (v0, forcing) = problem_data(cfg)?;
    let ts = taylor_coeffs(&v0, &forcing, cfg.nu, cfg.m0, cfg.n)?;
    let rows: Vec<Vec<f64>> = ts
        .c()
        .iter()
        .zip(ts.d())
        .enumerate()
        .map(|(i, (c, d))| vec![(i + 1) as f64, c.l1_norm(), d.l1_norm()])
        .collect();
    let csv = formats::csv_with_preamble(&cfg.echo(), "m,c_norm,d_norm", &rows);
    write(&cfg.output_dir, "startup.csv", csv.as_bytes())?;
    let note = if ts.truncated() { " (series cut short by the overflow guard)" } else { "" };
    Ok(format!("{} Taylor coefficients, radius estimate {:.4e}{note}\n", rows.len(), ts.radius_estimate()))
}
