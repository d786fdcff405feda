//! Existence-time estimates from a trajectory computed on `[0, q₀]`, and the
//! classical comparison times.
//!
//! The growth-rate test: if `α^a > ε₁ + 2√(εb)` with `a = 1/2 + 1/(2n)`, then
//! `∫ e^{-αq}‖Û‖ dq < ∞` and the solution is classical on `(0, α^{-1/n})`. The
//! constants come from sampled suprema, so every certificate carries caveats.

use crate::borel_kernel::{b0_table, KernelCache, KernelEvaluator};
use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::marcher::{BorelTrajectory, Engine};
use crate::quad::gl01;
use crate::special_functions::{gamma, upper_incomplete_gamma, FGEvaluator};
use crate::spectral_field::{v1_field, SpectralVectorField};
use crate::startup::borel_startup_eval;
use crate::tensor::{axpy_phys, Phys};
use std::f64::consts::PI;
use std::fmt::Write as _;

pub const DEFAULT_ALPHA0: f64 = 30.0;
/// `b`'s tail integral runs to `TAIL_FACTOR·q₀` before the analytic closure.
pub const TAIL_FACTOR: f64 = 20.0;
/// `c_s` is sampled on `[q₀, CS_FACTOR·q₀]`.
pub const CS_FACTOR: f64 = 50.0;
pub const ALPHA_MARGIN: f64 = 1e-9;
pub const NOT_A_PROOF: &str = "numerical evidence, not a proof";

const KSQ_SAMPLES: usize = 48;
const GAP_SAMPLES: usize = 64;
const CS_SAMPLES: usize = 24;
const TAIL_RULE: usize = 6;
const TAIL_LEVELS: usize = 5;
const TAIL_RTOL: f64 = 1e-6;

/// `1/2 + 1/(2n)`
pub fn growth_exponent(n: u32) -> f64 {
    0.5 + 0.5 / n as f64
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    Ok(())
}

/// `α* = max(α₀, (ε₁ + 2√(εb))^{2n/(n+1)})` enlarged by [`ALPHA_MARGIN`], and `T = α*^{-1/n}`.
pub fn solve_alpha(b: f64, epsilon: f64, epsilon1: f64, n: u32, alpha0: f64) -> Result<(f64, f64)> {
    check_n(n)?;
    for (name, v) in [("b", b), ("epsilon", epsilon), ("epsilon1", epsilon1), ("alpha0", alpha0)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    let rhs = epsilon1 + 2.0 * (epsilon * b).sqrt();
    let alpha = alpha_for(rhs, n).max(alpha0) * (1.0 + ALPHA_MARGIN);
    Ok((alpha, alpha.powf(-1.0 / n as f64)))
}

/// Smallest `α` with `α^a ≥ rhs`.
fn alpha_for(rhs: f64, n: u32) -> f64 {
    rhs.powf(1.0 / growth_exponent(n))
}

/// The variant of the test in which `b` and `ε` are replaced by their bounds
/// through `c_s` and `c_g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedBound {
    /// `ε₁ + 2[2Γ(a)Γ(a, α₀q₀)c_g c_s]^{1/2} q₀^{-1/4}`
    pub rhs: f64,
    /// bound on `b`: `c_s Γ(a, α₀q₀)`
    pub b_bound: f64,
    /// bound on `ε`: `2Γ(a) c_g q₀^{-1/2}`
    pub epsilon_bound: f64,
    /// smallest admissible `α > α₀`
    pub alpha: f64,
}

pub fn refined_condition(c_g: f64, c_s: f64, alpha0: f64, q0: f64, epsilon1: f64, n: u32) -> Result<RefinedBound> {
    check_n(n)?;
    if !(q0 > 0.0) || !(alpha0 >= 0.0) || !(c_g >= 0.0) || !(c_s >= 0.0) || !(epsilon1 >= 0.0) {
        return Err(Error::Domain("refined condition needs q0 > 0 and non-negative constants".into()));
    }
    let a = growth_exponent(n);
    let gi = upper_incomplete_gamma(a, alpha0 * q0);
    let rhs = epsilon1 + 2.0 * (2.0 * gamma(a) * gi * c_g * c_s).sqrt() * q0.powf(-0.25);
    Ok(RefinedBound {
        rhs,
        b_bound: c_s * gi,
        epsilon_bound: 2.0 * gamma(a) * c_g / q0.sqrt(),
        alpha: alpha_for(rhs, n).max(alpha0) * (1.0 + ALPHA_MARGIN),
    })
}

/// Sampled kernel suprema over `q₀ ≤ q' ≤ q`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSups {
    /// `sup_k |k| B₀(k)`
    pub sup_k_b0: f64,
    /// `sup |k| q^{1/2} (q - q')^{1/2-1/(2n)} |𝒢|`
    pub c_g: f64,
    pub ksq_at_sup: u32,
    /// true when only a subset of the `|k|²` values was sampled
    pub thinned: bool,
}

/// Distinct nonzero `|k|²` on the grid of `v`, thinned to at most `max` values
/// spread geometrically (the smallest and largest always kept).
fn sample_ksq(v: &SpectralVectorField, max: usize) -> (Vec<u32>, bool) {
    let g = v.grid();
    let mut all: Vec<u32> = (0..g.len()).map(|i| g.ksq(i)).filter(|&s| s > 0).collect();
    all.sort_unstable();
    all.dedup();
    if all.len() <= max {
        return (all, false);
    }
    let (lo, hi) = (all[0] as f64, *all.last().unwrap() as f64);
    let mut pick: Vec<u32> = (0..max)
        .map(|i| {
            let t = lo * (hi / lo).powf(i as f64 / (max - 1) as f64);
            let j = all.partition_point(|&s| (s as f64) < t).min(all.len() - 1);
            all[j]
        })
        .collect();
    pick.dedup();
    (pick, true)
}

/// `B₀` and `c_g` from a kernel cache on `q = q₀ + d`, `d` geometric in `[10⁻⁴q₀, q_hi - q₀]`.
pub fn kernel_sups(ev: &KernelEvaluator, ksq: &[u32], q0: f64, q_hi: f64) -> Result<KernelSups> {
    if !(q0 > 0.0) || !(q_hi > q0) {
        return Err(Error::Domain(format!("kernel sups need 0 < q0 < q_hi, got {q0}, {q_hi}")));
    }
    let (d_lo, d_hi) = (1e-4 * q0, q_hi - q0);
    let mut qgrid = vec![q0];
    qgrid.extend((0..GAP_SAMPLES).map(|i| q0 + d_lo * (d_hi / d_lo).powf(i as f64 / (GAP_SAMPLES - 1) as f64)));
    let cache = KernelCache::build(ev, &qgrid, ksq)?;
    let table = b0_table(&cache, q0)?;
    let (mut sup, mut at) = (0.0f64, 0u32);
    for &(s, b0) in &table {
        let v = (s as f64).sqrt() * b0;
        if v > sup {
            sup = v;
            at = s;
        }
    }
    let e = 0.5 - 0.5 / ev.n() as f64;
    let mut c_g = 0.0f64;
    for m in 1..qgrid.len() {
        for mp in 0..m {
            for &s in cache.ksq_values() {
                let g = cache.get(m, mp, s).unwrap_or(0.0);
                let v = (s as f64).sqrt() * qgrid[m].sqrt() * (qgrid[m] - qgrid[mp]).powf(e) * g.abs();
                c_g = c_g.max(v);
            }
        }
    }
    Ok(KernelSups { sup_k_b0: sup, c_g, ksq_at_sup: at, thinned: false })
}

/// `Û^(s)` for `q > q₀`: the inhomogeneous term plus the kernel integral of the
/// source built from `Û` restricted to `(0, q₀]` (support `[0, 2q₀]`).
pub struct TailEvaluator<'a> {
    traj: &'a BorelTrajectory,
    eng: Engine,
    big_m: usize,
    /// `R^(a)` at nodes `m_s..=2M`; the value at `M` is the left limit
    ra: Vec<SpectralVectorField>,
    /// `R^(a)(q₀+) - R^(a)(q₀-)`: the `v₀` coupling switches off at `q₀`
    jump: SpectralVectorField,
}

impl<'a> TailEvaluator<'a> {
    pub fn new(traj: &'a BorelTrajectory) -> Result<Self> {
        let cfg = traj.config();
        let eng = Engine::new(cfg, traj.v0(), traj.forcing())?;
        let ms = cfg.start_index();
        let big_m = cfg.end_index();
        if traj.slices().len() != big_m + 1 - ms {
            return Err(Error::Domain("trajectory does not cover [q_m, q0]".into()));
        }
        let phys: Vec<Phys> = traj.slices().iter().map(|s| eng.tr.field_to_physical(s)).collect();
        let get_p = |p: usize| if p >= ms && p <= big_m { phys.get(p - ms) } else { None };
        let zero = SpectralVectorField::zeros(eng.grid);
        let mut ra = Vec::with_capacity(2 * big_m + 1 - ms);
        let mut jump = zero.clone();
        for m in ms..=2 * big_m {
            let (t, lin) = eng.convolution(m, &get_p, Some(big_m));
            let u = traj.slice(m).unwrap_or(&zero);
            ra.push(eng.rhs(u, &t, &lin).0);
            if m == big_m {
                let mut lin_right = lin.clone();
                axpy_phys(&mut lin_right, -1.0, eng.v0_physical());
                jump = eng.rhs(u, &t, &lin_right).0.sub(&ra[m - ms]);
            }
        }
        Ok(TailEvaluator { traj, eng, big_m, ra, jump })
    }

    pub fn q0(&self) -> f64 {
        self.traj.config().q0
    }

    /// `(Û^(s)(q), ‖Û^(s)(q)‖_{l¹})`
    pub fn eval(&self, q: f64) -> Result<(SpectralVectorField, f64)> {
        let q0 = self.q0();
        if !(q > q0) || !q.is_finite() {
            return Err(Error::Domain(format!("the tail needs q > q0 = {q0}, got {q}")));
        }
        let delta = self.traj.config().delta;
        let ms = self.eng.ms;
        let top = ((q / delta) * (1.0 - 1e-12)).ceil() as usize;
        let r_top = 2 * self.big_m;
        let get_r = |p: usize| if p >= ms && p <= r_top { self.ra.get(p - ms) } else { None };
        let (u, _) = self.eng.row_integral(q, top, r_top, Some((self.big_m, &self.jump)), &get_r)?;
        let norm = u.l1_norm();
        Ok((u, norm))
    }
}

/// `u^(s)(q) = ‖Û^(s)(·, q)‖_{l¹}` for a single `q > q₀`.
pub fn u_s_tail(traj: &BorelTrajectory, q: f64) -> Result<(SpectralVectorField, f64)> {
    TailEvaluator::new(traj)?.eval(q)
}

/// `∫₀^{q₀} e^{-αq}‖Û(·, q)‖_{l¹} dq`: Gauss-Legendre in `y = q_m xⁿ` on the startup
/// zone, trapezoid on the nodes.
pub fn weighted_history(traj: &BorelTrajectory, alpha: f64) -> Result<f64> {
    let cfg = traj.config();
    let ts = traj.startup();
    let nf = cfg.n as f64;
    let mut s = 0.0;
    for (x, w) in gl01(32) {
        let y = cfg.qm * x.powi(cfg.n as i32);
        let jac = cfg.qm * nf * x.powi(cfg.n as i32 - 1) * w;
        s += jac * (-alpha * y).exp() * borel_startup_eval(ts, y)?.l1_norm();
    }
    let log = traj.norm_log(0.0);
    for pair in log.windows(2) {
        let ((q1, a, _), (q2, b, _)) = (pair[0], pair[1]);
        s += 0.5 * (q2 - q1) * ((-alpha * q1).exp() * a + (-alpha * q2).exp() * b);
    }
    Ok(s)
}

/// The functionals of the growth-rate test for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateConstants {
    pub q0: f64,
    pub alpha0: f64,
    pub n: u32,
    pub b: f64,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub c_g: f64,
    pub c_s: f64,
    pub sup_k_b0: f64,
    pub caveats: Vec<String>,
}

/// `ε₁` with the history weighted by `e^{-rate·q}`; `rate = α₀` is the default
/// form, `rate = α` the alternative.
pub fn epsilon1(traj: &BorelTrajectory, sup_k_b0: f64, rate: f64) -> Result<f64> {
    let a = growth_exponent(traj.config().n);
    let b1 = 4.0 * sup_k_b0 * traj.v0().l1_norm();
    let b2 = 4.0 * sup_k_b0 * weighted_history(traj, rate)?;
    Ok(gamma(a) * (b1 + b2))
}

pub fn certificate_constants(traj: &BorelTrajectory, alpha0: f64) -> Result<CertificateConstants> {
    let cfg = traj.config();
    if !(alpha0 > 0.0) {
        return Err(Error::Domain(format!("alpha0 must be positive, got {alpha0}")));
    }
    let (n, q0) = (cfg.n, cfg.q0);
    let a = growth_exponent(n);
    let tail = TailEvaluator::new(traj)?;
    let (ksq, thinned) = sample_ksq(traj.v0(), KSQ_SAMPLES);
    let mut sups = kernel_sups(&tail.eng.ev, &ksq, q0, CS_FACTOR * q0)?;
    sups.thinned = thinned;
    let epsilon = gamma(a) * 2.0 * sups.sup_k_b0;
    let eps1 = epsilon1(traj, sups.sup_k_b0, alpha0)?;

    // c_s on a geometric grid above q0
    let us_weight = |q: f64, u: f64| q.powf(1.0 - a) * u;
    let mut c_s = 0.0f64;
    let first = q0 + 1e-3 * cfg.delta;
    for i in 0..CS_SAMPLES {
        let q = if i == 0 { first } else { q0 * CS_FACTOR.powf(i as f64 / (CS_SAMPLES - 1) as f64) };
        c_s = c_s.max(us_weight(q, tail.eval(q)?.1));
    }

    // b = α₀^a ∫ e^{-α₀q} u_s: composite Gauss-Legendre, panels doubled to convergence
    let q_cut = (TAIL_FACTOR * q0).min(q0 + 50.0 / alpha0);
    let mut cuts = vec![q0, q_cut];
    if 2.0 * q0 < q_cut {
        cuts.insert(1, 2.0 * q0);
    }
    let rule = gl01(TAIL_RULE);
    let mut prev: Option<f64> = None;
    let mut integral = None;
    for level in 0..TAIL_LEVELS {
        let panels = 2usize << level;
        let mut s = 0.0;
        for seg in cuts.windows(2) {
            let h = (seg[1] - seg[0]) / panels as f64;
            for p in 0..panels {
                for &(x, w) in &rule {
                    let q = seg[0] + h * (p as f64 + x);
                    let u = tail.eval(q)?.1;
                    c_s = c_s.max(us_weight(q, u));
                    s += h * w * (-alpha0 * q).exp() * u;
                }
            }
        }
        if let Some(p) = prev {
            let scale = s.abs().max((-alpha0 * q0).exp() * 1e-300);
            if (s - p).abs() <= TAIL_RTOL * scale {
                integral = Some(s);
                break;
            }
        }
        prev = Some(s);
    }
    let integral = integral.ok_or_else(|| {
        Error::Refused(format!("tail integral for b did not converge in {TAIL_LEVELS} panel doublings"))
    })?;
    // u_s ≤ c_s q^{a-1} beyond the cut
    let closure = c_s * q_cut.powf(a - 1.0) * (-alpha0 * q_cut).exp() / alpha0;
    let b = alpha0.powf(a) * (integral + closure);

    let mut caveats = vec![
        "B0 and c_g are maxima over sampled (q, q') pairs, lower bounds of the true suprema".to_string(),
        "sup over k restricted to the Galerkin cube".to_string(),
        format!("c_s sampled on [q0, {CS_FACTOR} q0]; the tail of b beyond {q_cut} is closed with it"),
        "b evaluated at alpha = alpha0; it does not increase for larger alpha".to_string(),
    ];
    if sups.thinned {
        caveats.push(format!("|k|^2 values thinned to {} samples", ksq.len()));
    }
    Ok(CertificateConstants { q0, alpha0, n, b, epsilon, epsilon1: eps1, c_g: sups.c_g, c_s, sup_k_b0: sups.sup_k_b0, caveats })
}

/// An existence-time estimate and the numbers it rests on.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub q0: f64,
    pub alpha0: f64,
    pub n: u32,
    pub b: f64,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub c_g: f64,
    pub c_s: f64,
    pub alpha_star: f64,
    pub t_exist: f64,
    /// `α` from the `c_g`, `c_s` form of the test, for comparison
    pub alpha_refined: f64,
    pub caveats: Vec<String>,
}

const KEYS: [&str; 11] =
    ["q0", "alpha0", "n", "b", "epsilon", "epsilon1", "c_g", "c_s", "alpha_star", "T", "alpha_refined"];

impl Certificate {
    pub fn from_constants(th: &CertificateConstants) -> Result<Self> {
        let (alpha_star, t_exist) = solve_alpha(th.b, th.epsilon, th.epsilon1, th.n, th.alpha0)?;
        let refined = refined_condition(th.c_g, th.c_s, th.alpha0, th.q0, th.epsilon1, th.n)?;
        Ok(Certificate {
            q0: th.q0,
            alpha0: th.alpha0,
            n: th.n,
            b: th.b,
            epsilon: th.epsilon,
            epsilon1: th.epsilon1,
            c_g: th.c_g,
            c_s: th.c_s,
            alpha_star,
            t_exist,
            alpha_refined: refined.alpha,
            caveats: th.caveats.clone(),
        })
    }

    /// The defining inequality and `T = α*^{-1/n}`.
    pub fn verify(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let lhs = self.alpha_star.powf(growth_exponent(self.n));
        let rhs = self.epsilon1 + 2.0 * (self.epsilon * self.b).sqrt();
        lhs > rhs && self.alpha_star >= self.alpha0 && self.t_exist == self.alpha_star.powf(-1.0 / self.n as f64)
    }

    pub fn to_key_value(&self) -> String {
        let vals = [
            self.q0,
            self.alpha0,
            self.n as f64,
            self.b,
            self.epsilon,
            self.epsilon1,
            self.c_g,
            self.c_s,
            self.alpha_star,
            self.t_exist,
            self.alpha_refined,
        ];
        let mut s = String::new();
        for (k, v) in KEYS.iter().zip(vals) {
            if *k == "n" {
                let _ = writeln!(s, "n = {}", self.n);
            } else {
                // Debug formatting round-trips exactly
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        for c in &self.caveats {
            let _ = writeln!(s, "caveat = {c}");
        }
        s
    }

    /// Parse and re-verify; a certificate that fails its own inequality is refused.
    pub fn from_key_value(text: &str) -> Result<Self> {
        let mut vals = [f64::NAN; 11];
        let mut n = None;
        let mut caveats = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("not a key = value line: {line}")))?;
            if k == "caveat" {
                caveats.push(v.to_string());
                continue;
            }
            let i = KEYS.iter().position(|x| *x == k).ok_or_else(|| Error::Config(format!("unknown key {k}")))?;
            if k == "n" {
                n = Some(v.parse::<u32>().map_err(|e| Error::Config(format!("n: {e}")))?);
            } else {
                vals[i] = v.parse::<f64>().map_err(|e| Error::Config(format!("{k}: {e}")))?;
            }
        }
        let n = n.ok_or_else(|| Error::Config("missing key n".into()))?;
        if let Some(i) = (0..vals.len()).find(|&i| i != 2 && vals[i].is_nan()) {
            return Err(Error::Config(format!("missing key {}", KEYS[i])));
        }
        let c = Certificate {
            q0: vals[0],
            alpha0: vals[1],
            n,
            b: vals[3],
            epsilon: vals[4],
            epsilon1: vals[5],
            c_g: vals[6],
            c_s: vals[7],
            alpha_star: vals[8],
            t_exist: vals[9],
            alpha_refined: vals[10],
            caveats,
        };
        if !c.verify() {
            return Err(Error::Refused("certificate does not satisfy its defining inequality".into()));
        }
        Ok(c)
    }

    pub fn report(&self) -> String {
        let a = growth_exponent(self.n);
        let mut s = String::new();
        let _ = writeln!(s, "existence-time certificate (n = {}, q0 = {}, alpha0 = {})", self.n, self.q0, self.alpha0);
        let _ = writeln!(s, "  b        = {:.6e}", self.b);
        let _ = writeln!(s, "  epsilon  = {:.6}", self.epsilon);
        let _ = writeln!(s, "  epsilon1 = {:.6}", self.epsilon1);
        let _ = writeln!(s, "  c_g = {:.6}, c_s = {:.6e}", self.c_g, self.c_s);
        let _ = writeln!(
            s,
            "  alpha* = {:.6} (alpha*^{a:.4} = {:.6} > {:.6})",
            self.alpha_star,
            self.alpha_star.powf(a),
            self.epsilon1 + 2.0 * (self.epsilon * self.b).sqrt()
        );
        let _ = writeln!(s, "  classical on (0, {:.6})", self.t_exist);
        let _ = writeln!(s, "  refined-condition alpha = {:.6}", self.alpha_refined);
        if !self.caveats.is_empty() {
            let _ = writeln!(s, "  {NOT_A_PROOF}:");
            for c in &self.caveats {
                let _ = writeln!(s, "    - {c}");
            }
        }
        s
    }
}

pub fn certify(traj: &BorelTrajectory, alpha0: f64) -> Result<Certificate> {
    Certificate::from_constants(&certificate_constants(traj, alpha0)?)
}

/// `c_m` as a function of the Sobolev order `m`, linear between table points.
#[derive(Debug, Clone, PartialEq)]
pub struct CmTable {
    points: Vec<(f64, f64)>,
}

impl CmTable {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.len() < 2 || points.iter().any(|p| !(p.1 > 0.0) || !p.0.is_finite()) {
            return Err(Error::Config("c_m table needs at least two points with c_m > 0".into()));
        }
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("c_m table has repeated m".into()));
        }
        Ok(CmTable { points })
    }

    /// Shape `c_m ∝ Σ_{k≠0} |k|^{2-2m}`: the squared constant of
    /// `Σ|k||v̂| ≤ (Σ|k|^{2-2m})^{1/2} ‖D^m v‖`. Unit scale.
    pub fn lattice_shape() -> Self {
        let points = (0..=69).map(|i| 2.55 + 0.05 * i as f64).map(|m| (m, lattice_sum(m))).collect();
        CmTable { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn scaled(&self, s: f64) -> Self {
        CmTable { points: self.points.iter().map(|&(m, c)| (m, c * s)).collect() }
    }

    pub fn eval(&self, m: f64) -> Option<f64> {
        let p = &self.points;
        if m < p[0].0 || m > p[p.len() - 1].0 {
            return None;
        }
        let i = p.partition_point(|x| x.0 <= m).clamp(1, p.len() - 1);
        let (a, b) = (p[i - 1], p[i]);
        Some(a.1 + (b.1 - a.1) * (m - a.0) / (b.0 - a.0))
    }

    /// The shape scaled so that the maximal `T_cl` on `v0` equals `target`.
    pub fn calibrated(shape: &CmTable, v0: &SpectralVectorField, target: f64) -> Result<Self> {
        let (t, _) = classical_time(v0, Some(shape))?;
        Ok(shape.scaled(t / target))
    }
}

/// `Σ_{k∈ℤ³∖0} |k|^{2-2m}`, `m > 5/2`: direct sum over `|k| ≤ 24` plus the
/// integral tail `4π K^{5-2m}/(2m-5)`.
pub fn lattice_sum(m: f64) -> f64 {
    const K: i32 = 24;
    let mut s = 0.0;
    for a in -K..=K {
        for b in -K..=K {
            for c in -K..=K {
                let r2 = a * a + b * b + c * c;
                if r2 > 0 && r2 <= K * K {
                    s += (r2 as f64).powf(1.0 - m);
                }
            }
        }
    }
    let k = K as f64 + 0.5;
    s + 4.0 * PI * k.powf(5.0 - 2.0 * m) / (2.0 * m - 5.0)
}

/// `‖D^m v‖ = (Σ |k|^{2m} |v̂(k)|²)^{1/2}`
pub fn sobolev_seminorm(v: &SpectralVectorField, m: f64) -> f64 {
    let g = v.grid();
    v.coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = g.ksq(i) as f64;
            if s == 0.0 {
                0.0
            } else {
                s.powf(m) * c.iter().map(|x| x.norm_sqr()).sum::<f64>()
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// `max_m 1/(c_m ‖D^m v₀‖)` over `m ∈ (5/2, 6]` on a 0.01 grid; returns `(T_cl, m)`.
pub fn classical_time(v0: &SpectralVectorField, table: Option<&CmTable>) -> Result<(f64, f64)> {
    let table = table.ok_or_else(|| Error::Unsupported("classical_time needs a c_m table".into()))?;
    let mut best: Option<(f64, f64)> = None;
    for i in 1..=350 {
        let m = 2.5 + 0.01 * i as f64;
        let Some(c) = table.eval(m) else { continue };
        let d = sobolev_seminorm(v0, m);
        if d == 0.0 {
            return Err(Error::Domain("classical_time needs a nonzero field".into()));
        }
        let t = 1.0 / (c * d);
        if best.is_none_or(|b| t > b.0) {
            best = Some((t, m));
        }
    }
    best.ok_or_else(|| Error::Config("c_m table does not overlap (2.5, 6]".into()))
}

/// `E = ½‖v₀‖²_{L²}` on `[0, 2π]³`.
pub fn initial_energy(v0: &SpectralVectorField) -> f64 {
    0.5 * (2.0 * PI).powi(3) * v0.l2_norm_sq()
}

/// Times after which a weak solution is classical, on the real axis and in the
/// sector of half-angle `δ̃`.
pub fn leray_tc(energy: f64, nu: f64, c4: f64, delta_tilde: f64) -> Result<(f64, f64)> {
    if !(nu > 0.0) || !(energy >= 0.0) || !(c4 > 0.0) {
        return Err(Error::Domain("leray_tc needs nu > 0, E >= 0, c4 > 0".into()));
    }
    let nc = nu * delta_tilde.cos();
    if !(nc > 0.0) {
        return Err(Error::Domain(format!("sector angle {delta_tilde} leaves no positive viscosity")));
    }
    let pre = 256.0 * energy * c4.powi(3) / 3f64.sqrt();
    let tc = pre * (nu.sqrt() + 2f64.sqrt()).powi(2) * (2.0 + nu.sqrt()).powi(2) / nu.powf(4.5);
    let tca = pre * (nc.sqrt() + 2f64.sqrt()).powi(2) * (2.0 + nc.sqrt()).powi(2) / (nu * nc.powf(3.5));
    Ok((tc, tca))
}

/// Least-squares line through `(q^{1/(n+1)}, log ‖Û‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn decay_fit_samples(samples: &[(f64, f64)], n: u32, window: (f64, f64)) -> Result<DecayFit> {
    check_n(n)?;
    let p = 1.0 / (n as f64 + 1.0);
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.0 >= window.0 && s.0 <= window.1)
        .map(|&(q, u)| {
            if u > 0.0 {
                Ok((q.powf(p), u.ln()))
            } else {
                Err(Error::Refused(format!("norm {u} at q = {q} cannot be fitted in log scale")))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 3 {
        return Err(Error::Refused(format!("{} samples in the window, need 3", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Refused(format!("norms do not decay on the window (slope {slope})")));
    }
    Ok(DecayFit { slope, intercept: my - slope * mx, points: pts.len() })
}

pub fn decay_fit(traj: &BorelTrajectory, window: (f64, f64)) -> Result<DecayFit> {
    let samples: Vec<(f64, f64)> = traj.norm_log(0.0).into_iter().map(|(q, u, _)| (q, u)).collect();
    decay_fit_samples(&samples, traj.config().n, window)
}

/// `sup ν^{1/2}|k| q^{1/2} (q-q')^{1/2-1/(2n)} |𝒢(q, q'; k)|` over a sample grid.
pub fn sample_c2(ev: &KernelEvaluator, ksq: &[u32], q_hi: f64) -> Result<f64> {
    if !(q_hi > 0.0) {
        return Err(Error::Domain("sample_c2 needs q_hi > 0".into()));
    }
    let e = 0.5 - 0.5 / ev.n() as f64;
    let mut best = 0.0f64;
    for iq in 0..16 {
        let q = q_hi * 1e-3f64.powf(iq as f64 / 15.0);
        for ig in 0..24 {
            // γ = q'/q from 10⁻³ to 1 - 10⁻⁴
            let gap = 1e-4f64.powf(ig as f64 / 23.0) * 0.999;
            let qp = q * (1.0 - gap);
            for &s in ksq {
                let g = ev.kernel_g(q, qp, s as f64)?;
                best = best.max((ev.nu() * s as f64).sqrt() * q.sqrt() * (q - qp).powf(e) * g.abs());
            }
        }
    }
    Ok(best)
}

/// `c₁ = sup_μ |G(μ)|/μ` (the scalar of `‖Û⁽⁰⁾‖ ≤ c₁‖v̂₁‖ q^{1/n-1}`), sampled.
pub fn sample_c1(ev: &KernelEvaluator) -> Result<f64> {
    let n = ev.n() as i32;
    let mut best = 0.0f64;
    for i in 0..400 {
        let mu = 1e-4 * 1e7f64.powf(i as f64 / 399.0);
        let q = mu.powi(n);
        best = best.max(ev.u0_factor(q, 1.0)?.abs() * q.powf(1.0 - 1.0 / n as f64));
    }
    Ok(best)
}

/// `C_G = n ∫₀^∞ |G(s)|/s ds` on the real axis (`n ≥ 2`).
pub fn sample_cg_integral(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Unsupported("C_G is defined for n >= 2".into()));
    }
    let fg = FGEvaluator::new(n)?;
    let f = |s: f64| match fg.eval_g(s) {
        Ok(g) => g.abs() / s,
        Err(_) => 0.0,
    };
    let mut total = 0.0;
    let cuts = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5];
    for w in cuts.windows(2) {
        total += quadrature::double_exponential::integrate(f, w[0], w[1], 1e-10).integral;
    }
    Ok(n as f64 * total)
}

/// Smallest `α` (bisection, relative 10⁻⁹) with
/// `C₂ν^{-1/2}Γ(1/(2n))α^{-1/(2n)}{4‖v̂₀‖ + 4c₁Γ(1/n)α^{-1/n}‖v̂₁‖} < 1`.
///
/// HEURISTIC: the constants are sampled suprema, i.e. lower bounds.
pub fn rough_alpha(v0: &SpectralVectorField, f: &Forcing, nu: f64, n: u32, c2: f64, c1: f64) -> Result<f64> {
    check_n(n)?;
    if !(nu > 0.0) || !(c2 > 0.0) || !(c1 >= 0.0) {
        return Err(Error::Domain("rough_alpha needs nu > 0, C2 > 0, c1 >= 0".into()));
    }
    let v1 = v1_field(v0, f.steady_part())?;
    let (a0, a1) = (v0.l1_norm(), v1.l1_norm());
    let nf = n as f64;
    let lhs = |alpha: f64| {
        c2 / nu.sqrt()
            * gamma(0.5 / nf)
            * alpha.powf(-0.5 / nf)
            * (4.0 * a0 + 4.0 * c1 * gamma(1.0 / nf) * alpha.powf(-1.0 / nf) * a1)
    };
    if a0 == 0.0 && a1 == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (1e-300f64, 1.0f64);
    while lhs(hi) >= 1.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NonConvergence("rough_alpha: no finite alpha satisfies the inequality".into()));
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) < 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
