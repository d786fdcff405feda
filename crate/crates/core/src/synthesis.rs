//! Resummation of the Borel trajectory and the manufactured test problem.

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::marcher::{run, BorelTrajectory, MarchConfig};
use crate::special_functions::lower_incomplete_gamma;
use crate::spectral_field::{kida_initial, nonlinear_rhs, SpectralTransform, SpectralVectorField, WavevectorGrid};
use std::f64::consts::PI;

/// `v = w/(1+t)` with `w` the Kida field, and the forcing that makes it exact.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub w: SpectralVectorField,
    pub forcing: Forcing,
    pub n: u32,
}

/// `f = A/(1+t) + B/(1+t)²` with `A = ν|k|²ŵ` and `B = -ŵ - ik_jP[ŵ_j *̂ ŵ]`
/// (the sign convention of `nonlinear_rhs` puts the advection term on the right).
pub fn manufactured_case(grid: WavevectorGrid, n: u32) -> Result<ManufacturedCase> {
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let w = kida_initial(grid)?;
    let nu = grid.nu();
    let mut a = w.clone();
    for (i, c) in a.coeffs_mut().iter_mut().enumerate() {
        let lam = nu * grid.ksq(i) as f64;
        for x in c.iter_mut() {
            *x *= lam;
        }
    }
    // B = -ŵ + advection, and advection = -nonlinear_rhs
    let mut b = nonlinear_rhs(&w, &w)?.scaled(-1.0);
    b.axpy(-1.0, &w);
    let steady = a.add(&b);
    let forcing = Forcing::rational(steady, vec![(1, a), (2, b)])?;
    Ok(ManufacturedCase { w, forcing, n })
}

impl ManufacturedCase {
    pub fn v0(&self) -> &SpectralVectorField {
        &self.w
    }

    /// `v̂(t) = ŵ/(1+t)`.
    pub fn exact_field(&self, t: f64) -> SpectralVectorField {
        self.w.scaled(1.0 / (1.0 + t))
    }

    /// `Û(q) = ŵ ψ(q)` from the real-axis inversion of `1/(1+τ^{-1/n}) - 1`.
    pub fn exact_borel(&self, q: f64) -> Result<SpectralVectorField> {
        Ok(self.w.scaled(reference_profile(self.n, q)?))
    }
}

/// `L⁻¹[1/(1 + τ^{-1/n}) - 1](q)`
///
/// `= -(n sin(π/n)/π) ∫₀^∞ e^{-qρⁿ} ρⁿ/(ρ² + 2ρ cos(π/n) + 1) dρ`
/// by adaptive tanh-sinh quadrature.
pub fn reference_profile(n: u32, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("reference profile needs q > 0, got {q}")));
    }
    if n == 1 {
        return Ok(-(-q).exp());
    }
    use quadrature::double_exponential::integrate;
    let nf = n as f64;
    let c = (PI / nf).cos();
    let top = (45.0 / q).powf(1.0 / nf);
    let f = |r: f64| (-q * r.powf(nf)).exp() * r.powf(nf) / (r * r + 2.0 * r * c + 1.0);
    // split at ρ = 1 where the rational factor bends
    let split = top.min(1.0);
    let mut s = integrate(f, 0.0, split, 1e-13).integral;
    if top > 1.0 {
        s += integrate(f, 1.0, top, 1e-13).integral;
    }
    Ok(-nf * (PI / nf).sin() / PI * s)
}

/// Log-linear model `‖Û(q)‖ ≈ c₁e^{c₂q}` of the last part of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub c1: f64,
    pub c2: f64,
}

/// Fraction of the nodes (from the end) used for the tail fit.
pub const TAIL_FIT_FRACTION: f64 = 0.2;

impl TailModel {
    pub fn fit(traj: &BorelTrajectory) -> Result<Self> {
        let log = traj.norm_log(0.0);
        let k = ((log.len() as f64 * TAIL_FIT_FRACTION).ceil() as usize).max(3).min(log.len());
        if k < 2 {
            return Err(Error::Domain("tail fit needs at least two nodes".into()));
        }
        let pts: Vec<(f64, f64)> =
            log[log.len() - k..].iter().map(|&(q, u, _)| (q, u.max(f64::MIN_POSITIVE).ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let c2 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        Ok(TailModel { c1: (my - c2 * mx).exp(), c2 })
    }

    /// Growth rate a Laplace variable `tⁿ`-inverse must exceed.
    pub fn growth_rate(&self) -> f64 {
        self.c2.max(0.0)
    }
}

/// `v̂(t) = v̂₀ + ∫₀^∞ Û(q) e^{-q/tⁿ} dq` from a trajectory.
pub struct LaplaceEvaluator<'a> {
    traj: &'a BorelTrajectory,
    tail: TailModel,
    n: u32,
}

impl<'a> LaplaceEvaluator<'a> {
    pub fn new(traj: &'a BorelTrajectory) -> Result<Self> {
        Ok(LaplaceEvaluator { traj, tail: TailModel::fit(traj)?, n: traj.config().n })
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    /// Largest admissible `t`: `t^{-n}` must exceed the tail growth rate.
    pub fn max_time(&self) -> f64 {
        let g = self.tail.growth_rate();
        if g == 0.0 {
            f64::INFINITY
        } else {
            g.powf(-1.0 / self.n as f64)
        }
    }

    /// Startup zone by exact moments `∫₀^{q_m} q^{a-1}e^{-pq} dq = p^{-a}γ(a, pq_m)`,
    /// node zone by exact integrals of the piecewise-linear interpolant against
    /// `e^{-pq}`, and the tail as `Û(q₀)e^{c₂(q-q₀)}`.
    pub fn eval(&self, t: f64) -> Result<SpectralVectorField> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("laplace_eval needs t > 0, got {t}")));
        }
        let p = t.powi(-(self.n as i32));
        if !(p > self.tail.growth_rate()) {
            return Err(Error::Refused(format!(
                "t = {t} is beyond the admissible range t < {:.6} set by the tail growth rate {:.6}",
                self.max_time(),
                self.tail.growth_rate()
            )));
        }
        let cfg = self.traj.config();
        let ts = self.traj.startup();
        let nf = self.n as f64;
        let mut v = self.traj.v0().clone();
        for (i, d) in ts.d().iter().enumerate() {
            let a = (i + 1) as f64 / nf;
            v.axpy(p.powf(-a) * lower_incomplete_gamma(a, p * cfg.qm), d);
        }
        let slices = self.traj.slices();
        let ms = cfg.start_index();
        for (k, pair) in slices.windows(2).enumerate() {
            let x0 = cfg.node_q(ms + k);
            let h = cfg.node_q(ms + k + 1) - x0;
            let (w0, w1) = hat_laplace(p, h);
            let e0 = (-p * x0).exp();
            if e0 == 0.0 {
                break;
            }
            v.axpy(e0 * w0, &pair[0]);
            v.axpy(e0 * w1, &pair[1]);
        }
        let last = slices.last().ok_or_else(|| Error::Domain("empty trajectory".into()))?;
        let closure = (-p * cfg.q0).exp() / (p - self.tail.c2);
        v.axpy(closure, last);
        Ok(v)
    }
}

/// `∫₀^h e^{-ps}(1 - s/h) ds` and `∫₀^h e^{-ps} s/h ds`.
fn hat_laplace(p: f64, h: f64) -> (f64, f64) {
    let x = p * h;
    if x < 1e-3 {
        // Taylor series, avoids the cancellation below
        let w0 = h * (0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0);
        let w1 = h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0);
        return (w0, w1);
    }
    let e = (-x).exp();
    let g = -(-x).exp_m1() / x;
    ((1.0 - g) / p, (g - e) / p)
}

pub fn laplace_eval(traj: &BorelTrajectory, t: f64) -> Result<SpectralVectorField> {
    LaplaceEvaluator::new(traj)?.eval(t)
}

/// Velocity samples on the `(2N+1)³` collocation grid, `x_i = 2πi/(2N+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub side: usize,
    /// component-major, index `(i·side + j)·side + l`
    pub values: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn at(&self, comp: usize, i: usize, j: usize, l: usize) -> f64 {
        self.values[comp][(i * self.side + j) * self.side + l]
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.side as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |a, &b| a.max(b.abs()))
    }
}

/// Inverse transform of a Hermitian field.
pub fn physical_field(vhat: &SpectralVectorField) -> Result<PhysicalField> {
    let grid = *vhat.grid();
    let defect = vhat.hermitian_defect();
    if defect > 1e-12 {
        return Err(Error::Domain(format!("field is not Hermitian (defect {defect:.3e})")));
    }
    let side = grid.side();
    let tr = SpectralTransform::with_size(grid, side);
    let scale = vhat.max_abs().max(f64::MIN_POSITIVE);
    let mut values: [Vec<f64>; 3] = Default::default();
    for (j, out) in values.iter_mut().enumerate() {
        let c = tr.to_physical(&vhat.component(j));
        let resid = c.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
        if resid > 1e-10 * scale * grid.len() as f64 {
            return Err(Error::Domain(format!("imaginary residue {resid:.3e} in component {j}")));
        }
        *out = c.iter().map(|z| z.re).collect();
    }
    Ok(PhysicalField { side, values })
}

/// One row of the refinement table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub delta: f64,
    /// `max_x |U_δ(x, q₀) - U(x, q₀)|`
    pub error: f64,
    /// `log₂(e_{2δ}/e_δ)` against the previous row
    pub beta: Option<f64>,
}

/// Manufactured problem and startup parameters of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub modes: usize,
    pub nu: f64,
    pub n: u32,
    pub q0: f64,
    pub qm: f64,
    pub m0: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig { modes: 8, nu: 1.0, n: 2, q0: 1.0, qm: 0.2, m0: 8 }
    }
}

/// Errors at `q₀` of the marched manufactured case for each `δ`, measured on
/// the dealiasing grid against [`reference_profile`].
pub fn convergence_study(study: &StudyConfig, deltas: &[f64]) -> Result<Vec<ConvergenceRow>> {
    let grid = WavevectorGrid::new(study.modes, study.nu)?;
    let case = manufactured_case(grid, study.n)?;
    let exact = case.exact_borel(study.q0)?;
    let tr = SpectralTransform::new(grid);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut cfg = MarchConfig::new(study.modes, study.nu, study.n, delta, study.q0);
        cfg.qm = study.qm;
        cfg.m0 = study.m0;
        let traj = run(&cfg, case.v0(), &case.forcing)?;
        let last = traj.slices().last().ok_or_else(|| Error::Domain("empty trajectory".into()))?;
        let diff = tr.field_to_physical(&last.sub(&exact));
        let error = diff.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
        let beta = rows.last().map(|r| (r.error / error).log2());
        rows.push(ConvergenceRow { delta, error, beta });
    }
    Ok(rows)
}
