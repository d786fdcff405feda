//! Second-order marching of the discretized integral equation on `[q_m, q₀]`.
//!
//! Nodes sit at `q = mδ`, `m = m_s..M`, with `m_s δ = q_m`. On `[0, q_m)` the
//! solution is the startup series. At node `m`
//!
//! `Û(mδ) = Û⁽⁰⁾ + ∫₀^{q_m} 𝒢 R_s + Σ_{m'} w(m,m') R(m'δ) + forcing terms`
//!
//! where `R = -ik_jP[v₀⊗U + U⊗v₀ + U⋆⋆U]`. The node weights integrate the
//! kernel exactly against hat functions (Gauss-Legendre in `u = (q-y)^{1/n}`,
//! in which the kernel is analytic), so the diagonal weight carries the
//! `(q - y)^{1/n}` behaviour of the kernel.

use crate::borel_kernel::KernelEvaluator;
use crate::error::{Error, Result};
use crate::forcing::{theta_borel, Forcing};
use crate::quad::gl01;
use crate::special_functions::{gamma, ln_gamma};
use crate::spectral_field::{project_in_place, SpectralTransform, SpectralVectorField, WavevectorGrid};
use crate::startup::{taylor_coeffs, taylor_coeffs_linear, TaylorSeries, DEFAULT_M0, DEFAULT_QM};
use crate::tensor::{add_sym, axpy_phys, zero_phys, zero_tensor, Phys, SymTensor};

const PANEL_NEAR: usize = 6;
const PANEL_FAR: usize = 4;
/// Panels closer than this many steps to `q` use the denser rule.
const NEAR_PANELS: f64 = 3.0;
const MOMENT_ORDER: usize = 32;
const HAT_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MarchConfig {
    /// Galerkin half-width `N`.
    pub modes: usize,
    pub nu: f64,
    pub n: u32,
    pub delta: f64,
    pub q0: f64,
    pub qm: f64,
    pub m0: usize,
    /// `false` drops every quadratic term (the Stokes problem).
    pub quadratic: bool,
}

impl MarchConfig {
    pub fn new(modes: usize, nu: f64, n: u32, delta: f64, q0: f64) -> Self {
        MarchConfig { modes, nu, n, delta, q0, qm: DEFAULT_QM, m0: DEFAULT_M0, quadratic: true }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::Config(s));
        if self.modes == 0 || self.n == 0 || self.m0 == 0 {
            return bad("N, n and m0 must be positive".into());
        }
        if !(self.nu > 0.0) || !(self.delta > 0.0) {
            return bad(format!("need nu > 0 and delta > 0, got {} and {}", self.nu, self.delta));
        }
        if !(self.qm > 0.0) || !(self.q0 > self.qm) {
            return bad(format!("need q0 > qm > 0, got q0 = {}, qm = {}", self.q0, self.qm));
        }
        let ms = (self.qm / self.delta).round();
        if ms < 1.0 || (ms * self.delta - self.qm).abs() > 1e-9 * self.qm {
            return bad(format!("qm = {} is not a positive multiple of delta = {}", self.qm, self.delta));
        }
        let mm = (self.q0 / self.delta).round();
        if (mm * self.delta - self.q0).abs() > 1e-9 * self.q0 {
            return bad(format!("q0 = {} is not a multiple of delta = {}", self.q0, self.delta));
        }
        Ok(())
    }

    /// `m_s = q_m/δ`.
    pub fn start_index(&self) -> usize {
        (self.qm / self.delta).round() as usize
    }

    /// `M = q₀/δ`.
    pub fn end_index(&self) -> usize {
        (self.q0 / self.delta).round() as usize
    }

    pub fn node_q(&self, m: usize) -> f64 {
        m as f64 * self.delta
    }
}

#[derive(Debug, Clone)]
pub struct BorelTrajectory {
    config: MarchConfig,
    v0: SpectralVectorField,
    forcing: Forcing,
    startup: TaylorSeries,
    slices: Vec<SpectralVectorField>,
}

impl BorelTrajectory {
    /// Reassemble a trajectory from stored slices (`m = m_s..M`).
    pub fn from_parts(
        config: MarchConfig,
        v0: SpectralVectorField,
        forcing: Forcing,
        slices: Vec<SpectralVectorField>,
    ) -> Result<Self> {
        config.validate()?;
        let expect = config.end_index() - config.start_index() + 1;
        if slices.len() != expect {
            return Err(Error::Config(format!("trajectory needs {expect} slices, got {}", slices.len())));
        }
        for s in &slices {
            v0.grid().check_same(s.grid())?;
        }
        let startup = series_for(&config, &v0, &forcing)?;
        Ok(BorelTrajectory { config, v0, forcing, startup, slices })
    }

    pub fn config(&self) -> &MarchConfig {
        &self.config
    }

    pub fn grid(&self) -> &WavevectorGrid {
        self.v0.grid()
    }

    pub fn v0(&self) -> &SpectralVectorField {
        &self.v0
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn startup(&self) -> &TaylorSeries {
        &self.startup
    }

    pub fn slices(&self) -> &[SpectralVectorField] {
        &self.slices
    }

    /// Slice at node `m` (`m_s ≤ m ≤ M`).
    pub fn slice(&self, m: usize) -> Option<&SpectralVectorField> {
        m.checked_sub(self.config.start_index()).and_then(|i| self.slices.get(i))
    }

    /// `(q, ‖Û‖_{l¹}, q^{1-1/n}(1+q²)e^{-αq}‖Û‖_{l¹})` per node.
    pub fn norm_log(&self, alpha: f64) -> Vec<(f64, f64, f64)> {
        let e = 1.0 - 1.0 / self.config.n as f64;
        let ms = self.config.start_index();
        self.slices
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let q = self.config.node_q(ms + i);
                let l1 = s.l1_norm();
                (q, l1, q.powf(e) * (1.0 + q * q) * (-alpha * q).exp() * l1)
            })
            .collect()
    }
}

fn series_for(cfg: &MarchConfig, v0: &SpectralVectorField, f: &Forcing) -> Result<TaylorSeries> {
    let ts = if cfg.quadratic {
        taylor_coeffs(v0, f, cfg.nu, cfg.m0, cfg.n)?
    } else {
        taylor_coeffs_linear(v0, f, cfg.nu, cfg.m0, cfg.n)?
    };
    ts.with_qm(cfg.qm)
}

/// Product-integration weights of one row.
#[derive(Debug, Clone)]
pub struct RowWeights {
    pub m: usize,
    pub m_start: usize,
    pub ksq: Vec<u32>,
    /// `w[(m' - m_start) * ksq.len() + j]` for `m' = m_start..=m`.
    pub w: Vec<f64>,
}

impl RowWeights {
    pub fn get(&self, mp: usize, ksq_index: usize) -> f64 {
        self.w[(mp - self.m_start) * self.ksq.len() + ksq_index]
    }

    /// Weight of the current node, the implicit part of the step.
    pub fn diagonal(&self, ksq_index: usize) -> f64 {
        self.get(self.m, ksq_index)
    }
}

/// Weights `w(m, m'; k)` with `∫_{q_m}^{mδ} 𝒢(mδ, y; k) p(y) dy = Σ w p(m'δ)` for `p`
/// linear on each panel.
pub fn assemble_row_weights(ev: &KernelEvaluator, cfg: &MarchConfig, m: usize, ksq: &[u32]) -> Result<RowWeights> {
    cfg.validate()?;
    let ms = cfg.start_index();
    if m < ms {
        return Err(Error::Domain(format!("row {m} lies before the first node {ms}")));
    }
    let lams: Vec<f64> = ksq.iter().map(|&s| ev.nu() * s as f64).collect();
    let row = PanelRow { q: cfg.node_q(m), top: m, r_top: m, split: None, lams: &lams, exps: &[] };
    let pw = panel_weights(ev, ms, cfg.delta, &row)?;
    Ok(RowWeights { m, m_start: ms, ksq: ksq.to_vec(), w: pw.w })
}

/// Which panels a row at `q` integrates over.
///
/// Panels are `[pδ, (p+1)δ]` for `ms ≤ p < top`; the last one is cut at `q` when
/// `q < top·δ`. Hat weights are formed for nodes up to `r_top` only (the source
/// vanishes beyond it), forcing integrals over every panel. `split` asks for
/// the left-end weights of the panel starting at that node, where the source
/// may jump.
struct PanelRow<'a> {
    q: f64,
    top: usize,
    r_top: usize,
    split: Option<usize>,
    lams: &'a [f64],
    exps: &'a [u32],
}

struct PanelWeights {
    /// node weights, `(p - ms)·nk + kq`, `p = ms..=min(top, r_top)`
    w: Vec<f64>,
    /// `∫ 𝒢 ψ_j` over the panels, `e·nk + kq`
    fj: Vec<f64>,
    /// left-end weights of the `split` panel
    w_split: Vec<f64>,
}

fn panel_weights(ev: &KernelEvaluator, ms: usize, delta: f64, row: &PanelRow) -> Result<PanelWeights> {
    let nk = row.lams.len();
    let n = ev.n();
    let inv_n = 1.0 / n as f64;
    let near = gl01(PANEL_NEAR);
    let far = gl01(PANEL_FAR);
    let q = row.q;
    let w_top = row.top.min(row.r_top);
    let mut w = vec![0.0; (w_top + 1).saturating_sub(ms) * nk];
    let mut fj = vec![0.0; row.exps.len() * nk];
    let mut w_split = vec![0.0; if row.split.is_some() { nk } else { 0 }];
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    let mut psi = Vec::new();
    for p in ms..row.top {
        let hats = p < row.r_top;
        if !hats && row.exps.is_empty() {
            break;
        }
        let (y0, y1) = (p as f64 * delta, ((p + 1) as f64 * delta).min(q));
        let rule = if q - y1 < NEAR_PANELS * delta { &near } else { &far };
        let (ulo, uhi) = ((q - y1).max(0.0).powf(inv_n), (q - y0).powf(inv_n));
        pts.clear();
        psi.clear();
        for &(x, wt) in rule {
            let u = ulo + (uhi - ulo) * x;
            let y = q - u.powi(n as i32);
            let jac = n as f64 * u.powi(n as i32 - 1) * (uhi - ulo) * wt;
            let r = (y - y0) / delta;
            pts.push((y, jac * (1.0 - r), jac * r));
            for &j in row.exps {
                psi.push(jac * theta_borel(j, n, y)?);
            }
        }
        let base = (p - ms) * nk;
        let is_split = row.split == Some(p);
        for (kq, &lam) in row.lams.iter().enumerate() {
            let (mut a, mut b) = (0.0, 0.0);
            for (g, &(y, wl, wr)) in pts.iter().enumerate() {
                let k = ev.kernel_fast(q, y, lam);
                a += k * wl;
                b += k * wr;
                for e in 0..row.exps.len() {
                    fj[e * nk + kq] += k * psi[g * row.exps.len() + e];
                }
            }
            if hats {
                w[base + kq] += a;
                w[base + nk + kq] += b;
            }
            if is_split {
                w_split[kq] = a;
            }
        }
    }
    Ok(PanelWeights { w, fj, w_split })
}

/// Everything the march needs that does not change from node to node.
pub(crate) struct Engine {
    pub cfg: MarchConfig,
    pub grid: WavevectorGrid,
    pub tr: SpectralTransform,
    pub ev: KernelEvaluator,
    pub ts: TaylorSeries,
    pub v1: SpectralVectorField,
    pub forcing: Forcing,
    pub ms: usize,
    lams: Vec<f64>,
    /// index into `lams` for every mode (unused for `k = 0`)
    kslot: Vec<usize>,
    v0_phys: Phys,
    d_phys: Vec<Phys>,
    /// `Ê^(l)`, `l = 0..=m_s`, for rows with a full startup zone
    e_full: Vec<Phys>,
    exps: Vec<u32>,
    moment_rule: Vec<(f64, f64)>,
}

impl Engine {
    pub fn new(cfg: &MarchConfig, v0: &SpectralVectorField, forcing: &Forcing) -> Result<Engine> {
        cfg.validate()?;
        let grid = *v0.grid();
        if grid.half_width() != cfg.modes || (grid.nu() - cfg.nu).abs() > 1e-14 * cfg.nu {
            return Err(Error::Config("initial field does not match N and nu of the configuration".into()));
        }
        grid.check_same(forcing.steady_part().grid())?;
        let ev = KernelEvaluator::new(cfg.n, cfg.nu)?;
        let ts = series_for(cfg, v0, forcing)?;
        if ts.truncated() {
            return Err(Error::Config(format!(
                "Taylor coefficients overflow after {} terms; reduce m0",
                ts.m0()
            )));
        }
        let tr = SpectralTransform::new(grid);
        let mut ksq: Vec<u32> = (0..grid.len()).map(|i| grid.ksq(i)).filter(|&s| s > 0).collect();
        ksq.sort_unstable();
        ksq.dedup();
        let mut slot_of = vec![0usize; grid.max_ksq() as usize + 1];
        for (i, &s) in ksq.iter().enumerate() {
            slot_of[s as usize] = i;
        }
        let kslot = (0..grid.len()).map(|i| slot_of[grid.ksq(i) as usize]).collect();
        let lams = ksq.iter().map(|&s| cfg.nu * s as f64).collect();
        let v0_phys = tr.field_to_physical(v0);
        let d_phys: Vec<Phys> = ts.d().iter().map(|d| tr.field_to_physical(d)).collect();
        let ms = cfg.start_index();
        let exps = forcing.components().iter().map(|(j, _)| *j).collect();
        let v1 = ts.c()[0].clone();
        let mut e = Engine {
            cfg: cfg.clone(),
            grid,
            tr,
            ev,
            ts,
            v1,
            forcing: forcing.clone(),
            ms,
            lams,
            kslot,
            v0_phys,
            d_phys,
            e_full: Vec::new(),
            exps,
            moment_rule: gl01(MOMENT_ORDER),
        };
        if cfg.quadratic {
            e.e_full = e.startup_partners(ms);
        }
        Ok(e)
    }

    pub fn q(&self, m: usize) -> f64 {
        self.cfg.node_q(m)
    }

    pub fn v0_physical(&self) -> &Phys {
        &self.v0_phys
    }

    /// `∫₀^{q_m} 𝒢(q, y) y^{i/n-1} dy` (`i = 1..m₀`) and `∫₀^{q_m} 𝒢 ψ_j`, per `|k|²`.
    fn startup_moments(&self, q: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.cfg.n;
        let nf = n as f64;
        let m0 = self.ts.m0();
        let nk = self.lams.len();
        let qm = self.cfg.qm;
        let a = 0.5 * qm;
        // (y, weight per power i, weight per forcing exponent)
        let mut pts: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(2 * MOMENT_ORDER);
        for &(x, wt) in &self.moment_rule {
            // y = a xⁿ absorbs the y^{i/n-1} end point
            let y = a * x.powi(n as i32);
            let wi = (1..=m0).map(|i| nf * a.powf(i as f64 / nf) * x.powi(i as i32 - 1) * wt).collect();
            let mut wf = Vec::with_capacity(self.exps.len());
            for &j in &self.exps {
                wf.push(theta_borel(j, n, y)? * nf * a * x.powi(n as i32 - 1) * wt);
            }
            pts.push((y, wi, wf));
        }
        let (ulo, uhi) = ((q - qm).max(0.0).powf(1.0 / nf), (q - a).powf(1.0 / nf));
        for &(x, wt) in &self.moment_rule {
            // y = q - uⁿ absorbs the (q - y)^{1/n} behaviour at the diagonal
            let u = ulo + (uhi - ulo) * x;
            let y = q - u.powi(n as i32);
            let jac = nf * u.powi(n as i32 - 1) * (uhi - ulo) * wt;
            let wi = (1..=m0).map(|i| y.powf(i as f64 / nf - 1.0) * jac).collect();
            let mut wf = Vec::with_capacity(self.exps.len());
            for &j in &self.exps {
                wf.push(theta_borel(j, n, y)? * jac);
            }
            pts.push((y, wi, wf));
        }
        let ne = self.exps.len();
        let mut mom = vec![0.0; m0 * nk];
        let mut fj = vec![0.0; ne * nk];
        for (kq, &lam) in self.lams.iter().enumerate() {
            for (y, wi, wf) in &pts {
                let g = self.ev.kernel_fast(q, *y, lam);
                for i in 0..m0 {
                    mom[i * nk + kq] += g * wi[i];
                }
                for e in 0..ne {
                    fj[e * nk + kq] += g * wf[e];
                }
            }
        }
        Ok((mom, fj))
    }

    /// Every term of the right side at `q` except the weight on node `p_end` when
    /// `rhs(p_end)` is unknown. Returns that weight per `|k|²` as well.
    pub fn kernel_integral<'a>(
        &self,
        q: f64,
        p_end: usize,
        rhs: &dyn Fn(usize) -> Option<&'a SpectralVectorField>,
    ) -> Result<(SpectralVectorField, Vec<f64>)> {
        self.row_integral(q, p_end, p_end, None, rhs)
    }

    /// `Û⁽⁰⁾(q) + ∫₀^q 𝒢(q, y)[R(y) + forcing] dy` with `R` given at the nodes up to
    /// `r_top` and zero beyond. Panels run up to node `top` (cut at `q`).
    /// `jump = (J, ΔR)` replaces `R(Jδ)` by `R(Jδ) + ΔR` on the panel right of `J`.
    /// Also returns the weights of node `min(top, r_top)`.
    pub fn row_integral<'a>(
        &self,
        q: f64,
        top: usize,
        r_top: usize,
        jump: Option<(usize, &SpectralVectorField)>,
        rhs: &dyn Fn(usize) -> Option<&'a SpectralVectorField>,
    ) -> Result<(SpectralVectorField, Vec<f64>)> {
        let nk = self.lams.len();
        let m0 = self.ts.m0();
        let mut out = self.ev.u0_term(&self.v1, q)?;
        let (mom, fs) = self.startup_moments(q)?;
        let row = PanelRow { q, top, r_top, split: jump.map(|j| j.0), lams: &self.lams, exps: &self.exps };
        let pw = panel_weights(&self.ev, self.ms, self.cfg.delta, &row)?;
        let zero = self.grid.zero_index();
        let mut add = |coef: &[f64], src: &SpectralVectorField| {
            for (i, (o, s)) in out.coeffs_mut().iter_mut().zip(src.coeffs()).enumerate() {
                if i == zero {
                    continue;
                }
                let c = coef[self.kslot[i]];
                for j in 0..3 {
                    o[j] += s[j] * c;
                }
            }
        };
        let n = self.cfg.n as f64;
        for i in 0..m0 {
            let coef: Vec<f64> = mom[i * nk..(i + 1) * nk].iter().map(|x| x / gamma((i + 1) as f64 / n)).collect();
            add(&coef, &self.ts.h()[i]);
        }
        for (e, (_, a)) in self.forcing.components().iter().enumerate() {
            let coef: Vec<f64> = (0..nk).map(|kq| fs[e * nk + kq] + pw.fj[e * nk + kq]).collect();
            add(&coef, a);
        }
        let last = top.min(r_top);
        for p in self.ms..=last {
            if let Some(r) = rhs(p) {
                add(&pw.w[(p - self.ms) * nk..(p - self.ms + 1) * nk], r);
            }
        }
        if let Some((_, dr)) = jump {
            if !pw.w_split.is_empty() {
                add(&pw.w_split, dr);
            }
        }
        let diag = pw.w[(last - self.ms) * nk..].to_vec();
        Ok((out, diag))
    }

    /// `∫₀^{Lδ} y^{i/n-1} hat_l(y) dy` for hats on `y = lδ`, `l = 0..=L`.
    fn hat_moments(&self, big_l: usize) -> Vec<Vec<f64>> {
        let nf = self.cfg.n as f64;
        let delta = self.cfg.delta;
        let rule = gl01(HAT_ORDER);
        (1..=self.ts.m0())
            .map(|i| {
                let a = i as f64 / nf;
                let mut w = vec![0.0; big_l + 1];
                let da = delta.powf(a);
                w[0] += da / (a * (a + 1.0));
                w[1] += da / (a + 1.0);
                for l in 1..big_l {
                    for &(x, wt) in &rule {
                        let y = (l as f64 + x) * delta;
                        let f = y.powf(a - 1.0) * delta * wt;
                        w[l] += f * (1.0 - x);
                        w[l + 1] += f * x;
                    }
                }
                w
            })
            .collect()
    }

    /// `Ê^(l) = Σ_i W(i,l) d̂_i` in physical space.
    fn startup_partners(&self, big_l: usize) -> Vec<Phys> {
        let w = self.hat_moments(big_l);
        let len = self.tr.padded_len();
        (0..=big_l)
            .map(|l| {
                let mut e = zero_phys(len);
                for (i, d) in self.d_phys.iter().enumerate() {
                    axpy_phys(&mut e, w[i][l], d);
                }
                e
            })
            .collect()
    }

    /// `(U⋆⋆U)(mδ)` without the terms that involve node `m`, plus the field
    /// `v₀ + Ê^(0)` that multiplies `U(mδ)` symmetrically.
    ///
    /// With `cap = Some(c)` the history is taken as zero beyond node `c`, and the
    /// trapezoid treats `c` as an end point.
    pub fn convolution<'a>(
        &self,
        m: usize,
        phys: &dyn Fn(usize) -> Option<&'a Phys>,
        cap: Option<usize>,
    ) -> (SymTensor, Phys) {
        let len = self.tr.padded_len();
        let mut t = zero_tensor(len);
        if !self.cfg.quadratic {
            return (t, zero_phys(len));
        }
        let mut lin = self.v0_phys.clone();
        let ms = self.ms;
        let delta = self.cfg.delta;
        let q = self.q(m);
        let la = ms.min(m - ms);
        if la > 0 {
            let partial;
            let e = if la == ms {
                &self.e_full
            } else {
                partial = self.startup_partners(la);
                &partial
            };
            axpy_phys(&mut lin, 1.0, &e[0]);
            for (l, el) in e.iter().enumerate().skip(1) {
                if let Some(u) = phys(m - l) {
                    add_sym(&mut t, el, u, 1.0);
                }
            }
        }
        if m >= 2 * ms {
            let (lo, hi) = (ms, m - ms);
            if hi > lo {
                for p in lo..=(lo + hi) / 2 {
                    let edge = p == lo || cap.is_some_and(|c| p + c == m);
                    let mut w = if edge { 0.5 * delta } else { delta };
                    if p == m - p {
                        w *= 0.5;
                    }
                    if let (Some(a), Some(b)) = (phys(p), phys(m - p)) {
                        add_sym(&mut t, a, b, w);
                    }
                }
            }
        } else {
            // both factors on the startup series: y ∈ [q - q_m, q_m]
            let nf = self.cfg.n as f64;
            let m0 = self.ts.m0();
            let (lo, hi) = (q - self.cfg.qm, self.cfg.qm);
            let mut coef = vec![0.0; m0 * m0];
            for i in 0..m0 {
                for k in i..m0 {
                    let (a, b) = ((i + 1) as f64 / nf, (k + 1) as f64 / nf);
                    let v = if m == ms {
                        (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp() * q.powf(a + b - 1.0)
                    } else {
                        quadrature::double_exponential::integrate(
                            |y: f64| y.powf(a - 1.0) * (q - y).powf(b - 1.0),
                            lo,
                            hi,
                            1e-14,
                        )
                        .integral
                    };
                    coef[i * m0 + k] = v;
                    coef[k * m0 + i] = v;
                }
            }
            for i in 0..m0 {
                let mut g = zero_phys(len);
                for k in 0..m0 {
                    axpy_phys(&mut g, coef[i * m0 + k], &self.d_phys[k]);
                }
                add_sym(&mut t, &self.d_phys[i], &g, 0.5);
            }
        }
        (t, lin)
    }

    /// `R = -ik_jP[T_hist + lin⊗U + U⊗lin]`; also returns `U` in physical space.
    pub fn rhs(&self, u: &SpectralVectorField, t_hist: &SymTensor, lin: &Phys) -> (SpectralVectorField, Phys) {
        let pu = self.tr.field_to_physical(u);
        if !self.cfg.quadratic {
            return (SpectralVectorField::zeros(self.grid), pu);
        }
        let mut t = t_hist.clone();
        add_sym(&mut t, lin, &pu, 1.0);
        (self.tr.tensor_divergence(&t), pu)
    }

    pub fn apply_diagonal(&self, known: &SpectralVectorField, diag: &[f64], r: &SpectralVectorField) -> SpectralVectorField {
        let mut out = known.clone();
        let zero = self.grid.zero_index();
        for (i, (o, x)) in out.coeffs_mut().iter_mut().zip(r.coeffs()).enumerate() {
            if i == zero {
                continue;
            }
            let c = diag[self.kslot[i]];
            for j in 0..3 {
                o[j] += x[j] * c;
            }
        }
        out
    }
}

fn finish_slice(mut u: SpectralVectorField, m: usize) -> Result<SpectralVectorField> {
    project_in_place(&mut u);
    u.symmetrize();
    u.pin_mean();
    let norm = u.l1_norm();
    if !norm.is_finite() || norm > 1e200 {
        return Err(Error::Abort {
            node: m,
            reason: format!("l1 norm {norm:e}; the growth rate exceeds what this step size resolves"),
        });
    }
    Ok(u)
}

/// March from `q_m` to `q₀`.
pub fn run(config: &MarchConfig, v0: &SpectralVectorField, f: &Forcing) -> Result<BorelTrajectory> {
    let eng = Engine::new(config, v0, f)?;
    let ms = eng.ms;
    let mm = config.end_index();
    let mut slices: Vec<SpectralVectorField> = Vec::with_capacity(mm - ms + 1);
    let mut phys: Vec<Phys> = Vec::with_capacity(mm - ms + 1);
    let mut rhs: Vec<SpectralVectorField> = Vec::with_capacity(mm - ms + 1);
    for m in ms..=mm {
        let (u, pu, r) = {
            let get_r = |p: usize| if p < m { rhs.get(p - ms) } else { None };
            let get_p = |p: usize| if p >= ms && p < m { phys.get(p - ms) } else { None };
            let (known, diag) = eng.kernel_integral(eng.q(m), m, &get_r)?;
            let (t_hist, lin) = eng.convolution(m, &get_p, None);
            if m == ms {
                let u = finish_slice(known, m)?;
                let (r, pu) = eng.rhs(&u, &t_hist, &lin);
                (u, pu, r)
            } else {
                let k = m - ms;
                let pred = if k >= 2 {
                    let mut p = rhs[k - 1].scaled(2.0);
                    p.axpy(-1.0, &rhs[k - 2]);
                    p
                } else {
                    rhs[k - 1].clone()
                };
                let u_pred = eng.apply_diagonal(&known, &diag, &pred);
                let (r1, _) = eng.rhs(&u_pred, &t_hist, &lin);
                let u = finish_slice(eng.apply_diagonal(&known, &diag, &r1), m)?;
                let (r, pu) = eng.rhs(&u, &t_hist, &lin);
                (u, pu, r)
            }
        };
        slices.push(u);
        phys.push(pu);
        rhs.push(r);
    }
    Ok(BorelTrajectory { config: config.clone(), v0: v0.clone(), forcing: f.clone(), startup: eng.ts, slices })
}

/// One predictor-corrector step at node `m` given the stored slices below it.
pub fn rk2_step(traj: &BorelTrajectory, m: usize) -> Result<SpectralVectorField> {
    let cfg = traj.config();
    let ms = cfg.start_index();
    if m < ms || m > cfg.end_index() + 1 || m - ms > traj.slices.len() {
        return Err(Error::Domain(format!("step {m} needs every slice from {ms} up to it")));
    }
    let eng = Engine::new(cfg, traj.v0(), traj.forcing())?;
    let phys: Vec<Phys> = traj.slices[..m - ms].iter().map(|s| eng.tr.field_to_physical(s)).collect();
    let get_p = |p: usize| if p >= ms && p < m { phys.get(p - ms) } else { None };
    let mut rhs = Vec::with_capacity(m - ms);
    for p in ms..m {
        let (t, lin) = eng.convolution(p, &get_p, None);
        rhs.push(eng.rhs(&traj.slices[p - ms], &t, &lin).0);
    }
    let get_r = |p: usize| if p < m { rhs.get(p - ms) } else { None };
    let (known, diag) = eng.kernel_integral(eng.q(m), m, &get_r)?;
    let (t_hist, lin) = eng.convolution(m, &get_p, None);
    if m == ms {
        return finish_slice(known, m);
    }
    let k = m - ms;
    let pred = if k >= 2 {
        let mut p = rhs[k - 1].scaled(2.0);
        p.axpy(-1.0, &rhs[k - 2]);
        p
    } else {
        rhs[k - 1].clone()
    };
    let u_pred = eng.apply_diagonal(&known, &diag, &pred);
    let (r1, _) = eng.rhs(&u_pred, &t_hist, &lin);
    finish_slice(eng.apply_diagonal(&known, &diag, &r1), m)
}

/// `R(m'δ) = -ik_jP[Ĥ_j(m'δ)]` recomputed from the stored slices.
#[allow(non_snake_case)]
pub fn discrete_H(traj: &BorelTrajectory, m: usize) -> Result<SpectralVectorField> {
    let cfg = traj.config();
    let ms = cfg.start_index();
    let u = traj.slice(m).ok_or_else(|| Error::Domain(format!("no slice at node {m}")))?;
    let eng = Engine::new(cfg, traj.v0(), traj.forcing())?;
    let phys: Vec<Phys> = traj.slices[..m - ms].iter().map(|s| eng.tr.field_to_physical(s)).collect();
    let get_p = |p: usize| if p >= ms && p < m { phys.get(p - ms) } else { None };
    let (t, lin) = eng.convolution(m, &get_p, None);
    Ok(eng.rhs(u, &t, &lin).0)
}

/// `sup_m (mδ)^{1-1/n}(1 + m²δ²) e^{-αmδ} ‖Û(mδ)‖_{l¹}` over the stored nodes.
pub fn discrete_norm(traj: &BorelTrajectory, alpha: f64) -> f64 {
    traj.norm_log(alpha).iter().map(|x| x.2).fold(0.0, f64::max)
}
