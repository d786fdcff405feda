//! Small-`q` representation of `Û` from the time-domain Taylor series.
//!
//! With `v̂(t) = v̂₀ + Σ_{m≥1} ĉ_m t^m`, each power `t^m` is the Laplace transform
//! of `q^{m/n-1}/Γ(m/n)` in `τ = t^{-n}`, so near `q = 0`
//! `Û(q) = Σ_{m≤m₀} d̂_m q^{m/n-1}` with `d̂_m = ĉ_m/Γ(m/n)`.

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::special_functions::gamma;
use crate::spectral_field::{SpectralTransform, SpectralVectorField};
use crate::tensor::{add_sym, zero_tensor, Phys};

pub const DEFAULT_QM: f64 = 0.2;
pub const DEFAULT_M0: usize = 8;
/// Relative size of the last retained term accepted by [`choose_qm`].
pub const QM_TOLERANCE: f64 = 1e-10;

/// Coefficient norms past this are treated as overflow.
const OVERFLOW_NORM: f64 = 1e250;

#[derive(Debug, Clone)]
pub struct TaylorSeries {
    n: u32,
    qm: f64,
    c: Vec<SpectralVectorField>,
    d: Vec<SpectralVectorField>,
    /// Taylor coefficients of the quadratic source `-ik_jP[...]`, `m = 1..m₀`.
    h: Vec<SpectralVectorField>,
    requested: usize,
}

impl TaylorSeries {
    pub fn m0(&self) -> usize {
        self.c.len()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn qm(&self) -> f64 {
        self.qm
    }

    /// `ĉ_m` for `m = 1..m₀` (index `m - 1`).
    pub fn c(&self) -> &[SpectralVectorField] {
        &self.c
    }

    /// `d̂_m = ĉ_m/Γ(m/n)`.
    pub fn d(&self) -> &[SpectralVectorField] {
        &self.d
    }

    /// Source coefficients `ĥ_m` of the quadratic terms (no forcing).
    pub fn h(&self) -> &[SpectralVectorField] {
        &self.h
    }

    /// True when the overflow guard cut the series short.
    pub fn truncated(&self) -> bool {
        self.c.len() < self.requested
    }

    /// `‖ĉ_{m₀}‖^{-1/m₀}`, a crude radius of the `t`-series.
    pub fn radius_estimate(&self) -> f64 {
        let m = self.c.len();
        self.c[m - 1].l1_norm().powf(-1.0 / m as f64)
    }

    pub fn with_qm(mut self, qm: f64) -> Result<Self> {
        if !(qm > 0.0) {
            return Err(Error::Config(format!("startup endpoint must be positive, got {qm}")));
        }
        self.qm = qm;
        Ok(self)
    }
}

/// Taylor coefficients of the Galerkin system with dealiased products.
pub fn taylor_coeffs(v0: &SpectralVectorField, f: &Forcing, nu: f64, m0: usize, n: u32) -> Result<TaylorSeries> {
    recursion(v0, f, nu, m0, n, true)
}

/// Same recursion with the quadratic terms switched off.
pub fn taylor_coeffs_linear(v0: &SpectralVectorField, f: &Forcing, nu: f64, m0: usize, n: u32) -> Result<TaylorSeries> {
    recursion(v0, f, nu, m0, n, false)
}

fn recursion(
    v0: &SpectralVectorField,
    f: &Forcing,
    nu: f64,
    m0: usize,
    n: u32,
    quadratic: bool,
) -> Result<TaylorSeries> {
    let grid = *v0.grid();
    grid.check_same(f.steady_part().grid())?;
    if m0 == 0 || n == 0 {
        return Err(Error::Config("need m0 >= 1 and n >= 1".into()));
    }
    if (nu - grid.nu()).abs() > 1e-14 * nu.abs() {
        return Err(Error::Config(format!("viscosity {nu} differs from the grid's {}", grid.nu())));
    }
    let tr = SpectralTransform::new(grid);
    let len = tr.padded_len();
    let p0 = tr.field_to_physical(v0);

    let source = |pairs: &[(&Phys, &Phys, f64)]| -> SpectralVectorField {
        if !quadratic {
            return SpectralVectorField::zeros(grid);
        }
        let mut t = zero_tensor(len);
        for (a, b, w) in pairs {
            add_sym(&mut t, a, b, *w);
        }
        tr.tensor_divergence(&t)
    };
    let heat = |c: &SpectralVectorField, s: &SpectralVectorField, m: usize| -> SpectralVectorField {
        let mut out = s.clone();
        for (i, (o, x)) in out.coeffs_mut().iter_mut().zip(c.coeffs()).enumerate() {
            let lam = nu * grid.ksq(i) as f64;
            for j in 0..3 {
                o[j] -= x[j] * lam;
            }
        }
        let mut out = out.scaled(1.0 / m as f64);
        out.symmetrize();
        out.pin_mean();
        out
    };

    // ĉ₁ = f̂(0) - ν|k|²v̂₀ + source(v₀ ⊗ v₀)
    let s0 = {
        let mut s = source(&[(&p0, &p0, 0.5)]);
        s.axpy(1.0, f.steady_part());
        s
    };
    let mut c = vec![heat(v0, &s0, 1)];
    let mut phys = vec![tr.field_to_physical(&c[0])];
    let mut h = Vec::with_capacity(m0);
    for m in 1..=m0 {
        // ĥ_m: v₀⊗ĉ_m + ĉ_m⊗v₀ + Σ_{l=1}^{m-1} ĉ_l⊗ĉ_{m-l}
        let mut pairs: Vec<(&Phys, &Phys, f64)> = vec![(&p0, &phys[m - 1], 1.0)];
        for l in 1..=(m - 1) / 2 {
            pairs.push((&phys[l - 1], &phys[m - l - 1], 1.0));
        }
        if m >= 2 && m % 2 == 0 {
            pairs.push((&phys[m / 2 - 1], &phys[m / 2 - 1], 0.5));
        }
        let hm = source(&pairs);
        if m == m0 {
            h.push(hm);
            break;
        }
        let mut s = hm.clone();
        s.axpy(1.0, &f.taylor_coeff(m));
        h.push(hm);
        let next = heat(&c[m - 1], &s, m + 1);
        let norm = next.l1_norm();
        if !norm.is_finite() || norm > OVERFLOW_NORM {
            break;
        }
        phys.push(tr.field_to_physical(&next));
        c.push(next);
    }
    h.truncate(c.len());
    let d = c.iter().enumerate().map(|(i, x)| x.scaled(1.0 / gamma((i + 1) as f64 / n as f64))).collect();
    Ok(TaylorSeries { n, qm: DEFAULT_QM, c, d, h, requested: m0 })
}

/// `Σ_{m≤m₀} d̂_m q^{m/n-1}` for `0 < q ≤ q_m`.
pub fn borel_startup_eval(ts: &TaylorSeries, q: f64) -> Result<SpectralVectorField> {
    if !(q > 0.0) || q > ts.qm * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("startup series used at q = {q} outside (0, {}]", ts.qm)));
    }
    Ok(partial_sum(ts, q, ts.m0()))
}

fn partial_sum(ts: &TaylorSeries, q: f64, terms: usize) -> SpectralVectorField {
    let mut out = SpectralVectorField::zeros(*ts.d[0].grid());
    for (i, d) in ts.d.iter().take(terms).enumerate() {
        out.axpy(q.powf((i + 1) as f64 / ts.n as f64 - 1.0), d);
    }
    out
}

/// Largest `q ≤ 0.2` where the last term is below `1e-10` of the partial sum.
pub fn choose_qm(ts: &TaylorSeries) -> Result<f64> {
    choose_qm_with(ts, QM_TOLERANCE, DEFAULT_QM)
}

pub fn choose_qm_with(ts: &TaylorSeries, rel_tol: f64, cap: f64) -> Result<f64> {
    let m0 = ts.m0();
    if m0 < 4 {
        return Err(Error::Config(format!("choosing q_m needs at least 4 terms, have {m0}")));
    }
    let last = ts.d[m0 - 1].l1_norm();
    if last == 0.0 {
        return Ok(cap);
    }
    let floor = 1e-3;
    let mut q = cap;
    while q >= floor {
        let tail = last * q.powf(m0 as f64 / ts.n as f64 - 1.0);
        if tail <= rel_tol * partial_sum(ts, q, m0).l1_norm() {
            return Ok(q);
        }
        q *= 0.98;
    }
    Err(Error::Config(format!(
        "startup series not accurate to {rel_tol:e} even at q = {floor}; raise m0 or lower the tolerance"
    )))
}
