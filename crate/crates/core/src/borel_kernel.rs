//! The Volterra kernel `𝒢(q, q'; k)` and the inhomogeneous term `Û⁽⁰⁾`.
//!
//! For `n ≥ 2` the kernel is
//! `𝒢 = ∫_{(q'/q)^{1/n}}^1 (q - q's^{-n})^{1/n-1} F(ν|k|²(1-s)(q - q's^{-n})^{1/n}) ds`.
//! With `x = q - q's^{-n}` the integrand becomes
//! `(1/n) x^{1/n-1} s/(q-x) F(λ β x^{1/n})`, `β = 1 - s`, on `x ∈ [0, q-q']`.
//! The left piece is integrated in `v` with `x = X vⁿ` (removes `x^{1/n-1}`),
//! the right piece in `t` with `q - x = q' e^{tL}` (resolves `s → 1`).
//! Both integrands are analytic, so plain Gauss-Legendre is used.

use crate::error::{Error, Result};
use crate::quad::RuleLadder;
use crate::special_functions::{bessel_kernel_pair, FGEvaluator};
use crate::spectral_field::SpectralVectorField;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Beyond this argument `|F|` is below `1e-25` for `n = 2` and is treated as zero.
pub const MU_CUT: f64 = 500.0;
const TABLE_STEP: f64 = 0.004;
const ORDERS: [usize; 13] = [12, 16, 20, 24, 32, 40, 48, 64, 80, 96, 128, 160, 192];

/// `F` on a uniform grid with four-point Lagrange interpolation.
#[derive(Debug, Clone)]
struct FTable {
    inv_h: f64,
    vals: Vec<f64>,
    /// arguments past the table are either negligible or unsupported
    hi: f64,
    zero_beyond: bool,
}

impl FTable {
    fn new(ev: &FGEvaluator) -> Result<Self> {
        let count = (MU_CUT / TABLE_STEP).ceil() as usize + 3;
        let mut vals = Vec::with_capacity(count);
        let mut zero_beyond = true;
        for i in 0..count {
            let mu = i as f64 * TABLE_STEP;
            match ev.eval_f(mu) {
                Ok(v) => vals.push(v),
                Err(_) => {
                    zero_beyond = ev.envelope_f(mu) < 1e-15;
                    break;
                }
            }
        }
        if vals.len() < 8 {
            return Err(Error::Unsupported(format!("F not evaluable for n = {}", ev.n())));
        }
        let hi = (vals.len() - 3) as f64 * TABLE_STEP;
        Ok(FTable { inv_h: 1.0 / TABLE_STEP, vals, hi, zero_beyond })
    }

    #[inline]
    fn eval(&self, mu: f64) -> f64 {
        if mu >= self.hi {
            return 0.0;
        }
        let s = mu * self.inv_h;
        let i = (s as usize).max(1);
        let t = s - i as f64;
        let v = &self.vals[i - 1..i + 3];
        let (tm, t1, t2) = (t + 1.0, t - 1.0, t - 2.0);
        (-t * t1 * t2 * v[0] + 3.0 * tm * t1 * t2 * v[1] - 3.0 * tm * t * t2 * v[2] + tm * t * t1 * v[3]) / 6.0
    }
}

/// Oscillation phase of `F` at `μ`, used to size the quadrature.
pub fn f_phase(n: u32, mu: f64) -> f64 {
    if n == 1 {
        return 2.0 * mu.max(0.0).sqrt();
    }
    let nf = n as f64;
    let xi0 = (nf + 1.0) * nf.powf(-nf / (nf + 1.0));
    xi0 * (PI / (nf + 1.0)).sin() * mu.max(0.0).powf(nf / (nf + 1.0))
}

/// Kernel by the split `v`/`t` quadrature with an arbitrary `F`.
///
/// `f` must vanish (to working precision) beyond `mu_cut`.
pub fn kernel_quadrature<Fv: Fn(f64) -> f64>(n: u32, q: f64, qp: f64, lam: f64, f: Fv, mu_cut: f64) -> f64 {
    let ladder = RuleLadder::new(&ORDERS);
    kernel_split(&ladder, n, q, qp, lam, &f, mu_cut)
}

fn kernel_split<Fv: Fn(f64) -> f64>(
    ladder: &RuleLadder,
    n: u32,
    q: f64,
    qp: f64,
    lam: f64,
    f: &Fv,
    mu_cut: f64,
) -> f64 {
    let inv_n = 1.0 / n as f64;
    let d = q - qp;
    let beta = |x: f64| -(-((d - x) / qp).ln_1p() * inv_n).exp_m1();
    let mu = |x: f64| lam * beta(x) * x.powf(inv_n);
    let bound = lam * beta(0.0) * d.powf(inv_n);

    let (xl, xr) = if bound <= mu_cut { (0.5 * d, 0.5 * d) } else { cut_window(&mu, d, mu_cut) };
    let order = (12.0 + 0.7 * f_phase(n, bound.min(mu_cut))).ceil() as usize;
    let rule = ladder.at_least(order);

    let mut total = 0.0;
    if xl > 0.0 {
        let xl_n = xl.powf(inv_n);
        let mut s = 0.0;
        for &(v, w) in rule {
            let x = xl * v.powi(n as i32);
            let b = beta(x);
            s += w * (1.0 - b) / (q - x) * f(lam * b * xl_n * v);
        }
        total += xl_n * s;
    }
    if xr < d {
        let l = ((d - xr) / qp).ln_1p();
        let mut s = 0.0;
        for &(t, w) in rule {
            let x = d - qp * (t * l).exp_m1();
            let e = -t * l * inv_n;
            let xn = x.powf(inv_n);
            s += w * xn / x * e.exp() * f(lam * (-e.exp_m1()) * xn);
        }
        total += l * inv_n * s;
    }
    total
}

/// `x`-interval `[0, a] ∪ [b, d]` on which `μ(x) < mu_cut`; `μ` is log-concave in `x`.
fn cut_window<M: Fn(f64) -> f64>(mu: &M, d: f64, mu_cut: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, d);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let (mut fc, mut fe) = (mu(c), mu(e));
    for _ in 0..80 {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = mu(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = mu(e);
        }
    }
    let xs = 0.5 * (a + b);
    if mu(xs) <= mu_cut {
        return (0.5 * d, 0.5 * d);
    }
    let bisect = |mut lo: f64, mut hi: f64, rising: bool| {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (mu(mid) < mu_cut) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    (bisect(0.0, xs, true), bisect(xs, d, false))
}

/// `𝒢` for `n = 1`: `(πz'/z)(J₁(z')Y₁(z) - J₁(z)Y₁(z'))`, `z = 2√(λq)`, `z' = 2√(λq')`.
pub fn kernel_bessel_lambda(q: f64, qp: f64, lam: f64) -> Result<f64> {
    if !(qp > 0.0 && qp <= q) {
        return Err(Error::Domain(format!("need 0 < q' <= q, got q = {q}, q' = {qp}")));
    }
    if qp == q {
        return Ok(0.0);
    }
    let z = 2.0 * (lam * q).sqrt();
    let zp = 2.0 * (lam * qp).sqrt();
    let (j, y) = bessel_kernel_pair(z)?;
    let (jp, yp) = bessel_kernel_pair(zp)?;
    Ok(PI * zp / z * (jp * y - j * yp))
}

/// Kernel and inhomogeneous-term evaluator for fixed `n` and `ν`.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    n: u32,
    nu: f64,
    fg: Option<FGEvaluator>,
    table: Option<FTable>,
    ladder: RuleLadder,
}

impl KernelEvaluator {
    pub fn new(n: u32, nu: f64) -> Result<Self> {
        if n == 0 || !(nu > 0.0) {
            return Err(Error::Config(format!("need n >= 1 and nu > 0, got n = {n}, nu = {nu}")));
        }
        let (fg, table) = if n >= 2 {
            let fg = FGEvaluator::new(n)?;
            let t = FTable::new(&fg)?;
            (Some(fg), Some(t))
        } else {
            (None, None)
        };
        Ok(KernelEvaluator { n, nu, fg, table, ladder: RuleLadder::new(&ORDERS) })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `𝒢(q, q'; k)` for `|k|² = ksq`, `0 < q' < q`.
    pub fn kernel_g(&self, q: f64, qp: f64, ksq: f64) -> Result<f64> {
        if !(qp > 0.0) || !(qp < q) || !(ksq > 0.0) {
            return Err(Error::Domain(format!("kernel needs 0 < q' < q and |k|² > 0 (q = {q}, q' = {qp})")));
        }
        self.kernel_lambda(q, qp, self.nu * ksq)
    }

    /// Closed-form `n = 1` kernel; `q' = q` gives zero.
    pub fn kernel_g_bessel(&self, q: f64, qp: f64, ksq: f64) -> Result<f64> {
        kernel_bessel_lambda(q, qp, self.nu * ksq)
    }

    /// `𝒢` as a function of `λ = ν|k|²`.
    pub fn kernel_lambda(&self, q: f64, qp: f64, lam: f64) -> Result<f64> {
        match &self.table {
            None => kernel_bessel_lambda(q, qp, lam),
            Some(t) => {
                let inv_n = 1.0 / self.n as f64;
                let beta0 = -(-((q - qp) / qp).ln_1p() * inv_n).exp_m1();
                if !t.zero_beyond && lam * beta0 * (q - qp).powf(inv_n) > t.hi {
                    return Err(Error::Unsupported(format!(
                        "kernel argument beyond the series range of F for n = {}",
                        self.n
                    )));
                }
                Ok(kernel_split(&self.ladder, self.n, q, qp, lam, &|mu| t.eval(mu), MU_CUT))
            }
        }
    }

    /// Unchecked fast path used by the weight assembly (`0 < q' < q`).
    #[inline]
    pub(crate) fn kernel_fast(&self, q: f64, qp: f64, lam: f64) -> f64 {
        match &self.table {
            None => {
                let z = 2.0 * (lam * q).sqrt();
                let zp = 2.0 * (lam * qp).sqrt();
                PI * zp / z * (libm::j1(zp) * libm::y1(z) - libm::j1(z) * libm::y1(zp))
            }
            Some(t) => kernel_split(&self.ladder, self.n, q, qp, lam, &|mu| t.eval(mu), MU_CUT),
        }
    }

    /// Interpolated `F` (the table the kernel uses).
    pub fn f_interp(&self, mu: f64) -> Option<f64> {
        self.table.as_ref().map(|t| t.eval(mu))
    }

    /// Scalar factor of `Û⁽⁰⁾`: `G(λq^{1/n})/(λq)`, or `2J₁(z)/z` for `n = 1`.
    pub fn u0_factor(&self, q: f64, lam: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(Error::Domain(format!("U0 needs q > 0, got {q}")));
        }
        match &self.fg {
            None => {
                let z = 2.0 * (lam * q).sqrt();
                Ok(if z < 1e-8 { 1.0 } else { 2.0 * libm::j1(z) / z })
            }
            Some(fg) => {
                let mu = lam * q.powf(1.0 / self.n as f64);
                match fg.eval_g(mu) {
                    Ok(g) => Ok(g / (lam * q)),
                    Err(e) => {
                        if fg.envelope_g(mu) < 1e-15 {
                            Ok(0.0)
                        } else {
                            Err(e)
                        }
                    }
                }
            }
        }
    }

    /// `Û⁽⁰⁾(k, q)` for every mode of `v1`.
    pub fn u0_term(&self, v1: &SpectralVectorField, q: f64) -> Result<SpectralVectorField> {
        let grid = *v1.grid();
        let nu = grid.nu();
        let mut factors = vec![0.0; grid.max_ksq() as usize + 1];
        for (s, f) in factors.iter_mut().enumerate().skip(1) {
            *f = self.u0_factor(q, nu * s as f64)?;
        }
        let mut out = v1.clone();
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            let s = grid.ksq(i) as usize;
            let f = if s == 0 { 0.0 } else { factors[s] };
            for x in c.iter_mut() {
                *x *= f;
            }
        }
        out.coeffs_mut()[grid.zero_index()] = [C64::new(0.0, 0.0); 3];
        Ok(out)
    }
}

/// Free-function form of [`KernelEvaluator::u0_term`].
#[allow(non_snake_case)]
pub fn U0_term(ev: &KernelEvaluator, v1: &SpectralVectorField, q: f64) -> Result<SpectralVectorField> {
    ev.u0_term(v1, q)
}

/// Node values `𝒢(q_m, q_{m'}; k)` for `m' < m` on a fixed grid, keyed by `|k|²`.
#[derive(Debug, Clone)]
pub struct KernelCache {
    n: u32,
    nu: f64,
    qgrid: Vec<f64>,
    ksq: Vec<u32>,
    /// lower triangle `(m, m')`, `m' < m`, row-major, then `|k|²` fastest
    table: Vec<f64>,
}

impl KernelCache {
    pub fn build(ev: &KernelEvaluator, qgrid: &[f64], ksq: &[u32]) -> Result<Self> {
        if qgrid.windows(2).any(|w| !(w[0] < w[1])) || qgrid.first().is_some_and(|&q| !(q > 0.0)) {
            return Err(Error::Config("kernel cache grid must be positive and increasing".into()));
        }
        let mut ks = ksq.to_vec();
        ks.sort_unstable();
        ks.dedup();
        if ks.first() == Some(&0) {
            ks.remove(0);
        }
        let mut table = Vec::with_capacity(qgrid.len() * qgrid.len().saturating_sub(1) / 2 * ks.len());
        for m in 1..qgrid.len() {
            for mp in 0..m {
                for &s in &ks {
                    table.push(ev.kernel_g(qgrid[m], qgrid[mp], s as f64)?);
                }
            }
        }
        Ok(KernelCache { n: ev.n(), nu: ev.nu(), qgrid: qgrid.to_vec(), ksq: ks, table })
    }

    /// Reassemble a cache from stored parts (file loading).
    pub fn from_parts(n: u32, nu: f64, qgrid: Vec<f64>, ksq: Vec<u32>, table: Vec<f64>) -> Result<Self> {
        let pairs = qgrid.len() * qgrid.len().saturating_sub(1) / 2;
        if table.len() != pairs * ksq.len() {
            return Err(Error::Config("kernel cache table has the wrong length".into()));
        }
        Ok(KernelCache { n, nu, qgrid, ksq, table })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn qgrid(&self) -> &[f64] {
        &self.qgrid
    }

    pub fn ksq_values(&self) -> &[u32] {
        &self.ksq
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn slot(&self, m: usize, mp: usize, ksq: u32) -> Option<usize> {
        if mp >= m || m >= self.qgrid.len() {
            return None;
        }
        let k = self.ksq.binary_search(&ksq).ok()?;
        Some((m * (m - 1) / 2 + mp) * self.ksq.len() + k)
    }

    /// Cached `𝒢(q_m, q_{m'}; k)`.
    pub fn get(&self, m: usize, mp: usize, ksq: u32) -> Option<f64> {
        self.slot(m, mp, ksq).map(|i| self.table[i])
    }

    /// Discrete `B₀(k) = sup (q - q')^{1/2 - 1/(2n)} |𝒢(q, q'; k)|` over cached pairs with `q' ≥ q_lo`.
    ///
    /// A lower bound of the true supremum.
    pub fn b0_bound_from(&self, ksq: u32, q_lo: f64) -> Result<f64> {
        let k = self
            .ksq
            .binary_search(&ksq)
            .map_err(|_| Error::Domain(format!("|k|² = {ksq} not in the kernel cache")))?;
        let e = 0.5 - 0.5 / self.n as f64;
        let mut best: Option<f64> = None;
        for m in 1..self.qgrid.len() {
            for mp in 0..m {
                if self.qgrid[mp] < q_lo {
                    continue;
                }
                let g = self.table[(m * (m - 1) / 2 + mp) * self.ksq.len() + k];
                let v = (self.qgrid[m] - self.qgrid[mp]).powf(e) * g.abs();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        best.ok_or_else(|| Error::Refused("empty kernel cache: no (q, q') pairs".into()))
    }

    pub fn b0_bound(&self, ksq: u32) -> Result<f64> {
        self.b0_bound_from(ksq, 0.0)
    }
}

/// `B₀` for every cached `|k|²` (pairs with `q' ≥ q_lo`).
pub fn b0_table(cache: &KernelCache, q_lo: f64) -> Result<Vec<(u32, f64)>> {
    cache.ksq_values().iter().map(|&s| Ok((s, cache.b0_bound_from(s, q_lo)?))).collect()
}
