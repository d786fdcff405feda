//! Forcing of the form `f(t) = f₀ + Σ_j A_j [(1+t)^{-j} - 1]`.
//!
//! The steady part `f₀` enters `v̂₁`; each rational component is carried by its
//! Taylor coefficients in the startup recursion and by its Borel transform
//! `ψ_j(q) = L⁻¹[(1 + τ^{-1/n})^{-j} - 1](q)` in the integral equation.

use crate::error::{Error, Result};
use crate::special_functions::ln_gamma;
use crate::spectral_field::{SpectralVectorField, WavevectorGrid};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Above this `q` the alternating series for `ψ_j` loses too many digits.
const SERIES_Q_MAX: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct Forcing {
    steady: SpectralVectorField,
    rational: Vec<(u32, SpectralVectorField)>,
}

impl Forcing {
    pub fn none(grid: WavevectorGrid) -> Self {
        Forcing { steady: SpectralVectorField::zeros(grid), rational: Vec::new() }
    }

    pub fn steady(f: SpectralVectorField) -> Self {
        Forcing { steady: f, rational: Vec::new() }
    }

    /// `f(t) = steady + Σ A_j[(1+t)^{-j} - 1]` with `j ≥ 1`.
    pub fn rational(steady: SpectralVectorField, parts: Vec<(u32, SpectralVectorField)>) -> Result<Self> {
        for (j, a) in &parts {
            if *j == 0 {
                return Err(Error::Config("rational forcing exponents start at 1".into()));
            }
            steady.grid().check_same(a.grid())?;
        }
        Ok(Forcing { steady, rational: parts })
    }

    pub fn steady_part(&self) -> &SpectralVectorField {
        &self.steady
    }

    pub fn components(&self) -> &[(u32, SpectralVectorField)] {
        &self.rational
    }

    pub fn is_steady(&self) -> bool {
        self.rational.iter().all(|(_, a)| a.is_zero())
    }

    /// Coefficient of `t^m` (`m ≥ 1`) of `f(t) - f(0)`.
    pub fn taylor_coeff(&self, m: usize) -> SpectralVectorField {
        let mut out = SpectralVectorField::zeros(*self.steady.grid());
        for (j, a) in &self.rational {
            out.axpy(theta_taylor(*j, m), a);
        }
        out
    }

    /// `f̂(·, t)`.
    pub fn at_time(&self, t: f64) -> SpectralVectorField {
        let mut out = self.steady.clone();
        for (j, a) in &self.rational {
            out.axpy((1.0 + t).powi(-(*j as i32)) - 1.0, a);
        }
        out
    }
}

/// `binom(-j, m)`, the `t^m` coefficient of `(1+t)^{-j}`.
pub fn theta_taylor(j: u32, m: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..m {
        c *= -(j as f64 + i as f64) / (i as f64 + 1.0);
    }
    c
}

/// `ψ_j(q) = Σ_{m≥1} binom(-j,m) q^{m/n-1}/Γ(m/n)`, the Borel transform of `(1+t)^{-j} - 1`.
pub fn theta_borel(j: u32, n: u32, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("Borel transform of the forcing needs q > 0, got {q}")));
    }
    if n == 1 {
        return Ok(theta_borel_n1(j, q));
    }
    if q <= SERIES_Q_MAX {
        if let Some(v) = theta_borel_series(j, n, q) {
            return Ok(v);
        }
    }
    Ok(theta_borel_cut(j, n, q))
}

fn theta_borel_series(j: u32, n: u32, q: f64) -> Option<f64> {
    let nf = n as f64;
    let lq = q.ln();
    let (mut sum, mut comp, mut big) = (0.0f64, 0.0f64, 0.0f64);
    let mut ln_binom = 0.0; // ln C(j+m-1, m)
    for m in 1..2000usize {
        ln_binom += ((j as f64 + m as f64 - 1.0) / m as f64).ln();
        let mf = m as f64;
        let mag = (ln_binom + (mf / nf - 1.0) * lq - ln_gamma(mf / nf)).exp();
        let t = if m % 2 == 1 { -mag } else { mag };
        big = big.max(mag);
        let y = t - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        if m > 4 && mf / nf > q + 2.0 && mag <= 1e-17 * sum.abs().max(1e-300) {
            return if big > 1e8 * sum.abs() { None } else { Some(sum) };
        }
    }
    None
}

/// For `n = 1`, `(τ/(τ+1))^j - 1 = Σ_{i≥1} C(j,i)(-1)^i (τ+1)^{-i}` inverts term by term.
fn theta_borel_n1(j: u32, q: f64) -> f64 {
    let (mut sum, mut binom, mut pow) = (0.0, 1.0, 1.0);
    for i in 1..=j {
        binom *= (j - i + 1) as f64 / i as f64;
        if i > 1 {
            pow *= q / (i - 1) as f64;
        }
        sum += if i % 2 == 1 { -binom * pow } else { binom * pow };
    }
    sum * (-q).exp()
}

/// `(1/π)∫₀^∞ e^{-qr} Im[(1 + r^{-1/n} e^{iπ/n})^{-j}] dr` along the cut (`n ≥ 2`).
fn theta_borel_cut(j: u32, n: u32, q: f64) -> f64 {
    use quadrature::double_exponential::integrate;
    let nf = n as f64;
    let rot = C64::from_polar(1.0, PI / nf);
    // r = s/q; the integrand is ~ s^{j/n} at 0 and decays like e^{-s}
    let f = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let z = C64::new(1.0, 0.0) + rot * (s / q).powf(-1.0 / nf);
        (-s).exp() * z.powi(-(j as i32)).im
    };
    integrate(f, 0.0, 80.0, 1e-15).integral / (PI * q)
}
