//! The entire functions `F` and `G` of the Borel kernel, the order-one Bessel
//! pair, and gamma-function helpers.
//!
//! ```text
//! F(μ) = Σ_j (-1)^j μ^j / (j! Γ((j+1)/n))        G(μ) = -Σ_{j≥1} (-1)^j μ^j / (j! Γ(j/n))
//! ```
//!
//! For `n = 2` the series is replaced above `crossover_mu` by the large-`μ`
//! expansions in `z = 3·2^{-2/3} μ^{2/3} e^{iπ/3}`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const DEFAULT_CROSSOVER_N2: f64 = 14.0;
pub const DEFAULT_ASYMPTOTIC_TERMS: usize = 25;
pub const DEFAULT_SERIES_TERMS: usize = 400;

/// Largest term allowed relative to `max(|sum|, envelope)` before the series is
/// declared unsafe.
const CANCELLATION_GUARD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Series,
    Asymptotic,
    Bessel,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Series => "series",
            Regime::Asymptotic => "asymptotic",
            Regime::Bessel => "bessel",
        }
    }
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Upper incomplete gamma `Γ(a, x)` for `a > 0`, `x ≥ 0`.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return gamma(a);
    }
    statrs::function::gamma::gamma_ur(a, x) * gamma(a)
}

/// Lower incomplete gamma `γ(a, x)` for `a > 0`, `x ≥ 0`.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(a, x) * gamma(a)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(a, x)
}

/// `(J₁(z), Y₁(z))` for `z > 0`.
pub fn bessel_kernel_pair(z: f64) -> Result<(f64, f64)> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("Bessel Y1 needs z > 0, got {z}")));
    }
    Ok((libm::j1(z), libm::y1(z)))
}

/// `a_0..a_{m_max}` of the `n = 2` expansion of `F`.
pub fn asymptotic_coeffs_a(m_max: usize) -> Vec<f64> {
    let mut a = vec![1.0, -1.0 / 12.0];
    for m in 2..=m_max {
        let mf = m as f64;
        let v = -(1.0 / (12.0 * mf))
            * ((12.0 * mf * mf - 12.0 * mf + 1.0) * a[m - 1]
                + (4.0 * mf.powi(3) - 12.0 * mf * mf + 9.0 * mf - 2.0) * a[m - 2]);
        a.push(v);
    }
    a.truncate(m_max + 1);
    a
}

/// `c_0..c_{m_max}` of the `n = 2` expansion of `G`.
pub fn asymptotic_coeffs_c(m_max: usize) -> Vec<f64> {
    let mut c = vec![1.0, 5.0 / 12.0, -35.0 / 288.0];
    for m in 3..=m_max {
        let mf = m as f64;
        let v = (1.0 / (24.0 * mf))
            * ((-48.0 * mf * mf + 60.0 * mf - 2.0) * c[m - 1]
                + (-32.0 * mf.powi(3) + 108.0 * mf * mf - 80.0 * mf + 9.0) * c[m - 2]
                + (-8.0 * mf.powi(4) + 52.0 * mf.powi(3) - 102.0 * mf * mf + 67.0 * mf - 14.0)
                    * c[m - 3]);
        c.push(v);
    }
    c.truncate(m_max + 1);
    c
}

/// Taylor coefficients `F_j` for `j = 0..len`.
fn f_taylor(n: u32, len: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut c = Vec::with_capacity(len);
    for j in 0..len {
        if j < n as usize {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            c.push(s / (gamma(j as f64 + 1.0) * gamma((j as f64 + 1.0) / nf)));
        } else {
            // Γ((j+1)/n) = ((j+1-n)/n) Γ((j+1-n)/n)
            let i = j - n as usize;
            let mut r = c[i];
            for t in (i + 1)..=j {
                r /= -(t as f64);
            }
            r /= (i as f64 + 1.0) / nf;
            c.push(r);
        }
    }
    c
}

/// Taylor coefficients `G_j`, index 0 unused (zero).
fn g_taylor(n: u32, len: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut c = vec![0.0; len];
    for j in 1..len {
        if j <= n as usize {
            let s = if j % 2 == 0 { -1.0 } else { 1.0 };
            c[j] = s / (gamma(j as f64 + 1.0) * gamma(j as f64 / nf));
        } else {
            let i = j - n as usize;
            let mut r = c[i];
            for t in (i + 1)..=j {
                r /= -(t as f64);
            }
            r /= i as f64 / nf;
            c[j] = r;
        }
    }
    c
}

#[derive(Debug, Clone)]
pub struct FGEvaluator {
    n: u32,
    series_terms_max: usize,
    asymptotic_terms: usize,
    crossover_mu: f64,
    coeffs_a: Vec<f64>,
    coeffs_c: Vec<f64>,
    f_coef: Vec<f64>,
    g_coef: Vec<f64>,
}

struct SeriesSum {
    value: f64,
    max_term: f64,
}

impl FGEvaluator {
    pub fn new(n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::Config("acceleration order n must be >= 1".into()));
        }
        let crossover = if n == 2 { DEFAULT_CROSSOVER_N2 } else { f64::INFINITY };
        Ok(FGEvaluator {
            n,
            series_terms_max: DEFAULT_SERIES_TERMS,
            asymptotic_terms: DEFAULT_ASYMPTOTIC_TERMS,
            crossover_mu: crossover,
            coeffs_a: asymptotic_coeffs_a(DEFAULT_ASYMPTOTIC_TERMS),
            coeffs_c: asymptotic_coeffs_c(DEFAULT_ASYMPTOTIC_TERMS),
            f_coef: f_taylor(n, DEFAULT_SERIES_TERMS + 4),
            g_coef: g_taylor(n, DEFAULT_SERIES_TERMS + 4),
        })
    }

    pub fn with_crossover(mut self, mu: f64) -> Self {
        self.crossover_mu = mu;
        self
    }

    pub fn with_asymptotic_terms(mut self, k: usize) -> Self {
        self.asymptotic_terms = k.max(2);
        self.coeffs_a = asymptotic_coeffs_a(self.asymptotic_terms);
        self.coeffs_c = asymptotic_coeffs_c(self.asymptotic_terms);
        self
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn crossover_mu(&self) -> f64 {
        self.crossover_mu
    }

    pub fn asymptotic_terms(&self) -> usize {
        self.asymptotic_terms
    }

    pub fn series_terms_max(&self) -> usize {
        self.series_terms_max
    }

    pub fn coeffs_a(&self) -> &[f64] {
        &self.coeffs_a
    }

    pub fn coeffs_c(&self) -> &[f64] {
        &self.coeffs_c
    }

    fn z(&self, mu: f64) -> C64 {
        let n = self.n as f64;
        let xi0 = (n + 1.0) * n.powf(-n / (n + 1.0));
        C64::from_polar(xi0 * mu.powf(n / (n + 1.0)), PI / (n + 1.0))
    }

    /// Modulus of the leading large-`μ` term of `F`.
    pub fn envelope_f(&self, mu: f64) -> f64 {
        let n = self.n as f64;
        if self.n == 1 {
            return (PI * PI * mu).sqrt().recip().sqrt().min(1.0);
        }
        (2.0 / (PI * (n + 1.0))).sqrt()
            * n.powf(1.5 / (n + 1.0))
            * mu.powf((n - 2.0) / (2.0 * (n + 1.0)))
            * (-self.z(mu).re).exp()
    }

    /// Modulus of the leading large-`μ` term of `G`.
    pub fn envelope_g(&self, mu: f64) -> f64 {
        let n = self.n as f64;
        if self.n == 1 {
            return (mu.sqrt() / PI).sqrt();
        }
        (2.0 / (PI * (n + 1.0))).sqrt()
            * n.powf(0.5 / (n + 1.0))
            * mu.powf(n / (2.0 * (n + 1.0)))
            * (-self.z(mu).re).exp()
    }

    /// Error scale used for relative comparisons: `max(|value|, envelope)`.
    pub fn scale_f(&self, mu: f64, value: f64) -> f64 {
        value.abs().max(self.envelope_f(mu))
    }

    pub fn scale_g(&self, mu: f64, value: f64) -> f64 {
        value.abs().max(self.envelope_g(mu))
    }

    fn sum(&self, coef: &[f64], mu: f64, first: usize, deriv: u32) -> Result<SeriesSum> {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut max_term = 0.0f64;
        let mut prev = f64::INFINITY;
        let mut power = 1.0f64;
        let d = deriv as usize;
        let start = first.max(d);
        for _ in 0..start - d {
            power *= mu;
        }
        for j in start..self.series_terms_max {
            let mut fall = 1.0;
            for t in 0..d {
                fall *= (j - t) as f64;
            }
            let term = coef[j] * fall * power;
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            let a = term.abs();
            max_term = max_term.max(a);
            if j > start + 2 && a <= prev && (a <= 1e-17 * sum.abs() || a <= 1e-22 * max_term || a == 0.0) {
                return Ok(SeriesSum { value: sum, max_term });
            }
            prev = a;
            power *= mu;
            if !power.is_finite() {
                break;
            }
        }
        Err(Error::NonConvergence(format!(
            "series terms still significant after {} terms at mu={mu}",
            self.series_terms_max
        )))
    }

    fn guard(&self, s: SeriesSum, env: f64, mu: f64) -> Result<f64> {
        if s.max_term > CANCELLATION_GUARD * s.value.abs().max(env) {
            return Err(Error::NonConvergence(format!(
                "cancellation: largest term {:.3e} vs result {:.3e} at mu={mu}",
                s.max_term, s.value
            )));
        }
        Ok(s.value)
    }

    pub fn f_series(&self, mu: f64) -> Result<f64> {
        check_mu(mu)?;
        let s = self.sum(&self.f_coef, mu, 0, 0)?;
        self.guard(s, self.envelope_f(mu), mu)
    }

    pub fn g_series(&self, mu: f64) -> Result<f64> {
        check_mu(mu)?;
        let s = self.sum(&self.g_coef, mu, 1, 0)?;
        self.guard(s, self.envelope_g(mu), mu)
    }

    /// Term-by-term derivative of the `F` series of order `deriv`.
    pub fn f_series_derivative(&self, mu: f64, deriv: u32) -> Result<f64> {
        check_mu(mu)?;
        Ok(self.sum(&self.f_coef, mu, 0, deriv)?.value)
    }

    /// `Σ_{m≤K} coef_m z^{-m}`, stopping once the terms start growing.
    ///
    /// The coefficients have isolated near-zeros, so growth is judged on the
    /// larger of two consecutive term magnitudes.
    fn asymptotic_sum(&self, coef: &[f64], z: C64) -> C64 {
        let w = z.inv();
        let mut sum = C64::new(coef[0], 0.0);
        let mut p = C64::new(1.0, 0.0);
        let mut last = 1.0f64;
        let mut pair_prev = f64::INFINITY;
        for &c in coef.iter().skip(1) {
            p *= w;
            let term = p * c;
            let a = term.norm();
            let pair = a.max(last);
            if pair > pair_prev {
                break;
            }
            sum += term;
            pair_prev = pair;
            last = a;
        }
        sum
    }

    fn check_asymptotic(&self, mu: f64) -> Result<()> {
        if self.n != 2 {
            return Err(Error::Unsupported(format!(
                "large-mu expansion only implemented for n = 2 (n = {})",
                self.n
            )));
        }
        if !(mu >= self.crossover_mu) {
            return Err(Error::Domain(format!(
                "mu = {mu} below crossover {}; use the series",
                self.crossover_mu
            )));
        }
        Ok(())
    }

    pub fn f_asymptotic(&self, mu: f64) -> Result<f64> {
        self.check_asymptotic(mu)?;
        Ok(self.f_asymptotic_unchecked(mu))
    }

    pub fn g_asymptotic(&self, mu: f64) -> Result<f64> {
        self.check_asymptotic(mu)?;
        Ok(self.g_asymptotic_unchecked(mu))
    }

    fn f_asymptotic_unchecked(&self, mu: f64) -> f64 {
        let z = self.z(mu);
        let s = self.asymptotic_sum(&self.coeffs_a, z);
        let v = C64::i() * (-z).exp() * s;
        2.0 / (3.0 * PI).sqrt() * v.im
    }

    fn g_asymptotic_unchecked(&self, mu: f64) -> f64 {
        let z = self.z(mu);
        let s = self.asymptotic_sum(&self.coeffs_c, z);
        let v = (-z + C64::new(0.0, PI / 6.0)).exp() * s;
        -(4.0 * mu).cbrt() / (3.0 * PI).sqrt() * v.im
    }

    pub fn regime(&self, mu: f64) -> Regime {
        if self.n == 1 {
            Regime::Bessel
        } else if mu >= self.crossover_mu {
            Regime::Asymptotic
        } else {
            Regime::Series
        }
    }

    pub fn eval_f(&self, mu: f64) -> Result<f64> {
        check_mu(mu)?;
        match self.regime(mu) {
            Regime::Bessel => Ok(libm::j0(2.0 * mu.sqrt())),
            Regime::Series => self.f_series(mu),
            Regime::Asymptotic => self.f_asymptotic(mu),
        }
    }

    pub fn eval_g(&self, mu: f64) -> Result<f64> {
        check_mu(mu)?;
        match self.regime(mu) {
            Regime::Bessel => {
                let s = mu.sqrt();
                Ok(s * libm::j1(2.0 * s))
            }
            Regime::Series => self.g_series(mu),
            Regime::Asymptotic => self.g_asymptotic(mu),
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite and >= 0, got {mu}")));
    }
    Ok(())
}

/// `F(μ)` by its power series.
pub fn f_series(mu: f64, n: u32) -> Result<f64> {
    FGEvaluator::new(n)?.f_series(mu)
}

/// `G(μ)` by its power series.
pub fn g_series(mu: f64, n: u32) -> Result<f64> {
    FGEvaluator::new(n)?.g_series(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        let e = FGEvaluator::new(2).unwrap();
        assert_eq!(e.f_series(0.0).unwrap(), 1.0 / PI.sqrt());
        assert!((e.f_series(0.0).unwrap() - 0.5641895835).abs() < 1e-10);
        assert_eq!(e.g_series(0.0).unwrap(), 0.0);
        for n in 1..6 {
            let e = FGEvaluator::new(n).unwrap();
            assert_eq!(e.f_series(0.0).unwrap(), 1.0 / gamma(1.0 / n as f64));
        }
    }

    #[test]
    fn recurrence_coefficients() {
        let a = asymptotic_coeffs_a(4);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], -1.0 / 12.0);
        assert!((a[2] - 25.0 / 288.0).abs() < 1e-16);
        let c = asymptotic_coeffs_c(4);
        assert_eq!(c[1], 5.0 / 12.0);
        assert_eq!(c[2], -35.0 / 288.0);
    }

    #[test]
    fn n1_series_matches_bessel() {
        let e = FGEvaluator::new(1).unwrap();
        for &mu in &[0.1, 1.0, 4.0, 9.0] {
            let s = e.f_series(mu).unwrap();
            assert!((s - e.eval_f(mu).unwrap()).abs() < 1e-12);
            let g = e.g_series(mu).unwrap();
            assert!((g - e.eval_g(mu).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn asymptotic_rejects_small_mu_and_other_n() {
        let e = FGEvaluator::new(2).unwrap();
        assert!(matches!(e.f_asymptotic(3.0), Err(Error::Domain(_))));
        let e3 = FGEvaluator::new(3).unwrap();
        assert!(matches!(e3.f_asymptotic(100.0), Err(Error::Unsupported(_))));
        assert!(e3.eval_f(500.0).is_err());
    }

    #[test]
    fn bessel_values() {
        let (j, y) = bessel_kernel_pair(1.0).unwrap();
        assert!((j - 0.4400505857).abs() < 1e-10);
        assert!((y + 0.7812128213).abs() < 1e-10);
        assert!(bessel_kernel_pair(0.0).is_err());
    }

    #[test]
    fn incomplete_gamma_limits() {
        assert!((upper_incomplete_gamma(0.75, 0.0) - 1.225416702).abs() < 1e-9);
        assert!(upper_incomplete_gamma(0.75, 800.0) < 1e-300);
        let a = 1.5;
        let x = 2.0;
        assert!((upper_incomplete_gamma(a, x) + lower_incomplete_gamma(a, x) - gamma(a)).abs() < 1e-14);
    }
}
