//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use borel_ns_core::spectral_field::{SpectralVectorField, WavevectorGrid};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// `∫₀^∞ x^p exp(-w(xⁿ + 1/x)) dx` for `Re w > 0` by the trapezoid rule in `y = ln x`.
pub fn laplace_type_integral(w: C64, n: u32, p: f64) -> C64 {
    let nf = n as f64;
    let f = |y: f64| -> C64 {
        let e = w * ((nf * y).exp() + (-y).exp());
        ((p + 1.0) * y - e).exp()
    };
    let decay = |y: f64| w.re * ((nf * y).exp() + (-y).exp()) - (p + 1.0) * y;
    let mut lo = 0.0;
    while decay(lo) < 60.0 {
        lo -= 0.25;
    }
    let mut hi = 0.0;
    while decay(hi) < 60.0 {
        hi += 0.25;
    }
    let h = 0.004;
    let steps = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / steps as f64;
    let mut s = C64::new(0.0, 0.0);
    for i in 0..=steps {
        let wgt = if i == 0 || i == steps { 0.5 } else { 1.0 };
        s += f(lo + i as f64 * h) * wgt;
    }
    s * h
}

/// `F(μ)` from the contour integral deformed onto the steepest-descent form.
pub fn f_contour(mu: f64, n: u32) -> f64 {
    let nf = n as f64;
    let w = C64::from_polar(mu.powf(nf / (nf + 1.0)), PI / (nf + 1.0));
    let pre = C64::from_polar(nf * mu.powf(1.0 - 2.0 / (nf + 1.0)), 2.0 * PI / (nf + 1.0));
    (pre * laplace_type_integral(w, n, nf - 2.0)).im / PI
}

/// `G(μ) = ∫₀^μ F`, written as the same kind of contour integral.
pub fn g_contour(mu: f64, n: u32) -> f64 {
    let nf = n as f64;
    let w = C64::from_polar(mu.powf(nf / (nf + 1.0)), PI / (nf + 1.0));
    let pre = C64::from_polar(nf * mu.powf(nf / (nf + 1.0)), PI / (nf + 1.0));
    -(pre * laplace_type_integral(w, n, nf - 1.0)).im / PI
}

/// Direct `O(N⁶)` convolution `Σ_{k'} a(k') b(k-k')` restricted to the grid.
pub fn direct_convolution(grid: WavevectorGrid, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.len() {
        if a[i] == C64::new(0.0, 0.0) {
            continue;
        }
        let k1 = grid.wavevector(i);
        for j in 0..grid.len() {
            let k2 = grid.wavevector(j);
            if let Some(t) = grid.index([k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2]]) {
                out[t] += a[i] * b[j];
            }
        }
    }
    out
}

/// `-i k_j P_k[u_j *̂ w]` by direct summation.
pub fn direct_nonlinear(u: &SpectralVectorField, w: &SpectralVectorField) -> Vec<[C64; 3]> {
    let grid = *u.grid();
    let mut t = vec![[C64::new(0.0, 0.0); 3]; grid.len()];
    for j in 0..3 {
        for l in 0..3 {
            let c = direct_convolution(grid, &u.component(j), &w.component(l));
            for (i, x) in c.into_iter().enumerate() {
                let k = grid.wavevector(i);
                t[i][l] += x * k[j] as f64 * C64::new(0.0, -1.0);
            }
        }
    }
    for (i, v) in t.iter_mut().enumerate() {
        let k = grid.wavevector(i);
        let ksq = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if ksq == 0.0 {
            *v = [C64::new(0.0, 0.0); 3];
            continue;
        }
        let kv = (v[0] * k[0] as f64 + v[1] * k[1] as f64 + v[2] * k[2] as f64) / ksq;
        for c in 0..3 {
            v[c] -= kv * k[c] as f64;
        }
    }
    t
}

/// Deterministic pseudo-random Hermitian, zero-mean field.
pub fn random_field(grid: WavevectorGrid, seed: u64, solenoidal: bool) -> SpectralVectorField {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut f = SpectralVectorField::zeros(grid);
    for c in f.coeffs_mut().iter_mut() {
        for x in c.iter_mut() {
            *x = C64::new(next(), next());
        }
    }
    f.symmetrize();
    f.pin_mean();
    if solenoidal {
        f = borel_ns_core::spectral_field::hodge_project(&f);
    }
    f
}

/// `𝒢` from the printed `s`-integral with the `μ^{1/2}F(μ)` integrand (tanh-sinh).
///
/// `s = 1 + σ`; the lower half uses `σ = wⁿ` and the upper half the distance to the
/// end point, so both algebraic end factors are computed without cancellation.
pub fn kernel_sform_oracle(n: u32, q: f64, qp: f64, lam: f64) -> f64 {
    use quadrature::double_exponential::integrate;
    let fg = borel_ns_core::special_functions::FGEvaluator::new(n).unwrap();
    let nf = n as f64;
    let gn = (qp / q).powf(1.0 / nf);
    let smax = 1.0 / gn - 1.0;
    let body = |sig: f64, rho: f64| {
        let a = -(-nf * sig.ln_1p()).exp_m1();
        let b = rho * gn;
        if a <= 0.0 || b <= 0.0 {
            return 0.0;
        }
        let mu = lam * q.powf(1.0 / nf) * b * a.powf(1.0 / nf);
        a.powf(0.5 / nf - 1.0) * b.powf(-0.5) * mu.sqrt() * fg.eval_f(mu).unwrap()
    };
    let h = 0.5 * smax;
    let left = integrate(
        |w: f64| {
            let sig = w.powi(n as i32);
            nf * w.powi(n as i32 - 1) * body(sig, smax - sig)
        },
        0.0,
        h.powf(1.0 / nf),
        1e-14,
    )
    .integral;
    let right = integrate(|rho| body(smax - rho, rho), 0.0, h, 1e-14).integral;
    gn / (lam.sqrt() * q.powf(1.0 - 0.5 / nf)) * (left + right)
}

/// `𝒢 = ∫_{γ^{1/n}}^1 (q - q's^{-n})^{1/n-1} f(λ(1-s)(q - q's^{-n})^{1/n}) ds` for any `f`.
pub fn kernel_gdefine_oracle<Fv: Fn(f64) -> f64>(n: u32, q: f64, qp: f64, lam: f64, f: Fv) -> f64 {
    use quadrature::double_exponential::integrate;
    let nf = n as f64;
    let s0 = (qp / q).powf(1.0 / nf);
    // s = s0 (1 + wⁿ): q - q's^{-n} = q(1 - (1 + wⁿ)^{-n})
    let wmax = (1.0 / s0 - 1.0).powf(1.0 / nf);
    integrate(
        |w: f64| {
            let wn = w.powi(n as i32);
            let s = s0 * (1.0 + wn);
            let x = q * -(-nf * wn.ln_1p()).exp_m1();
            if x <= 0.0 {
                // x^{1/n-1} wⁿ⁻¹ tends to a finite limit
                return s0 * nf * (q * nf).powf(1.0 / nf - 1.0) * f(0.0);
            }
            s0 * nf * w.powi(n as i32 - 1) * x.powf(1.0 / nf - 1.0) * f(lam * (1.0 - s) * x.powf(1.0 / nf))
        },
        0.0,
        wmax,
        1e-14,
    )
    .integral
}

/// Power series of `J₁` and `Y₁` (small argument).
pub fn bessel_series(z: f64) -> (f64, f64) {
    let euler = 0.577_215_664_901_532_9;
    let h = 0.5 * z;
    let mut j = 0.0;
    let mut tail = 0.0;
    let mut term = h; // (z/2)^{2k+1}/(k!(k+1)!)
    let mut harmonic = 0.0; // H_k
    for k in 0..30 {
        let kf = k as f64;
        if k > 0 {
            term *= -h * h / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        j += term;
        let psi_sum = (-euler + harmonic) + (-euler + harmonic + 1.0 / (kf + 1.0));
        tail += psi_sum * term;
    }
    let y = 2.0 / PI * j * h.ln() - 2.0 / (PI * z) - tail / PI;
    (j, y)
}
