//! Fourier-coefficient vector fields on the cube `[-N, N]^3`.
//!
//! Coefficients follow `v(x) = Σ_k v̂(k) e^{ik·x}` on the `2π`-periodic torus.
//! Storage is lexicographic in `(k1, k2, k3)` with `k3` fastest.

use crate::error::{Error, Result};
use crate::fft::{fft_friendly, Fft3};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavevectorGrid {
    n: usize,
    nu: f64,
}

impl WavevectorGrid {
    pub fn new(n: usize, nu: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Config("grid half-width N must be >= 1".into()));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Config(format!("viscosity must be positive, got {nu}")));
        }
        Ok(WavevectorGrid { n, nu })
    }

    pub fn half_width(&self) -> usize {
        self.n
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        let s = self.side();
        s * s * s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k: [i32; 3]) -> Option<usize> {
        let n = self.n as i32;
        if k.iter().any(|&c| c < -n || c > n) {
            return None;
        }
        let s = self.side();
        Some((((k[0] + n) as usize) * s + (k[1] + n) as usize) * s + (k[2] + n) as usize)
    }

    pub fn wavevector(&self, idx: usize) -> [i32; 3] {
        let s = self.side();
        let n = self.n as i32;
        [
            (idx / (s * s)) as i32 - n,
            ((idx / s) % s) as i32 - n,
            (idx % s) as i32 - n,
        ]
    }

    pub fn ksq(&self, idx: usize) -> u32 {
        let k = self.wavevector(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as u32
    }

    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    /// Index of `-k`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    /// Largest `|k|^2` on the grid.
    pub fn max_ksq(&self) -> u32 {
        3 * (self.n * self.n) as u32
    }

    pub fn check_same(&self, other: &WavevectorGrid) -> Result<()> {
        if self.n != other.n || self.nu != other.nu {
            return Err(Error::GridMismatch(format!(
                "N={} nu={} vs N={} nu={}",
                self.n, self.nu, other.n, other.nu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FieldFlags {
    pub real: bool,
    pub solenoidal: bool,
}

impl FieldFlags {
    pub const REAL_SOLENOIDAL: FieldFlags = FieldFlags { real: true, solenoidal: true };

    pub fn bits(&self) -> u32 {
        (self.real as u32) | ((self.solenoidal as u32) << 1)
    }

    pub fn from_bits(b: u32) -> Self {
        FieldFlags { real: b & 1 != 0, solenoidal: b & 2 != 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    grid: WavevectorGrid,
    coeffs: Vec<[C64; 3]>,
    pub flags: FieldFlags,
}

impl SpectralVectorField {
    pub fn zeros(grid: WavevectorGrid) -> Self {
        SpectralVectorField {
            grid,
            coeffs: vec![[ZERO; 3]; grid.len()],
            flags: FieldFlags::REAL_SOLENOIDAL,
        }
    }

    pub fn from_coeffs(grid: WavevectorGrid, coeffs: Vec<[C64; 3]>, flags: FieldFlags) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(SpectralVectorField { grid, coeffs, flags })
    }

    pub fn grid(&self) -> &WavevectorGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[[C64; 3]] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [[C64; 3]] {
        &mut self.coeffs
    }

    pub fn get(&self, k: [i32; 3]) -> [C64; 3] {
        self.grid.index(k).map(|i| self.coeffs[i]).unwrap_or([ZERO; 3])
    }

    pub fn set(&mut self, k: [i32; 3], v: [C64; 3]) {
        let i = self.grid.index(k).expect("wavevector outside grid");
        self.coeffs[i] = v;
    }

    pub fn component(&self, j: usize) -> Vec<C64> {
        self.coeffs.iter().map(|c| c[j]).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SpectralVectorField) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for j in 0..3 {
                x[j] += y[j] * a;
            }
        }
        self.flags.real &= other.flags.real;
        self.flags.solenoidal &= other.flags.solenoidal;
    }

    pub fn sub(&self, other: &SpectralVectorField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &SpectralVectorField) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// `Σ_k |k|^j |f(k)|` with Euclidean vector magnitude.
    pub fn l1_norm_weighted(&self, j: u32) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m = (c[0].norm_sqr() + c[1].norm_sqr() + c[2].norm_sqr()).sqrt();
                if m == 0.0 {
                    0.0
                } else {
                    (self.grid.ksq(i) as f64).sqrt().powi(j as i32) * m
                }
            })
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm_weighted(0)
    }

    /// `Σ_k |f(k)|^2`
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max_k |k·f(k)| / max(1, max|f|)`
    pub fn max_divergence(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavevector(i);
            let d = c[0] * k[0] as f64 + c[1] * k[1] as f64 + c[2] * k[2] as f64;
            worst = worst.max(d.norm());
        }
        worst / self.max_abs().max(1.0)
    }

    /// `max_k |f(-k) - conj f(k)| / max(1, max|f|)`
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let m = &self.coeffs[self.grid.neg_index(i)];
            for j in 0..3 {
                worst = worst.max((m[j] - c[j].conj()).norm());
            }
        }
        worst / self.max_abs().max(1.0)
    }

    /// Replace by the Hermitian part `(f(k) + conj f(-k))/2`.
    pub fn symmetrize(&mut self) {
        let len = self.coeffs.len();
        for i in 0..len / 2 + 1 {
            let ni = len - 1 - i;
            for j in 0..3 {
                let a = 0.5 * (self.coeffs[i][j] + self.coeffs[ni][j].conj());
                self.coeffs[i][j] = a;
                self.coeffs[ni][j] = a.conj();
            }
        }
        self.flags.real = true;
    }

    pub fn pin_mean(&mut self) {
        let z = self.grid.zero_index();
        self.coeffs[z] = [ZERO; 3];
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarModeField {
    grid: WavevectorGrid,
    values: Vec<C64>,
}

impl ScalarModeField {
    pub fn zeros(grid: WavevectorGrid) -> Self {
        ScalarModeField { grid, values: vec![ZERO; grid.len()] }
    }

    pub fn from_values(grid: WavevectorGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("scalar field length".into()));
        }
        if values.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("non-finite value".into()));
        }
        Ok(ScalarModeField { grid, values })
    }

    /// `|k|^2` per mode.
    pub fn ksq(grid: WavevectorGrid) -> Self {
        let values = (0..grid.len()).map(|i| C64::new(grid.ksq(i) as f64, 0.0)).collect();
        ScalarModeField { grid, values }
    }

    pub fn grid(&self) -> &WavevectorGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn get(&self, k: [i32; 3]) -> C64 {
        self.grid.index(k).map(|i| self.values[i]).unwrap_or(ZERO)
    }

    pub fn set(&mut self, k: [i32; 3], v: C64) {
        let i = self.grid.index(k).expect("wavevector outside grid");
        self.values[i] = v;
    }

    pub fn l1_norm_weighted(&self, j: u32) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.grid.ksq(i) as f64).sqrt().powi(j as i32) * v.norm())
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm_weighted(0)
    }
}

/// `P_k f = f - k (k·f)/|k|^2`, with the `k = 0` mode set to zero.
pub fn hodge_project(f: &SpectralVectorField) -> SpectralVectorField {
    let mut out = f.clone();
    project_in_place(&mut out);
    out
}

pub(crate) fn project_in_place(f: &mut SpectralVectorField) {
    let grid = f.grid;
    for (i, c) in f.coeffs.iter_mut().enumerate() {
        let k = grid.wavevector(i);
        let ksq = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        if ksq == 0.0 {
            *c = [ZERO; 3];
            continue;
        }
        let kf = (c[0] * k[0] as f64 + c[1] * k[1] as f64 + c[2] * k[2] as f64) / ksq;
        for j in 0..3 {
            c[j] -= kf * k[j] as f64;
        }
    }
    f.flags.solenoidal = true;
}

/// Zero-padded transform machinery shared by all convolutions.
///
/// The padded grid has `M >= 3N + 1` points per axis, which removes aliasing
/// from products of two fields supported on `[-N, N]^3`.
#[derive(Debug)]
pub struct SpectralTransform {
    grid: WavevectorGrid,
    fft: Fft3,
    /// padded-grid offset of every Galerkin mode
    slots: Vec<usize>,
}

impl SpectralTransform {
    pub fn new(grid: WavevectorGrid) -> Self {
        let m = fft_friendly(3 * grid.half_width() + 1);
        Self::with_size(grid, m)
    }

    /// Transform on an `m^3` grid; `m >= 2N + 1` keeps single fields exact.
    pub fn with_size(grid: WavevectorGrid, m: usize) -> Self {
        assert!(m >= grid.side());
        let wrap = |c: i32| c.rem_euclid(m as i32) as usize;
        let slots = (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                (wrap(k[0]) * m + wrap(k[1])) * m + wrap(k[2])
            })
            .collect();
        SpectralTransform { grid, fft: Fft3::new(m), slots }
    }

    pub fn grid(&self) -> &WavevectorGrid {
        &self.grid
    }

    pub fn padded_size(&self) -> usize {
        self.fft.size()
    }

    pub fn padded_len(&self) -> usize {
        let m = self.fft.size();
        m * m * m
    }

    /// Complex physical samples of one scalar coefficient array.
    pub fn to_physical(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut buf = vec![ZERO; self.padded_len()];
        for (c, &s) in coeffs.iter().zip(&self.slots) {
            buf[s] = *c;
        }
        self.fft.process(&mut buf, true);
        buf
    }

    /// Galerkin coefficients of complex physical samples.
    pub fn to_spectral(&self, mut samples: Vec<C64>) -> Vec<C64> {
        self.fft.process(&mut samples, false);
        let scale = 1.0 / self.padded_len() as f64;
        self.slots.iter().map(|&s| samples[s] * scale).collect()
    }

    /// Real physical samples of two Hermitian coefficient arrays with one transform.
    pub fn to_physical_real_pair(&self, a: &[C64], b: &[C64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf = vec![ZERO; self.padded_len()];
        for ((x, y), &s) in a.iter().zip(b).zip(&self.slots) {
            buf[s] = x + C64::i() * y;
        }
        self.fft.process(&mut buf, true);
        (buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect())
    }

    /// Galerkin coefficients of two real sample arrays with one transform.
    pub fn to_spectral_real_pair(&self, x: &[f64], y: &[f64]) -> (Vec<C64>, Vec<C64>) {
        let m = self.padded_size();
        let mut buf: Vec<C64> = x.iter().zip(y).map(|(&a, &b)| C64::new(a, b)).collect();
        self.fft.process(&mut buf, false);
        let scale = 1.0 / self.padded_len() as f64;
        let wrap = |c: i32| c.rem_euclid(m as i32) as usize;
        let mut out_a = Vec::with_capacity(self.slots.len());
        let mut out_b = Vec::with_capacity(self.slots.len());
        for i in 0..self.grid.len() {
            let k = self.grid.wavevector(i);
            let s = self.slots[i];
            let ns = (wrap(-k[0]) * m + wrap(-k[1])) * m + wrap(-k[2]);
            let z = buf[s];
            let zn = buf[ns].conj();
            out_a.push((z + zn) * (0.5 * scale));
            out_b.push((z - zn) * C64::new(0.0, -0.5 * scale));
        }
        (out_a, out_b)
    }

    /// Real samples of the three components of a Hermitian field.
    pub fn field_to_physical(&self, f: &SpectralVectorField) -> [Vec<f64>; 3] {
        let (u0, u1) = self.to_physical_real_pair(&f.component(0), &f.component(1));
        let zeros = vec![ZERO; self.grid.len()];
        let (u2, _) = self.to_physical_real_pair(&f.component(2), &zeros);
        [u0, u1, u2]
    }

    /// `-i P_k[k_j T̂_jl(k)]` from the six physical components of a symmetric tensor
    /// ordered `(11, 22, 33, 12, 13, 23)`.
    pub fn tensor_divergence(&self, t: &[Vec<f64>; 6]) -> SpectralVectorField {
        let (t11, t22) = self.to_spectral_real_pair(&t[0], &t[1]);
        let (t33, t12) = self.to_spectral_real_pair(&t[2], &t[3]);
        let (t13, t23) = self.to_spectral_real_pair(&t[4], &t[5]);
        let mut out = SpectralVectorField::zeros(self.grid);
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let k = self.grid.wavevector(i);
            let (k1, k2, k3) = (k[0] as f64, k[1] as f64, k[2] as f64);
            let d = [
                k1 * t11[i] + k2 * t12[i] + k3 * t13[i],
                k1 * t12[i] + k2 * t22[i] + k3 * t23[i],
                k1 * t13[i] + k2 * t23[i] + k3 * t33[i],
            ];
            for j in 0..3 {
                c[j] = C64::new(d[j].im, -d[j].re);
            }
        }
        project_in_place(&mut out);
        out
    }
}

/// Fourier convolution of two scalar mode fields, truncated to the Galerkin cube.
pub fn convolve_scalar(a: &ScalarModeField, b: &ScalarModeField) -> Result<ScalarModeField> {
    a.grid.check_same(&b.grid)?;
    let tr = SpectralTransform::new(a.grid);
    let pa = tr.to_physical(&a.values);
    let pb = tr.to_physical(&b.values);
    let prod = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    let mut values = tr.to_spectral(prod);
    values[a.grid.zero_index()] = ZERO;
    Ok(ScalarModeField { grid: a.grid, values })
}

/// Componentwise convolution `(â_j *̂ b̂_j)(k)` of two vector fields.
pub fn convolve(a: &SpectralVectorField, b: &SpectralVectorField) -> Result<SpectralVectorField> {
    a.grid.check_same(&b.grid)?;
    let tr = SpectralTransform::new(a.grid);
    let mut out = SpectralVectorField::zeros(a.grid);
    for j in 0..3 {
        let pa = tr.to_physical(&a.component(j));
        let pb = tr.to_physical(&b.component(j));
        let v = tr.to_spectral(pa.iter().zip(&pb).map(|(x, y)| x * y).collect());
        for (c, x) in out.coeffs.iter_mut().zip(v) {
            c[j] = x;
        }
    }
    out.pin_mean();
    out.flags = FieldFlags { real: a.flags.real && b.flags.real, solenoidal: false };
    Ok(out)
}

/// `-i k_j P_k[û_j *̂ ŵ]`
pub fn nonlinear_rhs(u: &SpectralVectorField, w: &SpectralVectorField) -> Result<SpectralVectorField> {
    let tr = SpectralTransform::new(u.grid);
    nonlinear_rhs_with(&tr, u, w)
}

pub(crate) fn nonlinear_rhs_with(
    tr: &SpectralTransform,
    u: &SpectralVectorField,
    w: &SpectralVectorField,
) -> Result<SpectralVectorField> {
    u.grid.check_same(&w.grid)?;
    u.grid.check_same(&tr.grid)?;
    let grid = u.grid;
    let pu: Vec<Vec<C64>> = (0..3).map(|j| tr.to_physical(&u.component(j))).collect();
    let pw: Vec<Vec<C64>> = (0..3).map(|j| tr.to_physical(&w.component(j))).collect();
    let mut out = SpectralVectorField::zeros(grid);
    for l in 0..3 {
        // Σ_j ∂_j (u_j w_l) in spectral form
        let mut acc = vec![ZERO; grid.len()];
        for j in 0..3 {
            let t = tr.to_spectral(pu[j].iter().zip(&pw[l]).map(|(x, y)| x * y).collect());
            for (i, a) in acc.iter_mut().enumerate() {
                let k = grid.wavevector(i);
                *a += t[i] * k[j] as f64;
            }
        }
        for (c, a) in out.coeffs.iter_mut().zip(acc) {
            c[l] = C64::new(a.im, -a.re);
        }
    }
    project_in_place(&mut out);
    out.flags.real = u.flags.real && w.flags.real;
    Ok(out)
}

/// `v̂₁ = f̂ - ν|k|² v̂₀ - i k_j P_k[v̂_{0,j} *̂ v̂₀]`
pub fn v1_field(v0: &SpectralVectorField, f: &SpectralVectorField) -> Result<SpectralVectorField> {
    v0.grid.check_same(&f.grid)?;
    let grid = v0.grid;
    let mut out = nonlinear_rhs(v0, v0)?;
    let nu = grid.nu();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        let lam = nu * grid.ksq(i) as f64;
        for j in 0..3 {
            c[j] += f.coeffs[i][j] - v0.coeffs[i][j] * lam;
        }
    }
    out.pin_mean();
    out.flags = FieldFlags {
        real: v0.flags.real && f.flags.real,
        solenoidal: v0.flags.solenoidal && f.flags.solenoidal,
    };
    Ok(out)
}

#[derive(Clone, Copy)]
enum Trig {
    Sin(i32),
    Cos(i32),
}

impl Trig {
    fn modes(self) -> [(i32, C64); 2] {
        match self {
            Trig::Sin(a) => [(a, C64::new(0.0, -0.5)), (-a, C64::new(0.0, 0.5))],
            Trig::Cos(a) => [(a, C64::new(0.5, 0.0)), (-a, C64::new(0.5, 0.0))],
        }
    }
}

fn add_product(f: &mut SpectralVectorField, comp: usize, factors: [Trig; 3], sign: f64) {
    for (a, ca) in factors[0].modes() {
        for (b, cb) in factors[1].modes() {
            for (c, cc) in factors[2].modes() {
                let i = f.grid.index([a, b, c]).expect("mode in range");
                f.coeffs[i][comp] += ca * cb * cc * sign;
            }
        }
    }
}

/// Kida's symmetric initial field.
pub fn kida_initial(grid: WavevectorGrid) -> Result<SpectralVectorField> {
    if grid.half_width() < 3 {
        return Err(Error::Config("Kida field needs N >= 3".into()));
    }
    use Trig::{Cos, Sin};
    let mut f = SpectralVectorField::zeros(grid);
    // v1 = sin x1 (cos 3x2 cos x3 - cos x2 cos 3x3) and cyclic shifts
    add_product(&mut f, 0, [Sin(1), Cos(3), Cos(1)], 1.0);
    add_product(&mut f, 0, [Sin(1), Cos(1), Cos(3)], -1.0);
    add_product(&mut f, 1, [Cos(1), Sin(1), Cos(3)], 1.0);
    add_product(&mut f, 1, [Cos(3), Sin(1), Cos(1)], -1.0);
    add_product(&mut f, 2, [Cos(3), Cos(1), Sin(1)], 1.0);
    add_product(&mut f, 2, [Cos(1), Cos(3), Sin(1)], -1.0);
    f.flags = FieldFlags::REAL_SOLENOIDAL;
    Ok(f)
}
