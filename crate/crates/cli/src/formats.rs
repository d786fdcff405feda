//! Little-endian binary records and CSV exports.
//!
//! Field snapshot (`BNSF`): magic, version `u32`, `N u32`, flags `u32`, then the
//! `(2N+1)³` coefficients in lexicographic `k` order (`k₁` slowest), three
//! complex doubles `(re, im)` each. The viscosity is not part of the record.
//!
//! Trajectory (`BNST`): magic, version, problem tag `u32`, then the config
//! echo `N, n, m0, quadratic` as `u32` and `nu, delta, q0, qm` as `f64`,
//! followed by field records for `v₀`, the steady forcing, the rational
//! forcing parts (`u32` count, then `(j u32, field)` pairs), and the slices
//! `m = m_s..M` (`u32` count, then fields).
//!
//! Kernel cache (`BNSK`): magic, version, `n u32`, `nu f64`, `u32` count and
//! the `q` grid, `u32` count and the `|k|²` list, `u64` count and the table.

use crate::error::{CliError, CliResult};
use borel_ns_core::borel_kernel::KernelCache;
use borel_ns_core::forcing::Forcing;
use borel_ns_core::marcher::{BorelTrajectory, MarchConfig};
use borel_ns_core::spectral_field::{FieldFlags, SpectralVectorField, WavevectorGrid};
use num_complex::Complex64 as C64;
use std::fmt::Write as _;

pub const FORMAT_VERSION: u32 = 1;
pub const FIELD_MAGIC: &[u8; 4] = b"BNSF";
pub const TRAJECTORY_MAGIC: &[u8; 4] = b"BNST";
pub const KERNEL_MAGIC: &[u8; 4] = b"BNSK";

/// What produced a trajectory; synthesis uses it to find an exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    File,
    Kida,
    Manufactured,
}

impl Problem {
    pub fn tag(self) -> u32 {
        match self {
            Problem::File => 0,
            Problem::Kida => 1,
            Problem::Manufactured => 2,
        }
    }

    pub fn from_tag(t: u32) -> Option<Self> {
        match t {
            0 => Some(Problem::File),
            1 => Some(Problem::Kida),
            2 => Some(Problem::Manufactured),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::File => "file",
            Problem::Kida => "kida",
            Problem::Manufactured => "manufactured",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "file" => Some(Problem::File),
            "kida" => Some(Problem::Kida),
            "manufactured" => Some(Problem::Manufactured),
            _ => None,
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], what: &'a str) -> Self {
        Reader { buf, pos: 0, what }
    }

    fn fail(&self, reason: impl Into<String>) -> CliError {
        CliError::Format { path: self.what.to_string(), reason: reason.into() }
    }

    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.fail(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn magic(&mut self, m: &[u8; 4]) -> CliResult<()> {
        let got = self.take(4)?;
        if got != m {
            return Err(self.fail(format!("expected magic {:?}", String::from_utf8_lossy(m))));
        }
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(self.fail(format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn u32(&mut self) -> CliResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> CliResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> CliResult<()> {
        if self.pos != self.buf.len() {
            return Err(self.fail(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_field(out: &mut Vec<u8>, f: &SpectralVectorField) {
    out.extend_from_slice(FIELD_MAGIC);
    put_u32(out, FORMAT_VERSION);
    put_u32(out, f.grid().half_width() as u32);
    put_u32(out, f.flags.bits());
    for c in f.coeffs() {
        for z in c {
            put_f64(out, z.re);
            put_f64(out, z.im);
        }
    }
}

fn get_field(r: &mut Reader, nu: f64) -> CliResult<SpectralVectorField> {
    r.magic(FIELD_MAGIC)?;
    let n = r.u32()? as usize;
    let flags = FieldFlags::from_bits(r.u32()?);
    let grid = WavevectorGrid::new(n, nu).map_err(|e| r.fail(e.to_string()))?;
    let mut coeffs = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let mut c = [C64::new(0.0, 0.0); 3];
        for z in c.iter_mut() {
            *z = C64::new(r.f64()?, r.f64()?);
        }
        coeffs.push(c);
    }
    let f = SpectralVectorField::from_coeffs(grid, coeffs, flags).map_err(|e| r.fail(e.to_string()))?;
    // the stored flags are a promise; check it
    let scale = f.max_abs().max(1.0);
    if flags.real && f.hermitian_defect() > 1e-12 * scale {
        return Err(r.fail("field flagged real is not Hermitian"));
    }
    if flags.solenoidal && f.max_divergence() > 1e-12 * scale {
        return Err(r.fail("field flagged solenoidal has divergence"));
    }
    if f.get([0, 0, 0]).iter().any(|z| z.norm() != 0.0) {
        return Err(r.fail("field has a nonzero mean mode"));
    }
    Ok(f)
}

pub fn encode_field(f: &SpectralVectorField) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 48 * f.grid().len());
    put_field(&mut out, f);
    out
}

pub fn decode_field(bytes: &[u8], nu: f64, what: &str) -> CliResult<SpectralVectorField> {
    let mut r = Reader::new(bytes, what);
    let f = get_field(&mut r, nu)?;
    r.done()?;
    Ok(f)
}

/// `k1,k2,k3,re1,im1,re2,im2,re3,im3`, nonzero modes only.
pub fn field_csv(f: &SpectralVectorField) -> String {
    let mut s = String::from("k1,k2,k3,re1,im1,re2,im2,re3,im3\n");
    for (i, c) in f.coeffs().iter().enumerate() {
        if c.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let k = f.grid().wavevector(i);
        let _ = write!(s, "{},{},{}", k[0], k[1], k[2]);
        for z in c {
            let _ = write!(s, ",{:e},{:e}", z.re, z.im);
        }
        s.push('\n');
    }
    s
}

pub fn encode_trajectory(problem: Problem, traj: &BorelTrajectory) -> Vec<u8> {
    let cfg = traj.config();
    let mut out = Vec::new();
    out.extend_from_slice(TRAJECTORY_MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u32(&mut out, problem.tag());
    put_u32(&mut out, cfg.modes as u32);
    put_u32(&mut out, cfg.n);
    put_u32(&mut out, cfg.m0 as u32);
    put_u32(&mut out, cfg.quadratic as u32);
    for v in [cfg.nu, cfg.delta, cfg.q0, cfg.qm] {
        put_f64(&mut out, v);
    }
    put_field(&mut out, traj.v0());
    put_field(&mut out, traj.forcing().steady_part());
    put_u32(&mut out, traj.forcing().components().len() as u32);
    for (j, a) in traj.forcing().components() {
        put_u32(&mut out, *j);
        put_field(&mut out, a);
    }
    put_u32(&mut out, traj.slices().len() as u32);
    for s in traj.slices() {
        put_field(&mut out, s);
    }
    out
}

pub fn decode_trajectory(bytes: &[u8], what: &str) -> CliResult<(Problem, BorelTrajectory)> {
    let mut r = Reader::new(bytes, what);
    r.magic(TRAJECTORY_MAGIC)?;
    let problem = Problem::from_tag(r.u32()?).ok_or_else(|| r.fail("unknown problem tag"))?;
    let modes = r.u32()? as usize;
    let n = r.u32()?;
    let m0 = r.u32()? as usize;
    let quadratic = r.u32()? != 0;
    let nu = r.f64()?;
    let mut cfg = MarchConfig::new(modes, nu, n, r.f64()?, r.f64()?);
    cfg.qm = r.f64()?;
    cfg.m0 = m0;
    cfg.quadratic = quadratic;
    let v0 = get_field(&mut r, nu)?;
    let steady = get_field(&mut r, nu)?;
    let mut parts = Vec::new();
    for _ in 0..r.u32()? {
        let j = r.u32()?;
        parts.push((j, get_field(&mut r, nu)?));
    }
    let forcing = Forcing::rational(steady, parts).map_err(|e| r.fail(e.to_string()))?;
    let count = r.u32()? as usize;
    let mut slices = Vec::with_capacity(count);
    for _ in 0..count {
        slices.push(get_field(&mut r, nu)?);
    }
    r.done()?;
    let traj = BorelTrajectory::from_parts(cfg, v0, forcing, slices).map_err(|e| r.fail(e.to_string()))?;
    Ok((problem, traj))
}

pub fn encode_kernel_cache(c: &KernelCache) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(KERNEL_MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u32(&mut out, c.n());
    put_f64(&mut out, c.nu());
    put_u32(&mut out, c.qgrid().len() as u32);
    for &q in c.qgrid() {
        put_f64(&mut out, q);
    }
    put_u32(&mut out, c.ksq_values().len() as u32);
    for &k in c.ksq_values() {
        put_u32(&mut out, k);
    }
    out.extend_from_slice(&(c.table().len() as u64).to_le_bytes());
    for &v in c.table() {
        put_f64(&mut out, v);
    }
    out
}

pub fn decode_kernel_cache(bytes: &[u8], what: &str) -> CliResult<KernelCache> {
    let mut r = Reader::new(bytes, what);
    r.magic(KERNEL_MAGIC)?;
    let n = r.u32()?;
    let nu = r.f64()?;
    let qgrid = (0..r.u32()?).map(|_| r.f64()).collect::<CliResult<Vec<_>>>()?;
    let ksq = (0..r.u32()?).map(|_| r.u32()).collect::<CliResult<Vec<_>>>()?;
    let len = r.u64()?;
    let table = (0..len).map(|_| r.f64()).collect::<CliResult<Vec<_>>>()?;
    r.done()?;
    KernelCache::from_parts(n, nu, qgrid, ksq, table).map_err(|e| r.fail(e.to_string()))
}

/// CSV text with `#` comment lines first (config echo, version stamp).
pub fn csv_with_preamble(preamble: &str, header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for line in preamble.lines() {
        if !line.starts_with('#') {
            s.push_str("# ");
        }
        s.push_str(line);
        s.push('\n');
    }
    s.push_str(header);
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
