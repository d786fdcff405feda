//! Flat `key = value` run configuration.
//!
//! Keys: `problem` (kida, manufactured, file), `N`, `nu`, `n`, `delta`, `q0`,
//! `qm`, `m0`, `alpha0`, `output_dir`, `c4`, `c_m_table`, `v0_file`,
//! `forcing_file`. Blank lines and `#` comments are ignored.

use crate::error::{CliError, CliResult};
use crate::formats::Problem;
use borel_ns_core::marcher::MarchConfig;
use std::path::PathBuf;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub modes: usize,
    pub nu: f64,
    pub n: u32,
    pub delta: f64,
    pub q0: f64,
    pub qm: f64,
    pub m0: usize,
    pub alpha0: f64,
    pub output_dir: PathBuf,
    pub c4: f64,
    pub c_m_table: Option<PathBuf>,
    pub v0_file: Option<PathBuf>,
    pub forcing_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: Problem::Kida,
            modes: 8,
            nu: 0.1,
            n: 2,
            delta: 0.05,
            q0: 1.0,
            qm: 0.2,
            m0: 8,
            alpha0: 30.0,
            output_dir: PathBuf::from("out"),
            c4: 1.0,
            c_m_table: None,
            v0_file: None,
            forcing_file: None,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "problem" => {
                self.problem =
                    Problem::parse(value).ok_or_else(|| CliError::Config(format!("unknown problem {value:?}")))?
            }
            "N" => self.modes = num(key, value)?,
            "nu" => self.nu = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "q0" => self.q0 = num(key, value)?,
            "qm" => self.qm = num(key, value)?,
            "m0" => self.m0 = num(key, value)?,
            "alpha0" => self.alpha0 = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "c4" => self.c4 = num(key, value)?,
            "c_m_table" => self.c_m_table = Some(PathBuf::from(value)),
            "v0_file" => self.v0_file = Some(PathBuf::from(value)),
            "forcing_file" => self.forcing_file = Some(PathBuf::from(value)),
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a config text on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> CliResult<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut c = RunConfig::default();
        c.merge_text(text)?;
        Ok(c)
    }

    pub fn march_config(&self) -> MarchConfig {
        let mut m = MarchConfig::new(self.modes, self.nu, self.n, self.delta, self.q0);
        m.qm = self.qm;
        m.m0 = self.m0;
        m
    }

    pub fn validate(&self) -> CliResult<()> {
        self.march_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.alpha0 > 0.0) || !(self.c4 > 0.0) {
            return Err(CliError::Config("alpha0 and c4 must be positive".into()));
        }
        if self.problem == Problem::File && self.v0_file.is_none() {
            return Err(CliError::Config("problem = file needs v0_file".into()));
        }
        if self.problem != Problem::Kida && self.problem != Problem::File && self.forcing_file.is_some() {
            return Err(CliError::Config("forcing_file only applies to kida and file problems".into()));
        }
        if (self.problem == Problem::Kida || self.problem == Problem::Manufactured) && self.modes < 3 {
            return Err(CliError::Config("the Kida field needs N >= 3".into()));
        }
        Ok(())
    }

    /// Config echo, one `key = value` per line after a `#` version stamp; parses back.
    pub fn echo(&self) -> String {
        let mut s = format!("# borel-ns {VERSION}\nproblem = {}\n", self.problem.name());
        s += &format!(
            "N = {}\nnu = {}\nn = {}\ndelta = {}\nq0 = {}\nqm = {}\nm0 = {}\nalpha0 = {}\nc4 = {}\n",
            self.modes, self.nu, self.n, self.delta, self.q0, self.qm, self.m0, self.alpha0, self.c4
        );
        for (k, p) in [("c_m_table", &self.c_m_table), ("v0_file", &self.v0_file), ("forcing_file", &self.forcing_file)] {
            if let Some(p) = p {
                s += &format!("{k} = {}\n", p.display());
            }
        }
        s
    }
}
