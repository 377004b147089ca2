use std::path::PathBuf;

use clap::Args;
use nctorus_core::{Flux, ModularParameter, QuadratureScheme, QuadratureSpec, TruncationPolicy, VacuumAngles, C64};
use serde::Serialize;

use crate::CliError;

/// Parses `a+bi`, `a-bi`, `bi`, `i`, `-i` or a bare real.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number '{s}' (expected a+bi)");
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C64::new(num(&s)?, 0.0));
    };
    let unit = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => num(t),
        }
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    match split {
        Some(p) => Ok(C64::new(num(&body[..p])?, unit(&body[p..])?)),
        None => Ok(C64::new(0.0, unit(body)?)),
    }
}

pub fn parse_tau(s: &str) -> Result<ModularParameter, String> {
    let z = parse_complex(s)?;
    ModularParameter::from_complex(z).map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s}"))
    }
}

#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    #[arg(long = "M", default_value_t = 3)]
    pub m: u32,
    #[arg(long = "N", default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value = "0.3+1.1i", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: ModularParameter,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha2: f64,
    /// Truncation tolerance for theta series.
    #[arg(long, default_value = "1e-12", value_parser = parse_positive)]
    pub eps: f64,
    /// Sample points per cell axis.
    #[arg(long, default_value_t = 24)]
    pub grid: usize,
    /// Quadrature nodes per axis.
    #[arg(long, default_value_t = 64)]
    pub quad: usize,
    #[arg(long = "quad-scheme", default_value = "gauss-legendre")]
    pub quad_scheme: QuadratureScheme,
    /// Output directory; reports are also printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub tau: C64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub epsilon: f64,
    pub grid: usize,
    pub quad_nodes: usize,
    pub quad_scheme: QuadratureScheme,
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub flux: Flux,
    #[serde(skip)]
    pub tau_param: ModularParameter,
    #[serde(skip)]
    pub quad_spec: QuadratureSpec,
    #[serde(skip)]
    pub policy: TruncationPolicy,
}

impl RunConfig {
    pub fn angles(&self) -> VacuumAngles {
        VacuumAngles::new(self.alpha1, self.alpha2)
    }
}

impl TryFrom<&CommonArgs> for RunConfig {
    type Error = CliError;

    fn try_from(a: &CommonArgs) -> Result<Self, CliError> {
        let usage = |e: nctorus_core::Error| CliError::Usage(e.to_string());
        let flux = Flux::new(a.n, a.m).map_err(usage)?;
        let quad_spec = QuadratureSpec::new(a.quad, a.quad_scheme).map_err(usage)?;
        let policy = TruncationPolicy::with_epsilon(a.eps).map_err(usage)?;
        if !a.alpha1.is_finite() || !a.alpha2.is_finite() {
            return Err(CliError::Usage("vacuum angles must be finite".into()));
        }
        if a.grid < 2 {
            return Err(CliError::Usage("--grid must be at least 2".into()));
        }
        Ok(RunConfig {
            m: a.m,
            n: a.n,
            tau: a.tau.as_complex(),
            alpha1: a.alpha1,
            alpha2: a.alpha2,
            epsilon: a.eps,
            grid: a.grid,
            quad_nodes: a.quad,
            quad_scheme: a.quad_scheme,
            output_dir: a.out.clone(),
            flux,
            tau_param: a.tau,
            quad_spec,
            policy,
        })
    }
}

#[derive(Args, Clone, Debug)]
pub struct ThetaArgs {
    #[arg(long, default_value_t = 1)]
    pub level: u32,
    #[arg(long, default_value_t = 0)]
    pub residue: u32,
    #[arg(long, default_value = "0", value_parser = parse_complex, allow_hyphen_values = true)]
    pub z: C64,
    #[arg(long, default_value = "i", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: ModularParameter,
    #[arg(long, default_value = "1e-12", value_parser = parse_positive)]
    pub eps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct TauArgs {
    #[arg(long, default_value = "i", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: ModularParameter,
    #[arg(long, default_value = "1e-12", value_parser = parse_positive)]
    pub eps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_syntax() {
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("2i").unwrap(), C64::new(0.0, 2.0));
        assert_eq!(parse_complex("0.3+1.1i").unwrap(), C64::new(0.3, 1.1));
        assert_eq!(parse_complex("-0.5-i").unwrap(), C64::new(-0.5, -1.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), C64::new(1e-3, 20.0));
        assert_eq!(parse_complex("0").unwrap(), C64::new(0.0, 0.0));
        assert_eq!(parse_complex("1.5").unwrap(), C64::new(1.5, 0.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1+").is_err());
    }

    #[test]
    fn tau_must_be_in_upper_half_plane() {
        assert!(parse_tau("1").is_err());
        assert!(parse_tau("0.2-1i").is_err());
        assert!(parse_tau("i").is_ok());
    }
}
