//! Tensor-product quadrature rules on the unit square.

use std::fmt;
use std::str::FromStr;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    /// Equispaced nodes `i/n` with weight `1/n`; spectrally accurate for periodic integrands.
    UniformTrapezoid,
    GaussLegendre,
}

impl fmt::Display for QuadratureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuadratureScheme::UniformTrapezoid => "uniform-trapezoid",
            QuadratureScheme::GaussLegendre => "gauss-legendre",
        })
    }
}

impl FromStr for QuadratureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-trapezoid" | "trapezoid" => Ok(QuadratureScheme::UniformTrapezoid),
            "gauss-legendre" | "gl" => Ok(QuadratureScheme::GaussLegendre),
            other => Err(Error::Domain(format!("unknown quadrature scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureSpec {
    nodes_per_axis: usize,
    scheme: QuadratureScheme,
}

impl QuadratureSpec {
    pub const MIN_NODES: usize = 8;

    pub fn new(nodes_per_axis: usize, scheme: QuadratureScheme) -> Result<Self> {
        if nodes_per_axis < Self::MIN_NODES {
            return Err(Error::Domain(format!(
                "quadrature needs at least {} nodes per axis, got {nodes_per_axis}",
                Self::MIN_NODES
            )));
        }
        Ok(Self { nodes_per_axis, scheme })
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn refined(&self) -> Self {
        Self { nodes_per_axis: 2 * self.nodes_per_axis, scheme: self.scheme }
    }

    /// One-dimensional rule on `[0, 1]` as `(node, weight)` pairs.
    pub fn rule(&self) -> Vec<(f64, f64)> {
        let n = self.nodes_per_axis;
        match self.scheme {
            QuadratureScheme::UniformTrapezoid => (0..n).map(|i| (i as f64 / n as f64, 1.0 / n as f64)).collect(),
            QuadratureScheme::GaussLegendre => {
                let gl = GaussLegendre::new(n).expect("node count checked at construction");
                let mut pairs: Vec<(f64, f64)> =
                    gl.as_node_weight_pairs().iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                pairs
            }
        }
    }

    /// Tensor-product rule on the unit square as `(x, y, weight)`, x-major.
    pub fn square_rule(&self) -> Vec<(f64, f64, f64)> {
        let r = self.rule();
        let mut out = Vec::with_capacity(r.len() * r.len());
        for &(x, wx) in &r {
            for &(y, wy) in &r {
                out.push((x, y, wx * wy));
            }
        }
        out
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes_per_axis: 64, scheme: QuadratureScheme::GaussLegendre }
    }
}
