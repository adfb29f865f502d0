//! Run configuration for the command-line front end.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::z_grid;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::hierarchy::HierarchyPolynomial;
use crate::lattice::{Boundary, JacobiWindow, WindowRecord};
use crate::weyl::HalfPlanePoint;

/// Where the initial operator comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// A window record in its own file, relative to the config file.
    File { path: PathBuf },
    Inline(WindowRecord),
    Free { sites: usize, boundary: Boundary },
    Bump {
        buffer: usize,
        #[serde(default = "default_bump")]
        height: f64,
    },
    /// Seeded from the run's `seed`.
    Random {
        sites: usize,
        #[serde(default = "default_periodic")]
        boundary: Boundary,
    },
}

fn default_bump() -> f64 {
    0.5
}

fn default_periodic() -> Boundary {
    Boundary::Periodic
}

impl OperatorSpec {
    pub fn build(&self, base: &Path, seed: u64) -> Result<JacobiWindow> {
        match self {
            OperatorSpec::File { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Config(format!("cannot read operator file {}: {e}", full.display())))?;
                JacobiWindow::from_toml(&text)
            }
            OperatorSpec::Inline(rec) => JacobiWindow::try_from(rec.clone()),
            OperatorSpec::Free { sites, boundary } => JacobiWindow::free(*sites, *boundary),
            OperatorSpec::Bump { buffer, height } => fixtures::bump_window(*buffer, *height),
            OperatorSpec::Random { sites, boundary } => fixtures::random_window(*sites, *boundary, seed),
        }
    }
}

/// How the Lax side's coefficients relate to the cocycle side's.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaxAlignment {
    #[default]
    Aligned,
    /// Lax flow driven by `p_d, ..., p_1`; a negative control.
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Master,
    Curvature,
    Cocycle,
    Shiftcomm,
    Pq,
    Vanishing,
    Mfunc,
    Equivalence,
    Spectrum,
}

/// Spectral parameters: explicit `points = [[re, im], ...]` or an arc of
/// `count` points on `|z| = radius` with `Im z >= min_imag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGridSpec {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_min_imag")]
    pub min_imag: f64,
    #[serde(default)]
    pub points: Option<Vec<[f64; 2]>>,
}

fn default_radius() -> f64 {
    3.0
}

fn default_count() -> usize {
    8
}

fn default_min_imag() -> f64 {
    0.5
}

impl Default for ZGridSpec {
    fn default() -> Self {
        ZGridSpec {
            radius: default_radius(),
            count: default_count(),
            min_imag: default_min_imag(),
            points: None,
        }
    }
}

impl ZGridSpec {
    pub fn points(&self) -> Result<Vec<HalfPlanePoint>> {
        let zs = match &self.points {
            Some(p) => p.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            None => {
                if !(self.radius > 0.0 && self.min_imag > 0.0 && self.min_imag <= self.radius) {
                    return Err(Error::Config(
                        "zgrid needs radius > 0 and 0 < min_imag <= radius".into(),
                    ));
                }
                z_grid(self.radius, self.count, self.min_imag)
            }
        };
        zs.into_iter()
            .map(|z| HalfPlanePoint::new(z).map_err(|_| Error::Config(format!("zgrid point {z} has Im z <= 0"))))
            .collect()
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub operator: OperatorSpec,
    pub coeffs: HierarchyPolynomial,
    #[serde(default)]
    pub lax_alignment: LaxAlignment,
    pub t: f64,
    pub dt: f64,
    #[serde(default)]
    pub site: isize,
    #[serde(default)]
    pub checks: BTreeSet<CheckKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub zgrid: ZGridSpec,
    /// Sample times for m-function sweeps; defaults to `[0, t]`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Directory that relative operator paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("field `dt` must be positive, got {}", self.dt)));
        }
        if !self.t.is_finite() {
            return Err(Error::Config(format!("field `t` must be finite, got {}", self.t)));
        }
        if let Some(times) = &self.times {
            if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(t >= 0.0)) {
                return Err(Error::Config("field `times` must be nonnegative and ascending".into()));
            }
        }
        self.zgrid.points()?;
        Ok(())
    }

    pub fn window(&self) -> Result<JacobiWindow> {
        self.operator.build(&self.base_dir, self.seed)
    }

    /// The polynomial driving the Lax flow.
    pub fn lax_poly(&self) -> Result<HierarchyPolynomial> {
        match self.lax_alignment {
            LaxAlignment::Aligned => Ok(self.coeffs.clone()),
            LaxAlignment::Reversed => self.coeffs.reversed(),
        }
    }

    /// The polynomial `B` is built from.
    pub fn cocycle_poly(&self) -> &HierarchyPolynomial {
        &self.coeffs
    }

    pub fn sample_times(&self) -> Vec<f64> {
        self.times.clone().unwrap_or_else(|| vec![0.0, self.t])
    }
}
