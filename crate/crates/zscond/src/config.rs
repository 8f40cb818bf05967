//! Job configuration files (TOML).
//!
//! ```toml
//! anchors = [[-1.0, 1.0], [1.0, 1.0]]
//! connectivity = [[0, 0, 0], [0, 1, 1], [0, 1, 1]]   # optional, K_0 row/column first
//! arcs = [[[0.0, 0.0], [0.0, 1.0]]]                   # energy / verify candidate
//! field = [0.0, 0.0, 1.0]                             # t_1.. of Φ = Σ t_ℓ z^ℓ, default [1]
//! seed = 0
//! samples = 24
//! svg = true
//! grid_res = 512
//!
//! [tolerances]
//! boutroux = 1e-10
//! bc = 1e-8
//! traj = 1e-9
//! energy = 1e-6
//! dirichlet = 1e-2
//! s_property = 1e-5
//! schiffer = 1e-5
//!
//! [verify]
//! checks = ["boutroux", "intensity", "s_property", "schiffer", "jenkins", "candidate"]
//! tilt = [-15.0, 0.0, 15.0]        # optional energy probe over tilted segments (N = 1)
//!
//! [sweep]
//! direction = [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]  # anchors(t) = anchors + t·direction
//! from = 0.4
//! to = 0.6
//! points = 9
//! classes = [ [[...]], [[...]] ]
//! exact = false                  # true: connectivity must equal the matrix
//! ```
//!
//! Unknown keys are rejected so typos surface as errors.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::equilibrium::ExternalField;
use crate::error::{Error, Result};
use crate::geom::{AnchorSet, Arc, ConnectivityMatrix, PolyContinuum};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub boutroux: f64,
    pub bc: f64,
    pub traj: f64,
    pub energy: f64,
    /// allowed gap between measure and grid Dirichlet intensities
    pub dirichlet: f64,
    pub s_property: f64,
    pub schiffer: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { boutroux: 1e-10, bc: 1e-8, traj: 1e-9, energy: 1e-6, dirichlet: 1e-2, s_property: 1e-5, schiffer: 1e-5 }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("boutroux", self.boutroux),
            ("bc", self.bc),
            ("traj", self.traj),
            ("energy", self.energy),
            ("dirichlet", self.dirichlet),
            ("s_property", self.s_property),
            ("schiffer", self.schiffer),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Boutroux,
    Intensity,
    SProperty,
    Schiffer,
    Jenkins,
    Stagnation,
    Candidate,
    Descent,
}

impl Check {
    pub fn default_suite() -> Vec<Check> {
        use Check::*;
        vec![Boutroux, Intensity, SProperty, Schiffer, Jenkins, Stagnation, Candidate]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "Check::default_suite")]
    pub checks: Vec<Check>,
    /// tilt angles in degrees for the segment energy probe
    #[serde(default)]
    pub tilt: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { checks: Check::default_suite(), tilt: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub direction: Vec<[f64; 2]>,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub classes: [Vec<Vec<u8>>; 2],
    /// bisection stops when the bracket is narrower than this
    #[serde(default = "default_bracket")]
    pub bracket: f64,
    /// compare exact classes instead of "at least this connected"
    #[serde(default)]
    pub exact: bool,
}

fn default_bracket() -> f64 {
    1e-4
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// may be omitted when `arcs` are given (energy only)
    #[serde(default)]
    pub anchors: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectivity: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arcs: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_true")]
    pub svg: bool,
    #[serde(default = "default_grid")]
    pub grid_res: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_samples() -> usize {
    24
}

fn default_true() -> bool {
    true
}

fn default_grid() -> usize {
    512
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self> {
        // toml's message already carries line, column and the offending key
        let cfg: JobConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.anchors.is_empty() || self.arcs.is_empty() {
            self.anchor_set()?;
            self.class()?;
        }
        self.tolerances.validate()?;
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.grid_res < 16 {
            return Err(Error::Config(format!("grid_res must be at least 16, got {}", self.grid_res)));
        }
        if let Some(f) = &self.field {
            ExternalField::new(f.clone())?;
        }
        if let Some(s) = &self.sweep {
            if s.direction.len() != self.anchors.len() {
                return Err(Error::Config(format!(
                    "sweep.direction has {} entries for {} anchors",
                    s.direction.len(),
                    self.anchors.len()
                )));
            }
            if s.points < 2 || !(s.from < s.to) || !(s.bracket > 0.0) {
                return Err(Error::Config("sweep needs points ≥ 2, from < to and a positive bracket".into()));
            }
            for rows in &s.classes {
                ConnectivityMatrix::from_rows(rows.clone())?;
            }
        }
        Ok(())
    }

    pub fn anchor_set(&self) -> Result<AnchorSet> {
        AnchorSet::from_pairs(&self.anchors)
    }

    /// Requested class; no matrix means "any".
    pub fn class(&self) -> Result<ConnectivityMatrix> {
        let n = self.anchors.len();
        let m = match &self.connectivity {
            Some(rows) => ConnectivityMatrix::from_rows(rows.clone())?,
            None => ConnectivityMatrix::empty(n),
        };
        if m.n() != n {
            return Err(Error::InvalidConnectivity(format!("matrix is for {} anchors, config has {n}", m.n())));
        }
        Ok(m)
    }

    pub fn continuum(&self) -> Result<Option<PolyContinuum>> {
        if self.arcs.is_empty() {
            return Ok(None);
        }
        let arcs = self
            .arcs
            .iter()
            .map(|a| Arc::polyline(a.iter().map(|p| C::new(p[0], p[1])).collect()))
            .collect::<Result<Vec<_>>>()?;
        PolyContinuum::new(arcs).map(Some)
    }

    pub fn external_field(&self) -> Result<ExternalField> {
        self.field.clone().map_or_else(|| Ok(ExternalField::default()), ExternalField::new)
    }

    pub fn sweep_anchors(&self, t: f64) -> Result<AnchorSet> {
        let s = self.sweep.as_ref().ok_or_else(|| Error::Config("no [sweep] table".into()))?;
        let pts = self
            .anchors
            .iter()
            .zip(&s.direction)
            .map(|(a, d)| C::new(a[0] + t * d[0], a[1] + t * d[1]))
            .collect();
        AnchorSet::new(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = JobConfig::parse("anchors = [[0.0, 1.0]]").unwrap();
        assert_eq!(c.samples, 24);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.verify.checks, Check::default_suite());
        assert!(c.continuum().unwrap().is_none());
        assert!(c.external_field().unwrap().is_default());
        let c = JobConfig::parse("arcs = [[[0.0, 0.0], [0.0, 1.0]]]").unwrap();
        assert_eq!(c.continuum().unwrap().unwrap().arcs().len(), 1);
        assert!(JobConfig::parse("samples = 3").is_err());
    }

    #[test]
    fn anchor_below_axis() {
        let e = JobConfig::parse("anchors = [[0.0, -1.0]]").unwrap_err();
        assert!(e.to_string().contains("anchor below real axis"), "{e}");
    }

    #[test]
    fn diagnostics_name_the_field() {
        let e = JobConfig::parse("anchors = [[0.0, 1.0]]\n[tolerances]\nbc = \"x\"\n").unwrap_err();
        let s = e.to_string();
        assert!(s.contains("line 3") && s.contains("bc"), "{s}");
        let e = JobConfig::parse("anchors = [[0.0, 1.0]]\nanchor = 1\n").unwrap_err();
        assert!(e.to_string().contains("anchor"), "{e}");
    }

    #[test]
    fn rejects_bad_values() {
        assert!(JobConfig::parse("anchors = [[0.0, 1.0]]\nsamples = 0").is_err());
        assert!(JobConfig::parse("anchors = [[0.0, 1.0]]\n[tolerances]\nenergy = -1.0").is_err());
        assert!(JobConfig::parse("anchors = [[0.0, 1.0]]\nconnectivity = [[0, 0, 0], [0, 1, 0], [0, 0, 1]]\n").is_err());
    }

    #[test]
    fn sweep_moves_anchors() {
        let text = |h: &str| {
            format!(
                "anchors = [[-0.3, 1.0], [0.3, 1.0], [0.0, {h}]]\n\
                 [sweep]\n\
                 direction = [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]\n\
                 from = 0.4\nto = 0.6\npoints = 3\n\
                 classes = [[[0,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]], [[0,0,0,0],[0,1,1,1],[0,1,1,1],[0,1,1,1]]]\n"
            )
        };
        // base anchors are validated as given, before any sweep offset
        assert!(JobConfig::parse(&text("0.0")).is_err());
        let c = JobConfig::parse(&text("0.5")).unwrap();
        let e = c.sweep_anchors(0.1).unwrap();
        assert!((e.points()[2] - C::new(0.0, 0.6)).norm() < 1e-15);
    }
}
