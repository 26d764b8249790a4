//! Experiment configuration.
//!
//! The file format is the key/value-with-sections subset of TOML described
//! in `docs/config.md`. Every key has a default, so an empty file is a
//! valid configuration (the reference experiment).

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::completion::{CompletionConfig, MomentRule};
use crate::error::{Error, Result};
use crate::imaging::{ImagingMethod, SamplingGrid, FM_DEFAULT_REG};
use crate::prolate::RegularizationSpec;
use crate::scene::{ApertureGrid, Boundary, BoundaryCondition, Shape};

/// An angle read either as a number of radians or as text such as `pi`,
/// `pi/2`, `0.3*pi` or `2*pi/3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle(pub f64);

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        if let Ok(v) = t.parse::<f64>() {
            return Ok(Angle(v));
        }
        let bad = || Error::Config(format!("cannot read angle '{s}'"));
        let (num, den) = match t.split_once('/') {
            Some((a, b)) => (a, Some(b.parse::<f64>().map_err(|_| bad())?)),
            None => (t.as_str(), None),
        };
        let coef = match num.strip_suffix("pi").ok_or_else(bad)? {
            "" => 1.0,
            c => c.strip_suffix('*').unwrap_or(c).parse::<f64>().map_err(|_| bad())?,
        };
        Ok(Angle(coef * PI / den.unwrap_or(1.0)))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Angle(v)),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

fn de_from_str<'de, D, T>(d: D) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr<Err = Error>,
{
    let s = String::deserialize(d)?;
    s.parse().map_err(de::Error::custom)
}

fn ser_display<S: Serializer, T: fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Peanut,
    Disk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Boundary-integral solver for any shape.
    Nystrom,
    /// Closed-form series, disks centred at the origin only.
    Series,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompletionMethod {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "dc-fs")]
    DcFs,
    #[serde(rename = "dc-ie")]
    DcIe,
}

impl CompletionMethod {
    pub fn label(&self) -> &'static str {
        match self {
            CompletionMethod::None => "none",
            CompletionMethod::DcFs => "dc-fs",
            CompletionMethod::DcIe => "dc-ie",
        }
    }
}

impl FromStr for CompletionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(CompletionMethod::None),
            "dc-fs" | "dcfs" => Ok(CompletionMethod::DcFs),
            "dc-ie" | "dcie" => Ok(CompletionMethod::DcIe),
            _ => Err(Error::Config(format!("unknown completion method '{s}'"))),
        }
    }
}

impl FromStr for MomentRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "bandlimited" => Ok(MomentRule::Bandlimited),
            None if s == "rectangle" => Ok(MomentRule::Rectangle),
            Some(("bandlimited", d)) => d
                .parse()
                .map(|degree| MomentRule::BandlimitedDegree { degree })
                .map_err(|_| Error::Config(format!("bad quadrature degree '{d}'"))),
            _ => Err(Error::Config(format!("unknown moment rule '{s}'"))),
        }
    }
}

impl fmt::Display for MomentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub k: f64,
    pub alpha: Angle,
    #[serde(rename = "L")]
    pub l: usize,
    pub delta: f64,
    pub seed: u64,
    pub output: PathBuf,
    /// Also run the four-way comparison (raw DSM, DSM after DC-FS, DSM
    /// after DC-IE, FM after DC-IE) when the aperture is limited.
    pub compare: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            k: 5.0,
            alpha: Angle(PI / 2.0),
            l: 128,
            delta: 0.05,
            seed: 1,
            output: PathBuf::from("out"),
            compare: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub shape: ShapeKind,
    /// Disk radius; ignored for the peanut.
    pub radius: f64,
    pub position: [f64; 2],
    pub bc: BoundaryCondition,
    pub solver: Solver,
    pub n_quad: usize,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            shape: ShapeKind::Peanut,
            radius: 1.0,
            position: [0.0, 0.0],
            bc: BoundaryCondition::Dirichlet,
            solver: Solver::Nystrom,
            n_quad: 128,
        }
    }
}

impl SceneSection {
    pub fn boundary(&self) -> Boundary {
        let shape = match self.shape {
            ShapeKind::Peanut => Shape::Peanut,
            ShapeKind::Disk => Shape::Disk { radius: self.radius },
        };
        Boundary {
            shape,
            position: self.position,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionSection {
    #[serde(deserialize_with = "de_from_str", serialize_with = "ser_display")]
    pub method: CompletionMethod,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(deserialize_with = "de_from_str", serialize_with = "ser_display")]
    pub reg: RegularizationSpec,
    /// `0` disables the clamp.
    pub threshold_factor: f64,
    pub r: f64,
    #[serde(deserialize_with = "de_from_str", serialize_with = "ser_display")]
    pub rule: MomentRule,
}

impl fmt::Display for CompletionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Default for CompletionSection {
    fn default() -> Self {
        Self {
            method: CompletionMethod::DcIe,
            j: 9,
            reg: RegularizationSpec::Spectral { epsilon: 1e-3 },
            threshold_factor: 2.0,
            r: 4.0,
            rule: MomentRule::Bandlimited,
        }
    }
}

impl CompletionSection {
    pub fn completion_config(&self) -> CompletionConfig {
        CompletionConfig {
            j: self.j,
            reg: self.reg,
            threshold_factor: (self.threshold_factor > 0.0).then_some(self.threshold_factor),
            r: self.r,
            rule: self.rule,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingSection {
    pub method: ImagingMethod,
    /// FM regularization.
    #[serde(deserialize_with = "de_from_str", serialize_with = "ser_display")]
    pub reg: RegularizationSpec,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub resolution: usize,
}

impl Default for ImagingSection {
    fn default() -> Self {
        let g = SamplingGrid::default();
        Self {
            method: ImagingMethod::Dsm,
            reg: FM_DEFAULT_REG,
            x_range: [g.x_range.0, g.x_range.1],
            y_range: [g.y_range.0, g.y_range.1],
            resolution: g.resolution,
        }
    }
}

impl ImagingSection {
    pub fn sampling_grid(&self) -> SamplingGrid {
        SamplingGrid {
            x_range: (self.x_range[0], self.x_range[1]),
            y_range: (self.y_range[0], self.y_range[1]),
            resolution: self.resolution,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub scene: SceneSection,
    pub completion: CompletionSection,
    pub imaging: ImagingSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The effective configuration in the same format.
    pub fn dump(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn grid(&self) -> Result<ApertureGrid> {
        ApertureGrid::make(self.experiment.alpha.0, self.experiment.l)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks every module precondition that can be checked up front.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        let e = &self.experiment;
        if !(e.k > 0.0) || !e.k.is_finite() {
            return cfg(format!("experiment.k must be > 0, got {}", e.k));
        }
        if !(e.alpha.0 > 0.0 && e.alpha.0 <= PI) {
            return cfg(format!("experiment.alpha must lie in (0, pi], got {}", e.alpha.0));
        }
        if !(e.delta >= 0.0) || !e.delta.is_finite() {
            return cfg(format!("experiment.delta must be >= 0, got {}", e.delta));
        }
        let grid = self.grid()?;
        let s = &self.scene;
        if s.shape == ShapeKind::Disk && !(s.radius > 0.0) {
            return cfg(format!("scene.radius must be > 0, got {}", s.radius));
        }
        if s.solver == Solver::Series && (s.shape != ShapeKind::Disk || s.position != [0.0, 0.0]) {
            return cfg("scene.solver = \"series\" needs a disk centred at the origin".into());
        }
        if s.solver == Solver::Nystrom && (s.n_quad < 8 || !s.n_quad.is_multiple_of(2)) {
            return cfg(format!("scene.n_quad must be even and >= 8, got {}", s.n_quad));
        }
        let c = &self.completion;
        if c.method != CompletionMethod::None {
            c.completion_config()
                .validate(grid.measured())
                .map_err(|e| Error::Config(format!("completion: {e}")))?;
            if c.threshold_factor < 0.0 {
                return cfg(format!("completion.threshold_factor must be >= 0, got {}", c.threshold_factor));
            }
            if c.method == CompletionMethod::DcIe && c.r <= self.scene.boundary().circumradius() {
                return cfg(format!(
                    "completion.r = {} must exceed the scatterer's circumradius {:.3}",
                    c.r,
                    self.scene.boundary().circumradius()
                ));
            }
        }
        let im = &self.imaging;
        im.sampling_grid().validate().map_err(|e| Error::Config(format!("imaging: {e}")))?;
        im.reg.validate().map_err(|e| Error::Config(format!("imaging: {e}")))?;
        let full_available = grid.is_full_aperture() || c.method != CompletionMethod::None;
        if im.method == ImagingMethod::Fm && !full_available {
            return cfg("imaging.method = \"fm\" needs full-aperture data: set alpha = pi or choose a completion method".into());
        }
        if im.method == ImagingMethod::Fm && grid.full() % 2 != 0 {
            return cfg(format!("imaging.method = \"fm\" needs an even number of directions, M = {}", grid.full()));
        }
        Ok(())
    }
}
