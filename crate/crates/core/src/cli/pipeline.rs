//! Stage functions shared by the subcommands and the full pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use log::info;

use super::config::{CompletionMethod, ExperimentConfig, Solver};
use super::manifest::{ArtifactWriter, Manifest};
use crate::completion::{dc_fs, dc_ie_with};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forward::{add_noise, min_truncation, solve_disk_series, FarFieldMatrix, NystromSolver};
use crate::imaging::{dsm_with, fm_with, ImagingField, ImagingMethod};
use crate::scene::Shape;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Forward,
    Noise,
    Completion,
    Imaging,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Forward => "forward",
            Stage::Noise => "noise",
            Stage::Completion => "completion",
            Stage::Imaging => "imaging",
            Stage::Output => "output",
        })
    }
}

/// An error tagged with the step that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl StageError {
    /// 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        exit_code(&self.source)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::EmptyRetainedSubspace { .. } => 3,
        _ => 2,
    }
}

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Noiseless far-field data of the configured scene; the full `M × M`
/// matrix when `full`, otherwise the measured block.
pub fn simulate(cfg: &ExperimentConfig, full: bool, exec: Execution) -> Result<FarFieldMatrix> {
    let grid = cfg.grid()?;
    let e = &cfg.experiment;
    let s = &cfg.scene;
    let boundary = s.boundary();
    info!(
        "forward: {:?} {:?} k={} M={} L={} solver={:?}",
        s.shape,
        s.bc,
        e.k,
        grid.full(),
        grid.measured(),
        s.solver
    );
    let f = match s.solver {
        Solver::Nystrom => NystromSolver::new(&boundary, s.bc, e.k, s.n_quad)?.msr(&grid, full, exec)?,
        Solver::Series => {
            let Shape::Disk { radius } = boundary.shape else {
                return Err(Error::Config("series solver needs a disk".into()));
            };
            let mut f = solve_disk_series(radius, s.bc, e.k, &grid, min_truncation(e.k, radius))?;
            f.set_meta("source", "series");
            if full {
                f
            } else {
                f.measured_block()
            }
        }
    };
    Ok(f)
}

pub fn perturb(cfg: &ExperimentConfig, f: &FarFieldMatrix) -> Result<FarFieldMatrix> {
    info!("noise: delta={} seed={}", cfg.experiment.delta, cfg.experiment.seed);
    add_noise(f, cfg.experiment.delta, cfg.experiment.seed)
}

pub fn complete(
    cfg: &ExperimentConfig,
    method: CompletionMethod,
    f: &FarFieldMatrix,
    exec: Execution,
) -> Result<FarFieldMatrix> {
    let cc = cfg.completion.completion_config();
    info!("completion: {} J={} reg={}", method.label(), cc.j, cc.reg);
    match method {
        CompletionMethod::None => Ok(f.clone()),
        CompletionMethod::DcFs => dc_fs(f, &cc),
        CompletionMethod::DcIe => dc_ie_with(f, &cc, None, exec),
    }
}

pub fn image(cfg: &ExperimentConfig, method: ImagingMethod, f: &FarFieldMatrix, exec: Execution) -> Result<ImagingField> {
    let grid = cfg.imaging.sampling_grid();
    info!("imaging: {} on {} directions, {}² points", method.label(), f.size(), grid.resolution);
    match method {
        ImagingMethod::Dsm => dsm_with(f, &grid, exec),
        ImagingMethod::Fm => fm_with(f, &grid, &cfg.imaging.reg, f.noise_level(), exec),
    }
}

fn to_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn png_bytes(field: &ImagingField) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    field
        .to_image()
        .write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(buf.into_inner())
}

fn data_tag(method: CompletionMethod) -> &'static str {
    match method {
        CompletionMethod::None => "limited",
        CompletionMethod::DcFs => "dcfs",
        CompletionMethod::DcIe => "dcie",
    }
}

/// The (completion, imaging) pairs a run reconstructs with.
pub fn variants(cfg: &ExperimentConfig) -> Result<Vec<(CompletionMethod, ImagingMethod)>> {
    let grid = cfg.grid()?;
    let mut out = vec![(cfg.completion.method, cfg.imaging.method)];
    if cfg.experiment.compare && !grid.is_full_aperture() {
        for v in [
            (CompletionMethod::None, ImagingMethod::Dsm),
            (CompletionMethod::DcFs, ImagingMethod::Dsm),
            (CompletionMethod::DcIe, ImagingMethod::Dsm),
            (CompletionMethod::DcIe, ImagingMethod::Fm),
        ] {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Forward simulation, noise, completion and imaging into `out`.
///
/// Files: `config.toml` (effective configuration), `msr_true.csv`
/// (noiseless full-aperture data), `msr_limited.csv` (noisy measurements),
/// `msr_dcfs.csv` / `msr_dcie.csv` when a completion runs, one
/// `<imaging>_<data>.csv` and `.png` per reconstruction variant, and
/// `manifest.json` listing all of them.
pub fn run_pipeline(
    cfg: &ExperimentConfig,
    out: &Path,
    exec: Execution,
) -> std::result::Result<Manifest, StageError> {
    cfg.validate().at(Stage::Config)?;
    let e = &cfg.experiment;
    let grid = cfg.grid().at(Stage::Config)?;
    let mut w = ArtifactWriter::create(out, "pipeline").at(Stage::Output)?;
    let mut base = BTreeMap::new();
    base.insert("k".to_string(), e.k.to_string());
    base.insert("alpha".into(), e.alpha.to_string());
    base.insert("L".into(), grid.measured().to_string());
    base.insert("M".into(), grid.full().to_string());
    let with = |extra: &[(&str, String)]| {
        let mut p = base.clone();
        for (k, v) in extra {
            p.insert(k.to_string(), v.clone());
        }
        p
    };

    w.write("config.toml", cfg.dump().as_bytes(), "config", BTreeMap::new())
        .at(Stage::Output)?;

    let truth = simulate(cfg, true, exec).at(Stage::Forward)?;
    let bytes = to_bytes(|b| truth.write_csv(b)).at(Stage::Output)?;
    let scene = [
        ("shape", format!("{:?}", cfg.scene.shape).to_lowercase()),
        ("bc", format!("{:?}", cfg.scene.bc).to_lowercase()),
    ];
    w.write("msr_true.csv", &bytes, "forward", with(&scene)).at(Stage::Output)?;

    let limited = perturb(cfg, &truth.measured_block()).at(Stage::Noise)?;
    let bytes = to_bytes(|b| limited.write_csv(b)).at(Stage::Output)?;
    let noise = [("delta", e.delta.to_string()), ("seed", e.seed.to_string())];
    w.write("msr_limited.csv", &bytes, "noise", with(&noise)).at(Stage::Output)?;

    let variants = variants(cfg).at(Stage::Config)?;
    let mut datasets: Vec<(CompletionMethod, FarFieldMatrix)> = vec![(CompletionMethod::None, limited.clone())];
    for method in [CompletionMethod::DcFs, CompletionMethod::DcIe] {
        if !variants.iter().any(|(c, _)| *c == method) {
            continue;
        }
        let done = complete(cfg, method, &limited, exec).at(Stage::Completion)?;
        let bytes = to_bytes(|b| done.write_csv(b)).at(Stage::Output)?;
        let c = &cfg.completion;
        let params = with(&[
            ("method", method.label().to_string()),
            ("J", c.j.to_string()),
            ("reg", c.reg.to_string()),
            ("threshold_factor", c.threshold_factor.to_string()),
            ("rule", c.rule.to_string()),
        ]);
        w.write(&format!("msr_{}.csv", data_tag(method)), &bytes, "completion", params)
            .at(Stage::Output)?;
        datasets.push((method, done));
    }

    for (method, imaging) in variants {
        let data = &datasets.iter().find(|(m, _)| *m == method).expect("completion ran").1;
        let field = image(cfg, imaging, data, exec).at(Stage::Imaging)?;
        let stem = format!("{}_{}", imaging.label().to_lowercase(), data_tag(method));
        let mut extra = vec![
            ("imaging", imaging.label().to_lowercase()),
            ("data", data_tag(method).to_string()),
            ("resolution", cfg.imaging.resolution.to_string()),
        ];
        if imaging == ImagingMethod::Fm {
            extra.push(("reg", cfg.imaging.reg.to_string()));
        }
        let params = with(&extra);
        let csv = to_bytes(|b| field.write_csv(b)).at(Stage::Output)?;
        w.write(&format!("{stem}.csv"), &csv, "imaging", params.clone()).at(Stage::Output)?;
        let png = png_bytes(&field).at(Stage::Output)?;
        w.write(&format!("{stem}.png"), &png, "imaging", params).at(Stage::Output)?;
    }
    let manifest = w.finish().at(Stage::Output)?;
    info!("pipeline: {} artifacts in {}", manifest.artifacts.len(), out.display());
    Ok(manifest)
}
