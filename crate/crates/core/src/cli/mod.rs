//! Command-line harness: configuration, stages, artifacts.

pub mod config;
pub mod manifest;
pub mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

pub use config::{Angle, CompletionMethod, ExperimentConfig, ShapeKind, Solver};
pub use manifest::{sha256_hex, ArtifactEntry, ArtifactWriter, Manifest, MANIFEST_FILE};
pub use pipeline::{exit_code, run_pipeline, AtStage, Stage, StageError};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forward::FarFieldMatrix;
use crate::prolate::{build_prolate, precise_eigenvalues, spectrum, ProlateVariant};

/// Configuration source shared by every subcommand.
#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// Configuration file; defaults apply to missing keys.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Override any key, e.g. `--set completion.J=12` or `--set scene.bc=neumann`.
    #[arg(short = 's', long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// experiment.k
    #[arg(long, global = true)]
    pub k: Option<f64>,
    /// experiment.alpha, radians or text such as `pi/2`
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// experiment.L
    #[arg(long = "L", global = true)]
    pub l: Option<usize>,
    /// experiment.delta
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// experiment.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run every parallel map on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate noiseless far-field data of the configured scene.
    Forward {
        /// Write the full M×M matrix rather than the measured block.
        #[arg(long)]
        full: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Add seeded relative noise to an MSR matrix.
    Noise {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Complete limited-aperture data to the full aperture.
    Complete {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute an imaging indicator; also writes a PNG next to the CSV.
    Image {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Eigenvalues of the prolate matrix for `alpha` and `completion.J`.
    ProlateSpectrum {
        /// Incidence variant (odd offsets negated); same eigenvalues.
        #[arg(long)]
        incidence: bool,
        /// Multiprecision eigenvalues, accurate far below machine epsilon.
        #[arg(long)]
        precise: bool,
        /// Output CSV; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Forward, noise, completion and imaging with a manifest.
    Pipeline {
        /// Output directory; overrides experiment.output.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Parser)]
#[command(name = "apcomp", version, about = "Limited-aperture far-field completion and imaging")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

fn set_key(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not SECTION.KEY=VALUE")))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Config(format!("override key '{path}' is not SECTION.KEY")))?;
    let raw = raw.trim();
    // Bare words are strings; anything TOML can read keeps its type.
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sec) = entry else {
        return Err(Error::Config(format!("'{section}' is not a section")));
    };
    sec.insert(key.to_string(), value);
    Ok(())
}

impl ConfigArgs {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    /// File, then typed flags, then `--set` overrides, in that order.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let mut sets = Vec::new();
        if let Some(v) = self.k {
            sets.push(format!("experiment.k={v:?}"));
        }
        if let Some(v) = &self.alpha {
            sets.push(match v.parse::<f64>() {
                Ok(x) => format!("experiment.alpha={x:?}"),
                Err(_) => format!("experiment.alpha=\"{v}\""),
            });
        }
        if let Some(v) = self.l {
            sets.push(format!("experiment.L={v}"));
        }
        if let Some(v) = self.delta {
            sets.push(format!("experiment.delta={v:?}"));
        }
        if let Some(v) = self.seed {
            sets.push(format!("experiment.seed={v}"));
        }
        sets.extend(self.set.iter().cloned());
        for s in &sets {
            set_key(&mut table, s)?;
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        ExperimentConfig::parse(&text)
    }
}

fn save_matrix(f: &FarFieldMatrix, out: &Path) -> Result<()> {
    f.save(out)?;
    info!("wrote {}", out.display());
    Ok(())
}

fn prolate_csv(cfg: &ExperimentConfig, incidence: bool, precise: bool) -> Result<String> {
    let alpha = cfg.experiment.alpha.0;
    let j = cfg.completion.j;
    let mut s = format!("# alpha={alpha}\n# J={j}\n# precise={precise}\nindex,sigma,one_minus_sigma\n");
    if precise {
        for (i, e) in precise_eigenvalues(alpha, 2 * j + 1)?.iter().enumerate() {
            s.push_str(&format!("{i},{:e},{:e}\n", e.sigma, e.complement));
        }
    } else {
        let variant = if incidence {
            ProlateVariant::Incidence
        } else {
            ProlateVariant::Observation
        };
        let sp = spectrum(&build_prolate(alpha, j, variant)?)?;
        for (i, v) in sp.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{i},{v:e},{:e}\n", 1.0 - v));
        }
    }
    Ok(s)
}

/// Runs one parsed command.
pub fn execute(args: &ConfigArgs, command: &Command) -> std::result::Result<(), StageError> {
    let cfg = args.resolve().at(Stage::Config)?;
    let exec = args.execution();
    match command {
        Command::Forward { full, out } => {
            let f = pipeline::simulate(&cfg, *full, exec).at(Stage::Forward)?;
            save_matrix(&f, out).at(Stage::Output)
        }
        Command::Noise { input, out } => {
            let f = FarFieldMatrix::load(input).at(Stage::Config)?;
            let noisy = pipeline::perturb(&cfg, &f).at(Stage::Noise)?;
            save_matrix(&noisy, out).at(Stage::Output)
        }
        Command::Complete { input, out } => {
            let f = FarFieldMatrix::load(input).at(Stage::Config)?;
            let done = pipeline::complete(&cfg, cfg.completion.method, &f, exec).at(Stage::Completion)?;
            save_matrix(&done, out).at(Stage::Output)
        }
        Command::Image { input, out } => {
            let f = FarFieldMatrix::load(input).at(Stage::Config)?;
            let field = pipeline::image(&cfg, cfg.imaging.method, &f, exec).at(Stage::Imaging)?;
            field.save_csv(out).at(Stage::Output)?;
            field.save_png(out.with_extension("png")).at(Stage::Output)?;
            info!("wrote {}", out.display());
            Ok(())
        }
        Command::ProlateSpectrum { incidence, precise, out } => {
            let text = prolate_csv(&cfg, *incidence, *precise).at(Stage::Completion)?;
            match out {
                Some(p) => std::fs::write(p, text).map_err(Error::from).at(Stage::Output),
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(Error::from)
                    .at(Stage::Output),
            }
        }
        Command::Pipeline { out } => {
            let dir = out.clone().unwrap_or_else(|| cfg.experiment.output.clone());
            let m = run_pipeline(&cfg, &dir, exec)?;
            println!("{}", dir.join(MANIFEST_FILE).display());
            info!("{} artifacts", m.artifacts.len());
            Ok(())
        }
        Command::Config => {
            print!("{}", cfg.dump());
            Ok(())
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let inv = match Cli::try_parse_from(argv) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&inv.config, &inv.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(sets: &[&str]) -> ConfigArgs {
        ConfigArgs {
            set: sets.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn overrides_keep_types() {
        let cfg = args(&["completion.J=4", "scene.bc=neumann", "completion.reg=tsvd:0.2", "imaging.x_range=[-2,2]"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.completion.j, 4);
        assert_eq!(cfg.scene.bc, crate::scene::BoundaryCondition::Neumann);
        assert_eq!(cfg.imaging.x_range, [-2.0, 2.0]);
        let typed = ConfigArgs {
            alpha: Some("pi/3".into()),
            k: Some(3.0),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert!((typed.experiment.alpha.0 - std::f64::consts::PI / 3.0).abs() < 1e-15);
        assert_eq!(typed.experiment.k, 3.0);
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        for s in ["completion", "J=3", "completion.nope=1", "experiment.k=abc"] {
            assert!(matches!(args(&[s]).resolve(), Err(Error::Config(_))), "{s}");
        }
    }

    #[test]
    fn prolate_listing() {
        let cfg = args(&["completion.J=2", "experiment.alpha=pi"]).resolve().unwrap();
        let s = prolate_csv(&cfg, false, false).unwrap();
        let rows: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "index,sigma,one_minus_sigma");
        assert_eq!(rows.len(), 6);
        assert!(rows[1].starts_with("0,1e0,"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["apcomp", "config", "--set", "experiment.k=-1"]), 2);
        assert_eq!(main_with_args(["apcomp", "frobnicate"]), 2);
        assert_eq!(main_with_args(["apcomp", "config"]), 0);
    }
}
