//! System description files.
//!
//! ```toml
//! reduced_mass_amu = 26.9        # or reduced_mass_me
//!
//! [ground]
//! label = "X"
//! table = "x_state.dat"          # resolved against the file's directory
//!
//! [excited]
//! label = "A"
//! morse = { depth = 0.06, range = 0.65, r_e = 2.4, offset = 0.10 }
//!
//! [dipole]
//! gaussian = { offset = 0.6, amplitude = 0.6, center = 2.6, width = 1.0 }
//! ```
//!
//! Numbers in the file are atomic units; tables carry their own `units:` header.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::potentials::{
    load_curve_table, load_dipole_table, DipoleFunction, ElectronicSystem, Extrapolation, Morse,
    PotentialCurve,
};
use crate::units::AMU;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseParams {
    pub depth: f64,
    pub range: f64,
    pub r_e: f64,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationMode {
    #[default]
    Extend,
    Forbid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveSource {
    Morse(MorseParams),
    Table(PathBuf),
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub label: Option<String>,
    #[serde(default)]
    pub extrapolation: ExtrapolationMode,
    #[serde(flatten)]
    pub source: CurveSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipoleConfig {
    Constant(f64),
    Linear { intercept: f64, slope: f64 },
    Gaussian {
        offset: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Table(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub reduced_mass_amu: Option<f64>,
    pub reduced_mass_me: Option<f64>,
    pub ground: CurveConfig,
    pub excited: CurveConfig,
    pub dipole: DipoleConfig,
    /// Directory that relative table paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl SystemConfig {
    pub fn parse(text: &str, base_dir: &Path, source_name: &str) -> Result<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    /// Reduced mass in electron masses.
    pub fn mu(&self) -> Result<f64> {
        match (self.reduced_mass_amu, self.reduced_mass_me) {
            (Some(amu), None) => Ok(amu * AMU),
            (None, Some(me)) => Ok(me),
            _ => Err(Error::Invalid(
                "give exactly one of reduced_mass_amu and reduced_mass_me".into(),
            )),
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Data files the system reads, resolved.
    pub fn data_files(&self) -> Vec<PathBuf> {
        let mut files = Vec::new();
        for curve in [&self.ground, &self.excited] {
            if let CurveSource::Table(p) = &curve.source {
                files.push(self.resolve(p));
            }
        }
        if let DipoleConfig::Table(p) = &self.dipole {
            files.push(self.resolve(p));
        }
        files
    }

    pub fn build<T: Real>(&self) -> Result<ElectronicSystem<T>> {
        let ground = self.curve(&self.ground, "X")?;
        let excited = self.curve(&self.excited, "A")?;
        let dipole = match &self.dipole {
            DipoleConfig::Constant(d) => DipoleFunction::Constant(T::of(*d)),
            DipoleConfig::Linear { intercept, slope } => DipoleFunction::Linear {
                intercept: T::of(*intercept),
                slope: T::of(*slope),
            },
            DipoleConfig::Gaussian {
                offset,
                amplitude,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Invalid("dipole width must be positive".into()));
                }
                DipoleFunction::Gaussian {
                    offset: T::of(*offset),
                    amplitude: T::of(*amplitude),
                    center: T::of(*center),
                    width: T::of(*width),
                }
            }
            DipoleConfig::Table(p) => load_dipole_table(&self.resolve(p))?,
        };
        ElectronicSystem::new(T::of(self.mu()?), ground, excited, dipole)
    }

    fn curve<T: Real>(&self, config: &CurveConfig, default_label: &str) -> Result<PotentialCurve<T>> {
        let label = config.label.clone().unwrap_or_else(|| default_label.to_string());
        Ok(match &config.source {
            CurveSource::Morse(m) => PotentialCurve::morse(
                label,
                Morse::new(T::of(m.depth), T::of(m.range), T::of(m.r_e), T::of(m.offset))?,
            ),
            CurveSource::Constant(c) => PotentialCurve::constant(label, T::of(*c)),
            CurveSource::Table(p) => {
                let mode = match config.extrapolation {
                    ExtrapolationMode::Extend => Extrapolation::Extend,
                    ExtrapolationMode::Forbid => Extrapolation::Forbid,
                };
                load_curve_table(&self.resolve(p), label, mode)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::CurveForm;

    const MORSE: &str = r#"
reduced_mass_me = 500.0
[ground]
morse = { depth = 0.08, range = 0.75, r_e = 2.0 }
[excited]
label = "B"
morse = { depth = 0.06, range = 0.65, r_e = 2.4, offset = 0.1 }
[dipole]
linear = { intercept = 1.0, slope = -0.1 }
"#;

    #[test]
    fn morse_system() {
        let cfg = SystemConfig::parse(MORSE, Path::new("."), "mem").unwrap();
        let sys = cfg.build::<f64>().unwrap();
        assert_eq!(sys.mu, 500.0);
        assert_eq!(sys.ground.label, "X");
        assert_eq!(sys.excited.label, "B");
        assert!((sys.excited.asymptote() - 0.16).abs() < 1e-15);
        assert!((sys.dipole.value(2.0) - 0.8).abs() < 1e-15);
        assert!(cfg.data_files().is_empty());
    }

    #[test]
    fn tables_resolve_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let rows: String = (0..12)
            .map(|i| {
                let r = 2.0 + 0.25 * i as f64;
                format!("{r} {}\n", 300.0 * (r - 3.0) * (r - 3.0))
            })
            .collect();
        std::fs::write(dir.path().join("x.dat"), format!("units: angstrom cm-1\n{rows}")).unwrap();
        std::fs::write(dir.path().join("d.dat"), format!("units: bohr debye\n{rows}")).unwrap();
        let text = r#"
reduced_mass_amu = 1.0
[ground]
table = "x.dat"
extrapolation = "forbid"
[excited]
constant = 0.2
[dipole]
table = "d.dat"
"#;
        let path = dir.path().join("system.toml");
        std::fs::write(&path, text).unwrap();
        let cfg = SystemConfig::load(&path).unwrap();
        assert_eq!(cfg.data_files().len(), 2);
        let sys = cfg.build::<f64>().unwrap();
        assert!(matches!(sys.ground.form, CurveForm::Tabulated(_)));
        assert!((sys.mu - AMU).abs() < 1e-9);
        assert!(sys.ground.value(0.1).is_err());
    }

    #[test]
    fn rejects_bad_descriptions() {
        let both = MORSE.replace("reduced_mass_me = 500.0", "reduced_mass_me = 1.0\nreduced_mass_amu = 1.0");
        let cfg = SystemConfig::parse(&both, Path::new("."), "mem").unwrap();
        assert!(cfg.build::<f64>().unwrap_err().is_config());
        let typo = MORSE.replace("[dipole]", "[dipole]\nconstnt = 1.0\n");
        let err = SystemConfig::parse(&typo, Path::new("."), "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let missing = SystemConfig::load(Path::new("/nonexistent/system.toml")).unwrap_err();
        assert!(missing.is_config());
    }
}
