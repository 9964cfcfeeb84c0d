//! TOML experiment configuration.
//!
//! ```toml
//! command = "oracle"
//! out = "results"
//! format = "json"
//!
//! [system]
//! energies = [-0.5, 0.5]
//! observable = [[0.6, 0.8], [0.8, -0.6]]   # entries: number or [re, im]
//! initial_level = 0
//!
//! [profile]
//! kind = "raised-cosine"
//! T = 100.0
//!
//! [pointer]
//! grid_size = 64
//! grid_span = 8.0
//! apparatus = { free = { mass = 2.0 } }
//! ```

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::profiles::{CouplingProfile, ProfileKind};
use crate::system::{ApparatusModel, PointerModel, SystemModel};

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub energies: Vec<f64>,
    pub observable: Vec<Vec<Entry>>,
    #[serde(default)]
    pub initial_level: usize,
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemModel> {
        let d = self.energies.len();
        if self.observable.len() != d {
            return Err(Error::validation(
                "system.observable",
                format!("expected {d} rows to match the energies, got {}", self.observable.len()),
            ));
        }
        for (i, row) in self.observable.iter().enumerate() {
            if row.len() != d {
                return Err(Error::validation(
                    format!("system.observable[{i}]"),
                    format!("row has {} entries, expected {d} (matrix must be square)", row.len()),
                ));
            }
        }
        let o = DMatrix::from_fn(d, d, |i, j| self.observable[i][j].value());
        SystemModel::new(self.energies.clone(), o, self.initial_level)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub kind: String,
    #[serde(rename = "T")]
    pub duration: Option<f64>,
    pub turn_on_fraction: Option<f64>,
    /// Total area `G`; 1 when absent.
    pub area: Option<f64>,
    /// Two-column CSV for `kind = "sampled"`, relative to the config file.
    pub csv: Option<PathBuf>,
}

impl ProfileConfig {
    pub fn named(kind: &str, duration: f64) -> Self {
        ProfileConfig {
            kind: kind.into(),
            duration: Some(duration),
            turn_on_fraction: None,
            area: None,
            csv: None,
        }
    }

    /// Builds the profile; relative CSV paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<CouplingProfile> {
        let kind = self.kind.trim().to_ascii_lowercase().replace('_', "-");
        let profile = if kind == "sampled" {
            let path = self
                .csv
                .as_ref()
                .ok_or_else(|| Error::validation("profile.csv", "sampled profiles need a csv path"))?;
            let path = match base {
                Some(b) if path.is_relative() => b.join(path),
                _ => path.clone(),
            };
            let p = CouplingProfile::from_csv(path)?;
            match self.duration {
                Some(t) => p.with_duration(t)?,
                None => p,
            }
        } else {
            let t = self
                .duration
                .ok_or_else(|| Error::validation("profile.T", "duration is required"))?;
            if kind == "trapezoid" {
                let f = self.turn_on_fraction.ok_or_else(|| {
                    Error::validation("profile.turn_on_fraction", "trapezoid needs a turn-on fraction")
                })?;
                CouplingProfile::trapezoid(t, f)?
            } else {
                if self.turn_on_fraction.is_some() {
                    return Err(Error::validation(
                        "profile.turn_on_fraction",
                        format!("only trapezoid profiles take a turn-on fraction, not `{kind}`"),
                    ));
                }
                match ProfileKind::from_name(&kind)? {
                    ProfileKind::Boxcar => CouplingProfile::boxcar(t)?,
                    ProfileKind::Triangle => CouplingProfile::triangle(t)?,
                    _ => CouplingProfile::raised_cosine(t)?,
                }
            }
        };
        match self.area {
            Some(g) => profile.with_area(g),
            None => Ok(profile),
        }
    }
}

fn default_sigma() -> f64 {
    1.0
}

fn default_grid() -> usize {
    64
}

fn default_span() -> f64 {
    8.0
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PointerConfig {
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_sigma")]
    pub sigma_x: f64,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_span")]
    pub grid_span: f64,
    #[serde(default)]
    pub apparatus: ApparatusModel,
}

impl Default for PointerConfig {
    fn default() -> Self {
        PointerConfig {
            x0: 0.0,
            sigma_x: default_sigma(),
            grid_size: default_grid(),
            grid_span: default_span(),
            apparatus: ApparatusModel::Static,
        }
    }
}

impl PointerConfig {
    pub fn build(&self) -> Result<PointerModel> {
        PointerModel::new(self.x0, self.sigma_x, self.grid_size, self.grid_span, self.apparatus)
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub profiles: Option<Vec<String>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: Option<usize>,
    /// Multiplies `|g̃|²`; defaults to `|⟨m|O|n⟩|²` when a system is given, else 1.
    pub weight: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DysonConfig {
    pub max_order: Option<usize>,
    pub a: Option<f64>,
    pub nodes: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub steps: Option<usize>,
    pub tolerance: Option<f64>,
}

/// A whole experiment file. Every table is optional; command-line flags
/// fill or override individual values.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub system: Option<SystemConfig>,
    pub profile: Option<ProfileConfig>,
    pub pointer: Option<PointerConfig>,
    pub scan: Option<ScanConfig>,
    pub dyson: Option<DysonConfig>,
    pub oracle: Option<OracleConfig>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string().trim_end().to_string(),
    })
}

impl ExperimentConfig {
    pub fn from_str(text: &str, path: &Path) -> Result<Self> {
        parse(text, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_str(&read(path)?, path)
    }
}

/// Loads a system from a file holding either a `[system]` table or the
/// system keys at top level.
pub fn load_system(path: &Path) -> Result<SystemModel> {
    let text = read(path)?;
    let table: toml::Table = parse(&text, path)?;
    let config: SystemConfig = if table.contains_key("system") {
        ExperimentConfig::from_str(&text, path)?
            .system
            .expect("checked for the system key")
    } else {
        parse(&text, path)?
    };
    config.build()
}

/// Loads a profile from a file holding either a `[profile]` table or the
/// profile keys at top level.
pub fn load_profile(path: &Path) -> Result<CouplingProfile> {
    let text = read(path)?;
    let table: toml::Table = parse(&text, path)?;
    let config: ProfileConfig = if table.contains_key("profile") {
        ExperimentConfig::from_str(&text, path)?
            .profile
            .expect("checked for the profile key")
    } else {
        parse(&text, path)?
    };
    config.build(path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_str(text, Path::new("test.toml"))
    }

    #[test]
    fn full_config_parses() {
        let c = cfg(r#"
command = "pointer"
[system]
energies = [-0.5, 0.5]
observable = [[0.6, [0.8, 0.0]], [0.8, -0.6]]
[profile]
kind = "raised-cosine"
T = 100.0
[pointer]
grid_size = 32
apparatus = { free = { mass = 2.0 } }
"#)
        .unwrap();
        let s = c.system.unwrap().build().unwrap();
        assert_eq!(s.dimension(), 2);
        let p = c.profile.unwrap().build(None).unwrap();
        assert_eq!(p.name(), "raised-cosine");
        let ptr = c.pointer.unwrap();
        assert_eq!(ptr.apparatus, ApparatusModel::Free { mass: 2.0 });
        assert_eq!(ptr.sigma_x, 1.0);
    }

    #[test]
    fn static_apparatus_is_a_string() {
        let c = cfg("[pointer]\napparatus = \"static\"\n").unwrap();
        assert_eq!(c.pointer.unwrap().apparatus, ApparatusModel::Static);
    }

    #[test]
    fn non_square_observable_names_the_row() {
        let c = cfg("[system]\nenergies = [0.0, 1.0]\nobservable = [[0.0, 1.0], [1.0, 0.0, 2.0]]\n").unwrap();
        match c.system.unwrap().build() {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "system.observable[1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_report_location() {
        let err = cfg("[system]\nenergies = [0.0, \n").unwrap_err();
        assert!(err.is_usage());
        assert!(err.to_string().contains("line"), "{err}");
        let err = cfg("[profile]\nkind = \"boxcar\"\nT = 1.0\nbogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn profile_fields_are_checked() {
        assert!(ProfileConfig::named("boxcar", 1.0).build(None).is_ok());
        let mut p = ProfileConfig::named("trapezoid", 1.0);
        assert!(p.build(None).is_err());
        p.turn_on_fraction = Some(0.2);
        assert!(p.build(None).is_ok());
        let mut p = ProfileConfig::named("boxcar", 1.0);
        p.area = Some(0.5);
        assert_eq!(p.build(None).unwrap().area(), 0.5);
        assert!(ProfileConfig::named("gaussian", 1.0).build(None).is_err());
    }
}
