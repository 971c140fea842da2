//! Experiment configuration: a TOML file merged with command-line overrides
//! into one fully resolved record that is echoed into the manifest and
//! hashed into every output filename.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qcbeam::mapzoo::{
    diagonal_map, identity_map, radial_map, scaling_map, snowflake_map, spiral_map, zoo,
    QCMap, RadialProfile,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Map selection: a builder family plus its parameters, or the exact label
/// of a built-in zoo entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct MapSpec {
    pub label: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diag: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_min: Option<i64>,
}

impl Default for MapSpec {
    fn default() -> Self {
        MapSpec {
            label: "identity".to_string(),
            dim: 2,
            lambda: None,
            diag: None,
            d: None,
            c: None,
            levels: None,
            depth_min: None,
        }
    }
}

impl MapSpec {
    pub fn build(&self) -> Result<QCMap, CliError> {
        let need = |opt: Option<f64>, name: &str| {
            opt.ok_or_else(|| {
                CliError::Config(format!("map '{}' needs parameter '{name}'", self.label))
            })
        };
        let map = match self.label.as_str() {
            "identity" => identity_map(self.dim),
            "half" => scaling_map(self.dim, 0.5)?,
            "scaling" => scaling_map(self.dim, need(self.lambda, "lambda")?)?,
            "diag" => {
                let entries = self.diag.clone().ok_or_else(|| {
                    CliError::Config("map 'diag' needs parameter 'diag'".to_string())
                })?;
                if entries.len() != self.dim {
                    return Err(CliError::Config(format!(
                        "diag has {} entries for dim {}",
                        entries.len(),
                        self.dim
                    )));
                }
                diagonal_map(&entries)?
            }
            "power" => radial_map(RadialProfile::Power { d: need(self.d, "d")? }, self.dim)?,
            "log-power" => {
                radial_map(RadialProfile::LogPower { d: need(self.d, "d")? }, self.dim)?
            }
            "spiral" => {
                if self.dim != 2 {
                    return Err(CliError::Config("spiral maps are planar".to_string()));
                }
                spiral_map(self.c.unwrap_or(1.0))?
            }
            "snowflake" => {
                if self.dim != 2 {
                    return Err(CliError::Config("snowflake maps are planar".to_string()));
                }
                snowflake_map(
                    self.levels.ok_or_else(|| {
                        CliError::Config("map 'snowflake' needs parameter 'levels'".to_string())
                    })?,
                    self.depth_min.unwrap_or(-12),
                )?
            }
            other => zoo(self.dim)?
                .into_iter()
                .find(|m| m.label == other)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown map '{other}' (run the zoo subcommand for the catalog)"
                    ))
                })?,
        };
        Ok(map)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct CurveSection {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for CurveSection {
    fn default() -> Self {
        CurveSection { t_min: -10.0, t_max: -1.0, points: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct DqSection {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub lags: Vec<f64>,
}

impl Default for DqSection {
    fn default() -> Self {
        DqSection { t_min: -10.0, t_max: -1.0, points: 10, lags: vec![1.0] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct BipSection {
    pub t_samples: Vec<f64>,
    pub quad_grid: usize,
    pub fd_step: f64,
}

impl Default for BipSection {
    fn default() -> Self {
        BipSection { t_samples: vec![-3.0, -4.0, -5.0], quad_grid: 16, fd_step: 1e-5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct SubdivideSection {
    pub t0: f64,
    pub t: f64,
    pub face_grid: usize,
    pub base_quad: usize,
    pub fd_step: f64,
}

impl Default for SubdivideSection {
    fn default() -> Self {
        SubdivideSection { t0: -5.0, t: 0.1, face_grid: 16, base_quad: 8, fd_step: 1e-5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct QsSection {
    /// Base-cell corner of the sampling region (defaults to the origin).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corner: Option<Vec<f64>>,
    /// Base-cell extents (defaults to the full fundamental cell).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<f64>>,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Default for QsSection {
    fn default() -> Self {
        QsSection { corner: None, sides: None, t_lo: -6.0, t_hi: -4.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct SliceSection {
    pub t0: f64,
    pub resolutions: Vec<usize>,
}

impl Default for SliceSection {
    fn default() -> Self {
        SliceSection { t0: -5.0, resolutions: vec![256, 1024, 4096] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct AsymSection {
    /// Growth exponent recorded with the representative; estimated from the
    /// deepest rescaling pair when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_exponent: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Height of the residual probe sphere.
    pub probe_t: f64,
    pub probe_dirs: usize,
    /// Rescaling scales used to extract the boundary field.
    pub g_heights: Vec<f64>,
    pub sphere_samples: usize,
}

impl Default for AsymSection {
    fn default() -> Self {
        AsymSection {
            d_exponent: None,
            t_min: -12.0,
            t_max: -2.0,
            points: 11,
            probe_t: -10.0,
            probe_dirs: 64,
            g_heights: vec![-4.0, -6.0, -8.0, -10.0, -12.0],
            sphere_samples: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct GenSection {
    /// Heights of the rescaling radii, strictly decreasing.
    pub heights: Vec<f64>,
    pub sphere_samples: usize,
}

impl Default for GenSection {
    fn default() -> Self {
        GenSection {
            heights: vec![-2.0, -3.0, -4.0, -5.0, -6.0, -7.0],
            sphere_samples: 64,
        }
    }
}

/// On-disk configuration: every field optional so flags and defaults fill
/// the gaps.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub map: Option<MapSpec>,
    pub rho_curve: Option<CurveSection>,
    pub dq: Option<DqSection>,
    pub bip: Option<BipSection>,
    pub subdivide: Option<SubdivideSection>,
    pub qs: Option<QsSection>,
    pub slice_size: Option<SliceSection>,
    pub asym_rep: Option<AsymSection>,
    pub gen_derivative: Option<GenSection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
    }
}

/// Fully resolved configuration after merging file values, flag overrides
/// and defaults. The identity part (everything that determines the numbers)
/// is hashed into output filenames.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: String,
    pub map: MapSpec,
    pub seed: Option<u64>,
    pub budget: u64,
    pub format: OutputFormat,
    pub params: serde_json::Value,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: usize,
}

impl Resolved {
    /// Hex digest of the numerical identity: command, map, seed, budget,
    /// format and the per-command parameters. Output paths and the thread
    /// count stay outside so reruns land on the same filenames.
    pub fn hash(&self) -> String {
        let key = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(key.as_bytes());
        let mut hex = String::with_capacity(12);
        for b in digest.iter().take(6) {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            CliError::Config("this experiment samples randomly: set a seed".to_string())
        })
    }

    /// Reject heights at or above the map's meaningful-height cap.
    pub fn check_heights(&self, map: &QCMap, heights: &[f64]) -> Result<(), CliError> {
        if let Some(m) = map.height_cap {
            for &t in heights {
                if !(t < m) {
                    return Err(CliError::Config(format!(
                        "height {t} is not below the cap {m} of map {}",
                        map.label
                    )));
                }
            }
        }
        for &t in heights {
            if !t.is_finite() {
                return Err(CliError::Config(format!("non-finite height {t}")));
            }
        }
        Ok(())
    }
}

/// Evenly spaced heights from a curve section.
pub fn section_grid(t_min: f64, t_max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    qcbeam::radius::height_grid(t_min, t_max, points).map_err(CliError::from)
}
