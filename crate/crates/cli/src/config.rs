use std::path::{Path, PathBuf};

use nilwave::rockland::ProfileSpec;
use nilwave::group::GroupDescription;
use nilwave::{GradedGroup, GridSpec, ScaleGrid, Weight, WeightSpec};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

/// A group given inline or as a path to a group JSON file.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum GroupSource {
    File(PathBuf),
    Inline(GroupDescription),
}

impl<'de> Deserialize<'de> for GroupSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        match value {
            serde_json::Value::String(path) => Ok(GroupSource::File(path.into())),
            other => GroupDescription::deserialize(other)
                .map(GroupSource::Inline)
                .map_err(serde::de::Error::custom),
        }
    }
}

impl Default for GroupSource {
    fn default() -> Self {
        GroupSource::Inline(GroupDescription {
            dim: 2,
            weights: vec![Weight::integer(1), Weight::integer(2)],
            brackets: Vec::new(),
            name: "R2(1,2)".into(),
        })
    }
}

/// `L = sum_j a_j (-1)^{p_j/2} X_j^{p_j}`.
///
/// `coefficients` wins over `active_axes`; with neither, every axis has coefficient 1.
/// The degree defaults to twice the least common multiple of the active weights.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RocklandConfig {
    pub degree: Option<Weight>,
    pub coefficients: Option<Vec<f64>>,
    pub active_axes: Option<Vec<usize>>,
}

/// Either `t_max` or `ratio` must be given.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesConfig {
    pub t_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    pub n_scales: usize,
}

impl ScalesConfig {
    pub fn geometric(t_min: f64, t_max: f64, n_scales: usize) -> Self {
        ScalesConfig {
            t_min,
            t_max: Some(t_max),
            ratio: None,
            n_scales,
        }
    }

    pub fn build(&self, key: &str) -> Result<ScaleGrid, CliError> {
        let grid = match (self.t_max, self.ratio) {
            (Some(t_max), None) => ScaleGrid::geometric(self.t_min, t_max, self.n_scales),
            (None, Some(r)) => ScaleGrid::with_ratio(self.t_min, r, self.n_scales),
            _ => return Err(CliError::config(key, "give exactly one of t_max and ratio")),
        };
        grid.map_err(|e| CliError::config(key, e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionConfig {
    /// `null` reuses the main grid.
    pub grid: Option<GridSpec>,
    pub scales: ScalesConfig,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            grid: Some(GridSpec {
                half_widths: vec![88.0, 160.0],
                counts: vec![128, 512],
                periodic: true,
            }),
            scales: ScalesConfig {
                t_min: 0.25,
                t_max: None,
                ratio: Some(4f64.powf(1.0 / 7.0)),
                n_scales: 16,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayConfig {
    pub scales: ScalesConfig,
    /// `null` skips the small-t fit.
    pub small_range: Option<[f64; 2]>,
    /// `null` skips the large-t fit.
    pub large_range: Option<[f64; 2]>,
    /// `null` reuses the main grid.
    pub spatial_grid: Option<GridSpec>,
    /// `null` skips the spatial fits.
    pub spatial_scales: Option<ScalesConfig>,
    /// Scale at which the spatial slope is checked.
    pub spatial_t: f64,
    pub shells: usize,
    pub floor: f64,
    pub cap: f64,
    /// `(M, K)` pairs for the fitted constants.
    pub constants: Vec<[u32; 2]>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            scales: ScalesConfig::geometric(1.0 / 32.0, 32.0, 41),
            small_range: Some([1.0 / 16.0, 0.5]),
            large_range: Some([2.0, 16.0]),
            spatial_grid: Some(GridSpec {
                half_widths: vec![56.0, 3136.0],
                counts: vec![128, 8192],
                periodic: true,
            }),
            spatial_scales: Some(ScalesConfig::geometric(0.5, 2.0, 5)),
            spatial_t: 1.0,
            shells: 48,
            floor: 1e-10,
            cap: 1e-2,
            constants: vec![[2, 4]],
        }
    }
}

/// Bounds applied by `verify` and `decay-report`.
///
/// Unset slope bounds default to `Q/2 + 3` and `-(Q/2 + 3)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub isometry_min: f64,
    pub isometry_max: f64,
    pub reconstruction: f64,
    pub conv_defect: f64,
    pub star_defect: f64,
    pub weighted_l1_change: f64,
    pub max_abs_moment: f64,
    pub small_t_slope_min: Option<f64>,
    pub large_t_slope_max: Option<f64>,
    pub spatial_slope_max: f64,
    pub r2_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            isometry_min: 0.99,
            isometry_max: 1.01,
            reconstruction: 1e-2,
            conv_defect: 5e-2,
            star_defect: 1e-6,
            weighted_l1_change: 5e-2,
            max_abs_moment: 1e-6,
            small_t_slope_min: None,
            large_t_slope_max: None,
            spatial_slope_max: -4.0,
            r2_min: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub group: GroupSource,
    pub grid: GridSpec,
    pub rockland: RocklandConfig,
    pub multiplier: ProfileSpec,
    pub scales: ScalesConfig,
    pub weight: WeightSpec,
    pub seed: u64,
    /// Spectral band `[lo, hi]` of the seeded test function.
    pub test_band: [f64; 2],
    pub out: PathBuf,
    /// `null` skips the projection checks.
    pub projection: Option<ProjectionConfig>,
    /// `null` skips the decay fits.
    pub decay: Option<DecayConfig>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            group: GroupSource::default(),
            grid: GridSpec {
                half_widths: vec![44.0, 20.0],
                counts: vec![64, 64],
                periodic: true,
            },
            rockland: RocklandConfig::default(),
            multiplier: ProfileSpec::ExpCutoff {
                lambda0: 1e-3,
                order: 2,
            },
            scales: ScalesConfig::geometric(0.125, 8.0, 32),
            weight: WeightSpec {
                k: 2.0,
                m: 1.0,
                m_prime: 1.0,
            },
            seed: 1,
            test_band: [1e-3, 25.0],
            out: PathBuf::from("out"),
            projection: Some(ProjectionConfig::default()),
            decay: Some(DecayConfig::default()),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let mut cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let key = e.path().to_string();
            CliError::config(&key, e.into_inner())
        })?;
        de.end().map_err(|e| CliError::config(".", e))?;
        if let GroupSource::File(p) = &cfg.group {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.group = GroupSource::File(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn load_group(&self) -> Result<GradedGroup, CliError> {
        match &self.group {
            GroupSource::File(p) => GradedGroup::from_json_file(p).map_err(|e| CliError::config("group", e)),
            GroupSource::Inline(d) => GradedGroup::from_description(d).map_err(|e| CliError::config("group", e)),
        }
    }
}
