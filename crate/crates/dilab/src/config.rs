//! Declarative experiment configuration.
//!
//! Configs are sectioned TOML with a closed schema: unknown keys anywhere
//! are rejected before any computation, and every bound a study uses in a
//! pass/fail verdict must appear in the `[tolerances]` table. Overrides
//! (`--set section.key=value`) edit the parsed tree before validation, so
//! the echoed config always reflects what actually ran.

use crate::error::{DilabError, Result};
use crate::grid::{ComplexField, Grid, GridMode};
use crate::multiplier::MultiplierFamily;
use crate::potential::{smooth_step, PotentialFamily};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registry name of the study to run.
    pub experiment: String,
    pub grid: GridBlock,
    pub potential: PotentialFamily,
    #[serde(default)]
    pub multiplier: Option<MultiplierFamily>,
    pub data: DataBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    /// Every bound used by a pass/fail criterion, by name.
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Cartesian,
    Radial,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub mode: GridKind,
    pub dimension: usize,
    pub extent: f64,
    pub points: usize,
}

impl GridBlock {
    pub fn build(&self) -> Result<Arc<Grid>> {
        match self.mode {
            GridKind::Cartesian => Grid::cartesian(self.dimension, self.extent, self.points),
            GridKind::Radial => Grid::radial(self.dimension, self.extent, self.points),
        }
    }

    /// Same layout at a different resolution (refinement ladders).
    pub fn build_with_points(&self, points: usize) -> Result<Arc<Grid>> {
        GridBlock { points, ..self.clone() }.build()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataBlock {
    /// amplitude · e^{−r²/(2σ²)}.
    Gaussian { sigma: f64, amplitude: f64 },
    /// cos(2π·carrier·x) · e^{−x²/(2σ²)} on a line grid.
    WavePacket { carrier: f64, sigma: f64 },
    /// Smooth profile supported in the ball of the given radius, falling to
    /// zero across the outer `width` band, normalized to unit L² mass.
    CompactBump { radius: f64, width: f64 },
    /// Seeded suite of real band-limited fields (survey studies draw members
    /// themselves; `realize` rejects this family).
    RandomBand {
        seed: u64,
        count: usize,
        sigma: f64,
        band_lo: f64,
        band_hi: f64,
    },
}

impl DataBlock {
    pub fn realize(&self, grid: Arc<Grid>) -> Result<ComplexField> {
        match *self {
            DataBlock::Gaussian { sigma, amplitude } => {
                if !(sigma > 0.0) {
                    return Err(DilabError::Config("data.sigma must be positive".into()));
                }
                Ok(ComplexField::gaussian(grid, sigma, amplitude))
            }
            DataBlock::WavePacket { carrier, sigma } => {
                if grid.mode != GridMode::Cartesian1 {
                    return Err(DilabError::Config(
                        "wave_packet data needs a one-dimensional cartesian grid".into(),
                    ));
                }
                if !(sigma > 0.0) {
                    return Err(DilabError::Config("data.sigma must be positive".into()));
                }
                Ok(ComplexField::from_fn(grid, "wave_packet", |x, _| {
                    let v = (2.0 * PI * carrier * x).cos() * (-x * x / (2.0 * sigma * sigma)).exp();
                    Complex64::new(v, 0.0)
                }))
            }
            DataBlock::CompactBump { radius, width } => {
                if !(width > 0.0) || !(radius > width) {
                    return Err(DilabError::Config(
                        "compact_bump data needs radius > width > 0".into(),
                    ));
                }
                if radius > grid.extent {
                    return Err(DilabError::Config(format!(
                        "compact_bump radius {radius} exceeds the grid extent {}",
                        grid.extent
                    )));
                }
                let inner = radius - width;
                let mut f = ComplexField::from_fn(grid, "compact_bump", |x, y| {
                    let r = x.hypot(y);
                    Complex64::new(1.0 - smooth_step((r - inner) / width), 0.0)
                });
                let norm = f.mass().sqrt();
                for v in &mut f.values {
                    *v /= norm;
                }
                Ok(f)
            }
            DataBlock::RandomBand { .. } => Err(DilabError::Config(
                "random_band data is a suite; the survey study draws members itself".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Increasing horizon ladder (Møller times, strip half-widths, RAGE T).
    pub t_ladder: Vec<f64>,
    /// Window radii for local-smoothing and rescaling sweeps.
    pub r_ladder: Vec<f64>,
    /// Multiplier regularization ladder, largest to smallest.
    pub eps_ladder: Vec<f64>,
    /// Plateau sharpness values for sandwich checks.
    pub k_list: Vec<u32>,
    /// Grid resolutions for refinement ladders.
    pub n_ladder: Vec<usize>,
    /// Individual probe times (pointwise observables).
    pub probe_times: Vec<f64>,
    /// Half-width T of the time strip, or the single evolution time.
    pub time_horizon: Option<f64>,
    pub time_step: Option<f64>,
    pub steps: Option<usize>,
}

impl SweepBlock {
    pub fn horizon(&self) -> Result<f64> {
        match self.time_horizon {
            Some(t) if t > 0.0 => Ok(t),
            _ => Err(DilabError::Config(
                "sweep.time_horizon must be present and positive".into(),
            )),
        }
    }

    pub fn step_count(&self) -> Result<usize> {
        match self.steps {
            Some(s) if s >= 2 => Ok(s),
            _ => Err(DilabError::Config(
                "sweep.steps must be present and at least 2".into(),
            )),
        }
    }

    pub fn dt(&self) -> Result<f64> {
        match self.time_step {
            Some(dt) if dt > 0.0 => Ok(dt),
            _ => Err(DilabError::Config(
                "sweep.time_step must be present and positive".into(),
            )),
        }
    }

    pub fn ladder(&self, which: &str) -> Result<Vec<f64>> {
        let values = match which {
            "t" => &self.t_ladder,
            "r" => &self.r_ladder,
            "eps" => &self.eps_ladder,
            _ => {
                return Err(DilabError::Config(format!("unknown ladder '{which}'")));
            }
        };
        if values.len() < 2 {
            return Err(DilabError::Config(format!(
                "sweep.{which}_ladder needs at least two entries"
            )));
        }
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) || values.iter().any(|&v| !(v > 0.0)) {
            return Err(DilabError::Config(format!(
                "sweep.{which}_ladder must be positive and strictly monotone"
            )));
        }
        Ok(values.clone())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: String,
    /// Any subset of {"json", "csv"}.
    pub formats: Vec<String>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: "out".into(),
            formats: vec!["json".into(), "csv".into()],
        }
    }
}

impl ExperimentConfig {
    /// A named bound from the tolerance table; absence is a schema error, so
    /// no criterion can silently fall back to a hidden default.
    pub fn tolerance(&self, name: &str) -> Result<f64> {
        self.tolerances.get(name).copied().ok_or_else(|| {
            DilabError::Config(format!("tolerances.{name} is required by this experiment"))
        })
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        self.grid.build()
    }

    pub fn initial_data(&self, grid: Arc<Grid>) -> Result<ComplexField> {
        self.data.realize(grid)
    }

    pub fn multiplier_family(&self) -> Result<MultiplierFamily> {
        self.multiplier
            .clone()
            .ok_or_else(|| DilabError::Config("a [multiplier] block is required".into()))
    }

    /// Deterministic JSON echo of the effective config.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(DilabError::Config("experiment name must not be empty".into()));
        }
        for (name, value) in &self.tolerances {
            if !(value.is_finite() && *value > 0.0) {
                return Err(DilabError::Config(format!(
                    "tolerances.{name} must be finite and positive, got {value}"
                )));
            }
        }
        for format in &self.output.formats {
            if format != "json" && format != "csv" {
                return Err(DilabError::Config(format!(
                    "output.formats entries must be \"json\" or \"csv\", got \"{format}\""
                )));
            }
        }
        Ok(())
    }
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        DilabError::Io(std::io::Error::new(e.kind(), format!("read {}: {e}", path.display())))
    })?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut tree: toml::Value = text
        .parse()
        .map_err(|e| DilabError::Config(format!("config parse: {e}")))?;
    for spec in overrides {
        apply_override(&mut tree, spec)?;
    }
    let cfg: ExperimentConfig = tree
        .try_into()
        .map_err(|e| DilabError::Config(format!("config schema: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Apply one `section.key=value` override to the parsed tree. The value is
/// parsed as TOML, so floats, integers, strings, booleans, and arrays all
/// work; intermediate tables are created as needed.
fn apply_override(tree: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        DilabError::Config(format!("override '{spec}' must look like section.key=value"))
    })?;
    let path = path.trim();
    if path.is_empty() {
        return Err(DilabError::Config(format!("override '{spec}' has an empty key path")));
    }
    let parsed: toml::Value = format!("v = {raw}")
        .parse::<toml::Table>()
        .map(|t| t["v"].clone())
        .or_else(|_| {
            format!("v = \"{}\"", raw.trim())
                .parse::<toml::Table>()
                .map(|t| t["v"].clone())
        })
        .map_err(|e| DilabError::Config(format!("override value '{raw}': {e}")))?;
    let mut node = tree;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            DilabError::Config(format!("override path '{path}' descends into a non-table"))
        })?;
        if i + 1 == segments.len() {
            table.insert(segment.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    unreachable!("loop returns on the last segment")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "finite_t_identity"

[grid]
mode = "cartesian"
dimension = 1
extent = 24.0
points = 512

[potential]
family = "inverse_power"
c = 0.1
p = 1.0

[multiplier]
family = "japanese_bracket"

[data]
family = "gaussian"
sigma = 2.0
amplitude = 1.0

[sweep]
time_horizon = 4.0
steps = 64
n_ladder = [256, 512, 1024]

[tolerances]
residual = 1e-3
order_low = 1.7
order_high = 2.3
tail_mass = 1e-6
"#;

    #[test]
    fn sample_config_parses_and_builds() {
        let cfg = parse_config(SAMPLE, &[]).unwrap();
        assert_eq!(cfg.experiment, "finite_t_identity");
        let grid = cfg.grid().unwrap();
        assert_eq!(grid.node_count(), 512);
        let f = cfg.initial_data(grid).unwrap();
        assert!(f.mass() > 0.0);
        assert_eq!(cfg.tolerance("residual").unwrap(), 1e-3);
        assert!(cfg.tolerance("missing").is_err());
        assert_eq!(cfg.sweep.horizon().unwrap(), 4.0);
        assert_eq!(cfg.sweep.step_count().unwrap(), 64);
        assert!(matches!(
            cfg.multiplier_family().unwrap(),
            MultiplierFamily::JapaneseBracket
        ));
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let bad = SAMPLE.replace("[potential]", "[potental]");
        assert!(matches!(parse_config(&bad, &[]), Err(DilabError::Config(_))));
        let bad = format!("{SAMPLE}\n[output]\ndirectory = \"out\"\nformat = [\"json\"]\n");
        assert!(matches!(parse_config(&bad, &[]), Err(DilabError::Config(_))));
        // Top-level stray keys must come before the first table header to
        // stay top-level in TOML.
        let bad = format!("extra_top_level = 1\n{SAMPLE}");
        assert!(matches!(parse_config(&bad, &[]), Err(DilabError::Config(_))));
    }

    #[test]
    fn overrides_edit_the_tree_before_validation() {
        let cfg = parse_config(
            SAMPLE,
            &[
                "grid.points=256".into(),
                "sweep.time_horizon=2.0".into(),
                "tolerances.residual=5e-4".into(),
                "data.sigma=1.5".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.grid.points, 256);
        assert_eq!(cfg.sweep.horizon().unwrap(), 2.0);
        assert_eq!(cfg.tolerance("residual").unwrap(), 5e-4);
        assert!(matches!(cfg.data, DataBlock::Gaussian { sigma, .. } if sigma == 1.5));
    }

    #[test]
    fn override_values_cover_toml_types() {
        let cfg = parse_config(
            SAMPLE,
            &[
                "sweep.t_ladder=[1.0, 2.0, 4.0]".into(),
                "output.directory=elsewhere".into(),
                "multiplier.family=\"smoothed_abs\"".into(),
                "multiplier.eps=0.5".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.sweep.t_ladder, vec![1.0, 2.0, 4.0]);
        assert_eq!(cfg.output.directory, "elsewhere");
        assert!(matches!(
            cfg.multiplier_family().unwrap(),
            MultiplierFamily::SmoothedAbs { eps } if eps == 0.5
        ));
        assert!(parse_config(SAMPLE, &["no_equals_sign".into()]).is_err());
        // An override that breaks the schema is still a schema error.
        assert!(parse_config(SAMPLE, &["grid.points=\"many\"".into()]).is_err());
    }

    #[test]
    fn tolerances_must_be_positive_and_finite() {
        let bad = SAMPLE.replace("residual = 1e-3", "residual = -1e-3");
        assert!(parse_config(&bad, &[]).is_err());
        let bad = SAMPLE.replace("residual = 1e-3", "residual = inf");
        assert!(parse_config(&bad, &[]).is_err());
    }

    #[test]
    fn ladder_validation_requires_monotone_positive_entries() {
        let cfg = parse_config(SAMPLE, &["sweep.t_ladder=[4.0, 8.0, 16.0]".into()]).unwrap();
        assert_eq!(cfg.sweep.ladder("t").unwrap().len(), 3);
        let cfg = parse_config(SAMPLE, &["sweep.eps_ladder=[0.4, 0.2, 0.1]".into()]).unwrap();
        assert_eq!(cfg.sweep.ladder("eps").unwrap(), vec![0.4, 0.2, 0.1]);
        let cfg = parse_config(SAMPLE, &["sweep.t_ladder=[4.0, 4.0]".into()]).unwrap();
        assert!(cfg.sweep.ladder("t").is_err());
        let cfg = parse_config(SAMPLE, &[]).unwrap();
        assert!(cfg.sweep.ladder("t").is_err());
        assert!(cfg.sweep.ladder("bogus").is_err());
    }

    #[test]
    fn compact_bump_data_has_unit_mass_inside_its_ball() {
        let cfg = parse_config(
            SAMPLE,
            &[
                "grid.mode=\"radial\"".into(),
                "grid.dimension=3".into(),
                "grid.extent=40.0".into(),
                "data.family=\"compact_bump\"".into(),
                "data.radius=5.0".into(),
                "data.width=2.0".into(),
                "data.sigma=0.0".into(),
            ],
        );
        // sigma is not a compact_bump key: unknown key must be rejected.
        assert!(cfg.is_err());
        let cfg = parse_config(
            &SAMPLE
                .replace("family = \"gaussian\"\nsigma = 2.0\namplitude = 1.0", "family = \"compact_bump\"\nradius = 5.0\nwidth = 2.0")
                .replace("mode = \"cartesian\"", "mode = \"radial\"")
                .replace("dimension = 1", "dimension = 3"),
            &[],
        )
        .unwrap();
        let grid = cfg.grid().unwrap();
        let f = cfg.initial_data(grid.clone()).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-12);
        for (i, v) in f.values.iter().enumerate() {
            if grid.radius_at(i) > 5.0 {
                assert_eq!(v.norm_sqr(), 0.0, "support leaks past the ball");
            }
        }
    }

    #[test]
    fn wave_packet_rejects_non_line_grids() {
        let text = SAMPLE.replace(
            "family = \"gaussian\"\nsigma = 2.0\namplitude = 1.0",
            "family = \"wave_packet\"\ncarrier = 0.375\nsigma = 5.0",
        );
        let cfg = parse_config(&text, &[]).unwrap();
        assert!(cfg.initial_data(cfg.grid().unwrap()).is_ok());
        let cfg = parse_config(
            &text.replace("dimension = 1", "dimension = 2"),
            &[],
        )
        .unwrap();
        assert!(cfg.initial_data(cfg.grid().unwrap()).is_err());
    }

    #[test]
    fn random_band_cannot_be_realized_as_a_single_field() {
        let text = SAMPLE.replace(
            "family = \"gaussian\"\nsigma = 2.0\namplitude = 1.0",
            "family = \"random_band\"\nseed = 7\ncount = 100\nsigma = 2.2\nband_lo = 0.5\nband_hi = 1.5",
        );
        let cfg = parse_config(&text, &[]).unwrap();
        assert!(cfg.initial_data(cfg.grid().unwrap()).is_err());
    }

    #[test]
    fn echo_is_deterministic() {
        let cfg = parse_config(SAMPLE, &[]).unwrap();
        let a = serde_json::to_string(&cfg.echo()).unwrap();
        let b = serde_json::to_string(&parse_config(SAMPLE, &[]).unwrap().echo()).unwrap();
        assert_eq!(a, b);
    }
}
