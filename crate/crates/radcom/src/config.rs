//! Experiment configuration: one TOML document per run.
//!
//! Every run is fully described by the config plus its seed; there is no
//! implicit randomness. The schema is documented in the README.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::Region;
use crate::clocksync::{ClockModel, ClockScenario};
use crate::commlink::Equalizer;
use crate::fusion::{FusionMode, GridSpec};
use crate::scene::{build_fig3_network, validate_scene, Scene, Target, Vec2};
use crate::waveform::OfdmConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// One ambiguity map plus context report.
    Ambiguity,
    /// BER vs Eb/N0 sweep with the analytic reference column.
    BerSweep,
    /// The two-regime resolution comparison (synchronized vs time-only).
    SyncCompare,
    /// Ambiguity map with injected clutter, compared against clean.
    ClutterStudy,
}

/// Scene description: generated axis deployment or fully inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SceneConfig {
    Axes {
        p: usize,
        q: usize,
        spacing_m: f64,
        #[serde(default)]
        targets: Vec<Target>,
    },
    Inline { scene: Scene },
}

fn default_mode() -> FusionMode {
    FusionMode::Coherent
}

fn default_detection_threshold() -> f64 {
    0.0
}

fn default_exclusion_radius() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusionConfig {
    #[serde(default = "default_mode")]
    pub mode: FusionMode,
    pub grid: GridSpec,
    #[serde(default = "default_detection_threshold")]
    pub detection_threshold: f64,
    #[serde(default = "default_exclusion_radius")]
    pub exclusion_radius_m: f64,
}

fn default_timeonly_mode() -> FusionMode {
    FusionMode::Noncoherent
}

/// Grids and fusion modes of the two-regime comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyncCompareConfig {
    pub sync_grid: GridSpec,
    pub timeonly_grid: GridSpec,
    #[serde(default = "default_mode")]
    pub sync_mode: FusionMode,
    /// With random per-node phases a single coherent realization is a
    /// speckle field; the noncoherent map is the envelope the regime
    /// comparison measures.
    #[serde(default = "default_timeonly_mode")]
    pub timeonly_mode: FusionMode,
}

fn default_min_bits() -> usize {
    1_000_000
}

fn default_equalizer() -> Equalizer {
    Equalizer::Zf
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BerConfig {
    pub ebn0_db: Vec<f64>,
    #[serde(default = "default_min_bits")]
    pub min_bits: usize,
    #[serde(default = "default_equalizer")]
    pub equalizer: Equalizer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClutterConfig {
    pub count: usize,
    /// Mean clutter power relative to the strongest target, dB.
    pub amplitude_db: f64,
    pub region: Region,
}

fn default_clocks() -> ClockModel {
    ClockModel {
        scenario: ClockScenario::Perfect,
        sigma_cfo_hz: 0.0,
        pin_reference: false,
    }
}

fn default_n_seeds() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Base seed; every random stream derives from it.
    pub seed: u64,
    pub output_dir: String,
    /// Per-link SNR in dB; omit for noiseless synthesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub ofdm: OfdmConfig,
    pub scene: SceneConfig,
    #[serde(default = "default_clocks")]
    pub clocks: ClockModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync_compare: Option<SyncCompareConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ber: Option<BerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clutter: Option<ClutterConfig>,
    /// Monte Carlo repetitions for sweep metrics.
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scene: {0:?}")]
    Scene(Vec<crate::scene::SceneError>),
    #[error("invalid waveform config: {0}")]
    Waveform(#[from] crate::waveform::WaveformError),
    #[error("experiment kind {kind:?} requires the [{section}] section")]
    MissingSection {
        kind: ExperimentKind,
        section: &'static str,
    },
    #[error("ber.ebn0_db must be non-empty")]
    EmptyBerPoints,
    #[error("invalid grid: {0}")]
    Grid(#[from] crate::fusion::FusionError),
    #[error("snr_db must be finite when given")]
    NonFiniteSnr,
    #[error("n_seeds must be >= 1")]
    NoSeeds,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Builds the scene described by the config.
    pub fn build_scene(&self) -> Result<Scene, ConfigError> {
        let scene = match &self.scene {
            SceneConfig::Axes {
                p,
                q,
                spacing_m,
                targets,
            } => {
                let mut s = build_fig3_network(*p, *q, *spacing_m)
                    .map_err(|e| ConfigError::Scene(vec![e]))?;
                for ap in s.transmitters.iter_mut().chain(s.receivers.iter_mut()) {
                    ap.carrier_hz = self.ofdm.carrier_hz;
                }
                s.targets = targets.clone();
                s
            }
            SceneConfig::Inline { scene } => scene.clone(),
        };
        validate_scene(&scene).map_err(ConfigError::Scene)?;
        Ok(scene)
    }

    /// Surfaces every invariant violation before any long computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.ofdm.validate()?;
        self.build_scene()?;
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(ConfigError::NonFiniteSnr);
            }
        }
        if self.n_seeds == 0 {
            return Err(ConfigError::NoSeeds);
        }
        match self.kind {
            ExperimentKind::Ambiguity | ExperimentKind::ClutterStudy => {
                let fusion = self.fusion.as_ref().ok_or(ConfigError::MissingSection {
                    kind: self.kind,
                    section: "fusion",
                })?;
                fusion.grid.validate()?;
                if self.kind == ExperimentKind::ClutterStudy && self.clutter.is_none() {
                    return Err(ConfigError::MissingSection {
                        kind: self.kind,
                        section: "clutter",
                    });
                }
            }
            ExperimentKind::SyncCompare => {
                let sc = self
                    .sync_compare
                    .as_ref()
                    .ok_or(ConfigError::MissingSection {
                        kind: self.kind,
                        section: "sync_compare",
                    })?;
                sc.sync_grid.validate()?;
                sc.timeonly_grid.validate()?;
            }
            ExperimentKind::BerSweep => {
                let ber = self.ber.as_ref().ok_or(ConfigError::MissingSection {
                    kind: self.kind,
                    section: "ber",
                })?;
                if ber.ebn0_db.is_empty() {
                    return Err(ConfigError::EmptyBerPoints);
                }
            }
        }
        Ok(())
    }

    /// The canonical two-regime comparison config:
    /// 26 GHz carrier, 400 MHz bandwidth, 32 subcarriers, SNR 30 dB,
    /// 8 + 8 elements at 2 m spacing, one static unit target. The element
    /// count and the target at (7, 8) are documented assumptions.
    pub fn fig3_default(output_dir: &str, seed: u64) -> Self {
        let target = Vec2::new(7.0, 8.0);
        ExperimentConfig {
            kind: ExperimentKind::SyncCompare,
            seed,
            output_dir: output_dir.to_string(),
            snr_db: Some(30.0),
            ofdm: OfdmConfig::default(),
            scene: SceneConfig::Axes {
                p: 8,
                q: 8,
                spacing_m: 2.0,
                targets: vec![Target::static_unit(target)],
            },
            clocks: default_clocks(),
            fusion: None,
            sync_compare: Some(SyncCompareConfig {
                sync_grid: GridSpec::centered(target, 0.2, 0.001),
                timeonly_grid: GridSpec::centered(target, 4.0, 0.02),
                sync_mode: FusionMode::Coherent,
                timeonly_mode: FusionMode::Noncoherent,
            }),
            ber: None,
            clutter: None,
            n_seeds: default_n_seeds(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "ambiguity"
seed = 1
output_dir = "out"
snr_db = 30.0

[scene]
kind = "axes"
p = 2
q = 2
spacing_m = 2.0

[[scene.targets]]
position = { x = 3.0, y = 3.0 }
velocity = { x = 0.0, y = 0.0 }
reflectivity = { kind = "constant", re = 1.0, im = 0.0 }

[fusion]
mode = "coherent"

[fusion.grid]
x_min = 2.0
x_max = 4.0
y_min = 2.0
y_max = 4.0
cell_m = 0.01
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Ambiguity);
        assert_eq!(cfg.ofdm.num_subcarriers, 32);
        let scene = cfg.build_scene().unwrap();
        assert_eq!(scene.num_links(), 4);
        assert_eq!(scene.targets.len(), 1);
    }

    #[test]
    fn missing_seed_is_named() {
        let text = MINIMAL.replace("seed = 1\n", "");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn missing_section_for_kind() {
        let text = MINIMAL.replace("kind = \"ambiguity\"", "kind = \"ber-sweep\"");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("ber"), "{err}");
    }

    #[test]
    fn clock_scenario_round_trip() {
        let text = format!(
            "{MINIMAL}\n[clocks]\nkind = \"free-running\"\nsigma_t_s = 33e-12\n"
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(
            cfg.clocks.scenario,
            ClockScenario::FreeRunning { sigma_t_s: 33e-12 }
        );
    }

    #[test]
    fn fig3_default_is_valid() {
        let cfg = ExperimentConfig::fig3_default("out", 1);
        cfg.validate().unwrap();
        let toml_text = toml::to_string_pretty(&cfg).unwrap();
        let back = ExperimentConfig::from_toml_str(&toml_text).unwrap();
        back.validate().unwrap();
    }
}
