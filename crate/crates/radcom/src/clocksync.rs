//! Per-node clock state modeling for the synchronization regimes.
//!
//! Only residual clock errors are modeled (time offset ε, phase offset φ,
//! optional CFO); the synchronization protocols that produce them are out
//! of scope.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClockScenario {
    /// Time and phase synchronized: all offsets zero.
    Perfect,
    /// Time synchronized only: ε = 0, φ ~ uniform[0, 2π).
    TimeOnly,
    /// Free running: ε ~ Gaussian(0, σ_t), φ ~ uniform[0, 2π).
    FreeRunning { sigma_t_s: f64 },
}

/// Distribution of per-node clock errors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClockModel {
    #[serde(flatten)]
    pub scenario: ClockScenario,
    /// CFO standard deviation, Hz. Defaults to zero.
    #[serde(default)]
    pub sigma_cfo_hz: f64,
    /// Pin node 0 of the sampled list as the reference (ε = φ = 0).
    #[serde(default)]
    pub pin_reference: bool,
}

/// Sampled clock state of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockState {
    pub node_id: u32,
    /// Time offset ε, seconds.
    pub time_offset_s: f64,
    /// Phase offset φ, radians in [0, 2π).
    pub phase_offset_rad: f64,
    /// Carrier frequency offset, Hz.
    pub cfo_hz: f64,
}

impl ClockState {
    pub fn zero(node_id: u32) -> Self {
        Self {
            node_id,
            time_offset_s: 0.0,
            phase_offset_rad: 0.0,
            cfo_hz: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("sigma_t must be >= 0, got {0}")]
    NegativeSigma(f64),
    #[error("empty node list")]
    EmptyNodeList,
}

/// Builds the clock model for a named regime.
pub fn clock_scenario(scenario: ClockScenario) -> Result<ClockModel, ClockError> {
    if let ClockScenario::FreeRunning { sigma_t_s } = scenario {
        if !(sigma_t_s >= 0.0) {
            return Err(ClockError::NegativeSigma(sigma_t_s));
        }
    }
    Ok(ClockModel {
        scenario,
        sigma_cfo_hz: 0.0,
        pin_reference: false,
    })
}

/// Samples one clock state per node, deterministic in (model, node id, seed).
pub fn sample_clocks(
    model: &ClockModel,
    node_ids: &[u32],
    seed: u64,
) -> Result<Vec<ClockState>, ClockError> {
    if node_ids.is_empty() {
        return Err(ClockError::EmptyNodeList);
    }
    let mut states = Vec::with_capacity(node_ids.len());
    for (idx, &id) in node_ids.iter().enumerate() {
        if model.pin_reference && idx == 0 {
            states.push(ClockState::zero(id));
            continue;
        }
        let mut rng = seeds::derived_rng(seed, "clock", &[u64::from(id)]);
        let (eps, phi) = match model.scenario {
            ClockScenario::Perfect => (0.0, 0.0),
            ClockScenario::TimeOnly => (0.0, rng.gen::<f64>() * std::f64::consts::TAU),
            ClockScenario::FreeRunning { sigma_t_s } => {
                let phi = rng.gen::<f64>() * std::f64::consts::TAU;
                let eps = if sigma_t_s > 0.0 {
                    Normal::new(0.0, sigma_t_s).unwrap().sample(&mut rng)
                } else {
                    0.0
                };
                (eps, phi)
            }
        };
        let cfo = if model.sigma_cfo_hz > 0.0 {
            Normal::new(0.0, model.sigma_cfo_hz).unwrap().sample(&mut rng)
        } else {
            0.0
        };
        states.push(ClockState {
            node_id: id,
            time_offset_s: eps,
            phase_offset_rad: phi,
            cfo_hz: cfo,
        });
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_is_all_zero() {
        let model = clock_scenario(ClockScenario::Perfect).unwrap();
        let states = sample_clocks(&model, &[0, 1, 2], 9).unwrap();
        for s in &states {
            assert_eq!(s.time_offset_s, 0.0);
            assert_eq!(s.phase_offset_rad, 0.0);
            assert_eq!(s.cfo_hz, 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = clock_scenario(ClockScenario::FreeRunning { sigma_t_s: 33e-12 }).unwrap();
        let ids: Vec<u32> = (0..8).collect();
        assert_eq!(
            sample_clocks(&model, &ids, 5).unwrap(),
            sample_clocks(&model, &ids, 5).unwrap()
        );
    }

    #[test]
    fn time_only_phases_nonconstant() {
        let model = clock_scenario(ClockScenario::TimeOnly).unwrap();
        let ids: Vec<u32> = (0..16).collect();
        let states = sample_clocks(&model, &ids, 1).unwrap();
        let first = states[0].phase_offset_rad;
        assert!(states.iter().any(|s| s.phase_offset_rad != first));
        for s in &states {
            assert_eq!(s.time_offset_s, 0.0);
            assert!((0.0..std::f64::consts::TAU).contains(&s.phase_offset_rad));
        }
    }

    #[test]
    fn time_only_phases_are_circularly_uniform() {
        // Mean resultant length of 16 uniform phases stays well below 0.7.
        let model = clock_scenario(ClockScenario::TimeOnly).unwrap();
        let ids: Vec<u32> = (0..16).collect();
        for seed in 0..100u64 {
            let states = sample_clocks(&model, &ids, seed).unwrap();
            let (mut c, mut s) = (0.0f64, 0.0f64);
            for st in &states {
                c += st.phase_offset_rad.cos();
                s += st.phase_offset_rad.sin();
            }
            let r = (c * c + s * s).sqrt() / ids.len() as f64;
            assert!(r < 0.7, "seed {seed}: resultant length {r}");
        }
    }

    #[test]
    fn free_running_range_equivalent_error() {
        // σ_t = 33 ps corresponds to ~1 cm of one-way path error.
        let model = clock_scenario(ClockScenario::FreeRunning { sigma_t_s: 33e-12 }).unwrap();
        let ids: Vec<u32> = (0..2000).collect();
        let states = sample_clocks(&model, &ids, 3).unwrap();
        let rms: f64 = (states
            .iter()
            .map(|s| s.time_offset_s * s.time_offset_s)
            .sum::<f64>()
            / states.len() as f64)
            .sqrt();
        let range_error_cm = rms * crate::SPEED_OF_LIGHT * 100.0;
        assert!(
            (0.9..1.1).contains(&range_error_cm),
            "range-equivalent RMS {range_error_cm} cm"
        );
    }

    #[test]
    fn pinned_reference() {
        let mut model = clock_scenario(ClockScenario::TimeOnly).unwrap();
        model.pin_reference = true;
        let states = sample_clocks(&model, &[5, 6, 7], 1).unwrap();
        assert_eq!(states[0], ClockState::zero(5));
    }

    #[test]
    fn rejects_negative_sigma() {
        assert_eq!(
            clock_scenario(ClockScenario::FreeRunning { sigma_t_s: -1.0 }).unwrap_err(),
            ClockError::NegativeSigma(-1.0)
        );
    }

    #[test]
    fn rejects_empty_nodes() {
        let model = clock_scenario(ClockScenario::Perfect).unwrap();
        assert_eq!(
            sample_clocks(&model, &[], 0).unwrap_err(),
            ClockError::EmptyNodeList
        );
    }
}
