//! Frequency-domain synthesis of each bistatic link observation.
//!
//! Symbol-domain (post-CP-removal) channel model: no inter-symbol
//! interference is synthesized, which holds while the delay spread stays
//! within the cyclic prefix. Each point scatterer contributes
//!
//!   α · exp(-j2π(f_c + kΔf)τ) · exp(+j2π f_d n T_sym)
//!
//! times the known symbol d[k,n], plus clock terms exp(j(φ_q - φ_p)) and
//! exp(-j2π(f_c + kΔf)(ε_q - ε_p)), plus circular complex Gaussian noise.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocksync::ClockState;
use crate::scene::{Reflectivity, Scene, Scatterer, Vec2};
use crate::seeds;
use crate::waveform::{OfdmConfig, OfdmFrame};
use crate::SPEED_OF_LIGHT;

/// Received frequency-domain symbols for one (tx, rx) bistatic link.
#[derive(Debug, Clone)]
pub struct LinkObservation {
    pub tx_id: u32,
    pub rx_id: u32,
    /// Row-major N x M: `y[k * m + n]`.
    pub y: Vec<Complex64>,
    pub num_subcarriers: usize,
    pub num_symbols: usize,
    /// Configured SNR; `None` means noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("link index ({0}, {1}) out of range")]
    LinkOutOfRange(usize, usize),
    #[error("missing clock state for node {0}")]
    MissingClock(u32),
    #[error("bistatic delay {delay_s:.3e} s exceeds the unambiguous window {window_s:.3e} s")]
    DelayOutsideWindow { delay_s: f64, window_s: f64 },
    #[error("delay spread {spread_s:.3e} s exceeds the cyclic prefix {cp_s:.3e} s")]
    DelaySpreadExceedsCp { spread_s: f64, cp_s: f64 },
    #[error("SNR must be finite, got {0}")]
    NonFiniteSnr(f64),
    #[error("scatterer co-located with tx or rx: singular geometry for Doppler")]
    SingularGeometry,
    #[error("clutter region is empty")]
    EmptyRegion,
}

/// Bistatic range |target - tx| + |target - rx|, meters.
pub fn bistatic_range(tx: Vec2, rx: Vec2, target: Vec2) -> f64 {
    target.sub(tx).norm() + target.sub(rx).norm()
}

/// Bistatic Doppler shift, Hz. Positive for an approaching target
/// (decreasing bistatic range sum).
pub fn bistatic_doppler(
    tx: Vec2,
    rx: Vec2,
    target: Vec2,
    velocity: Vec2,
    carrier_hz: f64,
) -> Result<f64, ChannelError> {
    let d_tx = target.sub(tx);
    let d_rx = target.sub(rx);
    let (r_tx, r_rx) = (d_tx.norm(), d_rx.norm());
    if r_tx == 0.0 || r_rx == 0.0 {
        return Err(ChannelError::SingularGeometry);
    }
    let u_sum = Vec2::new(d_tx.x / r_tx + d_rx.x / r_rx, d_tx.y / r_tx + d_rx.y / r_rx);
    Ok(-(carrier_hz / SPEED_OF_LIGHT) * u_sum.dot(velocity))
}

/// Knobs of [`synthesize_link`] beyond the scene itself.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisOptions {
    /// `None` disables noise entirely.
    pub snr_db: Option<f64>,
    /// Base seed; the per-link noise stream is derived from (seed, tx, rx).
    pub seed: u64,
    /// When set, adds the tx->rx line-of-sight leakage as a static
    /// scatterer of this linear amplitude.
    pub direct_path_amplitude: Option<f64>,
}

impl SynthesisOptions {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            snr_db: None,
            seed,
            direct_path_amplitude: None,
        }
    }

    pub fn with_snr(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db: Some(snr_db),
            seed,
            direct_path_amplitude: None,
        }
    }
}

struct Path {
    amplitude: Complex64,
    delay_s: f64,
    doppler_hz: f64,
}

/// Synthesizes the frequency-domain observation of link (p, q).
///
/// Noise variance is set so the strongest target's per-sample return power
/// over noise power equals `snr_db` (reference power 1 when the scene has
/// no targets). Deterministic in (inputs, seed); independent of scheduling.
pub fn synthesize_link(
    scene: &Scene,
    frame: &OfdmFrame,
    cfg: &OfdmConfig,
    link: (usize, usize),
    clocks: &[ClockState],
    opts: &SynthesisOptions,
) -> Result<LinkObservation, ChannelError> {
    let (p, q) = link;
    let tx = scene
        .transmitters
        .get(p)
        .ok_or(ChannelError::LinkOutOfRange(p, q))?;
    let rx = scene
        .receivers
        .get(q)
        .ok_or(ChannelError::LinkOutOfRange(p, q))?;
    let clock_of = |id: u32| {
        clocks
            .iter()
            .find(|c| c.node_id == id)
            .copied()
            .ok_or(ChannelError::MissingClock(id))
    };
    let ck_tx = clock_of(tx.id)?;
    let ck_rx = clock_of(rx.id)?;
    if let Some(snr) = opts.snr_db {
        if !snr.is_finite() {
            return Err(ChannelError::NonFiniteSnr(snr));
        }
    }

    let fc = cfg.carrier_hz;
    let mut paths = Vec::new();
    for (ti, t) in scene.targets.iter().enumerate() {
        let delay_s = bistatic_range(tx.position, rx.position, t.position) / SPEED_OF_LIGHT;
        let doppler_hz = if t.velocity.x == 0.0 && t.velocity.y == 0.0 {
            0.0
        } else {
            bistatic_doppler(tx.position, rx.position, t.position, t.velocity, fc)?
        };
        let amplitude = match t.reflectivity {
            Reflectivity::Constant { re, im } => Complex64::new(re, im),
            Reflectivity::RcsRandom { mean_power } => {
                let mut rng = seeds::derived_rng(
                    opts.seed,
                    "rcs",
                    &[u64::from(tx.id), u64::from(rx.id), ti as u64],
                );
                let s = (mean_power / 2.0).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * s, im * s)
            }
        };
        paths.push(Path {
            amplitude,
            delay_s,
            doppler_hz,
        });
    }
    for c in &scene.clutter {
        paths.push(Path {
            amplitude: c.amplitude(),
            delay_s: bistatic_range(tx.position, rx.position, c.position) / SPEED_OF_LIGHT,
            doppler_hz: 0.0,
        });
    }
    if let Some(amp) = opts.direct_path_amplitude {
        paths.push(Path {
            amplitude: Complex64::new(amp, 0.0),
            delay_s: rx.position.sub(tx.position).norm() / SPEED_OF_LIGHT,
            doppler_hz: 0.0,
        });
    }

    let window_s = cfg.unambiguous_delay_s();
    let mut min_delay = f64::INFINITY;
    let mut max_delay: f64 = 0.0;
    for path in &paths {
        if path.delay_s >= window_s {
            return Err(ChannelError::DelayOutsideWindow {
                delay_s: path.delay_s,
                window_s,
            });
        }
        min_delay = min_delay.min(path.delay_s);
        max_delay = max_delay.max(path.delay_s);
    }
    if !paths.is_empty() {
        let spread = max_delay - min_delay;
        let cp_s = cfg.cp_duration_s();
        if spread > cp_s {
            return Err(ChannelError::DelaySpreadExceedsCp {
                spread_s: spread,
                cp_s,
            });
        }
    }

    let n = cfg.num_subcarriers;
    let m = cfg.num_symbols;
    let df = cfg.subcarrier_spacing_hz();
    let t_sym = cfg.symbol_duration_s();
    let dphi = ck_rx.phase_offset_rad - ck_tx.phase_offset_rad;
    let deps = ck_rx.time_offset_s - ck_tx.time_offset_s;
    let dcfo = ck_rx.cfo_hz - ck_tx.cfo_hz;
    let link_phase = Complex64::from_polar(1.0, dphi);

    let mut y = vec![Complex64::default(); n * m];
    for path in &paths {
        for k in 0..n {
            let f_k = fc + k as f64 * df;
            // Carrier+subcarrier phase of the propagation delay and of the
            // clock time-offset difference.
            let static_phase = -std::f64::consts::TAU * f_k * (path.delay_s + deps);
            let base = path.amplitude * link_phase * Complex64::from_polar(1.0, static_phase);
            let step =
                Complex64::from_polar(1.0, std::f64::consts::TAU * (path.doppler_hz - dcfo) * t_sym);
            let mut rot = Complex64::new(1.0, 0.0);
            for sym in 0..m {
                y[k * m + sym] += base * rot * frame.symbol(k, sym);
                rot *= step;
            }
        }
    }

    if let Some(snr_db) = opts.snr_db {
        let ref_power = scene
            .targets
            .iter()
            .map(|t| t.reflectivity.mean_power())
            .fold(f64::NEG_INFINITY, f64::max);
        let ref_power = if ref_power.is_finite() { ref_power } else { 1.0 };
        let noise_var = ref_power / 10f64.powf(snr_db / 10.0);
        let s = (noise_var / 2.0).sqrt();
        let mut rng = seeds::derived_rng(
            opts.seed,
            "noise",
            &[u64::from(tx.id), u64::from(rx.id)],
        );
        for v in &mut y {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(re * s, im * s);
        }
    }

    Ok(LinkObservation {
        tx_id: tx.id,
        rx_id: rx.id,
        y,
        num_subcarriers: n,
        num_symbols: m,
        snr_db: opts.snr_db,
        seed: opts.seed,
    })
}

/// Axis-aligned bounding box for clutter placement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Appends `count` static point scatterers uniformly placed in `region`,
/// with circular complex Gaussian amplitudes whose mean power sits
/// `amplitude_db` dB relative to the strongest target. Deterministic in seed.
pub fn add_clutter(
    scene: &Scene,
    count: usize,
    amplitude_db: f64,
    region: Region,
    seed: u64,
) -> Result<Scene, ChannelError> {
    if !(region.x_max > region.x_min) || !(region.y_max > region.y_min) {
        return Err(ChannelError::EmptyRegion);
    }
    let ref_power = scene
        .targets
        .iter()
        .map(|t| t.reflectivity.mean_power())
        .fold(f64::NEG_INFINITY, f64::max);
    let ref_power = if ref_power.is_finite() { ref_power } else { 1.0 };
    let mean_power = ref_power * 10f64.powf(amplitude_db / 10.0);
    let s = (mean_power / 2.0).sqrt();

    let mut out = scene.clone();
    let mut rng = seeds::derived_rng(seed, "clutter", &[]);
    for _ in 0..count {
        let x = region.x_min + rng.gen::<f64>() * (region.x_max - region.x_min);
        let y = region.y_min + rng.gen::<f64>() * (region.y_max - region.y_min);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.clutter.push(Scatterer {
            position: Vec2::new(x, y),
            amplitude_re: re * s,
            amplitude_im: im * s,
        });
    }
    Ok(out)
}
