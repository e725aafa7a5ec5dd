//! OFDM frame generation, modulation, and waveform metrics.

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;
use crate::SPEED_OF_LIGHT;

/// OFDM numerology shared by the radar and communication functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// Carrier frequency f_c, Hz.
    pub carrier_hz: f64,
    /// Occupied bandwidth B, Hz.
    pub bandwidth_hz: f64,
    /// Subcarrier count N (power of two).
    pub num_subcarriers: usize,
    /// OFDM symbols per frame M.
    pub num_symbols: usize,
    /// Cyclic-prefix length as a fraction of the symbol, in [0, 1).
    pub cp_fraction: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        // Carrier/bandwidth/subcarrier numbers of the canonical deployment;
        // M = 64 symbols per frame.
        Self {
            carrier_hz: 26.0e9,
            bandwidth_hz: 400.0e6,
            num_subcarriers: 32,
            num_symbols: 64,
            cp_fraction: 0.25,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WaveformError {
    #[error("subcarrier count {0} must be a power of two >= 2")]
    BadSubcarrierCount(usize),
    #[error("symbol count must be >= 1")]
    NoSymbols,
    #[error("cp fraction {0} must lie in [0, 1)")]
    BadCpFraction(f64),
    #[error("carrier {carrier_hz} Hz must exceed bandwidth {bandwidth_hz} Hz")]
    CarrierBelowBandwidth { carrier_hz: f64, bandwidth_hz: f64 },
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("frame has {frame_n} subcarriers but config has {cfg_n}")]
    DimensionMismatch { frame_n: usize, cfg_n: usize },
    #[error("PAPR undefined for an all-zero signal")]
    AllZeroSignal,
    #[error("empty signal")]
    EmptySignal,
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<(), WaveformError> {
        let n = self.num_subcarriers;
        if n < 2 || !n.is_power_of_two() {
            return Err(WaveformError::BadSubcarrierCount(n));
        }
        if self.num_symbols == 0 {
            return Err(WaveformError::NoSymbols);
        }
        if !(0.0..1.0).contains(&self.cp_fraction) {
            return Err(WaveformError::BadCpFraction(self.cp_fraction));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(WaveformError::NonPositiveBandwidth(self.bandwidth_hz));
        }
        if self.carrier_hz <= self.bandwidth_hz {
            return Err(WaveformError::CarrierBelowBandwidth {
                carrier_hz: self.carrier_hz,
                bandwidth_hz: self.bandwidth_hz,
            });
        }
        Ok(())
    }

    /// Subcarrier spacing Δf = B/N, Hz.
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.num_subcarriers as f64
    }

    /// Cyclic-prefix sample count, rounded to the nearest integer.
    pub fn cp_len(&self) -> usize {
        (self.num_subcarriers as f64 * self.cp_fraction).round() as usize
    }

    /// OFDM symbol duration including CP, seconds.
    pub fn symbol_duration_s(&self) -> f64 {
        (self.num_subcarriers + self.cp_len()) as f64 / self.bandwidth_hz
    }

    /// Cyclic-prefix duration, seconds.
    pub fn cp_duration_s(&self) -> f64 {
        self.cp_len() as f64 / self.bandwidth_hz
    }

    /// Unambiguous delay window 1/Δf, seconds.
    pub fn unambiguous_delay_s(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz()
    }

    /// Carrier wavelength, meters.
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }
}

/// One frame of known Gray-mapped QPSK symbols d[k,n], unit modulus.
#[derive(Debug, Clone)]
pub struct OfdmFrame {
    /// Row-major N x M: `symbols[k * m + n]`.
    pub symbols: Vec<Complex64>,
    pub num_subcarriers: usize,
    pub num_symbols: usize,
    pub bits: Vec<u8>,
    pub seed: u64,
}

impl OfdmFrame {
    pub fn symbol(&self, k: usize, n: usize) -> Complex64 {
        self.symbols[k * self.num_symbols + n]
    }
}

/// Time-domain samples, one block of `N + cp_len` per OFDM symbol.
#[derive(Debug, Clone)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
    pub samples_per_symbol: usize,
    pub cp_len: usize,
    pub sample_rate_hz: f64,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray-mapped QPSK: bit pair (b0, b1) -> ((1-2 b0) + j (1-2 b1)) / sqrt(2).
pub fn qpsk_map(b0: u8, b1: u8) -> Complex64 {
    Complex64::new(
        (1.0 - 2.0 * f64::from(b0)) * FRAC_1_SQRT_2,
        (1.0 - 2.0 * f64::from(b1)) * FRAC_1_SQRT_2,
    )
}

/// Hard QPSK decision, inverse of [`qpsk_map`].
pub fn qpsk_demap(s: Complex64) -> (u8, u8) {
    (u8::from(s.re < 0.0), u8::from(s.im < 0.0))
}

/// Draws 2·N·M bits from a seeded ChaCha stream and Gray-maps them to QPSK.
/// Deterministic in (cfg, seed).
pub fn generate_frame(cfg: &OfdmConfig, seed: u64) -> Result<OfdmFrame, WaveformError> {
    cfg.validate()?;
    let n = cfg.num_subcarriers;
    let m = cfg.num_symbols;
    let mut rng = seeds::derived_rng(seed, "frame-bits", &[]);
    let bits: Vec<u8> = (0..2 * n * m).map(|_| rng.gen_range(0..=1u8)).collect();
    let symbols = bits
        .chunks_exact(2)
        .map(|b| qpsk_map(b[0], b[1]))
        .collect();
    Ok(OfdmFrame {
        symbols,
        num_subcarriers: n,
        num_symbols: m,
        bits,
        seed,
    })
}

/// Unitary inverse DFT of each symbol column with cyclic prefix prepended.
/// Frequency-domain energy equals time-domain energy excluding the CP.
pub fn modulate(frame: &OfdmFrame, cfg: &OfdmConfig) -> Result<TimeSignal, WaveformError> {
    if frame.num_subcarriers != cfg.num_subcarriers {
        return Err(WaveformError::DimensionMismatch {
            frame_n: frame.num_subcarriers,
            cfg_n: cfg.num_subcarriers,
        });
    }
    let n = cfg.num_subcarriers;
    let cp = cfg.cp_len();
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let scale = 1.0 / (n as f64).sqrt();

    let mut samples = Vec::with_capacity(frame.num_symbols * (n + cp));
    let mut buf = vec![Complex64::default(); n];
    for sym in 0..frame.num_symbols {
        for k in 0..n {
            buf[k] = frame.symbol(k, sym);
        }
        ifft.process(&mut buf);
        for v in &mut buf {
            *v *= scale;
        }
        samples.extend_from_slice(&buf[n - cp..]);
        samples.extend_from_slice(&buf);
    }
    Ok(TimeSignal {
        samples,
        samples_per_symbol: n + cp,
        cp_len: cp,
        sample_rate_hz: cfg.bandwidth_hz,
    })
}

impl TimeSignal {
    /// Iterates over the useful (post-CP) samples of each symbol.
    fn useful_samples(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.samples
            .chunks_exact(self.samples_per_symbol)
            .flat_map(|block| block[self.cp_len..].iter().copied())
    }

    /// Energy over the useful samples (CP excluded).
    pub fn energy(&self) -> f64 {
        self.useful_samples().map(|s| s.norm_sqr()).sum()
    }
}

/// Peak-to-average power ratio over the useful samples, dB. CP excluded.
pub fn papr_db(signal: &TimeSignal) -> Result<f64, WaveformError> {
    let mut peak = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for s in signal.useful_samples() {
        let p = s.norm_sqr();
        peak = peak.max(p);
        sum += p;
        count += 1;
    }
    if count == 0 {
        return Err(WaveformError::EmptySignal);
    }
    if sum == 0.0 {
        return Err(WaveformError::AllZeroSignal);
    }
    Ok(10.0 * (peak / (sum / count as f64)).log10())
}

/// Monostatic two-way range resolution c/(2B), meters.
pub fn range_resolution(bandwidth_hz: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * bandwidth_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg32() -> OfdmConfig {
        OfdmConfig {
            num_symbols: 16,
            ..OfdmConfig::default()
        }
    }

    #[test]
    fn frame_is_deterministic() {
        let cfg = cfg32();
        let a = generate_frame(&cfg, 1).unwrap();
        let b = generate_frame(&cfg, 1).unwrap();
        assert_eq!(a.bits, b.bits);
        assert_eq!(a.symbols, b.symbols);
    }

    #[test]
    fn frame_shape_and_modulus() {
        let frame = generate_frame(&cfg32(), 1).unwrap();
        assert_eq!(frame.bits.len(), 2 * 32 * 16);
        for s in &frame.symbols {
            assert_relative_eq!(s.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn seeds_change_symbols() {
        let cfg = cfg32();
        let a = generate_frame(&cfg, 1).unwrap();
        let b = generate_frame(&cfg, 2).unwrap();
        assert_ne!(a.symbols, b.symbols);
    }

    #[test]
    fn qpsk_round_trip() {
        for b0 in 0..2u8 {
            for b1 in 0..2u8 {
                assert_eq!(qpsk_demap(qpsk_map(b0, b1)), (b0, b1));
            }
        }
    }

    #[test]
    fn all_ones_spectrum_gives_impulse() {
        let cfg = OfdmConfig {
            num_symbols: 1,
            ..OfdmConfig::default()
        };
        let mut frame = generate_frame(&cfg, 0).unwrap();
        for s in &mut frame.symbols {
            *s = Complex64::new(1.0, 0.0);
        }
        let sig = modulate(&frame, &cfg).unwrap();
        let useful = &sig.samples[sig.cp_len..];
        assert_relative_eq!(useful[0].norm(), 32f64.sqrt(), epsilon = 1e-9);
        for s in &useful[1..] {
            assert!(s.norm() < 1e-9);
        }
    }

    #[test]
    fn single_tone_is_constant_modulus() {
        let cfg = OfdmConfig {
            num_symbols: 1,
            ..OfdmConfig::default()
        };
        let mut frame = generate_frame(&cfg, 0).unwrap();
        for (i, s) in frame.symbols.iter_mut().enumerate() {
            *s = if i == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            };
        }
        let sig = modulate(&frame, &cfg).unwrap();
        for s in &sig.samples[sig.cp_len..] {
            assert_relative_eq!(s.norm(), 1.0 / 32f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn parseval() {
        let cfg = cfg32();
        let frame = generate_frame(&cfg, 42).unwrap();
        let sig = modulate(&frame, &cfg).unwrap();
        let freq_energy: f64 = frame.symbols.iter().map(|s| s.norm_sqr()).sum();
        assert_relative_eq!(sig.energy(), freq_energy, max_relative = 1e-9);
    }

    #[test]
    fn papr_impulse_case() {
        let cfg = OfdmConfig {
            num_symbols: 1,
            ..OfdmConfig::default()
        };
        let mut frame = generate_frame(&cfg, 0).unwrap();
        for s in &mut frame.symbols {
            *s = Complex64::new(1.0, 0.0);
        }
        let sig = modulate(&frame, &cfg).unwrap();
        assert_relative_eq!(papr_db(&sig).unwrap(), 10.0 * 32f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn papr_single_tone_is_zero() {
        let cfg = OfdmConfig {
            num_symbols: 1,
            ..OfdmConfig::default()
        };
        let mut frame = generate_frame(&cfg, 0).unwrap();
        for (i, s) in frame.symbols.iter_mut().enumerate() {
            *s = if i == 3 {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::default()
            };
        }
        let sig = modulate(&frame, &cfg).unwrap();
        assert_relative_eq!(papr_db(&sig).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn papr_median_random_qpsk() {
        // Per-symbol PAPR of random QPSK, N=32: median lands mid-single-digits.
        let cfg = OfdmConfig {
            num_symbols: 1000,
            ..OfdmConfig::default()
        };
        let frame = generate_frame(&cfg, 7).unwrap();
        let sig = modulate(&frame, &cfg).unwrap();
        let mut per_symbol: Vec<f64> = sig
            .samples
            .chunks_exact(sig.samples_per_symbol)
            .map(|block| {
                let useful = &block[sig.cp_len..];
                let peak = useful.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
                let mean: f64 =
                    useful.iter().map(|s| s.norm_sqr()).sum::<f64>() / useful.len() as f64;
                10.0 * (peak / mean).log10()
            })
            .collect();
        per_symbol.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = per_symbol[per_symbol.len() / 2];
        assert!((5.0..=12.0).contains(&median), "median PAPR {median} dB");
    }

    #[test]
    fn range_resolution_values() {
        assert_relative_eq!(range_resolution(4.0e9), 0.0375, max_relative = 0.002);
        assert_relative_eq!(range_resolution(400.0e6), 0.375, max_relative = 0.002);
        assert_relative_eq!(range_resolution(1.0e9), 0.15, max_relative = 0.002);
        assert!(range_resolution(2.0e9) < range_resolution(1.0e9));
    }

    #[test]
    fn papr_rejects_zero_signal() {
        let sig = TimeSignal {
            samples: vec![Complex64::default(); 40],
            samples_per_symbol: 40,
            cp_len: 8,
            sample_rate_hz: 1.0,
        };
        assert_eq!(papr_db(&sig).unwrap_err(), WaveformError::AllZeroSignal);
    }

    #[test]
    fn config_validation() {
        let mut cfg = OfdmConfig::default();
        cfg.num_subcarriers = 33;
        assert!(matches!(
            cfg.validate(),
            Err(WaveformError::BadSubcarrierCount(33))
        ));
        let mut cfg = OfdmConfig::default();
        cfg.carrier_hz = 1.0e6;
        assert!(cfg.validate().is_err());
    }
}
