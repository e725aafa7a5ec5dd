//! Communication function carried by the shared waveform: equalization,
//! QPSK demodulation, and BER measurement against the Gaussian-tail oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::channel::LinkObservation;
use crate::linkproc::ChannelEstimate;
use crate::waveform::qpsk_demap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equalizer {
    /// Zero forcing: d̂ = Y / H.
    Zf,
    /// MMSE: d̂ = conj(H) Y / (|H|² + noise_var).
    Mmse,
}

/// BER measurement outcome for one link / SNR point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BerResult {
    pub bit_errors: usize,
    pub bits_total: usize,
    pub rate: f64,
    pub snr_db: Option<f64>,
    pub equalizer: Equalizer,
}

#[derive(Debug, Error, PartialEq)]
pub enum CommError {
    #[error("observation {obs_n}x{obs_m} does not match channel estimate {est_n}x{est_m}")]
    DimensionMismatch {
        obs_n: usize,
        obs_m: usize,
        est_n: usize,
        est_m: usize,
    },
    #[error("zero channel entry at (k={k}, n={n}): zero-forcing equalizer is singular")]
    SingularEqualizer { k: usize, n: usize },
    #[error("bit sequences differ in length: {got} vs {reference}")]
    LengthMismatch { got: usize, reference: usize },
}

/// Equalizes the observation with the given channel knowledge and makes
/// hard Gray-demapped QPSK decisions. Deterministic.
pub fn equalize_demodulate(
    obs: &LinkObservation,
    channel: &ChannelEstimate,
    mode: Equalizer,
    noise_var: f64,
) -> Result<Vec<u8>, CommError> {
    if obs.num_subcarriers != channel.num_subcarriers || obs.num_symbols != channel.num_symbols {
        return Err(CommError::DimensionMismatch {
            obs_n: obs.num_subcarriers,
            obs_m: obs.num_symbols,
            est_n: channel.num_subcarriers,
            est_m: channel.num_symbols,
        });
    }
    let m = obs.num_symbols;
    let mut bits = Vec::with_capacity(2 * obs.y.len());
    for (i, (y, h)) in obs.y.iter().zip(&channel.h).enumerate() {
        let d_hat = match mode {
            Equalizer::Zf => {
                if h.re == 0.0 && h.im == 0.0 {
                    return Err(CommError::SingularEqualizer { k: i / m, n: i % m });
                }
                y / h
            }
            Equalizer::Mmse => h.conj() * y / (h.norm_sqr() + noise_var),
        };
        let (b0, b1) = qpsk_demap(d_hat);
        bits.push(b0);
        bits.push(b1);
    }
    Ok(bits)
}

/// Equalized symbols without slicing (used to compare equalizer outputs).
pub fn equalize_symbols(
    obs: &LinkObservation,
    channel: &ChannelEstimate,
    mode: Equalizer,
    noise_var: f64,
) -> Result<Vec<Complex64>, CommError> {
    if obs.num_subcarriers != channel.num_subcarriers || obs.num_symbols != channel.num_symbols {
        return Err(CommError::DimensionMismatch {
            obs_n: obs.num_subcarriers,
            obs_m: obs.num_symbols,
            est_n: channel.num_subcarriers,
            est_m: channel.num_symbols,
        });
    }
    let m = obs.num_symbols;
    obs.y
        .iter()
        .zip(&channel.h)
        .enumerate()
        .map(|(i, (y, h))| match mode {
            Equalizer::Zf => {
                if h.re == 0.0 && h.im == 0.0 {
                    Err(CommError::SingularEqualizer { k: i / m, n: i % m })
                } else {
                    Ok(y / h)
                }
            }
            Equalizer::Mmse => Ok(h.conj() * y / (h.norm_sqr() + noise_var)),
        })
        .collect()
}

/// Hamming-distance bit error rate.
pub fn measure_ber(
    received: &[u8],
    reference: &[u8],
    snr_db: Option<f64>,
    equalizer: Equalizer,
) -> Result<BerResult, CommError> {
    if received.len() != reference.len() {
        return Err(CommError::LengthMismatch {
            got: received.len(),
            reference: reference.len(),
        });
    }
    let bit_errors = received
        .iter()
        .zip(reference)
        .filter(|(a, b)| a != b)
        .count();
    Ok(BerResult {
        bit_errors,
        bits_total: received.len(),
        rate: bit_errors as f64 / received.len() as f64,
        snr_db,
        equalizer,
    })
}

/// Gaussian tail function Q(x).
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Per-bit error probability of Gray-mapped QPSK over AWGN: Q(sqrt(2 Eb/N0)).
pub fn qpsk_ber_theory(ebn0_db: f64) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    q_function((2.0 * ebn0).sqrt())
}

/// QPSK symbol-SNR (dB) for a given Eb/N0 (dB): two bits per symbol.
pub fn ebn0_to_symbol_snr_db(ebn0_db: f64) -> f64 {
    ebn0_db + 10.0 * 2f64.log10()
}
