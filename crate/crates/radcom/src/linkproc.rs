//! Per-link receiver processing: least-squares channel estimation and
//! delay-Doppler map extraction.

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::channel::LinkObservation;
use crate::waveform::{OfdmConfig, OfdmFrame};

/// Subcarrier/symbol-domain channel estimate H[k,n] for one link.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub tx_id: u32,
    pub rx_id: u32,
    /// Row-major N x M: `h[k * m + n]`.
    pub h: Vec<Complex64>,
    pub num_subcarriers: usize,
    pub num_symbols: usize,
}

impl ChannelEstimate {
    pub fn h_at(&self, k: usize, n: usize) -> Complex64 {
        self.h[k * self.num_symbols + n]
    }
}

/// Magnitude map over delay bins (N) x Doppler bins (M).
#[derive(Debug, Clone)]
pub struct RangeDopplerMap {
    /// Row-major: `magnitude[delay_bin * num_doppler_bins + doppler_bin]`.
    pub magnitude: Vec<f64>,
    pub num_delay_bins: usize,
    pub num_doppler_bins: usize,
    /// One delay bin in seconds (1/B).
    pub delay_bin_s: f64,
    /// One Doppler bin in Hz (1/(M T_sym)).
    pub doppler_bin_hz: f64,
}

/// One extracted local maximum in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPeak {
    pub delay_s: f64,
    pub doppler_hz: f64,
    pub magnitude: f64,
    pub delay_bin: usize,
    pub doppler_bin: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LinkProcError {
    #[error("observation is {obs_n}x{obs_m}, frame is {frame_n}x{frame_m}")]
    DimensionMismatch {
        obs_n: usize,
        obs_m: usize,
        frame_n: usize,
        frame_m: usize,
    },
    #[error("estimate dimensions {est_n}x{est_m} do not match config {cfg_n}")]
    ConfigMismatch {
        est_n: usize,
        est_m: usize,
        cfg_n: usize,
    },
    #[error("max_count must be >= 1")]
    BadMaxCount,
}

/// Least-squares channel estimate H[k,n] = Y[k,n] / d[k,n].
pub fn estimate_channel_ls(
    obs: &LinkObservation,
    frame: &OfdmFrame,
) -> Result<ChannelEstimate, LinkProcError> {
    if obs.num_subcarriers != frame.num_subcarriers || obs.num_symbols != frame.num_symbols {
        return Err(LinkProcError::DimensionMismatch {
            obs_n: obs.num_subcarriers,
            obs_m: obs.num_symbols,
            frame_n: frame.num_subcarriers,
            frame_m: frame.num_symbols,
        });
    }
    let h = obs
        .y
        .iter()
        .zip(&frame.symbols)
        .map(|(y, d)| y / d)
        .collect();
    Ok(ChannelEstimate {
        tx_id: obs.tx_id,
        rx_id: obs.rx_id,
        h,
        num_subcarriers: obs.num_subcarriers,
        num_symbols: obs.num_symbols,
    })
}

/// Unitary inverse DFT over subcarriers, unitary DFT over symbols, then
/// magnitude. Peaks land at (delay · B, Doppler · M T_sym). No windowing.
pub fn range_doppler_map(
    est: &ChannelEstimate,
    cfg: &OfdmConfig,
) -> Result<RangeDopplerMap, LinkProcError> {
    let n = est.num_subcarriers;
    let m = est.num_symbols;
    if n != cfg.num_subcarriers {
        return Err(LinkProcError::ConfigMismatch {
            est_n: n,
            est_m: m,
            cfg_n: cfg.num_subcarriers,
        });
    }
    let mut planner = FftPlanner::new();
    let ifft_k = planner.plan_fft_inverse(n);
    let fft_n = planner.plan_fft_forward(m);
    let scale = 1.0 / ((n as f64).sqrt() * (m as f64).sqrt());

    // IDFT down each subcarrier column.
    let mut work = vec![Complex64::default(); n * m];
    let mut col = vec![Complex64::default(); n];
    for sym in 0..m {
        for k in 0..n {
            col[k] = est.h_at(k, sym);
        }
        ifft_k.process(&mut col);
        for (bin, v) in col.iter().enumerate() {
            work[bin * m + sym] = *v;
        }
    }
    // DFT along each delay row.
    let mut magnitude = vec![0.0f64; n * m];
    for bin in 0..n {
        let row = &mut work[bin * m..(bin + 1) * m];
        fft_n.process(row);
        for (d, v) in row.iter().enumerate() {
            magnitude[bin * m + d] = (v * scale).norm();
        }
    }
    Ok(RangeDopplerMap {
        magnitude,
        num_delay_bins: n,
        num_doppler_bins: m,
        delay_bin_s: 1.0 / cfg.bandwidth_hz,
        doppler_bin_hz: 1.0 / (m as f64 * cfg.symbol_duration_s()),
    })
}

impl RangeDopplerMap {
    pub fn value(&self, delay_bin: usize, doppler_bin: usize) -> f64 {
        self.magnitude[delay_bin * self.num_doppler_bins + doppler_bin]
    }

    /// Argmax bin (delay, Doppler); ties broken by lower delay then Doppler.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        let mut best_v = f64::NEG_INFINITY;
        for db in 0..self.num_delay_bins {
            for fb in 0..self.num_doppler_bins {
                let v = self.value(db, fb);
                if v > best_v {
                    best_v = v;
                    best = (db, fb);
                }
            }
        }
        best
    }

    /// Signed Doppler frequency of a bin (upper half maps to negative).
    pub fn doppler_of_bin(&self, bin: usize) -> f64 {
        let m = self.num_doppler_bins;
        let signed = if bin >= m.div_ceil(2) {
            bin as f64 - m as f64
        } else {
            bin as f64
        };
        signed * self.doppler_bin_hz
    }
}

/// Local maxima (8-neighborhood) above `threshold_db` below the global
/// peak, strongest first; ties broken by lower delay bin then Doppler bin.
pub fn extract_peaks(
    map: &RangeDopplerMap,
    max_count: usize,
    threshold_db: f64,
) -> Result<Vec<MapPeak>, LinkProcError> {
    if max_count == 0 {
        return Err(LinkProcError::BadMaxCount);
    }
    let global = map.magnitude.iter().copied().fold(0.0f64, f64::max);
    if global == 0.0 {
        return Ok(Vec::new());
    }
    let floor = global * 10f64.powf(-threshold_db.abs() / 20.0);
    let (nd, nf) = (map.num_delay_bins, map.num_doppler_bins);
    let mut peaks = Vec::new();
    for db in 0..nd {
        for fb in 0..nf {
            let v = map.value(db, fb);
            if v < floor || v == 0.0 {
                continue;
            }
            let mut is_max = true;
            'nbr: for ddb in -1i64..=1 {
                for dfb in -1i64..=1 {
                    if ddb == 0 && dfb == 0 {
                        continue;
                    }
                    let (ndb, nfb) = (db as i64 + ddb, fb as i64 + dfb);
                    if ndb < 0 || nfb < 0 || ndb >= nd as i64 || nfb >= nf as i64 {
                        continue;
                    }
                    if map.value(ndb as usize, nfb as usize) > v {
                        is_max = false;
                        break 'nbr;
                    }
                }
            }
            if is_max {
                peaks.push(MapPeak {
                    delay_s: db as f64 * map.delay_bin_s,
                    doppler_hz: map.doppler_of_bin(fb),
                    magnitude: v,
                    delay_bin: db,
                    doppler_bin: fb,
                });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.magnitude
            .partial_cmp(&a.magnitude)
            .unwrap()
            .then(a.delay_bin.cmp(&b.delay_bin))
            .then(a.doppler_bin.cmp(&b.doppler_bin))
    });
    peaks.truncate(max_count);
    Ok(peaks)
}
