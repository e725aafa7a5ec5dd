//! Central-unit joint processing: fuses all PQ channel estimates into a
//! spatial ambiguity map and derives position, resolution, and context
//! reports from it.
//!
//! The back-projection steering uses the full per-subcarrier carrier phase
//! (f_c + kΔf). The processor is identical in every synchronization
//! regime; loss of phase sync degrades the coherent map through the
//! channel's random phase offsets, not through a different processor.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::bistatic_range;
use crate::linkproc::ChannelEstimate;
use crate::scene::{Scene, Vec2};
use crate::waveform::OfdmConfig;
use crate::SPEED_OF_LIGHT;

/// Reported in place of -inf when a map has no sidelobes at all.
pub const PSL_FLOOR_DB: f64 = -300.0;

fn default_max_cells() -> usize {
    4_000_000
}

/// Rectangular evaluation grid of cell centers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Cell size, meters.
    pub cell_m: f64,
    /// Guard against accidentally huge grids.
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
}

impl GridSpec {
    /// Centered square grid around `center` with half-extent `half` meters.
    pub fn centered(center: Vec2, half: f64, cell_m: f64) -> Self {
        Self {
            x_min: center.x - half,
            x_max: center.x + half,
            y_min: center.y - half,
            y_max: center.y + half,
            cell_m,
            max_cells: default_max_cells(),
        }
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.cell_m).round() as usize + 1
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.cell_m).round() as usize + 1
    }

    pub fn x_of(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.cell_m
    }

    pub fn y_of(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.cell_m
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.cell_m > 0.0) || self.x_max < self.x_min || self.y_max < self.y_min {
            return Err(FusionError::BadGrid);
        }
        let cells = self.nx().saturating_mul(self.ny());
        if cells > self.max_cells {
            return Err(FusionError::GridTooLarge {
                cells,
                max: self.max_cells,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// |Σ_pq S_pq(x)|: needs phase-synchronized nodes, carrier-scale resolution.
    Coherent,
    /// Σ_pq |S_pq(x)|: immune to phase offsets, bandwidth-scale resolution.
    Noncoherent,
}

/// Non-negative spatial map over the grid.
#[derive(Debug, Clone)]
pub struct AmbiguityMap {
    pub grid: GridSpec,
    /// Row-major: `values[ix * ny + iy]`.
    pub values: Vec<f64>,
    pub mode: FusionMode,
}

impl AmbiguityMap {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.grid.ny() + iy]
    }

    /// Argmax cell indices; ties broken by lower x index then y index.
    pub fn argmax_cell(&self) -> (usize, usize) {
        let ny = self.grid.ny();
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for ix in 0..self.grid.nx() {
            for iy in 0..ny {
                let v = self.values[ix * ny + iy];
                if v > best_v {
                    best_v = v;
                    best = (ix, iy);
                }
            }
        }
        best
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("invalid grid specification")]
    BadGrid,
    #[error("grid has {cells} cells, exceeding the configured maximum {max}")]
    GridTooLarge { cells: usize, max: usize },
    #[error("missing channel estimate for link tx {tx} -> rx {rx}")]
    MissingLink { tx: u32, rx: u32 },
    #[error("duplicate channel estimate for link tx {tx} -> rx {rx}")]
    DuplicateLink { tx: u32, rx: u32 },
    #[error("map is identically zero: no detection")]
    NoDetection,
    #[error("grid cell {cell_m} m too coarse for measured width {width_m} m")]
    InsufficientResolution { cell_m: f64, width_m: f64 },
    #[error("-3 dB crossing falls outside the grid")]
    WidthUnbounded,
    #[error("exclusion disc covers the whole grid")]
    ExclusionCoversGrid,
    #[error("velocity unobservable: link geometry is rank deficient")]
    UnobservableVelocity,
    #[error("need at least two links with Doppler measurements, got {0}")]
    TooFewLinks(usize),
}

/// Spatial ambiguity map at a fixed Doppler hypothesis (0 Hz = stationary).
///
/// Per link and cell: S_pq(x) = Σ_k Σ_n H[k,n] e^{-j2π ν n T_sym}
/// e^{+j2π (f_c + kΔf) τ_pq(x)} / (N M). Summation order is fixed
/// (links in scene order, subcarriers ascending), so worker count does not
/// change the result.
pub fn spatial_ambiguity_with_hypothesis(
    estimates: &[ChannelEstimate],
    scene: &Scene,
    cfg: &OfdmConfig,
    grid: &GridSpec,
    mode: FusionMode,
    doppler_hypothesis_hz: f64,
) -> Result<AmbiguityMap, FusionError> {
    grid.validate()?;
    let m = cfg.num_symbols;
    let n = cfg.num_subcarriers;
    let t_sym = cfg.symbol_duration_s();

    // One estimate per (p, q), in scene link order.
    let mut ordered: Vec<&ChannelEstimate> = Vec::with_capacity(scene.num_links());
    for (p, q) in scene.links() {
        let (tx_id, rx_id) = (scene.transmitters[p].id, scene.receivers[q].id);
        let mut found = None;
        for est in estimates {
            if est.tx_id == tx_id && est.rx_id == rx_id {
                if found.is_some() {
                    return Err(FusionError::DuplicateLink { tx: tx_id, rx: rx_id });
                }
                found = Some(est);
            }
        }
        ordered.push(found.ok_or(FusionError::MissingLink { tx: tx_id, rx: rx_id })?);
    }

    // Collapse the symbol axis at the Doppler hypothesis: g[k] = Σ_n H[k,n] e^{-j2πνnT}.
    let norm = 1.0 / (n as f64 * m as f64);
    let g: Vec<Vec<Complex64>> = ordered
        .iter()
        .map(|est| {
            let step = Complex64::from_polar(
                1.0,
                -std::f64::consts::TAU * doppler_hypothesis_hz * t_sym,
            );
            (0..n)
                .map(|k| {
                    let mut rot = Complex64::new(1.0, 0.0);
                    let mut acc = Complex64::default();
                    for sym in 0..m {
                        acc += est.h_at(k, sym) * rot;
                        rot *= step;
                    }
                    acc * norm
                })
                .collect()
        })
        .collect();

    let link_geo: Vec<(Vec2, Vec2)> = scene
        .links()
        .map(|(p, q)| (scene.transmitters[p].position, scene.receivers[q].position))
        .collect();

    let (nx, ny) = (grid.nx(), grid.ny());
    let fc = cfg.carrier_hz;
    let df = cfg.subcarrier_spacing_hz();
    let values: Vec<f64> = (0..nx)
        .into_par_iter()
        .flat_map_iter(|ix| {
            let x = grid.x_of(ix);
            let g = &g;
            let link_geo = &link_geo;
            (0..ny).map(move |iy| {
                let cell = Vec2::new(x, grid.y_of(iy));
                let mut coherent = Complex64::default();
                let mut noncoherent = 0.0f64;
                for (gk, &(txp, rxp)) in g.iter().zip(link_geo.iter()) {
                    let tau = bistatic_range(txp, rxp, cell) / SPEED_OF_LIGHT;
                    // e^{j2π(f_c + kΔf)τ} via recurrence over k.
                    let base = Complex64::from_polar(1.0, std::f64::consts::TAU * fc * tau);
                    let step = Complex64::from_polar(1.0, std::f64::consts::TAU * df * tau);
                    let mut rot = base;
                    let mut s = Complex64::default();
                    for v in gk {
                        s += v * rot;
                        rot *= step;
                    }
                    match mode {
                        FusionMode::Coherent => coherent += s,
                        FusionMode::Noncoherent => noncoherent += s.norm(),
                    }
                }
                match mode {
                    FusionMode::Coherent => coherent.norm(),
                    FusionMode::Noncoherent => noncoherent,
                }
            })
        })
        .collect();

    Ok(AmbiguityMap {
        grid: *grid,
        values,
        mode,
    })
}

/// Stationary-hypothesis ambiguity map.
pub fn spatial_ambiguity(
    estimates: &[ChannelEstimate],
    scene: &Scene,
    cfg: &OfdmConfig,
    grid: &GridSpec,
    mode: FusionMode,
) -> Result<AmbiguityMap, FusionError> {
    spatial_ambiguity_with_hypothesis(estimates, scene, cfg, grid, mode, 0.0)
}

/// Argmax cell center and peak value.
pub fn estimate_position(map: &AmbiguityMap) -> Result<(Vec2, f64), FusionError> {
    if map.values.iter().all(|v| *v == 0.0) {
        return Err(FusionError::NoDetection);
    }
    let (ix, iy) = map.argmax_cell();
    Ok((
        Vec2::new(map.grid.x_of(ix), map.grid.y_of(iy)),
        map.value(ix, iy),
    ))
}

fn width_along(
    values: impl Fn(i64) -> Option<f64>,
    peak_v: f64,
    cell: f64,
) -> Result<f64, FusionError> {
    let thr = peak_v / std::f64::consts::SQRT_2;
    let mut half = [0.0f64; 2];
    for (side, dir) in [(0usize, 1i64), (1usize, -1i64)] {
        let mut prev = peak_v;
        let mut i = 0i64;
        loop {
            i += 1;
            match values(dir * i) {
                Some(v) if v >= thr => prev = v,
                Some(v) => {
                    // Linear interpolation between the last two samples.
                    let frac = (prev - thr) / (prev - v);
                    half[side] = (i as f64 - 1.0 + frac) * cell;
                    break;
                }
                None => return Err(FusionError::WidthUnbounded),
            }
        }
    }
    Ok(half[0] + half[1])
}

/// -3 dB (power) mainlobe widths along x and y through the peak: distance
/// between the first crossings of peak/sqrt(2) in map magnitude, linearly
/// interpolated. Errors if the grid is too coarse (cell > width/4) or the
/// crossings fall outside the grid.
pub fn mainlobe_width_3db(map: &AmbiguityMap, peak: Vec2) -> Result<(f64, f64), FusionError> {
    let (ix, iy) = map.argmax_cell();
    let peak_v = map.value(ix, iy);
    if peak_v <= 0.0 {
        return Err(FusionError::NoDetection);
    }
    // `peak` must be the argmax cell center.
    if (peak.x - map.grid.x_of(ix)).abs() > map.grid.cell_m / 2.0
        || (peak.y - map.grid.y_of(iy)).abs() > map.grid.cell_m / 2.0
    {
        return Err(FusionError::NoDetection);
    }
    let (nx, ny) = (map.grid.nx(), map.grid.ny());
    let wx = width_along(
        |di| {
            let j = ix as i64 + di;
            (j >= 0 && j < nx as i64).then(|| map.value(j as usize, iy))
        },
        peak_v,
        map.grid.cell_m,
    )?;
    let wy = width_along(
        |di| {
            let j = iy as i64 + di;
            (j >= 0 && j < ny as i64).then(|| map.value(ix, j as usize))
        },
        peak_v,
        map.grid.cell_m,
    )?;
    let min_w = wx.min(wy);
    if map.grid.cell_m > min_w / 4.0 {
        return Err(FusionError::InsufficientResolution {
            cell_m: map.grid.cell_m,
            width_m: min_w,
        });
    }
    Ok((wx, wy))
}

/// Peak sidelobe level: 20 log10(max outside the exclusion disc / peak), dB.
pub fn peak_sidelobe_level(
    map: &AmbiguityMap,
    peak: Vec2,
    exclusion_radius_m: f64,
) -> Result<f64, FusionError> {
    let (ix, iy) = map.argmax_cell();
    let peak_v = map.value(ix, iy);
    if peak_v <= 0.0 {
        return Err(FusionError::NoDetection);
    }
    let r2 = exclusion_radius_m * exclusion_radius_m;
    let ny = map.grid.ny();
    let mut max_out = 0.0f64;
    let mut any_out = false;
    for cx in 0..map.grid.nx() {
        let dx = map.grid.x_of(cx) - peak.x;
        for cy in 0..ny {
            let dy = map.grid.y_of(cy) - peak.y;
            if dx * dx + dy * dy > r2 {
                any_out = true;
                max_out = max_out.max(map.values[cx * ny + cy]);
            }
        }
    }
    if !any_out {
        return Err(FusionError::ExclusionCoversGrid);
    }
    if max_out == 0.0 {
        return Ok(PSL_FLOOR_DB);
    }
    Ok((20.0 * (max_out / peak_v).log10()).max(PSL_FLOOR_DB))
}

/// One per-link Doppler measurement for velocity fitting.
#[derive(Debug, Clone, Copy)]
pub struct LinkDoppler {
    pub tx_pos: Vec2,
    pub rx_pos: Vec2,
    pub doppler_hz: f64,
}

/// Least-squares velocity from per-link Doppler measurements at a known
/// position: f_d = -(f_c/c)(û_tx + û_rx)·v.
pub fn fit_velocity(
    measurements: &[LinkDoppler],
    position: Vec2,
    carrier_hz: f64,
) -> Result<Vec2, FusionError> {
    if measurements.len() < 2 {
        return Err(FusionError::TooFewLinks(measurements.len()));
    }
    // Normal equations of the 2-unknown linear system.
    let (mut axx, mut axy, mut ayy, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let scale = -(carrier_hz / SPEED_OF_LIGHT);
    for meas in measurements {
        let d_tx = position.sub(meas.tx_pos);
        let d_rx = position.sub(meas.rx_pos);
        let (r_tx, r_rx) = (d_tx.norm(), d_rx.norm());
        if r_tx == 0.0 || r_rx == 0.0 {
            return Err(FusionError::UnobservableVelocity);
        }
        let a = Vec2::new(
            scale * (d_tx.x / r_tx + d_rx.x / r_rx),
            scale * (d_tx.y / r_tx + d_rx.y / r_rx),
        );
        axx += a.x * a.x;
        axy += a.x * a.y;
        ayy += a.y * a.y;
        bx += a.x * meas.doppler_hz;
        by += a.y * meas.doppler_hz;
    }
    let det = axx * ayy - axy * axy;
    let trace = axx + ayy;
    if trace <= 0.0 || det <= 1e-12 * trace * trace {
        return Err(FusionError::UnobservableVelocity);
    }
    Ok(Vec2::new(
        (ayy * bx - axy * by) / det,
        (axx * by - axy * bx) / det,
    ))
}

/// One detected object in application-level terms.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Detection {
    pub position: Vec2,
    pub velocity: Option<Vec2>,
    pub peak_value: f64,
    pub width_x_m: Option<f64>,
    pub width_y_m: Option<f64>,
    pub peak_sidelobe_db: Option<f64>,
    /// Per-detection metric failures (width unbounded, coarse grid, ...).
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Scenario metadata carried for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportMetadata {
    pub sync_regime: String,
    pub fusion_mode: FusionMode,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// Output of the radio-to-context conversion.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ContextReport {
    pub detections: Vec<Detection>,
    pub metadata: ReportMetadata,
}

/// Composes position, widths, sidelobe level, and (when Doppler data is
/// present) velocity into one report. Metric failures are recorded per
/// detection instead of aborting the report.
pub fn radio_to_context(
    map: &AmbiguityMap,
    doppler: Option<&[LinkDoppler]>,
    cfg: &OfdmConfig,
    metadata: ReportMetadata,
    detection_threshold: f64,
    exclusion_radius_m: f64,
) -> ContextReport {
    let mut detections = Vec::new();
    if let Ok((pos, peak_v)) = estimate_position(map) {
        if peak_v >= detection_threshold {
            let mut notes = Vec::new();
            let (wx, wy) = match mainlobe_width_3db(map, pos) {
                Ok((wx, wy)) => (Some(wx), Some(wy)),
                Err(e) => {
                    notes.push(format!("width: {e}"));
                    (None, None)
                }
            };
            let psl = match peak_sidelobe_level(map, pos, exclusion_radius_m) {
                Ok(v) => Some(v),
                Err(e) => {
                    notes.push(format!("psl: {e}"));
                    None
                }
            };
            let velocity = doppler.and_then(|meas| {
                match fit_velocity(meas, pos, cfg.carrier_hz) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        notes.push(format!("velocity: {e}"));
                        None
                    }
                }
            });
            detections.push(Detection {
                position: pos,
                velocity,
                peak_value: peak_v,
                width_x_m: wx,
                width_y_m: wy,
                peak_sidelobe_db: psl,
                notes,
            });
        }
    }
    ContextReport {
        detections,
        metadata,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_map(sigma: f64, cell: f64, half: f64) -> AmbiguityMap {
        let grid = GridSpec::centered(Vec2::new(0.0, 0.0), half, cell);
        let ny = grid.ny();
        let mut values = vec![0.0; grid.nx() * ny];
        for ix in 0..grid.nx() {
            for iy in 0..ny {
                let (x, y) = (grid.x_of(ix), grid.y_of(iy));
                values[ix * ny + iy] = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            }
        }
        AmbiguityMap {
            grid,
            values,
            mode: FusionMode::Coherent,
        }
    }

    #[test]
    fn gaussian_width_matches_closed_form() {
        // Magnitude crossing at 1/sqrt(2): width = 2 sigma sqrt(ln 2).
        let sigma = 0.5;
        let map = gaussian_map(sigma, 0.01, 2.0);
        let (pos, _) = estimate_position(&map).unwrap();
        let (wx, wy) = mainlobe_width_3db(&map, pos).unwrap();
        let expected = 2.0 * sigma * (2f64.ln()).sqrt();
        assert_relative_eq!(wx, expected, max_relative = 0.02);
        assert_relative_eq!(wy, expected, max_relative = 0.02);
    }

    #[test]
    fn width_rejects_coarse_grid() {
        let map = gaussian_map(0.05, 0.04, 1.0);
        let (pos, _) = estimate_position(&map).unwrap();
        assert!(matches!(
            mainlobe_width_3db(&map, pos),
            Err(FusionError::InsufficientResolution { .. })
        ));
    }

    #[test]
    fn width_unbounded_on_small_grid() {
        let map = gaussian_map(5.0, 0.05, 1.0);
        let (pos, _) = estimate_position(&map).unwrap();
        assert_eq!(
            mainlobe_width_3db(&map, pos).unwrap_err(),
            FusionError::WidthUnbounded
        );
    }

    #[test]
    fn psl_arithmetic() {
        let grid = GridSpec::centered(Vec2::new(0.0, 0.0), 1.0, 0.5);
        let ny = grid.ny();
        let mut values = vec![0.0; grid.nx() * ny];
        values[2 * ny + 2] = 1.0; // center
        values[0] = 0.5;
        let map = AmbiguityMap {
            grid,
            values,
            mode: FusionMode::Coherent,
        };
        let psl = peak_sidelobe_level(&map, Vec2::new(0.0, 0.0), 0.6).unwrap();
        assert_relative_eq!(psl, 20.0 * 0.5f64.log10(), epsilon = 1e-9);
    }

    #[test]
    fn psl_floor_for_isolated_peak() {
        let grid = GridSpec::centered(Vec2::new(0.0, 0.0), 1.0, 0.5);
        let ny = grid.ny();
        let mut values = vec![0.0; grid.nx() * ny];
        values[2 * ny + 2] = 1.0;
        let map = AmbiguityMap {
            grid,
            values,
            mode: FusionMode::Coherent,
        };
        assert_eq!(
            peak_sidelobe_level(&map, Vec2::new(0.0, 0.0), 0.6).unwrap(),
            PSL_FLOOR_DB
        );
    }

    #[test]
    fn psl_exclusion_covering_grid_errors() {
        let map = gaussian_map(0.5, 0.1, 1.0);
        let (pos, _) = estimate_position(&map).unwrap();
        assert_eq!(
            peak_sidelobe_level(&map, pos, 10.0).unwrap_err(),
            FusionError::ExclusionCoversGrid
        );
    }

    #[test]
    fn estimate_position_scaling_invariance() {
        let map = gaussian_map(0.5, 0.01, 2.0);
        let (pos_a, _) = estimate_position(&map).unwrap();
        let scaled = AmbiguityMap {
            values: map.values.iter().map(|v| v * 7.5).collect(),
            ..map.clone()
        };
        let (pos_b, _) = estimate_position(&scaled).unwrap();
        assert_eq!(pos_a, pos_b);
        let (wa, _) = mainlobe_width_3db(&map, pos_a).unwrap();
        let (wb, _) = mainlobe_width_3db(&scaled, pos_b).unwrap();
        assert_relative_eq!(wa, wb, epsilon = 1e-12);
    }

    #[test]
    fn all_zero_map_is_no_detection() {
        let grid = GridSpec::centered(Vec2::new(0.0, 0.0), 1.0, 0.5);
        let map = AmbiguityMap {
            grid,
            values: vec![0.0; grid.nx() * grid.ny()],
            mode: FusionMode::Coherent,
        };
        assert_eq!(
            estimate_position(&map).unwrap_err(),
            FusionError::NoDetection
        );
    }

    #[test]
    fn grid_guard() {
        let mut grid = GridSpec::centered(Vec2::new(0.0, 0.0), 100.0, 0.001);
        grid.max_cells = 1_000_000;
        assert!(matches!(
            grid.validate(),
            Err(FusionError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn fit_velocity_zero_doppler() {
        let meas = vec![
            LinkDoppler {
                tx_pos: Vec2::new(0.0, 0.0),
                rx_pos: Vec2::new(0.0, 2.0),
                doppler_hz: 0.0,
            },
            LinkDoppler {
                tx_pos: Vec2::new(2.0, 0.0),
                rx_pos: Vec2::new(0.0, 4.0),
                doppler_hz: 0.0,
            },
        ];
        let v = fit_velocity(&meas, Vec2::new(5.0, 6.0), 26.0e9).unwrap();
        assert_relative_eq!(v.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(v.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_velocity_recovers_known_velocity() {
        use crate::channel::bistatic_doppler;
        let pos = Vec2::new(5.0, 6.0);
        let truth = Vec2::new(3.0, -1.5);
        let fc = 26.0e9;
        let geoms = [
            (Vec2::new(0.0, 0.0), Vec2::new(0.0, 2.0)),
            (Vec2::new(2.0, 0.0), Vec2::new(0.0, 4.0)),
            (Vec2::new(4.0, 0.0), Vec2::new(0.0, 6.0)),
            (Vec2::new(6.0, 0.0), Vec2::new(0.0, 8.0)),
        ];
        let meas: Vec<LinkDoppler> = geoms
            .iter()
            .map(|&(tx, rx)| LinkDoppler {
                tx_pos: tx,
                rx_pos: rx,
                doppler_hz: bistatic_doppler(tx, rx, pos, truth, fc).unwrap(),
            })
            .collect();
        let v = fit_velocity(&meas, pos, fc).unwrap();
        assert!((v.x - truth.x).abs() < 1e-6);
        assert!((v.y - truth.y).abs() < 1e-6);
    }

    #[test]
    fn fit_velocity_rank_deficient() {
        // Identical geometry twice: only one observable direction.
        let l = LinkDoppler {
            tx_pos: Vec2::new(0.0, 0.0),
            rx_pos: Vec2::new(0.0, 2.0),
            doppler_hz: 10.0,
        };
        assert_eq!(
            fit_velocity(&[l, l], Vec2::new(5.0, 6.0), 26.0e9).unwrap_err(),
            FusionError::UnobservableVelocity
        );
    }

    #[test]
    fn context_report_round_trip() {
        let map = gaussian_map(0.5, 0.01, 2.0);
        let report = radio_to_context(
            &map,
            None,
            &OfdmConfig::default(),
            ReportMetadata {
                sync_regime: "perfect".into(),
                fusion_mode: FusionMode::Coherent,
                snr_db: Some(30.0),
                seed: 1,
            },
            0.5,
            1.0,
        );
        assert_eq!(report.detections.len(), 1);
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: ContextReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn below_threshold_yields_empty_report() {
        let map = gaussian_map(0.5, 0.01, 2.0);
        let report = radio_to_context(
            &map,
            None,
            &OfdmConfig::default(),
            ReportMetadata {
                sync_regime: "perfect".into(),
                fusion_mode: FusionMode::Coherent,
                snr_db: None,
                seed: 1,
            },
            2.0,
            1.0,
        );
        assert!(report.detections.is_empty());
    }
}
