//! Experiment runner: orchestrates scenarios and writes all artifacts
//! deterministically.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{add_clutter, synthesize_link, Region, SynthesisOptions};
use crate::clocksync::{sample_clocks, ClockModel, ClockScenario, ClockState};
use crate::commlink::{
    ebn0_to_symbol_snr_db, equalize_demodulate, measure_ber, qpsk_ber_theory,
};
use crate::config::{ConfigError, ExperimentConfig, ExperimentKind, SceneConfig};
use crate::fusion::{
    estimate_position, mainlobe_width_3db, peak_sidelobe_level, radio_to_context,
    spatial_ambiguity, AmbiguityMap, FusionMode, ReportMetadata,
};
use crate::linkproc::{estimate_channel_ls, ChannelEstimate};
use crate::report::{
    format_float, write_csv, write_heatmap, write_json, write_map_csv, ReportError, RunManifest,
};
use crate::scene::{Scene, Vec2};
use crate::seeds;
use crate::waveform::generate_frame;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Waveform(#[from] crate::waveform::WaveformError),
    #[error(transparent)]
    Clock(#[from] crate::clocksync::ClockError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
    #[error(transparent)]
    LinkProc(#[from] crate::linkproc::LinkProcError),
    #[error(transparent)]
    Fusion(#[from] crate::fusion::FusionError),
    #[error(transparent)]
    Comm(#[from] crate::commlink::CommError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("unknown sweep parameter {0:?}; known: snr_db, bandwidth_hz, p, q, sigma_t_s, clutter_count")]
    UnknownSweepParam(String),
    #[error("sweep value list is empty")]
    EmptySweepValues,
    #[error("sweep over {0} requires an axes scene config")]
    SweepNeedsAxesScene(String),
    #[error("experiment has no target to measure position error against")]
    NoTarget,
}

/// Node clock states for a whole scene under the given model.
pub fn scene_clocks(
    scene: &Scene,
    model: &ClockModel,
    seed: u64,
) -> Result<Vec<ClockState>, ExperimentError> {
    let ids: Vec<u32> = scene
        .transmitters
        .iter()
        .chain(scene.receivers.iter())
        .map(|ap| ap.id)
        .collect();
    Ok(sample_clocks(model, &ids, seed)?)
}

/// Full per-link front end: frame, clocks, synthesis, LS estimation for
/// every (p, q) link.
pub fn synthesize_and_estimate(
    scene: &Scene,
    ofdm: &crate::waveform::OfdmConfig,
    clock_model: &ClockModel,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<Vec<ChannelEstimate>, ExperimentError> {
    let frame = generate_frame(ofdm, seeds::derive_seed(seed, "frame", &[]))?;
    let clocks = scene_clocks(scene, clock_model, seed)?;
    let opts = SynthesisOptions {
        snr_db,
        seed,
        direct_path_amplitude: None,
    };
    let mut estimates = Vec::with_capacity(scene.num_links());
    for (p, q) in scene.links() {
        let obs = synthesize_link(scene, &frame, ofdm, (p, q), &clocks, &opts)?;
        estimates.push(estimate_channel_ls(&obs, &frame)?);
    }
    Ok(estimates)
}

fn clock_model(scenario: ClockScenario) -> ClockModel {
    ClockModel {
        scenario,
        sigma_cfo_hz: 0.0,
        pin_reference: false,
    }
}

fn out_dir(cfg: &ExperimentConfig, over: Option<&Path>) -> PathBuf {
    over.map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
}

/// Scalar metrics of the two-regime comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyncCompareMetrics {
    pub width_sync_x_m: f64,
    pub width_sync_y_m: f64,
    pub width_timeonly_x_m: f64,
    pub width_timeonly_y_m: f64,
    /// time-only width over sync width, per axis and geometric mean.
    pub ratio_x: f64,
    pub ratio_y: f64,
    pub ratio_mean: f64,
    pub psl_sync_db: f64,
    pub position_sync: Vec2,
    pub position_timeonly: Vec2,
    pub position_error_sync_m: f64,
    pub position_error_timeonly_m: f64,
}

/// Runs the named experiment and writes all artifacts plus manifest.json
/// under the output directory. Identical config and seed give byte-identical
/// CSV, PGM, and report artifacts on any worker count.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    output_override: Option<&Path>,
) -> Result<RunManifest, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let base = out_dir(cfg, output_override);
    let files = match cfg.kind {
        ExperimentKind::Ambiguity => run_ambiguity(cfg, &base)?,
        ExperimentKind::SyncCompare => run_sync_compare(cfg, &base)?,
        ExperimentKind::BerSweep => run_ber_sweep(cfg, &base)?,
        ExperimentKind::ClutterStudy => run_clutter_study(cfg, &base)?,
    };
    let manifest = RunManifest::collect(
        cfg.clone(),
        &base,
        &files,
        started.elapsed().as_secs_f64(),
    )?;
    write_json(&manifest, &base.join("manifest.json"))?;
    Ok(manifest)
}

fn scenario_name(s: ClockScenario) -> &'static str {
    match s {
        ClockScenario::Perfect => "perfect",
        ClockScenario::TimeOnly => "time-only",
        ClockScenario::FreeRunning { .. } => "free-running",
    }
}

fn run_ambiguity(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<String>, ExperimentError> {
    let fusion = cfg.fusion.as_ref().expect("validated");
    let scene = cfg.build_scene()?;
    let estimates =
        synthesize_and_estimate(&scene, &cfg.ofdm, &cfg.clocks, cfg.snr_db, cfg.seed)?;
    let map = spatial_ambiguity(&estimates, &scene, &cfg.ofdm, &fusion.grid, fusion.mode)?;
    let report = radio_to_context(
        &map,
        None,
        &cfg.ofdm,
        ReportMetadata {
            sync_regime: scenario_name(cfg.clocks.scenario).to_string(),
            fusion_mode: fusion.mode,
            snr_db: cfg.snr_db,
            seed: cfg.seed,
        },
        fusion.detection_threshold,
        fusion.exclusion_radius_m,
    );
    write_map_csv(&map, &base.join("ambiguity.csv"))?;
    write_heatmap(&map, &base.join("ambiguity.pgm"))?;
    write_json(&report, &base.join("report.json"))?;
    Ok(vec![
        "ambiguity.csv".into(),
        "ambiguity.pgm".into(),
        "ambiguity.pgm.axes.txt".into(),
        "report.json".into(),
    ])
}

/// Computes one regime map of the two-regime comparison.
pub fn regime_map(
    cfg: &ExperimentConfig,
    scene: &Scene,
    scenario: ClockScenario,
    mode: FusionMode,
    grid: &crate::fusion::GridSpec,
) -> Result<AmbiguityMap, ExperimentError> {
    let estimates =
        synthesize_and_estimate(scene, &cfg.ofdm, &clock_model(scenario), cfg.snr_db, cfg.seed)?;
    Ok(spatial_ambiguity(
        &estimates, scene, &cfg.ofdm, grid, mode,
    )?)
}

fn run_sync_compare(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<String>, ExperimentError> {
    let sc = cfg.sync_compare.as_ref().expect("validated");
    let scene = cfg.build_scene()?;
    let target = scene
        .targets
        .first()
        .ok_or(ExperimentError::NoTarget)?
        .position;

    let map_sync = regime_map(cfg, &scene, ClockScenario::Perfect, sc.sync_mode, &sc.sync_grid)?;
    let map_timeonly = regime_map(
        cfg,
        &scene,
        ClockScenario::TimeOnly,
        sc.timeonly_mode,
        &sc.timeonly_grid,
    )?;

    let (pos_sync, _) = estimate_position(&map_sync)?;
    let (pos_timeonly, _) = estimate_position(&map_timeonly)?;
    let (wsx, wsy) = mainlobe_width_3db(&map_sync, pos_sync)?;
    let (wtx, wty) = mainlobe_width_3db(&map_timeonly, pos_timeonly)?;
    let psl_sync = peak_sidelobe_level(&map_sync, pos_sync, 10.0 * cfg.ofdm.wavelength_m())?;
    let metrics = SyncCompareMetrics {
        width_sync_x_m: wsx,
        width_sync_y_m: wsy,
        width_timeonly_x_m: wtx,
        width_timeonly_y_m: wty,
        ratio_x: wtx / wsx,
        ratio_y: wty / wsy,
        ratio_mean: ((wtx * wty) / (wsx * wsy)).sqrt(),
        psl_sync_db: psl_sync,
        position_sync: pos_sync,
        position_timeonly: pos_timeonly,
        position_error_sync_m: pos_sync.sub(target).norm(),
        position_error_timeonly_m: pos_timeonly.sub(target).norm(),
    };

    write_map_csv(&map_sync, &base.join("ambiguity_sync.csv"))?;
    write_map_csv(&map_timeonly, &base.join("ambiguity_timeonly.csv"))?;
    write_heatmap(&map_sync, &base.join("ambiguity_sync.pgm"))?;
    write_heatmap(&map_timeonly, &base.join("ambiguity_timeonly.pgm"))?;
    write_json(&metrics, &base.join("metrics.json"))?;
    Ok(vec![
        "ambiguity_sync.csv".into(),
        "ambiguity_timeonly.csv".into(),
        "ambiguity_sync.pgm".into(),
        "ambiguity_sync.pgm.axes.txt".into(),
        "ambiguity_timeonly.pgm".into(),
        "ambiguity_timeonly.pgm.axes.txt".into(),
        "metrics.json".into(),
    ])
}

/// A two-node single-target scene for point-to-point link studies.
pub fn comm_scene() -> Scene {
    let mut scene = crate::scene::build_fig3_network(1, 1, 2.0).unwrap();
    scene
        .targets
        .push(crate::scene::Target::static_unit(Vec2::new(1.0, 1.0)));
    scene
}

/// Measures one BER point over the single-delay link: true-channel
/// equalization of noisy observations, at least `min_bits` bits.
pub fn measure_ber_point(
    cfg: &ExperimentConfig,
    ebn0_db: f64,
    point_index: u64,
) -> Result<(usize, usize), ExperimentError> {
    let ber = cfg.ber.as_ref().expect("validated");
    let scene = comm_scene();
    let snr_db = ebn0_to_symbol_snr_db(ebn0_db);
    let clocks = scene_clocks(&scene, &clock_model(ClockScenario::Perfect), cfg.seed)?;
    let mut errors = 0usize;
    let mut bits = 0usize;
    let mut trial = 0u64;
    while bits < ber.min_bits {
        let trial_seed = seeds::derive_seed(cfg.seed, "ber-trial", &[point_index, trial]);
        let frame = generate_frame(&cfg.ofdm, trial_seed)?;
        let clean = synthesize_link(
            &scene,
            &frame,
            &cfg.ofdm,
            (0, 0),
            &clocks,
            &SynthesisOptions::noiseless(trial_seed),
        )?;
        let truth = estimate_channel_ls(&clean, &frame)?;
        let noisy = synthesize_link(
            &scene,
            &frame,
            &cfg.ofdm,
            (0, 0),
            &clocks,
            &SynthesisOptions::with_snr(snr_db, trial_seed),
        )?;
        let noise_var = 10f64.powf(-snr_db / 10.0);
        let rx_bits = equalize_demodulate(&noisy, &truth, ber.equalizer, noise_var)?;
        let result = measure_ber(&rx_bits, &frame.bits, Some(snr_db), ber.equalizer)?;
        errors += result.bit_errors;
        bits += result.bits_total;
        trial += 1;
    }
    Ok((errors, bits))
}

fn run_ber_sweep(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<String>, ExperimentError> {
    let ber = cfg.ber.as_ref().expect("validated");
    let mut rows = Vec::new();
    for (i, &ebn0) in ber.ebn0_db.iter().enumerate() {
        let (errors, bits) = measure_ber_point(cfg, ebn0, i as u64)?;
        let snr_db = ebn0_to_symbol_snr_db(ebn0);
        rows.push(vec![
            format_float(snr_db),
            bits.to_string(),
            errors.to_string(),
            format_float(errors as f64 / bits as f64),
            format_float(qpsk_ber_theory(ebn0)),
        ]);
    }
    write_csv(
        &["snr_db", "trials", "errors", "rate", "theory"],
        &rows,
        &base.join("ber.csv"),
    )?;
    Ok(vec!["ber.csv".into()])
}

fn run_clutter_study(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<String>, ExperimentError> {
    let fusion = cfg.fusion.as_ref().expect("validated");
    let clutter = cfg.clutter.as_ref().expect("validated");
    let clean_scene = cfg.build_scene()?;
    let cluttered_scene = add_clutter(
        &clean_scene,
        clutter.count,
        clutter.amplitude_db,
        clutter.region,
        cfg.seed,
    )?;
    let mut reports = Vec::new();
    let mut files = Vec::new();
    for (tag, scene) in [("clean", &clean_scene), ("cluttered", &cluttered_scene)] {
        let estimates =
            synthesize_and_estimate(scene, &cfg.ofdm, &cfg.clocks, cfg.snr_db, cfg.seed)?;
        let map = spatial_ambiguity(&estimates, scene, &cfg.ofdm, &fusion.grid, fusion.mode)?;
        let report = radio_to_context(
            &map,
            None,
            &cfg.ofdm,
            ReportMetadata {
                sync_regime: scenario_name(cfg.clocks.scenario).to_string(),
                fusion_mode: fusion.mode,
                snr_db: cfg.snr_db,
                seed: cfg.seed,
            },
            fusion.detection_threshold,
            fusion.exclusion_radius_m,
        );
        let csv = format!("ambiguity_{tag}.csv");
        let pgm = format!("ambiguity_{tag}.pgm");
        write_map_csv(&map, &base.join(&csv))?;
        write_heatmap(&map, &base.join(&pgm))?;
        files.push(csv);
        files.push(format!("{pgm}.axes.txt"));
        files.push(pgm);
        reports.push((tag.to_string(), report));
    }
    #[derive(Serialize)]
    struct ClutterReport {
        clutter_count: usize,
        amplitude_db: f64,
        reports: Vec<(String, crate::fusion::ContextReport)>,
    }
    write_json(
        &ClutterReport {
            clutter_count: clutter.count,
            amplitude_db: clutter.amplitude_db,
            reports,
        },
        &base.join("report.json"),
    )?;
    files.push("report.json".into());
    files.sort();
    Ok(files)
}

/// Scalar sweep metrics for one parameter value.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub width_x_m: Option<f64>,
    pub width_y_m: Option<f64>,
    pub psl_db: Option<f64>,
    pub median_position_error_m: f64,
}

fn apply_sweep_value(
    cfg: &ExperimentConfig,
    param: &str,
    value: f64,
) -> Result<ExperimentConfig, ExperimentError> {
    let mut out = cfg.clone();
    match param {
        "snr_db" => out.snr_db = Some(value),
        "bandwidth_hz" => out.ofdm.bandwidth_hz = value,
        "sigma_t_s" => {
            out.clocks = clock_model(ClockScenario::FreeRunning { sigma_t_s: value })
        }
        "p" | "q" => match &mut out.scene {
            SceneConfig::Axes { p, q, .. } => {
                if param == "p" {
                    *p = value as usize;
                } else {
                    *q = value as usize;
                }
            }
            SceneConfig::Inline { .. } => {
                return Err(ExperimentError::SweepNeedsAxesScene(param.to_string()))
            }
        },
        "clutter_count" => {
            let target = first_target(cfg)?;
            let clutter = out.clutter.get_or_insert(crate::config::ClutterConfig {
                count: 0,
                amplitude_db: -20.0,
                region: Region {
                    x_min: target.x - 1.0,
                    x_max: target.x + 1.0,
                    y_min: target.y - 1.0,
                    y_max: target.y + 1.0,
                },
            });
            clutter.count = value as usize;
        }
        other => return Err(ExperimentError::UnknownSweepParam(other.to_string())),
    }
    Ok(out)
}

fn first_target(cfg: &ExperimentConfig) -> Result<Vec2, ExperimentError> {
    let scene = cfg.build_scene()?;
    scene
        .targets
        .first()
        .map(|t| t.position)
        .ok_or(ExperimentError::NoTarget)
}

/// Evaluates the sweep metrics of one configuration: Monte Carlo position
/// error over `n_seeds` replicate seeds, widths and PSL from the first.
pub fn sweep_point_metrics(
    cfg: &ExperimentConfig,
    value: f64,
) -> Result<SweepPoint, ExperimentError> {
    let fusion = cfg
        .fusion
        .as_ref()
        .ok_or(ConfigError::MissingSection {
            kind: cfg.kind,
            section: "fusion",
        })?;
    let mut scene = cfg.build_scene()?;
    if let Some(cl) = &cfg.clutter {
        scene = add_clutter(&scene, cl.count, cl.amplitude_db, cl.region, cfg.seed)?;
    }
    let target = scene
        .targets
        .first()
        .ok_or(ExperimentError::NoTarget)?
        .position;
    let mut errors = Vec::with_capacity(cfg.n_seeds);
    let mut first_map = None;
    for rep in 0..cfg.n_seeds {
        let rep_seed = seeds::derive_seed(cfg.seed, "sweep-rep", &[rep as u64]);
        let estimates =
            synthesize_and_estimate(&scene, &cfg.ofdm, &cfg.clocks, cfg.snr_db, rep_seed)?;
        let map = spatial_ambiguity(&estimates, &scene, &cfg.ofdm, &fusion.grid, fusion.mode)?;
        let (pos, _) = estimate_position(&map)?;
        errors.push(pos.sub(target).norm());
        if first_map.is_none() {
            first_map = Some(map);
        }
    }
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = errors[errors.len() / 2];
    let map = first_map.expect("n_seeds >= 1");
    let (pos, _) = estimate_position(&map)?;
    let (wx, wy) = match mainlobe_width_3db(&map, pos) {
        Ok((wx, wy)) => (Some(wx), Some(wy)),
        Err(_) => (None, None),
    };
    let psl = peak_sidelobe_level(&map, pos, 10.0 * cfg.ofdm.wavelength_m()).ok();
    Ok(SweepPoint {
        value,
        width_x_m: wx,
        width_y_m: wy,
        psl_db: psl,
        median_position_error_m: median,
    })
}

/// Runs a parameter sweep and writes sweep.csv plus manifest.json.
pub fn sweep(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[f64],
    output_override: Option<&Path>,
) -> Result<RunManifest, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptySweepValues);
    }
    const KNOWN: [&str; 6] = ["snr_db", "bandwidth_hz", "p", "q", "sigma_t_s", "clutter_count"];
    if !KNOWN.contains(&param) {
        return Err(ExperimentError::UnknownSweepParam(param.to_string()));
    }
    cfg.validate()?;
    let started = Instant::now();
    let base = out_dir(cfg, output_override);
    let mut rows = Vec::new();
    for &value in values {
        let point_cfg = apply_sweep_value(cfg, param, value)?;
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), format_float);
        if cfg.kind == ExperimentKind::BerSweep && param == "snr_db" {
            // BER metric of a single Eb/N0 point; sensing metrics are n/a.
            let (errors, bits) = measure_ber_point(&point_cfg, value, rows.len() as u64)?;
            rows.push(vec![
                format_float(value),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                "nan".into(),
                format_float(errors as f64 / bits as f64),
            ]);
        } else {
            let point = sweep_point_metrics(&point_cfg, value)?;
            rows.push(vec![
                format_float(value),
                fmt_opt(point.width_x_m),
                fmt_opt(point.width_y_m),
                fmt_opt(point.psl_db),
                format_float(point.median_position_error_m),
                "nan".into(),
            ]);
        }
    }
    write_csv(
        &[
            param,
            "width_x_m",
            "width_y_m",
            "psl_db",
            "median_position_error_m",
            "ber",
        ],
        &rows,
        &base.join("sweep.csv"),
    )?;
    let manifest = RunManifest::collect(
        cfg.clone(),
        &base,
        &["sweep.csv".to_string()],
        started.elapsed().as_secs_f64(),
    )?;
    write_json(&manifest, &base.join("manifest.json"))?;
    Ok(manifest)
}
