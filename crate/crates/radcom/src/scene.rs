//! Network geometry: access points, targets, clutter scatterers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 2D point or vector in meters (or m/s for velocities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Transmitter,
    Receiver,
}

/// A single-element access point of the distributed deployment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccessPoint {
    pub id: u32,
    pub position: Vec2,
    pub role: Role,
    /// Serving-area identifier (elements sharing an area share a carrier).
    pub serving_area: u32,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
}

/// How a target's per-link complex amplitude is drawn.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Reflectivity {
    /// Same complex amplitude on every bistatic link.
    Constant { re: f64, im: f64 },
    /// Independent circular complex Gaussian amplitude per link, modeling
    /// spatial variability of the radar cross section.
    RcsRandom { mean_power: f64 },
}

impl Reflectivity {
    pub fn unit() -> Self {
        Reflectivity::Constant { re: 1.0, im: 0.0 }
    }

    /// Mean power of the per-link amplitude.
    pub fn mean_power(&self) -> f64 {
        match *self {
            Reflectivity::Constant { re, im } => re * re + im * im,
            Reflectivity::RcsRandom { mean_power } => mean_power,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Target {
    pub position: Vec2,
    pub velocity: Vec2,
    pub reflectivity: Reflectivity,
}

impl Target {
    pub fn static_unit(position: Vec2) -> Self {
        Self {
            position,
            velocity: Vec2::new(0.0, 0.0),
            reflectivity: Reflectivity::unit(),
        }
    }
}

/// A static point scatterer (clutter).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Vec2,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
}

impl Scatterer {
    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.amplitude_re, self.amplitude_im)
    }
}

/// Full deployment: P transmitters, Q receivers, targets, clutter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub transmitters: Vec<AccessPoint>,
    pub receivers: Vec<AccessPoint>,
    #[serde(default)]
    pub targets: Vec<Target>,
    #[serde(default)]
    pub clutter: Vec<Scatterer>,
    /// Permits a transmitter and a receiver at the same position
    /// (degenerate bistatic geometry).
    #[serde(default)]
    pub allow_colocated: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("no transmitters")]
    NoTransmitters,
    #[error("no receivers")]
    NoReceivers,
    #[error("duplicate access-point id {0}")]
    DuplicateId(u32),
    #[error("non-finite coordinates on access point {0}")]
    NonFiniteAccessPoint(u32),
    #[error("non-positive carrier on access point {0}")]
    NonPositiveCarrier(u32),
    #[error("non-finite target state (target index {0})")]
    NonFiniteTarget(usize),
    #[error("target {0} has zero reflectivity power")]
    ZeroReflectivity(usize),
    #[error("non-finite clutter scatterer (index {0})")]
    NonFiniteScatterer(usize),
    #[error("transmitter {tx} co-positioned with receiver {rx}")]
    ColocatedPair { tx: u32, rx: u32 },
}

impl Scene {
    pub fn num_links(&self) -> usize {
        self.transmitters.len() * self.receivers.len()
    }

    /// All (tx index, rx index) pairs in a fixed order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let q = self.receivers.len();
        (0..self.transmitters.len()).flat_map(move |p| (0..q).map(move |r| (p, r)))
    }

    /// Shifts every position (nodes, targets, clutter) by `offset`.
    pub fn translated(&self, offset: Vec2) -> Scene {
        let mut s = self.clone();
        for ap in s.transmitters.iter_mut().chain(s.receivers.iter_mut()) {
            ap.position = ap.position.add(offset);
        }
        for t in &mut s.targets {
            t.position = t.position.add(offset);
        }
        for c in &mut s.clutter {
            c.position = c.position.add(offset);
        }
        s
    }
}

/// Builds the canonical axis deployment: P transmitters along the x-axis at
/// `(i*spacing, 0)`, Q receivers along the y-axis at `(0, j*spacing)` for
/// j = 1..Q so no node sits at the shared origin. Targets and clutter empty.
pub fn build_fig3_network(p: usize, q: usize, spacing: f64) -> Result<Scene, SceneError> {
    if !(spacing > 0.0) {
        return Err(SceneError::NonPositiveSpacing(spacing));
    }
    if p == 0 {
        return Err(SceneError::NoTransmitters);
    }
    if q == 0 {
        return Err(SceneError::NoReceivers);
    }
    let carrier = 26.0e9; // default F1; overridden by the waveform config downstream
    let transmitters = (0..p)
        .map(|i| AccessPoint {
            id: i as u32,
            position: Vec2::new(i as f64 * spacing, 0.0),
            role: Role::Transmitter,
            serving_area: 1,
            carrier_hz: carrier,
        })
        .collect();
    let receivers = (0..q)
        .map(|j| AccessPoint {
            id: (p + j) as u32,
            position: Vec2::new(0.0, (j + 1) as f64 * spacing),
            role: Role::Receiver,
            serving_area: 1,
            carrier_hz: carrier,
        })
        .collect();
    Ok(Scene {
        transmitters,
        receivers,
        targets: Vec::new(),
        clutter: Vec::new(),
        allow_colocated: false,
    })
}

/// Checks every scene invariant and returns the complete violation list.
pub fn validate_scene(scene: &Scene) -> Result<(), Vec<SceneError>> {
    let mut errors = Vec::new();
    if scene.transmitters.is_empty() {
        errors.push(SceneError::NoTransmitters);
    }
    if scene.receivers.is_empty() {
        errors.push(SceneError::NoReceivers);
    }
    let mut seen = std::collections::HashSet::new();
    for ap in scene.transmitters.iter().chain(scene.receivers.iter()) {
        if !seen.insert(ap.id) {
            errors.push(SceneError::DuplicateId(ap.id));
        }
        if !ap.position.is_finite() {
            errors.push(SceneError::NonFiniteAccessPoint(ap.id));
        }
        if !(ap.carrier_hz > 0.0) {
            errors.push(SceneError::NonPositiveCarrier(ap.id));
        }
    }
    if !scene.allow_colocated {
        for tx in &scene.transmitters {
            for rx in &scene.receivers {
                if tx.position == rx.position {
                    errors.push(SceneError::ColocatedPair { tx: tx.id, rx: rx.id });
                }
            }
        }
    }
    for (i, t) in scene.targets.iter().enumerate() {
        if !t.position.is_finite() || !t.velocity.is_finite() {
            errors.push(SceneError::NonFiniteTarget(i));
        }
        if !(t.reflectivity.mean_power() > 0.0) {
            errors.push(SceneError::ZeroReflectivity(i));
        }
    }
    for (i, c) in scene.clutter.iter().enumerate() {
        if !c.position.is_finite() || !c.amplitude_re.is_finite() || !c.amplitude_im.is_finite() {
            errors.push(SceneError::NonFiniteScatterer(i));
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig3_layout() {
        let s = build_fig3_network(8, 8, 2.0).unwrap();
        assert_eq!(s.transmitters.len(), 8);
        assert_eq!(s.receivers.len(), 8);
        for (i, tx) in s.transmitters.iter().enumerate() {
            assert_eq!(tx.position, Vec2::new(2.0 * i as f64, 0.0));
        }
        // Receivers offset by one spacing so nothing sits at the origin.
        assert_eq!(s.receivers[0].position, Vec2::new(0.0, 2.0));
        assert_eq!(s.receivers[7].position, Vec2::new(0.0, 16.0));
        validate_scene(&s).unwrap();
    }

    #[test]
    fn single_bistatic_pair() {
        let s = build_fig3_network(1, 1, 2.0).unwrap();
        assert_eq!(s.transmitters[0].position, Vec2::new(0.0, 0.0));
        assert_eq!(s.receivers[0].position, Vec2::new(0.0, 2.0));
        assert_eq!(s.num_links(), 1);
    }

    #[test]
    fn link_counting() {
        let s = build_fig3_network(2, 3, 1.0).unwrap();
        assert_eq!(s.transmitters.len() + s.receivers.len(), 5);
        assert_eq!(s.num_links(), 6);
        assert_eq!(s.links().count(), 6);
    }

    #[test]
    fn rejects_bad_spacing() {
        assert_eq!(
            build_fig3_network(2, 2, 0.0).unwrap_err(),
            SceneError::NonPositiveSpacing(0.0)
        );
    }

    #[test]
    fn validate_reports_empty_tx() {
        let mut s = build_fig3_network(1, 1, 2.0).unwrap();
        s.transmitters.clear();
        let errs = validate_scene(&s).unwrap_err();
        assert!(errs.contains(&SceneError::NoTransmitters));
    }

    #[test]
    fn validate_reports_duplicate_id() {
        let mut s = build_fig3_network(2, 2, 2.0).unwrap();
        s.receivers[0].id = 3;
        s.receivers[1].id = 3;
        let errs = validate_scene(&s).unwrap_err();
        assert!(errs.contains(&SceneError::DuplicateId(3)));
    }

    #[test]
    fn validate_reports_colocated_pair() {
        let mut s = build_fig3_network(1, 1, 2.0).unwrap();
        s.receivers[0].position = s.transmitters[0].position;
        assert!(validate_scene(&s).is_err());
        s.allow_colocated = true;
        validate_scene(&s).unwrap();
    }
}
