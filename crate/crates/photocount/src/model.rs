//! Detector and noise parameterization, plus the scalar regime formulas.
//!
//! Noise counts are modeled as thermal occupation spread over `mu`
//! effective bath modes inside the detection window. Two regimes exist:
//! the finite-mode model (`mu` explicit) and its `mu -> infinity` limit,
//! where the noise becomes exactly Poissonian and only the mean `n_noise`
//! survives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default applicability tolerance for [`poisson_limit_applicable`]: with
/// `n_noise / modes` below 1e-3 the mode-coupling correction to the count
/// variance is at most ~0.1% of the shot noise.
pub const DEFAULT_POISSON_LIMIT_TOLERANCE: f64 = 1e-3;

/// Thermal background of a detector: either the Poissonian limit (only the
/// mean count number matters) or a finite number of bath modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum NoiseModel {
    /// Infinitely many weakly occupied modes; noise counts are Poissonian.
    #[serde(rename = "poissonian")]
    PoissonianLimit { n_noise: f64 },
    /// `modes` bath modes sharing `n_noise` mean counts equally.
    #[serde(rename = "finite")]
    FiniteModes { n_noise: f64, modes: u64 },
}

impl NoiseModel {
    /// Mean number of noise counts in the detection window.
    pub fn n_noise(&self) -> f64 {
        match *self {
            NoiseModel::PoissonianLimit { n_noise } => n_noise,
            NoiseModel::FiniteModes { n_noise, .. } => n_noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n_noise = self.n_noise();
        if !n_noise.is_finite() || n_noise < 0.0 {
            return Err(Error::Validation(format!(
                "noise mean must be finite and nonnegative, got {n_noise}"
            )));
        }
        if let NoiseModel::FiniteModes { modes, .. } = *self {
            if modes < 1 {
                return Err(Error::Validation("mode count must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// A photodetector: quantum efficiency plus its thermal background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub noise: NoiseModel,
}

impl DetectorConfig {
    pub fn new(efficiency: f64, noise: NoiseModel) -> Result<DetectorConfig> {
        let d = DetectorConfig { efficiency, noise };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.efficiency.is_finite() || !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Validation(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        self.noise.validate()
    }

    pub fn n_noise(&self) -> f64 {
        self.noise.n_noise()
    }
}

/// Thermal bath seen through a detection window: bandwidth in rad/s and
/// window length in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub bandwidth: f64,
    pub detection_time: f64,
}

impl BathSpec {
    pub fn new(bandwidth: f64, detection_time: f64) -> Result<BathSpec> {
        let b = BathSpec { bandwidth, detection_time };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bandwidth.is_finite() || self.bandwidth <= 0.0 {
            return Err(Error::Validation(format!(
                "bandwidth must be finite and positive, got {}",
                self.bandwidth
            )));
        }
        if !self.detection_time.is_finite() || self.detection_time <= 0.0 {
            return Err(Error::Validation(format!(
                "detection time must be finite and positive, got {}",
                self.detection_time
            )));
        }
        Ok(())
    }
}

/// Effective number of thermal modes in the detection window: the
/// bandwidth-time product rounded to the nearest integer, at least 1.
pub fn estimate_mode_count(bath: &BathSpec) -> Result<u64> {
    bath.validate()?;
    let product = (bath.bandwidth * bath.detection_time).round();
    Ok(if product < 1.0 { 1 } else { product as u64 })
}

/// Detection time below which the background no longer looks Poissonian:
/// the noise mean divided by the bandwidth. At windows around this scale
/// the mode count drops to order `n_noise` and the finite-mode statistics
/// take over.
pub fn critical_detection_time(n_noise: f64, bandwidth: f64) -> Result<f64> {
    if !n_noise.is_finite() || n_noise < 0.0 {
        return Err(Error::Validation(format!(
            "noise mean must be finite and nonnegative, got {n_noise}"
        )));
    }
    if !bandwidth.is_finite() || bandwidth <= 0.0 {
        return Err(Error::Validation(format!(
            "bandwidth must be finite and positive, got {bandwidth}"
        )));
    }
    Ok(n_noise / bandwidth)
}

/// Whether the Poissonian limit is an adequate stand-in for the given
/// noise model: true for the limit itself, and for finite-mode noise with
/// occupation per mode below `tolerance`.
pub fn poisson_limit_applicable(noise: &NoiseModel, tolerance: f64) -> bool {
    assert!(tolerance > 0.0, "tolerance must be positive");
    match *noise {
        NoiseModel::PoissonianLimit { .. } => true,
        NoiseModel::FiniteModes { n_noise, modes } => n_noise / (modes as f64) < tolerance,
    }
}
