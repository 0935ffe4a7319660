//! Synthetic matched disturbances: a regular wave and a near-surface suction bias.
//!
//! All magnitudes here are harness constants; the vehicle data come with no
//! calibrated sea-state forcing.

use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

/// Monochromatic wave forcing on both input channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    /// Forcing on the fin channel (rad equivalent).
    pub amplitude_v: f64,
    /// Forcing on the hover-tank channel (kg equivalent).
    pub amplitude_m: f64,
    /// rad/s
    pub omega: f64,
    pub phase: f64,
    /// 1/m; the deep-water value is `ω²/g`.
    pub decay_wavenumber: f64,
}

impl WaveParams {
    pub fn deep_water_wavenumber(omega: f64) -> f64 {
        omega * omega / GRAVITY
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("wave omega {} must be positive", self.omega)));
        }
        if !(self.amplitude_v >= 0.0 && self.amplitude_m >= 0.0) {
            return Err(Error::InvalidArgument("wave amplitudes must be non-negative".into()));
        }
        if !(self.decay_wavenumber >= 0.0) || !self.phase.is_finite() {
            return Err(Error::InvalidArgument("wave decay wavenumber must be non-negative".into()));
        }
        Ok(())
    }

    pub fn component(&self, t: f64, z: f64) -> [f64; 2] {
        let s = (-self.decay_wavenumber * z.max(0.0)).exp() * (self.omega * t + self.phase).sin();
        [self.amplitude_v * s, self.amplitude_m * s]
    }
}

impl Default for WaveParams {
    fn default() -> Self {
        let omega = 0.65;
        Self {
            amplitude_v: 0.05,
            amplitude_m: 20.0,
            omega,
            phase: 0.0,
            decay_wavenumber: Self::deep_water_wavenumber(omega),
        }
    }
}

/// Static bias decaying exponentially below a reference depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuctionParams {
    pub magnitude_v: f64,
    pub magnitude_m: f64,
    /// m
    pub reference_depth: f64,
    /// m
    pub decay_length: f64,
}

impl SuctionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.decay_length > 0.0 && self.decay_length.is_finite()) {
            return Err(Error::InvalidArgument(format!("suction decay length {} must be positive", self.decay_length)));
        }
        if !(self.magnitude_v.is_finite() && self.magnitude_m.is_finite() && self.reference_depth.is_finite()) {
            return Err(Error::NonFinite("suction parameters".into()));
        }
        Ok(())
    }

    /// Shallower than the reference depth the bias is held at its reference value.
    pub fn component(&self, z: f64) -> [f64; 2] {
        let depth = z.max(self.reference_depth);
        let s = (-(depth - self.reference_depth) / self.decay_length).exp();
        [self.magnitude_v * s, self.magnitude_m * s]
    }
}

impl Default for SuctionParams {
    fn default() -> Self {
        Self { magnitude_v: 0.03, magnitude_m: 50.0, reference_depth: 15.0, decay_length: 10.0 }
    }
}

pub fn wave_component(p: &WaveParams, t: f64, z: f64) -> [f64; 2] {
    p.component(t, z)
}

pub fn suction_component(p: &SuctionParams, z: f64) -> [f64; 2] {
    p.component(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceModel {
    pub waves: WaveParams,
    pub suction: SuctionParams,
    pub waves_enabled: bool,
    pub suction_enabled: bool,
}

impl Default for DisturbanceModel {
    fn default() -> Self {
        Self {
            waves: WaveParams::default(),
            suction: SuctionParams::default(),
            waves_enabled: true,
            suction_enabled: true,
        }
    }
}

impl DisturbanceModel {
    pub fn none() -> Self {
        Self { waves_enabled: false, suction_enabled: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.waves.validate()?;
        self.suction.validate()
    }

    /// `(wave, suction)` with disabled parts zeroed. Negative depths are treated as 0.
    pub fn components(&self, t: f64, z: f64) -> ([f64; 2], [f64; 2]) {
        let z = z.max(0.0);
        let wave = if self.waves_enabled { self.waves.component(t, z) } else { [0.0; 2] };
        let suction = if self.suction_enabled { self.suction.component(z) } else { [0.0; 2] };
        (wave, suction)
    }

    pub fn evaluate(&self, t: f64, z: f64) -> [f64; 2] {
        let (w, s) = self.components(t, z);
        [w[0] + s[0], w[1] + s[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_silent() {
        let p = WaveParams { amplitude_v: 0.0, amplitude_m: 0.0, ..WaveParams::default() };
        for (t, z) in [(0.0, 0.0), (3.3, 10.0), (1e4, 50.0)] {
            assert_eq!(p.component(t, z), [0.0, 0.0]);
        }
    }

    #[test]
    fn deep_attenuation() {
        let p = WaveParams::default();
        let z = 10.0 / p.decay_wavenumber;
        let t = std::f64::consts::FRAC_PI_2 / p.omega;
        let atten = p.component(t, z)[0] / p.amplitude_v;
        assert!(atten < 5e-5 && atten > 0.0);
    }

    #[test]
    fn wave_crest() {
        let p = WaveParams { amplitude_v: 0.05, omega: 0.648, phase: 0.0, ..WaveParams::default() };
        let v = p.component(std::f64::consts::PI / (2.0 * 0.648), 0.0);
        assert!((v[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn suction_shape() {
        let s = SuctionParams::default();
        assert_eq!(s.component(15.0), [0.03, 50.0]);
        let e = s.component(25.0);
        assert!((e[0] - 0.03 / std::f64::consts::E).abs() < 1e-15);
        assert!((e[1] - 50.0 / std::f64::consts::E).abs() < 1e-12);
        assert_eq!(s.component(3.0), s.component(15.0));
        let zero = SuctionParams { magnitude_v: 0.0, magnitude_m: 0.0, ..s };
        assert_eq!(zero.component(20.0), [0.0, 0.0]);
    }

    #[test]
    fn evaluate_sums_enabled_parts() {
        assert_eq!(DisturbanceModel::none().evaluate(12.0, 18.0), [0.0, 0.0]);
        let waves_only = DisturbanceModel { suction_enabled: false, ..DisturbanceModel::default() };
        assert_eq!(waves_only.evaluate(12.0, 18.0), waves_only.waves.component(12.0, 18.0));
        let both = DisturbanceModel::default();
        let (t, z) = (101.7, 22.5);
        let w = wave_component(&both.waves, t, z);
        let s = suction_component(&both.suction, z);
        assert_eq!(both.evaluate(t, z), [w[0] + s[0], w[1] + s[1]]);
    }

    #[test]
    fn validation() {
        assert!(DisturbanceModel::default().validate().is_ok());
        let bad = SuctionParams { decay_length: 0.0, ..SuctionParams::default() };
        assert!(bad.validate().is_err());
        let bad = WaveParams { omega: 0.0, ..WaveParams::default() };
        assert!(bad.validate().is_err());
    }
}
