use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lti::{eval_at, series, spectral_abscissa, StateSpaceModel};

pub const DEFAULT_FILTER_ORDER: usize = 8;
pub const DEFAULT_NOTCH_DEPTH: f64 = 0.01;
pub const DEFAULT_RELATIVE_WIDTH: f64 = 0.5;

/// Band-pass weighting filter: the inverse of a cascaded biquad notch.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassDesign {
    pub center_omega: f64,
    pub order: usize,
    pub notch_depth: f64,
    pub relative_width: f64,
    pub realization: StateSpaceModel,
    pub warnings: Vec<String>,
}

impl BandpassDesign {
    /// `|H(jω)|`
    pub fn gain_at(&self, omega: f64) -> f64 {
        eval_at(&self.realization, Complex64::new(0.0, omega)).map(|h| h[(0, 0)].norm()).unwrap_or(f64::INFINITY)
    }

    /// Zero-state pass-through, used when a case runs without filtering.
    pub fn pass_through() -> Self {
        Self {
            center_omega: 0.0,
            order: 0,
            notch_depth: 1.0,
            relative_width: 0.0,
            realization: StateSpaceModel::identity(1),
            warnings: Vec::new(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.realization.n_states()
    }
}

/// `(s² + 2ζ_p ω s + ω²) / (s² + 2ζ_z ω s + ω²) = 1 + 2(ζ_p - ζ_z) ω s / (s² + 2ζ_z ω s + ω²)`.
fn inverse_biquad(omega: f64, zeta_p: f64, zeta_z: f64) -> StateSpaceModel {
    StateSpaceModel::continuous(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -omega * omega, -2.0 * zeta_z * omega]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[0.0, 2.0 * (zeta_p - zeta_z) * omega]),
        DMatrix::from_element(1, 1, 1.0),
    )
    .expect("finite biquad")
}

/// Inverse of an order-`order` notch at `center_omega`, built from `order/2`
/// identical biquads with pole damping `relative_width` and zero damping
/// `notch_depth · relative_width`.
pub fn design_bandpass(
    center_omega: f64,
    order: usize,
    notch_depth: f64,
    relative_width: f64,
) -> Result<BandpassDesign> {
    if !(center_omega > 0.0 && center_omega.is_finite()) {
        return Err(Error::FilterDesign(format!("center frequency {center_omega} must be positive")));
    }
    if order < 2 || order % 2 != 0 {
        return Err(Error::FilterDesign(format!("order {order} must be even and at least 2")));
    }
    if !(notch_depth > 0.0 && notch_depth <= 1.0) {
        return Err(Error::FilterDesign(format!("notch depth {notch_depth} must lie in (0, 1)")));
    }
    if !(relative_width > 0.0 && relative_width.is_finite()) {
        return Err(Error::FilterDesign(format!("relative width {relative_width} must be positive")));
    }
    let mut warnings = Vec::new();
    if notch_depth == 1.0 {
        warnings.push("notch depth 1 gives H(s) = 1; the filter weight has no effect".to_string());
        return Ok(BandpassDesign {
            center_omega,
            order,
            notch_depth,
            relative_width,
            realization: StateSpaceModel::identity(1),
            warnings,
        });
    }

    let zeta_z = notch_depth * relative_width;
    let section = inverse_biquad(center_omega, relative_width, zeta_z);
    let mut realization = section.clone();
    for _ in 1..order / 2 {
        realization = series(&realization, &section)?;
    }

    let abscissa = spectral_abscissa(realization.a());
    if !(abscissa < -1e-9 * center_omega) {
        return Err(Error::FilterDesign(format!("realization is not stable (spectral abscissa {abscissa:e})")));
    }
    let design = BandpassDesign { center_omega, order, notch_depth, relative_width, realization, warnings };
    let dc = design.gain_at(0.0);
    let peak = design.gain_at(center_omega);
    if !peak.is_finite() {
        return Err(Error::FilterDesign("realization is numerically singular at the center frequency".into()));
    }
    if (dc - 1.0).abs() > 1e-6 {
        return Err(Error::FilterDesign(format!("DC gain {dc} differs from 1")));
    }
    if peak / dc < 10.0 {
        return Err(Error::FilterDesign(format!(
            "center-to-DC gain ratio {:.3} is below 10; lower the notch depth or raise the order",
            peak / dc
        )));
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_peak() {
        let d = design_bandpass(0.65, 2, 0.01, 0.5).unwrap();
        assert_eq!(d.n_states(), 2);
        // at the center the biquad reduces to ζ_p / ζ_z
        assert!((d.gain_at(0.65) - 100.0).abs() < 1e-9);
        assert!((d.gain_at(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eighth_order_default() {
        let d = design_bandpass(0.65, DEFAULT_FILTER_ORDER, DEFAULT_NOTCH_DEPTH, DEFAULT_RELATIVE_WIDTH).unwrap();
        assert_eq!(d.n_states(), 8);
        assert!(d.gain_at(0.65) / d.gain_at(0.0) >= 10.0);
        assert!((d.gain_at(0.65) - 1e8).abs() < 1e-2);
        assert!(d.gain_at(6.5) < 2.0);
        assert!(spectral_abscissa(d.realization.a()) < 0.0);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn unit_depth_is_pass_through_with_warning() {
        let d = design_bandpass(0.65, 8, 1.0, 0.5).unwrap();
        assert_eq!(d.n_states(), 0);
        assert_eq!(d.gain_at(0.65), 1.0);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn bad_parameters() {
        assert!(design_bandpass(0.65, 3, 0.01, 0.5).is_err());
        assert!(design_bandpass(0.65, 0, 0.01, 0.5).is_err());
        assert!(design_bandpass(0.65, 8, 0.0, 0.5).is_err());
        assert!(design_bandpass(0.65, 8, 1.5, 0.5).is_err());
        assert!(design_bandpass(-1.0, 8, 0.01, 0.5).is_err());
        // a single shallow section cannot reach the required selectivity
        assert!(design_bandpass(0.65, 2, 0.2, 0.5).is_err());
    }
}
