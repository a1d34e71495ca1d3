//! Validated scalar newtypes for frequency, distance and noise psd.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn positive_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain { name, value })
    }
}

/// Acoustic frequency in kilohertz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencyKHz(f64);

impl FrequencyKHz {
    pub fn new(khz: f64) -> Result<Self> {
        positive_finite("frequency (kHz)", khz).map(Self)
    }

    #[inline]
    pub fn khz(self) -> f64 {
        self.0
    }
}

/// Link distance in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistanceKm(f64);

impl DistanceKm {
    pub fn new(km: f64) -> Result<Self> {
        positive_finite("distance (km)", km).map(Self)
    }

    #[inline]
    pub fn km(self) -> f64 {
        self.0
    }
}

/// Linear noise power spectral density, in the (relative) µPa²/Hz units of
/// the ambient-noise formulas.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PsdLinear(f64);

impl PsdLinear {
    pub fn new(value: f64) -> Result<Self> {
        positive_finite("psd", value).map(Self)
    }

    /// Wraps a value already known to be positive (the noise formulas are
    /// exponentials and cannot produce anything else).
    pub(crate) fn from_exp10(log10_value: f64) -> Self {
        Self(10f64.powf(log10_value))
    }

    #[inline]
    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

impl std::ops::Add for PsdLinear {
    type Output = PsdLinear;

    fn add(self, rhs: Self) -> Self {
        PsdLinear(self.0 + rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_and_non_finite() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(FrequencyKHz::new(bad).is_err());
            assert!(DistanceKm::new(bad).is_err());
            assert!(PsdLinear::new(bad).is_err());
        }
        assert_eq!(FrequencyKHz::new(2.5).unwrap().khz(), 2.5);
        assert_eq!(DistanceKm::new(7.0).unwrap().km(), 7.0);
    }

    #[test]
    fn psd_db() {
        let p = PsdLinear::new(100.0).unwrap();
        assert!((p.db() - 20.0).abs() < 1e-12);
    }
}
