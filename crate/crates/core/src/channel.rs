//! Channel physics: Thorp absorption, path loss and the four-source ambient
//! noise spectrum.
//!
//! Everything here is a pure function of frequency, distance and
//! [`EnvironmentParams`]. Path loss grows like `10^(a_dB(f)·l/10)` and
//! overflows `f64` far up the frequency axis at long range, so the solver
//! works with [`ln_an_product`] and only exponentiates inside the band.
//!
//! ```
//! use uwacap::channel::{absorption_db_per_km, noise_psd_linear, EnvironmentParams};
//! use uwacap::units::FrequencyKHz;
//!
//! let f = FrequencyKHz::new(10.0).unwrap();
//! assert!((absorption_db_per_km(f) - 1.18703).abs() < 1e-5);
//! let n = noise_psd_linear(f, &EnvironmentParams::default());
//! assert!(n.db() > 0.0);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{DistanceKm, FrequencyKHz, PsdLinear};

/// Below this frequency the low-frequency absorption formula is used.
pub const LOW_FREQ_CROSSOVER_KHZ: f64 = 0.3;

/// Propagation environment.
///
/// `spreading_ref_km` is the distance at which the geometric spreading term
/// `(l / l_ref)^k` equals one. The default of 1 km makes `A(1 km, f) = a(f)`;
/// 0.001 km measures spreading in metres, which shifts every power intercept
/// by `10·k·log10(1000)` dB and leaves all slopes alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentParams {
    pub spreading_factor: f64,
    pub shipping: f64,
    pub wind_speed: f64,
    #[serde(default = "default_ref_km")]
    pub spreading_ref_km: f64,
}

fn default_ref_km() -> f64 {
    1.0
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            spreading_factor: 1.5,
            shipping: 0.5,
            wind_speed: 0.0,
            spreading_ref_km: 1.0,
        }
    }
}

impl EnvironmentParams {
    /// Builds and validates an environment with a 1 km spreading reference.
    pub fn new(spreading_factor: f64, shipping: f64, wind_speed: f64) -> Result<Self> {
        let env = Self {
            spreading_factor,
            shipping,
            wind_speed,
            spreading_ref_km: 1.0,
        };
        env.validate()?;
        if let Some(w) = env.spreading_warning() {
            log::warn!("{w}");
        }
        Ok(env)
    }

    pub fn with_spreading_ref_km(mut self, km: f64) -> Result<Self> {
        self.spreading_ref_km = km;
        self.validate()?;
        Ok(self)
    }

    pub fn with_spreading_factor(mut self, k: f64) -> Result<Self> {
        self.spreading_factor = k;
        self.validate()?;
        Ok(self)
    }

    /// Hard checks. A spreading factor outside `[1, 2]` is only a warning.
    pub fn validate(&self) -> Result<()> {
        if !self.spreading_factor.is_finite() || self.spreading_factor <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "spreading_factor",
                reason: format!("must be finite and positive, got {}", self.spreading_factor),
            });
        }
        if !(0.0..=1.0).contains(&self.shipping) {
            return Err(Error::InvalidParameter {
                name: "shipping",
                reason: format!("must lie in [0, 1], got {}", self.shipping),
            });
        }
        if !self.wind_speed.is_finite() || self.wind_speed < 0.0 {
            return Err(Error::InvalidParameter {
                name: "wind_speed",
                reason: format!("must be finite and >= 0, got {}", self.wind_speed),
            });
        }
        if !self.spreading_ref_km.is_finite() || self.spreading_ref_km <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "spreading_ref_km",
                reason: format!("must be finite and positive, got {}", self.spreading_ref_km),
            });
        }
        Ok(())
    }

    pub fn spreading_warning(&self) -> Option<String> {
        let k = self.spreading_factor;
        (!(1.0..=2.0).contains(&k)).then(|| {
            format!("spreading factor {k} is outside the usual range [1, 2]")
        })
    }
}

/// Thorp absorption in dB/km.
pub fn absorption_db_per_km(f: FrequencyKHz) -> f64 {
    absorption_raw(f.khz())
}

pub(crate) fn absorption_raw(f: f64) -> f64 {
    let f2 = f * f;
    if f >= LOW_FREQ_CROSSOVER_KHZ {
        0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003
    } else {
        0.11 * f2 / (1.0 + f2) + 0.011 * f2 + 0.002
    }
}

fn spreading_ln(l: f64, env: &EnvironmentParams) -> f64 {
    env.spreading_factor * (l / env.spreading_ref_km).ln()
}

/// `A(l, f) = (l / l_ref)^k · 10^(a_dB(f)·l/10)`.
pub fn path_loss_linear(l: DistanceKm, f: FrequencyKHz, env: &EnvironmentParams) -> f64 {
    path_loss_ln(l.km(), f.khz(), env).exp()
}

pub fn path_loss_db(l: DistanceKm, f: FrequencyKHz, env: &EnvironmentParams) -> f64 {
    path_loss_ln(l.km(), f.khz(), env) * 10.0 / std::f64::consts::LN_10
}

fn path_loss_ln(l: f64, f: f64, env: &EnvironmentParams) -> f64 {
    spreading_ln(l, env) + absorption_raw(f) * l * 0.1 * std::f64::consts::LN_10
}

/// The four ambient-noise contributions, each already in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseComponents {
    pub turbulence: PsdLinear,
    pub shipping: PsdLinear,
    pub wind: PsdLinear,
    pub thermal: PsdLinear,
}

impl NoiseComponents {
    pub fn total(&self) -> PsdLinear {
        self.turbulence + self.shipping + self.wind + self.thermal
    }
}

/// log10 of each noise component (turbulence, shipping, wind, thermal).
fn noise_log10(f: f64, env: &EnvironmentParams) -> [f64; 4] {
    let lf = f.log10();
    [
        1.7 - 3.0 * lf,
        4.0 + 2.0 * (env.shipping - 0.5) + 2.6 * lf - 6.0 * (f + 0.03).log10(),
        5.0 + 0.75 * env.wind_speed.sqrt() + 2.0 * lf - 4.0 * (f + 0.4).log10(),
        -1.5 + 2.0 * lf,
    ]
}

pub fn noise_components(f: FrequencyKHz, env: &EnvironmentParams) -> NoiseComponents {
    let [t, s, w, th] = noise_log10(f.khz(), env);
    NoiseComponents {
        turbulence: PsdLinear::from_exp10(t),
        shipping: PsdLinear::from_exp10(s),
        wind: PsdLinear::from_exp10(w),
        thermal: PsdLinear::from_exp10(th),
    }
}

/// Total ambient noise psd; components are summed in linear units.
pub fn noise_psd_linear(f: FrequencyKHz, env: &EnvironmentParams) -> PsdLinear {
    noise_components(f, env).total()
}

pub(crate) fn noise_ln(f: f64, env: &EnvironmentParams) -> f64 {
    let logs = noise_log10(f, env).map(|v| v * std::f64::consts::LN_10);
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logs.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `A(l, f)·N(f)`, the curve the waterfilling level is compared against.
pub fn an_product(l: DistanceKm, f: FrequencyKHz, env: &EnvironmentParams) -> f64 {
    ln_an_product(l, f, env).exp()
}

/// Natural log of [`an_product`]; finite wherever the product overflows.
pub fn ln_an_product(l: DistanceKm, f: FrequencyKHz, env: &EnvironmentParams) -> f64 {
    ln_an_raw(l.km(), f.khz(), env)
}

#[inline]
pub(crate) fn ln_an_raw(l: f64, f: f64, env: &EnvironmentParams) -> f64 {
    path_loss_ln(l, f, env) + noise_ln(f, env)
}

/// Log-spaced frequency grid used for the band search and `f0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub f_min_khz: f64,
    pub f_max_khz: f64,
    pub points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            f_min_khz: 0.01,
            f_max_khz: 1000.0,
            points: 2000,
        }
    }
}

impl FrequencyGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_min_khz.is_finite() && self.f_min_khz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "f_min_khz",
                reason: format!("must be finite and positive, got {}", self.f_min_khz),
            });
        }
        if !(self.f_max_khz.is_finite() && self.f_max_khz > self.f_min_khz) {
            return Err(Error::InvalidParameter {
                name: "f_max_khz",
                reason: format!("must exceed f_min_khz, got {}", self.f_max_khz),
            });
        }
        if self.points < 3 {
            return Err(Error::InvalidParameter {
                name: "points",
                reason: format!("need at least 3 grid points, got {}", self.points),
            });
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let (lo, hi) = (self.f_min_khz.ln(), self.f_max_khz.ln());
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    self.f_min_khz
                } else if i + 1 == n {
                    self.f_max_khz
                } else {
                    (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// Index of the grid minimum of `ln_values`; ties go to the lower index.
pub(crate) fn argmin_first(ln_values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in ln_values.iter().enumerate() {
        if v < ln_values[best] {
            best = i;
        }
    }
    best
}

/// Grid frequency minimising `A(l, f)·N(f)`.
pub fn optimal_frequency(
    l: DistanceKm,
    env: &EnvironmentParams,
    grid: &FrequencyGrid,
) -> FrequencyKHz {
    let nodes = grid.nodes();
    let ln: Vec<f64> = nodes.iter().map(|&f| ln_an_raw(l.km(), f, env)).collect();
    FrequencyKHz::new(nodes[argmin_first(&ln)]).expect("grid nodes are positive")
}
