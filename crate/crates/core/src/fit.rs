//! Closed-form surrogate models fitted to sweep tables.
//!
//! Each quantity `Q` (power, band-edge frequency, bandwidth) is modelled as
//!
//! ```text
//! Q(l, C) = 10^(a1(C)/10) · l^a2(C)
//! ```
//!
//! First, for each capacity `C`, `10·log10 Q` is regressed on `10·log10 l`,
//! giving the intercept `a1(C)` and slope `a2(C)`. Then `a1` and `a2` are
//! fitted as functions of `C` on quantity-specific bases ([`Basis`]).
//! Coefficients are stored highest order first, matching the published
//! tables: `α1, α2, …` for `a2(C)` and `β1, β2, β3` for `a1(C)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::SweepRow;

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Regressor sets. Columns are listed highest order first, constant last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `{(10log10(C+1))², 10log10 C, 1}`, the power intercept as printed.
    PowerIntercept,
    /// `{(10log10(C+1))², 10log10(C+1), 1}`.
    PowerInterceptShifted,
    /// `{C², C, 1}`.
    PowerExponent,
    /// `{x², x, 1}` with `x = 10log10 C`.
    LogQuadratic,
    /// `{x³, x², x, 1}` with `x = 10log10 C`.
    LogCubic,
    /// `{u², u, 1}` with `u = 10log10(w+1)`.
    Wind,
}

impl Basis {
    pub const ALL: [Basis; 6] = [
        Basis::PowerIntercept,
        Basis::PowerInterceptShifted,
        Basis::PowerExponent,
        Basis::LogQuadratic,
        Basis::LogCubic,
        Basis::Wind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Basis::PowerIntercept => "power_intercept",
            Basis::PowerInterceptShifted => "power_intercept_shifted",
            Basis::PowerExponent => "power_exponent",
            Basis::LogQuadratic => "log_quadratic",
            Basis::LogCubic => "log_cubic",
            Basis::Wind => "wind",
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            Basis::LogCubic => 4,
            _ => 3,
        }
    }

    /// Whether the basis needs `x > 0` (it takes `log10 x`).
    fn needs_positive(self) -> bool {
        matches!(
            self,
            Basis::PowerIntercept | Basis::LogQuadratic | Basis::LogCubic
        )
    }

    pub fn regressors(self, x: f64) -> Vec<f64> {
        match self {
            Basis::PowerIntercept => {
                let s = db(x + 1.0);
                vec![s * s, db(x), 1.0]
            }
            Basis::PowerInterceptShifted => {
                let s = db(x + 1.0);
                vec![s * s, s, 1.0]
            }
            Basis::PowerExponent => vec![x * x, x, 1.0],
            Basis::LogQuadratic => {
                let u = db(x);
                vec![u * u, u, 1.0]
            }
            Basis::LogCubic => {
                let u = db(x);
                vec![u * u * u, u * u, u, 1.0]
            }
            Basis::Wind => {
                let u = db(x + 1.0);
                vec![u * u, u, 1.0]
            }
        }
    }

    pub fn eval(self, coeffs: &[f64], x: f64) -> f64 {
        self.regressors(x)
            .iter()
            .zip(coeffs)
            .map(|(r, c)| r * c)
            .sum()
    }
}

/// Coefficients and mean squared residual of an ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub basis: Basis,
    pub coeffs: Vec<f64>,
    pub mse: f64,
}

/// Unweighted least squares of `ys` on `basis(xs)` via SVD of the
/// column-scaled design matrix.
pub fn ols(basis: Basis, xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let rank_err = || Error::RankDeficient {
        basis: basis.name().to_string(),
    };
    if xs.len() != ys.len() {
        return Err(Error::Degenerate {
            what: basis.name().into(),
            reason: format!("{} inputs but {} targets", xs.len(), ys.len()),
        });
    }
    let m = basis.len();
    if xs.len() < m {
        return Err(rank_err());
    }
    if basis.needs_positive() && xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Degenerate {
            what: basis.name().into(),
            reason: "inputs must be positive".into(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate {
            what: basis.name().into(),
            reason: "non-finite input".into(),
        });
    }

    let mut design = DMatrix::<f64>::zeros(xs.len(), m);
    for (i, &x) in xs.iter().enumerate() {
        for (j, r) in basis.regressors(x).into_iter().enumerate() {
            design[(i, j)] = r;
        }
    }
    let scales: Vec<f64> = (0..m).map(|j| design.column(j).norm()).collect();
    if scales.contains(&0.0) {
        return Err(rank_err());
    }
    for (j, &s) in scales.iter().enumerate() {
        design.column_mut(j).scale_mut(1.0 / s);
    }

    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > smax * 1e-12) {
        return Err(rank_err());
    }
    let y = DVector::from_column_slice(ys);
    let scaled = svd.solve(&y, 0.0).map_err(|_| rank_err())?;
    let coeffs: Vec<f64> = scaled.iter().zip(&scales).map(|(c, s)| c / s).collect();

    let mse = mean_squared_residual(basis, &coeffs, xs, ys);
    Ok(LinearFit { basis, coeffs, mse })
}

pub fn mean_squared_residual(basis: Basis, coeffs: &[f64], xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (basis.eval(coeffs, x) - y).powi(2))
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "P")]
    Power,
    #[serde(rename = "fend")]
    FEnd,
    #[serde(rename = "B")]
    Bandwidth,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Power, Quantity::FEnd, Quantity::Bandwidth];

    pub fn label(self) -> &'static str {
        match self {
            Quantity::Power => "P",
            Quantity::FEnd => "fend",
            Quantity::Bandwidth => "B",
        }
    }

    /// `10·log10` of the quantity in a sweep row.
    pub fn value_db(self, row: &SweepRow) -> f64 {
        match self {
            Quantity::Power => row.p_db,
            Quantity::FEnd => db(row.f_end_khz),
            Quantity::Bandwidth => db(row.b_khz),
        }
    }

    /// `(a1 basis, a2 basis)`.
    pub fn bases(self, variant: InterceptVariant) -> (Basis, Basis) {
        match self {
            Quantity::Power => (
                match variant {
                    InterceptVariant::AsPrinted => Basis::PowerIntercept,
                    InterceptVariant::Shifted => Basis::PowerInterceptShifted,
                },
                Basis::PowerExponent,
            ),
            Quantity::FEnd => (Basis::LogQuadratic, Basis::LogQuadratic),
            Quantity::Bandwidth => (Basis::LogQuadratic, Basis::LogCubic),
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" | "power" => Ok(Quantity::Power),
            "fend" | "f_end" => Ok(Quantity::FEnd),
            "B" | "b" | "bandwidth" => Ok(Quantity::Bandwidth),
            other => Err(Error::Config(format!("unknown quantity `{other}`"))),
        }
    }
}

/// Which regressor the linear term of the power intercept uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterceptVariant {
    /// `10log10 C` in the linear term, `10log10(C+1)` in the square.
    #[default]
    AsPrinted,
    /// `10log10(C+1)` in both terms.
    Shifted,
}

/// Per-capacity log-log fit `10log10 Q = a1 + a2 · 10log10 l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawPoint {
    pub c_kbps: f64,
    pub a1: f64,
    pub a2: f64,
    pub mse: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub quantity: Quantity,
    pub points: Vec<PowerLawPoint>,
}

impl PowerLawFit {
    pub fn c_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.c_kbps).collect()
    }

    pub fn a1(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.a1).collect()
    }

    pub fn a2(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.a2).collect()
    }
}

/// Fits `y = a1 + a2·x` for `(x, y)` pairs.
fn simple_regression(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-12 * n) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mse = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (intercept + slope * x - y).powi(2))
        .sum::<f64>()
        / n;
    Some((intercept, slope, mse))
}

/// One log-log regression per distinct capacity in `rows`.
pub fn fit_power_law(rows: &[SweepRow], quantity: Quantity) -> Result<PowerLawFit> {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.c_kbps.total_cmp(&b.c_kbps).then(a.l_km.total_cmp(&b.l_km)));

    let mut points = Vec::new();
    for group in sorted.chunk_by(|a, b| a.c_kbps == b.c_kbps) {
        let c = group[0].c_kbps;
        let mut xs = Vec::with_capacity(group.len());
        let mut ys = Vec::with_capacity(group.len());
        for r in group {
            let y = quantity.value_db(r);
            if !(r.l_km > 0.0) || !y.is_finite() {
                return Err(Error::Degenerate {
                    what: format!("{} power law at C = {c}", quantity.label()),
                    reason: format!("non-finite value at l = {}", r.l_km),
                });
            }
            xs.push(db(r.l_km));
            ys.push(y);
        }
        let mut distinct = xs.clone();
        distinct.dedup();
        if distinct.len() < 3 {
            return Err(Error::Degenerate {
                what: format!("{} power law at C = {c}", quantity.label()),
                reason: format!("need at least 3 distinct distances, got {}", distinct.len()),
            });
        }
        let (a1, a2, mse) = simple_regression(&xs, &ys).ok_or_else(|| Error::Degenerate {
            what: format!("{} power law at C = {c}", quantity.label()),
            reason: "zero variance in 10log10 l".into(),
        })?;
        points.push(PowerLawPoint {
            c_kbps: c,
            a1,
            a2,
            mse,
            samples: group.len(),
        });
    }
    if points.is_empty() {
        return Err(Error::Degenerate {
            what: format!("{} power law", quantity.label()),
            reason: "no rows".into(),
        });
    }
    Ok(PowerLawFit { quantity, points })
}

/// Fitted `a1(C)` (β coefficients) and `a2(C)` (α coefficients) for one
/// quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub quantity: Quantity,
    pub a1_basis: Basis,
    pub a2_basis: Basis,
    /// β1, β2, β3.
    pub a1_coeffs: Vec<f64>,
    /// α1, α2, … (three or four).
    pub a2_coeffs: Vec<f64>,
    pub mse_a1: f64,
    pub mse_a2: f64,
}

impl CoefficientModel {
    pub fn a1(&self, c_kbps: f64) -> f64 {
        self.a1_basis.eval(&self.a1_coeffs, c_kbps)
    }

    pub fn a2(&self, c_kbps: f64) -> f64 {
        self.a2_basis.eval(&self.a2_coeffs, c_kbps)
    }

    /// Constant term of `a2(C)`: the distance exponent as `C → 0` for the
    /// power model.
    pub fn a2_constant(&self) -> f64 {
        *self.a2_coeffs.last().expect("bases are nonempty")
    }

    /// Constant term of `a1(C)`, in dB.
    pub fn a1_constant(&self) -> f64 {
        *self.a1_coeffs.last().expect("bases are nonempty")
    }

    /// α row in table layout: four columns, left-padded with zeros.
    pub fn alpha_row(&self) -> [f64; 4] {
        let mut row = [0.0; 4];
        let off = 4 - self.a2_coeffs.len();
        row[off..].copy_from_slice(&self.a2_coeffs);
        row
    }

    /// β row in table layout.
    pub fn beta_row(&self) -> [f64; 3] {
        let mut row = [0.0; 3];
        row.copy_from_slice(&self.a1_coeffs[..3]);
        row
    }

    /// Multiplies the surrogate by `(l/l_ref)^(k_to - k_from)`; only
    /// meaningful for the power model.
    pub fn eval_rescaled(&self, l_km: f64, c_kbps: f64, k_from: f64, k_to: f64, l_ref_km: f64) -> Result<f64> {
        Ok(model_eval(self, l_km, c_kbps)? * (l_km / l_ref_km).powf(k_to - k_from))
    }
}

/// Fits `a1(C)` and `a2(C)` onto the quantity's bases.
pub fn fit_coefficient_model(fits: &PowerLawFit, variant: InterceptVariant) -> Result<CoefficientModel> {
    let (b1, b2) = fits.quantity.bases(variant);
    let cs = fits.c_values();
    let needed = b1.len().max(b2.len()) + 1;
    if cs.len() < needed {
        return Err(Error::Degenerate {
            what: format!("{} coefficient model", fits.quantity.label()),
            reason: format!("need at least {needed} capacities, got {}", cs.len()),
        });
    }
    let f1 = ols(b1, &cs, &fits.a1())?;
    let f2 = ols(b2, &cs, &fits.a2())?;
    Ok(CoefficientModel {
        quantity: fits.quantity,
        a1_basis: b1,
        a2_basis: b2,
        a1_coeffs: f1.coeffs,
        a2_coeffs: f2.coeffs,
        mse_a1: f1.mse,
        mse_a2: f2.mse,
    })
}

/// `10^(a1(C)/10) · l^a2(C)`.
pub fn model_eval(model: &CoefficientModel, l_km: f64, c_kbps: f64) -> Result<f64> {
    if !(l_km.is_finite() && l_km > 0.0) {
        return Err(Error::Domain {
            name: "distance (km)",
            value: l_km,
        });
    }
    if !(c_kbps.is_finite() && c_kbps > 0.0) {
        return Err(Error::Domain {
            name: "capacity (kbit/s)",
            value: c_kbps,
        });
    }
    Ok(10f64.powf(model.a1(c_kbps) / 10.0) * l_km.powf(model.a2(c_kbps)))
}

pub const POWER_COEFF_NAMES: [&str; 6] = ["alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3"];

/// The six power-model coefficients in `(α1, α2, α3, β1, β2, β3)` order.
fn power_coeffs(m: &CoefficientModel) -> Result<[f64; 6]> {
    if m.quantity != Quantity::Power || m.a2_coeffs.len() != 3 || m.a1_coeffs.len() != 3 {
        return Err(Error::Degenerate {
            what: "wind/shipping analysis".into(),
            reason: "expects three-term power models".into(),
        });
    }
    Ok([
        m.a2_coeffs[0],
        m.a2_coeffs[1],
        m.a2_coeffs[2],
        m.a1_coeffs[0],
        m.a1_coeffs[1],
        m.a1_coeffs[2],
    ])
}

/// `ψ(w) = γ1 (10log10(w+1))² + γ2 10log10(w+1) + γ3` for each power
/// coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindModel {
    pub wind_speeds: Vec<f64>,
    /// Indexed like [`POWER_COEFF_NAMES`]; each entry is `[γ1, γ2, γ3]`.
    pub gammas: Vec<[f64; 3]>,
    pub mse: Vec<f64>,
}

impl WindModel {
    pub fn psi(&self, coeff: usize, wind_speed: f64) -> f64 {
        Basis::Wind.eval(&self.gammas[coeff], wind_speed)
    }
}

pub fn fit_wind_model(models: &[(f64, CoefficientModel)]) -> Result<WindModel> {
    let mut ws: Vec<f64> = models.iter().map(|(w, _)| *w).collect();
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    if ws.len() < 4 {
        return Err(Error::Degenerate {
            what: "wind model".into(),
            reason: format!("need at least 4 wind speeds, got {}", ws.len()),
        });
    }
    let xs: Vec<f64> = models.iter().map(|(w, _)| *w).collect();
    let coeffs = models
        .iter()
        .map(|(_, m)| power_coeffs(m))
        .collect::<Result<Vec<_>>>()?;
    let mut gammas = Vec::with_capacity(6);
    let mut mse = Vec::with_capacity(6);
    for i in 0..6 {
        let ys: Vec<f64> = coeffs.iter().map(|c| c[i]).collect();
        let f = ols(Basis::Wind, &xs, &ys)?;
        gammas.push([f.coeffs[0], f.coeffs[1], f.coeffs[2]]);
        mse.push(f.mse);
    }
    let mut wind_speeds = xs;
    wind_speeds.sort_by(f64::total_cmp);
    Ok(WindModel {
        wind_speeds,
        gammas,
        mse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSpread {
    pub name: &'static str,
    pub values: Vec<f64>,
    /// `max - min` across shipping levels.
    pub spread: f64,
    /// `spread / |mean|`.
    pub relative: f64,
    /// `max - min` of the same coefficient across wind speeds, when given.
    pub wind_spread: Option<f64>,
    pub small: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShippingReport {
    pub shipping: Vec<f64>,
    pub coefficients: Vec<CoefficientSpread>,
}

impl ShippingReport {
    pub fn all_small(&self) -> bool {
        self.coefficients.iter().all(|c| c.small)
    }

    pub fn max_relative(&self) -> f64 {
        self.coefficients.iter().map(|c| c.relative).fold(0.0, f64::max)
    }
}

/// How much each power coefficient moves across shipping levels.
///
/// A coefficient is flagged `small` when its shipping spread is under a
/// tenth of its wind spread, or under 1% relative when no wind models are
/// supplied.
pub fn shipping_sensitivity_report(
    by_shipping: &[(f64, CoefficientModel)],
    across_wind: &[CoefficientModel],
) -> Result<ShippingReport> {
    let coeffs = by_shipping
        .iter()
        .map(|(_, m)| power_coeffs(m))
        .collect::<Result<Vec<_>>>()?;
    let wind = across_wind
        .iter()
        .map(power_coeffs)
        .collect::<Result<Vec<_>>>()?;
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if hi >= lo { hi - lo } else { 0.0 }
    };
    let coefficients = (0..6)
        .map(|i| {
            let values: Vec<f64> = coeffs.iter().map(|c| c[i]).collect();
            let spread = range(&mut values.iter().copied());
            let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
            let relative = if mean != 0.0 { spread / mean.abs() } else if spread == 0.0 { 0.0 } else { f64::INFINITY };
            let wind_spread = (wind.len() >= 2).then(|| range(&mut wind.iter().map(|c| c[i])));
            let small = match wind_spread {
                Some(ws) => spread <= 0.1 * ws,
                None => relative < 0.01,
            };
            CoefficientSpread {
                name: POWER_COEFF_NAMES[i],
                values,
                spread,
                relative,
                wind_spread,
                small,
            }
        })
        .collect();
    Ok(ShippingReport {
        shipping: by_shipping.iter().map(|(s, _)| *s).collect(),
        coefficients,
    })
}
