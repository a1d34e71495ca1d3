//! Waterfilling over the colored channel.
//!
//! For a level `K` the band is the set of frequencies where `A(l,f)N(f) <= K`;
//! capacity and power are the integrals of `log2(K / AN)` and `K - AN` over
//! that band, with `f` in kHz so capacity comes out in kbit/s. Capacity is
//! strictly increasing in `K` once the band is nonempty, so the level that
//! meets a target capacity is found by a bracketed search on `ln K`.
//!
//! All internal comparisons use `ln(AN)`: at long range the absorption term
//! alone reaches thousands of dB at the top of the frequency grid.

use std::f64::consts::{LN_10, LN_2};

use serde::{Deserialize, Serialize};

use crate::channel::{argmin_first, ln_an_raw, EnvironmentParams, FrequencyGrid, LOW_FREQ_CROSSOVER_KHZ};
use crate::error::{Error, Result};
use crate::units::{DistanceKm, FrequencyKHz};

/// One distance / target-capacity pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkQuery {
    pub l: DistanceKm,
    pub c_target: f64,
}

impl LinkQuery {
    pub fn new(l_km: f64, c_kbps: f64) -> Result<Self> {
        let l = DistanceKm::new(l_km)?;
        if !c_kbps.is_finite() || c_kbps < 0.0 {
            return Err(Error::InvalidParameter {
                name: "c_target",
                reason: format!("capacity must be finite and >= 0, got {c_kbps}"),
            });
        }
        Ok(Self { l, c_target: c_kbps })
    }
}

/// Sorted, disjoint frequency intervals `[f_lo, f_hi]` in kHz.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransmissionBand {
    intervals: Vec<(FrequencyKHz, FrequencyKHz)>,
}

impl TransmissionBand {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates ordering and disjointness.
    pub fn from_intervals(intervals: Vec<(FrequencyKHz, FrequencyKHz)>) -> Result<Self> {
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if lo >= hi {
                return Err(Error::InvalidParameter {
                    name: "band",
                    reason: format!("interval {i} has f_lo >= f_hi"),
                });
            }
            if i > 0 && intervals[i - 1].1 >= lo {
                return Err(Error::InvalidParameter {
                    name: "band",
                    reason: format!("interval {i} overlaps or precedes interval {}", i - 1),
                });
            }
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[(FrequencyKHz, FrequencyKHz)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn f_ini(&self) -> Option<FrequencyKHz> {
        self.intervals.first().map(|iv| iv.0)
    }

    pub fn f_end(&self) -> Option<FrequencyKHz> {
        self.intervals.last().map(|iv| iv.1)
    }

    /// Sum of interval widths.
    pub fn occupied_khz(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b.khz() - a.khz()).sum()
    }

    /// `f_end - f_ini`, zero when empty.
    pub fn span_khz(&self) -> f64 {
        match (self.f_ini(), self.f_end()) {
            (Some(a), Some(b)) => b.khz() - a.khz(),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationRule {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SearchMode {
    /// Bracketed bisection on `ln K` with Newton acceleration.
    Bisection,
    /// Raise `K` by `step_db` until the target is met or passed. The result
    /// overshoots the target by at most one step.
    EpsilonIncrement { step_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub grid: FrequencyGrid,
    pub capacity_rel_tol: f64,
    pub capacity_abs_tol: f64,
    pub edge_rel_tol: f64,
    pub integration: IntegrationRule,
    /// Minimum number of integration panels per band interval.
    pub min_panels: usize,
    pub search: SearchMode,
    /// Cap on `K` above the minimum of `A·N`, in dB.
    pub k_cap_db: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            grid: FrequencyGrid::default(),
            capacity_rel_tol: 1e-10,
            capacity_abs_tol: 1e-12,
            edge_rel_tol: 1e-12,
            integration: IntegrationRule::Simpson,
            min_panels: 64,
            search: SearchMode::Bisection,
            k_cap_db: 300.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and positive, got {v}"),
                })
            }
        };
        positive("capacity_rel_tol", self.capacity_rel_tol)?;
        positive("capacity_abs_tol", self.capacity_abs_tol)?;
        positive("edge_rel_tol", self.edge_rel_tol)?;
        positive("k_cap_db", self.k_cap_db)?;
        if self.capacity_rel_tol > 1e-6 {
            return Err(Error::InvalidParameter {
                name: "capacity_rel_tol",
                reason: "must not exceed 1e-6".into(),
            });
        }
        if self.edge_rel_tol > 1e-6 {
            return Err(Error::InvalidParameter {
                name: "edge_rel_tol",
                reason: "must not exceed 1e-6".into(),
            });
        }
        if self.min_panels == 0 {
            return Err(Error::InvalidParameter {
                name: "min_panels",
                reason: "must be at least 1".into(),
            });
        }
        if let SearchMode::EpsilonIncrement { step_db } = self.search {
            positive("step_db", step_db)?;
        }
        Ok(())
    }
}

/// Result of one waterfilling solve.
///
/// With an empty band (zero target) `f_ini` and `f_end` both equal `f0` and
/// `power_db` is `-inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSolution {
    pub l_km: f64,
    pub c_target: f64,
    pub k_level: f64,
    pub k_db: f64,
    pub band: TransmissionBand,
    pub f_ini: FrequencyKHz,
    pub f_end: FrequencyKHz,
    pub bandwidth_khz: f64,
    pub occupied_bandwidth_khz: f64,
    pub power_linear: f64,
    pub power_db: f64,
    pub capacity_achieved: f64,
    pub f0: FrequencyKHz,
}

/// Reusable solver: the environment, settings and frequency grid.
#[derive(Debug, Clone)]
pub struct Solver {
    env: EnvironmentParams,
    settings: SolverSettings,
    nodes: Vec<f64>,
}

impl Solver {
    pub fn new(env: EnvironmentParams, settings: SolverSettings) -> Result<Self> {
        env.validate()?;
        settings.validate()?;
        Ok(Self {
            env,
            nodes: settings.grid.nodes(),
            settings,
        })
    }

    pub fn env(&self) -> &EnvironmentParams {
        &self.env
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// Precomputes `ln(A·N)` on the grid for one distance.
    pub fn curve(&self, l: DistanceKm) -> LinkCurve<'_> {
        let ln_an: Vec<f64> = self
            .nodes
            .iter()
            .map(|&f| ln_an_raw(l.km(), f, &self.env))
            .collect();
        let min_idx = argmin_first(&ln_an);
        LinkCurve {
            solver: self,
            l: l.km(),
            ln_an,
            min_idx,
        }
    }

    pub fn solve(&self, q: &LinkQuery) -> Result<LinkSolution> {
        self.curve(q.l).solve(q.c_target)
    }
}

/// `ln(A·N)` sampled on the frequency grid at a fixed distance.
#[derive(Debug, Clone)]
pub struct LinkCurve<'a> {
    solver: &'a Solver,
    l: f64,
    ln_an: Vec<f64>,
    min_idx: usize,
}

impl LinkCurve<'_> {
    fn nodes(&self) -> &[f64] {
        &self.solver.nodes
    }

    fn ln_at(&self, f: f64) -> f64 {
        ln_an_raw(self.l, f, &self.solver.env)
    }

    pub fn f0(&self) -> FrequencyKHz {
        FrequencyKHz::new(self.nodes()[self.min_idx]).expect("grid nodes are positive")
    }

    pub fn ln_min(&self) -> f64 {
        self.ln_an[self.min_idx]
    }

    /// Grid minimum of `A·N`.
    pub fn min_an(&self) -> f64 {
        self.ln_min().exp()
    }

    pub fn grid_ln_an(&self) -> &[f64] {
        &self.ln_an
    }

    /// Solves `ln(A·N)(f) = ln_k` between an outside point and an inside point.
    fn refine_edge(&self, outside: f64, inside: f64, ln_k: f64) -> f64 {
        let tol = self.solver.settings.edge_rel_tol;
        let (mut out, mut inn) = (outside, inside);
        for _ in 0..200 {
            if (out - inn).abs() <= tol * out.abs().max(inn.abs()) {
                break;
            }
            let mid = 0.5 * (out + inn);
            if self.ln_at(mid) <= ln_k {
                inn = mid;
            } else {
                out = mid;
            }
        }
        inn
    }

    pub fn band_for_ln_k(&self, ln_k: f64) -> TransmissionBand {
        let nodes = self.nodes();
        let n = nodes.len();
        let mut intervals = Vec::new();
        let mut i = 0;
        while i < n {
            if self.ln_an[i] > ln_k {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < n && self.ln_an[i + 1] <= ln_k {
                i += 1;
            }
            let end = i;
            let lo = if start == 0 {
                nodes[0]
            } else {
                self.refine_edge(nodes[start - 1], nodes[start], ln_k)
            };
            let hi = if end + 1 == n {
                nodes[n - 1]
            } else {
                self.refine_edge(nodes[end + 1], nodes[end], ln_k)
            };
            if hi > lo {
                intervals.push((
                    FrequencyKHz::new(lo).expect("positive"),
                    FrequencyKHz::new(hi).expect("positive"),
                ));
            }
            i += 1;
        }
        TransmissionBand { intervals }
    }

    pub fn band_for_k(&self, k_level: f64) -> TransmissionBand {
        self.band_for_ln_k(k_level.ln())
    }

    /// Integrates `g(ln(A·N)(f))` over every interval of `band`.
    fn integrate<G: Fn(f64) -> f64>(&self, band: &TransmissionBand, g: G) -> f64 {
        let settings = &self.solver.settings;
        let nodes = self.nodes();
        let mut total = 0.0;
        let mut breaks: Vec<f64> = Vec::new();
        for &(lo, hi) in band.intervals() {
            let (lo, hi) = (lo.khz(), hi.khz());
            breaks.clear();
            breaks.push(lo);
            let first = nodes.partition_point(|&x| x <= lo);
            let last = nodes.partition_point(|&x| x < hi);
            breaks.extend_from_slice(&nodes[first..last]);
            breaks.push(hi);
            // The absorption formula switches at the crossover with a small
            // jump; panels must not straddle it.
            let seam = LOW_FREQ_CROSSOVER_KHZ;
            if lo < seam && seam < hi {
                let at = breaks.partition_point(|&x| x < seam);
                breaks.retain(|&x| x != seam);
                breaks.splice(at..at, [seam.next_down(), seam]);
                breaks.dedup();
            }

            let panels = breaks.len() - 1;
            let split = settings.min_panels.div_ceil(panels).max(1);
            for w in breaks.windows(2) {
                let (a, b) = (w[0], w[1]);
                let h = (b - a) / split as f64;
                let mut left = g(self.ln_at(a));
                for j in 0..split {
                    let x1 = if j + 1 == split { b } else { a + h * (j + 1) as f64 };
                    let x0 = a + h * j as f64;
                    let right = g(self.ln_at(x1));
                    total += match settings.integration {
                        IntegrationRule::Trapezoid => 0.5 * (x1 - x0) * (left + right),
                        IntegrationRule::Simpson => {
                            let mid = g(self.ln_at(0.5 * (x0 + x1)));
                            (x1 - x0) / 6.0 * (left + 4.0 * mid + right)
                        }
                    };
                    left = right;
                }
            }
        }
        total
    }

    /// Capacity in kbit/s: integral of `log2(K / AN)` over `band`, clamped at 0.
    pub fn capacity_for_ln_k(&self, ln_k: f64, band: &TransmissionBand) -> f64 {
        self.integrate(band, |ln_an| ((ln_k - ln_an) / LN_2).max(0.0))
    }

    pub fn capacity_for_k(&self, k_level: f64, band: &TransmissionBand) -> f64 {
        self.capacity_for_ln_k(k_level.ln(), band)
    }

    /// Power: integral of `K - AN` over `band`, clamped at 0.
    pub fn power_for_ln_k(&self, ln_k: f64, band: &TransmissionBand) -> f64 {
        let k = ln_k.exp();
        self.integrate(band, |ln_an| k * (-(ln_an - ln_k).exp_m1()).max(0.0))
    }

    pub fn power_for_k(&self, k_level: f64, band: &TransmissionBand) -> f64 {
        self.power_for_ln_k(k_level.ln(), band)
    }

    fn capacity_at(&self, ln_k: f64) -> (f64, TransmissionBand) {
        let band = self.band_for_ln_k(ln_k);
        (self.capacity_for_ln_k(ln_k, &band), band)
    }

    /// Finds the waterfilling level whose capacity equals `c_target`.
    pub fn solve(&self, c_target: f64) -> Result<LinkSolution> {
        if !c_target.is_finite() || c_target < 0.0 {
            return Err(Error::InvalidParameter {
                name: "c_target",
                reason: format!("capacity must be finite and >= 0, got {c_target}"),
            });
        }
        let ln_min = self.ln_min();
        if c_target == 0.0 {
            return Ok(self.solution(c_target, ln_min, TransmissionBand::empty(), 0.0));
        }
        let settings = &self.solver.settings;
        let ln_cap = ln_min + settings.k_cap_db * 0.1 * LN_10;
        let tol = (settings.capacity_rel_tol * c_target).max(settings.capacity_abs_tol);

        let (ln_k, band, achieved) = match settings.search {
            SearchMode::Bisection => self.search_bracketed(c_target, ln_min, ln_cap, tol)?,
            SearchMode::EpsilonIncrement { step_db } => {
                self.search_increment(c_target, ln_min, ln_cap, step_db)?
            }
        };
        Ok(self.solution(c_target, ln_k, band, achieved))
    }

    fn unreachable(&self, c_target: f64, ln_cap: f64) -> Error {
        let (achieved, _) = self.capacity_at(ln_cap);
        Error::CapacityUnreachable {
            target: c_target,
            achieved,
            k_cap_db: self.solver.settings.k_cap_db,
        }
    }

    fn search_bracketed(
        &self,
        c_target: f64,
        ln_min: f64,
        ln_cap: f64,
        tol: f64,
    ) -> Result<(f64, TransmissionBand, f64)> {
        // Grow the upper bracket by doubling K.
        let mut lo = ln_min;
        let mut hi = ln_min;
        let (mut c_hi, mut band_hi) = (0.0, TransmissionBand::empty());
        while c_hi < c_target {
            lo = hi;
            hi = (hi + LN_2).min(ln_cap);
            (c_hi, band_hi) = self.capacity_at(hi);
            if c_hi < c_target && hi >= ln_cap {
                return Err(self.unreachable(c_target, ln_cap));
            }
        }

        let (mut x, mut c_x, mut band_x) = (hi, c_hi, band_hi);
        for _ in 0..200 {
            let err = c_x - c_target;
            if err.abs() <= tol {
                break;
            }
            if err > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
            // dC/d(ln K) = occupied bandwidth / ln 2.
            let slope = band_x.occupied_khz() / LN_2;
            let newton = x - err / slope;
            x = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            (c_x, band_x) = self.capacity_at(x);
        }
        Ok((x, band_x, c_x))
    }

    fn search_increment(
        &self,
        c_target: f64,
        ln_min: f64,
        ln_cap: f64,
        step_db: f64,
    ) -> Result<(f64, TransmissionBand, f64)> {
        let step = step_db * 0.1 * LN_10;
        let mut n: u64 = 0;
        loop {
            n += 1;
            let ln_k = ln_min + step * n as f64;
            if ln_k > ln_cap {
                return Err(self.unreachable(c_target, ln_cap));
            }
            let (c, band) = self.capacity_at(ln_k);
            if c >= c_target {
                return Ok((ln_k, band, c));
            }
        }
    }

    fn solution(&self, c_target: f64, ln_k: f64, band: TransmissionBand, achieved: f64) -> LinkSolution {
        let f0 = self.f0();
        let power = self.power_for_ln_k(ln_k, &band);
        LinkSolution {
            l_km: self.l,
            c_target,
            k_level: ln_k.exp(),
            k_db: ln_k * 10.0 / LN_10,
            f_ini: band.f_ini().unwrap_or(f0),
            f_end: band.f_end().unwrap_or(f0),
            bandwidth_khz: band.span_khz(),
            occupied_bandwidth_khz: band.occupied_khz(),
            band,
            power_linear: power,
            power_db: 10.0 * power.log10(),
            capacity_achieved: achieved,
            f0,
        }
    }
}

/// Band where `A(l,f)N(f) <= k_level`.
pub fn band_for_k(
    l: DistanceKm,
    k_level: f64,
    env: &EnvironmentParams,
    settings: &SolverSettings,
) -> Result<TransmissionBand> {
    Ok(Solver::new(*env, *settings)?.curve(l).band_for_k(k_level))
}

pub fn capacity_for_k(
    l: DistanceKm,
    k_level: f64,
    band: &TransmissionBand,
    env: &EnvironmentParams,
    settings: &SolverSettings,
) -> Result<f64> {
    Ok(Solver::new(*env, *settings)?.curve(l).capacity_for_k(k_level, band))
}

pub fn power_for_k(
    l: DistanceKm,
    k_level: f64,
    band: &TransmissionBand,
    env: &EnvironmentParams,
    settings: &SolverSettings,
) -> Result<f64> {
    Ok(Solver::new(*env, *settings)?.curve(l).power_for_k(k_level, band))
}

/// Solves one link with a throwaway [`Solver`].
pub fn solve_link(
    q: &LinkQuery,
    env: &EnvironmentParams,
    settings: &SolverSettings,
) -> Result<LinkSolution> {
    Solver::new(*env, *settings)?.solve(q)
}

/// Moves a solution computed with spreading factor `k_from` to `k_to`.
///
/// `A·N` changes by the frequency-independent factor `(l/l_ref)^(k_to-k_from)`,
/// so `K` and `P` scale by it and the band does not move.
pub fn rescale_spreading(
    sol: &LinkSolution,
    l: DistanceKm,
    k_from: f64,
    k_to: f64,
    spreading_ref: DistanceKm,
) -> LinkSolution {
    let ln_factor = (k_to - k_from) * (l.km() / spreading_ref.km()).ln();
    let db = ln_factor * 10.0 / LN_10;
    let factor = ln_factor.exp();
    LinkSolution {
        k_level: sol.k_level * factor,
        k_db: sol.k_db + db,
        power_linear: sol.power_linear * factor,
        power_db: sol.power_db + db,
        ..sol.clone()
    }
}
