//! Rectangular (distance, capacity) sweeps and their CSV form.
//!
//! Cells are solved in parallel, one distance per task, and collected in
//! row-major order (distance outer, capacity inner), so output does not
//! depend on scheduling.

use std::io::{BufRead, Write};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::EnvironmentParams;
use crate::config::content_hash;
use crate::error::{Error, Result};
use crate::solver::{LinkSolution, Solver, SolverSettings};
use crate::units::DistanceKm;

pub const SWEEP_SCHEMA: &str = "uwacap.sweep/1";
pub const SWEEP_COLUMNS: [&str; 8] = [
    "l_km", "C_kbps", "P_dB", "f_ini_kHz", "f_end_kHz", "B_kHz", "K_dB", "f0_kHz",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// One sweep axis: `points` values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Axis {
    /// Axis over `(0, max]` starting at 1% of `max`, since the fitted models
    /// take `log10` of both distance and capacity.
    pub fn open_from_zero(max: f64, points: usize) -> Self {
        Self {
            min: 0.01 * max,
            max,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min > 0.0) {
            return Err(Error::InvalidParameter {
                name: "axis",
                reason: format!("bounds must be finite and positive, got [{}, {}]", self.min, self.max),
            });
        }
        if self.points == 0 {
            return Err(Error::InvalidParameter {
                name: "axis",
                reason: "needs at least one point".into(),
            });
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        if self.max <= self.min {
            return Err(Error::InvalidParameter {
                name: "axis",
                reason: format!("max {} must exceed min {}", self.max, self.min),
            });
        }
        let n = self.points - 1;
        Ok((0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                if i == n {
                    self.max
                } else {
                    match self.spacing {
                        Spacing::Linear => self.min + (self.max - self.min) * t,
                        Spacing::Log => (self.min.ln() + (self.max / self.min).ln() * t).exp(),
                    }
                }
            })
            .collect())
    }
}

/// The two operating regions the closed-form models are fitted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CasePreset {
    /// Up to 10 km and 2 kbit/s.
    Case1,
    /// Up to 100 km and 100 kbit/s.
    Case2,
}

impl CasePreset {
    pub fn label(self) -> &'static str {
        match self {
            CasePreset::Case1 => "case1",
            CasePreset::Case2 => "case2",
        }
    }

    /// `(l_max_km, c_max_kbps)`.
    pub fn ranges(self) -> (f64, f64) {
        match self {
            CasePreset::Case1 => (10.0, 2.0),
            CasePreset::Case2 => (100.0, 100.0),
        }
    }

    pub fn axes(self, points: usize) -> (Axis, Axis) {
        let (l, c) = self.ranges();
        (Axis::open_from_zero(l, points), Axis::open_from_zero(c, points))
    }

    pub fn spec(self, env: EnvironmentParams, points: usize) -> Result<SweepSpec> {
        let (la, ca) = self.axes(points);
        SweepSpec::new(la.values()?, ca.values()?, env, self.label())
    }
}

impl std::str::FromStr for CasePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "case1" => Ok(CasePreset::Case1),
            "case2" => Ok(CasePreset::Case2),
            other => Err(Error::Config(format!("unknown case preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub l_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub env: EnvironmentParams,
    pub case_label: String,
}

impl SweepSpec {
    pub fn new(
        l_values: Vec<f64>,
        c_values: Vec<f64>,
        env: EnvironmentParams,
        case_label: impl Into<String>,
    ) -> Result<Self> {
        let spec = Self {
            l_values,
            c_values,
            env,
            case_label: case_label.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(name: &'static str, v: &[f64]) -> Result<()> {
            if v.is_empty() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "list is empty".into(),
                });
            }
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "values must be finite and positive".into(),
                });
            }
            if v.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "values must be strictly increasing".into(),
                });
            }
            Ok(())
        }
        check("l_values", &self.l_values)?;
        check("c_values", &self.c_values)?;
        self.env.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub settings: SolverSettings,
    /// Row-major: `cells[i_l * c_values.len() + i_c]`.
    pub cells: Vec<LinkSolution>,
    pub started_unix_s: u64,
    pub elapsed_s: f64,
}

impl SweepResult {
    pub fn cell(&self, i_l: usize, i_c: usize) -> &LinkSolution {
        &self.cells[i_l * self.spec.c_values.len() + i_c]
    }

    /// Hash of the spec and solver settings, recorded in CSV headers.
    pub fn config_hash(&self) -> String {
        content_hash(&(&self.spec, &self.settings))
    }
}

pub fn run_sweep(spec: &SweepSpec, settings: &SolverSettings) -> Result<SweepResult> {
    spec.validate()?;
    let solver = Solver::new(spec.env, *settings)?;
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();

    let rows: Vec<Result<Vec<LinkSolution>>> = spec
        .l_values
        .par_iter()
        .map(|&l_km| {
            let curve = solver.curve(DistanceKm::new(l_km)?);
            spec.c_values
                .iter()
                .map(|&c| {
                    curve.solve(c).map_err(|e| Error::SweepCell {
                        l_km,
                        c_kbps: c,
                        source: Box::new(e),
                    })
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::with_capacity(spec.l_values.len() * spec.c_values.len());
    for row in rows {
        cells.extend(row?);
    }
    Ok(SweepResult {
        spec: spec.clone(),
        settings: *settings,
        cells,
        started_unix_s,
        elapsed_s: clock.elapsed().as_secs_f64(),
    })
}

/// One flattened sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub l_km: f64,
    #[serde(rename = "C_kbps")]
    pub c_kbps: f64,
    #[serde(rename = "P_dB")]
    pub p_db: f64,
    #[serde(rename = "f_ini_kHz")]
    pub f_ini_khz: f64,
    #[serde(rename = "f_end_kHz")]
    pub f_end_khz: f64,
    #[serde(rename = "B_kHz")]
    pub b_khz: f64,
    #[serde(rename = "K_dB")]
    pub k_db: f64,
    #[serde(rename = "f0_kHz")]
    pub f0_khz: f64,
}

impl From<&LinkSolution> for SweepRow {
    fn from(s: &LinkSolution) -> Self {
        SweepRow {
            l_km: s.l_km,
            c_kbps: s.c_target,
            p_db: s.power_db,
            f_ini_khz: s.f_ini.khz(),
            f_end_khz: s.f_end.khz(),
            b_khz: s.bandwidth_khz,
            k_db: s.k_db,
            f0_khz: s.f0.khz(),
        }
    }
}

pub fn sweep_to_table(r: &SweepResult) -> Vec<SweepRow> {
    r.cells.iter().map(SweepRow::from).collect()
}

/// Provenance carried in the comment line at the top of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeta {
    pub case_label: String,
    pub env: EnvironmentParams,
    pub config_hash: String,
}

impl SweepMeta {
    pub fn of(r: &SweepResult) -> Self {
        Self {
            case_label: r.spec.case_label.clone(),
            env: r.spec.env,
            config_hash: r.config_hash(),
        }
    }

    fn comment_line(&self) -> String {
        format!(
            "# schema={} case={} k={} s={} w={} l_ref_km={} config={}",
            SWEEP_SCHEMA,
            self.case_label,
            self.env.spreading_factor,
            self.env.shipping,
            self.env.wind_speed,
            self.env.spreading_ref_km,
            self.config_hash
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| Error::Schema("sweep CSV must start with a `# schema=` line".into()))?;
        let mut schema = None;
        let mut case_label = None;
        let mut config_hash = None;
        let mut env = EnvironmentParams::default();
        for kv in body.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("malformed header field `{kv}`")))?;
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| Error::Schema(format!("header field `{k}` is not a number")))
            };
            match k {
                "schema" => schema = Some(v.to_string()),
                "case" => case_label = Some(v.to_string()),
                "config" => config_hash = Some(v.to_string()),
                "k" => env.spreading_factor = num()?,
                "s" => env.shipping = num()?,
                "w" => env.wind_speed = num()?,
                "l_ref_km" => env.spreading_ref_km = num()?,
                _ => return Err(Error::Schema(format!("unknown header field `{k}`"))),
            }
        }
        match schema.as_deref() {
            Some(SWEEP_SCHEMA) => {}
            Some(other) => return Err(Error::Schema(format!("unsupported schema `{other}`"))),
            None => return Err(Error::Schema("missing schema field".into())),
        }
        env.validate()
            .map_err(|e| Error::Schema(format!("header environment invalid: {e}")))?;
        Ok(Self {
            case_label: case_label.ok_or_else(|| Error::Schema("missing case field".into()))?,
            env,
            config_hash: config_hash.ok_or_else(|| Error::Schema("missing config field".into()))?,
        })
    }
}

/// 10 significant digits.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn write_sweep_csv<W: Write>(mut w: W, meta: &SweepMeta, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{}", meta.comment_line())?;
    writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
    for r in rows {
        let vals = [
            r.l_km, r.c_kbps, r.p_db, r.f_ini_khz, r.f_end_khz, r.b_khz, r.k_db, r.f0_khz,
        ];
        let line: Vec<String> = vals.iter().map(|&v| fmt_sig(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_sweep_csv<R: BufRead>(mut r: R) -> Result<(SweepMeta, Vec<SweepRow>)> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    let meta = SweepMeta::parse(first.trim_end())?;

    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    for col in SWEEP_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Schema(format!("missing column `{col}`")));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<SweepRow>().enumerate() {
        rows.push(rec.map_err(|e| Error::Schema(format!("row {}: {e}", i + 1)))?);
    }
    if rows.is_empty() {
        return Err(Error::Schema("sweep CSV has no rows".into()));
    }
    Ok((meta, rows))
}
