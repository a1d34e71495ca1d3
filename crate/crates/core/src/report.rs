//! Coefficient tables, plot data and the text report built from a set of
//! sweep CSVs.
//!
//! Every emitted CSV starts with a `# schema=… config=…` comment line; the
//! `config` value hashes the input sweeps' own hashes plus the fit options,
//! so a report can be traced back to the runs it came from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::config::content_hash;
use crate::error::{Error, Result};
use crate::fit::{
    fit_coefficient_model, fit_power_law, fit_wind_model, shipping_sensitivity_report,
    CoefficientModel, InterceptVariant, PowerLawFit, Quantity, ShippingReport, WindModel,
    POWER_COEFF_NAMES,
};
use crate::sweep::{fmt_sig, SweepMeta, SweepRow};

pub const TABLE_SCHEMA: &str = "uwacap.table/1";
pub const PLOT_SCHEMA: &str = "uwacap.plot/1";
pub const REPORT_SCHEMA: &str = "uwacap.report/1";

pub const ALPHA_HEADER: &str = "quantity,alpha1,alpha2,alpha3,alpha4,MSE";
pub const BETA_HEADER: &str = "quantity,beta1,beta2,beta3,MSE";

/// Power-law fits and coefficient models for all three quantities of one
/// sweep.
#[derive(Debug, Clone, Serialize)]
pub struct CaseFits {
    pub label: String,
    pub fits: Vec<PowerLawFit>,
    pub models: Vec<CoefficientModel>,
}

impl CaseFits {
    pub fn new(label: impl Into<String>, rows: &[SweepRow], variant: InterceptVariant) -> Result<Self> {
        let mut fits = Vec::new();
        let mut models = Vec::new();
        for q in Quantity::ALL {
            let f = fit_power_law(rows, q)?;
            models.push(fit_coefficient_model(&f, variant)?);
            fits.push(f);
        }
        Ok(Self {
            label: label.into(),
            fits,
            models,
        })
    }

    pub fn model(&self, q: Quantity) -> &CoefficientModel {
        self.models.iter().find(|m| m.quantity == q).expect("all quantities fitted")
    }

    pub fn fit(&self, q: Quantity) -> &PowerLawFit {
        self.fits.iter().find(|f| f.quantity == q).expect("all quantities fitted")
    }
}

fn row_name(q: Quantity) -> &'static str {
    match q {
        Quantity::Power => "P",
        Quantity::FEnd => "fend",
        Quantity::Bandwidth => "B",
    }
}

fn schema_line(schema: &str, what: &str, hash: &str) -> String {
    format!("# schema={schema} table={what} config={hash}\n")
}

/// α table (coefficients of `a2(C)`), one row per quantity.
pub fn alpha_table_csv(models: &[CoefficientModel], what: &str, hash: &str) -> String {
    let mut out = schema_line(TABLE_SCHEMA, what, hash);
    out.push_str(ALPHA_HEADER);
    out.push('\n');
    for m in models {
        let a = m.alpha_row();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row_name(m.quantity),
            fmt_sig(a[0]),
            fmt_sig(a[1]),
            fmt_sig(a[2]),
            fmt_sig(a[3]),
            fmt_sig(m.mse_a2)
        );
    }
    out
}

/// β table (coefficients of `a1(C)`), one row per quantity.
pub fn beta_table_csv(models: &[CoefficientModel], what: &str, hash: &str) -> String {
    let mut out = schema_line(TABLE_SCHEMA, what, hash);
    out.push_str(BETA_HEADER);
    out.push('\n');
    for m in models {
        let b = m.beta_row();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row_name(m.quantity),
            fmt_sig(b[0]),
            fmt_sig(b[1]),
            fmt_sig(b[2]),
            fmt_sig(m.mse_a1)
        );
    }
    out
}

/// Per-capacity `a1`, `a2` from the log-log fits next to the fitted curves.
pub fn plot_csv(fit: &PowerLawFit, model: &CoefficientModel, hash: &str) -> String {
    let mut out = format!(
        "# schema={PLOT_SCHEMA} quantity={} config={hash}\n",
        row_name(fit.quantity)
    );
    out.push_str("C_kbps,a1_fit,a1_model,a2_fit,a2_model\n");
    for p in &fit.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(p.c_kbps),
            fmt_sig(p.a1),
            fmt_sig(model.a1(p.c_kbps)),
            fmt_sig(p.a2),
            fmt_sig(model.a2(p.c_kbps))
        );
    }
    out
}

/// Power coefficients by wind speed and shipping activity.
#[derive(Debug, Clone, Serialize)]
pub struct WindShippingEntry {
    pub wind_speed: f64,
    pub shipping: f64,
    pub model: CoefficientModel,
}

pub fn wind_shipping_csv(entries: &[WindShippingEntry], hash: &str) -> String {
    let mut out = schema_line(TABLE_SCHEMA, "wind_shipping", hash);
    out.push_str("w,s,alpha1,alpha2,alpha3,beta1,beta2,beta3\n");
    for e in entries {
        let a = &e.model.a2_coeffs;
        let b = &e.model.a1_coeffs;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            e.wind_speed,
            e.shipping,
            fmt_sig(a[0]),
            fmt_sig(a[1]),
            fmt_sig(a[2]),
            fmt_sig(b[0]),
            fmt_sig(b[1]),
            fmt_sig(b[2])
        );
    }
    out
}

pub fn wind_model_csv(model: Option<&WindModel>, hash: &str) -> String {
    let mut out = schema_line(TABLE_SCHEMA, "wind_model", hash);
    out.push_str("coefficient,gamma1,gamma2,gamma3,MSE\n");
    if let Some(m) = model {
        for (i, name) in POWER_COEFF_NAMES.iter().enumerate() {
            let g = m.gammas[i];
            let _ = writeln!(
                out,
                "{name},{},{},{},{}",
                fmt_sig(g[0]),
                fmt_sig(g[1]),
                fmt_sig(g[2]),
                fmt_sig(m.mse[i])
            );
        }
    }
    out
}

/// Output files keyed by name, plus the combined configuration hash.
#[derive(Debug, Clone)]
pub struct Report {
    pub config_hash: String,
    pub files: BTreeMap<String, String>,
    pub case1: CaseFits,
    pub case2: Option<CaseFits>,
    pub wind_shipping: Vec<WindShippingEntry>,
    pub wind_model: Option<WindModel>,
    pub shipping: Vec<(f64, ShippingReport)>,
}

impl Report {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

pub const TABLE_FILES: [&str; 6] = [
    "table1_alpha_case1.csv",
    "table2_beta_case1.csv",
    "table3_alpha_case2.csv",
    "table4_beta_case2.csv",
    "table5_wind_shipping.csv",
    "table6_wind_model.csv",
];

fn is_baseline(m: &SweepMeta) -> bool {
    m.env.shipping == 0.5 && m.env.wind_speed == 0.0
}

fn fmt_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:>13.5e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn text_case(out: &mut String, title: &str, fits: &CaseFits) {
    let _ = writeln!(out, "{title}: a2(C) coefficients");
    let _ = writeln!(
        out,
        "{:<6} {:>13} {:>13} {:>13} {:>13} {:>13}",
        "", "alpha1", "alpha2", "alpha3", "alpha4", "MSE"
    );
    for m in &fits.models {
        let a = m.alpha_row();
        let _ = writeln!(
            out,
            "{:<6} {}",
            row_name(m.quantity),
            fmt_row(&[a[0], a[1], a[2], a[3], m.mse_a2])
        );
    }
    let _ = writeln!(out, "\n{title}: a1(C) coefficients");
    let _ = writeln!(
        out,
        "{:<6} {:>13} {:>13} {:>13} {:>13}",
        "", "beta1", "beta2", "beta3", "MSE"
    );
    for m in &fits.models {
        let b = m.beta_row();
        let _ = writeln!(
            out,
            "{:<6} {}",
            row_name(m.quantity),
            fmt_row(&[b[0], b[1], b[2], m.mse_a1])
        );
    }
    out.push('\n');
}

/// Builds all tables, plot data and the text report.
///
/// Needs a `case1` sweep at `s = 0.5, w = 0`. A `case2` baseline, the
/// wind/shipping grid and the wind model are filled in when the inputs
/// contain them; otherwise their files carry only a header.
pub fn build_report(
    sweeps: &[(SweepMeta, Vec<SweepRow>)],
    variant: InterceptVariant,
) -> Result<Report> {
    let mut hashes: Vec<&str> = sweeps.iter().map(|(m, _)| m.config_hash.as_str()).collect();
    hashes.sort_unstable();
    let config_hash = content_hash(&(REPORT_SCHEMA, &hashes, variant));

    let base1 = sweeps
        .iter()
        .find(|(m, _)| m.case_label == "case1" && is_baseline(m))
        .ok_or_else(|| Error::Schema("no case1 sweep at s = 0.5, w = 0 among the inputs".into()))?;
    let k = base1.0.env.spreading_factor;
    let case1 = CaseFits::new("case1", &base1.1, variant)?;
    let case2 = sweeps
        .iter()
        .find(|(m, _)| m.case_label == "case2" && is_baseline(m) && m.env.spreading_factor == k)
        .map(|(_, rows)| CaseFits::new("case2", rows, variant))
        .transpose()?;

    // Wind / shipping grid: all case1 sweeps with the same spreading setup.
    let mut wind_shipping = Vec::new();
    for (m, rows) in sweeps.iter().filter(|(m, _)| {
        m.case_label == "case1"
            && m.env.spreading_factor == k
            && m.env.spreading_ref_km == base1.0.env.spreading_ref_km
    }) {
        let f = fit_power_law(rows, Quantity::Power)?;
        wind_shipping.push(WindShippingEntry {
            wind_speed: m.env.wind_speed,
            shipping: m.env.shipping,
            model: fit_coefficient_model(&f, variant)?,
        });
    }
    wind_shipping.sort_by(|a, b| {
        a.wind_speed
            .total_cmp(&b.wind_speed)
            .then(a.shipping.total_cmp(&b.shipping))
    });
    wind_shipping.dedup_by(|a, b| a.wind_speed == b.wind_speed && a.shipping == b.shipping);

    let at_half: Vec<(f64, CoefficientModel)> = wind_shipping
        .iter()
        .filter(|e| e.shipping == 0.5)
        .map(|e| (e.wind_speed, e.model.clone()))
        .collect();
    let wind_model = if at_half.len() >= 4 {
        Some(fit_wind_model(&at_half)?)
    } else {
        None
    };
    let across_wind: Vec<CoefficientModel> = at_half.iter().map(|(_, m)| m.clone()).collect();

    let mut shipping = Vec::new();
    let mut winds: Vec<f64> = wind_shipping.iter().map(|e| e.wind_speed).collect();
    winds.dedup();
    for w in winds {
        let by_s: Vec<(f64, CoefficientModel)> = wind_shipping
            .iter()
            .filter(|e| e.wind_speed == w)
            .map(|e| (e.shipping, e.model.clone()))
            .collect();
        if by_s.len() >= 2 {
            shipping.push((w, shipping_sensitivity_report(&by_s, &across_wind)?));
        }
    }

    let mut files = BTreeMap::new();
    let h = &config_hash;
    files.insert(TABLE_FILES[0].into(), alpha_table_csv(&case1.models, "alpha_case1", h));
    files.insert(TABLE_FILES[1].into(), beta_table_csv(&case1.models, "beta_case1", h));
    let empty: Vec<CoefficientModel> = Vec::new();
    let c2 = case2.as_ref().map(|c| &c.models).unwrap_or(&empty);
    files.insert(TABLE_FILES[2].into(), alpha_table_csv(c2, "alpha_case2", h));
    files.insert(TABLE_FILES[3].into(), beta_table_csv(c2, "beta_case2", h));
    files.insert(TABLE_FILES[4].into(), wind_shipping_csv(&wind_shipping, h));
    files.insert(TABLE_FILES[5].into(), wind_model_csv(wind_model.as_ref(), h));
    for cf in std::iter::once(&case1).chain(case2.as_ref()) {
        for q in Quantity::ALL {
            files.insert(
                format!("plot_{}_{}.csv", cf.label, row_name(q)),
                plot_csv(cf.fit(q), cf.model(q), h),
            );
        }
    }

    let mut text = format!("# schema={REPORT_SCHEMA} config={config_hash}\n\n");
    let env = base1.0.env;
    let _ = writeln!(
        text,
        "k = {}, spreading reference = {} km, intercept basis = {:?}\n",
        env.spreading_factor, env.spreading_ref_km, variant
    );
    text_case(&mut text, "case1 (l <= 10 km, C <= 2 kbit/s, s = 0.5, w = 0)", &case1);
    if let Some(c2) = &case2 {
        text_case(&mut text, "case2 (l <= 100 km, C <= 100 kbit/s, s = 0.5, w = 0)", c2);
    } else {
        text.push_str("case2: no input sweep\n\n");
    }
    if !wind_shipping.is_empty() {
        let _ = writeln!(text, "power coefficients by wind speed and shipping activity (case1)");
        let _ = writeln!(
            text,
            "{:>5} {:>5} {:>13} {:>13} {:>13} {:>13} {:>13} {:>13}",
            "w", "s", "alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta3"
        );
        for e in &wind_shipping {
            let a = &e.model.a2_coeffs;
            let b = &e.model.a1_coeffs;
            let _ = writeln!(
                text,
                "{:>5} {:>5} {}",
                e.wind_speed,
                e.shipping,
                fmt_row(&[a[0], a[1], a[2], b[0], b[1], b[2]])
            );
        }
        text.push('\n');
    }
    match &wind_model {
        Some(m) => {
            let _ = writeln!(text, "wind model psi(w) = g1 u^2 + g2 u + g3, u = 10log10(w+1)");
            let _ = writeln!(text, "{:<8} {:>13} {:>13} {:>13} {:>13}", "", "gamma1", "gamma2", "gamma3", "MSE");
            for (i, name) in POWER_COEFF_NAMES.iter().enumerate() {
                let g = m.gammas[i];
                let _ = writeln!(text, "{name:<8} {}", fmt_row(&[g[0], g[1], g[2], m.mse[i]]));
            }
            text.push('\n');
        }
        None => text.push_str("wind model: fewer than 4 wind speeds at s = 0.5\n\n"),
    }
    for (w, r) in &shipping {
        let _ = writeln!(
            text,
            "shipping sensitivity at w = {w}: max relative spread {:.3e}, all small: {}",
            r.max_relative(),
            r.all_small()
        );
    }
    files.insert("report.txt".into(), text);

    let manifest = serde_json::json!({
        "schema": REPORT_SCHEMA,
        "config_hash": config_hash,
        "inputs": sweeps.iter().map(|(m, rows)| serde_json::json!({
            "case": m.case_label,
            "k": m.env.spreading_factor,
            "s": m.env.shipping,
            "w": m.env.wind_speed,
            "l_ref_km": m.env.spreading_ref_km,
            "config_hash": m.config_hash,
            "rows": rows.len(),
        })).collect::<Vec<_>>(),
        "files": files.keys().cloned().chain(std::iter::once("manifest.json".to_string())).collect::<Vec<_>>(),
    });
    files.insert(
        "manifest.json".into(),
        serde_json::to_string_pretty(&manifest).expect("json") + "\n",
    );

    Ok(Report {
        config_hash,
        files,
        case1,
        case2,
        wind_shipping,
        wind_model,
        shipping,
    })
}

/// Reads every sweep CSV (files whose first line carries the sweep schema)
/// in `dir`, in file-name order.
pub fn read_sweep_dir(dir: &Path) -> Result<Vec<(SweepMeta, Vec<SweepRow>)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        let is_sweep = text
            .lines()
            .next()
            .is_some_and(|l| l.contains(&format!("schema={}", crate::sweep::SWEEP_SCHEMA)));
        if is_sweep {
            let parsed = crate::sweep::read_sweep_csv(text.as_bytes())
                .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
            out.push(parsed);
        }
    }
    if out.is_empty() {
        return Err(Error::Schema(format!("no sweep CSVs in {}", dir.display())));
    }
    Ok(out)
}
