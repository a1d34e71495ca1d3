//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwacap::fit::{ols, shipping_sensitivity_report, Basis};
use uwacap::report::CaseFits;
use uwacap::solver::rescale_spreading;
use uwacap::sweep::{sweep_to_table, SweepRow};
use uwacap::{
    run_sweep, CasePreset, CoefficientModel, DistanceKm, EnvironmentParams, InterceptVariant,
    LinkQuery, Quantity, Solver, SolverSettings,
};

use common::{oracle_capacity, oracle_flat_capacity};

const K: f64 = 1.5;
const POINTS: usize = 40;
/// Distances for the table-matching sweeps are referenced to one metre.
const TABLE_L_REF_KM: f64 = 0.001;
const WINDS: [f64; 5] = [0.0, 2.0, 5.0, 10.0, 20.0];
const SHIPPING: [f64; 3] = [0.0, 0.5, 1.0];

type Check = Box<dyn FnOnce(&mut Sweeps) -> Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Case-1 sweeps and their fits, computed once per `(s, w)`.
#[derive(Default)]
struct Sweeps {
    rows: BTreeMap<(u64, u64), Vec<SweepRow>>,
    fits: BTreeMap<(u64, u64), CaseFits>,
}

impl Sweeps {
    fn key(s: f64, w: f64) -> (u64, u64) {
        (s.to_bits(), w.to_bits())
    }

    fn rows(&mut self, s: f64, w: f64) -> &[SweepRow] {
        self.rows.entry(Self::key(s, w)).or_insert_with(|| {
            let env = EnvironmentParams::new(K, s, w)
                .and_then(|e| e.with_spreading_ref_km(TABLE_L_REF_KM))
                .unwrap();
            let spec = CasePreset::Case1.spec(env, POINTS).unwrap();
            sweep_to_table(&run_sweep(&spec, &SolverSettings::default()).unwrap())
        })
    }

    fn fits(&mut self, s: f64, w: f64) -> &CaseFits {
        let key = Self::key(s, w);
        if !self.fits.contains_key(&key) {
            let rows = self.rows(s, w).to_vec();
            let fits = CaseFits::new("case1", &rows, InterceptVariant::AsPrinted).unwrap();
            self.fits.insert(key, fits);
        }
        &self.fits[&key]
    }

    fn power(&mut self, s: f64, w: f64) -> CoefficientModel {
        self.fits(s, w).model(Quantity::Power).clone()
    }
}

fn slope_and_intercept(sw: &mut Sweeps) -> Outcome {
    let m = sw.power(0.5, 0.0);
    let beta2 = m.beta_row()[1];
    let alpha3 = m.a2_constant();
    let beta3 = m.beta_row()[2];
    let ok = (beta2 - 1.0117).abs() <= 0.05 && (alpha3 - 2.4656).abs() <= 0.15 && (beta3 - 72.043).abs() <= 3.0;
    outcome(
        ok,
        format!("beta2 {beta2:.5} (1.0117±0.05), alpha3 {alpha3:.4} (2.4656±0.15), beta3 {beta3:.3} dB (72.043±3)"),
    )
}

fn wind_trend(sw: &mut Sweeps) -> Outcome {
    let b3: Vec<f64> = WINDS.iter().map(|&w| sw.power(0.5, w).beta_row()[2]).collect();
    let monotone = b3.windows(2).all(|p| p[1] > p[0]);
    let rise = b3[4] - b3[0];
    let listed = b3.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ");
    outcome(
        monotone && (rise - 31.5).abs() <= 3.0,
        format!("beta3 over w {WINDS:?}: [{listed}], rise {rise:.2} dB (31.5±3), monotone {monotone}"),
    )
}

fn shipping_insensitivity(sw: &mut Sweeps) -> Outcome {
    let mut worst = Vec::new();
    let mut ok = true;
    for &w in &WINDS[1..] {
        let by_s: Vec<(f64, CoefficientModel)> = SHIPPING.iter().map(|&s| (s, sw.power(s, w))).collect();
        let rep = shipping_sensitivity_report(&by_s, &[]).unwrap();
        let (name, rel) = rep
            .coefficients
            .iter()
            .map(|c| (c.name, c.relative))
            .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
        ok &= rel < 0.01;
        worst.push(format!("w={w}: {name} {:.2}%", 100.0 * rel));
    }
    outcome(ok, format!("max relative spread over s {SHIPPING:?} (<1%): {}", worst.join("; ")))
}

fn spreading_rescale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let settings = SolverSettings::default();
    let from = Solver::new(EnvironmentParams::new(1.5, 0.5, 0.0).unwrap(), settings).unwrap();
    let to = Solver::new(EnvironmentParams::new(2.0, 0.5, 0.0).unwrap(), settings).unwrap();
    let l_ref = DistanceKm::new(1.0).unwrap();
    let (mut p_err, mut e_err) = (0.0f64, 0.0f64);
    let mut same_shape = true;
    for _ in 0..20 {
        let q = LinkQuery::new(rng.random_range(1.0..=100.0), rng.random_range(1.0..=100.0)).unwrap();
        let scaled = rescale_spreading(&from.solve(&q).unwrap(), q.l, 1.5, 2.0, l_ref);
        let fresh = to.solve(&q).unwrap();
        p_err = p_err.max((scaled.power_linear / fresh.power_linear - 1.0).abs());
        let (a, b) = (scaled.band.intervals(), fresh.band.intervals());
        same_shape &= a.len() == b.len();
        for (x, y) in a.iter().zip(b) {
            e_err = e_err
                .max((x.0.khz() / y.0.khz() - 1.0).abs())
                .max((x.1.khz() / y.1.khz() - 1.0).abs());
        }
    }
    outcome(
        same_shape && p_err < 1e-6 && e_err < 1e-6,
        format!("20 links: max power rel err {p_err:.2e} (<1e-6), max edge rel err {e_err:.2e} (<1e-6)"),
    )
}

fn self_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let env = EnvironmentParams::default();
    let solver = Solver::new(env, SolverSettings::default()).unwrap();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (lmax, cmax) = if i % 2 == 0 { CasePreset::Case1.ranges() } else { CasePreset::Case2.ranges() };
        let q = LinkQuery::new(rng.random_range(0.01 * lmax..=lmax), rng.random_range(0.01 * cmax..=cmax)).unwrap();
        let sol = solver.solve(&q).unwrap();
        let c = oracle_capacity(&sol, &env);
        worst = worst.max((c / q.c_target - 1.0).abs());
    }
    outcome(worst < 1e-6, format!("100 links: max relative capacity error {worst:.2e} (<1e-6)"))
}

fn waterfilling_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let env = EnvironmentParams::default();
    let solver = Solver::new(env, SolverSettings::default()).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..10 {
        let q = LinkQuery::new(rng.random_range(1.0..=100.0), rng.random_range(1.0..=100.0)).unwrap();
        let sol = solver.solve(&q).unwrap();
        let c_star = oracle_capacity(&sol, &env);
        let (lo, hi) = (sol.f_ini.khz() / 3.0, sol.f_end.khz() * 3.0);
        for j in 0..100 {
            // Half anywhere near the band, half hugging its edges.
            let (a, b) = if j % 2 == 0 {
                let centre = (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();
                let half: f64 = rng.random_range(0.02..1.5);
                (centre * (-half).exp(), centre * half.exp())
            } else {
                let (ja, jb): (f64, f64) = (rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
                (sol.f_ini.khz() * ja.exp(), sol.f_end.khz() * jb.exp())
            };
            let c = oracle_flat_capacity(q.l.km(), sol.power_linear, a.max(0.01), b.min(1000.0), &env);
            let excess = (c - c_star) / c_star;
            worst = worst.max(excess);
            if excess > 1e-9 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("1000 flat allocations: {violations} exceed the optimum, max relative excess {worst:.2e} (<=1e-9)"),
    )
}

fn ols_exact_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_mse = 0.0f64;
    let mut worst_coeff = 0.0f64;
    for basis in Basis::ALL {
        let truth: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let xs: Vec<f64> = (0..40).map(|i| 0.05 + 2.5 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| basis.eval(&truth, x)).collect();
        let fit = ols(basis, &xs, &ys).unwrap();
        worst_mse = worst_mse.max(fit.mse);
        for (c, t) in fit.coeffs.iter().zip(&truth) {
            worst_coeff = worst_coeff.max((c - t).abs() / t.abs().max(1.0));
        }
    }
    outcome(
        worst_mse < 1e-18 && worst_coeff < 1e-8,
        format!("{} bases: max MSE {worst_mse:.2e} (<1e-18), max coeff err {worst_coeff:.2e}", Basis::ALL.len()),
    )
}

fn monotonicity(sw: &mut Sweeps) -> Outcome {
    let rows = sw.rows(0.5, 0.0).to_vec();
    let n = POINTS;
    let at = |il: usize, ic: usize| &rows[il * n + ic];
    let slack = 1e-12;
    let mut bad = BTreeMap::<&str, usize>::new();
    for il in 0..n {
        for ic in 1..n {
            let (p, c) = (at(il, ic - 1), at(il, ic));
            *bad.entry("P(C)").or_default() += (c.p_db < p.p_db - slack * p.p_db.abs()) as usize;
            *bad.entry("f_end(C)").or_default() += (c.f_end_khz < p.f_end_khz * (1.0 - slack)) as usize;
            *bad.entry("B(C)").or_default() += (c.b_khz < p.b_khz * (1.0 - slack)) as usize;
        }
    }
    for ic in 0..n {
        for il in 1..n {
            let (p, c) = (at(il - 1, ic), at(il, ic));
            *bad.entry("P(l)").or_default() += (c.p_db < p.p_db - slack * p.p_db.abs()) as usize;
            *bad.entry("f0(l)").or_default() += (c.f0_khz > p.f0_khz) as usize;
        }
    }
    let total: usize = bad.values().sum();
    outcome(total == 0, format!("{n}x{n} grid: violations {bad:?}"))
}

fn fit_quality(sw: &mut Sweeps) -> Outcome {
    let printed = [
        (Quantity::Power, 2.532e-7, 5.8979e-5),
        (Quantity::FEnd, 3.930e-9, 3.4706e-5),
        (Quantity::Bandwidth, 6.599e-9, 2.9233e-7),
    ];
    let fits = sw.fits(0.5, 0.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (q, alpha_ref, beta_ref) in printed {
        let m = fits.model(q);
        for (what, got, want) in [("a2", m.mse_a2, alpha_ref), ("a1", m.mse_a1, beta_ref)] {
            let ratio = got / want;
            ok &= (0.01..=100.0).contains(&ratio);
            parts.push(format!("{}/{what} {got:.2e} (x{ratio:.2})", q.label()));
        }
    }
    outcome(ok, format!("MSE ratio to reference within [0.01, 100]: {}", parts.join(", ")))
}

fn main() -> ExitCode {
    let mut sw = Sweeps::default();
    let criteria: Vec<(&str, Check)> = vec![
        ("power-model slope and intercept, case 1", Box::new(slope_and_intercept)),
        ("intercept rises with wind speed", Box::new(wind_trend)),
        ("power coefficients insensitive to shipping", Box::new(shipping_insensitivity)),
        ("spreading-factor rescaling matches fresh solves", Box::new(|_| spreading_rescale())),
        ("solver capacity re-integrates to target", Box::new(|_| self_consistency())),
        ("no flat allocation beats waterfilling", Box::new(|_| waterfilling_optimality())),
        ("least squares recovers exact-basis data", Box::new(|_| ols_exact_recovery())),
        ("monotonicity over the case-1 grid", Box::new(monotonicity)),
        ("fit residuals comparable to reference", Box::new(fit_quality)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let o = check(&mut sw);
        failed += !o.pass as usize;
        println!(
            "{} [{}] {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
