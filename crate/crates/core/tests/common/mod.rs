//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::LN_2;

use uwacap::channel::{ln_an_product, LOW_FREQ_CROSSOVER_KHZ};
use uwacap::{DistanceKm, EnvironmentParams, FrequencyKHz, LinkSolution};

/// Integrates `g` over `[a, b]` independently of the crate's own rules:
/// double-exponential quadrature on log-spaced pieces, split at the
/// absorption formula seam.
pub fn oracle_integral(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts = vec![a];
    if a < LOW_FREQ_CROSSOVER_KHZ && LOW_FREQ_CROSSOVER_KHZ < b {
        cuts.push(LOW_FREQ_CROSSOVER_KHZ);
    }
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = 32;
        let r = (hi / lo).ln();
        for i in 0..pieces {
            let x0 = lo * (r * i as f64 / pieces as f64).exp();
            let x1 = if i + 1 == pieces { hi } else { lo * (r * (i + 1) as f64 / pieces as f64).exp() };
            total += quadrature::double_exponential::integrate(&g, x0, x1, 1e-15).integral;
        }
    }
    total
}

fn ln_an(l: f64, f: f64, env: &EnvironmentParams) -> f64 {
    ln_an_product(DistanceKm::new(l).unwrap(), FrequencyKHz::new(f).unwrap(), env)
}

/// Waterfilling capacity of `sol`'s band at its level, re-integrated by the oracle.
pub fn oracle_capacity(sol: &LinkSolution, env: &EnvironmentParams) -> f64 {
    let ln_k = sol.k_level.ln();
    sol.band
        .intervals()
        .iter()
        .map(|(a, b)| {
            oracle_integral(
                |f| ((ln_k - ln_an(sol.l_km, f, env)) / LN_2).max(0.0),
                a.khz(),
                b.khz(),
            )
        })
        .sum()
}

/// Capacity of a flat allocation of total power `power` over `[a, b]`.
pub fn oracle_flat_capacity(l: f64, power: f64, a: f64, b: f64, env: &EnvironmentParams) -> f64 {
    let psd = power / (b - a);
    oracle_integral(|f| (psd * (-ln_an(l, f, env)).exp()).ln_1p() / LN_2, a, b)
}
