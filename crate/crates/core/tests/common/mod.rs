//! Checks shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use dirac_numerov::coefficients::{coefficient_set, coefficient_set_ansatz1, CoefficientSet};
use dirac_numerov::domain::{Ansatz, DimensionlessState, KSign, PhysicalConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityStats {
    pub samples: usize,
    pub worst_mass_shell: f64,
    pub worst_ratio_ulps: f64,
    pub worst_vqs: f64,
    pub worst_fd_ratio: f64,
}

fn ulps_apart(a: f64, b: f64) -> f64 {
    ((a - b) / (f64::EPSILON * b.abs())).abs()
}

fn random_state(rng: &mut ChaCha8Rng) -> (PhysicalConfig, DimensionlessState, CoefficientSet) {
    let d = rng.random_range(3..=10u32);
    let ell = rng.random_range(0..=3u32);
    let ansatz = if rng.random_bool(0.5) { Ansatz::CoulombOneOverR } else { Ansatz::CoulombGeneralized };
    // K < 0 puts a pole in the generalized coefficients; sample it only
    // for the 1/r structure.
    let sign = if ansatz == Ansatz::CoulombOneOverR && rng.random_bool(0.5) { KSign::Minus } else { KSign::Plus };
    let cfg = PhysicalConfig::new(d, ell, ansatz).unwrap().with_k_sign(sign);
    // lambda >= 2e-3: tau'^2 - tau^2 cancels to eps / lambda in floating point.
    let eta = rng.random_range(-0.999..0.999);
    let xi = if rng.random_bool(0.5) {
        dirac_numerov::coupling_xi(&cfg).unwrap()
    } else {
        rng.random_range(1e-3..0.4)
    };
    let eff = if ansatz == Ansatz::CoulombOneOverR { 3 } else { d };
    let state = DimensionlessState::from_parts(eta, xi, cfg.k_value(), eff).unwrap();
    let set = match ansatz {
        Ansatz::CoulombOneOverR => coefficient_set_ansatz1(&state, &cfg).unwrap(),
        Ansatz::CoulombGeneralized => coefficient_set(&state, &cfg).unwrap(),
    };
    (cfg, state, set)
}

/// Randomized sweep of the closed-form identities; `Err` names the first
/// violated sample.
pub fn identity_suite(samples: usize, seed: u64) -> Result<IdentityStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = IdentityStats { samples, ..Default::default() };
    for i in 0..samples {
        let (cfg, st, set) = random_state(&mut rng);
        let tag = || format!("sample {i}: D={} l={} {:?} eta={}", cfg.dimension, cfg.ell, cfg.ansatz, st.eta);

        let d_eff = st.effective_dimension as i32;
        let lhs = st.tau_prime * st.tau_prime - st.tau * st.tau;
        let rhs = st.a_const * st.a_const * st.lambda.powi(d_eff - 3);
        let rel = ((lhs - rhs) / rhs).abs();
        stats.worst_mass_shell = stats.worst_mass_shell.max(rel);
        if rel > 1e-12 {
            return Err(format!("{}: tau'^2 - tau^2 off by {rel:e}", tag()));
        }

        if st.eta != 0.0 {
            let u = ulps_apart(st.tau / st.tau_prime, st.eta);
            stats.worst_ratio_ulps = stats.worst_ratio_ulps.max(u);
            if u > 4.0 {
                return Err(format!("{}: tau/tau' is {u} ulps from eta", tag()));
            }
        }

        let rho = 10f64.powf(rng.random_range(-3.0..2.0));
        let d_v = if set.form == dirac_numerov::coefficients::CoefficientForm::OneOverR { 3 } else { cfg.dimension as i32 };
        let s = set.s(rho);
        let vq = set.v(rho) * set.q(rho) * rho.powi(d_v - 2);
        let rel = ((vq - s) / s).abs();
        if s != 0.0 {
            stats.worst_vqs = stats.worst_vqs.max(rel);
            if rel > 1e-12 {
                return Err(format!("{}: v q rho^(D-2) vs s off by {rel:e} at rho={rho}", tag()));
            }
        }

        // Centered differences of p at h = 1e-2, 1e-3, 1e-4.
        let rho = rng.random_range(0.5..20.0);
        let exact = set.p_prime(rho);
        let err = |h: f64| ((set.p(rho + h) - set.p(rho - h)) / (2.0 * h) - exact).abs() / exact.abs();
        let (e2, e3, e4) = (err(1e-2), err(1e-3), err(1e-4));
        let floor = 1e-9;
        if !(e3 <= 0.02 * e2 + floor && e4 <= 0.02 * e3 + floor) {
            return Err(format!("{}: p' finite differences not O(h^2): {e2:e} {e3:e} {e4:e} at rho={rho}", tag()));
        }
        if e2 > floor {
            stats.worst_fd_ratio = stats.worst_fd_ratio.max(e3 / e2);
        }
    }
    Ok(stats)
}

/// Classical Numerov on `y'' = k^2 y` with exact `exp(-k rho)` seeds;
/// max-norm errors for each step.
pub fn exponential_errors(steps: &[f64]) -> Vec<f64> {
    use dirac_numerov::numerov::{propagate, ConstantCoefficients, Direction, Scheme};
    let k = 1.5;
    let eq = ConstantCoefficients { p: 0.0, w: -k * k };
    steps
        .iter()
        .map(|&h| {
            let n = (4.0 / h).round() as usize + 1;
            let grid = dirac_numerov::RadialGrid::new(0.5, 0.5 + (n - 1) as f64 * h, n).unwrap();
            let run = propagate(&grid, &eq, Direction::LeftToRight, ((-k * grid.node(0)).exp(), (-k * grid.node(1)).exp()), Scheme::Canonical).unwrap();
            (0..n).map(|i| (run.values[i] - (-k * grid.node(i)).exp()).abs()).fold(0.0, f64::max)
        })
        .collect()
}
