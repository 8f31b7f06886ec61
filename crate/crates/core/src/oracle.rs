//! Closed-form reference data for the `1/r` potential.
//!
//! For `U = -xi/r` the `phi+` equation keeps the three-dimensional
//! structure with `K = ±(2l + D - 1)/2`, so the bound spectrum is
//! `E/M = [1 + xi^2/(n_r + gamma)^2]^(-1/2)` with `gamma = sqrt(K^2 - xi^2)`,
//! and `phi+ = rho^gamma exp(-rho/2) 1F1(gamma - tau, 2 gamma + 1, rho)`.

use serde::{Deserialize, Serialize};

use crate::coefficients::coupling_xi;
use crate::domain::{discrete_l2_norm, epsilon_ev, Ansatz, PhysicalConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticLevel {
    pub n_r: u32,
    pub energy_ratio: f64,
    pub gamma_exp: f64,
}

impl AnalyticLevel {
    pub fn epsilon_ev(&self, mass_ev: f64) -> f64 {
        epsilon_ev(self.energy_ratio, mass_ev)
    }
}

/// Bound level `n_r` of the `1/r` potential in `config.dimension` dimensions.
pub fn analytic_energy(config: &PhysicalConfig, n_r: u32) -> Result<AnalyticLevel> {
    if config.ansatz != Ansatz::CoulombOneOverR {
        return Err(Error::UnsupportedCase(
            "closed-form spectrum exists only for the 1/r potential".into(),
        ));
    }
    let xi = coupling_xi(config)?;
    let k = config.k_value();
    if k.abs() <= xi {
        return Err(Error::SupercriticalCoupling { k: k.abs(), xi });
    }
    let gamma = ((k - xi) * (k + xi)).sqrt();
    let ratio = xi / (f64::from(n_r) + gamma);
    Ok(AnalyticLevel {
        n_r,
        energy_ratio: 1.0 / (1.0 + ratio * ratio).sqrt(),
        gamma_exp: gamma,
    })
}

/// Unnormalized `phi+(rho)` of the `1/r` equation for exponent `gamma`
/// and energy parameter `tau`.
pub fn analytic_phi_plus(rho: f64, gamma: f64, tau: f64) -> Result<f64> {
    Ok(rho.powf(gamma) * (-rho / 2.0).exp() * hyp1f1(gamma - tau, 2.0 * gamma + 1.0, rho)?)
}

/// Companion function `rho^gamma exp(-rho/2) 1F1(gamma - tau + 1, 2 gamma + 1, rho)`.
///
/// Paired with [`analytic_phi_plus`], the lower component is this times
/// `(tau - gamma)/(K + tau')`, which vanishes for `n_r = 0`.
pub fn analytic_phi_minus(rho: f64, gamma: f64, tau: f64) -> Result<f64> {
    Ok(rho.powf(gamma) * (-rho / 2.0).exp() * hyp1f1(gamma - tau + 1.0, 2.0 * gamma + 1.0, rho)?)
}

/// Ground-state `phi+ = rho^gamma exp(-rho/2)` at `D = 3`, `l = 0`,
/// normalized to unit discrete L2 norm on `rho_nodes` (assumed uniform).
pub fn analytic_ground_wavefunction_d3(rho_nodes: &[f64], config: &PhysicalConfig) -> Result<Vec<f64>> {
    if config.dimension != 3 || config.ell != 0 {
        return Err(Error::UnsupportedCase(format!(
            "analytic ground state is implemented for D = 3, l = 0 (got D = {}, l = {})",
            config.dimension, config.ell
        )));
    }
    if rho_nodes.len() < 2 {
        return Err(Error::InvalidGrid("need at least two nodes".into()));
    }
    // Both potentials coincide at D = 3.
    let one_over_r = PhysicalConfig {
        ansatz: Ansatz::CoulombOneOverR,
        ..*config
    };
    let level = analytic_energy(&one_over_r, 0)?;
    let gamma = level.gamma_exp;
    let values = rho_nodes
        .iter()
        .map(|&rho| analytic_phi_plus(rho, gamma, gamma))
        .collect::<Result<Vec<_>>>()?;
    let norm = discrete_l2_norm(&values, rho_nodes[1] - rho_nodes[0]);
    Ok(values.into_iter().map(|v| v / norm).collect())
}

const HYP1F1_MAX_ABS_Z: f64 = 500.0;
const HYP1F1_MAX_TERMS: usize = 100_000;
const HYP1F1_REL_TOL: f64 = 1e-16;

fn non_positive_integer(x: f64) -> Option<u64> {
    (x <= 0.0 && x.fract() == 0.0).then(|| (-x) as u64)
}

/// Kummer's confluent hypergeometric function `1F1(a; b; z) = sum (a)_k z^k / ((b)_k k!)`.
///
/// Terminating polynomials (`a` a non-positive integer) are summed
/// exactly; for `z < 0` the Kummer transformation
/// `1F1(a; b; z) = e^z 1F1(b - a; b; -z)` avoids alternating cancellation.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::DomainError(format!("non-finite argument ({a}, {b}, {z})")));
    }
    if non_positive_integer(b).is_some() {
        return Err(Error::DomainError(format!("b = {b} is a pole")));
    }
    if z.abs() > HYP1F1_MAX_ABS_Z {
        return Err(Error::DomainError(format!("|z| = {} exceeds {HYP1F1_MAX_ABS_Z}", z.abs())));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if let Some(degree) = non_positive_integer(a) {
        return Ok(polynomial(a, b, z, degree));
    }
    if z < 0.0 {
        let transformed = b - a;
        if let Some(degree) = non_positive_integer(transformed) {
            return Ok(z.exp() * polynomial(transformed, b, -z, degree));
        }
        return Ok(z.exp() * series(transformed, b, -z)?);
    }
    series(a, b, z)
}

fn polynomial(a: f64, b: f64, z: f64, degree: u64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..degree {
        let k = k as f64;
        term *= (a + k) * z / ((b + k) * (k + 1.0));
        sum += term;
    }
    sum
}

fn series(a: f64, b: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    // Terms can shrink and grow again while a + k < 0.
    let settled_after = (-a).max(0.0).ceil() as usize;
    for k in 0..HYP1F1_MAX_TERMS {
        let kf = k as f64;
        let factor = (a + kf) * z / ((b + kf) * (kf + 1.0));
        term *= factor;
        sum += term;
        if k >= settled_after && factor.abs() < 1.0 && term.abs() <= HYP1F1_REL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        terms: HYP1F1_MAX_TERMS,
    })
}
