//! Scheme comparison and measured convergence orders.

use serde::{Deserialize, Serialize};

use crate::coefficients::coefficients_for;
use crate::domain::{Ansatz, PhysicalConfig, RadialGrid};
use crate::error::{Error, Result};
use crate::numerov::{propagate_with, Direction, Scheme};
use crate::oracle::{analytic_energy, analytic_phi_plus};
use crate::solver::{solve_ground_state, SolverSettings};

/// Pointwise error of one propagation against the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderSample {
    pub step: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub label: String,
    pub samples: Vec<OrderSample>,
    /// `log2(error(h) / error(h/2))` for consecutive samples.
    pub observed_orders: Vec<f64>,
}

impl OrderReport {
    pub fn last_ratio(&self) -> Option<f64> {
        let n = self.samples.len();
        (n >= 2).then(|| self.samples[n - 2].error / self.samples[n - 1].error)
    }
}

/// Propagates the `D = 3`, `l = 0` ground state outward from `rho0` with
/// exact seeds and reports the error at `rho1` while halving the step.
///
/// `derivative_sign = -1` flips the sign of the `p'` terms in the
/// generalized recurrence.
pub fn d3_order_report(
    scheme: Scheme,
    derivative_sign: f64,
    rho0: f64,
    rho1: f64,
    steps: &[f64],
) -> Result<OrderReport> {
    let config = PhysicalConfig::new(3, 0, Ansatz::CoulombOneOverR)?;
    let level = analytic_energy(&config, 0)?;
    let coeffs = coefficients_for(&config, level.energy_ratio)?;
    let gamma = level.gamma_exp;
    let tau = coeffs.energy_parameter();
    let exact = |rho: f64| analytic_phi_plus(rho, gamma, tau);
    let mut samples = Vec::with_capacity(steps.len());
    for &h in steps {
        let n = ((rho1 - rho0) / h).round() as usize + 1;
        let grid = RadialGrid::new(rho0, rho0 + (n - 1) as f64 * h, n)?;
        let factor = |rho: f64| coeffs.integrating_factor(rho);
        let seeds = match scheme {
            Scheme::Generalized => (exact(grid.node(0))?, exact(grid.node(1))?),
            Scheme::Canonical => (
                exact(grid.node(0))? / factor(grid.node(0)),
                exact(grid.node(1))? / factor(grid.node(1)),
            ),
        };
        let run = propagate_with(&grid, &coeffs, Direction::LeftToRight, seeds, scheme, n - 1, derivative_sign)?
            .into_solution(&grid, factor);
        let target = exact(grid.rho_max)?;
        samples.push(OrderSample {
            step: h,
            error: ((run.values[n - 1] - target) / target).abs(),
        });
    }
    let observed_orders = samples.windows(2).map(|w| (w[0].error / w[1].error).log2()).collect();
    let label = match (scheme, derivative_sign > 0.0) {
        (Scheme::Canonical, _) => "canonical".to_string(),
        (Scheme::Generalized, true) => "generalized".to_string(),
        (Scheme::Generalized, false) => "generalized, flipped p' sign".to_string(),
    };
    Ok(OrderReport {
        label,
        samples,
        observed_orders,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub dimension: u32,
    pub eta_generalized: f64,
    pub eta_canonical: f64,
    pub difference: f64,
}

/// Ground state found by each scheme under otherwise equal settings.
pub fn scheme_cross_validation(config: &PhysicalConfig, settings: &SolverSettings) -> Result<CrossValidation> {
    let solve = |scheme| -> Result<f64> {
        let r = solve_ground_state(config, &SolverSettings { scheme, ..*settings })?;
        r.eta_star
            .ok_or_else(|| Error::UnsupportedCase(format!("{scheme:?} scheme found no ground state")))
    };
    let eta_generalized = solve(Scheme::Generalized)?;
    let eta_canonical = solve(Scheme::Canonical)?;
    Ok(CrossValidation {
        dimension: config.dimension,
        eta_generalized,
        eta_canonical,
        difference: (eta_generalized - eta_canonical).abs(),
    })
}

/// Human-readable summary of the order reports.
pub fn format_order_reports(reports: &[OrderReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!("{}:\n", r.label));
        for (i, s) in r.samples.iter().enumerate() {
            let order = if i == 0 {
                String::from("-")
            } else {
                format!("{:.2}", r.observed_orders[i - 1])
            };
            out.push_str(&format!("  h = {:.3e}  rel.err = {:.3e}  order = {order}\n", s.step, s.error));
        }
    }
    out
}
