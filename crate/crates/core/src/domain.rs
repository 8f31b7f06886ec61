//! Physical and dimensionless quantities shared by every other module.
//!
//! Internal arithmetic is carried out in units of the particle mass
//! (`M = 1`, `hbar = c = 1`). Energies only acquire eV at the reporting
//! boundary, through [`PhysicalConfig::mass_ev`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fine-structure constant, used as `e^2` in every dimension.
pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;

/// Electron rest energy in eV.
pub const ELECTRON_REST_ENERGY_EV: f64 = 510_998.946;

/// Shape of the electron-nucleus potential energy in `D` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ansatz {
    /// `U = -xi / r` in every dimension.
    CoulombOneOverR,
    /// `U = -xi / r^(D-2)`, the Gauss-law potential of a point charge.
    CoulombGeneralized,
}

impl Ansatz {
    /// Maps the CLI numbering (`1`, `2`) onto the variants.
    pub fn from_index(index: u32) -> Option<Self> {
        match index {
            1 => Some(Ansatz::CoulombOneOverR),
            2 => Some(Ansatz::CoulombGeneralized),
            _ => None,
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Ansatz::CoulombOneOverR => 1,
            Ansatz::CoulombGeneralized => 2,
        }
    }

    /// Power of `1/r` in the potential energy for dimension `d`.
    pub fn potential_power(self, dimension: u32) -> i32 {
        match self {
            Ansatz::CoulombOneOverR => 1,
            Ansatz::CoulombGeneralized => dimension as i32 - 2,
        }
    }
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ansatz::CoulombOneOverR => f.write_str("ansatz 1 (1/r)"),
            Ansatz::CoulombGeneralized => f.write_str("ansatz 2 (1/r^(D-2))"),
        }
    }
}

/// Branch of the relativistic angular quantum number `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KSign {
    #[default]
    Plus,
    Minus,
}

impl KSign {
    fn factor(self) -> f64 {
        match self {
            KSign::Plus => 1.0,
            KSign::Minus => -1.0,
        }
    }
}

/// The problem statement: which atom, in which space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub dimension: u32,
    pub ell: u32,
    pub mass_ev: f64,
    pub ansatz: Ansatz,
    pub k_sign: KSign,
}

impl PhysicalConfig {
    /// Electron (`mass = 510 998.946 eV`), plus branch of `K`.
    pub fn new(dimension: u32, ell: u32, ansatz: Ansatz) -> Result<Self> {
        let config = Self {
            dimension,
            ell,
            mass_ev: ELECTRON_REST_ENERGY_EV,
            ansatz,
            k_sign: KSign::Plus,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_k_sign(mut self, k_sign: KSign) -> Self {
        self.k_sign = k_sign;
        self
    }

    pub fn with_mass_ev(mut self, mass_ev: f64) -> Result<Self> {
        self.mass_ev = mass_ev;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::InvalidConfig(format!(
                "dimension must be at least 2, got {}",
                self.dimension
            )));
        }
        if !(self.mass_ev.is_finite() && self.mass_ev > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "mass must be positive and finite, got {}",
                self.mass_ev
            )));
        }
        Ok(())
    }

    /// `K = ±(2l + D - 1)/2`.
    pub fn k_value(&self) -> f64 {
        k_value(self)
    }
}

/// `K = ±(2l + D - 1)/2`, sign taken from `config.k_sign`.
pub fn k_value(config: &PhysicalConfig) -> f64 {
    config.k_sign.factor() * f64::from(2 * config.ell + config.dimension - 1) / 2.0
}

/// `rho = 2 r sqrt(M^2 - E^2)`.
pub fn rho_of_r(r: f64, mass: f64, energy: f64) -> Result<f64> {
    if energy.abs() >= mass {
        return Err(Error::EtaOutOfRange {
            eta: energy / mass,
        });
    }
    Ok(2.0 * r * ((mass - energy) * (mass + energy)).sqrt())
}

/// Dimensionless scalars of one trial energy `eta = E/M`.
///
/// `effective_dimension` is the `D` that enters the closed forms for
/// `A`, `tau` and `tau'`: the true dimension for the generalized
/// potential, and 3 for the `1/r` potential (whose radial system has the
/// three-dimensional structure with only `K` carrying `D`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessState {
    pub eta: f64,
    pub lambda: f64,
    pub xi: f64,
    pub a_const: f64,
    pub tau: f64,
    pub tau_prime: f64,
    pub k_value: f64,
    pub effective_dimension: u32,
}

impl DimensionlessState {
    pub fn new(config: &PhysicalConfig, eta: f64) -> Result<Self> {
        let xi = crate::coefficients::coupling_xi(config)?;
        let effective_dimension = match config.ansatz {
            Ansatz::CoulombOneOverR => 3,
            Ansatz::CoulombGeneralized => config.dimension,
        };
        Self::from_parts(eta, xi, k_value(config), effective_dimension)
    }

    /// Builds the state from an explicit coupling, bypassing the
    /// potential-shape policy. Used for validation sweeps.
    pub fn from_parts(eta: f64, xi: f64, k_value: f64, effective_dimension: u32) -> Result<Self> {
        if !(eta.is_finite() && eta.abs() < 1.0) {
            return Err(Error::EtaOutOfRange { eta });
        }
        let d = effective_dimension as i32;
        // (1 - eta)(1 + eta) keeps full relative precision as eta -> 1.
        let lambda = (1.0 - eta) * (1.0 + eta);
        let sqrt_lambda = lambda.sqrt();
        let a_const = 2f64.powi(d - 3) * xi;
        let tau_prime = a_const * sqrt_lambda.powi(d - 4);
        let tau = eta * tau_prime;
        Ok(Self {
            eta,
            lambda,
            xi,
            a_const,
            tau,
            tau_prime,
            k_value,
            effective_dimension,
        })
    }

    /// Binding energy `epsilon = -(M - E)` in eV, negative when bound.
    pub fn epsilon_ev(&self, mass_ev: f64) -> f64 {
        epsilon_ev(self.eta, mass_ev)
    }
}

/// `-(1 - eta) M`, the sign convention of a binding energy table.
pub fn epsilon_ev(eta: f64, mass_ev: f64) -> f64 {
    -(1.0 - eta) * mass_ev
}

/// Uniform radial grid `a + i*step`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_points: usize,
    pub step: f64,
}

impl RadialGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(rho_min: f64, rho_max: f64, n_points: usize) -> Result<Self> {
        if !(rho_min.is_finite() && rho_min > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "inner cutoff must be positive, got {rho_min}"
            )));
        }
        if !(rho_max.is_finite() && rho_max > rho_min) {
            return Err(Error::InvalidGrid(format!(
                "outer edge {rho_max} must exceed inner cutoff {rho_min}"
            )));
        }
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} nodes, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self {
            rho_min,
            rho_max,
            n_points,
            step: (rho_max - rho_min) / (n_points - 1) as f64,
        })
    }

    /// Smallest uniform grid on `[a, b]` whose step does not exceed `max_step`.
    pub fn with_max_step(rho_min: f64, rho_max: f64, max_step: f64) -> Result<Self> {
        if !(max_step.is_finite() && max_step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {max_step}"
            )));
        }
        let intervals = ((rho_max - rho_min) / max_step).ceil().max(1.0) as usize;
        Self::new(rho_min, rho_max, (intervals + 1).max(Self::MIN_POINTS))
    }

    #[inline]
    pub fn node(&self, index: usize) -> f64 {
        self.rho_min + index as f64 * self.step
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Index of the last node not exceeding `rho`, clamped to the grid.
    pub fn index_at_or_below(&self, rho: f64) -> usize {
        if rho <= self.rho_min {
            return 0;
        }
        (((rho - self.rho_min) / self.step).floor() as usize).min(self.n_points - 1)
    }
}

/// Discrete L2 norm `sqrt(step * sum v_i^2)`.
pub fn discrete_l2_norm(values: &[f64], step: f64) -> f64 {
    (step * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `G = sqrt(M - E)(phi+ + phi-)`, `F = sqrt(M + E)(phi+ - phi-)`.
///
/// Returns `(F, G)`.
pub fn reconstruct_fg(
    phi_plus: &[f64],
    phi_minus: &[f64],
    mass: f64,
    energy: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if phi_plus.len() != phi_minus.len() {
        return Err(Error::LengthMismatch {
            left: phi_plus.len(),
            right: phi_minus.len(),
        });
    }
    if energy.abs() >= mass {
        return Err(Error::EtaOutOfRange {
            eta: energy / mass,
        });
    }
    let upper = (mass + energy).sqrt();
    let lower = (mass - energy).sqrt();
    let f = phi_plus
        .iter()
        .zip(phi_minus)
        .map(|(p, m)| upper * (p - m))
        .collect();
    let g = phi_plus
        .iter()
        .zip(phi_minus)
        .map(|(p, m)| lower * (p + m))
        .collect();
    Ok((f, g))
}

/// Sampled bound-state wavefunction on the solver grid, unit discrete L2 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSolution {
    pub grid: RadialGrid,
    pub eta: f64,
    pub match_index: usize,
    pub phi_plus: Vec<f64>,
    pub phi_minus: Vec<f64>,
    pub f_component: Vec<f64>,
    pub g_component: Vec<f64>,
    /// Norm of the stitched `phi+` before normalization.
    pub norm: f64,
}

impl WaveSolution {
    /// Sign changes of `phi+` strictly inside the grid, ignoring values
    /// below `floor` times the peak magnitude.
    pub fn node_count(&self, floor: f64) -> usize {
        let peak = self.phi_plus.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut last = 0.0f64;
        let mut count = 0;
        for &v in &self.phi_plus {
            if v.abs() <= floor * peak {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
        count
    }
}

/// Why no classically allowed well bounded by a match point exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoTurningPoint {
    /// `tau - V < 0` on every grid node.
    NoSignChange,
    /// `tau - V > 0` at the outer edge: the trial energy is not bound on
    /// this grid.
    OpenAtOuterEdge { rho: f64 },
    /// The only allowed region runs down to the inner cutoff: the
    /// attractive core is more singular than `1/rho^2`. `wkb_phase` is
    /// `int sqrt(w) drho` over the core, which diverges as the cutoff
    /// shrinks.
    SingularCore { edge_rho: f64, wkb_phase: f64 },
    /// A coefficient is not finite at this node.
    NonFiniteCoefficient { rho: f64 },
}

/// Outcome of one trial energy in a coarse scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanValue {
    Mismatch { delta: f64, match_rho: f64 },
    NoTurningPoint { cause: NoTurningPoint },
    Failed { error: String },
}

impl ScanValue {
    pub fn delta(&self) -> Option<f64> {
        match self {
            ScanValue::Mismatch { delta, .. } => Some(*delta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub eta: f64,
    pub value: ScanValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NotFoundReason {
    /// No trial energy in the window had an admissible match point.
    NoTurningPoint,
    /// Match points existed but the mismatch never changed sign.
    NoSignChange,
    /// Sign changes existed, none converged below the mismatch tolerance
    /// (poles of the log-derivative difference).
    NoAcceptedRoot { best_residual: f64 },
}

/// Verdict of a ground-state search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub found: bool,
    pub eta_star: Option<f64>,
    pub epsilon_ev: Option<f64>,
    pub match_rho: Option<f64>,
    pub mismatch_residual: Option<f64>,
    pub grid: Option<RadialGrid>,
    pub reason: Option<NotFoundReason>,
    pub brackets: usize,
    pub scan_trace: Vec<ScanSample>,
}
