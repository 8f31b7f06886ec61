//! Coupling constant and the coefficient functions of the second-order
//! equation for `phi+`:
//!
//! ```text
//! phi'' + p(rho) phi' + q(rho) [tau - V(rho)] phi = 0
//! ```
//!
//! The coefficients follow from eliminating `phi-` out of the first-order
//! pair
//!
//! ```text
//! phi+' - (tau/rho^n - 1/2) phi+ = -(K/rho + tau'/rho^n) phi-
//! phi-' + (tau/rho^n - 1/2) phi- = -(K/rho - tau'/rho^n) phi+
//! ```
//!
//! with `n = D - 2`, `c = K lambda^((4-D)/2)` and `den = c rho^(D-3) + A`:
//!
//! ```text
//! p = (1/rho) (1 + (D-3) A / den)
//! q = (1/rho^(D-2)) (1 + (D-3) c rho^(D-4) / den)
//! s = rho^(D-2)/4 - (rho^(D-3)/2)(1 + (D-3) A / den)
//!     + (K^2 - A^2 lambda^(D-3) / rho^(2(D-3))) rho^(D-4)
//! V = s / (q rho^(D-2))
//! ```
//!
//! The energy enters through `tau` (not `tau'`), and the `1/(2 rho)` term
//! of `s` carries `+ (D-3)A/den`; both are pinned by the first-order
//! system and by the `D = 3` reduction to the `1/r` equation.

use serde::{Deserialize, Serialize};

use crate::domain::{Ansatz, DimensionlessState, PhysicalConfig, RadialGrid, FINE_STRUCTURE};
use crate::error::{Error, Result};
use crate::numerov::RadialEquation;

/// `Gamma(n/2)` for a positive integer `n`.
pub(crate) fn gamma_half_integer(n: u32) -> f64 {
    debug_assert!(n > 0);
    let (mut x, mut value) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, std::f64::consts::PI.sqrt())
    };
    let target = f64::from(n) / 2.0;
    while x < target {
        value *= x;
        x += 1.0;
    }
    value
}

/// Coupling `xi` of `U = -xi / r^(D-2)` (generalized) or `U = -xi / r`.
///
/// With `e^2 = alpha` in every dimension, the generalized coupling is
/// `2 Gamma(D/2) alpha / (pi^((D-2)/2) (D-2))`, which equals `alpha` at `D = 3`.
pub fn coupling_xi(config: &PhysicalConfig) -> Result<f64> {
    match config.ansatz {
        Ansatz::CoulombOneOverR => {
            if config.dimension < 2 {
                return Err(Error::UnsupportedDimension {
                    dimension: config.dimension,
                    ansatz: config.ansatz,
                });
            }
            Ok(FINE_STRUCTURE)
        }
        Ansatz::CoulombGeneralized => {
            let d = config.dimension;
            if d <= 2 {
                return Err(Error::UnsupportedDimension {
                    dimension: d,
                    ansatz: config.ansatz,
                });
            }
            let solid = 2.0 * gamma_half_integer(d)
                / std::f64::consts::PI.powf((f64::from(d) - 2.0) / 2.0);
            Ok(solid * FINE_STRUCTURE / (f64::from(d) - 2.0))
        }
    }
}

/// Potential energy `U(r)` of the electron, in units of `M`.
pub fn potential_energy(r: f64, config: &PhysicalConfig) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {r}")));
    }
    let xi = coupling_xi(config)?;
    Ok(-xi / r.powi(config.ansatz.potential_power(config.dimension)))
}

/// Which of the two decoupled components the equation describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientForm {
    /// The `D`-dimensional generalized-potential coefficients.
    Generalized,
    /// The three-dimensional `1/r` structure with `K` carrying `D`.
    OneOverR,
}

/// Coefficients of one trial energy. Immutable; every method is a pure
/// function of `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub form: CoefficientForm,
    pub branch: Branch,
    /// `D` entering the closed forms.
    pub dimension: u32,
    pub k: f64,
    pub xi: f64,
    pub a_const: f64,
    pub lambda: f64,
    /// `K lambda^((4-D)/2)`.
    pub c: f64,
    pub tau: f64,
    pub tau_prime: f64,
}

/// Generalized-form coefficients for `state`, in its effective dimension.
pub fn coefficient_set(state: &DimensionlessState, _config: &PhysicalConfig) -> Result<CoefficientSet> {
    check_state(state)?;
    let d = state.effective_dimension as i32;
    let c = state.k_value * state.lambda.sqrt().powi(4 - d);
    let set = CoefficientSet {
        form: CoefficientForm::Generalized,
        branch: Branch::Plus,
        dimension: state.effective_dimension,
        k: state.k_value,
        xi: state.xi,
        a_const: state.a_const,
        lambda: state.lambda,
        c,
        tau: state.tau,
        tau_prime: state.tau_prime,
    };
    if d == 3 && c + state.a_const == 0.0 {
        return Err(Error::DenominatorVanishes { rho: f64::NAN });
    }
    Ok(set)
}

/// The `1/r` equation `phi'' + phi'/rho + [-1/4 + (tau ± 1/2)/rho - (K^2 - xi^2)/rho^2] phi = 0`,
/// valid in every dimension (only `K` depends on `D`).
pub fn coefficient_set_ansatz1(
    state: &DimensionlessState,
    config: &PhysicalConfig,
) -> Result<CoefficientSet> {
    check_state(state)?;
    let (tau, tau_prime) = if state.effective_dimension == 3 {
        (state.tau, state.tau_prime)
    } else {
        let sl = state.lambda.sqrt();
        (state.xi * state.eta / sl, state.xi / sl)
    };
    Ok(CoefficientSet {
        form: CoefficientForm::OneOverR,
        branch: Branch::Plus,
        dimension: config.dimension,
        k: state.k_value,
        xi: state.xi,
        a_const: state.xi,
        lambda: state.lambda,
        c: state.k_value * state.lambda.sqrt(),
        tau,
        tau_prime,
    })
}

/// Picks the coefficient route matching the configured potential.
pub fn coefficients_for(config: &PhysicalConfig, eta: f64) -> Result<CoefficientSet> {
    let state = DimensionlessState::new(config, eta)?;
    match config.ansatz {
        Ansatz::CoulombOneOverR => coefficient_set_ansatz1(&state, config),
        Ansatz::CoulombGeneralized => coefficient_set(&state, config),
    }
}

fn check_state(state: &DimensionlessState) -> Result<()> {
    if !(state.lambda > 0.0 && state.lambda <= 1.0) {
        return Err(Error::EtaOutOfRange { eta: state.eta });
    }
    if state.k_value == 0.0 {
        return Err(Error::InvalidConfig("K must be nonzero".into()));
    }
    Ok(())
}

impl CoefficientSet {
    /// Switches to the `phi-` equation. Only the `1/r` structure (and the
    /// generalized form at `D = 3`, which coincides with it) has one.
    pub fn with_branch(mut self, branch: Branch) -> Result<Self> {
        if branch == Branch::Minus && self.form == CoefficientForm::Generalized && self.dimension != 3 {
            return Err(Error::UnsupportedCase(
                "phi- equation is only available for the 1/r structure".into(),
            ));
        }
        self.branch = branch;
        Ok(self)
    }

    /// The energy-dependent constant compared against `V`.
    #[inline]
    pub fn energy_parameter(&self) -> f64 {
        self.tau
    }

    #[inline]
    fn m(&self) -> i32 {
        self.dimension as i32 - 3
    }

    #[inline]
    fn generalized(&self) -> bool {
        self.form == CoefficientForm::Generalized
    }

    fn branch_sign(&self) -> f64 {
        match self.branch {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// `c rho^(D-3) + A`.
    #[inline]
    pub fn denominator(&self, rho: f64) -> f64 {
        self.c * rho.powi(self.m()) + self.a_const
    }

    /// Radius where `denominator` vanishes (only for `K < 0`, `D >= 4`).
    pub fn pole_radius(&self) -> Option<f64> {
        if !self.generalized() || self.m() == 0 {
            return None;
        }
        let ratio = -self.a_const / self.c;
        (ratio > 0.0).then(|| ratio.powf(1.0 / f64::from(self.m())))
    }

    /// Errors when the coefficient pole lies inside the grid interval.
    pub fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        match self.pole_radius() {
            Some(rho) if rho >= grid.rho_min && rho <= grid.rho_max => {
                Err(Error::DenominatorVanishes { rho })
            }
            _ => Ok(()),
        }
    }

    /// Positive exponent `gamma` of the regular small-`rho` branch
    /// `phi ~ rho^gamma`, when the equation has one.
    pub fn indicial_exponent(&self) -> Option<f64> {
        if self.generalized() && self.m() != 0 {
            return None;
        }
        let disc = self.k * self.k - self.xi * self.xi;
        (disc > 0.0).then(|| disc.sqrt())
    }

    pub fn p(&self, rho: f64) -> f64 {
        if !self.generalized() {
            return 1.0 / rho;
        }
        let m = f64::from(self.m());
        (1.0 + m * self.a_const / self.denominator(rho)) / rho
    }

    /// Closed-form derivative of `p`.
    pub fn p_prime(&self, rho: f64) -> f64 {
        if !self.generalized() {
            return -1.0 / (rho * rho);
        }
        let m = self.m();
        // p = 1/rho + m A / g with g = c rho^(m+1) + A rho.
        let g = rho * self.denominator(rho);
        let g_prime = self.c * f64::from(m + 1) * rho.powi(m) + self.a_const;
        -1.0 / (rho * rho) - f64::from(m) * self.a_const * g_prime / (g * g)
    }

    pub fn q(&self, rho: f64) -> f64 {
        if !self.generalized() {
            return 1.0 / rho;
        }
        let m = self.m();
        let d = self.dimension as i32;
        (1.0 + f64::from(m) * self.c * rho.powi(d - 4) / self.denominator(rho)) / rho.powi(d - 2)
    }

    pub fn s(&self, rho: f64) -> f64 {
        let half = 0.5 * self.branch_sign();
        if !self.generalized() {
            return rho / 4.0 - half + (self.k * self.k - self.xi * self.xi) / rho;
        }
        let m = self.m();
        let d = self.dimension as i32;
        let bracket = 1.0 + f64::from(m) * self.a_const / self.denominator(rho);
        let centrifugal = self.k * self.k
            - self.a_const * self.a_const * self.lambda.powi(m) / rho.powi(2 * m);
        rho.powi(d - 2) / 4.0 - half * rho.powi(m) * bracket + centrifugal * rho.powi(d - 4)
    }

    /// Effective potential `V = s / (q rho^(D-2))`.
    pub fn v(&self, rho: f64) -> f64 {
        let d = if self.generalized() { self.dimension as i32 } else { 3 };
        self.s(rho) / (self.q(rho) * rho.powi(d - 2))
    }

    /// `tau - V`; positive where the motion is classically allowed.
    pub fn gap(&self, rho: f64) -> f64 {
        self.gap_evaluator().gap(rho)
    }

    /// `tau - V` with the `rho`-independent factors hoisted, for dense sweeps.
    pub fn gap_evaluator(&self) -> GapEvaluator {
        let half = 0.5 * self.branch_sign();
        if !self.generalized() {
            return GapEvaluator {
                m: 0,
                one_over_r: true,
                tau: self.tau,
                half,
                c: 0.0,
                a_const: 0.0,
                m_a: 0.0,
                m_c: 0.0,
                k2: self.k * self.k - self.xi * self.xi,
                a2_lambda_m: 0.0,
            };
        }
        let m = self.m();
        GapEvaluator {
            m,
            one_over_r: false,
            tau: self.tau,
            half,
            c: self.c,
            a_const: self.a_const,
            m_a: f64::from(m) * self.a_const,
            m_c: f64::from(m) * self.c,
            k2: self.k * self.k,
            a2_lambda_m: self.a_const * self.a_const * self.lambda.powi(m),
        }
    }

    /// Zeroth-order coefficient `q (tau - V)`.
    pub fn w(&self, rho: f64) -> f64 {
        self.q(rho) * (self.tau - self.v(rho))
    }

    /// `exp(-1/2 int p) = sqrt(|den| / rho^(D-2))`, up to a constant;
    /// `phi = integrating_factor * chi`.
    pub fn integrating_factor(&self, rho: f64) -> f64 {
        if !self.generalized() {
            return 1.0 / rho.sqrt();
        }
        (self.denominator(rho).abs() / rho.powi(self.dimension as i32 - 2)).sqrt()
    }

    /// Weight `W = w - p^2/4 - p'/2` of the canonical form `chi'' + W chi = 0`.
    pub fn canonical_weight(&self, rho: f64) -> f64 {
        let p = self.p(rho);
        self.w(rho) - 0.25 * p * p - 0.5 * self.p_prime(rho)
    }

    pub fn all_finite_on(&self, nodes: impl IntoIterator<Item = f64>) -> Option<f64> {
        nodes
            .into_iter()
            .find(|&rho| !(self.w(rho).is_finite() && self.p(rho).is_finite() && self.p_prime(rho).is_finite()))
    }
}

impl RadialEquation for CoefficientSet {
    #[inline]
    fn p(&self, rho: f64) -> f64 {
        CoefficientSet::p(self, rho)
    }
    #[inline]
    fn p_prime(&self, rho: f64) -> f64 {
        CoefficientSet::p_prime(self, rho)
    }
    #[inline]
    fn w(&self, rho: f64) -> f64 {
        CoefficientSet::w(self, rho)
    }
    #[inline]
    fn canonical_weight(&self, rho: f64) -> f64 {
        CoefficientSet::canonical_weight(self, rho)
    }
}

/// Canonical form of an equation: `W` plus the integrating factor.
/// See [`CoefficientSet::gap_evaluator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEvaluator {
    m: i32,
    one_over_r: bool,
    tau: f64,
    half: f64,
    c: f64,
    a_const: f64,
    m_a: f64,
    m_c: f64,
    k2: f64,
    a2_lambda_m: f64,
}

impl GapEvaluator {
    #[inline]
    pub fn gap(&self, rho: f64) -> f64 {
        if self.one_over_r {
            return self.tau - (rho / 4.0 - self.half + self.k2 / rho);
        }
        let r_m = rho.powi(self.m);
        let inv_den = 1.0 / (self.c * r_m + self.a_const);
        let inv_rho = 1.0 / rho;
        let centrifugal = self.k2 - self.a2_lambda_m / (r_m * r_m);
        let s = r_m * rho * 0.25 - self.half * r_m * (1.0 + self.m_a * inv_den) + centrifugal * r_m * inv_rho;
        // q rho^(D-2)
        let q_scaled = 1.0 + self.m_c * r_m * inv_rho * inv_den;
        self.tau - s / q_scaled
    }

    /// Classifies the nodes `rho_min + i * step`, `i < n`: 1 allowed,
    /// 0 forbidden, 2 non-finite. Same arithmetic as [`is_allowed`](Self::is_allowed),
    /// laid out so the loop vectorizes.
    pub fn allowed_mask(&self, rho_min: f64, step: f64, n: usize) -> Vec<u8> {
        fn sweep<const M: usize>(e: &GapEvaluator, rho_min: f64, step: f64, out: &mut [u8]) {
            for (i, slot) in out.iter_mut().enumerate() {
                let rho = rho_min + i as f64 * step;
                let mut r_m = 1.0;
                for _ in 0..M {
                    r_m *= rho;
                }
                let den = e.c * r_m + e.a_const;
                let r_m2 = r_m * r_m;
                let big_p = rho * den + e.m_c * r_m;
                let big_s = 0.25 * r_m2 * rho * rho * den - e.half * r_m2 * rho * (den + e.m_a)
                    + (e.k2 * r_m2 - e.a2_lambda_m) * den;
                let num = e.tau * r_m * big_p - big_s;
                let denom = r_m * big_p;
                let finite = (num.is_finite() & denom.is_finite() & (denom != 0.0)) as u8;
                let pos = ((num > 0.0) == (denom > 0.0)) & (num != 0.0);
                *slot = (2 - 2 * finite) | (finite & pos as u8);
            }
        }
        let mut out = vec![0u8; n];
        match (self.one_over_r, self.m) {
            (false, 1) => sweep::<1>(self, rho_min, step, &mut out),
            (false, 2) => sweep::<2>(self, rho_min, step, &mut out),
            (false, 3) => sweep::<3>(self, rho_min, step, &mut out),
            (false, 4) => sweep::<4>(self, rho_min, step, &mut out),
            (false, 5) => sweep::<5>(self, rho_min, step, &mut out),
            (false, 6) => sweep::<6>(self, rho_min, step, &mut out),
            (false, 7) => sweep::<7>(self, rho_min, step, &mut out),
            _ => {
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = match self.is_allowed(rho_min + i as f64 * step) {
                        Some(true) => 1,
                        Some(false) => 0,
                        None => 2,
                    };
                }
            }
        }
        out
    }

    /// Sign of [`gap`](Self::gap) without divisions: `Some(true)` where
    /// allowed, `None` if the evaluation overflows.
    #[inline]
    pub fn is_allowed(&self, rho: f64) -> Option<bool> {
        if self.one_over_r {
            let g = self.gap(rho);
            return g.is_finite().then_some(g > 0.0);
        }
        let mut r_m = 1.0;
        for _ in 0..self.m {
            r_m *= rho;
        }
        let den = self.c * r_m + self.a_const;
        let r_m2 = r_m * r_m;
        // tau - V = [tau r_m P - S] / (r_m P), P = rho den + m c r_m,
        // S = s rho den r_m.
        let big_p = rho * den + self.m_c * r_m;
        let big_s = 0.25 * r_m2 * rho * rho * den - self.half * r_m2 * rho * (den + self.m_a)
            + (self.k2 * r_m2 - self.a2_lambda_m) * den;
        let num = self.tau * r_m * big_p - big_s;
        let denom = r_m * big_p;
        (num.is_finite() && denom.is_finite() && denom != 0.0).then_some((num > 0.0) == (denom > 0.0) && num != 0.0)
    }
}

pub struct CanonicalForm<'a> {
    coeffs: &'a CoefficientSet,
}

impl CanonicalForm<'_> {
    pub fn weight(&self, rho: f64) -> f64 {
        self.coeffs.canonical_weight(rho)
    }

    pub fn integrating_factor(&self, rho: f64) -> f64 {
        self.coeffs.integrating_factor(rho)
    }
}

pub fn canonical_weight(coeffs: &CoefficientSet) -> CanonicalForm<'_> {
    CanonicalForm { coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::KSign;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(d: u32, ansatz: Ansatz) -> PhysicalConfig {
        PhysicalConfig::new(d, 0, ansatz).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn allowed_sign_agrees_with_gap() {
        for d in [4, 5, 6, 8, 10] {
            let c = PhysicalConfig::new(d, 0, Ansatz::CoulombGeneralized).unwrap();
            for eta in [0.5, 0.9, 0.999, 1.0 - 1e-9] {
                let set = coefficients_for(&c, eta).unwrap();
                let ev = set.gap_evaluator();
                let mut rho = 1e-6;
                while rho < 4000.0 {
                    let g = ev.gap(rho);
                    if g.abs() > 1e-9 * set.v(rho).abs() {
                        assert_eq!(ev.is_allowed(rho), Some(g > 0.0), "D={d} eta={eta} rho={rho}");
                    }
                    rho *= 1.01;
                }
            }
        }
    }

    #[test]
    fn allowed_mask_matches_pointwise() {
        for (d, ansatz) in [(3, Ansatz::CoulombOneOverR), (4, Ansatz::CoulombGeneralized), (7, Ansatz::CoulombGeneralized), (12, Ansatz::CoulombGeneralized)] {
            let c = PhysicalConfig::new(d, 0, ansatz).unwrap();
            let set = coefficients_for(&c, 0.9999).unwrap();
            let ev = set.gap_evaluator();
            let mask = ev.allowed_mask(1e-6, 1e-2, 5000);
            for (i, &m) in mask.iter().enumerate() {
                let expect = match ev.is_allowed(1e-6 + i as f64 * 1e-2) {
                    Some(true) => 1,
                    Some(false) => 0,
                    None => 2,
                };
                assert_eq!(m, expect, "D={d} i={i}");
            }
        }
    }

    #[test]
    fn gap_agrees_with_potential() {
        for d in [3, 4, 5, 7, 10] {
            for ansatz in [Ansatz::CoulombOneOverR, Ansatz::CoulombGeneralized] {
                let c = PhysicalConfig::new(d, 0, ansatz).unwrap();
                for eta in [0.6, 0.99, 1.0 - 1e-7] {
                    let set = coefficients_for(&c, eta).unwrap();
                    for rho in [1e-5, 3e-3, 0.7, 2.0, 45.0, 900.0] {
                        let (a, b) = (set.gap(rho), set.energy_parameter() - set.v(rho));
                        assert!((a - b).abs() <= 1e-12 * (a.abs() + set.v(rho).abs()), "D={d} {ansatz:?} rho={rho}: {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_at_half_integers() {
        let pi = std::f64::consts::PI;
        assert_eq!(gamma_half_integer(2), 1.0);
        assert_eq!(gamma_half_integer(8), 6.0);
        assert!(rel(gamma_half_integer(1), pi.sqrt()) < 1e-15);
        assert!(rel(gamma_half_integer(5), 0.75 * pi.sqrt()) < 1e-15);
    }

    #[test]
    fn coupling_examples() {
        let a2 = coupling_xi(&cfg(3, Ansatz::CoulombGeneralized)).unwrap();
        assert!(rel(a2, FINE_STRUCTURE) < 1e-15);
        assert_eq!(coupling_xi(&cfg(3, Ansatz::CoulombOneOverR)).unwrap(), FINE_STRUCTURE);
        assert_eq!(coupling_xi(&cfg(7, Ansatz::CoulombOneOverR)).unwrap(), FINE_STRUCTURE);
        // 2 Gamma(5/2) / (3 pi^(3/2)) = 1/(2 pi); 40-digit references.
        let d5 = coupling_xi(&cfg(5, Ansatz::CoulombGeneralized)).unwrap();
        assert!(rel(d5, 1.161_409_732_888_437_7e-3) < 1e-14, "{d5:e}");
        let d10 = coupling_xi(&cfg(10, Ansatz::CoulombGeneralized)).unwrap();
        assert!(rel(d10, 4.494_869_518_956_536_4e-4) < 1e-14, "{d10:e}");
        let bad = PhysicalConfig {
            dimension: 2,
            ..cfg(3, Ansatz::CoulombGeneralized)
        };
        assert!(matches!(coupling_xi(&bad), Err(Error::UnsupportedDimension { .. })));
    }

    #[test]
    fn potential_energy_examples() {
        for c in [cfg(3, Ansatz::CoulombOneOverR), cfg(6, Ansatz::CoulombGeneralized)] {
            assert_eq!(potential_energy(1.0, &c).unwrap(), -coupling_xi(&c).unwrap());
        }
        for r in [0.1, 1.7, 30.0] {
            let a = potential_energy(r, &cfg(3, Ansatz::CoulombOneOverR)).unwrap();
            let b = potential_energy(r, &cfg(3, Ansatz::CoulombGeneralized)).unwrap();
            assert!(rel(a, b) < 1e-15);
        }
        let c4 = cfg(4, Ansatz::CoulombGeneralized);
        let xi = coupling_xi(&c4).unwrap();
        assert_eq!(potential_energy(2.0, &c4).unwrap(), -xi / 4.0);
        assert!(potential_energy(0.0, &c4).is_err());
    }

    /// Term-by-term `1/r` form: `tau/rho - 1/4 + 1/(2 rho) - (K^2 - xi^2)/rho^2`.
    fn eq11_w(tau: f64, k: f64, xi: f64, rho: f64) -> f64 {
        tau / rho - 0.25 + 0.5 / rho - (k * k - xi * xi) / (rho * rho)
    }

    #[test]
    fn d3_generalized_reduces_to_one_over_r() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = cfg(3, Ansatz::CoulombGeneralized);
        for _ in 0..100 {
            let eta = rng.random_range(-0.999..0.999);
            let xi = rng.random_range(1e-4..0.5);
            let state = DimensionlessState::from_parts(eta, xi, 1.0, 3).unwrap();
            let gen = coefficient_set(&state, &c).unwrap();
            let one = coefficient_set_ansatz1(&state, &c).unwrap();
            for i in 1..200 {
                let rho = 0.05 * i as f64;
                let reference = eq11_w(state.tau, 1.0, xi, rho);
                let scale = state.tau.abs() / rho + 0.25 + 0.5 / rho + 1.0 / (rho * rho);
                assert!((gen.w(rho) - one.w(rho)).abs() <= 1e-10 * scale);
                assert!((gen.w(rho) - reference).abs() <= 1e-10 * scale);
                assert!(rel(gen.p(rho), 1.0 / rho) < 1e-15);
                assert!(rel(gen.q(rho), 1.0 / rho) < 1e-15);
            }
        }
    }

    #[test]
    fn d4_example_against_rational_evaluation() {
        // D = 4, K = 1, A = 1, lambda = 0.5 -> c = K exactly; p(1) = 1 + 1/(c + A) = 3/2.
        let set = CoefficientSet {
            form: CoefficientForm::Generalized,
            branch: Branch::Plus,
            dimension: 4,
            k: 1.0,
            xi: 0.5,
            a_const: 1.0,
            lambda: 0.5,
            c: 1.0,
            tau: 0.5f64.sqrt() * 0.5,
            tau_prime: 0.5f64.sqrt(),
        };
        assert_eq!(set.p(1.0), 1.5);
        let state = DimensionlessState::from_parts(0.5f64.sqrt(), 0.5, 1.0, 4).unwrap();
        let built = coefficient_set(&state, &cfg(4, Ansatz::CoulombGeneralized)).unwrap();
        assert!(rel(built.c, 1.0) < 1e-15);
        assert!(rel(built.a_const, 1.0) < 1e-15);
        assert!(rel(built.p(1.0), 1.5) < 1e-15);
        // q(1) = 1 + 1/(c+A) = 3/2, s(1) = 1/4 - (1/2)(3/2) + (1 - 1*0.5) = 0.
        assert!(rel(built.q(1.0), 1.5) < 1e-14);
        assert!(built.s(1.0).abs() < 1e-14);
    }

    #[test]
    fn identities_hold_on_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let d = rng.random_range(3..=10u32);
            let c = cfg(d, Ansatz::CoulombGeneralized);
            let eta = rng.random_range(0.01..0.999_999);
            let state = DimensionlessState::new(&c, eta).unwrap();
            let set = coefficient_set(&state, &c).unwrap();
            let rho = 10f64.powf(rng.random_range(-2.0..2.0));
            let w = set.w(rho);
            let direct = set.q(rho) * (set.tau - set.v(rho));
            assert!((w - direct).abs() <= 2.0 * f64::EPSILON * w.abs());
            let lhs = set.v(rho) * set.q(rho) * rho.powi(d as i32 - 2);
            assert!(rel(lhs, set.s(rho)) < 1e-12, "D={d} rho={rho}");
        }
    }

    #[test]
    fn p_prime_matches_finite_differences_at_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d = rng.random_range(3..=10u32);
            let c = cfg(d, Ansatz::CoulombGeneralized);
            let state = DimensionlessState::new(&c, rng.random_range(0.1..0.99)).unwrap();
            let set = coefficient_set(&state, &c).unwrap();
            let rho = rng.random_range(0.05..5.0);
            let exact = set.p_prime(rho);
            let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|h| {
                    let fd = (set.p(rho + h) - set.p(rho - h)) / (2.0 * h);
                    rel(fd, exact)
                })
                .collect();
            assert!(errs[2] < 1e-6, "D={d} rho={rho} {errs:?}");
            assert!(errs[1] <= errs[0] && errs[2] <= errs[1].max(1e-10), "{errs:?}");
        }
    }

    #[test]
    fn ansatz1_structure() {
        let c4 = cfg(4, Ansatz::CoulombOneOverR);
        assert_eq!(c4.k_value(), 1.5);
        let state = DimensionlessState::new(&c4, 0.9).unwrap();
        let set = coefficient_set_ansatz1(&state, &c4).unwrap();
        assert!((set.w(1e8) + 0.25).abs() < 1e-7);
        assert_eq!(set.p(2.0), 0.5);
    }

    #[test]
    fn energy_enters_through_different_powers() {
        // dw/deta at large rho: ~1/rho for the 1/r structure, faster than
        // 1/rho^2 for D = 5.
        let deriv = |c: &PhysicalConfig, rho: f64| {
            let h = 1e-6;
            let w = |eta: f64| coefficients_for(c, eta).unwrap().w(rho);
            (w(0.9 + h) - w(0.9 - h)) / (2.0 * h)
        };
        let c3 = cfg(3, Ansatz::CoulombOneOverR);
        let ratio3 = deriv(&c3, 100.0) / deriv(&c3, 200.0);
        assert!((ratio3 - 2.0).abs() < 1e-3, "{ratio3}");
        let c5 = cfg(5, Ansatz::CoulombGeneralized);
        let ratio5 = deriv(&c5, 100.0) / deriv(&c5, 200.0);
        assert!(ratio5 > 4.0 * 1.05, "{ratio5}");
    }

    #[test]
    fn canonical_weight_d3() {
        let c = cfg(3, Ansatz::CoulombOneOverR);
        let set = coefficients_for(&c, 0.8).unwrap();
        for rho in [0.3, 1.0, 7.0] {
            let expected = set.w(rho) + 0.25 / (rho * rho);
            assert!(rel(canonical_weight(&set).weight(rho), expected) < 1e-14);
            assert!(rel(set.integrating_factor(rho), rho.powf(-0.5)) < 1e-15);
        }
    }

    #[test]
    fn integrating_factor_matches_quadrature_of_p() {
        // ln IF(r1) - ln IF(r0) = -1/2 int_{r0}^{r1} p, Simpson with 2000 panels.
        for d in [3u32, 4, 6, 9] {
            let c = cfg(d, Ansatz::CoulombGeneralized);
            let set = coefficients_for(&c, 0.7).unwrap();
            let (r0, r1) = (0.2, 6.0);
            let n = 2000;
            let h = (r1 - r0) / n as f64;
            let mut acc = set.p(r0) + set.p(r1);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * set.p(r0 + i as f64 * h);
            }
            let integral = acc * h / 3.0;
            let closed = (set.integrating_factor(r1) / set.integrating_factor(r0)).ln();
            assert!(rel(closed, -0.5 * integral) < 1e-8, "D={d}");
        }
    }

    #[test]
    fn canonical_weight_against_finite_difference_p_prime() {
        let c = cfg(5, Ansatz::CoulombGeneralized);
        let set = coefficients_for(&c, 0.6).unwrap();
        let rho = 0.8;
        let mut errs = Vec::new();
        for h in [1e-1, 5e-2, 2.5e-2] {
            let fd = (set.p(rho + h) - set.p(rho - h)) / (2.0 * h);
            let p = set.p(rho);
            let approx = set.w(rho) - p * p / 4.0 - fd / 2.0;
            errs.push((approx - set.canonical_weight(rho)).abs());
        }
        for pair in errs.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((3.5..4.5).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn negative_k_pole_is_reported() {
        let c = cfg(5, Ansatz::CoulombGeneralized).with_k_sign(KSign::Minus);
        let set = coefficients_for(&c, 0.5).unwrap();
        let pole = set.pole_radius().expect("K < 0 has a pole");
        assert!(set.denominator(pole).abs() < 1e-12);
        let grid = RadialGrid::new(pole / 2.0, pole * 2.0, 100).unwrap();
        assert!(matches!(set.check_grid(&grid), Err(Error::DenominatorVanishes { .. })));
        let plus = coefficients_for(&cfg(5, Ansatz::CoulombGeneralized), 0.5).unwrap();
        assert!(plus.pole_radius().is_none());
    }

    #[test]
    fn minus_branch_only_for_one_over_r() {
        let set = coefficients_for(&cfg(3, Ansatz::CoulombOneOverR), 0.9).unwrap();
        let minus = set.with_branch(Branch::Minus).unwrap();
        assert!((set.w(2.0) - minus.w(2.0) - 0.5).abs() < 1e-14);
        let gen = coefficients_for(&cfg(5, Ansatz::CoulombGeneralized), 0.9).unwrap();
        assert!(gen.with_branch(Branch::Minus).is_err());
    }
}
