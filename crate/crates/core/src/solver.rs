//! Match-point shooting for the ground state.
//!
//! For each trial `eta` the solver locates the outermost turning point
//! `tau = V(rho_match)`, integrates inward from the outer edge and outward
//! from the inner cutoff, and takes the log-derivative discontinuity
//! `Delta(eta)` at the match node. Roots of `Delta` are eigenvalues.
//!
//! A match point is only admissible when its classically allowed region
//! is separated from the inner cutoff by a forbidden region. When the
//! allowed region reaches the cutoff, the core potential is more singular
//! than `1/rho^2`, the spectrum is set by the cutoff itself, and the trial
//! is reported as [`NoTurningPoint::SingularCore`].

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::coefficients::{coefficients_for, CoefficientForm, CoefficientSet, GapEvaluator};
use crate::domain::{
    discrete_l2_norm, epsilon_ev, reconstruct_fg, Ansatz, EigenResult, NoTurningPoint,
    NotFoundReason, PhysicalConfig, RadialGrid, ScanSample, ScanValue, WaveSolution,
};
use crate::error::{Error, Result};
use crate::numerov::{propagate_span, Direction, Scheme};
use crate::parallel::{map_ordered, ExecutionMode};

/// Rule producing the radial grid of one trial energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    /// Inner cutoff `a`.
    pub rho_min: f64,
    /// Smallest outer edge `b`.
    pub rho_max_floor: f64,
    /// Largest outer edge; trials whose well extends beyond it are open.
    pub rho_max_cap: f64,
    /// Upper bound on the step `delta`.
    pub max_step: f64,
    /// `b >= turning_point_factor * rho_turn + outer_margin`.
    pub turning_point_factor: f64,
    pub outer_margin: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            rho_min: 1e-6,
            rho_max_floor: 50.0,
            rho_max_cap: 4000.0,
            max_step: 1e-3,
            turning_point_factor: 2.0,
            outer_margin: 40.0,
        }
    }
}

const PROBE_POINTS: usize = 2000;

fn allowed(gap: &GapEvaluator, rho: f64) -> Option<bool> {
    gap.is_allowed(rho)
}

fn log_spaced(from: f64, to: f64, n: usize) -> impl Iterator<Item = f64> {
    let (l0, l1) = (from.ln(), to.ln());
    (0..n).map(move |i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
}

impl GridPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rho_min > 0.0
            && self.rho_max_floor > self.rho_min
            && self.rho_max_cap >= self.rho_max_floor
            && self.max_step > 0.0
            && self.turning_point_factor >= 1.0
            && self.outer_margin >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("inconsistent grid policy {self:?}")))
        }
    }

    /// Outermost allowed radius on a logarithmic probe of `[a, cap]`.
    pub fn probe_outer_turning_point(&self, coeffs: &CoefficientSet) -> Option<f64> {
        let gap = coeffs.gap_evaluator();
        log_spaced(self.rho_min, self.rho_max_cap, PROBE_POINTS)
            .filter(|&rho| allowed(&gap, rho) == Some(true))
            .last()
    }

    pub fn grid_for(&self, coeffs: &CoefficientSet) -> Result<RadialGrid> {
        let b = match self.probe_outer_turning_point(coeffs) {
            Some(turn) => (self.turning_point_factor * turn + self.outer_margin)
                .clamp(self.rho_max_floor, self.rho_max_cap),
            None => self.rho_max_floor,
        };
        RadialGrid::with_max_step(self.rho_min, b, self.max_step)
    }
}

/// Search parameters for [`solve_ground_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Bound-state window for `E/M`.
    pub eta_window: (f64, f64),
    pub scan_points: usize,
    pub root_tol: f64,
    pub mismatch_tol: f64,
    pub grid: GridPolicy,
    pub scheme: Scheme,
    pub execution: ExecutionMode,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eta_window: (0.5, 1.0 - 1e-9),
            scan_points: 2000,
            root_tol: 1e-12,
            mismatch_tol: 1e-8,
            grid: GridPolicy::default(),
            scheme: Scheme::Canonical,
            execution: ExecutionMode::Parallel,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.eta_window;
        if !(lo > -1.0 && hi < 1.0 && lo < hi) {
            return Err(Error::InvalidConfig(format!(
                "eta window ({lo}, {hi}) must be an increasing pair inside (-1, 1)"
            )));
        }
        if self.scan_points < 2 {
            return Err(Error::InvalidConfig("scan_points must be at least 2".into()));
        }
        if !(self.root_tol > 0.0 && self.mismatch_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        self.grid.validate()
    }

    /// Trial energies, uniform in `ln(1 - eta)` so that resolution follows
    /// the binding energy rather than `eta` itself.
    pub fn scan_etas(&self) -> Vec<f64> {
        let (lo, hi) = self.eta_window;
        let n = self.scan_points;
        let mut etas: Vec<f64> = log_spaced(1.0 - lo, 1.0 - hi, n).map(|u| 1.0 - u).collect();
        etas[0] = lo;
        etas[n - 1] = hi;
        etas
    }
}

/// Grid plus match node: everything that fixes the discrete problem
/// besides the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub grid: RadialGrid,
    pub match_index: usize,
}

impl Frame {
    pub fn match_rho(&self) -> f64 {
        self.grid.node(self.match_index)
    }
}

/// Locates the admissible match node on `grid`, or explains its absence.
pub fn classify_match_point(
    coeffs: &CoefficientSet,
    grid: &RadialGrid,
) -> std::result::Result<usize, NoTurningPoint> {
    let n = grid.n_points;
    let mask = coeffs.gap_evaluator().allowed_mask(grid.rho_min, grid.step, n);
    let check = |i: usize| -> std::result::Result<bool, NoTurningPoint> {
        match mask[i] {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(NoTurningPoint::NonFiniteCoefficient { rho: grid.node(i) }),
        }
    };
    if check(n - 1)? {
        return Err(NoTurningPoint::OpenAtOuterEdge { rho: grid.rho_max });
    }
    let mut outer = None;
    for i in (0..n - 1).rev() {
        if check(i)? {
            outer = Some(i);
            break;
        }
    }
    let outer = outer.ok_or(NoTurningPoint::NoSignChange)?;
    let mut inner = outer;
    while inner > 0 && check(inner - 1)? {
        inner -= 1;
    }
    if inner == 0 {
        let edge_rho = grid.node(outer);
        return Err(NoTurningPoint::SingularCore {
            edge_rho,
            wkb_phase: core_phase(coeffs, grid.rho_min, edge_rho),
        });
    }
    Ok(outer)
}

/// Outermost grid radius where `tau - V` changes sign with a well behind
/// it, if any.
pub fn find_match_point(coeffs: &CoefficientSet, grid: &RadialGrid) -> Option<f64> {
    classify_match_point(coeffs, grid).ok().map(|i| grid.node(i))
}

/// `int_a^edge sqrt(max(w, 0)) drho` by the trapezoid rule in `ln rho`.
fn core_phase(coeffs: &CoefficientSet, a: f64, edge: f64) -> f64 {
    if edge <= a {
        return 0.0;
    }
    let n = 512;
    let h = (edge / a).ln() / (n - 1) as f64;
    let f = |rho: f64| coeffs.w(rho).max(0.0).sqrt() * rho;
    let sum: f64 = log_spaced(a, edge, n)
        .enumerate()
        .map(|(i, rho)| if i == 0 || i == n - 1 { 0.5 * f(rho) } else { f(rho) })
        .sum();
    let phase = sum * h;
    if phase.is_finite() {
        phase
    } else {
        f64::MAX
    }
}

fn seeds_left(coeffs: &CoefficientSet, grid: &RadialGrid, scheme: Scheme) -> (f64, f64) {
    let d = grid.step;
    let phi1 = match coeffs.indicial_exponent() {
        Some(gamma) => d.powf(gamma),
        None => d,
    };
    match scheme {
        Scheme::Generalized => (0.0, phi1),
        Scheme::Canonical => (0.0, phi1 / coeffs.integrating_factor(grid.node(1))),
    }
}

fn seeds_right(coeffs: &CoefficientSet, grid: &RadialGrid, scheme: Scheme) -> (f64, f64) {
    let n = grid.n_points;
    // exp(-rho/2) up to a constant factor.
    let (phi_b, phi_b1) = (1.0, (grid.step / 2.0).exp());
    match scheme {
        Scheme::Generalized => (phi_b, phi_b1),
        Scheme::Canonical => (
            phi_b / coeffs.integrating_factor(grid.node(n - 1)),
            phi_b1 / coeffs.integrating_factor(grid.node(n - 2)),
        ),
    }
}

/// `Delta = [phi'/phi]_left - [phi'/phi]_right` at the frame's match node.
pub fn mismatch_in_frame(coeffs: &CoefficientSet, frame: &Frame, scheme: Scheme) -> Result<f64> {
    let grid = &frame.grid;
    let m = frame.match_index;
    if m == 0 || m + 1 >= grid.n_points {
        return Err(Error::InvalidGrid(format!("match node {m} has no neighbours")));
    }
    let left = propagate_span(grid, coeffs, Direction::LeftToRight, seeds_left(coeffs, grid, scheme), scheme, m + 1)?;
    let right = propagate_span(grid, coeffs, Direction::RightToLeft, seeds_right(coeffs, grid, scheme), scheme, m - 1)?;
    // The canonical integrating factor adds the same -p/2 to both sides.
    let delta = left.log_derivative_at(m).unwrap_or(f64::NAN) - right.log_derivative_at(m).unwrap_or(f64::NAN);
    Ok(if delta.is_finite() {
        delta
    } else if delta.is_nan() {
        f64::MAX
    } else {
        delta.signum() * f64::MAX
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mismatch {
    Value { delta: f64, frame: Frame },
    NoTurningPoint { cause: NoTurningPoint },
}

/// Log-derivative mismatch at trial energy `eta`.
pub fn mismatch(eta: f64, config: &PhysicalConfig, settings: &SolverSettings) -> Result<Mismatch> {
    let inner = || -> Result<Mismatch> {
        let coeffs = coefficients_for(config, eta)?;
        let grid = settings.grid.grid_for(&coeffs)?;
        coeffs.check_grid(&grid)?;
        match classify_match_point(&coeffs, &grid) {
            Err(cause) => Ok(Mismatch::NoTurningPoint { cause }),
            Ok(match_index) => {
                let frame = Frame { grid, match_index };
                let delta = mismatch_in_frame(&coeffs, &frame, settings.scheme)?;
                Ok(Mismatch::Value { delta, frame })
            }
        }
    };
    inner().map_err(|e| e.at_eta(eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Root {
    eta: f64,
    delta: f64,
}

/// Bisects `Delta` on a fixed frame, so the discrete problem is
/// continuous in `eta` across the bracket.
fn bisect(
    config: &PhysicalConfig,
    settings: &SolverSettings,
    frame: &Frame,
    (mut lo, mut dlo): (f64, f64),
    (mut hi, mut dhi): (f64, f64),
) -> Result<Root> {
    let eval = |eta: f64| -> Result<f64> {
        let coeffs = coefficients_for(config, eta)?;
        mismatch_in_frame(&coeffs, frame, settings.scheme).map_err(|e| e.at_eta(eta))
    };
    let mut best = if dlo.abs() <= dhi.abs() {
        Root { eta: lo, delta: dlo }
    } else {
        Root { eta: hi, delta: dhi }
    };
    for _ in 0..200 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let dmid = eval(mid)?;
        if dmid.abs() < best.delta.abs() {
            best = Root { eta: mid, delta: dmid };
        }
        if dmid == 0.0 {
            break;
        }
        if (dmid > 0.0) == (dlo > 0.0) {
            lo = mid;
            dlo = dmid;
        } else {
            hi = mid;
            dhi = dmid;
        }
        if hi - lo <= settings.root_tol && best.delta.abs() <= 1e-2 * settings.mismatch_tol {
            break;
        }
    }
    let _ = dhi;
    Ok(best)
}

/// Frame in which `Delta` changes sign across `[lo, hi]`, with the end values.
fn bracket_frame(
    config: &PhysicalConfig,
    settings: &SolverSettings,
    lo: (f64, f64, Frame),
    hi: (f64, f64, Frame),
) -> Result<Option<(Frame, f64, f64)>> {
    for (frame, known_lo, known_hi) in [(lo.2, Some(lo.1), None), (hi.2, None, Some(hi.1))] {
        let eval = |eta: f64| -> Result<f64> {
            mismatch_in_frame(&coefficients_for(config, eta)?, &frame, settings.scheme)
        };
        let dlo = match known_lo {
            Some(d) => d,
            None => eval(lo.0)?,
        };
        let dhi = match known_hi {
            Some(d) => d,
            None => eval(hi.0)?,
        };
        if dlo * dhi < 0.0 {
            return Ok(Some((frame, dlo, dhi)));
        }
    }
    Ok(None)
}

fn scan_one(eta: f64, config: &PhysicalConfig, settings: &SolverSettings) -> (ScanSample, Option<Frame>) {
    match mismatch(eta, config, settings) {
        Ok(Mismatch::Value { delta, frame }) => (
            ScanSample {
                eta,
                value: ScanValue::Mismatch {
                    delta,
                    match_rho: frame.match_rho(),
                },
            },
            Some(frame),
        ),
        Ok(Mismatch::NoTurningPoint { cause }) => (
            ScanSample {
                eta,
                value: ScanValue::NoTurningPoint { cause },
            },
            None,
        ),
        Err(e) => (
            ScanSample {
                eta,
                value: ScanValue::Failed { error: e.to_string() },
            },
            None,
        ),
    }
}

/// Coarse scan of `Delta` over the whole window; every trial is independent.
pub fn scan_mismatch(config: &PhysicalConfig, settings: &SolverSettings) -> Vec<(ScanSample, Option<Frame>)> {
    let etas = settings.scan_etas();
    map_ordered(settings.execution, &etas, |&eta| scan_one(eta, config, settings))
}

/// Trials evaluated per batch while searching for the first root.
const SCAN_CHUNK: usize = 64;

/// Ground state of `config` within `settings.eta_window`.
///
/// Numerical failures of individual trials are recorded in the scan
/// trace; `Err` is returned only for invalid inputs. Brackets are refined
/// in increasing `eta` and the first root passing `mismatch_tol` (the most
/// deeply bound state) is accepted. The scan is evaluated in batches and
/// stops there, so `scan_trace` ends at the accepted bracket.
pub fn solve_ground_state(config: &PhysicalConfig, settings: &SolverSettings) -> Result<EigenResult> {
    config.validate()?;
    settings.validate()?;
    crate::coefficients::coupling_xi(config)?;

    let etas = settings.scan_etas();
    let mut scan: Vec<(ScanSample, Option<Frame>)> = Vec::with_capacity(etas.len());
    let mut brackets = 0;
    let mut best_rejected: Option<f64> = None;
    let mut accepted: Option<(Root, Frame)> = None;

    'chunks: for chunk in etas.chunks(SCAN_CHUNK) {
        let checked_from = scan.len().saturating_sub(1);
        scan.extend(map_ordered(settings.execution, chunk, |&eta| scan_one(eta, config, settings)));
        for i in checked_from..scan.len().saturating_sub(1) {
            let (s0, f0) = &scan[i];
            let (s1, f1) = &scan[i + 1];
            let (Some(d0), Some(d1), Some(f0), Some(f1)) = (s0.value.delta(), s1.value.delta(), f0, f1) else {
                continue;
            };
            if d0 * d1 >= 0.0 {
                continue;
            }
            brackets += 1;
            let Ok(Some((frame, dlo, dhi))) =
                bracket_frame(config, settings, (s0.eta, d0, *f0), (s1.eta, d1, *f1))
            else {
                continue;
            };
            let Ok(root) = bisect(config, settings, &frame, (s0.eta, dlo), (s1.eta, dhi)) else {
                continue;
            };
            if root.delta.abs() <= settings.mismatch_tol {
                accepted = Some((root, frame));
                break 'chunks;
            }
            best_rejected = Some(best_rejected.map_or(root.delta.abs(), |b: f64| b.min(root.delta.abs())));
        }
    }

    let scan_trace: Vec<ScanSample> = scan.into_iter().map(|(s, _)| s).collect();
    Ok(match accepted {
        Some((root, frame)) => EigenResult {
            found: true,
            eta_star: Some(root.eta),
            epsilon_ev: Some(epsilon_ev(root.eta, config.mass_ev)),
            match_rho: Some(frame.match_rho()),
            mismatch_residual: Some(root.delta.abs()),
            grid: Some(frame.grid),
            reason: None,
            brackets,
            scan_trace,
        },
        None => {
            let any_match = scan_trace.iter().any(|s| s.value.delta().is_some());
            let reason = if !any_match {
                NotFoundReason::NoTurningPoint
            } else if brackets == 0 {
                NotFoundReason::NoSignChange
            } else {
                NotFoundReason::NoAcceptedRoot {
                    best_residual: best_rejected.unwrap_or(f64::MAX),
                }
            };
            EigenResult {
                found: false,
                eta_star: None,
                epsilon_ev: None,
                match_rho: None,
                mismatch_residual: best_rejected,
                grid: None,
                reason: Some(reason),
                brackets,
                scan_trace,
            }
        }
    })
}

/// Ground states for every dimension in `dimensions` with `l = 0`.
pub fn dimension_scan(
    dimensions: RangeInclusive<u32>,
    ansatz: Ansatz,
    settings: &SolverSettings,
) -> Vec<(u32, Result<EigenResult>)> {
    let dims: Vec<u32> = dimensions.collect();
    map_ordered(settings.execution, &dims, |&d| {
        let result = PhysicalConfig::new(d, 0, ansatz).and_then(|c| solve_ground_state(&c, settings));
        (d, result)
    })
}

/// Stitched, normalized `phi+` at an accepted eigenvalue, with `phi-`
/// recovered from the first-order relation and `F`, `G` reconstructed.
pub fn eigenfunction(config: &PhysicalConfig, settings: &SolverSettings, eta_star: f64) -> Result<WaveSolution> {
    let coeffs = coefficients_for(config, eta_star)?;
    let grid = settings.grid.grid_for(&coeffs)?;
    coeffs.check_grid(&grid)?;
    let match_index = classify_match_point(&coeffs, &grid)
        .map_err(|cause| Error::UnsupportedCase(format!("no admissible match point at E/M = {eta_star}: {cause:?}")))?;
    eigenfunction_in_frame(&coeffs, &Frame { grid, match_index }, settings.scheme)
}

pub fn eigenfunction_in_frame(coeffs: &CoefficientSet, frame: &Frame, scheme: Scheme) -> Result<WaveSolution> {
    let grid = frame.grid;
    let m = frame.match_index;
    let n = grid.n_points;
    let factor = |rho: f64| coeffs.integrating_factor(rho);
    let left = propagate_span(&grid, coeffs, Direction::LeftToRight, seeds_left(coeffs, &grid, scheme), scheme, m)?
        .into_solution(&grid, factor);
    let right = propagate_span(&grid, coeffs, Direction::RightToLeft, seeds_right(coeffs, &grid, scheme), scheme, m)?
        .into_solution(&grid, factor);
    if right.values[m] == 0.0 {
        return Err(Error::NonFiniteValue { rho: grid.node(m) });
    }
    let scale = left.values[m] / right.values[m];
    let mut phi: Vec<f64> = (0..n)
        .map(|i| if i <= m { left.values[i] } else { scale * right.values[i] })
        .collect();
    let norm = discrete_l2_norm(&phi, grid.step);
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NonFiniteValue { rho: grid.node(m) });
    }
    phi.iter_mut().for_each(|v| *v /= norm);

    let phi_minus = phi_minus_from_plus(coeffs, &grid, &phi);
    let eta = if coeffs.tau_prime != 0.0 { coeffs.tau / coeffs.tau_prime } else { 0.0 };
    let (f_component, g_component) = reconstruct_fg(&phi, &phi_minus, 1.0, eta)?;
    Ok(WaveSolution {
        grid,
        eta,
        match_index: m,
        phi_plus: phi,
        phi_minus,
        f_component,
        g_component,
        norm,
    })
}

/// `phi- = [(tau/rho^n - 1/2) phi+ - phi+'] / (K/rho + tau'/rho^n)`.
fn phi_minus_from_plus(coeffs: &CoefficientSet, grid: &RadialGrid, phi: &[f64]) -> Vec<f64> {
    let n_pow = match coeffs.form {
        CoefficientForm::OneOverR => 1,
        CoefficientForm::Generalized => coeffs.dimension as i32 - 2,
    };
    let n = phi.len();
    let d = grid.step;
    (0..n)
        .map(|i| {
            let rho = grid.node(i);
            let deriv = if i == 0 {
                (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * d)
            } else if i == n - 1 {
                (3.0 * phi[i] - 4.0 * phi[i - 1] + phi[i - 2]) / (2.0 * d)
            } else {
                (phi[i + 1] - phi[i - 1]) / (2.0 * d)
            };
            let inv = rho.powi(-n_pow);
            let a = coeffs.tau * inv - 0.5;
            let b = coeffs.k / rho + coeffs.tau_prime * inv;
            (a * phi[i] - deriv) / b
        })
        .collect()
}
