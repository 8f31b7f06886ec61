//! Three-term fourth-order propagation on a uniform grid.
//!
//! Two schemes solve `y'' + p y' + w y = 0`:
//!
//! * [`Scheme::Generalized`] works on `y` directly with
//!   `p2 y(rho+d) = p1 y(rho) - p0 y(rho-d)`, where
//!   `p0 = 1 - p d/2 + [w(rho-d) + p'] d^2/12`,
//!   `p1 = 2 {1 - [w(rho) - p'/5] 5 d^2/12}`,
//!   `p2 = 1 + p d/2 + [w(rho+d) + p'] d^2/12`.
//!   It reduces to classical Numerov when `p = 0`; with `p != 0` its local
//!   error is `d^4 (p y''' - p' y'' - p'' y')/12`, i.e. second order overall.
//! * [`Scheme::Canonical`] runs classical Numerov on `chi'' + W chi = 0`,
//!   `W = w - p^2/4 - p'/2`, with `y = exp(-1/2 int p) chi`.

use serde::{Deserialize, Serialize};

use crate::domain::RadialGrid;
use crate::error::{Error, Result};

/// A linear second-order radial equation `y'' + p y' + w y = 0`.
pub trait RadialEquation {
    fn p(&self, rho: f64) -> f64;
    fn p_prime(&self, rho: f64) -> f64;
    fn w(&self, rho: f64) -> f64;

    fn canonical_weight(&self, rho: f64) -> f64 {
        let p = self.p(rho);
        self.w(rho) - 0.25 * p * p - 0.5 * self.p_prime(rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Generalized,
    #[default]
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

/// Magnitude above which a propagation is rescaled.
pub const RESCALE_THRESHOLD: f64 = 1e100;
/// `2^-332`, roughly `1e-100`; exact in binary floating point.
const RESCALE_FACTOR: f64 = 1.142_987_391_282_275e-100;

/// Coefficients of `hi * y[i+1] = mid * y[i] - lo * y[i-1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ThreeTerm {
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
}

/// `derivative_sign = 1` is the recurrence as written above; `-1` flips
/// the sign of the `p'/5` term inside `p1`, which only diagnostics use.
#[inline]
pub(crate) fn generalized_coefficients(
    p: f64,
    p_prime: f64,
    w_prev: f64,
    w_curr: f64,
    w_next: f64,
    delta: f64,
    derivative_sign: f64,
) -> ThreeTerm {
    let h2 = delta * delta / 12.0;
    ThreeTerm {
        lo: 1.0 - 0.5 * p * delta + (w_prev + p_prime) * h2,
        mid: 2.0 * (1.0 - (w_curr - derivative_sign * p_prime / 5.0) * 5.0 * h2),
        hi: 1.0 + 0.5 * p * delta + (w_next + p_prime) * h2,
    }
}

#[inline]
pub(crate) fn canonical_coefficients(w_prev: f64, w_curr: f64, w_next: f64, delta: f64) -> ThreeTerm {
    let h2 = delta * delta / 12.0;
    ThreeTerm {
        lo: 1.0 + w_prev * h2,
        mid: 2.0 * (1.0 - 5.0 * w_curr * h2),
        hi: 1.0 + w_next * h2,
    }
}

/// One step of the generalized recurrence: `phi(rho + delta)` from
/// `phi(rho - delta)` and `phi(rho)`.
pub fn generalized_step<E: RadialEquation + ?Sized>(
    phi_prev: f64,
    phi_curr: f64,
    rho: f64,
    delta: f64,
    eq: &E,
) -> Result<f64> {
    let t = generalized_coefficients(
        eq.p(rho),
        eq.p_prime(rho),
        eq.w(rho - delta),
        eq.w(rho),
        eq.w(rho + delta),
        delta,
        1.0,
    );
    if t.hi == 0.0 {
        return Err(Error::SingularCoefficient { rho: rho + delta });
    }
    Ok((t.mid * phi_curr - t.lo * phi_prev) / t.hi)
}

/// One classical Numerov step for `chi'' + W chi = 0`.
pub fn canonical_step<W: Fn(f64) -> f64>(
    chi_prev: f64,
    chi_curr: f64,
    rho: f64,
    delta: f64,
    weight: W,
) -> Result<f64> {
    let t = canonical_coefficients(weight(rho - delta), weight(rho), weight(rho + delta), delta);
    if t.hi == 0.0 {
        return Err(Error::SingularCoefficient { rho: rho + delta });
    }
    Ok((t.mid * chi_curr - t.lo * chi_prev) / t.hi)
}

/// Node values of one propagation. Nodes outside `first..=last` were not
/// reached and hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub values: Vec<f64>,
    pub first: usize,
    pub last: usize,
    pub step: f64,
    pub scheme: Scheme,
    pub direction: Direction,
    pub overflowed: bool,
    pub rescale_count: u32,
}

impl PropagationResult {
    /// Three-point estimate of `y'/y` at `index`: centered inside the
    /// propagated span, one-sided at its ends.
    pub fn log_derivative_at(&self, index: usize) -> Option<f64> {
        if index < self.first || index > self.last || self.last - self.first < 2 {
            return None;
        }
        let y = &self.values;
        let d = self.step;
        let deriv = if index > self.first && index < self.last {
            (y[index + 1] - y[index - 1]) / (2.0 * d)
        } else if index == self.first {
            (-3.0 * y[index] + 4.0 * y[index + 1] - y[index + 2]) / (2.0 * d)
        } else {
            (3.0 * y[index] - 4.0 * y[index - 1] + y[index - 2]) / (2.0 * d)
        };
        Some(deriv / y[index])
    }

    /// Converts canonical-form samples back to `y = integrating_factor * chi`.
    pub fn into_solution<F: Fn(f64) -> f64>(mut self, grid: &RadialGrid, integrating_factor: F) -> Self {
        if self.scheme == Scheme::Canonical {
            for i in self.first..=self.last {
                let v = self.values[i];
                self.values[i] = if v == 0.0 { 0.0 } else { v * integrating_factor(grid.node(i)) };
            }
        }
        self
    }
}

/// Propagates across the whole grid. `seeds` are the values at the
/// boundary node and its neighbour (`y[0], y[1]` left to right,
/// `y[N-1], y[N-2]` right to left).
pub fn propagate<E: RadialEquation + ?Sized>(
    grid: &RadialGrid,
    eq: &E,
    direction: Direction,
    seeds: (f64, f64),
    scheme: Scheme,
) -> Result<PropagationResult> {
    let end = match direction {
        Direction::LeftToRight => grid.n_points - 1,
        Direction::RightToLeft => 0,
    };
    propagate_span(grid, eq, direction, seeds, scheme, end)
}

/// Like [`propagate`], stopping once node `end` has been computed.
pub fn propagate_span<E: RadialEquation + ?Sized>(
    grid: &RadialGrid,
    eq: &E,
    direction: Direction,
    seeds: (f64, f64),
    scheme: Scheme,
    end: usize,
) -> Result<PropagationResult> {
    propagate_with(grid, eq, direction, seeds, scheme, end, 1.0)
}

pub(crate) fn propagate_with<E: RadialEquation + ?Sized>(
    grid: &RadialGrid,
    eq: &E,
    direction: Direction,
    seeds: (f64, f64),
    scheme: Scheme,
    end: usize,
    derivative_sign: f64,
) -> Result<PropagationResult> {
    let n = grid.n_points;
    if end >= n {
        return Err(Error::InvalidGrid(format!("stop node {end} outside a grid of {n}")));
    }
    let (first, last) = match direction {
        Direction::LeftToRight => (0, end.max(1)),
        Direction::RightToLeft => (end.min(n - 2), n - 1),
    };
    let delta = grid.step;
    let mut values = vec![0.0; n];

    // Zeroth-order samples over the span plus one node of halo, clamped
    // to the grid; both boundary seeds are given, so the halo beyond the
    // grid is never read.
    let lo_idx = first.saturating_sub(1);
    let hi_idx = (last + 1).min(n - 1);
    let zeroth: Vec<f64> = (lo_idx..=hi_idx)
        .map(|i| {
            let rho = grid.node(i);
            match scheme {
                Scheme::Generalized => eq.w(rho),
                Scheme::Canonical => eq.canonical_weight(rho),
            }
        })
        .collect();
    let at = |i: usize| zeroth[i - lo_idx];
    let coefficients = |i: usize| -> ThreeTerm {
        match scheme {
            Scheme::Generalized => {
                let rho = grid.node(i);
                generalized_coefficients(
                    eq.p(rho),
                    eq.p_prime(rho),
                    at(i - 1),
                    at(i),
                    at(i + 1),
                    delta,
                    derivative_sign,
                )
            }
            Scheme::Canonical => canonical_coefficients(at(i - 1), at(i), at(i + 1), delta),
        }
    };

    let mut rescale_count = 0u32;
    let mut rescale = |values: &mut [f64], range: std::ops::RangeInclusive<usize>| {
        for v in &mut values[range] {
            *v *= RESCALE_FACTOR;
        }
        rescale_count += 1;
    };

    match direction {
        Direction::LeftToRight => {
            values[0] = seeds.0;
            values[1] = seeds.1;
            for i in 1..last {
                let t = coefficients(i);
                if t.hi == 0.0 {
                    return Err(Error::SingularCoefficient { rho: grid.node(i + 1) });
                }
                let next = (t.mid * values[i] - t.lo * values[i - 1]) / t.hi;
                if !next.is_finite() {
                    return Err(Error::NonFiniteValue { rho: grid.node(i + 1) });
                }
                values[i + 1] = next;
                if next.abs() > RESCALE_THRESHOLD {
                    rescale(&mut values, 0..=i + 1);
                }
            }
        }
        Direction::RightToLeft => {
            values[n - 1] = seeds.0;
            values[n - 2] = seeds.1;
            for i in (first + 1..n - 1).rev() {
                let t = coefficients(i);
                if t.lo == 0.0 {
                    return Err(Error::SingularCoefficient { rho: grid.node(i - 1) });
                }
                let prev = (t.mid * values[i] - t.hi * values[i + 1]) / t.lo;
                if !prev.is_finite() {
                    return Err(Error::NonFiniteValue { rho: grid.node(i - 1) });
                }
                values[i - 1] = prev;
                if prev.abs() > RESCALE_THRESHOLD {
                    rescale(&mut values, i - 1..=n - 1);
                }
            }
        }
    }

    Ok(PropagationResult {
        values,
        first,
        last,
        step: delta,
        scheme,
        direction,
        overflowed: rescale_count > 0,
        rescale_count,
    })
}

/// Equation with constant `p` and `w`; closed-form solutions make it a
/// convenient validation problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients {
    pub p: f64,
    pub w: f64,
}

impl RadialEquation for ConstantCoefficients {
    fn p(&self, _rho: f64) -> f64 {
        self.p
    }
    fn p_prime(&self, _rho: f64) -> f64 {
        0.0
    }
    fn w(&self, _rho: f64) -> f64 {
        self.w
    }
}
