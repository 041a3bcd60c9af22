//! Dynamical and geometric phases of evolved path pairs.
//!
//! The interferometric observable compares the second-sublattice amplitude of
//! the two mirror runs, `Δφ(t) = arg(z_A conj z_B)`. In the chiral gauge the
//! instantaneous eigenvector has a real positive second component, so the
//! product carries only the difference of the accumulated phases; the
//! dynamical parts are equal on mirror paths and drop out.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolve::{instantaneous_fidelity, PathTrace};
use crate::invariants::{continuous_arg, theta_unwrapped, wrap_angle, UNWRAP_GUARD};
use crate::model::{bloch_vector, Band, KSchedule, ModelParams, PathVariant};

/// Readout amplitudes smaller than this cannot carry a phase.
pub const DEGENERATE_COMPONENT_THRESHOLD: f64 = 1e-6;

/// Continuous phase from wrapped samples.
///
/// Each increment is reduced to `(-π, π]` and must stay below π/2 in
/// magnitude; larger jumps mean the sampling is too coarse.
pub fn unwrap(angles: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(angles.len());
    let Some(&first) = angles.first() else {
        return Ok(out);
    };
    out.push(wrap_angle(first));
    for i in 1..angles.len() {
        let inc = wrap_angle(angles[i] - angles[i - 1]);
        if inc.abs() >= UNWRAP_GUARD {
            return Err(Error::UnwrapJump { index: i, increment: inc });
        }
        out.push(out[i - 1] + inc);
    }
    Ok(out)
}

/// Unwrapped `arg(z_A conj z_B)` with a degenerate-amplitude check relative
/// to `scale_a`/`scale_b` (the magnitude that counts as "full signal").
pub(crate) fn cross_phase(
    za: &[Complex64],
    zb: &[Complex64],
    scale_a: &[f64],
    scale_b: &[f64],
) -> Result<Vec<f64>> {
    let mut raw = Vec::with_capacity(za.len());
    for i in 0..za.len() {
        for (z, s) in [(za[i], scale_a[i]), (zb[i], scale_b[i])] {
            if z.norm() < DEGENERATE_COMPONENT_THRESHOLD * s {
                return Err(Error::DegenerateComponent { index: i, magnitude: z.norm() });
            }
        }
        raw.push((za[i] * zb[i].conj()).arg());
    }
    unwrap(&raw)
}

fn check_pair(a: &PathTrace, b: &PathTrace) -> Result<()> {
    if a.times != b.times {
        return Err(Error::TraceMismatch("time grids differ".into()));
    }
    if a.is_empty() {
        return Err(Error::TraceMismatch("empty traces".into()));
    }
    let (sa, sb) = (a.complex_state(0), b.complex_state(0));
    if (sa.u1 - sb.u1).norm() > 1e-12 || (sa.u2 - sb.u2).norm() > 1e-12 {
        return Err(Error::TraceMismatch("initial states differ".into()));
    }
    Ok(())
}

/// Interferometric phase difference on the second sublattice.
pub fn delta_phi(a: &PathTrace, b: &PathTrace) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let za: Vec<Complex64> = (0..a.len()).map(|i| a.second_component(i)).collect();
    let zb: Vec<Complex64> = (0..b.len()).map(|i| b.second_component(i)).collect();
    let ones = vec![1.0; a.len()];
    cross_phase(&za, &zb, &ones, &ones)
}

/// Same comparison on the first sublattice. Its eigenvector counterpart
/// carries `e^{-iθ}`, so this differs from [`delta_phi`] by `θ(k_B) - θ(k_A)`.
pub fn delta_phi_first_sublattice(a: &PathTrace, b: &PathTrace) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    let za: Vec<Complex64> = (0..a.len()).map(|i| a.first_component(i)).collect();
    let zb: Vec<Complex64> = (0..b.len()).map(|i| b.first_component(i)).collect();
    let ones = vec![1.0; a.len()];
    cross_phase(&za, &zb, &ones, &ones)
}

/// `-∫₀ᵗ E_band(k(s)) ds` by the composite trapezoid rule on the schedule grid.
pub fn dynamical_phase_series(params: &ModelParams, schedule: &KSchedule, band: Band) -> Vec<f64> {
    let energy = |t: f64| band.sign() * bloch_vector(params, schedule.k_unchecked(t)).norm();
    let mut out = Vec::with_capacity(schedule.steps() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    let mut e_prev = energy(0.0);
    for i in 1..=schedule.steps() {
        let (t0, t1) = (schedule.time(i - 1), schedule.time(i));
        let e = energy(t1);
        acc += 0.5 * (t1 - t0) * (e_prev + e);
        out.push(-acc);
        e_prev = e;
    }
    out
}

/// Upper-band dynamical phase at an arbitrary `t` in `[0, T]`.
pub fn dynamical_phase(params: &ModelParams, schedule: &KSchedule, t: f64) -> Result<f64> {
    schedule.k_of_t(t)?;
    let energy = |s: f64| bloch_vector(params, schedule.k_unchecked(s)).norm();
    let dt = schedule.dt();
    let full = ((t / dt).floor() as usize).min(schedule.steps());
    let mut acc = 0.0;
    for i in 0..full {
        let (t0, t1) = (schedule.time(i), schedule.time(i + 1));
        acc += 0.5 * (t1 - t0) * (energy(t0) + energy(t1));
    }
    let t_last = schedule.time(full);
    if t > t_last {
        acc += 0.5 * (t - t_last) * (energy(t_last) + energy(t));
    }
    Ok(-acc)
}

/// Ideal adiabatic `Δφ(t)` on the half paths: `θ` continued from `θ(0) = 0`
/// to `k_A(t)`.
pub fn adiabatic_prediction(params: &ModelParams, schedule: &KSchedule, t: f64) -> Result<f64> {
    if !matches!(schedule.variant(), PathVariant::HalfA | PathVariant::HalfB) {
        return Err(Error::InvalidSchedule("adiabatic prediction needs half-path schedules".into()));
    }
    let k_a = schedule.with_variant(PathVariant::HalfA).k_of_t(t)?;
    let n = ((8192.0 * k_a / std::f64::consts::PI).ceil() as usize).max(64);
    theta_unwrapped(params, k_a, n)
}

/// Adiabatic `Δφ` at every sample of a path pair:
/// `½[θ(k_A) - θ(k_A(0))] - ½[θ(k_B) - θ(k_B(0))]` with `θ` continued along
/// each path. Reduces to `θ(k_A)` on half paths.
pub fn adiabatic_prediction_series(params: &ModelParams, a: &PathTrace, b: &PathTrace) -> Result<Vec<f64>> {
    let ta = continuous_arg(params, &a.k_values)?;
    let tb = continuous_arg(params, &b.k_values)?;
    Ok(ta
        .iter()
        .zip(&tb)
        .map(|(x, y)| 0.5 * (x - ta[0]) - 0.5 * (y - tb[0]))
        .collect())
}

/// Everything recorded for one path pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    pub times: Vec<f64>,
    pub delta_phi: Vec<f64>,
    pub phi_dyn_a: Vec<f64>,
    pub phi_dyn_b: Vec<f64>,
    pub fidelity_a: Vec<f64>,
    pub fidelity_b: Vec<f64>,
}

impl PhaseTrace {
    pub fn final_delta_phi(&self) -> f64 {
        *self.delta_phi.last().expect("non-empty trace")
    }

    pub fn min_fidelity(&self) -> f64 {
        self.fidelity_a
            .iter()
            .chain(&self.fidelity_b)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_dynamical_mismatch(&self) -> f64 {
        self.phi_dyn_a
            .iter()
            .zip(&self.phi_dyn_b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn phase_trace(params: &ModelParams, a: &PathTrace, b: &PathTrace) -> Result<PhaseTrace> {
    let delta_phi = delta_phi(a, b)?;
    Ok(PhaseTrace {
        times: a.times.clone(),
        delta_phi,
        phi_dyn_a: dynamical_phase_series(params, &a.schedule, a.band),
        phi_dyn_b: dynamical_phase_series(params, &b.schedule, b.band),
        fidelity_a: instantaneous_fidelity(a, params, &a.schedule)?,
        fidelity_b: instantaneous_fidelity(b, params, &b.schedule)?,
    })
}
