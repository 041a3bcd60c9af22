//! Carrier-frequency emulation of the four-cavity experiment.
//!
//! Each cavity is a real oscillator at `ω0 = 2π f0` with amplitude damping
//! `γ`, coupled through stiffness terms `2 ω0 κ(t)`:
//!
//! ```text
//! p̈_j + γ ṗ_j + ω0² p_j + 2 ω0 Σ_l κ_jl(t) p_l = 0,   κ(t) = g0 · realify(q(k(t)))
//! ```
//!
//! Writing `p = Re[a e^{-iω0 t}]`, the slowly varying envelope obeys
//! `i ȧ = κ a - i(γ/2) a`, which is the rotating-frame model of
//! [`crate::evolve`] up to a uniform decay. Envelopes are recovered by I/Q
//! demodulation and compared across the two mirror paths.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::embed::realify;
use crate::error::{Error, Result};
use crate::evolve::{evolve_pair_with, uniform_preparation_phase, propagate, PairSetup, PathTrace, Representation};
use crate::model::{bloch_vector, KSchedule, ModelParams, PathVariant};
use crate::output::sci9;
use crate::phase::{cross_phase, delta_phi};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    /// Carrier frequency, Hz.
    pub f0: f64,
    /// Velocity damping `γ` in `p̈ + γṗ`, 1/s; envelopes decay as `e^(-γt/2)`.
    pub gamma: f64,
    /// Coupling scale, rad/s.
    pub g0: f64,
    /// Hz.
    pub sample_rate: f64,
    /// Seconds.
    pub total_time: f64,
    /// Total support of the demodulation low-pass, in carrier cycles.
    pub demod_cycles: usize,
    /// RK4 substeps per output sample.
    pub substeps: usize,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            f0: 1955.0,
            gamma: 0.0,
            g0: TAU * 40.0,
            sample_rate: 80_000.0,
            total_time: 0.5,
            demod_cycles: 8,
            substeps: 16,
        }
    }
}

impl CavityConfig {
    pub fn omega0(&self) -> f64 {
        TAU * self.f0
    }

    /// Quality factor `ω0 / γ` (infinite when lossless).
    pub fn quality_factor(&self) -> f64 {
        self.omega0() / self.gamma
    }

    pub fn n_samples(&self) -> usize {
        (self.total_time * self.sample_rate).round() as usize + 1
    }

    /// Largest admissible `g0 (|w| + |v| + |J|)`, rad/s.
    pub fn coupling_limit(&self) -> f64 {
        self.omega0() * PI / 10.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCavityConfig(msg));
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return bad(format!("carrier frequency must be positive, got {}", self.f0));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("damping must be non-negative, got {}", self.gamma));
        }
        if !(self.g0.is_finite() && self.g0 >= 0.0) {
            return bad(format!("coupling scale must be non-negative, got {}", self.g0));
        }
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return bad(format!("total time must be positive, got {}", self.total_time));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate >= 40.0 * self.f0) {
            return bad(format!(
                "sample rate {} Hz below 40 x carrier ({} Hz)",
                self.sample_rate,
                40.0 * self.f0
            ));
        }
        if self.demod_cycles == 0 || !self.demod_cycles.is_multiple_of(2) {
            return bad(format!("demodulation window must be a positive even cycle count, got {}", self.demod_cycles));
        }
        if self.substeps == 0 {
            return bad("substeps must be positive".into());
        }
        if (self.demod_cycles as f64) / self.f0 >= self.total_time {
            return bad("demodulation window longer than the record".into());
        }
        Ok(())
    }

    /// Rotating-wave guard for the given couplings.
    pub fn check_rwa(&self, params: &ModelParams) -> Result<()> {
        let coupling = self.g0 * (params.w().abs() + params.v().abs() + params.j().abs());
        let limit = self.coupling_limit();
        if coupling > limit {
            return Err(Error::RwaViolated { coupling, limit });
        }
        Ok(())
    }
}

/// Sampled cavity signals for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureTrace {
    pub times: Vec<f64>,
    pub pressure: Vec<[f64; 4]>,
    pub velocity: Vec<[f64; 4]>,
}

impl PressureTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `½ Σ (ṗ² + ω0² p²)` at each sample.
    pub fn energy(&self, omega0: f64) -> Vec<f64> {
        self.pressure
            .iter()
            .zip(&self.velocity)
            .map(|(p, v)| 0.5 * (0..4).map(|j| v[j] * v[j] + omega0 * omega0 * p[j] * p[j]).sum::<f64>())
            .collect()
    }

    /// CSV with columns `t,p1,p2,p3,p4`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,p1,p2,p3,p4")?;
        for (t, p) in self.times.iter().zip(&self.pressure) {
            writeln!(out, "{},{},{},{},{}", sci9(*t), sci9(p[0]), sci9(p[1]), sci9(p[2]), sci9(p[3]))?;
        }
        Ok(())
    }
}

/// Integrates the damped, coupled cavities with classical RK4.
///
/// `coupling(t)` returns `κ(t)` in rad/s. Output is sampled every
/// `1/sample_rate`, with `substeps` RK4 steps in between.
pub fn integrate_cavities<F>(config: &CavityConfig, coupling: F, p0: [f64; 4], v0: [f64; 4]) -> Result<PressureTrace>
where
    F: Fn(f64) -> Matrix4<f64>,
{
    config.validate()?;
    let n = config.n_samples();
    let dt = 1.0 / config.sample_rate;
    let h = dt / config.substeps as f64;
    let w0 = config.omega0();
    let gamma = config.gamma;

    let accel = |t: f64, p: &Vector4<f64>, v: &Vector4<f64>| -> Vector4<f64> {
        -v * gamma - p * (w0 * w0) - coupling(t) * p * (2.0 * w0)
    };

    let mut p = Vector4::from(p0);
    let mut v = Vector4::from(v0);
    let mut times = Vec::with_capacity(n);
    let mut pressure = Vec::with_capacity(n);
    let mut velocity = Vec::with_capacity(n);
    times.push(0.0);
    pressure.push(p.into());
    velocity.push(v.into());

    for i in 1..n {
        let t_start = (i - 1) as f64 * dt;
        for s in 0..config.substeps {
            let t = t_start + s as f64 * h;
            let k1p = v;
            let k1v = accel(t, &p, &v);
            let k2p = v + k1v * (0.5 * h);
            let k2v = accel(t + 0.5 * h, &(p + k1p * (0.5 * h)), &k2p);
            let k3p = v + k2v * (0.5 * h);
            let k3v = accel(t + 0.5 * h, &(p + k2p * (0.5 * h)), &k3p);
            let k4p = v + k3v * h;
            let k4v = accel(t + h, &(p + k3p * h), &k4p);
            p += (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        }
        times.push(i as f64 * dt);
        pressure.push(p.into());
        velocity.push(v.into());
    }
    Ok(PressureTrace { times, pressure, velocity })
}

/// Initial displacement of every cavity: the real `[1 1 1 1]ᵀ / 2` excitation.
pub const INITIAL_PRESSURE: [f64; 4] = [0.5; 4];

/// Simulates both mirror paths starting from [`INITIAL_PRESSURE`] at rest.
pub fn simulate_lab(params: &ModelParams, config: &CavityConfig) -> Result<(PressureTrace, PressureTrace)> {
    config.validate()?;
    config.check_rwa(params)?;
    params.require_positive_start()?;
    let run = |variant: PathVariant| {
        let schedule = KSchedule::new(variant, config.total_time, 1)?;
        let coupling = |t: f64| {
            let k = schedule.k_unchecked(t.clamp(0.0, config.total_time));
            realify(&bloch_vector(params, k)).0 * config.g0
        };
        integrate_cavities(config, coupling, INITIAL_PRESSURE, [0.0; 4])
    };
    Ok((run(PathVariant::HalfA)?, run(PathVariant::HalfB)?))
}

/// Complex envelopes, one sample per carrier cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeTrace {
    pub times: Vec<f64>,
    pub envelopes: Vec<[Complex64; 4]>,
}

impl EnvelopeTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Two cascaded moving averages of `cycles / 2` carrier periods each,
/// i.e. a triangular window of total support `cycles` periods.
pub fn triangular_average(y: &[Complex64], h: f64, centre: f64, half_width: f64) -> Complex64 {
    let last = y.len() - 1;
    let sample = |s: f64| -> Complex64 {
        let x = (s / h).clamp(0.0, last as f64);
        let i = (x.floor() as usize).min(last.saturating_sub(1));
        let frac = x - i as f64;
        y[i] + (y[(i + 1).min(last)] - y[i]) * frac
    };
    let kernel = |s: f64| ((half_width - (s - centre).abs()) / (half_width * half_width)).max(0.0);

    let lo = centre - half_width;
    let hi = centre + half_width;
    let mut nodes = vec![lo, centre, hi];
    let first = (lo / h).ceil().max(0.0) as usize;
    let mut i = first;
    while (i as f64) * h < hi && i <= last {
        let t = i as f64 * h;
        if t > lo {
            nodes.push(t);
        }
        i += 1;
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    // both factors are linear between consecutive nodes
    let mut acc = Complex64::new(0.0, 0.0);
    for pair in nodes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (fa, fb) = (sample(a), sample(b));
        let (ga, gb) = (kernel(a), kernel(b));
        acc += (fa * (2.0 * ga + gb) + fb * (ga + 2.0 * gb)) * ((b - a) / 6.0);
    }
    acc
}

/// I/Q demodulation `a(t) = 2 LP[p(t) e^{iω0 t}]`.
///
/// LP is a moving average over `demod_cycles / 2` carrier periods applied
/// twice, evaluated exactly on the linearly interpolated mixer output. Window
/// centres fall once per carrier cycle with the full support inside the record.
pub fn demodulate(trace: &PressureTrace, config: &CavityConfig) -> EnvelopeTrace {
    let w0 = config.omega0();
    let h = 1.0 / config.sample_rate;
    let half_width = 0.5 * config.demod_cycles as f64 / config.f0;
    let period = 1.0 / config.f0;
    let t_end = *trace.times.last().unwrap_or(&0.0);

    let mut centres = Vec::new();
    let mut m = 0usize;
    loop {
        let c = half_width + m as f64 * period;
        if c + half_width > t_end + 1e-12 * t_end.max(1.0) {
            break;
        }
        centres.push(c);
        m += 1;
    }

    let mut envelopes = vec![[Complex64::new(0.0, 0.0); 4]; centres.len()];
    for j in 0..4 {
        let mixed: Vec<Complex64> = trace
            .times
            .iter()
            .zip(&trace.pressure)
            .map(|(t, p)| Complex64::from_polar(p[j], w0 * t))
            .collect();
        for (env, &c) in envelopes.iter_mut().zip(&centres) {
            env[j] = triangular_average(&mixed, h, c, half_width) * 2.0;
        }
    }
    EnvelopeTrace { times: centres, envelopes }
}

/// Lab-frame phase difference between the two paths.
#[derive(Debug, Clone, PartialEq)]
pub struct LabPhaseTrace {
    pub times: Vec<f64>,
    pub delta_phi: Vec<f64>,
}

/// `unwrap(arg(z_A conj z_B))` with `z = a3 + i a4` per path.
///
/// The degenerate-amplitude check is relative to the envelope norm, so
/// uniform decay does not trip it.
pub fn lab_delta_phi(env_a: &EnvelopeTrace, env_b: &EnvelopeTrace) -> Result<LabPhaseTrace> {
    if env_a.times != env_b.times {
        return Err(Error::TraceMismatch("envelope time bases differ".into()));
    }
    let readout = |e: &EnvelopeTrace| -> (Vec<Complex64>, Vec<f64>) {
        e.envelopes
            .iter()
            .map(|a| {
                let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (a[2] + Complex64::i() * a[3], norm)
            })
            .unzip()
    };
    let (za, sa) = readout(env_a);
    let (zb, sb) = readout(env_b);
    Ok(LabPhaseTrace { times: env_a.times.clone(), delta_phi: cross_phase(&za, &zb, &sa, &sb)? })
}

/// Lab-frame and rotating-frame phases on the demodulated time base.
#[derive(Debug, Clone, PartialEq)]
pub struct LabComparison {
    pub times: Vec<f64>,
    pub delta_phi_lab: Vec<f64>,
    pub delta_phi_rot: Vec<f64>,
    pub abs_error: Vec<f64>,
}

impl LabComparison {
    pub fn final_lab(&self) -> f64 {
        *self.delta_phi_lab.last().expect("non-empty")
    }

    pub fn final_rot(&self) -> f64 {
        *self.delta_phi_rot.last().expect("non-empty")
    }

    pub fn final_error(&self) -> f64 {
        *self.abs_error.last().expect("non-empty")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,delta_phi_lab,delta_phi_rot,abs_error")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                sci9(self.times[i]),
                sci9(self.delta_phi_lab[i]),
                sci9(self.delta_phi_rot[i]),
                sci9(self.abs_error[i])
            )?;
        }
        Ok(())
    }
}

fn rotating_pair(params: &ModelParams, config: &CavityConfig) -> Result<(PathTrace, PathTrace)> {
    let setup = PairSetup {
        representation: Representation::Real4,
        global_phase: uniform_preparation_phase(),
        ..PairSetup::default()
    };
    evolve_pair_with(params, config.g0 * config.total_time, config.n_samples() - 1, &setup)
}

fn interpolate(values: &[f64], dt: f64, t: f64) -> f64 {
    let steps = values.len() - 1;
    let x = (t / dt).clamp(0.0, steps as f64);
    let i = (x.floor() as usize).min(steps - 1);
    values[i] + (values[i + 1] - values[i]) * (x - i as f64)
}

/// Rotating-frame `Δφ` for the same couplings, evaluated at `times` (seconds).
pub fn rotating_reference(params: &ModelParams, config: &CavityConfig, times: &[f64]) -> Result<Vec<f64>> {
    let (a, b) = rotating_pair(params, config)?;
    let dphi = delta_phi(&a, &b)?;
    let dt = config.total_time / (dphi.len() - 1) as f64;
    Ok(times.iter().map(|&t| interpolate(&dphi, dt, t)).collect())
}

// A normal mode of coupling eigenvalue λ oscillates at ω(λ) = sqrt(ω0² + 2ω0λ),
// so its envelope turns at f(λ) = ω(λ) - ω0, and under slow modulation its
// amplitude follows the action invariant, ∝ ω(λ)^(-1/2). κ has eigenvalues ±E
// with projectors (1 ± κ/E)/2, which turns both into matrix functions of κ.
struct Dispersion<'a> {
    params: &'a ModelParams,
    config: &'a CavityConfig,
}

impl Dispersion<'_> {
    fn omega(&self, l: f64) -> f64 {
        let w0 = self.config.omega0();
        (w0 * w0 + 2.0 * w0 * l).sqrt()
    }

    fn split(&self, k: f64) -> (Matrix4<f64>, f64) {
        let d = bloch_vector(self.params, k);
        (realify(&d).0 * self.config.g0, self.config.g0 * d.norm())
    }

    fn generator(&self, k: f64) -> Matrix4<Complex64> {
        let w0 = self.config.omega0();
        let (kappa, e) = self.split(k);
        let f = |l: f64| self.omega(l) - w0;
        let s = 0.5 * (f(e) + f(-e));
        let r = if e > 1e-12 * w0 { (f(e) - f(-e)) / (2.0 * e) } else { 1.0 };
        (kappa * r + Matrix4::identity() * s).map(|x| Complex64::new(x, 0.0))
    }

    fn amplitude(&self, k0: f64, k: f64) -> Matrix4<f64> {
        let (kappa, e) = self.split(k);
        let (_, e0) = self.split(k0);
        let up = (self.omega(e0) / self.omega(e)).sqrt();
        let down = (self.omega(-e0) / self.omega(-e)).sqrt();
        (Matrix4::identity() * (up + down) + kappa * ((up - down) / e)) * 0.5
    }
}

fn reference_path(params: &ModelParams, config: &CavityConfig, variant: PathVariant, centres: &[f64]) -> Result<EnvelopeTrace> {
    let schedule = KSchedule::new(variant, config.total_time, 1)?;
    let k_at = |t: f64| schedule.k_unchecked(t.clamp(0.0, config.total_time));
    let model = Dispersion { params, config };
    let steps = config.n_samples() - 1;
    let x0 = Vector4::from_element(Complex64::new(0.5, 0.0));
    let run = propagate(|t| model.generator(k_at(t)), &x0, config.total_time, steps)?;
    let corrected: Vec<Vector4<Complex64>> = run
        .states
        .iter()
        .zip(&run.times)
        .map(|(x, &t)| {
            let a = model.amplitude(k_at(0.0), k_at(t)).map(|v| Complex64::new(v * (-0.5 * config.gamma * t).exp(), 0.0));
            a * x
        })
        .collect();

    let h = config.total_time / steps as f64;
    let half_width = 0.5 * config.demod_cycles as f64 / config.f0;
    let mut envelopes = vec![[Complex64::new(0.0, 0.0); 4]; centres.len()];
    for j in 0..4 {
        let x: Vec<Complex64> = corrected.iter().map(|s| s[j]).collect();
        for (env, &c) in envelopes.iter_mut().zip(centres) {
            env[j] = triangular_average(&x, h, c, half_width);
        }
    }
    Ok(EnvelopeTrace { times: centres.to_vec(), envelopes })
}

/// Envelope prediction for both paths from adiabatically followed normal
/// modes (exact carrier dispersion, action-invariant amplitudes, uniform
/// decay), passed through the demodulator's low-pass at `centres`. Reduces to
/// the rotating-frame model as `g0 / ω0 -> 0`.
pub fn reference_envelopes(params: &ModelParams, config: &CavityConfig, centres: &[f64]) -> Result<(EnvelopeTrace, EnvelopeTrace)> {
    config.validate()?;
    Ok((
        reference_path(params, config, PathVariant::HalfA, centres)?,
        reference_path(params, config, PathVariant::HalfB, centres)?,
    ))
}

/// Worst-case disagreement between two envelope traces on one time base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeDeviation {
    /// `max |arg(z conj z_ref)|` of the readout `z = a3 + i a4`, rad.
    pub readout_phase: f64,
    /// `max ||z| / |z_ref| - 1|`.
    pub readout_magnitude: f64,
    /// `max ||a - a_ref|| / ||a_ref||` over the four cavities.
    pub vector_relative: f64,
}

pub fn envelope_deviation(env: &EnvelopeTrace, reference: &EnvelopeTrace) -> Result<EnvelopeDeviation> {
    if env.times != reference.times {
        return Err(Error::TraceMismatch("envelope time bases differ".into()));
    }
    let mut dev = EnvelopeDeviation { readout_phase: 0.0, readout_magnitude: 0.0, vector_relative: 0.0 };
    for (a, r) in env.envelopes.iter().zip(&reference.envelopes) {
        let z = a[2] + Complex64::i() * a[3];
        let zr = r[2] + Complex64::i() * r[3];
        dev.readout_phase = dev.readout_phase.max((z * zr.conj()).arg().abs());
        dev.readout_magnitude = dev.readout_magnitude.max((z.norm() / zr.norm() - 1.0).abs());
        let diff: f64 = (0..4).map(|j| (a[j] - r[j]).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        dev.vector_relative = dev.vector_relative.max(diff / norm);
    }
    Ok(dev)
}

/// Full lab pipeline output.
#[derive(Debug, Clone, PartialEq)]
pub struct LabRun {
    pub comparison: LabComparison,
    pub envelopes: (EnvelopeTrace, EnvelopeTrace),
    pub pressure: (PressureTrace, PressureTrace),
}

/// Simulate, demodulate and compare with the rotating frame.
pub fn run_lab(params: &ModelParams, config: &CavityConfig) -> Result<LabRun> {
    let (pa, pb) = simulate_lab(params, config)?;
    let ea = demodulate(&pa, config);
    let eb = demodulate(&pb, config);
    let lab = lab_delta_phi(&ea, &eb)?;
    let rot = rotating_reference(params, config, &lab.times)?;
    let abs_error = lab.delta_phi.iter().zip(&rot).map(|(a, b)| (a - b).abs()).collect();
    Ok(LabRun {
        comparison: LabComparison { times: lab.times, delta_phi_lab: lab.delta_phi, delta_phi_rot: rot, abs_error },
        envelopes: (ea, eb),
        pressure: (pa, pb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(config: &CavityConfig, f: impl Fn(f64) -> f64) -> PressureTrace {
        let n = config.n_samples();
        let times: Vec<f64> = (0..n).map(|i| i as f64 / config.sample_rate).collect();
        let pressure = times.iter().map(|&t| [f(t); 4]).collect();
        PressureTrace { velocity: vec![[0.0; 4]; n], times, pressure }
    }

    #[test]
    fn config_validation() {
        let c = CavityConfig::default();
        assert!(c.validate().is_ok());
        assert!(CavityConfig { sample_rate: 40_000.0, ..c }.validate().is_err());
        assert!(CavityConfig { gamma: -1.0, ..c }.validate().is_err());
        assert!(CavityConfig { demod_cycles: 0, ..c }.validate().is_err());
        assert!(CavityConfig { demod_cycles: 7, ..c }.validate().is_err());
        let p = ModelParams::new(1.0, 5.0, 0.0).unwrap();
        assert!(c.check_rwa(&p).is_ok());
        let hot = CavityConfig { g0: TAU * 300.0, ..c };
        assert!(matches!(hot.check_rwa(&p), Err(Error::RwaViolated { .. })));
        assert!(matches!(simulate_lab(&p, &hot), Err(Error::RwaViolated { .. })));
        assert!((CavityConfig { gamma: 10.0, ..c }.quality_factor() - c.omega0() / 10.0).abs() < 1e-12);
    }

    #[test]
    fn lossless_single_cavity_is_cosine() {
        let c = CavityConfig::default();
        let trace = integrate_cavities(&c, |_| Matrix4::zeros(), [1.0, 0.0, 0.0, 0.0], [0.0; 4]).unwrap();
        assert_eq!(trace.len(), 40_001);
        let w0 = c.omega0();
        let err = trace
            .times
            .iter()
            .zip(&trace.pressure)
            .map(|(t, p)| (p[0] - (w0 * t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
        let first = (trace.pressure[1][0] - (w0 * trace.times[1]).cos()).abs();
        assert!(first <= 1e-8, "{first}");
    }

    #[test]
    fn damped_energy_never_increases() {
        let c = CavityConfig { gamma: 30.0, ..CavityConfig::default() };
        let trace = integrate_cavities(&c, |_| Matrix4::zeros(), [0.5; 4], [0.0; 4]).unwrap();
        let e = trace.energy(c.omega0());
        for w in e.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        assert!(e.last().unwrap() < &(e[0] * 1e-3));
    }

    fn frozen_energy(c: &CavityConfig, kappa: &Matrix4<f64>, trace: &PressureTrace) -> Vec<f64> {
        let w0 = c.omega0();
        let stiffness = Matrix4::identity() * (w0 * w0) + kappa * (2.0 * w0);
        trace
            .pressure
            .iter()
            .zip(&trace.velocity)
            .map(|(p, v)| {
                let (p, v) = (Vector4::from(*p), Vector4::from(*v));
                0.5 * (v.dot(&v) + p.dot(&(stiffness * p)))
            })
            .collect()
    }

    #[test]
    fn frozen_coupling_energy() {
        let params = ModelParams::new(1.0, 4.0, 1.0).unwrap();
        let base = CavityConfig { total_time: 0.05, ..CavityConfig::default() };
        let kappa = realify(&bloch_vector(&params, 0.7)).0 * base.g0;
        for gamma in [0.0, 5.0, base.omega0() / 50.0] {
            let c = CavityConfig { gamma, ..base };
            let trace = integrate_cavities(&c, |_| kappa, INITIAL_PRESSURE, [0.0; 4]).unwrap();
            let e = frozen_energy(&c, &kappa, &trace);
            if gamma == 0.0 {
                let drift = e.iter().map(|x| (x / e[0] - 1.0).abs()).fold(0.0, f64::max);
                assert!(drift < 1e-8, "{drift}");
            } else {
                for w in e.windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-12));
                }
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn envelopes_are_passive(k in -PI..PI, gamma in 0.0..245.0f64, v in 0.1..5.0f64) {
            let params = ModelParams::new(1.0, v, 0.0).unwrap();
            let c = CavityConfig { gamma, total_time: 0.04, ..CavityConfig::default() };
            let kappa = realify(&bloch_vector(&params, k)).0 * c.g0;
            let trace = integrate_cavities(&c, |_| kappa, INITIAL_PRESSURE, [0.0; 4]).unwrap();
            let env = demodulate(&trace, &c);
            let initial = INITIAL_PRESSURE.iter().map(|x| x * x).sum::<f64>().sqrt();
            for a in &env.envelopes {
                let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                proptest::prop_assert!(norm <= initial * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn demodulate_pure_carrier() {
        let c = CavityConfig::default();
        let w0 = c.omega0();
        let env = demodulate(&synthetic(&c, |t| (w0 * t).cos()), &c);
        assert!(env.len() > 900);
        for a in &env.envelopes {
            assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn demodulate_phase_convention() {
        let c = CavityConfig::default();
        let w0 = c.omega0();
        let env = demodulate(&synthetic(&c, |t| (w0 * t + PI / 2.0).cos()), &c);
        for a in &env.envelopes {
            assert!((a[0] - Complex64::new(0.0, -1.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn demodulate_slow_am() {
        let big_omega = TAU * 10.0;
        let c = CavityConfig::default();
        let w0 = c.omega0();
        let env = demodulate(&synthetic(&c, |t| (1.0 + 0.5 * (big_omega * t).cos()) * (w0 * t).cos()), &c);

        // triangular window: the tone is scaled by sinc²(Ωτ/4)
        let x = big_omega * (c.demod_cycles as f64 / c.f0) / 4.0;
        let gain = (x.sin() / x).powi(2);
        for (t, a) in env.times.iter().zip(&env.envelopes) {
            let raw = 1.0 + 0.5 * (big_omega * t).cos();
            let filtered = 1.0 + 0.5 * gain * (big_omega * t).cos();
            assert!((a[0] - Complex64::new(raw, 0.0)).norm() < 1e-3);
            assert!((a[0] - Complex64::new(filtered, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn envelope_times_fit_record() {
        let c = CavityConfig::default();
        let env = demodulate(&synthetic(&c, |_| 0.0), &c);
        let half = 0.5 * c.demod_cycles as f64 / c.f0;
        assert!((env.times[0] - half).abs() < 1e-15);
        assert!(env.times.last().unwrap() + half <= c.total_time + 1e-12);
        for w in env.times.windows(2) {
            assert!((w[1] - w[0] - 1.0 / c.f0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export_layout() {
        let c = CavityConfig { total_time: 0.01, ..CavityConfig::default() };
        let trace = integrate_cavities(&c, |_| Matrix4::zeros(), [0.5; 4], [0.0; 4]).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,p1,p2,p3,p4"));
        assert_eq!(lines.next(), Some("0.00000000e0,5.00000000e-1,5.00000000e-1,5.00000000e-1,5.00000000e-1"));
        assert_eq!(text.lines().count(), trace.len() + 1);
    }
}
