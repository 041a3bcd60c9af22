//! Time-dependent Schrödinger propagation along momentum–time paths.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen, Vector2, Vector4};
use num_complex::Complex64;

use crate::embed::{realify, unvec_amplitudes, vec_amplitudes, ComplexState2};
use crate::error::{Error, Result};
use crate::model::{bloch_hamiltonian, bloch_vector, eigensystem, Band, KSchedule, ModelParams, PathVariant};

/// Relative Hermiticity tolerance applied to every sampled generator.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// Global phase that turns the chiral-gauge `u_+(0)` into the real
/// preparation `[1 1 1 1]ᵀ / 2`.
pub fn uniform_preparation_phase() -> Complex64 {
    Complex64::from_polar(1.0, FRAC_PI_4)
}

/// Sampled solution of `i dψ/dt = H(t) ψ`.
#[derive(Debug, Clone)]
pub struct Propagation<const D: usize> {
    pub times: Vec<f64>,
    pub states: Vec<SVector<Complex64, D>>,
}

/// Integrates `i dψ/dt = H(t) ψ` on `steps` equal intervals of `[0, T]`.
///
/// Each step applies `exp(-i H(t_mid) dt)` exactly (closed form for 2x2,
/// eigendecomposition otherwise), so the update is unitary to rounding.
pub fn propagate<const D: usize, F>(
    generator: F,
    psi0: &SVector<Complex64, D>,
    total_time: f64,
    steps: usize,
) -> Result<Propagation<D>>
where
    F: Fn(f64) -> SMatrix<Complex64, D, D>,
{
    if steps == 0 {
        return Err(Error::InvalidSchedule("steps must be positive".into()));
    }
    if !total_time.is_finite() {
        return Err(Error::InvalidSchedule(format!("total time must be finite, got {total_time}")));
    }
    let time = |i: usize| {
        if i == steps {
            total_time
        } else {
            total_time * i as f64 / steps as f64
        }
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(*psi0);

    let mut psi = *psi0;
    for i in 0..steps {
        let (t0, t1) = (time(i), time(i + 1));
        let t_mid = 0.5 * (t0 + t1);
        let h = generator(t_mid);
        check_hermitian(&h, t_mid)?;
        psi = unitary_step(&h, t1 - t0) * psi;
        times.push(t1);
        states.push(psi);
    }
    Ok(Propagation { times, states })
}

fn check_hermitian<const D: usize>(h: &SMatrix<Complex64, D, D>, t: f64) -> Result<()> {
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut deviation: f64 = 0.0;
    for r in 0..D {
        for c in r..D {
            deviation = deviation.max((h[(r, c)] - h[(c, r)].conj()).norm());
        }
    }
    if deviation > HERMITICITY_TOLERANCE * scale {
        return Err(Error::NonHermitianGenerator { t, deviation });
    }
    Ok(())
}

/// `exp(-i H dt)` for Hermitian `H`.
pub fn unitary_step<const D: usize>(h: &SMatrix<Complex64, D, D>, dt: f64) -> SMatrix<Complex64, D, D> {
    if D == 2 {
        return unitary_step_2x2(h, dt);
    }
    let eig = SymmetricEigen::new(DMatrix::from_column_slice(D, D, h.as_slice()));
    let v = eig.eigenvectors;
    let mut scaled = v.clone();
    for (mut col, e) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= Complex64::from_polar(1.0, -e * dt);
    }
    let u = scaled * v.adjoint();
    SMatrix::from_column_slice(u.as_slice())
}

// H = h0·I + K with K traceless; exp(-iH dt) = e^{-i h0 dt} (cos(r dt) I - i sin(r dt)/r K).
fn unitary_step_2x2<const D: usize>(h: &SMatrix<Complex64, D, D>, dt: f64) -> SMatrix<Complex64, D, D> {
    let h0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let hz = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let off = h[(1, 0)];
    let r = (hz * hz + off.norm_sqr()).sqrt();
    let (s, c) = (r * dt).sin_cos();
    let sinc = if r * dt == 0.0 { dt } else { s / r };
    let global = Complex64::from_polar(1.0, -h0 * dt);
    let mi = Complex64::new(0.0, -sinc);
    let u00 = global * (c + mi * hz);
    let u11 = global * (c - mi * hz);
    let u10 = global * mi * off;
    let u01 = global * mi * off.conj();
    SMatrix::from_fn(|r, c| match (r, c) {
        (0, 0) => u00,
        (0, 1) => u01,
        (1, 0) => u10,
        _ => u11,
    })
}

/// Which state space the dynamics run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    /// Complex 2-vectors under the Bloch Hamiltonian.
    #[default]
    Complex2,
    /// Complex-amplitude 4-vectors under the realified Hamiltonian.
    Real4,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceStates {
    Complex2(Vec<Vector2<Complex64>>),
    Real4(Vec<Vector4<Complex64>>),
}

/// States sampled along one momentum path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub schedule: KSchedule,
    pub band: Band,
    pub times: Vec<f64>,
    pub k_values: Vec<f64>,
    pub states: TraceStates,
}

impl PathTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn representation(&self) -> Representation {
        match self.states {
            TraceStates::Complex2(_) => Representation::Complex2,
            TraceStates::Real4(_) => Representation::Real4,
        }
    }

    /// Sample `i` as a complex two-level state (unvec'd for the real form).
    pub fn complex_state(&self, i: usize) -> ComplexState2 {
        match &self.states {
            TraceStates::Complex2(s) => ComplexState2::from_vector(&s[i]),
            TraceStates::Real4(s) => unvec_amplitudes(&s[i]),
        }
    }

    /// Second-sublattice amplitude used by the interferometric readout.
    pub fn second_component(&self, i: usize) -> Complex64 {
        match &self.states {
            TraceStates::Complex2(s) => s[i][1],
            TraceStates::Real4(s) => s[i][2] + Complex64::i() * s[i][3],
        }
    }

    pub fn first_component(&self, i: usize) -> Complex64 {
        match &self.states {
            TraceStates::Complex2(s) => s[i][0],
            TraceStates::Real4(s) => s[i][0] + Complex64::i() * s[i][1],
        }
    }

    /// Norm of the stored state vector.
    pub fn norm(&self, i: usize) -> f64 {
        match &self.states {
            TraceStates::Complex2(s) => s[i].norm(),
            TraceStates::Real4(s) => s[i].norm(),
        }
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norm(0);
        (0..self.len()).map(|i| (self.norm(i) - n0).abs()).fold(0.0, f64::max)
    }
}

/// Which pair of mirror paths is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairPaths {
    /// `k: 0 -> π` and `k: 0 -> -π`.
    #[default]
    Half,
    /// `k: -π -> π` and its mirror `k: π -> -π`.
    Full,
}

impl PairPaths {
    pub fn variants(self) -> (PathVariant, PathVariant) {
        match self {
            PairPaths::Half => (PathVariant::HalfA, PathVariant::HalfB),
            PairPaths::Full => (PathVariant::Full, PathVariant::FullMirror),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSetup {
    pub representation: Representation,
    pub band: Band,
    pub paths: PairPaths,
    /// Unit-modulus factor applied to the shared initial state.
    pub global_phase: Complex64,
}

impl Default for PairSetup {
    fn default() -> Self {
        Self {
            representation: Representation::Complex2,
            band: Band::Upper,
            paths: PairPaths::Half,
            global_phase: Complex64::new(1.0, 0.0),
        }
    }
}

impl PairSetup {
    pub fn with_representation(representation: Representation) -> Self {
        Self { representation, ..Self::default() }
    }
}

/// Evolves one band eigenstate along `schedule`, starting from
/// `global_phase · u_band(k(0))`.
pub fn evolve_path(
    params: &ModelParams,
    schedule: &KSchedule,
    band: Band,
    global_phase: Complex64,
    representation: Representation,
) -> Result<PathTrace> {
    check_path_gapped(params, schedule)?;
    let k0 = schedule.k_unchecked(0.0);
    let u0 = eigensystem(params, k0)?.vector(band) * global_phase;
    let psi0 = ComplexState2::from_vector(&u0);
    let k_at = |t: f64| schedule.k_unchecked(t.clamp(0.0, schedule.total_time()));

    let (times, states) = match representation {
        Representation::Complex2 => {
            let prop = propagate(|t| bloch_hamiltonian(params, k_at(t)), &u0, schedule.total_time(), schedule.steps())?;
            (prop.times, TraceStates::Complex2(prop.states))
        }
        Representation::Real4 => {
            let x0 = vec_amplitudes(&psi0);
            let prop = propagate(
                |t| realify(&bloch_vector(params, k_at(t))).to_complex(),
                &x0,
                schedule.total_time(),
                schedule.steps(),
            )?;
            (prop.times, TraceStates::Real4(prop.states))
        }
    };
    let k_values = schedule.k_values();
    Ok(PathTrace { schedule: *schedule, band, times, k_values, states })
}

fn check_path_gapped(params: &ModelParams, schedule: &KSchedule) -> Result<()> {
    let threshold = params.gapless_threshold();
    let steps = schedule.steps();
    for i in 0..=steps {
        let t = schedule.time(i);
        let mut probe = vec![t];
        if i < steps {
            probe.push(0.5 * (t + schedule.time(i + 1)));
        }
        for t in probe {
            let k = schedule.k_unchecked(t);
            let abs_q = bloch_vector(params, k).norm();
            if abs_q < threshold {
                return Err(Error::GaplessPoint { k, abs_q });
            }
        }
    }
    Ok(())
}

/// Evolves the shared initial eigenstate along the two mirror half-paths.
pub fn evolve_pair(
    params: &ModelParams,
    total_time: f64,
    steps: usize,
    representation: Representation,
) -> Result<(PathTrace, PathTrace)> {
    evolve_pair_with(params, total_time, steps, &PairSetup::with_representation(representation))
}

pub fn evolve_pair_with(
    params: &ModelParams,
    total_time: f64,
    steps: usize,
    setup: &PairSetup,
) -> Result<(PathTrace, PathTrace)> {
    if setup.paths == PairPaths::Half {
        params.require_positive_start()?;
    }
    let (va, vb) = setup.paths.variants();
    let sched_a = KSchedule::new(va, total_time, steps)?;
    let sched_b = KSchedule::new(vb, total_time, steps)?;
    let a = evolve_path(params, &sched_a, setup.band, setup.global_phase, setup.representation)?;
    let b = evolve_path(params, &sched_b, setup.band, setup.global_phase, setup.representation)?;
    Ok((a, b))
}

/// `|<u_band(k(t_i)) | ψ(t_i)>|²` along a trace.
pub fn instantaneous_fidelity(trace: &PathTrace, params: &ModelParams, schedule: &KSchedule) -> Result<Vec<f64>> {
    trace
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let k = schedule.k_of_t(t)?;
            let u = eigensystem(params, k)?.vector(trace.band);
            let psi = trace.complex_state(i).to_vector();
            Ok(u.dotc(&psi).norm_sqr())
        })
        .collect()
}
