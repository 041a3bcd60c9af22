//! Momentum-space SSH and extended-SSH models.
//!
//! The Bloch Hamiltonian is `H(k) = [[0, conj q(k)], [q(k), 0]]` with
//! `q(k) = w + v e^{ik} + J e^{2ik}`. Couplings are dimensionless multiples of
//! a scale `g0` and time is measured in `1/g0` (with hbar = 1).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative threshold on `|q|` below which the gap is considered closed.
pub const GAPLESS_RELATIVE_THRESHOLD: f64 = 1e-9;

/// Coupling triple `(w, v, J)`: intracell, intercell and next-nearest-neighbour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    w: f64,
    v: f64,
    j: f64,
}

impl ModelParams {
    pub fn new(w: f64, v: f64, j: f64) -> Result<Self> {
        if !(w.is_finite() && v.is_finite() && j.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "couplings must be finite, got ({w}, {v}, {j})"
            )));
        }
        if w == 0.0 && v == 0.0 && j == 0.0 {
            return Err(Error::InvalidParams("at least one coupling must be nonzero".into()));
        }
        Ok(Self { w, v, j })
    }

    /// Plain SSH chain (`J = 0`).
    pub fn ssh(w: f64, v: f64) -> Result<Self> {
        Self::new(w, v, 0.0)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// Same couplings multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.w * factor, self.v * factor, self.j * factor)
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.w.abs().max(self.v.abs()).max(self.j.abs())
    }

    /// `|q|` values below this are treated as gap closures.
    pub fn gapless_threshold(&self) -> f64 {
        GAPLESS_RELATIVE_THRESHOLD * self.max_abs_coupling()
    }

    /// Half-BZ paths start from `k = 0`, where `q(0) = w + v + J` must be
    /// positive so that `theta(0) = 0`.
    pub fn require_positive_start(&self) -> Result<()> {
        let q0 = self.w + self.v + self.j;
        if q0 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "half-path evolution needs w + v + J > 0, got {q0}"
            )))
        }
    }
}

/// Real and imaginary parts of `q(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub dx: f64,
    pub dy: f64,
}

impl BlochVector {
    pub fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.dx, self.dy)
    }

    pub fn norm(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

pub fn bloch_vector(params: &ModelParams, k: f64) -> BlochVector {
    let (s1, c1) = k.sin_cos();
    let (s2, c2) = (2.0 * k).sin_cos();
    BlochVector {
        dx: params.w + params.v * c1 + params.j * c2,
        dy: params.v * s1 + params.j * s2,
    }
}

/// Lower-left entry of the Bloch Hamiltonian, `w + v e^{ik} + J e^{2ik}`.
pub fn q_of_k(params: &ModelParams, k: f64) -> Complex64 {
    bloch_vector(params, k).as_complex()
}

/// The 2x2 Bloch Hamiltonian.
pub fn bloch_hamiltonian(params: &ModelParams, k: f64) -> Matrix2<Complex64> {
    hamiltonian_from_bloch(&bloch_vector(params, k))
}

pub fn hamiltonian_from_bloch(d: &BlochVector) -> Matrix2<Complex64> {
    let q = d.as_complex();
    let zero = Complex64::new(0.0, 0.0);
    Matrix2::new(zero, q.conj(), q, zero)
}

/// Energy band of the two-band model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Band {
    #[default]
    Upper,
    Lower,
}

impl Band {
    /// `+1` for the upper band, `-1` for the lower.
    pub fn sign(self) -> f64 {
        match self {
            Band::Upper => 1.0,
            Band::Lower => -1.0,
        }
    }
}

/// Eigensystem at one momentum in the chiral gauge
/// `u_± = (±e^{-iθ}, 1)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub e_plus: f64,
    pub e_minus: f64,
    pub u_plus: Vector2<Complex64>,
    pub u_minus: Vector2<Complex64>,
    /// Principal value of `arg q(k)`.
    pub theta: f64,
}

impl EigenPair {
    pub fn energy(&self, band: Band) -> f64 {
        match band {
            Band::Upper => self.e_plus,
            Band::Lower => self.e_minus,
        }
    }

    pub fn vector(&self, band: Band) -> Vector2<Complex64> {
        match band {
            Band::Upper => self.u_plus,
            Band::Lower => self.u_minus,
        }
    }
}

/// Chiral-gauge eigenvector for a given local phase.
pub fn chiral_eigenvector(theta: f64, band: Band) -> Vector2<Complex64> {
    let first = Complex64::from_polar(band.sign() * FRAC_1_SQRT_2, -theta);
    Vector2::new(first, Complex64::new(FRAC_1_SQRT_2, 0.0))
}

pub fn eigensystem(params: &ModelParams, k: f64) -> Result<EigenPair> {
    let d = bloch_vector(params, k);
    let abs_q = d.norm();
    if abs_q < params.gapless_threshold() {
        return Err(Error::GaplessPoint { k, abs_q });
    }
    let theta = d.dy.atan2(d.dx);
    Ok(EigenPair {
        e_plus: abs_q,
        e_minus: -abs_q,
        u_plus: chiral_eigenvector(theta, Band::Upper),
        u_minus: chiral_eigenvector(theta, Band::Lower),
        theta,
    })
}

/// Uniform grid `k_i = -π + 2πi/n`, `i = 0..n`.
pub fn bz_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| -PI + 2.0 * PI * (i as f64) / (n as f64))
}

/// Band gap `2 min |q(k)|` over the uniform `n`-point grid.
pub fn min_gap(params: &ModelParams, n: usize) -> Result<f64> {
    Ok(2.0 * min_abs_q(params, n)?)
}

pub(crate) fn min_abs_q(params: &ModelParams, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 k-points, got {n}")));
    }
    Ok(bz_grid(n)
        .map(|k| bloch_vector(params, k).norm())
        .fold(f64::INFINITY, f64::min))
}

/// Momentum path traversed during the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathVariant {
    /// `k = πt/T`, from 0 to π.
    HalfA,
    /// `k = -πt/T`, from 0 to -π.
    HalfB,
    /// `k = -π + 2πt/T` across the whole zone.
    Full,
    /// `k = π - 2πt/T`, the mirror image of [`PathVariant::Full`].
    FullMirror,
}

/// Momentum-versus-time schedule on a fixed sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSchedule {
    variant: PathVariant,
    total_time: f64,
    steps: usize,
}

impl KSchedule {
    pub fn new(variant: PathVariant, total_time: f64, steps: usize) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "total time must be positive and finite, got {total_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidSchedule("steps must be positive".into()));
        }
        Ok(Self { variant, total_time, steps })
    }

    pub fn half_a(total_time: f64, steps: usize) -> Result<Self> {
        Self::new(PathVariant::HalfA, total_time, steps)
    }

    pub fn half_b(total_time: f64, steps: usize) -> Result<Self> {
        Self::new(PathVariant::HalfB, total_time, steps)
    }

    pub fn full(total_time: f64, steps: usize) -> Result<Self> {
        Self::new(PathVariant::Full, total_time, steps)
    }

    pub fn variant(&self) -> PathVariant {
        self.variant
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn with_variant(&self, variant: PathVariant) -> Self {
        Self { variant, ..*self }
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// Sample time `i` of `0..=steps`; the last sample is exactly `T`.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.steps {
            self.total_time
        } else {
            self.total_time * (i as f64) / (self.steps as f64)
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    pub fn k_of_t(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::OutOfRange { t, total: self.total_time });
        }
        Ok(self.k_unchecked(t))
    }

    // Mirror variants negate the same product so that k_B(t) == -k_A(t) bitwise.
    pub(crate) fn k_unchecked(&self, t: f64) -> f64 {
        let frac = t / self.total_time;
        match self.variant {
            PathVariant::HalfA => PI * frac,
            PathVariant::HalfB => -(PI * frac),
            PathVariant::Full => -PI + 2.0 * PI * frac,
            PathVariant::FullMirror => -(-PI + 2.0 * PI * frac),
        }
    }

    pub fn k_values(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.k_unchecked(self.time(i))).collect()
    }
}
