//! Momentum-space topological invariants of the (extended) SSH chain.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{bloch_vector, bz_grid, eigensystem, min_abs_q, q_of_k, Band, ModelParams};

/// Largest phase increment tolerated between neighbouring samples.
pub const UNWRAP_GUARD: f64 = PI / 2.0;

/// Reduces an angle to `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Reduces an angle to `[0, 2π)`, folding rounding residue just below `2π`
/// onto 0.
pub fn wrap_positive(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if TAU - r < 1e-12 {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Continuous `arg q(k)` along the given momenta, starting from the
/// principal value at `ks[0]`.
pub fn continuous_arg(params: &ModelParams, ks: &[f64]) -> Result<Vec<f64>> {
    let threshold = params.gapless_threshold();
    let mut out = Vec::with_capacity(ks.len());
    let mut prev: Option<f64> = None;
    for (i, &k) in ks.iter().enumerate() {
        let d = bloch_vector(params, k);
        let abs_q = d.norm();
        if abs_q < threshold {
            return Err(Error::GaplessPoint { k, abs_q });
        }
        let raw = d.dy.atan2(d.dx);
        let value = match prev {
            None => raw,
            Some(p) => {
                let inc = wrap_angle(raw - p);
                if inc.abs() >= UNWRAP_GUARD {
                    return Err(Error::UnwrapJump { index: i, increment: inc });
                }
                out[i - 1] + inc
            }
        };
        out.push(value);
        prev = Some(raw);
    }
    Ok(out)
}

/// `arg q` continued from `θ(0) = 0` to `k = target` on an `n`-interval march.
pub fn theta_unwrapped(params: &ModelParams, target: f64, n: usize) -> Result<f64> {
    if !(0.0..=PI).contains(&target) {
        return Err(Error::InvalidGrid(format!("target momentum {target} outside [0, π]")));
    }
    if n == 0 {
        return Err(Error::InvalidGrid("need at least one interval".into()));
    }
    params.require_positive_start()?;
    let ks: Vec<f64> = (0..=n)
        .map(|i| if i == n { target } else { target * i as f64 / n as f64 })
        .collect();
    Ok(*continuous_arg(params, &ks)?.last().expect("non-empty march"))
}

fn check_loop_gapped(params: &ModelParams, n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("a closed k-loop needs at least 3 points, got {n}")));
    }
    let threshold = params.gapless_threshold();
    for k in bz_grid(n) {
        let abs_q = bloch_vector(params, k).norm();
        if abs_q < threshold {
            return Err(Error::GaplessPoint { k, abs_q });
        }
    }
    Ok(())
}

/// Winding of `q(k)` around the origin, as a sum of mod-reduced angle
/// increments over the closed `n`-point loop.
pub fn winding_number(params: &ModelParams, n: usize) -> Result<i64> {
    check_loop_gapped(params, n)?;
    let points: Vec<Complex64> = bz_grid(n).map(|k| q_of_k(params, k)).collect();
    let raw = loop_winding(&points);
    let rounded = raw.round();
    debug_assert!((raw - rounded).abs() < 1e-6, "non-integer winding {raw}");
    Ok(rounded as i64)
}

/// Winding of a closed polyline about the origin (the closing edge from the
/// last point back to the first is implied).
pub fn loop_winding(points: &[Complex64]) -> f64 {
    let args: Vec<f64> = points.iter().map(|z| z.arg()).collect();
    let n = args.len();
    let total: f64 = (0..n).map(|i| wrap_angle(args[(i + 1) % n] - args[i])).sum();
    total / TAU
}

/// Discrete Wilson loop `-arg Π <u(k_i)|u(k_{i+1})>` over the closed loop, in `[0, 2π)`.
pub fn zak_wilson(params: &ModelParams, n: usize) -> Result<f64> {
    zak_wilson_band(params, n, Band::Upper)
}

pub fn zak_wilson_band(params: &ModelParams, n: usize, band: Band) -> Result<f64> {
    check_loop_gapped(params, n)?;
    let vectors = bz_grid(n)
        .map(|k| eigensystem(params, k).map(|e| e.vector(band)))
        .collect::<Result<Vec<_>>>()?;
    let mut product = Complex64::new(1.0, 0.0);
    for i in 0..n {
        let overlap = vectors[i].dotc(&vectors[(i + 1) % n]);
        product *= overlap / overlap.norm();
    }
    Ok(wrap_positive(-product.arg()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingResult {
    pub winding: i64,
    pub zak_mod_2pi: f64,
    pub min_abs_q: f64,
}

pub fn winding_result(params: &ModelParams, n: usize) -> Result<WindingResult> {
    Ok(WindingResult {
        winding: winding_number(params, n)?,
        zak_mod_2pi: zak_wilson(params, n)?,
        min_abs_q: min_abs_q(params, n)?,
    })
}

/// `q(k)` on `n + 1` points from `-π` to `π`; the last point is the first.
pub fn q_trajectory(params: &ModelParams, n: usize) -> Vec<Complex64> {
    let mut points: Vec<Complex64> = bz_grid(n.max(1)).map(|k| q_of_k(params, k)).collect();
    points.push(points[0]);
    points
}

/// Whether `w + v z + J z²` has a root within `tol` of the unit circle,
/// i.e. whether the gap closes somewhere in the zone.
pub fn gap_closes(params: &ModelParams, tol: f64) -> bool {
    unit_circle_root_moduli(params).iter().any(|m| (m - 1.0).abs() <= tol)
}

/// Number of roots of `w + v z + J z²` strictly inside the unit disk. By the
/// argument principle this equals the winding number of a gapped chain.
pub fn roots_inside_unit_disk(params: &ModelParams) -> usize {
    unit_circle_root_moduli(params).iter().filter(|m| **m < 1.0).count()
}

fn unit_circle_root_moduli(params: &ModelParams) -> Vec<f64> {
    let (w, v, j) = (params.w(), params.v(), params.j());
    if j == 0.0 {
        if v == 0.0 {
            return vec![];
        }
        return vec![(w / v).abs()];
    }
    let disc = v * v - 4.0 * j * w;
    if disc < 0.0 {
        // complex-conjugate pair with |z|² = w / J
        let m = (w / j).sqrt();
        return vec![m, m];
    }
    let sq = disc.sqrt();
    let big = -0.5 * (v + v.signum() * sq);
    if big == 0.0 {
        return vec![0.0, 0.0];
    }
    let z1 = big / j;
    let z2 = w / big;
    vec![z1.abs(), z2.abs()]
}

/// Evenly spaced axis `min..=max` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if n == 0 || !(min.is_finite() && max.is_finite()) || (n > 1 && max < min) {
            return Err(Error::InvalidGrid(format!("bad axis {min}:{max}:{n}")));
        }
        Ok(Self { min, max, n })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            return self.min;
        }
        self.min + (self.max - self.min) * (i as f64) / ((self.n - 1) as f64)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiagramCell {
    Gapped { winding: i64, min_abs_q: f64 },
    Boundary,
}

impl DiagramCell {
    pub fn winding(&self) -> Option<i64> {
        match self {
            DiagramCell::Gapped { winding, .. } => Some(*winding),
            DiagramCell::Boundary => None,
        }
    }
}

/// Winding map over `(v/w, J/w)` with `w = 1`; row-major with `J/w` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramGrid {
    pub v_axis: Axis,
    pub j_axis: Axis,
    pub cells: Vec<DiagramCell>,
}

impl PhaseDiagramGrid {
    pub fn cell(&self, v_index: usize, j_index: usize) -> &DiagramCell {
        &self.cells[j_index * self.v_axis.n + v_index]
    }

    /// Cell nearest to the given ratios.
    pub fn lookup(&self, v_over_w: f64, j_over_w: f64) -> &DiagramCell {
        let nearest = |axis: &Axis, x: f64| {
            (0..axis.n)
                .min_by(|&a, &b| (axis.value(a) - x).abs().total_cmp(&(axis.value(b) - x).abs()))
                .unwrap_or(0)
        };
        self.cell(nearest(&self.v_axis, v_over_w), nearest(&self.j_axis, j_over_w))
    }

    /// Rows `(v/w, J/w, cell)` in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, &DiagramCell)> {
        self.cells.iter().enumerate().map(move |(idx, cell)| {
            let (ji, vi) = (idx / self.v_axis.n, idx % self.v_axis.n);
            (self.v_axis.value(vi), self.j_axis.value(ji), cell)
        })
    }
}

/// Relative tolerance on `||z| - 1|` for the polynomial-root closure test.
pub const ROOT_CIRCLE_TOLERANCE: f64 = 1e-9;

pub fn diagram_cell(params: &ModelParams, n: usize) -> DiagramCell {
    if n < 3 || gap_closes(params, ROOT_CIRCLE_TOLERANCE) {
        return DiagramCell::Boundary;
    }
    let points: Vec<Complex64> = bz_grid(n).map(|k| q_of_k(params, k)).collect();
    let min_abs_q = points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if min_abs_q < params.gapless_threshold() {
        return DiagramCell::Boundary;
    }
    let raw = loop_winding(&points);
    if (raw - raw.round()).abs() > 1e-6 {
        return DiagramCell::Boundary;
    }
    DiagramCell::Gapped { winding: raw.round() as i64, min_abs_q }
}

/// Cells are evaluated in parallel on the current rayon pool and merged by
/// index.
pub fn phase_diagram(v_axis: Axis, j_axis: Axis, n: usize) -> Result<PhaseDiagramGrid> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("loop resolution {n} too small")));
    }
    let cells = (0..v_axis.n * j_axis.n)
        .into_par_iter()
        .map(|idx| {
            let (ji, vi) = (idx / v_axis.n, idx % v_axis.n);
            match ModelParams::new(1.0, v_axis.value(vi), j_axis.value(ji)) {
                Ok(params) => diagram_cell(&params, n),
                Err(_) => DiagramCell::Boundary,
            }
        })
        .collect();
    Ok(PhaseDiagramGrid { v_axis, j_axis, cells })
}
