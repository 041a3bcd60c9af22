//! Dimensional extension: complex two-level Hamiltonians as real symmetric
//! 4x4 matrices.
//!
//! A complex state `(a + ib, c + id)` maps to the real vector `(a, b, c, d)`,
//! and `q = dx + i dy` maps to the block pattern
//!
//! ```text
//! [  0    0   dx   dy ]
//! [  0    0  -dy   dx ]
//! [ dx  -dy   0    0  ]
//! [ dy   dx   0    0  ]
//! ```
//!
//! Multiplication by `i` becomes the rotation generator [`j4`], which commutes
//! with every realified Hamiltonian. Each complex eigenvalue therefore appears
//! twice in the real spectrum.

use nalgebra::{Matrix4, SymmetricEigen, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::Result;
use crate::model::{bloch_hamiltonian, bloch_vector, eigensystem, BlochVector, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexState2 {
    pub u1: Complex64,
    pub u2: Complex64,
}

impl ComplexState2 {
    pub fn new(u1: Complex64, u2: Complex64) -> Self {
        Self { u1, u2 }
    }

    pub fn norm(&self) -> f64 {
        (self.u1.norm_sqr() + self.u2.norm_sqr()).sqrt()
    }

    pub fn to_vector(&self) -> Vector2<Complex64> {
        Vector2::new(self.u1, self.u2)
    }

    pub fn from_vector(v: &Vector2<Complex64>) -> Self {
        Self { u1: v[0], u2: v[1] }
    }
}

/// Real components `(Re u1, Im u1, Re u2, Im u2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealState4 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RealState4 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.a, self.b, self.c, self.d)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

pub fn vec(s: &ComplexState2) -> RealState4 {
    RealState4::new(s.u1.re, s.u1.im, s.u2.re, s.u2.im)
}

pub fn unvec(r: &RealState4) -> ComplexState2 {
    ComplexState2::new(Complex64::new(r.a, r.b), Complex64::new(r.c, r.d))
}

/// Complex-linear extension of [`unvec`] to complex-amplitude 4-vectors:
/// `x -> (x1 + i x2, x3 + i x4)`.
///
/// It intertwines a realified Hamiltonian with its complex original, so it
/// maps trajectories of `i dx/dt = R x` onto trajectories of `i du/dt = H u`.
pub fn unvec_amplitudes(x: &Vector4<Complex64>) -> ComplexState2 {
    let i = Complex64::i();
    ComplexState2::new(x[0] + i * x[1], x[2] + i * x[3])
}

/// Real vector of `s`, promoted to complex amplitudes.
pub fn vec_amplitudes(s: &ComplexState2) -> Vector4<Complex64> {
    vec(s).to_vector().map(Complex64::from)
}

/// Realified Bloch Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealHamiltonian4(pub Matrix4<f64>);

impl RealHamiltonian4 {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn to_complex(&self) -> Matrix4<Complex64> {
        self.0.map(Complex64::from)
    }
}

pub fn realify(d: &BlochVector) -> RealHamiltonian4 {
    let (x, y) = (d.dx, d.dy);
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0, 0.0,  x,   y,
        0.0, 0.0, -y,   x,
        x,   -y,  0.0, 0.0,
        y,    x,  0.0, 0.0,
    );
    RealHamiltonian4(m)
}

/// Real representation of multiplication by `i` in the `(a, b, c, d)` order.
pub fn j4() -> Matrix4<f64> {
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0, -1.0, 0.0,  0.0,
        1.0,  0.0, 0.0,  0.0,
        0.0,  0.0, 0.0, -1.0,
        0.0,  0.0, 1.0,  0.0,
    );
    m
}

/// The alternative real form acting on `(a, c, b, d)`:
/// `[[dx σx, dy σy'], [-dy σy', dx σx]]` with `σy' = [[0, 1], [-1, 0]]`.
pub fn methods_matrix(d: &BlochVector) -> Matrix4<f64> {
    let (x, y) = (d.dx, d.dy);
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0,  x,  0.0,  y,
        x,   0.0, -y,  0.0,
        0.0, -y,  0.0,  x,
        y,   0.0,  x,  0.0,
    );
    m
}

/// Basis change `(a, c, b, d) -> (a, b, c, d)`.
pub fn permutation() -> Matrix4<f64> {
    #[rustfmt::skip]
    let p = Matrix4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    );
    p
}

/// True iff `P ℍ Pᵀ` reproduces [`realify`] entrywise to 1e-15.
pub fn verify_permutation(d: &BlochVector) -> bool {
    let p = permutation();
    let conjugated = p * methods_matrix(d) * p.transpose();
    let target = realify(d).0;
    conjugated
        .iter()
        .zip(target.iter())
        .all(|(x, y)| (x - y).abs() <= 1e-15)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingReport {
    /// Spectrum of the realified matrix, descending.
    pub eigenvalues: [f64; 4],
    pub abs_q: f64,
    /// Largest deviation of the real spectrum from `{|q|, |q|, -|q|, -|q|}`.
    pub spectrum_error: f64,
    /// Largest complex eigen-equation residual of the unvec'd real eigenvectors.
    pub max_residual: f64,
}

impl DoublingReport {
    pub fn passes(&self) -> bool {
        self.spectrum_error <= 1e-10 * self.abs_q.max(1.0) && self.max_residual <= 1e-10
    }
}

pub fn spectral_doubling_check(params: &ModelParams, k: f64) -> Result<DoublingReport> {
    let pair = eigensystem(params, k)?;
    let d = bloch_vector(params, k);
    let real = realify(&d).0;
    let h = bloch_hamiltonian(params, k);

    let eig = SymmetricEigen::new(real);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = [0, 1, 2, 3].map(|n| eig.eigenvalues[order[n]]);

    let abs_q = pair.e_plus;
    let expected = [abs_q, abs_q, -abs_q, -abs_q];
    let spectrum_error = eigenvalues
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let mut max_residual: f64 = 0.0;
    for (n, &idx) in order.iter().enumerate() {
        let col: Vector4<f64> = eig.eigenvectors.column(idx).into_owned();
        let mu = unvec(&RealState4::from_vector(&col)).to_vector();
        let residual = (h * mu - mu * Complex64::from(eigenvalues[n])).norm();
        max_residual = max_residual.max(residual);
    }

    Ok(DoublingReport { eigenvalues, abs_q, spectrum_error, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn realify_examples() {
        let m = realify(&BlochVector::new(6.0, 0.0)).0;
        for (r, col) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
            assert_eq!(m[(r, col)], 6.0);
        }
        assert_eq!(m.iter().filter(|x| **x != 0.0).count(), 4);

        let m = realify(&BlochVector::new(0.0, 1.0)).0;
        assert_eq!(m[(0, 3)], 1.0);
        assert_eq!(m[(1, 2)], -1.0);
        assert_eq!(m[(2, 1)], -1.0);
        assert_eq!(m[(3, 0)], 1.0);
        assert_eq!(m.iter().filter(|x| **x != 0.0).count(), 4);

        let m = realify(&BlochVector::new(-2.5, 3.25)).0;
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn vec_examples() {
        let s = ComplexState2::new(c(0.5, 0.5), c(0.5, 0.5));
        assert_eq!(vec(&s), RealState4::new(0.5, 0.5, 0.5, 0.5));
        assert_eq!(vec(&ComplexState2::new(c(1.0, 0.0), c(0.0, 0.0))), RealState4::new(1.0, 0.0, 0.0, 0.0));
        let r = vec(&ComplexState2::new(c(0.0, 1.0), c(-1.0, 0.0)));
        assert_eq!(r, RealState4::new(0.0, 1.0, -1.0, 0.0));
        assert_eq!(unvec(&r), ComplexState2::new(c(0.0, 1.0), c(-1.0, 0.0)));
    }

    #[test]
    fn methods_matrix_examples() {
        let m = methods_matrix(&BlochVector::new(1.0, 0.0));
        for (r, col) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            assert_eq!(m[(r, col)], 1.0);
        }
        assert_eq!(m.iter().filter(|x| **x != 0.0).count(), 4);
        let m = methods_matrix(&BlochVector::new(0.0, 1.0));
        assert_eq!(m[(0, 3)], 1.0);
        assert_eq!(m[(1, 2)], -1.0);
        assert_eq!(m[(2, 1)], -1.0);
        assert_eq!(m[(3, 0)], 1.0);
        let m = methods_matrix(&BlochVector::new(0.7, -1.9));
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn permutation_examples() {
        assert!(verify_permutation(&BlochVector::new(1.0, 0.0)));
        assert!(verify_permutation(&BlochVector::new(0.0, 1.0)));
        let p = permutation();
        assert_eq!(p * p.transpose(), Matrix4::identity());
    }

    #[test]
    fn realify_matches_complex_action() {
        // realify(d) · vec(u) == vec(H u) for the same d
        let d = BlochVector::new(1.3, -0.4);
        let h = crate::model::hamiltonian_from_bloch(&d);
        let u = ComplexState2::new(c(0.2, -0.7), c(0.9, 0.1));
        let lhs = realify(&d).0 * vec(&u).to_vector();
        let rhs = vec(&ComplexState2::from_vector(&(h * u.to_vector()))).to_vector();
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn j4_is_multiplication_by_i_and_commutes() {
        let j = j4();
        assert_eq!(j * j, -Matrix4::identity());
        let d = BlochVector::new(2.0, 0.3);
        let r = realify(&d).0;
        assert!((j * r - r * j).norm() < 1e-15);
        let u = ComplexState2::new(c(0.3, 0.4), c(-0.1, 0.8));
        let z = c(0.6, -1.7);
        let scaled = ComplexState2::new(z * u.u1, z * u.u2);
        let lhs = vec(&scaled).to_vector();
        let rhs = (Matrix4::identity() * z.re + j * z.im) * vec(&u).to_vector();
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn doubling_examples() {
        let params = ModelParams::new(1.0, 5.0, 0.0).unwrap();
        let rep = spectral_doubling_check(&params, 0.0).unwrap();
        assert!(rep.passes());
        for (got, want) in rep.eigenvalues.iter().zip([6.0, 6.0, -6.0, -6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let rep = spectral_doubling_check(&params, PI).unwrap();
        for (got, want) in rep.eigenvalues.iter().zip([4.0, 4.0, -4.0, -4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let gapless = ModelParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(spectral_doubling_check(&gapless, PI).is_err());
    }

    #[test]
    fn operator_norms_agree() {
        let params = ModelParams::new(1.0, 1.0, 4.0).unwrap();
        for k in [-2.0, -0.3, 0.0, 1.1, 2.9] {
            let d = bloch_vector(&params, k);
            let real_norm = realify(&d).0.symmetric_eigenvalues().amax();
            let h = bloch_hamiltonian(&params, k);
            let complex_norm = h.singular_values().max();
            assert!((real_norm - complex_norm).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn vec_unvec_roundtrip_preserves_norm(a in -3.0f64..3.0, b in -3.0f64..3.0, cc in -3.0f64..3.0, d in -3.0f64..3.0) {
                let r = RealState4::new(a, b, cc, d);
                let s = unvec(&r);
                prop_assert_eq!(vec(&s), r);
                prop_assert!((s.norm() - r.norm()).abs() <= 1e-15 * r.norm().max(1.0));
            }

            #[test]
            fn degenerate_combinations_unvec_to_one_ray(dx in -5.0f64..5.0, dy in -5.0f64..5.0, alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
                let d = BlochVector::new(dx, dy);
                prop_assume!(d.norm() > 1e-3);
                let eig = SymmetricEigen::new(realify(&d).0);
                let top: Vec<usize> = (0..4).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
                prop_assert_eq!(top.len(), 2);
                let mix: Vector4<f64> = eig.eigenvectors.column(top[0]) * alpha + eig.eigenvectors.column(top[1]) * beta;
                prop_assume!(mix.norm() > 1e-6);
                let mu = unvec(&RealState4::from_vector(&mix));
                let u = crate::model::chiral_eigenvector(dy.atan2(dx), crate::model::Band::Upper);
                // parallel to u_+: |<u|mu>| == |mu|
                let overlap = u.dotc(&mu.to_vector()).norm();
                prop_assert!((overlap - mu.norm()).abs() < 1e-10);
            }
        }
    }
}
