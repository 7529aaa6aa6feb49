//! Fixed-size 2x2 matrix arithmetic in closed form.
//!
//! Everything in this crate is second order, so matrices are plain
//! row-major `[[f64; 2]; 2]` arrays and all decompositions (inverse,
//! eigenvalues) use the direct trace/determinant formulas. No iteration,
//! no external linear algebra.

use serde::{Deserialize, Serialize};

/// 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Self = Self { m: [[0.0; 2]; 2] };
    pub const IDENTITY: Self = Self {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, 0.0, d2)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.m[0][0] + other.m[0][0],
            self.m[0][1] + other.m[0][1],
            self.m[1][0] + other.m[1][0],
            self.m[1][1] + other.m[1][1],
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.m[0][0] - other.m[0][0],
            self.m[0][1] - other.m[0][1],
            self.m[1][0] - other.m[1][0],
            self.m[1][1] - other.m[1][1],
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.m[0][0] * other.m[0][0] + self.m[0][1] * other.m[1][0],
            self.m[0][0] * other.m[0][1] + self.m[0][1] * other.m[1][1],
            self.m[1][0] * other.m[0][0] + self.m[1][1] * other.m[1][0],
            self.m[1][0] * other.m[0][1] + self.m[1][1] * other.m[1][1],
        )
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.m[0][0] * self.m[0][0]
            + self.m[0][1] * self.m[0][1]
            + self.m[1][0] * self.m[1][0]
            + self.m[1][1] * self.m[1][1])
            .sqrt()
    }

    /// Solve `self * x = rhs` by the adjugate formula. `None` if singular.
    pub fn solve(&self, rhs: [f64; 2]) -> Option<[f64; 2]> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some([
            (self.m[1][1] * rhs[0] - self.m[0][1] * rhs[1]) / det,
            (-self.m[1][0] * rhs[0] + self.m[0][0] * rhs[1]) / det,
        ])
    }

    pub fn is_symmetric(&self) -> bool {
        self.m[0][1] == self.m[1][0]
    }

    /// Eigenvalues of a symmetric matrix as `(min, max)`.
    ///
    /// For `[[a, b], [b, c]]` these are `(a+c)/2 ± sqrt(((a-c)/2)^2 + b^2)`.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.m[0][0] + self.m[1][1]);
        let half_diff = 0.5 * (self.m[0][0] - self.m[1][1]);
        let b = 0.5 * (self.m[0][1] + self.m[1][0]);
        let radius = (half_diff * half_diff + b * b).sqrt();
        (mean - radius, mean + radius)
    }

    /// Largest real part over the eigenvalues of a general 2x2 matrix.
    pub fn spectral_abscissa(&self) -> f64 {
        let tr = self.trace();
        let disc = tr * tr - 4.0 * self.det();
        if disc >= 0.0 {
            0.5 * (tr + disc.sqrt())
        } else {
            0.5 * tr
        }
    }

    /// Largest eigenvalue magnitude of a general 2x2 matrix.
    pub fn spectral_radius(&self) -> f64 {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            let s = disc.sqrt();
            (0.5 * (tr + s)).abs().max((0.5 * (tr - s)).abs())
        } else {
            // complex pair, |lambda|^2 = det
            det.abs().sqrt()
        }
    }
}

/// Dot product of two 2-vectors.
pub fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] * s, a[1] * s]
}

pub fn norm(a: [f64; 2]) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_against_product() {
        let a = Mat2::new(4.0, 7.0, 2.0, 6.0);
        let x = a.solve([1.0, -2.0]).unwrap();
        let back = a.mul_vec(x);
        assert!((back[0] - 1.0).abs() < 1e-12);
        assert!((back[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_solve_is_none() {
        let a = Mat2::new(1.0, 2.0, 2.0, 4.0);
        assert!(a.solve([1.0, 1.0]).is_none());
    }

    #[test]
    fn symmetric_eigenvalues_closed_form() {
        let a = Mat2::new(2.0, 1.0, 1.0, 2.0);
        let (lo, hi) = a.sym_eigenvalues();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_abscissa_complex_pair() {
        // eigenvalues -1 ± 2i
        let a = Mat2::new(-1.0, 2.0, -2.0, -1.0);
        assert!((a.spectral_abscissa() + 1.0).abs() < 1e-12);
        assert!((a.spectral_radius() - 5.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectral_abscissa_real_eigenvalues() {
        let a = Mat2::diag(-3.0, -0.5);
        assert!((a.spectral_abscissa() + 0.5).abs() < 1e-12);
    }
}
