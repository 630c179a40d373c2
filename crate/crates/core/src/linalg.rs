//! Small dense linear-algebra helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of a dense real (generally non-symmetric) matrix, sorted by
/// ascending real part, ties broken by imaginary part.
///
/// Backed by a shifted Hessenberg-QR iteration (nalgebra's real Schur
/// decomposition). Matrices in this crate are small, so robustness is the
/// only concern; a second pass with a looser tolerance covers the rare
/// borderline case before giving up.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericalFailure(
            "eigenvalue input contains non-finite entries".into(),
        ));
    }
    let schur = m
        .clone()
        .try_schur(1e-14, 100_000)
        .or_else(|| m.clone().try_schur(1e-10, 100_000))
        .ok_or_else(|| {
            Error::NumericalFailure("QR eigenvalue iteration did not converge".into())
        })?;
    let mut vals: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_by_real_part(&mut vals);
    Ok(vals)
}

/// Sort eigenvalues so the smallest real part comes first.
pub fn sort_by_real_part(vals: &mut [Complex64]) {
    vals.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("non-finite eigenvalue")
    });
}

/// Spectral radius max |lambda|.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max))
}

/// Smallest eigenvalue of the symmetric part (m + m^T)/2.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_rotation_generator() {
        // [[0,1],[-1,0]] has eigenvalues +/- i.
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let eig = eigenvalues(&m).unwrap();
        assert!((eig[0].re).abs() < 1e-12 && (eig[0].im + 1.0).abs() < 1e-12);
        assert!((eig[1].re).abs() < 1e-12 && (eig[1].im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_sorted_ascending_real_part() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let eig = eigenvalues(&m).unwrap();
        assert!((eig[0].re + 1.0).abs() < 1e-12);
        assert!((eig[1].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn min_symmetric_eigenvalue_on_scalar_block() {
        let m = DMatrix::from_row_slice(1, 1, &[-0.5]);
        assert_eq!(min_symmetric_eigenvalue(&m), -0.5);
    }

    #[test]
    fn eigenvalues_reject_non_square() {
        let m = DMatrix::zeros(2, 3);
        assert!(eigenvalues(&m).is_err());
    }
}
