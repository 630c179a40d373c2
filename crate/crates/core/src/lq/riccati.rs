//! Riccati and Lyapunov machinery for the two-player LQ game: the
//! single-player discrete Riccati best response, closed-loop value and
//! covariance equations, and the PBH stabilizability/detectability tests
//! behind the solver's assumptions.

use nalgebra::{Matrix2, Matrix4, RowVector2, Vector2, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues of a real 2x2 matrix in closed form.
pub fn eigenvalues2(m: &Matrix2<f64>) -> [Complex64; 2] {
    let half_tr = m.trace() / 2.0;
    let disc = half_tr * half_tr - m.determinant();
    if disc >= 0.0 {
        let s = disc.sqrt();
        [
            Complex64::new(half_tr - s, 0.0),
            Complex64::new(half_tr + s, 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half_tr, -s), Complex64::new(half_tr, s)]
    }
}

/// Spectral radius of a real 2x2 matrix.
pub fn spectral_radius2(m: &Matrix2<f64>) -> f64 {
    let [l1, l2] = eigenvalues2(m);
    l1.norm().max(l2.norm())
}

/// Principal square root of a symmetric positive-semidefinite 2x2 matrix.
pub fn sqrt_psd2(m: &Matrix2<f64>) -> Matrix2<f64> {
    let eig = m.symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let u = eig.eigenvectors;
    u * Matrix2::from_diagonal(&sqrt_vals) * u.transpose()
}

/// Eigenvalues on or outside the unit circle, the ones PBH must test.
fn unstable_modes(a: &Matrix2<f64>) -> Vec<Complex64> {
    eigenvalues2(a)
        .into_iter()
        .filter(|l| l.norm() >= 1.0 - 1e-9)
        .collect()
}

/// PBH stabilizability: for every eigenvalue of `a` on or outside the unit
/// circle, `[lambda I - A | b]` must have full row rank.
pub fn is_stabilizable(a: &Matrix2<f64>, b: &Vector2<f64>) -> bool {
    let scale = (1.0 + a.amax() + b.amax()).powi(2);
    for lambda in unstable_modes(a) {
        // Columns of lambda I - A.
        let c0 = [lambda - a[(0, 0)], Complex64::new(-a[(1, 0)], 0.0)];
        let c1 = [Complex64::new(-a[(0, 1)], 0.0), lambda - a[(1, 1)]];
        let m01 = c0[0] * c1[1] - c0[1] * c1[0];
        let m02 = c0[0] * b[1] - c0[1] * b[0];
        let m12 = c1[0] * b[1] - c1[1] * b[0];
        let max_minor = m01.norm().max(m02.norm()).max(m12.norm());
        if max_minor <= 1e-10 * scale {
            return false;
        }
    }
    true
}

/// PBH detectability of `(a, c)`: for every unstable eigenvalue, the stacked
/// `[lambda I - A; C]` must have full column rank.
pub fn is_detectable(a: &Matrix2<f64>, c: &Matrix2<f64>) -> bool {
    let scale = (1.0 + a.amax() + c.amax()).powi(2);
    for lambda in unstable_modes(a) {
        // Two stacked columns in C^4.
        let u = [
            lambda - a[(0, 0)],
            Complex64::new(-a[(1, 0)], 0.0),
            Complex64::new(c[(0, 0)], 0.0),
            Complex64::new(c[(1, 0)], 0.0),
        ];
        let v = [
            Complex64::new(-a[(0, 1)], 0.0),
            lambda - a[(1, 1)],
            Complex64::new(c[(0, 1)], 0.0),
            Complex64::new(c[(1, 1)], 0.0),
        ];
        let mut max_minor = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                max_minor = max_minor.max((u[i] * v[j] - u[j] * v[i]).norm());
            }
        }
        if max_minor <= 1e-10 * scale {
            return false;
        }
    }
    true
}

/// Single-player discrete-time LQR subproblem: iterate
/// `P <- Q + A^T P A - A^T P b (R + b^T P b)^{-1} b^T P A`
/// to its fixed point and return the optimal gain
/// `K = (R + b^T P b)^{-1} b^T P A` with the value matrix `P`.
///
/// `warm_start` seeds the iteration (defaults to `Q`), which makes repeated
/// best responses inside the game solver cheap.
pub fn solve_dare_best_response(
    a: &Matrix2<f64>,
    b: &Vector2<f64>,
    q: &Matrix2<f64>,
    r: f64,
    tol: f64,
    max_iters: usize,
    warm_start: Option<Matrix2<f64>>,
) -> Result<(RowVector2<f64>, Matrix2<f64>)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Riccati tolerance must be positive, got {tol}"
        )));
    }
    if !is_stabilizable(a, b) {
        return Err(Error::SolverFailure {
            message: "pair (A, B) is not stabilizable".into(),
            residual: f64::INFINITY,
            iterations: 0,
        });
    }

    let mut p = warm_start.unwrap_or(*q);
    let mut residual = f64::INFINITY;
    for iter in 0..max_iters {
        let pa = p * a;
        let pb = p * b;
        let denom = r + (b.transpose() * pb)[(0, 0)];
        let bpa = b.transpose() * pa; // 1x2
        let next = q + a.transpose() * pa - (a.transpose() * pb) * (bpa / denom);
        residual = (next - p).amax();
        p = (next + next.transpose()) * 0.5;
        if residual <= tol * (1.0 + p.amax()) {
            let denom = r + (b.transpose() * p * b)[(0, 0)];
            let k = (b.transpose() * p * a) / denom;
            let closed = a - b * k;
            if spectral_radius2(&closed) >= 1.0 {
                return Err(Error::SolverFailure {
                    message: "Riccati fixed point does not stabilize the loop".into(),
                    residual,
                    iterations: iter + 1,
                });
            }
            return Ok((k, p));
        }
    }
    Err(Error::SolverFailure {
        message: "Riccati iteration did not converge".into(),
        residual,
        iterations: max_iters,
    })
}

/// Fixed point of the closed-loop value recursion
/// `P <- C + A_cl^T P A_cl` (the coupled Riccati display at fixed gains,
/// with `C = Q + K^T R K`). Requires a stable loop to converge.
pub fn solve_closed_loop_value(
    a_cl: &Matrix2<f64>,
    cost: &Matrix2<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<Matrix2<f64>> {
    let mut p = *cost;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let next = cost + a_cl.transpose() * p * a_cl;
        residual = (next - p).amax();
        p = next;
        if residual <= tol * (1.0 + p.amax()) {
            return Ok((p + p.transpose()) * 0.5);
        }
    }
    Err(Error::SolverFailure {
        message: "closed-loop value recursion did not converge".into(),
        residual,
        iterations: max_iters,
    })
}

/// Infinite-horizon state covariance `X = A_cl X A_cl^T + Z0`, solved
/// directly as a 4x4 linear system in vec(X). Rejects unstable loops.
pub fn state_covariance(a_cl: &Matrix2<f64>, z0: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    if spectral_radius2(a_cl) >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "state covariance needs a stable closed loop, spectral radius is {}",
            spectral_radius2(a_cl)
        )));
    }
    // vec(A X A^T) = (A (x) A) vec(X) in column-major stacking.
    let kron = a_cl.kronecker(a_cl);
    let system = Matrix4::identity() - kron;
    let rhs = Vector4::new(z0[(0, 0)], z0[(1, 0)], z0[(0, 1)], z0[(1, 1)]);
    let sol = system.lu().solve(&rhs).ok_or_else(|| {
        Error::NumericalFailure("covariance system is singular".into())
    })?;
    let x = Matrix2::new(sol[0], sol[2], sol[1], sol[3]);
    Ok((x + x.transpose()) * 0.5)
}
