//! Continuous-time algebraic Riccati equation
//! `A'X + XA - X G X + Q = 0` with `G = B R^-1 B'`.
//!
//! A matrix-sign-function iteration on the Hamiltonian gives a stabilizing
//! first guess; Newton-Kleinman steps then polish it until the residual is
//! below the requested tolerance.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CareSolution {
    pub x: DMatrix<f64>,
    /// `R^-1 B' X`, so that `u = -K x` is the optimal feedback.
    pub k: DMatrix<f64>,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct CareOptions {
    pub tolerance: f64,
    pub max_sign_iterations: usize,
    pub max_newton_iterations: usize,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_sign_iterations: 100,
            max_newton_iterations: 50,
        }
    }
}

fn symmetrize(x: &mut DMatrix<f64>) {
    let t = x.transpose();
    *x = (&*x + t) * 0.5;
}

/// Frobenius norm of `A'X + XA - X G X + Q`.
pub fn care_residual(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (a.transpose() * x + x * a - x * g * x + q).norm()
}

/// Solves `F' X + X F = -M` through the Kronecker form.
pub fn solve_lyapunov(f: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let ft = f.transpose();
    // vec(F'X + XF) = (I kron F' + F' kron I) vec(X) for column-major vec.
    let big = eye.kronecker(&ft) + ft.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, m.iter().map(|v| -v));
    let sol = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Riccati {
            message: "Lyapunov operator is singular".into(),
            residuals: vec![],
        })?;
    let mut x = DMatrix::from_column_slice(n, n, sol.as_slice());
    symmetrize(&mut x);
    Ok(x)
}

/// Popov-Belevitch-Hautus test on every eigenvalue with nonnegative real part.
pub fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let m = b.ncols();
    let eigs = a.complex_eigenvalues();
    let scale = a.norm().max(b.norm()).max(1.0);
    for lam in eigs.iter() {
        if lam.re < -1e-12 * scale {
            continue;
        }
        let mut pbh = DMatrix::<Complex<f64>>::zeros(n, n + m);
        for i in 0..n {
            for j in 0..n {
                let mut v = Complex::new(a[(i, j)], 0.0);
                if i == j {
                    v -= lam;
                }
                pbh[(i, j)] = v;
            }
            for j in 0..m {
                pbh[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pbh.singular_values();
        let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smallest <= 1e-10 * scale {
            return false;
        }
    }
    true
}

/// Eigenvalues of `F` all strictly in the open left half plane.
pub fn is_hurwitz(f: &DMatrix<f64>) -> bool {
    f.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

fn sign_function_guess(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    opts: &CareOptions,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let mut z = h;
    let mut converged = false;
    for _ in 0..opts.max_sign_iterations {
        let lu = z.clone().lu();
        let det = lu.determinant();
        let zi = lu.try_inverse().ok_or_else(|| Error::Riccati {
            message: "Hamiltonian has eigenvalues on the imaginary axis".into(),
            residuals: vec![],
        })?;
        let c = det.abs().powf(1.0 / (2 * n) as f64);
        let c = if c.is_finite() && c > 0.0 { c } else { 1.0 };
        let next = (&z / c + zi * c) * 0.5;
        let change = (&next - &z).norm() / next.norm().max(1.0);
        z = next;
        if change < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged && !z.iter().all(|v| v.is_finite()) {
        return Err(Error::Riccati {
            message: "sign iteration diverged".into(),
            residuals: vec![],
        });
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let w11 = z.view((0, 0), (n, n)).into_owned();
    let w12 = z.view((0, n), (n, n)).into_owned();
    let w21 = z.view((n, 0), (n, n)).into_owned();
    let w22 = z.view((n, n), (n, n)).into_owned();
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w22 + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w11 + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w21));
    let svd = lhs.svd(true, true);
    let mut x = svd.solve(&rhs, 1e-14).map_err(|m| Error::Riccati {
        message: format!("least-squares extraction failed: {m}"),
        residuals: vec![],
    })?;
    symmetrize(&mut x);
    Ok(x)
}

/// Solves the CARE for `(A, B, Q, R)`.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    opts: &CareOptions,
) -> Result<CareSolution> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::Shape {
            context: "Riccati operands".into(),
            expected: n,
            actual: b.nrows(),
        });
    }
    let r_chol = r.clone().cholesky().ok_or_else(|| Error::Riccati {
        message: "R must be symmetric positive definite".into(),
        residuals: vec![],
    })?;
    if !is_stabilizable(a, b) {
        return Err(Error::Riccati {
            message: "(A, B) is not stabilizable".into(),
            residuals: vec![],
        });
    }
    let r_inv_bt = r_chol.solve(&b.transpose());
    let g = b * &r_inv_bt;
    let mut g_sym = g.clone();
    symmetrize(&mut g_sym);

    let mut x = sign_function_guess(a, &g_sym, q, opts)?;
    let mut history = vec![care_residual(a, &g_sym, q, &x)];
    let mut best = (history[0], x.clone());
    for _ in 0..opts.max_newton_iterations {
        let f = a - &g_sym * &x;
        if !is_hurwitz(&f) {
            break;
        }
        let rhs = q + &x * &g_sym * &x;
        let next = match solve_lyapunov(&f, &rhs) {
            Ok(v) => v,
            Err(_) => break,
        };
        let res = care_residual(a, &g_sym, q, &next);
        history.push(res);
        x = next;
        // Keep polishing past the tolerance until Newton stops improving.
        if res < best.0 {
            best = (res, x.clone());
        } else if best.0 < opts.tolerance || res > 10.0 * best.0 {
            break;
        }
    }
    let (residual, x) = best;
    if !(residual < opts.tolerance) {
        return Err(Error::Riccati {
            message: format!("residual {residual:e} above tolerance {:e}", opts.tolerance),
            residuals: history,
        });
    }
    let k = &r_inv_bt * &x;
    Ok(CareSolution {
        x,
        k,
        residual,
        residual_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_integrator() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let s = solve_care(
            &DMatrix::zeros(1, 1),
            &one,
            &one,
            &one,
            &CareOptions::default(),
        )
        .unwrap();
        assert!((s.x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((s.k[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_unstable_closed_form() {
        // x' = a x + b u: X = (a + sqrt(a^2 + b^2 q / r)) r / b^2.
        let (a, b, q, r): (f64, f64, f64, f64) = (2.0, 0.5, 3.0, 0.7);
        let expected = (a + (a * a + b * b * q / r).sqrt()) * r / (b * b);
        let m = |v| DMatrix::from_element(1, 1, v);
        let s = solve_care(&m(a), &m(b), &m(q), &m(r), &CareOptions::default()).unwrap();
        assert!((s.x[(0, 0)] - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn uncontrollable_unstable_mode_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(!is_stabilizable(&a, &b));
        let err = solve_care(
            &a,
            &b,
            &DMatrix::identity(2, 2),
            &DMatrix::identity(1, 1),
            &CareOptions::default(),
        );
        assert!(matches!(err, Err(Error::Riccati { .. })));
    }

    #[test]
    fn lyapunov_solution_satisfies_equation() {
        let f = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let x = solve_lyapunov(&f, &m).unwrap();
        assert!((f.transpose() * &x + &x * &f + m).norm() < 1e-12);
    }
}
