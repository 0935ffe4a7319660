use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves the continuous Lyapunov equation `Aᵀ X + X A + Q = 0`.
///
/// Bartels–Stewart on the complex Schur form of `A`. The solution is unique
/// when no two eigenvalues of `A` satisfy `λᵢ + conj(λⱼ) = 0`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::Dimension("lyapunov: A and Q must be square and conformant".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let schur = Schur::try_new(ac, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Singular("lyapunov: Schur decomposition did not converge".into()))?;
    let (u, t) = schur.unpack();
    let uh = u.adjoint();
    let c = -(&uh * q.map(|v| Complex64::new(v, 0.0)) * &u);

    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut rhs = c[(i, j)];
            for k in 0..i {
                rhs -= t[(k, i)].conj() * y[(k, j)];
            }
            for k in 0..j {
                rhs -= y[(i, k)] * t[(k, j)];
            }
            let denom = t[(i, i)].conj() + t[(j, j)];
            if denom.norm() <= 1e3 * f64::EPSILON * scale {
                return Err(Error::Singular("lyapunov: A has eigenvalues symmetric about the imaginary axis".into()));
            }
            y[(i, j)] = rhs / denom;
        }
    }
    let x = (&u * y * uh).map(|v| v.re);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("lyapunov solution is not finite".into()));
    }
    Ok((&x + x.transpose()) * 0.5)
}
