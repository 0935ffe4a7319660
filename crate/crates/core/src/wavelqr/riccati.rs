//! Continuous algebraic Riccati equation with a cross term:
//! `Aᵀ P + P A - (P B + N) R⁻¹ (Bᵀ P + Nᵀ) + Q = 0`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::dd::{dd_inverse, DdMatrix};
use crate::error::{Error, Result, SynthesisError};
use crate::lti::linalg::{inverse, is_pd, min_singular_value_complex, min_symmetric_eigenvalue, symmetrize};
use crate::lti::{solve_lyapunov, spectral_abscissa};

/// Stabilizing solution and the resulting state-feedback gain.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrSolution {
    /// `R⁻¹ (Bᵀ P + Nᵀ)`, so that `u = -K x`.
    pub k: DMatrix<f64>,
    /// Riccati solution rounded to f64.
    pub p: DMatrix<f64>,
    /// Low-order part: the refined solution is `p + p_lo` in extended precision.
    pub p_lo: DMatrix<f64>,
    /// Max-abs Riccati residual of `p + p_lo`, evaluated in double-double arithmetic.
    pub residual: f64,
    pub closed_loop_abscissa: f64,
    pub closed_loop_eigenvalues: Vec<Complex64>,
    pub newton_steps: usize,
}

fn check_dims(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, n: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<()> {
    let nx = a.nrows();
    let nu = b.ncols();
    if a.ncols() != nx || b.nrows() != nx || q.shape() != (nx, nx) || n.shape() != (nx, nu) || r.shape() != (nu, nu) {
        return Err(Error::Dimension(format!(
            "riccati: A {:?}, B {:?}, Q {:?}, N {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            n.shape(),
            r.shape()
        )));
    }
    for (name, m) in [("A", a), ("B", b), ("Q", q), ("N", n), ("R", r)] {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(name.into()));
        }
    }
    Ok(())
}

/// Residual matrix of `P = hi + lo`, computed in double-double and rounded.
pub fn riccati_residual_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    n: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p_hi: &DMatrix<f64>,
    p_lo: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let r_inv = inverse(r, "riccati: R")?;
    let r_inv_dd = dd_inverse(r, &r_inv);
    Ok(residual_dd(a, b, q, n, &r_inv_dd, &DdMatrix::from_parts(p_hi, p_lo)).to_f64())
}

fn residual_dd(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    n: &DMatrix<f64>,
    r_inv: &DdMatrix,
    p: &DdMatrix,
) -> DdMatrix {
    let pa = p.mul_f64_right(a);
    let lin = pa.add(&pa.transpose());
    let s = p.mul_f64_right(b).add_f64(n);
    let quad = s.mul(r_inv).mul(&s.transpose());
    lin.sub(&quad).add_f64(q)
}

/// Matrix sign function of `z` by the scaled Newton iteration.
fn matrix_sign(mut z: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let dim = z.nrows() as f64;
    for _ in 0..200 {
        let lu = z.clone().lu();
        let log_det: f64 = lu.u().diagonal().iter().map(|p| p.abs().ln()).sum();
        if !log_det.is_finite() {
            return None;
        }
        let zi = lu.try_inverse()?;
        let c = (-log_det / dim).exp();
        let next = (&z * c + zi / c) * 0.5;
        let change = (&next - &z).abs().sum() / z.abs().sum().max(f64::MIN_POSITIVE);
        z = next;
        if z.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if change < 1e-13 {
            return Some(z);
        }
    }
    None
}

/// Stabilizing solution of the shifted CARE `Ãᵀ P + P Ã - P G P + Q̃ = 0`
/// from the sign of the (cost-scaled) Hamiltonian.
fn sign_function_solution(at: &DMatrix<f64>, g: &DMatrix<f64>, qt: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let nx = at.nrows();
    let alpha = {
        let gn = g.norm();
        let qn = qt.norm();
        if gn > 0.0 && qn > 0.0 {
            (qn / gn).sqrt()
        } else {
            1.0
        }
    };
    let mut h = DMatrix::zeros(2 * nx, 2 * nx);
    h.view_mut((0, 0), (nx, nx)).copy_from(at);
    h.view_mut((0, nx), (nx, nx)).copy_from(&(-g * alpha));
    h.view_mut((nx, 0), (nx, nx)).copy_from(&(-qt / alpha));
    h.view_mut((nx, nx), (nx, nx)).copy_from(&(-at.transpose()));
    let w = matrix_sign(h)?;

    let eye = DMatrix::<f64>::identity(nx, nx);
    let mut lhs = DMatrix::zeros(2 * nx, nx);
    lhs.view_mut((0, 0), (nx, nx)).copy_from(&w.view((0, nx), (nx, nx)));
    lhs.view_mut((nx, 0), (nx, nx)).copy_from(&(w.view((nx, nx), (nx, nx)) + &eye));
    let mut rhs = DMatrix::zeros(2 * nx, nx);
    rhs.view_mut((0, 0), (nx, nx)).copy_from(&(-(w.view((0, 0), (nx, nx)) + &eye)));
    rhs.view_mut((nx, 0), (nx, nx)).copy_from(&(-w.view((nx, 0), (nx, nx))));
    let x = lhs.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let p = symmetrize(&x) * alpha;
    p.iter().all(|v| v.is_finite()).then_some(p)
}

fn pbh_tol(m: &DMatrix<Complex64>) -> f64 {
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    1e-10 * scale.max(f64::MIN_POSITIVE)
}

/// Modes with `Re λ >= 0` must be reachable from `B`.
fn check_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(), SynthesisError> {
    let nx = a.nrows();
    for lam in a.complex_eigenvalues().iter() {
        if lam.re < -1e-12 {
            continue;
        }
        let mut m = DMatrix::<Complex64>::zeros(nx, nx + b.ncols());
        for i in 0..nx {
            for j in 0..nx {
                m[(i, j)] = Complex64::new(-a[(i, j)], 0.0);
            }
            m[(i, i)] += lam;
            for j in 0..b.ncols() {
                m[(i, nx + j)] = Complex64::new(b[(i, j)], 0.0);
            }
        }
        if min_singular_value_complex(&m) <= pbh_tol(&m) {
            return Err(SynthesisError::NotStabilizable { re: lam.re, im: lam.im });
        }
    }
    Ok(())
}

/// Modes with `Re λ >= 0` must be seen by the state weight.
fn check_detectable(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<(), SynthesisError> {
    let nx = a.nrows();
    for lam in a.complex_eigenvalues().iter() {
        if lam.re < -1e-12 {
            continue;
        }
        let mut m = DMatrix::<Complex64>::zeros(2 * nx, nx);
        for i in 0..nx {
            for j in 0..nx {
                m[(i, j)] = Complex64::new(-a[(i, j)], 0.0);
                m[(nx + i, j)] = Complex64::new(q[(i, j)], 0.0);
            }
            m[(i, i)] += lam;
        }
        if min_singular_value_complex(&m) <= pbh_tol(&m) {
            return Err(SynthesisError::NotDetectable {
                detail: format!("mode {:e}{:+e}i is not penalized by the state weight", lam.re, lam.im),
            });
        }
    }
    Ok(())
}

/// Solves the CARE with cross term and returns the stabilizing gain.
///
/// The initial solution comes from the matrix sign function of the Hamiltonian
/// of the shifted pair `(A - B R⁻¹ Nᵀ, Q - N R⁻¹ Nᵀ)`. Newton corrections
/// `(A - BK)ᵀ Δ + Δ (A - BK) = -Res(P)` then refine it, with `Res` evaluated in
/// double-double so that large solutions still reach a small absolute residual.
pub fn solve_lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    n: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<LqrSolution> {
    check_dims(a, b, q, n, r)?;
    if !is_pd(r) {
        return Err(SynthesisError::InputWeightNotPositiveDefinite.into());
    }
    let r_inv = inverse(r, "riccati: R")?;
    let at = a - b * &r_inv * n.transpose();
    let qt = symmetrize(&(q - n * &r_inv * n.transpose()));
    let g = symmetrize(&(b * &r_inv * b.transpose()));

    let q_scale = q.amax().max(n.amax());
    if qt.amax() <= 1e-14 * q_scale || q_scale == 0.0 {
        return Err(SynthesisError::NotDetectable { detail: "the state weight is identically zero".into() }.into());
    }
    let min_eig = min_symmetric_eigenvalue(&qt);
    if min_eig < -1e-10 * qt.amax() {
        return Err(SynthesisError::IndefiniteSchurComplement { min_eigenvalue: min_eig }.into());
    }
    check_stabilizable(&at, b)?;
    check_detectable(&at, &qt)?;

    let p0 = sign_function_solution(&at, &g, &qt).ok_or(SynthesisError::NoStabilizingSolution)?;

    let r_inv_dd = dd_inverse(r, &r_inv);
    let mut p = DdMatrix::from_f64(&p0);
    let gain = |p: &DMatrix<f64>| &r_inv * (b.transpose() * p + n.transpose());

    let mut res = residual_dd(a, b, q, n, &r_inv_dd, &p).to_f64();
    let mut best = res.amax();
    let mut steps = 0;
    let mut stalls = 0;
    while steps < 60 && stalls < 3 && best > 0.0 {
        let k = gain(&p.to_f64());
        let acl = a - b * &k;
        if spectral_abscissa(&acl) >= 0.0 {
            break;
        }
        let delta = solve_lyapunov(&acl, &res)?;
        let candidate = p.add_f64(&delta);
        let cand_res = residual_dd(a, b, q, n, &r_inv_dd, &candidate).to_f64();
        steps += 1;
        let cand_max = cand_res.amax();
        if !cand_max.is_finite() {
            break;
        }
        if !(cand_max < best) {
            break;
        }
        stalls = if cand_max > 0.5 * best { stalls + 1 } else { 0 };
        p = candidate;
        res = cand_res;
        best = cand_max;
    }

    let p_hi = p.hi();
    let p_lo = p.lo();
    let k = gain(&p.to_f64());
    let acl = a - b * &k;
    let eig: Vec<Complex64> = acl.complex_eigenvalues().iter().copied().collect();
    let abscissa = eig.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !(abscissa < 0.0) {
        return Err(SynthesisError::ClosedLoopUnstable { abscissa }.into());
    }
    Ok(LqrSolution {
        k,
        p: p_hi,
        p_lo,
        residual: best,
        closed_loop_abscissa: abscissa,
        closed_loop_eigenvalues: eig,
        newton_steps: steps,
    })
}
