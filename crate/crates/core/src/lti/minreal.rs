use nalgebra::DMatrix;

use super::StateSpaceModel;
use crate::error::Result;

/// Default relative rank tolerance for [`minreal`].
pub const DEFAULT_MINREAL_TOL: f64 = 1e-8;

fn orth_columns(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > abs_tol).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Orthonormal basis of the reachable subspace of `(A, B)`, built block by block.
///
/// `b_scale` is the reference size for the input directions; it comes from the
/// original system so that a projected `B` made of round-off is not promoted.
fn reachable_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, b_scale: f64, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let a_scale = a.norm().max(f64::MIN_POSITIVE);
    let mut basis = orth_columns(b, tol * b_scale);
    let mut frontier = basis.clone();
    while basis.ncols() < n && frontier.ncols() > 0 {
        let mut w = a * &frontier;
        // two passes of Gram-Schmidt against the current basis
        for _ in 0..2 {
            let proj = &basis * (basis.transpose() * &w);
            w -= proj;
        }
        frontier = orth_columns(&w, tol * a_scale);
        if frontier.ncols() == 0 {
            break;
        }
        let mut grown = DMatrix::zeros(n, basis.ncols() + frontier.ncols());
        grown.view_mut((0, 0), (n, basis.ncols())).copy_from(&basis);
        grown.view_mut((0, basis.ncols()), (n, frontier.ncols())).copy_from(&frontier);
        basis = grown;
    }
    basis.columns(0, basis.ncols().min(n)).into_owned()
}

/// Removes uncontrollable and unobservable states by orthogonal projection.
///
/// `tol` is relative: a new direction counts when its singular value exceeds
/// `tol` times the norm of `B` (or `C`) for the first block and of `A` after.
/// The transfer matrix and the time domain are preserved.
pub fn minreal(sys: &StateSpaceModel, tol: f64) -> Result<StateSpaceModel> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());

    let v = reachable_basis(a, b, b.norm(), tol);
    let vt = v.transpose();
    let ar = &vt * a * &v;
    let br = &vt * b;
    let cr = c * &v;

    let w = reachable_basis(&ar.transpose(), &cr.transpose(), c.norm(), tol);
    let wt = w.transpose();
    let am = &wt * &ar * &w;
    let bm = &wt * &br;
    let cm = &cr * &w;

    StateSpaceModel::new(am, bm, cm, d.clone(), sys.domain())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{eval_at, series, tf_to_ss, TransferFunction};
    use num_complex::Complex64;

    fn tf(num: &[f64], den: &[f64]) -> StateSpaceModel {
        tf_to_ss(&TransferFunction::new(num.to_vec(), den.to_vec()).unwrap()).unwrap()
    }

    fn same_response(x: &StateSpaceModel, y: &StateSpaceModel) {
        for w in [0.0, 0.03, 0.4, 2.0, 11.0] {
            let s = Complex64::new(0.0, w);
            let hx = eval_at(x, s).unwrap();
            let hy = eval_at(y, s).unwrap();
            assert!((&hx - &hy).norm() <= 1e-9 * (1.0 + hx.norm()), "at ω={w}: {hx} vs {hy}");
        }
    }

    #[test]
    fn pole_zero_cancellation_gives_static_gain() {
        let s = series(&tf(&[1.0, 1.0], &[1.0, 2.0]), &tf(&[1.0, 2.0], &[1.0, 1.0])).unwrap();
        assert_eq!(s.n_states(), 2);
        let m = minreal(&s, DEFAULT_MINREAL_TOL).unwrap();
        assert_eq!(m.n_states(), 0);
        assert!((m.d()[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_cancellation() {
        let s = series(&tf(&[1.0], &[1.0, 2.0]), &tf(&[1.0, 2.0], &[1.0, 3.0])).unwrap();
        let m = minreal(&s, DEFAULT_MINREAL_TOL).unwrap();
        assert_eq!(m.n_states(), 1);
        same_response(&s, &m);
        assert!((m.a()[(0, 0)] + 3.0).abs() < 1e-10);
    }

    #[test]
    fn minimal_system_is_left_alone() {
        let mz = tf(&[0.0064], &[1.0, 0.16, 0.0064]);
        let m = minreal(&mz, DEFAULT_MINREAL_TOL).unwrap();
        assert_eq!(m.n_states(), 2);
        same_response(&mz, &m);
    }

    #[test]
    fn decoupled_duplicate_mode_is_removed() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[-1.0, 0.4, 0.0, 0.0, -0.3, -0.8, 0.2, 0.0, 0.0, 0.1, -2.0, 0.0, 0.0, 0.0, 0.0, -1.5],
        );
        // the last state is never excited
        let b = DMatrix::from_row_slice(4, 1, &[1.0, 0.0, 0.5, 0.0]);
        let c = DMatrix::from_row_slice(1, 4, &[1.0, -1.0, 0.3, 2.0]);
        let sys = StateSpaceModel::continuous(a, b, c, DMatrix::zeros(1, 1)).unwrap();
        let m = minreal(&sys, DEFAULT_MINREAL_TOL).unwrap();
        assert_eq!(m.n_states(), 3);
        same_response(&sys, &m);
    }

    #[test]
    fn dc_gain_is_preserved() {
        let s = series(&tf(&[2.0, 1.0], &[1.0, 3.0, 2.0]), &tf(&[1.0, 1.0], &[1.0, 4.0])).unwrap();
        let m = minreal(&s, DEFAULT_MINREAL_TOL).unwrap();
        assert!(m.n_states() < s.n_states());
        let g0 = s.dc_gain().unwrap()[(0, 0)];
        assert!((m.dc_gain().unwrap()[(0, 0)] - g0).abs() < 1e-10 * g0.abs());
    }

    #[test]
    fn small_gains_are_not_mistaken_for_zero() {
        let s = series(&tf(&[1e-6], &[1.0, 0.01]), &tf(&[1.0, 0.16], &[1.0, 0.02, 1e-4])).unwrap();
        let m = minreal(&s, DEFAULT_MINREAL_TOL).unwrap();
        assert_eq!(m.n_states(), 3);
        same_response(&s, &m);
    }
}
