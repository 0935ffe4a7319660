use nalgebra::DMatrix;

use super::StateSpaceModel;
use crate::error::{Error, Result};

/// Cascade: the output of `first` drives the input of `second`.
///
/// States are ordered `[x_first; x_second]`, giving the block lower-triangular
/// `A = [[A1, 0], [B2 C1, A2]]`.
pub fn series(first: &StateSpaceModel, second: &StateSpaceModel) -> Result<StateSpaceModel> {
    if first.n_outputs() != second.n_inputs() {
        return Err(Error::Dimension(format!(
            "series: first has {} outputs, second has {} inputs",
            first.n_outputs(),
            second.n_inputs()
        )));
    }
    if first.domain() != second.domain() {
        return Err(Error::InvalidArgument("series: systems live in different time domains".into()));
    }
    let (n1, n2) = (first.n_states(), second.n_states());
    let n = n1 + n2;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(first.a());
    a.view_mut((n1, 0), (n2, n1)).copy_from(&(second.b() * first.c()));
    a.view_mut((n1, n1), (n2, n2)).copy_from(second.a());

    let mut b = DMatrix::zeros(n, first.n_inputs());
    b.view_mut((0, 0), (n1, first.n_inputs())).copy_from(first.b());
    b.view_mut((n1, 0), (n2, first.n_inputs())).copy_from(&(second.b() * first.d()));

    let mut c = DMatrix::zeros(second.n_outputs(), n);
    c.view_mut((0, 0), (second.n_outputs(), n1)).copy_from(&(second.d() * first.c()));
    c.view_mut((0, n1), (second.n_outputs(), n2)).copy_from(second.c());

    let d = second.d() * first.d();
    StateSpaceModel::new(a, b, c, d, first.domain())
}

/// Sum of two systems driven by the same input.
pub fn parallel(first: &StateSpaceModel, second: &StateSpaceModel) -> Result<StateSpaceModel> {
    if first.n_inputs() != second.n_inputs() || first.n_outputs() != second.n_outputs() {
        return Err(Error::Dimension("parallel: input/output dimensions differ".into()));
    }
    if first.domain() != second.domain() {
        return Err(Error::InvalidArgument("parallel: systems live in different time domains".into()));
    }
    let (n1, n2) = (first.n_states(), second.n_states());
    let n = n1 + n2;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (n1, n1)).copy_from(first.a());
    a.view_mut((n1, n1), (n2, n2)).copy_from(second.a());
    let mut b = DMatrix::zeros(n, first.n_inputs());
    b.view_mut((0, 0), (n1, first.n_inputs())).copy_from(first.b());
    b.view_mut((n1, 0), (n2, first.n_inputs())).copy_from(second.b());
    let mut c = DMatrix::zeros(first.n_outputs(), n);
    c.view_mut((0, 0), (first.n_outputs(), n1)).copy_from(first.c());
    c.view_mut((0, n1), (first.n_outputs(), n2)).copy_from(second.c());
    StateSpaceModel::new(a, b, c, first.d() + second.d(), first.domain())
}

pub fn negate(sys: &StateSpaceModel) -> StateSpaceModel {
    StateSpaceModel::new(sys.a().clone(), sys.b().clone(), -sys.c(), -sys.d(), sys.domain())
        .expect("negation preserves validity")
}

/// Realization of `s·G(s)` for a strictly proper continuous `G`:
/// `s C (sI - A)^-1 B = C A (sI - A)^-1 B + C B`.
pub fn differentiate(sys: &StateSpaceModel) -> Result<StateSpaceModel> {
    if !sys.is_continuous() {
        return Err(Error::InvalidArgument("differentiate needs a continuous-time system".into()));
    }
    if sys.d().iter().any(|v| *v != 0.0) {
        return Err(Error::InvalidArgument("s·G(s) is improper when G has direct feedthrough".into()));
    }
    StateSpaceModel::continuous(sys.a().clone(), sys.b().clone(), sys.c() * sys.a(), sys.c() * sys.b())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{eval_at, tf_to_ss, TransferFunction};
    use num_complex::Complex64;

    fn tf(num: &[f64], den: &[f64]) -> StateSpaceModel {
        tf_to_ss(&TransferFunction::new(num.to_vec(), den.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn static_gains_multiply() {
        let s = series(
            &StateSpaceModel::static_gain(DMatrix::from_element(1, 1, 2.0)),
            &StateSpaceModel::static_gain(DMatrix::from_element(1, 1, 3.0)),
        )
        .unwrap();
        assert_eq!(s.n_states(), 0);
        assert_eq!(s.d()[(0, 0)], 6.0);
    }

    #[test]
    fn lags_in_series_at_dc() {
        let s = series(&tf(&[1.0], &[1.0, 1.0]), &tf(&[1.0], &[1.0, 2.0])).unwrap();
        assert!((s.dc_gain().unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn series_response_is_product() {
        let g1 = tf(&[1.0, 0.3], &[1.0, 0.5, 2.0]);
        let g2 = tf(&[2.0, 1.0, 0.1], &[1.0, 1.0, 0.25]);
        let s = series(&g1, &g2).unwrap();
        for w in [0.05, 0.5, 1.41, 9.0] {
            let jw = Complex64::new(0.0, w);
            let prod = eval_at(&g1, jw).unwrap()[(0, 0)] * eval_at(&g2, jw).unwrap()[(0, 0)];
            let got = eval_at(&s, jw).unwrap()[(0, 0)];
            assert!((got - prod).norm() <= 1e-9 * prod.norm());
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let two_out = StateSpaceModel::static_gain(DMatrix::identity(2, 2));
        assert!(series(&two_out, &tf(&[1.0], &[1.0, 1.0])).is_err());
    }

    #[test]
    fn derivative_of_lag() {
        // s/(s+1) at s = j
        let d = differentiate(&tf(&[1.0], &[1.0, 1.0])).unwrap();
        let jw = Complex64::new(0.0, 1.0);
        let expect = jw / (jw + 1.0);
        assert!((eval_at(&d, jw).unwrap()[(0, 0)] - expect).norm() < 1e-14);
    }
}
