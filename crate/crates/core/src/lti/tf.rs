use nalgebra::DMatrix;
use num_complex::Complex64;

use super::StateSpaceModel;
use crate::error::{Error, Result};

/// Rational transfer function with real coefficients in descending powers of `s`.
///
/// Improper ratios are representable (for example `1/M(s)` as an
/// intermediate factor) but cannot be realized.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn trim_leading_zeros(mut p: Vec<f64>) -> Vec<f64> {
    let first = p.iter().position(|c| *c != 0.0).unwrap_or(p.len().saturating_sub(1));
    p.drain(..first);
    if p.is_empty() {
        p.push(0.0);
    }
    p
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    for (i, x) in b.iter().rev().enumerate() {
        out[n - 1 - i] += x;
    }
    out
}

pub(crate) fn poly_eval(p: &[f64], s: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(Error::InvalidArgument("empty polynomial".into()));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("transfer function coefficients".into()));
        }
        let num = trim_leading_zeros(num);
        let den = trim_leading_zeros(den);
        if den[0] == 0.0 {
            return Err(Error::InvalidArgument("denominator is identically zero".into()));
        }
        Ok(Self { num, den })
    }

    pub fn gain(k: f64) -> Self {
        Self { num: vec![k], den: vec![1.0] }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }
    pub fn den(&self) -> &[f64] {
        &self.den
    }

    fn is_zero(&self) -> bool {
        self.num.iter().all(|c| *c == 0.0)
    }

    pub fn num_degree(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.num.len() - 1
        }
    }
    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        self.num_degree() <= self.den_degree()
    }
    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.num_degree() < self.den_degree()
    }

    /// `deg(den) - deg(num)`; negative for improper ratios.
    pub fn relative_degree(&self) -> isize {
        self.den_degree() as isize - self.num_degree() as isize
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn dc_gain(&self) -> f64 {
        self.num[self.num.len() - 1] / self.den[self.den.len() - 1]
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: trim_leading_zeros(poly_mul(&self.num, &other.num)),
            den: trim_leading_zeros(poly_mul(&self.den, &other.den)),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Singular("cannot invert a zero transfer function".into()));
        }
        Ok(Self { num: self.den.clone(), den: self.num.clone() })
    }

    /// `1 - self`, used for `I - C(s)` in the L1 condition.
    pub fn one_minus(&self) -> Self {
        let neg: Vec<f64> = self.num.iter().map(|c| -c).collect();
        Self { num: trim_leading_zeros(poly_add(&self.den, &neg)), den: self.den.clone() }
    }

    /// Roots of the denominator.
    pub fn poles(&self) -> Vec<Complex64> {
        poly_roots(&self.den)
    }
}

/// Roots of a real polynomial via companion-matrix eigenvalues.
pub(crate) fn poly_roots(p: &[f64]) -> Vec<Complex64> {
    let p = trim_leading_zeros(p.to_vec());
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut comp = DMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}

/// Controllable canonical realization of a proper transfer function.
///
/// For `(b0 s^n + ... + bn) / (s^n + a1 s^(n-1) + ... + an)` the realization is
/// the companion matrix with last row `[-an, ..., -a1]`, `B = e_n`,
/// `C = [cn, ..., c1]` with `ci = bi - b0 ai`, and `D = b0`.
pub fn tf_to_ss(tf: &TransferFunction) -> Result<StateSpaceModel> {
    if !tf.is_proper() {
        return Err(Error::Improper { num_degree: tf.num_degree(), den_degree: tf.den_degree() });
    }
    let n = tf.den_degree();
    let lead = tf.den[0];
    let a: Vec<f64> = tf.den.iter().map(|c| c / lead).collect();
    let mut b = vec![0.0; n + 1 - tf.num.len()];
    b.extend(tf.num.iter().map(|c| c / lead));

    let d0 = b[0];
    let mut am = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        am[(i, i + 1)] = 1.0;
    }
    let mut bm = DMatrix::zeros(n, 1);
    let mut cm = DMatrix::zeros(1, n);
    if n > 0 {
        for j in 0..n {
            // column j multiplies s^j
            am[(n - 1, j)] = -a[n - j];
            cm[(0, j)] = b[n - j] - d0 * a[n - j];
        }
        bm[(n - 1, 0)] = 1.0;
    }
    StateSpaceModel::continuous(am, bm, cm, DMatrix::from_element(1, 1, d0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mz() -> TransferFunction {
        TransferFunction::new(vec![0.0064], vec![1.0, 0.16, 0.0064]).unwrap()
    }

    #[test]
    fn desired_model_canonical_layout() {
        let ss = tf_to_ss(&mz()).unwrap();
        assert_eq!(ss.a(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.0064, -0.16]));
        assert_eq!(ss.b(), &DMatrix::from_row_slice(2, 1, &[0.0, 1.0]));
        assert_eq!(ss.c(), &DMatrix::from_row_slice(1, 2, &[0.0064, 0.0]));
        assert_eq!(ss.d()[(0, 0)], 0.0);
    }

    #[test]
    fn unit_gain_has_no_states() {
        let ss = tf_to_ss(&TransferFunction::gain(1.0)).unwrap();
        assert_eq!(ss.n_states(), 0);
        assert_eq!(ss.d()[(0, 0)], 1.0);
    }

    #[test]
    fn cubic_lowpass_has_unit_dc_gain() {
        let den = poly_mul(&poly_mul(&[1.0, 0.01], &[1.0, 0.01]), &[1.0, 0.01]);
        let c = TransferFunction::new(vec![1e-6], den).unwrap();
        let ss = tf_to_ss(&c).unwrap();
        assert_eq!(ss.n_states(), 3);
        assert_relative_eq!(ss.dc_gain().unwrap()[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn improper_is_rejected() {
        let tf = TransferFunction::new(vec![1.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(tf_to_ss(&tf), Err(Error::Improper { num_degree: 1, den_degree: 0 })));
    }

    #[test]
    fn realization_matches_rational_function() {
        let tf = TransferFunction::new(vec![2.0, -1.0, 3.0, 0.5], vec![1.5, 2.0, 0.7, 0.3]).unwrap();
        let ss = tf_to_ss(&tf).unwrap();
        for w in [0.01, 0.3, 1.0, 7.0, 100.0] {
            let s = Complex64::new(0.0, w);
            let h = super::super::eval_at(&ss, s).unwrap()[(0, 0)];
            let expected = tf.eval(s);
            assert!((h - expected).norm() <= 1e-10 * expected.norm());
        }
    }

    #[test]
    fn leading_zeros_are_trimmed() {
        let tf = TransferFunction::new(vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(tf.num(), &[1.0]);
        assert_eq!(tf.den(), &[1.0, 1.0]);
        assert_eq!(tf.relative_degree(), 1);
    }

    #[test]
    fn one_minus_cancels_unity() {
        let c = TransferFunction::gain(1.0).one_minus();
        assert_eq!(c.num(), &[0.0]);
        assert!(c.is_strictly_proper());
    }
}
