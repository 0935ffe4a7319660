//! Double-double arithmetic for Riccati residuals.
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
//! giving roughly 32 significant digits.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Dense matrix of double-doubles, column-major like nalgebra.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DdMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Dd::ZERO; rows * cols] }
    }

    pub fn from_f64(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out.set(i, j, Dd::from_f64(m[(i, j)]));
            }
        }
        out
    }

    pub fn from_parts(hi: &DMatrix<f64>, lo: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(hi.nrows(), hi.ncols());
        for j in 0..hi.ncols() {
            for i in 0..hi.nrows() {
                out.set(i, j, Dd::from_f64(hi[(i, j)]).add(Dd::from_f64(lo[(i, j)])));
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Dd {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Dd) {
        self.data[i + j * self.rows] = v;
    }

    pub fn hi(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).hi)
    }

    pub fn lo(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).lo)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).to_f64())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&o.data) {
            *a = a.add(*b);
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&o.data) {
            *a = a.sub(*b);
        }
        out
    }

    pub fn add_f64(&self, o: &DMatrix<f64>) -> Self {
        self.add(&Self::from_f64(o))
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut out = Self::zeros(self.rows, o.cols);
        for j in 0..o.cols {
            for i in 0..self.rows {
                let mut acc = Dd::ZERO;
                for k in 0..self.cols {
                    acc = acc.add(self.get(i, k).mul(o.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn mul_f64_right(&self, o: &DMatrix<f64>) -> Self {
        assert_eq!(self.cols, o.nrows());
        let mut out = Self::zeros(self.rows, o.ncols());
        for j in 0..o.ncols() {
            for i in 0..self.rows {
                let mut acc = Dd::ZERO;
                for k in 0..self.cols {
                    acc = acc.add(self.get(i, k).mul_f64(o[(k, j)]));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.set(i, i, Dd::from_f64(1.0));
        }
        out
    }
}

/// Inverse of a well-conditioned f64 matrix to double-double accuracy
/// by Newton–Schulz refinement of the f64 inverse.
pub(crate) fn dd_inverse(m: &DMatrix<f64>, f64_inverse: &DMatrix<f64>) -> DdMatrix {
    let n = m.nrows();
    let md = DdMatrix::from_f64(m);
    let two = {
        let mut t = DdMatrix::identity(n);
        for i in 0..n {
            t.set(i, i, Dd::from_f64(2.0));
        }
        t
    };
    let mut x = DdMatrix::from_f64(f64_inverse);
    for _ in 0..3 {
        let mx = md.mul(&x);
        x = x.mul(&two.sub(&mx));
    }
    x
}
