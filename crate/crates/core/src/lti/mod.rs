//! Linear time-invariant systems: realizations, discretization,
//! interconnection, frequency response and the L1 system norm.

mod discretize;
mod freq;
mod interconnect;
pub mod linalg;
mod lyapunov;
mod minreal;
mod norm;
mod tf;

pub(crate) use discretize::exp_and_integral;
pub use discretize::{expm, zoh_discretize};
pub use freq::{eval_at, freq_response};
pub use interconnect::{differentiate, negate, parallel, series};
pub use lyapunov::solve_lyapunov;
pub use minreal::{minreal, DEFAULT_MINREAL_TOL};
pub use norm::{l1_norm, l1_norm_auto, L1Norm};
pub use tf::{tf_to_ss, TransferFunction};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Time domain of a realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Continuous,
    /// Sampled with the given step in seconds.
    Discrete(f64),
}

/// State-space realization `(A, B, C, D)`.
///
/// Continuous: `x' = A x + B u`, `y = C x + D u`.
/// Discrete: `x[k+1] = A x[k] + B u[k]`, `y[k] = C x[k] + D u[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    domain: Domain,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>, domain: Domain) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}, expected square", n, a.ncols())));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A has {}", b.nrows(), n)));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, A has {}", c.ncols(), n)));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name.to_string()));
            }
        }
        if let Domain::Discrete(step) = domain {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidArgument(format!("sample step {step} must be positive")));
            }
        }
        Ok(Self { a, b, c, d, domain })
    }

    pub fn continuous(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        Self::new(a, b, c, d, Domain::Continuous)
    }

    /// Memoryless system `y = D u`.
    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self::continuous(DMatrix::zeros(0, 0), DMatrix::zeros(0, m), DMatrix::zeros(p, 0), d)
            .expect("static gain must be finite")
    }

    /// `m`-input identity.
    pub fn identity(m: usize) -> Self {
        Self::static_gain(DMatrix::identity(m, m))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn domain(&self) -> Domain {
        self.domain
    }
    pub fn is_continuous(&self) -> bool {
        self.domain == Domain::Continuous
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (self.a, self.b, self.c, self.d)
    }

    /// Steady-state gain: `D - C A^-1 B` (continuous) or `D + C (I - A)^-1 B` (discrete).
    pub fn dc_gain(&self) -> Result<DMatrix<f64>> {
        if self.n_states() == 0 {
            return Ok(self.d.clone());
        }
        let n = self.n_states();
        let m = match self.domain {
            Domain::Continuous => -self.a.clone(),
            Domain::Discrete(_) => DMatrix::identity(n, n) - &self.a,
        };
        let x = m.lu().solve(&self.b).ok_or_else(|| Error::Singular("DC gain: system has a pole at s = 0".into()))?;
        Ok(&self.d + &self.c * x)
    }
}

/// Spectral abscissa check: returns `(max Re(eig(A)) < 0, max Re(eig(A)))`.
///
/// An empty matrix is Hurwitz with abscissa `-inf`.
pub fn is_hurwitz(a: &DMatrix<f64>) -> (bool, f64) {
    let abscissa = spectral_abscissa(a);
    (abscissa < 0.0, abscissa)
}

pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    a.complex_eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
}
