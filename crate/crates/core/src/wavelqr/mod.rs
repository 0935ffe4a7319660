//! LQR synthesis with band-pass input weighting for wave rejection.
//!
//! Case 1 uses a plain LQR on the 4-state error dynamics. Cases 2 and 3 append
//! the states of two band-pass filters driven by `δ_v` and `δ_m`, so that the
//! cost penalizes actuator motion near the wave frequency.

mod dd;
mod filter;
mod riccati;

pub use filter::{design_bandpass, BandpassDesign, DEFAULT_FILTER_ORDER, DEFAULT_NOTCH_DEPTH, DEFAULT_RELATIVE_WIDTH};
pub use riccati::{riccati_residual_matrix, solve_lqr, LqrSolution};

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, SynthesisError};
use crate::lti::linalg::{is_pd, is_psd};
use crate::plant::{ControlInput, VehiclePlant};

/// Plant with the two filter state blocks appended: `x̂ = [x̃; x_Hv; x_Hm]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPlant {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    pub n_v: usize,
    pub n_m: usize,
}

impl AugmentedPlant {
    pub fn n_states(&self) -> usize {
        4 + self.n_v + self.n_m
    }

    pub fn plant_range(&self) -> std::ops::Range<usize> {
        0..4
    }

    pub fn hv_range(&self) -> std::ops::Range<usize> {
        4..4 + self.n_v
    }

    pub fn hm_range(&self) -> std::ops::Range<usize> {
        4 + self.n_v..self.n_states()
    }
}

fn check_siso(f: &BandpassDesign, name: &str) -> Result<()> {
    let r = &f.realization;
    if r.n_inputs() != 1 || r.n_outputs() != 1 {
        return Err(Error::Dimension(format!(
            "filter {name} must be single-input single-output, got {}x{}",
            r.n_outputs(),
            r.n_inputs()
        )));
    }
    if !r.is_continuous() {
        return Err(Error::InvalidArgument(format!("filter {name} must be continuous-time")));
    }
    Ok(())
}

/// Block-diagonal `Â = diag(A, A_Hv, A_Hm)`; `B̂` stacks `B`, `[B_Hv 0]`, `[0 B_Hm]`.
pub fn build_augmented_plant(plant: &VehiclePlant, hv: &BandpassDesign, hm: &BandpassDesign) -> Result<AugmentedPlant> {
    check_siso(hv, "H_v")?;
    check_siso(hm, "H_m")?;
    let (fv, fm) = (&hv.realization, &hm.realization);
    let (n_v, n_m) = (fv.n_states(), fm.n_states());
    let n = 4 + n_v + n_m;
    let mut a_hat = DMatrix::zeros(n, n);
    a_hat.view_mut((0, 0), (4, 4)).copy_from(plant.a());
    a_hat.view_mut((4, 4), (n_v, n_v)).copy_from(fv.a());
    a_hat.view_mut((4 + n_v, 4 + n_v), (n_m, n_m)).copy_from(fm.a());
    let mut b_hat = DMatrix::zeros(n, 2);
    b_hat.view_mut((0, 0), (4, 2)).copy_from(plant.b());
    b_hat.view_mut((4, 0), (n_v, 1)).copy_from(fv.b());
    b_hat.view_mut((4 + n_v, 1), (n_m, 1)).copy_from(fm.b());
    Ok(AugmentedPlant { a_hat, b_hat, n_v, n_m })
}

/// Weights of the filtered cost `x̃ᵀQ1x̃ + Q2v δ_Hv² + Q2m δ_Hm² + uᵀRu`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q1: DMatrix<f64>,
    pub q2v: f64,
    pub q2m: f64,
    pub r: DMatrix<f64>,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            q1: DMatrix::from_diagonal(&DVector::from_vec(vec![50.0, 50.0, 2000.0, 2000.0])),
            q2v: 1.0,
            q2m: 1e-5,
            r: DMatrix::from_diagonal(&DVector::from_vec(vec![500.0, 0.1])),
        }
    }
}

/// Expanded quadratic cost `x̂ᵀQ̂x̂ + 2x̂ᵀN̂u + uᵀR̂u`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCost {
    pub q_hat: DMatrix<f64>,
    pub n_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
}

pub fn build_cost(weights: &CostWeights, hv: &BandpassDesign, hm: &BandpassDesign) -> Result<AugmentedCost> {
    check_siso(hv, "H_v")?;
    check_siso(hm, "H_m")?;
    if weights.q1.shape() != (4, 4) || weights.r.shape() != (2, 2) {
        return Err(Error::Dimension("Q1 must be 4x4 and R 2x2".into()));
    }
    if !is_psd(&weights.q1, 1e-12) {
        return Err(Error::InvalidArgument("Q1 must be positive semidefinite".into()));
    }
    if !(weights.q2v >= 0.0 && weights.q2m >= 0.0) {
        return Err(Error::InvalidArgument("Q2v and Q2m must be non-negative".into()));
    }
    if !is_pd(&weights.r) {
        return Err(SynthesisError::InputWeightNotPositiveDefinite.into());
    }
    let (fv, fm) = (&hv.realization, &hm.realization);
    let (n_v, n_m) = (fv.n_states(), fm.n_states());
    let n = 4 + n_v + n_m;
    let mut q_hat = DMatrix::zeros(n, n);
    q_hat.view_mut((0, 0), (4, 4)).copy_from(&weights.q1);
    q_hat.view_mut((4, 4), (n_v, n_v)).copy_from(&(fv.c().transpose() * weights.q2v * fv.c()));
    q_hat.view_mut((4 + n_v, 4 + n_v), (n_m, n_m)).copy_from(&(fm.c().transpose() * weights.q2m * fm.c()));

    let mut n_hat = DMatrix::zeros(n, 2);
    n_hat.view_mut((4, 0), (n_v, 1)).copy_from(&(fv.c().transpose() * weights.q2v * fv.d()));
    n_hat.view_mut((4 + n_v, 1), (n_m, 1)).copy_from(&(fm.c().transpose() * weights.q2m * fm.d()));

    let mut r_hat = weights.r.clone();
    r_hat[(0, 0)] += (fv.d().transpose() * weights.q2v * fv.d())[(0, 0)];
    r_hat[(1, 1)] += (fm.d().transpose() * weights.q2m * fm.d())[(0, 0)];
    if !is_pd(&r_hat) {
        return Err(SynthesisError::AugmentedInputWeight.into());
    }
    Ok(AugmentedCost { q_hat, n_hat, r_hat })
}

/// A synthesized state-feedback law `u = -K̂ x̂` with its problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrDesign {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q_hat: DMatrix<f64>,
    pub n_hat: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
    pub solution: LqrSolution,
    /// Present for filtered designs.
    pub filters: Option<(BandpassDesign, BandpassDesign)>,
}

impl LqrDesign {
    pub fn k_hat(&self) -> &DMatrix<f64> {
        &self.solution.k
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.solution.p
    }

    pub fn residual(&self) -> f64 {
        self.solution.residual
    }

    pub fn closed_loop_abscissa(&self) -> f64 {
        self.solution.closed_loop_abscissa
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    /// Filter state counts `(n_v, n_m)`; zero for the unfiltered design.
    pub fn filter_dims(&self) -> (usize, usize) {
        self.filters.as_ref().map(|(v, m)| (v.n_states(), m.n_states())).unwrap_or((0, 0))
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[lqr]");
        let _ = writeln!(s, "states = {}", self.n_states());
        let _ = writeln!(s, "riccati_residual = {:e}", self.residual());
        let _ = writeln!(s, "newton_steps = {}", self.solution.newton_steps);
        let _ = writeln!(s, "closed_loop_abscissa = {:e}", self.closed_loop_abscissa());
        let _ = writeln!(s, "p_max = {:e}", self.p().amax());
        let _ = writeln!(s, "r_hat = {}", fmt_row_major(&self.r_hat));
        for (i, row) in self.k_hat().row_iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "k_hat.row{} = {}", i + 1, vals.join(" "));
        }
        let mut eig = self.solution.closed_loop_eigenvalues.clone();
        eig.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
        let _ = writeln!(s, "closed_loop_eigenvalues:");
        for l in eig {
            let _ = writeln!(s, "  {:+.6e} {:+.6e}i", l.re, l.im);
        }
        if let Some((hv, hm)) = &self.filters {
            for (name, f) in [("hv", hv), ("hm", hm)] {
                let _ = writeln!(s, "[filter.{name}]");
                let _ = writeln!(s, "order = {}", f.order);
                let _ = writeln!(s, "center_omega = {}", f.center_omega);
                let _ = writeln!(s, "notch_depth = {}", f.notch_depth);
                let _ = writeln!(s, "relative_width = {}", f.relative_width);
                let w = f.center_omega;
                let _ = writeln!(s, "gain_at_0 = {:e}", f.gain_at(0.0));
                let _ = writeln!(s, "gain_at_center = {:e}", f.gain_at(w));
                let _ = writeln!(s, "gain_at_10x_center = {:e}", f.gain_at(10.0 * w));
                for warn in &f.warnings {
                    let _ = writeln!(s, "warning = {warn}");
                }
            }
        }
        s
    }
}

fn fmt_row_major(m: &DMatrix<f64>) -> String {
    m.row_iter().map(|r| r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")).collect::<Vec<_>>().join("; ")
}

/// Case-1 controller: LQR on the 4-state error dynamics with no cross term.
pub fn naive_gain(plant: &VehiclePlant, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<LqrDesign> {
    let n = DMatrix::zeros(4, 2);
    let solution = solve_lqr(plant.a(), plant.b(), q, &n, r)?;
    Ok(LqrDesign {
        a: plant.a().clone(),
        b: plant.b().clone(),
        q_hat: q.clone(),
        n_hat: n,
        r_hat: r.clone(),
        solution,
        filters: None,
    })
}

/// Case-2/3 controller on the filter-augmented plant.
pub fn filtered_gain(
    plant: &VehiclePlant,
    weights: &CostWeights,
    hv: &BandpassDesign,
    hm: &BandpassDesign,
) -> Result<LqrDesign> {
    let aug = build_augmented_plant(plant, hv, hm)?;
    let cost = build_cost(weights, hv, hm)?;
    let solution = solve_lqr(&aug.a_hat, &aug.b_hat, &cost.q_hat, &cost.n_hat, &cost.r_hat)?;
    Ok(LqrDesign {
        a: aug.a_hat,
        b: aug.b_hat,
        q_hat: cost.q_hat,
        n_hat: cost.n_hat,
        r_hat: cost.r_hat,
        solution,
        filters: Some((hv.clone(), hm.clone())),
    })
}

/// `u = -K̂ [x̃; x_Hv; x_Hm]`.
pub fn control(k_hat: &DMatrix<f64>, x_tilde: &[f64; 4], x_hv: &[f64], x_hm: &[f64]) -> Result<ControlInput> {
    let n = 4 + x_hv.len() + x_hm.len();
    if k_hat.shape() != (2, n) {
        return Err(Error::Dimension(format!("gain is {:?}, state has {} entries", k_hat.shape(), n)));
    }
    let mut u = [0.0; 2];
    for (i, ui) in u.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, v) in x_tilde.iter().chain(x_hv).chain(x_hm).enumerate() {
            acc += k_hat[(i, j)] * v;
        }
        *ui = -acc;
    }
    Ok(ControlInput::new(u[0], u[1]))
}
