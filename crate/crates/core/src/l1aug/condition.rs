use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::{check_c_filter_stable, DesiredModel};
use crate::error::{Error, Result};
use crate::lti::linalg::infinity_norm;
use crate::lti::{
    differentiate, is_hurwitz, l1_norm_auto, minreal, negate, parallel, series, tf_to_ss, StateSpaceModel,
    TransferFunction, DEFAULT_MINREAL_TOL,
};

/// Linear abstraction `(A_z, B_z, C_z)` of the autopilot loop seen from `z_aug`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantAbstraction {
    pub a_z: DMatrix<f64>,
    pub b_z: DMatrix<f64>,
    pub c_z: DMatrix<f64>,
}

/// Local Lipschitz bound `F_δ` of the uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub enum FDelta {
    Constant(f64),
    /// `(δ, F_δ)` pairs; a lookup takes the first entry with `δ_i ≥ δ`.
    Table(Vec<(f64, f64)>),
}

impl FDelta {
    pub fn at(&self, delta: f64) -> Option<f64> {
        match self {
            FDelta::Constant(f) => Some(*f),
            FDelta::Table(rows) => {
                let mut rows = rows.clone();
                rows.sort_by(|a, b| a.0.total_cmp(&b.0));
                rows.iter().find(|(d, _)| *d >= delta).map(|(_, f)| *f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1Constants {
    /// Bound on `‖x₀‖∞`.
    pub rho0: f64,
    pub rho_r: f64,
    pub f_delta: FDelta,
    pub l0: f64,
    /// Bound on `‖z_cmd‖∞`.
    pub m_r: f64,
    pub gamma0: f64,
    /// Row gain with `A_z - B_z K` Hurwitz.
    pub k: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct L1ConditionReport {
    pub g_l1: f64,
    pub rho_r: f64,
    pub rho_1: f64,
    pub rho_2: f64,
    pub rho_ur: f64,
    pub l_rho_r: f64,
    pub bound_rhs: f64,
    pub satisfied: bool,
    /// Why the inequality could not be evaluated, if it could not.
    pub failure: Option<String>,
    pub notes: Vec<String>,
}

const H_IN_NOTE: &str = "H_in(s) is taken as C_m (sI - A_m)^-1 (I - C_m^+ C_m); the polynomial form C_m (sI - A_m)(I - C_m^+ C_m) has no finite L1 norm";

impl L1ConditionReport {
    fn unsatisfiable(rho_r: f64, reason: String) -> Self {
        Self {
            g_l1: f64::NAN,
            rho_r,
            rho_1: f64::NAN,
            rho_2: f64::NAN,
            rho_ur: f64::NAN,
            l_rho_r: f64::NAN,
            bound_rhs: f64::NAN,
            satisfied: false,
            failure: Some(reason),
            notes: vec![H_IN_NOTE.to_string()],
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "g_l1 = {}", self.g_l1);
        let _ = writeln!(out, "rho_r = {}", self.rho_r);
        let _ = writeln!(out, "rho_1 = {}", self.rho_1);
        let _ = writeln!(out, "rho_2 = {}", self.rho_2);
        let _ = writeln!(out, "L_rho_r = {}", self.l_rho_r);
        let _ = writeln!(out, "bound_rhs = {}", self.bound_rhs);
        let _ = writeln!(out, "rho_ur = {}", self.rho_ur);
        let _ = writeln!(out, "satisfied = {}", self.satisfied);
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "failure = {f}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note = {n}");
        }
        out
    }
}

fn norm_of(name: &str, sys: &StateSpaceModel) -> std::result::Result<f64, String> {
    match l1_norm_auto(sys) {
        Ok(n) => Ok(n.upper_bound()),
        Err(Error::Unstable { abscissa }) => Err(format!("{name} is not stable (spectral abscissa {abscissa:e})")),
        Err(e) => Err(format!("{name}: {e}")),
    }
}

fn reduce(sys: StateSpaceModel) -> Result<StateSpaceModel> {
    minreal(&sys, DEFAULT_MINREAL_TOL)
}

/// Evaluates the small-gain L1 condition and the reference-system input bound.
///
/// Systems that cannot be normed (unstable factors, a non-Hurwitz
/// `A_z - B_z K`, an `F_δ` table that does not reach `γ̄₀ + ρ_r`) produce an
/// unsatisfied report naming the cause rather than an error.
pub fn check_l1_condition(
    plant: &PlantAbstraction,
    model: &DesiredModel,
    c_filter: &TransferFunction,
    constants: &L1Constants,
) -> Result<L1ConditionReport> {
    let n = model.n();
    let nz = plant.a_z.nrows();
    if plant.a_z.ncols() != nz || plant.b_z.shape() != (nz, 1) || plant.c_z.shape() != (1, nz) {
        return Err(Error::Dimension("plant abstraction must be SISO with square A_z".into()));
    }
    if constants.k.shape() != (1, nz) {
        return Err(Error::Dimension(format!("K must be 1x{nz}")));
    }
    for (name, v) in [
        ("rho0", constants.rho0),
        ("rho_r", constants.rho_r),
        ("L0", constants.l0),
        ("M_r", constants.m_r),
        ("gamma0", constants.gamma0),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and nonnegative")));
        }
    }
    if !(constants.rho_r > 0.0) {
        return Err(Error::InvalidArgument("rho_r must be positive".into()));
    }
    let rho_r = constants.rho_r;

    let (ok, abscissa) = is_hurwitz(&(&plant.a_z - &plant.b_z * &constants.k));
    if !ok {
        return Ok(L1ConditionReport::unsatisfiable(
            rho_r,
            format!("A_z - B_z K is not Hurwitz (spectral abscissa {abscissa:e})"),
        ));
    }
    if let Err(e) = check_c_filter_stable(c_filter) {
        return Ok(L1ConditionReport::unsatisfiable(rho_r, e.to_string()));
    }
    let delta = constants.gamma0 + rho_r;
    let Some(f) = constants.f_delta.at(delta) else {
        return Ok(L1ConditionReport::unsatisfiable(rho_r, format!("F_delta table does not cover delta = {delta}")));
    };

    let a_m = model.a_m();
    let eye = DMatrix::<f64>::identity(n, n);
    let h0 = StateSpaceModel::continuous(a_m.clone(), model.b_m().clone(), eye.clone(), DMatrix::zeros(n, 1))?;
    let projector = &eye - &model.c_m_pinv * model.c_m();
    let s_resolvent = StateSpaceModel::continuous(a_m.clone(), eye.clone(), a_m.clone(), eye.clone())?;
    let g = reduce(series(&tf_to_ss(&c_filter.one_minus())?, &h0)?)?;
    let c_sys = tf_to_ss(c_filter)?;

    // For n = 1 the projector vanishes, H_in ≡ 0, and C M⁻¹ never enters.
    let (rho1_sys, ur_sys) = if projector.amax() <= 1e-14 {
        (s_resolvent, StateSpaceModel::static_gain(DMatrix::zeros(1, n)))
    } else {
        if c_filter.relative_degree() < model.tf.relative_degree() {
            return Err(Error::Properness {
                c_relative_degree: c_filter.relative_degree().max(0) as usize,
                m_relative_degree: model.tf.relative_degree().max(0) as usize,
            });
        }
        let h_in = StateSpaceModel::continuous(a_m.clone(), projector, model.c_m().clone(), DMatrix::zeros(1, n))?;
        let c_over_m = tf_to_ss(&c_filter.mul(&model.tf.inverse()?))?;
        let h1 = reduce(series(&c_over_m, &h0)?)?;
        let s_h1_hin = differentiate(&reduce(series(&h_in, &h1)?)?)?;
        (reduce(parallel(&s_resolvent, &negate(&s_h1_hin))?)?, differentiate(&reduce(series(&h_in, &c_over_m)?)?)?)
    };

    let norms = (|| -> std::result::Result<[f64; 5], String> {
        Ok([
            norm_of("G(s) = H0(s)(1 - C(s))", &g)?,
            norm_of("s(sI - A_m)^-1 - s H1(s) H_in(s)", &rho1_sys)?,
            norm_of("H0(s)", &h0)?,
            norm_of("C(s)", &c_sys)?,
            norm_of("s C(s) M^-1(s) H_in(s)", &ur_sys)?,
        ])
    })();
    let [g_l1, rho1_norm, h0_norm, c_norm, ur_norm] = match norms {
        Ok(v) => v,
        Err(reason) => return Ok(L1ConditionReport::unsatisfiable(rho_r, reason)),
    };

    let rho_1 = rho1_norm * constants.rho0;
    let rho_2 = h0_norm * constants.m_r;
    let l_rho_r = delta / rho_r * (f + infinity_norm(&constants.k));
    let bound_rhs = (rho_r - rho_1 - rho_2) / (l_rho_r * rho_r + constants.l0);
    let rho_ur = c_norm * (l_rho_r * rho_r + constants.l0) + ur_norm * constants.rho0 + constants.m_r;
    Ok(L1ConditionReport {
        g_l1,
        rho_r,
        rho_1,
        rho_2,
        rho_ur,
        l_rho_r,
        bound_rhs,
        satisfied: g_l1 < bound_rhs,
        failure: None,
        notes: vec![H_IN_NOTE.to_string()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l1aug::{build_desired_model, default_c_filter, default_desired_tf};

    fn scalar() -> (PlantAbstraction, DesiredModel) {
        let model = build_desired_model(&TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap()).unwrap();
        let plant = PlantAbstraction { a_z: model.a_m().clone(), b_z: model.b_m().clone(), c_z: model.c_m().clone() };
        (plant, model)
    }

    fn constants(k: DMatrix<f64>) -> L1Constants {
        L1Constants { rho0: 0.0, rho_r: 10.0, f_delta: FDelta::Constant(0.1), l0: 0.1, m_r: 1.0, gamma0: 1e-3, k }
    }

    #[test]
    fn scalar_g_norm_matches_closed_form() {
        let (plant, model) = scalar();
        let c = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let r = check_l1_condition(&plant, &model, &c, &constants(DMatrix::zeros(1, 1))).unwrap();
        // G(s) = s/(s+1)², impulse response (1 - t)e^{-t}, ∫|h| = 2/e
        assert!((r.g_l1 - 2.0 / std::f64::consts::E).abs() < 1e-5, "{}", r.g_l1);
        // ‖1/(s+1)‖ = 1
        assert!((r.rho_2 - 1.0).abs() < 1e-3);
        assert_eq!(r.rho_1, 0.0);
        assert!(r.failure.is_none());
        let l = (10.0 + 1e-3) / 10.0 * 0.1;
        assert!((r.l_rho_r - l).abs() < 1e-15);
        assert!((r.bound_rhs - (10.0 - r.rho_2) / (l * 10.0 + 0.1)).abs() < 1e-12);
        assert_eq!(r.satisfied, r.g_l1 < r.bound_rhs);
        assert!(r.satisfied);
    }

    #[test]
    fn unit_filter_gives_zero_g() {
        let (plant, model) = scalar();
        let r =
            check_l1_condition(&plant, &model, &TransferFunction::gain(1.0), &constants(DMatrix::zeros(1, 1))).unwrap();
        assert_eq!(r.g_l1, 0.0);
        assert!(r.satisfied);
    }

    #[test]
    fn non_hurwitz_feedback_is_named() {
        let (plant, model) = scalar();
        let c = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let r = check_l1_condition(&plant, &model, &c, &constants(DMatrix::from_element(1, 1, -2.0))).unwrap();
        assert!(!r.satisfied);
        assert!(r.failure.unwrap().contains("A_z - B_z K"));
    }

    #[test]
    fn unstable_filter_is_named() {
        let (plant, model) = scalar();
        let c = TransferFunction::new(vec![-1.0], vec![1.0, -1.0]).unwrap();
        let r = check_l1_condition(&plant, &model, &c, &constants(DMatrix::zeros(1, 1))).unwrap();
        assert!(!r.satisfied);
        assert!(r.failure.unwrap().contains("C(s)"));
    }

    #[test]
    fn table_lookup() {
        let t = FDelta::Table(vec![(100.0, 2.0), (10.0, 1.0)]);
        assert_eq!(t.at(5.0), Some(1.0));
        assert_eq!(t.at(10.0), Some(1.0));
        assert_eq!(t.at(50.0), Some(2.0));
        assert_eq!(t.at(500.0), None);
        let (plant, model) = scalar();
        let c = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        let mut k = constants(DMatrix::zeros(1, 1));
        k.f_delta = FDelta::Table(vec![(1.0, 0.1)]);
        let r = check_l1_condition(&plant, &model, &c, &k).unwrap();
        assert!(r.failure.unwrap().contains("F_delta"));
    }

    #[test]
    fn report_text_lists_every_quantity() {
        let model = build_desired_model(&default_desired_tf()).unwrap();
        let k = DMatrix::from_row_slice(1, 2, &[0.002, 0.05]);
        let plant = PlantAbstraction {
            a_z: model.a_m() + model.b_m() * &k,
            b_z: model.b_m().clone(),
            c_z: model.c_m().clone(),
        };
        let r = check_l1_condition(&plant, &model, &default_c_filter(), &constants(k)).unwrap();
        let text = r.to_text();
        for key in ["g_l1", "rho_1", "rho_2", "rho_ur", "L_rho_r", "bound_rhs", "satisfied", "H_in"] {
            assert!(text.contains(key), "{key}");
        }
        assert!(r.g_l1.is_finite() && r.g_l1 > 0.0);
    }
}
