//! Linearized depth/pitch dynamics of the BB2 hull at two forward speeds.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lti::StateSpaceModel;

/// Vertical-plane state. Depth is positive down.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    /// Depth (m).
    pub z: f64,
    /// Pitch (rad).
    pub theta: f64,
    /// Heave velocity (m/s).
    pub w: f64,
    /// Pitch rate (rad/s).
    pub q: f64,
}

impl VehicleState {
    pub fn new(z: f64, theta: f64, w: f64, q: f64) -> Self {
        Self { z, theta, w, q }
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.z, self.theta, self.w, self.q]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// False once the pitch leaves the region where a linear model is meaningful.
    pub fn in_linear_regime(&self) -> bool {
        self.theta.abs() < std::f64::consts::FRAC_PI_2
    }
}

/// Effective vertical-plane commands.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    /// Fin command (rad).
    pub delta_v: f64,
    /// Hover-tank mass command (kg).
    pub delta_m: f64,
}

impl ControlInput {
    pub fn new(delta_v: f64, delta_m: f64) -> Self {
        Self { delta_v, delta_m }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.delta_v, self.delta_m]
    }
}

/// X-tail fin angles plus the sail plane, all in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FinSet {
    pub delta_1: f64,
    pub delta_2: f64,
    pub delta_3: f64,
    pub delta_4: f64,
    /// Sail plane.
    pub delta_5: f64,
}

impl FinSet {
    pub fn delta_v(&self) -> f64 {
        self.delta_5
    }

    pub fn delta_h(&self) -> f64 {
        (self.delta_4 - self.delta_3) / 2.0
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.delta_1, self.delta_2, self.delta_3, self.delta_4, self.delta_5]
    }
}

/// Mixes the horizontal and vertical commands onto the X-tail and sail plane.
pub fn allocate(delta_h: f64, delta_v: f64) -> FinSet {
    FinSet {
        delta_1: delta_h - delta_v,
        delta_2: -delta_h - delta_v,
        delta_3: -delta_h + delta_v,
        delta_4: delta_h + delta_v,
        delta_5: delta_v,
    }
}

const A_SPEED_2: [[f64; 4]; 4] = [
    [9.056e-14, 1.999, 1.0, -9.466e-12],
    [-1.527e-13, 1.59e-14, -2.135e-11, 1.0],
    [0.00013, -3.04e-7, -0.036, -1.144],
    [7.005e-7, -0.0149, -0.00258, -0.095],
];

const B_SPEED_2: [[f64; 2]; 4] =
    [[3.257e-14, -3.078e-19], [-9.036e-14, -1.156e-18], [-0.00015, -2.219e-6], [6.444e-5, 4.595e-17]];

const A_SPEED_5: [[f64; 4]; 4] = [
    [-9.613e-13, 4.999, 1.0, 1.122e-10],
    [1.452e-12, -5.139e-14, -1.178e-10, 1.0],
    [0.00084, -3.04e-7, -0.1016, -2.7],
    [4.379e-6, -0.0149, -0.00572, -0.244],
];

const B_SPEED_5: [[f64; 2]; 4] =
    [[1.06e-12, -1.104e-17], [-4.927e-12, -6.124e-18], [-0.000969, -2.219e-6], [0.0004, 2.403e-16]];

pub const SUPPORTED_SPEEDS: [f64; 2] = [2.0, 5.0];

/// Linear vertical-plane model `x' = A x + B (u + f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VehiclePlant {
    speed: f64,
    a: [[f64; 4]; 4],
    b: [[f64; 2]; 4],
    model: StateSpaceModel,
}

/// The linearized hull at 2 m/s or 5 m/s.
pub fn bb2_model(speed: f64) -> Result<VehiclePlant> {
    let (a, b) = if speed == 2.0 {
        (A_SPEED_2, B_SPEED_2)
    } else if speed == 5.0 {
        (A_SPEED_5, B_SPEED_5)
    } else {
        return Err(Error::UnsupportedSpeed(speed));
    };
    VehiclePlant::from_arrays(speed, a, b)
}

impl VehiclePlant {
    /// A plant with user-supplied matrices; the output is the full state.
    pub fn from_arrays(speed: f64, a: [[f64; 4]; 4], b: [[f64; 2]; 4]) -> Result<Self> {
        let am = DMatrix::from_fn(4, 4, |i, j| a[i][j]);
        let bm = DMatrix::from_fn(4, 2, |i, j| b[i][j]);
        let model = StateSpaceModel::continuous(am, bm, DMatrix::identity(4, 4), DMatrix::zeros(4, 2))?;
        Ok(Self { speed, a, b, model })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }

    pub fn a(&self) -> &DMatrix<f64> {
        self.model.a()
    }

    pub fn b(&self) -> &DMatrix<f64> {
        self.model.b()
    }

    pub fn a_array(&self) -> &[[f64; 4]; 4] {
        &self.a
    }

    pub fn b_array(&self) -> &[[f64; 2]; 4] {
        &self.b
    }

    /// `A x + B (u + f)` on raw arrays.
    #[inline]
    pub fn rate(&self, x: &[f64; 4], u: &[f64; 2], f: &[f64; 2]) -> [f64; 4] {
        let v = [u[0] + f[0], u[1] + f[1]];
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            let ai = &self.a[i];
            let bi = &self.b[i];
            *o = ai[0] * x[0] + ai[1] * x[1] + ai[2] * x[2] + ai[3] * x[3] + bi[0] * v[0] + bi[1] * v[1];
        }
        out
    }
}

/// State rate with the disturbance entering through the input matrix.
pub fn derivative(plant: &VehiclePlant, x: &VehicleState, u: &ControlInput, f: [f64; 2]) -> VehicleState {
    VehicleState::from_array(plant.rate(&x.to_array(), &u.to_array(), &f))
}

/// Tracking error state `[z - z_aug, θ - θ_aug, w, q]`.
pub fn error_state(x: &VehicleState, z_aug: f64, theta_aug: f64) -> [f64; 4] {
    [x.z - z_aug, x.theta - theta_aug, x.w, x.q]
}
