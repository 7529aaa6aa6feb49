//! Online reconstruction of the input voltage and load current from state
//! measurements and the active switch mode.
//!
//! Two variants share one state struct. The basic estimator integrates an
//! intermediate variable so no state derivative is ever needed, and feeds
//! the measurement straight into the estimate, which makes it exact but
//! noise-transparent. The filtered variant routes the error injection
//! through a cascade of `r` first-order filters with gain `theta`, buying a
//! relative degree of `r` between measurement noise and the estimate.
//!
//! Both are discretized with explicit Euler at the simulation step; the
//! fastest estimator eigenvalue times the step stays around 5e-4 for the
//! nominal design, far from the stability limit.

use serde::{Deserialize, Serialize};

use crate::mat2::{add, scale, sub};
use crate::model::{Mode, ParamVec, StateVec, SwitchedModel};
use crate::synthesis::EstimatorGains;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Basic,
    Filtered,
}

/// State measurement as seen by the estimator and controller: the true
/// state plus a common noise sample on both channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasuredState {
    pub x: StateVec,
}

impl MeasuredState {
    pub fn exact(x: StateVec) -> Self {
        Self { x }
    }

    /// Apply one noise sample to both channels.
    pub fn corrupt(x: StateVec, nu: f64) -> Self {
        Self {
            x: StateVec::new(x.il + nu, x.vo + nu),
        }
    }

    fn as_array(self) -> [f64; 2] {
        self.x.as_array()
    }
}

/// Estimator state. `zeta_hat` always holds the most recent estimate of the
/// exo-state; which auxiliary fields integrate depends on the variant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimatorState {
    /// Current exo-state estimate (equals the parameter estimate for the
    /// constant-parameter exo-system).
    pub zeta_hat: [f64; 2],
    /// Intermediate variable of the basic variant.
    pub z_p: [f64; 2],
    /// Filter head state of the filtered variant.
    pub eta: [f64; 2],
    /// Filter cascade outputs `z_1..z_r`; `z_1` is algebraic in `eta` and
    /// the measurement and is refreshed each step.
    pub z: Vec<[f64; 2]>,
    pub gains: EstimatorGains,
    pub variant: Variant,
}

impl EstimatorState {
    /// Initialize from the first measurement and an initial parameter guess.
    ///
    /// The basic intermediate starts at `p_guess - kappa * x0` so the first
    /// estimate is exactly `p_guess`; the filtered head starts at
    /// `-theta * x0` so the first filter output is zero.
    pub fn init(
        gains: EstimatorGains,
        x0: MeasuredState,
        p_guess: ParamVec,
        variant: Variant,
    ) -> Self {
        let x0 = x0.as_array();
        let zeta_hat = p_guess.as_array();
        let z_p = sub(zeta_hat, gains.kappa.mul_vec(x0));
        let eta = scale(gains.theta.mul_vec(x0), -1.0);
        let z = vec![[0.0; 2]; gains.r];
        Self {
            zeta_hat,
            z_p,
            eta,
            z,
            gains,
            variant,
        }
    }

    /// Current parameter estimate `Cp * zeta_hat`.
    pub fn estimate(&self) -> ParamVec {
        ParamVec::new(self.zeta_hat[0], self.zeta_hat[1])
    }

    /// Advance one sample with the mode applied over the coming interval.
    /// Returns the estimate at the measurement instant.
    pub fn step(
        &mut self,
        x_m: MeasuredState,
        mode: Mode,
        model: &SwitchedModel,
        dt: f64,
    ) -> ParamVec {
        match self.variant {
            Variant::Basic => self.step_basic(x_m, mode, model, dt),
            Variant::Filtered => self.step_filtered(x_m, mode, model, dt),
        }
    }

    /// Basic variant: refresh `zeta_hat = z_p + kappa x_m`, then integrate
    /// `z_p' = F z_p + F kappa x_m - kappa A_mode x_m` with
    /// `F = -kappa G` (the observer matrix for constant parameters).
    pub fn step_basic(
        &mut self,
        x_m: MeasuredState,
        mode: Mode,
        model: &SwitchedModel,
        dt: f64,
    ) -> ParamVec {
        let x = x_m.as_array();
        let kappa = &self.gains.kappa;
        self.zeta_hat = add(self.z_p, kappa.mul_vec(x));

        let obs = kappa.mul(&model.g).scale(-1.0);
        let a_sigma = model.mode_matrix(mode);
        let dz = add(
            obs.mul_vec(add(self.z_p, kappa.mul_vec(x))),
            scale(kappa.mul_vec(a_sigma.mul_vec(x)), -1.0),
        );
        self.z_p = add(self.z_p, scale(dz, dt));
        self.estimate()
    }

    /// Filtered variant: the estimate integrates the last filter stage,
    /// `zeta_hat' = kappa z_r`, while the head filter tracks the error
    /// injection, `eta' = theta [-(A_mode + theta) x_m - G zeta_hat - eta]`
    /// with `z_1 = eta + theta x_m` and `z_i' = theta (z_{i-1} - z_i)`.
    pub fn step_filtered(
        &mut self,
        x_m: MeasuredState,
        mode: Mode,
        model: &SwitchedModel,
        dt: f64,
    ) -> ParamVec {
        let x = x_m.as_array();
        let gains = self.gains;
        let theta = &gains.theta;
        let a_sigma = model.mode_matrix(mode);

        let z1 = add(self.eta, theta.mul_vec(x));
        self.z[0] = z1;
        let z_r = self.z[gains.r - 1];
        let p_hat = self.estimate();

        // derivatives from current values, then a joint Euler update
        let d_zeta = gains.kappa.mul_vec(z_r);
        let inner = add(
            add(
                scale(a_sigma.add(theta).mul_vec(x), -1.0),
                scale(model.g.mul_vec(self.zeta_hat), -1.0),
            ),
            scale(self.eta, -1.0),
        );
        let d_eta = theta.mul_vec(inner);
        let mut d_z = vec![[0.0; 2]; gains.r];
        for (dz, w) in d_z[1..].iter_mut().zip(self.z.windows(2)) {
            *dz = theta.mul_vec(sub(w[0], w[1]));
        }

        self.zeta_hat = add(self.zeta_hat, scale(d_zeta, dt));
        self.eta = add(self.eta, scale(d_eta, dt));
        for (z, dz) in self.z.iter_mut().zip(&d_z).skip(1) {
            *z = add(*z, scale(*dz, dt));
        }
        p_hat
    }
}
