//! Online switching law: argmin mode selection on a quadratic Lyapunov
//! surface, with a hysteresis band to keep the switching frequency finite.
//!
//! The mode comparison reduces to the sign of a single switching function
//! `s(x) = (x - x*)' P D x`: mode 1 minimizes the Lyapunov derivative
//! exactly when `s < 0`. Switching is suppressed while `|s| < h`.

use serde::{Deserialize, Serialize};

use crate::mat2::{dot, sub, Mat2};
use crate::model::{compute_equilibrium, Equilibrium, Mode, ParamVec, StateVec, SwitchedModel};
use crate::synthesis::hysteresis_width;

/// Switching function `s(x) = (x - x*)' P D x`.
pub fn switching_function(x: StateVec, eq: &Equilibrium, p: &Mat2, model: &SwitchedModel) -> f64 {
    let err = sub(x.as_array(), eq.x_star.as_array());
    let pdx = p.mul_vec(model.d.mul_vec(x.as_array()));
    dot(err, pdx)
}

/// Mode minimizing `(x - x*)' P A_mode x`. Exact ties return `tie_hold`.
pub fn select_mode_argmin(
    x: StateVec,
    eq: &Equilibrium,
    p: &Mat2,
    model: &SwitchedModel,
    tie_hold: Mode,
) -> Mode {
    let err = sub(x.as_array(), eq.x_star.as_array());
    let obj0 = dot(err, p.mul_vec(model.a0.mul_vec(x.as_array())));
    let obj1 = dot(err, p.mul_vec(model.a1.mul_vec(x.as_array())));
    if obj0 < obj1 {
        Mode::Off
    } else if obj1 < obj0 {
        Mode::On
    } else {
        tie_hold
    }
}

/// Mutable controller state carried across samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControllerState {
    pub mode: Mode,
    pub p: Mat2,
    /// Hysteresis half-width on the switching function.
    pub h: f64,
    pub eq: Equilibrium,
    pub switch_count: u64,
    pub last_switch_time: f64,
    /// Target updates skipped because the estimate left the reachable range.
    pub saturation_count: u64,
}

impl ControllerState {
    pub fn new(p: Mat2, eq: Equilibrium, h: f64) -> Self {
        Self {
            mode: Mode::Off,
            p,
            h,
            eq,
            switch_count: 0,
            last_switch_time: f64::NEG_INFINITY,
            saturation_count: 0,
        }
    }

    pub fn switching_function(&self, x: StateVec, model: &SwitchedModel) -> f64 {
        switching_function(x, &self.eq, &self.p, model)
    }

    /// One sampled controller evaluation. Commands mode 0 when `s >= h`,
    /// mode 1 when `s <= -h`, and holds the current mode inside the band.
    /// Returns the commanded mode along with the sampled `s`.
    pub fn hysteretic_step(&mut self, x: StateVec, t: f64, model: &SwitchedModel) -> (Mode, f64) {
        let s = self.switching_function(x, model);
        let next = if s >= self.h {
            Mode::Off
        } else if s <= -self.h {
            Mode::On
        } else {
            self.mode
        };
        if next != self.mode {
            self.switch_count += 1;
            self.last_switch_time = t;
            self.mode = next;
        }
        (self.mode, s)
    }

    /// Recompute the target equilibrium and hysteresis width from a
    /// parameter estimate. Estimates outside the reachable input range keep
    /// the previous target and count a saturation event, so the controller
    /// never receives a non-finite or unreachable setpoint.
    pub fn update_target(
        &mut self,
        p_hat: ParamVec,
        model: &SwitchedModel,
        f_target: f64,
    ) -> bool {
        if !p_hat.is_finite() {
            self.saturation_count += 1;
            return false;
        }
        match compute_equilibrium(model, p_hat, model.circuit.vo_ref) {
            Ok(eq) => match hysteresis_width(model, &self.p, &eq, p_hat, f_target) {
                Ok(h) => {
                    self.eq = eq;
                    self.h = h;
                    true
                }
                Err(_) => {
                    self.saturation_count += 1;
                    false
                }
            },
            Err(_) => {
                self.saturation_count += 1;
                false
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CircuitParams;
    use crate::synthesis::solve_common_lyapunov;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn table_model() -> SwitchedModel {
        SwitchedModel::build(CircuitParams {
            l: 1e-3,
            c: 50e-6,
            ro: 10.0,
            vo_ref: 450.0,
            vin_min: 300.0,
            vin_max: 400.0,
        })
        .unwrap()
    }

    fn nominal_eq(model: &SwitchedModel) -> Equilibrium {
        compute_equilibrium(model, ParamVec::new(350.0, 0.0), 450.0).unwrap()
    }

    #[test]
    fn switching_function_zero_at_target() {
        let m = table_model();
        let eq = nominal_eq(&m);
        let s = switching_function(eq.x_star, &eq, &Mat2::IDENTITY, &m);
        assert!(s.abs() < 1e-6); // zero error factor, up to rounding of x*
    }

    #[test]
    fn switching_function_hand_value() {
        let m = table_model();
        let eq = nominal_eq(&m);
        let s = switching_function(StateVec::new(10.0, 400.0), &eq, &Mat2::IDENTITY, &m);
        // Dx = (400000, -200000), err = (10 - 405/7, -50)
        let expect = (10.0 - 405.0 / 7.0) * 400_000.0 + (-50.0) * (-200_000.0);
        assert!((s - expect).abs() <= 1e-9 * expect.abs());
    }

    #[test]
    fn argmin_hand_value_and_tie() {
        let m = table_model();
        let eq = nominal_eq(&m);
        let x = StateVec::new(10.0, 400.0);
        let mode = select_mode_argmin(x, &eq, &Mat2::IDENTITY, &m, Mode::Off);
        assert_eq!(mode, Mode::On);
        // exact tie at the target
        assert_eq!(
            select_mode_argmin(eq.x_star, &eq, &Mat2::IDENTITY, &m, Mode::On),
            Mode::On
        );
        assert_eq!(
            select_mode_argmin(eq.x_star, &eq, &Mat2::IDENTITY, &m, Mode::Off),
            Mode::Off
        );
    }

    #[test]
    fn argmin_equals_sign_rule() {
        let m = table_model();
        let cert = solve_common_lyapunov(&m, 40.0).unwrap();
        let eq = nominal_eq(&m);
        let mut rng = StdRng::seed_from_u64(21);
        let mut checked = 0;
        for _ in 0..1000 {
            let x = StateVec::new(rng.gen_range(-100.0..200.0), rng.gen_range(-100.0..600.0));
            let s = switching_function(x, &eq, &cert.p, &m);
            if s == 0.0 {
                continue;
            }
            let mode = select_mode_argmin(x, &eq, &cert.p, &m, Mode::Off);
            assert_eq!(mode == Mode::On, s < 0.0, "x = {x:?}, s = {s}");
            checked += 1;
        }
        assert!(checked > 900);
    }

    #[test]
    fn hysteresis_holds_inside_band() {
        let m = table_model();
        let eq = nominal_eq(&m);
        let mut ctrl = ControllerState::new(Mat2::IDENTITY, eq, 1e9);
        ctrl.mode = Mode::On;
        // s from a state near the target is far below h = 1e9
        let (mode, s) = ctrl.hysteretic_step(StateVec::new(50.0, 440.0), 0.0, &m);
        assert!(s.abs() < ctrl.h);
        assert_eq!(mode, Mode::On);
        assert_eq!(ctrl.switch_count, 0);
    }

    #[test]
    fn hysteresis_boundary_is_closed() {
        // with h = 0 and s = 0 the controller holds; any |s| >= h switches
        let m = table_model();
        let eq = nominal_eq(&m);
        let mut ctrl = ControllerState::new(Mat2::IDENTITY, eq, 0.0);
        ctrl.mode = Mode::On;
        // s > 0 here, so mode 0 is commanded at the closed boundary
        let x = StateVec::new(100.0, 400.0);
        let s = ctrl.switching_function(x, &m);
        assert!(s > 0.0);
        let (mode, _) = ctrl.hysteretic_step(x, 1e-3, &m);
        assert_eq!(mode, Mode::Off);
        assert_eq!(ctrl.switch_count, 1);
        assert_eq!(ctrl.last_switch_time, 1e-3);
    }

    #[test]
    fn zero_width_band_matches_argmin() {
        let m = table_model();
        let cert = solve_common_lyapunov(&m, 40.0).unwrap();
        let eq = nominal_eq(&m);
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..500 {
            let x = StateVec::new(rng.gen_range(-50.0..150.0), rng.gen_range(0.0..600.0));
            for hold in [Mode::Off, Mode::On] {
                let mut ctrl = ControllerState::new(cert.p, eq, 0.0);
                ctrl.mode = hold;
                let (mode, _) = ctrl.hysteretic_step(x, 0.0, &m);
                let expect = select_mode_argmin(x, &eq, &cert.p, &m, hold);
                assert_eq!(mode, expect);
            }
        }
    }

    #[test]
    fn update_target_recomputes_and_saturates() {
        let m = table_model();
        let cert = solve_common_lyapunov(&m, 40.0).unwrap();
        let p = ParamVec::new(350.0, 0.0);
        let eq = nominal_eq(&m);
        let h0 = hysteresis_width(&m, &cert.p, &eq, p, 200e3).unwrap();
        let mut ctrl = ControllerState::new(cert.p, eq, h0);

        assert!(ctrl.update_target(ParamVec::new(300.0, 20.0), &m, 200e3));
        assert!((ctrl.eq.sigma_star - 1.0 / 3.0).abs() < 1e-12);
        assert!((ctrl.eq.x_star.il - 97.5).abs() < 1e-9);

        // estimate transiently outside the reachable range keeps the target
        let before = ctrl.eq;
        let h_before = ctrl.h;
        assert!(!ctrl.update_target(ParamVec::new(455.0, 0.0), &m, 200e3));
        assert_eq!(ctrl.saturation_count, 1);
        assert_eq!(ctrl.eq, before);
        assert_eq!(ctrl.h, h_before);

        // repeated identical estimates leave the target unchanged
        assert!(ctrl.update_target(ParamVec::new(300.0, 20.0), &m, 200e3));
        let snapshot = (ctrl.eq, ctrl.h);
        assert!(ctrl.update_target(ParamVec::new(300.0, 20.0), &m, 200e3));
        assert_eq!(snapshot, (ctrl.eq, ctrl.h));
    }
}
