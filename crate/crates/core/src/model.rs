//! Switched affine model of the ideal boost converter.
//!
//! The converter has two states, inductor current and output voltage,
//! and two circuit configurations selected by the switch position. Each
//! configuration is affine in the state:
//!
//! ```text
//! x' = A_mode * x + G * p,   x = [iL, vo],   p = [vin, iLoad]
//! ```
//!
//! The averaged model replaces the discrete mode with a duty ratio and
//! shares the same equilibria, which is what the target computation below
//! relies on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat2::Mat2;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("circuit parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("input voltage bounds must satisfy 0 < vin_min <= vin_max < vo_ref (got {vin_min}, {vin_max}, vo_ref {vo_ref})")]
    InvalidVoltageRange {
        vin_min: f64,
        vin_max: f64,
        vo_ref: f64,
    },
    #[error("duty ratio {0} outside [0, 1]")]
    DutyOutOfRange(f64),
    #[error("target vo_ref {vo_ref} V unreachable for input voltage {vin} V (need 0 < vin < vo_ref)")]
    UnreachableTarget { vin: f64, vo_ref: f64 },
    #[error("averaged matrix is singular at duty {0}")]
    SingularMatrix(f64),
}

/// Physical circuit constants plus the regulation target and the assumed
/// input-voltage range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Inductance, H.
    pub l: f64,
    /// Output capacitance, F.
    pub c: f64,
    /// Load resistance, Ohm.
    pub ro: f64,
    /// Desired output voltage, V.
    pub vo_ref: f64,
    /// Lower bound of the input voltage, V.
    pub vin_min: f64,
    /// Upper bound of the input voltage, V.
    pub vin_max: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [("L", self.l), ("C", self.c), ("Ro", self.ro)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ModelError::NonPositiveParameter { name, value });
            }
        }
        if !(0.0 < self.vin_min && self.vin_min <= self.vin_max && self.vin_max < self.vo_ref) {
            return Err(ModelError::InvalidVoltageRange {
                vin_min: self.vin_min,
                vin_max: self.vin_max,
                vo_ref: self.vo_ref,
            });
        }
        Ok(())
    }
}

/// Switch position. `On` shorts the inductor to ground and isolates the
/// output capacitor, `Off` conducts through the diode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Off = 0,
    On = 1,
}

impl Mode {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Mode::Off
        } else {
            Mode::On
        }
    }
}

/// State vector of the converter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateVec {
    /// Inductor current, A.
    pub il: f64,
    /// Output voltage, V.
    pub vo: f64,
}

impl StateVec {
    pub fn new(il: f64, vo: f64) -> Self {
        Self { il, vo }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.il, self.vo]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        Self { il: a[0], vo: a[1] }
    }

    pub fn is_finite(self) -> bool {
        self.il.is_finite() && self.vo.is_finite()
    }
}

/// Exogenous parameter vector: input voltage and external load current.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamVec {
    /// Input voltage, V.
    pub vin: f64,
    /// External load current drawn from the output node, A.
    pub i_load: f64,
}

impl ParamVec {
    pub fn new(vin: f64, i_load: f64) -> Self {
        Self { vin, i_load }
    }

    pub fn as_array(self) -> [f64; 2] {
        [self.vin, self.i_load]
    }

    pub fn is_finite(self) -> bool {
        self.vin.is_finite() && self.i_load.is_finite()
    }
}

/// The two mode matrices, the input matrix and the mode difference matrix.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SwitchedModel {
    /// Dynamics with the switch off (diode conducting).
    pub a0: Mat2,
    /// Dynamics with the switch on (output isolated).
    pub a1: Mat2,
    /// Input matrix mapping `[vin, iLoad]` into the state derivative.
    pub g: Mat2,
    /// `a1 - a0`, the direction the vector field jumps on a switch.
    pub d: Mat2,
    pub circuit: CircuitParams,
}

impl SwitchedModel {
    /// Build the mode matrices from the circuit constants.
    pub fn build(circuit: CircuitParams) -> Result<Self, ModelError> {
        circuit.validate()?;
        let (l, c, ro) = (circuit.l, circuit.c, circuit.ro);
        let a0 = Mat2::new(0.0, -1.0 / l, 1.0 / c, -1.0 / (ro * c));
        let a1 = Mat2::new(0.0, 0.0, 0.0, -1.0 / (ro * c));
        let g = Mat2::diag(1.0 / l, -1.0 / c);
        let d = a1.sub(&a0);
        Ok(Self {
            a0,
            a1,
            g,
            d,
            circuit,
        })
    }

    pub fn mode_matrix(&self, mode: Mode) -> &Mat2 {
        match mode {
            Mode::Off => &self.a0,
            Mode::On => &self.a1,
        }
    }

    /// Averaged state matrix `duty * A1 + (1 - duty) * A0`.
    pub fn averaged_matrix(&self, duty: f64) -> Result<Mat2, ModelError> {
        if !(0.0..=1.0).contains(&duty) || !duty.is_finite() {
            return Err(ModelError::DutyOutOfRange(duty));
        }
        Ok(self.a1.scale(duty).add(&self.a0.scale(1.0 - duty)))
    }

    /// State derivative `A_mode * x + G * p` for one mode.
    pub fn mode_dynamics(&self, mode: Mode, x: StateVec, p: ParamVec) -> StateVec {
        let ax = self.mode_matrix(mode).mul_vec(x.as_array());
        let gp = self.g.mul_vec(p.as_array());
        StateVec::new(ax[0] + gp[0], ax[1] + gp[1])
    }

    /// Affine offset `A_mode * x_star + G * p` of one mode at a point.
    pub fn affine_offset(&self, mode: Mode, x_star: StateVec, p: ParamVec) -> [f64; 2] {
        self.mode_dynamics(mode, x_star, p).as_array()
    }
}

/// Steady-state target: the state where the averaged dynamics vanish, and
/// the duty ratio that produces it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x_star: StateVec,
    pub sigma_star: f64,
}

/// Steady-state operating point for given parameters and voltage target.
///
/// The duty ratio follows from the voltage gain, `sigma* = 1 - vin/vo_ref`,
/// and the state solves `A(sigma*) x* + G p = 0` row by row: the first row
/// pins the output voltage at the reference exactly, the second keeps the
/// resistor branch current, `iL* = (vo_ref/Ro + iLoad) / (1 - sigma*)`.
pub fn compute_equilibrium(
    model: &SwitchedModel,
    p: ParamVec,
    vo_ref: f64,
) -> Result<Equilibrium, ModelError> {
    if !(p.vin > 0.0 && p.vin < vo_ref) {
        return Err(ModelError::UnreachableTarget {
            vin: p.vin,
            vo_ref,
        });
    }
    let off_ratio = p.vin / vo_ref; // 1 - sigma*
    let sigma_star = 1.0 - off_ratio;
    if off_ratio == 0.0 {
        return Err(ModelError::SingularMatrix(sigma_star));
    }
    let il = (vo_ref / model.circuit.ro + p.i_load) / off_ratio;
    Ok(Equilibrium {
        x_star: StateVec::new(il, vo_ref),
        sigma_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::norm;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub(crate) fn table_circuit() -> CircuitParams {
        CircuitParams {
            l: 1e-3,
            c: 50e-6,
            ro: 10.0,
            vo_ref: 450.0,
            vin_min: 300.0,
            vin_max: 400.0,
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(a.abs()).max(1e-300)
    }

    #[test]
    fn build_model_table_values() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        assert!(close(m.a0.m[0][1], -1000.0, 1e-12));
        assert!(close(m.a0.m[1][0], 20000.0, 1e-12));
        assert!(close(m.a0.m[1][1], -2000.0, 1e-12));
        assert_eq!(m.a0.m[0][0], 0.0);
        assert_eq!(m.a1.m[0][0], 0.0);
        assert_eq!(m.a1.m[0][1], 0.0);
        assert_eq!(m.a1.m[1][0], 0.0);
        assert!(close(m.a1.m[1][1], -2000.0, 1e-12));
        assert!(close(m.g.m[0][0], 1000.0, 1e-12));
        assert!(close(m.g.m[1][1], -20000.0, 1e-12));
        assert!(close(m.d.m[0][1], 1000.0, 1e-12));
        assert!(close(m.d.m[1][0], -20000.0, 1e-12));
        // D = A1 - A0 exactly
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.d.m[i][j], m.a1.m[i][j] - m.a0.m[i][j]);
            }
        }
    }

    #[test]
    fn build_model_unit_values() {
        let m = SwitchedModel::build(CircuitParams {
            l: 1.0,
            c: 1.0,
            ro: 1.0,
            vo_ref: 2.0,
            vin_min: 1.0,
            vin_max: 1.5,
        })
        .unwrap();
        assert_eq!(m.a0.m, [[0.0, -1.0], [1.0, -1.0]]);
        assert_eq!(m.g.m, [[1.0, 0.0], [0.0, -1.0]]);
    }

    #[test]
    fn build_model_rejects_bad_circuit() {
        let mut c = table_circuit();
        c.l = 0.0;
        assert!(matches!(
            SwitchedModel::build(c),
            Err(ModelError::NonPositiveParameter { name: "L", .. })
        ));
        let mut c = table_circuit();
        c.vin_max = 500.0;
        assert!(matches!(
            SwitchedModel::build(c),
            Err(ModelError::InvalidVoltageRange { .. })
        ));
    }

    #[test]
    fn averaged_matrix_endpoints_and_interior() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        assert_eq!(m.averaged_matrix(0.0).unwrap(), m.a0);
        assert_eq!(m.averaged_matrix(1.0).unwrap(), m.a1);
        let a = m.averaged_matrix(2.0 / 9.0).unwrap();
        assert!(close(a.m[0][1], -7000.0 / 9.0, 1e-12));
        assert!(close(a.m[1][0], 140000.0 / 9.0, 1e-12));
        assert!(close(a.m[1][1], -2000.0, 1e-12));
        assert!(m.averaged_matrix(1.5).is_err());
        assert!(m.averaged_matrix(-0.1).is_err());
    }

    #[test]
    fn averaged_matrix_is_convex_combination() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let d: f64 = rng.gen_range(0.0..=1.0);
            let a = m.averaged_matrix(d).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = d * m.a1.m[i][j] + (1.0 - d) * m.a0.m[i][j];
                    assert_eq!(a.m[i][j], expect);
                }
            }
        }
    }

    #[test]
    fn mode_dynamics_examples() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        let dx = m.mode_dynamics(Mode::Off, StateVec::new(0.0, 0.0), ParamVec::new(350.0, 0.0));
        assert!(close(dx.il, 350_000.0, 1e-12));
        assert_eq!(dx.vo, 0.0);
        let dx = m.mode_dynamics(Mode::On, StateVec::new(10.0, 400.0), ParamVec::new(0.0, 0.0));
        assert_eq!(dx.il, 0.0);
        assert!(close(dx.vo, -800_000.0, 1e-12));
        let dx = m.mode_dynamics(Mode::On, StateVec::default(), ParamVec::default());
        assert_eq!(dx.as_array(), [0.0, 0.0]);
    }

    #[test]
    fn equilibrium_nominal() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        let eq = compute_equilibrium(&m, ParamVec::new(350.0, 0.0), 450.0).unwrap();
        assert!(close(eq.sigma_star, 2.0 / 9.0, 1e-12));
        assert!(close(eq.x_star.il, 405.0 / 7.0, 1e-9));
        assert_eq!(eq.x_star.vo, 450.0);
    }

    #[test]
    fn equilibrium_with_load() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        let eq = compute_equilibrium(&m, ParamVec::new(300.0, 20.0), 450.0).unwrap();
        assert!(close(eq.sigma_star, 1.0 / 3.0, 1e-12));
        assert!(close(eq.x_star.il, 97.5, 1e-9));
        assert_eq!(eq.x_star.vo, 450.0);
    }

    #[test]
    fn equilibrium_unreachable() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        assert!(matches!(
            compute_equilibrium(&m, ParamVec::new(450.0, 0.0), 450.0),
            Err(ModelError::UnreachableTarget { .. })
        ));
        assert!(matches!(
            compute_equilibrium(&m, ParamVec::new(0.0, 0.0), 450.0),
            Err(ModelError::UnreachableTarget { .. })
        ));
    }

    #[test]
    fn equilibrium_residual_random_params() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let p = ParamVec::new(rng.gen_range(1.0..449.0), rng.gen_range(-30.0..30.0));
            let eq = compute_equilibrium(&m, p, 450.0).unwrap();
            let a = m.averaged_matrix(eq.sigma_star).unwrap();
            let gp = m.g.mul_vec(p.as_array());
            let r = a.mul_vec(eq.x_star.as_array());
            let residual = norm([r[0] + gp[0], r[1] + gp[1]]);
            assert!(residual <= 1e-9 * norm(gp).max(1e-300), "residual {residual}");
        }
    }

    #[test]
    fn affine_offsets_cancel_at_duty() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let p = ParamVec::new(rng.gen_range(10.0..440.0), rng.gen_range(-20.0..20.0));
            let eq = compute_equilibrium(&m, p, 450.0).unwrap();
            let b0 = m.affine_offset(Mode::Off, eq.x_star, p);
            let b1 = m.affine_offset(Mode::On, eq.x_star, p);
            let s = eq.sigma_star;
            let combo = [
                s * b1[0] + (1.0 - s) * b0[0],
                s * b1[1] + (1.0 - s) * b0[1],
            ];
            let scale = norm(b0).max(norm(b1)).max(1e-300);
            assert!(norm(combo) <= 1e-9 * scale);
        }
    }

    #[test]
    fn averaged_matrix_hurwitz_on_grid() {
        let m = SwitchedModel::build(table_circuit()).unwrap();
        let mut d = 0.0;
        while d < 1.0 {
            let a = m.averaged_matrix(d).unwrap();
            assert!(a.trace() < 0.0);
            assert!(a.det() > 0.0);
            assert!(a.spectral_abscissa() < 0.0);
            d += 0.05;
        }
    }
}
