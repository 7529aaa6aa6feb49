//! Flat run configuration.
//!
//! One key-value table covers circuit constants, design knobs and
//! simulation settings. Defaults reproduce the nominal study: 1 mH / 50 uF
//! / 10 Ohm circuit regulating 450 V from a 300..400 V source, decay rate
//! 40 1/s, estimator bandwidth 4000 1/s with one filter stage, 200 kHz
//! switching target sampled 100x faster, and high-pass filtered
//! measurement noise.

use serde::{Deserialize, Serialize};

use crate::estimator::Variant;
use crate::model::{CircuitParams, ModelError, ParamVec, SwitchedModel};
use crate::scenarios::Scenario;
use crate::sim::{NoiseConfig, SimConfig};
use crate::synthesis::{
    alpha_bar, design_estimator_gain, hysteresis_width, solve_common_lyapunov, EstimatorGains,
    ExoSystem, LyapunovCertificate, SynthesisError,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Ro")]
    pub ro: f64,
    pub vo_ref: f64,
    pub vin_min: f64,
    pub vin_max: f64,
    /// Closed-loop decay rate imposed by the Lyapunov design, 1/s.
    pub alpha: f64,
    /// Estimator bandwidth, 1/s.
    pub lambda: f64,
    /// Filter-to-estimator bandwidth ratio.
    pub gamma: f64,
    /// Number of cascaded noise filters.
    pub r: usize,
    /// Steady-state switching frequency target, Hz.
    pub fs_target: f64,
    /// Samples per switching period: Ts = 1 / (Ts_divisor * fs_target).
    #[serde(rename = "Ts_divisor")]
    pub ts_divisor: f64,
    /// White noise power before high-pass filtering.
    pub noise_power: f64,
    /// High-pass corner frequency, Hz.
    pub noise_cutoff: f64,
    pub noise_enabled: bool,
    pub seed: u64,
    pub variant: Variant,
    pub log_decimation: usize,
    /// Initial guess for the input voltage; defaults to the midpoint of the
    /// configured range.
    pub p1_guess: Option<f64>,
    /// Initial guess for the load current.
    pub p2_guess: f64,
    /// Simulated duration override; scenarios provide their own default.
    pub t_end: Option<f64>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            l: 1e-3,
            c: 50e-6,
            ro: 10.0,
            vo_ref: 450.0,
            vin_min: 300.0,
            vin_max: 400.0,
            alpha: 40.0,
            lambda: 4000.0,
            gamma: 2.5,
            r: 1,
            fs_target: 200e3,
            ts_divisor: 100.0,
            noise_power: 1e-10,
            noise_cutoff: 100e3,
            noise_enabled: true,
            seed: 1,
            variant: Variant::Filtered,
            log_decimation: 20,
            p1_guess: None,
            p2_guess: 0.0,
            t_end: None,
        }
    }
}

impl ToolConfig {
    pub fn circuit(&self) -> CircuitParams {
        CircuitParams {
            l: self.l,
            c: self.c,
            ro: self.ro,
            vo_ref: self.vo_ref,
            vin_min: self.vin_min,
            vin_max: self.vin_max,
        }
    }

    /// Integration and controller sampling step.
    pub fn ts(&self) -> f64 {
        1.0 / (self.ts_divisor * self.fs_target)
    }

    pub fn p_guess(&self) -> ParamVec {
        ParamVec::new(
            self.p1_guess
                .unwrap_or(0.5 * (self.vin_min + self.vin_max)),
            self.p2_guess,
        )
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            power: self.noise_power,
            cutoff_hz: self.noise_cutoff,
            enabled: self.noise_enabled,
        }
    }

    /// Simulation settings for one scenario. The scenario decides whether
    /// the estimator runs; the config supplies everything else.
    pub fn sim_config(&self, scenario: &Scenario) -> SimConfig {
        SimConfig {
            ts: self.ts(),
            t_end: self.t_end.unwrap_or(scenario.duration),
            f_target: self.fs_target,
            noise: self.noise(),
            seed: self.seed,
            estimator_enabled: scenario.estimator_enabled,
            variant: self.variant,
            log_decimation: self.log_decimation,
            p_guess: self.p_guess(),
        }
    }

    /// Run the offline design and bundle everything the online loop needs.
    pub fn design(&self) -> Result<DesignArtifacts, DesignError> {
        let model = SwitchedModel::build(self.circuit())?;
        let cert = solve_common_lyapunov(&model, self.alpha)?;
        let gains =
            design_estimator_gain(&ExoSystem::default(), &model, self.lambda, self.gamma, self.r)?;
        let p_nominal = self.p_guess();
        let eq_nominal = crate::model::compute_equilibrium(&model, p_nominal, self.vo_ref)?;
        let h_nominal = hysteresis_width(&model, &cert.p, &eq_nominal, p_nominal, self.fs_target)?;
        Ok(DesignArtifacts {
            model,
            cert,
            gains,
            alpha_bar: alpha_bar(&model),
            eq_nominal,
            h_nominal,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DesignError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

/// Everything produced by the offline design pass.
#[derive(Clone, Debug, Serialize)]
pub struct DesignArtifacts {
    pub model: SwitchedModel,
    pub cert: LyapunovCertificate,
    pub gains: EstimatorGains,
    /// Decay-rate ceiling of the vertex matrices, 1/s.
    pub alpha_bar: f64,
    pub eq_nominal: crate::model::Equilibrium,
    /// Hysteresis half-width at the nominal operating point.
    pub h_nominal: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_nominal_study() {
        let cfg = ToolConfig::default();
        assert_eq!(cfg.ts(), 5e-8);
        assert_eq!(cfg.p_guess(), ParamVec::new(350.0, 0.0));
        let circuit = cfg.circuit();
        assert_eq!(circuit.l, 1e-3);
        assert_eq!(circuit.ro, 10.0);
    }

    #[test]
    fn design_pass_is_feasible_with_defaults() {
        let art = ToolConfig::default().design().unwrap();
        assert!(art.cert.pmin_eig > 0.0);
        assert!(art.cert.slack_min_vertex < 0.0);
        assert!(art.cert.slack_max_vertex < 0.0);
        assert!(art.h_nominal > 0.0);
        assert!((art.alpha_bar - 1000.0).abs() < 50.0);
        assert!((art.gains.kappa.m[0][0] - 4.0).abs() < 1e-12);
    }
}
