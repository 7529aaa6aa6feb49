//! Fixed-step closed-loop simulator.
//!
//! Explicit Euler at `Ts = 1/(Ts_divisor * fs_target)`, 50 ns for the
//! nominal design. The eigenvalue magnitudes of both mode matrices are a
//! few 1e3 rad/s, so the step is governed by switching granularity rather
//! than stiffness; the margin is asserted at startup.
//!
//! Per sample: evaluate the parameter schedule, draw a noise sample,
//! refresh the target from the latest estimate, run the hysteretic
//! controller, advance the estimator with the commanded mode and finally
//! integrate the plant. Runs are deterministic for a fixed seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::ControllerState;
use crate::estimator::{EstimatorState, MeasuredState, Variant};
use crate::mat2::Mat2;
use crate::model::{compute_equilibrium, Mode, ModelError, ParamVec, StateVec, SwitchedModel};
use crate::scenarios::Scenario;
use crate::synthesis::{hysteresis_width, EstimatorGains, LyapunovCertificate, SynthesisError};
use crate::trace::{Event, Row, SimTrace};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state diverged to non-finite values at t = {t:.6} s")]
    NonFinite { t: f64 },
    #[error("Euler step too large: max |eig| * Ts = {margin:.3e}, limit 1e-3")]
    EulerUnstable { margin: f64 },
    #[error("window [{t0}, {t1}] contains no samples")]
    EmptyWindow { t0: f64, t1: f64 },
    #[error("simulation config invalid: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

/// Measurement noise model: white noise of a given power, high-pass
/// filtered at `cutoff_hz`. The per-sample standard deviation is
/// `sqrt(power / Ts)`, the band-limited white noise convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub power: f64,
    pub cutoff_hz: f64,
    pub enabled: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            power: 1e-10,
            cutoff_hz: 100e3,
            enabled: true,
        }
    }
}

/// First-order high-pass: the backward-Euler low-pass subtracted from the
/// input, so DC is rejected exactly in steady state.
#[derive(Clone, Copy, Debug)]
pub struct HighPassFilter {
    a: f64,
    lp: f64,
}

impl HighPassFilter {
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        let wc_dt = 2.0 * std::f64::consts::PI * cutoff_hz * dt;
        Self {
            a: wc_dt / (1.0 + wc_dt),
            lp: 0.0,
        }
    }

    pub fn step(&mut self, input: f64) -> f64 {
        self.lp += self.a * (input - self.lp);
        input - self.lp
    }
}

/// Noise sample source for one run.
#[derive(Clone, Debug)]
pub struct NoiseGenerator {
    white_std: f64,
    filter: HighPassFilter,
    enabled: bool,
}

impl NoiseGenerator {
    pub fn new(cfg: &NoiseConfig, dt: f64) -> Self {
        Self {
            white_std: (cfg.power / dt).sqrt(),
            filter: HighPassFilter::new(cfg.cutoff_hz, dt),
            enabled: cfg.enabled && cfg.power > 0.0,
        }
    }

    pub fn white_std(&self) -> f64 {
        self.white_std
    }

    pub fn step<R: Rng>(&mut self, rng: &mut R) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let w = self.white_std * rng.sample::<f64, _>(rand_distr::StandardNormal);
        self.filter.step(w)
    }
}

/// Run setup: integration step, horizon, target switching frequency,
/// noise, seeding and logging.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration and controller sampling step, s.
    pub ts: f64,
    /// Simulated duration, s.
    pub t_end: f64,
    /// Switching-frequency target used for the hysteresis width, Hz.
    pub f_target: f64,
    pub noise: NoiseConfig,
    pub seed: u64,
    /// When false the target stays frozen at the initial guess.
    pub estimator_enabled: bool,
    pub variant: Variant,
    /// Keep every n-th sample in the trace. Events are never decimated.
    pub log_decimation: usize,
    /// Initial parameter guess, also the frozen target when the estimator
    /// is off.
    pub p_guess: ParamVec,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !self.ts.is_finite() || self.ts <= 0.0 {
            return Err(SimError::BadConfig(format!("Ts must be positive, got {}", self.ts)));
        }
        if !self.t_end.is_finite() || self.t_end <= self.ts {
            return Err(SimError::BadConfig(format!(
                "t_end {} must exceed Ts {}",
                self.t_end, self.ts
            )));
        }
        if self.log_decimation == 0 {
            return Err(SimError::BadConfig("log_decimation must be >= 1".into()));
        }
        Ok(())
    }
}

/// One explicit Euler step of the plant: `x + dt * (A_mode x + G p)`.
pub fn integrate_step(
    model: &SwitchedModel,
    mode: Mode,
    x: StateVec,
    p: ParamVec,
    dt: f64,
) -> StateVec {
    let dx = model.mode_dynamics(mode, x, p);
    StateVec::new(x.il + dt * dx.il, x.vo + dt * dx.vo)
}

fn euler_margin(model: &SwitchedModel, dt: f64) -> f64 {
    model
        .a0
        .spectral_radius()
        .max(model.a1.spectral_radius())
        * dt
}

/// Simulate the full loop for one scenario.
pub fn run_closed_loop(
    model: &SwitchedModel,
    cert: &LyapunovCertificate,
    gains: &EstimatorGains,
    scenario: &Scenario,
    cfg: &SimConfig,
) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    let margin = euler_margin(model, cfg.ts);
    if margin >= 1e-3 {
        return Err(SimError::EulerUnstable { margin });
    }

    let dt = cfg.ts;
    let steps = (cfg.t_end / dt).round() as usize;
    let mut trace = SimTrace::with_capacity(steps / cfg.log_decimation + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise = NoiseGenerator::new(&cfg.noise, dt);

    let eq0 = compute_equilibrium(model, cfg.p_guess, model.circuit.vo_ref)?;
    let h0 = hysteresis_width(model, &cert.p, &eq0, cfg.p_guess, cfg.f_target)?;
    let mut ctrl = ControllerState::new(cert.p, eq0, h0);
    let mut est: Option<EstimatorState> = None;
    let mut x = StateVec::new(0.0, 0.0);

    for k in 0..steps {
        let t = k as f64 * dt;
        let p = scenario.p_at(t, x.vo);
        let nu = noise.step(&mut rng);
        let x_m = MeasuredState::corrupt(x, nu);

        if cfg.estimator_enabled && est.is_none() {
            est = Some(EstimatorState::init(*gains, x_m, cfg.p_guess, cfg.variant));
        }
        let target_p = match &est {
            Some(e) => e.estimate(),
            None => cfg.p_guess,
        };
        let saturated_before = ctrl.saturation_count;
        ctrl.update_target(target_p, model, cfg.f_target);
        if ctrl.saturation_count > saturated_before {
            trace.events.push(Event::Saturation { t });
        }

        let mode_before = ctrl.mode;
        let (mode, s) = ctrl.hysteretic_step(x_m.x, t, model);
        if mode != mode_before {
            trace.events.push(Event::Switch {
                t,
                from: mode_before,
                to: mode,
                s,
                h: ctrl.h,
            });
        }

        let p_hat = match est.as_mut() {
            Some(e) => e.step(x_m, mode, model, dt),
            None => target_p,
        };

        if k % cfg.log_decimation == 0 {
            trace.push(Row {
                t,
                il: x.il,
                vo: x.vo,
                sigma: mode,
                p1_true: p.vin,
                p2_true: p.i_load,
                p1_hat: p_hat.vin,
                p2_hat: p_hat.i_load,
                il_star: ctrl.eq.x_star.il,
                vo_star: ctrl.eq.x_star.vo,
                s_value: s,
                h_value: ctrl.h,
            });
        }

        x = integrate_step(model, mode, x, p, dt);
        if !x.is_finite() {
            return Err(SimError::NonFinite { t });
        }
    }
    Ok(trace)
}

/// Rate of off-to-on transitions between logged samples in the window.
pub fn measure_switching_frequency(
    trace: &SimTrace,
    window: (f64, f64),
) -> Result<f64, SimError> {
    let range = trace.window_indices(window.0, window.1);
    if range.len() < 2 {
        return Err(SimError::EmptyWindow {
            t0: window.0,
            t1: window.1,
        });
    }
    let mut count = 0u64;
    for i in range.start + 1..range.end {
        if trace.sigma[i - 1] == 0 && trace.sigma[i] == 1 {
            count += 1;
        }
    }
    Ok(count as f64 / (window.1 - window.0))
}

/// Lyapunov-value summary over a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSummary {
    pub mean: f64,
    pub max: f64,
    pub last: f64,
}

/// Aggregate tracking and estimation statistics over a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateMetrics {
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
    pub mean_vo: f64,
    pub mean_abs_vo_err: f64,
    pub max_abs_vo_err: f64,
    pub mean_abs_p1_err: f64,
    pub max_abs_p1_err: f64,
    pub mean_abs_p2_err: f64,
    pub max_abs_p2_err: f64,
    pub switching_frequency_hz: f64,
    pub lyapunov: Option<LyapunovSummary>,
}

/// Compute window statistics from the logged rows. The voltage error is
/// measured against the logged target, and the Lyapunov values are filled
/// in when the certificate matrix is supplied.
pub fn steady_state_metrics(
    trace: &SimTrace,
    window: (f64, f64),
    p_mat: Option<&Mat2>,
) -> Result<SteadyStateMetrics, SimError> {
    let range = trace.window_indices(window.0, window.1);
    if range.is_empty() {
        return Err(SimError::EmptyWindow {
            t0: window.0,
            t1: window.1,
        });
    }
    let n = range.len() as f64;
    let mut mean_vo = 0.0;
    let mut mean_abs_vo_err = 0.0;
    let mut max_abs_vo_err: f64 = 0.0;
    let mut mean_abs_p1_err = 0.0;
    let mut max_abs_p1_err: f64 = 0.0;
    let mut mean_abs_p2_err = 0.0;
    let mut max_abs_p2_err: f64 = 0.0;
    let mut v_mean = 0.0;
    let mut v_max: f64 = 0.0;
    let mut v_last = 0.0;
    for i in range.clone() {
        mean_vo += trace.vo[i];
        let ve = (trace.vo[i] - trace.vo_star[i]).abs();
        mean_abs_vo_err += ve;
        max_abs_vo_err = max_abs_vo_err.max(ve);
        let p1e = (trace.p1_hat[i] - trace.p1_true[i]).abs();
        mean_abs_p1_err += p1e;
        max_abs_p1_err = max_abs_p1_err.max(p1e);
        let p2e = (trace.p2_hat[i] - trace.p2_true[i]).abs();
        mean_abs_p2_err += p2e;
        max_abs_p2_err = max_abs_p2_err.max(p2e);
        if let Some(p) = p_mat {
            let e = [
                trace.il[i] - trace.il_star[i],
                trace.vo[i] - trace.vo_star[i],
            ];
            let v = crate::mat2::dot(e, p.mul_vec(e));
            v_mean += v;
            v_max = v_max.max(v);
            v_last = v;
        }
    }
    let fs = measure_switching_frequency(trace, window).unwrap_or(0.0);
    Ok(SteadyStateMetrics {
        t0: window.0,
        t1: window.1,
        samples: range.len(),
        mean_vo: mean_vo / n,
        mean_abs_vo_err: mean_abs_vo_err / n,
        max_abs_vo_err,
        mean_abs_p1_err: mean_abs_p1_err / n,
        max_abs_p1_err,
        mean_abs_p2_err: mean_abs_p2_err / n,
        max_abs_p2_err,
        switching_frequency_hz: fs,
        lyapunov: p_mat.map(|_| LyapunovSummary {
            mean: v_mean / n,
            max: v_max,
            last: v_last,
        }),
    })
}

impl std::fmt::Display for SteadyStateMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "window_t0 = {}", self.t0)?;
        writeln!(f, "window_t1 = {}", self.t1)?;
        writeln!(f, "samples = {}", self.samples)?;
        writeln!(f, "mean_vo = {}", self.mean_vo)?;
        writeln!(f, "mean_abs_vo_err = {}", self.mean_abs_vo_err)?;
        writeln!(f, "max_abs_vo_err = {}", self.max_abs_vo_err)?;
        writeln!(f, "mean_abs_p1_err = {}", self.mean_abs_p1_err)?;
        writeln!(f, "max_abs_p1_err = {}", self.max_abs_p1_err)?;
        writeln!(f, "mean_abs_p2_err = {}", self.mean_abs_p2_err)?;
        writeln!(f, "max_abs_p2_err = {}", self.max_abs_p2_err)?;
        writeln!(f, "switching_frequency_hz = {}", self.switching_frequency_hz)?;
        if let Some(v) = &self.lyapunov {
            writeln!(f, "lyapunov_mean = {}", v.mean)?;
            writeln!(f, "lyapunov_max = {}", v.max)?;
            writeln!(f, "lyapunov_last = {}", v.last)?;
        }
        Ok(())
    }
}
