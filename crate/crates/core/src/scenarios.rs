//! The three validation scenarios as parameter schedules.
//!
//! S1 and S2 apply the same series of input-voltage and load-current steps;
//! S1 keeps the target frozen at the nominal point while S2 lets the
//! estimator drive it. S3 replaces the steps with a PV source following an
//! irradiance trace and an EV battery charging through a downstream
//! converter, reflected into the output node as a load current.

use std::path::Path;

use thiserror::Error;

use crate::model::ParamVec;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("irradiance trace covers {covered:.3} s but the scenario needs {needed:.3} s")]
    TraceTooShort { covered: f64, needed: f64 },
    #[error("irradiance trace needs at least two points")]
    TraceTooSparse,
    #[error("irradiance trace times must be strictly increasing")]
    TraceNotMonotonic,
    #[error("bad irradiance file line {line}: {reason}")]
    BadTraceLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Affine irradiance-to-voltage surrogate for the PV source, clamped to the
/// reachable input range.
#[derive(Clone, Copy, Debug)]
pub struct PvMap {
    /// Voltage produced at reference irradiance, V.
    pub v_nom: f64,
    /// Reference irradiance, W/m^2.
    pub irr_ref: f64,
    /// Fractional voltage drop per unit of relative irradiance deficit.
    pub sensitivity: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
}

impl Default for PvMap {
    fn default() -> Self {
        Self {
            v_nom: 350.0,
            irr_ref: 1000.0,
            sensitivity: 0.15,
            clamp_min: 300.0,
            clamp_max: 400.0,
        }
    }
}

/// Input voltage for a given irradiance. Monotone non-decreasing in `irr`
/// and always inside the clamp range.
pub fn pv_voltage(irr: f64, map: &PvMap) -> f64 {
    let v = map.v_nom * (1.0 - map.sensitivity * (1.0 - irr / map.irr_ref));
    v.clamp(map.clamp_min, map.clamp_max)
}

/// Battery charging profile: idle, constant-current ramp, constant-current
/// plateau, then a constant-voltage taper with exponential current decay.
#[derive(Clone, Copy, Debug)]
pub struct BatteryProfile {
    /// Nameplate capacity, Ah. Informational; the short simulated window
    /// moves the state of charge by well under a percent.
    pub capacity_ah: f64,
    /// Battery terminal voltage, V, held constant on this time-scale.
    pub v_nominal: f64,
    /// Current ramp slope during early constant-current mode, A/s.
    pub ramp_slope: f64,
    /// Plateau charging current, A.
    pub i_cc: f64,
    /// Charging start time, s.
    pub t_start: f64,
    /// End of the current ramp, s.
    pub t_cc_end: f64,
    /// Hand-over from constant-current to constant-voltage mode, s.
    pub t_cv: f64,
    /// Current decay time constant in constant-voltage mode, s.
    pub cv_decay_tau: f64,
}

impl Default for BatteryProfile {
    fn default() -> Self {
        Self {
            capacity_ah: 50.0,
            v_nominal: 300.0,
            ramp_slope: 100.0, // 0.1 A/ms
            i_cc: 10.0,
            t_start: 0.1,
            t_cc_end: 0.2,
            t_cv: 0.3,
            cv_decay_tau: 0.5,
        }
    }
}

/// Battery charging current magnitude at time `t`.
pub fn battery_current(t: f64, profile: &BatteryProfile) -> f64 {
    if t < profile.t_start {
        0.0
    } else if t < profile.t_cc_end {
        profile.ramp_slope * (t - profile.t_start)
    } else if t < profile.t_cv {
        profile.i_cc
    } else {
        profile.i_cc * (-(t - profile.t_cv) / profile.cv_decay_tau).exp()
    }
}

/// Load current reflected into the converter output node: the downstream
/// converter is taken as lossless, so `vo * i_load = v_bat * i_bat`.
pub fn battery_load_current(t: f64, profile: &BatteryProfile, vo: f64) -> f64 {
    profile.v_nominal * battery_current(t, profile) / vo
}

/// Piecewise-linear irradiance trace.
#[derive(Clone, Debug)]
pub struct IrradianceTrace {
    /// `(t_seconds, irradiance_wm2)` with strictly increasing times.
    pub points: Vec<(f64, f64)>,
}

impl IrradianceTrace {
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self, ScenarioError> {
        if points.len() < 2 {
            return Err(ScenarioError::TraceTooSparse);
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ScenarioError::TraceNotMonotonic);
        }
        Ok(Self { points })
    }

    /// Two-column CSV `t_seconds,irradiance_wm2`; a header row is skipped if
    /// the first field does not parse as a number.
    pub fn from_csv(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',');
            let (a, b) = (fields.next().unwrap_or(""), fields.next().unwrap_or(""));
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(t), Ok(v)) => points.push((t, v)),
                _ if i == 0 => continue, // header
                _ => {
                    return Err(ScenarioError::BadTraceLine {
                        line: i + 1,
                        reason: format!("expected two numbers, got {line:?}"),
                    })
                }
            }
        }
        Self::from_points(points)
    }

    /// Built-in trace used when no file is supplied: fluctuations around
    /// 1000 W/m^2 with a pronounced dip, covering 0.5 s.
    pub fn synthetic_default() -> Self {
        Self {
            points: vec![
                (0.00, 1000.0),
                (0.05, 1040.0),
                (0.10, 960.0),
                (0.15, 1080.0),
                (0.20, 870.0),
                (0.25, 790.0),
                (0.30, 900.0),
                (0.35, 1020.0),
                (0.40, 950.0),
                (0.45, 1060.0),
                (0.50, 1000.0),
            ],
        }
    }

    pub fn t_end(&self) -> f64 {
        self.points.last().map(|p| p.0).unwrap_or(0.0)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let i = pts.partition_point(|p| p.0 <= t);
        let (t0, v0) = pts[i - 1];
        let (t1, v1) = pts[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }
}

#[derive(Clone, Debug)]
enum Schedule {
    /// Right-continuous step schedule: the value at `t` is the entry with
    /// the largest start time not exceeding `t`.
    Steps(Vec<(f64, ParamVec)>),
    PvBattery {
        pv: PvMap,
        battery: BatteryProfile,
        irradiance: IrradianceTrace,
    },
}

/// A named experiment: a parameter schedule, the estimator switch and the
/// windows the report should summarize.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub duration: f64,
    pub estimator_enabled: bool,
    schedule: Schedule,
    /// `(t0, t1)` windows of interest for the metrics report.
    pub report_windows: Vec<(f64, f64)>,
}

impl Scenario {
    /// Parameter vector at time `t`. The output voltage is needed for the
    /// reflected battery current in S3 and ignored by the step schedules.
    pub fn p_at(&self, t: f64, vo: f64) -> ParamVec {
        match &self.schedule {
            Schedule::Steps(steps) => {
                let mut current = steps[0].1;
                for (t_step, p) in steps {
                    if t >= *t_step {
                        current = *p;
                    } else {
                        break;
                    }
                }
                current
            }
            Schedule::PvBattery {
                pv,
                battery,
                irradiance,
            } => {
                let vin = pv_voltage(irradiance.value_at(t), pv);
                // guard the division for the very first samples before the
                // output has charged up
                let vo_safe = vo.max(1.0);
                ParamVec::new(vin, battery_load_current(t, battery, vo_safe))
            }
        }
    }

    /// Schedule discontinuities and slope breaks, for settling-window
    /// bookkeeping.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.schedule {
            Schedule::Steps(steps) => steps.iter().map(|(t, _)| *t).filter(|t| *t > 0.0).collect(),
            Schedule::PvBattery {
                battery,
                irradiance,
                ..
            } => {
                let mut bp = irradiance.breakpoints();
                bp.extend([battery.t_start, battery.t_cc_end, battery.t_cv]);
                bp.retain(|t| *t > 0.0 && *t < self.duration);
                bp.sort_by(|a, b| a.partial_cmp(b).unwrap());
                bp.dedup();
                bp
            }
        }
    }
}

fn step_schedule() -> Vec<(f64, ParamVec)> {
    vec![
        (0.00, ParamVec::new(350.0, 0.0)),
        (0.10, ParamVec::new(300.0, 0.0)),
        (0.15, ParamVec::new(300.0, 20.0)),
        (0.20, ParamVec::new(400.0, 20.0)),
        (0.25, ParamVec::new(400.0, 10.0)),
        (0.30, ParamVec::new(350.0, 0.0)),
    ]
}

impl Scenario {
    /// Fixed parameters for the whole run. Used for steady-state and
    /// convergence experiments outside the three named scenarios.
    pub fn constant(p: ParamVec, duration: f64, estimator_enabled: bool) -> Scenario {
        Scenario {
            name: "constant",
            description: "fixed parameters",
            duration,
            estimator_enabled,
            schedule: Schedule::Steps(vec![(0.0, p)]),
            report_windows: vec![(0.5 * duration, duration)],
        }
    }
}

/// Step perturbations with the target frozen at the nominal point.
pub fn scenario_s1() -> Scenario {
    Scenario {
        name: "s1",
        description: "step perturbations, frozen nominal target",
        duration: 0.4,
        estimator_enabled: false,
        schedule: Schedule::Steps(step_schedule()),
        report_windows: vec![(0.16, 0.20), (0.35, 0.40)],
    }
}

/// Same step perturbations with the estimator updating the target.
pub fn scenario_s2() -> Scenario {
    Scenario {
        name: "s2",
        description: "step perturbations, estimator-driven target",
        duration: 0.4,
        estimator_enabled: true,
        schedule: Schedule::Steps(step_schedule()),
        report_windows: vec![(0.05, 0.10), (0.35, 0.40)],
    }
}

/// PV source with battery charging load.
pub fn scenario_s3(irradiance: IrradianceTrace) -> Result<Scenario, ScenarioError> {
    let duration = 0.5;
    if irradiance.t_end() < duration {
        return Err(ScenarioError::TraceTooShort {
            covered: irradiance.t_end(),
            needed: duration,
        });
    }
    Ok(Scenario {
        name: "s3",
        description: "PV input with EV battery charging load",
        duration,
        estimator_enabled: true,
        schedule: Schedule::PvBattery {
            pv: PvMap::default(),
            battery: BatteryProfile::default(),
            irradiance,
        },
        report_windows: vec![(0.05, 0.10), (0.40, 0.50)],
    })
}

pub fn scenario_by_name(
    name: &str,
    irradiance: Option<IrradianceTrace>,
) -> Result<Scenario, ScenarioError> {
    match name {
        "s1" => Ok(scenario_s1()),
        "s2" => Ok(scenario_s2()),
        "s3" => scenario_s3(irradiance.unwrap_or_else(IrradianceTrace::synthetic_default)),
        other => Err(ScenarioError::BadTraceLine {
            line: 0,
            reason: format!("unknown scenario {other:?} (expected s1, s2 or s3)"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s1_schedule_breakpoints() {
        let s = scenario_s1();
        assert_eq!(s.p_at(0.05, 450.0), ParamVec::new(350.0, 0.0));
        assert_eq!(s.p_at(0.17, 450.0), ParamVec::new(300.0, 20.0));
        assert_eq!(s.p_at(0.35, 450.0), ParamVec::new(350.0, 0.0));
        // right-continuity at the steps themselves
        assert_eq!(s.p_at(0.10, 450.0), ParamVec::new(300.0, 0.0));
        assert_eq!(s.p_at(0.15, 450.0), ParamVec::new(300.0, 20.0));
        assert_eq!(s.p_at(0.20, 450.0), ParamVec::new(400.0, 20.0));
        assert_eq!(s.p_at(0.25, 450.0), ParamVec::new(400.0, 10.0));
        assert_eq!(s.p_at(0.30, 450.0), ParamVec::new(350.0, 0.0));
        assert!(!s.estimator_enabled);
        assert_eq!(s.duration, 0.4);
    }

    #[test]
    fn s2_matches_s1_with_estimator() {
        let s1 = scenario_s1();
        let s2 = scenario_s2();
        assert!(s2.estimator_enabled);
        let mut t = 0.0;
        while t < 0.4 {
            assert_eq!(s1.p_at(t, 450.0), s2.p_at(t, 450.0));
            t += 1e-3;
        }
    }

    #[test]
    fn pv_voltage_reference_and_clamps() {
        let map = PvMap::default();
        assert_eq!(pv_voltage(1000.0, &map), 350.0);
        assert_eq!(pv_voltage(0.0, &map), 300.0);
        assert_eq!(pv_voltage(5000.0, &map), 400.0);
        // monotone non-decreasing
        let mut last = 0.0;
        for i in 0..200 {
            let v = pv_voltage(i as f64 * 20.0, &map);
            assert!(v >= last);
            assert!((300.0..=400.0).contains(&v));
            last = v;
        }
    }

    #[test]
    fn battery_profile_values() {
        let b = BatteryProfile::default();
        assert_eq!(battery_load_current(0.05, &b, 450.0), 0.0);
        // ramp midpoint: 5 A battery current reflected by 300/450
        let i = battery_load_current(0.15, &b, 450.0);
        assert!((i - 300.0 * 5.0 / 450.0).abs() < 1e-9);
        // plateau
        let i = battery_load_current(0.25, &b, 450.0);
        assert!((i - 300.0 * 10.0 / 450.0).abs() < 1e-9);
        // taper decays
        assert!(battery_current(0.35, &b) < b.i_cc);
        assert!(battery_current(0.8, &b) < battery_current(0.35, &b));
    }

    #[test]
    fn battery_reflection_preserves_power() {
        let b = BatteryProfile::default();
        for k in 0..500 {
            let t = k as f64 * 1e-3;
            let vo = 420.0 + (k % 7) as f64 * 10.0;
            let i_load = battery_load_current(t, &b, vo);
            let balance = vo * i_load - b.v_nominal * battery_current(t, &b);
            assert!(balance.abs() <= 1e-9 * (vo * i_load).abs().max(1.0));
        }
    }

    #[test]
    fn battery_current_is_continuous() {
        let b = BatteryProfile::default();
        let mut t = 0.05;
        let mut last = battery_current(t, &b);
        while t < 0.45 {
            t += 1e-5;
            let i = battery_current(t, &b);
            // slope never exceeds the ramp slope, so steps of 1e-5 s move
            // the current by at most ramp_slope * 1e-5 (plus rounding)
            assert!((i - last).abs() <= b.ramp_slope * 1e-5 + 1e-12);
            last = i;
        }
    }

    #[test]
    fn s3_composition_and_trace_guard() {
        let flat =
            IrradianceTrace::from_points(vec![(0.0, 1000.0), (0.6, 1000.0)]).unwrap();
        let s = scenario_s3(flat).unwrap();
        assert!(s.estimator_enabled);
        // reference irradiance before charging starts: nominal parameters
        let p = s.p_at(0.05, 450.0);
        assert_eq!(p, ParamVec::new(350.0, 0.0));

        let s = scenario_s3(IrradianceTrace::synthetic_default()).unwrap();
        let p = s.p_at(0.05, 450.0);
        assert!((p.vin - pv_voltage(1040.0, &PvMap::default())).abs() < 1e-9);
        assert_eq!(p.i_load, 0.0);

        let short = IrradianceTrace::from_points(vec![(0.0, 1000.0), (0.2, 900.0)]).unwrap();
        assert!(matches!(
            scenario_s3(short),
            Err(ScenarioError::TraceTooShort { .. })
        ));
    }

    #[test]
    fn trace_interpolation() {
        let tr = IrradianceTrace::from_points(vec![(0.0, 100.0), (1.0, 200.0), (2.0, 150.0)])
            .unwrap();
        assert_eq!(tr.value_at(-1.0), 100.0);
        assert_eq!(tr.value_at(0.5), 150.0);
        assert_eq!(tr.value_at(1.5), 175.0);
        assert_eq!(tr.value_at(3.0), 150.0);
        assert!(IrradianceTrace::from_points(vec![(0.0, 1.0)]).is_err());
        assert!(IrradianceTrace::from_points(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
    }
}
