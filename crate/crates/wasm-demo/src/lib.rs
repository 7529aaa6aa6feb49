//! Browser bindings for the switching-control toolkit.
//!
//! Three entry points, all JSON in / JSON out so the page stays a single
//! static file with no framework:
//!
//! - [`design_report`]: run the offline synthesis for a config.
//! - [`run_scenario`]: simulate s1/s2/s3 and return bucketed plot series
//!   plus window metrics.
//! - [`frequency_sweep`]: measure the realized switching frequency against
//!   a list of targets at the nominal operating point.
//!
//! The config argument is the same flat key set the CLI accepts, as a JSON
//! object; missing keys take the nominal defaults.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use boostsw_core::config::DesignError;
use boostsw_core::scenarios::Scenario;
use boostsw_core::sim::{measure_switching_frequency, run_closed_loop, steady_state_metrics};
use boostsw_core::synthesis::SynthesisError;
use boostsw_core::trace::SimTrace;
use boostsw_core::{scenario_by_name, SteadyStateMetrics, ToolConfig};

fn parse_config(config_json: &str) -> Result<ToolConfig, String> {
    if config_json.trim().is_empty() {
        return Ok(ToolConfig::default());
    }
    serde_json::from_str(config_json).map_err(|e| format!("bad config: {e}"))
}

#[derive(Serialize)]
struct DesignReport {
    feasible: bool,
    alpha: f64,
    alpha_bar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slack_min_vertex: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slack_max_vertex: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pmin_eig: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_star_nominal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    il_star_nominal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_nominal: Option<f64>,
    fs_target: f64,
}

pub fn design_report_impl(config_json: &str) -> Result<String, String> {
    let cfg = parse_config(config_json)?;
    let report = match cfg.design() {
        Ok(art) => DesignReport {
            feasible: true,
            alpha: cfg.alpha,
            alpha_bar: art.alpha_bar,
            p: Some(art.cert.p.m),
            slack_min_vertex: Some(art.cert.slack_min_vertex),
            slack_max_vertex: Some(art.cert.slack_max_vertex),
            pmin_eig: Some(art.cert.pmin_eig),
            best_slack: None,
            kappa: Some(art.gains.kappa.m),
            lambda_theta: Some(art.gains.theta.m[0][0]),
            sigma_star_nominal: Some(art.eq_nominal.sigma_star),
            il_star_nominal: Some(art.eq_nominal.x_star.il),
            h_nominal: Some(art.h_nominal),
            fs_target: cfg.fs_target,
        },
        Err(DesignError::Synthesis(SynthesisError::Infeasible {
            alpha,
            best_slack,
            alpha_bar,
        })) => DesignReport {
            feasible: false,
            alpha,
            alpha_bar,
            p: None,
            slack_min_vertex: None,
            slack_max_vertex: None,
            pmin_eig: None,
            best_slack: Some(best_slack),
            kappa: None,
            lambda_theta: None,
            sigma_star_nominal: None,
            il_star_nominal: None,
            h_nominal: None,
            fs_target: cfg.fs_target,
        },
        Err(e) => return Err(e.to_string()),
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Plot series reduced to `buckets` points: per bucket the mean plus the
/// min/max envelope of the output voltage, so switching ripple stays
/// visible without shipping millions of samples.
#[derive(Serialize)]
struct PlotData {
    t: Vec<f64>,
    vo: Vec<f64>,
    vo_min: Vec<f64>,
    vo_max: Vec<f64>,
    vo_star: Vec<f64>,
    il: Vec<f64>,
    p1_true: Vec<f64>,
    p1_hat: Vec<f64>,
    p2_true: Vec<f64>,
    p2_hat: Vec<f64>,
    /// Mean switch position per bucket, i.e. the local duty cycle.
    duty: Vec<f64>,
}

#[derive(Serialize)]
struct WindowMetrics {
    t0: f64,
    t1: f64,
    mean_vo: f64,
    max_abs_vo_err: f64,
    mean_abs_p1_err: f64,
    mean_abs_p2_err: f64,
    switching_frequency_hz: f64,
}

impl From<&SteadyStateMetrics> for WindowMetrics {
    fn from(m: &SteadyStateMetrics) -> Self {
        Self {
            t0: m.t0,
            t1: m.t1,
            mean_vo: m.mean_vo,
            max_abs_vo_err: m.max_abs_vo_err,
            mean_abs_p1_err: m.mean_abs_p1_err,
            mean_abs_p2_err: m.mean_abs_p2_err,
            switching_frequency_hz: m.switching_frequency_hz,
        }
    }
}

#[derive(Serialize)]
struct ScenarioResult {
    scenario: String,
    description: String,
    t_end: f64,
    switches: usize,
    saturations: usize,
    plot: PlotData,
    windows: Vec<WindowMetrics>,
}

fn bucketize(trace: &SimTrace, buckets: usize) -> PlotData {
    let n = trace.len();
    let stride = (n / buckets).max(1);
    let m = n.div_ceil(stride);
    let mut plot = PlotData {
        t: Vec::with_capacity(m),
        vo: Vec::with_capacity(m),
        vo_min: Vec::with_capacity(m),
        vo_max: Vec::with_capacity(m),
        vo_star: Vec::with_capacity(m),
        il: Vec::with_capacity(m),
        p1_true: Vec::with_capacity(m),
        p1_hat: Vec::with_capacity(m),
        p2_true: Vec::with_capacity(m),
        p2_hat: Vec::with_capacity(m),
        duty: Vec::with_capacity(m),
    };
    let mut i = 0;
    while i < n {
        let end = (i + stride).min(n);
        let len = (end - i) as f64;
        let (mut vo, mut vmin, mut vmax, mut il, mut duty) =
            (0.0, f64::INFINITY, f64::NEG_INFINITY, 0.0, 0.0);
        for k in i..end {
            vo += trace.vo[k];
            vmin = vmin.min(trace.vo[k]);
            vmax = vmax.max(trace.vo[k]);
            il += trace.il[k];
            duty += trace.sigma[k] as f64;
        }
        plot.t.push(trace.t[i]);
        plot.vo.push(vo / len);
        plot.vo_min.push(vmin);
        plot.vo_max.push(vmax);
        plot.vo_star.push(trace.vo_star[i]);
        plot.il.push(il / len);
        plot.p1_true.push(trace.p1_true[i]);
        plot.p1_hat.push(trace.p1_hat[i]);
        plot.p2_true.push(trace.p2_true[i]);
        plot.p2_hat.push(trace.p2_hat[i]);
        plot.duty.push(duty / len);
        i = end;
    }
    plot
}

pub fn run_scenario_impl(scenario_name: &str, config_json: &str) -> Result<String, String> {
    let cfg = parse_config(config_json)?;
    let scenario = scenario_by_name(scenario_name, None).map_err(|e| e.to_string())?;
    let art = cfg.design().map_err(|e| e.to_string())?;
    let sim_cfg = cfg.sim_config(&scenario);
    let trace = run_closed_loop(&art.model, &art.cert, &art.gains, &scenario, &sim_cfg)
        .map_err(|e| e.to_string())?;
    let mut windows = Vec::new();
    for &(t0, t1) in &scenario.report_windows {
        if t1 <= sim_cfg.t_end {
            if let Ok(m) = steady_state_metrics(&trace, (t0, t1), Some(&art.cert.p)) {
                windows.push(WindowMetrics::from(&m));
            }
        }
    }
    let result = ScenarioResult {
        scenario: scenario.name.to_string(),
        description: scenario.description.to_string(),
        t_end: sim_cfg.t_end,
        switches: trace.switch_events().count(),
        saturations: trace.saturation_count(),
        plot: bucketize(&trace, 2000),
        windows,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SweepPoint {
    f_target: f64,
    f_measured: f64,
    h: f64,
}

pub fn frequency_sweep_impl(config_json: &str, targets_json: &str) -> Result<String, String> {
    let base = parse_config(config_json)?;
    let targets: Vec<f64> =
        serde_json::from_str(targets_json).map_err(|e| format!("bad targets: {e}"))?;
    let mut points = Vec::with_capacity(targets.len());
    for f_target in targets {
        if !f_target.is_finite() || f_target <= 0.0 {
            return Err(format!("targets must be positive, got {f_target}"));
        }
        let mut cfg = base;
        cfg.fs_target = f_target;
        // keep the integration step at the base design's resolution so only
        // the hysteresis width changes across the sweep
        cfg.ts_divisor = base.ts_divisor * base.fs_target / f_target;
        // fine-grained logging so fast switching is not aliased away
        cfg.log_decimation = 2;
        let art = cfg.design().map_err(|e| e.to_string())?;
        let scenario = Scenario::constant(cfg.p_guess(), 0.03, true);
        let sim_cfg = cfg.sim_config(&scenario);
        let trace = run_closed_loop(&art.model, &art.cert, &art.gains, &scenario, &sim_cfg)
            .map_err(|e| e.to_string())?;
        let f_measured =
            measure_switching_frequency(&trace, (0.015, 0.03)).map_err(|e| e.to_string())?;
        points.push(SweepPoint {
            f_target,
            f_measured,
            h: art.h_nominal,
        });
    }
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn design_report(config_json: &str) -> Result<String, JsValue> {
    design_report_impl(config_json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn run_scenario(scenario: &str, config_json: &str) -> Result<String, JsValue> {
    run_scenario_impl(scenario, config_json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn frequency_sweep(config_json: &str, targets_json: &str) -> Result<String, JsValue> {
    frequency_sweep_impl(config_json, targets_json).map_err(|e| JsValue::from_str(&e))
}

// silence the unused-dependency lint for the wasm-only getrandom backend
#[cfg(target_arch = "wasm32")]
use getrandom as _;
