//! Offline design: common Lyapunov matrix, estimator gain placement and
//! hysteresis width.
//!
//! The Lyapunov matrix has to satisfy the decay inequality
//! `A(mu)' P + P A(mu) + 2 alpha P <= 0` at both extreme duty ratios of the
//! input-voltage range. The problem is two-dimensional once `P` is
//! trace-normalized, so instead of pulling in a semidefinite solver we
//! minimize the worst constraint eigenvalue with a multi-start Nelder-Mead
//! search and verify the winner with the closed-form eigenvalue check in
//! [`lmi_slack`]. The certificate can always be re-checked independently of
//! the search that produced it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat2::{dot, Mat2};
use crate::model::{Equilibrium, ModelError, ParamVec, SwitchedModel};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("no common Lyapunov matrix for alpha = {alpha} (best slack {best_slack:.3e}, decay-rate bound {alpha_bar:.1})")]
    Infeasible {
        alpha: f64,
        best_slack: f64,
        alpha_bar: f64,
    },
    #[error("alpha must be nonnegative, got {0}")]
    NegativeAlpha(f64),
    #[error("gain placement only supports the constant-parameter exo-system (Ap = 0, Cp = I)")]
    UnsupportedExoSystem,
    #[error("estimator bandwidth must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("filter ratio gamma must exceed 1, got {0}")]
    GammaTooSmall(f64),
    #[error("filter order must be at least 1")]
    ZeroFilterOrder,
    #[error("target switching frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("both mode offsets are orthogonal to the switching direction, hysteresis width undefined")]
    DegenerateEquilibrium,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Common quadratic Lyapunov certificate over the vertex duty ratios.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LyapunovCertificate {
    /// Symmetric positive definite matrix, normalized to `trace(P) = 2`.
    pub p: Mat2,
    /// Decay rate the certificate was solved for, 1/s.
    pub alpha: f64,
    /// Largest eigenvalue of the decay inequality at the lower vertex duty.
    pub slack_min_vertex: f64,
    /// Largest eigenvalue of the decay inequality at the upper vertex duty.
    pub slack_max_vertex: f64,
    /// Smallest eigenvalue of `P`.
    pub pmin_eig: f64,
}

/// Exo-system generating the unknown parameters: `zeta' = Ap zeta`,
/// `p = Cp zeta`. The default instance models constant parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExoSystem {
    pub ap: Mat2,
    pub cp: Mat2,
    pub dim: usize,
}

impl Default for ExoSystem {
    fn default() -> Self {
        Self {
            ap: Mat2::ZERO,
            cp: Mat2::IDENTITY,
            dim: 2,
        }
    }
}

impl ExoSystem {
    pub fn is_constant_parameter(&self) -> bool {
        self.ap == Mat2::ZERO && self.cp == Mat2::IDENTITY && self.dim == 2
    }
}

/// Estimator gains: observer gain `kappa`, bandwidth `lambda`, and the
/// first-order filter cascade parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EstimatorGains {
    pub kappa: Mat2,
    /// Estimator bandwidth, 1/s. All observer eigenvalues sit at `-lambda`.
    pub lambda: f64,
    /// Filter gain matrix `diag(gamma * lambda, gamma * lambda)`.
    pub theta: Mat2,
    /// Ratio between filter and estimator bandwidth, > 1.
    pub gamma: f64,
    /// Number of cascaded first-order filters.
    pub r: usize,
}

/// Vertex duty ratios implied by the input-voltage range:
/// `(1 - vin_max/vo_ref, 1 - vin_min/vo_ref)`.
pub fn vertex_duties(model: &SwitchedModel) -> (f64, f64) {
    let c = &model.circuit;
    (1.0 - c.vin_max / c.vo_ref, 1.0 - c.vin_min / c.vo_ref)
}

/// Largest eigenvalue of `A' P + P A + 2 alpha P`.
///
/// This is the independent feasibility check for any candidate `P`: the
/// certificate is valid at `A` exactly when the returned value is <= 0.
pub fn lmi_slack(p: &Mat2, a: &Mat2, alpha: f64) -> f64 {
    let m = a
        .transpose()
        .mul(p)
        .add(&p.mul(a))
        .add(&p.scale(2.0 * alpha));
    m.sym_eigenvalues().1
}

const PD_MARGIN: f64 = 1e-6;
const FEAS_TOL_REL: f64 = 1e-6;

fn candidate(p11: f64, p12: f64) -> Mat2 {
    Mat2::new(p11, p12, p12, 2.0 - p11)
}

/// Worst vertex slack of a trace-normalized candidate, with candidates
/// outside the positive-definite cone pushed away by a large penalty.
///
/// Minimizing the worst slack (rather than trading it off against the
/// conditioning of `P`) matters for closed-loop performance: the slack
/// margin shapes the sliding dynamics on the switching surface, and
/// certificates with barely-negative slack regulate an order of magnitude
/// slower after load steps.
fn merit(v: [f64; 2], a_lo: &Mat2, a_hi: &Mat2, alpha: f64) -> f64 {
    let p = candidate(v[0], v[1]);
    let pmin = p.sym_eigenvalues().0;
    if !pmin.is_finite() {
        return f64::MAX;
    }
    if pmin <= PD_MARGIN {
        // outside the PD cone: grade the penalty to point back toward it
        return 1e8 * (1.0 + (PD_MARGIN - pmin));
    }
    let slack = lmi_slack(&p, a_lo, alpha).max(lmi_slack(&p, a_hi, alpha));
    if slack.is_nan() {
        f64::MAX
    } else {
        slack
    }
}

/// Plain Nelder-Mead in two variables. Deterministic for a fixed start.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: &F, start: [f64; 2], scale: f64, iters: usize) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + scale, start[1]],
        [start[0], start[1] + scale],
    ];
    let mut vals = [f(simplex[0]), f(simplex[1]), f(simplex[2])];
    for _ in 0..iters {
        // order best..worst
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        let (b, m, w) = (idx[0], idx[1], idx[2]);
        if (vals[w] - vals[b]).abs() < 1e-14 * (1.0 + vals[b].abs()) {
            break;
        }
        let centroid = [
            0.5 * (simplex[b][0] + simplex[m][0]),
            0.5 * (simplex[b][1] + simplex[m][1]),
        ];
        let reflect = [
            centroid[0] + (centroid[0] - simplex[w][0]),
            centroid[1] + (centroid[1] - simplex[w][1]),
        ];
        let fr = f(reflect);
        if fr < vals[b] {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - simplex[w][0]),
                centroid[1] + 2.0 * (centroid[1] - simplex[w][1]),
            ];
            let fe = f(expand);
            if fe < fr {
                simplex[w] = expand;
                vals[w] = fe;
            } else {
                simplex[w] = reflect;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = reflect;
            vals[w] = fr;
        } else {
            let contract = [
                centroid[0] + 0.5 * (simplex[w][0] - centroid[0]),
                centroid[1] + 0.5 * (simplex[w][1] - centroid[1]),
            ];
            let fc = f(contract);
            if fc < vals[w] {
                simplex[w] = contract;
                vals[w] = fc;
            } else {
                // shrink toward best
                for i in [m, w] {
                    simplex[i] = [
                        simplex[b][0] + 0.5 * (simplex[i][0] - simplex[b][0]),
                        simplex[b][1] + 0.5 * (simplex[i][1] - simplex[b][1]),
                    ];
                    vals[i] = f(simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    (simplex[best], vals[best])
}

const STARTS: [[f64; 2]; 8] = [
    [1.0, 0.0],
    [1.8, -0.1],
    [1.8, 0.1],
    [0.2, 0.0],
    [1.9, -0.05],
    [1.5, -0.3],
    [0.5, 0.3],
    [1.97, 0.0],
];

fn minimize_merit(a_lo: &Mat2, a_hi: &Mat2, alpha: f64) -> ([f64; 2], f64) {
    let f = |v: [f64; 2]| merit(v, a_lo, a_hi, alpha);
    let mut best_v = STARTS[0];
    let mut best = f64::INFINITY;
    for start in STARTS {
        let (v, val) = nelder_mead(&f, start, 0.05, 400);
        // polish with a smaller simplex around the winner
        let (v, val) = if val < best {
            nelder_mead(&f, v, 1e-4, 200)
        } else {
            (v, val)
        };
        if val < best {
            best = val;
            best_v = v;
        }
    }
    (best_v, best)
}

/// Decay-rate ceiling of the vertex matrices, found by bisection on the
/// spectral abscissa test: no quadratic certificate can impose a decay
/// faster than the slowest vertex eigenvalue.
pub fn alpha_bar(model: &SwitchedModel) -> f64 {
    let (mu_lo, mu_hi) = vertex_duties(model);
    let sa_lo = model.averaged_matrix(mu_lo).unwrap().spectral_abscissa();
    let sa_hi = model.averaged_matrix(mu_hi).unwrap().spectral_abscissa();
    let feasible = |alpha: f64| sa_lo + alpha <= 0.0 && sa_hi + alpha <= 0.0;
    let mut lo = 0.0;
    let mut hi = 2.0 * (-sa_lo.max(sa_hi)).max(1.0);
    if !feasible(lo) {
        return 0.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Search for a common Lyapunov matrix valid at both vertex duty ratios.
///
/// Returns the trace-normalized certificate, or the best achieved slack and
/// the decay-rate ceiling when no matrix passes the feasibility tolerance.
pub fn solve_common_lyapunov(
    model: &SwitchedModel,
    alpha: f64,
) -> Result<LyapunovCertificate, SynthesisError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(SynthesisError::NegativeAlpha(alpha));
    }
    let (mu_lo, mu_hi) = vertex_duties(model);
    let a_lo = model.averaged_matrix(mu_lo)?;
    let a_hi = model.averaged_matrix(mu_hi)?;
    let (v, best_merit) = minimize_merit(&a_lo, &a_hi, alpha);
    let p = candidate(v[0], v[1]);
    let slack_min_vertex = lmi_slack(&p, &a_lo, alpha);
    let slack_max_vertex = lmi_slack(&p, &a_hi, alpha);
    let pmin_eig = p.sym_eigenvalues().0;
    let tol = FEAS_TOL_REL * p.frobenius_norm();
    let feasible = slack_min_vertex <= -tol && slack_max_vertex <= -tol && pmin_eig > 0.0;
    if !feasible {
        return Err(SynthesisError::Infeasible {
            alpha,
            best_slack: best_merit,
            alpha_bar: alpha_bar(model),
        });
    }
    Ok(LyapunovCertificate {
        p,
        alpha,
        slack_min_vertex,
        slack_max_vertex,
        pmin_eig,
    })
}

/// Place all estimator eigenvalues at `-lambda`.
///
/// For the constant-parameter exo-system the observer matrix is
/// `-kappa * G`, so `kappa = diag(lambda * L, -lambda * C)` makes it exactly
/// `-lambda * I`, which is Hurwitz by construction. The filter gain is
/// `theta = diag(gamma * lambda, gamma * lambda)`.
pub fn design_estimator_gain(
    exo: &ExoSystem,
    model: &SwitchedModel,
    lambda: f64,
    gamma: f64,
    r: usize,
) -> Result<EstimatorGains, SynthesisError> {
    if !exo.is_constant_parameter() {
        return Err(SynthesisError::UnsupportedExoSystem);
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(SynthesisError::NonPositiveLambda(lambda));
    }
    if !gamma.is_finite() || gamma <= 1.0 {
        return Err(SynthesisError::GammaTooSmall(gamma));
    }
    if r == 0 {
        return Err(SynthesisError::ZeroFilterOrder);
    }
    let kappa = Mat2::diag(lambda * model.circuit.l, -lambda * model.circuit.c);
    // verify the placement: Ap - kappa G Cp must be Hurwitz with both
    // eigenvalues at -lambda
    let obs = exo.ap.sub(&kappa.mul(&model.g).mul(&exo.cp));
    debug_assert!(obs.spectral_abscissa() < 0.0);
    debug_assert!((obs.spectral_abscissa() + lambda).abs() <= 1e-9 * lambda);
    let lam_theta = gamma * lambda;
    Ok(EstimatorGains {
        kappa,
        lambda,
        theta: Mat2::diag(lam_theta, lam_theta),
        gamma,
        r,
    })
}

/// Observer system matrix `Ap - kappa G Cp` for a gain set. Exposed so the
/// placement can be checked independently of the design routine.
pub fn observer_matrix(exo: &ExoSystem, model: &SwitchedModel, gains: &EstimatorGains) -> Mat2 {
    exo.ap.sub(&gains.kappa.mul(&model.g).mul(&exo.cp))
}

/// Projections of the two mode offsets onto the switching direction at the
/// target: `u_mode = b_mode' P D x*`.
fn surface_drives(
    model: &SwitchedModel,
    p_mat: &Mat2,
    eq: &Equilibrium,
    p: ParamVec,
) -> (f64, f64) {
    let pdx = p_mat.mul_vec(model.d.mul_vec(eq.x_star.as_array()));
    let b0 = model.affine_offset(crate::model::Mode::Off, eq.x_star, p);
    let b1 = model.affine_offset(crate::model::Mode::On, eq.x_star, p);
    (dot(b0, pdx), dot(b1, pdx))
}

/// Hysteresis half-width that limits the steady-state switching frequency
/// to `f_target`.
pub fn hysteresis_width(
    model: &SwitchedModel,
    p_mat: &Mat2,
    eq: &Equilibrium,
    p: ParamVec,
    f_target: f64,
) -> Result<f64, SynthesisError> {
    if !f_target.is_finite() || f_target <= 0.0 {
        return Err(SynthesisError::NonPositiveFrequency(f_target));
    }
    let (u0, u1) = surface_drives(model, p_mat, eq, p);
    let denom = u0.abs() + u1.abs();
    if denom == 0.0 {
        return Err(SynthesisError::DegenerateEquilibrium);
    }
    Ok((u0 * u1).abs() / (2.0 * f_target * denom))
}

/// Steady-state switching frequency predicted for a hysteresis half-width.
/// Algebraic inverse of [`hysteresis_width`].
pub fn switching_frequency_estimate(
    model: &SwitchedModel,
    p_mat: &Mat2,
    eq: &Equilibrium,
    p: ParamVec,
    h: f64,
) -> f64 {
    let (u0, u1) = surface_drives(model, p_mat, eq, p);
    (u0 * u1).abs() / (2.0 * h * (u0.abs() + u1.abs()))
}
