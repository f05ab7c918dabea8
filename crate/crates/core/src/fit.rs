//! Nonlinear least-squares fitting of exponential decay models.
//!
//! # Overview
//!
//! Benchmarking data arrives as per-length averages `(m, y)` that follow a
//! single exponential `A p^m + B`, a sum of up to three exponentials, or a
//! power form `c q^(m-1)`. This module fits those models with a damped
//! Gauss-Newton iteration: decay rates live in `(0, 1)` through a logistic
//! reparametrization (keeping the internal problem unconstrained and the
//! Jacobians exact), the damping parameter adapts so the weighted objective
//! never increases on an accepted step, and the covariance of the fitted
//! parameters is the residual-variance-scaled pseudo-inverse of the
//! Gauss-Newton normal matrix at the optimum. [`report_fidelity`] converts
//! a fitted decay rate into average-fidelity and error-rate estimates with
//! two-standard-deviation margins.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum damped Gauss-Newton iterations before giving up.
const MAX_ITERATIONS: usize = 200;
/// Damping growth/shrink factor.
const DAMPING_FACTOR: f64 = 10.0;
/// Eigenvalue ratio below which the normal matrix counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// A decay model for per-length averaged benchmarking data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayModel {
    /// `y = A p^m + B` with `p` in `(0, 1)`.
    SingleExp,
    /// `y = A g^m + B` where the rate slot holds `g = 2 Fbar - 1`.
    DirectFidelity,
    /// `y = B + sum_k A_k p_k^m` with `terms` in `1..=3`.
    MultiExp { terms: usize },
    /// `y = c q^(m-1)` with `q` in `(0, 1)`.
    Power,
}

impl std::fmt::Display for DecayModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecayModel::SingleExp => write!(f, "SingleExp"),
            DecayModel::DirectFidelity => write!(f, "DirectFidelity"),
            DecayModel::MultiExp { terms } => write!(f, "MultiExp({terms})"),
            DecayModel::Power => write!(f, "Power"),
        }
    }
}

impl DecayModel {
    fn validate(&self) -> Result<()> {
        if let DecayModel::MultiExp { terms } = self {
            if !(1..=3).contains(terms) {
                return Err(Error::InvalidConfig(format!(
                    "multi-exponential term count must be 1..=3, got {terms}"
                )));
            }
        }
        Ok(())
    }

    /// Names of the external parameters, in slot order.
    pub fn param_names(&self) -> Vec<String> {
        match self {
            DecayModel::SingleExp | DecayModel::DirectFidelity => {
                vec!["A".into(), "p".into(), "B".into()]
            }
            DecayModel::MultiExp { terms } => {
                let mut names = vec!["B".to_string()];
                for k in 1..=*terms {
                    names.push(format!("A{k}"));
                    names.push(format!("p{k}"));
                }
                names
            }
            DecayModel::Power => vec!["c".into(), "q".into()],
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            DecayModel::SingleExp | DecayModel::DirectFidelity => 3,
            DecayModel::MultiExp { terms } => 1 + 2 * terms,
            DecayModel::Power => 2,
        }
    }

    /// Indices of the parameters constrained to `(0, 1)`.
    pub fn rate_indices(&self) -> Vec<usize> {
        match self {
            DecayModel::SingleExp | DecayModel::DirectFidelity => vec![1],
            DecayModel::MultiExp { terms } => (1..=*terms).map(|k| 2 * k).collect(),
            DecayModel::Power => vec![1],
        }
    }

    /// Model value at sequence length `m` for external parameters.
    pub fn predict(&self, params: &[f64], m: f64) -> f64 {
        match self {
            DecayModel::SingleExp | DecayModel::DirectFidelity => {
                params[0] * params[1].powf(m) + params[2]
            }
            DecayModel::MultiExp { terms } => {
                let mut y = params[0];
                for k in 1..=*terms {
                    y += params[2 * k - 1] * params[2 * k].powf(m);
                }
                y
            }
            DecayModel::Power => params[0] * params[1].powf(m - 1.0),
        }
    }

    /// Gradient of the model value with respect to the external parameters.
    pub fn jacobian_row(&self, params: &[f64], m: f64) -> Vec<f64> {
        match self {
            DecayModel::SingleExp | DecayModel::DirectFidelity => {
                let p = params[1];
                vec![p.powf(m), params[0] * m * p.powf(m - 1.0), 1.0]
            }
            DecayModel::MultiExp { terms } => {
                let mut row = vec![1.0];
                for k in 1..=*terms {
                    let (a, p) = (params[2 * k - 1], params[2 * k]);
                    row.push(p.powf(m));
                    row.push(a * m * p.powf(m - 1.0));
                }
                row
            }
            DecayModel::Power => {
                let q = params[1];
                vec![
                    q.powf(m - 1.0),
                    params[0] * (m - 1.0) * q.powf(m - 2.0),
                ]
            }
        }
    }
}

/// Result of a decay model fit.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: DecayModel,
    /// Parameter names aligned with `values`, `stderr` and `covariance`.
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// Per-parameter standard errors, `sqrt(covariance[k][k])`.
    pub stderr: Vec<f64>,
    /// Residual-variance-scaled (pseudo-)inverse of the normal matrix.
    pub covariance: DMatrix<f64>,
    /// Root of the weighted residual sum of squares at the optimum.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the normal matrix was singular to working precision and the
    /// covariance fell back to a pseudo-inverse.
    pub rank_deficient: bool,
}

impl FitResult {
    pub fn value_of(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn stderr_of(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.stderr[i])
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Maps internal (unconstrained) parameters to external model parameters.
fn to_external(model: &DecayModel, internal: &[f64]) -> Vec<f64> {
    let rates = model.rate_indices();
    internal
        .iter()
        .enumerate()
        .map(|(i, &t)| if rates.contains(&i) { sigmoid(t) } else { t })
        .collect()
}

fn to_internal(model: &DecayModel, external: &[f64]) -> Vec<f64> {
    let rates = model.rate_indices();
    external
        .iter()
        .enumerate()
        .map(|(i, &p)| if rates.contains(&i) { logit(p) } else { p })
        .collect()
}

fn weighted_objective(
    model: &DecayModel,
    external: &[f64],
    points: &[(f64, f64)],
    weights: &[f64],
) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(&(m, y), &w)| {
            let r = y - model.predict(external, m);
            w * r * r
        })
        .sum()
}

/// Best amplitude and floor for a fixed decay rate, with the resulting
/// residual sum of squares. Profiling the linear parameters out turns the
/// basin search into a one-dimensional scan over the rate.
fn profile_linear(
    points: &[(f64, f64)],
    rate: f64,
    exponent_shift: f64,
    with_floor: bool,
) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    let (mut s_x, mut s_xx, mut s_y, mut s_xy) = (0.0, 0.0, 0.0, 0.0);
    for &(m, y) in points {
        let x = rate.powf(m - exponent_shift);
        s_x += x;
        s_xx += x * x;
        s_y += y;
        s_xy += x * y;
    }
    let (a, b) = if with_floor {
        let det = n * s_xx - s_x * s_x;
        if det.abs() < 1e-30 {
            return None;
        }
        (
            (n * s_xy - s_x * s_y) / det,
            (s_y * s_xx - s_x * s_xy) / det,
        )
    } else {
        if s_xx < 1e-300 {
            return None;
        }
        (s_xy / s_xx, 0.0)
    };
    let rss: f64 = points
        .iter()
        .map(|&(m, y)| {
            let r = a * rate.powf(m - exponent_shift) + b - y;
            r * r
        })
        .sum();
    rss.is_finite().then_some((a, b, rss))
}

/// Candidate rates for the profile scan: log-spaced infidelities covering
/// everything from near-ideal to fully decayed.
fn rate_candidates(extra: f64) -> Vec<f64> {
    let mut rates = vec![extra];
    for i in 0..=48 {
        let infidelity = 10f64.powf(-6.0 + 6.0 * i as f64 / 48.0);
        rates.push((1.0 - infidelity).clamp(1e-6, 1.0 - 1e-9));
    }
    rates
}

/// Heuristic starting parameters for a fit.
///
/// A tail-mean floor and a log-slope rate give one candidate; for the
/// exponential and power models a coarse log-spaced rate scan with the
/// linear parameters profiled out then picks the best-residual start, so
/// the optimizer begins in the right basin even for short or shallow
/// series. Multi-exponential terms share the heuristic seed with the
/// rates spread apart so the terms start distinguishable.
pub fn initial_guess(model: DecayModel, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    model.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot seed a fit from empty data".into(),
        ));
    }
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("lengths are finite"));

    let b = if matches!(model, DecayModel::Power) {
        0.0
    } else {
        let tail = sorted.len().div_ceil(3);
        sorted[sorted.len() - tail..]
            .iter()
            .map(|&(_, y)| y)
            .sum::<f64>()
            / tail as f64
    };

    // Linear regression of log-residual magnitude against length.
    let usable: Vec<(f64, f64)> = sorted
        .iter()
        .filter(|&&(_, y)| (y - b).abs() > 1e-12)
        .map(|&(m, y)| (m, (y - b).abs().ln()))
        .collect();
    let p = if usable.len() < 2 {
        0.9
    } else {
        let n = usable.len() as f64;
        let sx: f64 = usable.iter().map(|&(m, _)| m).sum();
        let sy: f64 = usable.iter().map(|&(_, l)| l).sum();
        let sxx: f64 = usable.iter().map(|&(m, _)| m * m).sum();
        let sxy: f64 = usable.iter().map(|&(m, l)| m * l).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-30 {
            0.9
        } else {
            ((n * sxy - sx * sy) / denom).exp()
        }
    }
    .clamp(1e-6, 1.0 - 1e-9);

    let (m0, y0) = sorted[0];
    match model {
        DecayModel::SingleExp | DecayModel::DirectFidelity => {
            // The log-slope estimate only finds the right basin when the
            // floor guess is good, which short or shallow series defeat.
            // A coarse rate scan with the amplitude and floor solved
            // linearly at each candidate is immune to that.
            let mut best = (f64::INFINITY, vec![(y0 - b) / p.powf(m0), p, b]);
            for rate in rate_candidates(p) {
                if let Some((a, floor, rss)) = profile_linear(&sorted, rate, 0.0, true) {
                    if rss < best.0 {
                        best = (rss, vec![a, rate, floor]);
                    }
                }
            }
            Ok(best.1)
        }
        DecayModel::Power => {
            let mut best = (f64::INFINITY, vec![y0 / p.powf(m0 - 1.0), p]);
            for rate in rate_candidates(p) {
                if let Some((c, _, rss)) = profile_linear(&sorted, rate, 1.0, false) {
                    if rss < best.0 {
                        best = (rss, vec![c, rate]);
                    }
                }
            }
            Ok(best.1)
        }
        DecayModel::MultiExp { terms } => {
            let a = (y0 - b) / p.powf(m0);
            let mut params = vec![b];
            for k in 0..terms {
                params.push(a / terms as f64);
                // Spread the seed rates so the terms separate during the fit.
                params.push((p.powf(1.0 + 0.5 * k as f64)).clamp(1e-6, 1.0 - 1e-9));
            }
            Ok(params)
        }
    }
}

/// Fits a decay model to `(m, y)` points by damped Gauss-Newton iteration,
/// seeding from [`initial_guess`].
///
/// `weights` are per-point least-squares weights (for example inverse
/// sample variances); omitted means unweighted. Non-convergence is not an
/// error: the best parameters found are returned with `converged` unset.
pub fn fit(
    model: DecayModel,
    points: &[(f64, f64)],
    weights: Option<&[f64]>,
) -> Result<FitResult> {
    let start = initial_guess(model, points)?;
    fit_with_start(model, points, weights, &start)
}

/// [`fit`] from explicit starting parameters.
pub fn fit_with_start(
    model: DecayModel,
    points: &[(f64, f64)],
    weights: Option<&[f64]>,
    start: &[f64],
) -> Result<FitResult> {
    model.validate()?;
    let k = model.param_count();
    if start.len() != k {
        return Err(Error::InvalidConfig(format!(
            "model {model} expects {k} starting parameters, got {}",
            start.len()
        )));
    }
    let mut distinct: Vec<f64> = points.iter().map(|&(m, _)| m).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("lengths are finite"));
    distinct.dedup();
    if distinct.len() < k + 1 {
        return Err(Error::InvalidConfig(format!(
            "model {model} needs at least {} distinct sequence lengths, got {}",
            k + 1,
            distinct.len()
        )));
    }
    let unit_weights = vec![1.0; points.len()];
    let weights = match weights {
        Some(w) => {
            if w.len() != points.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} weights supplied for {} points",
                    w.len(),
                    points.len()
                )));
            }
            if w.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
                return Err(Error::InvalidConfig(
                    "weights must be positive and finite".into(),
                ));
            }
            w
        }
        None => &unit_weights,
    };

    let rates = model.rate_indices();
    let mut theta = to_internal(&model, start);
    let mut external = to_external(&model, &theta);
    let mut objective = weighted_objective(&model, &external, points, weights);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;

        // Weighted Jacobian in internal coordinates and gradient.
        let n = points.len();
        let mut jac = DMatrix::zeros(n, k);
        let mut residuals = DVector::zeros(n);
        for (row, (&(m, y), &w)) in points.iter().zip(weights).enumerate() {
            let sqrt_w = w.sqrt();
            let ext_row = model.jacobian_row(&external, m);
            for col in 0..k {
                let chain = if rates.contains(&col) {
                    let p = external[col];
                    p * (1.0 - p)
                } else {
                    1.0
                };
                jac[(row, col)] = sqrt_w * ext_row[col] * chain;
            }
            residuals[row] = sqrt_w * (y - model.predict(&external, m));
        }
        let normal = jac.transpose() * &jac;
        let gradient = jac.transpose() * &residuals;
        if gradient.amax() < 1e-12 {
            converged = true;
            break;
        }

        // Damped step; grow the damping until the objective decreases.
        let mut stepped = false;
        for _ in 0..40 {
            let mut damped = normal.clone();
            for i in 0..k {
                let d = normal[(i, i)];
                damped[(i, i)] = d + lambda * if d > 1e-12 { d } else { 1e-12 };
            }
            let delta = match damped.lu().solve(&gradient) {
                Some(delta) => delta,
                None => {
                    lambda *= DAMPING_FACTOR;
                    continue;
                }
            };
            let trial: Vec<f64> = theta
                .iter()
                .zip(delta.iter())
                .map(|(&t, &d)| t + d)
                .collect();
            let trial_external = to_external(&model, &trial);
            let trial_objective =
                weighted_objective(&model, &trial_external, points, weights);
            if trial_objective.is_finite() && trial_objective <= objective {
                let decrease = objective - trial_objective;
                let step_size = delta.amax();
                theta = trial;
                external = trial_external;
                objective = trial_objective;
                lambda = (lambda / DAMPING_FACTOR).max(1e-14);
                stepped = true;
                if decrease <= 1e-15 * (objective + 1e-30) || step_size < 1e-13 {
                    converged = true;
                }
                break;
            }
            lambda *= DAMPING_FACTOR;
        }
        if !stepped || converged {
            // No acceptable step at any damping means a (local) optimum to
            // working precision.
            converged = converged || !stepped;
            break;
        }
    }

    // Covariance in external coordinates from the undamped normal matrix.
    let n = points.len();
    let mut jac_ext = DMatrix::zeros(n, k);
    for (row, (&(m, _), &w)) in points.iter().zip(weights).enumerate() {
        let ext_row = model.jacobian_row(&external, m);
        for col in 0..k {
            jac_ext[(row, col)] = w.sqrt() * ext_row[col];
        }
    }
    let normal_ext = jac_ext.transpose() * &jac_ext;
    let dof = n.saturating_sub(k).max(1);
    let variance = objective / dof as f64;
    let eig = normal_ext.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let rank_deficient = eig
        .eigenvalues
        .iter()
        .any(|&l| l <= max_eig * RANK_TOL || max_eig == 0.0);
    let mut pinv = DMatrix::zeros(k, k);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > max_eig * RANK_TOL && l > 0.0 {
            let v = eig.eigenvectors.column(i);
            pinv += v * v.transpose() / l;
        }
    }
    let covariance = pinv * variance;
    let stderr: Vec<f64> = (0..k)
        .map(|i| covariance[(i, i)].max(0.0).sqrt())
        .collect();

    Ok(FitResult {
        model,
        names: model.param_names(),
        values: external,
        stderr,
        covariance,
        residual_norm: objective.sqrt(),
        converged,
        iterations,
        rank_deficient,
    })
}

/// Fidelity estimates derived from a fitted decay rate.
#[derive(Clone, Copy, Debug)]
pub struct FidelityReport {
    /// Depolarizing parameter implied by the fit.
    pub p: f64,
    pub p_stderr: f64,
    /// Average gate fidelity at the gate-set level.
    pub avg_fidelity: f64,
    /// Two-standard-deviation margin on the average fidelity.
    pub avg_fidelity_margin: f64,
    /// Average error rate `1 - avg_fidelity`.
    pub error_rate: f64,
    pub error_rate_margin: f64,
    /// Fidelity rescaled to the physical-rotation level, when requested.
    pub physical_fidelity: Option<f64>,
    pub physical_fidelity_margin: Option<f64>,
}

/// Converts a converged single-decay fit into fidelity estimates with
/// two-standard-deviation margins propagated linearly from the rate's
/// standard error.
///
/// For the direct-fidelity model the rate slot holds `2 Fbar - 1`, so that
/// model requires `d = 2`. With `rescale_single_qubit` set, the report
/// additionally rescales the fidelity to the physical-rotation level by the
/// average rotation count of the standard decompositions.
pub fn report_fidelity(
    fit: &FitResult,
    d: usize,
    rescale_single_qubit: bool,
) -> Result<FidelityReport> {
    if !fit.converged {
        return Err(Error::NotConverged {
            iterations: fit.iterations,
        });
    }
    let (p, p_stderr, fbar, fbar_sigma) = match fit.model {
        DecayModel::SingleExp => {
            let p = fit.value_of("p").expect("model has a rate slot");
            let sp = fit.stderr_of("p").expect("model has a rate slot");
            let dfdp = (d as f64 - 1.0) / d as f64;
            (p, sp, crate::twirl::depol_to_avg_fidelity(p, d), sp * dfdp)
        }
        DecayModel::DirectFidelity => {
            if d != 2 {
                return Err(Error::InvalidConfig(format!(
                    "the direct-fidelity model encodes 2*Fbar - 1 and applies only at d = 2, got d = {d}"
                )));
            }
            let g = fit.value_of("p").expect("model has a rate slot");
            let sg = fit.stderr_of("p").expect("model has a rate slot");
            // At d = 2 the rate slot coincides with the depolarizing p.
            (g, sg, (g + 1.0) / 2.0, sg / 2.0)
        }
        other => {
            return Err(Error::UnsupportedFitReport {
                model: other.to_string(),
            })
        }
    };
    let (physical_fidelity, physical_fidelity_margin) = if rescale_single_qubit {
        let scale = crate::clifford::average_rotations_per_c1();
        (
            Some(crate::twirl::single_qubit_rescale(fbar)),
            Some(2.0 * fbar_sigma / scale),
        )
    } else {
        (None, None)
    };
    Ok(FidelityReport {
        p,
        p_stderr,
        avg_fidelity: fbar,
        avg_fidelity_margin: 2.0 * fbar_sigma,
        error_rate: 1.0 - fbar,
        error_rate_margin: 2.0 * fbar_sigma,
        physical_fidelity,
        physical_fidelity_margin,
    })
}
