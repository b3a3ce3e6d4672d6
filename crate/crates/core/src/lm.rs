//! Levenberg-Marquardt least squares with a finite-difference Jacobian.
//!
//! Minimizes `‖r(θ)‖²` for a residual closure `r`. The damped normal
//! equations use Marquardt's diagonal scaling, `(JᵀJ + λ diag(JᵀJ)) δ = −Jᵀr`,
//! with `λ` divided by 10 on an accepted step and multiplied by 10 on a
//! rejected one. Parameter uncertainties come from `s² (JᵀJ)⁻¹` at the
//! solution, `s² = ‖r‖² / (m − n)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Converged when an accepted step reduces `‖r‖` by less than this fraction.
    pub ftol: f64,
    /// Converged when the step norm falls below `xtol (‖θ‖ + xtol)`.
    pub xtol: f64,
    pub lambda_init: f64,
    pub lambda_factor: f64,
    pub lambda_max: f64,
    /// Relative central-difference step.
    pub diff_step: f64,
    /// Optional `(lower, upper)` box per parameter; trial points are clamped.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 500,
            ftol: 1e-10,
            xtol: 1e-12,
            lambda_init: 1e-3,
            lambda_factor: 10.0,
            lambda_max: 1e16,
            diff_step: 6e-6,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative reduction of the residual norm below `ftol`.
    ResidualReduction,
    /// Step norm below `xtol`.
    SmallStep,
    /// Residual vector (or gradient) exactly zero.
    ExactFit,
    IterationLimit,
    /// Damping exceeded `lambda_max` without finding a downhill step.
    Stalled,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(
            self,
            Termination::ResidualReduction | Termination::SmallStep | Termination::ExactFit
        )
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Normal matrix (near-)singular at the solution; affected sigmas are `inf`.
    pub singular: bool,
    /// `‖r‖` after the initial point and after every accepted step.
    pub norm_history: Vec<f64>,
}

impl LmReport {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }
}

fn eval<F>(f: &F, x: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    f(x).filter(|r| r.iter().all(|v| v.is_finite()))
}

/// Central-difference Jacobian, `m × n`, with step `step · max(|θ_j|, 1)`.
pub fn numerical_jacobian<F>(f: &F, x: &[f64], m: usize, step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = step * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let up = eval(f, &probe)?;
        probe[j] = x[j] - h;
        let down = eval(f, &probe)?;
        probe[j] = x[j];
        if up.len() != m || down.len() != m {
            return None;
        }
        let inv = 1.0 / ((x[j] + h) - (x[j] - h));
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) * inv;
        }
    }
    Some(jac)
}

// (JᵀJ)⁻¹ restricted to identifiable directions, via an eigen-decomposition
// of the diagonally scaled normal matrix. Directions with eigenvalues below
// 1e-14 of the largest mark every parameter loading on them unidentified.
fn normal_inverse(jac: &DMatrix<f64>) -> (DMatrix<f64>, Vec<bool>, bool) {
    let n = jac.ncols();
    let normal = jac.transpose() * jac;
    let scale: Vec<f64> = (0..n).map(|j| normal[(j, j)].sqrt()).collect();
    let mut unidentified: Vec<bool> = scale.iter().map(|s| !(*s > 0.0)).collect();
    let mut singular = unidentified.iter().any(|u| *u);
    let mut scaled = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if !unidentified[i] && !unidentified[j] {
                scaled[(i, j)] = normal[(i, j)] / (scale[i] * scale[j]);
            } else if i == j {
                scaled[(i, j)] = 1.0;
            }
        }
    }
    let eig = SymmetricEigen::new(scaled);
    let max_ev = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let tol = 1e-14 * max_ev;
    let mut inv = DMatrix::zeros(n, n);
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        if ev <= tol {
            singular = true;
            for j in 0..n {
                if v[j].abs() > 1e-6 {
                    unidentified[j] = true;
                }
            }
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] += v[i] * v[j] / ev;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] = if unidentified[i] || unidentified[j] {
                0.0
            } else {
                inv[(i, j)] / (scale[i] * scale[j])
            };
        }
    }
    (inv, unidentified, singular)
}

fn mark_unidentified(cov: &mut DMatrix<f64>, unidentified: &[bool]) {
    let n = cov.nrows();
    for i in 0..n {
        for j in 0..n {
            if unidentified[i] || unidentified[j] {
                cov[(i, j)] = if i == j { f64::INFINITY } else { f64::NAN };
            }
        }
    }
}

/// `s² (JᵀJ)⁻¹` with `s² = ‖r‖² / (m − n)`.
///
/// Parameters with weight on numerically null directions of the scaled
/// normal matrix get infinite variance and the flag is set.
pub fn covariance(jac: &DMatrix<f64>, residual_sq: f64) -> (DMatrix<f64>, bool) {
    let (m, n) = jac.shape();
    let dof = if m > n { (m - n) as f64 } else { 1.0 };
    let (inv, unidentified, singular) = normal_inverse(jac);
    let mut cov = inv * (residual_sq / dof);
    mark_unidentified(&mut cov, &unidentified);
    (cov, singular)
}

/// Heteroscedasticity-consistent covariance
/// `(JᵀJ)⁻¹ Jᵀ diag(r²) J (JᵀJ)⁻¹ · m / (m − n)`.
///
/// Stays calibrated when the noise level varies between data points, e.g.
/// noise proportional to the signal under uniform weighting.
pub fn robust_covariance(jac: &DMatrix<f64>, residuals: &[f64]) -> (DMatrix<f64>, bool) {
    let (m, n) = jac.shape();
    let (inv, unidentified, singular) = normal_inverse(jac);
    let mut weighted = jac.clone();
    for (i, r) in residuals.iter().enumerate().take(m) {
        weighted.row_mut(i).scale_mut(r.abs());
    }
    let meat = weighted.transpose() * &weighted;
    let correction = if m > n { m as f64 / (m - n) as f64 } else { 1.0 };
    let mut cov = &inv * meat * &inv * correction;
    mark_unidentified(&mut cov, &unidentified);
    (cov, singular)
}

fn clamp(x: &mut [f64], bounds: &Option<Vec<(f64, f64)>>) {
    if let Some(b) = bounds {
        for (v, &(lo, hi)) in x.iter_mut().zip(b) {
            *v = v.clamp(lo, hi);
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimize `‖residuals(θ)‖²` starting from `initial`.
///
/// `residuals` returns `None` (or non-finite values) for parameter vectors
/// outside the model's domain; such trial steps are rejected.
pub fn lm_minimize<F>(residuals: F, initial: &[f64], opts: &LmOptions) -> Result<LmReport>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let n = initial.len();
    if n == 0 {
        return Err(Error::Fit("no parameters".into()));
    }
    if let Some(b) = &opts.bounds {
        if b.len() != n {
            return Err(Error::Fit(format!("{} bounds for {n} parameters", b.len())));
        }
        for (j, (&v, &(lo, hi))) in initial.iter().zip(b).enumerate() {
            if !(lo <= v && v <= hi) {
                return Err(Error::Fit(format!(
                    "initial parameter {j} = {v} outside bounds [{lo}, {hi}]"
                )));
            }
        }
    }
    let mut x = initial.to_vec();
    let mut r = eval(&residuals, &x)
        .ok_or_else(|| Error::Fit("residuals not finite at the initial point".into()))?;
    let m = r.len();
    if m == 0 {
        return Err(Error::Fit("no residuals".into()));
    }
    let mut rnorm = norm(&r);
    let mut history = vec![rnorm];
    let mut lambda = opts.lambda_init;
    let mut termination = Termination::IterationLimit;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iter {
        if rnorm == 0.0 {
            termination = Termination::ExactFit;
            break;
        }
        iterations += 1;
        let jac = numerical_jacobian(&residuals, &x, m, opts.diff_step)
            .ok_or_else(|| Error::Fit("residuals not finite while differentiating".into()))?;
        let jt = jac.transpose();
        let normal = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&r);
        if grad.iter().all(|g| *g == 0.0) {
            termination = Termination::ExactFit;
            break;
        }
        let max_diag = (0..n).fold(0.0f64, |a, j| a.max(normal[(j, j)]));
        let floor = 1e-15 * max_diag.max(f64::MIN_POSITIVE);
        loop {
            let mut damped = normal.clone();
            for j in 0..n {
                damped[(j, j)] += lambda * normal[(j, j)].max(floor);
            }
            let step = damped
                .clone()
                .cholesky()
                .map(|c| c.solve(&(-&grad)))
                .or_else(|| damped.lu().solve(&(-&grad)));
            let step_ok = step
                .as_ref()
                .is_some_and(|s| s.iter().all(|v| v.is_finite()));
            if step_ok {
                let step = step.unwrap();
                let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                clamp(&mut trial, &opts.bounds);
                let actual: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let step_norm = norm(&actual);
                if let Some(r_new) = eval(&residuals, &trial) {
                    let new_norm = norm(&r_new);
                    if new_norm < rnorm {
                        let reduction = (rnorm - new_norm) / rnorm;
                        debug_assert!(new_norm <= rnorm);
                        x = trial;
                        r = r_new;
                        rnorm = new_norm;
                        history.push(rnorm);
                        lambda = (lambda / opts.lambda_factor).max(1e-300);
                        if reduction < opts.ftol {
                            termination = Termination::ResidualReduction;
                            break 'outer;
                        }
                        if step_norm < opts.xtol * (norm(&x) + opts.xtol) {
                            termination = Termination::SmallStep;
                            break 'outer;
                        }
                        continue 'outer;
                    }
                }
                if step_norm < opts.xtol * (norm(&x) + opts.xtol) {
                    termination = Termination::SmallStep;
                    break 'outer;
                }
            }
            lambda *= opts.lambda_factor;
            if lambda > opts.lambda_max {
                termination = Termination::Stalled;
                break 'outer;
            }
        }
    }

    let jac = numerical_jacobian(&residuals, &x, m, opts.diff_step)
        .ok_or_else(|| Error::Fit("residuals not finite at the solution".into()))?;
    let (cov, singular) = covariance(&jac, rnorm * rnorm);
    let sigmas = (0..n).map(|j| cov[(j, j)].sqrt()).collect();
    Ok(LmReport {
        params: x,
        sigmas,
        covariance: cov,
        residual_norm: rnorm,
        iterations,
        termination,
        singular,
        norm_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_exact_data() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.25).collect();
        let rep = lm_minimize(
            |p| {
                Some(
                    xs.iter()
                        .zip(&ys)
                        .map(|(x, y)| p[0] * x + p[1] - y)
                        .collect(),
                )
            },
            &[0.0, 0.0],
            &LmOptions {
                lambda_init: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.converged());
        assert!((rep.params[0] - 2.5).abs() < 1e-12);
        assert!((rep.params[1] + 1.25).abs() < 1e-12);
        assert!(rep.iterations <= 3, "{}", rep.iterations);
    }

    #[test]
    fn rosenbrock_valley() {
        let rep = lm_minimize(
            |p| Some(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]),
            &[-1.2, 1.0],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(rep.converged(), "{:?}", rep.termination);
        assert!((rep.params[0] - 1.0).abs() < 1e-8);
        assert!((rep.params[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn history_is_monotone() {
        let rep = lm_minimize(
            |p| Some(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0], 0.1 * p[1]]),
            &[-1.2, 1.0],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(rep.norm_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bounds_respected_and_checked() {
        let opts = LmOptions {
            bounds: Some(vec![(0.5, 10.0)]),
            ..Default::default()
        };
        let rep = lm_minimize(|p| Some(vec![p[0] - 0.1, 0.0]), &[2.0], &opts).unwrap();
        assert!(rep.params[0] >= 0.5);
        assert!((rep.params[0] - 0.5).abs() < 1e-9);
        assert!(lm_minimize(|p| Some(vec![p[0]]), &[20.0], &opts).is_err());
    }

    #[test]
    fn non_finite_start_rejected() {
        assert!(lm_minimize(|_| Some(vec![f64::NAN]), &[1.0], &LmOptions::default()).is_err());
        assert!(lm_minimize(|_| None, &[1.0], &LmOptions::default()).is_err());
    }

    #[test]
    fn unidentifiable_parameter_flagged() {
        // residual independent of p[1]
        let rep = lm_minimize(
            |p| Some(vec![p[0] - 1.0, p[0] - 1.1, p[0] - 0.9]),
            &[0.0, 3.0],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(rep.singular);
        assert!(rep.sigmas[1].is_infinite());
        assert!(rep.sigmas[0].is_finite());
    }
}
