use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Something with trainable parameters and a differentiable scalar loss.
///
/// Only trainable parameters are exposed; frozen state stays inside the
/// implementor and never shows up in a check report.
pub trait Objective {
    fn trainable(&self) -> Vec<(String, Matrix)>;

    fn loss(&self, params: &[Matrix]) -> Result<f64>;

    fn loss_and_gradient(&self, params: &[Matrix]) -> Result<(f64, Vec<Matrix>)>;
}

/// Denominator floor for relative errors; entries whose gradients are both
/// below this are compared on an absolute scale.
pub const REL_ERR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub scalars: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_err).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_err() < self.tolerance
    }

    pub fn scalars_checked(&self) -> usize {
        self.params.iter().map(|p| p.scalars).sum()
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Compares reverse-mode gradients against central differences
/// `(f(x+h) − f(x−h)) / 2h` for every trainable scalar.
pub fn grad_check(objective: &dyn Objective, h: f64, tol: f64) -> Result<GradCheckReport> {
    if !(1e-6..=1e-4).contains(&h) {
        return Err(Error::config(format!("finite-difference step {h} outside [1e-6, 1e-4]")));
    }
    let named = objective.trainable();
    let mut params: Vec<Matrix> = named.iter().map(|(_, m)| m.clone()).collect();
    let (loss, grads) = objective.loss_and_gradient(&params)?;
    if !loss.is_finite() {
        return Err(Error::Numeric("non-finite loss".into()));
    }
    if grads.len() != params.len() {
        return Err(Error::shape("gradient count differs from parameter count"));
    }

    let mut report = GradCheckReport {
        params: Vec::with_capacity(params.len()),
        tolerance: tol,
    };
    for p in 0..params.len() {
        let mut check = ParamCheck {
            name: named[p].0.clone(),
            scalars: params[p].len(),
            max_rel_err: 0.0,
            max_abs_err: 0.0,
        };
        for i in 0..params[p].len() {
            let orig = params[p].data()[i];
            params[p].data_mut()[i] = orig + h;
            let up = objective.loss(&params)?;
            params[p].data_mut()[i] = orig - h;
            let down = objective.loss(&params)?;
            params[p].data_mut()[i] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss perturbing {}", check.name)));
            }
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads[p].data()[i];
            check.max_rel_err = check.max_rel_err.max(relative_error(analytic, numeric));
            check.max_abs_err = check.max_abs_err.max((analytic - numeric).abs());
        }
        report.params.push(check);
    }
    Ok(report)
}
