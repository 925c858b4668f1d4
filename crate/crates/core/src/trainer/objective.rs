use super::model::{Forecaster, PreparedWindow, Trainables};
use crate::error::Result;
use crate::numerics::{Matrix, Objective};

/// End-to-end batch loss of a forecaster as a function of its trainables.
pub struct ForecastObjective<'m> {
    model: &'m Forecaster,
    windows: Vec<PreparedWindow>,
    targets: Vec<Vec<f64>>,
}

impl<'m> ForecastObjective<'m> {
    pub fn new(model: &'m Forecaster, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let windows = pairs.iter().map(|(x, _)| model.prepare(x)).collect::<Result<_>>()?;
        Ok(ForecastObjective {
            model,
            windows,
            targets: pairs.iter().map(|(_, y)| y.clone()).collect(),
        })
    }

    fn batch(&self) -> Vec<(&PreparedWindow, &[f64])> {
        self.windows.iter().zip(&self.targets).map(|(w, t)| (w, t.as_slice())).collect()
    }

    fn params(&self, values: &[Matrix]) -> Result<Trainables> {
        self.model.params.with_values(values)
    }
}

impl Objective for ForecastObjective<'_> {
    fn trainable(&self) -> Vec<(String, Matrix)> {
        self.model.params.named().into_iter().map(|(n, m)| (n, m.clone())).collect()
    }

    fn loss(&self, params: &[Matrix]) -> Result<f64> {
        self.model.batch_loss(&self.params(params)?, &self.batch())
    }

    fn loss_and_gradient(&self, params: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        self.model.batch_gradient(&self.params(params)?, &self.batch())
    }
}
