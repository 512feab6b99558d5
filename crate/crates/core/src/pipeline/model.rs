use ndarray::Array2;

use crate::error::{Error, Result};
use crate::mil::{self, Bag, Checkpoint, ForwardCache, MilDims, MilParams, Standardizer, TrainConfig, TrainLog};

/// Trained network with the feature scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: MilParams,
    pub standardizer: Standardizer,
}

impl Model {
    /// Standardizes on the training instances, then trains.
    pub fn fit(train: &[Bag], validation: &[Bag], dims: MilDims, cfg: &TrainConfig) -> Result<(Model, TrainLog)> {
        let standardizer = Standardizer::fit(train)?;
        let mut train = train.to_vec();
        let mut validation = validation.to_vec();
        standardizer.apply_all(&mut train);
        standardizer.apply_all(&mut validation);
        let outcome = mil::train(&train, &validation, dims, cfg)?;
        Ok((Model { params: outcome.params, standardizer }, outcome.log))
    }

    pub fn forward(&self, instances: &Array2<f64>) -> Result<ForwardCache> {
        let mut x = instances.clone();
        self.standardizer.apply_matrix(&mut x);
        mil::forward(x.view(), &self.params)
    }

    pub fn probability(&self, instances: &Array2<f64>) -> Result<f64> {
        Ok(self.forward(instances)?.probability())
    }

    pub fn to_checkpoint(&self, cfg: TrainConfig, log: &TrainLog) -> Checkpoint {
        let mut c = Checkpoint::new(&self.params, cfg, log.epochs.clone());
        c.standardizer = Some(self.standardizer.clone());
        c.best_epoch = Some(log.best_epoch);
        c
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Model> {
        let params = c.params()?;
        let standardizer = c.standardizer.clone().unwrap_or_else(|| Standardizer::identity(c.dims.d));
        if standardizer.dim() != c.dims.d {
            return Err(Error::DimensionMismatch(format!(
                "standardizer has d = {}, model d = {}",
                standardizer.dim(),
                c.dims.d
            )));
        }
        Ok(Model { params, standardizer })
    }
}
