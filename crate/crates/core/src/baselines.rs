//! Reference models: the power law `effort = a * size^b` calibrated per
//! dataset, and a constant mean-effort predictor.

use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::fitness::{expression_fitness, Metric};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawModel {
    pub a: f64,
    pub b: f64,
}

impl PowerLawModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::input(format!("power law needs a > 0 and finite b, got a={a}, b={b}")));
        }
        Ok(PowerLawModel { a, b })
    }
}

pub fn cocomo_effort(model: &PowerLawModel, size: f64) -> Result<f64> {
    if !(size > 0.0) {
        return Err(Error::input(format!("size must be positive, got {size}")));
    }
    Ok(model.a * size.powf(model.b))
}

/// Least squares on `ln E = ln a + b ln S`.
pub fn fit_power_law(dataset: &Dataset, size_column: &str) -> Result<PowerLawModel> {
    let col = dataset
        .feature_index(size_column)
        .ok_or_else(|| Error::input(format!("no size column `{size_column}` in `{}`", dataset.name())))?;
    let sizes = dataset.column(col);
    fit_power_law_points(&sizes, &dataset.efforts())
}

pub fn fit_power_law_points(sizes: &[f64], efforts: &[f64]) -> Result<PowerLawModel> {
    if sizes.len() != efforts.len() {
        return Err(Error::input("sizes and efforts differ in length"));
    }
    if sizes.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 cases, got {}", sizes.len())));
    }
    if let Some(v) = sizes.iter().chain(efforts).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("sizes and efforts must be positive, found {v}")));
    }
    let n = sizes.len() as f64;
    let xs: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = efforts.iter().map(|e| e.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let scale: f64 = xs.iter().map(|x| x * x).sum::<f64>().max(1.0);
    if sxx <= 1e-14 * scale {
        return Err(Error::Fit("size has no variance on the log scale".into()));
    }
    let b = sxy / sxx;
    let intercept = y_mean - b * x_mean;
    PowerLawModel::new(intercept.exp(), b).map_err(|e| Error::Fit(e.to_string()))
}

/// Predicts the mean effort of the training data for every project.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanPredictor {
    pub mean: f64,
}

impl MeanPredictor {
    pub fn predict(&self, n: usize) -> Vec<f64> {
        vec![self.mean; n]
    }
}

pub fn mean_predictor(dataset: &Dataset) -> Result<MeanPredictor> {
    let efforts = dataset.efforts();
    if efforts.is_empty() {
        return Err(Error::input(format!("dataset `{}` is empty", dataset.name())));
    }
    Ok(MeanPredictor {
        mean: efforts.iter().sum::<f64>() / efforts.len() as f64,
    })
}

/// Power-law predictions for every case of `dataset`.
pub fn power_law_predictions(
    model: &PowerLawModel,
    dataset: &Dataset,
    size_column: &str,
) -> Result<Vec<f64>> {
    let col = dataset
        .feature_index(size_column)
        .ok_or_else(|| Error::input(format!("no size column `{size_column}`")))?;
    dataset
        .cases()
        .iter()
        .map(|c| cocomo_effort(model, c.features[col]))
        .collect()
}

/// Baseline scores on a dataset, serialised next to evolved results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub metric: Metric,
    pub mean: MeanPredictor,
    pub mean_fitness: f64,
    pub size_column: Option<String>,
    pub power_law: Option<PowerLawModel>,
    pub power_law_fitness: Option<f64>,
    /// Why the power law is absent, when it is.
    pub power_law_error: Option<String>,
}

pub fn evaluate_baselines(
    dataset: &Dataset,
    size_column: Option<&str>,
    metric: Metric,
) -> Result<BaselineReport> {
    let targets = dataset.efforts();
    let mean = mean_predictor(dataset)?;
    let mean_fitness = expression_fitness(&mean.predict(targets.len()), &targets, metric)?;
    let mut report = BaselineReport {
        metric,
        mean,
        mean_fitness,
        size_column: size_column.map(str::to_owned),
        power_law: None,
        power_law_fitness: None,
        power_law_error: None,
    };
    match size_column {
        None => report.power_law_error = Some("no size column".into()),
        Some(col) => match fit_power_law(dataset, col).and_then(|model| {
            let predictions = power_law_predictions(&model, dataset, col)?;
            Ok((model, expression_fitness(&predictions, &targets, metric)?))
        }) {
            Ok((model, fitness)) => {
                report.power_law = Some(model);
                report.power_law_fitness = Some(fitness);
            }
            Err(e) => report.power_law_error = Some(e.to_string()),
        },
    }
    Ok(report)
}
