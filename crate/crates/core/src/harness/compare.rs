use serde::Serialize;

use crate::error::HarnessError;

/// Model-versus-reference agreement on one metric, aligned by level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub levels: Vec<String>,
    pub model: Vec<f64>,
    pub reference: Vec<f64>,
    pub pearson_r: f64,
    pub rmse: f64,
    /// `model - reference` per level.
    pub residuals: Vec<f64>,
    pub model_mean: f64,
    pub reference_mean: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, HarnessError> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if syy == 0.0 {
        return Err(HarnessError::DegenerateVariance("reference"));
    }
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateVariance("model"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn rmse(x: &[f64], y: &[f64]) -> f64 {
    (x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Compares two metric vectors given as `(level, value)` pairs. Levels
/// present on only one side are an error.
pub fn compare(model: &[(String, f64)], reference: &[(String, f64)]) -> Result<ComparisonReport, HarnessError> {
    if model.is_empty() {
        return Err(HarnessError::Mismatch("no levels to compare".into()));
    }
    if model.len() != reference.len() {
        return Err(HarnessError::Mismatch(format!("{} model levels vs {} reference levels", model.len(), reference.len())));
    }
    let mut levels = Vec::with_capacity(model.len());
    let mut m = Vec::with_capacity(model.len());
    let mut r = Vec::with_capacity(model.len());
    for (name, value) in model {
        let Some((_, reference_value)) = reference.iter().find(|(n, _)| n == name) else {
            return Err(HarnessError::Mismatch(format!("level `{name}` missing from the reference")));
        };
        levels.push(name.clone());
        m.push(*value);
        r.push(*reference_value);
    }
    Ok(ComparisonReport {
        pearson_r: pearson(&m, &r)?,
        rmse: rmse(&m, &r),
        residuals: m.iter().zip(&r).map(|(a, b)| a - b).collect(),
        model_mean: mean(&m),
        reference_mean: mean(&r),
        levels,
        model: m,
        reference: r,
    })
}
