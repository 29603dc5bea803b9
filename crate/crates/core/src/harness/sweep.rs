//! Parameter grids over [`SsupConfig`].

use serde_json::Value;

use super::{run_experiment, ExperimentConfig};
use crate::agent::{SsupConfig, Variant};
use crate::error::HarnessError;
use crate::level::LevelSpec;

/// One swept parameter: a config field path and its values.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamAxis {
    /// Dotted path into the serialized config, e.g. `noise.impulse_direction_sd`.
    pub name: String,
    pub values: Vec<f64>,
}

impl std::str::FromStr for ParamAxis {
    type Err = HarnessError;

    /// Accepts `name=start:stop:step` (inclusive range) or `name=a,b,c`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| HarnessError::Param(format!("`{s}`: {m}"));
        let (name, spec) = s.split_once('=').ok_or_else(|| bad("expected name=values".into()))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(format!("`{t}` is not a number")));
        let values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(bad("ranges are start:stop:step".into()));
            };
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && stop >= start) {
                return Err(bad("need step > 0 and stop >= start".into()));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // Rounding hides float drift like 0.15000000000000002.
            (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
        } else {
            spec.split(',').map(num).collect::<Result<_, _>>()?
        };
        let axis = ParamAxis { name: name.trim().to_string(), values };
        // Fail early on unknown names or out-of-range values.
        for &v in &axis.values {
            apply(&SsupConfig::default(), &[(&axis.name, v)])?;
        }
        Ok(axis)
    }
}

/// Copy of `base` with each `(path, value)` set. Integer fields only take
/// whole numbers.
pub fn apply(base: &SsupConfig, params: &[(&str, f64)]) -> Result<SsupConfig, HarnessError> {
    let mut doc = serde_json::to_value(base).expect("config serializes");
    for &(path, value) in params {
        let mut slot = &mut doc;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| HarnessError::Param(format!("unknown parameter `{path}`")))?;
        }
        *slot = match slot {
            Value::Number(n) if n.is_u64() => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(HarnessError::Param(format!("`{path}` takes a non-negative integer, got {value}")));
                }
                Value::from(value as u64)
            }
            Value::Number(_) => Value::from(value),
            _ => return Err(HarnessError::Param(format!("`{path}` is not a numeric parameter"))),
        };
    }
    let cfg: SsupConfig = serde_json::from_value(doc).map_err(|e| HarnessError::Param(e.to_string()))?;
    cfg.validate().map_err(|e| HarnessError::Param(e.to_string()))?;
    Ok(cfg)
}

/// Every combination of the axes' values, first axis varying slowest.
pub fn grid(axes: &[ParamAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Suite-wide averages for one grid point and variant.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub params: Vec<f64>,
    pub variant: Variant,
    pub solution_rate: f64,
    pub mean_attempts: f64,
    pub curve_area: f64,
}

pub fn run_sweep(levels: &[LevelSpec], base: &ExperimentConfig, axes: &[ParamAxis]) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rows = Vec::new();
    for point in grid(axes) {
        let params: Vec<(&str, f64)> = axes.iter().map(|a| a.name.as_str()).zip(point.iter().copied()).collect();
        let cfg = ExperimentConfig { agent: apply(&base.agent, &params)?, ..base.clone() };
        let cells = run_experiment(levels, &cfg)?;
        for &variant in &cfg.variants {
            let ms: Vec<_> = cells.iter().map(|c| &c.metrics).filter(|m| m.variant == variant).collect();
            let mean = |f: &dyn Fn(&super::LevelMetrics) -> f64| ms.iter().map(|m| f(m)).sum::<f64>() / ms.len() as f64;
            rows.push(SweepRow {
                params: point.clone(),
                variant,
                solution_rate: mean(&|m| m.solution_rate),
                mean_attempts: mean(&|m| m.mean_attempts),
                curve_area: mean(&|m| m.curve_area()),
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(path: &std::path::Path, axes: &[ParamAxis], rows: &[SweepRow]) -> Result<(), HarnessError> {
    let err = |source| HarnessError::Csv { path: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    header.extend(["variant", "solution_rate", "mean_attempts", "curve_area"]);
    w.write_record(&header).map_err(err)?;
    for r in rows {
        let mut rec: Vec<String> = r.params.iter().map(f64::to_string).collect();
        rec.extend([r.variant.to_string(), r.solution_rate.to_string(), r.mean_attempts.to_string(), r.curve_area.to_string()]);
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}
