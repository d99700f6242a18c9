use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub trials: usize,
    pub successes: usize,
}

impl Cell {
    pub fn new(trials: usize, successes: usize) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(Error::invalid(format!(
                "invalid cell: {successes} successes in {trials} trials"
            )));
        }
        Ok(Self { trials, successes })
    }

    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Success counts at the baseline view and at each sampled novel view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessTable {
    pub baseline_angle: f64,
    pub baseline: Cell,
    pub novel: Vec<(f64, Cell)>,
}

impl SuccessTable {
    pub fn rates(&self) -> (f64, Vec<f64>) {
        (self.baseline.rate(), self.novel.iter().map(|(_, c)| c.rate()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VgsReport {
    pub table: SuccessTable,
    pub vgs: f64,
}

/// Mean of `S(θ_i) / S(θ_0)` over the novel views of the table.
pub fn vgs(table: &SuccessTable) -> Result<f64> {
    let (s0, rates) = table.rates();
    vgs_from_rates(s0, &rates)
}

pub fn vgs_report(table: SuccessTable) -> Result<VgsReport> {
    let vgs = vgs(&table)?;
    Ok(VgsReport { table, vgs })
}

/// Rates need not lie in `[0, 1]`, only be finite and non-negative.
pub fn vgs_from_rates(baseline: f64, rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::invalid("at least one novel view is required"));
    }
    if let Some(r) = std::iter::once(&baseline)
        .chain(rates)
        .find(|r| !(r.is_finite() && **r >= 0.0))
    {
        return Err(Error::invalid(format!(
            "success rate {r} is not a finite non-negative number"
        )));
    }
    if baseline == 0.0 {
        return Err(Error::UndefinedBaseline);
    }
    Ok(rates.iter().map(|r| r / baseline).sum::<f64>() / rates.len() as f64)
}

/// Order in which several tasks are combined into one score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Score each task, then average the scores.
    #[default]
    TaskLevel,
    /// Average rates over tasks per angle, then score once.
    AngleLevel,
}

pub fn vgs_aggregate(tables: &[SuccessTable], order: Aggregation) -> Result<f64> {
    match order {
        Aggregation::TaskLevel => vgs_task_level(tables),
        Aggregation::AngleLevel => vgs_angle_level(tables),
    }
}

/// Several tasks sharing one angle set: average the rates over tasks per
/// angle first, then take the ratio.
pub fn vgs_angle_level(tables: &[SuccessTable]) -> Result<f64> {
    let (s0, rates) = mean_rates(tables)?;
    vgs_from_rates(s0, &rates)
}

/// Several tasks: score each task, then average the scores.
pub fn vgs_task_level(tables: &[SuccessTable]) -> Result<f64> {
    mean_rates(tables)?;
    let scores = tables.iter().map(vgs).collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn mean_rates(tables: &[SuccessTable]) -> Result<(f64, Vec<f64>)> {
    let first = tables.first().ok_or_else(|| Error::invalid("no tables to aggregate"))?;
    let angles: Vec<f64> = first.novel.iter().map(|(a, _)| *a).collect();
    for t in tables {
        let a: Vec<f64> = t.novel.iter().map(|(a, _)| *a).collect();
        if a != angles || t.baseline_angle != first.baseline_angle {
            return Err(Error::invalid("tables cover different view angles"));
        }
    }
    let n = tables.len() as f64;
    let s0 = tables.iter().map(|t| t.baseline.rate()).sum::<f64>() / n;
    let rates = (0..angles.len())
        .map(|i| tables.iter().map(|t| t.novel[i].1.rate()).sum::<f64>() / n)
        .collect();
    Ok((s0, rates))
}
