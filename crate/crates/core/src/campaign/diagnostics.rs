//! Library sizing and the stopping and safety diagnostics.

use super::CampaignError;
use std::collections::BTreeMap;

/// Tier by library size: up to 10, 11-100, 101-500, 501-2000, above 2000.
pub fn select_screening_tier(n: u64) -> Result<u8, CampaignError> {
    Ok(match n {
        0 => return Err(CampaignError::EmptyLibrary),
        1..=10 => 1,
        11..=100 => 2,
        101..=500 => 3,
        501..=2000 => 4,
        _ => 5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetStatus {
    Healthy,
    Exhausted,
}

/// Exhausted when fewer than half of the latest round's molecules met the
/// similarity constraint.
pub fn tanimoto_budget(qualification_rates: &[f64]) -> Result<BudgetStatus, CampaignError> {
    if let Some(bad) = qualification_rates
        .iter()
        .find(|r| !(0.0..=1.0).contains(*r))
    {
        return Err(CampaignError::OutOfRange(format!(
            "qualification rate {bad}"
        )));
    }
    let last = qualification_rates
        .last()
        .ok_or(CampaignError::EmptyInput)?;
    Ok(if *last < 0.50 {
        BudgetStatus::Exhausted
    } else {
        BudgetStatus::Healthy
    })
}

/// Stop when the latest gain is below 1% of the first round's gain.
pub fn marginal_gain_stop(gains: &[f64]) -> Result<bool, CampaignError> {
    let first = *gains.first().ok_or(CampaignError::EmptyInput)?;
    if gains.iter().any(|g| !g.is_finite()) {
        return Err(CampaignError::OutOfRange("non-finite gain".into()));
    }
    Ok(gains.len() > 1 && gains[gains.len() - 1] < 0.01 * first)
}

/// First 1-based round at which the rule would stop, replaying the prefix.
pub fn first_marginal_stop(gains: &[f64]) -> Result<Option<usize>, CampaignError> {
    for n in 1..=gains.len() {
        if marginal_gain_stop(&gains[..n])? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmetFlag {
    pub endpoint: String,
    pub baseline: f64,
    pub current: f64,
    pub delta_abs: f64,
    /// Infinite when the baseline is zero and the value rose.
    pub delta_rel: f64,
    pub by_abs: bool,
    pub by_rel: bool,
}

/// Every endpoint whose probability rose by more than 0.15 absolute or
/// more than 100% relative.
pub fn admet_alarm(
    baseline: &BTreeMap<String, f64>,
    current: &BTreeMap<String, f64>,
) -> Result<Vec<AdmetFlag>, CampaignError> {
    for (k, v) in baseline.iter().chain(current) {
        if *v < 0.0 {
            return Err(CampaignError::NegativeProbability {
                endpoint: k.clone(),
                value: *v,
            });
        }
        if !(*v <= 1.0) {
            return Err(CampaignError::OutOfRange(format!("{k} probability {v}")));
        }
    }
    if let Some(k) = current.keys().find(|k| !baseline.contains_key(*k)) {
        return Err(CampaignError::MissingEndpoint(k.clone()));
    }
    let mut flags = Vec::new();
    for (endpoint, b) in baseline {
        let c = *current
            .get(endpoint)
            .ok_or_else(|| CampaignError::MissingEndpoint(endpoint.clone()))?;
        let delta_abs = c - b;
        let delta_rel = if *b > 0.0 {
            delta_abs / b
        } else if delta_abs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        let by_abs = delta_abs > 0.15;
        let by_rel = delta_rel > 1.0;
        if by_abs || by_rel {
            flags.push(AdmetFlag {
                endpoint: endpoint.clone(),
                baseline: *b,
                current: c,
                delta_abs,
                delta_rel,
                by_abs,
                by_rel,
            });
        }
    }
    Ok(flags)
}
