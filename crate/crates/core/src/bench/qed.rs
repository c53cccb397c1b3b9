//! QED aggregation: weighted geometric mean of eight desirabilities.

use super::BenchError;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QedLabel {
    Mw,
    Alogp,
    Hba,
    Hbd,
    Psa,
    Rotb,
    Arom,
    Alerts,
}

impl QedLabel {
    pub const ALL: [QedLabel; 8] = [
        QedLabel::Mw,
        QedLabel::Alogp,
        QedLabel::Hba,
        QedLabel::Hbd,
        QedLabel::Psa,
        QedLabel::Rotb,
        QedLabel::Arom,
        QedLabel::Alerts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QedLabel::Mw => "MW",
            QedLabel::Alogp => "ALOGP",
            QedLabel::Hba => "HBA",
            QedLabel::Hbd => "HBD",
            QedLabel::Psa => "PSA",
            QedLabel::Rotb => "ROTB",
            QedLabel::Arom => "AROM",
            QedLabel::Alerts => "ALERTS",
        }
    }
}

impl fmt::Display for QedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QedLabel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        QedLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == up)
            .ok_or_else(|| BenchError::UnknownLabel(s.to_string()))
    }
}

/// Ordered component weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QedWeights {
    components: Vec<(QedLabel, f64)>,
}

impl QedWeights {
    pub fn new(components: Vec<(QedLabel, f64)>) -> Result<Self, BenchError> {
        if components.len() != 8 {
            return Err(BenchError::InvalidWeights(format!(
                "expected 8 components, got {}",
                components.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (label, w) in &components {
            if !seen.insert(*label) {
                return Err(BenchError::InvalidWeights(format!(
                    "duplicate label {label}"
                )));
            }
            if !(*w > 0.0 && w.is_finite()) {
                return Err(BenchError::InvalidWeights(format!(
                    "weight for {label} is {w}"
                )));
            }
        }
        Ok(QedWeights { components })
    }

    /// The mean weights of the published QED formulation.
    pub fn standard() -> Self {
        QedWeights {
            components: vec![
                (QedLabel::Mw, 0.66),
                (QedLabel::Alogp, 0.46),
                (QedLabel::Hba, 0.05),
                (QedLabel::Hbd, 0.59),
                (QedLabel::Psa, 0.06),
                (QedLabel::Rotb, 0.65),
                (QedLabel::Arom, 0.48),
                (QedLabel::Alerts, 0.95),
            ],
        }
    }

    pub fn components(&self) -> &[(QedLabel, f64)] {
        &self.components
    }

    pub fn total(&self) -> f64 {
        self.components.iter().map(|(_, w)| w).sum()
    }

    pub fn weight(&self, label: QedLabel) -> f64 {
        self.components
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, w)| *w)
            .unwrap_or(0.0)
    }
}

/// `exp(sum w_i ln d_i / W)`; `d` follows the order of `w`.
pub fn qed_score(d: &[f64; 8], w: &QedWeights) -> Result<f64, BenchError> {
    let mut acc = 0.0;
    for ((label, weight), di) in w.components.iter().zip(d) {
        if !(*di > 0.0) {
            return Err(BenchError::NonpositiveComponent(label.to_string()));
        }
        if *di > 1.0 {
            return Err(BenchError::OutOfRange(format!("{label} desirability {di}")));
        }
        acc += weight * di.ln();
    }
    Ok((acc / w.total()).exp())
}

/// QED with the `locked` components fixed and every other component at
/// `assumed_max`.
pub fn qed_ceiling(
    locked: &BTreeMap<QedLabel, f64>,
    assumed_max: f64,
    w: &QedWeights,
) -> Result<f64, BenchError> {
    if !(assumed_max > 0.0 && assumed_max <= 1.0) {
        return Err(BenchError::OutOfRange(format!(
            "assumed maximum {assumed_max}"
        )));
    }
    for label in locked.keys() {
        if !w.components.iter().any(|(l, _)| l == label) {
            return Err(BenchError::UnknownLabel(label.to_string()));
        }
    }
    let mut d = [assumed_max; 8];
    for (slot, (label, _)) in d.iter_mut().zip(&w.components) {
        if let Some(v) = locked.get(label) {
            *slot = *v;
        }
    }
    qed_score(&d, w)
}

/// Parses `AROM=0.257,HBD=0.9` style assignments.
pub fn parse_locked(text: &str) -> Result<BTreeMap<QedLabel, f64>, BenchError> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| BenchError::Input(format!("expected LABEL=value, got {part}")))?;
        let label: QedLabel = k.parse()?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| BenchError::Input(format!("bad number in {part}")))?;
        out.insert(label, value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_total() {
        assert!((QedWeights::standard().total() - 3.90).abs() < 1e-12);
    }

    #[test]
    fn identity_and_fixed_point() {
        let w = QedWeights::standard();
        assert!((qed_score(&[1.0; 8], &w).unwrap() - 1.0).abs() < 1e-15);
        let equal = QedWeights::new(QedLabel::ALL.iter().map(|l| (*l, 1.0)).collect()).unwrap();
        assert!((qed_score(&[0.5; 8], &equal).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_components() {
        let w = QedWeights::standard();
        let mut d = [1.0; 8];
        d[3] = 0.0;
        assert_eq!(
            qed_score(&d, &w),
            Err(BenchError::NonpositiveComponent("HBD".into()))
        );
        assert!(parse_locked("FOO=0.2").is_err());
        assert!(QedWeights::new(vec![(QedLabel::Mw, 1.0); 8]).is_err());
    }
}
