//! Docking setup safeguards: locked parameters, the box ladder and
//! pocket consensus.

use super::CampaignError;

/// Minimum box edge in Å.
pub const BOX_FLOOR: f64 = 25.0;
/// Edges tried in order after a docking failure.
pub const BOX_LADDER: [f64; 4] = [25.0, 30.0, 40.0, 50.0];

fn check_center(c: [f64; 3]) -> Result<(), CampaignError> {
    if c.iter().any(|x| !x.is_finite()) || c == [0.0; 3] {
        return Err(CampaignError::DegenerateCenter(c));
    }
    Ok(())
}

fn check_box(b: [f64; 3]) -> Result<(), CampaignError> {
    match b.iter().find(|e| !(**e >= BOX_FLOOR)) {
        Some(e) => Err(CampaignError::BelowFloor(*e)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DockingParams {
    pub center: [f64; 3],
    pub box_size: [f64; 3],
    pub engine_tag: String,
    locked: bool,
}

impl DockingParams {
    pub fn new(center: [f64; 3], box_size: [f64; 3], engine_tag: &str) -> Self {
        DockingParams {
            center,
            box_size,
            engine_tag: engine_tag.to_string(),
            locked: false,
        }
    }

    pub fn locked(&self) -> bool {
        self.locked
    }

    /// Validates and freezes the parameters.
    pub fn lock(mut self) -> Result<Self, CampaignError> {
        if self.locked {
            return Err(CampaignError::AlreadyLocked);
        }
        check_box(self.box_size)?;
        check_center(self.center)?;
        self.locked = true;
        Ok(self)
    }

    pub fn set_center(&mut self, center: [f64; 3]) -> Result<(), CampaignError> {
        if self.locked {
            return Err(CampaignError::AlreadyLocked);
        }
        self.center = center;
        Ok(())
    }

    pub fn set_box(&mut self, box_size: [f64; 3]) -> Result<(), CampaignError> {
        if self.locked {
            return Err(CampaignError::AlreadyLocked);
        }
        self.box_size = box_size;
        Ok(())
    }

    /// A round's parameters must be bit-identical to the locked record.
    pub fn verify_round(&self, used: &DockingParams) -> Result<(), CampaignError> {
        let same =
            |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        let mut diffs = Vec::new();
        if !same(&self.center, &used.center) {
            diffs.push(format!("center {:?} != {:?}", used.center, self.center));
        }
        if !same(&self.box_size, &used.box_size) {
            diffs.push(format!("box {:?} != {:?}", used.box_size, self.box_size));
        }
        if self.engine_tag != used.engine_tag {
            diffs.push(format!("engine {} != {}", used.engine_tag, self.engine_tag));
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(CampaignError::ParamDrift(diffs.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoxStep {
    Use(f64),
    SwitchMethod,
}

/// Progressive box enlargement. Each ladder edge is offered at most once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoxLadder {
    last: Option<f64>,
}

impl BoxLadder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from a caller-chosen edge instead of the floor.
    pub fn starting_at(edge: f64) -> Result<(Self, BoxStep), CampaignError> {
        if !(edge >= BOX_FLOOR) {
            return Err(CampaignError::BelowFloor(edge));
        }
        Ok((BoxLadder { last: Some(edge) }, BoxStep::Use(edge)))
    }

    pub fn last(&self) -> Option<f64> {
        self.last
    }

    /// Smallest ladder edge above the last one tried.
    pub fn next_box_size(&mut self) -> BoxStep {
        let next = match self.last {
            None => Some(BOX_LADDER[0]),
            Some(l) => BOX_LADDER.iter().copied().find(|e| *e > l),
        };
        match next {
            Some(e) => {
                self.last = Some(e);
                BoxStep::Use(e)
            }
            None => {
                self.last = Some(f64::INFINITY);
                BoxStep::SwitchMethod
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PocketConsensus {
    HighConfidence([f64; 3]),
    Midpoint([f64; 3]),
    Divergent,
}

/// Agreement of two detected pocket centers: under 5 Å keeps the first,
/// 5 to 10 Å takes the midpoint, beyond 10 Å is divergent.
pub fn consensus_pocket(a: [f64; 3], b: [f64; 3]) -> Result<PocketConsensus, CampaignError> {
    check_center(a)?;
    check_center(b)?;
    let d = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(if d < 5.0 {
        PocketConsensus::HighConfidence(a)
    } else if d <= 10.0 {
        PocketConsensus::Midpoint([
            (a[0] + b[0]) / 2.0,
            (a[1] + b[1]) / 2.0,
            (a[2] + b[2]) / 2.0,
        ])
    } else {
        PocketConsensus::Divergent
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder() {
        let mut l = BoxLadder::new();
        let steps: Vec<BoxStep> = (0..6).map(|_| l.next_box_size()).collect();
        assert_eq!(
            steps,
            vec![
                BoxStep::Use(25.0),
                BoxStep::Use(30.0),
                BoxStep::Use(40.0),
                BoxStep::Use(50.0),
                BoxStep::SwitchMethod,
                BoxStep::SwitchMethod
            ]
        );
        assert_eq!(
            BoxLadder::starting_at(20.0),
            Err(CampaignError::BelowFloor(20.0))
        );
        let (mut l, first) = BoxLadder::starting_at(30.0).unwrap();
        assert_eq!(first, BoxStep::Use(30.0));
        assert_eq!(l.next_box_size(), BoxStep::Use(40.0));
    }

    #[test]
    fn lock() {
        let p = DockingParams::new([22.014, 0.253, 52.794], [25.0; 3], "quickvina")
            .lock()
            .unwrap();
        let mut q = p.clone();
        assert_eq!(
            q.set_center([1.0, 1.0, 1.0]),
            Err(CampaignError::AlreadyLocked)
        );
        assert!(p.verify_round(&q).is_ok());
        let drifted = DockingParams::new([22.014, 0.253, 52.7940001], [25.0; 3], "quickvina");
        assert!(matches!(
            p.verify_round(&drifted),
            Err(CampaignError::ParamDrift(_))
        ));
        assert_eq!(
            DockingParams::new([1.0; 3], [25.0, 24.0, 25.0], "v").lock(),
            Err(CampaignError::BelowFloor(24.0))
        );
        assert!(matches!(
            DockingParams::new([0.0; 3], [25.0; 3], "v").lock(),
            Err(CampaignError::DegenerateCenter(_))
        ));
    }

    #[test]
    fn pockets() {
        let a = [10.0, 10.0, 10.0];
        assert_eq!(
            consensus_pocket(a, [13.0, 10.0, 10.0]),
            Ok(PocketConsensus::HighConfidence(a))
        );
        assert_eq!(
            consensus_pocket(a, [17.0, 10.0, 10.0]),
            Ok(PocketConsensus::Midpoint([13.5, 10.0, 10.0]))
        );
        assert_eq!(
            consensus_pocket(a, [25.0, 10.0, 10.0]),
            Ok(PocketConsensus::Divergent)
        );
        assert!(consensus_pocket(a, [0.0; 3]).is_err());
    }
}
