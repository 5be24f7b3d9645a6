//! Kick actions and their label encoding.
//!
//! Integer legend used in dataset files:
//!
//! - category: HOLD=0, PASS=1, DRIBBLE=2
//! - description: DRIBBLE=0, DIRECT_PASS=1, CROSS_PASS=2, THROUGH_PASS=3,
//!   LEAD_PASS=4, HOLD=5

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::Ordering;
use crate::state::{Vec2, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Hold,
    Pass,
    Dribble,
}

impl Category {
    pub const COUNT: usize = 3;

    pub fn code(self) -> u8 {
        match self {
            Category::Hold => 0,
            Category::Pass => 1,
            Category::Dribble => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Category::Hold),
            1 => Some(Category::Pass),
            2 => Some(Category::Dribble),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Description {
    Dribble,
    DirectPass,
    CrossPass,
    ThroughPass,
    LeadPass,
    Hold,
}

impl Description {
    pub const COUNT: usize = 6;

    pub fn code(self) -> u8 {
        match self {
            Description::Dribble => 0,
            Description::DirectPass => 1,
            Description::CrossPass => 2,
            Description::ThroughPass => 3,
            Description::LeadPass => 4,
            Description::Hold => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Description::Dribble),
            1 => Some(Description::DirectPass),
            2 => Some(Description::CrossPass),
            3 => Some(Description::ThroughPass),
            4 => Some(Description::LeadPass),
            5 => Some(Description::Hold),
            _ => None,
        }
    }

    pub fn is_pass(self) -> bool {
        matches!(
            self,
            Description::DirectPass
                | Description::CrossPass
                | Description::ThroughPass
                | Description::LeadPass
        )
    }
}

/// The kicker's chosen action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickAction {
    pub category: Category,
    pub description: Description,
    pub target_unum: u8,
    pub target_position: Vec2,
    pub first_kick_angle: f64,
    pub first_kick_speed: f64,
}

impl KickAction {
    pub fn validate(&self, kicker_unum: u8) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidAction(msg));
        if !(1..=11).contains(&self.target_unum) {
            return fail(format!("target unum {} out of range", self.target_unum));
        }
        if !self.target_position.is_finite()
            || !self.first_kick_angle.is_finite()
            || !self.first_kick_speed.is_finite()
            || self.first_kick_speed < 0.0
        {
            return fail("non-finite or negative kick parameters".into());
        }
        match self.category {
            Category::Pass => {
                if !self.description.is_pass() {
                    return fail(format!("pass with description {:?}", self.description));
                }
                if self.target_unum == kicker_unum {
                    return fail("pass targets the kicker itself".into());
                }
            }
            Category::Hold => {
                if self.description != Description::Hold {
                    return fail(format!("hold with description {:?}", self.description));
                }
                if self.first_kick_speed != 0.0 {
                    return fail("hold with nonzero kick speed".into());
                }
                if self.target_unum != kicker_unum {
                    return fail("hold must target the kicker".into());
                }
            }
            Category::Dribble => {
                if self.description != Description::Dribble {
                    return fail(format!("dribble with description {:?}", self.description));
                }
                if self.target_unum != kicker_unum {
                    return fail("dribble must target the kicker".into());
                }
            }
        }
        Ok(())
    }
}

pub const LABEL_COLUMNS: [&str; 8] = [
    "label_category",
    "label_target_unum",
    "label_target_index",
    "label_description",
    "label_target_x",
    "label_target_y",
    "label_first_kick_angle",
    "label_first_kick_speed",
];
pub const LABEL_WIDTH: usize = LABEL_COLUMNS.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub category: Category,
    pub target_unum: u8,
    pub target_index: u8,
    pub description: Description,
    pub target_position: Vec2,
    pub first_kick_angle: f64,
    pub first_kick_speed: f64,
}

impl LabelRow {
    pub fn to_values(&self) -> [f64; LABEL_WIDTH] {
        [
            f64::from(self.category.code()),
            f64::from(self.target_unum),
            f64::from(self.target_index),
            f64::from(self.description.code()),
            self.target_position.x,
            self.target_position.y,
            self.first_kick_angle,
            self.first_kick_speed,
        ]
    }

    /// Decodes the numeric label columns; returns the offending column name
    /// on failure.
    pub fn from_values(v: &[f64]) -> std::result::Result<Self, (&'static str, f64)> {
        fn code(v: f64) -> Option<u8> {
            (v.fract() == 0.0 && (0.0..=255.0).contains(&v)).then_some(v as u8)
        }
        let category = code(v[0])
            .and_then(Category::from_code)
            .ok_or((LABEL_COLUMNS[0], v[0]))?;
        let target_unum = code(v[1])
            .filter(|u| (1..=11).contains(u))
            .ok_or((LABEL_COLUMNS[1], v[1]))?;
        let target_index = code(v[2])
            .filter(|i| *i < 11)
            .ok_or((LABEL_COLUMNS[2], v[2]))?;
        let description = code(v[3])
            .and_then(Description::from_code)
            .ok_or((LABEL_COLUMNS[3], v[3]))?;
        Ok(LabelRow {
            category,
            target_unum,
            target_index,
            description,
            target_position: Vec2::new(v[4], v[5]),
            first_kick_angle: v[6],
            first_kick_speed: v[7],
        })
    }
}

/// Encodes an action against the teammate ordering used for the features.
///
/// The kick angle is recomputed as the direction from the ball to the target
/// position; when the target coincides with the ball (hold) the action's
/// own angle is kept.
pub fn generate_labels(action: &KickAction, ordering: &Ordering, ws: &WorldState) -> Result<LabelRow> {
    action.validate(ws.kicker_unum)?;
    let index = ordering
        .index_of(action.target_unum)
        .ok_or(Error::TargetNotInOrdering(action.target_unum))?;
    let offset = action.target_position - ws.ball.pos;
    let first_kick_angle = if offset == Vec2::ZERO {
        action.first_kick_angle
    } else {
        offset.angle_deg()
    };
    Ok(LabelRow {
        category: action.category,
        target_unum: action.target_unum,
        target_index: index as u8,
        description: action.description,
        target_position: action.target_position,
        first_kick_angle,
        first_kick_speed: action.first_kick_speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::testutil::simple_state;

    fn ordering() -> Ordering {
        Ordering { permutation: vec![5, 3, 4, 8, 9] }
    }

    #[test]
    fn hold_targets_kicker_at_index_zero() {
        let ws = simple_state(5, Vec2::new(1.0, 1.0), &[], &[]);
        let hold = KickAction {
            category: Category::Hold,
            description: Description::Hold,
            target_unum: 5,
            target_position: ws.ball.pos,
            first_kick_angle: 0.0,
            first_kick_speed: 0.0,
        };
        let l = generate_labels(&hold, &ordering(), &ws).unwrap();
        assert_eq!((l.category, l.target_unum, l.target_index, l.first_kick_speed), (Category::Hold, 5, 0, 0.0));
    }

    #[test]
    fn pass_index_lookup_and_angle() {
        let ws = simple_state(5, Vec2::ZERO, &[], &[]);
        let pass = KickAction {
            category: Category::Pass,
            description: Description::DirectPass,
            target_unum: 9,
            target_position: Vec2::new(0.0, 10.0),
            first_kick_angle: 12.0,
            first_kick_speed: 2.0,
        };
        let l = generate_labels(&pass, &ordering(), &ws).unwrap();
        assert_eq!(l.target_index, 4);
        assert_eq!(l.first_kick_angle, 90.0);

        let missing = KickAction { target_unum: 11, ..pass };
        assert!(matches!(
            generate_labels(&missing, &ordering(), &ws),
            Err(Error::TargetNotInOrdering(11))
        ));
    }

    #[test]
    fn invariant_violations_rejected() {
        let base = KickAction {
            category: Category::Pass,
            description: Description::DirectPass,
            target_unum: 5,
            target_position: Vec2::ZERO,
            first_kick_angle: 0.0,
            first_kick_speed: 1.0,
        };
        assert!(base.validate(5).is_err());
        assert!(KickAction { description: Description::Dribble, target_unum: 3, ..base }.validate(5).is_err());
        let hold = KickAction { category: Category::Hold, description: Description::Hold, ..base };
        assert!(hold.validate(5).is_err(), "hold with speed");
        assert!(KickAction { first_kick_speed: 0.0, ..hold }.validate(5).is_ok());
        let dribble = KickAction { category: Category::Dribble, description: Description::Dribble, target_unum: 4, ..base };
        assert!(dribble.validate(5).is_err());
    }

    #[test]
    fn values_round_trip() {
        let l = LabelRow {
            category: Category::Dribble,
            target_unum: 7,
            target_index: 10,
            description: Description::Dribble,
            target_position: Vec2::new(-3.25, 1e-7),
            first_kick_angle: -179.5,
            first_kick_speed: 0.8,
        };
        assert_eq!(LabelRow::from_values(&l.to_values()).unwrap(), l);
        let mut bad = l.to_values();
        bad[0] = 1.5;
        assert_eq!(LabelRow::from_values(&bad).unwrap_err().0, "label_category");
    }
}
