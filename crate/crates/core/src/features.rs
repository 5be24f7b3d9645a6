//! Ball, player and context features for one kick event, laid out as a
//! fixed-width numeric row.
//!
//! Row layout (schema version 1, 794 columns):
//!
//! | block            | width | contents                                          |
//! |------------------|-------|---------------------------------------------------|
//! | ball             | 10    | x, y, rx, ry, r, teta, vx, vy, vr, vteta          |
//! | dribble sectors  | 12    | nearest opponent distance per 30° sector, cap 30 m |
//! | context          | 2     | cycle, offside count                              |
//! | teammates × 11   | 38    | common player block + 6 teammate-only features    |
//! | opponents × 11   | 32    | common player block                               |
//!
//! Relative quantities (`rx`, `ry`, `r`, `teta`) are measured from the
//! kicker. Player blocks follow the order produced by the chosen
//! [`OrderingMethod`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::{order_players, OrderingMethod, OrderingReference};
use crate::state::{
    angle_diff, normalize_angle, offside_line_x, PlayerState, Vec2, WorldState, FIELD_HALF_LENGTH,
    GOAL_CENTER, GOAL_HALF_WIDTH, TEAM_SIZE,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const BALL_WIDTH: usize = 10;
pub const DRIBBLE_SECTORS: usize = 12;
pub const SECTOR_WIDTH_DEG: f64 = 30.0;
pub const HEADER_WIDTH: usize = BALL_WIDTH + DRIBBLE_SECTORS + 2;
pub const COMMON_BLOCK_WIDTH: usize = 32;
pub const TEAMMATE_BLOCK_WIDTH: usize = COMMON_BLOCK_WIDTH + 6;
pub const OPPONENT_BLOCK_WIDTH: usize = COMMON_BLOCK_WIDTH;
pub const FEATURE_WIDTH: usize =
    HEADER_WIDTH + TEAM_SIZE * TEAMMATE_BLOCK_WIDTH + TEAM_SIZE * OPPONENT_BLOCK_WIDTH;

pub const DRIBBLE_DIST_CAP: f64 = 30.0;
pub const PASS_ANGLE_CAP: f64 = 60.0;
/// Opponents farther from the ball than the receiver plus this slack cannot
/// cut a pass.
pub const PASS_CORRIDOR_SLACK: f64 = 3.0;
/// Radius of the disc an opponent blocks when shadowing a shot.
pub const SHOT_SHADOW_RADIUS: f64 = 1.2;
/// Reported as nearest-opponent distance when no opponent is on the pitch.
pub const NO_OPPONENT_DIST: f64 = 150.0;

pub const COMMON_COLUMNS: [&str; COMMON_BLOCK_WIDTH] = [
    "side",
    "unum",
    "body",
    "face",
    "tackling",
    "kicking",
    "card",
    "type_dash_rate",
    "type_effort_max",
    "type_effort_min",
    "type_kickable_dist",
    "type_margin_dist",
    "type_kick_power_rate",
    "type_decay",
    "type_size",
    "type_speed_max",
    "x",
    "y",
    "rx",
    "ry",
    "r",
    "teta",
    "vx",
    "vy",
    "vr",
    "vteta",
    "pos_count",
    "vel_count",
    "gca",
    "gcd",
    "stamina",
    "stamina_count",
];

pub const TEAMMATE_COLUMNS: [&str; 6] = [
    "offside",
    "is_kicker",
    "free_pass_angle",
    "direct_pass_dist",
    "nearest_opponent_dist",
    "free_shoot_angle",
];

/// Offsets of selected columns inside a player block.
pub mod col {
    pub const UNUM: usize = 1;
    pub const X: usize = 16;
    pub const Y: usize = 17;
    pub const RX: usize = 18;
    pub const RY: usize = 19;
    pub const R: usize = 20;
    pub const TETA: usize = 21;
    pub const VX: usize = 22;
    pub const VY: usize = 23;
    pub const VR: usize = 24;
    pub const VTETA: usize = 25;
    pub const GCA: usize = 28;
    pub const GCD: usize = 29;
    pub const OFFSIDE: usize = 32;
    pub const IS_KICKER: usize = 33;
    pub const FREE_PASS_ANGLE: usize = 34;
    pub const DIRECT_PASS_DIST: usize = 35;
    pub const NEAREST_OPPONENT_DIST: usize = 36;
    pub const FREE_SHOOT_ANGLE: usize = 37;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Teammate,
    Opponent,
}

impl Role {
    pub fn block_width(self) -> usize {
        match self {
            Role::Teammate => TEAMMATE_BLOCK_WIDTH,
            Role::Opponent => OPPONENT_BLOCK_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    pub version: u32,
    pub column_names: Vec<String>,
}

impl FeatureSchema {
    pub fn current() -> &'static FeatureSchema {
        static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
        SCHEMA.get_or_init(|| {
            let mut names: Vec<String> = [
                "ball_x", "ball_y", "ball_rx", "ball_ry", "ball_r", "ball_teta", "ball_vx",
                "ball_vy", "ball_vr", "ball_vteta",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            names.extend((0..DRIBBLE_SECTORS).map(|k| format!("dribble_free_{k:02}")));
            names.push("cycle".into());
            names.push("offside_count".into());
            for slot in 1..=TEAM_SIZE {
                for c in COMMON_COLUMNS.iter().chain(TEAMMATE_COLUMNS.iter()) {
                    names.push(format!("tm{slot:02}_{c}"));
                }
            }
            for slot in 1..=TEAM_SIZE {
                for c in COMMON_COLUMNS {
                    names.push(format!("op{slot:02}_{c}"));
                }
            }
            FeatureSchema {
                version: SCHEMA_VERSION,
                column_names: names,
            }
        })
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Offset of the block for the teammate at ordering slot `slot` (0-based).
    pub fn teammate_block(slot: usize) -> usize {
        HEADER_WIDTH + slot * TEAMMATE_BLOCK_WIDTH
    }

    pub fn opponent_block(slot: usize) -> usize {
        HEADER_WIDTH + TEAM_SIZE * TEAMMATE_BLOCK_WIDTH + slot * OPPONENT_BLOCK_WIDTH
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub values: Vec<f64>,
    pub schema_version: u32,
    pub ordering_method: OrderingMethod,
    pub event_id: u64,
}

fn b(v: bool) -> f64 {
    if v {
        1.0
    } else {
        0.0
    }
}

/// Position and velocity of the ball, absolute and relative to the kicker.
pub fn ball_features(ws: &WorldState) -> Result<[f64; BALL_WIDTH]> {
    let kicker = ws.kicker()?;
    let ball = ws.ball;
    let rel = ball.pos - kicker.pos;
    Ok([
        ball.pos.x,
        ball.pos.y,
        rel.x,
        rel.y,
        rel.length(),
        rel.angle_deg(),
        ball.vel.x,
        ball.vel.y,
        ball.vel.length(),
        ball.vel.angle_deg(),
    ])
}

/// Sector holding a bearing; sector k covers [-180 + 30k, -150 + 30k).
pub fn sector_of(bearing_deg: f64) -> usize {
    let k = ((normalize_angle(bearing_deg) + 180.0) / SECTOR_WIDTH_DEG).floor() as usize;
    k % DRIBBLE_SECTORS
}

/// Distance from the ball to the nearest opponent inside each 30° sector
/// around it, capped at [`DRIBBLE_DIST_CAP`].
pub fn dribble_free_distances(ws: &WorldState) -> [f64; DRIBBLE_SECTORS] {
    let mut out = [DRIBBLE_DIST_CAP; DRIBBLE_SECTORS];
    for o in &ws.opponents {
        let rel = o.pos - ws.ball.pos;
        let k = sector_of(rel.angle_deg());
        out[k] = out[k].min(rel.length());
    }
    out
}

fn pass_angle_to(ws: &WorldState, target: Vec2) -> f64 {
    let ball = ws.ball.pos;
    let reach = ball.dist(target) + PASS_CORRIDOR_SLACK;
    let dir = (target - ball).angle_deg();
    ws.opponents
        .iter()
        .filter(|o| ball.dist(o.pos) < reach)
        .map(|o| angle_diff(dir, (o.pos - ball).angle_deg()))
        .fold(PASS_ANGLE_CAP, f64::min)
}

/// Free half-angle, at the ball, of the corridor toward a teammate: the
/// smallest angular offset of any opponent that could reach the pass line,
/// capped at [`PASS_ANGLE_CAP`].
pub fn free_pass_angle(ws: &WorldState, teammate_unum: u8) -> Result<f64> {
    if teammate_unum == ws.kicker_unum {
        return Err(Error::InvalidAction(format!(
            "free pass angle is undefined for the kicker ({teammate_unum})"
        )));
    }
    let t = ws.teammate(teammate_unum)?;
    Ok(pass_angle_to(ws, t.pos))
}

/// Widest angular gap inside the goal mouth, seen from `from`, not covered by
/// any opponent's shadow.
pub fn free_shoot_angle_from(ws: &WorldState, from: Vec2) -> f64 {
    if from.x >= FIELD_HALF_LENGTH {
        return 0.0;
    }
    let lo = (Vec2::new(FIELD_HALF_LENGTH, -GOAL_HALF_WIDTH) - from).angle_deg();
    let hi = (Vec2::new(FIELD_HALF_LENGTH, GOAL_HALF_WIDTH) - from).angle_deg();
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    // Work relative to the cone center: the cone lies strictly inside
    // (-90, 90) and shadows are at most 90° wide per side, so no wrap.
    let mut shadows: Vec<(f64, f64)> = ws
        .opponents
        .iter()
        .filter_map(|o| {
            let rel = o.pos - from;
            let d = rel.length();
            let h = shadow_half_angle(d);
            let b = normalize_angle(rel.angle_deg() - center);
            let (s, e) = ((b - h).max(-half), (b + h).min(half));
            (s < e).then_some((s, e))
        })
        .collect();
    shadows.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut cursor = -half;
    let mut best = 0.0f64;
    for (s, e) in shadows {
        if s > cursor {
            best = best.max(s - cursor);
        }
        cursor = cursor.max(e);
    }
    best.max(half - cursor)
}

/// Half-width in degrees of the shadow cast by an opponent at distance `d`.
pub fn shadow_half_angle(d: f64) -> f64 {
    if d <= 0.0 {
        90.0
    } else {
        (SHOT_SHADOW_RADIUS / d).min(1.0).asin().to_degrees()
    }
}

pub fn free_shoot_angle(ws: &WorldState, teammate_unum: u8) -> Result<f64> {
    Ok(free_shoot_angle_from(ws, ws.teammate(teammate_unum)?.pos))
}

pub fn nearest_opponent_dist(ws: &WorldState, pos: Vec2) -> f64 {
    ws.opponents
        .iter()
        .map(|o| o.pos.dist(pos))
        .fold(NO_OPPONENT_DIST, f64::min)
}

/// Appends one player's block to `out`. `offside_line` is passed in so a
/// row extraction computes it once.
fn push_player_block(
    ws: &WorldState,
    kicker_pos: Vec2,
    offside_line: f64,
    p: &PlayerState,
    role: Role,
    out: &mut Vec<f64>,
) {
    let rel = p.pos - kicker_pos;
    let to_goal = GOAL_CENTER - p.pos;
    out.extend_from_slice(&[
        p.side.sign(),
        f64::from(p.unum),
        p.body,
        p.face,
        b(p.tackling),
        b(p.kicking),
        b(p.card),
    ]);
    out.extend_from_slice(&p.type_params.as_array());
    out.extend_from_slice(&[
        p.pos.x,
        p.pos.y,
        rel.x,
        rel.y,
        rel.length(),
        rel.angle_deg(),
        p.vel.x,
        p.vel.y,
        p.vel.length(),
        p.vel.angle_deg(),
        f64::from(p.pos_count),
        f64::from(p.vel_count),
        to_goal.angle_deg(),
        to_goal.length(),
        p.stamina,
        f64::from(p.stamina_count),
    ]);
    if role == Role::Teammate {
        let is_kicker = p.unum == ws.kicker_unum;
        // The kicker has no pass corridor to itself.
        let pass_angle = if is_kicker { 0.0 } else { pass_angle_to(ws, p.pos) };
        out.extend_from_slice(&[
            b(p.pos.x > 0.0 && p.pos.x > offside_line),
            b(is_kicker),
            pass_angle,
            ws.ball.pos.dist(p.pos),
            nearest_opponent_dist(ws, p.pos),
            free_shoot_angle_from(ws, p.pos),
        ]);
    }
}

/// Every per-player feature for `player` in schema order: 38 values for a
/// teammate, 32 for an opponent.
pub fn player_features(ws: &WorldState, player: &PlayerState, role: Role) -> Result<Vec<f64>> {
    let list = match role {
        Role::Teammate => &ws.teammates,
        Role::Opponent => &ws.opponents,
    };
    if !list.iter().any(|p| p.unum == player.unum) {
        return Err(Error::UnknownPlayer(player.unum));
    }
    let kicker_pos = ws.kicker()?.pos;
    let mut out = Vec::with_capacity(role.block_width());
    push_player_block(ws, kicker_pos, offside_line_x(ws), player, role, &mut out);
    Ok(out)
}

/// Builds the full feature row for one event under `method`.
pub fn extract_row(ws: &WorldState, method: OrderingMethod, event_id: u64) -> Result<FeatureRow> {
    if ws.teammates.len() != TEAM_SIZE || ws.opponents.len() != TEAM_SIZE {
        return Err(Error::MalformedState(format!(
            "feature rows need {TEAM_SIZE} players per side, got {} teammates and {} opponents",
            ws.teammates.len(),
            ws.opponents.len()
        )));
    }
    let kicker_pos = ws.kicker()?.pos;
    let reference = OrderingReference::with_kicker(kicker_pos);
    let mates = order_players(&ws.teammates, method, ws.kicker_unum, &reference)?;
    let opps = order_players(&ws.opponents, method, ws.kicker_unum, &reference)?;

    let mut values = Vec::with_capacity(FEATURE_WIDTH);
    values.extend_from_slice(&ball_features(ws)?);
    values.extend_from_slice(&dribble_free_distances(ws));
    values.push(f64::from(ws.cycle));
    values.push(f64::from(ws.offside_count));

    let line = offside_line_x(ws);
    for &u in &mates.permutation {
        push_player_block(ws, kicker_pos, line, ws.teammate(u)?, Role::Teammate, &mut values);
    }
    for &u in &opps.permutation {
        push_player_block(ws, kicker_pos, line, ws.opponent(u)?, Role::Opponent, &mut values);
    }
    debug_assert_eq!(values.len(), FEATURE_WIDTH);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::MalformedState(format!(
            "feature {} is not finite",
            FeatureSchema::current().column_names[i]
        )));
    }
    Ok(FeatureRow {
        values,
        schema_version: SCHEMA_VERSION,
        ordering_method: method,
        event_id,
    })
}
