//! World-state types, the noisy-observation transform, and rule helpers.
//!
//! All coordinates are normalized so that the kicker's team attacks toward
//! +x. Angles are degrees in (-180, 180].

use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const FIELD_HALF_LENGTH: f64 = 52.5;
pub const FIELD_HALF_WIDTH: f64 = 34.0;
/// How far outside the pitch lines a player may legally stand.
pub const PITCH_MARGIN: f64 = 5.0;
pub const BALL_SPEED_MAX: f64 = 3.0;
pub const GOAL_HALF_WIDTH: f64 = 7.01;
pub const TEAM_SIZE: usize = 11;

pub const GOAL_CENTER: Vec2 = Vec2::new(FIELD_HALF_LENGTH, 0.0);
pub const FIELD_CENTER: Vec2 = Vec2::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2::new(0.0, 0.0);

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, deg: f64) -> Self {
        let rad = deg.to_radians();
        Self::new(r * rad.cos(), r * rad.sin())
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (other - self).length()
    }

    /// Direction of the vector in degrees; the zero vector has angle 0.
    pub fn angle_deg(self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            normalize_angle(self.y.atan2(self.x).to_degrees())
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn with_max_length(self, max: f64) -> Vec2 {
        let len = self.length();
        if len > max {
            self * (max / len)
        } else {
            self
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Maps any finite angle into (-180, 180]. Values already in range are
/// returned unchanged.
pub fn normalize_angle(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Absolute angular difference in [0, 180].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn from_sign(v: f64) -> Option<Side> {
        if v == 1.0 {
            Some(Side::Left)
        } else if v == -1.0 {
            Some(Side::Right)
        } else {
            None
        }
    }
}

/// Heterogeneous player-type parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerTypeParams {
    pub dash_rate: f64,
    pub effort_max: f64,
    pub effort_min: f64,
    pub kickable_dist: f64,
    pub margin_dist: f64,
    pub kick_power_rate: f64,
    pub decay: f64,
    pub size: f64,
    pub speed_max: f64,
}

impl Default for PlayerTypeParams {
    /// The simulator's default player type.
    fn default() -> Self {
        Self {
            dash_rate: 0.006,
            effort_max: 1.0,
            effort_min: 0.6,
            kickable_dist: 1.085,
            margin_dist: 0.7,
            kick_power_rate: 0.027,
            decay: 0.4,
            size: 0.3,
            speed_max: 1.05,
        }
    }
}

impl PlayerTypeParams {
    pub fn as_array(&self) -> [f64; 9] {
        [
            self.dash_rate,
            self.effort_max,
            self.effort_min,
            self.kickable_dist,
            self.margin_dist,
            self.kick_power_rate,
            self.decay,
            self.size,
            self.speed_max,
        ]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        Self {
            dash_rate: v[0],
            effort_max: v[1],
            effort_min: v[2],
            kickable_dist: v[3],
            margin_dist: v[4],
            kick_power_rate: v[5],
            decay: v[6],
            size: v[7],
            speed_max: v[8],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.as_array().iter().all(|v| v.is_finite())
            && self.effort_min <= self.effort_max
            && self.kickable_dist > 0.0
            && self.speed_max > 0.0
            && self.decay > 0.0
            && self.decay < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::MalformedState(format!(
                "invalid player type parameters {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub side: Side,
    pub unum: u8,
    pub pos: Vec2,
    pub vel: Vec2,
    pub body: f64,
    pub face: f64,
    pub stamina: f64,
    pub type_params: PlayerTypeParams,
    pub tackling: bool,
    pub kicking: bool,
    pub card: bool,
    pub pos_count: u32,
    pub vel_count: u32,
    pub stamina_count: u32,
}

impl PlayerState {
    /// A default-type player standing still at `pos`, facing +x.
    pub fn new(side: Side, unum: u8, pos: Vec2) -> Self {
        Self {
            side,
            unum,
            pos,
            vel: Vec2::ZERO,
            body: 0.0,
            face: 0.0,
            stamina: 8000.0,
            type_params: PlayerTypeParams::default(),
            tackling: false,
            kicking: false,
            card: false,
            pos_count: 0,
            vel_count: 0,
            stamina_count: 0,
        }
    }

    fn has_zero_counts(&self) -> bool {
        self.pos_count == 0 && self.vel_count == 0 && self.stamina_count == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BallState {
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// Exact simulator state.
    Full,
    /// The agent's perceived state.
    Noisy,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Full => "full",
            Flavor::Noisy => "noisy",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "full" => Ok(Flavor::Full),
            "noisy" => Ok(Flavor::Noisy),
            other => Err(format!("unknown flavor {other:?} (expected full or noisy)")),
        }
    }
}

/// One cycle's snapshot, normalized so that the teammates attack toward +x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub cycle: u32,
    pub ball: BallState,
    pub teammates: Vec<PlayerState>,
    pub opponents: Vec<PlayerState>,
    pub kicker_unum: u8,
    pub offside_count: u32,
    pub flavor: Flavor,
}

impl WorldState {
    pub fn teammate(&self, unum: u8) -> Result<&PlayerState> {
        self.teammates
            .iter()
            .find(|p| p.unum == unum)
            .ok_or(Error::UnknownPlayer(unum))
    }

    pub fn opponent(&self, unum: u8) -> Result<&PlayerState> {
        self.opponents
            .iter()
            .find(|p| p.unum == unum)
            .ok_or(Error::UnknownPlayer(unum))
    }

    pub fn kicker(&self) -> Result<&PlayerState> {
        self.teammate(self.kicker_unum)
    }

    /// Checks structural invariants: team sizes, unique unums, a present
    /// kicker, finite values, field bounds and the ball speed limit.
    pub fn validate(&self) -> Result<()> {
        for (team, label) in [(&self.teammates, "teammates"), (&self.opponents, "opponents")] {
            if team.len() > TEAM_SIZE {
                return Err(Error::MalformedState(format!(
                    "{} {label}, at most {TEAM_SIZE} allowed",
                    team.len()
                )));
            }
            let mut seen = [false; TEAM_SIZE + 1];
            for p in team.iter() {
                if p.unum == 0 || p.unum as usize > TEAM_SIZE {
                    return Err(Error::MalformedState(format!("unum {} out of range", p.unum)));
                }
                if std::mem::replace(&mut seen[p.unum as usize], true) {
                    return Err(Error::DuplicateUnum(p.unum));
                }
                validate_player(p)?;
            }
        }
        self.kicker()?;
        if !self.ball.pos.is_finite() || !self.ball.vel.is_finite() {
            return Err(Error::MalformedState("non-finite ball state".into()));
        }
        if self.ball.vel.length() > BALL_SPEED_MAX + 1e-9 {
            return Err(Error::MalformedState(format!(
                "ball speed {} exceeds {BALL_SPEED_MAX}",
                self.ball.vel.length()
            )));
        }
        Ok(())
    }

    /// Rotates a state recorded from the right side's perspective by 180
    /// degrees so that the given team attacks toward +x.
    pub fn normalized_for(mut self, attacking: Side) -> Self {
        if attacking == Side::Left {
            return self;
        }
        self.ball.pos = -self.ball.pos;
        self.ball.vel = -self.ball.vel;
        for p in self.teammates.iter_mut().chain(self.opponents.iter_mut()) {
            p.pos = -p.pos;
            p.vel = -p.vel;
            p.body = normalize_angle(p.body + 180.0);
            p.face = normalize_angle(p.face + 180.0);
        }
        self
    }
}

fn validate_player(p: &PlayerState) -> Result<()> {
    let finite = p.pos.is_finite()
        && p.vel.is_finite()
        && p.body.is_finite()
        && p.face.is_finite()
        && p.stamina.is_finite();
    if !finite {
        return Err(Error::MalformedState(format!("player {} has non-finite fields", p.unum)));
    }
    if p.pos.x.abs() > FIELD_HALF_LENGTH + PITCH_MARGIN
        || p.pos.y.abs() > FIELD_HALF_WIDTH + PITCH_MARGIN
    {
        return Err(Error::MalformedState(format!(
            "player {} at ({}, {}) is off the field",
            p.unum, p.pos.x, p.pos.y
        )));
    }
    if p.stamina < 0.0 {
        return Err(Error::MalformedState(format!("player {} has negative stamina", p.unum)));
    }
    p.type_params.validate()
}

/// Parameters of the synthetic observation model. Missing JSON fields take
/// their default values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub pos_sigma_base: f64,
    pub pos_sigma_per_meter: f64,
    pub vel_sigma: f64,
    pub angle_sigma: f64,
    pub p_unseen: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            pos_sigma_base: 0.1,
            pos_sigma_per_meter: 0.02,
            vel_sigma: 0.05,
            angle_sigma: 5.0,
            p_unseen: 0.15,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            pos_sigma_base: 0.0,
            pos_sigma_per_meter: 0.0,
            vel_sigma: 0.0,
            angle_sigma: 0.0,
            p_unseen: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [
            self.pos_sigma_base,
            self.pos_sigma_per_meter,
            self.vel_sigma,
            self.angle_sigma,
        ];
        if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidConfig("noise sigmas must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.p_unseen) {
            return Err(Error::InvalidConfig(format!(
                "p_unseen {} outside [0, 1]",
                self.p_unseen
            )));
        }
        Ok(())
    }
}

struct Perturber<R> {
    rng: R,
}

impl<R: Rng> Perturber<R> {
    /// Draws once per call whatever the sigma, so the stream stays aligned
    /// across configurations. A zero sigma returns `v` bit-for-bit.
    fn perturb(&mut self, v: f64, sigma: f64) -> f64 {
        let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut self.rng);
        if sigma == 0.0 {
            v
        } else {
            v + z * sigma
        }
    }

    fn vec(&mut self, v: Vec2, sigma: f64) -> Vec2 {
        let x = self.perturb(v.x, sigma);
        let y = self.perturb(v.y, sigma);
        Vec2::new(x, y)
    }

    fn angle(&mut self, a: f64, sigma: f64) -> f64 {
        normalize_angle(self.perturb(a, sigma))
    }

    fn unseen(&mut self, p: f64) -> bool {
        let u: f64 = self.rng.random();
        u < p
    }
}

fn clamp_to_field(p: Vec2) -> Vec2 {
    let lx = FIELD_HALF_LENGTH + PITCH_MARGIN;
    let ly = FIELD_HALF_WIDTH + PITCH_MARGIN;
    Vec2::new(p.x.clamp(-lx, lx), p.y.clamp(-ly, ly))
}

/// Produces the agent's perceived state from a full state.
///
/// Non-kicker players get Gaussian position noise whose sigma grows with
/// distance from the kicker, plus velocity and angle noise. Each of them is
/// independently "not seen" with probability `p_unseen`, in which case its
/// fields come from `prev` (when available) and its observation counts grow
/// by one. The kicker and the ball are perturbed with half sigma and are
/// always seen. The result depends only on the inputs, `cfg.seed` and the
/// state's cycle.
pub fn apply_observation_noise(
    fws: &WorldState,
    cfg: &NoiseConfig,
    prev: Option<&WorldState>,
) -> Result<WorldState> {
    cfg.validate()?;
    if fws.flavor != Flavor::Full {
        return Err(Error::MalformedState("observation noise needs a full state".into()));
    }
    let stale = fws
        .teammates
        .iter()
        .chain(fws.opponents.iter())
        .any(|p| !p.has_zero_counts());
    if stale || fws.offside_count != 0 {
        return Err(Error::MalformedState(
            "full state carries nonzero observation counts".into(),
        ));
    }
    let kicker_pos = fws.kicker()?.pos;

    let mut noise = Perturber {
        rng: seed::derived_rng(cfg.seed, &[u64::from(fws.cycle)]),
    };
    let mut ws = fws.clone();
    ws.flavor = Flavor::Noisy;

    let ball_sigma = 0.5 * (cfg.pos_sigma_base + cfg.pos_sigma_per_meter * kicker_pos.dist(fws.ball.pos));
    ws.ball.pos = clamp_to_field(noise.vec(fws.ball.pos, ball_sigma));
    ws.ball.vel = noise.vec(fws.ball.vel, 0.5 * cfg.vel_sigma).with_max_length(BALL_SPEED_MAX);

    let mut all_opponents_seen = true;
    for is_teammates in [true, false] {
        let team = if is_teammates { &mut ws.teammates } else { &mut ws.opponents };
        let mut order: Vec<usize> = (0..team.len()).collect();
        order.sort_by_key(|&i| team[i].unum);
        for i in order {
            let p = &mut team[i];
            let is_kicker = is_teammates && p.unum == fws.kicker_unum;
            let scale = if is_kicker { 0.5 } else { 1.0 };
            let pos_sigma =
                scale * (cfg.pos_sigma_base + cfg.pos_sigma_per_meter * kicker_pos.dist(p.pos));
            let hidden = noise.unseen(cfg.p_unseen) && !is_kicker;
            p.pos = clamp_to_field(noise.vec(p.pos, pos_sigma));
            p.vel = noise.vec(p.vel, scale * cfg.vel_sigma);
            p.body = noise.angle(p.body, scale * cfg.angle_sigma);
            p.face = noise.angle(p.face, scale * cfg.angle_sigma);
            if !hidden {
                continue;
            }
            if !is_teammates {
                all_opponents_seen = false;
            }
            let last = prev.and_then(|w| {
                let list = if is_teammates { &w.teammates } else { &w.opponents };
                list.iter().find(|q| q.unum == p.unum)
            });
            match last {
                Some(q) => {
                    p.pos = q.pos;
                    p.vel = q.vel;
                    p.body = q.body;
                    p.face = q.face;
                    p.stamina = q.stamina;
                    p.tackling = q.tackling;
                    p.kicking = q.kicking;
                    p.card = q.card;
                    p.pos_count = q.pos_count + 1;
                    p.vel_count = q.vel_count + 1;
                    p.stamina_count = q.stamina_count + 1;
                }
                None => {
                    p.pos_count += 1;
                    p.vel_count += 1;
                    p.stamina_count += 1;
                }
            }
        }
    }

    ws.offside_count = if all_opponents_seen {
        0
    } else {
        prev.map_or(0, |w| w.offside_count) + 1
    };
    Ok(ws)
}

/// The offside line: the larger of the second-deepest opponent's x and the
/// ball's x. With fewer than two opponents the ball alone defines it.
pub fn offside_line_x(ws: &WorldState) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for o in &ws.opponents {
        let x = o.pos.x;
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    second.max(ws.ball.pos.x)
}

pub fn is_offside(ws: &WorldState, teammate_unum: u8) -> Result<bool> {
    let x = ws.teammate(teammate_unum)?.pos.x;
    Ok(x > 0.0 && x > offside_line_x(ws))
}

/// Whether the ball is within the teammate's kickable distance (inclusive).
pub fn kickable(ws: &WorldState, unum: u8) -> Result<bool> {
    let p = ws.teammate(unum)?;
    Ok(p.pos.dist(ws.ball.pos) <= p.type_params.kickable_dist)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;

    /// A random valid full state with 11 players per side and a kickable
    /// kicker.
    pub fn random_state<R: Rng>(rng: &mut R) -> WorldState {
        let pos = |rng: &mut R| {
            Vec2::new(
                rng.random_range(-FIELD_HALF_LENGTH..FIELD_HALF_LENGTH),
                rng.random_range(-FIELD_HALF_WIDTH..FIELD_HALF_WIDTH),
            )
        };
        let player = |side, unum, rng: &mut R| {
            let mut p = PlayerState::new(side, unum, pos(rng));
            p.vel = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            p.body = rng.random_range(-179.0..180.0);
            p.face = rng.random_range(-179.0..180.0);
            p.stamina = rng.random_range(2000.0..8000.0);
            p.card = rng.random_bool(0.1);
            p
        };
        let teammates: Vec<_> = (1..=11).map(|u| player(Side::Left, u, rng)).collect();
        let opponents: Vec<_> = (1..=11).map(|u| player(Side::Right, u, rng)).collect();
        let kicker_unum = rng.random_range(1..=11u8);
        let kpos = teammates[kicker_unum as usize - 1].pos;
        let ball = BallState {
            pos: kpos + Vec2::from_polar(rng.random_range(0.0..1.0), rng.random_range(-180.0..180.0)),
            vel: Vec2::from_polar(rng.random_range(0.0..2.0), rng.random_range(-180.0..180.0)),
        };
        WorldState {
            cycle: rng.random_range(0..6000),
            ball,
            teammates,
            opponents,
            kicker_unum,
            offside_count: 0,
            flavor: Flavor::Full,
        }
    }

    /// A 1v0 state: kicker `kicker` at `kpos` holding the ball, given
    /// teammates and opponents.
    pub fn simple_state(kicker: u8, kpos: Vec2, mates: &[(u8, Vec2)], opps: &[(u8, Vec2)]) -> WorldState {
        let mut teammates = vec![PlayerState::new(Side::Left, kicker, kpos)];
        teammates.extend(mates.iter().map(|&(u, p)| PlayerState::new(Side::Left, u, p)));
        WorldState {
            cycle: 100,
            ball: BallState { pos: kpos, vel: Vec2::ZERO },
            teammates,
            opponents: opps.iter().map(|&(u, p)| PlayerState::new(Side::Right, u, p)).collect(),
            kicker_unum: kicker,
            offside_count: 0,
            flavor: Flavor::Full,
        }
    }
}
