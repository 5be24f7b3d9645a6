//! Synthetic kick events and the rule-based kicker policy that labels them.
//!
//! Each event is generated from its own seed derived from the episode seed
//! and the event index, so generation is reproducible and parallel.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{dribble_free_distances, nearest_opponent_dist, DRIBBLE_SECTORS, SECTOR_WIDTH_DEG};
use crate::labels::{Category, Description, KickAction};
use crate::seed;
use crate::state::{
    angle_diff, apply_observation_noise, kickable, normalize_angle, BallState, Flavor, NoiseConfig, PlayerState,
    Side, Vec2, WorldState, FIELD_HALF_LENGTH, FIELD_HALF_WIDTH, GOAL_CENTER, TEAM_SIZE,
};

/// Thresholds of the kicker policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub pass_threshold_deg: f64,
    pub dribble_threshold_m: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            pass_threshold_deg: 10.0,
            dribble_threshold_m: 7.0,
        }
    }
}

pub const MIN_RECEIVER_CLEARANCE: f64 = 3.0;
pub const MAX_LEAD: f64 = 6.0;
pub const THROUGH_LEAD: f64 = 3.0;
pub const LEAD_MIN: f64 = 1.0;
pub const CROSS_GOAL_RADIUS: f64 = 15.0;
pub const CROSS_KICKER_ABS_Y: f64 = 10.0;
pub const DRIBBLE_LENGTH: f64 = 5.0;
pub const DRIBBLE_SPEED: f64 = 0.8;
/// Sectors whose center bearing points into the attacking half-plane.
pub const FORWARD_SECTORS: std::ops::RangeInclusive<usize> = 3..=8;

/// Share of events (in percent) with only light pressure on the kicker.
const PRESSURE_OPEN_PERCENT: u32 = 40;
/// Share of events with every passing lane blocked but dribbling room left.
const PRESSURE_BLOCKED_PERCENT: u32 = 30;
/// Angular half-width a lane blocker is relied on to cover.
const LANE_COVER_DEG: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub n_events: usize,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub formation_spread: f64,
    pub pass_threshold_deg: f64,
    pub dribble_threshold_m: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            n_events: 1000,
            seed: 0,
            noise: NoiseConfig::default(),
            formation_spread: 8.0,
            pass_threshold_deg: 10.0,
            dribble_threshold_m: 7.0,
        }
    }
}

impl EpisodeConfig {
    pub fn oracle(&self) -> OracleParams {
        OracleParams {
            pass_threshold_deg: self.pass_threshold_deg,
            dribble_threshold_m: self.dribble_threshold_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_events == 0 {
            return Err(Error::InvalidConfig("n_events must be positive".into()));
        }
        let positive = [self.pass_threshold_deg, self.dribble_threshold_m];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("thresholds must be positive".into()));
        }
        if !(self.formation_spread.is_finite() && self.formation_spread >= 0.0) {
            return Err(Error::InvalidConfig("formation_spread must be >= 0".into()));
        }
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickEvent {
    pub event_id: u64,
    pub fws: WorldState,
    pub ws: WorldState,
    pub action: KickAction,
}

fn sector_center(k: usize) -> f64 {
    -180.0 + SECTOR_WIDTH_DEG * k as f64 + 0.5 * SECTOR_WIDTH_DEG
}

fn clamp_to_pitch(p: Vec2) -> Vec2 {
    Vec2::new(
        p.x.clamp(-FIELD_HALF_LENGTH, FIELD_HALF_LENGTH),
        p.y.clamp(-FIELD_HALF_WIDTH, FIELD_HALF_WIDTH),
    )
}

/// How far ahead (toward +x) a pass to this receiver is led.
pub fn pass_lead(receiver_clearance: f64) -> f64 {
    (receiver_clearance - MIN_RECEIVER_CLEARANCE).clamp(0.0, MAX_LEAD)
}

/// The kicker's decision on a full state: pass to the freest open receiver,
/// otherwise dribble into the emptiest forward sector, otherwise hold.
pub fn oracle_policy(fws: &WorldState, params: &OracleParams) -> Result<KickAction> {
    if fws.flavor != Flavor::Full {
        return Err(Error::MalformedState("the kicker policy reads full states only".into()));
    }
    let kicker = fws.kicker()?;
    if !kickable(fws, kicker.unum)? {
        return Err(Error::NotKickable(kicker.unum));
    }
    let ball = fws.ball.pos;

    let mut best: Option<(f64, &PlayerState, f64)> = None;
    let mut mates: Vec<&PlayerState> = fws.teammates.iter().filter(|p| p.unum != kicker.unum).collect();
    mates.sort_by_key(|p| p.unum);
    for p in mates {
        let angle = crate::features::free_pass_angle(fws, p.unum)?;
        let clearance = nearest_opponent_dist(fws, p.pos);
        if angle < params.pass_threshold_deg || clearance < MIN_RECEIVER_CLEARANCE {
            continue;
        }
        if best.is_none_or(|(a, _, _)| angle > a) {
            best = Some((angle, p, clearance));
        }
    }

    if let Some((_, receiver, clearance)) = best {
        let lead = pass_lead(clearance);
        let target = clamp_to_pitch(receiver.pos + Vec2::new(lead, 0.0));
        let description = if lead > THROUGH_LEAD && target.x > 0.0 {
            Description::ThroughPass
        } else if receiver.pos.dist(GOAL_CENTER) < CROSS_GOAL_RADIUS
            && kicker.pos.y.abs() > CROSS_KICKER_ABS_Y
        {
            Description::CrossPass
        } else if lead > LEAD_MIN {
            Description::LeadPass
        } else {
            Description::DirectPass
        };
        let distance = ball.dist(target);
        return Ok(KickAction {
            category: Category::Pass,
            description,
            target_unum: receiver.unum,
            target_position: target,
            first_kick_angle: (target - ball).angle_deg(),
            first_kick_speed: (0.1 * distance + 1.0).clamp(1.0, 3.0),
        });
    }

    let free = dribble_free_distances(fws);
    let mut best_sector: Option<usize> = None;
    for k in FORWARD_SECTORS {
        if best_sector.is_none_or(|b| free[k] > free[b]) {
            best_sector = Some(k);
        }
    }
    let k = best_sector.expect("forward sectors are non-empty");
    debug_assert!(k < DRIBBLE_SECTORS);
    if free[k] >= params.dribble_threshold_m {
        let target = clamp_to_pitch(ball + Vec2::from_polar(DRIBBLE_LENGTH, sector_center(k)));
        return Ok(KickAction {
            category: Category::Dribble,
            description: Description::Dribble,
            target_unum: kicker.unum,
            target_position: target,
            first_kick_angle: (target - ball).angle_deg(),
            first_kick_speed: DRIBBLE_SPEED,
        });
    }

    Ok(KickAction {
        category: Category::Hold,
        description: Description::Hold,
        target_unum: kicker.unum,
        target_position: ball,
        first_kick_angle: 0.0,
        first_kick_speed: 0.0,
    })
}

/// 4-4-2 shape in the attacking team's frame, indexed by unum - 1.
const ATTACK_ANCHORS: [(f64, f64); TEAM_SIZE] = [
    (-48.0, 0.0),
    (-28.0, -20.0),
    (-30.0, -7.0),
    (-30.0, 7.0),
    (-28.0, 20.0),
    (-8.0, -22.0),
    (-12.0, -7.0),
    (-12.0, 7.0),
    (-8.0, 22.0),
    (12.0, -8.0),
    (12.0, 8.0),
];

/// The defending side's shape, indexed by unum - 1 (goalkeeper at +x).
const DEFENCE_ANCHORS: [(f64, f64); TEAM_SIZE] = [
    (48.0, 0.0),
    (32.0, 18.0),
    (34.0, 6.0),
    (34.0, -6.0),
    (32.0, -18.0),
    (18.0, 20.0),
    (20.0, 6.0),
    (20.0, -6.0),
    (18.0, -20.0),
    (5.0, 6.0),
    (5.0, -6.0),
];

struct EventSampler<'a> {
    rng: ChaCha8Rng,
    cfg: &'a EpisodeConfig,
}

impl EventSampler<'_> {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn gauss(&mut self, sigma: f64) -> f64 {
        let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(&mut self.rng);
        z * sigma
    }

    fn player(&mut self, side: Side, unum: u8, pos: Vec2) -> PlayerState {
        let mut p = PlayerState::new(side, unum, clamp_to_pitch(pos));
        p.vel = Vec2::from_polar(self.uniform(0.0, 0.8), self.uniform(-180.0, 180.0));
        p.body = normalize_angle(self.uniform(-180.0, 180.0));
        p.face = normalize_angle(p.body + self.uniform(-90.0, 90.0));
        p.stamina = self.uniform(2500.0, 8000.0);
        p.tackling = self.rng.random_bool(0.01);
        p.card = self.rng.random_bool(0.05);
        p
    }

    fn full_state(&mut self) -> WorldState {
        let our_side = if self.rng.random_bool(0.5) { Side::Left } else { Side::Right };
        let kicker_unum: u8 = self.rng.random_range(2..=11);
        let kicker_pos = Vec2::new(self.uniform(-30.0, 45.0), self.uniform(-25.0, 25.0));
        let shift = 0.6 * kicker_pos.x;
        let spread = self.cfg.formation_spread;

        let mut teammates = Vec::with_capacity(TEAM_SIZE);
        for (i, &(ax, ay)) in ATTACK_ANCHORS.iter().enumerate() {
            let unum = i as u8 + 1;
            let pos = if unum == kicker_unum {
                kicker_pos
            } else if unum == 1 {
                Vec2::new(ax + self.gauss(1.0), ay + self.gauss(3.0))
            } else {
                Vec2::new(ax + shift + self.gauss(spread), ay + self.gauss(spread))
            };
            let mut p = self.player(our_side, unum, pos);
            p.kicking = unum == kicker_unum;
            teammates.push(p);
        }

        let mut opponents = Vec::with_capacity(TEAM_SIZE);
        for (i, &(ax, ay)) in DEFENCE_ANCHORS.iter().enumerate() {
            let unum = i as u8 + 1;
            let pos = if unum == 1 {
                Vec2::new(ax + self.gauss(1.0), ay + self.gauss(3.0))
            } else {
                Vec2::new(ax + shift * 0.5 + self.gauss(spread), ay + self.gauss(spread))
            };
            opponents.push(self.player(our_side.opposite(), unum, pos));
        }

        let kickable = teammates[kicker_unum as usize - 1].type_params.kickable_dist;
        let ball = BallState {
            pos: kicker_pos + Vec2::from_polar(self.uniform(0.0, 0.9 * kickable), self.uniform(-180.0, 180.0)),
            vel: Vec2::from_polar(self.uniform(0.0, 1.5), self.uniform(-180.0, 180.0)),
        };
        self.apply_pressure(kicker_unum, ball.pos, &teammates, &mut opponents);
        WorldState {
            cycle: self.rng.random_range(1..6000),
            ball,
            teammates,
            opponents,
            kicker_unum,
            offside_count: 0,
            flavor: Flavor::Full,
        }
    }

    /// Moves opponents onto the kicker. Open events only screen and mark a
    /// few players; blocked events put a defender in every passing lane;
    /// smothered events additionally close every forward dribbling sector.
    fn apply_pressure(
        &mut self,
        kicker_unum: u8,
        ball: Vec2,
        teammates: &[PlayerState],
        opponents: &mut [PlayerState],
    ) {
        // Nearest outfield opponents react first, the goalkeeper last.
        let mut order: Vec<usize> = (1..TEAM_SIZE).collect();
        order.sort_by(|&a, &b| opponents[a].pos.dist(ball).total_cmp(&opponents[b].pos.dist(ball)));
        order.push(0);
        let mut pick = order.into_iter();

        let mode = self.rng.random_range(0..100);
        if mode < PRESSURE_OPEN_PERCENT {
            let screen = self.rng.random_range(0..=3);
            for i in 0..screen {
                let Some(j) = pick.next() else { break };
                let bearing = -90.0 + 180.0 * (i as f64 + 0.5) / screen as f64 + self.gauss(8.0);
                let dist = self.uniform(1.5, 6.0);
                opponents[j].pos = clamp_to_pitch(ball + Vec2::from_polar(dist, bearing));
            }
            let mut near: Vec<&PlayerState> =
                teammates.iter().filter(|p| p.unum != kicker_unum && p.unum != 1).collect();
            near.sort_by(|a, b| a.pos.dist(ball).total_cmp(&b.pos.dist(ball)));
            let markers = self.rng.random_range(0..=3);
            for mate in near.into_iter().take(markers) {
                let Some(j) = pick.next() else { break };
                let offset = Vec2::from_polar(self.uniform(0.8, 2.8), self.uniform(-180.0, 180.0));
                opponents[j].pos = clamp_to_pitch(mate.pos + offset);
            }
            return;
        }

        let mut bearings: Vec<f64> = teammates
            .iter()
            .filter(|p| p.unum != kicker_unum)
            .map(|p| (p.pos - ball).angle_deg())
            .collect();
        bearings.sort_by(f64::total_cmp);
        let mut placed: Vec<f64> = Vec::new();
        for b in bearings {
            if placed.iter().any(|&q| angle_diff(q, b) < LANE_COVER_DEG) {
                continue;
            }
            let Some(j) = pick.next() else { return };
            let bearing = normalize_angle(b + self.uniform(0.0, 8.0));
            opponents[j].pos = clamp_to_pitch(ball + Vec2::from_polar(self.uniform(1.5, 4.5), bearing));
            placed.push(bearing);
        }

        if mode < PRESSURE_OPEN_PERCENT + PRESSURE_BLOCKED_PERCENT {
            return;
        }
        for k in FORWARD_SECTORS {
            let lo = sector_center(k) - 0.5 * SECTOR_WIDTH_DEG;
            let covered = opponents.iter().any(|o| {
                let rel = o.pos - ball;
                rel.length() < self.cfg.dribble_threshold_m
                    && normalize_angle(rel.angle_deg() - lo).rem_euclid(360.0) < SECTOR_WIDTH_DEG
            });
            if covered {
                continue;
            }
            let Some(j) = pick.next() else { return };
            let bearing = sector_center(k) + self.uniform(-12.0, 12.0);
            opponents[j].pos = clamp_to_pitch(ball + Vec2::from_polar(self.uniform(2.0, 6.5), bearing));
        }
    }
}

/// Generates a single event; `index` selects the event's private stream.
pub fn generate_event(cfg: &EpisodeConfig, index: u64) -> Result<KickEvent> {
    let event_seed = seed::derive(cfg.seed, index);
    let mut sampler = EventSampler {
        rng: seed::rng(event_seed),
        cfg,
    };
    let fws = sampler.full_state();
    let noise = NoiseConfig {
        seed: seed::derive(cfg.noise.seed, event_seed),
        ..cfg.noise
    };
    let ws = apply_observation_noise(&fws, &noise, None)?;
    let action = oracle_policy(&fws, &cfg.oracle())?;
    Ok(KickEvent {
        event_id: index,
        fws,
        ws,
        action,
    })
}

pub fn generate_events(cfg: &EpisodeConfig) -> Result<Vec<KickEvent>> {
    cfg.validate()?;
    (0..cfg.n_events as u64)
        .into_par_iter()
        .map(|i| generate_event(cfg, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::free_pass_angle;
    use crate::state::testutil::simple_state;

    #[test]
    fn open_pitch_passes_to_lowest_unum_on_tie() {
        // No opponents: every receiver reads the 60° cap.
        let ws = simple_state(6, Vec2::ZERO, &[(9, Vec2::new(10.0, 0.0)), (3, Vec2::new(-10.0, 5.0))], &[]);
        let a = oracle_policy(&ws, &OracleParams::default()).unwrap();
        assert_eq!(a.category, Category::Pass);
        assert_eq!(a.target_unum, 3);
        a.validate(6).unwrap();
    }

    #[test]
    fn smothered_kicker_holds() {
        let opps: Vec<(u8, Vec2)> = (0..11)
            .map(|i| (i as u8 + 1, Vec2::from_polar(1.0, -150.0 + 30.0 * i as f64)))
            .collect();
        let mates: Vec<(u8, Vec2)> = (0..5)
            .map(|i| (i as u8 + 2, Vec2::from_polar(20.0, -60.0 + 30.0 * i as f64)))
            .collect();
        let ws = simple_state(10, Vec2::ZERO, &mates, &opps);
        for (u, _) in &mates {
            assert!(free_pass_angle(&ws, *u).unwrap() < 10.0);
        }
        let a = oracle_policy(&ws, &OracleParams::default()).unwrap();
        assert_eq!(a.category, Category::Hold);
        assert_eq!(a.target_unum, 10);
        assert_eq!(a.first_kick_speed, 0.0);
    }

    #[test]
    fn screened_receivers_lead_to_dribble() {
        // Receivers all marked, forward space open.
        let ws = simple_state(
            10,
            Vec2::new(0.0, 0.0),
            &[(2, Vec2::new(-20.0, 0.0))],
            &[(1, Vec2::new(-21.0, 0.0))],
        );
        let a = oracle_policy(&ws, &OracleParams::default()).unwrap();
        assert_eq!(a.category, Category::Dribble);
        assert_eq!(a.first_kick_speed, DRIBBLE_SPEED);
        assert!((a.target_position.dist(ws.ball.pos) - DRIBBLE_LENGTH).abs() < 1e-9);
        // Ties between open forward sectors go to the lowest index (3).
        assert!((a.first_kick_angle - sector_center(3)).abs() < 1e-9);
    }

    #[test]
    fn non_kickable_rejected() {
        let mut ws = simple_state(10, Vec2::ZERO, &[], &[]);
        ws.ball.pos = Vec2::new(5.0, 0.0);
        assert!(matches!(oracle_policy(&ws, &OracleParams::default()), Err(Error::NotKickable(10))));
    }

    #[test]
    fn generation_is_deterministic_and_valid() {
        let cfg = EpisodeConfig { n_events: 50, seed: 1, ..EpisodeConfig::default() };
        let a = generate_events(&cfg).unwrap();
        let b = generate_events(&cfg).unwrap();
        assert_eq!(a, b);
        for e in &a {
            e.fws.validate().unwrap();
            e.ws.validate().unwrap();
            e.action.validate(e.fws.kicker_unum).unwrap();
            assert_eq!(e.action, oracle_policy(&e.fws, &cfg.oracle()).unwrap());
        }
    }

    #[test]
    fn zero_noise_events_have_equal_states() {
        let cfg = EpisodeConfig { n_events: 30, seed: 4, noise: NoiseConfig::zero(), ..EpisodeConfig::default() };
        for e in generate_events(&cfg).unwrap() {
            let mut ws = e.ws.clone();
            ws.flavor = Flavor::Full;
            assert_eq!(ws, e.fws);
        }
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = EpisodeConfig { n_events: 0, ..EpisodeConfig::default() };
        assert!(generate_events(&cfg).is_err());
        let cfg = EpisodeConfig { pass_threshold_deg: -1.0, ..EpisodeConfig::default() };
        assert!(generate_events(&cfg).is_err());
    }
}
