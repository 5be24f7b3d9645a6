//! Independent re-implementations used as test oracles, plus random state
//! generation. Nothing here calls the geometry helpers under test.

#![allow(dead_code)]

use kickcast_core::labels::{KickAction, LabelRow};
use kickcast_core::{Flavor, OrderingMethod, PlayerState, Side, Vec2, WorldState};
use rand::seq::SliceRandom;
use rand::Rng;

pub const HALF_LENGTH: f64 = 52.5;
pub const HALF_WIDTH: f64 = 34.0;
pub const POST_Y: f64 = 7.01;

/// Bearing of `(x, y)` in degrees within (-180, 180]; 0 for the zero vector.
pub fn bearing(x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        return 0.0;
    }
    let a = y.atan2(x).to_degrees();
    if a == -180.0 {
        180.0
    } else {
        a
    }
}

/// Unsigned angle between two direction vectors, in degrees.
pub fn angle_between(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    cross.abs().atan2(dot).to_degrees()
}

fn random_player<R: Rng>(rng: &mut R, side: Side, unum: u8, pos: Vec2) -> PlayerState {
    let mut p = PlayerState::new(side, unum, pos);
    p.vel = Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    p.body = rng.random_range(-179.0..180.0);
    p.face = rng.random_range(-179.0..180.0);
    p.stamina = rng.random_range(1000.0..8000.0);
    p.pos_count = rng.random_range(0..4);
    p.vel_count = rng.random_range(0..4);
    p.stamina_count = rng.random_range(0..4);
    p.card = rng.random_bool(0.1);
    p
}

fn pitch_point<R: Rng>(rng: &mut R) -> Vec2 {
    Vec2::new(
        rng.random_range(-HALF_LENGTH..HALF_LENGTH),
        rng.random_range(-HALF_WIDTH..HALF_WIDTH),
    )
}

/// A full state with 11 players per side in shuffled list order, the ball
/// within reach of a random kicker, and opponents sometimes crowded around
/// the ball so that corridors and sectors are contested.
pub fn random_state<R: Rng>(rng: &mut R) -> WorldState {
    let side = if rng.random_bool(0.5) { Side::Left } else { Side::Right };
    let kicker_unum = rng.random_range(1..=11u8);
    let mut teammates: Vec<PlayerState> = (1..=11u8)
        .map(|u| {
            let pos = pitch_point(rng);
            let mut p = random_player(rng, side, u, pos);
            p.kicking = u == kicker_unum;
            p
        })
        .collect();
    let kicker_pos = teammates[kicker_unum as usize - 1].pos;
    let crowd = rng.random_range(0..=8);
    let opponents: Vec<PlayerState> = (1..=11u8)
        .map(|u| {
            let pos = if (u as usize) <= crowd {
                let r = rng.random_range(0.5..12.0);
                let a: f64 = rng.random_range(-180.0..180.0);
                let (s, c) = a.to_radians().sin_cos();
                Vec2::new(
                    (kicker_pos.x + r * c).clamp(-HALF_LENGTH, HALF_LENGTH),
                    (kicker_pos.y + r * s).clamp(-HALF_WIDTH, HALF_WIDTH),
                )
            } else {
                pitch_point(rng)
            };
            random_player(rng, side.opposite(), u, pos)
        })
        .collect();
    teammates.shuffle(rng);
    let mut opponents = opponents;
    opponents.shuffle(rng);
    let r = rng.random_range(0.0..0.6);
    let a: f64 = rng.random_range(-180.0..180.0);
    let (s, c) = a.to_radians().sin_cos();
    let mut ws = WorldState {
        cycle: rng.random_range(1..6000),
        ball: kickcast_core::state::BallState {
            pos: Vec2::new(kicker_pos.x + r * c, kicker_pos.y + r * s),
            vel: Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        },
        teammates,
        opponents,
        kicker_unum,
        offside_count: rng.random_range(0..5),
        flavor: Flavor::Full,
    };
    if rng.random_bool(0.05) {
        ws.ball.pos = kicker_pos;
        ws.ball.vel = Vec2::new(0.0, 0.0);
    }
    ws
}

/// Players with random unums (distinct), random size and positions; a third
/// of the time positions are snapped to a coarse grid to create key ties.
pub fn random_team<R: Rng>(rng: &mut R) -> Vec<PlayerState> {
    let n = rng.random_range(1..=11);
    let mut unums: Vec<u8> = (1..=11).collect();
    unums.shuffle(rng);
    let snap = rng.random_bool(0.33);
    unums[..n]
        .iter()
        .map(|&u| {
            let mut p = pitch_point(rng);
            if snap {
                p = Vec2::new((p.x / 10.0).round() * 10.0, (p.y / 10.0).round() * 10.0);
            }
            PlayerState::new(Side::Left, u, p)
        })
        .collect()
}

fn key(method: OrderingMethod, p: &PlayerState, kicker_pos: Vec2) -> f64 {
    let (x, y) = (p.pos.x, p.pos.y);
    let key = match method.name().trim_end_matches("_fk") {
        "x" => x,
        "unum" => f64::from(p.unum),
        "afc" => bearing(0.0 - x, 0.0 - y),
        "ak" => bearing(kicker_pos.x - x, kicker_pos.y - y),
        "akg" => bearing(HALF_LENGTH - x, 0.0 - y),
        other => panic!("unexpected method {other}"),
    };
    key
}

/// Selection sort with an explicit "comes before" comparison.
pub fn oracle_order(players: &[PlayerState], method: OrderingMethod, kicker: u8, kicker_pos: Vec2) -> Vec<u8> {
    let fk = method.name().ends_with("_fk");
    let mut out = Vec::new();
    let mut rest: Vec<&PlayerState> = players.iter().collect();
    if fk {
        if let Some(i) = rest.iter().position(|p| p.unum == kicker) {
            out.push(kicker);
            rest.remove(i);
        }
    }
    while !rest.is_empty() {
        let mut best = 0;
        for i in 1..rest.len() {
            let (ki, kb) = (key(method, rest[i], kicker_pos), key(method, rest[best], kicker_pos));
            if ki < kb || (ki == kb && rest[i].unum < rest[best].unum) {
                best = i;
            }
        }
        out.push(rest.remove(best).unum);
    }
    out
}

pub fn oracle_dribble(ws: &WorldState) -> [f64; 12] {
    let mut out = [30.0f64; 12];
    for (k, slot) in out.iter_mut().enumerate() {
        let lo = -180.0 + 30.0 * k as f64;
        for o in &ws.opponents {
            let (dx, dy) = (o.pos.x - ws.ball.pos.x, o.pos.y - ws.ball.pos.y);
            let mut b = bearing(dx, dy);
            if b >= 180.0 {
                b -= 360.0;
            }
            if b >= lo && b < lo + 30.0 {
                *slot = (*slot).min(dx.hypot(dy));
            }
        }
    }
    out
}

pub fn oracle_pass_angle(ws: &WorldState, target: Vec2) -> f64 {
    let ball = ws.ball.pos;
    let (tx, ty) = (target.x - ball.x, target.y - ball.y);
    let reach = tx.hypot(ty) + 3.0;
    let mut best: f64 = 60.0;
    for o in &ws.opponents {
        let (ox, oy) = (o.pos.x - ball.x, o.pos.y - ball.y);
        if ox.hypot(oy) >= reach {
            continue;
        }
        // Zero vectors read as bearing 0, as in the feature definition.
        let a = if (tx == 0.0 && ty == 0.0) || (ox == 0.0 && oy == 0.0) {
            let d = (bearing(tx, ty) - bearing(ox, oy)).abs();
            d.min(360.0 - d)
        } else {
            angle_between(tx, ty, ox, oy)
        };
        best = best.min(a);
    }
    best
}

fn shadows(ws: &WorldState, from: Vec2) -> Vec<(f64, f64)> {
    ws.opponents
        .iter()
        .map(|o| {
            let (dx, dy) = (o.pos.x - from.x, o.pos.y - from.y);
            let d = dx.hypot(dy);
            let h = if d <= 0.0 { 90.0 } else { (1.2 / d).min(1.0).asin().to_degrees() };
            (bearing(dx, dy), h)
        })
        .collect()
}

fn covered(shadows: &[(f64, f64)], theta: f64) -> bool {
    shadows.iter().any(|&(b, h)| {
        let d = (theta - b).rem_euclid(360.0);
        d.min(360.0 - d) <= h
    })
}

fn cone(from: Vec2) -> (f64, f64) {
    (
        bearing(HALF_LENGTH - from.x, -POST_Y - from.y),
        bearing(HALF_LENGTH - from.x, POST_Y - from.y),
    )
}

/// Widest uncovered run inside the goal cone, found exactly by testing the
/// midpoint of every interval between consecutive shadow edges.
pub fn oracle_shoot_exact(ws: &WorldState, from: Vec2) -> f64 {
    if from.x >= HALF_LENGTH {
        return 0.0;
    }
    let (lo, hi) = cone(from);
    let sh = shadows(ws, from);
    let mut cuts = vec![lo, hi];
    for &(b, h) in &sh {
        for e in [b - h, b + h] {
            // Bring the edge into the cone's neighbourhood.
            let mut e = e;
            while e - lo > 180.0 {
                e -= 360.0;
            }
            while lo - e > 180.0 {
                e += 360.0;
            }
            if e > lo && e < hi {
                cuts.push(e);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let (mut best, mut run) = (0.0f64, 0.0f64);
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        if covered(&sh, 0.5 * (w[0] + w[1])) {
            run = 0.0;
        } else {
            run += len;
            best = best.max(run);
        }
    }
    best
}

/// Width of the goal mouth seen from `from` with no opponents.
pub fn oracle_shoot_open(from: Vec2) -> f64 {
    if from.x >= HALF_LENGTH {
        return 0.0;
    }
    let (lo, hi) = cone(from);
    hi - lo
}

/// Widest uncovered run measured by sampling directions `step` degrees apart.
pub fn oracle_shoot_sweep(ws: &WorldState, from: Vec2, step: f64) -> f64 {
    if from.x >= HALF_LENGTH {
        return 0.0;
    }
    let (lo, hi) = cone(from);
    let sh = shadows(ws, from);
    let (mut best, mut run) = (0.0f64, 0.0f64);
    let mut prev_free = false;
    let mut t = lo;
    while t <= hi {
        let free = !covered(&sh, t);
        if free {
            run = if prev_free { run + step } else { 0.0 };
            best = best.max(run);
        }
        prev_free = free;
        t += step;
    }
    best
}

pub fn oracle_offside(ws: &WorldState, x: f64) -> bool {
    let mut xs: Vec<f64> = ws.opponents.iter().map(|o| o.pos.x).collect();
    xs.sort_by(|a, b| b.total_cmp(a));
    let second = xs.get(1).copied().unwrap_or(f64::NEG_INFINITY);
    let line = second.max(ws.ball.pos.x);
    x > 0.0 && x > line
}

pub fn oracle_nearest(ws: &WorldState, p: Vec2) -> f64 {
    ws.opponents
        .iter()
        .map(|o| (o.pos.x - p.x).hypot(o.pos.y - p.y))
        .fold(150.0, f64::min)
}

/// Label row rebuilt from an action, the feature ordering and the full state.
pub fn oracle_label(action: &KickAction, ordering: &[u8], fws: &WorldState) -> LabelRow {
    let index = ordering.iter().position(|u| *u == action.target_unum).expect("target in ordering");
    let (dx, dy) = (
        action.target_position.x - fws.ball.pos.x,
        action.target_position.y - fws.ball.pos.y,
    );
    let angle = if dx == 0.0 && dy == 0.0 { action.first_kick_angle } else { bearing(dx, dy) };
    LabelRow {
        category: action.category,
        target_unum: action.target_unum,
        target_index: index as u8,
        description: action.description,
        target_position: action.target_position,
        first_kick_angle: angle,
        first_kick_speed: action.first_kick_speed,
    }
}
