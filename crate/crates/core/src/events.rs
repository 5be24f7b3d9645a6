//! Line-delimited event files.
//!
//! An event file is a CSV file with one header line followed by one line per
//! event. Columns, in order:
//!
//! 1. `event_id`
//! 2. the full state, prefixed `fws_`
//! 3. the perceived state, prefixed `ws_`
//! 4. the action: `action_category`, `action_description`,
//!    `action_target_unum`, `action_target_x`, `action_target_y`,
//!    `action_first_kick_angle`, `action_first_kick_speed`
//!
//! A state is `cycle`, `kicker_unum`, `offside_count`, `ball_x`, `ball_y`,
//! `ball_vx`, `ball_vy`, then 11 teammate records `tm01`..`tm11` and 11
//! opponent records `op01`..`op11` (slot = unum), each holding
//! [`PLAYER_FIELDS`] in order. Booleans are 0/1, sides are 1 (left) or -1
//! (right), categorical action fields use the label legend. Numbers use the
//! shortest decimal that round-trips.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, EventFileError, Result};
use crate::labels::{Category, Description, KickAction};
use crate::state::{BallState, Flavor, PlayerState, PlayerTypeParams, Side, Vec2, WorldState, TEAM_SIZE};
use crate::synthgen::{EpisodeConfig, KickEvent};

pub const EVENT_FILE_NAME: &str = "events.csv";
pub const EVENT_META_NAME: &str = "events.meta.json";
pub const EVENT_FORMAT: &str = "kickcast-events";
pub const EVENT_FORMAT_VERSION: u32 = 1;

pub const STATE_FIELDS: [&str; 7] = [
    "cycle",
    "kicker_unum",
    "offside_count",
    "ball_x",
    "ball_y",
    "ball_vx",
    "ball_vy",
];

pub const PLAYER_FIELDS: [&str; 24] = [
    "side",
    "unum",
    "x",
    "y",
    "vx",
    "vy",
    "body",
    "face",
    "stamina",
    "tackling",
    "kicking",
    "card",
    "pos_count",
    "vel_count",
    "stamina_count",
    "type_dash_rate",
    "type_effort_max",
    "type_effort_min",
    "type_kickable_dist",
    "type_margin_dist",
    "type_kick_power_rate",
    "type_decay",
    "type_size",
    "type_speed_max",
];

pub const ACTION_FIELDS: [&str; 7] = [
    "action_category",
    "action_description",
    "action_target_unum",
    "action_target_x",
    "action_target_y",
    "action_first_kick_angle",
    "action_first_kick_speed",
];

const STATE_WIDTH: usize = STATE_FIELDS.len() + 2 * TEAM_SIZE * PLAYER_FIELDS.len();

/// Column names of an event file, in order.
pub fn event_columns() -> Vec<String> {
    let mut cols = vec!["event_id".to_string()];
    for prefix in ["fws", "ws"] {
        cols.extend(STATE_FIELDS.iter().map(|f| format!("{prefix}_{f}")));
        for team in ["tm", "op"] {
            for slot in 1..=TEAM_SIZE {
                cols.extend(PLAYER_FIELDS.iter().map(|f| format!("{prefix}_{team}{slot:02}_{f}")));
            }
        }
    }
    cols.extend(ACTION_FIELDS.iter().map(|f| f.to_string()));
    cols
}

/// Metadata written next to an event file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFileMeta {
    pub format: String,
    pub version: u32,
    pub n_events: usize,
    pub config: EpisodeConfig,
}

impl EventFileMeta {
    pub fn new(config: EpisodeConfig) -> Self {
        Self {
            format: EVENT_FORMAT.into(),
            version: EVENT_FORMAT_VERSION,
            n_events: config.n_events,
            config,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn push_state(out: &mut Vec<String>, ws: &WorldState) -> Result<()> {
    if ws.teammates.len() != TEAM_SIZE || ws.opponents.len() != TEAM_SIZE {
        return Err(Error::MalformedState("event files need 11 players per side".into()));
    }
    out.push(ws.cycle.to_string());
    out.push(ws.kicker_unum.to_string());
    out.push(ws.offside_count.to_string());
    for v in [ws.ball.pos.x, ws.ball.pos.y, ws.ball.vel.x, ws.ball.vel.y] {
        out.push(fmt_f64(v));
    }
    for team in [&ws.teammates, &ws.opponents] {
        let mut sorted: Vec<&PlayerState> = team.iter().collect();
        sorted.sort_by_key(|p| p.unum);
        for (slot, p) in sorted.into_iter().enumerate() {
            if p.unum as usize != slot + 1 {
                return Err(Error::MalformedState(format!("missing unum {}", slot + 1)));
            }
            out.push(fmt_f64(p.side.sign()));
            out.push(p.unum.to_string());
            for v in [p.pos.x, p.pos.y, p.vel.x, p.vel.y, p.body, p.face, p.stamina] {
                out.push(fmt_f64(v));
            }
            for flag in [p.tackling, p.kicking, p.card] {
                out.push(u8::from(flag).to_string());
            }
            for c in [p.pos_count, p.vel_count, p.stamina_count] {
                out.push(c.to_string());
            }
            out.extend(p.type_params.as_array().map(fmt_f64));
        }
    }
    Ok(())
}

fn event_record(e: &KickEvent) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(1 + 2 * STATE_WIDTH + ACTION_FIELDS.len());
    out.push(e.event_id.to_string());
    push_state(&mut out, &e.fws)?;
    push_state(&mut out, &e.ws)?;
    let a = &e.action;
    out.push(a.category.code().to_string());
    out.push(a.description.code().to_string());
    out.push(a.target_unum.to_string());
    for v in [a.target_position.x, a.target_position.y, a.first_kick_angle, a.first_kick_speed] {
        out.push(fmt_f64(v));
    }
    Ok(out)
}

pub fn write_events(events: &[KickEvent], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::from(EventFileError::Csv(e.to_string()));
    w.write_record(event_columns()).map_err(csv_err)?;
    for e in events {
        w.write_record(event_record(e)?).map_err(csv_err)?;
    }
    let inner = w.into_inner().map_err(|e| EventFileError::Csv(e.to_string()))?;
    inner.into_inner().map_err(|e| Error::io(path, e.into_error()))?.flush().map_err(|e| Error::io(path, e))
}

pub fn write_event_meta(meta: &EventFileMeta, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_event_meta(path: &Path) -> Result<EventFileMeta> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::InvalidConfig(format!("{}: {e}", path.display()))
    })
}

struct Fields<'a> {
    record: &'a csv::StringRecord,
    names: &'a [String],
    at: usize,
    line: usize,
}

impl<'a> Fields<'a> {
    fn raw(&mut self) -> (&'a str, &'a str) {
        let record: &'a csv::StringRecord = self.record;
        let names: &'a [String] = self.names;
        let v = &record[self.at];
        let n = names[self.at].as_str();
        self.at += 1;
        (n, v)
    }

    fn bad(&self, field: &str, text: &str) -> Error {
        EventFileError::BadValue {
            line: self.line,
            field: field.to_string(),
            text: text.to_string(),
        }
        .into()
    }

    fn f64(&mut self) -> Result<f64> {
        let (n, v) = self.raw();
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.bad(n, v)),
        }
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T> {
        let (n, v) = self.raw();
        v.parse::<T>().map_err(|_| self.bad(n, v))
    }

    fn flag(&mut self) -> Result<bool> {
        let (n, v) = self.raw();
        match v {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(self.bad(n, v)),
        }
    }

    fn side(&mut self) -> Result<Side> {
        let (n, v) = self.raw();
        v.parse::<f64>()
            .ok()
            .and_then(Side::from_sign)
            .ok_or_else(|| self.bad(n, v))
    }

    fn player(&mut self) -> Result<PlayerState> {
        let side = self.side()?;
        let unum = self.int()?;
        let pos = Vec2::new(self.f64()?, self.f64()?);
        let vel = Vec2::new(self.f64()?, self.f64()?);
        let body = self.f64()?;
        let face = self.f64()?;
        let stamina = self.f64()?;
        let tackling = self.flag()?;
        let kicking = self.flag()?;
        let card = self.flag()?;
        let pos_count = self.int()?;
        let vel_count = self.int()?;
        let stamina_count = self.int()?;
        let mut tp = [0.0; 9];
        for v in &mut tp {
            *v = self.f64()?;
        }
        Ok(PlayerState {
            side,
            unum,
            pos,
            vel,
            body,
            face,
            stamina,
            type_params: PlayerTypeParams::from_array(tp),
            tackling,
            kicking,
            card,
            pos_count,
            vel_count,
            stamina_count,
        })
    }

    fn state(&mut self, flavor: Flavor) -> Result<WorldState> {
        let cycle = self.int()?;
        let kicker_unum = self.int()?;
        let offside_count = self.int()?;
        let ball = BallState {
            pos: Vec2::new(self.f64()?, self.f64()?),
            vel: Vec2::new(self.f64()?, self.f64()?),
        };
        let teammates = (0..TEAM_SIZE).map(|_| self.player()).collect::<Result<Vec<_>>>()?;
        let opponents = (0..TEAM_SIZE).map(|_| self.player()).collect::<Result<Vec<_>>>()?;
        Ok(WorldState {
            cycle,
            ball,
            teammates,
            opponents,
            kicker_unum,
            offside_count,
            flavor,
        })
    }

    fn action(&mut self) -> Result<KickAction> {
        let (n, v) = self.raw();
        let category = v
            .parse::<u8>()
            .ok()
            .and_then(Category::from_code)
            .ok_or_else(|| self.bad(n, v))?;
        let (n, v) = self.raw();
        let description = v
            .parse::<u8>()
            .ok()
            .and_then(Description::from_code)
            .ok_or_else(|| self.bad(n, v))?;
        let target_unum = self.int()?;
        let target_position = Vec2::new(self.f64()?, self.f64()?);
        Ok(KickAction {
            category,
            description,
            target_unum,
            target_position,
            first_kick_angle: self.f64()?,
            first_kick_speed: self.f64()?,
        })
    }
}

pub fn read_events(path: &Path) -> Result<Vec<KickEvent>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(std::io::BufReader::new(file));
    let names = event_columns();
    let mut records = r.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| EventFileError::Csv(e.to_string()))?,
        None => return Err(EventFileError::Invalid { line: 1, message: "empty event file".into() }.into()),
    };
    if header.len() != names.len() {
        return Err(EventFileError::WidthMismatch { line: 1, expected: names.len(), found: header.len() }.into());
    }
    for (i, (found, expected)) in header.iter().zip(&names).enumerate() {
        if found != expected {
            return Err(EventFileError::Header {
                column: i,
                expected: expected.clone(),
                found: found.to_string(),
            }
            .into());
        }
    }

    let mut events = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| EventFileError::Csv(e.to_string()))?;
        if rec.len() != names.len() {
            return Err(EventFileError::WidthMismatch { line, expected: names.len(), found: rec.len() }.into());
        }
        let mut f = Fields { record: &rec, names: &names, at: 0, line };
        let event_id = f.int()?;
        let fws = f.state(Flavor::Full)?;
        let ws = f.state(Flavor::Noisy)?;
        let action = f.action()?;
        let invalid = |message: String| Error::from(EventFileError::Invalid { line, message });
        fws.validate().map_err(|e| invalid(format!("full state: {e}")))?;
        ws.validate().map_err(|e| invalid(format!("perceived state: {e}")))?;
        action
            .validate(fws.kicker_unum)
            .map_err(|e| invalid(e.to_string()))?;
        events.push(KickEvent { event_id, fws, ws, action });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::generate_events;

    #[test]
    fn layout_width() {
        assert_eq!(event_columns().len(), 1 + 2 * (7 + 22 * 24) + 7);
    }

    #[test]
    fn round_trip_is_exact() {
        let cfg = EpisodeConfig { n_events: 25, seed: 9, ..EpisodeConfig::default() };
        let events = generate_events(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EVENT_FILE_NAME);
        write_events(&events, &path).unwrap();
        let back = read_events(&path).unwrap();
        assert_eq!(back.len(), events.len());
        for (a, b) in events.iter().zip(&back) {
            let mut fa = a.clone();
            fa.fws.teammates.sort_by_key(|p| p.unum);
            fa.fws.opponents.sort_by_key(|p| p.unum);
            fa.ws.teammates.sort_by_key(|p| p.unum);
            fa.ws.opponents.sort_by_key(|p| p.unum);
            assert_eq!(&fa, b);
        }
    }

    #[test]
    fn truncated_line_is_reported() {
        let cfg = EpisodeConfig { n_events: 3, seed: 2, ..EpisodeConfig::default() };
        let events = generate_events(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EVENT_FILE_NAME);
        write_events(&events, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let cut = lines[2].rsplit_once(',').unwrap().0.to_string();
        lines[2] = &cut;
        std::fs::write(&path, lines.join("\n")).unwrap();
        match read_events(&path) {
            Err(Error::Events(EventFileError::WidthMismatch { line: 3, .. })) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
