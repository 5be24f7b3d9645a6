//! The ten player-ordering methods used to lay out per-player feature blocks.

use std::cmp::Ordering as CmpOrdering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{PlayerState, Vec2, FIELD_CENTER, GOAL_CENTER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMethod {
    X,
    XFk,
    Unum,
    UnumFk,
    Afc,
    AfcFk,
    Ak,
    AkFk,
    Akg,
    AkgFk,
}

impl OrderingMethod {
    pub const ALL: [OrderingMethod; 10] = [
        OrderingMethod::X,
        OrderingMethod::XFk,
        OrderingMethod::Unum,
        OrderingMethod::UnumFk,
        OrderingMethod::Afc,
        OrderingMethod::AfcFk,
        OrderingMethod::Ak,
        OrderingMethod::AkFk,
        OrderingMethod::Akg,
        OrderingMethod::AkgFk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingMethod::X => "x",
            OrderingMethod::XFk => "x_fk",
            OrderingMethod::Unum => "unum",
            OrderingMethod::UnumFk => "unum_fk",
            OrderingMethod::Afc => "afc",
            OrderingMethod::AfcFk => "afc_fk",
            OrderingMethod::Ak => "ak",
            OrderingMethod::AkFk => "ak_fk",
            OrderingMethod::Akg => "akg",
            OrderingMethod::AkgFk => "akg_fk",
        }
    }

    pub fn kicker_first(self) -> bool {
        matches!(
            self,
            OrderingMethod::XFk
                | OrderingMethod::UnumFk
                | OrderingMethod::AfcFk
                | OrderingMethod::AkFk
                | OrderingMethod::AkgFk
        )
    }

    /// The method with the kicker-first rule removed.
    pub fn base(self) -> OrderingMethod {
        match self {
            OrderingMethod::XFk => OrderingMethod::X,
            OrderingMethod::UnumFk => OrderingMethod::Unum,
            OrderingMethod::AfcFk => OrderingMethod::Afc,
            OrderingMethod::AkFk => OrderingMethod::Ak,
            OrderingMethod::AkgFk => OrderingMethod::Akg,
            m => m,
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(|m| m.name()).join(", ")
    }
}

impl fmt::Display for OrderingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown ordering method {s:?}; valid methods: {}",
                    Self::valid_names()
                )
            })
    }
}

/// Reference points the angle-based methods measure against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingReference {
    pub kicker_pos: Vec2,
    pub goal_center: Vec2,
    pub field_center: Vec2,
}

impl OrderingReference {
    pub fn with_kicker(kicker_pos: Vec2) -> Self {
        Self {
            kicker_pos,
            goal_center: GOAL_CENTER,
            field_center: FIELD_CENTER,
        }
    }
}

/// A permutation of a team's unums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    pub permutation: Vec<u8>,
}

impl Ordering {
    pub fn index_of(&self, unum: u8) -> Option<usize> {
        self.permutation.iter().position(|&u| u == unum)
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }
}

/// The scalar key a base method sorts by (ascending, ties by unum).
pub fn sort_key(method: OrderingMethod, player: &PlayerState, reference: &OrderingReference) -> f64 {
    let p = player.pos;
    match method.base() {
        OrderingMethod::X => p.x,
        OrderingMethod::Unum => f64::from(player.unum),
        OrderingMethod::Afc => (reference.field_center - p).angle_deg(),
        OrderingMethod::Ak => (reference.kicker_pos - p).angle_deg(),
        OrderingMethod::Akg => (reference.goal_center - p).angle_deg(),
        _ => unreachable!("base() never returns a kicker-first variant"),
    }
}

fn compare(a: (f64, u8), b: (f64, u8)) -> CmpOrdering {
    // Adding +0.0 maps -0.0 to 0.0 so that the two tie.
    (a.0 + 0.0).total_cmp(&(b.0 + 0.0)).then(a.1.cmp(&b.1))
}

/// Orders `players` by `method`.
///
/// Kicker-first variants put `kicker_unum` at the head when it is present in
/// `players`; for a list without the kicker (the opponents) they behave as
/// their base method.
pub fn order_players(
    players: &[PlayerState],
    method: OrderingMethod,
    kicker_unum: u8,
    reference: &OrderingReference,
) -> Result<Ordering> {
    if players.is_empty() {
        return Err(Error::Empty("players to order"));
    }
    let mut seen = [false; 256];
    for p in players {
        if std::mem::replace(&mut seen[p.unum as usize], true) {
            return Err(Error::DuplicateUnum(p.unum));
        }
    }

    let mut keyed: Vec<(f64, u8)> = players
        .iter()
        .map(|p| (sort_key(method, p, reference), p.unum))
        .collect();
    let head = if method.kicker_first() && seen[kicker_unum as usize] {
        keyed.retain(|&(_, u)| u != kicker_unum);
        Some(kicker_unum)
    } else {
        None
    };
    keyed.sort_by(|a, b| compare(*a, *b));

    let permutation = head
        .into_iter()
        .chain(keyed.into_iter().map(|(_, u)| u))
        .collect();
    Ok(Ordering { permutation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Side;
    use proptest::prelude::*;
    use rand::Rng;

    fn team(layout: &[(u8, f64, f64)]) -> Vec<PlayerState> {
        layout.iter()
            .map(|&(u, x, y)| PlayerState::new(Side::Left, u, Vec2::new(x, y)))
            .collect()
    }

    fn order(players: &[PlayerState], method: OrderingMethod, kicker: u8) -> Vec<u8> {
        let kpos = players.iter().find(|p| p.unum == kicker).unwrap().pos;
        order_players(players, method, kicker, &OrderingReference::with_kicker(kpos))
            .unwrap()
            .permutation
    }

    #[test]
    fn published_x_and_unum_orders() {
        let players = team(&[(9, -15.0, 0.0), (8, -8.0, 0.0), (5, -2.0, 0.0), (3, 5.0, 0.0), (4, 9.0, 0.0)]);
        use OrderingMethod::*;
        assert_eq!(order(&players, X, 5), [9, 8, 5, 3, 4]);
        assert_eq!(order(&players, XFk, 5), [5, 9, 8, 3, 4]);
        assert_eq!(order(&players, Unum, 5), [3, 4, 5, 8, 9]);
        assert_eq!(order(&players, UnumFk, 5), [5, 3, 4, 8, 9]);
    }

    #[test]
    fn single_player_and_empty() {
        let one = team(&[(7, 1.0, 2.0)]);
        for m in OrderingMethod::ALL {
            assert_eq!(order(&one, m, 7), [7]);
        }
        let r = OrderingReference::with_kicker(Vec2::ZERO);
        assert!(matches!(order_players(&[], OrderingMethod::X, 1, &r), Err(Error::Empty(_))));
    }

    #[test]
    fn duplicate_unums_rejected() {
        let players = team(&[(2, 0.0, 0.0), (2, 1.0, 0.0)]);
        let r = OrderingReference::with_kicker(Vec2::ZERO);
        assert!(matches!(
            order_players(&players, OrderingMethod::Unum, 2, &r),
            Err(Error::DuplicateUnum(2))
        ));
    }

    #[test]
    fn ties_break_by_unum() {
        let players = team(&[(6, 3.0, 1.0), (2, 3.0, -1.0), (4, 3.0, 5.0)]);
        assert_eq!(order(&players, OrderingMethod::X, 6), [2, 4, 6]);
    }

    #[test]
    fn fk_without_kicker_degrades_to_base() {
        let players = team(&[(1, 5.0, 0.0), (2, -5.0, 0.0)]);
        let r = OrderingReference::with_kicker(Vec2::ZERO);
        let got = order_players(&players, OrderingMethod::XFk, 9, &r).unwrap();
        assert_eq!(got.permutation, [2, 1]);
    }

    #[test]
    fn method_names_round_trip() {
        for m in OrderingMethod::ALL {
            assert_eq!(m.name().parse::<OrderingMethod>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        let err = "xfk".parse::<OrderingMethod>().unwrap_err();
        assert!(err.contains("akg_fk"));
    }

    fn random_team<R: Rng>(rng: &mut R, n: usize) -> Vec<PlayerState> {
        let mut unums: Vec<u8> = (1..=11).collect();
        for i in (1..unums.len()).rev() {
            let j = rng.random_range(0..=i);
            unums.swap(i, j);
        }
        unums
            .into_iter()
            .take(n)
            .map(|u| {
                // Coarse grid so ties actually occur.
                let x = f64::from(rng.random_range(-10..=10)) * 5.0;
                let y = f64::from(rng.random_range(-6..=6)) * 5.0;
                PlayerState::new(Side::Left, u, Vec2::new(x, y))
            })
            .collect()
    }

    proptest! {
        #[test]
        fn always_a_permutation(seed in any::<u64>(), n in 1usize..=11, m in 0usize..10) {
            let mut rng = crate::seed::rng(seed);
            let players = random_team(&mut rng, n);
            let kicker = players[0].unum;
            let got = order(&players, OrderingMethod::ALL[m], kicker);
            let mut a = got.clone();
            a.sort_unstable();
            let mut b: Vec<u8> = players.iter().map(|p| p.unum).collect();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn fk_is_kicker_then_base_of_rest(seed in any::<u64>(), n in 2usize..=11, m in 0usize..5) {
            let mut rng = crate::seed::rng(seed);
            let players = random_team(&mut rng, n);
            let kicker = players[n / 2].unum;
            let kpos = players[n / 2].pos;
            let fk = [OrderingMethod::XFk, OrderingMethod::UnumFk, OrderingMethod::AfcFk, OrderingMethod::AkFk, OrderingMethod::AkgFk][m];
            let r = OrderingReference::with_kicker(kpos);
            let got = order_players(&players, fk, kicker, &r).unwrap().permutation;
            let rest: Vec<PlayerState> = players.iter().filter(|p| p.unum != kicker).cloned().collect();
            let tail = order_players(&rest, fk.base(), kicker, &r).unwrap().permutation;
            prop_assert_eq!(got[0], kicker);
            prop_assert_eq!(&got[1..], &tail[..]);
        }

        #[test]
        fn unum_orders_ignore_positions(seed in any::<u64>(), n in 1usize..=11) {
            let mut rng = crate::seed::rng(seed);
            let players = random_team(&mut rng, n);
            let mut moved = players.clone();
            for p in &mut moved {
                p.pos = Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-30.0..30.0));
            }
            let kicker = players[0].unum;
            for m in [OrderingMethod::Unum, OrderingMethod::UnumFk] {
                prop_assert_eq!(order(&players, m, kicker), order(&moved, m, kicker));
            }
        }

        #[test]
        fn angle_orders_translation_invariant(seed in any::<u64>(), n in 1usize..=11, dx in -20i32..20, dy in -20i32..20, m in 0usize..3) {
            // Integer-valued shifts keep the translated coordinates exact.
            let mut rng = crate::seed::rng(seed);
            let players = random_team(&mut rng, n);
            let shift = Vec2::new(f64::from(dx), f64::from(dy));
            let moved: Vec<PlayerState> = players.iter().cloned().map(|mut p| { p.pos = p.pos + shift; p }).collect();
            let kicker = players[0].unum;
            let kpos = players[0].pos;
            let r = OrderingReference { kicker_pos: kpos, goal_center: GOAL_CENTER, field_center: FIELD_CENTER };
            let rs = OrderingReference { kicker_pos: kpos + shift, goal_center: GOAL_CENTER + shift, field_center: FIELD_CENTER + shift };
            let method = [OrderingMethod::Afc, OrderingMethod::Ak, OrderingMethod::Akg][m];
            prop_assert_eq!(
                order_players(&players, method, kicker, &r).unwrap(),
                order_players(&moved, method, kicker, &rs).unwrap()
            );
        }
    }
}
