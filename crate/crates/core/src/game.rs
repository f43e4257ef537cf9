//! Two-player stage games with exact rational payoffs.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact payoff arithmetic. Always stored in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::Ratio<i64>;

/// Parse `"p/q"` or an optionally signed integer.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => text.parse::<i64>().ok().map(Rational::from_integer),
    }
}

/// Format a rational as an integer when it is one, `p/q` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn from_number(n: u8) -> Option<Player> {
        match n {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

impl FromStr for Player {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Player::One),
            "2" => Ok(Player::Two),
            other => Err(Error::Unsupported(format!("unknown player `{other}`"))),
        }
    }
}

/// One joint action, stored as (player-1 action, player-2 action) indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionPair(pub usize, pub usize);

impl ActionPair {
    /// Build the pair from one player's own action and the opponent's action.
    pub fn oriented(player: Player, own: usize, opponent: usize) -> Self {
        match player {
            Player::One => ActionPair(own, opponent),
            Player::Two => ActionPair(opponent, own),
        }
    }

    pub fn get(self, player: Player) -> usize {
        match player {
            Player::One => self.0,
            Player::Two => self.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PayoffProfile {
    pub p1: Rational,
    pub p2: Rational,
}

impl PayoffProfile {
    pub fn new(p1: Rational, p2: Rational) -> Self {
        PayoffProfile { p1, p2 }
    }

    pub fn integers(p1: i64, p2: i64) -> Self {
        PayoffProfile::new(Rational::from_integer(p1), Rational::from_integer(p2))
    }

    pub fn get(&self, player: Player) -> Rational {
        match player {
            Player::One => self.p1,
            Player::Two => self.p2,
        }
    }
}

impl fmt::Display for PayoffProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", format_rational(&self.p1), format_rational(&self.p2))
    }
}

/// A finite two-player game in strategic form.
///
/// Besides the exact table the game keeps an integer copy scaled by the
/// least common denominator of all entries; cycle searches work on those
/// integers and convert back at the boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageGame {
    name: String,
    actions: [Vec<String>; 2],
    payoffs: Vec<[Rational; 2]>,
    scale: i64,
    scaled: Vec<[i64; 2]>,
    minmax: [Rational; 2],
}

const RESERVED: &[char] = &['(', ')', ',', '*', ':', '=', '#', '"'];

fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && !label.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c))
        && !label.starts_with('-')
        && !label.ends_with('-')
}

impl StageGame {
    /// Build a game from action labels and a row-major payoff table
    /// (`payoffs[a1 * |S_2| + a2]`).
    pub fn new(
        name: impl Into<String>,
        actions1: Vec<String>,
        actions2: Vec<String>,
        payoffs: Vec<PayoffProfile>,
    ) -> Result<Self> {
        for (p, labels) in [&actions1, &actions2].into_iter().enumerate() {
            if labels.is_empty() {
                return Err(Error::InvalidMachine(format!("player {} has no actions", p + 1)));
            }
            for (i, l) in labels.iter().enumerate() {
                if !valid_label(l) {
                    return Err(Error::Unsupported(format!("invalid action label `{l}`")));
                }
                if labels[..i].contains(l) {
                    return Err(Error::Unsupported(format!("duplicate action label `{l}`")));
                }
            }
        }
        if payoffs.len() != actions1.len() * actions2.len() {
            return Err(Error::Unsupported(format!(
                "payoff table has {} cells, expected {}",
                payoffs.len(),
                actions1.len() * actions2.len()
            )));
        }
        let payoffs: Vec<[Rational; 2]> = payoffs.into_iter().map(|p| [p.p1, p.p2]).collect();
        let scale = payoffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(1i64, |acc, r| acc.lcm(r.denom()));
        let scaled = payoffs
            .iter()
            .map(|c| [(c[0] * scale).to_integer(), (c[1] * scale).to_integer()])
            .collect();
        let mut game = StageGame {
            name: name.into(),
            actions: [actions1, actions2],
            payoffs,
            scale,
            scaled,
            minmax: [Rational::zero(), Rational::zero()],
        };
        game.minmax = [game.compute_minmax(Player::One), game.compute_minmax(Player::Two)];
        Ok(game)
    }

    /// The Prisoner's Dilemma used throughout the worked examples:
    /// (C,C)=(2,2), (C,D)=(-1,3), (D,C)=(3,-1), (D,D)=(0,0).
    pub fn prisoners_dilemma() -> Self {
        let cd = || vec!["C".to_string(), "D".to_string()];
        StageGame::new(
            "pd",
            cd(),
            cd(),
            vec![
                PayoffProfile::integers(2, 2),
                PayoffProfile::integers(-1, 3),
                PayoffProfile::integers(3, -1),
                PayoffProfile::integers(0, 0),
            ],
        )
        .expect("built-in game is valid")
    }

    /// Look up a built-in game by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "pd" => Some(StageGame::prisoners_dilemma()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn actions(&self, player: Player) -> &[String] {
        &self.actions[player.index()]
    }

    pub fn num_actions(&self, player: Player) -> usize {
        self.actions[player.index()].len()
    }

    pub fn action_label(&self, player: Player, action: usize) -> &str {
        &self.actions[player.index()][action]
    }

    pub fn action_index(&self, player: Player, label: &str) -> Option<usize> {
        self.actions[player.index()].iter().position(|a| a == label)
    }

    fn cell(&self, pair: ActionPair) -> usize {
        pair.0 * self.actions[1].len() + pair.1
    }

    /// Payoff profile u(a1, a2).
    pub fn payoff(&self, pair: ActionPair) -> PayoffProfile {
        let c = &self.payoffs[self.cell(pair)];
        PayoffProfile::new(c[0], c[1])
    }

    /// u_player at the given joint action.
    pub fn utility(&self, player: Player, pair: ActionPair) -> Rational {
        self.payoffs[self.cell(pair)][player.index()]
    }

    /// u_player scaled by [`StageGame::scale`]; always an integer.
    pub fn scaled_utility(&self, player: Player, pair: ActionPair) -> i64 {
        self.scaled[self.cell(pair)][player.index()]
    }

    /// Common denominator of every table entry.
    pub fn scale(&self) -> i64 {
        self.scale
    }

    /// Convert a sum of `len` scaled utilities back into an exact mean.
    pub fn scaled_mean(&self, sum: i64, len: usize) -> Rational {
        Rational::new(sum, self.scale * len as i64)
    }

    fn compute_minmax(&self, player: Player) -> Rational {
        let other = player.other();
        (0..self.num_actions(other))
            .map(|opp| {
                (0..self.num_actions(player))
                    .map(|own| self.utility(player, ActionPair::oriented(player, own, opp)))
                    .max()
                    .expect("nonempty action set")
            })
            .min()
            .expect("nonempty action set")
    }

    /// Pure-action minmax payoff v_player.
    pub fn minmax(&self, player: Player) -> Rational {
        self.minmax[player.index()]
    }

    /// Own actions of `player` that hold the opponent to the opponent's
    /// minmax, in declared order.
    pub fn forcing_actions(&self, player: Player) -> Vec<usize> {
        (0..self.num_actions(player))
            .filter(|&a| self.forces_minmax(player, a))
            .collect()
    }

    /// True if playing `action` forever holds the opponent to their minmax.
    pub fn forces_minmax(&self, player: Player, action: usize) -> bool {
        let other = player.other();
        let best = (0..self.num_actions(other))
            .map(|r| self.utility(other, ActionPair::oriented(player, action, r)))
            .max()
            .expect("nonempty action set");
        best == self.minmax(other)
    }

    pub fn is_strictly_enforceable(&self, w: &PayoffProfile) -> bool {
        w.p1 > self.minmax[0] && w.p2 > self.minmax[1]
    }

    pub fn is_enforceable(&self, w: &PayoffProfile) -> bool {
        w.p1 >= self.minmax[0] && w.p2 >= self.minmax[1]
    }

    /// Largest absolute payoff in the table.
    pub fn max_abs_payoff(&self) -> Rational {
        self.payoffs
            .iter()
            .flat_map(|c| c.iter())
            .map(|r| r.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Parse the line-oriented game format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name: Option<String> = None;
        let mut actions: [Option<Vec<String>>; 2] = [None, None];
        let mut cells: Vec<(usize, String, String, Rational, Rational)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (keyword, rest) = line
                .split_once(char::is_whitespace)
                .map(|(k, r)| (k, r.trim()))
                .unwrap_or((line, ""));
            match keyword {
                "game" => {
                    if name.is_some() {
                        return Err(Error::parse(line_no, "duplicate `game` line"));
                    }
                    if rest.is_empty() || rest.contains(char::is_whitespace) {
                        return Err(Error::parse(line_no, "expected `game <name>`"));
                    }
                    name = Some(rest.to_string());
                }
                "actions" => {
                    let (who, labels) = rest
                        .split_once(':')
                        .ok_or_else(|| Error::parse(line_no, "expected `actions <1|2>: ...`"))?;
                    let player: Player = who
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("unknown player `{}`", who.trim())))?;
                    if actions[player.index()].is_some() {
                        return Err(Error::parse(line_no, format!("duplicate actions for player {player}")));
                    }
                    let labels: Vec<String> = labels.split_whitespace().map(str::to_string).collect();
                    if labels.is_empty() {
                        return Err(Error::parse(line_no, "empty action list"));
                    }
                    for (i, l) in labels.iter().enumerate() {
                        if !valid_label(l) {
                            return Err(Error::parse(line_no, format!("invalid action label `{l}`")));
                        }
                        if labels[..i].contains(l) {
                            return Err(Error::parse(line_no, format!("duplicate action label `{l}`")));
                        }
                    }
                    actions[player.index()] = Some(labels);
                }
                "payoff" => {
                    let (lhs, rhs) = rest
                        .split_once('=')
                        .ok_or_else(|| Error::parse(line_no, "expected `payoff <a1> <a2> = <r1> <r2>`"))?;
                    let lhs: Vec<&str> = lhs.split_whitespace().collect();
                    let rhs: Vec<&str> = rhs.split_whitespace().collect();
                    if lhs.len() != 2 || rhs.len() != 2 {
                        return Err(Error::parse(line_no, "expected `payoff <a1> <a2> = <r1> <r2>`"));
                    }
                    let r1 = parse_rational(rhs[0])
                        .ok_or_else(|| Error::parse(line_no, format!("bad rational `{}`", rhs[0])))?;
                    let r2 = parse_rational(rhs[1])
                        .ok_or_else(|| Error::parse(line_no, format!("bad rational `{}`", rhs[1])))?;
                    cells.push((line_no, lhs[0].to_string(), lhs[1].to_string(), r1, r2));
                }
                other => return Err(Error::parse(line_no, format!("unknown keyword `{other}`"))),
            }
        }

        let end = text.lines().count().max(1);
        let name = name.ok_or_else(|| Error::parse(1, "missing `game <name>` line"))?;
        let [a1, a2] = actions;
        let a1 = a1.ok_or_else(|| Error::parse(end, "missing `actions 1:` line"))?;
        let a2 = a2.ok_or_else(|| Error::parse(end, "missing `actions 2:` line"))?;
        let mut table: Vec<Option<PayoffProfile>> = vec![None; a1.len() * a2.len()];
        for (line_no, l1, l2, r1, r2) in cells {
            let i1 = a1
                .iter()
                .position(|a| *a == l1)
                .ok_or_else(|| Error::parse(line_no, format!("unknown player-1 action `{l1}`")))?;
            let i2 = a2
                .iter()
                .position(|a| *a == l2)
                .ok_or_else(|| Error::parse(line_no, format!("unknown player-2 action `{l2}`")))?;
            let slot = &mut table[i1 * a2.len() + i2];
            if slot.is_some() {
                return Err(Error::parse(line_no, format!("duplicate payoff for ({l1},{l2})")));
            }
            *slot = Some(PayoffProfile::new(r1, r2));
        }
        let mut payoffs = Vec::with_capacity(table.len());
        for (idx, cell) in table.into_iter().enumerate() {
            match cell {
                Some(p) => payoffs.push(p),
                None => {
                    return Err(Error::parse(
                        end,
                        format!("missing payoff for ({},{})", a1[idx / a2.len()], a2[idx % a2.len()]),
                    ))
                }
            }
        }
        StageGame::new(name, a1, a2, payoffs).map_err(|e| Error::parse(end, e.to_string()))
    }

    /// Render in the text format accepted by [`StageGame::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("game {}\n", self.name);
        out.push_str(&format!("actions 1: {}\n", self.actions[0].join(" ")));
        out.push_str(&format!("actions 2: {}\n", self.actions[1].join(" ")));
        for (i1, l1) in self.actions[0].iter().enumerate() {
            for (i2, l2) in self.actions[1].iter().enumerate() {
                let p = self.payoff(ActionPair(i1, i2));
                out.push_str(&format!("payoff {l1} {l2} = {p}\n"));
            }
        }
        out
    }
}

/// Weighted sum of payoff profiles. Weights must be nonnegative and sum to 1.
pub fn convex_combination(profiles: &[PayoffProfile], weights: &[Rational]) -> Result<PayoffProfile> {
    if profiles.len() != weights.len() {
        return Err(Error::InvalidWeights(format!(
            "{} profiles but {} weights",
            profiles.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| w.is_negative()) {
        return Err(Error::InvalidWeights("negative weight".into()));
    }
    let total: Rational = weights.iter().sum();
    if total != Rational::one() {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {}",
            format_rational(&total)
        )));
    }
    let mut acc = PayoffProfile::new(Rational::zero(), Rational::zero());
    for (p, w) in profiles.iter().zip(weights) {
        acc.p1 += p.p1 * w;
        acc.p2 += p.p2 * w;
    }
    Ok(acc)
}
