//! Moore-style strategy machines.

use std::borrow::Cow;
use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::game::{Player, StageGame};

/// A deterministic finite strategy for one player: start state, an output
/// action per state, and a successor per (state, observed opponent action).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Machine {
    name: String,
    player: Player,
    /// Empty means default names `q0, q1, ...`.
    state_names: Vec<String>,
    initial: usize,
    own_actions: usize,
    opp_actions: usize,
    outputs: Vec<usize>,
    /// Row-major: `transitions[state * opp_actions + input]`.
    transitions: Vec<usize>,
}

impl Machine {
    /// Build an anonymous machine from its tables.
    pub fn from_tables(
        player: Player,
        own_actions: usize,
        opp_actions: usize,
        initial: usize,
        outputs: Vec<usize>,
        transitions: Vec<usize>,
    ) -> Result<Self> {
        let n = outputs.len();
        if n == 0 {
            return Err(Error::InvalidMachine("machine has no states".into()));
        }
        if initial >= n {
            return Err(Error::InvalidMachine(format!("initial state {initial} out of range")));
        }
        if opp_actions == 0 || own_actions == 0 {
            return Err(Error::InvalidMachine("empty action alphabet".into()));
        }
        if transitions.len() != n * opp_actions {
            return Err(Error::InvalidMachine(format!(
                "transition table has {} entries, expected {}",
                transitions.len(),
                n * opp_actions
            )));
        }
        if let Some(o) = outputs.iter().find(|&&o| o >= own_actions) {
            return Err(Error::InvalidMachine(format!("output {o} out of range")));
        }
        if let Some(t) = transitions.iter().find(|&&t| t >= n) {
            return Err(Error::InvalidMachine(format!("transition target {t} out of range")));
        }
        Ok(Machine {
            name: String::new(),
            player,
            state_names: Vec::new(),
            initial,
            own_actions,
            opp_actions,
            outputs,
            transitions,
        })
    }

    /// Build a machine sized for `game`.
    pub fn for_game(
        game: &StageGame,
        player: Player,
        initial: usize,
        outputs: Vec<usize>,
        transitions: Vec<usize>,
    ) -> Result<Self> {
        Machine::from_tables(
            player,
            game.num_actions(player),
            game.num_actions(player.other()),
            initial,
            outputs,
            transitions,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Attach state names; must be distinct and one per state.
    pub fn with_state_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_states() {
            return Err(Error::InvalidMachine("wrong number of state names".into()));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(Error::InvalidMachine("duplicate state names".into()));
        }
        self.state_names = names;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        if self.name.is_empty() {
            "anon"
        } else {
            &self.name
        }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn num_states(&self) -> usize {
        self.outputs.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn num_inputs(&self) -> usize {
        self.opp_actions
    }

    pub fn num_outputs(&self) -> usize {
        self.own_actions
    }

    pub fn output(&self, state: usize) -> usize {
        self.outputs[state]
    }

    pub fn next(&self, state: usize, input: usize) -> usize {
        self.transitions[state * self.opp_actions + input]
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn transitions(&self) -> &[usize] {
        &self.transitions
    }

    pub fn state_name(&self, state: usize) -> Cow<'_, str> {
        match self.state_names.get(state) {
            Some(n) => Cow::Borrowed(n.as_str()),
            None => Cow::Owned(format!("q{state}")),
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        (0..self.num_states()).find(|&q| self.state_name(q) == name)
    }

    /// True if the state maps to itself on every input.
    pub fn is_absorbing(&self, state: usize) -> bool {
        (0..self.opp_actions).all(|a| self.next(state, a) == state)
    }

    /// States reachable from the initial state, in breadth-first discovery
    /// order under the declared input ordering.
    pub fn reachable_states(&self) -> Vec<usize> {
        self.reachable_from(self.initial)
    }

    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![start];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(q) = queue.pop_front() {
            for a in 0..self.opp_actions {
                let t = self.next(q, a);
                if !seen[t] {
                    seen[t] = true;
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        order
    }

    /// Check the machine fits `game` as a strategy for its player.
    pub fn check_alphabet(&self, game: &StageGame) -> Result<()> {
        let own = game.num_actions(self.player);
        let opp = game.num_actions(self.player.other());
        if own != self.own_actions || opp != self.opp_actions {
            return Err(Error::AlphabetMismatch(format!(
                "machine `{}` uses {}x{} actions, game `{}` has {}x{} for player {}",
                self.name(),
                self.own_actions,
                self.opp_actions,
                game.name(),
                own,
                opp,
                self.player
            )));
        }
        Ok(())
    }

    /// Reachable part renumbered in breadth-first discovery order. Two
    /// machines are isomorphic (as initialized automata) iff these agree.
    pub fn bfs_relabel(&self) -> Machine {
        let order = self.reachable_states();
        let mut index = vec![usize::MAX; self.num_states()];
        for (new, &old) in order.iter().enumerate() {
            index[old] = new;
        }
        let outputs = order.iter().map(|&q| self.outputs[q]).collect();
        let transitions = order
            .iter()
            .flat_map(|&q| (0..self.opp_actions).map(move |a| (q, a)))
            .map(|(q, a)| index[self.next(q, a)])
            .collect();
        let mut m = Machine::from_tables(self.player, self.own_actions, self.opp_actions, 0, outputs, transitions)
            .expect("relabelling preserves validity");
        m.name = self.name.clone();
        if !self.state_names.is_empty() {
            m.state_names = order.iter().map(|&q| self.state_names[q].clone()).collect();
        }
        m
    }

    /// Structural isomorphism of the reachable parts, ignoring names.
    pub fn is_isomorphic(&self, other: &Machine) -> bool {
        if self.player != other.player || self.own_actions != other.own_actions || self.opp_actions != other.opp_actions
        {
            return false;
        }
        let a = self.bfs_relabel();
        let b = other.bfs_relabel();
        a.outputs == b.outputs && a.transitions == b.transitions
    }

    /// Parse the machine text format, resolving action labels against `game`.
    pub fn parse(text: &str, game: &StageGame) -> Result<Self> {
        let mut header: Option<(String, Player)> = None;
        let mut start: Option<(usize, String)> = None;
        let mut names: Vec<String> = Vec::new();
        let mut outputs: Vec<usize> = Vec::new();
        let mut edges: Vec<(usize, String, String, String)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let first = words.next().unwrap_or("");
            match first {
                "machine" => {
                    if header.is_some() {
                        return Err(Error::parse(line_no, "duplicate `machine` line"));
                    }
                    let name = words
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "expected `machine <name> player=<1|2>`"))?;
                    let player = words
                        .next()
                        .and_then(|w| w.strip_prefix("player="))
                        .ok_or_else(|| Error::parse(line_no, "expected `player=<1|2>`"))?;
                    let player: Player = player
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("unknown player `{player}`")))?;
                    if words.next().is_some() {
                        return Err(Error::parse(line_no, "trailing tokens after machine header"));
                    }
                    header = Some((name.to_string(), player));
                }
                "start" => {
                    let s = words
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "expected `start <state>`"))?;
                    if start.is_some() {
                        return Err(Error::parse(line_no, "duplicate `start` line"));
                    }
                    start = Some((line_no, s.to_string()));
                }
                "state" => {
                    let (_, player) = header
                        .as_ref()
                        .ok_or_else(|| Error::parse(line_no, "`state` before `machine` header"))?;
                    let s = words
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "expected `state <name> out=<action>`"))?;
                    let out = words
                        .next()
                        .and_then(|w| w.strip_prefix("out="))
                        .ok_or_else(|| Error::parse(line_no, "expected `out=<action>`"))?;
                    if names.iter().any(|n| n == s) {
                        return Err(Error::parse(line_no, format!("duplicate state `{s}`")));
                    }
                    let a = game
                        .action_index(*player, out)
                        .ok_or_else(|| Error::parse(line_no, format!("`{out}` is not an action of player {player}")))?;
                    names.push(s.to_string());
                    outputs.push(a);
                }
                _ => {
                    // `<state> --<action>--> <state>`
                    let rest = line[first.len()..].trim_start();
                    let body = rest
                        .strip_prefix("--")
                        .ok_or_else(|| Error::parse(line_no, format!("unrecognised line `{line}`")))?;
                    let (action, target) = body
                        .split_once("-->")
                        .ok_or_else(|| Error::parse(line_no, "expected `<state> --<action>--> <state>`"))?;
                    let target = target.trim();
                    if target.is_empty() || target.contains(char::is_whitespace) {
                        return Err(Error::parse(line_no, "expected a single target state"));
                    }
                    edges.push((
                        line_no,
                        first.to_string(),
                        action.trim().to_string(),
                        target.to_string(),
                    ));
                }
            }
        }

        let end = text.lines().count().max(1);
        let (name, player) = header.ok_or_else(|| Error::parse(1, "missing `machine` header"))?;
        if names.is_empty() {
            return Err(Error::parse(end, "machine declares no states"));
        }
        let (start_line, start_name) = start.ok_or_else(|| Error::parse(end, "missing `start` line"))?;
        let initial = names
            .iter()
            .position(|n| *n == start_name)
            .ok_or_else(|| Error::parse(start_line, format!("unknown start state `{start_name}`")))?;

        let opp = player.other();
        let n_in = game.num_actions(opp);
        let mut table: Vec<Option<usize>> = vec![None; names.len() * n_in];
        for (line_no, src, action, dst) in edges {
            let s = names
                .iter()
                .position(|n| *n == src)
                .ok_or_else(|| Error::parse(line_no, format!("unknown state `{src}`")))?;
            let t = names
                .iter()
                .position(|n| *n == dst)
                .ok_or_else(|| Error::parse(line_no, format!("unknown state `{dst}`")))?;
            let a = game
                .action_index(opp, &action)
                .ok_or_else(|| Error::parse(line_no, format!("`{action}` is not an action of player {opp}")))?;
            let slot = &mut table[s * n_in + a];
            if slot.is_some() {
                return Err(Error::parse(
                    line_no,
                    format!("duplicate transition for ({src}, {action})"),
                ));
            }
            *slot = Some(t);
        }
        let mut transitions = Vec::with_capacity(table.len());
        for (idx, slot) in table.into_iter().enumerate() {
            match slot {
                Some(t) => transitions.push(t),
                None => {
                    return Err(Error::parse(
                        end,
                        format!(
                            "missing transition for ({}, {})",
                            names[idx / n_in],
                            game.action_label(opp, idx % n_in)
                        ),
                    ))
                }
            }
        }
        let m = Machine::for_game(game, player, initial, outputs, transitions)
            .map_err(|e| Error::parse(end, e.to_string()))?;
        Ok(m.with_name(name).with_state_names(names).expect("names checked unique"))
    }

    /// Render in the machine text format.
    pub fn to_text(&self, game: &StageGame) -> String {
        let opp = self.player.other();
        let mut out = String::new();
        let _ = writeln!(out, "machine {} player={}", self.name(), self.player);
        let _ = writeln!(out, "start {}", self.state_name(self.initial));
        for q in 0..self.num_states() {
            let _ = writeln!(
                out,
                "state {} out={}",
                self.state_name(q),
                game.action_label(self.player, self.outputs[q])
            );
        }
        for q in 0..self.num_states() {
            for a in 0..self.opp_actions {
                let _ = writeln!(
                    out,
                    "{} --{}--> {}",
                    self.state_name(q),
                    game.action_label(opp, a),
                    self.state_name(self.next(q, a))
                );
            }
        }
        out
    }

    /// Graphviz rendering. Threat states are double circles and the initial
    /// state is drawn bold.
    pub fn to_dot(&self, game: &StageGame) -> String {
        let report = classify_states(self, game);
        let opp = self.player.other();
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", self.name());
        let _ = writeln!(out, "  rankdir=LR;");
        for q in 0..self.num_states() {
            let shape = if report.threat_states.contains(&q) {
                "doublecircle"
            } else {
                "circle"
            };
            let bold = if q == self.initial { ", style=bold" } else { "" };
            let _ = writeln!(
                out,
                "  \"{}\" [label=\"{}/{}\", shape={}{}];",
                self.state_name(q),
                self.state_name(q),
                game.action_label(self.player, self.outputs[q]),
                shape,
                bold
            );
        }
        for q in 0..self.num_states() {
            for a in 0..self.opp_actions {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [label=\"{}\"];",
                    self.state_name(q),
                    self.state_name(self.next(q, a)),
                    game.action_label(opp, a)
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

/// State counts behind the three complexity measures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityReport {
    pub total_states: usize,
    pub threat_states: Vec<usize>,
    pub normal_states: Vec<usize>,
    pub normal_transitions: usize,
}

impl ComplexityReport {
    pub fn normal_count(&self) -> usize {
        self.normal_states.len()
    }
}

/// Is `state` a threat state: absorbing, with an output that holds the
/// opponent to their minmax?
pub fn is_threat_state(m: &Machine, game: &StageGame, state: usize) -> bool {
    m.is_absorbing(state) && game.forces_minmax(m.player(), m.output(state))
}

/// Threat/normal split and measures. Unreachable states are counted.
pub fn classify_states(m: &Machine, game: &StageGame) -> ComplexityReport {
    let threat: Vec<bool> = (0..m.num_states()).map(|q| is_threat_state(m, game, q)).collect();
    let normal_states: Vec<usize> = (0..m.num_states()).filter(|&q| !threat[q]).collect();
    let normal_transitions = normal_states
        .iter()
        .map(|&q| (0..m.num_inputs()).filter(|&a| !threat[m.next(q, a)]).count())
        .sum();
    ComplexityReport {
        total_states: m.num_states(),
        threat_states: (0..m.num_states()).filter(|&q| threat[q]).collect(),
        normal_states,
        normal_transitions,
    }
}

/// Named machines for games whose actions include `C` and `D`.
///
/// `grim`: cooperate until the opponent defects, then defect forever.
/// `tft`: copy the opponent's last action. `allc` / `alld`: constant.
pub fn builtin_machine(name: &str, game: &StageGame, player: Player) -> Option<Machine> {
    let c = game.action_index(player, "C")?;
    let d = game.action_index(player, "D")?;
    let oc = game.action_index(player.other(), "C")?;
    let od = game.action_index(player.other(), "D")?;
    let n_in = game.num_actions(player.other());
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let m = match name {
        "allc" | "always-c" => Machine::for_game(game, player, 0, vec![c], vec![0; n_in])
            .ok()?
            .with_state_names(names(&["c"]))
            .ok()?,
        "alld" | "always-d" => Machine::for_game(game, player, 0, vec![d], vec![0; n_in])
            .ok()?
            .with_state_names(names(&["d"]))
            .ok()?,
        "grim" => {
            // Any input other than C trips the trigger.
            let mut t = vec![1; 2 * n_in];
            t[oc] = 0;
            Machine::for_game(game, player, 0, vec![c, d], t)
                .ok()?
                .with_state_names(names(&["g0", "g1"]))
                .ok()?
        }
        "tft" => {
            let mut t = vec![1; 2 * n_in];
            t[oc] = 0;
            t[n_in + oc] = 0;
            let _ = od;
            Machine::for_game(game, player, 0, vec![c, d], t)
                .ok()?
                .with_state_names(names(&["c", "d"]))
                .ok()?
        }
        _ => return None,
    };
    Some(m.with_name(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> StageGame {
        StageGame::prisoners_dilemma()
    }

    #[test]
    fn grim_measures() {
        let g = pd();
        let grim = builtin_machine("grim", &g, Player::One).unwrap();
        let r = classify_states(&grim, &g);
        assert_eq!(r.total_states, 2);
        assert_eq!(r.threat_states, vec![1]);
        assert_eq!(r.normal_count(), 1);
        assert_eq!(r.normal_transitions, 1);
    }

    #[test]
    fn always_c_measures() {
        let g = pd();
        let c = builtin_machine("allc", &g, Player::Two).unwrap();
        let r = classify_states(&c, &g);
        assert_eq!(
            (
                r.total_states,
                r.threat_states.len(),
                r.normal_count(),
                r.normal_transitions
            ),
            (1, 0, 1, 2)
        );
        let d = builtin_machine("alld", &g, Player::Two).unwrap();
        let r = classify_states(&d, &g);
        assert_eq!(
            (r.threat_states.len(), r.normal_count(), r.normal_transitions),
            (1, 0, 0)
        );
    }

    #[test]
    fn unreachable_states_are_counted() {
        let g = pd();
        // grim plus an unreachable cooperative state
        let m = Machine::for_game(&g, Player::One, 0, vec![0, 1, 0], vec![0, 1, 1, 1, 2, 2]).unwrap();
        let r = classify_states(&m, &g);
        assert_eq!(r.total_states, 3);
        assert_eq!(r.normal_count(), 2);
        assert_eq!(m.reachable_states(), vec![0, 1]);
    }

    #[test]
    fn text_round_trip() {
        let g = pd();
        let grim = builtin_machine("grim", &g, Player::Two).unwrap();
        let text = grim.to_text(&g);
        assert!(text.contains("g0 --D--> g1"));
        let back = Machine::parse(&text, &g).unwrap();
        assert_eq!(back, grim);
    }

    #[test]
    fn parse_reports_missing_transition() {
        let g = pd();
        let text = "machine m player=1\nstart a\nstate a out=C\na --C--> a\n";
        match Machine::parse(text, &g) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("(a, D)"), "{message}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_bad_lines() {
        let g = pd();
        let cases = [
            ("machine m player=3\n", 1),
            ("machine m player=1\nstart a\nstate a out=X\n", 3),
            (
                "machine m player=1\nstart a\nstate a out=C\na --C--> b\na --D--> a\n",
                4,
            ),
            (
                "machine m player=1\nstart a\nstate a out=C\na --C--> a\na --C--> a\n",
                5,
            ),
            ("machine m player=1\nstart a\nstate a out=C\na -> a\n", 4),
        ];
        for (text, line) in cases {
            match Machine::parse(text, &g) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("unexpected {other:?} for {text}"),
            }
        }
        // tolerant spacing around the arrow
        let ok = "machine m player=1\nstart a\nstate a out=C\na -- C --> a\na --D-->a\n";
        assert!(Machine::parse(ok, &g).is_ok());
    }

    #[test]
    fn dot_marks_threat_and_start() {
        let g = pd();
        let grim = builtin_machine("grim", &g, Player::One).unwrap();
        let dot = grim.to_dot(&g);
        assert_eq!(dot.matches(" -> ").count(), 4);
        assert!(dot.contains("\"g1\" [label=\"g1/D\", shape=doublecircle]"));
        assert!(dot.contains("\"g0\" [label=\"g0/C\", shape=circle, style=bold]"));
        assert_eq!(dot, grim.to_dot(&g));
    }

    #[test]
    fn isomorphism_ignores_names_and_order() {
        let g = pd();
        let grim = builtin_machine("grim", &g, Player::One).unwrap();
        // same machine with states listed in the other order
        let swapped = Machine::for_game(&g, Player::One, 1, vec![1, 0], vec![0, 0, 1, 0]).unwrap();
        assert!(grim.is_isomorphic(&swapped));
        let tft = builtin_machine("tft", &g, Player::One).unwrap();
        assert!(!grim.is_isomorphic(&tft));
    }
}
