//! Induced play of a machine pair: ultimately periodic state and action
//! sequences, limit-of-means payoffs and time-point partitions.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::game::{ActionPair, PayoffProfile, Player, Rational, StageGame};
use crate::machine::Machine;

/// An ultimately periodic sequence `pre, cycle, cycle, ...`, indexed from 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Periodic<T> {
    pre: Vec<T>,
    cycle: Vec<T>,
}

impl<T: Clone + Eq> Periodic<T> {
    pub fn new(pre: Vec<T>, cycle: Vec<T>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(Periodic { pre, cycle })
    }

    /// Pure repetition of `cycle` from time 1.
    pub fn repeat(cycle: Vec<T>) -> Result<Self> {
        Periodic::new(Vec::new(), cycle)
    }

    pub fn preperiod(&self) -> &[T] {
        &self.pre
    }

    pub fn cycle(&self) -> &[T] {
        &self.cycle
    }

    /// `|pre| + |cycle|`: every time point reduces to one in `1..=horizon`.
    pub fn horizon(&self) -> usize {
        self.pre.len() + self.cycle.len()
    }

    /// Representative in `1..=horizon` of time point `t >= 1`.
    pub fn reduce(&self, t: usize) -> usize {
        assert!(t >= 1, "time points start at 1");
        let n = self.pre.len();
        if t <= self.horizon() {
            t
        } else {
            n + 1 + (t - n - 1) % self.cycle.len()
        }
    }

    /// Element at time `t >= 1`.
    pub fn at(&self, t: usize) -> &T {
        let t = self.reduce(t);
        if t <= self.pre.len() {
            &self.pre[t - 1]
        } else {
            &self.cycle[t - self.pre.len() - 1]
        }
    }

    /// Partition of `1..=horizon` by the value at each time.
    pub fn value_partition(&self) -> Partition
    where
        T: std::hash::Hash,
    {
        self.partition_by(|t| self.at(t).clone())
    }

    /// Partition of `1..=horizon` by equality of the whole future from each
    /// time. Comparing `horizon` steps suffices: after `|pre|` steps both
    /// suffixes are inside the periodic part, and one full period of
    /// agreement there means agreement forever.
    pub fn suffix_partition(&self) -> Partition
    where
        T: std::hash::Hash,
    {
        let h = self.horizon();
        self.partition_by(|t| (0..h).map(|n| self.at(t + n).clone()).collect::<Vec<_>>())
    }

    fn partition_by<K: std::hash::Hash + Eq>(&self, key: impl Fn(usize) -> K) -> Partition {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let classes = (1..=self.horizon())
            .map(|t| {
                let next = ids.len();
                *ids.entry(key(t)).or_insert(next)
            })
            .collect();
        Partition {
            pre: self.pre.len(),
            classes,
        }
    }

    pub fn map<U: Clone + Eq>(&self, f: impl Fn(&T) -> U) -> Periodic<U> {
        Periodic {
            pre: self.pre.iter().map(&f).collect(),
            cycle: self.cycle.iter().map(&f).collect(),
        }
    }
}

/// A partition of the time points `1..=H` of a periodic sequence, extended
/// to all `t > H` through the period. Class ids follow first appearance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    pre: usize,
    classes: Vec<usize>,
}

impl Partition {
    pub fn horizon(&self) -> usize {
        self.classes.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.iter().max().map_or(0, |m| m + 1)
    }

    /// Class id of any time point `t >= 1`.
    pub fn class_of(&self, t: usize) -> usize {
        assert!(t >= 1, "time points start at 1");
        let h = self.horizon();
        let t = if t <= h {
            t
        } else {
            let p = h - self.pre;
            self.pre + 1 + (t - self.pre - 1) % p
        };
        self.classes[t - 1]
    }

    pub fn same(&self, t1: usize, t2: usize) -> bool {
        self.class_of(t1) == self.class_of(t2)
    }

    /// Time points of each class, 1-based, in class-id order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &c) in self.classes.iter().enumerate() {
            out[c].push(i + 1);
        }
        out
    }

    /// True if every class of `self` lies inside a class of `other`.
    /// Both partitions must be over the same horizon.
    pub fn refines(&self, other: &Partition) -> bool {
        assert_eq!(self.horizon(), other.horizon(), "partitions over different horizons");
        let mut image: HashMap<usize, usize> = HashMap::new();
        self.classes
            .iter()
            .zip(&other.classes)
            .all(|(&a, &b)| *image.entry(a).or_insert(b) == b)
    }

    /// Common refinement.
    pub fn intersect(&self, other: &Partition) -> Partition {
        assert_eq!(self.horizon(), other.horizon(), "partitions over different horizons");
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let classes = self
            .classes
            .iter()
            .zip(&other.classes)
            .map(|(&a, &b)| {
                let next = ids.len();
                *ids.entry((a, b)).or_insert(next)
            })
            .collect();
        Partition { pre: self.pre, classes }
    }

    /// Same grouping of time points, ignoring class ids.
    pub fn same_as(&self, other: &Partition) -> bool {
        self.refines(other) && other.refines(self)
    }
}

/// Which relation on time points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    /// Equal action-pair futures.
    Suffix,
    /// Equal state pairs.
    StatePair,
    /// Equal state of one player.
    Own(Player),
}

/// One time step: the state pair and the action pair it produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub states: [usize; 2],
    pub actions: ActionPair,
}

/// The play induced by a machine pair, as a minimal preperiod and cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventualPlay {
    steps: Periodic<Step>,
}

/// Run `m1` (player 1) against `m2` (player 2) until a state pair repeats.
pub fn simulate(m1: &Machine, m2: &Machine) -> Result<EventualPlay> {
    if m1.player() != Player::One || m2.player() != Player::Two {
        return Err(Error::AlphabetMismatch(format!(
            "expected a player-1 and a player-2 machine, got players {} and {}",
            m1.player(),
            m2.player()
        )));
    }
    if m1.num_outputs() != m2.num_inputs() || m2.num_outputs() != m1.num_inputs() {
        return Err(Error::AlphabetMismatch(format!(
            "machine `{}` plays {} actions and reads {}, machine `{}` plays {} and reads {}",
            m1.name(),
            m1.num_outputs(),
            m1.num_inputs(),
            m2.name(),
            m2.num_outputs(),
            m2.num_inputs()
        )));
    }
    let mut seen = vec![usize::MAX; m1.num_states() * m2.num_states()];
    let mut steps = Vec::new();
    let (mut q1, mut q2) = (m1.initial(), m2.initial());
    loop {
        let key = q1 * m2.num_states() + q2;
        if seen[key] != usize::MAX {
            let start = seen[key];
            let cycle = steps.split_off(start);
            let steps = Periodic::new(steps, cycle).expect("a repeat closes a nonempty cycle");
            return Ok(EventualPlay { steps });
        }
        seen[key] = steps.len();
        let actions = ActionPair(m1.output(q1), m2.output(q2));
        steps.push(Step {
            states: [q1, q2],
            actions,
        });
        (q1, q2) = (m1.next(q1, actions.1), m2.next(q2, actions.0));
    }
}

impl EventualPlay {
    pub fn steps(&self) -> &Periodic<Step> {
        &self.steps
    }

    pub fn preperiod(&self) -> &[Step] {
        self.steps.preperiod()
    }

    pub fn cycle(&self) -> &[Step] {
        self.steps.cycle()
    }

    pub fn horizon(&self) -> usize {
        self.steps.horizon()
    }

    /// Step at time `t >= 1`.
    pub fn at(&self, t: usize) -> &Step {
        self.steps.at(t)
    }

    /// The action sequence `(s^t)`.
    pub fn actions(&self) -> Periodic<ActionPair> {
        self.steps.map(|s| s.actions)
    }

    /// Exact limit-of-means payoff: the average over the cycle.
    pub fn limit_mean_payoff(&self, game: &StageGame) -> PayoffProfile {
        mean_payoff(self.cycle().iter().map(|s| s.actions), game)
    }

    /// Average payoff over the first `t` steps.
    ///
    /// # Panics
    /// If `t == 0`.
    pub fn finite_mean_payoff(&self, game: &StageGame, t: usize) -> PayoffProfile {
        assert!(t >= 1, "finite mean needs at least one step");
        mean_payoff((1..=t).map(|k| self.at(k).actions), game)
    }

    /// States of `player` that occur anywhere in the play.
    pub fn played_states(&self, player: Player) -> BTreeSet<usize> {
        let cycle = self.cycle();
        self.preperiod()
            .iter()
            .chain(cycle)
            .map(|s| s.states[player.index()])
            .collect()
    }

    /// States of `player` that occur infinitely often.
    pub fn recurrent_states(&self, player: Player) -> BTreeSet<usize> {
        self.cycle().iter().map(|s| s.states[player.index()]).collect()
    }

    pub fn partition(&self, which: Relation) -> Partition {
        match which {
            Relation::Suffix => self.actions().suffix_partition(),
            Relation::StatePair => self.steps.map(|s| s.states).value_partition(),
            Relation::Own(p) => self.steps.map(|s| s.states[p.index()]).value_partition(),
        }
    }

    /// Human-readable listing of a slice of steps.
    pub fn format_steps(steps: &[Step], m1: &Machine, m2: &Machine, game: &StageGame) -> String {
        let mut out = String::new();
        for (i, s) in steps.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(
                out,
                "[{},{}]{}",
                m1.state_name(s.states[0]),
                m2.state_name(s.states[1]),
                format_pair(s.actions, game)
            );
        }
        out
    }
}

/// `(a1,a2)` with the game's labels.
pub fn format_pair(pair: ActionPair, game: &StageGame) -> String {
    format!(
        "({},{})",
        game.action_label(Player::One, pair.0),
        game.action_label(Player::Two, pair.1)
    )
}

/// Exact mean payoff profile of a nonempty run of action pairs.
pub(crate) fn mean_payoff(pairs: impl Iterator<Item = ActionPair>, game: &StageGame) -> PayoffProfile {
    let mut sums = [0i64; 2];
    let mut len = 0usize;
    for pair in pairs {
        sums[0] += game.scaled_utility(Player::One, pair);
        sums[1] += game.scaled_utility(Player::Two, pair);
        len += 1;
    }
    assert!(len > 0, "mean of an empty run");
    PayoffProfile::new(game.scaled_mean(sums[0], len), game.scaled_mean(sums[1], len))
}

/// Exact mean of one player's payoff over a nonempty run.
pub(crate) fn mean_utility(pairs: impl Iterator<Item = ActionPair>, game: &StageGame, player: Player) -> Rational {
    let mut sum = 0i64;
    let mut len = 0usize;
    for pair in pairs {
        sum += game.scaled_utility(player, pair);
        len += 1;
    }
    assert!(len > 0, "mean of an empty run");
    game.scaled_mean(sum, len)
}
