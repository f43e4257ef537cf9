//! Structural properties of pairs at lean equilibrium, and inferring the
//! machines from the action sequence alone.
//!
//! None of the validators assume their hypotheses. Each one reports whether
//! the payoff profile is strictly enforceable next to its verdict, so a
//! failed check on an enforceable pair refutes leanness.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::equilibrium::Measure;
use crate::error::{Error, Result};
use crate::game::{format_rational, Player, StageGame};
use crate::machine::{is_threat_state, Machine};
use crate::play::{simulate, EventualPlay, Partition, Relation};

fn enforceable(play: &EventualPlay, game: &StageGame) -> bool {
    game.is_strictly_enforceable(&play.limit_mean_payoff(game))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// The first state revisited later, and whether it recurs for both players.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneInfinity {
    pub enforceable: bool,
    /// Smallest `u` such that some player's state at `u` is used again.
    pub u: usize,
    pub states: [usize; 2],
    /// `states[i]` occurs infinitely often.
    pub recurrent: [bool; 2],
}

impl OneInfinity {
    pub fn holds(&self) -> bool {
        self.recurrent.iter().all(|&r| r)
    }

    pub fn report(&self, m1: &Machine, m2: &Machine) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "check: one-infinity");
        let _ = writeln!(out, "enforceable: {}", yes(self.enforceable));
        let _ = writeln!(out, "u: {}", self.u);
        for (i, m) in [m1, m2].into_iter().enumerate() {
            let _ = writeln!(
                out,
                "state{}: {} recurrent={}",
                i + 1,
                m.state_name(self.states[i]),
                yes(self.recurrent[i])
            );
        }
        let _ = writeln!(out, "result: {}", if self.holds() { "holds" } else { "violated" });
        out
    }
}

pub fn check_one_infinity(m1: &Machine, m2: &Machine, game: &StageGame) -> Result<OneInfinity> {
    let play = simulate(m1, m2)?;
    let h = play.horizon();
    // a state used after t shows up again within one more horizon
    let revisited = |t: usize, i: usize| {
        let q = play.at(t).states[i];
        (t + 1..=t + h).any(|s| play.at(s).states[i] == q)
    };
    let u = (1..=h)
        .find(|&t| revisited(t, 0) || revisited(t, 1))
        .expect("cycle states recur");
    let states = play.at(u).states;
    let recurrent = [0, 1].map(|i| play.cycle().iter().any(|s| s.states[i] == states[i]));
    Ok(OneInfinity {
        enforceable: enforceable(&play, game),
        u,
        states,
        recurrent,
    })
}

/// Measure values against played-state counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counting {
    pub enforceable: bool,
    pub measure: Measure,
    pub values: [usize; 2],
    pub played: [usize; 2],
}

impl Counting {
    pub fn holds(&self) -> bool {
        let v = self.values[0];
        self.values[1] == v && self.played.iter().all(|&p| p == v)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "check: counting");
        let _ = writeln!(out, "enforceable: {}", yes(self.enforceable));
        let _ = writeln!(out, "measure: {}", self.measure);
        let _ = writeln!(out, "values: {} {}", self.values[0], self.values[1]);
        let _ = writeln!(out, "played: {} {}", self.played[0], self.played[1]);
        let _ = writeln!(out, "result: {}", if self.holds() { "holds" } else { "violated" });
        out
    }
}

/// Under `|R|` or `||delta||`, both measure values should equal both
/// played-state counts.
pub fn check_counting(m1: &Machine, m2: &Machine, game: &StageGame, which: Measure) -> Result<Counting> {
    if which == Measure::TotalStates {
        return Err(Error::Unsupported("counting applies to |R| and ||delta|| only".into()));
    }
    let play = simulate(m1, m2)?;
    let values = [m1, m2].map(|m| crate::equilibrium::measure(m, game, which));
    let played = Player::BOTH.map(|p| play.played_states(p).len());
    Ok(Counting {
        enforceable: enforceable(&play, game),
        measure: which,
        values,
        played,
    })
}

/// The four time-point partitions of a play.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relations {
    pub enforceable: bool,
    pub suffix: Partition,
    pub state_pair: Partition,
    pub own: [Partition; 2],
}

impl Relations {
    pub fn all_equal(&self) -> bool {
        self.suffix.same_as(&self.state_pair) && self.own.iter().all(|p| p.same_as(&self.suffix))
    }

    /// Own-state relation of `player` is contained in the suffix relation.
    pub fn own_within_suffix(&self, player: Player) -> bool {
        self.own[player.index()].refines(&self.suffix)
    }

    /// Containment in the suffix relation already forces equality.
    pub fn containment_gives_equality(&self, player: Player) -> bool {
        !self.own_within_suffix(player) || self.own[player.index()].same_as(&self.suffix)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "check: relations");
        let _ = writeln!(out, "enforceable: {}", yes(self.enforceable));
        for (name, p) in [
            ("suffix", &self.suffix),
            ("state-pair", &self.state_pair),
            ("own1", &self.own[0]),
            ("own2", &self.own[1]),
        ] {
            let _ = writeln!(out, "{name}: {}", format_partition(p));
        }
        for p in Player::BOTH {
            let _ = writeln!(
                out,
                "contained{p}: {} equal{p}: {}",
                yes(self.own_within_suffix(p)),
                yes(self.own[p.index()].same_as(&self.suffix))
            );
        }
        let _ = writeln!(out, "result: {}", if self.all_equal() { "holds" } else { "violated" });
        out
    }
}

/// `{1,3} {2}` style listing of the classes on the horizon.
pub fn format_partition(p: &Partition) -> String {
    p.members()
        .iter()
        .map(|c| format!("{{{}}}", c.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn check_relation_equalities(m1: &Machine, m2: &Machine, game: &StageGame) -> Result<Relations> {
    let play = simulate(m1, m2)?;
    Ok(Relations {
        enforceable: enforceable(&play, game),
        suffix: play.partition(Relation::Suffix),
        state_pair: play.partition(Relation::StatePair),
        own: Player::BOTH.map(|p| play.partition(Relation::Own(p))),
    })
}

/// Normal successor chain of a machine whose reachable normal states each
/// have exactly one normal successor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoDecomposition {
    pub successor: BTreeMap<usize, usize>,
    /// States on the cycle of the chain from the initial state.
    pub head: Vec<usize>,
    /// States before it.
    pub tail: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rho {
    Rho(RhoDecomposition),
    /// `state` has `normal_successors` normal out-transitions.
    NotRho {
        state: usize,
        normal_successors: usize,
    },
}

impl Rho {
    pub fn is_rho(&self) -> bool {
        matches!(self, Rho::Rho(_))
    }

    pub fn report(&self, m: &Machine) -> String {
        let names = |qs: &[usize]| {
            qs.iter()
                .map(|&q| m.state_name(q).into_owned())
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Rho::Rho(d) => format!(
                "rho: yes\nhead: {} ({})\ntail: {} ({})\n",
                d.head.len(),
                names(&d.head),
                d.tail.len(),
                names(&d.tail)
            ),
            Rho::NotRho {
                state,
                normal_successors,
            } => format!(
                "rho: no\nstate: {} has {normal_successors} normal transitions\n",
                m.state_name(*state)
            ),
        }
    }
}

/// Counts normal transitions out of each reachable normal state (one per
/// input, so parallel edges to the same state count separately).
pub fn rho_decompose(m: &Machine, game: &StageGame) -> Rho {
    let threat: Vec<bool> = (0..m.num_states()).map(|q| is_threat_state(m, game, q)).collect();
    let mut successor = BTreeMap::new();
    for q in m.reachable_states().into_iter().filter(|&q| !threat[q]) {
        let normal: Vec<usize> = (0..m.num_inputs())
            .map(|a| m.next(q, a))
            .filter(|&t| !threat[t])
            .collect();
        if normal.len() != 1 {
            return Rho::NotRho {
                state: q,
                normal_successors: normal.len(),
            };
        }
        successor.insert(q, normal[0]);
    }
    let mut chain = Vec::new();
    let mut q = m.initial();
    if !threat[q] {
        while !chain.contains(&q) {
            chain.push(q);
            q = successor[&q];
        }
    }
    let split = chain.iter().position(|&s| s == q).unwrap_or(chain.len());
    let head = chain.split_off(split);
    Rho::Rho(RhoDecomposition {
        successor,
        head,
        tail: chain,
    })
}

/// Machine structure read off the action sequence: one state per suffix
/// class, emitting the player's action there and moving to the class of
/// the next time point on the opponent's action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferredSkeleton {
    pub player: Player,
    pub outputs: Vec<usize>,
    /// `(class, opponent action) -> class`.
    pub edges: BTreeMap<(usize, usize), usize>,
}

impl InferredSkeleton {
    pub fn num_states(&self) -> usize {
        self.outputs.len()
    }

    pub fn to_text(&self, game: &StageGame) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "skeleton player={} states={}", self.player, self.num_states());
        for (c, &o) in self.outputs.iter().enumerate() {
            let _ = writeln!(out, "state c{} out={}", c + 1, game.action_label(self.player, o));
        }
        for (&(c, a), &t) in &self.edges {
            let _ = writeln!(
                out,
                "c{} --{}--> c{}",
                c + 1,
                game.action_label(self.player.other(), a),
                t + 1
            );
        }
        out
    }

    /// Is this the played part of `m` in `play`, up to renaming? Only states
    /// visited and transitions taken along the play are compared.
    pub fn matches_played(&self, m: &Machine, play: &EventualPlay) -> bool {
        let i = self.player.index();
        let suffix = play.partition(Relation::Suffix);
        let h = play.horizon();
        let mut to_state: BTreeMap<usize, usize> = BTreeMap::new();
        let mut to_class: BTreeMap<usize, usize> = BTreeMap::new();
        let mut played_edges = BTreeMap::new();
        for t in 1..=h {
            let (c, q) = (suffix.class_of(t), play.at(t).states[i]);
            if *to_state.entry(c).or_insert(q) != q || *to_class.entry(q).or_insert(c) != c {
                return false;
            }
            if m.output(q) != self.outputs[c] {
                return false;
            }
            let a = play.at(t).actions.get(self.player.other());
            played_edges.insert((q, a), play.at(t + 1).states[i]);
        }
        if to_state.len() != self.num_states() || played_edges.len() != self.edges.len() {
            return false;
        }
        self.edges
            .iter()
            .all(|(&(c, a), &t)| played_edges.get(&(to_state[&c], a)) == Some(&to_state[&t]))
    }
}

/// One skeleton per player. Fails if a suffix class has two different
/// continuations, which would mean the partition is not the suffix relation.
pub fn infer_machines(play: &EventualPlay) -> Result<[InferredSkeleton; 2]> {
    let suffix = play.partition(Relation::Suffix);
    let h = play.horizon();
    let build = |player: Player| -> Result<InferredSkeleton> {
        let mut outputs = vec![usize::MAX; suffix.num_classes()];
        let mut edges = BTreeMap::new();
        for t in 1..=h {
            let c = suffix.class_of(t);
            let s = play.at(t).actions;
            if outputs[c] != usize::MAX && outputs[c] != s.get(player) {
                return Err(Error::InvalidMachine(format!("class of time {t} emits two actions")));
            }
            outputs[c] = s.get(player);
            let next = suffix.class_of(t + 1);
            if *edges.entry((c, s.get(player.other()))).or_insert(next) != next {
                return Err(Error::InvalidMachine(format!("class of time {t} has two successors")));
            }
        }
        Ok(InferredSkeleton { player, outputs, edges })
    };
    Ok([build(Player::One)?, build(Player::Two)?])
}

/// Every structural validator on one pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureAudit {
    pub enforceable: bool,
    pub payoff: String,
    pub one_infinity: bool,
    pub counting_r: bool,
    pub counting_delta: bool,
    pub relations: bool,
    pub rho: [bool; 2],
    pub head_tail: [(usize, usize); 2],
    pub inferred: bool,
}

impl StructureAudit {
    /// Checks expected of a pair lean under `||delta||`.
    pub fn passes_delta(&self) -> bool {
        self.one_infinity && self.counting_delta && self.relations && self.rho.iter().all(|&r| r) && self.inferred
    }

    /// Checks expected of a pair lean under `|R|`.
    pub fn passes_r(&self) -> bool {
        self.one_infinity && self.counting_r
    }

    /// One greppable line.
    pub fn line(&self) -> String {
        format!(
            "enforceable={} payoff={} one-inf={} count-R={} count-delta={} relations={} rho={},{} head-tail={}/{},{}/{} infer={}",
            yes(self.enforceable),
            self.payoff,
            yes(self.one_infinity),
            yes(self.counting_r),
            yes(self.counting_delta),
            yes(self.relations),
            yes(self.rho[0]),
            yes(self.rho[1]),
            self.head_tail[0].0,
            self.head_tail[0].1,
            self.head_tail[1].0,
            self.head_tail[1].1,
            yes(self.inferred)
        )
    }
}

pub fn audit_structure(m1: &Machine, m2: &Machine, game: &StageGame) -> Result<StructureAudit> {
    let play = simulate(m1, m2)?;
    let w = play.limit_mean_payoff(game);
    let rhos = [rho_decompose(m1, game), rho_decompose(m2, game)];
    let head_tail = rhos.clone().map(|r| match r {
        Rho::Rho(d) => (d.head.len(), d.tail.len()),
        Rho::NotRho { .. } => (0, 0),
    });
    let inferred = infer_machines(&play)
        .map(|[s1, s2]| s1.matches_played(m1, &play) && s2.matches_played(m2, &play))
        .unwrap_or(false);
    Ok(StructureAudit {
        enforceable: game.is_strictly_enforceable(&w),
        payoff: format!("{},{}", format_rational(&w.p1), format_rational(&w.p2)),
        one_infinity: check_one_infinity(m1, m2, game)?.holds(),
        counting_r: check_counting(m1, m2, game, Measure::NormalStates)?.holds(),
        counting_delta: check_counting(m1, m2, game, Measure::NormalTransitions)?.holds(),
        relations: check_relation_equalities(m1, m2, game)?.all_equal(),
        rho: rhos.map(|r| r.is_rho()),
        head_tail,
        inferred,
    })
}
