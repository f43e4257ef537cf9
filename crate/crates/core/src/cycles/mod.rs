//! Paths and cycles inside one machine, and best responses to it.

mod karp;
mod sigma;

pub use sigma::{is_sigma_machine, SigmaCheck};

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::game::{ActionPair, Player, Rational, StageGame};
use crate::machine::Machine;

use karp::{Edge, Mean};

/// A walk `p_1 --a_1--> p_2 ... --a_m--> p_{m+1}` through one machine,
/// where the `a_k` are inputs (opponent actions).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MachinePath {
    states: Vec<usize>,
    inputs: Vec<usize>,
}

impl MachinePath {
    pub fn new(states: Vec<usize>, inputs: Vec<usize>) -> Result<Self> {
        if states.len() != inputs.len() + 1 {
            return Err(Error::InvalidMachine(format!(
                "a path with {} inputs needs {} states, got {}",
                inputs.len(),
                inputs.len() + 1,
                states.len()
            )));
        }
        Ok(MachinePath { states, inputs })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    /// Number of steps m.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn is_cycle(&self) -> bool {
        !self.is_empty() && self.states.first() == self.states.last()
    }

    pub fn is_simple_cycle(&self) -> bool {
        let body = &self.states[..self.states.len() - 1];
        self.is_cycle() && (0..body.len()).all(|a| (a + 1..body.len()).all(|b| body[a] != body[b]))
    }

    /// Every step follows the machine's transition function.
    pub fn follows(&self, m: &Machine) -> bool {
        self.states.iter().all(|&q| q < m.num_states())
            && self.inputs.iter().all(|&a| a < m.num_inputs())
            && (0..self.len()).all(|k| m.next(self.states[k], self.inputs[k]) == self.states[k + 1])
    }

    /// Joint actions along the path.
    pub fn action_pairs<'a>(&'a self, m: &'a Machine) -> impl Iterator<Item = ActionPair> + 'a {
        (0..self.len()).map(move |k| ActionPair::oriented(m.player(), m.output(self.states[k]), self.inputs[k]))
    }

    /// `q1 --a--> q2 --b--> q1`.
    pub fn format(&self, m: &Machine, game: &StageGame) -> String {
        let opp = m.player().other();
        let mut out = m.state_name(self.states[0]).into_owned();
        for k in 0..self.len() {
            let _ = write!(
                out,
                " --{}--> {}",
                game.action_label(opp, self.inputs[k]),
                m.state_name(self.states[k + 1])
            );
        }
        out
    }
}

/// Mean payoff to `player` along a nonempty path of machine `m`.
pub fn path_payoff(m: &Machine, path: &MachinePath, game: &StageGame, player: Player) -> Result<Rational> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    Ok(crate::play::mean_utility(path.action_pairs(m), game, player))
}

/// Split a non-simple cycle at its first repeated state into the inner
/// subcycle and its wrap-around complement. `Ok(None)` means simple.
pub fn subcycle_decompose(cycle: &MachinePath) -> Result<Option<(MachinePath, MachinePath)>> {
    if !cycle.is_cycle() {
        return Err(Error::NotACycle);
    }
    let m = cycle.len();
    let p = &cycle.states;
    let a = &cycle.inputs;
    for hi in 1..m {
        if let Some(lo) = (0..hi).find(|&lo| p[lo] == p[hi]) {
            let inner = MachinePath {
                states: p[lo..=hi].to_vec(),
                inputs: a[lo..hi].to_vec(),
            };
            let mut states = p[hi..m].to_vec();
            states.extend_from_slice(&p[..=lo]);
            let mut inputs = a[hi..].to_vec();
            inputs.extend_from_slice(&a[..lo]);
            return Ok(Some((inner, MachinePath { states, inputs })));
        }
    }
    Ok(None)
}

/// Cycles of `opponent` seen from the responder: one node per reachable
/// opponent state, one edge per responder action.
#[derive(Clone, Debug)]
pub struct ResponseGraph<'a> {
    opponent: &'a Machine,
    game: &'a StageGame,
    responder: Player,
    edges: Vec<Edge>,
}

/// A maximum-mean cycle and its value for both players.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeanCycle {
    /// Responder's mean: the best-response value.
    pub value: Rational,
    /// The opponent's mean on the same cycle.
    pub other_value: Rational,
    /// Path through the opponent machine; its inputs are responder actions.
    pub witness: MachinePath,
}

impl<'a> ResponseGraph<'a> {
    pub fn new(opponent: &'a Machine, game: &'a StageGame) -> Result<Self> {
        opponent.check_alphabet(game)?;
        let responder = opponent.player().other();
        let edges = opponent
            .reachable_states()
            .into_iter()
            .flat_map(|q| (0..opponent.num_inputs()).map(move |a| (q, a)))
            .map(|(q, a)| {
                let pair = ActionPair::oriented(responder, a, opponent.output(q));
                Edge {
                    from: q,
                    to: opponent.next(q, a),
                    label: a,
                    w: [
                        game.scaled_utility(responder, pair),
                        game.scaled_utility(responder.other(), pair),
                    ],
                }
            })
            .collect();
        Ok(ResponseGraph {
            opponent,
            game,
            responder,
            edges,
        })
    }

    pub fn responder(&self) -> Player {
        self.responder
    }

    fn n(&self) -> usize {
        self.opponent.num_states()
    }

    fn to_rational(&self, m: Mean) -> Rational {
        Rational::new(m.num, m.den * self.game.scale())
    }

    fn active_from(&self, start: usize) -> Vec<bool> {
        let mut reach = vec![false; self.n()];
        for q in self.opponent.reachable_from(start) {
            reach[q] = true;
        }
        self.edges.iter().map(|e| reach[e.from]).collect()
    }

    /// Maximum responder mean over cycles reachable from the opponent's
    /// initial state, with a deterministic witness: among maximal cycles,
    /// one best for the opponent, then the lexicographically smallest.
    pub fn max_mean_cycle(&self) -> MeanCycle {
        let n = self.n();
        let all = vec![true; self.edges.len()];
        let v = karp::max_cycle_mean(n, &self.edges, &all, 0).expect("every node has an out-edge");
        let crit = karp::critical_edges(n, &self.edges, &all, 0, v);
        let v2 = karp::max_cycle_mean(n, &self.edges, &crit, 1).expect("critical subgraph has a cycle");
        let crit2 = karp::critical_edges(n, &self.edges, &crit, 1, v2);
        let cycle = karp::lex_min_cycle(n, &self.edges, &crit2).expect("critical subgraph has a cycle");
        let mut states = vec![self.edges[cycle[0]].from];
        states.extend(cycle.iter().map(|&i| self.edges[i].to));
        let inputs = cycle.iter().map(|&i| self.edges[i].label).collect();
        MeanCycle {
            value: self.to_rational(v),
            other_value: self.to_rational(v2),
            witness: MachinePath { states, inputs },
        }
    }

    /// Best responder mean over cycles reachable from opponent state `start`.
    pub fn max_mean_from(&self, start: usize) -> Rational {
        let active = self.active_from(start);
        let v = karp::max_cycle_mean(self.n(), &self.edges, &active, 0).expect("every node has an out-edge");
        self.to_rational(v)
    }
}

/// The best payoff any machine can earn against `opponent`.
pub fn best_response_value(opponent: &Machine, game: &StageGame) -> Result<Rational> {
    Ok(ResponseGraph::new(opponent, game)?.max_mean_cycle().value)
}

/// A machine for the other player that walks a shortest path into a
/// maximum-mean cycle of `opponent` and then loops on it, ignoring input.
pub fn construct_best_response(opponent: &Machine, game: &StageGame) -> Result<Machine> {
    let graph = ResponseGraph::new(opponent, game)?;
    let best = graph.max_mean_cycle();
    let on_cycle = |q: usize| best.witness.states[..best.witness.len()].contains(&q);

    // breadth-first search over responder actions in declared order
    let n = opponent.num_states();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let start = opponent.initial();
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut entry = None;
    while let Some(q) = queue.pop_front() {
        if on_cycle(q) {
            entry = Some(q);
            break;
        }
        for a in 0..opponent.num_inputs() {
            let t = opponent.next(q, a);
            if !seen[t] {
                seen[t] = true;
                parent[t] = Some((q, a));
                queue.push_back(t);
            }
        }
    }
    let entry = entry.expect("the witness cycle is reachable");
    let mut path_actions = Vec::new();
    let mut q = entry;
    while let Some((p, a)) = parent[q] {
        path_actions.push(a);
        q = p;
    }
    path_actions.reverse();

    let w = &best.witness;
    let rot = (0..w.len()).find(|&k| w.states[k] == entry).expect("entry on cycle");
    let cycle_actions: Vec<usize> = (0..w.len()).map(|k| w.inputs[(rot + k) % w.len()]).collect();

    let lead = path_actions.len();
    let total = lead + cycle_actions.len();
    let outputs: Vec<usize> = path_actions.into_iter().chain(cycle_actions).collect();
    let responder = graph.responder();
    let n_in = game.num_actions(responder.other());
    let transitions = (0..total)
        .flat_map(|s| {
            let next = if s + 1 == total { lead } else { s + 1 };
            std::iter::repeat_n(next, n_in)
        })
        .collect();
    Ok(Machine::for_game(game, responder, 0, outputs, transitions)?.with_name("br"))
}
