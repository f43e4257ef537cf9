//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls the library's search or cycle code: the oracles
//! recompute from the raw tables so that agreement means something.

#![allow(dead_code)]

use std::collections::HashSet;

use leanfa::game::{ActionPair, PayoffProfile, Player, Rational, StageGame};
use leanfa::Machine;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn pd() -> StageGame {
    StageGame::prisoners_dilemma()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Cycle budget from `LEANFA_BUDGET`, default one million.
pub fn cycle_budget() -> usize {
    std::env::var("LEANFA_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1_000_000)
}

/// Best mean for the responder over every simple cycle of the response
/// graph of `opp` that is reachable from its initial state. `None` if the
/// cycle budget runs out.
pub fn simple_cycle_max(opp: &Machine, game: &StageGame) -> Option<Rational> {
    let responder = opp.player().other();
    let n = opp.num_states();
    let reach: HashSet<usize> = {
        let mut seen = HashSet::from([opp.initial()]);
        let mut stack = vec![opp.initial()];
        while let Some(q) = stack.pop() {
            for a in 0..opp.num_inputs() {
                let t = opp.next(q, a);
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    };
    let gain = |q: usize, a: usize| game.utility(responder, ActionPair::oriented(responder, a, opp.output(q)));
    let mut best: Option<Rational> = None;
    let mut budget = cycle_budget();

    // cycles are rooted at their smallest state
    for root in (0..n).filter(|q| reach.contains(q)) {
        let mut path: Vec<(usize, usize)> = Vec::new();
        let mut on_path = vec![false; n];
        on_path[root] = true;
        fn walk(
            q: usize,
            root: usize,
            opp: &Machine,
            on_path: &mut Vec<bool>,
            path: &mut Vec<(usize, usize)>,
            gain: &dyn Fn(usize, usize) -> Rational,
            best: &mut Option<Rational>,
            budget: &mut usize,
        ) -> bool {
            for a in 0..opp.num_inputs() {
                let t = opp.next(q, a);
                path.push((q, a));
                if t == root {
                    if *budget == 0 {
                        return false;
                    }
                    *budget -= 1;
                    let sum: Rational = path.iter().map(|&(s, b)| gain(s, b)).sum();
                    let mean = sum / Rational::from_integer(path.len() as i64);
                    if best.is_none_or(|b| mean > b) {
                        *best = Some(mean);
                    }
                } else if t > root && !on_path[t] {
                    on_path[t] = true;
                    if !walk(t, root, opp, on_path, path, gain, best, budget) {
                        return false;
                    }
                    on_path[t] = false;
                }
                path.pop();
            }
            true
        }
        if !walk(root, root, opp, &mut on_path, &mut path, &gain, &mut best, &mut budget) {
            return None;
        }
    }
    best
}

/// Step-by-step replay of the pair for `t` steps.
pub fn naive_play(m1: &Machine, m2: &Machine, t: usize) -> Vec<([usize; 2], ActionPair)> {
    let (mut a, mut b) = (m1.initial(), m2.initial());
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        let s = ActionPair(m1.output(a), m2.output(b));
        out.push(([a, b], s));
        (a, b) = (m1.next(a, s.1), m2.next(b, s.0));
    }
    out
}

pub fn random_machine(rng: &mut ChaCha8Rng, game: &StageGame, player: Player, states: usize) -> Machine {
    let (own, opp) = (game.num_actions(player), game.num_actions(player.other()));
    let outputs = (0..states).map(|_| rng.gen_range(0..own)).collect();
    let transitions = (0..states * opp).map(|_| rng.gen_range(0..states)).collect();
    Machine::for_game(game, player, 0, outputs, transitions).unwrap()
}

pub fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    Rational::new(rng.gen_range(-6..=6), rng.gen_range(1..=4))
}

/// Random game with `n1 x n2` actions and small rational payoffs.
pub fn random_game(rng: &mut ChaCha8Rng, n1: usize, n2: usize) -> StageGame {
    let labels = |n: usize, p: char| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let table = (0..n1 * n2)
        .map(|_| PayoffProfile::new(random_rational(rng), random_rational(rng)))
        .collect();
    StageGame::new("random", labels(n1, 'a'), labels(n2, 'b'), table).unwrap()
}

/// Naive structural isomorphism: try every bijection fixing the initial
/// state.
pub fn naive_isomorphic(a: &Machine, b: &Machine) -> bool {
    let n = a.num_states();
    if n != b.num_states() || a.num_inputs() != b.num_inputs() {
        return false;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        p[a.initial()] == b.initial()
            && (0..n).all(|q| {
                a.output(q) == b.output(p[q]) && (0..a.num_inputs()).all(|x| p[a.next(q, x)] == b.next(p[q], x))
            })
    })
}

fn permutations(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if k == p.len() {
        return f(p);
    }
    for i in k..p.len() {
        p.swap(k, i);
        if permutations(p, k + 1, f) {
            p.swap(k, i);
            return true;
        }
        p.swap(k, i);
    }
    false
}

/// Every machine with at most `max_states` states, all reachable from state
/// 0, no two absorbing states with one output, and at most `max_threats`
/// absorbing states with a minmax-forcing output; one per isomorphism class.
pub fn naive_enumeration(player: Player, game: &StageGame, max_states: usize, max_threats: usize) -> Vec<Machine> {
    let (own, opp) = (game.num_actions(player), game.num_actions(player.other()));
    let mut kept: Vec<Machine> = Vec::new();
    for n in 1..=max_states {
        let cells = n + n * opp;
        let radix: Vec<usize> = (0..cells).map(|c| if c < n { own } else { n }).collect();
        let mut digits = vec![0usize; cells];
        loop {
            let m = Machine::for_game(game, player, 0, digits[..n].to_vec(), digits[n..].to_vec()).unwrap();
            if acceptable(&m, game, max_threats) && !kept.iter().any(|k| naive_isomorphic(k, &m)) {
                kept.push(m);
            }
            // odometer
            let mut i = 0;
            while i < cells {
                digits[i] += 1;
                if digits[i] < radix[i] {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == cells {
                break;
            }
        }
    }
    kept
}

fn acceptable(m: &Machine, game: &StageGame, max_threats: usize) -> bool {
    if m.reachable_states().len() != m.num_states() {
        return false;
    }
    let absorbing: Vec<usize> = (0..m.num_states()).filter(|&q| m.is_absorbing(q)).collect();
    let outs: HashSet<usize> = absorbing.iter().map(|&q| m.output(q)).collect();
    let threats = absorbing
        .iter()
        .filter(|&&q| game.forces_minmax(m.player(), m.output(q)))
        .count();
    outs.len() == absorbing.len() && threats <= max_threats
}
