//! Deciding whether every best response to a machine reproduces ⟨σ⟩.
//!
//! Walk the product of machine states and σ-positions along the unique
//! σ-consistent play. The machine must emit σ's other-player actions there,
//! and the play must already earn the best-response value V. Then every
//! off-σ responder action, at every visited (state, position), must land
//! somewhere from which no reachable cycle earns V. Deviations are judged
//! per (state, position) rather than per state, since a state can recur at
//! several positions of σ with different expected inputs.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::game::{Player, Rational, StageGame};
use crate::machine::Machine;
use crate::sequences::ActionSeq;

use super::ResponseGraph;

/// Outcome of the σ-machine test, with a one-line reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaCheck {
    pub holds: bool,
    /// Best-response value against the machine.
    pub value: Rational,
    pub reason: String,
}

pub fn is_sigma_machine(m: &Machine, sigma: &ActionSeq, responder: Player, game: &StageGame) -> Result<SigmaCheck> {
    if responder != m.player().other() {
        return Err(Error::Unsupported(format!(
            "machine `{}` belongs to player {}, so the responder must be player {}",
            m.name(),
            m.player(),
            m.player().other()
        )));
    }
    sigma.check_alphabet(game)?;
    let graph = ResponseGraph::new(m, game)?;
    let value = graph.max_mean_cycle().value;
    let own = m.player();
    let k = sigma.len();
    let fail = |reason: String| SigmaCheck {
        holds: false,
        value,
        reason,
    };

    let sigma_value = sigma.payoff(game).get(responder);
    if sigma_value != value {
        return Ok(fail(format!(
            "following the sequence pays {sigma_value}, best response pays {value}"
        )));
    }

    let mut visited = vec![false; m.num_states() * k];
    let mut product = Vec::new();
    let (mut q, mut p) = (m.initial(), 0);
    while !visited[q * k + p] {
        visited[q * k + p] = true;
        let entry = sigma.get(p + 1);
        if m.output(q) != entry.get(own) {
            return Ok(fail(format!(
                "state {} emits {} at position {}, the sequence has {}",
                m.state_name(q),
                game.action_label(own, m.output(q)),
                p + 1,
                game.action_label(own, entry.get(own))
            )));
        }
        product.push((q, p));
        q = m.next(q, entry.get(responder));
        p = (p + 1) % k;
    }

    let mut reach_value: HashMap<usize, Rational> = HashMap::new();
    for (q, p) in product {
        let expected = sigma.get(p + 1).get(responder);
        for a in (0..m.num_inputs()).filter(|&a| a != expected) {
            let target = m.next(q, a);
            let best = *reach_value.entry(target).or_insert_with(|| graph.max_mean_from(target));
            if best >= value {
                return Ok(fail(format!(
                    "deviating with {} at state {} (position {}) still reaches a cycle worth {}",
                    game.action_label(responder, a),
                    m.state_name(q),
                    p + 1,
                    best
                )));
            }
        }
    }
    Ok(SigmaCheck {
        holds: true,
        value,
        reason: "every deviation from the sequence forfeits the best-response value".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::builtin_machine;
    use crate::sequences::{build_internal_threat_machines, build_sigma_machines};

    fn pd() -> StageGame {
        StageGame::prisoners_dilemma()
    }

    #[test]
    fn constructed_sigma_machines_qualify() {
        let g = pd();
        for text in [
            "(C,C) (D,D)",
            "(C,C) (C,D)",
            "(C,D) (D,D) (D,C)",
            "2*(C,C) 1*(D,D)",
            "(C,C)",
        ] {
            let s = ActionSeq::parse(text, &g).unwrap();
            let (m1, m2) = build_sigma_machines(&s, &g).unwrap();
            assert!(is_sigma_machine(&m2, &s, Player::One, &g).unwrap().holds, "{text}");
            assert!(is_sigma_machine(&m1, &s, Player::Two, &g).unwrap().holds, "{text}");
        }
    }

    #[test]
    fn always_cooperate_is_not() {
        let g = pd();
        let s = ActionSeq::parse("(C,C)", &g).unwrap();
        let c = builtin_machine("allc", &g, Player::Two).unwrap();
        let check = is_sigma_machine(&c, &s, Player::One, &g).unwrap();
        assert!(!check.holds);
        assert_eq!(check.value, Rational::from_integer(3));
    }

    #[test]
    fn internal_threat_machine_tolerates_a_deviation() {
        // Defecting at state 1 of the player-2 machine leaves it in state 1,
        // so the responder can defect once and then rejoin the sequence.
        // Likewise player 2 may cooperate at state 1 of the player-1 machine.
        let g = pd();
        let s = ActionSeq::parse("(C,D) (D,D) (D,C)", &g).unwrap();
        let (m1, m2) = build_internal_threat_machines(1, 1, 1, &g).unwrap();
        let check = is_sigma_machine(&m2, &s, Player::One, &g).unwrap();
        assert!(!check.holds, "{}", check.reason);
        assert!(!is_sigma_machine(&m1, &s, Player::Two, &g).unwrap().holds);
    }

    #[test]
    fn wrong_responder_is_an_error() {
        let g = pd();
        let s = ActionSeq::parse("(C,C)", &g).unwrap();
        let c = builtin_machine("allc", &g, Player::Two).unwrap();
        assert!(is_sigma_machine(&c, &s, Player::Two, &g).is_err());
    }
}
