//! Certificates that cover every machine below a measure value.
//!
//! All of them start from the same situation: the incumbent pair plays ⟨σ⟩
//! from the first step, σ is strictly enforceable, and the opponent's
//! machine forces every best response onto ⟨σ⟩. Then any best response has
//! at least as many played states as the largest set of pairwise
//! incompatible suffix classes, and played states are normal, so the count
//! bounds all three measures from below.

use std::fmt;

use crate::cycles::is_sigma_machine;
use crate::game::{Player, StageGame};
use crate::machine::Machine;
use crate::play::simulate;
use crate::sequences::{incompatibility_clique, is_foolable, is_i_irreducible, is_rigid, ActionSeq};

use super::{Measure, VerdictKind};

/// Which certificate families a check may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CertifyMode {
    /// Every family, plus exhaustive search when the bound is complete.
    #[default]
    Auto,
    Irreducible,
    Rigid,
    Foolable,
    None,
}

impl CertifyMode {
    pub fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "auto" => CertifyMode::Auto,
            "irreducible" => CertifyMode::Irreducible,
            "rigid" => CertifyMode::Rigid,
            "foolable" => CertifyMode::Foolable,
            "none" => CertifyMode::None,
            _ => return None,
        })
    }

    fn classes(self) -> bool {
        self != CertifyMode::None
    }

    fn rigid(self) -> bool {
        matches!(self, CertifyMode::Auto | CertifyMode::Rigid | CertifyMode::Foolable)
    }

    fn foolable(self) -> bool {
        matches!(self, CertifyMode::Auto | CertifyMode::Foolable)
    }

    pub(crate) fn exhaustive(self) -> bool {
        self == CertifyMode::Auto
    }
}

/// Why a player's side of a verdict holds for all machines.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Certificate {
    /// `classes` pairwise incompatible suffix classes force that many
    /// played states on any best response. `irreducible` when all k are.
    Incompatible {
        player: Player,
        classes: usize,
        irreducible: bool,
    },
    /// σ is rigid for `actions`; any Nash deviation plays at least `b`
    /// states with outputs there, plus `rest` states with other outputs.
    Rigid {
        player: Player,
        actions: Vec<String>,
        b: usize,
        rest: usize,
    },
    /// Deviations playing all their states are never at Nash.
    Foolable {
        player: Player,
        offset: usize,
        action: String,
    },
    /// The bounded search covers every machine below the measure value.
    Exhaustive { player: Player, states: usize },
}

impl Certificate {
    pub fn player(&self) -> Player {
        match self {
            Certificate::Incompatible { player, .. }
            | Certificate::Rigid { player, .. }
            | Certificate::Foolable { player, .. }
            | Certificate::Exhaustive { player, .. } => *player,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Certificate::Incompatible { irreducible: true, .. } => "irreducible",
            Certificate::Incompatible { .. } => "incompatible",
            Certificate::Rigid { .. } => "rigid",
            Certificate::Foolable { .. } => "foolable",
            Certificate::Exhaustive { .. } => "exhaustive",
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Incompatible { player, classes, .. } => {
                write!(f, "{}(player={player}, classes={classes})", self.name())
            }
            Certificate::Rigid {
                player,
                actions,
                b,
                rest,
            } => {
                write!(
                    f,
                    "rigid(player={player}, B={{{}}}, b={b}, other={rest})",
                    actions.join(",")
                )
            }
            Certificate::Foolable { player, offset, action } => {
                write!(f, "foolable(player={player}, offset={offset}, s'={action})")
            }
            Certificate::Exhaustive { player, states } => {
                write!(f, "exhaustive(player={player}, states<={states})")
            }
        }
    }
}

/// The sequence the pair plays from step 1, if it is strictly enforceable.
pub(crate) fn incumbent_sequence(m1: &Machine, m2: &Machine, game: &StageGame) -> Option<ActionSeq> {
    let play = simulate(m1, m2).ok()?;
    if !play.preperiod().is_empty() {
        return None;
    }
    let sigma = ActionSeq::new(play.cycle().iter().map(|s| s.actions).collect())
        .ok()?
        .primitive_root();
    sigma.is_strictly_enforceable(game).then_some(sigma)
}

/// Try to cover every deviation of `player` with measure below `mu`.
/// `opponent` is the other player's incumbent machine.
pub(crate) fn certify(
    kind: VerdictKind,
    player: Player,
    opponent: &Machine,
    sigma: &ActionSeq,
    game: &StageGame,
    measure: Measure,
    mu: usize,
    mode: CertifyMode,
) -> Option<Vec<Certificate>> {
    if !mode.classes() || !is_sigma_machine(opponent, sigma, player, game).ok()?.holds {
        return None;
    }
    let classes = incompatibility_clique(sigma, player, |_| true);
    let incompatible = Certificate::Incompatible {
        player,
        classes,
        irreducible: is_i_irreducible(sigma, player),
    };
    if kind == VerdictKind::AbreuRubinstein {
        return (classes >= mu).then(|| vec![incompatible]);
    }

    // Nash deviations: rigidity adds states with outputs in B
    let mut lower = classes;
    let mut certs = vec![incompatible];
    if mode.rigid() {
        let n = game.num_actions(player);
        let mut best: Option<Certificate> = None;
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|a| mask & (1 << a) != 0).collect();
            if !is_rigid(sigma, player, &set, game) {
                continue;
            }
            let b = sigma.entries().iter().filter(|p| set.contains(&p.get(player))).count();
            let rest = incompatibility_clique(sigma, player, |a| !set.contains(&a));
            if b + rest > lower {
                lower = b + rest;
                best = Some(Certificate::Rigid {
                    player,
                    actions: set.iter().map(|&a| game.action_label(player, a).to_string()).collect(),
                    b,
                    rest,
                });
            }
        }
        if let Some(c) = best {
            certs = vec![c];
        }
    }
    if lower >= mu {
        return Some(certs);
    }
    // With |Q| < mu and at least mu - 1 played states, every state is played.
    if mode.foolable() && measure == Measure::TotalStates && lower + 1 >= mu {
        if let Some(w) = is_foolable(sigma, player, game) {
            certs.push(Certificate::Foolable {
                player,
                offset: w.offset,
                action: game.action_label(player.other(), w.action).to_string(),
            });
            return Some(certs);
        }
    }
    None
}
