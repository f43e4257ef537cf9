//! Nash, Abreu-Rubinstein and lean equilibrium checks for machine pairs.

mod certificate;
mod enumerate;

pub use certificate::{Certificate, CertifyMode};
pub use enumerate::{budget_from_env, enumerate_machines, enumerate_machines_within, SearchBound, DEFAULT_BUDGET};

use std::fmt;
use std::fmt::Write as _;

use crate::cycles::{best_response_value, construct_best_response};
use crate::error::{Error, Result};
use crate::game::{format_rational, Player, Rational, StageGame};
use crate::machine::{classify_states, Machine};
use crate::par::Execution;
use crate::play::simulate;

use enumerate::Space;

/// Strategy complexity measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    /// |Q|: all states.
    TotalStates,
    /// |R|: normal (non-threat) states.
    NormalStates,
    /// ||δ||: transitions between normal states.
    NormalTransitions,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::TotalStates, Measure::NormalStates, Measure::NormalTransitions];

    /// `Q`, `R` or `delta`.
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "Q" | "q" => Some(Measure::TotalStates),
            "R" | "r" => Some(Measure::NormalStates),
            "delta" | "d" => Some(Measure::NormalTransitions),
            _ => None,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Measure::TotalStates => "Q",
            Measure::NormalStates => "R",
            Measure::NormalTransitions => "delta",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::TotalStates => "|Q|",
            Measure::NormalStates => "|R|",
            Measure::NormalTransitions => "||delta||",
        })
    }
}

/// Measure of a machine as given, unreachable states included.
pub fn measure(m: &Machine, game: &StageGame, which: Measure) -> usize {
    let r = classify_states(m, game);
    match which {
        Measure::TotalStates => r.total_states,
        Measure::NormalStates => r.normal_count(),
        Measure::NormalTransitions => r.normal_transitions,
    }
}

/// Reachable part with duplicate absorbing states merged, relabelled in
/// breadth-first order. Behaviour is unchanged and no measure grows.
pub fn canonicalize(m: &Machine) -> Machine {
    let m = m.bfs_relabel();
    let n = m.num_states();
    let mut rep: Vec<usize> = (0..n).collect();
    for q in 0..n {
        if m.is_absorbing(q) {
            if let Some(r) = (0..q).find(|&r| m.is_absorbing(r) && m.output(r) == m.output(q)) {
                rep[q] = r;
            }
        }
    }
    if rep.iter().enumerate().all(|(q, &r)| q == r) {
        return m;
    }
    let transitions = m.transitions().iter().map(|&t| rep[t]).collect();
    let merged = Machine::from_tables(
        m.player(),
        m.num_outputs(),
        m.num_inputs(),
        m.initial(),
        m.outputs().to_vec(),
        transitions,
    )
    .expect("merging keeps tables valid")
    .with_name(m.name().to_string());
    merged.bfs_relabel()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Nash,
    AbreuRubinstein,
    Lean,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Nash => "nash",
            VerdictKind::AbreuRubinstein => "ar",
            VerdictKind::Lean => "lean",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Holds,
    Fails,
    /// No counterexample within the search bound, and no certificate.
    HoldsWithinBound,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Holds => "holds",
            Outcome::Fails => "fails",
            Outcome::HoldsWithinBound => "holds-within-bound",
        })
    }
}

/// A deviating machine for one player.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub player: Player,
    pub machine: Machine,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub outcome: Outcome,
    pub measure: Option<Measure>,
    pub bound: Option<SearchBound>,
    pub witness: Option<Witness>,
    pub certificates: Vec<Certificate>,
    /// Some search ran out of budget.
    pub truncated: bool,
    /// Complete candidates examined by the searches.
    pub examined: usize,
    pub notes: Vec<String>,
}

impl Verdict {
    fn new(kind: VerdictKind, measure: Option<Measure>, bound: Option<SearchBound>) -> Self {
        Verdict {
            kind,
            outcome: Outcome::Holds,
            measure,
            bound,
            witness: None,
            certificates: Vec::new(),
            truncated: false,
            examined: 0,
            notes: Vec::new(),
        }
    }

    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }

    pub fn fails(&self) -> bool {
        self.outcome == Outcome::Fails
    }

    /// `key: value` report; the witness follows in machine text format.
    pub fn report(&self, game: &StageGame) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind: {}", self.kind);
        let _ = writeln!(out, "result: {}", self.outcome);
        if let Some(m) = self.measure {
            let _ = writeln!(out, "measure: {m}");
        }
        if let Some(b) = self.bound {
            let _ = writeln!(out, "bound: {b}");
        }
        if self.bound.is_some() {
            let _ = writeln!(out, "examined: {}", self.examined);
        }
        if self.truncated {
            let _ = writeln!(out, "truncated: yes");
        }
        for c in &self.certificates {
            let _ = writeln!(out, "certificate: {c}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        if let Some(w) = &self.witness {
            let _ = writeln!(out, "witness-player: {}", w.player);
            let _ = writeln!(out, "witness:");
            out.push_str(&w.machine.to_text(game));
        }
        out
    }
}

/// Options shared by the searching checks.
#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// `None` picks the default bound for the pair.
    pub bound: Option<SearchBound>,
    pub certify: CertifyMode,
    pub exec: Execution,
    pub budget: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            bound: None,
            certify: CertifyMode::Auto,
            exec: Execution::default(),
            budget: budget_from_env(),
        }
    }
}

impl CheckOptions {
    pub fn with_bound(mut self, bound: SearchBound) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn with_certify(mut self, mode: CertifyMode) -> Self {
        self.certify = mode;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }
}

/// Number of own actions of `player` that hold the opponent to minmax.
fn forcing_count(game: &StageGame, player: Player) -> usize {
    game.forcing_actions(player).len()
}

/// Incumbent measure + 2 states (larger of the two players), and as many
/// threat states as there are minmax-forcing outputs.
pub fn default_bound(m1: &Machine, m2: &Machine, game: &StageGame, which: Measure) -> SearchBound {
    let mu = measure(m1, game, which).max(measure(m2, game, which));
    let threats = Player::BOTH.iter().map(|&p| forcing_count(game, p)).max().unwrap_or(0);
    SearchBound::new(mu + 2, threats)
}

/// Does the bound reach every canonical machine of `player` with measure
/// below `mu`? Canonical machines have at most one threat state per
/// forcing output, and |R| <= ||delta|| + 1 when all states are reachable.
fn bound_is_complete(bound: SearchBound, game: &StageGame, player: Player, which: Measure, mu: usize) -> bool {
    let f = forcing_count(game, player);
    if bound.max_threat_states < f {
        return false;
    }
    if mu == 0 {
        return true;
    }
    let needed = match which {
        Measure::TotalStates => mu - 1,
        Measure::NormalStates => mu - 1 + f,
        Measure::NormalTransitions => mu + f,
    };
    bound.max_total_states >= needed
}

fn ordered<'a>(player: Player, own: &'a Machine, other: &'a Machine) -> (&'a Machine, &'a Machine) {
    match player {
        Player::One => (own, other),
        Player::Two => (other, own),
    }
}

/// Player `own.player()`'s limit-of-means payoff against `other`.
fn payoff_of(own: &Machine, other: &Machine, game: &StageGame) -> Result<Rational> {
    let (m1, m2) = ordered(own.player(), own, other);
    Ok(simulate(m1, m2)?.limit_mean_payoff(game).get(own.player()))
}

fn check_pair(m1: &Machine, m2: &Machine, game: &StageGame) -> Result<()> {
    if m1.player() != Player::One || m2.player() != Player::Two {
        return Err(Error::AlphabetMismatch(
            "expected a player-1 machine and a player-2 machine".into(),
        ));
    }
    m1.check_alphabet(game)?;
    m2.check_alphabet(game)
}

/// Does `m_i` earn the best-response value against `m_j`?
pub fn is_best_response(m_i: &Machine, m_j: &Machine, game: &StageGame) -> Result<bool> {
    m_i.check_alphabet(game)?;
    Ok(payoff_of(m_i, m_j, game)? == best_response_value(m_j, game)?)
}

pub fn is_nash(m1: &Machine, m2: &Machine, game: &StageGame) -> Result<Verdict> {
    check_pair(m1, m2, game)?;
    let mut v = Verdict::new(VerdictKind::Nash, None, None);
    let w = simulate(m1, m2)?.limit_mean_payoff(game);
    for (player, other) in [(Player::One, m2), (Player::Two, m1)] {
        let best = best_response_value(other, game)?;
        let got = w.get(player);
        if got < best {
            v.outcome = Outcome::Fails;
            v.notes.push(format!(
                "player {player} earns {} but can earn {}",
                format_rational(&got),
                format_rational(&best)
            ));
            v.witness = Some(Witness {
                player,
                machine: construct_best_response(other, game)?,
            });
            return Ok(v);
        }
    }
    v.notes
        .push(format!("payoff {} {}", format_rational(&w.p1), format_rational(&w.p2)));
    Ok(v)
}

/// First canonical machine for `player`, with measure below `mu`, that is
/// a best response to `other` (and, with `keep_nash`, leaves `other` a best
/// response to it).
fn find_deviation(
    player: Player,
    other: &Machine,
    game: &StageGame,
    which: Measure,
    mu: usize,
    keep_nash: bool,
    bound: SearchBound,
    opts: &CheckOptions,
) -> Result<enumerate::Found<Machine>> {
    let target = best_response_value(other, game)?;
    let space = Space::new(player, game, bound, Some((which, mu)));
    let found = space.find_first(opts.exec, opts.budget, |cand| {
        if measure(cand, game, which) >= mu {
            return None;
        }
        let (m1, m2) = ordered(player, cand, other);
        let play = simulate(m1, m2).ok()?;
        let w = play.limit_mean_payoff(game);
        if w.get(player) != target {
            return None;
        }
        if keep_nash && w.get(player.other()) != best_response_value(cand, game).ok()? {
            return None;
        }
        Some(cand.clone())
    });
    Ok(found)
}

fn search_check(
    kind: VerdictKind,
    m1: &Machine,
    m2: &Machine,
    game: &StageGame,
    which: Measure,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let nash = is_nash(m1, m2, game)?;
    let bound = opts.bound.unwrap_or_else(|| default_bound(m1, m2, game, which));
    let mut v = Verdict::new(kind, Some(which), Some(bound));
    if nash.fails() {
        v.outcome = Outcome::Fails;
        v.witness = nash.witness;
        v.notes.push("not a Nash equilibrium".into());
        v.notes.extend(nash.notes);
        return Ok(v);
    }
    let sigma = certificate::incumbent_sequence(m1, m2, game);
    let mut within_bound = false;
    for (player, own, other) in [(Player::One, m1, m2), (Player::Two, m2, m1)] {
        let mu = measure(own, game, which);
        if let Some(sigma) = &sigma {
            if let Some(certs) = certificate::certify(kind, player, other, sigma, game, which, mu, opts.certify) {
                v.certificates.extend(certs);
                continue;
            }
        }
        let found = find_deviation(player, other, game, which, mu, kind == VerdictKind::Lean, bound, opts)?;
        v.examined += found.examined;
        let truncated = found.truncated;
        if let Some(machine) = found.value {
            v.outcome = Outcome::Fails;
            v.notes.push(format!(
                "player {player} has a deviation with {which} = {} < {mu}{}",
                measure(&machine, game, which),
                if kind == VerdictKind::Lean {
                    " keeping Nash"
                } else {
                    " that is still a best response"
                }
            ));
            v.witness = Some(Witness { player, machine });
            v.certificates.clear();
            return Ok(v);
        }
        v.truncated |= truncated;
        if !truncated && opts.certify.exhaustive() && bound_is_complete(bound, game, player, which, mu) {
            v.certificates.push(Certificate::Exhaustive {
                player,
                states: bound.max_total_states,
            });
        } else {
            within_bound = true;
        }
    }
    if within_bound {
        v.outcome = Outcome::HoldsWithinBound;
    }
    Ok(v)
}

/// Nash, and no strictly simpler machine is still a best response.
pub fn is_abreu_rubinstein(
    m1: &Machine,
    m2: &Machine,
    game: &StageGame,
    which: Measure,
    opts: &CheckOptions,
) -> Result<Verdict> {
    search_check(VerdictKind::AbreuRubinstein, m1, m2, game, which, opts)
}

/// Nash, and no strictly simpler machine keeps the pair at Nash.
pub fn is_lean(m1: &Machine, m2: &Machine, game: &StageGame, which: Measure, opts: &CheckOptions) -> Result<Verdict> {
    search_check(VerdictKind::Lean, m1, m2, game, which, opts)
}

/// Replace machines by strictly simpler ones that keep the pair at Nash
/// until none is left. Each step tries the canonical form of the current
/// machine first, then searches by measure value and canonical order.
pub fn simplify_to_lean(
    m1: &Machine,
    m2: &Machine,
    game: &StageGame,
    which: Measure,
    opts: &CheckOptions,
) -> Result<(Machine, Machine)> {
    if !is_nash(m1, m2, game)?.holds() {
        return Err(Error::NotNash);
    }
    let mut pair = [m1.clone(), m2.clone()];
    loop {
        let mut changed = false;
        for player in Player::BOTH {
            let (own, other) = (&pair[player.index()], &pair[player.other().index()]);
            let mu = measure(own, game, which);
            let canon = canonicalize(own);
            if measure(&canon, game, which) < mu {
                pair[player.index()] = canon;
                changed = true;
                continue;
            }
            let bound = opts
                .bound
                .unwrap_or_else(|| default_bound(&pair[0], &pair[1], game, which));
            for value in 0..mu {
                if let Some(m) = find_deviation(player, other, game, which, value + 1, true, bound, opts)?.value {
                    pair[player.index()] = m;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            let [a, b] = pair;
            return Ok((a, b));
        }
    }
}

/// AR implies lean at the same bound.
pub fn ar_implies_lean(
    m1: &Machine,
    m2: &Machine,
    game: &StageGame,
    which: Measure,
    opts: &CheckOptions,
) -> Result<bool> {
    let ar = is_abreu_rubinstein(m1, m2, game, which, opts)?;
    if ar.fails() {
        return Ok(true);
    }
    Ok(!is_lean(m1, m2, game, which, opts)?.fails())
}
