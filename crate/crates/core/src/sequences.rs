//! Finite action sequences and the combinatorial predicates on them.

use std::fmt;

use crate::error::{Error, Result};
use crate::game::{format_rational, ActionPair, PayoffProfile, Player, StageGame};
use crate::machine::Machine;
use crate::play::{format_pair, mean_payoff, Periodic};

/// A nonempty finite sequence σ of action pairs, repeated forever as ⟨σ⟩.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActionSeq {
    entries: Vec<ActionPair>,
}

impl ActionSeq {
    pub fn new(entries: Vec<ActionPair>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(ActionSeq { entries })
    }

    /// Concatenate `count` copies of each pair in turn.
    pub fn blocks(blocks: &[(usize, ActionPair)]) -> Result<Self> {
        ActionSeq::new(blocks.iter().flat_map(|&(n, p)| std::iter::repeat_n(p, n)).collect())
    }

    /// Parse whitespace-separated terms `N*(a1,a2)` or `(a1,a2)`.
    pub fn parse(text: &str, game: &StageGame) -> Result<Self> {
        let mut entries = Vec::new();
        for term in text.split_whitespace() {
            let bad = || Error::parse(1, format!("bad sequence term `{term}`"));
            let (count, pair) = match term.split_once('*') {
                Some((n, rest)) => (n.parse::<usize>().map_err(|_| bad())?, rest),
                None => (1, term),
            };
            if count == 0 {
                return Err(Error::parse(1, format!("zero repetition in `{term}`")));
            }
            let inner = pair
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(bad)?;
            let (a, b) = inner.split_once(',').ok_or_else(bad)?;
            let a1 = game
                .action_index(Player::One, a.trim())
                .ok_or_else(|| Error::parse(1, format!("`{}` is not an action of player 1", a.trim())))?;
            let a2 = game
                .action_index(Player::Two, b.trim())
                .ok_or_else(|| Error::parse(1, format!("`{}` is not an action of player 2", b.trim())))?;
            entries.extend(std::iter::repeat_n(ActionPair(a1, a2), count));
        }
        ActionSeq::new(entries)
    }

    /// Run-length text form, e.g. `2*(C,C) 1*(D,D)`.
    pub fn format(&self, game: &StageGame) -> String {
        let mut terms = Vec::new();
        let mut i = 0;
        while i < self.entries.len() {
            let mut j = i;
            while j < self.entries.len() && self.entries[j] == self.entries[i] {
                j += 1;
            }
            terms.push(format!("{}*{}", j - i, format_pair(self.entries[i], game)));
            i = j;
        }
        terms.join(" ")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[ActionPair] {
        &self.entries
    }

    /// σ^n for `1 <= n <= k`.
    pub fn get(&self, n: usize) -> ActionPair {
        self.entries[n - 1]
    }

    pub fn payoff(&self, game: &StageGame) -> PayoffProfile {
        mean_payoff(self.entries.iter().copied(), game)
    }

    pub fn is_strictly_enforceable(&self, game: &StageGame) -> bool {
        game.is_strictly_enforceable(&self.payoff(game))
    }

    /// σ^n .. σ^k σ^1 .. σ^{n-1}, for `1 <= n <= k`.
    pub fn rotation(&self, offset: usize) -> ActionSeq {
        assert!((1..=self.len()).contains(&offset), "rotation offset out of range");
        let mut entries = self.entries[offset - 1..].to_vec();
        entries.extend_from_slice(&self.entries[..offset - 1]);
        ActionSeq { entries }
    }

    /// ⟨σ⟩ as a periodic sequence.
    pub fn periodic(&self) -> Periodic<ActionPair> {
        Periodic::repeat(self.entries.clone()).expect("nonempty")
    }

    /// Shortest τ with ⟨τ⟩ = ⟨σ⟩.
    pub fn primitive_root(&self) -> ActionSeq {
        let k = self.len();
        let p = (1..=k)
            .find(|&p| k.is_multiple_of(p) && (p..k).all(|t| self.entries[t] == self.entries[t - p]))
            .expect("k itself is a period");
        ActionSeq {
            entries: self.entries[..p].to_vec(),
        }
    }

    pub fn check_alphabet(&self, game: &StageGame) -> Result<()> {
        let (n1, n2) = (game.num_actions(Player::One), game.num_actions(Player::Two));
        if self.entries.iter().any(|p| p.0 >= n1 || p.1 >= n2) {
            return Err(Error::AlphabetMismatch(format!(
                "sequence uses actions outside game `{}`",
                game.name()
            )));
        }
        Ok(())
    }

    fn not_enforceable(&self, game: &StageGame) -> Error {
        let w = self.payoff(game);
        Error::NotEnforceable {
            p1: format_rational(&w.p1),
            p2: format_rational(&w.p2),
            v1: format_rational(&game.minmax(Player::One)),
            v2: format_rational(&game.minmax(Player::Two)),
        }
    }
}

/// Are `t1` and `t2` i-incompatible in `seq`: is there an offset where the
/// i-actions differ while the j-actions agreed at every earlier offset?
pub fn i_incompatible(seq: &Periodic<ActionPair>, t1: usize, t2: usize, i: Player) -> bool {
    let j = i.other();
    for m in 0..seq.horizon() {
        let (a, b) = (*seq.at(t1 + m), *seq.at(t2 + m));
        if a.get(i) != b.get(i) {
            return true;
        }
        if a.get(j) != b.get(j) {
            return false;
        }
    }
    false
}

/// Every two distinct positions of σ are i-incompatible in ⟨σ⟩.
pub fn is_i_irreducible(sigma: &ActionSeq, i: Player) -> bool {
    let seq = sigma.periodic();
    let k = sigma.len();
    (1..=k).all(|t1| (t1 + 1..=k).all(|t2| i_incompatible(&seq, t1, t2, i)))
}

/// Size of a largest set of pairwise i-incompatible suffix classes of ⟨σ⟩,
/// among classes whose i-action satisfies `keep`. Any pair of machines that
/// plays ⟨σ⟩ uses at least this many distinct i-states at such times.
pub fn incompatibility_clique(sigma: &ActionSeq, i: Player, keep: impl Fn(usize) -> bool) -> usize {
    let seq = sigma.periodic();
    let classes = seq.suffix_partition().members();
    let reps: Vec<usize> = classes
        .iter()
        .map(|c| c[0])
        .filter(|&t| keep(seq.at(t).get(i)))
        .collect();
    let n = reps.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| a != b && i_incompatible(&seq, reps[a], reps[b], i))
                .collect()
        })
        .collect();
    max_clique(&adj)
}

fn max_clique(adj: &[Vec<bool>]) -> usize {
    fn grow(adj: &[Vec<bool>], size: usize, candidates: Vec<usize>, best: &mut usize) {
        if candidates.is_empty() {
            *best = (*best).max(size);
            return;
        }
        if size + candidates.len() <= *best {
            return;
        }
        for (idx, &v) in candidates.iter().enumerate() {
            let next = candidates[idx + 1..].iter().copied().filter(|&w| adj[v][w]).collect();
            grow(adj, size + 1, next, best);
        }
    }
    let mut best = 0;
    grow(adj, 0, (0..adj.len()).collect(), &mut best);
    best
}

/// A rotation and prefix length breaking (i,B)-rigidity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RigidityViolation {
    pub offset: usize,
    pub n: usize,
}

/// First (rotation offset, prefix length n) whose prefix mean for j equals
/// r_j(σ) although ρ_i^1 and ρ_i^{n+1} both lie in `b`.
pub fn rigidity_counterexample(
    sigma: &ActionSeq,
    i: Player,
    b: &[usize],
    game: &StageGame,
) -> Option<RigidityViolation> {
    let j = i.other();
    let k = sigma.len() as i64;
    let total: i64 = sigma.entries.iter().map(|&p| game.scaled_utility(j, p)).sum();
    for offset in 1..=sigma.len() {
        let rho = sigma.rotation(offset);
        let mut prefix = 0i64;
        for n in 1..sigma.len() {
            prefix += game.scaled_utility(j, rho.get(n));
            let ends_in_b = b.contains(&rho.get(1).get(i)) && b.contains(&rho.get(n + 1).get(i));
            if ends_in_b && prefix * k == total * n as i64 {
                return Some(RigidityViolation { offset, n });
            }
        }
    }
    None
}

pub fn is_rigid(sigma: &ActionSeq, i: Player, b: &[usize], game: &StageGame) -> bool {
    rigidity_counterexample(sigma, i, b, game).is_none()
}

/// A rotation offset and a j-action s' fooling player i.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoolingWitness {
    pub offset: usize,
    pub action: usize,
}

/// Search rotations, then j-actions, for a witness that every tail
/// ρ^n .. ρ^{k-1} ρ' of the rotation pays j strictly more than r_j(σ).
pub fn is_foolable(sigma: &ActionSeq, i: Player, game: &StageGame) -> Option<FoolingWitness> {
    let j = i.other();
    let k = sigma.len();
    let total: i64 = sigma.entries.iter().map(|&p| game.scaled_utility(j, p)).sum();
    for offset in 1..=k {
        let rho = sigma.rotation(offset);
        'action: for s in 0..game.num_actions(j) {
            let last = ActionPair::oriented(i, rho.get(k).get(i), s);
            // tails share ρ'; accumulate from the back
            let mut sum = game.scaled_utility(j, last);
            for n in (1..=k).rev() {
                if n < k {
                    sum += game.scaled_utility(j, rho.get(n));
                }
                let len = (k - n + 1) as i64;
                if sum * k as i64 <= total * len {
                    continue 'action;
                }
            }
            return Some(FoolingWitness { offset, action: s });
        }
    }
    None
}

/// The canonical pair of σ-machines: states `1..k` follow σ and any
/// deviation sends the machine to an absorbing threat state `T`.
pub fn build_sigma_machines(sigma: &ActionSeq, game: &StageGame) -> Result<(Machine, Machine)> {
    sigma.check_alphabet(game)?;
    if !sigma.is_strictly_enforceable(game) {
        return Err(sigma.not_enforceable(game));
    }
    let k = sigma.len();
    let mut names: Vec<String> = (1..=k).map(|n| n.to_string()).collect();
    names.push("T".into());
    let build = |i: Player| -> Result<Machine> {
        let j = i.other();
        let n_in = game.num_actions(j);
        let threat = game.forcing_actions(i)[0];
        let mut outputs: Vec<usize> = sigma.entries.iter().map(|p| p.get(i)).collect();
        outputs.push(threat);
        let mut transitions = vec![k; (k + 1) * n_in];
        for n in 0..k {
            transitions[n * n_in + sigma.entries[n].get(j)] = (n + 1) % k;
        }
        Machine::for_game(game, i, 0, outputs, transitions)?
            .with_name(format!("sigma{i}"))
            .with_state_names(names.clone())
    };
    Ok((build(Player::One)?, build(Player::Two)?))
}

/// Internal-threat machines for σ = k_cd·(C,D), k_dd·(D,D), k_dc·(D,C):
/// a j-defection where cooperation was due sends machine i back to the
/// first state of its own block where j cooperates.
pub fn build_internal_threat_machines(
    k_cd: usize,
    k_dd: usize,
    k_dc: usize,
    game: &StageGame,
) -> Result<(Machine, Machine)> {
    let label = |p: Player, l: &str| {
        game.action_index(p, l)
            .ok_or_else(|| Error::Unsupported(format!("internal-threat machines need action `{l}` for player {p}")))
    };
    let (c1, d1, c2, d2) = (
        label(Player::One, "C")?,
        label(Player::One, "D")?,
        label(Player::Two, "C")?,
        label(Player::Two, "D")?,
    );
    if k_cd == 0 || k_dd == 0 || k_dc == 0 {
        return Err(Error::Unsupported("block lengths must be positive".into()));
    }
    let sigma = ActionSeq::blocks(&[
        (k_cd, ActionPair(c1, d2)),
        (k_dd, ActionPair(d1, d2)),
        (k_dc, ActionPair(d1, c2)),
    ])?;
    if !sigma.is_strictly_enforceable(game) {
        return Err(sigma.not_enforceable(game));
    }
    let k = sigma.len();
    let names: Vec<String> = (1..=k).map(|n| n.to_string()).collect();
    let build = |i: Player, home: usize| -> Result<Machine> {
        let j = i.other();
        let (cj, dj) = if j == Player::One { (c1, d1) } else { (c2, d2) };
        let n_in = game.num_actions(j);
        let outputs = sigma.entries.iter().map(|p| p.get(i)).collect();
        let mut transitions = vec![0; k * n_in];
        for n in 0..k {
            let next = (n + 1) % k;
            for a in 0..n_in {
                transitions[n * n_in + a] = next;
            }
            if sigma.entries[n].get(j) == cj {
                transitions[n * n_in + dj] = home;
            }
        }
        Machine::for_game(game, i, 0, outputs, transitions)?
            .with_name(format!("internal{i}"))
            .with_state_names(names.clone())
    };
    Ok((build(Player::One, k_cd + k_dd)?, build(Player::Two, 0)?))
}

impl fmt::Display for RigidityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rotation offset {}, n={}", self.offset, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Rational;
    use crate::machine::classify_states;
    use crate::play::simulate;

    fn pd() -> StageGame {
        StageGame::prisoners_dilemma()
    }

    fn seq(text: &str) -> ActionSeq {
        ActionSeq::parse(text, &pd()).unwrap()
    }

    #[test]
    fn payoffs_and_enforceability() {
        let g = pd();
        assert_eq!(seq("(C,C) (D,D)").payoff(&g), PayoffProfile::integers(1, 1));
        assert_eq!(
            seq("(C,C) (C,D)").payoff(&g),
            PayoffProfile::new(Rational::new(1, 2), Rational::new(5, 2))
        );
        let s = seq("(C,D) (D,D) (D,C)");
        assert_eq!(
            s.payoff(&g),
            PayoffProfile::new(Rational::new(2, 3), Rational::new(2, 3))
        );
        assert!(s.is_strictly_enforceable(&g));
        assert!(!seq("(D,D)").is_strictly_enforceable(&g));
    }

    #[test]
    fn parse_and_format() {
        let g = pd();
        let s = seq("2*(C,C) 1*(D,D)");
        assert_eq!(s.len(), 3);
        assert_eq!(s.format(&g), "2*(C,C) 1*(D,D)");
        assert!(ActionSeq::parse("", &g).is_err());
        assert!(ActionSeq::parse("0*(C,C)", &g).is_err());
        assert!(ActionSeq::parse("(C,X)", &g).is_err());
        assert_eq!(seq("(C,C) (C,C)").primitive_root().len(), 1);
    }

    #[test]
    fn incompatibility() {
        let p = |s: &str| seq(s).periodic();
        assert!(i_incompatible(&p("(C,C) (D,D)"), 1, 2, Player::One));
        assert!(!i_incompatible(&p("(C,C) (C,D)"), 1, 2, Player::One));
        assert!(i_incompatible(&p("(C,C) (C,D)"), 1, 2, Player::Two));
    }

    #[test]
    fn irreducibility() {
        for text in ["(C,C) (D,D)", "2*(C,C) 1*(D,D)", "1*(C,C) 2*(D,D)", "3*(C,C) 2*(D,D)"] {
            let s = seq(text);
            assert!(is_i_irreducible(&s, Player::One), "{text}");
            assert!(is_i_irreducible(&s, Player::Two), "{text}");
        }
        let s = seq("(C,C) (C,D)");
        assert!(!is_i_irreducible(&s, Player::One));
        assert!(is_i_irreducible(&s, Player::Two));
        assert!(is_i_irreducible(&seq("(C,C)"), Player::One));
        assert!(!is_i_irreducible(&seq("(C,C) (C,C)"), Player::One));
    }

    #[test]
    fn cliques() {
        let s = seq("(C,C) (C,D)");
        assert_eq!(incompatibility_clique(&s, Player::One, |_| true), 1);
        assert_eq!(incompatibility_clique(&s, Player::Two, |_| true), 2);
        let s = seq("(C,D) (D,D) (D,C)");
        assert_eq!(incompatibility_clique(&s, Player::One, |a| a == 0), 1);
    }

    #[test]
    fn rigidity() {
        let g = pd();
        assert!(is_rigid(&seq("(C,C) (C,D)"), Player::One, &[0], &g));
        assert!(is_rigid(&seq("2*(C,C) 1*(C,D)"), Player::One, &[0], &g));
        assert!(is_rigid(&seq("(C,D) (D,D) (D,C)"), Player::One, &[1], &g));
        assert_eq!(
            rigidity_counterexample(&seq("(C,C) (C,C)"), Player::One, &[0], &g),
            Some(RigidityViolation { offset: 1, n: 1 })
        );
    }

    #[test]
    fn foolability() {
        let g = pd();
        let d = 1;
        assert_eq!(
            is_foolable(&seq("(C,C) (D,D)"), Player::One, &g),
            Some(FoolingWitness { offset: 2, action: d })
        );
        assert_eq!(
            is_foolable(&seq("(C,C) (C,D)"), Player::One, &g),
            Some(FoolingWitness { offset: 2, action: d })
        );
        assert_eq!(is_foolable(&seq("(D,D)"), Player::One, &g), None);
        // rotation N_CD·(C,D), N_CC·(C,C) with s' = D fools player 2
        let w = is_foolable(&seq("(C,C) (C,D)"), Player::Two, &g).unwrap();
        assert_eq!(w.action, d);
    }

    #[test]
    fn sigma_machines() {
        let g = pd();
        let s = seq("(C,C) (D,D)");
        let (m1, m2) = build_sigma_machines(&s, &g).unwrap();
        assert_eq!(m1.num_states(), 3);
        let r = classify_states(&m1, &g);
        assert_eq!(
            (r.threat_states.clone(), r.normal_count(), r.normal_transitions),
            (vec![2], 2, 2)
        );
        let play = simulate(&m1, &m2).unwrap();
        assert!(play.preperiod().is_empty());
        assert_eq!(play.actions().cycle(), s.entries());

        let (m1, _) = build_sigma_machines(&seq("(C,C) (C,D)"), &g).unwrap();
        assert_eq!(m1.outputs(), &[0, 0, 1]);

        let (m1, m2) = build_sigma_machines(&seq("(C,C)"), &g).unwrap();
        let grim1 = crate::machine::builtin_machine("grim", &g, Player::One).unwrap();
        let grim2 = crate::machine::builtin_machine("grim", &g, Player::Two).unwrap();
        assert!(m1.is_isomorphic(&grim1) && m2.is_isomorphic(&grim2));

        assert!(matches!(
            build_sigma_machines(&seq("(D,D)"), &g),
            Err(Error::NotEnforceable { .. })
        ));
    }

    #[test]
    fn internal_threat() {
        let g = pd();
        let (m1, m2) = build_internal_threat_machines(1, 1, 1, &g).unwrap();
        assert_eq!((m1.num_states(), m2.num_states()), (3, 3));
        assert_eq!((m1.next(2, 0), m1.next(2, 1)), (0, 2));
        let play = simulate(&m1, &m2).unwrap();
        assert!(play.preperiod().is_empty());
        assert_eq!(play.actions().cycle(), seq("(C,D) (D,D) (D,C)").entries());

        let (m1, m2) = build_internal_threat_machines(2, 1, 2, &g).unwrap();
        assert_eq!(m1.num_states(), 5);
        let w = simulate(&m1, &m2).unwrap().limit_mean_payoff(&g);
        assert_eq!(w, PayoffProfile::new(Rational::new(4, 5), Rational::new(4, 5)));

        assert!(build_internal_threat_machines(4, 1, 1, &g).is_err());
    }
}
