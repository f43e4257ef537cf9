//! One machine per isomorphism class, generated in canonical order.
//!
//! States are numbered by first reference: rows are filled in state order,
//! each row as an output followed by one target per input, and a target is
//! either an existing state or the next fresh one. Every generated machine
//! has all states reachable, and its breadth-first relabelling is itself.
//! Absorbing states with equal outputs are behaviourally identical, so only
//! the first one per output is kept.

use std::ops::ControlFlow;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use crate::game::{Player, StageGame};
use crate::machine::Machine;
use crate::par::{self, Execution};

use super::Measure;

/// Default number of complete candidates a single search may examine.
pub const DEFAULT_BUDGET: usize = 5_000_000;

/// Budget from `LEANFA_BUDGET`, or [`DEFAULT_BUDGET`].
pub fn budget_from_env() -> usize {
    std::env::var("LEANFA_BUDGET")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Limits on enumerated machines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SearchBound {
    pub max_total_states: usize,
    pub max_threat_states: usize,
}

impl SearchBound {
    pub fn new(max_total_states: usize, max_threat_states: usize) -> Self {
        SearchBound {
            max_total_states,
            max_threat_states,
        }
    }
}

impl std::fmt::Display for SearchBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "states<={} threats<={}",
            self.max_total_states, self.max_threat_states
        )
    }
}

/// A machine under construction, rows filled in order.
#[derive(Clone, Debug)]
pub(crate) struct Partial {
    outputs: Vec<usize>,
    trans: Vec<usize>,
    /// States referenced so far, including ones whose row is not started.
    count: usize,
}

impl Partial {
    fn root() -> Self {
        Partial {
            outputs: Vec::new(),
            trans: Vec::new(),
            count: 1,
        }
    }

    fn decisions(&self) -> usize {
        self.outputs.len() + self.trans.len()
    }
}

/// The enumeration space for one player.
#[derive(Clone, Debug)]
pub(crate) struct Space<'a> {
    player: Player,
    n_out: usize,
    n_in: usize,
    forcing: Vec<bool>,
    bound: SearchBound,
    /// Only machines with `measure < cap` are wanted.
    cap: Option<(Measure, usize)>,
    _game: &'a StageGame,
}

impl<'a> Space<'a> {
    pub(crate) fn new(player: Player, game: &'a StageGame, bound: SearchBound, cap: Option<(Measure, usize)>) -> Self {
        let n_out = game.num_actions(player);
        Space {
            player,
            n_out,
            n_in: game.num_actions(player.other()),
            forcing: (0..n_out).map(|a| game.forces_minmax(player, a)).collect(),
            bound,
            cap,
            _game: game,
        }
    }

    fn max_states(&self) -> usize {
        match self.cap {
            Some((Measure::TotalStates, c)) => self.bound.max_total_states.min(c.saturating_sub(1)),
            _ => self.bound.max_total_states,
        }
    }

    fn is_complete(&self, p: &Partial) -> bool {
        p.outputs.len() == p.count && p.trans.len() == p.count * self.n_in
    }

    fn machine(&self, p: &Partial) -> Machine {
        Machine::from_tables(
            self.player,
            self.n_out,
            self.n_in,
            0,
            p.outputs.clone(),
            p.trans.clone(),
        )
        .expect("enumerated tables are valid")
    }

    fn row<'p>(&self, p: &'p Partial, q: usize) -> &'p [usize] {
        let lo = (q * self.n_in).min(p.trans.len());
        let hi = ((q + 1) * self.n_in).min(p.trans.len());
        &p.trans[lo..hi]
    }

    fn row_done(&self, p: &Partial, q: usize) -> bool {
        p.trans.len() >= (q + 1) * self.n_in
    }

    fn absorbing(&self, p: &Partial, q: usize) -> bool {
        self.row_done(p, q) && self.row(p, q).iter().all(|&t| t == q)
    }

    /// Normal status is monotone: once an output cannot threaten, or a row
    /// has left its state, the state stays normal.
    fn known_normal(&self, p: &Partial, q: usize) -> bool {
        q < p.outputs.len() && (!self.forcing[p.outputs[q]] || self.row(p, q).iter().any(|&t| t != q))
    }

    /// Checks when row `q` has just been completed.
    fn row_ok(&self, p: &Partial, q: usize) -> bool {
        if !self.absorbing(p, q) {
            return true;
        }
        if (0..q).any(|r| p.outputs[r] == p.outputs[q] && self.absorbing(p, r)) {
            return false;
        }
        let threats = (0..=q)
            .filter(|&r| self.forcing[p.outputs[r]] && self.absorbing(p, r))
            .count();
        threats <= self.bound.max_threat_states
    }

    /// Lower bound on the final measure stays below the cap.
    fn within_cap(&self, p: &Partial) -> bool {
        let Some((measure, cap)) = self.cap else {
            return true;
        };
        let normal = (0..p.outputs.len()).filter(|&q| self.known_normal(p, q)).count();
        let lower = match measure {
            Measure::TotalStates => p.count,
            Measure::NormalStates => normal,
            Measure::NormalTransitions => {
                let edges = p
                    .trans
                    .iter()
                    .enumerate()
                    .filter(|&(idx, &t)| self.known_normal(p, idx / self.n_in) && self.known_normal(p, t))
                    .count();
                // every normal state but the initial one has a normal in-edge
                edges.max(normal.saturating_sub(1))
            }
        };
        lower < cap
    }

    /// Depth-first generation from `p`. With `stop_at`, partial machines
    /// with that many decisions are handed to `visit` instead of expanded.
    fn dfs(
        &self,
        p: &mut Partial,
        stop_at: Option<usize>,
        visit: &mut dyn FnMut(&Partial) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if self.is_complete(p) || stop_at.is_some_and(|d| p.decisions() >= d) {
            return visit(p);
        }
        let rows = p.outputs.len();
        if p.trans.len() == rows * self.n_in {
            for o in 0..self.n_out {
                p.outputs.push(o);
                if self.within_cap(p) {
                    self.dfs(p, stop_at, visit)?;
                }
                p.outputs.pop();
            }
        } else {
            let q = rows - 1;
            let fresh_allowed = p.count < self.max_states();
            let last = if fresh_allowed { p.count } else { p.count - 1 };
            for t in 0..=last {
                let fresh = t == p.count;
                if fresh {
                    p.count += 1;
                }
                p.trans.push(t);
                let ok = (!self.row_done(p, q) || self.row_ok(p, q)) && self.within_cap(p);
                if ok {
                    self.dfs(p, stop_at, visit)?;
                }
                p.trans.pop();
                if fresh {
                    p.count -= 1;
                }
            }
        }
        ControlFlow::Continue(())
    }

    /// Every machine of the space, in canonical order.
    pub(crate) fn all(&self) -> Vec<Machine> {
        let mut out = Vec::new();
        if self.max_states() == 0 {
            return out;
        }
        let _ = self.dfs(&mut Partial::root(), None, &mut |p| {
            out.push(self.machine(p));
            ControlFlow::Continue(())
        });
        out
    }

    /// Subtrees to hand out to workers, in canonical order.
    fn split(&self) -> Vec<Partial> {
        let mut items = Vec::new();
        if self.max_states() == 0 {
            return items;
        }
        let depth = 2 * (1 + self.n_in);
        let _ = self.dfs(&mut Partial::root(), Some(depth), &mut |p| {
            items.push(p.clone());
            ControlFlow::Continue(())
        });
        items
    }

    /// First machine in canonical order for which `pred` returns a value.
    /// Each complete candidate consumes one unit of `budget`.
    pub(crate) fn find_first<R, F>(&self, exec: Execution, budget: usize, pred: F) -> Found<R>
    where
        R: Send,
        F: Fn(&Machine) -> Option<R> + Sync + Send,
    {
        let used = AtomicUsize::new(0);
        let truncated = AtomicBool::new(false);
        let items = self.split();
        let value = par::find_map_first(exec, &items, |item| {
            let mut hit = None;
            let mut p = item.clone();
            let _ = self.dfs(&mut p, None, &mut |c| {
                if used.fetch_add(1, Ordering::Relaxed) >= budget {
                    truncated.store(true, Ordering::Relaxed);
                    return ControlFlow::Break(());
                }
                match pred(&self.machine(c)) {
                    Some(r) => {
                        hit = Some(r);
                        ControlFlow::Break(())
                    }
                    None => ControlFlow::Continue(()),
                }
            });
            hit
        });
        Found {
            examined: used.load(Ordering::Relaxed).min(budget),
            truncated: value.is_none() && truncated.load(Ordering::Relaxed),
            value,
        }
    }
}

/// Result of a bounded search.
#[derive(Clone, Debug)]
pub(crate) struct Found<R> {
    pub value: Option<R>,
    pub examined: usize,
    /// The budget ran out before the space was exhausted.
    pub truncated: bool,
}

/// All canonical machines for `player` within `bound`, in canonical order.
pub fn enumerate_machines(player: Player, game: &StageGame, bound: SearchBound) -> Vec<Machine> {
    Space::new(player, game, bound, None).all()
}

/// The first `budget` machines of [`enumerate_machines`], and whether the
/// budget cut the list short.
pub fn enumerate_machines_within(
    player: Player,
    game: &StageGame,
    bound: SearchBound,
    budget: usize,
) -> (Vec<Machine>, bool) {
    let space = Space::new(player, game, bound, None);
    let mut out = Vec::new();
    let mut truncated = false;
    if space.max_states() > 0 {
        let _ = space.dfs(&mut Partial::root(), None, &mut |p| {
            if out.len() == budget {
                truncated = true;
                return ControlFlow::Break(());
            }
            out.push(space.machine(p));
            ControlFlow::Continue(())
        });
    }
    (out, truncated)
}
