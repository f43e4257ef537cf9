//! Resolving command-line arguments into games, machines and sequences.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use leanfa::sequences::{build_internal_threat_machines, build_sigma_machines};
use leanfa::{builtin_machine, ActionPair, ActionSeq, Machine, Player, StageGame};

/// Input that failed to parse or validate; maps to exit code 65.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct DataError(pub String);

/// Flags that make no sense together; maps to exit code 64.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn data(path: &str, e: leanfa::Error) -> anyhow::Error {
    DataError(format!("{path}: {e}")).into()
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DataError(format!("{path}: {e}")).into())
}

/// `pd` or a game file.
pub fn game(spec: &str) -> Result<StageGame> {
    if let Some(g) = StageGame::builtin(spec) {
        return Ok(g);
    }
    if !Path::new(spec).exists() {
        bail!(UsageError(format!("no built-in game `{spec}` and no such file")));
    }
    StageGame::parse(&read(spec)?).map_err(|e| data(spec, e))
}

pub fn sequence(text: &str, game: &StageGame) -> Result<ActionSeq> {
    ActionSeq::parse(text, game).map_err(|e| data("sequence", e))
}

/// Internal-threat block lengths of a sequence shaped
/// `a*(C,D) b*(D,D) c*(D,C)`.
pub fn threat_blocks(sigma: &ActionSeq, game: &StageGame) -> Result<(usize, usize, usize)> {
    let label = |p: Player, l: &str| game.action_index(p, l);
    let (Some(c1), Some(d1), Some(c2), Some(d2)) = (
        label(Player::One, "C"),
        label(Player::One, "D"),
        label(Player::Two, "C"),
        label(Player::Two, "D"),
    ) else {
        bail!(DataError(
            "internal-threat machines need actions C and D for both players".into()
        ));
    };
    let mut runs: Vec<(ActionPair, usize)> = Vec::new();
    for &p in sigma.entries() {
        match runs.last_mut() {
            Some((q, n)) if *q == p => *n += 1,
            _ => runs.push((p, 1)),
        }
    }
    match runs[..] {
        [(a, x), (b, y), (c, z)] if a == ActionPair(c1, d2) && b == ActionPair(d1, d2) && c == ActionPair(d1, c2) => {
            Ok((x, y, z))
        }
        _ => bail!(DataError(format!(
            "internal-threat machines need a sequence of the form a*(C,D) b*(D,D) c*(D,C), got {}",
            sigma.format(game)
        ))),
    }
}

/// A machine argument for `player`:
///
/// * `builtin:<grim|tft|allc|alld>`
/// * `sigma:<sequence>` for the σ-machine of that player
/// * `threat:<sequence>` for the internal-threat machine
/// * anything else is a machine file
pub fn machine(spec: &str, game: &StageGame, player: Player) -> Result<Machine> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return builtin_machine(name, game, player)
            .ok_or_else(|| anyhow!(UsageError(format!("unknown built-in machine `{name}` for this game"))));
    }
    if let Some(text) = spec.strip_prefix("sigma:") {
        let pair = build_sigma_machines(&sequence(text, game)?, game).map_err(|e| data("sigma", e))?;
        return Ok(pick(pair, player));
    }
    if let Some(text) = spec.strip_prefix("threat:") {
        let (a, b, c) = threat_blocks(&sequence(text, game)?, game)?;
        let pair = build_internal_threat_machines(a, b, c, game).map_err(|e| data("threat", e))?;
        return Ok(pick(pair, player));
    }
    let m = Machine::parse(&read(spec)?, game).map_err(|e| data(spec, e))?;
    if m.player() != player {
        bail!(DataError(format!(
            "{spec}: machine is for player {}, expected player {player}",
            m.player()
        )));
    }
    Ok(m)
}

/// A machine argument whose player is read from the file, or `player` for
/// the generated forms.
pub fn any_machine(spec: &str, game: &StageGame, player: Player) -> Result<Machine> {
    if ["builtin:", "sigma:", "threat:"].iter().any(|p| spec.starts_with(p)) {
        return machine(spec, game, player);
    }
    Machine::parse(&read(spec)?, game).map_err(|e| data(spec, e))
}

fn pick(pair: (Machine, Machine), player: Player) -> Machine {
    match player {
        Player::One => pair.0,
        Player::Two => pair.1,
    }
}

pub fn player(n: u8) -> Result<Player> {
    Player::from_number(n).ok_or_else(|| anyhow!(UsageError(format!("player must be 1 or 2, got {n}"))))
}

/// Write `m` as `<dir>/<name>.machine`.
pub fn write_machine(dir: &Path, m: &Machine, game: &StageGame) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{}.machine", m.name()));
    fs::write(&path, m.to_text(game)).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
