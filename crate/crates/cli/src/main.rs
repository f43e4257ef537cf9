//! `leanfa`: simulate machine pairs, check equilibria, inspect action
//! sequences and enumerate small machines.

mod load;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use leanfa::equilibrium::budget_from_env;
use leanfa::game::format_rational;
use leanfa::play::format_pair;
use leanfa::sequences::{
    build_internal_threat_machines, build_sigma_machines, incompatibility_clique, is_foolable, rigidity_counterexample,
};
use leanfa::{
    audit_structure, classify_states, default_bound, enumerate_machines_within, is_abreu_rubinstein, is_lean, is_nash,
    par, simulate, CertifyMode, CheckOptions, EventualPlay, Execution, Machine, Measure, Outcome, Player, SearchBound,
    StageGame, Verdict,
};

use load::{DataError, UsageError};

#[derive(Parser)]
#[command(
    name = "leanfa",
    version,
    about = "Finite-automaton strategies in repeated two-player games"
)]
struct Cli {
    /// Worker threads for searches and enumeration (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play two machines against each other.
    Simulate {
        #[arg(long, default_value = "pd")]
        game: String,
        m1: String,
        m2: String,
        /// Also print the prefix averages for t = 1..T.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Check a pair for Nash, Abreu-Rubinstein or lean equilibrium.
    ///
    /// Exit code 0 when the property holds, 1 when it fails, 2 when it holds
    /// only within the search bound.
    Check {
        #[arg(long, default_value = "pd")]
        game: String,
        m1: String,
        m2: String,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Q, R or delta; required for ar and lean.
        #[arg(long)]
        measure: Option<String>,
        /// Largest candidate machine, in states.
        #[arg(long)]
        bound: Option<usize>,
        /// Most threat states per candidate.
        #[arg(long)]
        threats: Option<usize>,
        #[arg(long, default_value = "auto")]
        certify: String,
    },
    /// Inspect an action sequence such as "2*(C,C) 1*(D,D)".
    Seq {
        #[arg(long, default_value = "pd")]
        game: String,
        sequence: String,
        /// Report i-irreducibility for player i.
        #[arg(long, value_name = "I")]
        irreducible: Vec<u8>,
        /// Report (i,B)-rigidity, written i:a,b.
        #[arg(long, value_name = "I:B")]
        rigid: Vec<String>,
        /// Report i-foolability for player i.
        #[arg(long, value_name = "I")]
        foolable: Vec<u8>,
        /// Build the machine pair for the sequence.
        #[arg(long, value_enum)]
        build: Option<Build>,
        /// Directory for built machine files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Enumerate all canonical machine pairs up to a size.
    Enumerate {
        #[arg(long, default_value = "pd")]
        game: String,
        #[arg(long)]
        states: usize,
        #[arg(long)]
        threats: Option<usize>,
        /// Keep only pairs with this property (holding at least within bound).
        #[arg(long, value_enum)]
        find: Option<Kind>,
        #[arg(long)]
        measure: Option<String>,
        /// Print a structure audit line for every hit.
        #[arg(long, value_enum)]
        audit: Option<Audit>,
    },
    /// Print a machine as a DOT graph.
    Dot {
        #[arg(long, default_value = "pd")]
        game: String,
        machine: String,
        /// Player for built-in and generated machines.
        #[arg(long, default_value_t = 1)]
        player: u8,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Nash,
    Ar,
    Lean,
}

#[derive(Clone, Copy, ValueEnum)]
enum Build {
    Sigma,
    InternalThreat,
}

#[derive(Clone, Copy, ValueEnum)]
enum Audit {
    Structure,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(64);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(70);
        }
    }
    let exec = if cli.jobs == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cli.command, exec) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<UsageError>() {
                64
            } else if e.is::<DataError>() {
                65
            } else {
                70
            })
        }
    }
}

fn run(command: Command, exec: Execution) -> Result<u8> {
    match command {
        Command::Simulate { game, m1, m2, horizon } => {
            let g = load::game(&game)?;
            let (a, b) = (
                load::machine(&m1, &g, Player::One)?,
                load::machine(&m2, &g, Player::Two)?,
            );
            print!("{}", simulate_report(&a, &b, &g, horizon)?);
            Ok(0)
        }
        Command::Check {
            game,
            m1,
            m2,
            kind,
            measure,
            bound,
            threats,
            certify,
        } => {
            let g = load::game(&game)?;
            let (a, b) = (
                load::machine(&m1, &g, Player::One)?,
                load::machine(&m2, &g, Player::Two)?,
            );
            let measure = parse_measure(measure.as_deref(), kind)?;
            let certify =
                CertifyMode::parse(&certify).ok_or_else(|| UsageError(format!("unknown certify mode `{certify}`")))?;
            let mut opts = CheckOptions::default().with_certify(certify).with_exec(exec);
            if bound.is_some() || threats.is_some() {
                let Some(m) = measure else {
                    bail!(UsageError("--bound and --threats apply to ar and lean only".into()));
                };
                let d = default_bound(&a, &b, &g, m);
                opts = opts.with_bound(SearchBound::new(
                    bound.unwrap_or(d.max_total_states),
                    threats.unwrap_or(d.max_threat_states),
                ));
            }
            let v = verdict(kind, &a, &b, &g, measure, &opts)?;
            print!("{}", v.report(&g));
            Ok(match v.outcome {
                Outcome::Holds => 0,
                Outcome::Fails => 1,
                Outcome::HoldsWithinBound => 2,
            })
        }
        Command::Seq {
            game,
            sequence,
            irreducible,
            rigid,
            foolable,
            build,
            out,
        } => {
            let g = load::game(&game)?;
            let sigma = load::sequence(&sequence, &g)?;
            print!("{}", seq_report(&sigma, &g, &irreducible, &rigid, &foolable)?);
            if let Some(build) = build {
                let (a, b) = match build {
                    Build::Sigma => build_sigma_machines(&sigma, &g),
                    Build::InternalThreat => {
                        let (x, y, z) = load::threat_blocks(&sigma, &g)?;
                        build_internal_threat_machines(x, y, z, &g)
                    }
                }
                .map_err(|e| DataError(format!("cannot build machines: {e}")))?;
                for m in [&a, &b] {
                    println!("wrote: {}", load::write_machine(&out, m, &g)?.display());
                }
            }
            Ok(0)
        }
        Command::Enumerate {
            game,
            states,
            threats,
            find,
            measure,
            audit,
        } => {
            let g = load::game(&game)?;
            let measure = match find {
                Some(kind) => parse_measure(measure.as_deref(), kind)?,
                None if measure.is_some() => bail!(UsageError("--measure needs --find ar or --find lean".into())),
                None => None,
            };
            let threats = threats.unwrap_or_else(|| {
                Player::BOTH
                    .iter()
                    .map(|&p| g.forcing_actions(p).len())
                    .max()
                    .unwrap_or(0)
            });
            print!(
                "{}",
                enumerate_report(
                    &g,
                    SearchBound::new(states, threats),
                    find,
                    measure,
                    audit.is_some(),
                    exec
                )?
            );
            Ok(0)
        }
        Command::Dot { game, machine, player } => {
            let g = load::game(&game)?;
            let m = load::any_machine(&machine, &g, load::player(player)?)?;
            print!("{}", m.to_dot(&g));
            Ok(0)
        }
    }
}

fn parse_measure(text: Option<&str>, kind: Kind) -> Result<Option<Measure>> {
    match (text, kind) {
        (None, Kind::Nash) => Ok(None),
        (Some(_), Kind::Nash) => bail!(UsageError("--measure does not apply to nash".into())),
        (None, _) => bail!(UsageError("--measure is required for ar and lean".into())),
        (Some(t), _) => Measure::parse(t)
            .map(Some)
            .ok_or_else(|| UsageError(format!("unknown measure `{t}`, expected Q, R or delta")).into()),
    }
}

fn verdict(
    kind: Kind,
    a: &Machine,
    b: &Machine,
    g: &StageGame,
    measure: Option<Measure>,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let v = match (kind, measure) {
        (Kind::Nash, _) => is_nash(a, b, g),
        (Kind::Ar, Some(m)) => is_abreu_rubinstein(a, b, g, m, opts),
        (Kind::Lean, Some(m)) => is_lean(a, b, g, m, opts),
        _ => unreachable!("measure checked by parse_measure"),
    };
    v.map_err(|e| DataError(e.to_string()).into())
}

fn pairs_text(steps: &[leanfa::Step], g: &StageGame) -> String {
    if steps.is_empty() {
        return "-".into();
    }
    steps
        .iter()
        .map(|s| format_pair(s.actions, g))
        .collect::<Vec<_>>()
        .join(" ")
}

fn state_names(m: &Machine, states: impl IntoIterator<Item = usize>) -> String {
    states
        .into_iter()
        .map(|q| m.state_name(q).into_owned())
        .collect::<Vec<_>>()
        .join(" ")
}

fn simulate_report(a: &Machine, b: &Machine, g: &StageGame, horizon: Option<usize>) -> Result<String> {
    let play = simulate(a, b).map_err(|e| DataError(e.to_string()))?;
    let mut out = String::new();
    let _ = writeln!(out, "preperiod: {}", pairs_text(play.preperiod(), g));
    let _ = writeln!(out, "cycle: {}", pairs_text(play.cycle(), g));
    let _ = writeln!(out, "states: {}", EventualPlay::format_steps(play.cycle(), a, b, g));
    let _ = writeln!(out, "payoff: {}", play.limit_mean_payoff(g));
    for (p, m) in [(Player::One, a), (Player::Two, b)] {
        let c = classify_states(m, g);
        let _ = writeln!(out, "played-{p}: {}", state_names(m, play.played_states(p)));
        let _ = writeln!(
            out,
            "complexity-{p}: Q={} R={} delta={} threats=[{}]",
            c.total_states,
            c.normal_count(),
            c.normal_transitions,
            state_names(m, c.threat_states.iter().copied())
        );
    }
    if let Some(t) = horizon {
        for s in 1..=t {
            let w = play.finite_mean_payoff(g, s);
            let _ = writeln!(out, "mean t={s}: {w}");
        }
    }
    Ok(out)
}

fn seq_report(
    sigma: &leanfa::ActionSeq,
    g: &StageGame,
    irreducible: &[u8],
    rigid: &[String],
    foolable: &[u8],
) -> Result<String> {
    let mut out = String::new();
    let yes = |b: bool| if b { "yes" } else { "no" };
    let w = sigma.payoff(g);
    let _ = writeln!(out, "sequence: {}", sigma.format(g));
    let _ = writeln!(out, "length: {}", sigma.len());
    let _ = writeln!(out, "payoff: {w}");
    let _ = writeln!(
        out,
        "minmax: {} {}",
        format_rational(&g.minmax(Player::One)),
        format_rational(&g.minmax(Player::Two))
    );
    let _ = writeln!(out, "strictly-enforceable: {}", yes(sigma.is_strictly_enforceable(g)));
    for &i in irreducible {
        let p = load::player(i)?;
        let classes = incompatibility_clique(sigma, p, |_| true);
        let _ = writeln!(
            out,
            "irreducible-{p}: {} (classes {classes} of {})",
            yes(classes == sigma.len()),
            sigma.len()
        );
    }
    for spec in rigid {
        let (i, set) = spec
            .split_once(':')
            .ok_or_else(|| UsageError(format!("--rigid expects I:B such as 1:C, got `{spec}`")))?;
        let p = load::player(
            i.trim()
                .parse()
                .map_err(|_| UsageError(format!("bad player in `{spec}`")))?,
        )?;
        let b = set
            .split(',')
            .map(|l| {
                g.action_index(p, l.trim())
                    .ok_or_else(|| UsageError(format!("player {p} has no action `{}`", l.trim())))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        match rigidity_counterexample(sigma, p, &b, g) {
            None => {
                let _ = writeln!(out, "rigid: yes (player {p}, B={{{}}})", set.trim());
            }
            Some(v) => {
                let _ = writeln!(out, "rigid: no (player {p}, B={{{}}}, {v})", set.trim());
            }
        }
    }
    for &i in foolable {
        let p = load::player(i)?;
        match is_foolable(sigma, p, g) {
            Some(w) => {
                let s = g.action_label(p.other(), w.action);
                let _ = writeln!(out, "foolable-{p}: yes (rotation offset {}, s'={s})", w.offset);
            }
            None => {
                let _ = writeln!(out, "foolable-{p}: no");
            }
        }
    }
    Ok(out)
}

/// One-line form of a machine: `name: start=q q/out[next..] ...`.
fn inline(m: &Machine, g: &StageGame) -> String {
    let rows: Vec<String> = (0..m.num_states())
        .map(|q| {
            let next: Vec<String> = (0..m.num_inputs())
                .map(|a| m.state_name(m.next(q, a)).into_owned())
                .collect();
            format!(
                "{}/{}[{}]",
                m.state_name(q),
                g.action_label(m.player(), m.output(q)),
                next.join(",")
            )
        })
        .collect();
    format!("start={} {}", m.state_name(m.initial()), rows.join(" "))
}

fn enumerate_report(
    g: &StageGame,
    bound: SearchBound,
    find: Option<Kind>,
    measure: Option<Measure>,
    audit: bool,
    exec: Execution,
) -> Result<String> {
    let budget = budget_from_env();
    let (ones, t1) = enumerate_machines_within(Player::One, g, bound, budget);
    let (twos, t2) = enumerate_machines_within(Player::Two, g, bound, budget);
    let mut pairs: Vec<(usize, usize)> = (0..ones.len())
        .flat_map(|i| (0..twos.len()).map(move |j| (i, j)))
        .collect();
    let cut = pairs.len() > budget;
    pairs.truncate(budget);
    let opts = CheckOptions::default().with_exec(Execution::Sequential);

    // each pair is checked sequentially; the pairs themselves are spread out
    let rows = par::map(
        exec,
        &pairs,
        |&(i, j)| -> std::result::Result<Option<(String, bool, bool)>, String> {
            let (a, b) = (&ones[i], &twos[j]);
            let mut bounded = false;
            if let Some(kind) = find {
                let v = verdict(kind, a, b, g, measure, &opts).map_err(|e| e.to_string())?;
                if v.fails() {
                    return Ok(None);
                }
                bounded = v.truncated;
            }
            let payoff = simulate(a, b).map_err(|e| e.to_string())?.limit_mean_payoff(g);
            let mut line = format!(
                "pair {i} {j}: payoff={payoff} m1=[{}] m2=[{}]",
                inline(a, g),
                inline(b, g)
            );
            let mut violation = false;
            if audit {
                let au = audit_structure(a, b, g).map_err(|e| e.to_string())?;
                // only lean pairs with a strictly enforceable profile owe the structure
                let expected = match (find, measure) {
                    (Some(Kind::Lean), Some(Measure::NormalTransitions)) if au.enforceable => Some(au.passes_delta()),
                    (Some(Kind::Lean), Some(Measure::NormalStates)) if au.enforceable => Some(au.passes_r()),
                    _ => None,
                };
                violation = expected == Some(false);
                let status = match expected {
                    Some(true) => "ok",
                    Some(false) => "violation",
                    None => "n/a",
                };
                let _ = write!(line, "\n  audit {i} {j} {status}: {}", au.line());
            }
            Ok(Some((line, bounded, violation)))
        },
    );

    let mut out = String::new();
    let mut hits = 0;
    let mut violations = 0;
    let mut budget_hit = false;
    for r in rows {
        if let Some((line, b, v)) = r.map_err(DataError)? {
            hits += 1;
            budget_hit |= b;
            violations += v as usize;
            let _ = writeln!(out, "{line}");
        }
    }
    let _ = writeln!(out, "machines: {} {}", ones.len(), twos.len());
    let _ = writeln!(out, "pairs: {}", pairs.len());
    let _ = writeln!(out, "hits: {hits}");
    if audit {
        let _ = writeln!(out, "audit-violations: {violations}");
    }
    if t1 || t2 || cut || budget_hit {
        let _ = writeln!(
            out,
            "truncated: yes (budget {budget}; raise LEANFA_BUDGET for complete results)"
        );
    }
    Ok(out)
}
