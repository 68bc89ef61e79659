//! Attacks, experiments, replays and fixtures.

use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Subcommand};
use ladder_core::attack::AttackVariant;
use ladder_core::simlab::fixtures::{
    generate_competition, planted_loss_fixture, planted_significance_fixture, CompetitionFixtureConfig,
    PlantedSignificanceConfig,
};
use ladder_core::simlab::report::Sidecar;
use ladder_core::simlab::{
    report_from, run_boosting_experiment, run_nonadaptive_accuracy, run_significance_analysis,
    run_split_stability, test_inversions, AccuracyConfig, AttackSetting, ExperimentConfig, ExperimentReport,
    PairTest, RecordedCompetition, StabilityConfig,
};
use ladder_core::store::BoardKind;
use ladder_core::{LossVector, MechanismSpec};
use serde::Serialize;

use crate::args::{kebab, loss_table_bytes, read_loss_table, MechanismArg};
use crate::config::usage;
use crate::Ctx;

#[derive(Args)]
pub struct AttackArgs {
    /// ladder[:ETA], ladder-pf or kaggle[:ALPHA] [default: kaggle].
    #[arg(long)]
    mechanism: Option<MechanismArg>,
    /// threshold-half or improvement-selected [default: improvement-selected
    /// against a ladder, threshold-half against kaggle].
    #[arg(long, value_parser = kebab::<AttackVariant>)]
    variant: Option<AttackVariant>,
    /// Public examples [default: 4000].
    #[arg(long)]
    n: Option<usize>,
    /// All examples [default: 12000].
    #[arg(long = "N")]
    n_total: Option<usize>,
    /// Queries [default: 400].
    #[arg(long)]
    k: Option<usize>,
    /// Repetitions [default: 1].
    #[arg(long)]
    reps: Option<usize>,
}

fn boosting_shape(n: usize, n_total: usize, k: usize, reps: usize) -> anyhow::Result<f64> {
    if n < 2 || n >= n_total {
        return Err(usage(format!("--n must lie in 2..{n_total} (below --N), got {n}")));
    }
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    if reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    Ok(n as f64 / n_total as f64)
}

fn log_boosting(report: &ExperimentReport) {
    for s in &report.summary {
        log::info!(
            "{:<14} reported {:.4} ± {:.4}   public loss {:.4}   holdout loss {:.4} ± {:.4}   selected {:.1}",
            s.setting,
            s.final_reported_mean,
            s.final_reported_std,
            s.final_public_loss_mean,
            s.final_holdout_loss_mean,
            s.final_holdout_loss_std,
            s.selected_mean
        );
    }
}

pub fn attack(ctx: &Ctx, a: AttackArgs) -> anyhow::Result<()> {
    const S: &str = "attack";
    let cfg = &ctx.cfg;
    let mechanism = cfg.pick(S, "mechanism", a.mechanism, "kaggle".parse().unwrap())?;
    let n = cfg.pick(S, "n", a.n, 4000)?;
    let n_total = cfg.pick(S, "N", a.n_total, 12000)?;
    let k = cfg.pick(S, "k", a.k, 400)?;
    let reps = cfg.pick(S, "reps", a.reps, 1)?;
    let default_variant = if mechanism.is_kaggle() {
        AttackVariant::ThresholdHalf
    } else {
        AttackVariant::ImprovementSelected
    };
    let variant = cfg.pick(S, "variant", a.variant, default_variant)?;
    let public_fraction = boosting_shape(n, n_total, k, reps)?;
    let spec = mechanism.resolve(n);
    let config = ExperimentConfig {
        n_total,
        public_fraction,
        k,
        repetitions: reps,
        seed: ctx.seed()?,
        settings: vec![AttackSetting {
            name: spec.name().into(),
            mechanism: spec,
            variant,
        }],
    };
    config.validate()?;
    let report = run_boosting_experiment(&config)?;
    log_boosting(&report);
    let out = ctx.output()?;
    out.table("attack", &report.records, true)?;
    out.sidecar("attack", &Sidecar::new("attack", Some(config.seed), &config, &report.summary))
}

#[derive(Args)]
#[command(group(ArgGroup::new("kind").required(true).args(["boosting", "split_stability", "accuracy"])))]
pub struct ExperimentArgs {
    /// Boosting attack against Kaggle (fine and coarse grids) and the
    /// parameter-free Ladder.
    #[arg(long)]
    boosting: bool,
    /// Rescore private losses on random halves of the private set.
    #[arg(long)]
    split_stability: bool,
    /// Ladder leaderboard error on non-adaptive classifiers.
    #[arg(long)]
    accuracy: bool,
    /// Public examples (boosting, accuracy) or examples per loss vector
    /// (split stability).
    #[arg(long)]
    n: Option<usize>,
    /// All examples (boosting).
    #[arg(long = "N")]
    n_total: Option<usize>,
    /// Queries (boosting) or classifiers (accuracy).
    #[arg(long)]
    k: Option<usize>,
    /// Repetitions, halvings or trials.
    #[arg(long)]
    reps: Option<usize>,
    /// Ladder step (accuracy).
    #[arg(long)]
    eta: Option<f64>,
    /// Split stability on the top chosen submissions of a recorded
    /// competition.
    #[arg(long, conflicts_with = "losses")]
    competition: Option<PathBuf>,
    /// Split stability on a loss table.
    #[arg(long)]
    losses: Option<PathBuf>,
    /// Error rates of the synthetic loss vectors used for split stability
    /// when no competition or loss table is given.
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
    /// Submissions taken from a competition or loss table.
    #[arg(long)]
    top: Option<usize>,
}

pub fn experiment(ctx: &Ctx, a: ExperimentArgs) -> anyhow::Result<()> {
    if a.boosting {
        boosting(ctx, a)
    } else if a.split_stability {
        split_stability(ctx, a)
    } else {
        accuracy(ctx, a)
    }
}

fn boosting(ctx: &Ctx, a: ExperimentArgs) -> anyhow::Result<()> {
    const S: &str = "boosting";
    let cfg = &ctx.cfg;
    let n = cfg.pick(S, "n", a.n, 4000)?;
    let n_total = cfg.pick(S, "N", a.n_total, 12000)?;
    let k = cfg.pick(S, "k", a.k, 400)?;
    let reps = cfg.pick(S, "reps", a.reps, 5)?;
    let public_fraction = boosting_shape(n, n_total, k, reps)?;
    let config = ExperimentConfig {
        n_total,
        public_fraction,
        k,
        repetitions: reps,
        seed: ctx.seed()?,
        settings: AttackSetting::standard(n),
    };
    config.validate()?;
    let report = run_boosting_experiment(&config)?;
    log_boosting(&report);
    let out = ctx.output()?;
    out.table("boosting", &report.records, true)?;
    out.sidecar("boosting", &Sidecar::new("boosting", Some(config.seed), &config, &report.summary))
}

/// Private losses of the chosen submissions of the `top` teams on the
/// public leaderboard, replayed under the competition's own mechanism.
fn top_private_losses(dir: &Path, top: usize) -> anyhow::Result<(Vec<String>, Vec<LossVector>)> {
    let recorded = RecordedCompetition::load(dir)?;
    let mut runs = recorded.replay(&[recorded.spec().mechanism])?;
    let run = runs.remove(0);
    let mut names = Vec::new();
    let mut losses = Vec::new();
    for e in run.public.iter().take(top) {
        names.push(e.team.clone());
        losses.push(recorded.private_losses(&run.chosen[&e.team])?);
    }
    Ok((names, losses))
}

#[derive(Serialize)]
struct StabilitySummary {
    submission: usize,
    name: String,
    full_score: f64,
    half_mean: f64,
    half_std: f64,
    half_min: f64,
    half_max: f64,
}

fn split_stability(ctx: &Ctx, a: ExperimentArgs) -> anyhow::Result<()> {
    const S: &str = "split-stability";
    let cfg = &ctx.cfg;
    let reps = cfg.pick(S, "reps", a.reps, 20)?;
    if reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let seed = ctx.seed()?;
    let top = cfg.pick_opt(S, "top", a.top)?;
    let competition = cfg.pick_opt(S, "competition", a.competition)?;
    let losses_file = cfg.pick_opt(S, "losses", a.losses)?;
    let (names, losses) = match (competition, losses_file) {
        (Some(_), Some(_)) => return Err(usage("--competition and --losses are exclusive")),
        (Some(dir), None) => top_private_losses(&dir, top.unwrap_or(10))?,
        (None, Some(file)) => {
            let (mut names, mut losses) = read_loss_table(&file)?;
            if let Some(t) = top {
                names.truncate(t);
                losses.truncate(t);
            }
            (names, losses)
        }
        (None, None) => {
            let n = cfg.pick(S, "n", a.n, 8400)?;
            let rates = cfg.pick(S, "rates", a.rates, vec![0.3, 0.35, 0.4, 0.45, 0.5])?;
            let names = rates.iter().map(|r| format!("rate-{r}")).collect();
            (names, planted_loss_fixture(n, &rates, ladder_core::rng::derive_seed(seed, 1))?)
        }
    };
    let config = StabilityConfig { repetitions: reps, seed };
    let report = run_split_stability(&losses, config)?;
    let rows: Vec<StabilitySummary> = report
        .summary
        .iter()
        .map(|r| StabilitySummary {
            submission: r.submission,
            name: names[r.submission].clone(),
            full_score: r.full_score,
            half_mean: r.half_mean,
            half_std: r.half_std,
            half_min: r.half_min,
            half_max: r.half_max,
        })
        .collect();
    for r in &rows {
        log::info!(
            "{:<24} full {:.5}   halves {:.5} ± {:.5}   range [{:.5}, {:.5}]",
            r.name,
            r.full_score,
            r.half_mean,
            r.half_std,
            r.half_min,
            r.half_max
        );
    }
    let out = ctx.output()?;
    out.table("split-stability", &rows, true)?;
    out.table("split-stability-halves", &report.records, false)?;
    out.sidecar("split-stability", &Sidecar::new("split-stability", Some(seed), &config, &rows))
}

fn accuracy(ctx: &Ctx, a: ExperimentArgs) -> anyhow::Result<()> {
    const S: &str = "accuracy";
    let cfg = &ctx.cfg;
    let mut config = AccuracyConfig::standard(ctx.seed()?);
    config.k = cfg.pick(S, "k", a.k, config.k)?;
    config.n = cfg.pick(S, "n", a.n, config.n)?;
    config.eta = cfg.pick(S, "eta", a.eta, config.eta)?;
    config.trials = cfg.pick(S, "reps", a.reps, config.trials)?;
    if config.k == 0 || config.n == 0 || config.trials == 0 {
        return Err(usage("--k, --n and --reps must be positive"));
    }
    if config.eta.is_nan() || config.eta <= 0.0 {
        return Err(usage(format!("--eta must be positive, got {}", config.eta)));
    }
    let trials = run_nonadaptive_accuracy(&config)?;
    let within = trials.iter().filter(|t| t.within_bound).count();
    if let Some(t) = trials.first() {
        log::info!("{within} of {} trials within the bound {:.5}", trials.len(), t.bound);
    }
    let out = ctx.output()?;
    out.table("accuracy", &trials, true)?;
    #[derive(Serialize)]
    struct Summary {
        within_bound: usize,
        trials: usize,
    }
    let summary = Summary {
        within_bound: within,
        trials: trials.len(),
    };
    out.sidecar("accuracy", &Sidecar::new("accuracy", Some(config.seed), &config, &summary))
}

#[derive(Args)]
pub struct ReplayArgs {
    /// Recorded competition directory.
    dir: PathBuf,
    /// Mechanism to recompute the leaderboard with.
    #[arg(long)]
    mechanism: Option<MechanismArg>,
    /// Mechanism to compare against [default: the recorded one].
    #[arg(long)]
    against: Option<MechanismArg>,
    /// Ranks compared [default: 10].
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Serialize)]
struct BoardRow<'a> {
    run: &'a str,
    mechanism: &'a str,
    board: BoardKind,
    rank: usize,
    team: &'a str,
    score: f64,
    submissions: u64,
    digest: &'a str,
}

/// Flat form of a paired test, for CSV output.
#[derive(Serialize)]
struct TestColumns {
    statistic: Option<f64>,
    p_raw: Option<f64>,
    p_corrected: Option<f64>,
    significant: bool,
    degenerate: bool,
}

impl From<&PairTest> for TestColumns {
    fn from(t: &PairTest) -> Self {
        TestColumns {
            statistic: t.statistic,
            p_raw: t.p_raw,
            p_corrected: t.p_corrected,
            significant: t.significant,
            degenerate: t.degenerate,
        }
    }
}

#[derive(Serialize)]
struct InversionRow<'a> {
    board: BoardKind,
    team_x: &'a str,
    team_y: &'a str,
    run: &'a str,
    statistic: Option<f64>,
    p_raw: Option<f64>,
    p_corrected: Option<f64>,
    significant: bool,
    degenerate: bool,
}

pub fn replay(ctx: &Ctx, a: ReplayArgs) -> anyhow::Result<()> {
    const S: &str = "replay";
    let cfg = &ctx.cfg;
    let mechanism = cfg
        .pick_opt(S, "mechanism", a.mechanism)?
        .ok_or_else(|| usage("--mechanism is required"))?;
    let against = cfg.pick_opt(S, "against", a.against)?;
    let top = cfg.pick(S, "top", a.top, 10)?;
    if top == 0 {
        return Err(usage("--top must be at least 1"));
    }
    let recorded = RecordedCompetition::load(&a.dir)?;
    let n = recorded.spec().n_public();
    let spec_a = mechanism.resolve(n);
    let spec_b = against.map_or(recorded.spec().mechanism, |m| m.resolve(n));
    let mut runs = recorded.replay(&[spec_a, spec_b])?;
    let run_b = runs.pop().expect("two runs");
    let run_a = runs.pop().expect("two runs");
    let report = report_from(run_a, run_b, top);
    let inversions = test_inversions(&recorded, &report)?;

    let mut boards = Vec::new();
    for (run, r) in [("a", &report.a), ("b", &report.b)] {
        for kind in [BoardKind::Public, BoardKind::Private] {
            for e in r.board(kind) {
                boards.push(BoardRow {
                    run,
                    mechanism: r.mechanism.name(),
                    board: kind,
                    rank: e.rank,
                    team: &e.team,
                    score: e.score,
                    submissions: e.submissions,
                    digest: &r.chosen[&e.team],
                });
            }
        }
    }
    let inversion_rows: Vec<InversionRow> = inversions
        .iter()
        .map(|t| {
            let c = TestColumns::from(&t.test);
            InversionRow {
                board: t.board,
                team_x: &t.team_x,
                team_y: &t.team_y,
                run: &t.run,
                statistic: c.statistic,
                p_raw: c.p_raw,
                p_corrected: c.p_corrected,
                significant: c.significant,
                degenerate: c.degenerate,
            }
        })
        .collect();
    let significant = inversions.iter().filter(|t| t.test.significant).count();
    log::info!(
        "{} vs {}: {} perturbations in the top {top}, {} inverted pair tests, {significant} significant",
        serde_json::to_string(&spec_a)?,
        serde_json::to_string(&spec_b)?,
        report.perturbations.len(),
        inversions.len()
    );
    for p in &report.perturbations {
        let show = |r: Option<usize>| r.map_or("-".into(), |r| r.to_string());
        log::info!(
            "  {:<8} {:<24} {:>4} -> {:>4}",
            serde_json::to_value(p.board)?.as_str().unwrap_or_default(),
            p.team,
            show(p.rank_a),
            show(p.rank_b)
        );
    }

    let out = ctx.output()?;
    out.table("replay", &report.perturbations, true)?;
    out.table("replay-boards", &boards, false)?;
    out.table("replay-inversions", &inversion_rows, false)?;
    #[derive(Serialize)]
    struct Config<'a> {
        competition: &'a str,
        a: MechanismSpec,
        b: MechanismSpec,
        top: usize,
    }
    #[derive(Serialize)]
    struct Summary {
        perturbations: usize,
        inverted_pair_tests: usize,
        significant_inversions: usize,
    }
    let config = Config {
        competition: &recorded.spec().id,
        a: spec_a,
        b: spec_b,
        top,
    };
    let summary = Summary {
        perturbations: report.perturbations.len(),
        inverted_pair_tests: inversions.len(),
        significant_inversions: significant,
    };
    out.sidecar("replay", &Sidecar::new("replay", None, &config, &summary))
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["competition", "losses", "planted"])))]
pub struct SignificanceArgs {
    /// Ranks tested, counting rank 1 [default: 10].
    #[arg(long)]
    top: Option<usize>,
    /// Use the chosen submissions of a recorded competition.
    #[arg(long)]
    competition: Option<PathBuf>,
    /// Use a loss table whose columns are in public rank order.
    #[arg(long)]
    losses: Option<PathBuf>,
    /// Use the planted fixture (ranks 8 and 9 differ from rank 1).
    #[arg(long)]
    planted: bool,
}

#[derive(Serialize)]
struct SignificanceCsvRow<'a> {
    rank: usize,
    name: &'a str,
    statistic: Option<f64>,
    p_raw: Option<f64>,
    p_corrected: Option<f64>,
    significant: bool,
    degenerate: bool,
}

pub fn significance(ctx: &Ctx, a: SignificanceArgs) -> anyhow::Result<()> {
    let top = ctx.cfg.pick("significance", "top", a.top, 10)?;
    if top < 2 {
        return Err(usage("--top must be at least 2"));
    }
    let (names, losses, seed) = if let Some(dir) = &a.competition {
        let (n, l) = top_private_losses(dir, top)?;
        (n, l, None)
    } else if let Some(file) = &a.losses {
        let (mut n, mut l) = read_loss_table(file)?;
        n.truncate(top);
        l.truncate(top);
        (n, l, None)
    } else {
        let seed = ctx.seed()?;
        let mut config = PlantedSignificanceConfig::standard(seed);
        config.m = top;
        config.planted.retain(|&r| r <= top);
        let l = planted_significance_fixture(&config)?;
        ((1..=top).map(|r| format!("rank-{r}")).collect(), l, Some(seed))
    };
    let table = run_significance_analysis(&losses)?;
    let rows: Vec<SignificanceCsvRow> = table
        .rows
        .iter()
        .map(|r| {
            let c = TestColumns::from(&r.test);
            SignificanceCsvRow {
                rank: r.rank,
                name: &names[r.rank - 1],
                statistic: c.statistic,
                p_raw: c.p_raw,
                p_corrected: c.p_corrected,
                significant: c.significant,
                degenerate: c.degenerate,
            }
        })
        .collect();
    log::info!(
        "flagged ranks at {} after correcting for {} comparisons: {:?}",
        table.alpha,
        table.comparisons,
        table.flagged()
    );
    let out = ctx.output()?;
    out.table("significance", &rows, true)?;
    #[derive(Serialize)]
    struct Config {
        top: usize,
        alpha: f64,
    }
    let config = Config { top, alpha: table.alpha };
    out.sidecar("significance", &Sidecar::new("significance", seed, &config, &table.flagged()))
}

#[derive(Subcommand)]
pub enum FixturesCommand {
    /// A recorded competition with many teams and submissions.
    Competition(CompetitionFixtureArgs),
    /// Loss table where only some ranks differ significantly from rank 1.
    Significance(SignificanceFixtureArgs),
    /// Loss table of 0/1 vectors with fixed error counts.
    Losses(LossFixtureArgs),
}

#[derive(Args)]
pub struct CompetitionFixtureArgs {
    dir: PathBuf,
    #[arg(long)]
    id: Option<String>,
    /// [default: 200]
    #[arg(long)]
    teams: Option<usize>,
    /// [default: 1785]
    #[arg(long)]
    submissions: Option<usize>,
    /// [default: 12000]
    #[arg(long)]
    n_total: Option<usize>,
    /// [default: 0.3]
    #[arg(long)]
    public_fraction: Option<f64>,
    /// Mechanism whose scores are logged [default: kaggle].
    #[arg(long)]
    mechanism: Option<MechanismArg>,
}

#[derive(Args)]
pub struct SignificanceFixtureArgs {
    /// Examples [default: 8400].
    #[arg(long)]
    n: Option<usize>,
    /// Ranks [default: 10].
    #[arg(long)]
    m: Option<usize>,
    /// Ranks that differ from rank 1 [default: 8,9].
    #[arg(long, value_delimiter = ',')]
    planted: Option<Vec<usize>>,
    /// Extra errors of a planted rank [default: 150].
    #[arg(long)]
    shift: Option<usize>,
    /// Error/non-error exchanges of every rank [default: 300].
    #[arg(long)]
    swaps: Option<usize>,
}

#[derive(Args)]
pub struct LossFixtureArgs {
    /// Examples [default: 8400].
    #[arg(long)]
    n: Option<usize>,
    /// Error rate of each vector [default: 0.3,0.35,0.4,0.45,0.5].
    #[arg(long, value_delimiter = ',')]
    rates: Option<Vec<f64>>,
}

pub fn fixtures(ctx: &Ctx, c: FixturesCommand) -> anyhow::Result<()> {
    let cfg = &ctx.cfg;
    match c {
        FixturesCommand::Competition(a) => {
            const S: &str = "fixtures-competition";
            let mut config = CompetitionFixtureConfig::standard(ctx.seed()?);
            if let Some(id) = cfg.pick_opt(S, "id", a.id)? {
                config.id = id;
            }
            config.teams = cfg.pick(S, "teams", a.teams, config.teams)?;
            config.submissions = cfg.pick(S, "submissions", a.submissions, config.submissions)?;
            config.n_total = cfg.pick(S, "n-total", a.n_total, config.n_total)?;
            config.public_fraction = cfg.pick(S, "public-fraction", a.public_fraction, config.public_fraction)?;
            if let Some(m) = cfg.pick_opt(S, "mechanism", a.mechanism)? {
                let n_public = (config.public_fraction * config.n_total as f64).round() as usize;
                config.mechanism = m.resolve(n_public);
            }
            let summary = generate_competition(&a.dir, &config, ctx.force)?;
            log::info!(
                "wrote {} submissions from {} teams to {} ({} public / {} private)",
                summary.submissions,
                summary.teams,
                a.dir.display(),
                summary.n_public,
                summary.n_private
            );
            Ok(())
        }
        FixturesCommand::Significance(a) => {
            const S: &str = "fixtures-significance";
            let seed = ctx.seed()?;
            let mut config = PlantedSignificanceConfig::standard(seed);
            config.n = cfg.pick(S, "n", a.n, config.n)?;
            config.m = cfg.pick(S, "m", a.m, config.m)?;
            config.planted = cfg.pick(S, "planted", a.planted, config.planted)?;
            config.shift = cfg.pick(S, "shift", a.shift, config.shift)?;
            config.swaps = cfg.pick(S, "swaps", a.swaps, config.swaps)?;
            let losses = planted_significance_fixture(&config)?;
            let names: Vec<String> = (1..=losses.len()).map(|r| format!("rank-{r}")).collect();
            let out = ctx.output()?;
            out.emit("significance-fixture.csv", &loss_table_bytes(&names, &losses)?, true)?;
            out.sidecar(
                "significance-fixture",
                &Sidecar::new("significance-fixture", Some(seed), &config, &config.planted),
            )
        }
        FixturesCommand::Losses(a) => {
            const S: &str = "fixtures-losses";
            let seed = ctx.seed()?;
            let n = cfg.pick(S, "n", a.n, 8400)?;
            let rates = cfg.pick(S, "rates", a.rates, vec![0.3, 0.35, 0.4, 0.45, 0.5])?;
            let losses = planted_loss_fixture(n, &rates, seed)?;
            let names: Vec<String> = rates.iter().map(|r| format!("rate-{r}")).collect();
            let out = ctx.output()?;
            out.emit("loss-fixture.csv", &loss_table_bytes(&names, &losses)?, true)?;
            #[derive(Serialize)]
            struct Config<'a> {
                n: usize,
                rates: &'a [f64],
            }
            let config = Config { n, rates: &rates };
            out.sidecar("loss-fixture", &Sidecar::new("loss-fixture", Some(seed), &config, &losses.len()))
        }
    }
}

