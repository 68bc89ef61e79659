//! Commands that operate on a competition directory.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::Args;
use ladder_core::rng::{derive_seed, seeded};
use ladder_core::store::{
    parse_submission_file, split_assign, BoardKind, Competition, CompetitionSpec, Composition,
};
use ladder_core::{Label, LabelAlphabet, LabelVector, LeaderboardEntry, LossKind};
use ladder_service::{AppState, DATA_DIR_ENV, DEFAULT_PORT, PORT_ENV};
use rand::Rng;

use crate::args::{kebab, MechanismArg};
use crate::config::usage;
use crate::Ctx;

#[derive(Args)]
pub struct InitArgs {
    /// Directory to create.
    dir: PathBuf,
    /// Competition id; defaults to the directory name.
    #[arg(long)]
    id: Option<String>,
    /// Number of labelled examples [default: 12000].
    #[arg(long)]
    n_total: Option<usize>,
    /// Share of examples scored on the public leaderboard [default: 0.3].
    #[arg(long)]
    public_fraction: Option<f64>,
    /// zero-one or clipped-log [default: zero-one].
    #[arg(long, value_parser = kebab::<LossKind>)]
    loss: Option<LossKind>,
    /// Size of the label alphabet [default: 2].
    #[arg(long)]
    labels: Option<u32>,
    /// ladder[:ETA], ladder-pf or kaggle[:ALPHA] [default: ladder].
    #[arg(long)]
    mechanism: Option<MechanismArg>,
    /// Ladder step; only valid with the ladder mechanism.
    #[arg(long)]
    eta: Option<f64>,
    /// Kaggle rounding step; only valid with the kaggle mechanism.
    #[arg(long)]
    alpha: Option<f64>,
    /// per-team or per-rank [default: per-team].
    #[arg(long)]
    composition: Option<String>,
    /// Number of ranks a per-rank board keeps.
    #[arg(long)]
    capacity: Option<usize>,
    /// Multiplier to the original loss scale, for display.
    #[arg(long)]
    raw_scale: Option<f64>,
    /// Hidden labels, one per line. Drawn at random from the seed when
    /// absent.
    #[arg(long)]
    truth: Option<PathBuf>,
}

pub fn init(ctx: &Ctx, a: InitArgs) -> anyhow::Result<()> {
    const S: &str = "init";
    let cfg = &ctx.cfg;
    let n_total = cfg.pick(S, "n-total", a.n_total, 12000)?;
    let fraction = cfg.pick(S, "public-fraction", a.public_fraction, 0.3)?;
    let loss = cfg.pick(S, "loss", a.loss, LossKind::ZeroOne)?;
    let labels = cfg.pick(S, "labels", a.labels, 2)?;
    let mut mechanism = cfg.pick(S, "mechanism", a.mechanism, "ladder".parse().unwrap())?;
    if let Some(eta) = cfg.pick_opt(S, "eta", a.eta)? {
        if !mechanism.is_ladder() {
            return Err(usage("--eta applies only to the ladder mechanism"));
        }
        mechanism = mechanism.with_param(eta);
    }
    if let Some(alpha) = cfg.pick_opt(S, "alpha", a.alpha)? {
        if !mechanism.is_kaggle() {
            return Err(usage("--alpha applies only to the kaggle mechanism"));
        }
        mechanism = mechanism.with_param(alpha);
    }
    let capacity = cfg.pick_opt(S, "capacity", a.capacity)?;
    let composition = match cfg.pick(S, "composition", a.composition, "per-team".into())?.as_str() {
        "per-team" if capacity.is_some() => return Err(usage("--capacity needs --composition per-rank")),
        "per-team" => Composition::PerTeam,
        "per-rank" => Composition::PerRank { capacity },
        other => return Err(usage(format!("--composition: expected per-team or per-rank, got {other:?}"))),
    };
    let raw_scale = cfg.pick(S, "raw-scale", a.raw_scale, 1.0)?;
    let id = match a.id {
        Some(id) => id,
        None => a
            .dir
            .file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| usage(format!("cannot derive an id from {}; pass --id", a.dir.display())))?
            .to_owned(),
    };
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(usage(format!("--public-fraction must lie in (0, 1), got {fraction}")));
    }
    let alphabet = LabelAlphabet::new(labels).map_err(|e| usage(format!("--labels: {e}")))?;

    let seed = ctx.seed()?;
    let split = split_assign(n_total, fraction, seed).map_err(|e| usage(format!("--n-total/--public-fraction: {e}")))?;
    let truth = match &a.truth {
        Some(path) => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            parse_submission_file(&bytes, n_total, alphabet).with_context(|| format!("truth file {}", path.display()))?
        }
        None => {
            let mut rng = seeded(derive_seed(seed, 1));
            let labels: Vec<Label> = (0..n_total).map(|_| rng.random_range(0..alphabet.size())).collect();
            LabelVector::new(labels, alphabet)?
        }
    };
    let spec = CompetitionSpec {
        id,
        alphabet,
        n_total,
        mechanism: mechanism.resolve(split.public.len()),
        split,
        loss,
        composition,
        raw_scale,
        split_seed: Some(seed),
        closed: false,
    };
    let comp = Competition::create(&a.dir, spec, &truth, ctx.force)?;
    let spec = comp.spec();
    log::info!(
        "created {} in {}: {} public / {} private examples, {}",
        spec.id,
        a.dir.display(),
        spec.split.public.len(),
        spec.split.private.len(),
        serde_json::to_string(&spec.mechanism)?
    );
    Ok(())
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn open(dir: &std::path::Path) -> anyhow::Result<Competition> {
    let (comp, torn) = Competition::open(dir, true)?;
    if let Some(t) = torn {
        log::warn!("dropped an incomplete trailing log record ({} bytes at offset {})", t.len, t.offset);
    }
    Ok(comp)
}

#[derive(Args)]
pub struct SubmitArgs {
    /// Competition directory.
    dir: PathBuf,
    #[arg(long)]
    team: String,
    /// Predictions: one label (or probability) per line, optionally
    /// `id,label`, with an optional header.
    file: PathBuf,
}

/// Prints the released score on stdout at full precision, or `none` when a
/// per-rank board did not rank the submission.
pub fn submit(_ctx: &Ctx, a: SubmitArgs) -> anyhow::Result<()> {
    let mut comp = open(&a.dir)?;
    let bytes = std::fs::read(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let preds = comp.parse(&bytes).with_context(|| format!("{}", a.file.display()))?;
    let event = comp.submit(&a.team, &preds, now_ms())?;
    match event.score {
        Some(s) => {
            println!("{s}");
            log::info!("{}: submission {} scored {s} ({})", a.team, event.seq, comp.spec().mechanism.name());
        }
        None => {
            println!("none");
            log::info!("{}: submission {} did not enter the board", a.team, event.seq);
        }
    }
    Ok(())
}

#[derive(Args)]
pub struct LeaderboardArgs {
    dir: PathBuf,
    /// public or private.
    #[arg(long, default_value = "public", value_parser = kebab::<BoardKind>)]
    board: BoardKind,
}

pub fn leaderboard(_ctx: &Ctx, a: LeaderboardArgs) -> anyhow::Result<()> {
    let comp = open(&a.dir)?;
    let entries = comp.leaderboard(a.board)?;
    let scale = comp.spec().raw_scale;
    for e in &entries {
        log::info!("{:>4}  {:<24} {:<22} {}", e.rank, e.team, e.score * scale, e.submissions);
    }
    println!("{}", serde_json::to_string_pretty(&entries)?);
    Ok(())
}

#[derive(Args)]
pub struct CloseArgs {
    dir: PathBuf,
}

pub fn close(a: CloseArgs) -> anyhow::Result<()> {
    let mut comp = open(&a.dir)?;
    comp.close()?;
    let top: Vec<LeaderboardEntry> = comp.leaderboard(BoardKind::Private)?.into_iter().take(10).collect();
    log::info!("closed {}", comp.spec().id);
    for e in &top {
        log::info!("{:>4}  {:<24} {}", e.rank, e.team, e.score);
    }
    Ok(())
}

#[derive(Args)]
pub struct ServeArgs {
    /// Directory holding one subdirectory per competition.
    #[arg(long, env = DATA_DIR_ENV, default_value = ".")]
    data_dir: PathBuf,
    #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Skip fsync after each logged submission.
    #[arg(long)]
    no_fsync: bool,
}

pub fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.host, a.port))?;
        log::info!("serving {} on http://{}", a.data_dir.display(), listener.local_addr()?);
        let state = AppState::new(a.data_dir).with_fsync(!a.no_fsync);
        ladder_service::serve(listener, state).await?;
        Ok(())
    })
}
