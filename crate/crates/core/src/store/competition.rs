//! A competition on disk.
//!
//! ```text
//! <dir>/competition.json   CompetitionSpec
//! <dir>/truth.txt          hidden labels, canonical form
//! <dir>/events.jsonl       event log
//! <dir>/blobs/<digest>     submissions, canonical form
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::blob::BlobStore;
use super::log::{read_log, Event, EventLog, LogContents, TornTail};
use super::split::Split;
use super::submission::{parse_canonical, parse_predictions, SubmissionFormat};
use crate::losses::{LabelAlphabet, LabelVector, LossKind, LossVector, Predictions};
use crate::mechanisms::{LeaderboardEntry, MechanismSpec, PerRankBoard, PerTeamBoard};
use crate::{Error, Result};

pub const SPEC_FILE: &str = "competition.json";
pub const TRUTH_FILE: &str = "truth.txt";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const BLOB_DIR: &str = "blobs";

/// How per-sequence mechanism instances are combined into a leaderboard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Composition {
    #[default]
    PerTeam,
    PerRank {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<usize>,
    },
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionSpec {
    pub id: String,
    pub alphabet: LabelAlphabet,
    pub n_total: usize,
    #[serde(flatten)]
    pub split: Split,
    pub loss: LossKind,
    pub mechanism: MechanismSpec,
    #[serde(default)]
    pub composition: Composition,
    /// Multiplier from the stored unit-range loss to the original loss
    /// scale, for display only.
    #[serde(default = "unit_scale")]
    pub raw_scale: f64,
    /// Seed the split was drawn with, if it was drawn here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
    #[serde(default)]
    pub closed: bool,
}

impl CompetitionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(Error::input(format!("invalid competition id {:?}", self.id)));
        }
        self.split.validate(self.n_total)?;
        self.mechanism.instantiate(self.split.public.len())?;
        if !(self.raw_scale.is_finite() && self.raw_scale > 0.0) {
            return Err(Error::input(format!("raw scale must be positive, got {}", self.raw_scale)));
        }
        if self.loss == LossKind::ClippedLog && self.alphabet != LabelAlphabet::BINARY {
            return Err(Error::input("clipped log loss needs a binary label alphabet"));
        }
        if let Composition::PerRank { capacity: Some(0) } = self.composition {
            return Err(Error::input("per-rank capacity must be at least 1"));
        }
        Ok(())
    }

    pub fn submission_format(&self) -> SubmissionFormat {
        SubmissionFormat::for_loss(self.loss, self.alphabet)
    }

    pub fn n_public(&self) -> usize {
        self.split.public.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoardKind {
    Public,
    Private,
}

#[derive(Debug, Clone)]
enum Board {
    PerTeam(PerTeamBoard),
    PerRank(PerRankBoard),
}

impl Board {
    fn new(spec: &CompetitionSpec) -> Result<Self> {
        let n = spec.n_public();
        Ok(match spec.composition {
            Composition::PerTeam => Board::PerTeam(PerTeamBoard::new(spec.mechanism, n)?),
            Composition::PerRank { capacity } => {
                Board::PerRank(PerRankBoard::new(spec.mechanism, n, capacity)?)
            }
        })
    }

    fn step(&mut self, team: &str, losses: &LossVector, seq: u64) -> Result<Option<f64>> {
        match self {
            Board::PerTeam(b) => Ok(Some(b.submit(team, losses, seq)?.reported)),
            Board::PerRank(b) => Ok(b.evaluate(team, losses, seq)?.map(|(_, s)| s)),
        }
    }

    fn entries(&self) -> Vec<LeaderboardEntry> {
        match self {
            Board::PerTeam(b) => b.entries(),
            Board::PerRank(b) => b.entries(),
        }
    }

    /// (team, seq of the submission behind the entry) in public rank order.
    fn chosen(&self) -> Vec<(String, u64, u64)> {
        match self {
            Board::PerTeam(b) => {
                let mut out: Vec<(String, u64, u64)> = b
                    .teams()
                    .filter_map(|(t, slot)| slot.best_seq.map(|s| (t.to_owned(), s, slot.submissions)))
                    .collect();
                out.sort_by_key(|(_, s, _)| *s);
                out
            }
            Board::PerRank(b) => {
                let entries = b.entries();
                b.ranks()
                    .iter()
                    .zip(entries)
                    .map(|(slot, e)| (slot.team.clone(), slot.seq, e.submissions))
                    .collect()
            }
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| Error::io(path, e))
}

pub fn read_spec(dir: &Path) -> Result<CompetitionSpec> {
    let path = dir.join(SPEC_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let spec: CompetitionSpec = serde_json::from_slice(&bytes)?;
    spec.validate()?;
    Ok(spec)
}

pub fn read_truth(dir: &Path, spec: &CompetitionSpec) -> Result<LabelVector> {
    let path = dir.join(TRUTH_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    super::submission::parse_submission_file(&bytes, spec.n_total, spec.alphabet)
}

/// An open competition holding the single append handle on its log.
#[derive(Debug)]
pub struct Competition {
    dir: PathBuf,
    spec: CompetitionSpec,
    truth: LabelVector,
    blobs: BlobStore,
    log: EventLog,
    board: Board,
    digests: Vec<String>,
    poisoned: bool,
}

impl Competition {
    /// Materializes a new competition in `dir`. An existing non-empty
    /// directory is refused unless `force` is set, in which case it is
    /// wiped first.
    pub fn create(dir: impl Into<PathBuf>, spec: CompetitionSpec, truth: &LabelVector, force: bool) -> Result<Self> {
        let dir = dir.into();
        spec.validate()?;
        if truth.len() != spec.n_total {
            return Err(Error::input(format!(
                "truth has {} labels, competition has {}",
                truth.len(),
                spec.n_total
            )));
        }
        if let Some(&bad) = truth.as_slice().iter().find(|&&l| !spec.alphabet.contains(l)) {
            return Err(Error::input(format!("truth label {bad} outside the alphabet")));
        }
        let occupied = fs::read_dir(&dir).map(|mut d| d.next().is_some()).unwrap_or(false);
        if occupied {
            if !force {
                return Err(Error::input(format!(
                    "{} already exists and is not empty (use --force to overwrite)",
                    dir.display()
                )));
            }
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_atomic(&dir.join(SPEC_FILE), &serde_json::to_vec_pretty(&spec)?)?;
        write_atomic(
            &dir.join(TRUTH_FILE),
            &Predictions::Labels(truth.clone()).canonical_bytes(),
        )?;
        let log = EventLog::create(dir.join(EVENTS_FILE), true)?;
        let blobs = BlobStore::open(dir.join(BLOB_DIR))?;
        Ok(Competition {
            board: Board::new(&spec)?,
            dir,
            spec,
            truth: truth.clone(),
            blobs,
            log,
            digests: Vec::new(),
            poisoned: false,
        })
    }

    /// Opens a competition and rebuilds its boards by replaying the log,
    /// checking each recomputed score against the logged one bit for bit.
    pub fn open(dir: impl Into<PathBuf>, fsync: bool) -> Result<(Self, Option<TornTail>)> {
        let dir = dir.into();
        let spec = read_spec(&dir)?;
        let truth = read_truth(&dir, &spec)?;
        let mut blobs = BlobStore::open(dir.join(BLOB_DIR))?;
        blobs.set_sync(fsync);
        let (log, LogContents { events, torn }) = EventLog::open(dir.join(EVENTS_FILE), fsync)?;
        let mut comp = Competition {
            board: Board::new(&spec)?,
            dir,
            spec,
            truth,
            blobs,
            log,
            digests: Vec::with_capacity(events.len()),
            poisoned: false,
        };
        for event in events {
            let preds = comp.load(&event.digest)?;
            let losses = comp.public_losses(&preds)?;
            let score = comp.board.step(&event.team, &losses, event.seq)?;
            if score.map(f64::to_bits) != event.score.map(f64::to_bits) {
                return Err(Error::Consistency(format!(
                    "replay of seq {} gives {:?}, log has {:?}",
                    event.seq, score, event.score
                )));
            }
            comp.digests.push(event.digest);
        }
        Ok((comp, torn))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn spec(&self) -> &CompetitionSpec {
        &self.spec
    }

    /// Toggles syncing of log appends and stored submissions. On by
    /// default after `create`; `open` takes it as an argument.
    pub fn set_durable(&mut self, durable: bool) {
        self.log.set_sync(durable);
        self.blobs.set_sync(durable);
    }

    pub fn blobs(&self) -> &BlobStore {
        &self.blobs
    }

    pub fn events_path(&self) -> PathBuf {
        self.dir.join(EVENTS_FILE)
    }

    pub fn submission_count(&self) -> u64 {
        self.log.last_seq()
    }

    pub fn parse(&self, bytes: &[u8]) -> Result<Predictions> {
        parse_predictions(bytes, self.spec.n_total, self.spec.submission_format())
    }

    /// Loads and parses a stored submission.
    pub fn load(&self, digest: &str) -> Result<Predictions> {
        parse_canonical(&self.blobs.get(digest)?, self.spec.n_total, self.spec.submission_format())
    }

    fn public_losses(&self, preds: &Predictions) -> Result<LossVector> {
        self.spec.loss.loss_vector(preds, &self.truth, &self.spec.split.public)
    }

    fn check_usable(&self) -> Result<()> {
        if self.poisoned {
            return Err(Error::Consistency(
                "an earlier append failed; reopen the competition".into(),
            ));
        }
        Ok(())
    }

    /// Scores `preds` for `team`, stores the payload and appends the event.
    pub fn submit(&mut self, team: &str, preds: &Predictions, ts: u64) -> Result<Event> {
        self.check_usable()?;
        if team.is_empty() {
            return Err(Error::input("team id is empty"));
        }
        if self.spec.closed {
            return Err(Error::input(format!("competition {} is closed", self.spec.id)));
        }
        let losses = self.public_losses(preds)?;
        let digest = self.blobs.put(&preds.canonical_bytes())?;
        let seq = self.log.last_seq() + 1;
        let score = self.board.step(team, &losses, seq)?;
        let event = Event {
            seq,
            ts,
            team: team.to_owned(),
            digest,
            score,
        };
        if let Err(e) = self.log.append(&event) {
            self.poisoned = true;
            return Err(e);
        }
        self.digests.push(event.digest.clone());
        Ok(event)
    }

    /// Submits a payload already in the blob store.
    pub fn submit_digest(&mut self, team: &str, digest: &str, ts: u64) -> Result<Event> {
        if !self.blobs.contains(digest) {
            return Err(Error::input(format!("no stored submission with digest {digest}")));
        }
        let preds = self.load(digest)?;
        self.submit(team, &preds, ts)
    }

    pub fn leaderboard(&self, kind: BoardKind) -> Result<Vec<LeaderboardEntry>> {
        match kind {
            BoardKind::Public => Ok(self.board.entries()),
            BoardKind::Private => {
                if !self.spec.closed {
                    return Err(Error::Sealed(self.spec.id.clone()));
                }
                self.private_entries()
            }
        }
    }

    /// Private scores of each ranked submission, ranked afresh.
    fn private_entries(&self) -> Result<Vec<LeaderboardEntry>> {
        let mut entries = Vec::new();
        for (team, seq, submissions) in self.board.chosen() {
            let preds = self.load(&self.digests[seq as usize - 1])?;
            let score = self
                .spec
                .loss
                .loss_vector(&preds, &self.truth, &self.spec.split.private)?
                .mean();
            entries.push(LeaderboardEntry {
                rank: 0,
                team,
                score,
                submissions,
                achieved_at: seq,
            });
        }
        entries.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.achieved_at.cmp(&b.achieved_at)));
        for (i, e) in entries.iter_mut().enumerate() {
            e.rank = i + 1;
        }
        Ok(entries)
    }

    pub fn close(&mut self) -> Result<()> {
        self.check_usable()?;
        if !self.spec.closed {
            let mut spec = self.spec.clone();
            spec.closed = true;
            write_atomic(&self.dir.join(SPEC_FILE), &serde_json::to_vec_pretty(&spec)?)?;
            self.spec = spec;
        }
        Ok(())
    }

    pub fn events(&self) -> Result<Vec<Event>> {
        Ok(read_log(self.events_path())?.events)
    }
}
