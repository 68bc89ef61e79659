//! Re-running a recorded competition under a different mechanism.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::significance::{compare_pairs, PairTest, SIGNIFICANCE_LEVEL};
use crate::losses::{LabelVector, LossVector, Predictions};
use crate::mechanisms::{LeaderboardEntry, MechanismSpec, PerTeamBoard};
use crate::store::{
    parse_canonical, read_log, read_spec, read_truth, BlobStore, BoardKind, CompetitionSpec,
    BLOB_DIR, EVENTS_FILE,
};
use crate::{Error, Result};

/// Leaderboards produced by one mechanism over a recorded log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismReplay {
    pub mechanism: MechanismSpec,
    pub public: Vec<LeaderboardEntry>,
    pub private: Vec<LeaderboardEntry>,
    /// Digest of the submission each team is ranked by.
    pub chosen: BTreeMap<String, String>,
}

impl MechanismReplay {
    pub fn board(&self, kind: BoardKind) -> &[LeaderboardEntry] {
        match kind {
            BoardKind::Public => &self.public,
            BoardKind::Private => &self.private,
        }
    }
}

/// A team placed differently by two mechanisms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perturbation {
    pub board: BoardKind,
    pub team: String,
    pub rank_a: Option<usize>,
    pub rank_b: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub top: usize,
    pub a: MechanismReplay,
    pub b: MechanismReplay,
    pub perturbations: Vec<Perturbation>,
}

/// A recorded competition loaded for replay.
pub struct RecordedCompetition {
    spec: CompetitionSpec,
    truth: LabelVector,
    blobs: BlobStore,
    events: Vec<crate::store::Event>,
}

impl RecordedCompetition {
    pub fn load(dir: &Path) -> Result<Self> {
        let spec = read_spec(dir)?;
        let truth = read_truth(dir, &spec)?;
        let blobs = BlobStore::open(dir.join(BLOB_DIR))?;
        let events = read_log(dir.join(EVENTS_FILE))?.events;
        Ok(RecordedCompetition {
            spec,
            truth,
            blobs,
            events,
        })
    }

    pub fn spec(&self) -> &CompetitionSpec {
        &self.spec
    }

    pub fn load_predictions(&self, digest: &str) -> Result<Predictions> {
        parse_canonical(&self.blobs.get(digest)?, self.spec.n_total, self.spec.submission_format())
    }

    pub fn private_losses(&self, digest: &str) -> Result<LossVector> {
        let preds = self.load_predictions(digest)?;
        self.spec.loss.loss_vector(&preds, &self.truth, &self.spec.split.private)
    }

    /// Runs each mechanism with one instance per team over the whole log,
    /// loading every submission once.
    pub fn replay(&self, mechanisms: &[MechanismSpec]) -> Result<Vec<MechanismReplay>> {
        let n = self.spec.n_public();
        let mut boards: Vec<PerTeamBoard> = mechanisms
            .iter()
            .map(|m| PerTeamBoard::new(*m, n))
            .collect::<Result<_>>()?;
        for (index, event) in self.events.iter().enumerate() {
            let preds = self.load_predictions(&event.digest).map_err(|e| Error::CorruptRecord {
                index,
                message: format!("submission {}: {e}", event.digest),
            })?;
            let losses = self.spec.loss.loss_vector(&preds, &self.truth, &self.spec.split.public)?;
            for board in &mut boards {
                board.submit(&event.team, &losses, event.seq)?;
            }
        }
        boards
            .into_iter()
            .zip(mechanisms)
            .map(|(board, &mechanism)| {
                let mut chosen = BTreeMap::new();
                let mut private = Vec::new();
                for (team, slot) in board.teams() {
                    let Some(seq) = slot.best_seq else { continue };
                    let digest = self.events[seq as usize - 1].digest.clone();
                    private.push(LeaderboardEntry {
                        rank: 0,
                        team: team.to_owned(),
                        score: self.private_losses(&digest)?.mean(),
                        submissions: slot.submissions,
                        achieved_at: seq,
                    });
                    chosen.insert(team.to_owned(), digest);
                }
                private.sort_by(|a, b| {
                    a.score
                        .total_cmp(&b.score)
                        .then(a.achieved_at.cmp(&b.achieved_at))
                        .then_with(|| a.team.cmp(&b.team))
                });
                for (i, e) in private.iter_mut().enumerate() {
                    e.rank = i + 1;
                }
                Ok(MechanismReplay {
                    mechanism,
                    public: board.entries(),
                    private,
                    chosen,
                })
            })
            .collect()
    }
}

/// Runs `mechanism` over the log in `dir`.
pub fn replay_competition(dir: &Path, mechanism: MechanismSpec) -> Result<MechanismReplay> {
    let mut runs = RecordedCompetition::load(dir)?.replay(&[mechanism])?;
    Ok(runs.remove(0))
}

/// Teams in the top `top` of either board whose rank differs.
pub fn perturbation_diff(
    board: BoardKind,
    a: &[LeaderboardEntry],
    b: &[LeaderboardEntry],
    top: usize,
) -> Vec<Perturbation> {
    let rank_in = |entries: &[LeaderboardEntry], team: &str| {
        entries.iter().find(|e| e.team == team).map(|e| e.rank)
    };
    let mut teams: Vec<&str> = a
        .iter()
        .chain(b)
        .filter(|e| e.rank <= top)
        .map(|e| e.team.as_str())
        .collect();
    teams.sort_unstable();
    teams.dedup();
    let mut out: Vec<Perturbation> = teams
        .into_iter()
        .filter_map(|team| {
            let (ra, rb) = (rank_in(a, team), rank_in(b, team));
            (ra != rb).then(|| Perturbation {
                board,
                team: team.to_owned(),
                rank_a: ra,
                rank_b: rb,
            })
        })
        .collect();
    let key = |p: &Perturbation| p.rank_a.min(p.rank_b).or(p.rank_a).or(p.rank_b);
    out.sort_by(|x, y| key(x).cmp(&key(y)).then_with(|| x.team.cmp(&y.team)));
    out
}

/// Replays the log under `a` and `b` and diffs their top-`top` boards.
pub fn compare_mechanisms(dir: &Path, a: MechanismSpec, b: MechanismSpec, top: usize) -> Result<ReplayReport> {
    let mut runs = RecordedCompetition::load(dir)?.replay(&[a, b])?;
    let b = runs.pop().expect("two runs");
    let a = runs.pop().expect("two runs");
    Ok(report_from(a, b, top))
}

pub fn report_from(a: MechanismReplay, b: MechanismReplay, top: usize) -> ReplayReport {
    let mut perturbations = perturbation_diff(BoardKind::Private, &a.private, &b.private, top);
    perturbations.extend(perturbation_diff(BoardKind::Public, &a.public, &b.public, top));
    ReplayReport {
        top,
        a,
        b,
        perturbations,
    }
}

/// Two teams whose relative order in the top of a board differs between
/// the runs, with the paired test of their chosen submissions under one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionTest {
    pub board: BoardKind,
    pub team_x: String,
    pub team_y: String,
    /// Which run's chosen submissions were compared: "a" or "b".
    pub run: String,
    #[serde(flatten)]
    pub test: PairTest,
}

/// Finds every pair of teams ordered differently by the two runs within
/// the top `top`, and tests each pair's private losses under both runs'
/// choices. Bonferroni runs over all tests together.
pub fn test_inversions(recorded: &RecordedCompetition, report: &ReplayReport) -> Result<Vec<InversionTest>> {
    let mut cases: Vec<(BoardKind, String, String)> = Vec::new();
    for kind in [BoardKind::Private, BoardKind::Public] {
        let (a, b) = (report.a.board(kind), report.b.board(kind));
        let rank = |entries: &[LeaderboardEntry], team: &str| {
            entries.iter().find(|e| e.team == team).map_or(usize::MAX, |e| e.rank)
        };
        let mut teams: Vec<&str> = a
            .iter()
            .chain(b)
            .filter(|e| e.rank <= report.top)
            .map(|e| e.team.as_str())
            .collect();
        teams.sort_unstable();
        teams.dedup();
        for (i, x) in teams.iter().enumerate() {
            for y in &teams[i + 1..] {
                let order_a = rank(a, x) < rank(a, y);
                let order_b = rank(b, x) < rank(b, y);
                if order_a != order_b {
                    cases.push((kind, x.to_string(), y.to_string()));
                }
            }
        }
    }

    let mut labels = Vec::new();
    let mut vectors: Vec<(LossVector, LossVector)> = Vec::new();
    for (kind, x, y) in &cases {
        for (run, replay) in [("a", &report.a), ("b", &report.b)] {
            let dx = replay.chosen.get(x).ok_or_else(|| Error::input(format!("no submission for {x}")))?;
            let dy = replay.chosen.get(y).ok_or_else(|| Error::input(format!("no submission for {y}")))?;
            vectors.push((recorded.private_losses(dx)?, recorded.private_losses(dy)?));
            labels.push((*kind, x.clone(), y.clone(), run.to_string()));
        }
    }
    let pairs: Vec<(&LossVector, &LossVector)> = vectors.iter().map(|(x, y)| (x, y)).collect();
    let tests = compare_pairs(&pairs, SIGNIFICANCE_LEVEL)?;
    Ok(labels
        .into_iter()
        .zip(tests)
        .map(|((board, team_x, team_y, run), test)| InversionTest {
            board,
            team_x,
            team_y,
            run,
            test,
        })
        .collect())
}
