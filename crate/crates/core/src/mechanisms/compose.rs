//! Full leaderboards built from single-sequence mechanism instances.
//!
//! [`PerTeamBoard`] keeps one instance per team. [`PerRankBoard`] keeps one
//! instance per leaderboard position and places each submission at the best
//! rank whose instance accepts it, which does not rely on teams using a
//! single account.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Incumbent, MechanismSpec, MechanismState, StepOutcome};
use crate::losses::LossVector;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub team: String,
    pub score: f64,
    pub submissions: u64,
    /// Sequence number at which `score` was first achieved; earlier wins ties.
    #[serde(skip)]
    pub achieved_at: u64,
}

fn rank_entries(mut entries: Vec<LeaderboardEntry>) -> Vec<LeaderboardEntry> {
    entries.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.achieved_at.cmp(&b.achieved_at))
            .then_with(|| a.team.cmp(&b.team))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    entries
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSlot {
    pub state: MechanismState,
    pub submissions: u64,
    pub achieved_at: u64,
    /// Sequence number of the submission behind the current score.
    pub best_seq: Option<u64>,
}

/// One mechanism instance per team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTeamBoard {
    spec: MechanismSpec,
    n: usize,
    teams: BTreeMap<String, TeamSlot>,
}

impl PerTeamBoard {
    pub fn new(spec: MechanismSpec, n: usize) -> Result<Self> {
        // fail early on bad parameters
        spec.instantiate(n)?;
        Ok(PerTeamBoard {
            spec,
            n,
            teams: BTreeMap::new(),
        })
    }

    pub fn submit(&mut self, team: &str, losses: &LossVector, seq: u64) -> Result<StepOutcome> {
        if !self.teams.contains_key(team) {
            let state = self.spec.instantiate(self.n)?;
            self.teams.insert(
                team.to_owned(),
                TeamSlot {
                    state,
                    submissions: 0,
                    achieved_at: 0,
                    best_seq: None,
                },
            );
        }
        let slot = self.teams.get_mut(team).expect("inserted above");
        let out = slot.state.step(losses)?;
        slot.submissions += 1;
        if out.improved {
            slot.achieved_at = seq;
            slot.best_seq = Some(seq);
        }
        Ok(out)
    }

    pub fn team(&self, team: &str) -> Option<&TeamSlot> {
        self.teams.get(team)
    }

    pub fn teams(&self) -> impl Iterator<Item = (&str, &TeamSlot)> {
        self.teams.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn entries(&self) -> Vec<LeaderboardEntry> {
        let entries = self
            .teams
            .iter()
            .filter_map(|(team, slot)| {
                slot.state.best().score().map(|score| LeaderboardEntry {
                    rank: 0,
                    team: team.clone(),
                    score,
                    submissions: slot.submissions,
                    achieved_at: slot.achieved_at,
                })
            })
            .collect();
        rank_entries(entries)
    }
}

/// Runs a per-team board over `(team, losses)` events in order.
pub fn per_team_leaderboard<'a>(
    spec: MechanismSpec,
    n: usize,
    events: impl IntoIterator<Item = (&'a str, &'a LossVector)>,
) -> Result<Vec<LeaderboardEntry>> {
    let mut board = PerTeamBoard::new(spec, n)?;
    for (seq, (team, losses)) in events.into_iter().enumerate() {
        board.submit(team, losses, seq as u64 + 1)?;
    }
    Ok(board.entries())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSlot {
    pub state: MechanismState,
    pub team: String,
    pub seq: u64,
}

/// One mechanism instance per leaderboard position, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerRankBoard {
    spec: MechanismSpec,
    n: usize,
    capacity: Option<usize>,
    ranks: Vec<RankSlot>,
    submissions: BTreeMap<String, u64>,
}

impl PerRankBoard {
    /// `capacity` caps the number of ranks; `None` is unbounded.
    pub fn new(spec: MechanismSpec, n: usize, capacity: Option<usize>) -> Result<Self> {
        spec.instantiate(n)?;
        Ok(PerRankBoard {
            spec,
            n,
            capacity,
            ranks: Vec::new(),
            submissions: BTreeMap::new(),
        })
    }

    pub fn ranks(&self) -> &[RankSlot] {
        &self.ranks
    }

    /// Evaluates the submission against every rank, worst first, and places
    /// it at the best rank that accepts it. The accepting instance's stepped
    /// state is inserted there and lower ranks move down one place with
    /// their scores unchanged. Returns the 1-based placement and the
    /// released score, or `None` when no rank accepted.
    pub fn evaluate(
        &mut self,
        team: &str,
        losses: &LossVector,
        seq: u64,
    ) -> Result<Option<(usize, f64)>> {
        *self.submissions.entry(team.to_owned()).or_default() += 1;

        let open_slot = self.capacity.map_or(true, |c| self.ranks.len() < c);
        let mut placed: Option<(usize, MechanismState, f64)> = None;
        if open_slot {
            let mut fresh = self.spec.instantiate(self.n)?;
            let out = fresh.step(losses)?;
            placed = Some((self.ranks.len(), fresh, out.reported));
        }
        for r in (0..self.ranks.len()).rev() {
            let mut trial = self.ranks[r].state.clone();
            let out = trial.step(losses)?;
            if out.improved {
                placed = Some((r, trial, out.reported));
            }
        }
        let Some((at, state, score)) = placed else {
            return Ok(None);
        };
        self.ranks.insert(
            at,
            RankSlot {
                state,
                team: team.to_owned(),
                seq,
            },
        );
        if let Some(c) = self.capacity {
            self.ranks.truncate(c);
        }
        Ok(Some((at + 1, score)))
    }

    pub fn entries(&self) -> Vec<LeaderboardEntry> {
        self.ranks
            .iter()
            .enumerate()
            .map(|(i, slot)| LeaderboardEntry {
                rank: i + 1,
                team: slot.team.clone(),
                score: match slot.state.best() {
                    Incumbent::Score(s) => s,
                    Incumbent::Infinity => unreachable!("placed slots have released"),
                },
                submissions: self.submissions.get(&slot.team).copied().unwrap_or(0),
                achieved_at: slot.seq,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LADDER: MechanismSpec = MechanismSpec::Ladder { eta: 0.01 };

    fn emp(x: f64) -> LossVector {
        LossVector::new(vec![x]).unwrap()
    }

    fn board(entries: &[LeaderboardEntry]) -> Vec<(&str, f64)> {
        entries.iter().map(|e| (e.team.as_str(), e.score)).collect()
    }

    #[test]
    fn per_team_script() {
        let mut b = PerTeamBoard::new(LADDER, 1).unwrap();
        b.submit("A", &emp(0.3), 1).unwrap();
        b.submit("B", &emp(0.4), 2).unwrap();
        assert_eq!(board(&b.entries()), vec![("A", 0.3), ("B", 0.4)]);

        b.submit("B", &emp(0.25), 3).unwrap();
        assert_eq!(board(&b.entries()), vec![("B", 0.25), ("A", 0.3)]);

        let before = b.entries();
        let out = b.submit("B", &emp(0.25), 4).unwrap();
        assert!(!out.improved);
        let after = b.entries();
        assert_eq!(board(&before), board(&after));
        assert_eq!(after[0].submissions, 3);
        assert_eq!(after[0].rank, 1);
    }

    #[test]
    fn ties_go_to_earlier_achievement() {
        let mut b = PerTeamBoard::new(LADDER, 1).unwrap();
        b.submit("late", &emp(0.5), 1).unwrap();
        b.submit("early", &emp(0.3), 2).unwrap();
        b.submit("late", &emp(0.3), 3).unwrap();
        assert_eq!(board(&b.entries()), vec![("early", 0.3), ("late", 0.3)]);
    }

    #[test]
    fn per_rank_placement() {
        let mut b = PerRankBoard::new(LADDER, 1, None).unwrap();
        assert_eq!(b.evaluate("A", &emp(0.30), 1).unwrap(), Some((1, 0.30)));
        assert_eq!(b.evaluate("B", &emp(0.35), 2).unwrap(), Some((2, 0.35)));
        assert_eq!(b.evaluate("C", &emp(0.25), 3).unwrap(), Some((1, 0.25)));
        assert_eq!(
            board(&b.entries()),
            vec![("C", 0.25), ("A", 0.30), ("B", 0.35)]
        );
    }

    #[test]
    fn per_rank_matches_per_team_on_distinct_teams() {
        let script = [("A", 0.30), ("B", 0.35), ("C", 0.25)];
        let losses: Vec<(&str, LossVector)> =
            script.iter().map(|&(t, x)| (t, emp(x))).collect();
        let per_team =
            per_team_leaderboard(LADDER, 1, losses.iter().map(|(t, l)| (*t, l))).unwrap();
        let mut per_rank = PerRankBoard::new(LADDER, 1, None).unwrap();
        for (seq, (t, l)) in losses.iter().enumerate() {
            per_rank.evaluate(t, l, seq as u64 + 1).unwrap();
        }
        assert_eq!(board(&per_team), board(&per_rank.entries()));
    }

    #[test]
    fn per_rank_capacity_rejects() {
        let mut b = PerRankBoard::new(LADDER, 1, Some(2)).unwrap();
        b.evaluate("A", &emp(0.30), 1).unwrap();
        b.evaluate("B", &emp(0.35), 2).unwrap();
        assert_eq!(b.evaluate("C", &emp(0.40), 3).unwrap(), None);
        // within eta of rank 2: rejected everywhere
        assert_eq!(b.evaluate("C", &emp(0.345), 4).unwrap(), None);
        assert_eq!(b.evaluate("C", &emp(0.32), 5).unwrap(), Some((2, 0.32)));
        assert_eq!(board(&b.entries()), vec![("A", 0.30), ("C", 0.32)]);
        assert_eq!(b.entries()[1].submissions, 3);
    }

    #[test]
    fn per_rank_same_team_can_hold_two_ranks() {
        let mut b = PerRankBoard::new(LADDER, 1, None).unwrap();
        b.evaluate("A", &emp(0.30), 1).unwrap();
        b.evaluate("A", &emp(0.20), 2).unwrap();
        assert_eq!(board(&b.entries()), vec![("A", 0.20), ("A", 0.30)]);
    }
}
