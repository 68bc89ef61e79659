use ladder_core::losses::{LabelAlphabet, LabelVector, LossKind};
use ladder_core::mechanisms::MechanismSpec;
use ladder_core::store::{read_log, Competition, CompetitionSpec, Composition, Split, EVENTS_FILE};
use ladder_core::LeaderboardEntry;
use ladder_service::{router, AppState, SubmitResponse};
use serde_json::json;

fn truth() -> LabelVector {
    LabelVector::from_bits("1111000011110000".bytes().map(|b| b == b'1'))
}

fn create(data: &std::path::Path, id: &str, mechanism: MechanismSpec) {
    let spec = CompetitionSpec {
        id: id.into(),
        alphabet: LabelAlphabet::BINARY,
        n_total: 16,
        split: Split {
            public: (0..8).collect(),
            private: (8..16).collect(),
        },
        loss: LossKind::ZeroOne,
        mechanism,
        composition: Composition::PerTeam,
        raw_scale: 1.0,
        split_seed: None,
        closed: false,
    };
    Competition::create(data.join(id), spec, &truth(), false).unwrap();
}

async fn spawn(data: &std::path::Path) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(AppState::new(data).with_fsync(false));
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn csv(bits: &str) -> String {
    bits.chars().map(|c| format!("{c}\n")).collect()
}

#[tokio::test(flavor = "multi_thread")]
async fn endpoints() {
    let data = tempfile::tempdir().unwrap();
    create(data.path(), "demo", MechanismSpec::Ladder { eta: 0.01 });
    let base = spawn(data.path()).await;
    let http = reqwest::Client::new();

    let health = http.get(format!("{base}/health")).send().await.unwrap();
    assert_eq!(health.status(), 200);

    let missing = http.get(format!("{base}/competitions/nope/leaderboard")).send().await.unwrap();
    assert_eq!(missing.status(), 404);

    let board: Vec<LeaderboardEntry> = http
        .get(format!("{base}/competitions/demo/leaderboard"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(board.is_empty());

    let url = format!("{base}/competitions/demo/submissions");
    let first = http
        .post(&url)
        .json(&json!({"team": "a", "csv": csv("1100000011110000")}))
        .send()
        .await
        .unwrap();
    assert_eq!(first.status(), 200);
    let first: SubmitResponse = first.json().await.unwrap();
    assert_eq!(first.score, Some(0.25));
    assert_eq!(first.seq, 1);
    assert_eq!(first.mechanism, "ladder");

    // resubmitting by digest repeats the incumbent
    let again: SubmitResponse = http
        .post(&url)
        .json(&json!({"team": "a", "digest": first.digest}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!((again.score, again.seq), (Some(0.25), 2));

    let bad = http
        .post(&url)
        .json(&json!({"team": "a", "csv": "1\n0\nx\n".to_string() + &"0\n".repeat(13)}))
        .send()
        .await
        .unwrap();
    assert_eq!(bad.status(), 400);
    let body: serde_json::Value = bad.json().await.unwrap();
    assert!(body["error"].as_str().unwrap().contains("line 3"), "{body}");

    let both = http
        .post(&url)
        .json(&json!({"team": "a", "csv": "1\n", "digest": "00"}))
        .send()
        .await
        .unwrap();
    assert_eq!(both.status(), 400);

    let sealed = http
        .get(format!("{base}/competitions/demo/leaderboard?board=private"))
        .send()
        .await
        .unwrap();
    assert_eq!(sealed.status(), 403);

    let closed = http.post(format!("{base}/competitions/demo/close")).send().await.unwrap();
    assert_eq!(closed.status(), 204);
    let private: Vec<LeaderboardEntry> = http
        .get(format!("{base}/competitions/demo/leaderboard?board=private"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(private.len(), 1);
    assert_eq!(private[0].score, 0.0);
}

#[tokio::test(flavor = "multi_thread")]
async fn per_team_script_ranks() {
    // public losses b 0.125, a 0.25, c 0.5; eta 0.01 releases b as 0.13
    let data = tempfile::tempdir().unwrap();
    create(data.path(), "script", MechanismSpec::Ladder { eta: 0.01 });
    let base = spawn(data.path()).await;
    let http = reqwest::Client::new();
    let url = format!("{base}/competitions/script/submissions");
    for (team, bits) in [
        ("a", "1100000000000000"),
        ("b", "1111000100000000"),
        ("a", "1111001100000000"),
        ("c", "0000000000000000"),
    ] {
        let r = http.post(&url).json(&json!({"team": team, "csv": csv(bits)})).send().await.unwrap();
        assert_eq!(r.status(), 200);
    }
    let board: Vec<LeaderboardEntry> = http
        .get(format!("{base}/competitions/script/leaderboard?board=public"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let got: Vec<(usize, &str, f64, u64)> = board
        .iter()
        .map(|e| (e.rank, e.team.as_str(), e.score, e.submissions))
        .collect();
    assert_eq!(got, vec![(1, "b", 0.13, 1), (2, "a", 0.25, 2), (3, "c", 0.5, 1)]);
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_submissions_replay() {
    let data = tempfile::tempdir().unwrap();
    create(data.path(), "race", MechanismSpec::LadderPf);
    let base = spawn(data.path()).await;
    let http = reqwest::Client::new();
    let url = format!("{base}/competitions/race/submissions");
    let send = |bits: &'static str| {
        let http = http.clone();
        let url = url.clone();
        async move {
            http.post(&url)
                .json(&json!({"team": "shared", "csv": csv(bits)}))
                .send()
                .await
                .unwrap()
                .json::<SubmitResponse>()
                .await
                .unwrap()
        }
    };
    let (x, y) = tokio::join!(send("1100000000000000"), send("1111000000000000"));
    let mut seqs = [x.seq, y.seq];
    seqs.sort();
    assert_eq!(seqs, [1, 2]);

    let log = read_log(data.path().join("race").join(EVENTS_FILE)).unwrap();
    for r in [&x, &y] {
        let e = &log.events[r.seq as usize - 1];
        assert_eq!(e.score.map(f64::to_bits), r.score.map(f64::to_bits));
    }
    // reopening replays the log and checks every score
    Competition::open(data.path().join("race"), false).unwrap();
}
