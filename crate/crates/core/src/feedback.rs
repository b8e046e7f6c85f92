//! Capture of human judgements: per-clip star ratings and per-aspect votes
//! between the two search experiences.
//!
//! Both stores are append-only logs. Summaries are folds over the logs: mean
//! stars per method and query kind, vote counts per aspect with a later vote
//! from the same session replacing the earlier one.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::QueryLabel;
use crate::corpus::io::read_jsonl;
use crate::error::{Error, Result};
use crate::router::MethodKind;

pub const RATINGS_LOG: &str = "ratings.jsonl";
pub const VOTES_LOG: &str = "votes.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rating {
    pub session_id: String,
    pub query_id: String,
    pub method: String,
    pub clip_id: String,
    pub stars: i64,
    /// Kind of query the rated result answered, when the client knows it.
    #[serde(default)]
    pub query_kind: Option<QueryLabel>,
    #[serde(default)]
    pub timestamp: Option<String>,
}

impl Rating {
    /// Checks the invariants and canonicalises the method label.
    pub fn validated(mut self) -> Result<Self> {
        if !(1..=5).contains(&self.stars) {
            return Err(Error::validation(format!("stars must lie in 1..=5, got {}", self.stars)));
        }
        for (name, v) in [("session_id", &self.session_id), ("query_id", &self.query_id), ("clip_id", &self.clip_id)] {
            if v.trim().is_empty() {
                return Err(Error::validation(format!("{name} is empty")));
            }
        }
        let kind: MethodKind = self
            .method
            .parse()
            .map_err(|_| Error::validation(format!("unknown method {:?}", self.method)))?;
        self.method = kind.label().to_owned();
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    #[serde(alias = "Engagingness")]
    Engagingness,
    #[serde(alias = "Interestingness")]
    Interestingness,
    #[serde(alias = "Humanness")]
    Humanness,
    #[serde(alias = "Informativeness")]
    Informativeness,
}

impl Aspect {
    pub const ALL: [Aspect; 4] = [
        Aspect::Engagingness,
        Aspect::Interestingness,
        Aspect::Humanness,
        Aspect::Informativeness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aspect::Engagingness => "engagingness",
            Aspect::Interestingness => "interestingness",
            Aspect::Humanness => "humanness",
            Aspect::Informativeness => "informativeness",
        }
    }
}

/// Which experience the participant preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    #[serde(alias = "TextToVideo")]
    TextToVideo,
    #[serde(alias = "Traditional")]
    Traditional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AspectVote {
    pub session_id: String,
    pub aspect: Aspect,
    pub choice: Choice,
    #[serde(default)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Ratings,
    Votes,
}

impl Stream {
    pub fn file_name(self) -> &'static str {
        match self {
            Stream::Ratings => RATINGS_LOG,
            Stream::Votes => VOTES_LOG,
        }
    }
}

/// Durable destination of the feedback logs.
pub trait LogSink: Send {
    fn append(&mut self, stream: Stream, line: &str) -> Result<()>;
}

/// Appends one JSON line per record to files in a directory.
#[derive(Debug)]
pub struct FileSink {
    dir: PathBuf,
}

impl FileSink {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }
}

impl LogSink for FileSink {
    fn append(&mut self, stream: Stream, line: &str) -> Result<()> {
        let path = self.dir.join(stream.file_name());
        let mut f: File = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        f.write_all(format!("{line}\n").as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&path, e))
    }
}

#[derive(Debug, Default)]
pub struct MemorySink {
    pub lines: Vec<(Stream, String)>,
}

impl LogSink for MemorySink {
    fn append(&mut self, stream: Stream, line: &str) -> Result<()> {
        self.lines.push((stream, line.to_owned()));
        Ok(())
    }
}

/// Rejects every write. Used to check that a failed write leaves the
/// stores untouched.
#[derive(Debug, Default)]
pub struct FailingSink;

impl LogSink for FailingSink {
    fn append(&mut self, stream: Stream, _line: &str) -> Result<()> {
        Err(Error::io(
            stream.file_name(),
            std::io::Error::other("sink rejected the write"),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub status: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStars {
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingsSummary {
    pub n_ratings: usize,
    /// method → query kind → mean; kind `all` pools every kind.
    pub methods: BTreeMap<String, BTreeMap<String, MeanStars>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectCount {
    pub text_to_video: usize,
    pub traditional: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotesSummary {
    pub sessions: usize,
    pub aspects: BTreeMap<String, AspectCount>,
}

pub fn summarize_ratings(ratings: &[Rating]) -> RatingsSummary {
    let mut sums: BTreeMap<String, BTreeMap<String, (i64, usize)>> = BTreeMap::new();
    for r in ratings {
        let kind = r.query_kind.map_or("unspecified", QueryLabel::as_str);
        let per = sums.entry(r.method.clone()).or_default();
        for key in [kind, "all"] {
            let e = per.entry(key.to_owned()).or_default();
            e.0 += r.stars;
            e.1 += 1;
        }
    }
    RatingsSummary {
        n_ratings: ratings.len(),
        methods: sums
            .into_iter()
            .map(|(m, per)| {
                let per = per
                    .into_iter()
                    .map(|(k, (sum, count))| {
                        (
                            k,
                            MeanStars {
                                mean: sum as f64 / count as f64,
                                count,
                            },
                        )
                    })
                    .collect();
                (m, per)
            })
            .collect(),
    }
}

pub fn summarize_votes(votes: &[AspectVote]) -> VotesSummary {
    let mut latest: BTreeMap<(&str, Aspect), Choice> = BTreeMap::new();
    for v in votes {
        latest.insert((v.session_id.as_str(), v.aspect), v.choice);
    }
    let mut aspects: BTreeMap<String, AspectCount> = Aspect::ALL
        .iter()
        .map(|a| {
            (
                a.as_str().to_owned(),
                AspectCount {
                    text_to_video: 0,
                    traditional: 0,
                    total: 0,
                },
            )
        })
        .collect();
    for ((_, aspect), choice) in &latest {
        let c = aspects.get_mut(aspect.as_str()).expect("all aspects present");
        match choice {
            Choice::TextToVideo => c.text_to_video += 1,
            Choice::Traditional => c.traditional += 1,
        }
        c.total += 1;
    }
    let sessions = latest.keys().map(|(s, _)| *s).collect::<std::collections::BTreeSet<_>>().len();
    VotesSummary { sessions, aspects }
}

pub struct FeedbackStore {
    ratings: Vec<Rating>,
    votes: Vec<AspectVote>,
    sink: Box<dyn LogSink>,
}

impl std::fmt::Debug for FeedbackStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeedbackStore")
            .field("ratings", &self.ratings.len())
            .field("votes", &self.votes.len())
            .finish()
    }
}

impl FeedbackStore {
    pub fn with_sink(sink: Box<dyn LogSink>) -> Self {
        Self {
            ratings: Vec::new(),
            votes: Vec::new(),
            sink,
        }
    }

    pub fn in_memory() -> Self {
        Self::with_sink(Box::new(MemorySink::default()))
    }

    /// Replays any logs already in `dir` and appends new records there.
    pub fn open_dir(dir: &Path) -> Result<Self> {
        let sink = FileSink::new(dir)?;
        let load = |name: &str| dir.join(name);
        let ratings = if load(RATINGS_LOG).exists() {
            read_jsonl(&load(RATINGS_LOG))?
        } else {
            Vec::new()
        };
        let votes = if load(VOTES_LOG).exists() {
            read_jsonl(&load(VOTES_LOG))?
        } else {
            Vec::new()
        };
        Ok(Self {
            ratings,
            votes,
            sink: Box::new(sink),
        })
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn votes(&self) -> &[AspectVote] {
        &self.votes
    }

    /// Validates, writes to the sink, and only then records in memory.
    pub fn rate(&mut self, rating: Rating) -> Result<Ack> {
        let rating = rating.validated()?;
        self.sink.append(Stream::Ratings, &serde_json::to_string(&rating)?)?;
        self.ratings.push(rating);
        Ok(Ack {
            status: "stored".into(),
            count: self.ratings.len(),
        })
    }

    /// Status is `updated` when the session had already voted on the aspect.
    pub fn vote(&mut self, vote: AspectVote) -> Result<Ack> {
        if vote.session_id.trim().is_empty() {
            return Err(Error::validation("session_id is empty"));
        }
        let seen = self
            .votes
            .iter()
            .any(|v| v.session_id == vote.session_id && v.aspect == vote.aspect);
        self.sink.append(Stream::Votes, &serde_json::to_string(&vote)?)?;
        self.votes.push(vote);
        Ok(Ack {
            status: if seen { "updated" } else { "stored" }.into(),
            count: self.votes.len(),
        })
    }

    pub fn ratings_summary(&self) -> RatingsSummary {
        summarize_ratings(&self.ratings)
    }

    pub fn votes_summary(&self) -> VotesSummary {
        summarize_votes(&self.votes)
    }
}
