//! Competitions on disk: submission parsing, public/private splits, the
//! event log and content-addressed submission storage.

mod blob;
mod competition;
mod log;
mod split;
mod submission;

pub use blob::{digest, is_digest, BlobStore};
pub use competition::{
    read_spec, read_truth, BoardKind, Competition, CompetitionSpec, Composition, BLOB_DIR,
    EVENTS_FILE, SPEC_FILE, TRUTH_FILE,
};
pub use log::{parse_log, read_log, Event, EventLog, LogContents, TornTail, EVENT_SCHEMA_VERSION};
pub use split::{split_assign, Split};
pub use submission::{parse_canonical, parse_predictions, parse_submission_file, SubmissionFormat};
