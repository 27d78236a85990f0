//! File formats, benchmark and wire protocol around [`crate::ccfomi`].

mod bench;
mod notes;
pub mod protocol;
mod trace;

use std::path::Path;

pub use bench::{bench, BenchConfig, LatencyReport};
pub use notes::{format_symbol, parse_notes, parse_token, NotesError};
pub use trace::{read_trace, strip_latency, write_record, write_trace};

use crate::ccfomi::{Session, SessionConfig, SessionError, UnitRecord};

/// Reads a JSON session config; absent fields take their defaults.
pub fn load_config(path: &Path) -> Result<SessionConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg: SessionConfig = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Re-runs a recorded session: each unit gets the note it consumed
/// originally.
pub fn replay(config: &SessionConfig, trace: &[UnitRecord]) -> Result<Vec<UnitRecord>, SessionError> {
    let mut session = Session::new(config.clone())?;
    trace
        .iter()
        .map(|r| {
            if let Some(sym) = r.input {
                session.push_note(sym)?;
            }
            session.step()
        })
        .collect()
}
