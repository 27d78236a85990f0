//! JSON frames exchanged with live clients.

use serde::{Deserialize, Serialize};

use super::notes::parse_token;
use crate::ccfomi::{Branch, Rho};
use crate::oracle::{OracleJson, Symbol};

/// A note as sent by a client: a label or a one-letter name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymToken {
    Label(Symbol),
    Name(String),
}

impl SymToken {
    pub fn symbol(&self) -> Result<Symbol, String> {
        match self {
            SymToken::Label(s) => Ok(*s),
            SymToken::Name(n) => parse_token(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClientFrame {
    Note { sym: SymToken },
    Config { rho: Rho },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerFrame {
    Learned { i: usize, sym: Symbol },
    Out { unit: u64, sym: Symbol, branch: Branch },
    Oracle { snapshot: OracleJson },
    Error { msg: String },
}

impl ServerFrame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }
}

pub fn parse_client_frame(text: &str) -> Result<ClientFrame, String> {
    serde_json::from_str(text).map_err(|e| format!("malformed frame: {e}"))
}
