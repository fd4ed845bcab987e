use std::fmt;
use std::str::FromStr;

use crate::error::ParseError;
use crate::id::{fmt_opt, parse_opt, ProcessId};

/// Identifies one injected search so its resolution can be traced.
pub type SearchToken = u64;

/// Wire payloads exchanged between processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payload {
    /// Request of `req` to join.
    Join {
        req: ProcessId,
    },
    /// Request of `req` to leave; `q` is the leaver's right neighbor.
    Leave {
        req: ProcessId,
        q: ProcessId,
    },
    /// Set up A. Carries the joiner's future right neighbor in stage 1.1,
    /// nothing in stage 1.2 and in leave stage 1.
    Sua {
        req: Option<ProcessId>,
    },
    /// Set up B.
    Sub,
    /// Tear down A.
    Tda,
    /// Tear down B.
    Tdb,
    /// Finish teardown.
    Ftd,
    Search {
        key: ProcessId,
        token: SearchToken,
    },
}

impl Payload {
    pub fn name(&self) -> &'static str {
        match self {
            Payload::Join { .. } => "join",
            Payload::Leave { .. } => "leave",
            Payload::Sua { .. } => "sua",
            Payload::Sub => "sub",
            Payload::Tda => "tda",
            Payload::Tdb => "tdb",
            Payload::Ftd => "ftd",
            Payload::Search { .. } => "search",
        }
    }

    /// Request messages that are routed hop by hop.
    pub fn is_routed(&self) -> bool {
        matches!(
            self,
            Payload::Join { .. } | Payload::Leave { .. } | Payload::Search { .. }
        )
    }

    pub fn is_setup(&self) -> bool {
        matches!(self, Payload::Sua { .. } | Payload::Sub)
    }

    pub fn is_teardown(&self) -> bool {
        matches!(self, Payload::Tda | Payload::Tdb)
    }

    /// Messages that belong to a request's link transition (stages 1 to 5).
    pub fn is_transition(&self) -> bool {
        self.is_setup() || self.is_teardown() || matches!(self, Payload::Ftd)
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Payload::Join { req } => write!(f, "join({req})"),
            Payload::Leave { req, q } => write!(f, "leave({req},{q})"),
            Payload::Sua { req } => write!(f, "sua({})", fmt_opt(req)),
            Payload::Search { key, token } => write!(f, "search({key},{token})"),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for Payload {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::new(format!("invalid message `{s}`"));
        let (name, args) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                (&s[..open], inner.split(',').collect::<Vec<_>>())
            }
            None => (s, Vec::new()),
        };
        let payload = match (name, args.as_slice()) {
            ("join", [req]) => Payload::Join { req: req.parse()? },
            ("leave", [req, q]) => Payload::Leave {
                req: req.parse()?,
                q: q.parse()?,
            },
            ("sua", [req]) => Payload::Sua {
                req: parse_opt(req)?,
            },
            ("sub", []) => Payload::Sub,
            ("tda", []) => Payload::Tda,
            ("tdb", []) => Payload::Tdb,
            ("ftd", []) => Payload::Ftd,
            ("search", [key, token]) => Payload::Search {
                key: key.parse()?,
                token: token.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        Ok(payload)
    }
}

/// A payload tagged with the overlay level it belongs to. The level is 0
/// everywhere in single-line mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Message {
    pub payload: Payload,
    pub level: u8,
}

impl Message {
    pub fn new(payload: Payload, level: u8) -> Self {
        Message { payload, level }
    }

    /// Renders the message as seen on a link of `link_level`; the level tag is
    /// only spelled out when it differs.
    pub fn render(&self, link_level: u8) -> String {
        if self.level == link_level {
            self.payload.to_string()
        } else {
            format!("{}@{}", self.payload, self.level)
        }
    }

    pub fn parse(s: &str, link_level: u8) -> Result<Self, ParseError> {
        match s.rsplit_once('@') {
            Some((p, lvl)) => Ok(Message {
                payload: p.parse()?,
                level: lvl
                    .parse()
                    .map_err(|_| ParseError::new(format!("invalid level in `{s}`")))?,
            }),
            None => Ok(Message {
                payload: s.parse()?,
                level: link_level,
            }),
        }
    }
}
