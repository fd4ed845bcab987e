use std::fmt;
use std::str::FromStr;

use crate::error::ParseError;

/// Identifier of a process in the overlay.
///
/// Identifiers are totally ordered. The two extreme values of the underlying
/// integer are reserved for the sentinel processes that bracket the line and
/// never leave it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId(i64);

impl ProcessId {
    pub const NEG_INF: ProcessId = ProcessId(i64::MIN);
    pub const POS_INF: ProcessId = ProcessId(i64::MAX);

    pub const fn new(value: i64) -> Self {
        ProcessId(value)
    }

    pub const fn value(self) -> i64 {
        self.0
    }

    pub fn is_sentinel(self) -> bool {
        self == Self::NEG_INF || self == Self::POS_INF
    }

    pub fn is_ordinary(self) -> bool {
        !self.is_sentinel()
    }
}

impl From<i64> for ProcessId {
    fn from(value: i64) -> Self {
        ProcessId(value)
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::NEG_INF => f.write_str("-inf"),
            Self::POS_INF => f.write_str("+inf"),
            ProcessId(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for ProcessId {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "-inf" => Ok(Self::NEG_INF),
            "+inf" => Ok(Self::POS_INF),
            _ => {
                let v: i64 = s
                    .parse()
                    .map_err(|_| ParseError::new(format!("invalid process id `{s}`")))?;
                if v == i64::MIN || v == i64::MAX {
                    return Err(ParseError::new(format!(
                        "process id `{s}` collides with a sentinel"
                    )));
                }
                Ok(ProcessId(v))
            }
        }
    }
}

/// Optional id rendered as `-` when absent.
pub(crate) fn fmt_opt(id: Option<ProcessId>) -> String {
    id.map_or_else(|| "-".to_string(), |i| i.to_string())
}

pub(crate) fn parse_opt(s: &str) -> Result<Option<ProcessId>, ParseError> {
    if s == "-" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinels_bracket_everything() {
        for v in [i64::MIN + 1, -5, 0, 7, i64::MAX - 1] {
            let id = ProcessId::new(v);
            assert!(ProcessId::NEG_INF < id && id < ProcessId::POS_INF);
            assert!(id.is_ordinary());
        }
        assert!(ProcessId::NEG_INF.is_sentinel());
        assert!(ProcessId::POS_INF.is_sentinel());
    }

    #[test]
    fn text_form() {
        assert_eq!(ProcessId::NEG_INF.to_string(), "-inf");
        assert_eq!(ProcessId::POS_INF.to_string(), "+inf");
        assert_eq!("-12".parse::<ProcessId>().unwrap(), ProcessId::new(-12));
        assert_eq!("+inf".parse::<ProcessId>().unwrap(), ProcessId::POS_INF);
        assert!("abc".parse::<ProcessId>().is_err());
        assert!(i64::MAX.to_string().parse::<ProcessId>().is_err());
    }
}
