use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Number of letter classes (A..Z).
pub const N_CLASSES: usize = 26;

/// An uppercase English letter, stored as its class index (A = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u8);

impl Letter {
    pub fn from_index(index: usize) -> Option<Letter> {
        (index < N_CLASSES).then(|| Letter(index as u8))
    }

    pub fn from_char(c: char) -> Option<Letter> {
        c.is_ascii_uppercase().then(|| Letter(c as u8 - b'A'))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn as_char(self) -> char {
        (b'A' + self.0) as char
    }

    pub fn all() -> impl Iterator<Item = Letter> {
        (0..N_CLASSES as u8).map(Letter)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Letter::from_char(c),
            _ => None,
        }
        .ok_or_else(|| Error::InvalidArgument(format!("label `{s}` is not a letter A-Z")))
    }
}
