use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How coverage and faithfulness values are written in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Fraction,
    Percent,
}

impl Units {
    pub fn name(self) -> &'static str {
        match self {
            Units::Fraction => "fraction",
            Units::Percent => "percent",
        }
    }

    pub fn to_fraction(self, value: f64) -> f64 {
        match self {
            Units::Fraction => value,
            Units::Percent => value / 100.0,
        }
    }

    pub fn from_fraction(self, value: f64) -> f64 {
        match self {
            Units::Fraction => value,
            Units::Percent => value * 100.0,
        }
    }

    /// Resolves the units declared by a file header against the units asked
    /// for on the command line. Either may be absent.
    pub fn reconcile(declared: Option<Units>, requested: Option<Units>) -> Result<Units, Error> {
        match (declared, requested) {
            (Some(d), Some(r)) if d != r => Err(Error::UnitMismatch {
                declared: d.name(),
                requested: r.name(),
            }),
            (Some(u), _) | (None, Some(u)) => Ok(u),
            (None, None) => Ok(Units::Fraction),
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "fraction" => Ok(Units::Fraction),
            "percent" => Ok(Units::Percent),
            other => Err(Error::InvalidConfig(format!("unknown units `{other}`"))),
        }
    }
}

/// Two-decimal percentage, the format used in human-readable tables.
pub fn pct(fraction: f64) -> String {
    format!("{:.2}", fraction * 100.0)
}
