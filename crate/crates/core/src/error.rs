use thiserror::Error;

/// Which party of a link an error or quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::A => f.write_str("a"),
            Side::B => f.write_str("b"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} lies outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid source setting: {0}")]
    InvalidSetting(String),

    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error("undefined rate: {0}")]
    UndefinedRate(&'static str),

    #[error("decoy estimation infeasible: {0}")]
    InfeasibleDecoy(String),

    #[error("declare-vacuum probability on side {0} is zero")]
    MissingDeclareVacuum(Side),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("quantum coin unusable: imbalance {0} >= 0.5")]
    UnusableCoin(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "(0, 1)",
        })
    }
}
