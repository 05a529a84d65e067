//! Simulation and analysis of parallelized Bell-pair generation mediated by a
//! coherent-light qudit.
//!
//! Two qudit encodings are supported: a *phase* encoding, where the qudit
//! lives in the phase-space angle of a coherent pulse, and a hybrid *cat*
//! encoding, where an ancilla qubit is entangled with the photon-number
//! parity of the pulse so that single-photon loss can be heralded through an
//! `XX` parity check and corrected with single-qubit rotations.
//!
//! The crate has two layers:
//!
//! * an exact small-system simulator ([`registers`], [`protocol`],
//!   [`measurement`]) that keeps the light symbolic as coherent-state labels
//!   and samples full protocol trajectories, and
//! * closed-form error/fidelity analysis ([`loss`], [`analysis`]) with
//!   brute-force Fock-space oracles ([`oracle`]) used to cross-validate every
//!   formula at desk scale.

pub mod analysis;
pub mod cli;
pub mod loss;
pub mod measurement;
pub mod numerics;
pub mod optics;
pub mod oracle;
pub mod protocol;
pub mod registers;

use thiserror::Error;

/// Complex amplitude type used throughout.
pub type Complex = num_complex::Complex64;

/// Real scalar type used throughout.
pub type Real = f64;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fock truncation error: {0}")]
    Truncation(String),
    #[error("annihilation of (numerically) zero state")]
    ZeroState,
    #[error("register too large: {0}")]
    Size(String),
    #[error("projection probability below representable range")]
    ZeroProbability,
    #[error("optimizer failed to converge: {0}")]
    Convergence(String),
    #[error("outside validity regime: {0}")]
    Regime(String),
    #[error("encoding error: {0}")]
    Encoding(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Qudit encoding variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Phase,
    Cat,
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Encoding::Phase => write!(f, "phase"),
            Encoding::Cat => write!(f, "cat"),
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(Encoding::Phase),
            "cat" => Ok(Encoding::Cat),
            other => Err(Error::Encoding(format!("unknown encoding `{other}`"))),
        }
    }
}

/// Angular wedge increment `2*pi / 2^N` for `n` Bell pairs.
pub fn wedge_angle(n_pairs: usize) -> Real {
    2.0 * std::f64::consts::PI / (1u64 << n_pairs) as Real
}
