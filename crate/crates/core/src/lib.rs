//! Independent entropy-regularized natural policy gradient on finite
//! potential games.
//!
//! - [`game`]: dense potential games, generators, binary serialization.
//! - [`policy`]: log-space product policies, entropy, KL and Jeffrey divergences.
//! - [`metrics`]: marginalized utilities, best responses, NE/QRE gaps.
//! - [`dynamics`]: NPG, MWU and projected PG runs with theorem-level checks.
//! - [`oracle`]: naive and first-principles reference computations for tests.
//! - [`harness`]: experiment driver behind the `inpg` binary.

pub mod dynamics;
pub mod error;
pub mod game;
pub mod harness;
pub mod metrics;
pub mod numfmt;
pub mod oracle;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
pub use game::PotentialGame;
pub use policy::{JointPolicy, SoftmaxParams};
