//! Quantum message passing over finite abelian groups.
//!
//! Messages are character-indexed eigen lists of group-covariant pure-state
//! channels, or finite heralded mixtures of them. The crate provides the
//! local factor rules, tree and trellis message passing, polar channel
//! tracking, Monte-Carlo density evolution for turbo ensembles and a dense
//! linear-algebra oracle that certifies the rules on small groups.

pub mod de;
pub mod dual;
pub mod eigen;
pub mod error;
pub mod group;
pub mod herald;
pub mod oracle;
pub mod polar;
pub mod io;
pub mod rules;
pub mod seed;
pub mod tree;
pub mod trellis;

pub use dual::{CharIndex, CosetTable, DualMap, DualSubgroup};
pub use eigen::{EigenList, GramRow};
pub use error::{Error, Result};
pub use group::{GroupElement, GroupSpec, HomSpec};
pub use herald::{Branch, HeraldedMessage};
