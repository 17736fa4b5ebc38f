//! From-scratch policy/value networks trained by advantage actor-critic.

pub mod a2c;
pub mod checkpoint;
pub mod mlp;
pub mod rmsprop;

pub use a2c::{argmax, sample_index, ActionMode, ActorCritic, Transition, UpdateStats, DEFAULT_HIDDEN};
pub use mlp::{Head, Mlp, Workspace};
pub use rmsprop::{RmsProp, RmsPropConfig};
