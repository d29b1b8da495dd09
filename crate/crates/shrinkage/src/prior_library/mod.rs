//! Prior families: specification, auxiliary state, conditional updates and
//! forward simulation.

mod forward;
mod spec;
mod ssvs;
mod state;
mod updates;

pub use forward::{draw_prior, PriorDraw};
pub use spec::*;
pub use ssvs::{chipman_threshold, inclusion_weight, narisetty_he, resolve_narisetty_he};
pub use state::{Globals, ScaleState};
pub use updates::{ln_normal0, logistic, scale_factor, update_scales};
