//! Fixture states shared by the benchmarks.

use cvsep_core::experiments::random_state;
use cvsep_core::states::{eta_state, noon_state};
use cvsep_core::TwoModeState;

pub fn noon(n: usize) -> TwoModeState {
    noon_state(n).expect("valid N").into()
}

pub fn eta() -> TwoModeState {
    eta_state(1.0, 0.5).expect("valid widths").into()
}

/// Haar-random state with `levels` Fock levels per mode.
pub fn random(levels: usize, index: u64) -> TwoModeState {
    random_state(levels, 1, index).expect("valid levels").into()
}
