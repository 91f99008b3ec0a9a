//! A finite-model-theory workbench: structures, FO/FOC/LFP/LREC= evaluation,
//! path-systems instances over trees crossed with `Z_p`, tree combinatorics,
//! and the k-step q-degree game with built-in agents.

pub mod batch;
pub mod eval;
pub mod fixtures;
pub mod game;
pub mod logic;
pub mod oracle;
pub mod psp;
pub mod strategy;
pub mod structure;
pub mod treecomb;
pub mod verify;
