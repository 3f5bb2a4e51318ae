//! Hardy's non-locality argument, end to end: the four-probability witness,
//! the classical bound, the two-qubit quantum optimum, a call-center sales
//! simulator that operationalizes the four events, and an analyzer for the
//! daily sales table.

pub mod cli;
pub mod empirics;
pub mod hna;
pub mod quantum;
pub mod sim;
