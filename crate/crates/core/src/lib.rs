//! State-vector simulation of measurement, post-selection and projected
//! dynamics on small qubit registers, with a reproducible experiment CLI.

pub mod cli;
pub mod measure;
pub mod oracle;
pub mod satnet;
pub mod simon;
pub mod statevec;
pub mod waves;
pub mod zeno;
