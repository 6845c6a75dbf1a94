pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod harness;
pub mod numerics;
pub mod pilot_estimation;
pub mod rng;
pub mod validation;
