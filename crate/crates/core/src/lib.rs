//! Normative-emotional BDI agents: language front-end, reasoning cycle and a
//! deterministic society simulator.

pub mod lang;
pub mod affect;
pub mod agent;
pub mod cycle;
pub mod norm;
pub mod society;
