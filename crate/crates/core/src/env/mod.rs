//! Reward-generating environments.

pub mod epidemic;
pub mod synthetic;

pub use epidemic::{
    enumerate_strategies, simulate_epidemic, EpidemicBandit, EpidemicConfig, Objective, Scenario,
    SimOutcome, VaccineStrategy, VaccineType,
};
pub use synthetic::{SyntheticArmSpec, SyntheticBandit};
