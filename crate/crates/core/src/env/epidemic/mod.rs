//! Age-structured stochastic epidemic with vaccine-allocation arms.
//!
//! The population is split into five age groups. Contacts come from
//! context-specific matrices (household, primary school, secondary school,
//! tertiary education, work, community); every context but the household can
//! be reduced. Each arm is a [`VaccineStrategy`] that assigns mRNA, vector or
//! no vaccine to each age group, and a pull runs one full simulation and
//! returns the complement of the chosen attack rate.

mod sim;
mod strategy;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sim::{simulate_attack_rates, simulate_epidemic, AttackRates, DayRecord, SimOutcome};
pub use strategy::{enumerate_strategies, AgeGroup, VaccineStrategy, VaccineType, STRATEGY_COUNT};

use crate::bandit::{ArmId, EnvError, Environment, Reward, Sample};

pub const GROUPS: usize = 5;

/// Mean daily contacts: `m[i][j]` is the number of people from group `j`
/// met per day by one person of group `i`.
pub type Matrix = [[f64; GROUPS]; GROUPS];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpidemicConfigError {
    #[error("{0}")]
    Invalid(&'static str),
    #[error("contact matrix '{0}' is not reciprocal for the configured population")]
    NotReciprocal(&'static str),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(alloc::string::String),
}

/// Fractional contact reductions per reducible context.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactReductions {
    pub primary: f64,
    pub secondary: f64,
    pub tertiary: f64,
    pub work: f64,
    pub community: f64,
}

impl ContactReductions {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.primary,
            self.secondary,
            self.tertiary,
            self.work,
            self.community,
        ]
    }

    pub fn validate(&self) -> Result<(), EpidemicConfigError> {
        if self.as_array().iter().all(|c| (0.0..=1.0).contains(c)) {
            Ok(())
        } else {
            Err(EpidemicConfigError::Invalid(
                "contact reductions must lie in [0, 1]",
            ))
        }
    }
}

/// The six contact-reduction scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Baseline,
    Relaxed,
    TertiaryEducation,
    SecondarySchools,
    RelaxedCommunity,
    RelaxedWorkplace,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Baseline,
        Scenario::Relaxed,
        Scenario::TertiaryEducation,
        Scenario::SecondarySchools,
        Scenario::RelaxedCommunity,
        Scenario::RelaxedWorkplace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baseline => "Baseline",
            Scenario::Relaxed => "Relaxed",
            Scenario::TertiaryEducation => "TertiaryEducation",
            Scenario::SecondarySchools => "SecondarySchools",
            Scenario::RelaxedCommunity => "RelaxedCommunity",
            Scenario::RelaxedWorkplace => "RelaxedWorkplace",
        }
    }

    /// `(c_p, c_s, c_t, c_w, c_c)`.
    pub fn reductions(self) -> ContactReductions {
        let r = |primary, secondary, tertiary, work, community| ContactReductions {
            primary,
            secondary,
            tertiary,
            work,
            community,
        };
        match self {
            Scenario::Baseline => r(0.0, 0.5, 1.0, 0.7, 0.7),
            Scenario::Relaxed => r(0.0, 0.5, 1.0, 0.5, 0.5),
            Scenario::TertiaryEducation => r(0.0, 0.5, 0.7, 0.7, 0.7),
            Scenario::SecondarySchools => r(0.0, 0.0, 1.0, 0.7, 0.7),
            Scenario::RelaxedCommunity => r(0.0, 0.5, 1.0, 0.7, 0.5),
            Scenario::RelaxedWorkplace => r(0.0, 0.5, 1.0, 0.5, 0.7),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = EpidemicConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: alloc::string::String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().to_ascii_lowercase() == key)
            .ok_or_else(|| EpidemicConfigError::UnknownScenario(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMatrices {
    /// Never reduced.
    pub household: Matrix,
    pub primary_school: Matrix,
    pub secondary_school: Matrix,
    pub tertiary: Matrix,
    pub work: Matrix,
    pub community: Matrix,
}

impl ContactMatrices {
    fn named(&self) -> [(&'static str, &Matrix); 6] {
        [
            ("household", &self.household),
            ("primary_school", &self.primary_school),
            ("secondary_school", &self.secondary_school),
            ("tertiary", &self.tertiary),
            ("work", &self.work),
            ("community", &self.community),
        ]
    }

    fn named_mut(&mut self) -> [&mut Matrix; 6] {
        [
            &mut self.household,
            &mut self.primary_school,
            &mut self.secondary_school,
            &mut self.tertiary,
            &mut self.work,
            &mut self.community,
        ]
    }

    /// `household + Σ_c (1 − r_c) M_c`.
    pub fn effective(&self, reductions: &ContactReductions) -> Matrix {
        let weights = reductions.as_array().map(|r| 1.0 - r);
        let reducible = [
            &self.primary_school,
            &self.secondary_school,
            &self.tertiary,
            &self.work,
            &self.community,
        ];
        let mut out = self.household;
        for (w, m) in weights.iter().zip(reducible) {
            for i in 0..GROUPS {
                for j in 0..GROUPS {
                    out[i][j] += w * m[i][j];
                }
            }
        }
        out
    }

    /// All contexts at full strength.
    pub fn total(&self) -> Matrix {
        self.effective(&ContactReductions::default())
    }

    /// Replaces every matrix by its reciprocal average
    /// `(N_i m_ij + N_j m_ji) / (2 N_i)`.
    pub fn make_reciprocal(&mut self, population: &[u64; GROUPS]) {
        for m in self.named_mut() {
            *m = reciprocal(m, population);
        }
    }
}

pub fn reciprocal(m: &Matrix, population: &[u64; GROUPS]) -> Matrix {
    let mut out = [[0.0; GROUPS]; GROUPS];
    for i in 0..GROUPS {
        for j in 0..GROUPS {
            let ni = population[i] as f64;
            let nj = population[j] as f64;
            out[i][j] = if ni > 0.0 {
                (ni * m[i][j] + nj * m[j][i]) / (2.0 * ni)
            } else {
                0.0
            };
        }
    }
    out
}

pub fn is_reciprocal(m: &Matrix, population: &[u64; GROUPS]) -> bool {
    (0..GROUPS).all(|i| {
        (0..GROUPS).all(|j| {
            let a = population[i] as f64 * m[i][j];
            let b = population[j] as f64 * m[j][i];
            (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
        })
    })
}

/// Dominant eigenvalue of a nonnegative matrix by power iteration.
pub fn spectral_radius(m: &Matrix) -> f64 {
    let mut v = [1.0; GROUPS];
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let mut w = [0.0; GROUPS];
        for i in 0..GROUPS {
            for j in 0..GROUPS {
                w[i] += m[i][j] * v[j];
            }
        }
        let norm = w.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        if norm == 0.0 {
            return 0.0;
        }
        for x in &mut w {
            *x /= norm;
        }
        let converged = (norm - lambda).abs() <= 1e-14 * norm;
        lambda = norm;
        v = w;
        if converged {
            break;
        }
    }
    lambda
}

/// Per-contact transmission probability giving basic reproduction number
/// `r0` in a fully susceptible, unvaccinated population.
pub fn transmission_for_r0(r0: f64, contacts: &Matrix, infectious_days: f64) -> f64 {
    r0 / (infectious_days * spectral_radius(contacts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaccineProfile {
    /// Efficacy against susceptibility.
    pub ve_s: f64,
    /// Efficacy against infectiousness.
    pub ve_i: f64,
    /// Efficacy against hospitalization.
    pub ve_d: f64,
    /// Days from the first dose to full protection; protection grows linearly.
    pub activation_days: u32,
}

impl VaccineProfile {
    pub const MRNA: VaccineProfile = VaccineProfile {
        ve_s: 0.95,
        ve_i: 0.95,
        ve_d: 1.0,
        activation_days: 42,
    };
    pub const VECTOR: VaccineProfile = VaccineProfile {
        ve_s: 0.67,
        ve_i: 0.67,
        ve_d: 1.0,
        activation_days: 42,
    };

    /// Fraction of full protection `days_since_dose` days after the dose.
    pub fn activation(&self, days_since_dose: u32) -> f64 {
        (f64::from(days_since_dose) / f64::from(self.activation_days)).min(1.0)
    }

    fn validate(&self) -> Result<(), EpidemicConfigError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(unit(self.ve_s) && unit(self.ve_i) && unit(self.ve_d)) {
            return Err(EpidemicConfigError::Invalid(
                "vaccine efficacies must lie in [0, 1]",
            ));
        }
        if self.activation_days == 0 {
            return Err(EpidemicConfigError::Invalid(
                "activation_days must be positive",
            ));
        }
        Ok(())
    }
}

/// Weekly deliveries in doses; week `w` covers days `7w .. 7w + 6`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SupplySchedule {
    pub mrna: Vec<f64>,
    pub vector: Vec<f64>,
}

impl SupplySchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn weekly(&self, vaccine: VaccineType, week: usize) -> f64 {
        let table = match vaccine {
            VaccineType::Mrna => &self.mrna,
            VaccineType::Vector => &self.vector,
            VaccineType::None => return 0.0,
        };
        table.get(week).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.mrna.iter().chain(&self.vector).all(|&d| d == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicConfig {
    /// Individuals per age group.
    pub population: [u64; GROUPS],
    pub contacts: ContactMatrices,
    pub reductions: ContactReductions,
    /// Per-contact daily transmission probability `q`.
    pub transmission_probability: f64,
    pub latent_days: f64,
    pub infectious_days: f64,
    /// Probability that an infection in each group leads to hospitalization.
    pub hospitalization: [f64; GROUPS],
    pub initial_recovered_fraction: f64,
    /// Infectious individuals at day 0, spread proportionally over groups.
    pub initial_infected: u64,
    pub mrna: VaccineProfile,
    pub vector: VaccineProfile,
    pub supply: SupplySchedule,
    pub horizon_days: u32,
}

impl EpidemicConfig {
    pub fn total_population(&self) -> u64 {
        self.population.iter().sum()
    }

    pub fn profile(&self, vaccine: VaccineType) -> Option<&VaccineProfile> {
        match vaccine {
            VaccineType::Mrna => Some(&self.mrna),
            VaccineType::Vector => Some(&self.vector),
            VaccineType::None => None,
        }
    }

    pub fn effective_contacts(&self) -> Matrix {
        self.contacts.effective(&self.reductions)
    }

    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.reductions = scenario.reductions();
        self
    }

    pub fn validate(&self) -> Result<(), EpidemicConfigError> {
        use EpidemicConfigError::Invalid;
        if self.population.contains(&0) {
            return Err(Invalid("every age group needs a positive population"));
        }
        for (name, m) in self.contacts.named() {
            if m.iter().flatten().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Invalid("contact rates must be finite and nonnegative"));
            }
            if !is_reciprocal(m, &self.population) {
                return Err(EpidemicConfigError::NotReciprocal(name));
            }
        }
        self.reductions.validate()?;
        if !(0.0..=1.0).contains(&self.transmission_probability) {
            return Err(Invalid("transmission probability must lie in [0, 1]"));
        }
        if !(self.latent_days >= 1.0 && self.infectious_days >= 1.0) {
            return Err(Invalid(
                "latent and infectious periods must be at least one day",
            ));
        }
        if self
            .hospitalization
            .iter()
            .any(|h| !(0.0..=1.0).contains(h))
        {
            return Err(Invalid("hospitalization probabilities must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.initial_recovered_fraction) {
            return Err(Invalid("initial recovered fraction must lie in [0, 1]"));
        }
        let recovered: u64 = self
            .population
            .iter()
            .map(|&n| libm::round(self.initial_recovered_fraction * n as f64) as u64)
            .sum();
        if self.initial_infected + recovered > self.total_population() {
            return Err(Invalid(
                "initial infected and recovered exceed the population",
            ));
        }
        self.mrna.validate()?;
        self.vector.validate()?;
        if self
            .supply
            .mrna
            .iter()
            .chain(&self.supply.vector)
            .any(|&d| !(d >= 0.0 && d.is_finite()))
        {
            return Err(Invalid("supply must be finite and nonnegative"));
        }
        if self.horizon_days == 0 {
            return Err(Invalid("horizon must be at least one day"));
        }
        Ok(())
    }
}

/// Which attack rate the reward complements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Infections.
    Ari,
    /// Hospitalizations.
    Arh,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Ari => "ari",
            Objective::Arh => "arh",
        }
    }
}

impl FromStr for Objective {
    type Err = EpidemicConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ari" => Ok(Objective::Ari),
            "arh" => Ok(Objective::Arh),
            _ => Err(EpidemicConfigError::Invalid(
                "objective must be 'ari' or 'arh'",
            )),
        }
    }
}

/// `1 − ARI` or `1 − ARH`.
pub fn epidemic_reward(rates: &AttackRates, objective: Objective) -> Reward {
    let rate = match objective {
        Objective::Ari => rates.ari,
        Objective::Arh => rates.arh,
    };
    Reward::clamped(1.0 - rate)
        .map(|s| s.reward)
        .unwrap_or_else(|_| unreachable!("attack rates are finite fractions"))
}

/// A bandit whose arms are vaccine strategies evaluated by simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicBandit {
    pub config: EpidemicConfig,
    pub strategies: Vec<VaccineStrategy>,
    pub objective: Objective,
}

impl EpidemicBandit {
    pub fn new(
        config: EpidemicConfig,
        strategies: Vec<VaccineStrategy>,
        objective: Objective,
    ) -> Result<Self, EpidemicConfigError> {
        config.validate()?;
        if strategies.len() < 2 {
            return Err(EpidemicConfigError::Invalid(
                "an epidemic bandit needs at least two arms",
            ));
        }
        Ok(EpidemicBandit {
            config,
            strategies,
            objective,
        })
    }
}

impl Environment for EpidemicBandit {
    fn arms(&self) -> usize {
        self.strategies.len()
    }

    fn pull(&self, arm: ArmId, seed: u64) -> Result<Sample, EnvError> {
        self.check_arm(arm)?;
        let rates = simulate_attack_rates(&self.config, &self.strategies[arm.0], seed);
        Ok(epidemic_reward(&rates, self.objective).into())
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_reduction_rows() {
        let rows: [(Scenario, [f64; 5]); 6] = [
            (Scenario::Baseline, [0.0, 0.5, 1.0, 0.7, 0.7]),
            (Scenario::Relaxed, [0.0, 0.5, 1.0, 0.5, 0.5]),
            (Scenario::TertiaryEducation, [0.0, 0.5, 0.7, 0.7, 0.7]),
            (Scenario::SecondarySchools, [0.0, 0.0, 1.0, 0.7, 0.7]),
            (Scenario::RelaxedCommunity, [0.0, 0.5, 1.0, 0.7, 0.5]),
            (Scenario::RelaxedWorkplace, [0.0, 0.5, 1.0, 0.5, 0.7]),
        ];
        for (sc, expect) in rows {
            assert_eq!(sc.reductions().as_array(), expect, "{sc}");
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert_eq!(
            "secondary-schools".parse::<Scenario>().unwrap(),
            Scenario::SecondarySchools
        );
        assert!("lockdown".parse::<Scenario>().is_err());
    }

    #[test]
    fn reciprocity_survives_every_reduction() {
        let cfg = fixture::config(10_000);
        assert!(cfg.validate().is_ok());
        for sc in Scenario::ALL {
            let m = cfg.contacts.effective(&sc.reductions());
            assert!(is_reciprocal(&m, &cfg.population), "{sc}");
        }
    }

    #[test]
    fn non_reciprocal_matrix_is_rejected() {
        let mut cfg = fixture::config(10_000);
        cfg.contacts.work[0][3] = 5.0;
        assert_eq!(
            cfg.validate(),
            Err(EpidemicConfigError::NotReciprocal("work"))
        );
    }

    #[test]
    fn reward_is_complement() {
        let r = |ari, arh| AttackRates { ari, arh };
        assert_eq!(epidemic_reward(&r(0.0, 0.0), Objective::Ari).value(), 1.0);
        assert!((epidemic_reward(&r(0.35, 0.01), Objective::Ari).value() - 0.65).abs() < 1e-15);
        assert!((epidemic_reward(&r(0.35, 0.01), Objective::Arh).value() - 0.99).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_on_known_matrix() {
        let mut m = [[0.0; GROUPS]; GROUPS];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = (i + 1) as f64;
        }
        assert!((spectral_radius(&m) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn activation_is_linear_then_flat() {
        let p = VaccineProfile::MRNA;
        assert_eq!(p.activation(0), 0.0);
        assert!((p.activation(21) - 0.5).abs() < 1e-15);
        assert_eq!(p.activation(42), 1.0);
        assert_eq!(p.activation(100), 1.0);
    }
}
