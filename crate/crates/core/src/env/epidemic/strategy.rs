use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EpidemicConfigError, GROUPS};

/// Number of strategies that use both vaccine types.
pub const STRATEGY_COUNT: usize = 180;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeGroup {
    /// 0-4
    Children,
    /// 5-18
    Youngsters,
    /// 19-25
    YoungAdults,
    /// 26-64
    Adults,
    /// 65+
    Elderly,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; GROUPS] = [
        AgeGroup::Children,
        AgeGroup::Youngsters,
        AgeGroup::YoungAdults,
        AgeGroup::Adults,
        AgeGroup::Elderly,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeGroup::Children => "0-4",
            AgeGroup::Youngsters => "5-18",
            AgeGroup::YoungAdults => "19-25",
            AgeGroup::Adults => "26-64",
            AgeGroup::Elderly => "65+",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VaccineType {
    #[default]
    None,
    Mrna,
    Vector,
}

impl VaccineType {
    pub const ALL: [VaccineType; 3] = [VaccineType::None, VaccineType::Mrna, VaccineType::Vector];

    /// Base-3 digit.
    pub fn digit(self) -> u32 {
        match self {
            VaccineType::None => 0,
            VaccineType::Mrna => 1,
            VaccineType::Vector => 2,
        }
    }

    pub fn letter(self) -> char {
        match self {
            VaccineType::None => '-',
            VaccineType::Mrna => 'M',
            VaccineType::Vector => 'V',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            '-' | 'N' | '0' => Some(VaccineType::None),
            'M' | '1' => Some(VaccineType::Mrna),
            'V' | '2' => Some(VaccineType::Vector),
            _ => None,
        }
    }
}

/// Vaccine assigned to each age group, youngest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VaccineStrategy {
    pub assignment: [VaccineType; GROUPS],
}

impl VaccineStrategy {
    pub fn new(assignment: [VaccineType; GROUPS]) -> Self {
        VaccineStrategy { assignment }
    }

    pub fn uniform(vaccine: VaccineType) -> Self {
        VaccineStrategy {
            assignment: [vaccine; GROUPS],
        }
    }

    /// Base-3 code with the youngest group as least-significant digit.
    pub fn code(&self) -> u32 {
        self.assignment
            .iter()
            .rev()
            .fold(0, |acc, v| acc * 3 + v.digit())
    }

    pub fn from_code(code: u32) -> Option<Self> {
        if code >= 243 {
            return None;
        }
        let mut c = code;
        let mut assignment = [VaccineType::None; GROUPS];
        for slot in &mut assignment {
            *slot = VaccineType::ALL[(c % 3) as usize];
            c /= 3;
        }
        Some(VaccineStrategy { assignment })
    }

    pub fn vaccine(&self, group: usize) -> VaccineType {
        self.assignment[group]
    }

    pub fn uses(&self, vaccine: VaccineType) -> bool {
        self.assignment.contains(&vaccine)
    }

    /// Uses both mRNA and vector vaccines.
    pub fn is_valid_arm(&self) -> bool {
        self.uses(VaccineType::Mrna) && self.uses(VaccineType::Vector)
    }
}

impl fmt::Display for VaccineStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.assignment {
            write!(f, "{}", v.letter())?;
        }
        Ok(())
    }
}

impl FromStr for VaccineStrategy {
    type Err = EpidemicConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let letters: Vec<VaccineType> = s.chars().filter_map(VaccineType::from_letter).collect();
        let clean: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if letters.len() != GROUPS || clean.chars().count() != GROUPS {
            return Err(EpidemicConfigError::Invalid(
                "strategy must be five letters from M, V and -",
            ));
        }
        let mut assignment = [VaccineType::None; GROUPS];
        assignment.copy_from_slice(&letters);
        Ok(VaccineStrategy { assignment })
    }
}

/// All strategies using both vaccine types, in ascending code order.
pub fn enumerate_strategies() -> Vec<VaccineStrategy> {
    (0..243)
        .filter_map(VaccineStrategy::from_code)
        .filter(VaccineStrategy::is_valid_arm)
        .collect()
}
