use num_bigint::BigUint;

use super::{Problem, ProblemError};
use crate::genome::{Genome, GenomeSpec};

/// Default search target, 84 characters.
pub const DEFAULT_TARGET: &str =
    "12th Symposium for Search-Based Software Engineering | http://ssbse2020.di.uniba.it/";

/// Printable ASCII. The default target contains lowercase letters, so a
/// narrower alphabet would make the optimum unreachable.
pub const ALPHABET_LO: i64 = 32;
pub const ALPHABET_HI: i64 = 126;

/// Find a fixed string; fitness is the summed code-point distance to it.
#[derive(Clone, Debug)]
pub struct StringSearchProblem {
    target: String,
    codes: Vec<i64>,
    spec: GenomeSpec,
}

impl StringSearchProblem {
    pub const ID: &'static str = "string-search";

    pub fn new(target: &str) -> Result<Self, ProblemError> {
        if target.is_empty() {
            return Err(ProblemError::EmptyTarget);
        }
        let codes: Vec<i64> = target.chars().map(|c| c as i64).collect();
        if let Some((index, ch)) = target
            .chars()
            .enumerate()
            .find(|(_, c)| !(ALPHABET_LO..=ALPHABET_HI).contains(&(*c as i64)))
        {
            return Err(ProblemError::TargetOutsideAlphabet {
                index,
                ch,
                lo: ALPHABET_LO,
                hi: ALPHABET_HI,
            });
        }
        Ok(StringSearchProblem {
            target: target.to_string(),
            spec: GenomeSpec::uniform(codes.len(), ALPHABET_LO, ALPHABET_HI),
            codes,
        })
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn optimum(&self) -> Genome {
        Genome::new(self.codes.clone())
    }
}

impl Default for StringSearchProblem {
    fn default() -> Self {
        Self::new(DEFAULT_TARGET).expect("default target is in the alphabet")
    }
}

impl Problem for StringSearchProblem {
    fn id(&self) -> &str {
        Self::ID
    }

    fn genome_spec(&self) -> &GenomeSpec {
        &self.spec
    }

    fn fitness(&self, genome: &Genome) -> f64 {
        assert_eq!(
            genome.len(),
            self.codes.len(),
            "candidate length differs from target"
        );
        distance(genome.genes(), &self.codes) as f64
    }

    fn target_fitness(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[inline]
fn distance(genes: &[i64], codes: &[i64]) -> u64 {
    genes.iter().zip(codes).map(|(g, c)| g.abs_diff(*c)).sum()
}

/// Sum of absolute code-point differences between candidate and target.
///
/// # Panics
///
/// Panics if the lengths differ.
pub fn string_fitness(candidate: &Genome, target: &str) -> u64 {
    let codes: Vec<i64> = target.chars().map(|c| c as i64).collect();
    assert_eq!(
        candidate.len(),
        codes.len(),
        "candidate length differs from target"
    );
    distance(candidate.genes(), &codes)
}

/// Character `i` has code point `genes[i]`.
///
/// # Panics
///
/// Panics if a gene lies outside the printable-ASCII alphabet.
pub fn decode_string(genome: &Genome) -> String {
    genome
        .genes()
        .iter()
        .map(|&g| {
            assert!(
                (ALPHABET_LO..=ALPHABET_HI).contains(&g),
                "gene {g} outside the string alphabet"
            );
            char::from(g as u8)
        })
        .collect()
}

pub fn encode_string(text: &str) -> Genome {
    Genome::new(text.chars().map(|c| c as i64).collect())
}

/// Product of per-locus domain sizes.
pub fn search_space_size(spec: &GenomeSpec) -> BigUint {
    spec.loci()
        .iter()
        .fold(BigUint::from(1u32), |acc, l| acc * BigUint::from(l.size()))
}
