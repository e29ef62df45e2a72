//! Integer genomes with per-locus domains and the variation operators shared
//! by every search algorithm.
//!
//! Every operator documents how many PRNG draws it consumes. Those counts are
//! part of the contract: they are what makes whole-run traces reproducible.

use serde::{Deserialize, Serialize};

use crate::rng::RngState;

/// Inclusive integer domain of one locus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Locus {
    pub lo: i64,
    pub hi: i64,
}

impl Locus {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "locus domain [{lo}, {hi}] is empty");
        Locus { lo, hi }
    }

    /// Number of values in the domain.
    pub fn size(&self) -> u64 {
        (self.hi - self.lo) as u64 + 1
    }

    pub fn contains(&self, value: i64) -> bool {
        (self.lo..=self.hi).contains(&value)
    }

    #[inline]
    fn sample(&self, rng: &mut RngState) -> i64 {
        self.lo + rng.rand_below(self.size()) as i64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenomeSpec {
    loci: Vec<Locus>,
}

impl GenomeSpec {
    /// # Panics
    ///
    /// Panics on an empty locus list.
    pub fn new(loci: Vec<Locus>) -> Self {
        assert!(!loci.is_empty(), "a genome needs at least one locus");
        GenomeSpec { loci }
    }

    /// `len` loci sharing the domain `[lo, hi]`.
    pub fn uniform(len: usize, lo: i64, hi: i64) -> Self {
        Self::new(vec![Locus::new(lo, hi); len])
    }

    pub fn loci(&self) -> &[Locus] {
        &self.loci
    }

    pub fn len(&self) -> usize {
        self.loci.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loci.is_empty()
    }

    /// True if `genome` has the right length and every gene is in its domain.
    pub fn admits(&self, genome: &Genome) -> bool {
        genome.len() == self.len()
            && self
                .loci
                .iter()
                .zip(genome.genes())
                .all(|(locus, &g)| locus.contains(g))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome {
    genes: Vec<i64>,
}

impl Genome {
    pub fn new(genes: Vec<i64>) -> Self {
        Genome { genes }
    }

    pub fn genes(&self) -> &[i64] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn into_genes(self) -> Vec<i64> {
        self.genes
    }
}

impl From<Vec<i64>> for Genome {
    fn from(genes: Vec<i64>) -> Self {
        Genome { genes }
    }
}

/// A genome together with its evaluation, if it has one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    evaluation: Option<(f64, f64)>,
    pub evaluated_by: Option<String>,
}

impl Individual {
    pub fn unevaluated(genome: Genome) -> Self {
        Individual {
            genome,
            evaluation: None,
            evaluated_by: None,
        }
    }

    /// Records fitness and evaluation time together, so one is never present
    /// without the other.
    pub fn set_evaluation(&mut self, fitness: f64, eval_ms: f64, evaluated_by: Option<String>) {
        self.evaluation = Some((fitness, eval_ms));
        self.evaluated_by = evaluated_by;
    }

    pub fn fitness(&self) -> Option<f64> {
        self.evaluation.map(|(f, _)| f)
    }

    pub fn eval_ms(&self) -> Option<f64> {
        self.evaluation.map(|(_, ms)| ms)
    }

    pub fn is_evaluated(&self) -> bool {
        self.evaluation.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: u64,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Fitness of every member.
    ///
    /// # Panics
    ///
    /// Panics if any member has not been evaluated.
    pub fn fitnesses(&self) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| m.fitness().expect("population member not evaluated"))
            .collect()
    }

    /// Index of the best (lowest-fitness) member, ties to the lower index.
    pub fn best_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in self.members.iter().enumerate() {
            let f = m.fitness()?;
            if best.is_none_or(|(_, b)| f < b) {
                best = Some((i, f));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Samples every locus uniformly, in index order. One draw per locus.
pub fn random_genome(spec: &GenomeSpec, rng: &mut RngState) -> Genome {
    Genome {
        genes: spec.loci.iter().map(|l| l.sample(rng)).collect(),
    }
}

/// Splices two parents at a single cut in `[1, len)`. One draw.
///
/// # Panics
///
/// Panics if the parents differ in length or are shorter than two loci.
pub fn single_point_crossover(a: &Genome, b: &Genome, rng: &mut RngState) -> (Genome, Genome) {
    assert_eq!(a.len(), b.len(), "crossover parents differ in length");
    assert!(a.len() >= 2, "crossover needs at least two loci");
    let cut = 1 + rng.rand_below(a.len() as u64 - 1) as usize;
    (splice(a, b, cut), splice(b, a, cut))
}

fn splice(head: &Genome, tail: &Genome, cut: usize) -> Genome {
    let mut genes = Vec::with_capacity(head.len());
    genes.extend_from_slice(&head.genes[..cut]);
    genes.extend_from_slice(&tail.genes[cut..]);
    Genome { genes }
}

/// Resamples one randomly chosen locus from its full domain (the new value
/// may equal the old one). Two draws: locus, then value.
pub fn mutate_one_locus(genome: &Genome, spec: &GenomeSpec, rng: &mut RngState) -> Genome {
    let mut out = genome.clone();
    mutate_in_place(&mut out, spec, rng);
    out
}

pub(crate) fn mutate_in_place(genome: &mut Genome, spec: &GenomeSpec, rng: &mut RngState) {
    assert_eq!(genome.len(), spec.len(), "genome does not match spec");
    let locus = rng.rand_below(genome.len() as u64) as usize;
    genome.genes[locus] = spec.loci[locus].sample(rng);
}
