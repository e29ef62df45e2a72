//! Two-sample comparison: Wilcoxon-Mann-Whitney U with midranks, tie-corrected
//! variance and continuity correction; an exact enumeration p-value for small
//! samples; Vargha-Delaney A12; and boxplot-style summaries.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Pooled size limit for [`exact_mwu_p`].
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("sample {0:?} is empty")]
    Empty(&'static str),
    #[error("exact test limited to {EXACT_LIMIT} pooled values, got {0}")]
    TooLarge(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        SampleSet {
            label: label.into(),
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UTestResult {
    pub u_x: f64,
    pub u_y: f64,
    pub z: f64,
    pub p_two_sided: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub tie_corrected: bool,
}

/// Average ranks (1-based) of the pooled sample, plus the size of every tie
/// group with more than one member.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..j share the ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn check(xs: &[f64], ys: &[f64]) -> Result<(), StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty("xs"));
    }
    if ys.is_empty() {
        return Err(StatsError::Empty("ys"));
    }
    Ok(())
}

/// Two-sided Mann-Whitney U test using the normal approximation.
///
/// `z` is positive when `xs` tends to be larger. With every value tied the
/// variance vanishes; `z` is then 0 and `p` is 1.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> Result<UTestResult, StatsError> {
    check(xs, ys)?;
    let (n_x, n_y) = (xs.len(), ys.len());
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_x: f64 = ranks[..n_x].iter().sum();
    let (nx, ny) = (n_x as f64, n_y as f64);
    let n = nx + ny;
    let u_x = rank_sum_x - nx * (nx + 1.0) / 2.0;
    let u_y = nx * ny - u_x;

    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = if n > 1.0 {
        nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let mean = nx * ny / 2.0;
    let z = if variance > 0.0 {
        let diff = u_x - mean;
        diff.signum() * (diff.abs() - 0.5).max(0.0) / variance.sqrt()
    } else {
        0.0
    };
    let p = (2.0 * standard_normal_cdf(-z.abs())).clamp(0.0, 1.0);

    Ok(UTestResult {
        u_x,
        u_y,
        z,
        p_two_sided: p,
        n_x,
        n_y,
        tie_corrected: !ties.is_empty(),
    })
}

fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact two-sided p-value: twice the smaller tail of the permutation
/// distribution of `U_x`, clamped to 1. Ties use midranks.
pub fn exact_mwu_p(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check(xs, ys)?;
    let total = xs.len() + ys.len();
    if total > EXACT_LIMIT {
        return Err(StatsError::TooLarge(total));
    }
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, _) = midranks(&pooled);
    let nx = xs.len();
    let offset = (nx * (nx + 1)) as f64 / 2.0;
    let observed: f64 = ranks[..nx].iter().sum::<f64>() - offset;

    let mut le = 0u64;
    let mut ge = 0u64;
    let mut count = 0u64;
    let mut visit = |rank_sum: f64| {
        let u = rank_sum - offset;
        count += 1;
        if u <= observed + 1e-9 {
            le += 1;
        }
        if u >= observed - 1e-9 {
            ge += 1;
        }
    };
    enumerate_subsets(&ranks, nx, 0, 0.0, &mut visit);

    let tail = le.min(ge) as f64 / count as f64;
    Ok((2.0 * tail).min(1.0))
}

fn enumerate_subsets(ranks: &[f64], k: usize, start: usize, sum: f64, visit: &mut impl FnMut(f64)) {
    if k == 0 {
        visit(sum);
        return;
    }
    for i in start..=ranks.len() - k {
        enumerate_subsets(ranks, k - 1, i + 1, sum + ranks[i], visit);
    }
}

/// Probability that a random `x` exceeds a random `y`, ties counting half.
pub fn vargha_delaney_a12(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    check(xs, ys)?;
    let mut wins = 0.0;
    for x in xs {
        for y in ys {
            if x > y {
                wins += 1.0;
            } else if x == y {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (xs.len() * ys.len()) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Quantiles interpolate linearly between closest ranks: position
/// `p * (n - 1)` in the sorted values.
pub fn describe(values: &[f64]) -> Result<Summary, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty("values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (sorted.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok(Summary {
        min: sorted[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: sorted[sorted.len() - 1],
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
    })
}
