//! Deterministic per-second model of a weighted load balancer in front of a
//! small pool of backends.
//!
//! Each simulated second the arrivals are split over READY backends in
//! proportion to their weights (largest-remainder rounding). A backend serves
//! up to its capacity and fails the excess; latency grows as `1 / (1 - u)`
//! with utilisation `u`, capped at 100x the base latency.

use serde::{Deserialize, Serialize};

use super::{Problem, ProblemError};
use crate::genome::{Genome, GenomeSpec, Locus};

pub const MAX_WEIGHT: i64 = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backend {
    pub capacity_rps: u64,
    pub base_latency_ms: f64,
}

impl Backend {
    /// Two unequal nodes: 400 rps at 5 ms and 200 rps at 8 ms.
    pub fn default_pair() -> Vec<Backend> {
        vec![
            Backend {
                capacity_rps: 400,
                base_latency_ms: 5.0,
            },
            Backend {
                capacity_rps: 200,
                base_latency_ms: 8.0,
            },
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficProfile {
    pub concurrent_connections: u64,
    pub duration_s: u64,
    pub requests_per_connection_per_s: f64,
}

impl Default for TrafficProfile {
    fn default() -> Self {
        TrafficProfile {
            concurrent_connections: 500,
            duration_s: 30,
            requests_per_connection_per_s: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BackendState {
    Ready = 0,
    Drain = 1,
    Maint = 2,
}

impl BackendState {
    fn from_gene(gene: i64) -> Self {
        match gene {
            0 => BackendState::Ready,
            1 => BackendState::Drain,
            2 => BackendState::Maint,
            other => panic!("backend state gene {other} outside [0, 2]"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BackendSlot {
    pub weight: u64,
    pub state: BackendState,
}

/// Decoded load-balancer genome: `(weight, state)` per backend.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LbGenomeView {
    pub slots: Vec<BackendSlot>,
}

impl LbGenomeView {
    /// # Panics
    ///
    /// Panics if the genome is not two in-domain loci per backend.
    pub fn decode(genome: &Genome) -> Self {
        let genes = genome.genes();
        assert!(
            genes.len().is_multiple_of(2) && !genes.is_empty(),
            "LB genome needs 2 loci per backend"
        );
        let slots = genes
            .chunks_exact(2)
            .map(|pair| {
                assert!(
                    (1..=MAX_WEIGHT).contains(&pair[0]),
                    "weight {} out of range",
                    pair[0]
                );
                BackendSlot {
                    weight: pair[0] as u64,
                    state: BackendState::from_gene(pair[1]),
                }
            })
            .collect();
        LbGenomeView { slots }
    }
}

/// Genome layout for `backends` backends: weight in `[1, 256]`, state in `[0, 2]`.
pub fn lb_genome_spec(backends: usize) -> GenomeSpec {
    GenomeSpec::new(
        (0..backends)
            .flat_map(|_| [Locus::new(1, MAX_WEIGHT), Locus::new(0, 2)])
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub total_requests: u64,
    pub failed_requests: u64,
    pub mean_latency_ms: f64,
}

/// Runs the per-second model over the whole traffic profile.
///
/// Fractional arrival rates are spread over seconds so that second `t`
/// receives `floor(rate * (t + 1)) - floor(rate * t)` requests.
///
/// # Panics
///
/// Panics if `view` and `backends` differ in length.
pub fn lb_simulate(
    view: &LbGenomeView,
    backends: &[Backend],
    traffic: &TrafficProfile,
) -> SimOutcome {
    assert_eq!(
        view.slots.len(),
        backends.len(),
        "genome/backend count mismatch"
    );
    let rate = traffic.concurrent_connections as f64 * traffic.requests_per_connection_per_s;
    let active: Vec<usize> = (0..backends.len())
        .filter(|&i| view.slots[i].state == BackendState::Ready)
        .collect();
    let weight_sum: u64 = active.iter().map(|&i| view.slots[i].weight).sum();

    let mut total = 0u64;
    let mut failed = 0u64;
    let mut served_total = 0u64;
    let mut latency_sum = 0.0f64;
    let mut shares = vec![0u64; active.len()];
    let mut order: Vec<usize> = (0..active.len()).collect();
    let mut remainders = vec![0u64; active.len()];

    for t in 0..traffic.duration_s {
        let arrivals = ((rate * (t + 1) as f64).floor() - (rate * t as f64).floor()) as u64;
        total += arrivals;
        if active.is_empty() {
            failed += arrivals;
            continue;
        }

        let mut assigned = 0u64;
        for (k, &i) in active.iter().enumerate() {
            let num = arrivals as u128 * view.slots[i].weight as u128;
            shares[k] = (num / weight_sum as u128) as u64;
            remainders[k] = (num % weight_sum as u128) as u64;
            assigned += shares[k];
        }
        order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
        for &k in order.iter().take((arrivals - assigned) as usize) {
            shares[k] += 1;
        }

        for (k, &i) in active.iter().enumerate() {
            let backend = &backends[i];
            let served = shares[k].min(backend.capacity_rps);
            failed += shares[k] - served;
            if served > 0 {
                let utilisation = served as f64 / backend.capacity_rps as f64;
                let latency = (backend.base_latency_ms / (1.0 - utilisation).max(0.01))
                    .min(100.0 * backend.base_latency_ms);
                latency_sum += latency * served as f64;
                served_total += served;
            }
        }
    }

    SimOutcome {
        total_requests: total,
        failed_requests: failed,
        mean_latency_ms: if served_total == 0 {
            0.0
        } else {
            latency_sum / served_total as f64
        },
    }
}

/// Failure fraction plus 0.001 per millisecond of mean latency.
pub fn lb_fitness(outcome: &SimOutcome) -> f64 {
    let failure_fraction = if outcome.total_requests == 0 {
        0.0
    } else {
        outcome.failed_requests as f64 / outcome.total_requests as f64
    };
    failure_fraction + 0.001 * outcome.mean_latency_ms
}

#[derive(Clone, Debug)]
pub struct LbSimProblem {
    backends: Vec<Backend>,
    traffic: TrafficProfile,
    spec: GenomeSpec,
}

fn finite_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl LbSimProblem {
    pub const ID: &'static str = "lb-sim";

    pub fn new(backends: Vec<Backend>, traffic: TrafficProfile) -> Result<Self, ProblemError> {
        if backends.is_empty() {
            return Err(ProblemError::NoBackends);
        }
        if let Some(b) = backends
            .iter()
            .find(|b| b.capacity_rps == 0 || !finite_positive(b.base_latency_ms))
        {
            return Err(ProblemError::Invalid {
                field: "backends",
                reason: format!("capacity and base latency must be positive, got {b:?}"),
            });
        }
        if traffic.concurrent_connections == 0
            || traffic.duration_s == 0
            || !finite_positive(traffic.requests_per_connection_per_s)
        {
            return Err(ProblemError::Invalid {
                field: "traffic",
                reason: "all traffic parameters must be positive".into(),
            });
        }
        Ok(LbSimProblem {
            spec: lb_genome_spec(backends.len()),
            backends,
            traffic,
        })
    }

    pub fn backends(&self) -> &[Backend] {
        &self.backends
    }

    pub fn traffic(&self) -> &TrafficProfile {
        &self.traffic
    }

    pub fn simulate(&self, genome: &Genome) -> SimOutcome {
        lb_simulate(&LbGenomeView::decode(genome), &self.backends, &self.traffic)
    }
}

impl Default for LbSimProblem {
    fn default() -> Self {
        Self::new(Backend::default_pair(), TrafficProfile::default())
            .expect("default instance is valid")
    }
}

impl Problem for LbSimProblem {
    fn id(&self) -> &str {
        Self::ID
    }

    fn genome_spec(&self) -> &GenomeSpec {
        &self.spec
    }

    fn fitness(&self, genome: &Genome) -> f64 {
        lb_fitness(&self.simulate(genome))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn view(slots: &[(u64, BackendState)]) -> LbGenomeView {
        LbGenomeView {
            slots: slots
                .iter()
                .map(|&(weight, state)| BackendSlot { weight, state })
                .collect(),
        }
    }

    #[test]
    fn all_drained_fails_everything() {
        let out = lb_simulate(
            &view(&[(10, BackendState::Drain), (20, BackendState::Drain)]),
            &Backend::default_pair(),
            &TrafficProfile::default(),
        );
        assert_eq!(out.total_requests, 15_000);
        assert_eq!(out.failed_requests, out.total_requests);
        assert_eq!(out.mean_latency_ms, 0.0);
        assert_eq!(lb_fitness(&out), 1.0);
    }

    #[test]
    fn single_backend_under_capacity() {
        let backends = [Backend {
            capacity_rps: 400,
            base_latency_ms: 5.0,
        }];
        let traffic = TrafficProfile {
            concurrent_connections: 300,
            duration_s: 10,
            requests_per_connection_per_s: 1.0,
        };
        let out = lb_simulate(&view(&[(7, BackendState::Ready)]), &backends, &traffic);
        assert_eq!(out.total_requests, 3000);
        assert_eq!(out.failed_requests, 0);
        // u = 300/400, latency = 5 / (1 - 0.75)
        assert!((out.mean_latency_ms - 20.0).abs() < 1e-12);
    }

    #[test]
    fn overload_is_capped() {
        let backends = [Backend {
            capacity_rps: 100,
            base_latency_ms: 2.0,
        }];
        let traffic = TrafficProfile {
            concurrent_connections: 150,
            duration_s: 2,
            requests_per_connection_per_s: 1.0,
        };
        let out = lb_simulate(&view(&[(1, BackendState::Ready)]), &backends, &traffic);
        assert_eq!(out.failed_requests, 100);
        assert!((out.mean_latency_ms - 200.0).abs() < 1e-12);
    }

    #[test]
    fn equal_weights_split_evenly() {
        let backends = vec![
            Backend {
                capacity_rps: 1000,
                base_latency_ms: 1.0
            };
            2
        ];
        let traffic = TrafficProfile {
            concurrent_connections: 501,
            duration_s: 1,
            requests_per_connection_per_s: 1.0,
        };
        // 501 * 5 / 10 = 250.5 each; the leftover request goes to index 0.
        let out = lb_simulate(
            &view(&[(5, BackendState::Ready), (5, BackendState::Ready)]),
            &backends,
            &traffic,
        );
        let expected = (251.0 / (1.0 - 0.251) + 250.0 / (1.0 - 0.250)) / 501.0;
        assert!((out.mean_latency_ms - expected).abs() < 1e-12);
    }

    #[test]
    fn maint_and_drain_are_excluded() {
        let backends = Backend::default_pair();
        let traffic = TrafficProfile::default();
        let drained = lb_simulate(
            &view(&[(1, BackendState::Ready), (256, BackendState::Maint)]),
            &backends,
            &traffic,
        );
        let alone = lb_simulate(
            &view(&[(1, BackendState::Ready), (256, BackendState::Drain)]),
            &backends,
            &traffic,
        );
        assert_eq!(drained, alone);
        // 500 arrivals/s on a 400 rps node.
        assert_eq!(alone.failed_requests, 100 * 30);
    }

    #[test]
    fn fractional_rate_spreads_over_seconds() {
        let backends = [Backend {
            capacity_rps: 10,
            base_latency_ms: 1.0,
        }];
        let traffic = TrafficProfile {
            concurrent_connections: 1,
            duration_s: 4,
            requests_per_connection_per_s: 0.5,
        };
        let out = lb_simulate(&view(&[(1, BackendState::Ready)]), &backends, &traffic);
        assert_eq!(out.total_requests, 2);
    }

    #[test]
    fn fitness_arithmetic() {
        let zero = SimOutcome {
            total_requests: 10,
            failed_requests: 0,
            mean_latency_ms: 0.0,
        };
        assert_eq!(lb_fitness(&zero), 0.0);
        let mixed = SimOutcome {
            total_requests: 1000,
            failed_requests: 100,
            mean_latency_ms: 50.0,
        };
        assert!((lb_fitness(&mixed) - 0.15).abs() < 1e-12);
        let empty = SimOutcome {
            total_requests: 0,
            failed_requests: 0,
            mean_latency_ms: 0.0,
        };
        assert_eq!(lb_fitness(&empty), 0.0);
    }

    #[test]
    fn decode_genome() {
        let v = LbGenomeView::decode(&Genome::new(vec![12, 0, 256, 2]));
        assert_eq!(
            v,
            view(&[(12, BackendState::Ready), (256, BackendState::Maint)])
        );
    }

    #[test]
    fn invalid_instances_rejected() {
        assert_eq!(
            LbSimProblem::new(vec![], TrafficProfile::default()).unwrap_err(),
            ProblemError::NoBackends
        );
        assert!(LbSimProblem::new(
            vec![Backend {
                capacity_rps: 0,
                base_latency_ms: 1.0
            }],
            TrafficProfile::default()
        )
        .is_err());
    }

    type Instance = (Vec<(u64, u8)>, Vec<(u64, f64)>, TrafficProfile);

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..5).prop_flat_map(|n| {
            (
                prop::collection::vec((1u64..=256, 0u8..3), n),
                prop::collection::vec((1u64..500, 0.5f64..20.0), n),
                (1u64..800, 1u64..6, 0.1f64..3.0).prop_map(|(c, d, r)| TrafficProfile {
                    concurrent_connections: c,
                    duration_s: d,
                    requests_per_connection_per_s: r,
                }),
            )
        })
    }

    fn build(slots: &[(u64, u8)], caps: &[(u64, f64)]) -> (LbGenomeView, Vec<Backend>) {
        let v = LbGenomeView {
            slots: slots
                .iter()
                .map(|&(weight, s)| BackendSlot {
                    weight,
                    state: BackendState::from_gene(s as i64),
                })
                .collect(),
        };
        let b = caps
            .iter()
            .map(|&(capacity_rps, base_latency_ms)| Backend {
                capacity_rps,
                base_latency_ms,
            })
            .collect();
        (v, b)
    }

    proptest! {
        #[test]
        fn outcome_invariants((slots, caps, traffic) in arb_instance()) {
            let (v, b) = build(&slots, &caps);
            let out = lb_simulate(&v, &b, &traffic);
            prop_assert!(out.failed_requests <= out.total_requests);
            prop_assert!(out.mean_latency_ms >= 0.0);
            if out.failed_requests == out.total_requests {
                prop_assert_eq!(out.mean_latency_ms, 0.0);
            }
            prop_assert_eq!(&out, &lb_simulate(&v, &b, &traffic));
        }

        #[test]
        fn more_capacity_never_adds_failures(
            (slots, caps, traffic) in arb_instance(),
            pick in any::<prop::sample::Index>(),
            extra in 1u64..300,
        ) {
            let (v, b) = build(&slots, &caps);
            let before = lb_simulate(&v, &b, &traffic);
            let mut bigger = b.clone();
            let i = pick.index(bigger.len());
            bigger[i].capacity_rps += extra;
            let after = lb_simulate(&v, &bigger, &traffic);
            prop_assert!(after.failed_requests <= before.failed_requests);
        }
    }
}
