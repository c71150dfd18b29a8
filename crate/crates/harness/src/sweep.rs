//! Event sweeps: simulate, observe, rank, record.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use flier_core::acpf::{newton_solve, NewtonOptions, SystemState};
use flier_core::flier::{
    merge_pairs, CandidateSet, Contingency, FilterMode, Flier, RankOptions, RankedDiagnosis,
};
use flier_core::netmodel::{
    build_admittance, enumerate_splits, expand_to_breaker_model, observation_operator,
    parse_case, BreakerNetwork, BusBranchNetwork, PmuDeployment,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{filter_label, sampling_rng, seeded, EventFamily, ExperimentConfig};
use crate::error::HarnessError;
use crate::noise::add_noise;
use crate::simulate::{simulate_event, Event, Simulated};

/// Power-flow tolerance for base and post-event solves.
pub const NEWTON_TOLERANCE: f64 = 1e-10;
/// Relative slack allowed in the `tau <= t` check.
pub const BOUND_TOL: f64 = 1e-9;

pub fn newton_options() -> NewtonOptions {
    NewtonOptions {
        tolerance: NEWTON_TOLERANCE,
        ..NewtonOptions::default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRecord {
    pub event_id: usize,
    pub kind: &'static str,
    pub event: String,
    /// Rank of the true element; parallel circuits between one bus pair
    /// count as one line.
    pub rank: usize,
    /// Rank of the true candidate itself.
    pub candidate_rank: usize,
    pub top1: bool,
    pub top3: bool,
    pub detected: bool,
    pub t_computed: usize,
    pub candidates: usize,
    pub skipped_fraction: f64,
    pub truth_tau: f64,
    pub truth_t: Option<f64>,
    pub top: String,
    pub top_t: Option<f64>,
    pub unfiltered_top: String,
    pub filters_agree: bool,
    pub bound_violations: usize,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcludedEvent {
    pub event_id: usize,
    pub event: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreRow {
    pub event_id: usize,
    /// Position in ascending-`tau` order.
    pub position: usize,
    pub candidate: String,
    pub tau: f64,
    pub t: Option<f64>,
    pub truth: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingRow {
    pub event_id: usize,
    pub filtered_seconds: f64,
    pub unfiltered_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub case: String,
    pub family: EventFamily,
    pub deployment: Vec<u64>,
    pub noise: f64,
    pub seed: u64,
    pub filter: FilterMode,
    pub candidates: usize,
    pub split_candidates: Option<usize>,
    pub events_considered: usize,
    pub records: Vec<EventRecord>,
    pub excluded: Vec<ExcludedEvent>,
    pub scores: Vec<ScoreRow>,
    pub timings: Vec<TimingRow>,
    pub precompute_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub case: String,
    pub events_family: EventFamily,
    pub deployment: Vec<u64>,
    pub noise: f64,
    pub seed: u64,
    pub filter: String,
    pub candidates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_candidates: Option<usize>,
    pub events_considered: usize,
    pub events: usize,
    pub excluded: Vec<ExcludedEvent>,
    pub top1: usize,
    pub top3: usize,
    pub candidate_top1: usize,
    pub candidate_top3: usize,
    pub detected: usize,
    pub cdf: Vec<(usize, f64)>,
    pub median_skipped_fraction: f64,
    pub mean_t_computed: f64,
    pub filters_agree: usize,
    pub bound_violations: usize,
    pub newton_tolerance: f64,
}

impl SweepResult {
    pub fn top1(&self) -> usize {
        self.records.iter().filter(|r| r.top1).count()
    }

    pub fn top3(&self) -> usize {
        self.records.iter().filter(|r| r.top3).count()
    }

    /// Fraction of events whose truth ranks at most `r`, for `r = 1..=max_rank`.
    pub fn cdf(&self, max_rank: usize) -> Vec<(usize, f64)> {
        let total = self.records.len().max(1) as f64;
        (1..=max_rank)
            .map(|r| {
                let hits = self.records.iter().filter(|rec| rec.rank <= r).count();
                (r, hits as f64 / total)
            })
            .collect()
    }

    pub fn median_skipped_fraction(&self) -> f64 {
        median(self.records.iter().map(|r| r.skipped_fraction).collect())
    }

    pub fn median_time(&self, pick: impl Fn(&TimingRow) -> f64) -> f64 {
        median(self.timings.iter().map(pick).collect())
    }

    pub fn summary(&self) -> Summary {
        let n = self.records.len();
        Summary {
            case: self.case.clone(),
            events_family: self.family,
            deployment: self.deployment.clone(),
            noise: self.noise,
            seed: self.seed,
            filter: filter_label(self.filter),
            candidates: self.candidates,
            split_candidates: self.split_candidates,
            events_considered: self.events_considered,
            events: n,
            excluded: self.excluded.clone(),
            top1: self.top1(),
            top3: self.top3(),
            candidate_top1: self.records.iter().filter(|r| r.candidate_rank == 1).count(),
            candidate_top3: self.records.iter().filter(|r| r.candidate_rank <= 3).count(),
            detected: self.records.iter().filter(|r| r.detected).count(),
            cdf: self.cdf(10),
            median_skipped_fraction: self.median_skipped_fraction(),
            mean_t_computed: self.records.iter().map(|r| r.t_computed as f64).sum::<f64>()
                / n.max(1) as f64,
            filters_agree: self.records.iter().filter(|r| r.filters_agree).count(),
            bound_violations: self.records.iter().map(|r| r.bound_violations).sum(),
            newton_tolerance: NEWTON_TOLERANCE,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Everything shared by the events of one sweep.
pub struct Prepared {
    pub net: BusBranchNetwork,
    pub bnet: Option<BreakerNetwork>,
    /// Solved base case on the bus-branch model.
    pub pre: SystemState,
    pub set: CandidateSet,
    pub events: Vec<(Event, usize, String)>,
    pub flier: Flier,
    pub deployment: Vec<u64>,
    pub precompute_seconds: f64,
}

pub fn load_network(path: &Path) -> Result<BusBranchNetwork, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(build_admittance(&parse_case(&text)?)?)
}

/// Solves the base case from the stored voltages, falling back to a flat start.
pub fn solve_base(net: &BusBranchNetwork) -> Result<SystemState, HarnessError> {
    let model = net.flow_model();
    let stored = SystemState {
        theta: net.initial_va.clone(),
        vmag: net.initial_vm.clone(),
        lambda: vec![0.0; model.c()],
    };
    match newton_solve(&model, &stored, &newton_options()) {
        Ok(r) => Ok(r.state),
        Err(_) => Ok(newton_solve(
            &model,
            &SystemState::flat(model.n(), model.c()),
            &newton_options(),
        )?
        .state),
    }
}

pub fn prepare(net: BusBranchNetwork, config: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    config.validate()?;
    let pre = solve_base(&net)?;
    let deployment = config.deployment.resolve(&net.bus_ids, config.seed)?;
    let pmus = PmuDeployment::new(deployment.clone());

    let started = Instant::now();
    let mut set = CandidateSet::new();
    let (flier, bnet, events) = match config.events {
        EventFamily::Lines => {
            let model = net.flow_model();
            set.add_lines(&net, &model, &pre)?;
            let obs = observation_operator(&pmus, &net)?;
            let flier = Flier::new(&model, &pre, obs)?;
            let events = net
                .in_service_branches()
                .map(|b| {
                    let truth = set.position(&Contingency::Line { branch: b }).unwrap();
                    (Event::Line(b), truth, net.branch_label(b))
                })
                .collect();
            (flier, None, events)
        }
        EventFamily::Merges => {
            let model = net.flow_model();
            let pairs = merge_pairs(&net);
            set.add_merges(&net, &model, &pre, &pairs)?;
            let obs = observation_operator(&pmus, &net)?;
            let flier = Flier::new(&model, &pre, obs)?;
            let events = pairs
                .iter()
                .map(|&(a, b)| {
                    let truth = set.position(&Contingency::Merge { a, b }).unwrap();
                    let label = format!("merge {}+{}", net.bus_ids[a], net.bus_ids[b]);
                    (Event::Merge(a, b), truth, label)
                })
                .collect();
            (flier, None, events)
        }
        EventFamily::Splits => {
            let bnet = expand_to_breaker_model(&net);
            let state = bnet.map_state(&pre);
            let splits = enumerate_splits(&bnet);
            set.add_splits(&bnet, &state, &splits)?;
            let obs = observation_operator(&pmus, &bnet)?;
            let flier = Flier::new(&bnet.model, &state, obs)?;
            let events = splits
                .into_iter()
                .map(|s| {
                    let truth = set
                        .position(&Contingency::Split {
                            bus: s.bus,
                            breakers: s.breakers,
                        })
                        .unwrap();
                    let label = bnet.split_label(&s);
                    (Event::Split(s), truth, label)
                })
                .collect();
            (flier, Some(bnet), events)
        }
    };
    Ok(Prepared {
        net,
        bnet,
        pre,
        set,
        events,
        flier,
        deployment,
        precompute_seconds: started.elapsed().as_secs_f64(),
    })
}

impl Prepared {
    pub fn simulate(&self, idx: usize) -> flier_core::Result<Simulated> {
        simulate_event(
            &self.net,
            self.bnet.as_ref(),
            &self.pre,
            &self.events[idx].0,
            &newton_options(),
        )
    }

    /// Noise-free PMU view of a simulated event, in observation-row order.
    pub fn observe(&self, sim: &Simulated) -> Vec<f64> {
        let (dtheta, dvmag) = sim.voltage_delta(&self.pre);
        let mut out = Vec::with_capacity(2 * self.deployment.len());
        for id in &self.flier.observation.buses {
            let b = self.net.index_of(*id).expect("deployment resolved against this network");
            out.push(dtheta[b]);
            out.push(dvmag[b]);
        }
        out
    }

    /// Identity of a candidate for accuracy counting.
    fn group(&self, idx: usize) -> (u8, usize, usize) {
        match self.set.candidates[idx].contingency {
            Contingency::Line { branch } => {
                let br = &self.net.branches[branch];
                (1, br.from.min(br.to), br.from.max(br.to))
            }
            _ => (0, idx, 0),
        }
    }

    fn element_rank(&self, diag: &RankedDiagnosis, truth: usize) -> usize {
        let mut best: HashMap<(u8, usize, usize), usize> = HashMap::new();
        for e in &diag.candidates {
            let g = self.group(e.index);
            let r = best.entry(g).or_insert(e.rank);
            *r = (*r).min(e.rank);
        }
        let tg = self.group(truth);
        let tr = best[&tg];
        1 + best.iter().filter(|(g, &r)| **g != tg && r < tr).count()
    }
}

fn timed_rank(
    prep: &Prepared,
    observed: &[f64],
    mode: FilterMode,
    repeats: usize,
) -> Result<(RankedDiagnosis, f64), HarnessError> {
    let options = RankOptions {
        filter: mode,
        weights: None,
    };
    let mut times = Vec::with_capacity(repeats.max(1));
    let mut diag = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let d = prep.flier.rank(observed, &prep.set, &options)?;
        times.push(start.elapsed().as_secs_f64());
        diag = Some(d);
    }
    times.sort_by(f64::total_cmp);
    Ok((diag.unwrap(), times[times.len() / 2]))
}

enum Outcome {
    Scored(EventRecord, Vec<ScoreRow>, TimingRow),
    Excluded(ExcludedEvent),
}

fn score_event(
    prep: &Prepared,
    config: &ExperimentConfig,
    idx: usize,
    sim: &Simulated,
) -> Result<Outcome, HarnessError> {
    let (_, truth, label) = &prep.events[idx];
    let clean = prep.observe(sim);
    let mut rng = seeded(config.seed, idx as u64);
    let observed = add_noise(&clean, config.noise, &mut rng);

    let (diag, filtered_seconds) = timed_rank(prep, &observed, config.filter, config.timing_repeats)?;
    let (full, unfiltered_seconds) = timed_rank(prep, &observed, FilterMode::Off, config.timing_repeats)?;

    let bound_violations = full
        .candidates
        .iter()
        .filter(|e| matches!(e.t, Some(t) if e.tau > t * (1.0 + BOUND_TOL)))
        .count();
    let truth_entry = diag.entry(*truth).expect("truth is a candidate");
    let rank = prep.element_rank(&diag, *truth);
    let top = diag.top();
    let record = EventRecord {
        event_id: idx,
        kind: prep.set.candidates[*truth].contingency.kind(),
        event: label.clone(),
        rank,
        candidate_rank: truth_entry.rank,
        top1: rank == 1,
        top3: rank <= 3,
        detected: top.kind != "none",
        t_computed: diag.t_computed,
        candidates: prep.set.len(),
        skipped_fraction: 1.0 - diag.t_computed as f64 / prep.set.len() as f64,
        truth_tau: truth_entry.tau,
        truth_t: truth_entry.t,
        top: top.id.clone(),
        top_t: top.t,
        unfiltered_top: full.top().id.clone(),
        filters_agree: full.top().index == top.index,
        bound_violations,
        newton_iterations: sim.iterations,
    };

    let mut by_tau: Vec<_> = diag.candidates.iter().collect();
    by_tau.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.index.cmp(&b.index)));
    let scores = by_tau
        .iter()
        .enumerate()
        .map(|(position, e)| ScoreRow {
            event_id: idx,
            position,
            candidate: e.id.clone(),
            tau: e.tau,
            t: e.t,
            truth: e.index == *truth,
        })
        .collect();
    Ok(Outcome::Scored(
        record,
        scores,
        TimingRow {
            event_id: idx,
            filtered_seconds,
            unfiltered_seconds,
        },
    ))
}

fn excluded(prep: &Prepared, idx: usize, err: impl std::fmt::Display) -> Outcome {
    Outcome::Excluded(ExcludedEvent {
        event_id: idx,
        event: prep.events[idx].2.clone(),
        reason: err.to_string(),
    })
}

fn case_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    let net = load_network(&config.case)?;
    let prep = prepare(net, config)?;
    run_prepared(&prep, config)
}

pub fn run_prepared(prep: &Prepared, config: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    let outcomes: Vec<Outcome> = match config.sample {
        None => {
            let work = || {
                (0..prep.events.len())
                    .into_par_iter()
                    .map(|idx| match prep.simulate(idx) {
                        Ok(sim) => score_event(prep, config, idx, &sim),
                        Err(e) => Ok(excluded(prep, idx, e)),
                    })
                    .collect::<Result<Vec<_>, _>>()
            };
            in_pool(config.threads, work)??
        }
        Some(k) => {
            let mut order: Vec<usize> = (0..prep.events.len()).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut sampling_rng(config.seed));
            let mut picked = Vec::new();
            let mut outcomes = Vec::new();
            for idx in order {
                if picked.len() == k {
                    break;
                }
                match prep.simulate(idx) {
                    Ok(sim) => picked.push((idx, sim)),
                    Err(e) => outcomes.push(excluded(prep, idx, e)),
                }
            }
            let work = || {
                picked
                    .par_iter()
                    .map(|(idx, sim)| score_event(prep, config, *idx, sim))
                    .collect::<Result<Vec<_>, _>>()
            };
            outcomes.extend(in_pool(config.threads, work)??);
            outcomes
        }
    };

    let mut records = Vec::new();
    let mut excluded_events = Vec::new();
    let mut scores = Vec::new();
    let mut timings = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Scored(r, s, t) => {
                records.push(r);
                scores.extend(s);
                timings.push(t);
            }
            Outcome::Excluded(e) => excluded_events.push(e),
        }
    }
    records.sort_by_key(|r| r.event_id);
    excluded_events.sort_by_key(|e| e.event_id);
    scores.sort_by_key(|s| (s.event_id, s.position));
    timings.sort_by_key(|t| t.event_id);

    Ok(SweepResult {
        case: case_name(&config.case),
        family: config.events,
        deployment: prep.deployment.clone(),
        noise: config.noise,
        seed: config.seed,
        filter: config.filter,
        candidates: prep.set.len(),
        split_candidates: prep
            .bnet
            .as_ref()
            .map(|_| prep.set.len() - 1),
        events_considered: records.len() + excluded_events.len(),
        records,
        excluded: excluded_events,
        scores,
        timings,
        precompute_seconds: prep.precompute_seconds,
    })
}

fn in_pool<T: Send>(
    threads: Option<usize>,
    work: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    match threads {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}
