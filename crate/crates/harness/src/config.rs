use std::path::PathBuf;
use std::str::FromStr;

use flier_core::flier::FilterMode;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::HarnessError;

/// Stream of the seeded generator reserved for PMU placement.
const PLACEMENT_STREAM: u64 = u64::MAX;
/// Stream reserved for sampling events.
const SAMPLING_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeploymentSpec {
    Single,
    Sparse,
    All,
    Buses(Vec<u64>),
    Random(usize),
}

impl FromStr for DeploymentSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Self::Single),
            "sparse" => Ok(Self::Sparse),
            "all" => Ok(Self::All),
            _ => {
                if let Some(k) = s.strip_prefix("random:") {
                    let k = k
                        .parse()
                        .map_err(|_| HarnessError::Config(format!("bad PMU count in '{s}'")))?;
                    return Ok(Self::Random(k));
                }
                let buses = s
                    .split(',')
                    .map(|b| b.trim().parse::<u64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        HarnessError::Config(format!(
                            "PMU deployment '{s}' is not single, sparse, all, random:<k> or a bus list"
                        ))
                    })?;
                Ok(Self::Buses(buses))
            }
        }
    }
}

impl DeploymentSpec {
    /// Bus ids for a network with these bus ids.
    pub fn resolve(&self, bus_ids: &[u64], seed: u64) -> Result<Vec<u64>, HarnessError> {
        let named = |single: &[u64], sparse: &[u64]| match self {
            Self::Single => single.to_vec(),
            _ => sparse.to_vec(),
        };
        let mut buses = match self {
            Self::Single | Self::Sparse => match bus_ids.len() {
                57 => named(&[35], &[4, 13, 34]),
                118 => named(&[65], &[5, 17, 37, 66, 80, 100]),
                n => {
                    return Err(HarnessError::Config(format!(
                        "no named PMU deployment for a {n}-bus case"
                    )))
                }
            },
            Self::All => bus_ids.to_vec(),
            Self::Buses(b) => b.clone(),
            Self::Random(k) => {
                if *k > bus_ids.len() {
                    return Err(HarnessError::Config(format!(
                        "{k} PMUs requested on {} buses",
                        bus_ids.len()
                    )));
                }
                let mut rng = seeded(seed, PLACEMENT_STREAM);
                sample(&mut rng, bus_ids.len(), *k)
                    .into_iter()
                    .map(|i| bus_ids[i])
                    .collect()
            }
        };
        buses.sort_unstable();
        buses.dedup();
        Ok(buses)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFamily {
    Lines,
    Splits,
    Merges,
}

impl FromStr for EventFamily {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lines" => Ok(Self::Lines),
            "splits" => Ok(Self::Splits),
            "merges" => Ok(Self::Merges),
            _ => Err(HarnessError::Config(format!(
                "event family '{s}' is not lines, splits or merges"
            ))),
        }
    }
}

pub fn parse_filter(s: &str) -> Result<FilterMode, HarnessError> {
    match s {
        "on" => Ok(FilterMode::On),
        "off" => Ok(FilterMode::Off),
        _ => s
            .strip_prefix("lenient:")
            .and_then(|k| k.parse().ok())
            .filter(|&k| k > 0)
            .map(FilterMode::Lenient)
            .ok_or_else(|| {
                HarnessError::Config(format!("filter '{s}' is not on, off or lenient:<k>"))
            }),
    }
}

pub fn filter_label(mode: FilterMode) -> String {
    match mode {
        FilterMode::On => "on".into(),
        FilterMode::Off => "off".into(),
        FilterMode::Lenient(k) => format!("lenient:{k}"),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub case: PathBuf,
    pub deployment: DeploymentSpec,
    pub noise: f64,
    pub events: EventFamily,
    pub filter: FilterMode,
    pub seed: u64,
    /// Draw events at random until this many have converged.
    pub sample: Option<usize>,
    /// Time the filtered and unfiltered scans (repetitions per event).
    pub timing_repeats: usize,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(case: impl Into<PathBuf>, deployment: DeploymentSpec, events: EventFamily) -> Self {
        Self {
            case: case.into(),
            deployment,
            noise: 0.0,
            events,
            filter: FilterMode::On,
            seed: 0,
            sample: None,
            timing_repeats: 0,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(HarnessError::Config(format!(
                "noise sigma must be a finite non-negative number, got {}",
                self.noise
            )));
        }
        if self.sample == Some(0) {
            return Err(HarnessError::Config("sample size must be positive".into()));
        }
        Ok(())
    }
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sampling_rng(seed: u64) -> ChaCha8Rng {
    seeded(seed, SAMPLING_STREAM)
}
