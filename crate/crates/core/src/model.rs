//! Shared domain types: QoS observations, discretized network states and the
//! configuration/action space the agent chooses from.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measured sample of the monitored QoS parameter (bandwidth).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosObservation {
    /// Seconds since the start of the run.
    pub timestamp: f64,
    /// Mbps.
    pub bandwidth: f64,
}

impl QosObservation {
    pub fn new(timestamp: f64, bandwidth: f64) -> Result<Self> {
        if !timestamp.is_finite() || timestamp < 0.0 {
            return Err(Error::RejectedInput(format!("timestamp {timestamp}")));
        }
        if !bandwidth.is_finite() || bandwidth < 0.0 {
            return Err(Error::RejectedInput(format!("bandwidth {bandwidth}")));
        }
        Ok(Self {
            timestamp,
            bandwidth,
        })
    }
}

/// Uniform, left-closed bins over `[0, max_value]`; values above the range clamp
/// into the top bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub num_bins: usize,
    pub max_value: f64,
}

impl Binning {
    pub fn new(num_bins: usize, max_value: f64) -> Result<Self> {
        if num_bins == 0 {
            return Err(Error::InvalidConfig("num_bins must be >= 1".into()));
        }
        if !(max_value.is_finite() && max_value > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "max bandwidth must be positive, got {max_value}"
            )));
        }
        Ok(Self {
            num_bins,
            max_value,
        })
    }

    pub fn width(&self) -> f64 {
        self.max_value / self.num_bins as f64
    }

    pub fn bin(&self, value: f64) -> Result<usize> {
        if !value.is_finite() {
            return Err(Error::RejectedInput(format!("non-finite value {value}")));
        }
        if value < 0.0 {
            return Err(Error::RejectedInput(format!("negative value {value}")));
        }
        let raw = (value / self.width()).floor();
        // `as usize` saturates, so huge values land in the top bin too.
        Ok((raw as usize).min(self.num_bins - 1))
    }

    pub fn lower_edge(&self, bin: usize) -> f64 {
        bin as f64 * self.width()
    }

    pub fn center(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) * self.width()
    }
}

/// Discretized network state: the Q-table row index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetworkState {
    pub bin_index: usize,
}

/// Maps a bandwidth sample onto its state bin.
pub fn discretize(bandwidth: f64, num_bins: usize, max_bw: f64) -> Result<NetworkState> {
    let binning = Binning::new(num_bins, max_bw)?;
    Ok(NetworkState {
        bin_index: binning.bin(bandwidth)?,
    })
}

/// State space over one or more QoS parameters. Multi-parameter states are
/// composed row-major over the per-parameter bins (first parameter slowest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub dims: Vec<Binning>,
}

impl StateSpace {
    pub fn bandwidth_only(num_bins: usize, max_bw: f64) -> Result<Self> {
        Ok(Self {
            dims: vec![Binning::new(num_bins, max_bw)?],
        })
    }

    pub fn num_states(&self) -> usize {
        self.dims.iter().map(|d| d.num_bins).product()
    }

    pub fn encode(&self, values: &[f64]) -> Result<NetworkState> {
        if values.len() != self.dims.len() {
            return Err(Error::Shape {
                expected: self.dims.len(),
                got: values.len(),
            });
        }
        let mut index = 0;
        for (dim, &v) in self.dims.iter().zip(values) {
            index = index * dim.num_bins + dim.bin(v)?;
        }
        Ok(NetworkState { bin_index: index })
    }

    /// Per-parameter bin indices of a composed state.
    pub fn decode(&self, state: NetworkState) -> Vec<usize> {
        let mut rest = state.bin_index;
        let mut out = vec![0; self.dims.len()];
        for (slot, dim) in out.iter_mut().zip(&self.dims).rev() {
            *slot = rest % dim.num_bins;
            rest /= dim.num_bins;
        }
        out
    }
}

/// Traffic priority level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Priority {
    L,
    M,
    H,
}

/// QoS service model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QosModel {
    /// Best effort.
    Be,
    /// Real-time polling service.
    Rtps,
    /// Unsolicited grant service.
    Ugs,
}

/// What a single action assigns to one application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AppSetting {
    /// Unshaped, at the configured generation-rate multiplier.
    GenerationRate,
    Priority(Priority),
    QosModel(QosModel),
}

impl AppSetting {
    pub const LABELS: [&'static str; 7] = ["GR", "L", "M", "H", "BE", "RTPS", "UGS"];

    pub fn parse(label: &str) -> Result<Self> {
        Ok(match label {
            "GR" => AppSetting::GenerationRate,
            "L" => AppSetting::Priority(Priority::L),
            "M" => AppSetting::Priority(Priority::M),
            "H" => AppSetting::Priority(Priority::H),
            "BE" => AppSetting::QosModel(QosModel::Be),
            "RTPS" => AppSetting::QosModel(QosModel::Rtps),
            "UGS" => AppSetting::QosModel(QosModel::Ugs),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown application setting {other:?}"
                )))
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            AppSetting::GenerationRate => "GR",
            AppSetting::Priority(Priority::L) => "L",
            AppSetting::Priority(Priority::M) => "M",
            AppSetting::Priority(Priority::H) => "H",
            AppSetting::QosModel(QosModel::Be) => "BE",
            AppSetting::QosModel(QosModel::Rtps) => "RTPS",
            AppSetting::QosModel(QosModel::Ugs) => "UGS",
        }
    }
}

/// A named configuration parameter and its admissible values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigSet {
    pub name: String,
    pub elements: Vec<String>,
}

impl ConfigSet {
    pub fn new<S: Into<String>>(name: impl Into<String>, elements: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() {
            return Err(Error::InvalidConfig(format!("config set {name:?} is empty")));
        }
        for (i, e) in elements.iter().enumerate() {
            if elements[..i].contains(e) {
                return Err(Error::InvalidConfig(format!(
                    "config set {name:?} repeats element {e:?}"
                )));
            }
        }
        Ok(Self { name, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// One choice from the configuration space: element `i` belongs to config set `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfigTuple(pub Vec<String>);

impl ConfigTuple {
    pub fn labels(&self) -> &[String] {
        &self.0
    }

    /// Interprets the tuple as per-application settings (App1, App2, App3).
    pub fn app_settings(&self) -> Result<[AppSetting; 3]> {
        if self.0.len() != 3 {
            return Err(Error::Shape {
                expected: 3,
                got: self.0.len(),
            });
        }
        Ok([
            AppSetting::parse(&self.0[0])?,
            AppSetting::parse(&self.0[1])?,
            AppSetting::parse(&self.0[2])?,
        ])
    }
}

impl fmt::Display for ConfigTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(", "))
    }
}

/// Ordered, densely indexed set of actions. Index `i` is reported as `a{i+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub configs: Vec<ConfigSet>,
    pub actions: Vec<ConfigTuple>,
}

/// Per-application assignments of the eight curated congestion actions.
const TABLE3_ROWS: [[&str; 3]; 8] = [
    ["GR", "L", "RTPS"],
    ["GR", "RTPS", "M"],
    ["M", "BE", "GR"],
    ["L", "RTPS", "GR"],
    ["RTPS", "M", "GR"],
    ["M", "GR", "BE"],
    ["H", "UGS", "GR"],
    ["UGS", "GR", "H"],
];

impl ActionSpace {
    /// Cartesian product of `configs` in lexicographic order of set indices
    /// (last set varies fastest).
    pub fn full(configs: Vec<ConfigSet>) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::InvalidConfig("no config sets".into()));
        }
        if let Some(empty) = configs.iter().find(|c| c.is_empty()) {
            return Err(Error::InvalidConfig(format!("config set {:?} is empty", empty.name)));
        }
        let mut actions = vec![Vec::<String>::new()];
        for set in &configs {
            actions = actions
                .into_iter()
                .flat_map(|prefix| {
                    set.elements.iter().map(move |e| {
                        let mut t = prefix.clone();
                        t.push(e.clone());
                        t
                    })
                })
                .collect();
        }
        Ok(Self {
            configs,
            actions: actions.into_iter().map(ConfigTuple).collect(),
        })
    }

    /// The eight curated per-application actions for congestion mitigation.
    pub fn table3() -> Self {
        let configs = ["App1", "App2", "App3"]
            .iter()
            .map(|app| ConfigSet::new(*app, AppSetting::LABELS).expect("static labels are valid"))
            .collect();
        let actions = TABLE3_ROWS
            .iter()
            .map(|row| ConfigTuple(row.iter().map(|s| s.to_string()).collect()))
            .collect();
        Self { configs, actions }
    }

    pub fn cardinality(&self) -> usize {
        self.actions.len()
    }

    pub fn get(&self, index: usize) -> Result<&ConfigTuple> {
        self.actions.get(index).ok_or(Error::InvalidAction {
            index,
            cardinality: self.actions.len(),
        })
    }

    pub fn label(index: usize) -> String {
        format!("a{}", index + 1)
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.cardinality()).map(Self::label).collect()
    }

    /// Every tuple has one element per config set, drawn from that set.
    pub fn is_consistent(&self) -> bool {
        self.actions.iter().all(|a| {
            a.0.len() == self.configs.len()
                && a.0.iter().zip(&self.configs).all(|(e, set)| set.elements.contains(e))
        })
    }

    /// Structured text form: ordered action list with per-config assignments.
    pub fn to_document(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            action: String,
            assignments: Vec<(&'a str, &'a str)>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            cardinality: usize,
            configs: &'a [ConfigSet],
            actions: Vec<Entry<'a>>,
        }
        let doc = Doc {
            cardinality: self.cardinality(),
            configs: &self.configs,
            actions: self
                .actions
                .iter()
                .enumerate()
                .map(|(i, t)| Entry {
                    action: Self::label(i),
                    assignments: self
                        .configs
                        .iter()
                        .zip(&t.0)
                        .map(|(c, e)| (c.name.as_str(), e.as_str()))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("action document serializes")
    }
}
