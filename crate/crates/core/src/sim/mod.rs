//! Discrete-time single-cell congestion simulator.
//!
//! UEs arrive as a Poisson process, stay for an exponentially distributed
//! holding time and generate per-application load. Each application's load
//! goes through its shaper and then a priority scheduler into a link of fixed
//! capacity. Extra eMBB load can be injected during scheduled windows.

mod series;
mod shaper;

pub use series::TimeSeries;
pub use shaper::{shape, ShapeOutcome, ShaperConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionSpace, AppSetting, Priority, QosModel};

/// Application classes, in App1/App2/App3 order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AppKind {
    Mmtc,
    Embb,
    Urllc,
}

impl AppKind {
    pub const ALL: [AppKind; 3] = [AppKind::Mmtc, AppKind::Embb, AppKind::Urllc];

    pub fn index(self) -> usize {
        match self {
            AppKind::Mmtc => 0,
            AppKind::Embb => 1,
            AppKind::Urllc => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AppKind::Mmtc => "mmtc",
            AppKind::Embb => "embb",
            AppKind::Urllc => "urllc",
        }
    }
}

/// Static description of an application class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppClass {
    pub kind: AppKind,
    pub default_priority: Priority,
    pub default_qos_model: QosModel,
    /// Mbps generated by one UE of this class.
    pub per_ue_demand: f64,
}

impl AppClass {
    /// Table-I defaults: mMTC/L/BE, eMBB/M/RTPS, URLLC/H/UGS.
    pub fn defaults(demand: [f64; 3]) -> [AppClass; 3] {
        [
            AppClass {
                kind: AppKind::Mmtc,
                default_priority: Priority::L,
                default_qos_model: QosModel::Be,
                per_ue_demand: demand[0],
            },
            AppClass {
                kind: AppKind::Embb,
                default_priority: Priority::M,
                default_qos_model: QosModel::Rtps,
                per_ue_demand: demand[1],
            },
            AppClass {
                kind: AppKind::Urllc,
                default_priority: Priority::H,
                default_qos_model: QosModel::Ugs,
                per_ue_demand: demand[2],
            },
        ]
    }
}

/// How QoS models translate into shaper settings, as fractions of the
/// class's current demand (offered load plus backlog).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapingStances {
    pub rtps_cir_share: f64,
    pub rtps_eir_share: f64,
    pub be_eir_share: f64,
    /// Burst buffer depth for shaped classes, Mbit.
    pub ebs_mbit: f64,
    /// Load multiplier for a class switched to its raw generation rate.
    pub gr_multiplier: f64,
}

impl Default for ShapingStances {
    fn default() -> Self {
        Self {
            rtps_cir_share: 0.5,
            rtps_eir_share: 0.3,
            be_eir_share: 0.6,
            ebs_mbit: 2.0,
            gr_multiplier: 1.0,
        }
    }
}

/// Extra eMBB load during `[start, end)` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CongestionWindow {
    pub start: f64,
    pub end: f64,
    pub extra_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Link capacity, Mbps.
    pub capacity: f64,
    /// Mean UE arrivals per tick.
    pub lambda: f64,
    pub num_ues_max: usize,
    /// Seconds per tick.
    pub tick: f64,
    /// Seconds.
    pub duration: f64,
    /// Mean UE holding time, in ticks.
    pub mean_holding_ticks: f64,
    /// Per-UE demand (Mbps) for mMTC, eMBB, URLLC.
    pub per_ue_demand: [f64; 3],
    pub congestion_schedule: Vec<CongestionWindow>,
    /// When positive, the schedule repeats with this period (seconds).
    pub congestion_period: f64,
    pub stances: ShapingStances,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            capacity: 100.0,
            lambda: 2.0,
            num_ues_max: 30,
            tick: 1.0,
            duration: 100.0,
            mean_holding_ticks: 10.0,
            per_ue_demand: [0.5, 5.0, 1.0],
            congestion_schedule: vec![CongestionWindow {
                start: 40.0,
                end: 60.0,
                extra_mbps: 80.0,
            }],
            congestion_period: 100.0,
            stances: ShapingStances::default(),
            rng_seed: 7,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return bad(format!("capacity must be > 0, got {}", self.capacity));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return bad(format!("tick must be > 0, got {}", self.tick));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return bad(format!("duration must be >= 0, got {}", self.duration));
        }
        if !(self.mean_holding_ticks.is_finite() && self.mean_holding_ticks > 0.0) {
            return bad(format!("mean holding time must be > 0, got {}", self.mean_holding_ticks));
        }
        if self.per_ue_demand.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return bad("per-UE demand must be finite and >= 0".into());
        }
        for w in &self.congestion_schedule {
            if !(w.start <= w.end && w.extra_mbps >= 0.0 && w.extra_mbps.is_finite()) {
                return bad(format!("bad congestion window {w:?}"));
            }
        }
        let s = &self.stances;
        for (name, v) in [
            ("rtps_cir_share", s.rtps_cir_share),
            ("rtps_eir_share", s.rtps_eir_share),
            ("be_eir_share", s.be_eir_share),
            ("ebs_mbit", s.ebs_mbit),
            ("gr_multiplier", s.gr_multiplier),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    pub fn num_ticks(&self) -> usize {
        (self.duration / self.tick).round() as usize
    }

    fn congestion_at(&self, t: f64) -> f64 {
        let phase = if self.congestion_period > 0.0 {
            t.rem_euclid(self.congestion_period)
        } else {
            t
        };
        self.congestion_schedule
            .iter()
            .filter(|w| phase >= w.start && phase < w.end)
            .map(|w| w.extra_mbps)
            .sum()
    }
}

/// Draws a Poisson-distributed arrival count.
pub fn sample_arrivals<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<u64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(lambda).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(poisson.sample(rng) as u64)
}

/// Current per-application settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppSettings {
    pub priority: Priority,
    pub qos_model: QosModel,
    /// Offered load scaled by `gr_multiplier`; the QoS stance still applies.
    pub generation_rate: bool,
}

/// One monitoring interval. Rates in Mbps, `buffered` in Mbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickObservation {
    pub timestamp: f64,
    pub offered: [f64; 3],
    pub conformant: f64,
    pub excess_served: f64,
    pub buffered: f64,
    pub dropped: f64,
    pub observed_bw: f64,
    pub active_ues: usize,
}

impl TickObservation {
    pub fn offered_total(&self) -> f64 {
        self.offered.iter().sum()
    }
}

/// Supplies an action (index into the action space) before each tick.
pub trait ActionSource {
    fn next_action(&mut self, tick_index: u64, last: Option<&TickObservation>) -> Option<usize>;
}

#[derive(Debug, Clone, Copy)]
struct Ue {
    class: AppKind,
    remaining: f64,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    classes: [AppClass; 3],
    actions: ActionSpace,
    settings: [AppSettings; 3],
    buffers: [f64; 3],
    /// Constant per-app load added on top of UE traffic (Mbps).
    base_load: [f64; 3],
    ues: Vec<Ue>,
    rng: ChaCha8Rng,
    tick_index: u64,
    actions_applied: usize,
    holding: Exp<f64>,
}

impl Simulator {
    pub fn new(cfg: SimConfig, actions: ActionSpace) -> Result<Self> {
        cfg.validate()?;
        for a in &actions.actions {
            a.app_settings()?;
        }
        let classes = AppClass::defaults(cfg.per_ue_demand);
        let holding =
            Exp::new(1.0 / cfg.mean_holding_ticks).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            settings: Self::default_settings(&classes),
            classes,
            actions,
            buffers: [0.0; 3],
            base_load: [0.0; 3],
            ues: Vec::new(),
            tick_index: 0,
            actions_applied: 0,
            holding,
            cfg,
        })
    }

    fn default_settings(classes: &[AppClass; 3]) -> [AppSettings; 3] {
        classes.map(|c| AppSettings {
            priority: c.default_priority,
            qos_model: c.default_qos_model,
            generation_rate: false,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn settings(&self) -> &[AppSettings; 3] {
        &self.settings
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.actions
    }

    pub fn actions_applied(&self) -> usize {
        self.actions_applied
    }

    pub fn active_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn set_base_load(&mut self, load: [f64; 3]) {
        self.base_load = load.map(|l| l.max(0.0));
    }

    /// Resets every application to its class defaults, then overlays the
    /// action's assignments. Applying the same action twice is a no-op.
    pub fn apply_action(&mut self, index: usize) -> Result<()> {
        let tuple = self.actions.get(index)?;
        let assignments = tuple.app_settings()?;
        let mut settings = Self::default_settings(&self.classes);
        for (slot, assignment) in settings.iter_mut().zip(assignments) {
            match assignment {
                AppSetting::GenerationRate => slot.generation_rate = true,
                AppSetting::Priority(p) => slot.priority = p,
                AppSetting::QosModel(q) => slot.qos_model = q,
            }
        }
        self.settings = settings;
        self.actions_applied += 1;
        Ok(())
    }

    fn shaper_for(&self, app: usize, demand: f64) -> ShaperConfig {
        let s = &self.cfg.stances;
        match self.settings[app].qos_model {
            QosModel::Ugs => ShaperConfig {
                cir: demand,
                eir: 0.0,
                ebs: s.ebs_mbit,
            },
            QosModel::Rtps => ShaperConfig {
                cir: s.rtps_cir_share * demand,
                eir: s.rtps_eir_share * demand,
                ebs: s.ebs_mbit,
            },
            QosModel::Be => ShaperConfig {
                cir: 0.0,
                eir: s.be_eir_share * demand,
                ebs: s.ebs_mbit,
            },
        }
    }

    /// Advances one tick and returns its observation.
    pub fn step(&mut self) -> Result<TickObservation> {
        let tick = self.cfg.tick;
        let timestamp = self.tick_index as f64 * tick;

        let arrivals = sample_arrivals(self.cfg.lambda, &mut self.rng)?;
        for _ in 0..arrivals {
            let class = AppKind::ALL[self.rng.random_range(0..3)];
            let remaining = self.holding.sample(&mut self.rng) * tick;
            if self.ues.len() < self.cfg.num_ues_max {
                self.ues.push(Ue { class, remaining });
            }
        }

        let mut counts = [0usize; 3];
        for ue in &self.ues {
            counts[ue.class.index()] += 1;
        }
        let mut offered = [0.0; 3];
        for app in 0..3 {
            let mut generated = counts[app] as f64 * self.classes[app].per_ue_demand + self.base_load[app];
            if self.settings[app].generation_rate {
                generated *= self.cfg.stances.gr_multiplier;
            }
            offered[app] = generated;
        }
        offered[AppKind::Embb.index()] += self.cfg.congestion_at(timestamp);

        let buffered_before: f64 = self.buffers.iter().sum();
        let mut shaped = [ShapeOutcome::default(); 3];
        for app in 0..3 {
            let demand = offered[app] + self.buffers[app] / tick;
            let cfg = self.shaper_for(app, demand);
            shaped[app] = shape(offered[app], &cfg, self.buffers[app], tick);
            self.buffers[app] = shaped[app].buffered_out;
        }

        // Committed traffic first, then excess, each by descending priority.
        let mut order = [0usize, 1, 2];
        order.sort_by_key(|&a| (std::cmp::Reverse(self.settings[a].priority), a));
        let mut room = self.cfg.capacity;
        let mut conformant = 0.0;
        let mut excess_served = 0.0;
        let mut dropped: f64 = shaped.iter().map(|o| o.dropped).sum();
        for &app in &order {
            let served = shaped[app].conformant.min(room);
            room -= served;
            conformant += served;
            dropped += shaped[app].conformant - served;
        }
        for &app in &order {
            let served = shaped[app].excess_served.min(room);
            room -= served;
            excess_served += served;
            dropped += shaped[app].excess_served - served;
        }
        let buffered: f64 = self.buffers.iter().sum();
        debug_assert!({
            let lhs = offered.iter().sum::<f64>() * tick + buffered_before;
            let rhs = (conformant + excess_served + dropped) * tick + buffered;
            (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs)
        });

        for ue in &mut self.ues {
            ue.remaining -= tick;
        }
        self.ues.retain(|ue| ue.remaining > 0.0);
        self.tick_index += 1;

        Ok(TickObservation {
            timestamp,
            offered,
            conformant,
            excess_served,
            buffered,
            dropped,
            observed_bw: (conformant + excess_served).min(self.cfg.capacity),
            active_ues: counts.iter().sum(),
        })
    }

    /// Runs for the configured duration, asking `policy` for an action before
    /// each tick.
    pub fn run_ticks(&mut self, mut policy: Option<&mut dyn ActionSource>) -> Result<Vec<TickObservation>> {
        let n = self.cfg.num_ticks();
        let mut out: Vec<TickObservation> = Vec::with_capacity(n);
        for _ in 0..n {
            if let Some(p) = policy.as_deref_mut() {
                if let Some(a) = p.next_action(self.tick_index, out.last()) {
                    self.apply_action(a)?;
                }
            }
            out.push(self.step()?);
        }
        Ok(out)
    }

    /// Mean observed bandwidth when `action` is applied to a quiet cell
    /// carrying `load` Mbps split over the classes by their mean per-UE demand.
    pub fn probe_achieved(cfg: &SimConfig, actions: &ActionSpace, load: f64, action: usize, ticks: usize) -> Result<f64> {
        let mut probe_cfg = cfg.clone();
        probe_cfg.lambda = 0.0;
        probe_cfg.congestion_schedule.clear();
        let mut sim = Simulator::new(probe_cfg, actions.clone())?;
        let total: f64 = cfg.per_ue_demand.iter().sum();
        let shares = if total > 0.0 {
            cfg.per_ue_demand.map(|d| d / total)
        } else {
            [1.0 / 3.0; 3]
        };
        sim.set_base_load(shares.map(|s| s * load));
        sim.apply_action(action)?;
        let ticks = ticks.max(1);
        let mut sum = 0.0;
        for _ in 0..ticks {
            sum += sim.step()?.observed_bw;
        }
        Ok(sum / ticks as f64)
    }
}

/// Runs a fresh simulator for `cfg.duration` and returns the bandwidth series.
pub fn run(cfg: &SimConfig, actions: &ActionSpace, policy: Option<&mut dyn ActionSource>) -> Result<TimeSeries> {
    let mut sim = Simulator::new(cfg.clone(), actions.clone())?;
    let ticks = sim.run_ticks(policy)?;
    Ok(TimeSeries::from_ticks(&ticks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::model::ConfigSet;

    fn quiet() -> SimConfig {
        SimConfig {
            lambda: 0.0,
            congestion_schedule: vec![],
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_lambda_never_arrives() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_arrivals(0.0, &mut rng).unwrap(), 0);
        }
        assert!(matches!(sample_arrivals(-1.0, &mut rng), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn poisson_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| sample_arrivals(5.0, &mut rng).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((4.9..=5.1).contains(&mean), "mean {mean}");
        assert!((4.5..=5.5).contains(&var), "variance {var}");
    }

    #[test]
    fn empty_network_is_silent() {
        let mut sim = Simulator::new(quiet(), ActionSpace::table3()).unwrap();
        for _ in 0..10 {
            assert_eq!(sim.step().unwrap().observed_bw, 0.0);
        }
    }

    /// Single action putting every class on guaranteed service.
    fn all_ugs() -> ActionSpace {
        let set = |n: &str| ConfigSet::new(n, ["UGS"]).unwrap();
        ActionSpace::full(vec![set("App1"), set("App2"), set("App3")]).unwrap()
    }

    #[test]
    fn open_shapers_pass_offered_load() {
        let mut sim = Simulator::new(quiet(), all_ugs()).unwrap();
        sim.apply_action(0).unwrap();
        sim.set_base_load([3.0, 40.0, 7.0]);
        let obs = sim.step().unwrap();
        assert!((obs.observed_bw - 50.0).abs() < 1e-12);
        assert_eq!(obs.dropped, 0.0);
    }

    #[test]
    fn capacity_clamps_observed_bandwidth() {
        let mut sim = Simulator::new(quiet(), all_ugs()).unwrap();
        sim.apply_action(0).unwrap();
        sim.set_base_load([10.0, 120.0, 20.0]);
        let obs = sim.step().unwrap();
        assert_eq!(obs.observed_bw, 100.0);
        // URLLC (H) goes first, eMBB (M) fills the rest of the link, mMTC (L)
        // and the eMBB overflow are dropped.
        assert!((obs.dropped - 50.0).abs() < 1e-9);
    }

    #[test]
    fn a7_sets_embb_ugs_and_mmtc_high_priority() {
        let mut sim = Simulator::new(quiet(), ActionSpace::table3()).unwrap();
        sim.apply_action(6).unwrap();
        let s = sim.settings();
        assert_eq!(s[1].qos_model, QosModel::Ugs);
        assert_eq!(s[0].priority, Priority::H);
        assert!(s[2].generation_rate);
    }

    #[test]
    fn apply_action_is_idempotent() {
        let mut sim = Simulator::new(quiet(), ActionSpace::table3()).unwrap();
        sim.apply_action(2).unwrap();
        let once = *sim.settings();
        sim.apply_action(2).unwrap();
        assert_eq!(once, *sim.settings());
        assert!(matches!(sim.apply_action(8), Err(Error::InvalidAction { .. })));
    }

    #[test]
    fn a1_and_a2_differ_on_app2_and_app3() {
        let mut s1 = Simulator::new(quiet(), ActionSpace::table3()).unwrap();
        let mut s2 = s1.clone();
        s1.apply_action(0).unwrap();
        s2.apply_action(1).unwrap();
        let (a, b) = (s1.settings(), s2.settings());
        assert_eq!(a[0], b[0]);
        assert_eq!(a[1].priority, Priority::L);
        assert_eq!(b[1].priority, Priority::M);
        assert_eq!(a[2].qos_model, QosModel::Rtps);
        assert_eq!((b[2].qos_model, b[2].priority), (QosModel::Ugs, Priority::M));
    }

    #[test]
    fn hundred_seconds_gives_hundred_samples() {
        let series = run(&SimConfig::default(), &ActionSpace::table3(), None).unwrap();
        assert_eq!(series.len(), 100);
    }

    #[test]
    fn same_seed_same_series() {
        let cfg = SimConfig::default();
        let a = run(&cfg, &ActionSpace::table3(), None).unwrap();
        let b = run(&cfg, &ActionSpace::table3(), None).unwrap();
        assert_eq!(a, b);
        let c = run(&SimConfig { rng_seed: 8, ..cfg }, &ActionSpace::table3(), None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn congestion_window_raises_bandwidth() {
        let series = run(&SimConfig::default(), &ActionSpace::table3(), None).unwrap();
        let bw = series.bandwidth();
        let before = bw[..40].iter().sum::<f64>() / 40.0;
        let during = bw[40..60].iter().sum::<f64>() / 20.0;
        assert!(during > before, "during {during} before {before}");
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            SimConfig { capacity: 0.0, ..SimConfig::default() },
            SimConfig { lambda: -0.5, ..SimConfig::default() },
            SimConfig { tick: 0.0, ..SimConfig::default() },
        ] {
            assert!(matches!(Simulator::new(cfg, ActionSpace::table3()), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn probe_ranks_guaranteed_service_first() {
        let cfg = SimConfig::default();
        let open = Simulator::probe_achieved(&cfg, &all_ugs(), 50.0, 0, 5).unwrap();
        assert!((open - 50.0).abs() < 1e-9);
        // a7 is the only Table III row putting eMBB, the heaviest class, on UGS.
        let space = ActionSpace::table3();
        let achieved: Vec<f64> = (0..8).map(|a| Simulator::probe_achieved(&cfg, &space, 50.0, a, 5).unwrap()).collect();
        for (a, v) in achieved.iter().enumerate() {
            assert!(*v <= open + 1e-9);
            if a != 6 {
                assert!(*v < achieved[6], "{achieved:?}");
            }
        }
    }

    #[test]
    fn generation_rate_scales_load_under_the_current_stance() {
        let mut cfg = quiet();
        cfg.stances.gr_multiplier = 2.0;
        let mut sim = Simulator::new(cfg, ActionSpace::table3()).unwrap();
        sim.apply_action(7).unwrap(); // a8: App2 (eMBB) on GR keeps its RTPS stance
        sim.set_base_load([0.0, 10.0, 0.0]);
        let obs = sim.step().unwrap();
        assert_eq!(obs.offered, [0.0, 20.0, 0.0]);
        assert!((obs.conformant - 10.0).abs() < 1e-12);
        assert!((obs.excess_served - 6.0).abs() < 1e-12);
    }

    struct Cycle(usize);
    impl ActionSource for Cycle {
        fn next_action(&mut self, tick: u64, _: Option<&TickObservation>) -> Option<usize> {
            Some((tick as usize) % self.0)
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn every_tick_conserves_flow(
            seed in any::<u64>(), lambda in 0.0f64..6.0, capacity in 20.0f64..150.0,
            holding in 1.0f64..30.0, extra in 0.0f64..120.0, ebs in 0.0f64..10.0,
            cycle in 1usize..9,
        ) {
            let cfg = SimConfig {
                lambda, capacity, mean_holding_ticks: holding, rng_seed: seed, duration: 60.0,
                congestion_schedule: vec![CongestionWindow { start: 10.0, end: 30.0, extra_mbps: extra }],
                stances: ShapingStances { ebs_mbit: ebs, ..ShapingStances::default() },
                ..SimConfig::default()
            };
            let mut sim = Simulator::new(cfg, ActionSpace::table3()).unwrap();
            let ticks = sim.run_ticks(Some(&mut Cycle(cycle))).unwrap();
            let mut prev_buffer = 0.0;
            for t in &ticks {
                let lhs = t.offered_total() + prev_buffer;
                let rhs = t.conformant + t.excess_served + t.dropped + t.buffered;
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs), "tick {}: {} vs {}", t.timestamp, lhs, rhs);
                prop_assert!(t.observed_bw >= 0.0 && t.observed_bw <= capacity + 1e-12);
                prev_buffer = t.buffered;
            }
        }

        #[test]
        fn open_shapers_never_drop_under_capacity(load in 0.0f64..99.0, seed in any::<u64>()) {
            let cfg = SimConfig { lambda: 0.0, congestion_schedule: vec![], rng_seed: seed, ..SimConfig::default() };
            let mut sim = Simulator::new(cfg, all_ugs()).unwrap();
            sim.apply_action(0).unwrap();
            sim.set_base_load([load * 0.1, load * 0.7, load * 0.2]);
            let obs = sim.step().unwrap();
            prop_assert_eq!(obs.dropped, 0.0);
        }
    }
}
