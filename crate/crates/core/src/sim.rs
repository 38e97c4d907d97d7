//! Discrete-event simulation of jittered RREQ flooding on unit-disk
//! topologies.
//!
//! Radio model: a transmission occupies the channel for `packet_airtime` ms
//! and is heard by every neighbour of the sender. A reception fails when any
//! other transmission audible at the receiver overlaps its airtime interval
//! `[start, start + airtime)`; every failed reception counts as one
//! collision. There is no carrier sensing, capture or retransmission. With
//! zero airtime no two intervals overlap, so collisions are disabled.
//!
//! Flooding: the source transmits at its initiation time without jitter.
//! Every other node forwards only the first copy it receives, after a delay
//! drawn from the mechanism using the metric of the link that copy arrived
//! on. The destination does not forward; the first copy to reach it defines
//! the discovered route.
//!
//! Events with equal timestamps are processed as: transmission ends, then
//! transmission starts, each group ordered by node id and then by scheduling
//! sequence. Ends first makes back-to-back frames (`end == start`) not
//! overlap.

use crate::error::{Error, Result};
use crate::jitter::{sample_jitter, JitterMechanism, LinkMetric, MechanismKind};
use crate::seed::{derive_seed, rng_for, DEFAULT_SEED};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    positions: Vec<(f64, f64)>,
    range: f64,
    // sorted by neighbour id
    neighbors: Vec<Vec<(NodeId, LinkMetric)>>,
}

impl Topology {
    /// Unit-disk graph over `positions`: nodes closer than or exactly at
    /// `range` are linked, and `metric` assigns each link (called once per
    /// unordered pair, lower id first) its quality.
    pub fn unit_disk<F>(positions: Vec<(f64, f64)>, range: f64, mut metric: F) -> Result<Self>
    where
        F: FnMut(NodeId, NodeId) -> LinkMetric,
    {
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::validation("range must be positive"));
        }
        let n = positions.len();
        let mut neighbors = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                let (dx, dy) = (positions[u].0 - positions[v].0, positions[u].1 - positions[v].1);
                if (dx * dx + dy * dy).sqrt() <= range {
                    let m = metric(u, v);
                    neighbors[u].push((v, m));
                    neighbors[v].push((u, m));
                }
            }
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Self {
            positions,
            range,
            neighbors,
        })
    }

    /// Explicit adjacency for hand-built scenarios. Positions are kept for
    /// reporting only; links come from `edges`.
    pub fn from_edges(
        positions: Vec<(f64, f64)>,
        range: f64,
        edges: &[(NodeId, NodeId, f64)],
    ) -> Result<Self> {
        let n = positions.len();
        let mut neighbors: Vec<Vec<(NodeId, LinkMetric)>> = vec![Vec::new(); n];
        for &(u, v, m) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::validation(format!("bad edge ({u}, {v})")));
            }
            if neighbors[u].iter().any(|&(w, _)| w == v) {
                return Err(Error::validation(format!("duplicate edge ({u}, {v})")));
            }
            let m = LinkMetric::new(m)?;
            neighbors[u].push((v, m));
            neighbors[v].push((u, m));
        }
        for list in &mut neighbors {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Self {
            positions,
            range,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, LinkMetric)] {
        &self.neighbors[node]
    }

    pub fn metric(&self, u: NodeId, v: NodeId) -> Option<LinkMetric> {
        self.neighbors[u]
            .binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| self.neighbors[u][i].1)
    }

    pub fn link_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Nodes reachable from `start`, including itself.
    pub fn component(&self, start: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub node_count: usize,
    pub area: (f64, f64),
    /// Radio range in metres.
    pub range: f64,
    pub j_max: f64,
    pub c: f64,
    /// Link metrics are drawn uniformly from `[lo, hi]`.
    pub metric_range: (f64, f64),
    /// Seconds.
    pub duration: f64,
    pub discovery_batch: usize,
    /// Seconds between batches.
    pub batch_period: f64,
    /// Milliseconds; 0 disables collisions.
    pub packet_airtime: f64,
    pub mechanism: JitterMechanism,
    pub seed: u64,
    #[serde(default)]
    pub record_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            node_count: 100,
            area: (1000.0, 1000.0),
            range: 250.0,
            j_max: 250.0,
            c: 40.0,
            metric_range: (0.5, 1.0),
            duration: 100.0,
            discovery_batch: 10,
            batch_period: 2.0,
            packet_airtime: 1.0,
            mechanism: JitterMechanism::BoundedAdaptive {
                j_max: 250.0,
                c: 40.0,
            },
            seed: DEFAULT_SEED,
            record_events: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.area.0) && positive(self.area.1)) {
            return Err(Error::validation("area dimensions must be positive"));
        }
        if !positive(self.range) {
            return Err(Error::validation("range must be positive"));
        }
        if !positive(self.duration) || !positive(self.batch_period) {
            return Err(Error::validation("duration and batch period must be positive"));
        }
        if !(self.packet_airtime >= 0.0 && self.packet_airtime.is_finite()) {
            return Err(Error::validation("packet airtime must be non-negative"));
        }
        let (lo, hi) = self.metric_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::validation("metric range must satisfy 0 < lo <= hi <= 1"));
        }
        if self.discovery_batch > 0 && self.node_count < 2 {
            return Err(Error::validation("discoveries need at least two nodes"));
        }
        if self.discovery_batch > self.node_count {
            return Err(Error::validation("discovery batch exceeds node count"));
        }
        self.mechanism.validated()?;
        Ok(())
    }

    /// Batch start times in ms.
    pub fn batch_times(&self) -> Vec<f64> {
        let batches = (self.duration / self.batch_period + 1e-9).floor() as usize;
        (0..batches)
            .map(|b| b as f64 * self.batch_period * 1000.0)
            .collect()
    }
}

/// Random node placement over the area with link metrics uniform over the
/// configured range.
pub fn generate_topology<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<Topology> {
    config.validate()?;
    let (w, h) = config.area;
    let positions: Vec<(f64, f64)> = (0..config.node_count)
        .map(|_| (rng.gen::<f64>() * w, rng.gen::<f64>() * h))
        .collect();
    let (lo, hi) = config.metric_range;
    // metrics for every pair are drawn up front so the link set does not
    // shift the stream
    let n = config.node_count;
    let mut pair_metrics = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for _ in 0..n * n.saturating_sub(1) / 2 {
        let u = 1.0 - rng.gen::<f64>();
        pair_metrics.push(lo + (hi - lo) * u);
    }
    let index = |u: usize, v: usize| u * n - u * (u + 1) / 2 + (v - u - 1);
    Topology::unit_disk(positions, config.range, |u, v| {
        LinkMetric::new(pair_metrics[index(u, v)].min(hi)).expect("validated metric range")
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub discovery_id: usize,
    pub source: NodeId,
    pub destination: NodeId,
    /// Initiation time, ms.
    pub initiated_at: f64,
    pub found: bool,
    pub route_metric: Option<f64>,
    /// First arrival at the destination minus initiation, ms.
    pub discovery_time: Option<f64>,
    pub hop_count: Option<usize>,
    /// Node sequence source → destination of the discovered route.
    pub route: Vec<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Initiate,
    TxStart,
    TxEnd,
    Receive,
    Collision,
    Duplicate,
    Arrive,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Initiate => "initiate",
            EventKind::TxStart => "tx_start",
            EventKind::TxEnd => "tx_end",
            EventKind::Receive => "receive",
            EventKind::Collision => "collision",
            EventKind::Duplicate => "duplicate",
            EventKind::Arrive => "arrive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub time_ms: f64,
    pub kind: EventKind,
    pub node: NodeId,
    pub discovery_id: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SimStats {
    pub results: Vec<DiscoveryResult>,
    pub collisions: u64,
    pub transmissions: u64,
    pub events: Vec<LogEntry>,
}

impl SimStats {
    pub fn initiated(&self) -> usize {
        self.results.len()
    }

    pub fn found(&self) -> usize {
        self.results.iter().filter(|r| r.found).count()
    }

    pub fn mean_route_metric(&self) -> Option<f64> {
        mean_of(self.results.iter().filter_map(|r| r.route_metric))
    }

    pub fn mean_discovery_time(&self) -> Option<f64> {
        mean_of(self.results.iter().filter_map(|r| r.discovery_time))
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    End = 0,
    Start = 1,
}

#[derive(Clone, Copy, Debug)]
struct Scheduled {
    time: f64,
    phase: Phase,
    node: NodeId,
    seq: u64,
    // transmission id for ends, discovery id for starts
    payload: usize,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.phase.cmp(&self.phase))
            .then(other.node.cmp(&self.node))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Transmission {
    node: NodeId,
    discovery: usize,
}

struct Reception {
    tx: usize,
    spoiled: bool,
}

struct DiscoveryState {
    source: NodeId,
    destination: NodeId,
    start: f64,
    // parent on the first received copy; the source is its own parent
    parent: Vec<Option<NodeId>>,
    arrival: Option<f64>,
}

/// One shared event timeline for any number of concurrent floods.
pub struct FloodEngine<'a> {
    topology: &'a Topology,
    mechanism: JitterMechanism,
    airtime: f64,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    transmissions: Vec<Transmission>,
    receiving: Vec<Vec<Reception>>,
    discoveries: Vec<DiscoveryState>,
    collisions: u64,
    log: Option<Vec<LogEntry>>,
    last_time: f64,
}

impl<'a> FloodEngine<'a> {
    pub fn new(topology: &'a Topology, mechanism: JitterMechanism, airtime: f64) -> Self {
        Self {
            topology,
            mechanism,
            airtime,
            queue: BinaryHeap::new(),
            seq: 0,
            transmissions: Vec::new(),
            receiving: (0..topology.node_count()).map(|_| Vec::new()).collect(),
            discoveries: Vec::new(),
            collisions: 0,
            log: None,
            last_time: f64::NEG_INFINITY,
        }
    }

    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    fn record(&mut self, time_ms: f64, kind: EventKind, node: NodeId, discovery_id: usize) {
        if let Some(log) = &mut self.log {
            log.push(LogEntry {
                time_ms,
                kind,
                node,
                discovery_id,
            });
        }
    }

    fn push(&mut self, time: f64, phase: Phase, node: NodeId, payload: usize) {
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            phase,
            node,
            seq: self.seq,
            payload,
        });
    }

    /// Registers a discovery starting at `time` ms and returns its id.
    pub fn initiate(&mut self, source: NodeId, destination: NodeId, time: f64) -> Result<usize> {
        let n = self.topology.node_count();
        if source >= n || destination >= n || source == destination {
            return Err(Error::validation(format!(
                "invalid discovery {source} -> {destination} on {n} nodes"
            )));
        }
        let id = self.discoveries.len();
        let mut parent = vec![None; n];
        parent[source] = Some(source);
        self.discoveries.push(DiscoveryState {
            source,
            destination,
            start: time,
            parent,
            arrival: None,
        });
        self.push(time, Phase::Start, source, id);
        Ok(id)
    }

    /// Processes events until the queue is empty.
    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        while let Some(ev) = self.queue.pop() {
            debug_assert!(ev.time >= self.last_time);
            self.last_time = ev.time;
            match ev.phase {
                Phase::Start => self.start_transmission(ev.time, ev.node, ev.payload),
                Phase::End => self.end_transmission(ev.time, ev.payload, rng),
            }
        }
    }

    fn start_transmission(&mut self, now: f64, node: NodeId, discovery: usize) {
        let tx = self.transmissions.len();
        self.transmissions.push(Transmission { node, discovery });
        // logged here rather than in `initiate` to keep the log in time order
        if self.discoveries[discovery].source == node {
            self.record(now, EventKind::Initiate, node, discovery);
        }
        self.record(now, EventKind::TxStart, node, discovery);
        if self.airtime > 0.0 {
            for &(r, _) in self.topology.neighbors(node) {
                let active = &mut self.receiving[r];
                let spoiled = !active.is_empty();
                for other in active.iter_mut() {
                    other.spoiled = true;
                }
                active.push(Reception { tx, spoiled });
            }
        }
        self.push(now + self.airtime, Phase::End, node, tx);
    }

    fn end_transmission<R: Rng + ?Sized>(&mut self, now: f64, tx: usize, rng: &mut R) {
        let sender = self.transmissions[tx].node;
        let discovery = self.transmissions[tx].discovery;
        self.record(now, EventKind::TxEnd, sender, discovery);
        let topology = self.topology;
        for &(r, metric) in topology.neighbors(sender) {
            if self.airtime > 0.0 {
                let active = &mut self.receiving[r];
                let pos = active
                    .iter()
                    .position(|rx| rx.tx == tx)
                    .expect("reception registered at start");
                let rx = active.swap_remove(pos);
                if rx.spoiled {
                    self.collisions += 1;
                    self.record(now, EventKind::Collision, r, discovery);
                    continue;
                }
            }
            self.deliver(now, sender, r, metric, discovery, rng);
        }
    }

    fn deliver<R: Rng + ?Sized>(
        &mut self,
        now: f64,
        sender: NodeId,
        receiver: NodeId,
        metric: LinkMetric,
        discovery: usize,
        rng: &mut R,
    ) {
        let state = &mut self.discoveries[discovery];
        if state.parent[receiver].is_some() {
            self.record(now, EventKind::Duplicate, receiver, discovery);
            return;
        }
        state.parent[receiver] = Some(sender);
        if receiver == state.destination {
            state.arrival = Some(now);
            self.record(now, EventKind::Arrive, receiver, discovery);
            return;
        }
        self.record(now, EventKind::Receive, receiver, discovery);
        let delay = sample_jitter(&self.mechanism, metric, rng);
        self.push(now + delay, Phase::Start, receiver, discovery);
    }

    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    pub fn transmissions(&self) -> u64 {
        self.transmissions.len() as u64
    }

    pub fn take_events(&mut self) -> Vec<LogEntry> {
        self.log.take().unwrap_or_default()
    }

    /// Whether `node` received (or originated) discovery `id`.
    pub fn reached(&self, id: usize, node: NodeId) -> bool {
        self.discoveries[id].parent[node].is_some()
    }

    pub fn result(&self, id: usize) -> DiscoveryResult {
        let state = &self.discoveries[id];
        let mut result = DiscoveryResult {
            discovery_id: id,
            source: state.source,
            destination: state.destination,
            initiated_at: state.start,
            found: false,
            route_metric: None,
            discovery_time: None,
            hop_count: None,
            route: Vec::new(),
        };
        let Some(arrival) = state.arrival else {
            return result;
        };
        let mut route = vec![state.destination];
        let mut node = state.destination;
        while node != state.source {
            node = state.parent[node].expect("every node on the route has a parent");
            route.push(node);
        }
        route.reverse();
        let metrics: Vec<f64> = route
            .windows(2)
            .map(|w| {
                self.topology
                    .metric(w[0], w[1])
                    .expect("route follows links")
                    .value()
            })
            .collect();
        result.found = true;
        result.hop_count = Some(metrics.len());
        result.route_metric = Some(metrics.iter().sum::<f64>() / metrics.len() as f64);
        result.discovery_time = Some(arrival - state.start);
        result.route = route;
        result
    }

    pub fn results(&self) -> Vec<DiscoveryResult> {
        (0..self.discoveries.len()).map(|i| self.result(i)).collect()
    }
}

/// Floods a single discovery from `source` at time 0 and returns its outcome
/// and the collision count.
pub fn run_discovery<R: Rng + ?Sized>(
    topology: &Topology,
    mechanism: &JitterMechanism,
    source: NodeId,
    destination: NodeId,
    rng: &mut R,
    packet_airtime: f64,
) -> Result<(DiscoveryResult, u64)> {
    if !(packet_airtime >= 0.0) {
        return Err(Error::validation("packet airtime must be non-negative"));
    }
    let mut engine = FloodEngine::new(topology, *mechanism, packet_airtime);
    let id = engine.initiate(source, destination, 0.0)?;
    engine.run(rng);
    Ok((engine.result(id), engine.collisions()))
}

/// Runs every batch of discoveries of one campaign on a shared timeline.
///
/// The topology, the discovery endpoints and the jitter draws come from
/// three streams derived from `config.seed`, so campaigns that differ only
/// in mechanism see the same network and the same traffic.
pub fn run_campaign(config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    let mut topo_rng = rng_for(config.seed, &[0]);
    let topology = generate_topology(config, &mut topo_rng)?;
    run_campaign_on(config, &topology)
}

pub fn run_campaign_on(config: &SimConfig, topology: &Topology) -> Result<SimStats> {
    config.validate()?;
    let mut traffic_rng = rng_for(config.seed, &[1]);
    let mut jitter_rng = rng_for(config.seed, &[2]);
    let mut engine = FloodEngine::new(topology, config.mechanism, config.packet_airtime);
    if config.record_events {
        engine = engine.with_event_log();
    }
    let n = topology.node_count();
    if config.discovery_batch > 0 {
        for t in config.batch_times() {
            let sources = sample(&mut traffic_rng, n, config.discovery_batch);
            for source in sources.iter() {
                let mut dest = traffic_rng.gen_range(0..n - 1);
                if dest >= source {
                    dest += 1;
                }
                engine.initiate(source, dest, t)?;
            }
        }
    }
    engine.run(&mut jitter_rng);
    Ok(SimStats {
        results: engine.results(),
        collisions: engine.collisions(),
        transmissions: engine.transmissions(),
        events: engine.take_events(),
    })
}

/// Mean and standard error of one quantity across repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// `None` with fewer than two repetitions.
    pub std_error: Option<f64>,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = (n >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Some(Self { mean, std_error })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCell {
    pub node_count: usize,
    pub mechanism: MechanismKind,
    pub repetitions: usize,
    pub route_metric: Option<Estimate>,
    pub discovery_time: Option<Estimate>,
    pub collisions: Option<Estimate>,
    /// Found discoveries over initiated ones, pooled over repetitions.
    pub found_fraction: Option<f64>,
}

/// Seed of campaign `(node_count, repetition)`. Shared by all mechanisms.
pub fn campaign_seed(seed: u64, node_count: usize, repetition: usize) -> u64 {
    derive_seed(seed, &[node_count as u64, repetition as u64])
}

/// Runs `repetitions` campaigns per node count and mechanism; one cell per
/// `(node_count, mechanism)`, node counts outermost.
pub fn density_sweep(
    base: &SimConfig,
    node_counts: &[usize],
    mechanisms: &[JitterMechanism],
    repetitions: usize,
) -> Result<Vec<DensityCell>> {
    let base = SimConfig {
        record_events: false,
        ..base.clone()
    };
    density_sweep_observed(&base, node_counts, mechanisms, repetitions, |_, _| {})
}

/// Identifies one campaign of a density sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CampaignKey {
    pub node_count: usize,
    pub mechanism: MechanismKind,
    pub repetition: usize,
}

/// [`density_sweep`] that also hands every campaign's raw statistics to
/// `observe`, in run order. Event logs are recorded when
/// `base.record_events` is set.
pub fn density_sweep_observed<F>(
    base: &SimConfig,
    node_counts: &[usize],
    mechanisms: &[JitterMechanism],
    repetitions: usize,
    mut observe: F,
) -> Result<Vec<DensityCell>>
where
    F: FnMut(CampaignKey, &SimStats),
{
    if node_counts.is_empty() {
        return Err(Error::validation("node_counts must not be empty"));
    }
    if mechanisms.is_empty() {
        return Err(Error::validation("at least one mechanism is required"));
    }
    if repetitions == 0 {
        return Err(Error::validation("repetitions must be at least 1"));
    }
    let mut cells = Vec::with_capacity(node_counts.len() * mechanisms.len());
    for &node_count in node_counts {
        let mut per_mech: Vec<Vec<SimStats>> = vec![Vec::new(); mechanisms.len()];
        for rep in 0..repetitions {
            let seed = campaign_seed(base.seed, node_count, rep);
            let topo_config = SimConfig {
                node_count,
                seed,
                ..base.clone()
            };
            topo_config.validate()?;
            let topology = generate_topology(&topo_config, &mut rng_for(seed, &[0]))?;
            for (mi, mech) in mechanisms.iter().enumerate() {
                let config = SimConfig {
                    mechanism: *mech,
                    ..topo_config.clone()
                };
                let mut stats = run_campaign_on(&config, &topology)?;
                observe(
                    CampaignKey {
                        node_count,
                        mechanism: mech.kind(),
                        repetition: rep,
                    },
                    &stats,
                );
                stats.events = Vec::new();
                per_mech[mi].push(stats);
            }
        }
        for (mech, runs) in mechanisms.iter().zip(per_mech) {
            cells.push(summarize_cell(node_count, mech.kind(), &runs));
        }
    }
    Ok(cells)
}

fn summarize_cell(node_count: usize, mechanism: MechanismKind, runs: &[SimStats]) -> DensityCell {
    let metric: Vec<f64> = runs.iter().filter_map(SimStats::mean_route_metric).collect();
    let time: Vec<f64> = runs.iter().filter_map(SimStats::mean_discovery_time).collect();
    let collisions: Vec<f64> = runs.iter().map(|r| r.collisions as f64).collect();
    let initiated: usize = runs.iter().map(SimStats::initiated).sum();
    let found: usize = runs.iter().map(SimStats::found).sum();
    DensityCell {
        node_count,
        mechanism,
        repetitions: runs.len(),
        route_metric: Estimate::from_values(&metric),
        discovery_time: Estimate::from_values(&time),
        collisions: Estimate::from_values(&collisions),
        found_fraction: (initiated > 0).then(|| found as f64 / initiated as f64),
    }
}
