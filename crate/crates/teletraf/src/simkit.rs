//! Simulation engines: discrete-event G/G/k/N with FIFO, preemptive-LIFO
//! and head-of-line priority disciplines, random-walk Markov-chain
//! simulators for M/M/1 and M/M/k/k, a mobile cellular network simulator,
//! confidence-interval machinery and the Poisson inspector.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::randkit::RngStream;
use crate::{Error, Result};

/// One admitted customer of a FIFO single-server run, as a ledger row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalRecord {
    pub arrival_time: f64,
    pub service_duration: f64,
    pub queue_size_on_arrival: u64,
    pub service_start: f64,
    pub service_end: f64,
    /// Total time in the system, `service_end - arrival_time`.
    pub delay: f64,
}

/// One arrival offered to the discrete-event engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesArrival {
    /// Gap since the previous arrival.
    pub gap: f64,
    /// Service requirement.
    pub service: f64,
    /// Priority class, 0 highest; ignored outside the priority discipline.
    pub class: u32,
}

impl DesArrival {
    pub fn new(gap: f64, service: f64) -> Self {
        DesArrival { gap, service, class: 0 }
    }
}

/// Queueing discipline of the discrete-event engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Discipline {
    #[default]
    Fifo,
    /// Newest customer preempts the one in service; preempted work resumes
    /// later (single server only).
    LifoPreemptive,
    /// Non-preemptive head-of-line classes, 0 served first (single server
    /// only).
    Priority,
}

/// Configuration of a discrete-event run.
#[derive(Debug, Clone)]
pub struct DesConfig {
    pub servers: u32,
    /// Total positions in the system including those in service; `None`
    /// for an infinite buffer.
    pub capacity: Option<u64>,
    pub discipline: Discipline,
    /// Number of arrivals to draw from the source.
    pub horizon_arrivals: u64,
    /// Arrivals excluded from steady-state statistics (transient cut).
    pub warmup_arrivals: u64,
    /// Keep the per-customer ledger (FIFO only).
    pub keep_ledger: bool,
    /// Record departure instants (for output-process tests).
    pub keep_departures: bool,
    /// Rate and seed of an independent Poisson inspector for queue-size
    /// statistics under non-Poisson input.
    pub inspector: Option<(f64, u64)>,
}

impl DesConfig {
    /// FIFO single server, infinite buffer, 10% warm-up.
    pub fn single_server(horizon_arrivals: u64) -> Self {
        DesConfig {
            servers: 1,
            capacity: None,
            discipline: Discipline::Fifo,
            horizon_arrivals,
            warmup_arrivals: horizon_arrivals / 10,
            keep_ledger: false,
            keep_departures: false,
            inspector: None,
        }
    }

    /// FIFO `servers`-server system with `capacity` total positions.
    pub fn multi_server(servers: u32, capacity: u64, horizon_arrivals: u64) -> Self {
        DesConfig {
            servers,
            capacity: Some(capacity),
            ..DesConfig::single_server(horizon_arrivals)
        }
    }
}

/// Outcome of a discrete-event run.
#[derive(Debug, Clone, Default)]
pub struct DesResult {
    pub arrivals: u64,
    pub admitted: u64,
    pub blocked: u64,
    pub completed: u64,
    /// Blocked fraction of post-warmup arrivals.
    pub blocking: f64,
    /// Mean time in system over completed post-warmup customers.
    pub mean_delay: f64,
    /// Mean wait before first service over the same customers.
    pub mean_wait: f64,
    /// Queue-size mean sampled just before arrivals (PASTA under Poisson
    /// input).
    pub queue_mean_on_arrival: f64,
    /// Queue-size mean sampled by the independent Poisson inspector.
    pub queue_mean_inspector: Option<f64>,
    /// Time-average queue size.
    pub queue_mean_time: f64,
    /// Time-fraction distribution of the queue size.
    pub queue_time_dist: Vec<f64>,
    /// Fraction of time the server pool was fully idle.
    pub idle_fraction: f64,
    pub ledger: Option<Vec<ArrivalRecord>>,
    pub departures: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    id: u64,
    arrival: f64,
    remaining: f64,
    service: f64,
    class: u32,
    first_start: Option<f64>,
}

/// Orders `f64` event times inside the heap; times are finite by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
struct EventTime(f64, u64);

impl Eq for EventTime {}

impl PartialOrd for EventTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EventTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .partial_cmp(&other.0)
            .unwrap()
            .then(self.1.cmp(&other.1))
    }
}

struct TimeStats {
    warm: bool,
    warm_time: f64,
    last: f64,
    tally: Vec<f64>,
    idle: f64,
    total: f64,
}

impl TimeStats {
    fn new() -> Self {
        TimeStats { warm: false, warm_time: 0.0, last: 0.0, tally: Vec::new(), idle: 0.0, total: 0.0 }
    }

    fn start(&mut self, t: f64) {
        self.warm = true;
        self.warm_time = t;
        self.last = t;
    }

    fn advance(&mut self, t: f64, q: u64, busy: u64) {
        if !self.warm || t <= self.last {
            return;
        }
        let dt = t - self.last;
        let q = q as usize;
        if self.tally.len() <= q {
            self.tally.resize(q + 1, 0.0);
        }
        self.tally[q] += dt;
        if busy == 0 {
            self.idle += dt;
        }
        self.total += dt;
        self.last = t;
    }
}

/// Discrete-event simulation of a single-station queueing system.
///
/// The arrival source supplies gap/service/class triples; the engine
/// processes `horizon_arrivals` of them. On equal timestamps departures are
/// handled before arrivals.
pub fn des_run(
    config: &DesConfig,
    arrivals: impl IntoIterator<Item = DesArrival>,
) -> Result<DesResult> {
    if config.horizon_arrivals == 0 {
        return Err(Error::invalid("horizon must include at least one arrival"));
    }
    if config.servers == 0 {
        return Err(Error::invalid("need at least one server"));
    }
    if config.discipline != Discipline::Fifo && config.servers != 1 {
        return Err(Error::invalid("preemptive LIFO and priority need a single server"));
    }
    if let Some(cap) = config.capacity {
        if cap < config.servers as u64 {
            return Err(Error::invalid("capacity below server count"));
        }
    }

    let mut source = arrivals.into_iter();
    let mut inspector_stream = config.inspector.map(|(_, seed)| RngStream::new(seed));
    let mut next_inspection = f64::INFINITY;
    if let (Some((rate, _)), Some(s)) = (config.inspector, inspector_stream.as_mut()) {
        next_inspection = s.exp_deviate(rate)?;
    }

    // FIFO: jobs keyed by completion; single-server disciplines: the job in
    // service plus a backlog
    let mut in_service: BinaryHeap<Reverse<EventTime>> = BinaryHeap::new();
    let mut service_jobs: Vec<Option<Job>> = Vec::new(); // slot per job id for FIFO completion lookup
    let mut fifo_wait: VecDeque<Job> = VecDeque::new();
    let mut lifo_stack: Vec<Job> = Vec::new();
    let mut prio_wait: Vec<VecDeque<Job>> = Vec::new();
    let mut current: Option<(Job, f64)> = None; // single-server disciplines

    let mut t = 0.0f64;
    let mut q: u64 = 0;
    let mut arrived: u64 = 0;
    let mut blocked_total: u64 = 0;

    let mut stats = TimeStats::new();
    let mut post_blocked: u64 = 0;
    let mut post_arrivals: u64 = 0;
    let mut delays_sum = 0.0f64;
    let mut waits_sum = 0.0f64;
    let mut completed_post: u64 = 0;
    let mut completed: u64 = 0;
    let mut admitted: u64 = 0;
    let mut pasta_sum = 0.0f64;
    let mut pasta_n: u64 = 0;
    let mut inspect_sum = 0.0f64;
    let mut inspect_n: u64 = 0;
    let mut ledger = if config.keep_ledger { Some(Vec::new()) } else { None };
    let mut departures = if config.keep_departures { Some(Vec::new()) } else { None };

    let mut pending = source.next();
    let mut next_arrival_time = pending.as_ref().map(|a| t + a.gap).unwrap_or(f64::INFINITY);
    let single = config.discipline != Discipline::Fifo;

    loop {
        // drained and out of arrivals: nothing left but stray inspections
        if pending.is_none() && q == 0 {
            break;
        }
        let next_departure = if single {
            current.as_ref().map(|(_, end)| *end).unwrap_or(f64::INFINITY)
        } else {
            in_service.peek().map(|Reverse(EventTime(end, _))| *end).unwrap_or(f64::INFINITY)
        };
        let next_event = next_departure
            .min(next_arrival_time)
            .min(next_inspection);
        if !next_event.is_finite() {
            break;
        }

        // independent inspections strictly between queue-changing events
        if next_inspection < next_departure && next_inspection <= next_arrival_time {
            if stats.warm {
                inspect_sum += q as f64;
                inspect_n += 1;
            }
            let (rate, _) = config.inspector.unwrap();
            next_inspection += inspector_stream.as_mut().unwrap().exp_deviate(rate)?;
            continue;
        }

        let busy = if single {
            current.is_some() as u64
        } else {
            in_service.len() as u64
        };
        stats.advance(next_event, q, busy);
        t = next_event;

        if next_departure <= next_arrival_time {
            // departure first on ties
            let (job, end) = if single {
                let (job, end) = current.take().unwrap();
                (job, end)
            } else {
                let Reverse(EventTime(end, id)) = in_service.pop().unwrap();
                (service_jobs[id as usize].take().unwrap(), end)
            };
            q -= 1;
            completed += 1;
            if job.id >= config.warmup_arrivals {
                completed_post += 1;
                delays_sum += end - job.arrival;
                waits_sum += job.first_start.unwrap_or(job.arrival) - job.arrival;
            }
            if let Some(d) = departures.as_mut() {
                d.push(end);
            }
            if let Some(l) = ledger.as_mut() {
                l.push(ArrivalRecord {
                    arrival_time: job.arrival,
                    service_duration: job.service,
                    queue_size_on_arrival: 0, // filled on arrival below for FIFO
                    service_start: job.first_start.unwrap_or(job.arrival),
                    service_end: end,
                    delay: end - job.arrival,
                });
            }
            // promote the next job
            match config.discipline {
                Discipline::Fifo => {
                    if let Some(mut next) = fifo_wait.pop_front() {
                        next.first_start = Some(t);
                        let end = t + next.remaining;
                        let id = next.id;
                        let slot = id as usize;
                        if service_jobs.len() <= slot {
                            service_jobs.resize(slot + 1, None);
                        }
                        service_jobs[slot] = Some(next);
                        in_service.push(Reverse(EventTime(end, id)));
                    }
                }
                Discipline::LifoPreemptive => {
                    if let Some(mut next) = lifo_stack.pop() {
                        if next.first_start.is_none() {
                            next.first_start = Some(t);
                        }
                        let end = t + next.remaining;
                        current = Some((next, end));
                    }
                }
                Discipline::Priority => {
                    if let Some(queue) = prio_wait.iter_mut().find(|c| !c.is_empty()) {
                        let mut next = queue.pop_front().unwrap();
                        next.first_start = Some(t);
                        let end = t + next.remaining;
                        current = Some((next, end));
                    }
                }
            }
            continue;
        }

        // arrival
        let arrival = pending.take().unwrap();
        if arrived == config.warmup_arrivals {
            stats.start(t);
        }
        let job_id = arrived;
        arrived += 1;
        let in_window = job_id >= config.warmup_arrivals;
        if in_window {
            post_arrivals += 1;
            pasta_sum += q as f64;
            pasta_n += 1;
        }
        let full = config.capacity.map_or(false, |cap| q >= cap);
        if full {
            blocked_total += 1;
            if in_window {
                post_blocked += 1;
            }
        } else {
            admitted += 1;
            let mut job = Job {
                id: job_id,
                arrival: t,
                remaining: arrival.service,
                service: arrival.service,
                class: arrival.class,
                first_start: None,
            };
            q += 1;
            match config.discipline {
                Discipline::Fifo => {
                    if (in_service.len() as u32) < config.servers {
                        job.first_start = Some(t);
                        let end = t + job.remaining;
                        let slot = job.id as usize;
                        if service_jobs.len() <= slot {
                            service_jobs.resize(slot + 1, None);
                        }
                        let id = job.id;
                        service_jobs[slot] = Some(job);
                        in_service.push(Reverse(EventTime(end, id)));
                    } else {
                        fifo_wait.push_back(job);
                    }
                }
                Discipline::LifoPreemptive => {
                    if let Some((mut running, end)) = current.take() {
                        running.remaining = end - t;
                        lifo_stack.push(running);
                    }
                    job.first_start = Some(t);
                    let end = t + job.remaining;
                    current = Some((job, end));
                }
                Discipline::Priority => {
                    if current.is_none() {
                        job.first_start = Some(t);
                        let end = t + job.remaining;
                        current = Some((job, end));
                    } else {
                        let class = job.class as usize;
                        if prio_wait.len() <= class {
                            prio_wait.resize_with(class + 1, VecDeque::new);
                        }
                        prio_wait[class].push_back(job);
                    }
                }
            }
        }
        if arrived < config.horizon_arrivals {
            pending = source.next();
            next_arrival_time = pending
                .as_ref()
                .map(|a| t + a.gap)
                .unwrap_or(f64::INFINITY);
            if pending.is_none() {
                return Err(Error::invalid("arrival source exhausted before the horizon"));
            }
        } else {
            pending = None;
            next_arrival_time = f64::INFINITY;
        }
    }

    // fix up ledger queue sizes: recompute from arrival order (FIFO only)
    if let Some(l) = ledger.as_mut() {
        l.sort_by(|a, b| a.arrival_time.partial_cmp(&b.arrival_time).unwrap());
        let ends: Vec<f64> = l.iter().map(|r| r.service_end).collect();
        let starts: Vec<f64> = l.iter().map(|r| r.arrival_time).collect();
        for (i, rec) in l.iter_mut().enumerate() {
            rec.queue_size_on_arrival =
                ends[..i].iter().zip(&starts[..i]).filter(|(e, _)| **e > starts[i]).count() as u64;
        }
    }

    let dist_total: f64 = stats.tally.iter().sum();
    let queue_time_dist: Vec<f64> = if dist_total > 0.0 {
        stats.tally.iter().map(|w| w / dist_total).collect()
    } else {
        Vec::new()
    };
    let queue_mean_time = stats
        .tally
        .iter()
        .enumerate()
        .map(|(n, w)| n as f64 * w)
        .sum::<f64>()
        / dist_total.max(f64::MIN_POSITIVE);

    Ok(DesResult {
        arrivals: arrived,
        admitted,
        blocked: blocked_total,
        completed,
        blocking: if post_arrivals > 0 { post_blocked as f64 / post_arrivals as f64 } else { 0.0 },
        mean_delay: delays_sum / completed_post.max(1) as f64,
        mean_wait: waits_sum / completed_post.max(1) as f64,
        queue_mean_on_arrival: pasta_sum / pasta_n.max(1) as f64,
        queue_mean_inspector: if inspect_n > 0 { Some(inspect_sum / inspect_n as f64) } else { None },
        queue_mean_time,
        queue_time_dist,
        idle_fraction: stats.idle / stats.total.max(f64::MIN_POSITIVE),
        ledger,
        departures,
    })
}

/// Single-server discrete-event simulation.
pub fn des_single_server(
    config: &DesConfig,
    arrivals: impl IntoIterator<Item = DesArrival>,
) -> Result<DesResult> {
    let mut cfg = config.clone();
    cfg.servers = 1;
    des_run(&cfg, arrivals)
}

/// Multi-server FIFO discrete-event simulation.
pub fn des_multi_server(
    config: &DesConfig,
    arrivals: impl IntoIterator<Item = DesArrival>,
) -> Result<DesResult> {
    des_run(config, arrivals)
}

/// Convenience source: exponential gaps and services from two substreams.
pub fn markov_source(
    lambda: f64,
    mu: f64,
    stream: &RngStream,
) -> impl Iterator<Item = DesArrival> + '_ {
    let mut gaps = stream.substream(1);
    let mut services = stream.substream(2);
    std::iter::from_fn(move || {
        Some(DesArrival::new(
            gaps.exp_deviate(lambda).unwrap(),
            services.exp_deviate(mu).unwrap(),
        ))
    })
}

/// Markov-chain random-walk estimate of the M/M/1 mean queue size.
///
/// Walks the embedded chain event by event and averages the queue size seen
/// just before each arrival (the PASTA points), with the measurement taken
/// before the arriving customer joins.
pub fn mc_mm1(lambda: f64, mu: f64, measurements: u64, stream: &mut RngStream) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(Error::invalid("rates must be positive"));
    }
    if lambda >= mu {
        return Err(Error::unstable(format!("rho = {} >= 1", lambda / mu)));
    }
    let mut q: u64 = 0;
    let mut estimate = 0.0f64;
    let mut n: u64 = 0;
    while n < measurements {
        let service = if q > 0 { mu } else { 0.0 };
        if stream.uniform01() <= lambda / (lambda + service) {
            n += 1;
            estimate = ((n - 1) as f64 * estimate + q as f64) / n as f64;
            q += 1;
        } else {
            q -= 1;
        }
    }
    Ok(estimate)
}

/// Markov-chain random-walk estimate of the M/M/k/k blocking probability.
pub fn mc_mmkk(
    lambda: f64,
    mu: f64,
    servers: u64,
    max_arrivals: u64,
    stream: &mut RngStream,
) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(Error::invalid("rates must be positive"));
    }
    let mut q: u64 = 0;
    let mut arrivals: u64 = 0;
    let mut blocked: u64 = 0;
    while arrivals < max_arrivals {
        if stream.uniform01() <= lambda / (lambda + q as f64 * mu) {
            arrivals += 1;
            if q == servers {
                blocked += 1;
            } else {
                q += 1;
            }
        } else {
            q -= 1;
        }
    }
    Ok(blocked as f64 / max_arrivals as f64)
}

/// Mobile cellular network: one M/M/k/k cell per site plus exponential
/// handover between neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct CellularSpec {
    /// Channels per cell.
    pub channels: u64,
    /// New-call arrival rate per cell.
    pub new_call_rates: Vec<f64>,
    /// Call termination rate (inverse mean holding time).
    pub service_rate: f64,
    /// Per-call handover-out rate per cell.
    pub handover_rates: Vec<f64>,
    /// Relative routing weights to neighbours; `routing[i][j] > 0` makes
    /// `j` a neighbour of `i`. Rows are normalized internally.
    pub routing: Vec<Vec<f64>>,
}

impl CellularSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.new_call_rates.len();
        if n == 0 {
            return Err(Error::invalid("network needs at least one cell"));
        }
        if self.channels == 0 || !(self.service_rate > 0.0) {
            return Err(Error::invalid("channels and service rate must be positive"));
        }
        if self.handover_rates.len() != n || self.routing.len() != n {
            return Err(Error::invalid("per-cell vectors disagree on the cell count"));
        }
        for (i, row) in self.routing.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("routing row {i} has wrong length")));
            }
            if row.iter().any(|&p| p < 0.0) {
                return Err(Error::invalid(format!("negative routing weight in row {i}")));
            }
            let out: f64 = row.iter().sum();
            if self.handover_rates[i] > 0.0 && out <= 0.0 {
                return Err(Error::invalid(format!(
                    "cell {i} hands over but has no neighbours"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of a cellular-network simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellularResult {
    /// Total blocked new calls over the arrival budget.
    pub overall_blocking: f64,
    /// Per-cell new-call blocking; `None` when a cell saw no arrivals.
    pub per_cell_blocking: Vec<Option<f64>>,
    pub arrivals: Vec<u64>,
    pub blocked: Vec<u64>,
    /// Handovers that found the destination cell full and were dropped.
    pub dropped_handovers: u64,
}

/// Random-walk simulation of the cellular network: each step classifies the
/// next event (new call, termination, handover) by threshold tests and
/// routes handovers over the neighbour weights. Counting stops at the
/// `max_arrivals`-th new call; calls still in progress are discarded.
pub fn cellular_sim(
    spec: &CellularSpec,
    max_arrivals: u64,
    stream: &mut RngStream,
) -> Result<CellularResult> {
    spec.validate()?;
    if max_arrivals == 0 {
        return Err(Error::invalid("need a positive arrival budget"));
    }
    let n = spec.new_call_rates.len();
    let total_lambda: f64 = spec.new_call_rates.iter().sum();
    if !(total_lambda > 0.0) {
        return Err(Error::invalid("no cell generates new calls"));
    }
    let mut q = vec![0u64; n];
    let mut arrivals = vec![0u64; n];
    let mut blocked = vec![0u64; n];
    let mut dropped = 0u64;
    let mut total_arrivals = 0u64;

    while total_arrivals < max_arrivals {
        let busy: f64 = q.iter().sum::<u64>() as f64;
        let mut handover_flux = 0.0;
        for i in 0..n {
            handover_flux += q[i] as f64 * spec.handover_rates[i];
        }
        let total = total_lambda + busy * spec.service_rate + handover_flux;
        let r = stream.uniform01() * total;
        if r <= total_lambda {
            // new call: pick the cell by cumulative rate
            let mut pick = stream.uniform01() * total_lambda;
            let mut cell = n - 1;
            for (i, &rate) in spec.new_call_rates.iter().enumerate() {
                if pick <= rate {
                    cell = i;
                    break;
                }
                pick -= rate;
            }
            total_arrivals += 1;
            arrivals[cell] += 1;
            if q[cell] < spec.channels {
                q[cell] += 1;
            } else {
                blocked[cell] += 1;
            }
        } else if r <= total_lambda + busy * spec.service_rate {
            let mut pick = stream.uniform01() * busy;
            let mut cell = n - 1;
            for (i, &count) in q.iter().enumerate() {
                if pick <= count as f64 {
                    cell = i;
                    break;
                }
                pick -= count as f64;
            }
            q[cell] -= 1;
        } else if handover_flux > 0.0 {
            let mut pick = stream.uniform01() * handover_flux;
            let mut cell = n - 1;
            for i in 0..n {
                let flux = q[i] as f64 * spec.handover_rates[i];
                if pick <= flux {
                    cell = i;
                    break;
                }
                pick -= flux;
            }
            q[cell] -= 1;
            let weights = &spec.routing[cell];
            let row_total: f64 = weights.iter().sum();
            let mut pick = stream.uniform01() * row_total;
            let mut dest = n - 1;
            for (j, &w) in weights.iter().enumerate() {
                if pick <= w {
                    dest = j;
                    break;
                }
                pick -= w;
            }
            if q[dest] < spec.channels {
                q[dest] += 1;
            } else {
                dropped += 1;
            }
        }
    }

    let total_blocked: u64 = blocked.iter().sum();
    Ok(CellularResult {
        overall_blocking: total_blocked as f64 / max_arrivals as f64,
        per_cell_blocking: arrivals
            .iter()
            .zip(&blocked)
            .map(|(&a, &b)| if a > 0 { Some(b as f64 / a as f64) } else { None })
            .collect(),
        arrivals,
        blocked,
        dropped_handovers: dropped,
    })
}

/// Confidence interval for a sample of replication means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub mean: f64,
    /// Half-width `t_{(1-alpha)/2, n-1} s / sqrt(n)`.
    pub half_width: f64,
    /// Confidence level, e.g. 0.95.
    pub confidence: f64,
    pub n: usize,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower() && value <= self.upper()
    }

    pub fn overlaps(&self, other: &ConfidenceInterval) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

/// Student-t confidence interval over raw observations.
pub fn confidence_interval(observations: &[f64], confidence: f64) -> Result<ConfidenceInterval> {
    let n = observations.len();
    if n < 2 {
        return Err(Error::SampleSize { needed: 2, got: n });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence must be in (0, 1), got {confidence}")));
    }
    let nf = n as f64;
    let mean = observations.iter().sum::<f64>() / nf;
    let var = observations.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| Error::invalid(format!("t-distribution: {e}")))?
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok(ConfidenceInterval { mean, half_width: t * var.sqrt() / nf.sqrt(), confidence, n })
}

/// Runs `n` independent replications with decorrelated substreams of
/// `base_seed` and returns the per-replication observations.
pub fn replicate(n: u64, base_seed: u64, mut run: impl FnMut(u64, RngStream) -> f64) -> Vec<f64> {
    let base = RngStream::new(base_seed);
    (0..n).map(|rep| run(rep, base.substream(rep + 1))).collect()
}

/// Estimates from the waiting-bus paradox experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InspectorParadox {
    /// Mean length of the interval a random time-point falls into;
    /// approaches `2/lambda`.
    pub straddling_mean: f64,
    /// Plain mean of the inter-occurrence intervals, `1/lambda`.
    pub interval_mean: f64,
}

/// Samples random time points of a Poisson process realization and measures
/// the straddling-interval length bias.
pub fn poisson_inspector_paradox_demo(
    lambda: f64,
    horizon: f64,
    picks: usize,
    stream: &mut RngStream,
) -> Result<InspectorParadox> {
    let times = crate::trafficgen::poisson_arrivals(lambda, horizon, stream)?;
    if times.len() < 2 {
        return Err(Error::SampleSize { needed: 2, got: times.len() });
    }
    let gaps_sum: f64 = times.windows(2).map(|w| w[1] - w[0]).sum();
    let interval_mean = gaps_sum / (times.len() - 1) as f64;

    let mut straddle_sum = 0.0;
    let mut hits = 0usize;
    let lo = times[0];
    let hi = *times.last().unwrap();
    while hits < picks {
        let point = lo + (hi - lo) * stream.uniform01();
        let idx = times.partition_point(|&x| x <= point);
        if idx == 0 || idx >= times.len() {
            continue;
        }
        straddle_sum += times[idx] - times[idx - 1];
        hits += 1;
    }
    Ok(InspectorParadox { straddling_mean: straddle_sum / picks as f64, interval_mean })
}

/// Two-sided Kolmogorov–Smirnov statistic of a sample against a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Asymptotic two-sided KS critical value at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((-0.5 * (alpha / 2.0).ln()) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaymodels::{mm1_metrics, mm1n_metrics};
    use crate::lossmodels::erlang_b;
    use approx::assert_relative_eq;

    fn scripted(gaps: &[f64], services: &[f64]) -> Vec<DesArrival> {
        gaps.iter()
            .zip(services)
            .map(|(&g, &s)| DesArrival::new(g, s))
            .collect()
    }

    #[test]
    fn worked_ledger_example() {
        // inter-arrivals 1,2,1,8,4,5 and services 4,6,4,2,5,1
        let arrivals = scripted(&[1.0, 2.0, 1.0, 8.0, 4.0, 5.0], &[4.0, 6.0, 4.0, 2.0, 5.0, 1.0]);
        let mut cfg = DesConfig::single_server(6);
        cfg.warmup_arrivals = 0;
        cfg.keep_ledger = true;
        let result = des_single_server(&cfg, arrivals).unwrap();
        let ledger = result.ledger.unwrap();
        let want = [
            (1.0, 4.0, 0, 1.0, 5.0, 4.0),
            (3.0, 6.0, 1, 5.0, 11.0, 8.0),
            (4.0, 4.0, 2, 11.0, 15.0, 11.0),
            (12.0, 2.0, 1, 15.0, 17.0, 5.0),
            (16.0, 5.0, 1, 17.0, 22.0, 6.0),
            (21.0, 1.0, 1, 22.0, 23.0, 2.0),
        ];
        assert_eq!(ledger.len(), want.len());
        for (row, w) in ledger.iter().zip(&want) {
            assert_relative_eq!(row.arrival_time, w.0);
            assert_relative_eq!(row.service_duration, w.1);
            assert_eq!(row.queue_size_on_arrival, w.2);
            assert_relative_eq!(row.service_start, w.3);
            assert_relative_eq!(row.service_end, w.4);
            assert_relative_eq!(row.delay, w.5);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = DesConfig::single_server(20_000);
        let run = |seed: u64| {
            let stream = RngStream::new(seed);
            des_single_server(&cfg, markov_source(0.7, 1.0, &stream).take(20_000)).unwrap()
        };
        let a = run(5);
        let b = run(5);
        assert_eq!(a.mean_delay.to_bits(), b.mean_delay.to_bits());
        assert_eq!(a.queue_mean_time.to_bits(), b.queue_mean_time.to_bits());
    }

    #[test]
    fn mm1_delay_within_tolerance() {
        let (lambda, mu) = (0.8, 1.0);
        let stream = RngStream::new(42);
        let cfg = DesConfig::single_server(400_000);
        let r = des_single_server(&cfg, markov_source(lambda, mu, &stream).take(400_000)).unwrap();
        let exact = mm1_metrics(lambda, mu).unwrap();
        assert!((r.mean_delay - exact.mean_delay).abs() / exact.mean_delay < 0.05);
        assert!((r.queue_mean_on_arrival - exact.mean_queue).abs() / exact.mean_queue < 0.05);
        assert!((r.queue_mean_time - exact.mean_queue).abs() / exact.mean_queue < 0.05);
        assert!((r.idle_fraction - 0.2).abs() < 0.02);
    }

    #[test]
    fn inspector_agrees_with_time_fraction_for_uniform_input() {
        // U/U/1: inspector and time-recording estimators agree
        let stream = RngStream::new(7);
        let mut gaps = stream.substream(1);
        let mut svcs = stream.substream(2);
        let arrivals = std::iter::from_fn(move || {
            Some(DesArrival::new(2.0 * gaps.uniform01(), 1.6 * svcs.uniform01()))
        })
        .take(300_000);
        let mut cfg = DesConfig::single_server(300_000);
        cfg.inspector = Some((0.9, 999));
        let r = des_single_server(&cfg, arrivals).unwrap();
        let inspector = r.queue_mean_inspector.unwrap();
        assert!(
            (inspector - r.queue_mean_time).abs() / r.queue_mean_time < 0.05,
            "inspector {inspector} vs time {}",
            r.queue_mean_time
        );
    }

    #[test]
    fn deterministic_input_reproduces_cycle_analysis() {
        // D/D/1 with lambda = 1, mu = 2
        let arrivals = std::iter::repeat(DesArrival::new(1.0, 0.5)).take(10_000);
        let mut cfg = DesConfig::single_server(10_000);
        cfg.warmup_arrivals = 0;
        let r = des_single_server(&cfg, arrivals).unwrap();
        assert!(r.mean_delay == 0.5);
        assert_eq!(r.blocked, 0);
        assert!((r.queue_mean_time - 0.5).abs() < 1e-3);
    }

    #[test]
    fn mm1n_blocking_matches_exact() {
        let (lambda, mu, n) = (1.2, 1.0, 5u64);
        let stream = RngStream::new(11);
        let mut cfg = DesConfig::single_server(400_000);
        cfg.capacity = Some(n);
        let r = des_single_server(&cfg, markov_source(lambda, mu, &stream).take(400_000)).unwrap();
        let exact = mm1n_metrics(lambda, mu, n as usize).unwrap();
        let pb = exact.blocking.unwrap();
        assert!((r.blocking - pb).abs() / pb < 0.05, "sim {} vs {}", r.blocking, pb);
    }

    #[test]
    fn mmkk_blocking_matches_erlang_b() {
        let (lambda, mu, k) = (4.0, 1.0, 5u32);
        let stream = RngStream::new(12);
        let cfg = DesConfig::multi_server(k, k as u64, 300_000);
        let r = des_multi_server(&cfg, markov_source(lambda, mu, &stream).take(300_000)).unwrap();
        let exact: f64 = erlang_b(4.0, 5).unwrap();
        assert!((r.blocking - exact).abs() / exact < 0.05, "sim {} vs {exact}", r.blocking);
    }

    #[test]
    fn lifo_preemptive_delay_equals_busy_period() {
        let (lambda, mu) = (0.6, 1.0);
        let stream = RngStream::new(13);
        let mut cfg = DesConfig::single_server(300_000);
        cfg.discipline = Discipline::LifoPreemptive;
        let r = des_single_server(&cfg, markov_source(lambda, mu, &stream).take(300_000)).unwrap();
        let busy = mm1_metrics(lambda, mu).unwrap().busy_period.unwrap();
        assert!((r.mean_delay - busy).abs() / busy < 0.05, "sim {} vs {busy}", r.mean_delay);
        // queue-size law unchanged by the discipline
        let eq = mm1_metrics(lambda, mu).unwrap().mean_queue;
        assert!((r.queue_mean_time - eq).abs() / eq < 0.05);
    }

    #[test]
    fn priority_simulation_matches_formula() {
        use crate::delaymodels::{mg1_priority_nonpreemptive, ServiceSpec};
        let (l_hi, l_lo) = (0.45, 0.45);
        let (mu_hi, mu_lo) = (2.0, 1.0);
        let stream = RngStream::new(14);
        let mut gaps = stream.substream(1);
        let mut svc = stream.substream(2);
        let mut pick = stream.substream(3);
        let total = l_hi + l_lo;
        let arrivals = std::iter::from_fn(move || {
            let gap = gaps.exp_deviate(total).unwrap();
            let hi = pick.uniform01() <= l_hi / total;
            let service = svc.exp_deviate(if hi { mu_hi } else { mu_lo }).unwrap();
            Some(DesArrival { gap, service, class: if hi { 0 } else { 1 } })
        })
        .take(400_000);
        let mut cfg = DesConfig::single_server(400_000);
        cfg.discipline = Discipline::Priority;
        let r = des_single_server(&cfg, arrivals).unwrap();
        let classes = [
            (l_hi, ServiceSpec::exponential(1.0 / mu_hi).unwrap()),
            (l_lo, ServiceSpec::exponential(1.0 / mu_lo).unwrap()),
        ];
        let formula = mg1_priority_nonpreemptive(&classes).unwrap();
        let overall = (l_hi * formula[0].mean_delay + l_lo * formula[1].mean_delay) / total;
        assert!(
            (r.mean_delay - overall).abs() / overall < 0.05,
            "sim {} vs {overall}",
            r.mean_delay
        );
    }

    #[test]
    fn burke_departures_are_poisson() {
        let (lambda, mu) = (0.5, 1.0);
        let stream = RngStream::new(15);
        let mut cfg = DesConfig::single_server(120_000);
        cfg.keep_departures = true;
        let r = des_single_server(&cfg, markov_source(lambda, mu, &stream).take(120_000)).unwrap();
        let departures = r.departures.unwrap();
        let skip = departures.len() / 10;
        let mut gaps: Vec<f64> =
            departures[skip..].windows(2).map(|w| w[1] - w[0]).collect();
        let n = gaps.len();
        let d = ks_statistic(&mut gaps, |x| 1.0 - (-lambda * x).exp());
        assert!(d < ks_critical(n, 0.01), "KS {d} vs {}", ks_critical(n, 0.01));
    }

    #[test]
    fn mc_mm1_estimates_mean_queue() {
        let mut stream = RngStream::new(16);
        let est = mc_mm1(0.5, 1.0, 2_000_000, &mut stream).unwrap();
        assert!((est - 1.0).abs() < 0.02, "estimate {est}");
    }

    #[test]
    fn mc_mm1_unbiased_across_loads() {
        for rho in [0.1, 0.5, 0.9] {
            let mut stream = RngStream::new(17);
            let est = mc_mm1(rho, 1.0, 3_000_000, &mut stream).unwrap();
            let exact = rho / (1.0 - rho);
            assert!(
                (est - exact).abs() / exact < 0.05,
                "rho {rho}: estimate {est} vs {exact}"
            );
        }
    }

    #[test]
    fn mc_mmkk_blocking() {
        let mut stream = RngStream::new(18);
        let est = mc_mmkk(1.0, 1.0, 1, 2_000_000, &mut stream).unwrap();
        assert!((est - 0.5).abs() < 0.01, "estimate {est}");
        let mut stream = RngStream::new(19);
        let zero = mc_mmkk(1e-12, 1.0, 5, 10_000, &mut stream).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn cellular_single_cell_is_mmkk() {
        let spec = CellularSpec {
            channels: 5,
            new_call_rates: vec![4.0],
            service_rate: 1.0,
            handover_rates: vec![0.0],
            routing: vec![vec![0.0]],
        };
        let mut stream = RngStream::new(20);
        let r = cellular_sim(&spec, 2_000_000, &mut stream).unwrap();
        let exact: f64 = erlang_b(4.0, 5).unwrap();
        assert!(
            (r.overall_blocking - exact).abs() / exact < 0.05,
            "sim {} vs {exact}",
            r.overall_blocking
        );
    }

    #[test]
    fn cellular_without_handover_decouples() {
        let spec = CellularSpec {
            channels: 3,
            new_call_rates: vec![2.0, 3.0],
            service_rate: 1.0,
            handover_rates: vec![0.0, 0.0],
            routing: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        };
        let mut stream = RngStream::new(21);
        let r = cellular_sim(&spec, 3_000_000, &mut stream).unwrap();
        for (i, &a) in [2.0, 3.0].iter().enumerate() {
            let exact: f64 = erlang_b(a, 3).unwrap();
            let sim = r.per_cell_blocking[i].unwrap();
            assert!((sim - exact).abs() / exact < 0.05, "cell {i}: {sim} vs {exact}");
        }
    }

    #[test]
    fn cellular_validation() {
        let spec = CellularSpec {
            channels: 3,
            new_call_rates: vec![1.0, 1.0],
            service_rate: 1.0,
            handover_rates: vec![0.5, 0.0],
            routing: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn confidence_interval_multipliers() {
        // 95% multipliers: 2.57 for n = 6, 2.23 for n = 11
        let obs6 = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ci = confidence_interval(&obs6, 0.95).unwrap();
        let s6 = (obs6.iter().map(|x| (x - 3.5) * (x - 3.5)).sum::<f64>() / 5.0).sqrt();
        assert!((ci.half_width / (s6 / 6.0f64.sqrt()) - 2.57).abs() < 0.005);

        let obs11: Vec<f64> = (1..=11).map(|i| i as f64).collect();
        let ci = confidence_interval(&obs11, 0.95).unwrap();
        let mean = 6.0;
        let s11 =
            (obs11.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 10.0).sqrt();
        assert!((ci.half_width / (s11 / 11.0f64.sqrt()) - 2.23).abs() < 0.005);

        let flat = vec![2.0; 8];
        assert_eq!(confidence_interval(&flat, 0.95).unwrap().half_width, 0.0);
        assert!(confidence_interval(&[1.0], 0.95).is_err());
    }

    #[test]
    fn inspector_paradox() {
        let mut stream = RngStream::new(22);
        let p = poisson_inspector_paradox_demo(1.0, 10_000.0, 1_000, &mut stream).unwrap();
        assert!((p.straddling_mean - 2.0).abs() < 0.15, "straddling {}", p.straddling_mean);
        assert!((p.interval_mean - 1.0).abs() < 0.05);
        let mut stream = RngStream::new(23);
        let p2 = poisson_inspector_paradox_demo(2.0, 10_000.0, 1_000, &mut stream).unwrap();
        assert!((p2.straddling_mean - 1.0).abs() < 0.1);
    }

    #[test]
    fn replications_are_decorrelated_and_reproducible() {
        let obs = replicate(5, 99, |_, mut s| s.uniform01());
        let again = replicate(5, 99, |_, mut s| s.uniform01());
        assert_eq!(obs, again);
        let spread = obs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - obs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 1e-6);
    }
}
