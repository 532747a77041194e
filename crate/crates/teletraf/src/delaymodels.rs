//! Closed-form delay-system calculators: M/M/1, M/M/∞, M/M/k, the finite
//! buffer variants M/M/1/N and M/M/k/N, M/G/1 with FIFO, LIFO, processor
//! sharing and priority disciplines, and the finite/infinite-buffer
//! overflow inequality check.

use crate::lossmodels::erlang_b_inverse_recursion;
use crate::num::Real;
use crate::randkit::poisson_pmf;
use crate::{Error, Result};

/// Metric record shared by the delay models.
///
/// Fields that a model does not define stay `None`. `mean_queue` counts
/// everyone in the system, `mean_in_queue` only those waiting; delays
/// include service, waits do not.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueMetrics<R: Real> {
    /// Blocking probability; only finite-buffer models have one.
    pub blocking: Option<R>,
    /// Steady-state queue-size distribution (finite models exact; infinite
    /// models truncated to tail mass below 1e-12 by default).
    pub state_dist: Option<Vec<R>>,
    /// E[Q], mean number in the system.
    pub mean_queue: R,
    /// E[N_Q], mean number waiting.
    pub mean_in_queue: R,
    /// E[N_s], mean number in service.
    pub mean_in_service: R,
    /// E[D], mean time in the system of an admitted customer.
    pub mean_delay: R,
    /// E[W_Q], mean wait before service of an admitted customer.
    pub mean_wait: R,
    /// Mean fraction of busy servers.
    pub utilization: R,
    /// Probability that an admitted arrival has to wait.
    pub delay_prob: Option<R>,
    /// Mean time in system of customers that had to wait.
    pub delayed_mean_delay: Option<R>,
    /// Mean wait of customers that had to wait.
    pub delayed_mean_wait: Option<R>,
    /// Mean busy period of the server (single-server models).
    pub busy_period: Option<R>,
    /// Arrival rate of admitted customers, `lambda (1 - blocking)`.
    pub effective_arrival_rate: R,
}

impl<R: Real> QueueMetrics<R> {
    /// Little's-law residual `E[Q] - lambda_eff E[D]`; ~0 for every model.
    pub fn little_residual(&self) -> R {
        self.mean_queue - self.effective_arrival_rate * self.mean_delay
    }
}

/// Service-time description: mean plus second moment, with a tag recalling
/// the distribution the moments came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceSpec<R: Real> {
    mean: R,
    second_moment: R,
    kind: ServiceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceKind {
    Exponential,
    Deterministic,
    GeneralMoments,
}

impl<R: Real> ServiceSpec<R> {
    pub fn exponential(mean: R) -> Result<Self> {
        Self::build(mean, R::of(2) * mean * mean, ServiceKind::Exponential)
    }

    pub fn deterministic(mean: R) -> Result<Self> {
        Self::build(mean, mean * mean, ServiceKind::Deterministic)
    }

    pub fn from_moments(mean: R, second_moment: R) -> Result<Self> {
        Self::build(mean, second_moment, ServiceKind::GeneralMoments)
    }

    pub fn from_mean_variance(mean: R, variance: R) -> Result<Self> {
        if variance < R::zero() {
            return Err(Error::invalid(format!("variance must be >= 0, got {variance}")));
        }
        Self::build(mean, variance + mean * mean, ServiceKind::GeneralMoments)
    }

    fn build(mean: R, second_moment: R, kind: ServiceKind) -> Result<Self> {
        if !(mean > R::zero()) || !mean.is_finite() {
            return Err(Error::invalid(format!("mean service time must be positive, got {mean}")));
        }
        if second_moment < mean * mean * (R::one() - R::of_f64(1e-12)) {
            return Err(Error::invalid(
                "second moment below squared mean implies negative variance",
            ));
        }
        Ok(ServiceSpec { mean, second_moment, kind })
    }

    pub fn mean(&self) -> R {
        self.mean
    }

    pub fn second_moment(&self) -> R {
        self.second_moment
    }

    pub fn variance(&self) -> R {
        (self.second_moment - self.mean * self.mean).max(R::zero())
    }

    pub fn kind(&self) -> ServiceKind {
        self.kind
    }
}

fn check_rates<R: Real>(lambda: R, mu: R) -> Result<()> {
    if lambda < R::zero() || !lambda.is_finite() {
        return Err(Error::invalid(format!("arrival rate must be >= 0, got {lambda}")));
    }
    if !(mu > R::zero()) || !mu.is_finite() {
        return Err(Error::invalid(format!("service rate must be positive, got {mu}")));
    }
    Ok(())
}

/// Geometric M/M/1 queue-size distribution truncated at the given tail mass.
pub fn mm1_state_dist<R: Real>(lambda: R, mu: R, tail_tol: R) -> Result<Vec<R>> {
    check_rates(lambda, mu)?;
    let rho = lambda / mu;
    if rho >= R::one() {
        return Err(Error::unstable(format!("rho = {rho} >= 1")));
    }
    let mut dist = Vec::new();
    let mut p = R::one() - rho;
    let mut tail = R::one();
    while tail > tail_tol {
        dist.push(p);
        tail = tail - p;
        p = p * rho;
    }
    Ok(dist)
}

/// Full M/M/1 record.
pub fn mm1_metrics<R: Real>(lambda: R, mu: R) -> Result<QueueMetrics<R>> {
    check_rates(lambda, mu)?;
    let rho = lambda / mu;
    if rho >= R::one() {
        return Err(Error::unstable(format!("rho = {rho} >= 1")));
    }
    let spare = mu - lambda;
    let mean_queue = rho / (R::one() - rho);
    Ok(QueueMetrics {
        blocking: None,
        state_dist: Some(mm1_state_dist(lambda, mu, R::of_f64(1e-12))?),
        mean_queue,
        mean_in_queue: rho * rho / (R::one() - rho),
        mean_in_service: rho,
        mean_delay: R::one() / spare,
        mean_wait: rho / spare,
        utilization: rho,
        delay_prob: Some(rho),
        delayed_mean_delay: Some(R::one() / spare + R::one() / mu),
        delayed_mean_wait: Some(R::one() / spare),
        busy_period: Some(R::one() / spare),
        effective_arrival_rate: lambda,
    })
}

/// Tail probabilities of the M/M/1 delay: total delay and queueing wait.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayTails<R: Real> {
    /// `P(D > t) = e^{-(mu-lambda) t}`.
    pub total: R,
    /// `P(W_Q > t) = rho e^{-(mu-lambda) t}`.
    pub queueing: R,
}

pub fn mm1_delay_ccdf<R: Real>(lambda: R, mu: R, t: R) -> Result<DelayTails<R>> {
    check_rates(lambda, mu)?;
    if lambda >= mu {
        return Err(Error::unstable(format!("rho = {} >= 1", lambda / mu)));
    }
    if t < R::zero() {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    let tail = (-(mu - lambda) * t).exp();
    Ok(DelayTails { total: tail, queueing: lambda / mu * tail })
}

/// M/M/∞: Poisson(A) occupancy, `E[Q] = A`, zero utilization per server.
pub fn mminf_metrics<R: Real>(lambda: R, mu: R) -> Result<QueueMetrics<R>> {
    check_rates(lambda, mu)?;
    let a = lambda / mu;
    let dist = poisson_pmf(a, R::of_f64(1e-12))?;
    let mut full = vec![R::zero(); (dist.support_max() + 1) as usize];
    for (i, p) in dist.iter() {
        full[i as usize] = p;
    }
    Ok(QueueMetrics {
        blocking: None,
        state_dist: Some(full),
        mean_queue: a,
        mean_in_queue: R::zero(),
        mean_in_service: a,
        mean_delay: R::one() / mu,
        mean_wait: R::zero(),
        utilization: R::zero(),
        delay_prob: Some(R::zero()),
        delayed_mean_delay: None,
        delayed_mean_wait: None,
        busy_period: None,
        effective_arrival_rate: lambda,
    })
}

/// Erlang C delay probability `C_k(A)`, from Erlang B.
pub fn erlang_c<R: Real>(offered: R, servers: u32) -> Result<R> {
    if servers == 0 || offered >= R::of(servers as usize) {
        return Err(Error::unstable(format!(
            "offered load {offered} not below server count {servers}"
        )));
    }
    let k = R::of(servers as usize);
    let e = erlang_b_inverse_recursion(offered, servers)?;
    Ok(k * e / (k - offered * (R::one() - e)))
}

/// M/M/k state distribution truncated at the given tail mass.
///
/// Weights are anchored at the occupancy mode, so large offered loads do
/// not overflow the Poisson-like head terms.
pub fn mmk_state_dist<R: Real>(lambda: R, mu: R, servers: u32, tail_tol: R) -> Result<Vec<R>> {
    check_rates(lambda, mu)?;
    let a = lambda / mu;
    let k = R::of(servers as usize);
    if servers == 0 || a >= k {
        return Err(Error::unstable(format!("offered load {a} not below server count {servers}")));
    }
    let ks = servers as usize;
    let mode = a.floor().to_usize().unwrap_or(0).min(ks);
    let mut head = vec![R::zero(); ks + 1];
    head[mode] = R::one();
    for n in (0..mode).rev() {
        head[n] = head[n + 1] * R::of(n + 1) / a;
    }
    for n in mode..ks {
        head[n + 1] = head[n] * a / R::of((n + 1).min(ks));
    }
    let rho = a / k;
    // geometric tail above k sums to w_k / (1 - rho)
    let total = head[..ks].iter().fold(R::zero(), |acc, &w| acc + w)
        + head[ks] / (R::one() - rho);
    let mut dist = Vec::new();
    let mut tail = R::one();
    let mut n = 0usize;
    let mut w = head[0];
    while tail > tail_tol {
        let p = w / total;
        dist.push(p);
        tail = tail - p;
        n += 1;
        w = if n <= ks { head[n] } else { w * rho };
    }
    Ok(dist)
}

/// Full M/M/k record.
pub fn mmk_metrics<R: Real>(lambda: R, mu: R, servers: u32) -> Result<QueueMetrics<R>> {
    check_rates(lambda, mu)?;
    let a = lambda / mu;
    let k = R::of(servers as usize);
    if servers == 0 || a >= k {
        return Err(Error::unstable(format!("offered load {a} not below server count {servers}")));
    }
    let c = erlang_c(a, servers)?;
    let spare = k * mu - lambda;
    let mean_in_queue = c * a / (k - a);
    let mean_wait = c / spare;
    Ok(QueueMetrics {
        blocking: None,
        state_dist: Some(mmk_state_dist(lambda, mu, servers, R::of_f64(1e-12))?),
        mean_queue: mean_in_queue + a,
        mean_in_queue,
        mean_in_service: a,
        mean_delay: mean_wait + R::one() / mu,
        mean_wait,
        utilization: a / k,
        delay_prob: Some(c),
        delayed_mean_delay: Some(R::one() / spare + R::one() / mu),
        delayed_mean_wait: Some(R::one() / spare),
        busy_period: None,
        effective_arrival_rate: lambda,
    })
}

/// Delay factor of M/M/k: mean wait over mean service time.
pub fn mmk_delay_factor<R: Real>(lambda: R, mu: R, servers: u32) -> Result<R> {
    let a = lambda / mu;
    let c = erlang_c(a, servers)?;
    Ok(c / (R::of(servers as usize) - a))
}

/// M/M/k/N occupancy weights over `0..=buffer`, normalized; anchored at the
/// mode so no intermediate over- or underflows.
fn mmkn_state_dist<R: Real>(a: R, servers: u32, buffer: usize) -> Vec<R> {
    let k = servers as usize;
    let mut w = vec![R::zero(); buffer + 1];
    if a == R::zero() {
        w[0] = R::one();
        return w;
    }
    // occupancy ratio w_{j+1}/w_j = a / min(j+1, k)
    let ratio_up = |j: usize| a / R::of((j + 1).min(k));
    let mode = a.floor().to_usize().unwrap_or(0).min(buffer);
    w[mode] = R::one();
    for j in (0..mode).rev() {
        w[j] = w[j + 1] / ratio_up(j);
    }
    for j in mode..buffer {
        w[j + 1] = w[j] * ratio_up(j);
    }
    let total = w.iter().fold(R::zero(), |acc, &x| acc + x);
    for x in &mut w {
        *x = *x / total;
    }
    w
}

/// Full M/M/k/N record (`buffer` counts every position, so `buffer >= k`;
/// `buffer == k` is the pure loss system).
pub fn mmkn_metrics<R: Real>(
    lambda: R,
    mu: R,
    servers: u32,
    buffer: usize,
) -> Result<QueueMetrics<R>> {
    check_rates(lambda, mu)?;
    if servers == 0 {
        return Err(Error::invalid("need at least one server"));
    }
    if buffer < servers as usize {
        return Err(Error::invalid(format!(
            "buffer {buffer} must not be smaller than the server count {servers}"
        )));
    }
    let a = lambda / mu;
    let k = servers as usize;
    let dist = mmkn_state_dist(a, servers, buffer);
    let blocking = dist[buffer];
    let lambda_eff = lambda * (R::one() - blocking);

    let mut mean_in_queue = R::zero();
    let mut delay_prob = R::zero();
    for (j, &p) in dist.iter().enumerate() {
        if j > k {
            mean_in_queue += R::of(j - k) * p;
        }
        if j >= k && j < buffer {
            delay_prob += p;
        }
    }
    let mean_in_service = a * (R::one() - blocking);
    let mean_queue = mean_in_queue + mean_in_service;
    let (mean_delay, mean_wait) = if lambda_eff > R::zero() {
        (mean_queue / lambda_eff, mean_in_queue / lambda_eff)
    } else {
        (R::one() / mu, R::zero())
    };
    let admitted = R::one() - blocking;
    let (delayed_mean_wait, delayed_mean_delay) = if delay_prob > R::zero() {
        let w = mean_in_queue / (lambda * delay_prob);
        (Some(w), Some(w + R::one() / mu))
    } else {
        (None, None)
    };
    Ok(QueueMetrics {
        blocking: Some(blocking),
        state_dist: Some(dist),
        mean_queue,
        mean_in_queue,
        mean_in_service,
        mean_delay,
        mean_wait,
        utilization: mean_in_service / R::of(k),
        delay_prob: Some(delay_prob / admitted),
        delayed_mean_delay,
        delayed_mean_wait,
        busy_period: None,
        effective_arrival_rate: lambda_eff,
    })
}

/// Full M/M/1/N record.
pub fn mm1n_metrics<R: Real>(lambda: R, mu: R, buffer: usize) -> Result<QueueMetrics<R>> {
    if buffer == 0 {
        return Err(Error::invalid("buffer must hold at least one customer"));
    }
    mmkn_metrics(lambda, mu, 1, buffer)
}

/// Full M/G/1 record from the Pollaczek–Khintchine mean-value formulas.
pub fn mg1_metrics<R: Real>(lambda: R, service: &ServiceSpec<R>) -> Result<QueueMetrics<R>> {
    if lambda < R::zero() || !lambda.is_finite() {
        return Err(Error::invalid(format!("arrival rate must be >= 0, got {lambda}")));
    }
    let rho = lambda * service.mean();
    if rho >= R::one() {
        return Err(Error::unstable(format!("rho = {rho} >= 1")));
    }
    let residual = lambda * service.second_moment() / R::of(2);
    let mean_wait = residual / (R::one() - rho);
    let mean_delay = mean_wait + service.mean();
    let mu = R::one() / service.mean();
    Ok(QueueMetrics {
        blocking: None,
        state_dist: None,
        mean_queue: lambda * mean_delay,
        mean_in_queue: lambda * mean_wait,
        mean_in_service: rho,
        mean_delay,
        mean_wait,
        utilization: rho,
        delay_prob: Some(rho),
        delayed_mean_delay: Some(mean_wait / rho + service.mean()),
        delayed_mean_wait: Some(mean_wait / rho),
        busy_period: Some(R::one() / (mu - lambda)),
        effective_arrival_rate: lambda,
    })
}

/// Mean residual service time seen by a Poisson arrival,
/// `E[R] = lambda S^2 / 2`.
pub fn mg1_mean_residual<R: Real>(lambda: R, service: &ServiceSpec<R>) -> R {
    lambda * service.second_moment() / R::of(2)
}

/// Per-class delays of an M/G/1 queue under a priority discipline.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityClassDelay<R: Real> {
    /// Mean wait in the queue (non-preemptive discipline only).
    pub mean_wait: Option<R>,
    /// Mean time in the system.
    pub mean_delay: R,
}

/// Non-preemptive M/G/1 priority queue; `classes[0]` has the highest
/// priority. Requires total load below one.
pub fn mg1_priority_nonpreemptive<R: Real>(
    classes: &[(R, ServiceSpec<R>)],
) -> Result<Vec<PriorityClassDelay<R>>> {
    if classes.is_empty() {
        return Err(Error::invalid("need at least one priority class"));
    }
    let mut residual = R::zero();
    let mut total_load = R::zero();
    for (lambda, service) in classes {
        if *lambda < R::zero() {
            return Err(Error::invalid("arrival rates must be >= 0"));
        }
        residual += *lambda * service.second_moment() / R::of(2);
        total_load += *lambda * service.mean();
    }
    if total_load >= R::one() {
        return Err(Error::unstable(format!("total load {total_load} >= 1")));
    }
    let mut out = Vec::with_capacity(classes.len());
    let mut load_above = R::zero();
    for (lambda, service) in classes {
        let load_incl = load_above + *lambda * service.mean();
        let wait = residual / ((R::one() - load_above) * (R::one() - load_incl));
        out.push(PriorityClassDelay { mean_wait: Some(wait), mean_delay: wait + service.mean() });
        load_above = load_incl;
    }
    Ok(out)
}

/// Preemptive-resume M/G/1 priority queue; `classes[0]` has the highest
/// priority. Classes whose cumulative load reaches one are individually
/// unstable and reported as `None`; higher classes are unaffected.
pub fn mg1_priority_preemptive_resume<R: Real>(
    classes: &[(R, ServiceSpec<R>)],
) -> Result<Vec<Option<PriorityClassDelay<R>>>> {
    if classes.is_empty() {
        return Err(Error::invalid("need at least one priority class"));
    }
    let mut out = Vec::with_capacity(classes.len());
    let mut residual = R::zero();
    let mut load_above = R::zero();
    for (lambda, service) in classes {
        if *lambda < R::zero() {
            return Err(Error::invalid("arrival rates must be >= 0"));
        }
        residual += *lambda * service.second_moment() / R::of(2);
        let load_incl = load_above + *lambda * service.mean();
        if load_incl >= R::one() {
            out.push(None);
        } else {
            let delay = (service.mean() * (R::one() - load_incl) + residual)
                / ((R::one() - load_above) * (R::one() - load_incl));
            out.push(Some(PriorityClassDelay { mean_wait: None, mean_delay: delay }));
        }
        load_above = load_incl;
    }
    Ok(out)
}

/// Processor-sharing record: M/M/1 queue-size law, linear conditional delay.
#[derive(Debug, Clone, PartialEq)]
pub struct PsMetrics<R: Real> {
    pub mean_queue: R,
    pub mean_delay: R,
    /// Geometric queue-size distribution (same as M/M/1), truncated.
    pub state_dist: Vec<R>,
    load: R,
}

impl<R: Real> PsMetrics<R> {
    /// Mean time in the system of a job of size `x` (its solo service
    /// requirement): `E[D|x] = x / (1 - rho)`.
    pub fn conditional_delay(&self, x: R) -> R {
        x / (R::one() - self.load)
    }
}

/// M/G/1 processor sharing; insensitive, so only the mean service
/// requirement enters.
pub fn ps_metrics<R: Real>(lambda: R, mean_service: R) -> Result<PsMetrics<R>> {
    if !(mean_service > R::zero()) {
        return Err(Error::invalid(format!("mean service must be positive, got {mean_service}")));
    }
    let mu = R::one() / mean_service;
    let rho = lambda * mean_service;
    if rho >= R::one() {
        return Err(Error::unstable(format!("rho = {rho} >= 1")));
    }
    Ok(PsMetrics {
        mean_queue: rho / (R::one() - rho),
        mean_delay: R::one() / (mu - lambda),
        state_dist: mm1_state_dist(lambda, mu, R::of_f64(1e-12))?,
        load: rho,
    })
}

/// M/G/1-LIFO: by insensitivity the queue-size law and the mean values are
/// those of M/M/1 at the same load. The delay distribution is not
/// FIFO-exponential and is deliberately not provided.
pub fn lifo_metrics<R: Real>(lambda: R, mu: R) -> Result<QueueMetrics<R>> {
    mm1_metrics(lambda, mu)
}

/// Outcome of the overflow-bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WongBound<R: Real> {
    /// Whether `rho P_loss <= P(Q > k)` holds.
    pub holds: bool,
    /// `P(Q > k) - rho P_loss`.
    pub slack: R,
}

/// Checks the finite/infinite-buffer inequality `rho P_loss <= P(Q > k)`
/// relating a G/GI/1/k queue to its infinite-buffer equivalent.
pub fn wong_bound_check<R: Real>(rho: R, p_loss: R, p_overflow: R) -> Result<WongBound<R>> {
    for (name, v) in [("rho", rho), ("loss probability", p_loss), ("overflow probability", p_overflow)] {
        if v < R::zero() || v > R::one() {
            return Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let slack = p_overflow - rho * p_loss;
    Ok(WongBound { holds: slack >= R::zero(), slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lossmodels::erlang_b;
    use approx::assert_relative_eq;

    #[test]
    fn mm1_router_example() {
        // lambda = 2e6 packet/s against a 2.1e6 packet/s link
        let m = mm1_metrics(2.0e6_f64, 2.1e6).unwrap();
        assert!((m.mean_queue - 20.0).abs() < 1e-9);
        assert_relative_eq!(m.mean_delay, 1e-5, max_relative = 1e-12);
        assert!((m.delayed_mean_delay.unwrap() - 1.047619e-5).abs() < 1e-10);
        assert_relative_eq!(m.delayed_mean_wait.unwrap(), 1e-5, max_relative = 1e-12);
        assert!(m.little_residual().abs() < 1e-10);
    }

    #[test]
    fn mm1_light_traffic_and_instability() {
        let m = mm1_metrics(1e-9, 1.0).unwrap();
        assert_relative_eq!(m.mean_delay, 1.0, max_relative = 1e-6);
        assert!(m.mean_queue < 1e-8);
        assert!(matches!(mm1_metrics(2.0, 2.0), Err(Error::Unstable(_))));
    }

    #[test]
    fn mm1_busy_period_equals_mean_delay() {
        let m = mm1_metrics(0.6, 1.0).unwrap();
        assert_eq!(m.busy_period.unwrap(), m.mean_delay);
    }

    #[test]
    fn mm1_iterated_expectation_consistency() {
        let (lambda, mu) = (0.7, 1.0);
        let m = mm1_metrics(lambda, mu).unwrap();
        let p = m.delay_prob.unwrap();
        let undelayed = 1.0 / mu;
        let combined = (1.0 - p) * undelayed + p * m.delayed_mean_delay.unwrap();
        assert_relative_eq!(combined, m.mean_delay, max_relative = 1e-12);
    }

    #[test]
    fn mm1_delay_tails() {
        let t = mm1_delay_ccdf(0.5, 1.0, 0.0).unwrap();
        assert_eq!(t.total, 1.0);
        assert_eq!(t.queueing, 0.5);
        // mu - lambda = 1, t = ln 2 halves the total-delay tail
        let t = mm1_delay_ccdf(1.0, 2.0, (2.0f64).ln()).unwrap();
        assert_relative_eq!(t.total, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn mminf_poisson_occupancy() {
        let m = mminf_metrics(120.0, 3.0).unwrap();
        assert_relative_eq!(m.mean_queue, 40.0);
        assert_eq!(m.utilization, 0.0);
        let dist = m.state_dist.unwrap();
        let mean: f64 = dist.iter().enumerate().map(|(i, &p)| i as f64 * p).sum();
        assert_relative_eq!(mean, 40.0, max_relative = 1e-9);
        // P(Q = 120) for A = 40 sits deep in the tail; a finer truncation
        // of the mode-anchored recursion reaches it without overflow
        let fine = crate::randkit::poisson_pmf(40.0f64, 1e-30).unwrap();
        let p120 = fine.prob(120);
        assert!(p120 > 1e-25 && p120 < 1e-20, "P(Q=120) = {p120}");
    }

    #[test]
    fn mminf_birth_rate_application() {
        // population 3e6, 78-year lifetime: arrival rate E[Q] * mu
        let lambda: f64 = 3.0e6 / 78.0;
        let m = mminf_metrics(lambda, 1.0 / 78.0).unwrap();
        assert_relative_eq!(m.mean_queue, 3.0e6, max_relative = 1e-12);
        assert!((lambda - 38461.0).abs() < 1.0);
    }

    #[test]
    fn erlang_c_known_values() {
        assert!((erlang_c(20.0f64, 30).unwrap() - 0.025).abs() < 1e-3);
        assert!((erlang_c(1000.0f64, 1029).unwrap() - 0.262).abs() < 1e-3);
        assert!(erlang_c(10_000.0f64, 9_970).is_err());
    }

    #[test]
    fn erlang_c_elegant_identity() {
        for &(a, k) in &[(2.0, 4u32), (20.0, 30), (100.0, 117), (500.0, 527)] {
            let c: f64 = erlang_c(a, k).unwrap();
            let ek: f64 = erlang_b(a, k).unwrap();
            let ek1: f64 = erlang_b(a, k - 1).unwrap();
            assert_relative_eq!(1.0 / c, 1.0 / ek - 1.0 / ek1, max_relative = 1e-10);
        }
    }

    #[test]
    fn mmk_two_server_closed_forms() {
        let (lambda, mu) = (1.2, 1.0);
        let a: f64 = lambda / mu;
        let m = mmk_metrics(lambda, mu, 2).unwrap();
        assert_relative_eq!(
            m.delay_prob.unwrap(),
            a * a / (2.0 + a),
            max_relative = 1e-12
        );
        assert_relative_eq!(m.mean_queue, 4.0 * a / (4.0 - a * a), max_relative = 1e-10);
        assert!(m.little_residual().abs() < 1e-12);
        // state distribution sums to one and starts at pi_0 = (2-A)/(2+A)
        let dist = m.state_dist.unwrap();
        assert_relative_eq!(dist[0], (2.0 - a) / (2.0 + a), max_relative = 1e-10);
        let total: f64 = dist.iter().sum();
        assert!((total - 1.0).abs() < 1e-11);
    }

    #[test]
    fn mmk_delayed_customers_consistent() {
        let m = mmk_metrics(20.0, 1.0, 30).unwrap();
        let c = m.delay_prob.unwrap();
        let combined = (1.0 - c) * 1.0 + c * m.delayed_mean_delay.unwrap();
        assert_relative_eq!(combined, m.mean_delay, max_relative = 1e-12);
    }

    #[test]
    fn mm1n_exact_distribution() {
        let m = mm1n_metrics(2.0, 1.0, 4).unwrap();
        let rho: f64 = 2.0;
        let norm: f64 = (0..=4).map(|i| rho.powi(i)).sum();
        let dist = m.state_dist.as_ref().unwrap();
        for i in 0..=4 {
            assert_relative_eq!(dist[i], rho.powi(i as i32) / norm, max_relative = 1e-12);
        }
        assert!(m.little_residual().abs() < 1e-12);
    }

    #[test]
    fn mm1n_critical_load_is_uniform() {
        let m = mm1n_metrics(1.0, 1.0, 4).unwrap();
        let dist = m.state_dist.as_ref().unwrap();
        for i in 0..=4 {
            assert_relative_eq!(dist[i], 0.2, max_relative = 1e-12);
        }
        assert_relative_eq!(m.blocking.unwrap(), 0.2, max_relative = 1e-12);
    }

    #[test]
    fn mm1n_heavy_load_blocking() {
        let m = mm1n_metrics(1000.0f64, 1.0, 1000).unwrap();
        assert!((m.blocking.unwrap() - 0.999).abs() < 1e-3);
    }

    #[test]
    fn mm1_2_blocking_equals_mean_waiting() {
        let m = mm1n_metrics(0.8, 1.0, 2).unwrap();
        assert_relative_eq!(m.blocking.unwrap(), m.mean_in_queue, max_relative = 1e-12);
    }

    #[test]
    fn mmkn_reduces_to_loss_system_and_mm1n() {
        let (lambda, mu) = (8.0, 1.0);
        let loss = mmkn_metrics(lambda, mu, 10, 10).unwrap();
        assert_relative_eq!(
            loss.blocking.unwrap(),
            erlang_b(8.0, 10).unwrap(),
            max_relative = 1e-10
        );
        assert!(loss.delay_prob.unwrap() == 0.0 && loss.delayed_mean_delay.is_none());

        let a = mmkn_metrics(0.7, 1.0, 1, 5).unwrap();
        let b = mm1n_metrics(0.7, 1.0, 5).unwrap();
        assert_eq!(a.state_dist, b.state_dist);
        assert_eq!(a.mean_delay, b.mean_delay);
    }

    #[test]
    fn mmkn_approaches_mmk_for_large_buffers() {
        let (lambda, mu, k) = (2.4f64, 1.0, 4u32);
        let finite = mmkn_metrics(lambda, mu, k, 400).unwrap();
        let infinite = mmk_metrics(lambda, mu, k).unwrap();
        assert!((finite.mean_queue - infinite.mean_queue).abs() < 1e-9);
        assert!((finite.mean_delay - infinite.mean_delay).abs() < 1e-9);
    }

    #[test]
    fn mmkn_matches_birth_death_oracle() {
        use crate::chainsolve::{bd_steady_state, BirthDeathSpec};
        let (lambda, mu, k, n) = (1.0, 1.0, 2u32, 4usize);
        let m = mmkn_metrics(lambda, mu, k, n).unwrap();
        let service: Vec<f64> =
            (1..=n).map(|i| i.min(k as usize) as f64 * mu).collect();
        let spec = BirthDeathSpec::single_rate_arrivals(lambda, service).unwrap();
        let bd = bd_steady_state(&spec).unwrap();
        let dist = m.state_dist.as_ref().unwrap();
        for i in 0..=n {
            assert_relative_eq!(dist[i], bd.prob(i), max_relative = 1e-10);
        }
    }

    #[test]
    fn mg1_pollaczek_khintchine_example() {
        // two Poisson streams merged: lambda = 1.5, E[S] = 0.4, var = 0.2
        let service = ServiceSpec::from_mean_variance(0.4f64, 0.2).unwrap();
        let m = mg1_metrics(1.5, &service).unwrap();
        assert!((m.mean_queue - 1.6125).abs() < 1e-12);
    }

    #[test]
    fn mg1_exponential_reduces_to_mm1() {
        let (lambda, mu) = (0.8, 1.25);
        let service = ServiceSpec::exponential(1.0 / mu).unwrap();
        let g = mg1_metrics(lambda, &service).unwrap();
        let m = mm1_metrics(lambda, mu).unwrap();
        assert_relative_eq!(g.mean_queue, m.mean_queue, max_relative = 1e-12);
        assert_relative_eq!(g.mean_delay, m.mean_delay, max_relative = 1e-12);
        assert_relative_eq!(g.busy_period.unwrap(), m.busy_period.unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn mg1_deterministic_halves_the_wait() {
        for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let mu = 1.0;
            let lambda = rho * mu;
            let det = ServiceSpec::deterministic(1.0 / mu).unwrap();
            let exp = ServiceSpec::exponential(1.0 / mu).unwrap();
            let d = mg1_metrics(lambda, &det).unwrap();
            let e = mg1_metrics(lambda, &exp).unwrap();
            assert_relative_eq!(d.mean_wait, 0.5 * e.mean_wait, max_relative = 1e-12);
            assert_relative_eq!(
                d.mean_queue,
                rho / (1.0 - rho) * (2.0 - rho) / 2.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn priority_single_class_is_plain_mg1() {
        let service = ServiceSpec::exponential(0.5).unwrap();
        let base = mg1_metrics(0.9, &service).unwrap();
        let np = mg1_priority_nonpreemptive(&[(0.9, service)]).unwrap();
        assert_relative_eq!(np[0].mean_wait.unwrap(), base.mean_wait, max_relative = 1e-12);
    }

    #[test]
    fn priority_nonpreemptive_two_classes() {
        let hi = ServiceSpec::exponential(0.5).unwrap();
        let lo = ServiceSpec::exponential(1.0).unwrap();
        let classes = [(0.5, hi), (0.5, lo)];
        let d = mg1_priority_nonpreemptive(&classes).unwrap();
        // E[R] = (0.5*2*0.25 + 0.5*2*1)/2 = 0.625
        let residual: f64 = 0.625;
        let rho1 = 0.25;
        let rho2 = 0.5;
        assert_relative_eq!(d[0].mean_wait.unwrap(), residual / (1.0 - rho1), max_relative = 1e-12);
        assert_relative_eq!(
            d[1].mean_wait.unwrap(),
            residual / ((1.0 - rho1) * (1.0 - rho1 - rho2)),
            max_relative = 1e-12
        );
        assert!(mg1_priority_nonpreemptive(&[(2.0, hi), (0.5, lo)]).is_err());
    }

    #[test]
    fn priority_preemptive_exponential_closed_forms() {
        let mu = 2.0;
        let service = ServiceSpec::exponential(1.0 / mu).unwrap();
        let (l1, l2) = (0.6, 0.8);
        let rho1: f64 = l1 / mu;
        let rho2: f64 = l2 / mu;
        let d = mg1_priority_preemptive_resume(&[(l1, service), (l2, service)]).unwrap();
        assert_relative_eq!(
            d[0].as_ref().unwrap().mean_delay,
            1.0 / (mu * (1.0 - rho1)),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            d[1].as_ref().unwrap().mean_delay,
            1.0 / (mu * (1.0 - rho1) * (1.0 - rho1 - rho2)),
            max_relative = 1e-12
        );
    }

    #[test]
    fn priority_preemptive_partial_stability() {
        let service = ServiceSpec::exponential(1.0).unwrap();
        let d = mg1_priority_preemptive_resume(&[(0.5, service), (0.8, service)]).unwrap();
        assert!(d[0].is_some());
        assert!(d[1].is_none());
    }

    #[test]
    fn processor_sharing_multiplexer_example() {
        // 2.5 Gb/s link, 1250-byte packets: mu = 250k packet/s
        let m = ps_metrics(200_000.0f64, 1.0 / 250_000.0).unwrap();
        assert!((m.mean_queue - 4.0).abs() < 1e-9);
        assert_relative_eq!(m.mean_delay, 20e-6, max_relative = 1e-12);
        // a 5 kbyte packet takes x = 16 microseconds alone
        assert_relative_eq!(m.conditional_delay(16e-6), 80e-6, max_relative = 1e-12);
    }

    #[test]
    fn processor_sharing_class_decomposition() {
        // per-class mean counts from Little sum to the total queue
        let (l1, l2) = (0.3, 0.2);
        let (h1, h2) = (1.0, 2.0);
        let rho = l1 * h1 + l2 * h2;
        let m = ps_metrics(l1 + l2, rho / (l1 + l2)).unwrap();
        let q1 = l1 * h1 / (1.0 - rho);
        let q2 = l2 * h2 / (1.0 - rho);
        assert_relative_eq!(q1 + q2, m.mean_queue, max_relative = 1e-12);
    }

    #[test]
    fn lifo_matches_mm1_means() {
        let a = lifo_metrics(0.5, 1.0).unwrap();
        let b = mm1_metrics(0.5, 1.0).unwrap();
        assert_relative_eq!(a.mean_queue, 1.0, max_relative = 1e-12);
        assert_eq!(a, b);
    }

    #[test]
    fn wong_bound_on_mm1n_grid() {
        for rho in [0.1f64, 0.3, 0.5, 0.7, 0.9, 0.99] {
            for n in [1usize, 2, 5, 10, 20] {
                let p_loss: f64 =
                    rho.powi(n as i32) * (1.0 - rho) / (1.0 - rho.powi(n as i32 + 1));
                let p_overflow = rho.powi(n as i32 + 1);
                let check = wong_bound_check(rho, p_loss, p_overflow).unwrap();
                assert!(check.holds, "rho {rho}, N {n}, slack {}", check.slack);
            }
        }
        assert!(wong_bound_check(0.9, 0.0, 0.0).unwrap().holds);
        assert!(wong_bound_check(1.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn g_g_1_idle_probability() {
        // p_0 = 1 - rho for every infinite-buffer single-server law
        let m = mm1_metrics(0.35, 1.0).unwrap();
        assert_relative_eq!(m.state_dist.unwrap()[0], 0.65, max_relative = 1e-12);
        let p = ps_metrics(0.35, 1.0).unwrap();
        assert_relative_eq!(p.state_dist[0], 0.65, max_relative = 1e-12);
    }
}
