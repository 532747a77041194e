//! Exact cycle analysis of deterministic queues: D/D/1, D/D/k, D/D/k/k,
//! D/D/1/N and the single-large-burst SLB/D/1/N example.
//!
//! The tie rule throughout: when an arrival and a departure fall on the
//! same instant, the departure is processed first.

use crate::num::Real;
use crate::{Error, Result};

pub mod exact;

/// Mean queue size of a deterministic queue; overloaded infinite-buffer
/// queues grow without bound and are tagged rather than returned as a
/// floating-point infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanQueue<R: Real> {
    Finite(R),
    Unbounded,
}

impl<R: Real> MeanQueue<R> {
    pub fn finite(&self) -> Option<R> {
        match self {
            MeanQueue::Finite(q) => Some(*q),
            MeanQueue::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, MeanQueue::Unbounded)
    }
}

/// Outcome of a deterministic-queue analysis. `state_fractions` lists the
/// long-run fraction of time with `n` customers present, for the `n` that
/// occur in the repeating pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicResult<R: Real> {
    pub mean_queue: MeanQueue<R>,
    pub utilization: R,
    pub blocking: R,
    pub state_fractions: Vec<(u64, R)>,
    /// Length of the repeating cycle, when the queue settles into one.
    pub cycle_length: Option<R>,
}

fn check_pos<R: Real>(name: &str, v: R) -> Result<()> {
    if !(v > R::zero()) || !v.is_finite() {
        return Err(Error::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Ceiling that treats values within 1e-9 of an integer as that integer, so
/// exact-ratio inputs that picked up float rounding still follow the
/// departure-first tie rule.
fn ratio_ceil<R: Real>(x: R) -> R {
    (x - R::of_f64(1e-9)).ceil()
}

/// D/D/1: stable for `lambda <= mu` (the equality is stable because the
/// departure leaves before the arrival enters).
pub fn dd1<R: Real>(lambda: R, mu: R) -> Result<DeterministicResult<R>> {
    check_pos("lambda", lambda)?;
    check_pos("mu", mu)?;
    if lambda > mu {
        return Ok(DeterministicResult {
            mean_queue: MeanQueue::Unbounded,
            utilization: R::one(),
            blocking: R::zero(),
            state_fractions: vec![],
            cycle_length: None,
        });
    }
    let busy = lambda / mu;
    Ok(DeterministicResult {
        mean_queue: MeanQueue::Finite(busy),
        utilization: busy,
        blocking: R::zero(),
        state_fractions: vec![(0, R::one() - busy), (1, busy)],
        cycle_length: Some(R::one() / lambda),
    })
}

/// D/D/k: in the stable regime the queue alternates between
/// `ceil(A) - 1` and `ceil(A)` busy servers.
pub fn ddk<R: Real>(lambda: R, mu: R, servers: u32) -> Result<DeterministicResult<R>> {
    check_pos("lambda", lambda)?;
    check_pos("mu", mu)?;
    if servers == 0 {
        return Err(Error::invalid("need at least one server"));
    }
    let a = lambda / mu;
    let k = R::of(servers as usize);
    if a > k {
        return Ok(DeterministicResult {
            mean_queue: MeanQueue::Unbounded,
            utilization: R::one(),
            blocking: R::zero(),
            state_fractions: vec![],
            cycle_length: None,
        });
    }
    let n_hat = ratio_ceil(a);
    let upper = n_hat.to_u64().unwrap_or(0);
    let p_upper = a - (n_hat - R::one());
    let p_lower = n_hat - a;
    let mut state_fractions = Vec::new();
    if upper > 0 && p_lower > R::zero() {
        state_fractions.push((upper - 1, p_lower));
    }
    state_fractions.push((upper, p_upper));
    Ok(DeterministicResult {
        mean_queue: MeanQueue::Finite(a),
        utilization: a / k,
        blocking: R::zero(),
        state_fractions,
        cycle_length: Some(R::one() / lambda),
    })
}

/// D/D/k/k: no losses up to `lambda = k mu`; beyond that every cycle of
/// `ceil(A)` arrivals admits exactly `k`.
pub fn ddkk<R: Real>(lambda: R, mu: R, servers: u32) -> Result<DeterministicResult<R>> {
    check_pos("lambda", lambda)?;
    check_pos("mu", mu)?;
    if servers == 0 {
        return Err(Error::invalid("need at least one server"));
    }
    let a = lambda / mu;
    let k = R::of(servers as usize);
    if a <= k {
        return ddk(lambda, mu, servers);
    }
    let ceil_a = ratio_ceil(a);
    let blocking = (ceil_a - k) / ceil_a;
    let mean_queue = k * a / ceil_a;
    let p_lower = k * (ceil_a - a) / ceil_a;
    let p_upper = R::one() - p_lower;
    let mut state_fractions = Vec::new();
    if p_lower > R::zero() {
        state_fractions.push((servers as u64 - 1, p_lower));
    }
    state_fractions.push((servers as u64, p_upper));
    Ok(DeterministicResult {
        mean_queue: MeanQueue::Finite(mean_queue),
        utilization: a / ceil_a,
        blocking,
        state_fractions,
        cycle_length: Some(ceil_a / lambda),
    })
}

/// D/D/1/N: zero blocking while `lambda <= mu`; overloaded, the buffer
/// stays at `N` or `N-1` and the loss rate is the input excess.
///
/// The overloaded state fractions have no closed form in general (they
/// depend on the phase between the arrival and departure grids), so they
/// are measured by the exact event-driven engine over a long horizon.
pub fn dd1n<R: Real>(lambda: R, mu: R, buffer: usize) -> Result<DeterministicResult<R>> {
    check_pos("lambda", lambda)?;
    check_pos("mu", mu)?;
    if buffer == 0 {
        return Err(Error::invalid("buffer must hold at least one customer"));
    }
    if lambda <= mu {
        let mut r = dd1(lambda, mu)?;
        // a single customer never meets a full buffer
        r.blocking = R::zero();
        return Ok(r);
    }
    let blocking = (lambda - mu) / lambda;
    let lf = lambda.to_f64().unwrap();
    let mf = mu.to_f64().unwrap();
    let horizon = 100_000usize;
    let tally = float_engine_dd1n(lf, mf, buffer, horizon);
    let state_fractions = tally
        .into_iter()
        .map(|(n, f)| (n, R::of_f64(f)))
        .collect::<Vec<_>>();
    let mean_queue = state_fractions
        .iter()
        .fold(R::zero(), |acc, &(n, f)| acc + R::of_f64(n as f64) * f);
    Ok(DeterministicResult {
        mean_queue: MeanQueue::Finite(mean_queue),
        utilization: R::one(),
        blocking,
        state_fractions,
        cycle_length: None,
    })
}

/// Time-fraction tally for the overloaded D/D/1/N pattern, measured after
/// the fill transient.
fn float_engine_dd1n(lambda: f64, mu: f64, buffer: usize, cycles: usize) -> Vec<(u64, f64)> {
    let ia = 1.0 / lambda;
    let sv = 1.0 / mu;
    // skip the deterministic fill, then tally over many service periods
    let warm = (buffer as f64 + 2.0) * (ia + sv);
    let horizon = warm + cycles as f64 * sv;
    let mut tally = std::collections::BTreeMap::<u64, f64>::new();
    let mut q: u64 = 0;
    let mut t = 0.0f64;
    let mut next_arrival = 0.0f64;
    let mut next_departure = f64::INFINITY;
    while t < horizon {
        let (event_time, is_departure) = if next_departure <= next_arrival {
            (next_departure, true)
        } else {
            (next_arrival, false)
        };
        if event_time > warm && t < horizon {
            let from = t.max(warm);
            let until = event_time.min(horizon);
            if until > from {
                *tally.entry(q).or_insert(0.0) += until - from;
            }
        }
        t = event_time;
        if is_departure {
            q -= 1;
            next_departure = if q > 0 { t + sv } else { f64::INFINITY };
        } else {
            if q < buffer as u64 {
                q += 1;
                if next_departure.is_infinite() {
                    next_departure = t + sv;
                }
            }
            next_arrival = t + ia;
        }
    }
    let total: f64 = tally.values().sum();
    tally.into_iter().map(|(n, w)| (n, w / total)).collect()
}

/// SLB/D/1/N: a single burst of `burst` packets at time zero into a buffer
/// of `capacity`; everything beyond the buffer is lost no matter how small
/// the long-run arrival rate is.
pub fn slb_d1n(burst: u64, capacity: u64) -> Result<f64> {
    if burst == 0 || capacity == 0 {
        return Err(Error::invalid("burst and buffer must be at least 1"));
    }
    if burst < capacity {
        return Ok(0.0);
    }
    Ok((burst - capacity) as f64 / burst as f64)
}
