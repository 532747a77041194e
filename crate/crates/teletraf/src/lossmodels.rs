//! Closed-form loss-system calculators: the Erlang B family, Engset,
//! overflow-traffic approximations, preemptive-priority loss and the
//! saturated fluid estimate.

use crate::num::Real;
use crate::{Error, Result};

/// Offered traffic descriptor.
///
/// Offered load in erlangs is `A = arrival_rate * mean_holding_time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficLoad<R: Real> {
    arrival_rate: R,
    mean_holding_time: R,
}

impl<R: Real> TrafficLoad<R> {
    pub fn new(arrival_rate: R, mean_holding_time: R) -> Result<Self> {
        if arrival_rate < R::zero() || !arrival_rate.is_finite() {
            return Err(Error::invalid(format!("arrival rate must be >= 0, got {arrival_rate}")));
        }
        if !(mean_holding_time > R::zero()) || !mean_holding_time.is_finite() {
            return Err(Error::invalid(format!(
                "mean holding time must be positive, got {mean_holding_time}"
            )));
        }
        Ok(TrafficLoad { arrival_rate, mean_holding_time })
    }

    pub fn arrival_rate(&self) -> R {
        self.arrival_rate
    }

    pub fn mean_holding_time(&self) -> R {
        self.mean_holding_time
    }

    pub fn offered_erlangs(&self) -> R {
        self.arrival_rate * self.mean_holding_time
    }
}

/// Mean/variance description of a (generally non-Poisson) traffic stream,
/// as seen by an infinite server group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverflowTraffic<R: Real> {
    pub mean: R,
    pub variance: R,
    /// Peakedness `Z = V/M`; absent when the mean is zero.
    pub peakedness: Option<R>,
}

/// Outcome of a loss-system computation.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult<R: Real> {
    /// Probability that an arrival is blocked.
    pub blocking: R,
    /// Carried traffic `A(1 - blocking)` in erlangs.
    pub carried: R,
    /// Overflow (lost) traffic `A * blocking` in erlangs.
    pub overflow: R,
    /// Mean fraction of busy servers.
    pub utilization: R,
    /// Steady-state occupancy distribution, when the model provides one.
    pub state_dist: Option<Vec<R>>,
}

fn check_offered<R: Real>(a: R) -> Result<()> {
    if a < R::zero() || !a.is_finite() {
        return Err(Error::invalid(format!("offered traffic must be >= 0, got {a}")));
    }
    Ok(())
}

/// One step of the Erlang B recursion: `E_m` from `E_{m-1}`.
pub fn erlang_b_step<R: Real>(e_prev: R, offered: R, servers: u32) -> R {
    let ae = offered * e_prev;
    ae / (R::of(servers as usize) + ae)
}

/// Erlang B blocking probability `E_k(A)` by the forward recursion.
pub fn erlang_b<R: Real>(offered: R, servers: u32) -> Result<R> {
    check_offered(offered)?;
    let mut e = R::one();
    for m in 1..=servers {
        e = erlang_b_step(e, offered, m);
    }
    Ok(e)
}

/// Erlang B through the inverse recursion `I_m = 1 + (m/A) I_{m-1}`,
/// numerically stable for very large `A` and `k`.
pub fn erlang_b_inverse_recursion<R: Real>(offered: R, servers: u32) -> Result<R> {
    check_offered(offered)?;
    if servers == 0 {
        return Ok(R::one());
    }
    if offered == R::zero() {
        return Ok(R::zero());
    }
    let mut inv = R::one();
    for m in 1..=servers {
        inv = R::one() + R::of(m as usize) / offered * inv;
    }
    Ok(R::one() / inv)
}

/// Erlang B evaluated through the integral representation of the inverse,
/// `1/E_m(A) = A \int_0^inf e^{-Ay} (1+y)^m dy`, by adaptive quadrature.
///
/// The integrand is rescaled by its peak value so the inverse can exceed
/// the floating-point range (blocking far below underflow comes back as
/// zero rather than poisoning the quadrature).
pub fn erlang_b_jagerman(offered: f64, servers: u32) -> Result<f64> {
    if !(offered > 0.0) || !offered.is_finite() {
        return Err(Error::invalid(format!("offered traffic must be positive, got {offered}")));
    }
    // substitute t = A y: 1/E = int_0^inf e^-t (1 + t/A)^m dt,
    // with the peak of the exponent at t* = max(0, m - A)
    let m = servers as f64;
    let peak = (m - offered).max(0.0);
    let log_peak = -peak + m * (peak / offered).ln_1p();
    let f = move |t: f64| (-t + m * (t / offered).ln_1p() - log_peak).exp();
    let mut upper = peak + 40.0 + 10.0 * m.sqrt();
    while f(upper) > 1e-18 {
        upper *= 2.0;
        if upper > 1e12 {
            return Err(Error::NoConvergence { iterations: 0, residual: f(upper) });
        }
    }
    let integral = adaptive_simpson(&f, 0.0, upper, 1e-10)?;
    Ok((-log_peak).exp() / integral)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return Err(Error::NoConvergence { iterations: 0, residual: f64::NAN });
        }
        if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::NoConvergence { iterations: 0, residual: delta.abs() });
        }
        Ok(recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)?
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)?)
    }

    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    // the per-segment error estimate is optimistic on wide exponential
    // tails; spend a 100x tighter budget to land the requested accuracy
    let budget = rel_tol * whole.abs().max(1e-300) / 100.0;
    recurse(f, a, fa, b, fb, whole, m, fm, budget, 60)
}

/// Truncated-Poisson occupancy weights over `0..=k`, normalized.
///
/// Anchored at the distribution mode so very large `A` and `k` neither
/// overflow nor underflow.
fn truncated_poisson<R: Real>(offered: R, servers: u32) -> Vec<R> {
    let k = servers as usize;
    let mut w = vec![R::zero(); k + 1];
    if offered == R::zero() {
        w[0] = R::one();
        return w;
    }
    let mode = offered.floor().to_usize().unwrap_or(0).min(k);
    w[mode] = R::one();
    for n in (0..mode).rev() {
        // w[n] = w[n+1] * (n+1) / A
        w[n] = w[n + 1] * R::of(n + 1) / offered;
    }
    for n in mode + 1..=k {
        w[n] = w[n - 1] * offered / R::of(n);
    }
    let total = w.iter().fold(R::zero(), |acc, &x| acc + x);
    for x in &mut w {
        *x = *x / total;
    }
    w
}

/// Full M/M/k/k record: truncated-Poisson state distribution, blocking
/// `pi_k = E_k(A)`, carried traffic and utilization.
pub fn mmkk_stats<R: Real>(offered: R, servers: u32) -> Result<LossResult<R>> {
    check_offered(offered)?;
    let dist = truncated_poisson(offered, servers);
    let blocking = dist[servers as usize];
    let carried = (R::one() - blocking) * offered;
    let utilization = if servers == 0 { R::zero() } else { carried / R::of(servers as usize) };
    Ok(LossResult {
        blocking,
        carried,
        overflow: offered * blocking,
        utilization,
        state_dist: Some(dist),
    })
}

/// Mean and variance of the traffic overflowing an M/M/k/k group:
/// `M = A E_k(A)` and the Riordan variance formula.
pub fn overflow_of<R: Real>(offered: R, servers: u32) -> Result<OverflowTraffic<R>> {
    check_offered(offered)?;
    let m = offered * erlang_b(offered, servers)?;
    let variance = if m == R::zero() {
        R::zero()
    } else {
        m * (R::one() - m
            + offered / (R::of(servers as usize + 1) + m - offered))
    };
    let peakedness = if m > R::zero() { Some(variance / m) } else { None };
    Ok(OverflowTraffic { mean: m, variance, peakedness })
}

/// Rounding policy for the equivalent primary group size of the ERM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErmRounding {
    /// Round the equivalent group size to the nearest integer.
    #[default]
    Nearest,
    /// Round down; pessimistic about the primary group, hence conservative.
    Down,
}

/// Equivalent-system parameters used by the Equivalent Random Method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErmEquivalent<R: Real> {
    /// Poisson load offered to the fictitious primary group.
    pub offered: R,
    /// Fractional primary group size before rounding.
    pub servers_exact: R,
    /// Rounded primary group size actually used.
    pub servers: u32,
}

/// Fits the ERM equivalent system `(A_eq, N_eq)` to overflow moments
/// `(M, V)` via Rapp's approximation `A_eq = V + 3Z(Z-1)`.
pub fn erm_equivalent<R: Real>(
    mean: R,
    variance: R,
    rounding: ErmRounding,
) -> Result<ErmEquivalent<R>> {
    if !(mean > R::zero()) || !(variance > R::zero()) {
        return Err(Error::invalid(format!(
            "overflow moments must be positive, got mean {mean}, variance {variance}"
        )));
    }
    let z = variance / mean;
    let a_eq = variance + R::of(3) * z * (z - R::one());
    let n_exact = a_eq * (mean + z) / (mean + z - R::one()) - mean - R::one();
    let rounded = match rounding {
        ErmRounding::Nearest => n_exact.round(),
        ErmRounding::Down => n_exact.floor(),
    };
    // Z < 1 can push the equivalent group size below zero; clamp to the
    // Poisson case of no primary group.
    let servers = rounded.to_i64().unwrap_or(0).max(0) as u32;
    Ok(ErmEquivalent { offered: a_eq, servers_exact: n_exact, servers })
}

/// Equivalent Random Method estimate of the blocking probability of a
/// `k2`-server group offered traffic with moments `(M, V)`:
/// `E_{N_eq+k2}(A_eq) / E_{N_eq}(A_eq)`.
pub fn erm_blocking<R: Real>(mean: R, variance: R, k2: u32, rounding: ErmRounding) -> Result<R> {
    let eq = erm_equivalent(mean, variance, rounding)?;
    let primary = erlang_b(eq.offered, eq.servers)?;
    let both = erlang_b(eq.offered, eq.servers + k2)?;
    Ok(both / primary)
}

/// Hayward estimate: blocking of a `k2`-server group under traffic `(M, V)`
/// equals `E_{k2/Z}(M/Z)`, with the fractional server count rounded to the
/// nearest integer.
pub fn hayward_blocking<R: Real>(mean: R, variance: R, k2: u32) -> Result<R> {
    if !(mean > R::zero()) || !(variance > R::zero()) {
        return Err(Error::invalid(format!(
            "overflow moments must be positive, got mean {mean}, variance {variance}"
        )));
    }
    let z = variance / mean;
    let servers = (R::of(k2 as usize) / z).round().to_i64().unwrap_or(0).max(0) as u32;
    erlang_b(mean / z, servers)
}

/// Engset call congestion for `m_sources` finite sources offered to `k`
/// circuits, with per-free-source intensity `rho_hat = lambda_hat / mu`.
///
/// Computed by the recursion `B_i = rho(M-i) B_{i-1} / (i + rho(M-i) B_{i-1})`
/// from `B_0 = 1`. Zero whenever `k >= m_sources`.
pub fn engset_blocking<R: Real>(m_sources: u32, k: u32, rho_hat: R) -> Result<R> {
    if m_sources == 0 {
        return Err(Error::invalid("Engset model needs at least one source"));
    }
    if !(rho_hat > R::zero()) || !rho_hat.is_finite() {
        return Err(Error::invalid(format!("source intensity must be positive, got {rho_hat}")));
    }
    if k >= m_sources {
        return Ok(R::zero());
    }
    let m = R::of(m_sources as usize);
    let mut b = R::one();
    for i in 1..=k {
        let t = rho_hat * (m - R::of(i as usize)) * b;
        b = t / (R::of(i as usize) + t);
    }
    Ok(b)
}

/// Intended, offered and carried load of an Engset system, with its
/// occupancy distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct EngsetLoads<R: Real> {
    /// Load the sources would generate if never blocked.
    pub intended: R,
    /// Load actually offered, averaged over free-source intensities.
    pub offered: R,
    /// Mean number of busy circuits.
    pub carried: R,
    /// Call congestion.
    pub blocking: R,
    /// Occupancy distribution over `0..=min(M,k)` circuits.
    pub state_dist: Vec<R>,
}

/// Engset load bookkeeping: intended `T`, offered `T_o`, carried `T_c` and
/// the binomial-weighted state distribution.
pub fn engset_loads<R: Real>(m_sources: u32, k: u32, rho_hat: R) -> Result<EngsetLoads<R>> {
    let blocking = engset_blocking(m_sources, k, rho_hat)?;
    let m = R::of(m_sources as usize);
    let intended = rho_hat * m / (R::one() + rho_hat);
    let offered = rho_hat * m / (R::one() + rho_hat * (R::one() - blocking));
    let carried = offered * (R::one() - blocking);

    let top = k.min(m_sources) as usize;
    let mut w = vec![R::zero(); top + 1];
    w[0] = R::one();
    for n in 0..top {
        // pi_{n+1} / pi_n = rho (M - n) / (n + 1)
        w[n + 1] = w[n] * rho_hat * (m - R::of(n)) / R::of(n + 1);
    }
    let total = w.iter().fold(R::zero(), |acc, &x| acc + x);
    for x in &mut w {
        *x = *x / total;
    }
    Ok(EngsetLoads { intended, offered, carried, blocking, state_dist: w })
}

/// Recovers the Engset blocking probability when only the offered load
/// `T_o` is known, by fixed-point iteration on
/// `rho_hat = T_o / (M - T_o (1 - P_b))`.
///
/// Note that `T_o` may legitimately exceed the source count: blocked
/// sources return to the idle state and re-offer calls. Feasibility
/// requires the carried load `T_o (1 - P_b)` to stay below `M`, which is
/// checked along the iteration. Starting from `P_b = 1` the map descends
/// monotonically onto the fixed point.
pub fn engset_from_offered<R: Real>(m_sources: u32, k: u32, offered: R, tol: R) -> Result<R> {
    if k >= m_sources {
        return Ok(R::zero());
    }
    let m = R::of(m_sources as usize);
    if !(offered > R::zero()) || !offered.is_finite() {
        return Err(Error::invalid(format!("offered load must be positive, got {offered}")));
    }
    if !(tol > R::zero()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let mut pb = R::one();
    const MAX_ITER: usize = 100_000;
    for _ in 0..MAX_ITER {
        let denom = m - offered * (R::one() - pb);
        if !(denom > R::zero()) {
            return Err(Error::Infeasible(format!(
                "offered load {offered} implies a carried load of at least {m_sources} sources"
            )));
        }
        let next = engset_blocking(m_sources, k, offered / denom)?;
        if (next - pb).abs() < tol {
            return Ok(next);
        }
        pb = next;
    }
    Err(Error::NoConvergence { iterations: MAX_ITER, residual: pb.to_f64().unwrap_or(f64::NAN) })
}

/// Blocking probability of several Poisson classes sharing `k` servers:
/// the aggregate is Poisson with offered load `sum A_i`, so every class
/// sees `E_k(sum A_i)`.
pub fn multiclass_erlang_b<R: Real>(loads: &[TrafficLoad<R>], servers: u32) -> Result<R> {
    let total = loads.iter().fold(R::zero(), |acc, l| acc + l.offered_erlangs());
    erlang_b(total, servers)
}

/// Per-class blocking in an M/M/k/k system with preemptive priorities.
///
/// `offered[0]` is the highest class. A class with zero offered load has no
/// arrivals to block and its entry is `None`.
pub fn mmkk_preemptive_priority<R: Real>(offered: &[R], servers: u32) -> Result<Vec<Option<R>>> {
    let mut result = Vec::with_capacity(offered.len());
    let mut cum_prev = R::zero();
    let mut lost_prev = R::zero();
    for &a in offered {
        check_offered(a)?;
        let cum = cum_prev + a;
        let lost = cum * erlang_b(cum, servers)?;
        if a == R::zero() {
            result.push(None);
        } else {
            result.push(Some((lost - lost_prev) / a));
        }
        cum_prev = cum;
        lost_prev = lost;
    }
    Ok(result)
}

/// Fluid-flow blocking estimate for a saturated `k`-server system:
/// `P_b = (A - k)/A` with `A = lambda/mu`.
pub fn saturated_blocking<R: Real>(lambda: R, mu: R, servers: u32) -> Result<R> {
    if !(lambda > R::zero()) || !(mu > R::zero()) {
        return Err(Error::invalid("rates must be positive"));
    }
    let a = lambda / mu;
    let k = R::of(servers as usize);
    if a <= k {
        return Err(Error::NotSaturated {
            offered: a.to_f64().unwrap_or(f64::NAN),
            capacity: servers as f64,
        });
    }
    Ok((a - k) / a)
}
