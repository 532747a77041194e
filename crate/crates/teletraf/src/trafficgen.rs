//! Stochastic traffic-model generators and fitters: Poisson event streams
//! with split/superpose utilities, MMPP(2), autoregressive Gaussian AR(1),
//! exponential autoregressive EAR(1), and the long-range-dependent Poisson
//! Pareto burst process.
//!
//! Every generator draws from a caller-owned [`RngStream`], so fixed seeds
//! reproduce traces bit for bit.

use crate::randkit::RngStream;
use crate::{Error, Result};

/// Poisson event times on `[0, horizon)` via exponential gaps.
pub fn poisson_arrivals(rate: f64, horizon: f64, stream: &mut RngStream) -> Result<Vec<f64>> {
    if !(rate > 0.0) {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    let mut times = Vec::with_capacity((rate * horizon * 1.1) as usize + 16);
    let mut t = stream.exp_deviate(rate)?;
    while t < horizon {
        times.push(t);
        t += stream.exp_deviate(rate)?;
    }
    Ok(times)
}

/// Merges several event-time sequences into one sorted stream.
pub fn superpose(streams: &[&[f64]]) -> Vec<f64> {
    let mut merged: Vec<f64> = streams.iter().flat_map(|s| s.iter().copied()).collect();
    merged.sort_by(|a, b| a.partial_cmp(b).unwrap());
    merged
}

/// Randomly splits an event stream: each event goes left with probability
/// `p`, independently of everything else.
pub fn random_split(
    times: &[f64],
    p: f64,
    stream: &mut RngStream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("split probability must be in [0, 1], got {p}")));
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &t in times {
        if stream.uniform01() <= p {
            left.push(t);
        } else {
            right.push(t);
        }
    }
    Ok((left, right))
}

/// Two-mode Markov modulated Poisson process parameters.
///
/// The process emits at rate `lambda[m]` while in mode `m`, staying there
/// an exponential time with parameter `delta[m]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mmpp2Params {
    pub lambda0: f64,
    pub lambda1: f64,
    pub delta0: f64,
    pub delta1: f64,
}

impl Mmpp2Params {
    pub fn new(lambda0: f64, lambda1: f64, delta0: f64, delta1: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda0", lambda0),
            ("lambda1", lambda1),
            ("delta0", delta0),
            ("delta1", delta1),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Mmpp2Params { lambda0, lambda1, delta0, delta1 })
    }

    /// Scales both mode-duration parameters by `psi`: large `psi` flips
    /// modes fast and smooths the process toward Poisson at the average
    /// rate, small `psi` makes it bursty.
    pub fn with_mode_speed(&self, psi: f64) -> Result<Self> {
        Mmpp2Params::new(self.lambda0, self.lambda1, self.delta0 * psi, self.delta1 * psi)
    }

    /// Long-run average arrival rate.
    pub fn lambda_av(&self) -> f64 {
        (self.delta1 * self.lambda0 + self.delta0 * self.lambda1) / (self.delta0 + self.delta1)
    }
}

/// An MMPP(2) realization: event times plus the mode trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Mmpp2Trace {
    pub arrivals: Vec<f64>,
    /// `(switch_time, new_mode)` pairs; the first entry is `(0, start)`.
    pub modes: Vec<(f64, u8)>,
}

/// Generates MMPP(2) arrivals on `[0, horizon)`, starting from the
/// stationary mode distribution.
pub fn mmpp2_arrivals(
    params: &Mmpp2Params,
    horizon: f64,
    stream: &mut RngStream,
) -> Result<Mmpp2Trace> {
    if !(horizon > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    let p_mode0 = params.delta1 / (params.delta0 + params.delta1);
    let mut mode: u8 = if stream.uniform01() < p_mode0 { 0 } else { 1 };
    let mut t = 0.0;
    let mut arrivals = Vec::new();
    let mut modes = vec![(0.0, mode)];
    while t < horizon {
        let (lambda, delta) = match mode {
            0 => (params.lambda0, params.delta0),
            _ => (params.lambda1, params.delta1),
        };
        let sojourn_end = (t + stream.exp_deviate(delta)?).min(horizon);
        let mut next = t + stream.exp_deviate(lambda)?;
        while next < sojourn_end {
            arrivals.push(next);
            next += stream.exp_deviate(lambda)?;
        }
        t = sojourn_end;
        mode = 1 - mode;
        if t < horizon {
            modes.push((t, mode));
        }
    }
    Ok(Mmpp2Trace { arrivals, modes })
}

/// First-order autoregressive Gaussian slot-workload parameters:
/// `X_n = a X_{n-1} + b G_n` with `G_n ~ N(eta, 1)` IID.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Params {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
}

impl Ar1Params {
    pub fn new(a: f64, b: f64, eta: f64) -> Result<Self> {
        if !(a.abs() < 1.0) {
            return Err(Error::invalid(format!("|a| must be below 1, got {a}")));
        }
        if b < 0.0 {
            return Err(Error::invalid(format!("b must be >= 0, got {b}")));
        }
        Ok(Ar1Params { a, b, eta })
    }

    pub fn stationary_mean(&self) -> f64 {
        self.b * self.eta / (1.0 - self.a)
    }

    pub fn stationary_variance(&self) -> f64 {
        self.b * self.b / (1.0 - self.a * self.a)
    }

    /// Autocovariance sum `sum_{k>=1} U(k) = sigma^2 a / (1 - a)`.
    pub fn autocovariance_sum(&self) -> f64 {
        self.stationary_variance() * self.a / (1.0 - self.a)
    }
}

/// Fits AR(1) parameters to a target mean, variance and autocovariance sum:
/// `a = S/(S + sigma^2)`, `b = sqrt(sigma^2 (1 - a^2))`,
/// `eta = (1 - a) mean / b`.
pub fn ar1_fit(mean: f64, variance: f64, autocov_sum: f64) -> Result<Ar1Params> {
    if !(variance > 0.0) {
        return Err(Error::invalid(format!("variance must be positive, got {variance}")));
    }
    if autocov_sum < 0.0 {
        return Err(Error::invalid(format!("autocovariance sum must be >= 0, got {autocov_sum}")));
    }
    let denom = autocov_sum + variance;
    if denom == 0.0 {
        return Err(Error::invalid("degenerate moments: S + sigma^2 = 0"));
    }
    let a = autocov_sum / denom;
    let b = (variance * (1.0 - a * a)).sqrt();
    Ar1Params::new(a, b, (1.0 - a) * mean / b)
}

/// Generates `n` AR(1) slot workloads after discarding a warm-up of
/// `10 ceil(1/(1-a))` slots. Negative values are part of the model.
pub fn ar1_generate(params: &Ar1Params, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
    let warmup = (10.0 * (1.0 / (1.0 - params.a)).ceil()) as usize;
    let mut x = params.stationary_mean();
    let mut out = Vec::with_capacity(n);
    for i in 0..warmup + n {
        x = params.a * x + params.b * stream.gaussian_deviate(params.eta, 1.0)?;
        if i >= warmup {
            out.push(x);
        }
    }
    Ok(out)
}

/// Generates `n` EAR(1) inter-arrival times:
/// `D_n = a D_{n-1} + I_n E_n` with `P(I_n = 1) = 1 - a` and `E_n`
/// exponential with parameter `rate`. Each `D_n` is marginally exponential
/// with autocorrelation `a^k` at lag `k`.
pub fn ear1_interarrivals(
    rate: f64,
    a: f64,
    n: usize,
    stream: &mut RngStream,
) -> Result<Vec<f64>> {
    if !(rate > 0.0) {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    if !(0.0..1.0).contains(&a) {
        return Err(Error::invalid(format!("a must lie in [0, 1), got {a}")));
    }
    let mut d = stream.exp_deviate(rate)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let innovate = stream.uniform01() <= 1.0 - a;
        let e = stream.exp_deviate(rate)?; // drawn every slot to keep the stream aligned
        d = a * d + if innovate { e } else { 0.0 };
        out.push(d);
    }
    Ok(out)
}

/// Poisson Pareto burst process parameters: bursts start at Poisson epochs
/// of rate `burst_rate` per slot, transmit at `per_burst_rate` per slot,
/// and last a Pareto time with shape `gamma` scaled so the mean duration is
/// `1/(gamma - 1)` slots, which puts the mean workload per slot at
/// `burst_rate * per_burst_rate / (gamma - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpbpParams {
    pub burst_rate: f64,
    pub per_burst_rate: f64,
    pub gamma: f64,
}

impl PpbpParams {
    pub fn new(burst_rate: f64, per_burst_rate: f64, gamma: f64) -> Result<Self> {
        if !(burst_rate > 0.0) || !(per_burst_rate > 0.0) {
            return Err(Error::invalid("burst rate and per-burst rate must be positive"));
        }
        if gamma <= 1.0 {
            return Err(Error::Infeasible(format!(
                "shape {gamma} <= 1 gives infinite-mean bursts"
            )));
        }
        Ok(PpbpParams { burst_rate, per_burst_rate, gamma })
    }

    /// Builds the parameters from a Hurst target via `gamma = 3 - 2H`.
    pub fn from_hurst(burst_rate: f64, per_burst_rate: f64, hurst: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&hurst) {
            return Err(Error::invalid(format!("Hurst parameter must lie in [0.5, 1), got {hurst}")));
        }
        Self::new(burst_rate, per_burst_rate, 3.0 - 2.0 * hurst)
    }

    pub fn hurst(&self) -> f64 {
        (3.0 - self.gamma) / 2.0
    }

    /// Pareto scale for burst durations, `1/gamma`, so the mean duration is
    /// `1/(gamma - 1)`.
    pub fn duration_scale(&self) -> f64 {
        1.0 / self.gamma
    }

    /// Mean workload per slot, `lambda r / (gamma - 1)`.
    pub fn mean_slot_workload(&self) -> f64 {
        self.burst_rate * self.per_burst_rate / (self.gamma - 1.0)
    }
}

/// Residual length of a burst in progress at time zero (the equilibrium
/// distribution of the Pareto duration), by inversion.
fn ppbp_residual_duration(p: &PpbpParams, u: f64) -> f64 {
    let delta = p.duration_scale();
    let mean = 1.0 / (p.gamma - 1.0);
    let at_scale = delta / mean; // equilibrium CDF at the scale point
    if u <= at_scale {
        u * mean
    } else {
        let inner = 1.0 - (u * mean - delta) * (p.gamma - 1.0) / delta;
        delta * inner.powf(1.0 / (1.0 - p.gamma))
    }
}

/// Per-slot PPBP workload over `n` slots.
///
/// The process starts in equilibrium: bursts alive at time zero are drawn
/// with Poisson count and residual-life durations. A burst active for a
/// fraction of a slot contributes that fraction of its rate.
pub fn ppbp_workload(params: &PpbpParams, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
    let mut slots = vec![0.0f64; n];
    let horizon = n as f64;
    let add_burst = |start: f64, duration: f64, slots: &mut Vec<f64>| {
        let end = (start + duration).min(horizon);
        let mut s = start.max(0.0);
        while s < end {
            let idx = s.floor() as usize;
            if idx >= n {
                break;
            }
            let slot_end = (idx + 1) as f64;
            let covered = end.min(slot_end) - s;
            slots[idx] += covered * params.per_burst_rate;
            s = slot_end;
        }
    };

    // bursts already in progress: Poisson count with the M/G/inf mean
    let active_mean = params.burst_rate / (params.gamma - 1.0);
    let mut count = 0usize;
    let threshold = (-active_mean).exp();
    let mut prod = stream.uniform01();
    while prod > threshold {
        count += 1;
        prod *= stream.uniform01();
    }
    for _ in 0..count {
        let residual = ppbp_residual_duration(params, stream.uniform01());
        add_burst(0.0, residual, &mut slots);
    }

    // fresh bursts at Poisson epochs
    let mut t = stream.exp_deviate(params.burst_rate)?;
    while t < horizon {
        let duration =
            stream.pareto_deviate(params.gamma, params.duration_scale())?;
        add_burst(t, duration, &mut slots);
        t += stream.exp_deviate(params.burst_rate)?;
    }
    Ok(slots)
}

/// Sample autocovariance of lag `k` (biased-denominator estimator around
/// the sample mean).
pub fn autocovariance(series: &[f64], lag: usize) -> Result<f64> {
    if series.len() <= lag + 1 {
        return Err(Error::SampleSize { needed: lag + 2, got: series.len() });
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    for i in lag..n {
        acc += (series[i - lag] - mean) * (series[i] - mean);
    }
    Ok(acc / (n - lag) as f64)
}

/// Hurst estimate by variance-time regression: aggregate the series over
/// growing block sizes and fit `log Var[S_m] ~ 2H log m`.
pub fn estimate_hurst(series: &[f64], block_sizes: &[usize]) -> Result<f64> {
    if block_sizes.len() < 2 {
        return Err(Error::invalid("need at least two block sizes"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &m in block_sizes {
        if m == 0 || series.len() / m < 8 {
            return Err(Error::SampleSize { needed: 8 * m.max(1), got: series.len() });
        }
        let blocks = series.len() / m;
        let sums: Vec<f64> =
            (0..blocks).map(|b| series[b * m..(b + 1) * m].iter().sum()).collect();
        let mean = sums.iter().sum::<f64>() / blocks as f64;
        let var =
            sums.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (blocks - 1) as f64;
        if var > 0.0 {
            xs.push((m as f64).ln());
            ys.push(var.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::invalid("degenerate series: no variance across blocks"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx / 2.0)
}
