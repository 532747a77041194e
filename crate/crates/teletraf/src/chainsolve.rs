//! Numerical solvers for birth–death and general finite continuous-time
//! Markov chains, plus the chain builders that need them: MMPP(2)/M/1/N,
//! M/Em/1/N and the slotted discrete-time queue.

use crate::num::Real;
use crate::randkit::Pmf;
use crate::{Error, Result};

/// State-dependent birth–death chain over states `0..=K`.
///
/// `arrival_rates[i]` is the arrival (birth) rate in state `i` for
/// `i = 0..=K`; the last entry is the rate of arrivals that find the chain
/// full. It drives no transition but is needed for call congestion, which
/// weighs arrivals by the state they see. `service_rates[i]` is the death
/// rate `d_{i+1}` out of state `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathSpec<R: Real> {
    arrival_rates: Vec<R>,
    service_rates: Vec<R>,
}

impl<R: Real> BirthDeathSpec<R> {
    /// `arrival_rates` has length `K+1`, `service_rates` length `K`.
    pub fn new(arrival_rates: Vec<R>, service_rates: Vec<R>) -> Result<Self> {
        if arrival_rates.len() != service_rates.len() + 1 {
            return Err(Error::invalid(format!(
                "need K+1 arrival rates and K service rates, got {} and {}",
                arrival_rates.len(),
                service_rates.len()
            )));
        }
        if arrival_rates.iter().chain(&service_rates).any(|r| *r < R::zero() || !r.is_finite()) {
            return Err(Error::invalid("rates must be finite and non-negative"));
        }
        if service_rates.is_empty() {
            return Err(Error::invalid("chain needs at least two states"));
        }
        Ok(BirthDeathSpec { arrival_rates, service_rates })
    }

    /// Constant arrival rate, state-dependent service: M/M/k/N-style chains.
    pub fn single_rate_arrivals(lambda: R, service_rates: Vec<R>) -> Result<Self> {
        let n = service_rates.len() + 1;
        BirthDeathSpec::new(vec![lambda; n], service_rates)
    }

    /// Largest state `K`.
    pub fn max_state(&self) -> usize {
        self.service_rates.len()
    }

    /// Birth rate out of state `i` (defined for `i < K`).
    pub fn birth_rate(&self, i: usize) -> R {
        self.arrival_rates[i]
    }

    /// Arrival rate seen in state `i` (defined for `i <= K`).
    pub fn arrival_rate(&self, i: usize) -> R {
        self.arrival_rates[i]
    }

    /// Death rate out of state `i` (defined for `1 <= i <= K`).
    pub fn death_rate(&self, i: usize) -> R {
        self.service_rates[i - 1]
    }
}

/// Steady-state probabilities over a labelled finite state set.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution<R: Real> {
    probabilities: Vec<R>,
}

impl<R: Real> StateDistribution<R> {
    fn from_unnormalized(mut weights: Vec<R>) -> Self {
        let total = weights.iter().fold(R::zero(), |acc, &w| acc + w);
        for w in &mut weights {
            *w = *w / total;
        }
        StateDistribution { probabilities: weights }
    }

    pub fn probabilities(&self) -> &[R] {
        &self.probabilities
    }

    pub fn prob(&self, state: usize) -> R {
        self.probabilities[state]
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Mean of the state index.
    pub fn mean_state(&self) -> R {
        self.probabilities
            .iter()
            .enumerate()
            .fold(R::zero(), |acc, (i, &p)| acc + R::of(i) * p)
    }
}

/// Steady state of a birth–death chain by the product-form recursion
/// `pi_i = (b_{i-1}/d_i) pi_{i-1}`.
///
/// Products accumulate in log space, so chains with `K` around `10^6` and
/// wildly unbalanced rates neither overflow nor underflow.
pub fn bd_steady_state<R: Real>(spec: &BirthDeathSpec<R>) -> Result<StateDistribution<R>> {
    let k = spec.max_state();
    let mut log_w = Vec::with_capacity(k + 1);
    log_w.push(R::zero());
    let mut acc = R::zero();
    for i in 1..=k {
        let b = spec.birth_rate(i - 1);
        let d = spec.death_rate(i);
        if b == R::zero() {
            // states above i are unreachable and carry no probability
            break;
        }
        if d == R::zero() {
            return Err(Error::Singular(format!(
                "state {i} has positive inflow but zero death rate"
            )));
        }
        acc += (b / d).ln();
        log_w.push(acc);
    }
    let max = log_w.iter().fold(R::neg_infinity(), |m, &x| m.max(x));
    let mut weights: Vec<R> = log_w.into_iter().map(|lw| (lw - max).exp()).collect();
    weights.resize(k + 1, R::zero());
    Ok(StateDistribution::from_unnormalized(weights))
}

/// Call congestion of a birth–death chain: the fraction of arrivals that
/// occur while the chain sits in the top state,
/// `P_b = lambda_K pi_K / sum_i lambda_i pi_i`.
pub fn bd_blocking<R: Real>(spec: &BirthDeathSpec<R>, dist: &StateDistribution<R>) -> R {
    let k = spec.max_state();
    let mut weighted = R::zero();
    for i in 0..=k {
        weighted += spec.arrival_rate(i) * dist.prob(i);
    }
    if weighted == R::zero() {
        return R::zero();
    }
    spec.arrival_rate(k) * dist.prob(k) / weighted
}

/// Mean first passage time of a birth–death chain from state `from` up to
/// state `to`, through the recursion `U_i = 1/b_i + (d_i/b_i) U_{i-1}`.
pub fn bd_first_passage_mean<R: Real>(
    spec: &BirthDeathSpec<R>,
    from: usize,
    to: usize,
) -> Result<R> {
    if to <= from || to > spec.max_state() {
        return Err(Error::invalid(format!(
            "passage must go upward within the chain, got {from} -> {to}"
        )));
    }
    let mut u_prev = R::zero();
    let mut total = R::zero();
    for i in 0..to {
        let b = spec.birth_rate(i);
        if b == R::zero() {
            if i >= from {
                return Err(Error::Unreachable(format!("birth rate is zero at state {i}")));
            }
            u_prev = R::zero();
            continue;
        }
        let u = if i == 0 {
            R::one() / b
        } else {
            R::one() / b + spec.death_rate(i) / b * u_prev
        };
        if i >= from {
            total += u;
        }
        u_prev = u;
    }
    Ok(total)
}

/// Infinitesimal generator of a finite continuous-time Markov chain.
///
/// Off-diagonal entries are transition rates; each diagonal entry is minus
/// its row sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix<R: Real> {
    rates: Vec<Vec<R>>,
}

impl<R: Real> GeneratorMatrix<R> {
    /// Validates shape, non-negative off-diagonals and zero row sums
    /// (within 1e-12 relative to the row scale).
    pub fn new(rates: Vec<Vec<R>>) -> Result<Self> {
        let n = rates.len();
        if n == 0 {
            return Err(Error::invalid("generator must be non-empty"));
        }
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("row {i} has length {}, want {n}", row.len())));
            }
            let mut sum = R::zero();
            let mut scale = R::zero();
            for (j, &q) in row.iter().enumerate() {
                if i != j && q < R::zero() {
                    return Err(Error::invalid(format!("negative rate at ({i}, {j})")));
                }
                sum += q;
                scale = scale.max(q.abs());
            }
            if sum.abs() > R::of_f64(1e-12) * scale.max(R::one()) {
                return Err(Error::invalid(format!("row {i} sums to {sum}, want 0")));
            }
        }
        Ok(GeneratorMatrix { rates })
    }

    /// Builds the generator from off-diagonal rates alone, filling each
    /// diagonal with minus the row sum.
    pub fn from_transition_rates(mut rates: Vec<Vec<R>>) -> Result<Self> {
        let n = rates.len();
        for (i, row) in rates.iter_mut().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("row {i} has length {}, want {n}", row.len())));
            }
            row[i] = R::zero();
            let mut sum = R::zero();
            for (j, &q) in row.iter().enumerate() {
                if i != j {
                    if q < R::zero() || !q.is_finite() {
                        return Err(Error::invalid(format!("invalid rate at ({i}, {j})")));
                    }
                    sum += q;
                }
            }
            row[i] = -sum;
        }
        Ok(GeneratorMatrix { rates })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rate(&self, from: usize, to: usize) -> R {
        self.rates[from][to]
    }

    pub fn rows(&self) -> &[Vec<R>] {
        &self.rates
    }

    /// Max-norm of the steady-state residual `Pi Q`.
    pub fn residual(&self, pi: &[R]) -> R {
        let n = self.len();
        let mut worst = R::zero();
        for j in 0..n {
            let mut flux = R::zero();
            for i in 0..n {
                flux += pi[i] * self.rates[i][j];
            }
            worst = worst.max(flux.abs());
        }
        worst
    }
}

/// Options for [`ctmc_solve_with`].
#[derive(Debug, Clone, Copy)]
pub struct CtmcOptions<R: Real> {
    pub tol: R,
    pub max_iter: usize,
    /// Under-relaxation factor in (0, 1]; 1 is the plain sweep.
    pub damping: R,
}

impl<R: Real> Default for CtmcOptions<R> {
    fn default() -> Self {
        CtmcOptions { tol: R::of_f64(1e-12), max_iter: 100_000, damping: R::one() }
    }
}

/// Steady state of an irreducible finite chain by successive substitution
/// with the default tolerance and iteration budget.
pub fn ctmc_solve<R: Real>(q: &GeneratorMatrix<R>, tol: R, max_iter: usize) -> Result<StateDistribution<R>> {
    ctmc_solve_with(q, CtmcOptions { tol, max_iter, ..CtmcOptions::default() })
}

/// Steady state of an irreducible finite chain.
///
/// Runs Gauss–Seidel sweeps on `pi_j = sum_{i != j} pi_i q_ij / |q_jj|` in
/// state order, renormalizing each sweep. If the residual stalls for 100
/// consecutive sweeps the solver falls back to a dense LU factorization of
/// the balance equations.
pub fn ctmc_solve_with<R: Real>(
    q: &GeneratorMatrix<R>,
    opts: CtmcOptions<R>,
) -> Result<StateDistribution<R>> {
    let n = q.len();
    if n == 1 {
        return Ok(StateDistribution { probabilities: vec![R::one()] });
    }
    // residuals are probability flux, so convergence is judged relative to
    // the rate scale of the chain
    let scale = (0..n)
        .map(|i| q.rate(i, i).abs())
        .fold(R::one(), |m, x| m.max(x));
    let allowed = opts.tol * scale;
    let mut pi = vec![R::one() / R::of(n); n];
    let mut best_residual = R::infinity();
    let mut stalled = 0usize;
    for _ in 0..opts.max_iter {
        for j in 0..n {
            let diag = q.rate(j, j);
            if diag == R::zero() {
                continue; // absorbing-looking state; leave to the fallback
            }
            let mut inflow = R::zero();
            for i in 0..n {
                if i != j {
                    inflow += pi[i] * q.rate(i, j);
                }
            }
            let updated = inflow / -diag;
            pi[j] = opts.damping * updated + (R::one() - opts.damping) * pi[j];
        }
        let total = pi.iter().fold(R::zero(), |acc, &p| acc + p);
        if !(total > R::zero()) || !total.is_finite() {
            return dense_steady_state(q, opts.tol);
        }
        for p in &mut pi {
            *p = *p / total;
        }
        let residual = q.residual(&pi);
        if residual < allowed {
            return Ok(StateDistribution { probabilities: pi });
        }
        if residual < best_residual * R::of_f64(0.999_999) {
            best_residual = residual;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 100 {
                return dense_steady_state(q, allowed);
            }
        }
    }
    // a last chance before reporting failure
    dense_steady_state(q, allowed)
}

/// Direct solution of `Pi Q = 0`, `sum Pi = 1` by Gaussian elimination.
fn dense_steady_state<R: Real>(
    q: &GeneratorMatrix<R>,
    allowed_residual: R,
) -> Result<StateDistribution<R>> {
    let n = q.len();
    // unknowns pi_0..pi_{n-1}: transpose the balance equations and replace
    // the last one with normalization
    let mut a = vec![vec![R::zero(); n + 1]; n];
    for j in 0..n - 1 {
        for i in 0..n {
            a[j][i] = q.rate(i, j);
        }
    }
    for i in 0..n {
        a[n - 1][i] = R::one();
    }
    a[n - 1][n] = R::one();

    let pi = solve_dense(a)?;
    let residual = q.residual(&pi);
    let scale = (0..n)
        .map(|i| q.rate(i, i).abs())
        .fold(R::one(), |m, x| m.max(x));
    if !residual.is_finite() || residual > allowed_residual.max(R::of_f64(1e-9) * scale) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(StateDistribution::from_unnormalized(pi))
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub(crate) fn solve_dense<R: Real>(mut a: Vec<Vec<R>>) -> Result<Vec<R>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < R::of_f64(1e-300) {
            return Err(Error::Singular("linear system is singular".into()));
        }
        a.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == R::zero() {
                continue;
            }
            for k in col..=n {
                let upd = a[col][k] * factor;
                a[row][k] = a[row][k] - upd;
            }
        }
    }
    let mut x = vec![R::zero(); n];
    for row in (0..n).rev() {
        let mut rhs = a[row][n];
        for k in row + 1..n {
            rhs = rhs - a[row][k] * x[k];
        }
        x[row] = rhs / a[row][row];
    }
    Ok(x)
}

/// MMPP(2)/M/1/N state label: queue size and arrival mode.
pub type QueueModeState = (usize, u8);

/// Builds the `2(N+1)`-state generator of the MMPP(2)/M/1/N queue.
///
/// States are ordered `(0,0), (0,1), (1,0), (1,1), ..., (N,0), (N,1)`:
/// queue size `i` paired with arrival mode `m`. Within a mode arrivals run
/// at `lambda_m` and mode flips happen at `delta_m`; the single server
/// drains at `mu` regardless of mode.
pub fn mmpp2_m1n_build<R: Real>(
    lambda0: R,
    lambda1: R,
    delta0: R,
    delta1: R,
    mu: R,
    buffer: usize,
) -> Result<(GeneratorMatrix<R>, Vec<QueueModeState>)> {
    for (name, r) in [
        ("lambda0", lambda0),
        ("lambda1", lambda1),
        ("delta0", delta0),
        ("delta1", delta1),
        ("mu", mu),
    ] {
        if r < R::zero() || !r.is_finite() {
            return Err(Error::invalid(format!("{name} must be >= 0, got {r}")));
        }
    }
    if buffer == 0 {
        return Err(Error::invalid("buffer must hold at least one customer"));
    }
    let n = buffer;
    let size = 2 * (n + 1);
    let idx = |i: usize, m: usize| 2 * i + m;
    let lambda = [lambda0, lambda1];
    let delta = [delta0, delta1];

    let mut rates = vec![vec![R::zero(); size]; size];
    let mut labels = Vec::with_capacity(size);
    for i in 0..=n {
        for m in 0..2usize {
            labels.push((i, m as u8));
            let row = &mut rates[idx(i, m)];
            row[idx(i, 1 - m)] = delta[m];
            if i < n {
                row[idx(i + 1, m)] = lambda[m];
            }
            if i > 0 {
                row[idx(i - 1, m)] = mu;
            }
        }
    }
    Ok((GeneratorMatrix::from_transition_rates(rates)?, labels))
}

/// Performance record of an MMPP(2)/M/1/N queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Mmpp2Metrics<R: Real> {
    /// Call congestion `(lambda_0 pi_N0 + lambda_1 pi_N1) / lambda_av`.
    pub blocking: R,
    /// Long-run average arrival rate.
    pub lambda_av: R,
    /// Marginal probabilities of the two arrival modes.
    pub mode_probs: [R; 2],
    /// Mean queue size.
    pub mean_queue: R,
    /// Fraction of time the server is busy.
    pub utilization: R,
    /// Queue-size marginals `pi_i = pi_i0 + pi_i1`.
    pub queue_dist: Vec<R>,
}

/// Metrics from a solved MMPP(2)/M/1/N distribution.
pub fn mmpp2_m1n_metrics<R: Real>(
    lambda0: R,
    lambda1: R,
    delta0: R,
    delta1: R,
    dist: &StateDistribution<R>,
) -> Result<Mmpp2Metrics<R>> {
    let size = dist.len();
    if size % 2 != 0 || size < 4 {
        return Err(Error::invalid("distribution is not over (queue, mode) pairs"));
    }
    let n = size / 2 - 1;
    let pi = |i: usize, m: usize| dist.prob(2 * i + m);

    let p_m0 = delta1 / (delta0 + delta1);
    let p_m1 = delta0 / (delta0 + delta1);
    let lambda_av = p_m0 * lambda0 + p_m1 * lambda1;

    let mut queue_dist = Vec::with_capacity(n + 1);
    let mut mean_queue = R::zero();
    for i in 0..=n {
        let p = pi(i, 0) + pi(i, 1);
        mean_queue += R::of(i) * p;
        queue_dist.push(p);
    }
    let blocking = (lambda0 * pi(n, 0) + lambda1 * pi(n, 1)) / lambda_av;
    let utilization = R::one() - queue_dist[0];
    Ok(Mmpp2Metrics {
        blocking,
        lambda_av,
        mode_probs: [p_m0, p_m1],
        mean_queue,
        utilization,
        queue_dist,
    })
}

/// Performance record of an M/Em/1/N queue.
#[derive(Debug, Clone, PartialEq)]
pub struct MEm1nMetrics<R: Real> {
    /// Distribution over remaining service phases `0..=mN`.
    pub phase_dist: Vec<R>,
    /// Distribution over customers `0..=N`.
    pub customer_dist: Vec<R>,
    /// Blocking probability `P_N`.
    pub blocking: R,
    /// Mean number of customers.
    pub mean_queue: R,
    /// Mean delay of an admitted customer.
    pub mean_delay: R,
}

/// Solves the M/Em/1/N queue on its phase chain.
///
/// The state is the total number of residual service phases; each phase
/// completes at rate `m*mu` and an admitted arrival adds `m` phases, allowed
/// exactly when the system holds fewer than `N` customers (a customer with
/// `1..=m` phases left counts as one customer).
pub fn mem1n_solve<R: Real>(lambda: R, mu: R, phases: usize, buffer: usize) -> Result<MEm1nMetrics<R>> {
    if !(lambda > R::zero()) || !(mu > R::zero()) {
        return Err(Error::invalid("rates must be positive"));
    }
    if phases == 0 || buffer == 0 {
        return Err(Error::invalid("phase count and buffer must be at least 1"));
    }
    let m = phases;
    let n = buffer;
    let size = m * n + 1;
    let phase_rate = R::of(m) * mu;

    let mut rates = vec![vec![R::zero(); size]; size];
    for s in 0..size {
        let customers = s.div_ceil(m);
        if customers < n {
            rates[s][s + m] = lambda;
        }
        if s > 0 {
            rates[s][s - 1] = phase_rate;
        }
    }
    let q = GeneratorMatrix::from_transition_rates(rates)?;
    let dist = ctmc_solve_with(&q, CtmcOptions::default())?;

    let phase_dist = dist.probabilities().to_vec();
    let mut customer_dist = vec![R::zero(); n + 1];
    for (s, &p) in phase_dist.iter().enumerate() {
        customer_dist[s.div_ceil(m)] += p;
    }
    let blocking = customer_dist[n];
    let mean_queue = customer_dist
        .iter()
        .enumerate()
        .fold(R::zero(), |acc, (i, &p)| acc + R::of(i) * p);
    let mean_delay = mean_queue / (lambda * (R::one() - blocking));
    Ok(MEm1nMetrics { phase_dist, customer_dist, blocking, mean_queue, mean_delay })
}

/// Steady state of the slotted discrete-time queue.
#[derive(Debug, Clone, PartialEq)]
pub struct DtQueueSolution<R: Real> {
    /// Queue-size probabilities at slot boundaries, from size 0 up.
    pub queue_dist: Vec<R>,
    /// Probability of an empty queue at the slot boundary.
    pub boundary_empty: R,
    /// Long-run fraction of idle slots, `pi_0 a_0 = 1 - A'(1)`.
    pub idle_fraction: R,
    /// Mean queue size at slot boundaries.
    pub mean_queue: R,
}

/// Solves the discrete-time queue in which `arrivals.prob(i)` cells join at
/// each slot boundary and one cell is served per busy slot.
///
/// `pi_0 = (1 - A'(1))/a_0` comes from the transform solution; the rest of
/// the distribution follows from the forward recursion on the balance
/// equations, truncated once the unaccounted tail mass drops below
/// `tail_tol`.
pub fn dt_queue_solve<R: Real>(arrivals: &Pmf<R>, tail_tol: R) -> Result<DtQueueSolution<R>> {
    if arrivals.support_min() != 0 {
        return Err(Error::invalid("arrival pmf must start at 0 cells"));
    }
    if !(tail_tol > R::zero()) {
        return Err(Error::invalid(format!("tail tolerance must be positive, got {tail_tol}")));
    }
    let a = arrivals.probabilities();
    let a0 = a[0];
    if a0 == R::zero() {
        return Err(Error::invalid("a_0 = 0: queue can never drain within a slot"));
    }
    let mean_arrivals = arrivals.mean();
    if mean_arrivals >= R::one() {
        return Err(Error::unstable(format!(
            "mean arrivals per slot is {mean_arrivals}, must be < 1"
        )));
    }

    let at = |j: i64| -> R {
        if j < 0 {
            R::zero()
        } else {
            arrivals.prob(j)
        }
    };

    let mut pi = vec![(R::one() - mean_arrivals) / a0];
    let mut accounted = pi[0];
    let max_states = 10_000_000usize;
    let mut n: usize = 0;
    while accounted < R::one() - tail_tol && pi.len() < max_states {
        let next = if n == 0 {
            // the empty state keeps itself with zero OR one arrival, so its
            // balance row is special: pi_0 = pi_0 (a_0 + a_1) + pi_1 a_0
            let a1 = at(1);
            (pi[0] * (R::one() - a0 - a1) / a0).max(R::zero())
        } else {
            // pi_{n+1} = (pi_n - sum_{i=0}^{n} pi_i a_{n+1-i}) / a_0
            let mut acc = pi[n];
            for (i, &p) in pi.iter().enumerate() {
                acc = acc - p * at(n as i64 + 1 - i as i64);
            }
            (acc / a0).max(R::zero())
        };
        accounted += next;
        pi.push(next);
        n += 1;
    }

    let mean_queue = pi.iter().enumerate().fold(R::zero(), |m, (i, &p)| m + R::of(i) * p);
    Ok(DtQueueSolution {
        boundary_empty: pi[0],
        idle_fraction: pi[0] * a0,
        queue_dist: pi,
        mean_queue,
    })
}
