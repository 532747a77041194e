//! Open Jackson network solver, the reduced-load Erlang fixed-point
//! approximation for circuit-switched networks, and optical-network
//! parameter conversion.

use crate::chainsolve::solve_dense;
use crate::delaymodels::{mm1_metrics, QueueMetrics};
use crate::lossmodels::erlang_b;
use crate::num::Real;
use crate::{Error, Result};

/// Open network of single-server FIFO queues with Markovian routing.
#[derive(Debug, Clone, PartialEq)]
pub struct JacksonSpec<R: Real> {
    external_rates: Vec<R>,
    service_rates: Vec<R>,
    routing: Vec<Vec<R>>,
}

impl<R: Real> JacksonSpec<R> {
    /// `routing[i][j]` is the probability of moving to queue `j` after
    /// service at queue `i`; row sums below one leave the network.
    pub fn new(
        external_rates: Vec<R>,
        service_rates: Vec<R>,
        routing: Vec<Vec<R>>,
    ) -> Result<Self> {
        let n = service_rates.len();
        if n == 0 {
            return Err(Error::invalid("network needs at least one queue"));
        }
        if external_rates.len() != n || routing.len() != n {
            return Err(Error::invalid("external rates, service rates and routing sizes differ"));
        }
        if external_rates.iter().any(|r| *r < R::zero() || !r.is_finite()) {
            return Err(Error::invalid("external rates must be >= 0"));
        }
        if service_rates.iter().any(|r| !(*r > R::zero())) {
            return Err(Error::invalid("service rates must be positive"));
        }
        for (i, row) in routing.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("routing row {i} has wrong length")));
            }
            let mut sum = R::zero();
            for &p in row {
                if p < R::zero() {
                    return Err(Error::invalid(format!("negative routing probability in row {i}")));
                }
                sum += p;
            }
            if sum > R::one() + R::of_f64(1e-12) {
                return Err(Error::invalid(format!("routing row {i} sums to {sum} > 1")));
            }
        }
        Ok(JacksonSpec { external_rates, service_rates, routing })
    }

    pub fn len(&self) -> usize {
        self.service_rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.service_rates.is_empty()
    }
}

/// Steady-state solution of a Jackson network.
#[derive(Debug, Clone, PartialEq)]
pub struct JacksonSolution<R: Real> {
    /// Total arrival rate into each queue from the traffic equations.
    pub arrival_rates: Vec<R>,
    /// Per-queue loads `rho_j`.
    pub loads: Vec<R>,
    /// Per-queue M/M/1 metric records (product form: each queue behaves as
    /// if independent).
    pub queues: Vec<QueueMetrics<R>>,
    /// Mean time in the network of an arbitrary external arrival.
    pub network_mean_delay: R,
    /// Probability that the whole network is empty.
    pub all_empty: R,
}

/// Solves the traffic equations `lambda = r + P^T lambda` and assembles the
/// product-form solution.
pub fn jackson_solve<R: Real>(spec: &JacksonSpec<R>) -> Result<JacksonSolution<R>> {
    let n = spec.len();
    // (I - P^T) lambda = r
    let mut a = vec![vec![R::zero(); n + 1]; n];
    for j in 0..n {
        for i in 0..n {
            let coeff = if i == j { R::one() } else { R::zero() };
            a[j][i] = coeff - spec.routing[i][j];
        }
        a[j][n] = spec.external_rates[j];
    }
    let arrival_rates = solve_dense(a)
        .map_err(|_| Error::Singular("traffic equations are singular; no exit path".into()))?;
    if arrival_rates.iter().any(|l| *l < -R::of_f64(1e-9) || !l.is_finite()) {
        return Err(Error::Singular("traffic equations yield negative flow".into()));
    }

    let mut loads = Vec::with_capacity(n);
    let mut queues = Vec::with_capacity(n);
    let mut queue_total = R::zero();
    let mut all_empty = R::one();
    for j in 0..n {
        let rho = arrival_rates[j] / spec.service_rates[j];
        if rho >= R::one() {
            return Err(Error::unstable(format!("queue {j} has rho = {rho} >= 1")));
        }
        let metrics = mm1_metrics(arrival_rates[j], spec.service_rates[j])?;
        queue_total += metrics.mean_queue;
        all_empty = all_empty * (R::one() - rho);
        loads.push(rho);
        queues.push(metrics);
    }
    let external_total = spec
        .external_rates
        .iter()
        .fold(R::zero(), |acc, &r| acc + r);
    if !(external_total > R::zero()) {
        return Err(Error::invalid("network receives no external traffic"));
    }
    Ok(JacksonSolution {
        arrival_rates,
        loads,
        queues,
        network_mean_delay: queue_total / external_total,
        all_empty,
    })
}

/// Link of a circuit-switched network.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: String,
    pub capacity: u32,
}

/// Route: an ordered list of link ids with the offered load in erlangs.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteSpec<R: Real> {
    pub links: Vec<String>,
    pub offered: R,
}

/// Circuit-switched network for the reduced-load approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitNetworkSpec<R: Real> {
    links: Vec<LinkSpec>,
    routes: Vec<RouteSpec<R>>,
    route_links: Vec<Vec<usize>>,
}

impl<R: Real> CircuitNetworkSpec<R> {
    pub fn new(links: Vec<LinkSpec>, routes: Vec<RouteSpec<R>>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::invalid("network needs at least one link"));
        }
        let mut route_links = Vec::with_capacity(routes.len());
        for (ri, route) in routes.iter().enumerate() {
            if route.offered < R::zero() {
                return Err(Error::invalid(format!("route {ri} has negative offered load")));
            }
            let mut ids = Vec::with_capacity(route.links.len());
            for name in &route.links {
                let idx = links
                    .iter()
                    .position(|l| &l.id == name)
                    .ok_or_else(|| Error::invalid(format!("route {ri} uses unknown link {name}")))?;
                ids.push(idx);
            }
            if ids.is_empty() {
                return Err(Error::invalid(format!("route {ri} has no links")));
            }
            route_links.push(ids);
        }
        Ok(CircuitNetworkSpec { links, routes, route_links })
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn routes(&self) -> &[RouteSpec<R>] {
        &self.routes
    }
}

/// Fixed point of the reduced-load approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct EfpaSolution<R: Real> {
    /// Per-link blocking probabilities at the fixed point.
    pub link_blocking: Vec<R>,
    /// Per-route blocking `1 - prod (1 - B_i)`.
    pub route_blocking: Vec<R>,
    /// Reduced offered load per link at the fixed point.
    pub link_offered: Vec<R>,
    pub iterations: usize,
    /// Largest change of a link blocking in the final iteration.
    pub residual: R,
}

/// Options for [`efpa_solve_with`].
#[derive(Debug, Clone, Copy)]
pub struct EfpaOptions<R: Real> {
    pub tol: R,
    pub max_iter: usize,
    /// Damping in (0, 1]; 1 is the plain Jacobi update.
    pub damping: R,
}

impl<R: Real> Default for EfpaOptions<R> {
    fn default() -> Self {
        EfpaOptions { tol: R::of_f64(1e-10), max_iter: 10_000, damping: R::one() }
    }
}

/// Erlang fixed-point approximation with default damping.
pub fn efpa_solve<R: Real>(
    spec: &CircuitNetworkSpec<R>,
    tol: R,
    max_iter: usize,
) -> Result<EfpaSolution<R>> {
    efpa_solve_with(spec, EfpaOptions { tol, max_iter, ..EfpaOptions::default() })
}

/// Erlang fixed-point approximation: iterate `B_j = E_kj(a_j)` with reduced
/// loads `a_j = sum_R A(R) prod_{i in R, i != j} (1 - B_i)` until the link
/// blocking vector settles. All links update synchronously per round.
pub fn efpa_solve_with<R: Real>(
    spec: &CircuitNetworkSpec<R>,
    opts: EfpaOptions<R>,
) -> Result<EfpaSolution<R>> {
    if !(opts.damping > R::zero() && opts.damping <= R::one()) {
        return Err(Error::invalid("damping must lie in (0, 1]"));
    }
    if !(opts.tol > R::zero()) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n = spec.links.len();
    let mut blocking = vec![R::zero(); n];
    let mut offered = vec![R::zero(); n];
    let mut prev_delta = R::infinity();
    for iter in 1..=opts.max_iter {
        for a in &mut offered {
            *a = R::zero();
        }
        for (route, ids) in spec.routes.iter().zip(&spec.route_links) {
            for &j in ids {
                let mut reduced = route.offered;
                for &i in ids {
                    if i != j {
                        reduced = reduced * (R::one() - blocking[i]);
                    }
                }
                offered[j] += reduced;
            }
        }
        let mut delta = R::zero();
        let mut next = vec![R::zero(); n];
        for j in 0..n {
            let b = erlang_b(offered[j], spec.links[j].capacity)?;
            next[j] = opts.damping * b + (R::one() - opts.damping) * blocking[j];
            delta = delta.max((next[j] - blocking[j]).abs());
        }
        blocking = next;
        if delta < opts.tol {
            let route_blocking = spec
                .route_links
                .iter()
                .map(|ids| {
                    let pass = ids
                        .iter()
                        .fold(R::one(), |acc, &i| acc * (R::one() - blocking[i]));
                    R::one() - pass
                })
                .collect();
            return Ok(EfpaSolution {
                link_blocking: blocking,
                route_blocking,
                link_offered: offered,
                iterations: iter,
                residual: delta,
            });
        }
        prev_delta = delta;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: prev_delta.to_f64().unwrap_or(f64::NAN),
    })
}

/// Offered-load description recovered from transport-level measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvertedLoad<R: Real> {
    /// Connection request rate `lambda = r/b`.
    pub arrival_rate: R,
    /// Mean holding time `h = b/(cU)`.
    pub mean_holding_time: R,
    /// Offered traffic `A = r/(cU)`.
    pub offered_erlangs: R,
}

/// Converts measured bit-rate `r`, mean connection volume `b`, wavelength
/// capacity `c` and utilization `U` into `(lambda, h, A)`.
pub fn convert_params<R: Real>(rate: R, volume: R, capacity: R, utilization: R) -> Result<ConvertedLoad<R>> {
    for (name, v) in [("bit-rate", rate), ("volume", volume), ("capacity", capacity)] {
        if !(v > R::zero()) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if !(utilization > R::zero() && utilization <= R::one()) {
        return Err(Error::invalid(format!("utilization must lie in (0, 1], got {utilization}")));
    }
    Ok(ConvertedLoad {
        arrival_rate: rate / volume,
        mean_holding_time: volume / (capacity * utilization),
        offered_erlangs: rate / (capacity * utilization),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn feedback_queue_example() {
        // two queues in series, queue 2 feeds back to 1 except 1e-3
        let spec = JacksonSpec::new(
            vec![1e-8_f64, 0.0],
            vec![1.0, 1.0],
            vec![vec![0.0, 1.0], vec![1.0 - 1e-3, 0.0]],
        )
        .unwrap();
        let sol = jackson_solve(&spec).unwrap();
        assert_relative_eq!(sol.arrival_rates[0], 1e-5, max_relative = 1e-9);
        assert_relative_eq!(sol.arrival_rates[1], 1e-5, max_relative = 1e-9);
        assert!((sol.queues[0].mean_delay - 1.0).abs() < 1e-4);
    }

    #[test]
    fn tandem_queues_are_plain_mm1() {
        let spec = JacksonSpec::new(
            vec![0.5, 0.0],
            vec![1.0, 1.0],
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let sol = jackson_solve(&spec).unwrap();
        let single = mm1_metrics(0.5, 1.0).unwrap();
        for q in &sol.queues {
            assert_relative_eq!(q.mean_queue, single.mean_queue, max_relative = 1e-10);
        }
        assert_relative_eq!(sol.all_empty, 0.25, max_relative = 1e-10);
        assert_relative_eq!(sol.network_mean_delay, 2.0 * single.mean_delay, max_relative = 1e-10);
    }

    #[test]
    fn little_holds_network_wide() {
        let spec = JacksonSpec::new(
            vec![0.6, 0.5, 0.0, 0.0, 0.0, 0.0],
            vec![1.0; 6],
            vec![
                vec![0.0, 0.4, 0.6, 0.0, 0.0, 0.0],
                vec![0.0, 0.1, 0.0, 0.7, 0.2, 0.0],
                vec![0.0, 0.0, 0.0, 0.3, 0.7, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.6],
                vec![0.0, 0.0, 0.0, 0.3, 0.0, 0.2],
                vec![0.0, 0.0, 0.3, 0.0, 0.0, 0.0],
            ],
        )
        .unwrap();
        let sol = jackson_solve(&spec).unwrap();
        // per-queue Little residual is zero by construction of mm1_metrics;
        // network-wide: sum E[Q_j] = (sum r_j) E[D]
        let total_q: f64 = sol.queues.iter().map(|q| q.mean_queue).sum();
        assert_relative_eq!(total_q, 1.1 * sol.network_mean_delay, max_relative = 1e-10);
        // spot checks on the traffic solution
        assert_relative_eq!(sol.arrival_rates[0], 0.6, max_relative = 1e-12);
        let lambda2: f64 = (0.6 * 0.4 + 0.5) / 0.9;
        assert_relative_eq!(sol.arrival_rates[1], lambda2, max_relative = 1e-10);
        assert!(sol.all_empty > 0.0 && sol.all_empty < 1.0);
    }

    #[test]
    fn unstable_queue_is_reported() {
        let spec = JacksonSpec::new(
            vec![0.5],
            vec![1.0],
            vec![vec![0.6]],
        )
        .unwrap();
        // lambda = 0.5 / 0.4 = 1.25 > mu
        assert!(matches!(jackson_solve(&spec), Err(Error::Unstable(_))));
    }

    #[test]
    fn efpa_single_link_is_erlang_b() {
        let spec = CircuitNetworkSpec::new(
            vec![LinkSpec { id: "a".into(), capacity: 10 }],
            vec![RouteSpec { links: vec!["a".into()], offered: 8.0 }],
        )
        .unwrap();
        let sol = efpa_solve(&spec, 1e-12, 100).unwrap();
        assert_relative_eq!(
            sol.link_blocking[0],
            erlang_b(8.0, 10).unwrap(),
            max_relative = 1e-10
        );
        assert_relative_eq!(sol.route_blocking[0], sol.link_blocking[0], max_relative = 1e-12);
    }

    #[test]
    fn efpa_reduced_load_is_below_offered() {
        // two routes share the middle link
        let spec = CircuitNetworkSpec::new(
            vec![
                LinkSpec { id: "left".into(), capacity: 5 },
                LinkSpec { id: "mid".into(), capacity: 5 },
                LinkSpec { id: "right".into(), capacity: 5 },
            ],
            vec![
                RouteSpec { links: vec!["left".into(), "mid".into()], offered: 4.0 },
                RouteSpec { links: vec!["mid".into(), "right".into()], offered: 4.0 },
            ],
        )
        .unwrap();
        let sol = efpa_solve(&spec, 1e-12, 10_000).unwrap();
        // the middle link carries both routes, each reduced by the blocking
        // on its other link
        assert!(sol.link_offered[1] < 8.0);
        assert!(sol.link_blocking[1] > sol.link_blocking[0]);
    }

    #[test]
    fn efpa_zero_load_blocks_nothing() {
        let spec = CircuitNetworkSpec::new(
            vec![
                LinkSpec { id: "a".into(), capacity: 4 },
                LinkSpec { id: "b".into(), capacity: 4 },
            ],
            vec![RouteSpec { links: vec!["a".into(), "b".into()], offered: 0.0 }],
        )
        .unwrap();
        let sol = efpa_solve(&spec, 1e-12, 100).unwrap();
        assert!(sol.link_blocking.iter().all(|&b| b == 0.0));
        assert!(sol.route_blocking.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn efpa_invariant_under_route_reordering() {
        let links = vec![
            LinkSpec { id: "a".into(), capacity: 10 },
            LinkSpec { id: "b".into(), capacity: 10 },
            LinkSpec { id: "c".into(), capacity: 10 },
        ];
        let r1 = RouteSpec { links: vec!["a".into(), "b".into()], offered: 8.0 };
        let r2 = RouteSpec { links: vec!["b".into(), "c".into()], offered: 8.0 };
        let r3 = RouteSpec { links: vec!["c".into(), "a".into()], offered: 8.0 };
        let fwd = CircuitNetworkSpec::new(links.clone(), vec![r1.clone(), r2.clone(), r3.clone()])
            .unwrap();
        let rev = CircuitNetworkSpec::new(links, vec![r3, r1, r2]).unwrap();
        let a = efpa_solve(&fwd, 1e-12, 10_000).unwrap();
        let b = efpa_solve(&rev, 1e-12, 10_000).unwrap();
        for (x, y) in a.link_blocking.iter().zip(&b.link_blocking) {
            assert_relative_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn efpa_link_blocking_not_below_isolated_erlang() {
        let spec = CircuitNetworkSpec::new(
            vec![
                LinkSpec { id: "a".into(), capacity: 10 },
                LinkSpec { id: "b".into(), capacity: 10 },
            ],
            vec![RouteSpec { links: vec!["a".into(), "b".into()], offered: 8.0 }],
        )
        .unwrap();
        let sol = efpa_solve(&spec, 1e-12, 10_000).unwrap();
        for j in 0..2 {
            let isolated = erlang_b(sol.link_offered[j], 10).unwrap();
            assert!(sol.link_blocking[j] >= isolated - 1e-10);
        }
    }

    #[test]
    fn parameter_conversion_identity() {
        let c = convert_params(20.0, 10.0, 40.0, 0.5).unwrap();
        assert_relative_eq!(c.offered_erlangs, 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.arrival_rate, 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            c.arrival_rate * c.mean_holding_time,
            c.offered_erlangs,
            max_relative = 1e-12
        );
        assert!(convert_params(20.0, 10.0, 40.0, 0.0).is_err());
    }
}
