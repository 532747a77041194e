//! Multi-service loss model: several Poisson classes share `k` servers,
//! class `i` seizing `s_i` servers per call. Exact product-form solution by
//! feasible-state enumeration, per-class blocking, and the occupancy
//! recursion that computes the same blocking in `O(kI)`.

use crate::num::Real;
use crate::{Error, Result};

/// One class of customers in the multi-service loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceClass<R: Real> {
    slots: u32,
    arrival_rate: R,
    mean_holding_time: R,
}

impl<R: Real> ServiceClass<R> {
    pub fn new(slots: u32, arrival_rate: R, mean_holding_time: R) -> Result<Self> {
        if slots == 0 {
            return Err(Error::invalid("a class must occupy at least one server"));
        }
        if arrival_rate < R::zero() || !arrival_rate.is_finite() {
            return Err(Error::invalid(format!("arrival rate must be >= 0, got {arrival_rate}")));
        }
        if !(mean_holding_time > R::zero()) {
            return Err(Error::invalid(format!(
                "mean holding time must be positive, got {mean_holding_time}"
            )));
        }
        Ok(ServiceClass { slots, arrival_rate, mean_holding_time })
    }

    pub fn slots(&self) -> u32 {
        self.slots
    }

    pub fn arrival_rate(&self) -> R {
        self.arrival_rate
    }

    pub fn mean_holding_time(&self) -> R {
        self.mean_holding_time
    }

    /// Offered load of the class in erlangs of calls.
    pub fn offered(&self) -> R {
        self.arrival_rate * self.mean_holding_time
    }
}

/// Enumerated feasible states with their product-form probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleStateSet<R: Real> {
    states: Vec<Vec<u32>>,
    probabilities: Vec<R>,
    slots: Vec<u32>,
    capacity: u32,
}

impl<R: Real> FeasibleStateSet<R> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States in lexicographic order, paired with their probabilities.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], R)> + '_ {
        self.states.iter().map(|s| s.as_slice()).zip(self.probabilities.iter().copied())
    }

    /// Probability of one state vector, zero if infeasible.
    pub fn prob(&self, state: &[u32]) -> R {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probabilities[i])
            .unwrap_or_else(R::zero)
    }

    /// Busy servers in a state.
    fn occupancy(&self, state: &[u32]) -> u32 {
        state.iter().zip(&self.slots).map(|(&j, &s)| j * s).sum()
    }

    /// Per-class blocking probabilities: class `m` is blocked in every state
    /// whose free capacity is below `s_m`.
    pub fn blocking(&self) -> Vec<R> {
        let mut blocked = vec![R::zero(); self.slots.len()];
        for (state, p) in self.iter() {
            let used = self.occupancy(state);
            for (m, &s) in self.slots.iter().enumerate() {
                if used + s > self.capacity {
                    blocked[m] += p;
                }
            }
        }
        blocked
    }

    /// Marginal distribution of the number of class-`m` calls.
    pub fn class_marginal(&self, m: usize) -> Vec<R> {
        let max = self.states.iter().map(|s| s[m]).max().unwrap_or(0) as usize;
        let mut marginal = vec![R::zero(); max + 1];
        for (state, p) in self.iter() {
            marginal[state[m] as usize] += p;
        }
        marginal
    }
}

fn class_loads<R: Real>(classes: &[ServiceClass<R>]) -> Result<(Vec<u32>, Vec<R>)> {
    if classes.is_empty() {
        return Err(Error::invalid("need at least one class"));
    }
    let slots = classes.iter().map(|c| c.slots).collect();
    let loads = classes.iter().map(|c| c.offered()).collect();
    Ok((slots, loads))
}

/// Exact product-form solution over all feasible states
/// `sum_i j_i s_i <= capacity`.
///
/// Guarded at ten million states; larger instances belong to
/// [`ms_occupancy_recursion`]. Normalization uses compensated summation so
/// million-state sums keep full precision.
pub fn ms_enumerate_solve<R: Real>(
    classes: &[ServiceClass<R>],
    capacity: u32,
) -> Result<FeasibleStateSet<R>> {
    let (slots, loads) = class_loads(classes)?;

    // count first, to fail fast on oversized instances
    let mut bound: u128 = 1;
    for &s in &slots {
        bound = bound.saturating_mul((capacity / s + 1) as u128);
        if bound > 10_000_000 {
            return Err(Error::TooLarge(format!(
                "more than 1e7 candidate states for capacity {capacity}; use the occupancy recursion"
            )));
        }
    }

    let mut states = Vec::new();
    let mut weights: Vec<R> = Vec::new();
    let mut state = vec![0u32; slots.len()];
    // lexicographic depth-first walk over feasible vectors
    fn walk<R: Real>(
        class: usize,
        free: u32,
        weight: R,
        slots: &[u32],
        loads: &[R],
        state: &mut Vec<u32>,
        states: &mut Vec<Vec<u32>>,
        weights: &mut Vec<R>,
    ) {
        if class == slots.len() {
            states.push(state.clone());
            weights.push(weight);
            return;
        }
        let mut w = weight;
        let mut count = 0u32;
        loop {
            state[class] = count;
            walk(class + 1, free - count * slots[class], w, slots, loads, state, states, weights);
            count += 1;
            if count * slots[class] > free {
                break;
            }
            // A^j / j! built incrementally
            w = w * loads[class] / R::of(count as usize);
        }
        state[class] = 0;
    }
    walk(0, capacity, R::one(), &slots, &loads, &mut state, &mut states, &mut weights);

    // Kahan-compensated normalization
    let mut total = R::zero();
    let mut comp = R::zero();
    for &w in &weights {
        let y = w - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    for w in &mut weights {
        *w = *w / total;
    }
    Ok(FeasibleStateSet { states, probabilities: weights, slots, capacity })
}

/// Per-class blocking probabilities by exact enumeration.
pub fn ms_blocking<R: Real>(classes: &[ServiceClass<R>], capacity: u32) -> Result<Vec<R>> {
    Ok(ms_enumerate_solve(classes, capacity)?.blocking())
}

/// Per-class blocking probabilities by the occupancy recursion
/// (Kaufman–Roberts): `c g(c) = sum_i A_i s_i g(c - s_i)` over busy-server
/// counts `c = 0..=capacity`. Runs in `O(capacity * classes)`.
pub fn ms_occupancy_recursion<R: Real>(
    classes: &[ServiceClass<R>],
    capacity: u32,
) -> Result<Vec<R>> {
    let (slots, loads) = class_loads(classes)?;
    let cap = capacity as usize;
    let mut g = vec![R::zero(); cap + 1];
    g[0] = R::one();
    for c in 1..=cap {
        let mut acc = R::zero();
        for (i, &s) in slots.iter().enumerate() {
            let s = s as usize;
            if s <= c {
                acc += loads[i] * R::of(s) * g[c - s];
            }
        }
        g[c] = acc / R::of(c);
        // rescale occasionally: g grows factorially for large loads
        if g[c] > R::of_f64(1e250) {
            for v in g[..=c].iter_mut() {
                *v = *v / R::of_f64(1e250);
            }
        }
    }
    let total = g.iter().fold(R::zero(), |acc, &x| acc + x);
    let mut blocking = Vec::with_capacity(slots.len());
    for &s in &slots {
        let from = cap + 1 - (s as usize).min(cap + 1);
        let tail = g[from..].iter().fold(R::zero(), |acc, &x| acc + x);
        blocking.push(tail / total);
    }
    Ok(blocking)
}

/// One row of the critical-loading probe.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalScalingRow<R: Real> {
    pub capacity: u32,
    /// Per-class blocking at this scale.
    pub blocking: Vec<R>,
    /// Per-class `B(i) sqrt(k) / s_i`; converges to a common constant.
    pub normalized: Vec<R>,
}

/// Scales a class mix so the offered server load matches each capacity in
/// `capacities` (critical loading) and tabulates how `B(i) sqrt(k) / s_i`
/// settles to a shared constant.
///
/// The input classes act as a template: their arrival rates are scaled by a
/// common factor at each capacity.
pub fn ms_critical_scaling_probe<R: Real>(
    classes: &[ServiceClass<R>],
    capacities: &[u32],
) -> Result<Vec<CriticalScalingRow<R>>> {
    let (slots, loads) = class_loads(classes)?;
    let server_load: R = slots
        .iter()
        .zip(&loads)
        .fold(R::zero(), |acc, (&s, &a)| acc + R::of(s as usize) * a);
    if !(server_load > R::zero()) {
        return Err(Error::invalid("template classes carry no load"));
    }
    let mut rows = Vec::with_capacity(capacities.len());
    for &cap in capacities {
        let factor = R::of(cap as usize) / server_load;
        let scaled: Vec<ServiceClass<R>> = classes
            .iter()
            .map(|c| ServiceClass {
                slots: c.slots,
                arrival_rate: c.arrival_rate * factor,
                mean_holding_time: c.mean_holding_time,
            })
            .collect();
        let blocking = ms_occupancy_recursion(&scaled, cap)?;
        let sqrt_k = R::of(cap as usize).sqrt();
        let normalized = blocking
            .iter()
            .zip(&slots)
            .map(|(&b, &s)| b * sqrt_k / R::of(s as usize))
            .collect();
        rows.push(CriticalScalingRow { capacity: cap, blocking, normalized });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn voice_video<R: Real>() -> Vec<ServiceClass<R>> {
        vec![
            ServiceClass::new(1, R::of_f64(0.3), R::of(3)).unwrap(),
            ServiceClass::new(2, R::of_f64(0.2), R::of(5)).unwrap(),
        ]
    }

    #[test]
    fn two_channel_voice_video_example() {
        // A1 = 0.9, A2 = 1.0, k = 2: states (0,0) (1,0) (2,0) (0,1)
        let set = ms_enumerate_solve(&voice_video::<f64>(), 2).unwrap();
        assert_eq!(set.len(), 4);
        let c = 1.0 + 0.9 + 0.405 + 1.0;
        assert_relative_eq!(set.prob(&[0, 0]), 1.0 / c, max_relative = 1e-12);
        assert_relative_eq!(set.prob(&[2, 0]), 0.405 / c, max_relative = 1e-12);
        let blocking = set.blocking();
        assert_relative_eq!(blocking[0], 1.405 / c, max_relative = 1e-12);
        assert_relative_eq!(blocking[1], 2.305 / c, max_relative = 1e-12);
        // the commonly quoted answers 0.425 and 0.7 are these values rounded
        assert!((blocking[0] - 0.425).abs() < 5e-4);
        assert!((blocking[1] - 0.7).abs() < 5e-2);
    }

    #[test]
    fn three_channel_voice_video_example() {
        let set = ms_enumerate_solve(&voice_video::<f64>(), 3).unwrap();
        assert_eq!(set.len(), 6);
        // exact product form: C = 1 + .9 + .405 + .1215 + 1 + .9
        let c = 1.0 + 0.9 + 0.405 + 0.1215 + 1.0 + 0.9;
        assert_relative_eq!(set.prob(&[0, 0]), 1.0 / c, max_relative = 1e-12);
        assert_relative_eq!(set.prob(&[3, 0]), 0.1215 / c, max_relative = 1e-12);
        assert_relative_eq!(set.prob(&[1, 1]), 0.9 / c, max_relative = 1e-12);
        let blocking = set.blocking();
        assert_relative_eq!(blocking[0], (0.1215 + 0.9) / c, max_relative = 1e-12);
        assert_relative_eq!(
            blocking[1],
            (0.405 + 0.1215 + 1.0 + 0.9) / c,
            max_relative = 1e-12
        );
    }

    #[test]
    fn single_class_reduces_to_erlang() {
        let classes = vec![ServiceClass::new(1, 4.0, 1.0).unwrap()];
        let set = ms_enumerate_solve(&classes, 6).unwrap();
        let stats = crate::lossmodels::mmkk_stats(4.0, 6).unwrap();
        let dist = stats.state_dist.unwrap();
        for (state, p) in set.iter() {
            assert_relative_eq!(p, dist[state[0] as usize], max_relative = 1e-12);
        }
        assert_relative_eq!(set.blocking()[0], stats.blocking, max_relative = 1e-12);
        let rec = ms_occupancy_recursion(&classes, 6).unwrap();
        assert_relative_eq!(rec[0], stats.blocking, max_relative = 1e-12);
    }

    #[test]
    fn recursion_matches_enumeration() {
        let cases: Vec<(Vec<ServiceClass<f64>>, u32)> = vec![
            (voice_video(), 2),
            (voice_video(), 3),
            (
                vec![
                    ServiceClass::new(1, 1.0, 1.0).unwrap(),
                    ServiceClass::new(2, 1.0, 1.0).unwrap(),
                ],
                3,
            ),
            (
                vec![
                    ServiceClass::new(2, 1.5, 1.0).unwrap(),
                    ServiceClass::new(3, 0.4, 2.0).unwrap(),
                    ServiceClass::new(5, 0.1, 4.0).unwrap(),
                ],
                24,
            ),
        ];
        for (classes, cap) in cases {
            let enumerated = ms_blocking(&classes, cap).unwrap();
            let recursed = ms_occupancy_recursion(&classes, cap).unwrap();
            for (a, b) in enumerated.iter().zip(&recursed) {
                assert!((a - b).abs() < 1e-10, "capacity {cap}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn equal_blocking_construction() {
        // s = (6, 5) on k = 6: either class needs an empty system
        let classes = vec![
            ServiceClass::new(6, 0.5, 1.0).unwrap(),
            ServiceClass::new(5, 0.25, 2.0).unwrap(),
        ];
        let blocking = ms_blocking(&classes, 6).unwrap();
        assert_relative_eq!(blocking[0], blocking[1], max_relative = 1e-12);
    }

    #[test]
    fn detailed_balance_on_enumerated_states() {
        let classes = voice_video::<f64>();
        let set = ms_enumerate_solve(&classes, 3).unwrap();
        for (state, p) in set.iter() {
            for (i, class) in classes.iter().enumerate() {
                let mut up = state.to_vec();
                up[i] += 1;
                let p_up = set.prob(&up);
                if p_up > 0.0 {
                    let lhs: f64 = p * class.arrival_rate();
                    let rhs =
                        p_up * (up[i] as f64) / class.mean_holding_time();
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn huge_capacity_marginals_are_poisson() {
        // far from the capacity constraint the classes decouple
        let classes = vec![
            ServiceClass::new(1, 2.0, 1.0).unwrap(),
            ServiceClass::new(2, 1.0, 1.0).unwrap(),
        ];
        let set = ms_enumerate_solve(&classes, 60).unwrap();
        let marginal = set.class_marginal(0);
        let pmf = crate::randkit::poisson_pmf(2.0f64, 1e-15).unwrap();
        let tv: f64 = (0..marginal.len())
            .map(|i| (marginal[i] - pmf.prob(i as i64)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 1e-6, "total variation {tv}");
    }

    #[test]
    fn recursion_is_fast_for_large_capacity() {
        let classes = vec![
            ServiceClass::new(1, 1500.0, 1.0).unwrap(),
            ServiceClass::new(2, 800.0, 1.0).unwrap(),
            ServiceClass::new(4, 350.0, 2.0).unwrap(),
            ServiceClass::new(8, 100.0, 1.5).unwrap(),
            ServiceClass::new(16, 40.0, 2.5).unwrap(),
        ];
        let start = std::time::Instant::now();
        let blocking = ms_occupancy_recursion(&classes, 10_000).unwrap();
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert!(blocking.iter().all(|b| (0.0..=1.0).contains(b)));
        // larger slot requirements are blocked more
        for w in blocking.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn enumeration_guard_trips() {
        let classes = vec![
            ServiceClass::new(1, 1.0, 1.0).unwrap(),
            ServiceClass::new(1, 1.0, 1.0).unwrap(),
            ServiceClass::new(1, 1.0, 1.0).unwrap(),
        ];
        assert!(matches!(
            ms_enumerate_solve(&classes, 4000),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn critical_scaling_ratio_approaches_slot_ratio() {
        let template = vec![
            ServiceClass::new(1, 1.0f64, 1.0).unwrap(),
            ServiceClass::new(2, 0.5, 1.0).unwrap(),
        ];
        let rows = ms_critical_scaling_probe(&template, &[200, 2000]).unwrap();
        let last = rows.last().unwrap();
        let ratio = last.blocking[1] / last.blocking[0];
        assert!((ratio - 2.0).abs() < 0.1, "B2/B1 = {ratio}");
        // the normalized constants agree across classes
        let n = &last.normalized;
        assert!((n[0] - n[1]).abs() / n[0] < 0.05, "{n:?}");
    }
}
