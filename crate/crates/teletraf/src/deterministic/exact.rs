//! Exact event-driven simulation of deterministic queues over rational
//! time.
//!
//! Deterministic queues repeat a finite pattern, so simulated fractions of
//! time and counts measured over whole cycles are rational numbers that can
//! be compared to the closed forms with zero tolerance. This engine keeps
//! every event time as an exact fraction to make those comparisons literal
//! equality rather than floating-point closeness.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::ops::{Add, Div, Mul, Sub};

use crate::{Error, Result};

/// Exact rational number over `i128`, always kept reduced with a positive
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frac {
    num: i128,
    den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

impl Frac {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Frac { num: sign * num / g, den: sign * den / g }
    }

    pub fn int(n: i128) -> Self {
        Frac { num: n, den: 1 }
    }

    pub fn zero() -> Self {
        Frac::int(0)
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn recip(&self) -> Self {
        Frac::new(self.den, self.num)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    /// Least common multiple of two positive fractions: the smallest
    /// positive fraction both divide into integrally.
    pub fn lcm(&self, other: &Frac) -> Frac {
        // lcm(a/b, c/d) = lcm(a d, c b) / (b d)
        let left = self.num * other.den;
        let right = other.num * self.den;
        let g = gcd(left, right).max(1);
        Frac::new(left / g * right, self.den * other.den)
    }

    pub fn ceil_div(&self, other: &Frac) -> i128 {
        // ceil(self / other) for positive fractions
        let q = *self / *other;
        q.num.div_euclid(q.den) + if q.num.rem_euclid(q.den) > 0 { 1 } else { 0 }
    }
}

impl Add for Frac {
    type Output = Frac;
    fn add(self, rhs: Frac) -> Frac {
        Frac::new(self.num * rhs.den + rhs.num * self.den, self.den * rhs.den)
    }
}

impl Sub for Frac {
    type Output = Frac;
    fn sub(self, rhs: Frac) -> Frac {
        Frac::new(self.num * rhs.den - rhs.num * self.den, self.den * rhs.den)
    }
}

impl Mul for Frac {
    type Output = Frac;
    fn mul(self, rhs: Frac) -> Frac {
        let g1 = gcd(self.num, rhs.den).max(1);
        let g2 = gcd(rhs.num, self.den).max(1);
        Frac::new((self.num / g1) * (rhs.num / g2), (self.den / g2) * (rhs.den / g1))
    }
}

impl Div for Frac {
    type Output = Frac;
    fn div(self, rhs: Frac) -> Frac {
        self * rhs.recip()
    }
}

impl Mul<i128> for Frac {
    type Output = Frac;
    fn mul(self, rhs: i128) -> Frac {
        Frac::new(self.num * rhs, self.den)
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Exact tally of a deterministic-queue simulation over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTally {
    /// Window length.
    pub window: Frac,
    /// Exact time spent with each queue size inside the window.
    pub state_time: BTreeMap<u64, Frac>,
    /// Arrivals inside the window.
    pub arrivals: u64,
    /// Blocked arrivals inside the window.
    pub blocked: u64,
    /// Integral of busy servers over the window (server-time).
    pub busy_time: Frac,
}

impl ExactTally {
    /// Exact fraction of arrivals blocked.
    pub fn blocking(&self) -> Frac {
        if self.arrivals == 0 {
            Frac::zero()
        } else {
            Frac::new(self.blocked as i128, self.arrivals as i128)
        }
    }

    /// Exact fraction of time with `n` in the system.
    pub fn state_fraction(&self, n: u64) -> Frac {
        self.state_time
            .get(&n)
            .map(|t| *t / self.window)
            .unwrap_or_else(Frac::zero)
    }

    /// Exact mean queue size.
    pub fn mean_queue(&self) -> Frac {
        let mut acc = Frac::zero();
        for (&n, &t) in &self.state_time {
            acc = acc + t * (n as i128);
        }
        acc / self.window
    }

    /// Exact mean fraction of busy servers.
    pub fn utilization(&self, servers: u32) -> Frac {
        self.busy_time / (self.window * (servers as i128))
    }
}

/// Runs a D/D/k queue with optional total capacity (`None` for an infinite
/// buffer), first arrival at time zero, and tallies the window
/// `[window_start, window_start + window_len)` exactly.
///
/// Departures are processed before arrivals that share their instant.
pub fn simulate(
    inter_arrival: Frac,
    service: Frac,
    servers: u32,
    capacity: Option<u64>,
    window_start: Frac,
    window_len: Frac,
) -> Result<ExactTally> {
    if !inter_arrival.is_positive() || !service.is_positive() {
        return Err(Error::invalid("inter-arrival and service times must be positive"));
    }
    if servers == 0 {
        return Err(Error::invalid("need at least one server"));
    }
    if let Some(cap) = capacity {
        if cap < servers as u64 {
            return Err(Error::invalid("capacity must not be below the server count"));
        }
    }
    let window_end = window_start + window_len;

    // departures as a min-heap of exact end times
    let mut in_service: BinaryHeap<std::cmp::Reverse<Frac>> = BinaryHeap::new();
    let mut waiting: VecDeque<()> = VecDeque::new();
    let mut tally = ExactTally {
        window: window_len,
        state_time: BTreeMap::new(),
        arrivals: 0,
        blocked: 0,
        busy_time: Frac::zero(),
    };

    let mut t = Frac::zero();
    let mut next_arrival = Frac::zero();
    let mut q: u64 = 0;

    let record = |tally: &mut ExactTally, from: Frac, to: Frac, q: u64, busy: u64| {
        let lo = if from < window_start { window_start } else { from };
        let hi = if to > window_end { window_end } else { to };
        if hi > lo {
            let span = hi - lo;
            let slot = tally.state_time.entry(q).or_insert_with(Frac::zero);
            *slot = *slot + span;
            tally.busy_time = tally.busy_time + span * (busy as i128);
        }
    };

    while t < window_end {
        let next_departure = in_service.peek().map(|r| r.0);
        let (event, is_departure) = match next_departure {
            Some(d) if d <= next_arrival => (d, true),
            _ => (next_arrival, false),
        };
        record(&mut tally, t, event, q, q.min(servers as u64));
        t = event;
        if t >= window_end {
            break;
        }
        if is_departure {
            in_service.pop();
            q -= 1;
            if waiting.pop_front().is_some() {
                in_service.push(std::cmp::Reverse(t + service));
            }
        } else {
            if t >= window_start {
                tally.arrivals += 1;
            }
            let admitted = capacity.map_or(true, |cap| q < cap);
            if admitted {
                q += 1;
                if (in_service.len() as u32) < servers {
                    in_service.push(std::cmp::Reverse(t + service));
                } else {
                    waiting.push_back(());
                }
            } else if t >= window_start {
                tally.blocked += 1;
            }
            next_arrival = next_arrival + inter_arrival;
        }
    }
    Ok(tally)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_arithmetic() {
        let a = Frac::new(1, 3);
        let b = Frac::new(1, 6);
        assert_eq!(a + b, Frac::new(1, 2));
        assert_eq!(a - b, b);
        assert_eq!(a * b, Frac::new(1, 18));
        assert_eq!(a / b, Frac::int(2));
        assert_eq!(Frac::new(2, -4), Frac::new(-1, 2));
        assert_eq!(Frac::new(1, 2).lcm(&Frac::new(1, 3)), Frac::int(1));
        assert_eq!(Frac::new(3, 2).lcm(&Frac::new(1, 2)), Frac::new(3, 2));
    }

    #[test]
    fn dd1_cycle_is_exact() {
        // lambda = 1, mu = 2: one cycle of length 1, busy for 1/2
        let tally = simulate(
            Frac::int(1),
            Frac::new(1, 2),
            1,
            None,
            Frac::zero(),
            Frac::int(10),
        )
        .unwrap();
        assert_eq!(tally.state_fraction(1), Frac::new(1, 2));
        assert_eq!(tally.state_fraction(0), Frac::new(1, 2));
        assert_eq!(tally.mean_queue(), Frac::new(1, 2));
        assert_eq!(tally.utilization(1), Frac::new(1, 2));
        assert_eq!(tally.blocked, 0);
    }

    #[test]
    fn ddkk_overload_cycle_exact() {
        // 1/lambda = 11/10, 1/mu = 59/10, k = 3: ceil(A) = 6 arrivals per
        // cycle, half of them blocked
        let ia = Frac::new(11, 10);
        let sv = Frac::new(59, 10);
        let cycle = ia * 6;
        let start = ia * 2; // (k-1)/lambda
        let tally = simulate(ia, sv, 3, Some(3), start, cycle * 10).unwrap();
        assert_eq!(tally.blocking(), Frac::new(1, 2));
        // E[Q] = k A / ceil(A) with A = 59/11
        assert_eq!(tally.mean_queue(), Frac::new(3 * 59, 11 * 6));
        assert_eq!(tally.utilization(3), Frac::new(59, 66));
    }
}
