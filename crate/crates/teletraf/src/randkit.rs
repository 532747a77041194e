//! Deterministic, seedable random-number streams and random-deviate
//! construction used by every simulation and traffic model in the crate.
//!
//! The generator is xoshiro256++ (period `2^256 - 1`) seeded through
//! SplitMix64, so a 64-bit seed always expands to a full-entropy state.
//! Determinism is the contract: the same seed always yields the same
//! deviate sequence, bit for bit. Not cryptographic.

use crate::num::Real;
use crate::{Error, Result};

/// Seedable random-number stream.
///
/// Single-owner mutable state: move it between contexts freely, never share
/// one stream concurrently. Every deviate below consumes from the stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    state: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    /// Creates a stream from a 64-bit seed.
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let state = [
            splitmix64(&mut s),
            splitmix64(&mut s),
            splitmix64(&mut s),
            splitmix64(&mut s),
        ];
        RngStream { seed, state }
    }

    /// Seed the stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an independent stream for replication `index`.
    ///
    /// Sub-seeds are generated by mixing the base seed with the index, so
    /// replications are decorrelated but still reproducible from one seed.
    pub fn substream(&self, index: u64) -> RngStream {
        let mut s = self.seed ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
        RngStream::new(splitmix64(&mut s))
    }

    /// Next raw 64-bit output (xoshiro256++).
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform deviate in the open interval (0, 1).
    ///
    /// Draws 53 mantissa bits; an exact zero (probability `2^-53`) is
    /// rejected and redrawn so `-ln(u)` stays finite.
    pub fn uniform01(&mut self) -> f64 {
        loop {
            let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Exponential deviate with rate `rate` (mean `1/rate`), by inversion of
    /// the complementary distribution: `x = -ln(u)/rate`.
    pub fn exp_deviate(&mut self, rate: f64) -> Result<f64> {
        if !(rate > 0.0) {
            return Err(Error::invalid(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(-self.uniform01().ln() / rate)
    }

    /// Pareto deviate with shape `gamma` and scale `delta`, by inversion of
    /// the tail `P(X > x) = (x/delta)^-gamma` for `x >= delta`.
    pub fn pareto_deviate(&mut self, gamma: f64, delta: f64) -> Result<f64> {
        if !(gamma > 0.0) || !(delta > 0.0) {
            return Err(Error::invalid(format!(
                "Pareto parameters must be positive, got shape {gamma}, scale {delta}"
            )));
        }
        Ok(delta * self.uniform01().powf(-1.0 / gamma))
    }

    /// Geometric deviate on {1, 2, ...}: number of Bernoulli(p) trials up to
    /// and including the first success, `P(X = i) = (1-p)^(i-1) p`.
    pub fn geometric_deviate(&mut self, p: f64) -> Result<u64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid(format!("geometric p must be in (0, 1], got {p}")));
        }
        if p == 1.0 {
            return Ok(1);
        }
        let x = (self.uniform01().ln() / (1.0 - p).ln()).ceil();
        Ok(x.max(1.0) as u64)
    }

    /// Uniform integer in `[a, b]`, each value with probability `1/(b-a+1)`.
    ///
    /// Unbiased: uses rejection on the 64-bit output.
    pub fn discrete_uniform_deviate(&mut self, a: i64, b: i64) -> Result<i64> {
        if a > b {
            return Err(Error::invalid(format!("discrete uniform needs a <= b, got [{a}, {b}]")));
        }
        let span = (b as i128 - a as i128 + 1) as u128;
        if span == 1 {
            return Ok(a);
        }
        // largest multiple of span representable in u64
        let zone = u64::MAX - ((u64::MAX as u128 + 1) % span) as u64;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return Ok(a + (x as u128 % span) as i64);
            }
        }
    }

    /// Gaussian deviate with the given mean and standard deviation, by the
    /// Box–Muller transform (one deviate per call, two uniforms consumed).
    pub fn gaussian_deviate(&mut self, mean: f64, stddev: f64) -> Result<f64> {
        if !(stddev >= 0.0) {
            return Err(Error::invalid(format!("standard deviation must be >= 0, got {stddev}")));
        }
        let u1 = self.uniform01();
        let u2 = self.uniform01();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        Ok(mean + stddev * z)
    }
}

/// Discrete probability mass function over consecutive integers.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<R: Real> {
    support_min: i64,
    probabilities: Vec<R>,
}

impl<R: Real> Pmf<R> {
    /// Builds a pmf after validating non-negativity and normalization to
    /// within 1e-12.
    pub fn new(support_min: i64, probabilities: Vec<R>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("pmf must have at least one entry"));
        }
        let mut total = R::zero();
        for &p in &probabilities {
            if p < R::zero() {
                return Err(Error::invalid("pmf entries must be non-negative"));
            }
            total += p;
        }
        if (total - R::one()).abs() > R::of_f64(1e-12) {
            return Err(Error::invalid(format!("pmf must sum to 1, sums to {total}")));
        }
        Ok(Pmf { support_min, probabilities })
    }

    pub fn support_min(&self) -> i64 {
        self.support_min
    }

    pub fn support_max(&self) -> i64 {
        self.support_min + self.probabilities.len() as i64 - 1
    }

    pub fn probabilities(&self) -> &[R] {
        &self.probabilities
    }

    /// Probability of the value `i` (zero outside the stored support).
    pub fn prob(&self, i: i64) -> R {
        if i < self.support_min {
            return R::zero();
        }
        self.probabilities
            .get((i - self.support_min) as usize)
            .copied()
            .unwrap_or_else(R::zero)
    }

    pub fn mean(&self) -> R {
        let mut m = R::zero();
        for (off, &p) in self.probabilities.iter().enumerate() {
            m += R::of_f64((self.support_min + off as i64) as f64) * p;
        }
        m
    }

    /// Values paired with their probabilities.
    pub fn iter(&self) -> impl Iterator<Item = (i64, R)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(off, &p)| (self.support_min + off as i64, p))
    }
}

/// Poisson pmf with parameter `lambda`, computed by the mode-anchored
/// recursion `P(i+1) = lambda/(i+1) P(i)`.
///
/// The unnormalized terms start from 1 at `floor(lambda)` and the recursion
/// runs in both directions until terms drop below `epsilon`; the retained
/// range is then normalized. This stays finite for large `lambda` where
/// `e^-lambda lambda^i / i!` would over- and underflow term by term.
pub fn poisson_pmf<R: Real>(lambda: R, epsilon: R) -> Result<Pmf<R>> {
    if lambda < R::zero() || !lambda.is_finite() {
        return Err(Error::invalid(format!("Poisson parameter must be >= 0, got {lambda}")));
    }
    if !(epsilon > R::zero() && epsilon < R::one()) {
        return Err(Error::invalid(format!("truncation epsilon must be in (0, 1), got {epsilon}")));
    }
    if lambda == R::zero() {
        return Ok(Pmf { support_min: 0, probabilities: vec![R::one()] });
    }
    let mode = lambda.floor();
    let mode_i = mode.to_i64().ok_or_else(|| Error::invalid("Poisson parameter too large"))?;

    // downward from the mode
    let mut down = Vec::new();
    let mut term = R::one();
    let mut i = mode_i;
    while i > 0 {
        // P(i-1) = P(i) * i / lambda
        term = term * R::of_f64(i as f64) / lambda;
        if term < epsilon {
            break;
        }
        down.push(term);
        i -= 1;
    }
    let support_min = i;

    // upward from the mode
    let mut probs: Vec<R> = down.iter().rev().copied().collect();
    probs.push(R::one());
    term = R::one();
    i = mode_i;
    loop {
        term = term * lambda / R::of_f64((i + 1) as f64);
        if term < epsilon {
            break;
        }
        probs.push(term);
        i += 1;
    }

    let total: R = probs.iter().fold(R::zero(), |acc, &p| acc + p);
    for p in &mut probs {
        *p = *p / total;
    }
    Ok(Pmf { support_min, probabilities: probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_draws() {
        let mut s = RngStream::new(7);
        let u1 = s.uniform01();
        let u2 = s.uniform01();
        assert_ne!(u1, u2);
    }

    #[test]
    fn uniform_mean_near_half() {
        let mut s = RngStream::new(1);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.uniform01()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn uniform_open_interval() {
        let mut s = RngStream::new(3);
        for _ in 0..100_000 {
            let u = s.uniform01();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn exponential_moments() {
        let mut s = RngStream::new(11);
        let n = 100_000;
        let mean = (0..n).map(|_| s.exp_deviate(1.0).unwrap()).sum::<f64>() / n as f64;
        // 3 sigma / sqrt(n) with sigma = 1
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn exponential_rate_scaling() {
        let mut a = RngStream::new(5);
        let mut b = RngStream::new(5);
        let n = 10_000;
        let m1 = (0..n).map(|_| a.exp_deviate(1.0).unwrap()).sum::<f64>() / n as f64;
        let m2 = (0..n).map(|_| b.exp_deviate(2.0).unwrap()).sum::<f64>() / n as f64;
        assert_relative_eq!(m1 / m2, 2.0, epsilon = 1e-12); // paired seeds: exact halving
    }

    #[test]
    fn exponential_memoryless() {
        let mut rng = RngStream::new(23);
        let n = 200_000;
        let (s, t) = (0.7, 1.3);
        let (mut gt_t, mut gt_st, mut gt_s) = (0u64, 0u64, 0u64);
        for _ in 0..n {
            let x = rng.exp_deviate(1.0).unwrap();
            if x > t {
                gt_t += 1;
                if x > s + t {
                    gt_st += 1;
                }
            }
            if x > s {
                gt_s += 1;
            }
        }
        let cond = gt_st as f64 / gt_t as f64;
        let marginal = gt_s as f64 / n as f64;
        assert!((cond - marginal).abs() < 0.01, "cond {cond} vs marginal {marginal}");
    }

    #[test]
    fn pareto_support_and_mean() {
        let mut s = RngStream::new(9);
        for _ in 0..10_000 {
            assert!(s.pareto_deviate(1.2, 4.0).unwrap() >= 4.0);
        }
        // gamma=2, delta=1: mean = delta*gamma/(gamma-1) = 2
        let n = 400_000;
        let mean = (0..n).map(|_| s.pareto_deviate(2.0, 1.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn pareto_heavy_tail_mean_diverges() {
        // gamma = 1: infinite mean. The sample mean grows like ln(n), far
        // past what any of the finite-mean shapes could produce.
        let mut s = RngStream::new(17);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.pareto_deviate(1.0, 1.0).unwrap()).sum::<f64>() / n as f64;
        assert!(mean > 8.0, "sample mean {mean} too small for an infinite-mean tail");
    }

    #[test]
    fn geometric_cases() {
        let mut s = RngStream::new(2);
        for _ in 0..100 {
            assert_eq!(s.geometric_deviate(1.0).unwrap(), 1);
        }
        let n = 200_000;
        let mean = (0..n).map(|_| s.geometric_deviate(0.4).unwrap() as f64).sum::<f64>() / n as f64;
        assert!((mean - 2.5).abs() < 0.02, "mean {mean}");
        let tail = (0..n).filter(|_| s.geometric_deviate(0.5).unwrap() > 3).count();
        assert!((tail as f64 / n as f64 - 0.125).abs() < 0.01);
    }

    #[test]
    fn discrete_uniform_cases() {
        let mut s = RngStream::new(4);
        for _ in 0..100 {
            assert_eq!(s.discrete_uniform_deviate(7, 7).unwrap(), 7);
        }
        let n = 300_000;
        let draws: Vec<f64> =
            (0..n).map(|_| s.discrete_uniform_deviate(1, 10).unwrap() as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 5.5).abs() < 0.02, "mean {mean}");
        assert!((var - 8.25).abs() < 0.1, "var {var}");
        assert!(s.discrete_uniform_deviate(3, 2).is_err());
    }

    #[test]
    fn gaussian_cases() {
        let mut s = RngStream::new(6);
        for _ in 0..100 {
            assert_eq!(s.gaussian_deviate(3.0, 0.0).unwrap(), 3.0);
        }
        let n = 200_000;
        let within = (0..n)
            .filter(|_| s.gaussian_deviate(0.0, 1.0).unwrap().abs() <= 1.0)
            .count() as f64
            / n as f64;
        assert!((within - 0.6827).abs() < 0.01, "within 1 sigma: {within}");
        let draws: Vec<f64> = (0..n).map(|_| s.gaussian_deviate(3.0, 2.0).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 4.0).abs() < 0.1, "var {var}");
        assert!(s.gaussian_deviate(0.0, -1.0).is_err());
    }

    #[test]
    fn min_of_uniforms_mean() {
        // min of k uniform(0,s) deviates has mean s/(k+1)
        let mut rng = RngStream::new(31);
        let (k, scale, n) = (5, 2.0, 100_000);
        let mut total = 0.0;
        for _ in 0..n {
            let m = (0..k).map(|_| scale * rng.uniform01()).fold(f64::INFINITY, f64::min);
            total += m;
        }
        let mean = total / n as f64;
        assert!((mean - scale / (k + 1) as f64).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn poisson_pmf_point_mass_at_zero() {
        let pmf = poisson_pmf(0.0f64, 1e-12).unwrap();
        assert_eq!(pmf.support_min(), 0);
        assert_eq!(pmf.probabilities(), &[1.0]);
    }

    #[test]
    fn poisson_pmf_matches_direct_formula() {
        for &lambda in &[0.3, 2.0, 10.0, 50.0] {
            let pmf = poisson_pmf(lambda, 1e-12).unwrap();
            let total: f64 = pmf.probabilities().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mut direct = (-lambda as f64).exp();
            for i in 0..=pmf.support_max() {
                if i > 0 {
                    direct *= lambda / i as f64;
                }
                assert!((pmf.prob(i) - direct).abs() < 1e-10, "lambda {lambda}, i {i}");
            }
        }
        let pmf = poisson_pmf(2.0f64, 1e-12).unwrap();
        assert_relative_eq!(pmf.prob(0), (-2.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn poisson_pmf_large_parameter() {
        let pmf = poisson_pmf(500.0f64, 1e-12).unwrap();
        assert!(pmf.support_min() >= 0 && pmf.support_max() <= 800);
        let peak = pmf.iter().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
        assert!((peak.0 - 500).abs() <= 1, "peak at {}", peak.0);
        assert!((pmf.mean() - 500.0).abs() < 1e-6);
    }

    #[test]
    fn substreams_differ() {
        let base = RngStream::new(99);
        let mut s0 = base.substream(0);
        let mut s1 = base.substream(1);
        assert_ne!(s0.next_u64(), s1.next_u64());
    }
}
