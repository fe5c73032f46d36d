//! Seedable sampling of the stochastic objects under study: geometric
//! prime multiplicities, the normalized weighted sum S_m, harmonic
//! variables (directly and by rejection on the bounded-product event),
//! Dickman variables (quantile inversion and the perpetuity recursion),
//! plus empirical-distribution machinery (ECDF, Kolmogorov distance, DKW
//! bands, two-sample KS) and the exact total-variation distance between
//! the uniform law and the harmonic-times-prime product law.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dickman::DickmanTable;
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::primes::{harmonic, HarmonicPrefix, PrimeTable};
use crate::rng::RandomSource;

/// Cap on n for the direct harmonic sampler's prefix table.
pub const HARMONIC_SAMPLER_CAP: u64 = 10_000_000;

/// Range cap for the exact total-variation assembly.
pub const TV_MAX_N: u64 = 100_000;

/// Default depth of the perpetuity recursion; the truncation bias decays
/// like 2^-depth, far below statistical noise at any feasible sample size.
pub const DEFAULT_PERPETUITY_DEPTH: u32 = 60;

/// Confidence parameter used for all DKW bands in reports.
pub const DKW_DELTA: f64 = 0.01;

/// One draw of the geometric law P[xi = k] = (1 - 1/p) p^-k, k >= 0, by
/// inversion: k = floor(ln U / ln(1/p)).
pub fn sample_geometric(p: u64, rng: &mut RandomSource) -> u64 {
    debug_assert!(p >= 2);
    let u = rng.uniform_open01();
    (u.ln() / -((p as f64).ln())) as u64
}

/// Sampler for S_m = (1/lambda_m) * sum over primes p <= m of ln(p)*xi_p.
#[derive(Debug, Clone)]
pub struct SmSampler {
    primes: Vec<u64>,
    log_p: Vec<f64>,
    neg_inv_log_p: Vec<f64>,
    lambda_m: f64,
}

impl SmSampler {
    pub fn new(table: &PrimeTable, m: u64) -> Result<Self> {
        if m > table.limit() {
            return Err(Error::out_of_range(format!(
                "S_m sampler: m={m} exceeds table limit {}",
                table.limit()
            )));
        }
        if m < 2 {
            return Err(Error::usage(format!("S_m sampler requires m >= 2, got {m}")));
        }
        let primes: Vec<u64> = table.primes_upto(m).to_vec();
        let log_p: Vec<f64> = primes.iter().map(|&p| (p as f64).ln()).collect();
        let neg_inv_log_p: Vec<f64> = log_p.iter().map(|&l| -1.0 / l).collect();
        let lambda_m = table.lambda(m)?;
        Ok(SmSampler {
            primes,
            log_p,
            neg_inv_log_p,
            lambda_m,
        })
    }

    pub fn lambda_m(&self) -> f64 {
        self.lambda_m
    }

    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        let mut z = 0.0;
        for i in 0..self.primes.len() {
            let k = (rng.uniform_open01().ln() * self.neg_inv_log_p[i]) as u64;
            if k > 0 {
                z += k as f64 * self.log_p[i];
            }
        }
        z / self.lambda_m
    }
}

/// One draw of S_m.
pub fn sample_s_m(table: &PrimeTable, m: u64, rng: &mut RandomSource) -> Result<f64> {
    Ok(SmSampler::new(table, m)?.sample(rng))
}

/// Direct sampler for the harmonic distribution on [n]: binary search on
/// the prefix sums of 1/k.
#[derive(Debug, Clone)]
pub struct HarmonicSampler {
    prefix: HarmonicPrefix,
}

impl HarmonicSampler {
    pub fn new(n: u64) -> Result<Self> {
        if n < 1 || n > HARMONIC_SAMPLER_CAP {
            return Err(Error::usage(format!(
                "harmonic sampler requires 1 <= n <= {HARMONIC_SAMPLER_CAP}, got {n}"
            )));
        }
        Ok(HarmonicSampler {
            prefix: HarmonicPrefix::new(n),
        })
    }

    pub fn n(&self) -> u64 {
        self.prefix.n()
    }

    pub fn sample(&self, rng: &mut RandomSource) -> u64 {
        let n = self.prefix.n();
        let target = rng.uniform_open01() * self.prefix.value(n);
        let k = self.prefix.as_slice().partition_point(|&v| v < target) as u64;
        k.clamp(1, n)
    }
}

/// Prime-exponent vector of one sample, with only nonzero exponents kept.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityVector {
    /// Threshold below which primes were drawn.
    pub m: u64,
    pub exponents: BTreeMap<u64, u32>,
    pub log_product: f64,
}

impl MultiplicityVector {
    pub fn product(&self) -> u64 {
        self.exponents
            .iter()
            .map(|(&p, &e)| p.pow(e))
            .product::<u64>()
    }
}

/// Draw (xi_p)_{p <= n} repeatedly until the product lands in [1, n];
/// returns the accepted vector and the number of attempts. Primes are
/// processed in increasing order and an attempt is aborted as soon as the
/// running product exceeds n — the remaining coordinates could only grow
/// it, so the accepted distribution is unchanged.
pub fn sample_harmonic_rejection(
    table: &PrimeTable,
    n: u64,
    rng: &mut RandomSource,
) -> Result<(MultiplicityVector, u64)> {
    if n > table.limit() {
        return Err(Error::out_of_range(format!(
            "rejection sampler: n={n} exceeds table limit {}",
            table.limit()
        )));
    }
    let primes = table.primes_upto(n);
    let mut attempts: u64 = 0;
    'attempt: loop {
        attempts += 1;
        let mut exponents = BTreeMap::new();
        let mut product: u64 = 1;
        for &p in primes {
            let xi = sample_geometric(p, rng);
            if xi > 0 {
                for _ in 0..xi {
                    if product > n / p {
                        continue 'attempt;
                    }
                    product *= p;
                }
                exponents.insert(p, xi as u32);
            }
        }
        let log_product = exponents
            .iter()
            .map(|(&p, &e)| e as f64 * (p as f64).ln())
            .sum();
        return Ok((
            MultiplicityVector {
                m: n,
                exponents,
                log_product,
            },
            attempts,
        ));
    }
}

/// How to draw a Dickman variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DickmanMethod {
    /// Invert the tabulated distribution function at a uniform draw.
    Quantile,
    /// Iterate x <- U (x + 1) from 0, `depth` times.
    Perpetuity,
}

/// One Dickman draw. The perpetuity depth must be >= 30 (truncation error
/// below 2^-30 in distribution); the quantile path ignores `depth`.
pub fn sample_dickman(
    table: &DickmanTable,
    rng: &mut RandomSource,
    method: DickmanMethod,
    depth: u32,
) -> f64 {
    match method {
        DickmanMethod::Quantile => {
            // Clamp into the quantile's domain; this moves <= 1e-6 of mass.
            let q = rng.uniform_open01().min(1.0 - 1e-6 - 1e-12);
            table.quantile(q).expect("q clamped into quantile domain")
        }
        DickmanMethod::Perpetuity => {
            assert!(depth >= 30, "perpetuity depth must be >= 30");
            let mut x = 0.0;
            for _ in 0..depth {
                x = rng.uniform_open01() * (x + 1.0);
            }
            x
        }
    }
}

/// Empirical distribution: sorted sample, right-continuous step function.
#[derive(Debug, Clone)]
pub struct Ecdf {
    values: Vec<f64>,
}

impl Ecdf {
    pub fn from_samples(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("ECDF requires a non-empty sample".into()));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Ecdf { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }
}

/// Kolmogorov distance of an ECDF to a reference distribution function,
/// with the DKW band at [`DKW_DELTA`] reported alongside.
#[derive(Debug, Clone, Copy)]
pub struct KolmogorovDistance {
    pub distance: f64,
    pub dkw_band: f64,
}

pub fn kolmogorov_distance(ecdf: &Ecdf, cdf: impl Fn(f64) -> f64) -> KolmogorovDistance {
    let n = ecdf.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in ecdf.values().iter().enumerate() {
        let f = cdf(x);
        sup = sup.max(((i + 1) as f64 / n - f).abs());
        sup = sup.max((i as f64 / n - f).abs());
    }
    KolmogorovDistance {
        distance: sup,
        dkw_band: dkw_band(ecdf.len(), DKW_DELTA),
    }
}

/// DKW uniform confidence band: sqrt(ln(2/delta) / (2 count)).
pub fn dkw_band(count: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * count as f64)).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &Ecdf, b: &Ecdf) -> f64 {
    let mut sup = 0.0f64;
    for &x in a.values().iter().chain(b.values()) {
        sup = sup.max((a.eval(x) - b.eval(x)).abs());
    }
    sup
}

/// Asymptotic two-sample KS critical value at level alpha.
pub fn ks_two_sample_critical(n1: usize, n2: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n1 + n2) as f64 / (n1 as f64 * n2 as f64)).sqrt()
}

/// Exact total-variation distance between the uniform law on [n] and the
/// law of H_n * Q_n, where Q_n given H_n = h is uniform on the primes
/// <= n/h together with 1.
#[derive(Debug, Clone, Copy)]
pub struct TvReport {
    pub tv: f64,
    /// Total mass of the assembled pmf; 1 up to rounding.
    pub total_mass: f64,
    /// The reference bound 61 ln ln n / ln n.
    pub bound: f64,
}

pub fn tv_uniform_vs_hq(table: &PrimeTable, n: u64) -> Result<TvReport> {
    if !(21..=TV_MAX_N).contains(&n) {
        return Err(Error::usage(format!(
            "tv_uniform_vs_hq requires 21 <= n <= {TV_MAX_N}, got {n}"
        )));
    }
    if n > table.limit() {
        return Err(Error::out_of_range(format!(
            "tv_uniform_vs_hq: n={n} exceeds table limit {}",
            table.limit()
        )));
    }
    let l_n = harmonic(n);
    let mut pmf = vec![0.0f64; n as usize + 1];
    for h in 1..=n {
        let cap = n / h;
        let denom = (table.prime_count(cap) + 1) as f64;
        let base = 1.0 / (l_n * h as f64 * denom);
        pmf[h as usize] += base; // q = 1
        for &q in table.primes_upto(cap) {
            pmf[(h * q) as usize] += base;
        }
    }
    let mut mass = KahanSum::new();
    let mut dist = KahanSum::new();
    let unif = 1.0 / n as f64;
    for &p in &pmf[1..] {
        mass.add(p);
        dist.add((p - unif).abs());
    }
    let ln_n = (n as f64).ln();
    Ok(TvReport {
        tv: 0.5 * dist.value(),
        total_mass: mass.value(),
        bound: 61.0 * ln_n.ln() / ln_n,
    })
}

/// Deterministic parallel sampling: `count` draws are partitioned into
/// fixed-size chunks, chunk c drawn from stream `stream_base + c`, and the
/// outputs concatenated in chunk order — the result is independent of
/// scheduling and thread count.
pub fn sample_f64_parallel(
    seed: u64,
    stream_base: u64,
    count: usize,
    f: impl Fn(&mut RandomSource) -> f64 + Sync,
) -> Vec<f64> {
    const CHUNK: usize = 1 << 16;
    let chunks = count.div_ceil(CHUNK);
    let mut parts: Vec<Vec<f64>> = Vec::new();
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RandomSource::with_stream(seed, stream_base + c as u64);
            let take = CHUNK.min(count - c * CHUNK);
            (0..take).map(|_| f(&mut rng)).collect::<Vec<_>>()
        })
        .collect_into_vec(&mut parts);
    parts.concat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::{s_m_cdf_exact, DEFAULT_SM_CAP};

    #[test]
    fn geometric_zero_probability_p2() {
        let mut rng = RandomSource::new(1);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| sample_geometric(2, &mut rng) == 0).count();
        let p_hat = zeros as f64 / n as f64;
        assert!((p_hat - 0.5).abs() <= 3.0 * 0.0005, "{p_hat}");
    }

    #[test]
    fn geometric_mean_p3() {
        let mut rng = RandomSource::new(2);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_geometric(3, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        // E = 1/(p-1) = 0.5, Var = theta/(1-theta)^2 = 0.75
        let ci = 3.0 * (0.75f64 / n as f64).sqrt();
        assert!((mean - 0.5).abs() <= ci, "{mean}");
    }

    #[test]
    fn geometric_large_p_nearly_degenerate() {
        let mut rng = RandomSource::new(3);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| sample_geometric(1_000_000, &mut rng) == 0)
            .count();
        assert!(zeros >= n - 3);
    }

    #[test]
    fn s_m_moments_m2() {
        let table = PrimeTable::build(100).unwrap();
        let sampler = SmSampler::new(&table, 2).unwrap();
        let mut rng = RandomSource::new(4);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut zeros = 0usize;
        for _ in 0..n {
            let s = sampler.sample(&mut rng);
            assert!(s >= 0.0);
            sum += s;
            if s == 0.0 {
                zeros += 1;
            }
        }
        // S_2 = 2 xi_2: E = 2, Var = 4 * 2 = 8
        let mean = sum / n as f64;
        assert!((mean - 2.0).abs() <= 3.0 * (8.0f64 / n as f64).sqrt(), "{mean}");
        let p0 = zeros as f64 / n as f64;
        assert!((p0 - 0.5).abs() <= 3.0 * 0.0005, "{p0}");
    }

    #[test]
    fn harmonic_direct_n1_and_pmf_n4() {
        let mut rng = RandomSource::new(5);
        let s1 = HarmonicSampler::new(1).unwrap();
        for _ in 0..100 {
            assert_eq!(s1.sample(&mut rng), 1);
        }
        let s4 = HarmonicSampler::new(4).unwrap();
        let n = 1_000_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[s4.sample(&mut rng) as usize] += 1;
        }
        let l4 = 25.0 / 12.0;
        for k in 1..=4usize {
            let p = 1.0 / (l4 * k as f64);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let p_hat = counts[k] as f64 / n as f64;
            assert!((p_hat - p).abs() <= 3.0 * sigma, "k={k}: {p_hat} vs {p}");
        }
    }

    #[test]
    fn harmonic_direct_mean_n100() {
        let sampler = HarmonicSampler::new(100).unwrap();
        let mut rng = RandomSource::new(6);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sampler.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        let l100 = harmonic(100);
        let expect = 100.0 / l100;
        // Var = E[H^2] - mean^2, E[H^2] = (100*101/2)/L_100
        let var = 5050.0 / l100 - expect * expect;
        let ci = 3.0 * (var / n as f64).sqrt();
        assert!((mean - expect).abs() <= ci, "{mean} vs {expect}");
    }

    #[test]
    fn harmonic_sampler_cap() {
        assert!(HarmonicSampler::new(0).is_err());
        assert!(HarmonicSampler::new(HARMONIC_SAMPLER_CAP + 1).is_err());
    }

    #[test]
    fn rejection_acceptance_rate_n30() {
        let table = PrimeTable::build(100).unwrap();
        let mut rng = RandomSource::new(7);
        let mut attempts = 0u64;
        let mut accepted = 0u64;
        while attempts < 100_000 {
            let (_, a) = sample_harmonic_rejection(&table, 30, &mut rng).unwrap();
            attempts += a;
            accepted += 1;
        }
        let rate = accepted as f64 / attempts as f64;
        let expect = harmonic(30) * table.euler_product(30).unwrap();
        assert!((expect - 0.63099).abs() < 1e-4);
        let sigma = (expect * (1.0 - expect) / attempts as f64).sqrt();
        assert!((rate - expect).abs() <= 3.0 * sigma, "{rate} vs {expect}");
    }

    #[test]
    fn rejection_n1_trivial() {
        let table = PrimeTable::build(10).unwrap();
        let mut rng = RandomSource::new(8);
        let (mv, attempts) = sample_harmonic_rejection(&table, 1, &mut rng).unwrap();
        assert!(mv.exponents.is_empty());
        assert_eq!(mv.product(), 1);
        assert_eq!(attempts, 1);
    }

    #[test]
    fn rejection_matches_direct_in_tv() {
        let table = PrimeTable::build(100).unwrap();
        let n = 100u64;
        let draws = 200_000;
        let mut rng = RandomSource::new(9);
        let mut count_rej = vec![0u64; n as usize + 1];
        for _ in 0..draws {
            let (mv, _) = sample_harmonic_rejection(&table, n, &mut rng).unwrap();
            count_rej[mv.product() as usize] += 1;
        }
        let direct = HarmonicSampler::new(n).unwrap();
        let mut count_dir = vec![0u64; n as usize + 1];
        for _ in 0..draws {
            count_dir[direct.sample(&mut rng) as usize] += 1;
        }
        let tv: f64 = (1..=n as usize)
            .map(|k| (count_rej[k] as f64 - count_dir[k] as f64).abs())
            .sum::<f64>()
            / (2.0 * draws as f64);
        assert!(tv <= 0.02, "tv {tv}");
    }

    #[test]
    fn multiplicity_vector_log_product_consistent() {
        let table = PrimeTable::build(1000).unwrap();
        let mut rng = RandomSource::new(10);
        for _ in 0..200 {
            let (mv, _) = sample_harmonic_rejection(&table, 500, &mut rng).unwrap();
            let direct: f64 = mv
                .exponents
                .iter()
                .map(|(&p, &e)| e as f64 * (p as f64).ln())
                .sum();
            assert!((mv.log_product - direct).abs() <= 1e-12);
            assert!(mv.product() <= 500);
        }
    }

    #[test]
    fn dickman_quantile_sampler_median_mass() {
        let table = DickmanTable::build(20.0, 1e-10).unwrap();
        let mut rng = RandomSource::new(11);
        let n = 1_000_000;
        let below = (0..n)
            .filter(|_| sample_dickman(&table, &mut rng, DickmanMethod::Quantile, 0) <= 1.0)
            .count();
        let p_hat = below as f64 / n as f64;
        let expect = crate::exp_neg_gamma();
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((p_hat - expect).abs() <= 3.0 * sigma, "{p_hat} vs {expect}");
    }

    #[test]
    fn dickman_mean_is_one() {
        let table = DickmanTable::build(20.0, 1e-10).unwrap();
        let mut rng = RandomSource::new(12);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_dickman(&table, &mut rng, DickmanMethod::Perpetuity, 60))
            .sum::<f64>()
            / n as f64;
        // Var(D) = E[D^2] - 1 = 1/2
        let ci = 3.0 * (0.5f64 / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= ci, "{mean}");
    }

    #[test]
    fn dickman_samplers_agree_in_ks() {
        let table = DickmanTable::build(20.0, 1e-10).unwrap();
        let n = 100_000;
        let qs = sample_f64_parallel(13, 0, n, |rng| {
            sample_dickman(&table, rng, DickmanMethod::Quantile, 0)
        });
        let ps = sample_f64_parallel(13, 1000, n, |rng| {
            sample_dickman(&table, rng, DickmanMethod::Perpetuity, 60)
        });
        let a = Ecdf::from_samples(qs).unwrap();
        let b = Ecdf::from_samples(ps).unwrap();
        let stat = ks_two_sample(&a, &b);
        let crit = ks_two_sample_critical(n, n, 0.01);
        assert!(stat <= crit, "ks {stat} vs critical {crit}");
    }

    #[test]
    fn kolmogorov_distance_on_perfect_quantiles() {
        let table = DickmanTable::build(20.0, 1e-10).unwrap();
        let n = 1000;
        let values: Vec<f64> = (0..n)
            .map(|i| table.quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let ecdf = Ecdf::from_samples(values).unwrap();
        let kd = kolmogorov_distance(&ecdf, |z| table.cdf_value(z));
        assert!(kd.distance <= 0.5 / n as f64 + 1e-6, "{}", kd.distance);
    }

    #[test]
    fn kolmogorov_distance_degenerate_sample() {
        let table = DickmanTable::build(20.0, 1e-10).unwrap();
        let ecdf = Ecdf::from_samples(vec![0.0]).unwrap();
        let kd = kolmogorov_distance(&ecdf, |z| table.cdf_value(z));
        assert!((kd.distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dkw_band_value() {
        assert!((dkw_band(1_000_000, 0.01) - 0.00162765).abs() < 1e-7);
    }

    #[test]
    fn sm_ecdf_matches_exact_cdf() {
        let table = PrimeTable::build(100).unwrap();
        let sampler = SmSampler::new(&table, 30).unwrap();
        let n = 1_000_000;
        let samples = sample_f64_parallel(14, 0, n, |rng| sampler.sample(rng));
        let ecdf = Ecdf::from_samples(samples).unwrap();
        let band = dkw_band(n, DKW_DELTA);
        for z in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
            let exact = s_m_cdf_exact(&table, 30, z, DEFAULT_SM_CAP).unwrap();
            let gap = (ecdf.eval(z) - exact).abs();
            assert!(gap <= band, "z={z}: gap {gap} band {band}");
        }
    }

    #[test]
    fn tv_examples() {
        let table = PrimeTable::build(100_000).unwrap();
        let r21 = tv_uniform_vs_hq(&table, 21).unwrap();
        assert!((r21.total_mass - 1.0).abs() <= 1e-12);
        assert!(r21.tv <= r21.bound);
        assert!((r21.bound - 22.297).abs() < 0.1);
        let r10k = tv_uniform_vs_hq(&table, 10_000).unwrap();
        assert!((r10k.total_mass - 1.0).abs() <= 1e-12);
        assert!(r10k.tv <= r10k.bound);
        assert!(tv_uniform_vs_hq(&table, 20).is_err());
        assert!(tv_uniform_vs_hq(&table, TV_MAX_N + 1).is_err());
    }

    #[test]
    fn parallel_sampling_is_deterministic() {
        let a = sample_f64_parallel(42, 0, 100_000, |rng| rng.uniform_open01());
        let b = sample_f64_parallel(42, 0, 100_000, |rng| rng.uniform_open01());
        assert_eq!(a, b);
    }
}
