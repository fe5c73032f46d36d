//! Exact smooth-number quantities: the counting function Psi(n, m), the
//! harmonic smooth sum, the probability that a harmonic sample is
//! m-smooth (exact and Dickman-approximated), and the exact distribution
//! function of the normalized weighted geometric sum S_m through the
//! independent-multiplicity product representation.
//!
//! Conventions: the largest prime factor of 1 is taken to be 1, so 1 is
//! m-smooth for every m >= 1 and Psi(n, n) = n. Queries depend on m only
//! through the largest prime <= m, so no clamping is needed for
//! correctness; reported records keep the requested m.

use crate::dickman::DickmanTable;
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::primes::{harmonic, PrimeTable};

/// Memory cap for the largest-prime-factor sieve (4 bytes per entry).
pub const LPF_SIEVE_MAX: u64 = 100_000_000;

/// Default cap on the enumeration bound exp(z * lambda_m) for the exact
/// S_m distribution function.
pub const DEFAULT_SM_CAP: u64 = 100_000_000;

/// Slack added to the log-space inclusion test `ln k <= z * lambda_m`.
/// The slack is on the inclusion side: products whose logarithm lands
/// within 1e-12 of the bound are counted in, which keeps integer
/// boundaries like exp(z * lambda_m) = n exact under f64 rounding.
pub const SM_LOG_SLACK: f64 = 1e-12;

/// Largest-prime-factor table for 1..=n, built by a linear sieve.
#[derive(Debug, Clone)]
pub struct LpfSieve {
    n: u64,
    lpf: Vec<u32>,
}

impl LpfSieve {
    pub fn build(n: u64) -> Result<Self> {
        if !(2..=LPF_SIEVE_MAX).contains(&n) {
            return Err(Error::usage(format!(
                "lpf sieve size must be in [2, {LPF_SIEVE_MAX}], got {n}"
            )));
        }
        let n_us = n as usize;
        let mut lpf = vec![0u32; n_us + 1];
        lpf[1] = 1;
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=n_us {
            if lpf[i] == 0 {
                lpf[i] = i as u32;
                primes.push(i as u32);
            }
            for &p in &primes {
                let ip = i * p as usize;
                if ip > n_us {
                    break;
                }
                lpf[ip] = lpf[i];
                if i % p as usize == 0 {
                    break;
                }
            }
        }
        Ok(LpfSieve { n, lpf })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Largest prime factor of k (1 for k = 1).
    pub fn lpf(&self, k: u64) -> u64 {
        self.lpf[k as usize] as u64
    }

    fn check_query(&self, n: u64, m: u64, what: &str) -> Result<()> {
        if n > self.n {
            return Err(Error::out_of_range(format!(
                "{what}: n={n} exceeds sieve size {}",
                self.n
            )));
        }
        if n < 1 || m < 1 {
            return Err(Error::usage(format!("{what}: need n >= 1 and m >= 1")));
        }
        Ok(())
    }

    /// Psi(n, m): the number of m-smooth k in [1, n], counting k = 1.
    pub fn psi_count(&self, n: u64, m: u64) -> Result<u64> {
        self.check_query(n, m, "psi_count")?;
        let m = m as u32;
        Ok(self.lpf[1..=n as usize].iter().filter(|&&l| l <= m).count() as u64)
    }

    /// Sum of 1/k over m-smooth k <= n, compensated.
    pub fn harmonic_smooth_sum(&self, n: u64, m: u64) -> Result<f64> {
        self.check_query(n, m, "harmonic_smooth_sum")?;
        let m = m as u32;
        let mut acc = KahanSum::new();
        for (k, &l) in self.lpf[1..=n as usize].iter().enumerate() {
            if l <= m {
                acc.add(1.0 / (k + 1) as f64);
            }
        }
        Ok(acc.value())
    }

    /// P[psi(H_n) <= m]: the harmonic smooth sum normalized by L_n.
    pub fn psi_h_prob_exact(&self, query: &SmoothQuery) -> Result<f64> {
        Ok(self.harmonic_smooth_sum(query.n, query.m)? / harmonic(query.n))
    }
}

/// One (n, m) smoothness query with its parameter Upsilon = ln n / ln m.
#[derive(Debug, Clone, Copy)]
pub struct SmoothQuery {
    pub n: u64,
    pub m: u64,
    pub upsilon: f64,
}

impl SmoothQuery {
    pub fn new(n: u64, m: u64) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::usage(format!(
                "smooth query requires n >= 2 and m >= 2, got n={n}, m={m}"
            )));
        }
        let upsilon = (n as f64).ln() / (m as f64).ln();
        Ok(SmoothQuery { n, m, upsilon })
    }
}

/// Dickman approximation of P[psi(H_n) <= m], with or without the
/// exp(-gamma) factor; `saturated` is set when Upsilon exceeds the
/// table's range and the value is evaluated at u_max instead.
#[derive(Debug, Clone, Copy)]
pub struct ApproxProb {
    pub value: f64,
    pub saturated: bool,
}

/// (1/Upsilon) * I[rho](Upsilon), optionally scaled by exp(-gamma).
pub fn psi_h_prob_approx(table: &DickmanTable, query: &SmoothQuery, with_gamma: bool) -> ApproxProb {
    let upsilon = query.upsilon;
    let saturated = upsilon > table.u_max();
    let x = upsilon.min(table.u_max());
    let integral = table.rho_integral(x).expect("x clamped to table range");
    let gamma_factor = if with_gamma {
        crate::exp_neg_gamma()
    } else {
        1.0
    };
    ApproxProb {
        value: gamma_factor / upsilon * integral,
        saturated,
    }
}

/// Exact P[S_m <= z] where S_m = (1/lambda_m) * sum of log(p) * xi_p over
/// primes p <= m: by the product representation this equals
/// I_m * sum of 1/k over m-smooth k with ln k <= z * lambda_m.
///
/// The enumeration is a DFS over prime-exponent vectors, primes taken in
/// decreasing order, pruned on the log-product bound; the running product
/// is also kept as an integer so each reciprocal is exact. Errors with
/// `InfeasibleExact` when exp(z * lambda_m) exceeds `cap`.
pub fn s_m_cdf_exact(table: &PrimeTable, m: u64, z: f64, cap: u64) -> Result<f64> {
    if m < 2 {
        return Err(Error::usage(format!("s_m_cdf_exact requires m >= 2, got {m}")));
    }
    if m > table.limit() {
        return Err(Error::out_of_range(format!(
            "s_m_cdf_exact: m={m} exceeds table limit {}",
            table.limit()
        )));
    }
    if z.is_nan() {
        return Err(Error::usage("s_m_cdf_exact: z is NaN".into()));
    }
    if z < 0.0 {
        return Ok(0.0);
    }
    let lambda_m = table.lambda(m)?;
    let log_bound = z * lambda_m;
    if log_bound > (cap as f64).ln() {
        return Err(Error::InfeasibleExact {
            bound: log_bound.exp(),
            cap,
        });
    }
    let primes_desc: Vec<u64> = table.primes_upto(m).iter().rev().copied().collect();
    let log_p: Vec<f64> = primes_desc.iter().map(|&p| (p as f64).ln()).collect();
    let mut sum = KahanSum::new();
    dfs_recip_sum(
        &primes_desc,
        &log_p,
        0,
        1,
        0.0,
        log_bound + SM_LOG_SLACK,
        &mut sum,
    );
    Ok(table.euler_product(m)? * sum.value())
}

fn dfs_recip_sum(
    primes: &[u64],
    log_p: &[f64],
    start: usize,
    product: u64,
    log_product: f64,
    log_bound: f64,
    sum: &mut KahanSum,
) {
    sum.add(1.0 / product as f64);
    for i in start..primes.len() {
        if log_product + log_p[i] <= log_bound {
            dfs_recip_sum(
                primes,
                log_p,
                i,
                product * primes[i],
                log_product + log_p[i],
                log_bound,
                sum,
            );
        }
    }
}
