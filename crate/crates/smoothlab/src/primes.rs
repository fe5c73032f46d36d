//! Prime tables and Mertens-type partial sums and products.
//!
//! A [`PrimeTable`] holds all primes up to a limit together with prefix
//! sums of `log(p)/p` (lambda), `1/p`, and `log(1 - 1/p)`. The Euler
//! product is kept in log space and exponentiated on demand, which keeps
//! it stable far past the point where the direct product underflows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::EULER_GAMMA;

/// Hard cap on sieve limits; above this the table's memory footprint
/// (primes plus three f64 prefix arrays) becomes impractical.
pub const PRIME_TABLE_MAX_LIMIT: u64 = 1_000_000_000;

/// Exact harmonic summation is used up to this n; the Euler-Maclaurin
/// expansion takes over beyond it.
pub const HARMONIC_EXACT_CROSSOVER: u64 = 100_000_000;

/// Primes up to a limit with Mertens-type prefix sums.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    /// prefix_lambda[i] = sum over j<=i of ln(p_j)/p_j
    prefix_lambda: Vec<f64>,
    /// prefix_recip[i] = sum over j<=i of 1/p_j
    prefix_recip: Vec<f64>,
    /// prefix_log_euler[i] = sum over j<=i of ln(1 - 1/p_j)
    prefix_log_euler: Vec<f64>,
}

impl PrimeTable {
    pub fn build(limit: u64) -> Result<Self> {
        if !(2..=PRIME_TABLE_MAX_LIMIT).contains(&limit) {
            return Err(Error::usage(format!(
                "prime table limit must be in [2, {PRIME_TABLE_MAX_LIMIT}], got {limit}"
            )));
        }
        let primes = sieve_primes(limit);
        let mut prefix_lambda = Vec::with_capacity(primes.len());
        let mut prefix_recip = Vec::with_capacity(primes.len());
        let mut prefix_log_euler = Vec::with_capacity(primes.len());
        let mut lam = KahanSum::new();
        let mut rec = KahanSum::new();
        let mut eul = KahanSum::new();
        for &p in &primes {
            let pf = p as f64;
            lam.add(pf.ln() / pf);
            rec.add(1.0 / pf);
            eul.add((1.0 - 1.0 / pf).ln());
            prefix_lambda.push(lam.value());
            prefix_recip.push(rec.value());
            prefix_log_euler.push(eul.value());
        }
        Ok(PrimeTable {
            limit,
            primes,
            prefix_lambda,
            prefix_recip,
            prefix_log_euler,
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes up to and including m.
    pub fn primes_upto(&self, m: u64) -> &[u64] {
        &self.primes[..self.prime_count(m) as usize]
    }

    /// The prime-counting function pi(x). Valid for x <= limit.
    pub fn prime_count(&self, x: u64) -> u64 {
        debug_assert!(x <= self.limit);
        self.primes.partition_point(|&p| p <= x) as u64
    }

    pub fn is_prime(&self, x: u64) -> bool {
        debug_assert!(x <= self.limit);
        self.primes.binary_search(&x).is_ok()
    }

    fn check_range(&self, m: u64, what: &str) -> Result<()> {
        if m > self.limit {
            return Err(Error::out_of_range(format!(
                "{what}: m={m} exceeds table limit {}",
                self.limit
            )));
        }
        Ok(())
    }

    /// lambda_m = sum over primes p <= m of ln(p)/p, in nats.
    pub fn lambda(&self, m: u64) -> Result<f64> {
        self.check_range(m, "lambda")?;
        let k = self.prime_count(m) as usize;
        Ok(if k == 0 { 0.0 } else { self.prefix_lambda[k - 1] })
    }

    /// Sum over primes p <= m of 1/p.
    pub fn recip_sum(&self, m: u64) -> Result<f64> {
        self.check_range(m, "recip_sum")?;
        let k = self.prime_count(m) as usize;
        Ok(if k == 0 { 0.0 } else { self.prefix_recip[k - 1] })
    }

    /// ln of the Euler product I_m = prod over primes p <= m of (1 - 1/p).
    pub fn log_euler(&self, m: u64) -> Result<f64> {
        self.check_range(m, "log_euler")?;
        let k = self.prime_count(m) as usize;
        Ok(if k == 0 { 0.0 } else { self.prefix_log_euler[k - 1] })
    }

    /// I_m itself; the empty product (m < 2) is 1.
    pub fn euler_product(&self, m: u64) -> Result<f64> {
        Ok(self.log_euler(m)?.exp())
    }

    /// Smallest prime strictly greater than x.
    pub fn next_prime(&self, x: u64) -> Result<u64> {
        let idx = self.primes.partition_point(|&p| p <= x);
        self.primes.get(idx).copied().ok_or_else(|| {
            Error::out_of_range(format!(
                "no prime above {x} in table with limit {}",
                self.limit
            ))
        })
    }

    /// Estimate of the second Mertens constant c1, from
    /// a(N) = sum_{p<=N} 1/p - ln ln N evaluated at N = limit and
    /// N = sqrt(limit). The leading error of a(N) is ~ b/ln N, so the
    /// Richardson step 2*a(limit) - a(sqrt(limit)) cancels it.
    pub fn mertens_c1_estimate(&self) -> f64 {
        let a = |n: u64| self.recip_sum(n).unwrap() - (n as f64).ln().ln();
        let root = (self.limit as f64).sqrt().floor() as u64;
        if root < 3 {
            return a(self.limit);
        }
        2.0 * a(self.limit) - a(root)
    }

    /// Residuals of the three Mertens formulas plus the prime-counting
    /// inequality, one record per grid point.
    pub fn mertens_report(&self, n_grid: &[u64]) -> Result<Vec<MertensRecord>> {
        let c1 = self.mertens_c1_estimate();
        let mut out = Vec::with_capacity(n_grid.len());
        for &n in n_grid {
            if n < 3 {
                return Err(Error::usage(format!("mertens grid point {n} < 3")));
            }
            self.check_range(n, "mertens_report")?;
            out.push(self.mertens_record(n, c1));
        }
        Ok(out)
    }

    fn mertens_record(&self, n: u64, c1: f64) -> MertensRecord {
        let log_n = (n as f64).ln();
        let lambda = self.lambda(n).unwrap();
        // First formula measured relative to log n: |lambda_n/log n - 1|
        // against 2/log n, equivalent to the classical |lambda_n - log n|
        // <= 2. The absolute difference tends to ~1.333, so it cannot be
        // compared against a bound that decays with n.
        let first_resid = (lambda / log_n - 1.0).abs();
        let first_bound = 2.0 / log_n;
        let second_resid = (self.recip_sum(n).unwrap() - log_n.ln() - c1).abs();
        let second_bound = 5.0 / log_n;
        let euler = self.euler_product(n).unwrap();
        let third_scaled_resid = (log_n * euler - (-EULER_GAMMA).exp()).abs() * log_n;
        let pi_n = self.prime_count(n);
        let trudgian_resid = (pi_n as f64 - n as f64 / log_n - n as f64 / (log_n * log_n)).abs();
        let trudgian_bound = 184.0 * n as f64 / log_n.powi(3);
        // The third formula carries no a-priori bound (its constant is not
        // pinned), so it does not participate in pass; the Trudgian
        // inequality only applies from 229 on.
        let pass = first_resid <= first_bound
            && second_resid <= second_bound
            && (n < 229 || trudgian_resid <= trudgian_bound);
        MertensRecord {
            n,
            lambda,
            log_n,
            first_resid,
            first_bound,
            second_resid,
            second_bound,
            third_scaled_resid,
            pi_n,
            trudgian_resid,
            trudgian_bound,
            pass,
        }
    }
}

/// One row of the Mertens validation report.
#[derive(Debug, Clone, Serialize)]
pub struct MertensRecord {
    pub n: u64,
    pub lambda: f64,
    pub log_n: f64,
    pub first_resid: f64,
    pub first_bound: f64,
    pub second_resid: f64,
    pub second_bound: f64,
    pub third_scaled_resid: f64,
    pub pi_n: u64,
    pub trudgian_resid: f64,
    pub trudgian_bound: f64,
    pub pass: bool,
}

/// Odd-only bitset sieve of Eratosthenes.
fn sieve_primes(limit: u64) -> Vec<u64> {
    let mut primes = vec![2u64];
    if limit < 3 {
        return primes;
    }
    // bit i represents the odd number 2i + 3
    let n_odd = ((limit - 3) / 2 + 1) as usize;
    let mut composite = vec![0u64; n_odd.div_ceil(64)];
    let mut i = 0usize;
    loop {
        let p = 2 * i as u64 + 3;
        if p * p > limit {
            break;
        }
        if composite[i / 64] & (1 << (i % 64)) == 0 {
            let mut j = ((p * p - 3) / 2) as usize;
            while j < n_odd {
                composite[j / 64] |= 1 << (j % 64);
                j += p as usize;
            }
        }
        i += 1;
    }
    for i in 0..n_odd {
        if composite[i / 64] & (1 << (i % 64)) == 0 {
            primes.push(2 * i as u64 + 3);
        }
    }
    primes
}

/// Harmonic number L_n. Exact compensated summation up to
/// [`HARMONIC_EXACT_CROSSOVER`], Euler-Maclaurin beyond.
pub fn harmonic(n: u64) -> f64 {
    assert!(n >= 1, "harmonic requires n >= 1");
    if n <= HARMONIC_EXACT_CROSSOVER {
        let mut acc = KahanSum::new();
        for k in 1..=n {
            acc.add(1.0 / k as f64);
        }
        acc.value()
    } else {
        let x = n as f64;
        x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
    }
}

/// Prefix table of harmonic numbers: value(k) = L_k for k <= n.
#[derive(Debug, Clone)]
pub struct HarmonicPrefix {
    prefix: Vec<f64>,
}

impl HarmonicPrefix {
    pub fn new(n: u64) -> Self {
        let mut prefix = Vec::with_capacity(n as usize + 1);
        prefix.push(0.0);
        let mut acc = KahanSum::new();
        for k in 1..=n {
            acc.add(1.0 / k as f64);
            prefix.push(acc.value());
        }
        HarmonicPrefix { prefix }
    }

    pub fn n(&self) -> u64 {
        (self.prefix.len() - 1) as u64
    }

    pub fn value(&self, k: u64) -> f64 {
        self.prefix[k as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prefix
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_primes(limit: u64) -> Vec<u64> {
        (2..=limit)
            .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect()
    }

    #[test]
    fn sieve_matches_trial_division() {
        for limit in [2, 3, 4, 10, 97, 100, 1000] {
            let table = PrimeTable::build(limit).unwrap();
            assert_eq!(table.primes(), trial_division_primes(limit), "limit {limit}");
        }
    }

    #[test]
    fn small_examples() {
        let table = PrimeTable::build(10).unwrap();
        assert_eq!(table.primes(), &[2, 3, 5, 7]);
        let table = PrimeTable::build(2).unwrap();
        assert_eq!(table.primes(), &[2]);
        let table = PrimeTable::build(100).unwrap();
        assert_eq!(table.prime_count(100), 25);
    }

    #[test]
    fn limit_out_of_range() {
        assert!(PrimeTable::build(1).is_err());
        assert!(PrimeTable::build(PRIME_TABLE_MAX_LIMIT + 1).is_err());
    }

    #[test]
    fn lambda_examples() {
        let table = PrimeTable::build(100).unwrap();
        let ln = |x: f64| x.ln();
        assert!((table.lambda(2).unwrap() - ln(2.0) / 2.0).abs() < 1e-15);
        assert!((table.lambda(4).unwrap() - (ln(2.0) / 2.0 + ln(3.0) / 3.0)).abs() < 1e-15);
        let l10 = ln(2.0) / 2.0 + ln(3.0) / 3.0 + ln(5.0) / 5.0 + ln(7.0) / 7.0;
        assert!((table.lambda(10).unwrap() - l10).abs() < 1e-15);
        assert!((l10 - 1.312_652_427_431_384_5).abs() < 1e-12);
        assert!(table.lambda(101).is_err());
    }

    #[test]
    fn lambda_matches_fresh_compensated_sum() {
        let table = PrimeTable::build(50_000).unwrap();
        for m in [2u64, 10, 97, 1234, 49_999] {
            let direct: KahanSum = table
                .primes_upto(m)
                .iter()
                .map(|&p| (p as f64).ln() / p as f64)
                .collect();
            let got = table.lambda(m).unwrap();
            assert!((got - direct.value()).abs() <= 1e-13 * direct.value().max(1.0));
        }
    }

    #[test]
    fn euler_product_examples() {
        let table = PrimeTable::build(10_000).unwrap();
        assert_eq!(table.euler_product(1).unwrap(), 1.0);
        assert!((table.euler_product(3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((table.euler_product(10).unwrap() - 8.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn euler_product_matches_direct_product() {
        let table = PrimeTable::build(10_000).unwrap();
        for m in [2u64, 30, 100, 997, 10_000] {
            let direct: f64 = table
                .primes_upto(m)
                .iter()
                .map(|&p| 1.0 - 1.0 / p as f64)
                .product();
            let got = table.euler_product(m).unwrap();
            assert!(
                ((got - direct) / direct).abs() <= 1e-12,
                "m={m}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn prefix_monotonicity() {
        let table = PrimeTable::build(10_000).unwrap();
        for i in 1..table.prefix_lambda.len() {
            assert!(table.prefix_lambda[i] > table.prefix_lambda[i - 1]);
            assert!(table.prefix_log_euler[i] < table.prefix_log_euler[i - 1]);
        }
    }

    #[test]
    fn next_prime_examples() {
        let table = PrimeTable::build(100).unwrap();
        assert_eq!(table.next_prime(2).unwrap(), 3);
        assert_eq!(table.next_prime(7).unwrap(), 11);
        assert_eq!(table.next_prime(1).unwrap(), 2);
        assert!(table.next_prime(97).is_err());
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
        let n = 1_000_000_000u64;
        let l = harmonic(n);
        let ln_n = (n as f64).ln();
        assert!(ln_n <= l && l <= ln_n + 1.0);
    }

    #[test]
    fn harmonic_expansion_agrees_at_crossover() {
        // Exact sum at the crossover vs the expansion evaluated there.
        let n = HARMONIC_EXACT_CROSSOVER;
        let exact = harmonic(n);
        let x = n as f64;
        let expansion = x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x);
        assert!((exact - expansion).abs() < 1e-12, "{exact} vs {expansion}");
    }

    #[test]
    fn harmonic_bounds_sweep() {
        let prefix = HarmonicPrefix::new(100_000);
        for n in 3..=100_000u64 {
            let l = prefix.value(n);
            let ln_n = (n as f64).ln();
            assert!(ln_n <= l && l <= ln_n + 1.0, "n={n}");
        }
    }

    #[test]
    fn first_mertens_sweep() {
        let table = PrimeTable::build(100_000).unwrap();
        let mut idx = 0usize;
        let mut lambda = 0.0f64;
        for n in 3..=100_000u64 {
            while idx < table.primes.len() && table.primes[idx] <= n {
                let p = table.primes[idx] as f64;
                lambda += p.ln() / p;
                idx += 1;
            }
            let ln_n = (n as f64).ln();
            assert!((lambda / ln_n - 1.0).abs() <= 2.0 / ln_n, "n={n}");
            assert!((lambda - ln_n).abs() <= 2.0, "n={n}");
        }
    }

    #[test]
    fn mertens_report_examples() {
        let table = PrimeTable::build(1_000_000).unwrap();
        let records = table.mertens_report(&[3, 100, 229, 1000, 10_000]).unwrap();
        assert!(records.iter().all(|r| r.pass));
        let r100 = &records[1];
        assert!(r100.first_resid <= 2.0 / 100f64.ln());
        assert!((r100.first_bound - 0.4342944819).abs() < 1e-9);
        let r229 = &records[2];
        assert!(r229.trudgian_resid <= r229.trudgian_bound);
        // smallest grid point: everything finite
        let r3 = &records[0];
        assert!(r3.first_resid.is_finite() && r3.second_resid.is_finite());
        assert!(table.mertens_report(&[2]).is_err());
    }

    #[test]
    fn c1_estimate_is_stable() {
        // The estimate from two different limits should agree closely.
        let a = PrimeTable::build(200_000).unwrap().mertens_c1_estimate();
        let b = PrimeTable::build(1_000_000).unwrap().mertens_c1_estimate();
        assert!((a - b).abs() < 5e-3, "{a} vs {b}");
    }

    #[test]
    fn harmonic_euler_lower_bound_small_sweep() {
        let table = PrimeTable::build(2000).unwrap();
        let prefix = HarmonicPrefix::new(2000);
        for n in 21..=2000u64 {
            let li = prefix.value(n) * table.euler_product(n).unwrap();
            assert!(li >= 0.5, "n={n}: {li}");
        }
    }
}
