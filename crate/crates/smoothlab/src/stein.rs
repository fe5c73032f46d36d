//! Constructive pieces of the Stein machinery for the Dickman law: the
//! explicit solution component f_{1,z}, the bias-transform
//! characterization E[D f(D)] = int_0^1 E[f(D+t)] dt, the geometric
//! size-bias identity, and the discrete quantile coupling through the
//! atom distribution V_m.

use crate::dickman::DickmanTable;
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::primes::PrimeTable;
use crate::rng::RandomSource;
use crate::sample::{sample_dickman, DickmanMethod};

/// The explicit part of the Stein-equation solution for the Heaviside
/// test function at z: f_{1,z}(x) = min(1, z/x) - P[D <= z].
#[derive(Debug, Clone, Copy)]
pub struct SteinF1 {
    pub z: f64,
    pub dickman_cdf_at_z: f64,
}

impl SteinF1 {
    pub fn new(table: &DickmanTable, z: f64) -> Result<Self> {
        if !(z > 0.0) {
            return Err(Error::usage(format!("SteinF1 requires z > 0, got {z}")));
        }
        Ok(SteinF1 {
            z,
            dickman_cdf_at_z: table.cdf_value(z),
        })
    }

    /// min(1, z/x) - P[D <= z]; constant on (0, z], continuous at z.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::usage(format!("f_1z requires x > 0, got {x}")));
        }
        Ok((self.z / x).min(1.0) - self.dickman_cdf_at_z)
    }
}

/// Monte Carlo residual of the bias-transform identity for one test
/// function: estimates E[D f(D)] - E[f(D + U)] with a 3-sigma half-width.
#[derive(Debug, Clone, Copy)]
pub struct BiasTransformResidual {
    pub residual: f64,
    pub ci: f64,
}

pub fn bias_transform_residual(
    table: &DickmanTable,
    f: impl Fn(f64) -> f64,
    count: usize,
    rng: &mut RandomSource,
) -> Result<BiasTransformResidual> {
    if count < 100_000 {
        return Err(Error::usage(format!(
            "bias_transform_residual requires count >= 1e5, got {count}"
        )));
    }
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for i in 0..count {
        let d = sample_dickman(table, rng, DickmanMethod::Quantile, 0);
        let u = rng.uniform_open01();
        let diff = d * f(d) - f(d + u);
        let delta = diff - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (diff - mean);
    }
    let var = m2 / (count - 1) as f64;
    Ok(BiasTransformResidual {
        residual: mean,
        ci: 3.0 * (var / count as f64).sqrt(),
    })
}

/// Truncation point K with geometric tail mass P[xi > K] = theta^(K+1)
/// below `tail`.
pub fn geometric_truncation(theta: f64, tail: f64) -> usize {
    assert!(0.0 < theta && theta < 1.0);
    ((tail.ln() / theta.ln()).ceil() as usize).max(1)
}

/// Both sides of the size-bias identity
/// E[xi f(xi)] = (theta/(1-theta)) E[f(xi + xi' + 1)]
/// by exact truncated summation; the law of xi + xi' is formed by
/// explicit convolution.
pub fn size_bias_check(
    theta: f64,
    f: impl Fn(u64) -> f64,
    truncation: usize,
) -> Result<(f64, f64)> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(Error::usage(format!(
            "size_bias_check requires 0 < theta < 1, got {theta}"
        )));
    }
    if truncation == 0 {
        return Err(Error::usage("size_bias_check requires truncation >= 1".into()));
    }
    let k = truncation;
    let mut pmf = Vec::with_capacity(k + 1);
    let mut w = 1.0 - theta;
    for _ in 0..=k {
        pmf.push(w);
        w *= theta;
    }
    let mut lhs = KahanSum::new();
    for (i, &wi) in pmf.iter().enumerate() {
        lhs.add(i as f64 * f(i as u64) * wi);
    }
    let mut conv = vec![0.0f64; 2 * k + 1];
    for (i, &wi) in pmf.iter().enumerate() {
        for (j, &wj) in pmf.iter().enumerate() {
            conv[i + j] += wi * wj;
        }
    }
    let mut rhs = KahanSum::new();
    for (s, &c) in conv.iter().enumerate() {
        rhs.add(c * f(s as u64 + 1));
    }
    Ok((lhs.value(), theta / (1.0 - theta) * rhs.value()))
}

/// One atom of V_m: value log(q)/lambda_m with mass log(q)/(q lambda_m),
/// plus the interval endpoints a_q (cumulative mass through q) and
/// b_q = a_q + mass of the next prime.
#[derive(Debug, Clone, Copy)]
pub struct VmAtom {
    pub prime: u64,
    pub value: f64,
    pub mass: f64,
    pub a: f64,
    pub b: f64,
}

/// The discrete distribution V_m supported on {log q / lambda_m : q prime
/// <= m}; its quantile function couples V_m to a uniform variable.
#[derive(Debug, Clone)]
pub struct VmDistribution {
    pub m: u64,
    pub lambda_m: f64,
    atoms: Vec<VmAtom>,
}

impl VmDistribution {
    /// Requires the table to contain the next prime beyond the largest
    /// prime <= m (for the last atom's b endpoint).
    pub fn new(table: &PrimeTable, m: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::usage(format!("V_m requires m >= 2, got {m}")));
        }
        if m > table.limit() {
            return Err(Error::out_of_range(format!(
                "V_m: m={m} exceeds table limit {}",
                table.limit()
            )));
        }
        let lambda_m = table.lambda(m)?;
        let primes = table.primes_upto(m);
        let mut atoms = Vec::with_capacity(primes.len());
        let mut cum = KahanSum::new();
        for (i, &q) in primes.iter().enumerate() {
            let qf = q as f64;
            let mass = qf.ln() / (qf * lambda_m);
            cum.add(mass);
            let a = cum.value();
            let q_next = match primes.get(i + 1) {
                Some(&p) => p,
                None => table.next_prime(q)?,
            };
            let qn = q_next as f64;
            let b = a + qn.ln() / (qn * lambda_m);
            atoms.push(VmAtom {
                prime: q,
                value: qf.ln() / lambda_m,
                mass,
                a,
                b,
            });
        }
        Ok(VmDistribution { m, lambda_m, atoms })
    }

    pub fn atoms(&self) -> &[VmAtom] {
        &self.atoms
    }

    pub fn mass_sum(&self) -> f64 {
        self.atoms.last().map(|a| a.a).unwrap_or(0.0)
    }

    /// Left inverse of the atom CDF: the smallest atom value whose
    /// cumulative mass reaches u.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::usage(format!(
                "vm_quantile requires 0 <= u < 1, got {u}"
            )));
        }
        let idx = self.atoms.partition_point(|atom| atom.a < u);
        let idx = idx.min(self.atoms.len() - 1);
        Ok(self.atoms[idx].value)
    }

    /// max over atoms of log(p) * lambda_m * max(|a_p - log p/lambda_m|,
    /// |b_p - log p/lambda_m|); scaled so the value estimates the constant
    /// in the coupling inequality.
    pub fn coupling_gap(&self) -> f64 {
        let mut worst = 0.0f64;
        for atom in &self.atoms {
            let lp = (atom.prime as f64).ln();
            let gap = (atom.a - atom.value).abs().max((atom.b - atom.value).abs());
            worst = worst.max(lp * self.lambda_m * gap);
        }
        worst
    }
}
