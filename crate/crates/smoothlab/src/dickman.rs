//! Numerical solution of the delay equation u*rho'(u) = -rho(u-1) with
//! rho = 1 on [0, 1], plus the integral I[rho], the distribution function
//! exp(-gamma)*I[rho], and its quantile.
//!
//! The solver marches interval by interval: on [k, k+1] it evaluates
//! rho(u) = rho(k) - int_k^u rho(t-1)/t dt with fixed-order Gauss-Legendre
//! panels, reading rho(t-1) from the already-computed previous interval
//! through a local 6-point Lagrange interpolant whose stencil never
//! crosses a unit boundary (rho loses smoothness at the integers). Node
//! accuracy is certified by a mesh-doubling comparison.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::EULER_GAMMA;

const CACHE_MAGIC: &str = "# smoothlab-dickman-table v1";
const STENCIL: usize = 6;
const GL_ORDER: usize = 16;
const MIN_NODES: usize = 64;
const MAX_NODES: usize = 4096;

/// Tabulated rho and I[rho] on [0, u_max] with certified node accuracy.
#[derive(Debug, Clone)]
pub struct DickmanTable {
    u_max: f64,
    units: usize,
    nodes_per_unit: usize,
    tol: f64,
    achieved: f64,
    rho: Vec<f64>,
    integral: Vec<f64>,
    gl: GaussLegendre,
}

/// Value of the distribution function together with a saturation flag for
/// arguments beyond the tabulated range (no extrapolation is attempted).
#[derive(Debug, Clone, Copy)]
pub struct CdfValue {
    pub value: f64,
    pub saturated: bool,
}

impl DickmanTable {
    /// Build with mesh-doubling certification: node errors are at most
    /// `tol` or the build fails carrying the achieved error.
    pub fn build(u_max: f64, tol: f64) -> Result<Self> {
        check_build_args(u_max, tol)?;
        let units = units_for(u_max);
        let gl = GaussLegendre::new(GL_ORDER);
        let mut nodes = MIN_NODES;
        let (mut rho, mut integral) = solve_mesh(units, nodes, &gl);
        loop {
            let fine_nodes = nodes * 2;
            let (rho_f, int_f) = solve_mesh(units, fine_nodes, &gl);
            let mut diff = 0.0f64;
            for i in 0..rho.len() {
                diff = diff.max((rho[i] - rho_f[2 * i]).abs());
                diff = diff.max((integral[i] - int_f[2 * i]).abs());
            }
            if diff <= tol {
                return Ok(DickmanTable {
                    u_max,
                    units,
                    nodes_per_unit: fine_nodes,
                    tol,
                    achieved: diff,
                    rho: rho_f,
                    integral: int_f,
                    gl,
                });
            }
            if fine_nodes >= MAX_NODES {
                return Err(Error::SolverFailure {
                    tol,
                    achieved: diff,
                });
            }
            nodes = fine_nodes;
            rho = rho_f;
            integral = int_f;
        }
    }

    /// Build on a fixed mesh without certification (`achieved` is NaN).
    /// Used by the cache loader and by mesh-refinement tests.
    pub fn with_nodes(u_max: f64, tol: f64, nodes_per_unit: usize) -> Result<Self> {
        check_build_args(u_max, tol)?;
        if !(STENCIL..=MAX_NODES).contains(&nodes_per_unit) {
            return Err(Error::usage(format!(
                "nodes_per_unit must be in [{STENCIL}, {MAX_NODES}], got {nodes_per_unit}"
            )));
        }
        let units = units_for(u_max);
        let gl = GaussLegendre::new(GL_ORDER);
        let (rho, integral) = solve_mesh(units, nodes_per_unit, &gl);
        Ok(DickmanTable {
            u_max,
            units,
            nodes_per_unit,
            tol,
            achieved: f64::NAN,
            rho,
            integral,
            gl,
        })
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn nodes_per_unit(&self) -> usize {
        self.nodes_per_unit
    }

    /// Mesh-doubling error estimate from the build; NaN for uncertified
    /// tables.
    pub fn achieved_error(&self) -> f64 {
        self.achieved
    }

    fn check_query(&self, u: f64, what: &str) -> Result<()> {
        if u.is_nan() || u < 0.0 {
            return Err(Error::usage(format!("{what}: argument must be >= 0, got {u}")));
        }
        if u > self.u_max {
            return Err(Error::out_of_range(format!(
                "{what}: {u} exceeds u_max {} (no extrapolation)",
                self.u_max
            )));
        }
        Ok(())
    }

    /// rho(u) for 0 <= u <= u_max. Exactly 1 on [0, 1].
    pub fn rho(&self, u: f64) -> Result<f64> {
        self.check_query(u, "rho")?;
        if u <= 1.0 {
            return Ok(1.0);
        }
        let (k, s) = self.locate(u);
        Ok(interp_local(
            &self.rho,
            k * self.nodes_per_unit,
            self.nodes_per_unit,
            s,
        ))
    }

    /// I[rho](x) = int_0^x rho(s) ds for 0 <= x <= u_max.
    pub fn rho_integral(&self, x: f64) -> Result<f64> {
        self.check_query(x, "rho_integral")?;
        if x <= 1.0 {
            return Ok(x);
        }
        let n = self.nodes_per_unit;
        let (k, s) = self.locate(x);
        let j0 = (s.floor() as usize).min(n - 1);
        let base = k * n;
        let mut value = self.integral[base + j0];
        let a = k as f64 + j0 as f64 / n as f64;
        if x > a {
            // partial panel [a, x] of the current interval
            let half = 0.5 * (x - a);
            let mut acc = 0.0;
            for (xg, wg) in self.gl.iter() {
                let t = a + half * (xg + 1.0);
                let sc = (t - k as f64) * n as f64;
                acc += wg * interp_local(&self.rho, base, n, sc);
            }
            value += acc * half;
        }
        Ok(value)
    }

    /// Distribution function exp(-gamma) * I[rho](min(z, u_max)).
    /// Arguments past u_max return the saturated value with the flag set.
    pub fn cdf(&self, z: f64) -> CdfValue {
        if z.is_nan() || z <= 0.0 {
            return CdfValue {
                value: 0.0,
                saturated: false,
            };
        }
        if z >= self.u_max {
            let value = (-EULER_GAMMA).exp() * self.rho_integral(self.u_max).unwrap();
            return CdfValue {
                value,
                saturated: z > self.u_max,
            };
        }
        CdfValue {
            value: (-EULER_GAMMA).exp() * self.rho_integral(z).unwrap(),
            saturated: false,
        }
    }

    pub fn cdf_value(&self, z: f64) -> f64 {
        self.cdf(z).value
    }

    /// Inverse distribution function by monotone bisection:
    /// |cdf(z) - q| <= 1e-9 for 0 <= q < 1 - 1e-6.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..1.0 - 1e-6).contains(&q) {
            return Err(Error::usage(format!(
                "quantile requires 0 <= q < 1 - 1e-6, got {q}"
            )));
        }
        if q == 0.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0f64;
        let mut hi = self.u_max;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let c = self.cdf_value(mid);
            if (c - q).abs() <= 1e-9 {
                return Ok(mid);
            }
            if c < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Interval index and local node coordinate for u in (1, u_max].
    fn locate(&self, u: f64) -> (usize, f64) {
        let k = (u.floor() as usize).min(self.units - 1);
        let s = (u - k as f64) * self.nodes_per_unit as f64;
        (k, s)
    }

    /// Write the versioned text cache: '#'-prefixed header, then one
    /// `node,rho,integral` row per mesh node.
    pub fn write_cache(&self, w: &mut impl Write) -> Result<()> {
        let mut buf = String::new();
        writeln!(buf, "{CACHE_MAGIC}").unwrap();
        writeln!(buf, "# u_max {}", self.u_max).unwrap();
        writeln!(buf, "# nodes_per_unit {}", self.nodes_per_unit).unwrap();
        writeln!(buf, "# tol {}", self.tol).unwrap();
        writeln!(buf, "# achieved {}", self.achieved).unwrap();
        let n = self.nodes_per_unit as f64;
        for i in 0..self.rho.len() {
            writeln!(buf, "{},{},{}", i as f64 / n, self.rho[i], self.integral[i]).unwrap();
        }
        w.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_cache(&mut file)
    }

    pub fn read_cache(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let magic = lines
            .next()
            .ok_or_else(|| Error::Cache("empty cache file".into()))??;
        if magic.trim() != CACHE_MAGIC {
            return Err(Error::Cache(format!("unrecognized cache header: {magic}")));
        }
        let mut u_max = None;
        let mut nodes_per_unit = None;
        let mut tol = None;
        let mut achieved = f64::NAN;
        let mut rho = Vec::new();
        let mut integral = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                let key = it.next().unwrap_or_default();
                let val = it.next().unwrap_or_default();
                match key {
                    "u_max" => u_max = Some(parse_f64(val)?),
                    "nodes_per_unit" => {
                        nodes_per_unit =
                            Some(val.parse::<usize>().map_err(|e| Error::Cache(e.to_string()))?)
                    }
                    "tol" => tol = Some(parse_f64(val)?),
                    "achieved" => achieved = parse_f64(val)?,
                    _ => {}
                }
                continue;
            }
            let mut parts = line.split(',');
            let _node = parts
                .next()
                .ok_or_else(|| Error::Cache(format!("bad row: {line}")))?;
            let r = parse_f64(
                parts
                    .next()
                    .ok_or_else(|| Error::Cache(format!("bad row: {line}")))?,
            )?;
            let i = parse_f64(
                parts
                    .next()
                    .ok_or_else(|| Error::Cache(format!("bad row: {line}")))?,
            )?;
            rho.push(r);
            integral.push(i);
        }
        let u_max = u_max.ok_or_else(|| Error::Cache("missing u_max".into()))?;
        let nodes_per_unit =
            nodes_per_unit.ok_or_else(|| Error::Cache("missing nodes_per_unit".into()))?;
        let tol = tol.ok_or_else(|| Error::Cache("missing tol".into()))?;
        let units = units_for(u_max);
        if rho.len() != units * nodes_per_unit + 1 {
            return Err(Error::Cache(format!(
                "expected {} rows, found {}",
                units * nodes_per_unit + 1,
                rho.len()
            )));
        }
        Ok(DickmanTable {
            u_max,
            units,
            nodes_per_unit,
            tol,
            achieved,
            rho,
            integral,
            gl: GaussLegendre::new(GL_ORDER),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_cache(std::io::BufReader::new(file))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Cache(format!("bad float {s:?}: {e}")))
}

fn check_build_args(u_max: f64, tol: f64) -> Result<()> {
    if !(1.0..=50.0).contains(&u_max) {
        return Err(Error::usage(format!("u_max must be in [1, 50], got {u_max}")));
    }
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::usage(format!("tol must be in [1e-14, 1e-6], got {tol}")));
    }
    Ok(())
}

fn units_for(u_max: f64) -> usize {
    (u_max.ceil() as usize).max(1)
}

/// March the delay equation on a fixed mesh of `nodes` per unit interval.
/// Returns rho and I[rho] at the `units * nodes + 1` mesh nodes.
fn solve_mesh(units: usize, nodes: usize, gl: &GaussLegendre) -> (Vec<f64>, Vec<f64>) {
    let len = units * nodes + 1;
    let h = 1.0 / nodes as f64;
    let mut rho = vec![0.0; len];
    let mut integral = vec![0.0; len];
    for j in 0..=nodes.min(len - 1) {
        rho[j] = 1.0;
        integral[j] = j as f64 * h;
    }
    for k in 1..units {
        let base = k * nodes;
        let prev = (k - 1) * nodes;
        for j in 1..=nodes {
            let a = k as f64 + (j - 1) as f64 * h;
            let mut acc = 0.0;
            for (x, w) in gl.iter() {
                let t = a + 0.5 * h * (x + 1.0);
                let s = (t - k as f64) * nodes as f64;
                acc += w * interp_local(&rho, prev, nodes, s) / t;
            }
            rho[base + j] = rho[base + j - 1] - acc * 0.5 * h;
        }
        for j in 1..=nodes {
            let a = k as f64 + (j - 1) as f64 * h;
            let mut acc = 0.0;
            for (x, w) in gl.iter() {
                let t = a + 0.5 * h * (x + 1.0);
                let s = (t - k as f64) * nodes as f64;
                acc += w * interp_local(&rho, base, nodes, s);
            }
            integral[base + j] = integral[base + j - 1] + acc * 0.5 * h;
        }
    }
    (rho, integral)
}

/// 6-point Lagrange interpolation on the uniform nodes of one unit
/// interval. `s` is the local node coordinate in [0, nodes]; the stencil
/// is clamped so it never leaves the interval.
#[inline]
fn interp_local(values: &[f64], base: usize, nodes: usize, s: f64) -> f64 {
    let a0 = ((s.floor() as isize) - (STENCIL as isize / 2 - 1))
        .clamp(0, nodes as isize - (STENCIL as isize - 1)) as usize;
    let mut result = 0.0;
    for a in 0..STENCIL {
        let xa = (a0 + a) as f64;
        let mut w = 1.0;
        for b in 0..STENCIL {
            if b != a {
                let xb = (a0 + b) as f64;
                w *= (s - xb) / (xa - xb);
            }
        }
        result += w * values[base + a0 + a];
    }
    result
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrate f over [a, b].
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.iter() {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// P_n(x) and P_n'(x) via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
