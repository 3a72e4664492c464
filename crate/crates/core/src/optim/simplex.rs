use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients and stopping rules of the simplex search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NMConfig {
    pub tau_r: f64,
    pub tau_e: f64,
    pub tau_c: f64,
    pub tau_s: f64,
    pub max_iters: usize,
    /// Stop once the simplex diameter falls below this fraction of the initial one.
    pub size_tol: f64,
    /// Stop once `|f(L) − f(S)|` falls below this.
    pub f_tol: f64,
}

impl Default for NMConfig {
    fn default() -> Self {
        Self {
            tau_r: 1.0,
            tau_e: 2.0,
            tau_c: 0.5,
            tau_s: 0.5,
            max_iters: 2000,
            size_tol: 1e-8,
            f_tol: 1e-10,
        }
    }
}

impl NMConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("nm.{field}"), msg));
        if !(self.tau_r > 0.0) {
            return bad("tau_r", format!("must be positive, got {}", self.tau_r));
        }
        if !(self.tau_e > 1.0f64.max(self.tau_r)) {
            return bad(
                "tau_e",
                format!("must exceed max(1, tau_r), got {}", self.tau_e),
            );
        }
        if !(self.tau_c > 0.0 && self.tau_c < 1.0) {
            return bad("tau_c", format!("must lie in (0, 1), got {}", self.tau_c));
        }
        if !(self.tau_s > 0.0 && self.tau_s < 1.0) {
            return bad("tau_s", format!("must lie in (0, 1), got {}", self.tau_s));
        }
        if !(self.size_tol >= 0.0) {
            return bad("size_tol", format!("must be non-negative, got {}", self.size_tol));
        }
        if !(self.f_tol >= 0.0) {
            return bad("f_tol", format!("must be non-negative, got {}", self.f_tol));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Reflect,
    Expand,
    Contract,
    Shrink,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Reflect => "reflect",
            Operation::Expand => "expand",
            Operation::Contract => "contract",
            Operation::Shrink => "shrink",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxIterations,
    SimplexSize,
    FunctionSpread,
}

/// What one iteration tried and what it did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub operation: Operation,
    pub centroid: Vec<f64>,
    pub reflected: (Vec<f64>, f64),
    /// Expansion or contraction point, when one was evaluated.
    pub trial: Option<(Vec<f64>, f64)>,
}

/// One row of the optimization log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub operation: Operation,
    pub f_best: f64,
    pub f_worst: f64,
    pub diameter: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn evaluate_all<F>(f: &F, points: &[Vec<f64>]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    points.par_iter().map(|x| f(x).map(sanitize)).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `n + 1` vertices in `ℝⁿ` with cached objective values. After
/// [`Simplex::order`] the values are non-decreasing: vertex 0 is the best
/// point `S`, the last one the worst point `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    /// Evaluates `f` on every vertex. The vertices must be affinely
    /// independent and `f` finite on all of them.
    pub fn new<F>(vertices: Vec<Vec<f64>>, f: &F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let n = vertices.len().saturating_sub(1);
        if n == 0 {
            return Err(Error::Usage("a simplex needs at least two vertices".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
        if !affinely_independent(&vertices) {
            return Err(Error::Usage(
                "initial simplex is degenerate (vertices affinely dependent)".into(),
            ));
        }
        let values = evaluate_all(f, &vertices)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Usage(format!(
                "objective is not finite at initial vertex {i}"
            )));
        }
        let mut s = Self { vertices, values };
        s.order();
        Ok(s)
    }

    /// Axis-aligned simplex: `x0` plus `x0 + steps[i]·e_i`.
    pub fn axis<F>(x0: &[f64], steps: &[f64], f: &F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let mut vertices = vec![x0.to_vec()];
        for (i, &h) in steps.iter().enumerate() {
            let mut v = x0.to_vec();
            v[i] += h;
            vertices.push(v);
        }
        Self::new(vertices, f)
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.vertices[0], self.values[0])
    }

    pub fn worst(&self) -> (&[f64], f64) {
        let n = self.dim();
        (&self.vertices[n], self.values[n])
    }

    /// Stable sort by objective value; ties keep their current order.
    pub fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.vertices.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.vertices = idx.iter().map(|&i| self.vertices[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    /// Largest distance from the best vertex.
    pub fn diameter(&self) -> f64 {
        let s = &self.vertices[0];
        self.vertices[1..]
            .iter()
            .map(|v| distance(v, s))
            .fold(0.0, f64::max)
    }

    /// Centroid of all vertices but the worst.
    pub fn centroid(&self) -> Vec<f64> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        for v in &self.vertices[..n] {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi;
            }
        }
        c.iter_mut().for_each(|ci| *ci /= n as f64);
        c
    }

    /// `v(τ) = v̄ + τ(v̄ − L)`.
    pub fn point(&self, centroid: &[f64], tau: f64) -> Vec<f64> {
        let (l, _) = self.worst();
        centroid
            .iter()
            .zip(l)
            .map(|(c, li)| c + tau * (c - li))
            .collect()
    }

    fn replace_worst(&mut self, x: Vec<f64>, fx: f64) {
        let n = self.dim();
        self.vertices[n] = x;
        self.values[n] = fx;
    }

    /// One iteration on an ordered simplex; leaves it ordered.
    pub fn step<F>(&mut self, f: &F, cfg: &NMConfig) -> Result<StepReport>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let n = self.dim();
        let f_s = self.values[0];
        let f_l = self.values[n];
        let centroid = self.centroid();
        let r = self.point(&centroid, cfg.tau_r);
        let f_r = sanitize(f(&r)?);
        let mut trial = None;

        let operation = if f_s < f_r && f_r < f_l {
            self.replace_worst(r.clone(), f_r);
            Operation::Reflect
        } else if f_r < f_s {
            let e = self.point(&centroid, cfg.tau_e);
            let f_e = sanitize(f(&e)?);
            trial = Some((e.clone(), f_e));
            if f_e < f_s {
                self.replace_worst(e, f_e);
            } else {
                self.replace_worst(r.clone(), f_r);
            }
            Operation::Expand
        } else {
            let gate = self.values[..n].iter().all(|&v| v < f_r);
            let contracted = if gate {
                let c = self.point(&centroid, cfg.tau_c);
                let f_c = sanitize(f(&c)?);
                trial = Some((c.clone(), f_c));
                if f_c < f_l.min(f_r) {
                    self.replace_worst(c, f_c);
                    true
                } else {
                    false
                }
            } else {
                false
            };
            if contracted {
                Operation::Contract
            } else {
                self.shrink(f, cfg.tau_s)?;
                Operation::Shrink
            }
        };
        self.order();
        Ok(StepReport {
            operation,
            centroid,
            reflected: (r, f_r),
            trial,
        })
    }

    /// `v_i ← S + τ_s(v_i − S)` for every vertex but the best.
    fn shrink<F>(&mut self, f: &F, tau_s: f64) -> Result<()>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let s = self.vertices[0].clone();
        for v in &mut self.vertices[1..] {
            for (vi, si) in v.iter_mut().zip(&s) {
                *vi = si + tau_s * (*vi - si);
            }
        }
        let new = evaluate_all(f, &self.vertices[1..])?;
        self.values[1..].copy_from_slice(&new);
        Ok(())
    }
}

/// Gaussian elimination with partial pivoting on the edge vectors.
fn affinely_independent(vertices: &[Vec<f64>]) -> bool {
    let n = vertices.len() - 1;
    let mut m: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| a - b).collect())
        .collect();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return false;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= 1e-12 * scale {
            return false;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let k = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= k * m[col][c];
            }
        }
    }
    true
}

/// Outcome of a simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct NMResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub log: Vec<LogEntry>,
    pub simplex: Simplex,
}

/// Nelder–Mead search from `init` until a stopping rule fires. The rules are
/// checked on the ordered simplex before every iteration: function spread,
/// then simplex size, then the iteration budget.
pub fn nelder_mead<F>(f: &F, init: Simplex, cfg: &NMConfig) -> Result<NMResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let mut simplex = init;
    simplex.order();
    let d0 = simplex.diameter();
    let mut log = Vec::new();
    let mut iter = 0;
    let termination = loop {
        let (_, f_s) = simplex.best();
        let (_, f_l) = simplex.worst();
        if (f_l - f_s).abs() < cfg.f_tol {
            break Termination::FunctionSpread;
        }
        if simplex.diameter() < cfg.size_tol * d0 {
            break Termination::SimplexSize;
        }
        if iter >= cfg.max_iters {
            break Termination::MaxIterations;
        }
        let report = simplex.step(f, cfg)?;
        iter += 1;
        log.push(LogEntry {
            iter,
            operation: report.operation,
            f_best: simplex.best().1,
            f_worst: simplex.worst().1,
            diameter: simplex.diameter(),
        });
    };
    let (x, fx) = simplex.best();
    Ok(NMResult {
        x_best: x.to_vec(),
        f_best: fx,
        iterations: iter,
        termination,
        log,
        simplex,
    })
}
