//! One-class ν-SVM trained on normal frames only.
//!
//! The dual problem is
//!
//! ```text
//!     min ½ αᵀQα   s.t.  0 ≤ α_i ≤ 1/(ν·n),  Σ α_i = 1
//! ```
//!
//! with `Q` the training Gram matrix. It is solved with pairwise (SMO)
//! updates: the first index is the maximal KKT violator, the second is picked
//! by second-order gain among the violators on the other side.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::container::{read_file, write_file, Reader, Writer};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::{gram, Kernel, KernelSpec};

pub const DEFAULT_NU: f64 = 0.25;
pub const DEFAULT_KERNEL: KernelSpec = KernelSpec::Linear;

/// `α_i` strictly inside `(MARGIN_EPS, C - MARGIN_EPS)` marks a margin vector.
pub const MARGIN_EPS: f64 = 1e-8;

const MAGIC: &[u8; 8] = b"OCSVM1\0\0";
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the maximal KKT violation falls to this value.
    pub tol: f64,
    /// Iteration cap; `None` means `100·n`.
    pub max_iter: Option<usize>,
    /// Seed for the median-heuristic subsample when the kernel needs one.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    alphas: Vec<f64>,
    rho: f64,
    nu: f64,
    kernel: Kernel,
    support_indices: Vec<usize>,
    support: FeatureMatrix,
    support_alphas: Vec<f64>,
    objective: f64,
    iterations: usize,
}

impl OcsvmModel {
    /// Dual coefficients, one per training row.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Upper box bound `1/(ν·n)`.
    pub fn upper_bound(&self) -> f64 {
        1.0 / (self.nu * self.alphas.len() as f64)
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    pub fn support(&self) -> &FeatureMatrix {
        &self.support
    }

    /// `½ αᵀQα` at the returned solution.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(MAGIC);
        w.kernel(&self.kernel);
        w.f64(self.nu);
        w.f64(self.rho);
        w.f64(self.objective);
        w.u32(self.iterations)?;
        w.f64s(&self.alphas)?;
        w.u32(self.support_indices.len())?;
        for &i in &self.support_indices {
            w.u32(i)?;
        }
        w.features(&self.support)?;
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<OcsvmModel> {
        let mut r = Reader::new(bytes, MAGIC)?;
        let kernel = r.kernel()?;
        let nu = r.f64()?;
        let rho = r.f64()?;
        let objective = r.f64()?;
        let iterations = r.u32()?;
        let alphas = r.f64s()?;
        let ns = r.u32()?;
        let support_indices = (0..ns).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let support = r.features()?;
        r.finish()?;
        if support.rows() != ns || support_indices.iter().any(|&i| i >= alphas.len()) {
            return Err(Error::Format("inconsistent OC-SVM model".into()));
        }
        let support_alphas = support_indices.iter().map(|&i| alphas[i]).collect();
        Ok(OcsvmModel {
            alphas,
            rho,
            nu,
            kernel,
            support_indices,
            support,
            support_alphas,
            objective,
            iterations,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<OcsvmModel> {
        OcsvmModel::from_bytes(&read_file(path.as_ref())?)
    }
}

pub fn ocsvm_fit(train: &FeatureMatrix, nu: f64, kernel: KernelSpec) -> Result<OcsvmModel> {
    ocsvm_fit_with(train, nu, kernel, &SolverOptions::default())
}

pub fn ocsvm_fit_with(
    train: &FeatureMatrix,
    nu: f64,
    kernel: KernelSpec,
    opts: &SolverOptions,
) -> Result<OcsvmModel> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Config(format!("nu must lie in (0, 1], got {nu}")));
    }
    let n = train.rows();
    if n < 2 {
        return Err(Error::Config(format!("OC-SVM needs at least 2 rows, got {n}")));
    }
    let kernel = kernel.resolve(train, opts.seed)?;
    let q = gram(&kernel, train, train)?;
    let c = 1.0 / (nu * n as f64);
    let max_iter = opts.max_iter.unwrap_or(100 * n);

    let (alphas, grad, iterations) = solve_dual(&q, c, opts.tol, max_iter)?;

    let objective = 0.5 * alphas.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();
    let rho = offset(&alphas, &grad, c);

    let support_indices: Vec<usize> = (0..n).filter(|&i| alphas[i] > MARGIN_EPS).collect();
    let support = train.select_rows(&support_indices)?;
    let support_alphas = support_indices.iter().map(|&i| alphas[i]).collect();

    Ok(OcsvmModel {
        alphas,
        rho,
        nu,
        kernel,
        support_indices,
        support,
        support_alphas,
        objective,
        iterations,
    })
}

/// Returns `(α, Qα, iterations)`.
fn solve_dual(
    q: &DMatrix<f64>,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let n = q.nrows();

    // uniform start: feasible since 1/n ≤ C, and symmetric in tied points
    let mut alphas = vec![1.0 / n as f64; n];

    let mut grad = vec![0.0; n];
    for (j, &a) in alphas.iter().enumerate() {
        if a != 0.0 {
            for (i, g) in grad.iter_mut().enumerate() {
                *g += q[(i, j)] * a;
            }
        }
    }

    let mut iter = 0;
    loop {
        // i: may grow (α_i < C), smallest gradient
        let mut i = usize::MAX;
        let mut g_min = f64::INFINITY;
        // largest gradient among those that may shrink, for the stopping test
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            if alphas[t] < c && grad[t] < g_min {
                g_min = grad[t];
                i = t;
            }
            if alphas[t] > 0.0 && grad[t] > g_max {
                g_max = grad[t];
            }
        }
        if i == usize::MAX || g_max - g_min <= tol {
            return Ok((alphas, grad, iter));
        }
        if iter >= max_iter {
            return Err(Error::Numerical(format!(
                "OC-SVM solver did not converge after {iter} iterations (violation {:e})",
                g_max - g_min
            )));
        }

        // j: may shrink, maximizes the second-order decrease
        let mut j = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for t in 0..n {
            if alphas[t] > 0.0 && grad[t] > g_min {
                let b = grad[t] - g_min;
                let a = q[(i, i)] + q[(t, t)] - 2.0 * q[(i, t)];
                let gain = b * b / if a > 0.0 { a } else { TAU };
                if gain > best {
                    best = gain;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            return Ok((alphas, grad, iter));
        }

        let curv = q[(i, i)] + q[(j, j)] - 2.0 * q[(i, j)];
        let curv = if curv > 0.0 { curv } else { TAU };
        let step = ((grad[j] - grad[i]) / curv).min(c - alphas[i]).min(alphas[j]);

        alphas[i] += step;
        alphas[j] -= step;
        // snap to the box to keep bound membership exact
        if alphas[i] > c - 1e-15 * c.max(1.0) {
            alphas[i] = c;
        }
        if alphas[j] < 1e-15 {
            alphas[j] = 0.0;
        }
        for (t, g) in grad.iter_mut().enumerate() {
            *g += step * (q[(t, i)] - q[(t, j)]);
        }
        iter += 1;
    }
}

/// Mean of `(Qα)_i` over margin vectors, or the median over all support
/// vectors when none sit strictly inside the box.
fn offset(alphas: &[f64], grad: &[f64], c: f64) -> f64 {
    let margin: Vec<f64> = alphas
        .iter()
        .zip(grad)
        .filter(|(&a, _)| a > MARGIN_EPS && a < c - MARGIN_EPS)
        .map(|(_, &g)| g)
        .collect();
    if !margin.is_empty() {
        return margin.iter().sum::<f64>() / margin.len() as f64;
    }
    let mut sv: Vec<f64> = alphas
        .iter()
        .zip(grad)
        .filter(|(&a, _)| a > MARGIN_EPS)
        .map(|(_, &g)| g)
        .collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    let m = sv.len();
    if m % 2 == 1 {
        sv[m / 2]
    } else {
        0.5 * (sv[m / 2 - 1] + sv[m / 2])
    }
}

/// Anomaly score per row, `ρ - Σ_j α_j·k(x_j, row)`. Positive means outside
/// the learned boundary; higher is more anomalous.
pub fn ocsvm_score(model: &OcsvmModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.dims() != model.support.dims() {
        return Err(Error::Shape(format!(
            "OC-SVM trained on {} dims, got {}",
            model.support.dims(),
            x.dims()
        )));
    }
    Ok((0..x.rows())
        .into_par_iter()
        .map(|r| {
            let row = x.row(r);
            let f: f64 = model
                .support
                .iter_rows()
                .zip(&model.support_alphas)
                .map(|(sv, a)| a * model.kernel.eval_unchecked(sv, row))
                .sum();
            model.rho - f
        })
        .collect())
}
