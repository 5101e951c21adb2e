//! Transfer Component Analysis.
//!
//! Source and target training rows are stacked into one anchor set and the
//! composite Gram matrix
//!
//! ```text
//!     K = | K_ss  K_st |
//!         | K_ts  K_tt |
//! ```
//!
//! is built over it. With `L` the MMD weighting (`1/n_s²` inside the source
//! block, `1/n_t²` inside the target block, `-1/(n_s·n_t)` across) and
//! `H = I - 11ᵀ/n` the centering matrix, the transfer components are the
//! leading eigenvectors of `(K·L·K + μI)⁻¹·K·H·K`. The first term keeps the
//! embedded domain means close, the second keeps embedded variance large.
//!
//! `L = e·eᵀ` is rank one, so `K·L·K = (Ke)(Ke)ᵀ`, and `K·H·K = (HK)ᵀ(HK)`
//! because `H` is idempotent. The generalized problem is reduced through a
//! Cholesky factor of `K·L·K + μI`; no inverse is formed.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::container::{read_file, write_file, Reader, Writer};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::{fix_sign, gram, sym_eig_desc, Gamma, Kernel, KernelSpec};

pub const DEFAULT_MU: f64 = 1.0;
pub const DEFAULT_COMPONENTS: usize = 80;
pub const DEFAULT_KERNEL: KernelSpec = KernelSpec::Rbf(Gamma::MedianHeuristic);

const MAGIC: &[u8; 8] = b"TCAM1\0\0\0";

#[derive(Debug, Clone, PartialEq)]
pub struct TcaModel {
    /// Source training rows followed by target training rows.
    anchors: FeatureMatrix,
    kernel: Kernel,
    mu: f64,
    /// `(n_s + n_t) × k`, columns in descending eigenvalue order.
    coeffs: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    n_source: usize,
    n_target: usize,
}

impl TcaModel {
    pub fn anchors(&self) -> &FeatureMatrix {
        &self.anchors
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn k(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(MAGIC);
        w.u32(self.n_source)?;
        w.u32(self.n_target)?;
        w.kernel(&self.kernel);
        w.f64(self.mu);
        w.features(&self.anchors)?;
        w.matrix(&self.coeffs)?;
        w.f64s(&self.eigenvalues)?;
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TcaModel> {
        let mut r = Reader::new(bytes, MAGIC)?;
        let n_source = r.u32()?;
        let n_target = r.u32()?;
        let kernel = r.kernel()?;
        let mu = r.f64()?;
        let anchors = r.features()?;
        let coeffs = r.matrix()?;
        let eigenvalues = r.f64s()?;
        r.finish()?;
        if anchors.rows() != n_source + n_target
            || coeffs.nrows() != anchors.rows()
            || eigenvalues.len() != coeffs.ncols()
        {
            return Err(Error::Format("inconsistent TCA model shapes".into()));
        }
        Ok(TcaModel {
            anchors,
            kernel,
            mu,
            coeffs,
            eigenvalues,
            n_source,
            n_target,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TcaModel> {
        TcaModel::from_bytes(&read_file(path.as_ref())?)
    }
}

/// Fits the shared embedding from the two TRAINING sets only.
///
/// `seed` drives the median-heuristic subsample when the anchor set is large.
pub fn tca_fit(
    source_train: &FeatureMatrix,
    target_train: &FeatureMatrix,
    kernel: KernelSpec,
    k: usize,
    mu: f64,
    seed: u64,
) -> Result<TcaModel> {
    if source_train.dims() != target_train.dims() {
        return Err(Error::Shape(format!(
            "source has {} dims, target has {}",
            source_train.dims(),
            target_train.dims()
        )));
    }
    let ns = source_train.rows();
    let nt = target_train.rows();
    if ns < 2 || nt < 2 {
        return Err(Error::Config(format!(
            "TCA needs at least 2 rows per domain, got {ns} and {nt}"
        )));
    }
    let n = ns + nt;
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} out of range 1..={n}")));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Config(format!("mu must be positive, got {mu}")));
    }

    let anchors = source_train.vstack(target_train)?;
    let kernel = kernel.resolve(&anchors, seed)?;
    let kmat = gram(&kernel, &anchors, &anchors)?;

    let e = DVector::from_fn(n, |i, _| {
        if i < ns {
            1.0 / ns as f64
        } else {
            -1.0 / nt as f64
        }
    });
    let ke = &kmat * e;
    let mut b = &ke * ke.transpose();
    for i in 0..n {
        b[(i, i)] += mu;
    }
    let b = (&b + b.transpose()) * 0.5;

    let mut hk = kmat;
    for mut col in hk.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let khk = hk.transpose() * &hk;
    let khk = (&khk + khk.transpose()) * 0.5;

    let chol = b
        .cholesky()
        .ok_or_else(|| Error::Numerical("K·L·K + μI is not positive definite".into()))?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(&khk)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let reduced = (&reduced + reduced.transpose()) * 0.5;

    let eig = sym_eig_desc(&reduced)?;
    let lt = l.transpose();
    let mut coeffs = DMatrix::zeros(n, k);
    for i in 0..k {
        let y = eig.vectors.column(i).into_owned();
        let w = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        let norm = w.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical(format!("component {i} has norm {norm}")));
        }
        let mut v: Vec<f64> = (w / norm).iter().copied().collect();
        fix_sign(&mut v);
        coeffs.set_column(i, &DVector::from_vec(v));
    }

    Ok(TcaModel {
        anchors,
        kernel,
        mu,
        coeffs,
        eigenvalues: eig.values[..k].to_vec(),
        n_source: ns,
        n_target: nt,
    })
}

/// `K_x·W` where `K_x[i, j] = k(x_i, anchor_j)`.
pub fn tca_transform(model: &TcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.dims() != model.anchors.dims() {
        return Err(Error::Shape(format!(
            "TCA fitted on {} dims, got {}",
            model.anchors.dims(),
            x.dims()
        )));
    }
    let kx = gram(&model.kernel, x, &model.anchors)?;
    FeatureMatrix::from_dmatrix(&(kx * &model.coeffs))
}

/// Squared distance between the row means of two embeddings.
pub fn mmd_sq(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!(
            "embeddings have {} and {} dims",
            a.dims(),
            b.dims()
        )));
    }
    let ma = a.column_means();
    let mb = b.column_means();
    Ok(crate::linalg::sq_dist(&ma, &mb))
}

/// Total variance of an embedding: sum of per-column population variances.
pub fn total_variance(a: &FeatureMatrix) -> f64 {
    let mean = a.column_means();
    let n = a.rows() as f64;
    a.iter_rows()
        .map(|r| crate::linalg::sq_dist(r, &mean))
        .sum::<f64>()
        / n
}
