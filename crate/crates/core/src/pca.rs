//! Cross-domain PCA: fit on the source training set, reuse the projection
//! on any other domain.
//!
//! When there are fewer rows than features (80 frames of 4096-d
//! descriptors, say) the eigenproblem is solved on the `rows × rows` Gram
//! side and mapped back to feature space, which gives the same components
//! at a fraction of the cost.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::container::{read_file, write_file, Reader, Writer};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::{fix_sign, sym_eig_desc};

/// Default number of retained components.
pub const DEFAULT_COMPONENTS: usize = 80;

const MAGIC: &[u8; 8] = b"PCAM1\0\0\0";

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `dims × k`, orthonormal columns.
    components: DMatrix<f64>,
    explained_variance_ratio: Vec<f64>,
    cumulative_variance: f64,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }

    pub fn cumulative_variance(&self) -> f64 {
        self.cumulative_variance
    }

    pub fn k(&self) -> usize {
        self.components.ncols()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(MAGIC);
        w.f64s(&self.mean)?;
        w.matrix(&self.components)?;
        w.f64s(&self.explained_variance_ratio)?;
        w.f64(self.cumulative_variance);
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PcaModel> {
        let mut r = Reader::new(bytes, MAGIC)?;
        let mean = r.f64s()?;
        let components = r.matrix()?;
        let explained_variance_ratio = r.f64s()?;
        let cumulative_variance = r.f64()?;
        r.finish()?;
        if components.nrows() != mean.len() || components.ncols() != explained_variance_ratio.len() {
            return Err(Error::Format("inconsistent PCA model shapes".into()));
        }
        Ok(PcaModel {
            mean,
            components,
            explained_variance_ratio,
            cumulative_variance,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PcaModel> {
        PcaModel::from_bytes(&read_file(path.as_ref())?)
    }
}

fn centered(train: &FeatureMatrix, mean: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(train.rows(), train.dims(), |i, j| train.row(i)[j] - mean[j])
}

/// Fits PCA with `k` components, covariance divisor `rows - 1`.
pub fn pca_fit(train: &FeatureMatrix, k: usize) -> Result<PcaModel> {
    let n = train.rows();
    let d = train.dims();
    if n < 2 {
        return Err(Error::Config(format!("PCA needs at least 2 rows, got {n}")));
    }
    let k_max = (n - 1).min(d);
    if k == 0 || k > k_max {
        return Err(Error::Config(format!(
            "k = {k} out of range 1..={k_max} for {n} rows x {d} dims"
        )));
    }

    let mean = train.column_means();
    let xc = centered(train, &mean);
    let denom = (n - 1) as f64;
    let total: f64 = xc.iter().map(|v| v * v).sum::<f64>() / denom;
    if !(total > 0.0) {
        return Err(Error::Degenerate("training data has zero variance".into()));
    }

    let (eigenvalues, mut components) = if n < d {
        let g = (&xc * xc.transpose()) / denom;
        let eig = sym_eig_desc(&g)?;
        let lead = eig.values[0];
        let mut comps = DMatrix::zeros(d, k);
        let mut filled = 0;
        for i in 0..k {
            let lambda = eig.values[i];
            if lambda <= RANK_TOL * lead {
                break;
            }
            let v = xc.transpose() * eig.vectors.column(i) / (lambda * denom).sqrt();
            comps.set_column(i, &v);
            filled += 1;
        }
        complete_basis(&mut comps, filled);
        (eig.values, comps)
    } else {
        let c = (xc.transpose() * &xc) / denom;
        let eig = sym_eig_desc(&c)?;
        let comps = eig.vectors.columns(0, k).into_owned();
        (eig.values, comps)
    };

    for mut col in components.column_iter_mut() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        fix_sign(&mut v);
        col.copy_from_slice(&v);
    }

    let explained_variance_ratio: Vec<f64> = eigenvalues
        .iter()
        .take(k)
        .map(|&l| (l.max(0.0) / total).min(1.0))
        .collect();
    let cumulative_variance = explained_variance_ratio.iter().sum::<f64>().min(1.0);

    Ok(PcaModel {
        mean,
        components,
        explained_variance_ratio,
        cumulative_variance,
    })
}

/// Fills columns `filled..` with unit vectors orthogonal to the ones before
/// them (zero-variance directions have no preferred orientation).
fn complete_basis(comps: &mut DMatrix<f64>, filled: usize) {
    let d = comps.nrows();
    let mut next = filled;
    for axis in 0..d {
        if next == comps.ncols() {
            break;
        }
        let mut v = DVector::zeros(d);
        v[axis] = 1.0;
        for _ in 0..2 {
            for j in 0..next {
                let c = comps.column(j);
                let dot = c.dot(&v);
                v -= c * dot;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            comps.set_column(next, &(v / norm));
            next += 1;
        }
    }
}

/// `(x - mean)·Θ`, using the mean and components learned at fit time.
pub fn pca_transform(model: &PcaModel, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    if x.dims() != model.mean.len() {
        return Err(Error::Shape(format!(
            "PCA fitted on {} dims, got {}",
            model.mean.len(),
            x.dims()
        )));
    }
    let xc = centered(x, &model.mean);
    FeatureMatrix::from_dmatrix(&(xc * &model.components))
}
