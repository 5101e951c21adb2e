//! Kernels, Gram matrices, double centering and a sorted symmetric
//! eigendecomposition shared by the PCA and TCA projections.

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Above this many rows the median heuristic works on a seeded subsample.
pub const MEDIAN_HEURISTIC_MAX_ROWS: usize = 2000;

/// Relative asymmetry accepted by [`sym_eig_desc`].
pub const SYMMETRY_TOL: f64 = 1e-9;

/// RBF bandwidth: a fixed value or one derived from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gamma {
    Fixed(f64),
    MedianHeuristic,
}

/// Kernel choice before it has seen data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    Rbf(Gamma),
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::Rbf(Gamma::Fixed(g)) = self {
            if !(*g > 0.0) || !g.is_finite() {
                return Err(Error::Config(format!("rbf gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }

    /// Fixes the bandwidth, running the median heuristic over `data` if asked.
    pub fn resolve(&self, data: &FeatureMatrix, seed: u64) -> Result<Kernel> {
        self.validate()?;
        Ok(match *self {
            KernelSpec::Linear => Kernel::Linear,
            KernelSpec::Rbf(Gamma::Fixed(gamma)) => Kernel::Rbf { gamma },
            KernelSpec::Rbf(Gamma::MedianHeuristic) => Kernel::Rbf {
                gamma: median_heuristic_gamma(data, seed)?,
            },
        })
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf(Gamma::MedianHeuristic) => write!(f, "rbf(median)"),
            KernelSpec::Rbf(Gamma::Fixed(g)) => write!(f, "rbf({g})"),
        }
    }
}

/// Parses the [`Display`](std::fmt::Display) form: `linear`, `rbf` or
/// `rbf(median)`, and `rbf(<gamma>)`.
impl std::str::FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let spec = match s.as_str() {
            "linear" => KernelSpec::Linear,
            "rbf" | "rbf(median)" => KernelSpec::Rbf(Gamma::MedianHeuristic),
            other => {
                let gamma = other
                    .strip_prefix("rbf(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|g| g.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown kernel {other:?}")))?;
                KernelSpec::Rbf(Gamma::Fixed(gamma))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A kernel with every parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// `k(x, y) = x·y`
    Linear,
    /// `k(x, y) = exp(-gamma·‖x - y‖²)`
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Shape(format!(
                "kernel arguments have lengths {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            Kernel::Rbf { gamma } => (-gamma * sq_dist(x, y)).exp(),
        }
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `K[i, j] = k(a_i, b_j)`. Rows are filled in parallel; each entry is
/// computed independently so the result does not depend on thread count.
pub fn gram(kernel: &Kernel, a: &FeatureMatrix, b: &FeatureMatrix) -> Result<DMatrix<f64>> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!(
            "gram operands have {} and {} dims",
            a.dims(),
            b.dims()
        )));
    }
    let cols = b.rows();
    let rows: Vec<Vec<f64>> = (0..a.rows())
        .into_par_iter()
        .map(|i| {
            let x = a.row(i);
            b.iter_rows().map(|y| kernel.eval_unchecked(x, y)).collect()
        })
        .collect();
    Ok(DMatrix::from_fn(a.rows(), cols, |i, j| rows[i][j]))
}

/// `gamma = 1 / (2·m²)` with `m` the median pairwise Euclidean distance
/// between distinct rows.
pub fn median_heuristic_gamma(a: &FeatureMatrix, seed: u64) -> Result<f64> {
    if a.rows() < 2 {
        return Err(Error::Config(format!(
            "median heuristic needs at least 2 rows, got {}",
            a.rows()
        )));
    }
    let idx: Vec<usize> = if a.rows() > MEDIAN_HEURISTIC_MAX_ROWS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = sample(&mut rng, a.rows(), MEDIAN_HEURISTIC_MAX_ROWS).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..a.rows()).collect()
    };

    let mut dists: Vec<f64> = idx
        .par_iter()
        .enumerate()
        .flat_map_iter(|(p, &i)| {
            idx[p + 1..]
                .iter()
                .map(move |&j| sq_dist(a.row(i), a.row(j)).sqrt())
        })
        .collect();
    let median = median_in_place(&mut dists);
    if !(median > 0.0) {
        return Err(Error::Degenerate(
            "median pairwise distance is zero (rows identical)".into(),
        ));
    }
    Ok(1.0 / (2.0 * median * median))
}

fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    let cmp = |a: &f64, b: &f64| a.partial_cmp(b).unwrap_or(Ordering::Equal);
    let (_, upper, _) = v.select_nth_unstable_by(n / 2, cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// `H·K·H` with `H = I - (1/n)·11ᵀ`.
pub fn center_gram(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !k.is_square() {
        return Err(Error::Shape(format!(
            "gram matrix must be square, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let n = k.nrows() as f64;
    let row_means: Vec<f64> = (0..k.nrows()).map(|i| k.row(i).sum() / n).collect();
    let col_means: Vec<f64> = (0..k.ncols()).map(|j| k.column(j).sum() / n).collect();
    let grand = row_means.iter().sum::<f64>() / n;
    Ok(DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
        k[(i, j)] - row_means[i] - col_means[j] + grand
    }))
}

/// Eigenpairs of a symmetric matrix, largest eigenvalue first.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > SYMMETRY_TOL * scale {
                return Err(Error::Shape(format!(
                    "matrix not symmetric at ({i},{j}): gap {gap:e}"
                )));
            }
        }
    }
    Ok(())
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Symmetric eigendecomposition, sorted descending, with deterministic signs.
pub fn sym_eig_desc(m: &DMatrix<f64>) -> Result<SymEigen> {
    check_symmetric(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver failed on {n}x{n}")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(src).iter().copied().collect();
        fix_sign(&mut col);
        vectors.set_column(dst, &nalgebra::DVector::from_vec(col));
    }
    Ok(SymEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows).unwrap()
    }

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn linear_kernel_is_dot_product() {
        assert_eq!(Kernel::Linear.eval(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 5.0);
    }

    #[test]
    fn rbf_kernel_values() {
        let k = Kernel::Rbf { gamma: 0.5 };
        assert_eq!(k.eval(&[3.0, -1.0], &[3.0, -1.0]).unwrap(), 1.0);
        // exp(-0.5 * 2)
        let v = k.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn kernel_length_mismatch() {
        assert!(matches!(
            Kernel::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn kernel_spec_validation() {
        assert!(KernelSpec::Rbf(Gamma::Fixed(0.0)).validate().is_err());
        assert!(KernelSpec::Rbf(Gamma::Fixed(-1.0)).validate().is_err());
        assert!(KernelSpec::Rbf(Gamma::Fixed(0.3)).validate().is_ok());
    }

    #[test]
    fn gram_identity_rows() {
        let a = fm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let g = gram(&Kernel::Linear, &a, &a).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
    }

    #[test]
    fn gram_transpose_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rand_m = |r: usize| {
            let v: Vec<f64> = (0..r * 4).map(|_| rng.random_range(-2.0..2.0)).collect();
            FeatureMatrix::new(r, 4, v).unwrap()
        };
        let a = rand_m(5);
        let b = rand_m(7);
        for k in [Kernel::Linear, Kernel::Rbf { gamma: 0.7 }] {
            let ab = gram(&k, &a, &b).unwrap();
            let ba = gram(&k, &b, &a).unwrap();
            assert_eq!(ab, ba.transpose());
        }
    }

    #[test]
    fn rbf_gram_diagonal_is_one() {
        let a = fm(&[&[1.0, 2.0], &[3.0, -4.0], &[0.5, 0.5]]);
        let g = gram(&Kernel::Rbf { gamma: 0.1 }, &a, &a).unwrap();
        assert!(g.diagonal().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn gram_dims_mismatch() {
        let a = fm(&[&[1.0, 2.0]]);
        let b = fm(&[&[1.0]]);
        assert!(matches!(gram(&Kernel::Linear, &a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn gram_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..30 * 3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = FeatureMatrix::new(30, 3, v).unwrap();
        for k in [Kernel::Linear, Kernel::Rbf { gamma: 0.4 }] {
            let eig = sym_eig_desc(&gram(&k, &a, &a).unwrap()).unwrap();
            assert!(eig.values.iter().all(|&l| l > -1e-7), "{k:?}");
        }
    }

    #[test]
    fn median_heuristic_single_pair() {
        let a = fm(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(median_heuristic_gamma(&a, 0).unwrap(), 0.125);
    }

    #[test]
    fn median_heuristic_four_rows() {
        // collinear 0,1,2,3 gives distances {1,1,1,2,2,3}
        let a = fm(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
        let g = median_heuristic_gamma(&a, 0).unwrap();
        assert!((g - 1.0 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn median_heuristic_degenerate() {
        let a = fm(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(median_heuristic_gamma(&a, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn median_heuristic_subsample_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..2100 * 2).map(|_| rng.random_range(0.0..1.0)).collect();
        let a = FeatureMatrix::new(2100, 2, v).unwrap();
        let g1 = median_heuristic_gamma(&a, 4).unwrap();
        let g2 = median_heuristic_gamma(&a, 4).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn center_all_ones_is_zero() {
        let k = DMatrix::from_element(4, 4, 1.0);
        assert!(center_gram(&k).unwrap().amax() < 1e-15);
    }

    #[test]
    fn center_matches_explicit_triple_product() {
        let k = random_symmetric(5, 3);
        let h = DMatrix::identity(5, 5) - DMatrix::from_element(5, 5, 1.0 / 5.0);
        let explicit = &h * &k * &h;
        let c = center_gram(&k).unwrap();
        assert!((c - explicit).amax() < 1e-14);
    }

    #[test]
    fn center_is_idempotent_and_zero_sum() {
        let k = random_symmetric(8, 4);
        let c = center_gram(&k).unwrap();
        let cc = center_gram(&c).unwrap();
        assert!((&cc - &c).amax() < 1e-8);
        let tol = 1e-8 * 8.0 * k.amax();
        for i in 0..8 {
            assert!(c.row(i).sum().abs() < tol);
            assert!(c.column(i).sum().abs() < tol);
        }
    }

    #[test]
    fn center_rejects_non_square() {
        assert!(matches!(center_gram(&DMatrix::zeros(2, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn eig_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = sym_eig_desc(&m).unwrap();
        assert_eq!(e.values.len(), 3);
        for (got, want) in e.values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        let expect_axis = [0, 2, 1];
        for (col, &axis) in expect_axis.iter().enumerate() {
            assert!((e.vectors[(axis, col)] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_exchange_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = sym_eig_desc(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - r).abs() < 1e-12);
        assert!((e.vectors[(1, 0)] - r).abs() < 1e-12);
        // (1,-1)/√2: the first component wins the magnitude tie and is positive
        assert!((e.vectors[(0, 1)] - r).abs() < 1e-12);
        assert!((e.vectors[(1, 1)] + r).abs() < 1e-12);
    }

    #[test]
    fn eig_residuals_random_6x6() {
        let m = random_symmetric(6, 21);
        let e = sym_eig_desc(&m).unwrap();
        let norm = e.values.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        for i in 0..6 {
            let v = e.vectors.column(i);
            let r = (&m * v - v * e.values[i]).norm();
            assert!(r < 1e-7 * norm, "pair {i}: {r}");
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig_desc(&m), Err(Error::Shape(_))));
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut tie = vec![-0.5, 0.5];
        fix_sign(&mut tie);
        assert_eq!(tie, vec![0.5, -0.5]);
    }

    #[test]
    fn kernel_spec_text_round_trip() {
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Rbf(Gamma::MedianHeuristic),
            KernelSpec::Rbf(Gamma::Fixed(0.125)),
        ] {
            assert_eq!(spec.to_string().parse::<KernelSpec>().unwrap(), spec);
        }
        assert_eq!("RBF".parse::<KernelSpec>().unwrap(), KernelSpec::Rbf(Gamma::MedianHeuristic));
        assert!(matches!("poly".parse::<KernelSpec>(), Err(Error::Config(_))));
        assert!(matches!("rbf(-1)".parse::<KernelSpec>(), Err(Error::Config(_))));
    }
}
