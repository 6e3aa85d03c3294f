use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{SignalTensor, TensorKind};

/// Column of snapshot `(p, q)` in the reshaped matrix, `p + q N_sc`.
pub fn snapshot_column(p: usize, q: usize, subcarriers: usize) -> usize {
    p + q * subcarriers
}

/// Stacks every snapshot `Ybar[:, p, q]` as a column of an `N_RF x (N_sc M_sym)` matrix.
pub fn reshape_snapshots(y: &SignalTensor) -> Result<DMatrix<Complex64>> {
    if y.kind != TensorKind::DataRemoved {
        return Err(Error::InvalidConfig(
            "snapshot matrix needs a data-removed tensor".into(),
        ));
    }
    let mut out = DMatrix::zeros(y.chains, y.subcarriers * y.symbols);
    for q in 0..y.symbols {
        for p in 0..y.subcarriers {
            let col = snapshot_column(p, q, y.subcarriers);
            for (c, v) in y.snapshot(p, q).iter().enumerate() {
                out[(c, col)] = *v;
            }
        }
    }
    Ok(out)
}

/// Inverse of [`reshape_snapshots`].
pub fn unreshape_snapshots(
    m: &DMatrix<Complex64>,
    subcarriers: usize,
    symbols: usize,
) -> Result<SignalTensor> {
    if m.ncols() != subcarriers * symbols {
        return Err(Error::Dimension(format!(
            "{} columns cannot form a {subcarriers} x {symbols} grid",
            m.ncols()
        )));
    }
    let mut y = SignalTensor::zeros(m.nrows(), subcarriers, symbols, TensorKind::DataRemoved);
    for q in 0..symbols {
        for p in 0..subcarriers {
            let col = m.column(snapshot_column(p, q, subcarriers));
            y.snapshot_mut(p, q).copy_from_slice(col.as_slice());
        }
    }
    Ok(y)
}

/// `(1 / K) Y Y^H` over the `K` snapshot columns.
pub fn sample_covariance(snapshots: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let k = snapshots.ncols().max(1) as f64;
    (snapshots * snapshots.adjoint()).unscale(k)
}

/// Signal and noise subspaces of the snapshot covariance.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    /// Eigenvectors of the `source_count` largest eigenvalues.
    pub signal_basis: DMatrix<Complex64>,
    pub noise_basis: DMatrix<Complex64>,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl SubspaceDecomposition {
    /// `h^H E_n E_n^H h`, the energy of `h` in the noise subspace.
    pub fn noise_projection(&self, h: &[Complex64]) -> f64 {
        self.noise_basis
            .column_iter()
            .map(|e| {
                e.iter()
                    .zip(h)
                    .map(|(a, b)| a.conj() * b)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    }
}

/// Sample covariance followed by a Hermitian eigendecomposition split into
/// `source_count` signal and the remaining noise eigenvectors.
pub fn covariance_evd(
    snapshots: &DMatrix<Complex64>,
    source_count: usize,
) -> Result<SubspaceDecomposition> {
    let n = snapshots.nrows();
    if source_count == 0 || source_count >= n {
        return Err(Error::InvalidConfig(format!(
            "source count {source_count} leaves no noise subspace with {n} chains"
        )));
    }
    if snapshots.ncols() < n {
        return Err(Error::Dimension(format!(
            "{} snapshots for {n} chains",
            snapshots.ncols()
        )));
    }
    let cov = sample_covariance(snapshots);
    // enforce exact Hermitian symmetry before the solver
    let cov = (&cov + cov.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let pick = |idx: &[usize]| {
        DMatrix::from_columns(
            &idx.iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        )
    };
    Ok(SubspaceDecomposition {
        signal_basis: pick(&order[..source_count]),
        noise_basis: pick(&order[source_count..]),
        eigenvalues,
    })
}
