//! Pairwise distances between samples.
//!
//! The distance between two samples is the mean absolute difference of
//! their z-scored feature frequencies. It is a scaled L1 metric on the
//! z-vector space, so the full matrix is symmetric with a zero diagonal
//! and satisfies the triangle inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::CorpusProfile;
use crate::scalar::Scalar;

/// Dense symmetric distance matrix over sample labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaMatrix<T> {
    pub labels: Vec<String>,
    /// `values[i][j]` is the distance between samples i and j. Mirrored
    /// entries are copies, so symmetry is exact.
    pub values: Vec<Vec<T>>,
    /// Number of features the distances were computed over; `None` when
    /// the matrix was parsed from a table that does not carry it.
    pub n_features: Option<usize>,
}

impl<T: Scalar> DeltaMatrix<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i][j]
    }

    /// Square shape, exact symmetry, zero diagonal, no negative or
    /// non-finite entries.
    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.values.len() != n || self.values.iter().any(|row| row.len() != n) {
            return Err(Error::Integrity(format!(
                "matrix shape does not match {n} labels"
            )));
        }
        for i in 0..n {
            if self.values[i][i] != T::zero() {
                return Err(Error::Integrity(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = self.values[i][j];
                if v != self.values[j][i] {
                    return Err(Error::Integrity(format!("asymmetry at ({i}, {j})")));
                }
                if v < T::zero() || !v.is_finite() {
                    return Err(Error::Integrity(format!("invalid distance at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

/// Mean absolute difference of two equal-length z-vectors, summed in index
/// order.
pub fn delta_pair<T: Scalar>(zx: &[T], zy: &[T]) -> Result<T> {
    if zx.len() != zy.len() {
        return Err(Error::Argument(format!(
            "z-vector lengths differ: {} vs {}",
            zx.len(),
            zy.len()
        )));
    }
    if zx.is_empty() {
        return Err(Error::Argument(
            "z-vectors must have at least one feature".into(),
        ));
    }
    let mut sum = T::zero();
    for (&a, &b) in zx.iter().zip(zy) {
        sum = sum + (a - b).abs();
    }
    Ok(sum / T::from_count(zx.len()))
}

/// All pairwise distances of a profiled corpus. Labels keep the profile's
/// sample order; each pair is computed once and mirrored.
pub fn delta_matrix<T: Scalar>(p: &CorpusProfile<T>) -> Result<DeltaMatrix<T>> {
    let n = p.labels.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "distance matrix needs at least 2 samples, got {n}"
        )));
    }
    let mut values = vec![vec![T::zero(); n]; n];
    #[allow(clippy::needless_range_loop)] // writes both (i, j) and (j, i)
    for i in 0..n {
        for j in (i + 1)..n {
            let d = delta_pair(&p.zscores[i], &p.zscores[j])?;
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    Ok(DeltaMatrix {
        labels: p.labels.clone(),
        values,
        n_features: Some(p.spec.n),
    })
}
