//! Dataset containers and regression designs.
//!
//! A `CausalDataset` holds one source (experimental or observational):
//! outcomes `y`, binary treatments `w`, and a row-major covariate block
//! `z`. Regression designs are laid out `[w | z | 1]`: the causal
//! coordinate is always column 0 and the intercept, when present, is the
//! last column. All types are immutable after construction.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::SymMat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    Experimental,
    Observational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalDataset {
    y: Vec<f64>,
    w: Vec<u8>,
    z: Vec<f64>,
    d: usize,
    tag: SourceTag,
}

impl CausalDataset {
    /// Build and validate a dataset. `z` is row-major with `d` columns;
    /// it must hold exactly `y.len() * d` entries.
    pub fn new(y: Vec<f64>, w: Vec<u8>, z: Vec<f64>, d: usize, tag: SourceTag) -> Result<Self> {
        let ds = CausalDataset { y, w, z, d, tag };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if self.w.len() != n {
            return Err(Error::LengthMismatch {
                field: "w",
                expected: n,
                actual: self.w.len(),
            });
        }
        if self.z.len() != n * self.d {
            return Err(Error::LengthMismatch {
                field: "z",
                expected: n * self.d,
                actual: self.z.len(),
            });
        }
        for (i, v) in self.y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { field: "y", row: i });
            }
        }
        for (i, v) in self.w.iter().enumerate() {
            if *v > 1 {
                return Err(Error::NonBinaryTreatment {
                    row: i,
                    value: *v as f64,
                });
            }
        }
        if self.d > 0 {
            for (flat, v) in self.z.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue {
                        field: "z",
                        row: flat / self.d,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &[u8] {
        &self.w
    }

    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z[i * self.d..(i + 1) * self.d]
    }

    pub fn tag(&self) -> SourceTag {
        self.tag
    }

    pub fn arm_indices(&self, treated: bool) -> Vec<usize> {
        let want = treated as u8;
        (0..self.n()).filter(|&i| self.w[i] == want).collect()
    }

    pub fn arm_count(&self, treated: bool) -> usize {
        let want = treated as u8;
        self.w.iter().filter(|&&v| v == want).count()
    }

    pub fn has_both_arms(&self) -> bool {
        self.arm_count(true) > 0 && self.arm_count(false) > 0
    }

    /// Outcomes of one arm, in unit order.
    pub fn arm_outcomes(&self, treated: bool) -> Vec<f64> {
        let want = treated as u8;
        self.y
            .iter()
            .zip(&self.w)
            .filter(|(_, &w)| w == want)
            .map(|(&y, _)| y)
            .collect()
    }

    /// Row subset in the order given. Panics on out-of-range indices.
    pub fn subset(&self, idx: &[usize], tag: SourceTag) -> Self {
        let mut y = Vec::with_capacity(idx.len());
        let mut w = Vec::with_capacity(idx.len());
        let mut z = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            y.push(self.y[i]);
            w.push(self.w[i]);
            z.extend_from_slice(self.z_row(i));
        }
        CausalDataset {
            y,
            w,
            z,
            d: self.d,
            tag,
        }
    }

    /// Concatenate two sources row-wise. Covariate widths must agree.
    pub fn concat(&self, other: &Self, tag: SourceTag) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::ColumnMismatch {
                left: self.d,
                right: other.d,
            });
        }
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        let mut w = self.w.clone();
        w.extend_from_slice(&other.w);
        let mut z = self.z.clone();
        z.extend_from_slice(&other.z);
        Ok(CausalDataset {
            y,
            w,
            z,
            d: self.d,
            tag,
        })
    }
}

/// Dense regression design `[w | z | 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: Vec<f64>,
    rows: usize,
    cols: usize,
    intercept: bool,
}

impl DesignMatrix {
    pub fn from_dataset(ds: &CausalDataset, intercept: bool) -> Self {
        let idx: Vec<usize> = (0..ds.n()).collect();
        Self::from_subset(ds, &idx, intercept)
    }

    /// Design over a row subset, in subset order.
    pub fn from_subset(ds: &CausalDataset, idx: &[usize], intercept: bool) -> Self {
        let cols = 1 + ds.n_covariates() + intercept as usize;
        let mut x = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            x.push(ds.w()[i] as f64);
            x.extend_from_slice(ds.z_row(i));
            if intercept {
                x.push(1.0);
            }
        }
        DesignMatrix {
            x,
            rows: idx.len(),
            cols,
            intercept,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.cols..(i + 1) * self.cols]
    }

    /// X^T X.
    pub(crate) fn gram(&self) -> SymMat {
        let c = self.cols;
        let mut g = SymMat::zeros(c);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..c {
                for j in i..c {
                    g.add(i, j, row[i] * row[j]);
                }
            }
        }
        for i in 0..c {
            for j in 0..i {
                let v = g.get(j, i);
                g.set(i, j, v);
            }
        }
        g
    }

    /// X^T y.
    pub(crate) fn xt_y(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = alloc::vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            for j in 0..self.cols {
                out[j] += row[j] * y[r];
            }
        }
        out
    }
}

/// Fitted linear coefficients plus the index of the causal coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    theta: Vec<f64>,
    causal_index: usize,
}

impl ModelParams {
    pub fn new(theta: Vec<f64>, causal_index: usize) -> Result<Self> {
        if causal_index >= theta.len() {
            return Err(Error::InvalidConfig {
                reason: alloc::format!(
                    "causal index {causal_index} out of range for {} coefficients",
                    theta.len()
                ),
            });
        }
        for (i, v) in theta.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    field: "theta",
                    row: i,
                });
            }
        }
        Ok(ModelParams {
            theta,
            causal_index,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn causal_index(&self) -> usize {
        self.causal_index
    }

    /// The causal coordinate `beta(theta)`.
    pub fn beta(&self) -> f64 {
        self.theta[self.causal_index]
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn dot(&self, design_row: &[f64]) -> f64 {
        debug_assert_eq!(design_row.len(), self.theta.len());
        self.theta
            .iter()
            .zip(design_row)
            .map(|(a, b)| a * b)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> CausalDataset {
        CausalDataset::new(
            alloc::vec![1.0, 2.0, 3.0, 4.0],
            alloc::vec![1, 0, 1, 0],
            alloc::vec![0.5, -1.0, 2.5, 0.0],
            1,
            SourceTag::Experimental,
        )
        .unwrap()
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = CausalDataset::new(
            alloc::vec![1.0; 5],
            alloc::vec![0; 4],
            alloc::vec![],
            0,
            SourceTag::Experimental,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::LengthMismatch {
                field: "w",
                expected: 5,
                actual: 4
            }
        );
    }

    #[test]
    fn nan_outcome_is_rejected_with_row() {
        let err = CausalDataset::new(
            alloc::vec![1.0, f64::NAN, 3.0],
            alloc::vec![0, 1, 0],
            alloc::vec![],
            0,
            SourceTag::Experimental,
        )
        .unwrap_err();
        assert_eq!(err, Error::NonFiniteValue { field: "y", row: 1 });
    }

    #[test]
    fn nonbinary_treatment_is_rejected() {
        let err = CausalDataset::new(
            alloc::vec![1.0, 2.0],
            alloc::vec![0, 2],
            alloc::vec![],
            0,
            SourceTag::Experimental,
        )
        .unwrap_err();
        assert_eq!(err, Error::NonBinaryTreatment { row: 1, value: 2.0 });
    }

    #[test]
    fn design_matrix_layout_treatment_first_intercept_last() {
        let ds = toy();
        let x = DesignMatrix::from_dataset(&ds, true);
        assert_eq!(x.rows(), 4);
        assert_eq!(x.cols(), 3);
        assert_eq!(x.row(0), &[1.0, 0.5, 1.0]);
        assert_eq!(x.row(1), &[0.0, -1.0, 1.0]);
        let bare = DesignMatrix::from_dataset(&ds, false);
        assert_eq!(bare.cols(), 2);
        assert_eq!(bare.row(2), &[1.0, 2.5]);
    }

    #[test]
    fn design_matrix_is_a_pure_function_of_its_inputs() {
        let ds = toy();
        let a = DesignMatrix::from_dataset(&ds, true);
        let b = DesignMatrix::from_dataset(&ds, true);
        assert_eq!(a, b);
    }

    #[test]
    fn concat_rejects_mismatched_columns() {
        let a = toy();
        let b = CausalDataset::new(
            alloc::vec![1.0],
            alloc::vec![0],
            alloc::vec![],
            0,
            SourceTag::Observational,
        )
        .unwrap();
        assert_eq!(
            a.concat(&b, SourceTag::Observational).unwrap_err(),
            Error::ColumnMismatch { left: 1, right: 0 }
        );
    }

    #[test]
    fn subset_keeps_requested_order() {
        let ds = toy();
        let sub = ds.subset(&[2, 0], SourceTag::Experimental);
        assert_eq!(sub.y(), &[3.0, 1.0]);
        assert_eq!(sub.w(), &[1, 1]);
        assert_eq!(sub.z_row(0), &[2.5]);
    }

    #[test]
    fn model_params_checks_causal_index() {
        assert!(ModelParams::new(alloc::vec![1.0, 2.0], 2).is_err());
        let p = ModelParams::new(alloc::vec![1.5, 2.0], 0).unwrap();
        assert_eq!(p.beta(), 1.5);
    }
}
