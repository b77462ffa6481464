//! Sparse operators whose entries live in {0} union the unit circle with an
//! exact angle. Everything the represented algebra needs (products, adjoints,
//! disjointly supported sums) stays inside this kernel.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// 0 or e^{2 pi i angle} with an exact angle in [0,1[.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum UnitComplex {
    Zero,
    Phase(Scalar),
}

impl UnitComplex {
    pub fn one() -> UnitComplex {
        UnitComplex::Phase(Scalar::zero())
    }

    pub fn phase(angle: &Scalar) -> Result<UnitComplex> {
        Ok(UnitComplex::Phase(angle.mod1()?))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, UnitComplex::Zero)
    }

    pub fn mul(&self, other: &UnitComplex) -> Result<UnitComplex> {
        match (self, other) {
            (UnitComplex::Zero, _) | (_, UnitComplex::Zero) => Ok(UnitComplex::Zero),
            (UnitComplex::Phase(a), UnitComplex::Phase(b)) => {
                Ok(UnitComplex::Phase(a.add(b).mod1()?))
            }
        }
    }

    pub fn conj(&self) -> Result<UnitComplex> {
        match self {
            UnitComplex::Zero => Ok(UnitComplex::Zero),
            UnitComplex::Phase(a) => Ok(UnitComplex::Phase(a.neg().mod1()?)),
        }
    }

    /// Sum, defined only when the result stays in the kernel: one operand
    /// zero, or exact cancellation (angles half a turn apart).
    pub fn add(&self, other: &UnitComplex) -> Result<UnitComplex> {
        match (self, other) {
            (UnitComplex::Zero, x) | (x, UnitComplex::Zero) => Ok(x.clone()),
            (UnitComplex::Phase(a), UnitComplex::Phase(b)) => {
                let delta = a.sub(b).mod1()?;
                if delta.eq_exact(&Scalar::ratio(1, 2)?) {
                    Ok(UnitComplex::Zero)
                } else {
                    Err(Error::Coefficient(format!(
                        "sum of phases {} and {} is not zero or unit",
                        a.render(),
                        b.render()
                    )))
                }
            }
        }
    }

    pub fn eq_uc(&self, other: &UnitComplex) -> bool {
        match (self, other) {
            (UnitComplex::Zero, UnitComplex::Zero) => true,
            (UnitComplex::Phase(a), UnitComplex::Phase(b)) => a.eq_exact(b),
            _ => false,
        }
    }
}

/// Finite sparse operator over an orbit basis. Columns hold sorted
/// (row, coefficient) entries; zero coefficients are never stored.
///
/// Truncation bookkeeping: `col_core[j]` means column j of the infinite
/// operator is fully represented here; `row_core[i]` the same for row i
/// (so the adjoint just swaps the two masks). Compositions and sums only
/// trust columns whose every intermediate stays in-basis.
#[derive(Debug, Clone, Serialize)]
pub struct SparseOperator {
    pub dim: usize,
    pub cols: Vec<Vec<(usize, UnitComplex)>>,
    pub col_core: Vec<bool>,
    pub row_core: Vec<bool>,
}

/// Outcome of a column-by-column comparison restricted to trusted columns.
#[derive(Debug, Clone, Serialize)]
pub struct ColumnComparison {
    pub columns_checked: usize,
    pub columns_censored: usize,
    pub violations: Vec<usize>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> SparseOperator {
        SparseOperator {
            dim,
            cols: vec![Vec::new(); dim],
            col_core: vec![true; dim],
            row_core: vec![true; dim],
        }
    }

    pub fn identity(dim: usize) -> SparseOperator {
        let mut op = SparseOperator::zero(dim);
        for j in 0..dim {
            op.cols[j].push((j, UnitComplex::one()));
        }
        op
    }

    pub fn is_diagonal(&self) -> bool {
        self.cols
            .iter()
            .enumerate()
            .all(|(j, col)| col.iter().all(|(r, _)| *r == j))
    }

    fn rows(&self) -> Vec<Vec<(usize, UnitComplex)>> {
        let mut rows = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for (r, v) in col {
                rows[*r].push((j, v.clone()));
            }
        }
        rows
    }

    pub fn adjoint(&self) -> Result<SparseOperator> {
        let mut cols = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for (r, v) in col {
                cols[*r].push((j, v.conj()?));
            }
        }
        for col in &mut cols {
            col.sort_by_key(|(r, _)| *r);
        }
        Ok(SparseOperator {
            dim: self.dim,
            cols,
            col_core: self.row_core.clone(),
            row_core: self.col_core.clone(),
        })
    }

    /// self * rhs (apply rhs first).
    pub fn compose(&self, rhs: &SparseOperator) -> Result<SparseOperator> {
        if self.dim != rhs.dim {
            return Err(Error::BasisMismatch);
        }
        let dim = self.dim;
        let mut cols = vec![Vec::new(); dim];
        let mut col_core = vec![false; dim];
        for j in 0..dim {
            let mut acc: Vec<(usize, UnitComplex)> = Vec::new();
            for (r, v) in &rhs.cols[j] {
                for (r2, v2) in &self.cols[*r] {
                    let w = v2.mul(v)?;
                    if w.is_zero() {
                        continue;
                    }
                    match acc.iter_mut().find(|(i, _)| i == r2) {
                        Some(slot) => slot.1 = slot.1.add(&w)?,
                        None => acc.push((*r2, w)),
                    }
                }
            }
            acc.retain(|(_, v)| !v.is_zero());
            acc.sort_by_key(|(r, _)| *r);
            cols[j] = acc;
            col_core[j] =
                rhs.col_core[j] && rhs.cols[j].iter().all(|(r, _)| self.col_core[*r]);
        }
        let self_rows = self.rows();
        let mut row_core = vec![false; dim];
        for i in 0..dim {
            row_core[i] =
                self.row_core[i] && self_rows[i].iter().all(|(k, _)| rhs.row_core[*k]);
        }
        Ok(SparseOperator {
            dim,
            cols,
            col_core,
            row_core,
        })
    }

    /// Entrywise sum; collisions must cancel or keep a single unit entry.
    pub fn add(&self, rhs: &SparseOperator) -> Result<SparseOperator> {
        if self.dim != rhs.dim {
            return Err(Error::BasisMismatch);
        }
        let dim = self.dim;
        let mut cols = vec![Vec::new(); dim];
        for j in 0..dim {
            let mut acc: Vec<(usize, UnitComplex)> = self.cols[j].clone();
            for (r, v) in &rhs.cols[j] {
                match acc.iter_mut().find(|(i, _)| i == r) {
                    Some(slot) => slot.1 = slot.1.add(v)?,
                    None => acc.push((*r, v.clone())),
                }
            }
            acc.retain(|(_, v)| !v.is_zero());
            acc.sort_by_key(|(r, _)| *r);
            cols[j] = acc;
        }
        let col_core = (0..dim).map(|j| self.col_core[j] && rhs.col_core[j]).collect();
        let row_core = (0..dim).map(|i| self.row_core[i] && rhs.row_core[i]).collect();
        Ok(SparseOperator {
            dim,
            cols,
            col_core,
            row_core,
        })
    }

    /// Compare on columns that are core in both operands and not in the
    /// caller's censor set.
    pub fn eq_on_core(&self, other: &SparseOperator, censor: &[bool]) -> Result<ColumnComparison> {
        if self.dim != other.dim || censor.len() != self.dim {
            return Err(Error::BasisMismatch);
        }
        let mut checked = 0usize;
        let mut censored = 0usize;
        let mut violations = Vec::new();
        for j in 0..self.dim {
            if censor[j] || !self.col_core[j] || !other.col_core[j] {
                censored += 1;
                continue;
            }
            checked += 1;
            let a = &self.cols[j];
            let b = &other.cols[j];
            let same = a.len() == b.len()
                && a.iter()
                    .zip(b.iter())
                    .all(|((r1, v1), (r2, v2))| r1 == r2 && v1.eq_uc(v2));
            if !same {
                violations.push(j);
            }
        }
        Ok(ColumnComparison {
            columns_checked: checked,
            columns_censored: censored,
            violations,
        })
    }
}
