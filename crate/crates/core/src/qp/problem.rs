use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Convex QP `min ½ zᵀHz + cᵀz  s.t.  Az + b ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T: Real> {
    h: DMatrix<T>,
    c: DVector<T>,
    a: DMatrix<T>,
    b: DVector<T>,
}

impl<T: Real> QpProblem<T> {
    /// Validates dimensions, symmetry and definiteness before accepting the data.
    ///
    /// `H` must be symmetric positive semidefinite and `AᵀA + H` must admit a
    /// Cholesky factorization.
    pub fn new(h: DMatrix<T>, c: DVector<T>, a: DMatrix<T>, b: DVector<T>) -> Result<Self> {
        let p = h.nrows();
        if h.ncols() != p {
            return Err(Error::Dimension(format!("H is {}x{}", h.nrows(), h.ncols())));
        }
        if c.len() != p {
            return Err(Error::Dimension(format!("c has {} entries, expected {p}", c.len())));
        }
        if a.ncols() != p {
            return Err(Error::Dimension(format!("A has {} columns, expected {p}", a.ncols())));
        }
        if b.len() != a.nrows() {
            return Err(Error::Dimension(format!(
                "b has {} entries, A has {} rows",
                b.len(),
                a.nrows()
            )));
        }
        let all_finite = h.iter().chain(c.iter()).chain(a.iter()).chain(b.iter());
        if all_finite.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("QP data"));
        }
        if !linalg::is_symmetric(&h, T::attainable(1e-12)) {
            return Err(Error::NotSymmetric("H"));
        }
        if !linalg::is_psd(&h, T::attainable(1e-12)) {
            return Err(Error::NotPositiveSemidefinite("H"));
        }
        let gram = a.transpose() * &a + &h;
        if gram.cholesky().is_none() {
            return Err(Error::Factorization("AᵀA + H"));
        }
        Ok(Self { h, c, a, b })
    }

    /// Skips validation; callers guarantee the invariants (e.g. parametric
    /// instances of an already validated condensed QP).
    pub(crate) fn trusted(h: DMatrix<T>, c: DVector<T>, a: DMatrix<T>, b: DVector<T>) -> Self {
        Self { h, c, a, b }
    }

    pub fn h(&self) -> &DMatrix<T> {
        &self.h
    }

    pub fn c(&self) -> &DVector<T> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DVector<T> {
        &self.b
    }

    /// Number of decision variables `p`.
    pub fn num_vars(&self) -> usize {
        self.h.nrows()
    }

    /// Number of inequality rows `m`.
    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn objective(&self, z: &DVector<T>) -> T {
        (z.dot(&(&self.h * z))) * T::lit(0.5) + self.c.dot(z)
    }

    /// Constraint slack `Az + b`.
    pub fn slack(&self, z: &DVector<T>) -> DVector<T> {
        &self.a * z + &self.b
    }

    /// Parses the JSON corpus format `{"H": [[..]], "c": [..], "A": [[..]], "b": [..]}`.
    ///
    /// Matrices are row-major nested arrays. `A` may be an empty array when
    /// `b` is empty, in which case it is taken as `0 x p`.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let h = json_matrix(&value, "H", None)?;
        let p = h.ncols();
        let c = json_vector(&value, "c")?;
        let a = json_matrix(&value, "A", Some(p))?;
        let b = json_vector(&value, "b")?;
        Self::new(h, c, a, b)
    }
}

fn json_vector<T: Real>(value: &serde_json::Value, key: &str) -> Result<DVector<T>> {
    let arr = value
        .get(key)
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::Parse(format!("missing array `{key}`")))?;
    let entries = arr
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .map(T::lit)
                .ok_or_else(|| Error::Parse(format!("`{key}[{i}]` is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(entries))
}

fn json_matrix<T: Real>(
    value: &serde_json::Value,
    key: &str,
    empty_cols: Option<usize>,
) -> Result<DMatrix<T>> {
    let rows = value
        .get(key)
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::Parse(format!("missing array `{key}`")))?;
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, empty_cols.unwrap_or(0)));
    }
    let mut data = Vec::new();
    let mut ncols = None;
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("`{key}[{i}]` is not an array")))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(n) if n != row.len() => {
                return Err(Error::Parse(format!(
                    "`{key}[{i}]` has {} entries, expected {n}",
                    row.len()
                )))
            }
            _ => {}
        }
        for (j, x) in row.iter().enumerate() {
            let x = x
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("`{key}[{i}][{j}]` is not a number")))?;
            data.push(T::lit(x));
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), ncols.unwrap_or(0), &data))
}
