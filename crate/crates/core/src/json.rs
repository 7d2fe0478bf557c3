//! JSON interchange types shared by the library and the command-line tool.
//!
//! A matrix is {"rows": m, "cols": n, "data": [[re, im], ...]} with `data`
//! row-major of length rows * cols.

use ndarray::Array2;
use ndarray_linalg::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::CMatrix;
use crate::ncpoly::{parse_poly, HomogeneousIdeal, NcPolynomial};
use crate::reps::RepTuple;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().map(|v| [v.re, v.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Invalid(format!(
                "matrix data length {} does not match {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        let values: Vec<c64> = self.data.iter().map(|[re, im]| c64::new(*re, *im)).collect();
        Array2::from_shape_vec((self.rows, self.cols), values)
            .map_err(|e| Error::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdealJson {
    pub d: usize,
    pub generators: Vec<String>,
}

impl IdealJson {
    pub fn to_ideal(&self) -> Result<HomogeneousIdeal> {
        let gens = self
            .generators
            .iter()
            .map(|g| parse_poly(g, self.d))
            .collect::<Result<Vec<NcPolynomial>>>()?;
        HomogeneousIdeal::new(self.d, gens)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepTupleJson {
    pub d: usize,
    pub k: usize,
    pub matrices: Vec<MatrixJson>,
}

impl RepTupleJson {
    pub fn from_tuple(t: &RepTuple) -> Self {
        RepTupleJson {
            d: t.d(),
            k: t.k(),
            matrices: t.matrices().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    pub fn to_tuple(&self) -> Result<RepTuple> {
        if self.matrices.len() != self.d {
            return Err(Error::Invalid(format!(
                "expected {} matrices, found {}",
                self.d,
                self.matrices.len()
            )));
        }
        let mats = self
            .matrices
            .iter()
            .map(|m| {
                let a = m.to_matrix()?;
                if a.nrows() != self.k || a.ncols() != self.k {
                    return Err(Error::Invalid(format!(
                        "matrix is {}x{}, expected {}x{}",
                        a.nrows(),
                        a.ncols(),
                        self.k,
                        self.k
                    )));
                }
                Ok(a)
            })
            .collect::<Result<Vec<_>>>()?;
        RepTuple::new(mats)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpMapJson {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixJson>>,
}

impl CpMapJson {
    pub fn to_cp_map(&self) -> Result<crate::cpsg::CpMap> {
        match (&self.choi, &self.kraus) {
            (Some(c), None) => crate::cpsg::CpMap::from_choi(c.to_matrix()?),
            (None, Some(ks)) => {
                let mats = ks
                    .iter()
                    .map(|m| m.to_matrix())
                    .collect::<Result<Vec<_>>>()?;
                crate::cpsg::CpMap::from_kraus(self.k, &mats)
            }
            _ => Err(Error::Invalid(
                "CP map needs exactly one of \"choi\" or \"kraus\"".into(),
            )),
        }
    }
}
