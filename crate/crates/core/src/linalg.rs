//! Small dense linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues non-increasing, each
/// eigenvector sign-normalized with [`fix_sign`].
pub(crate) fn sym_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    // symmetrize against round-off so the solver sees an exactly symmetric input
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (out, &i) in idx.iter().enumerate() {
        let mut col: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut col);
        vectors.set_column(out, &DVector::from_vec(col));
    }
    (values, vectors)
}

pub(crate) fn mean_row(rows: &[&[f64]]) -> DVector<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let mut m = DVector::zeros(d);
    for r in rows {
        for (a, b) in m.iter_mut().zip(r.iter()) {
            *a += b;
        }
    }
    m / rows.len().max(1) as f64
}

/// Sum of outer products of `rows - center`.
pub(crate) fn scatter(rows: &[&[f64]], center: &DVector<f64>) -> DMatrix<f64> {
    let d = center.len();
    let mut s = DMatrix::zeros(d, d);
    for r in rows {
        let v = DVector::from_iterator(d, r.iter().zip(center.iter()).map(|(a, b)| a - b));
        s.ger(1.0, &v, &v, 1.0);
    }
    s
}


/// Dense row-major matrix as persisted in model documents.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub(crate) fn is_consistent(&self) -> bool {
        self.data.len() == self.rows * self.cols
    }
}

impl From<&DMatrix<f64>> for Matrix {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter().copied());
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}
