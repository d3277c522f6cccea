/// Dense row-major matrix of `f64` features. `NaN` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, n_cols: usize) -> Self {
        assert!(n_cols > 0, "matrix needs at least one column");
        assert_eq!(data.len() % n_cols, 0, "data length not a multiple of n_cols");
        Self {
            n_rows: data.len() / n_cols,
            data,
            n_cols,
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], n_cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), n_cols, "ragged row");
            data.extend_from_slice(r.as_ref());
        }
        Self::new(data, n_cols)
    }

    pub fn empty(n_cols: usize) -> Self {
        Self::new(Vec::new(), n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols)
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[col])
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_cols, "ragged row");
        self.data.extend_from_slice(row);
        self.n_rows += 1;
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            n_rows: indices.len(),
            n_cols: self.n_cols,
        }
    }
}
