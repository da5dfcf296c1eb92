//! Small dense/sparse vector helpers. Summation is always index-ascending.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        let t = a[i] - b[i];
        s += t * t;
    }
    s
}

/// y += c * x
#[inline]
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += c * x[i];
    }
}

#[inline]
pub fn scale(c: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= c;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Sparse row stored as sorted (index, value) pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRow {
    pub fn new(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let (idx, val) = pairs.into_iter().filter(|p| p.1 != 0.0).unzip();
        SparseRow { idx, val }
    }

    pub fn from_dense(x: &[f64]) -> Self {
        SparseRow::new(x.iter().copied().enumerate().collect())
    }

    pub fn unit(i: usize) -> Self {
        SparseRow {
            idx: vec![i],
            val: vec![1.0],
        }
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, &i) in self.idx.iter().enumerate() {
            s += self.val[k] * x[i];
        }
        s
    }

    /// y += c * row
    #[inline]
    pub fn axpy_into(&self, c: f64, y: &mut [f64]) {
        for (k, &i) in self.idx.iter().enumerate() {
            y[i] += c * self.val[k];
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.idx.last().copied()
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        self.axpy_into(1.0, &mut out);
        out
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }
}
