use ndarray::{Array2, ArrayView1};

/// `n_a × n_t` matrix of natural-log token probabilities, one row per
/// sequence position.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbMatrix(Array2<f64>);

impl LogProbMatrix {
    /// Wraps an arbitrary matrix. No normalization is checked: averaged
    /// matrices are only subnormalized.
    pub fn from_array(values: Array2<f64>) -> Self {
        LogProbMatrix(values)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// `n_a`.
    pub fn n_positions(&self) -> usize {
        self.0.nrows()
    }

    /// `n_t`.
    pub fn n_tokens(&self) -> usize {
        self.0.ncols()
    }

    /// `log Σ_j exp(L_ij)` for every row `i`.
    pub fn row_logsumexp(&self) -> Vec<f64> {
        self.0.rows().into_iter().map(logsumexp).collect()
    }
}

pub(crate) fn logsumexp(row: ArrayView1<'_, f64>) -> f64 {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn logsumexp_of_normalized_rows_is_zero() {
        let p = [0.7f64, 0.2, 0.1];
        let m = LogProbMatrix::from_array(array![[p[0].ln(), p[1].ln(), p[2].ln()]]);
        assert!(m.row_logsumexp()[0].abs() < 1e-15);
    }

    #[test]
    fn logsumexp_handles_large_magnitudes() {
        let m = LogProbMatrix::from_array(array![[1000.0, 1000.0], [-1000.0, -1000.0]]);
        let lse = m.row_logsumexp();
        assert!((lse[0] - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((lse[1] - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
