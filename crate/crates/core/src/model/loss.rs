use super::tensor::Matrix;
use super::ModelError;
use crate::scalar::Scalar;

/// Per-token label distributions, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDistribution<T> {
    pub probs: Matrix<T>,
}

impl<T: Scalar> ProbDistribution<T> {
    /// Most probable label of row `i`; ties go to the lowest label id.
    pub fn argmax(&self, i: usize) -> usize {
        let row = self.probs.row(i);
        let mut best = 0;
        for (j, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = j;
            }
        }
        best
    }

    pub fn argmax_all(&self) -> Vec<usize> {
        (0..self.probs.rows()).map(|i| self.argmax(i)).collect()
    }
}

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> ProbDistribution<T> {
    let mut probs = logits.clone();
    for r in 0..probs.rows() {
        let row = probs.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    ProbDistribution { probs }
}

/// `−log softmax(row)[gold]` computed via log-sum-exp.
pub(crate) fn token_nll<T: Scalar>(row: &[T], gold: usize) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
    lse - row[gold]
}

/// Mean negative log-likelihood of `gold` over unmasked rows of `logits`.
pub fn cross_entropy<T: Scalar>(logits: &Matrix<T>, gold: &[usize], mask: &[bool]) -> Result<T, ModelError> {
    if gold.len() != logits.rows() || mask.len() != logits.rows() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} logit rows, {} gold labels, {} mask entries",
            logits.rows(),
            gold.len(),
            mask.len()
        )));
    }
    let mut total = T::zero();
    let mut count = 0usize;
    for (i, (&g, &keep)) in gold.iter().zip(mask).enumerate() {
        if !keep {
            continue;
        }
        if g >= logits.cols() {
            return Err(ModelError::LabelOutOfRange { label: g, n_labels: logits.cols() });
        }
        total += token_nll(logits.row(i), g);
        count += 1;
    }
    if count == 0 {
        return Err(ModelError::NoUnmaskedPositions);
    }
    Ok(total / T::lit(count as f64))
}
