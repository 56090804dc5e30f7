use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    CrossEntropyWithSoftmax,
}

/// What a loss compares predictions against.
#[derive(Debug, Clone, Copy)]
pub enum LossTarget<'a> {
    Values(&'a Matrix),
    Classes(&'a [usize]),
}

impl LossKind {
    pub fn evaluate(&self, pred: &Matrix, target: LossTarget<'_>) -> Result<(f64, Matrix)> {
        match (self, target) {
            (LossKind::Mse, LossTarget::Values(t)) => mse_loss(pred, t),
            (LossKind::CrossEntropyWithSoftmax, LossTarget::Classes(c)) => {
                cross_entropy_loss(pred, c)
            }
            _ => Err(Error::Config(format!(
                "loss {self:?} does not accept this target kind"
            ))),
        }
    }
}

/// Mean squared error over every element, and its gradient `2 (pred - target) / count`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::dim(
            "mse_loss",
            format!("{:?}", target.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let count = pred.len().max(1) as f64;
    let diff = pred.sub(target)?;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / count;
    let grad = diff.map(|d| 2.0 * d / count);
    if !loss.is_finite() {
        return Err(Error::NonFinite("mse_loss"));
    }
    Ok((loss, grad))
}

/// Softmax cross-entropy averaged over the batch. Rows are shifted by
/// their max before exponentiation.
pub fn cross_entropy_loss(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (rows, classes) = logits.shape();
    if labels.len() != rows {
        return Err(Error::dim("cross_entropy_loss", rows, labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes,
        });
    }
    let batch = rows.max(1) as f64;
    let mut grad = Matrix::zeros(rows, classes);
    let mut total = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_sum = sum.ln();
        total += log_sum - (row[label] - max);
        let g = grad.row_mut(r);
        for (gc, &z) in g.iter_mut().zip(row) {
            *gc = (z - max).exp() / sum / batch;
        }
        g[label] -= 1.0 / batch;
    }
    let loss = total / batch;
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross_entropy_loss"));
    }
    Ok((loss, grad))
}

/// Index of the largest entry in each row; ties go to the lowest index.
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    (0..m.rows())
        .map(|r| {
            let row = m.row(r);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_of_identical_inputs_is_zero() {
        let a = Matrix::filled(2, 3, 0.4);
        let (l, g) = mse_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g, Matrix::zeros(2, 3));
    }

    #[test]
    fn mse_hand_arithmetic() {
        let p = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let t = Matrix::zeros(1, 2);
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn mse_matches_scalar_loop() {
        let p = Matrix::from_vec(2, 3, vec![0.3, -1.2, 2.5, 0.01, 7.0, -3.3]).unwrap();
        let t = Matrix::from_vec(2, 3, vec![1.1, 0.2, -0.4, 0.0, 6.5, -2.0]).unwrap();
        let (l, g) = mse_loss(&p, &t).unwrap();
        let mut s = 0.0;
        for i in 0..6 {
            let d = p.as_slice()[i] - t.as_slice()[i];
            s += d * d;
            assert!((g.as_slice()[i] - 2.0 * d / 6.0).abs() < 1e-12);
        }
        assert!((l - s / 6.0).abs() < 1e-12);
    }

    #[test]
    fn mse_shape_mismatch() {
        assert!(mse_loss(&Matrix::zeros(1, 2), &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn uniform_logits_give_ln_classes() {
        let logits = Matrix::filled(3, 10, 0.7);
        let (l, _) = cross_entropy_loss(&logits, &[0, 4, 9]).unwrap();
        assert!((l - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logit_drives_loss_to_zero() {
        let logits = Matrix::from_vec(1, 3, vec![0.0, 1e4, 0.0]).unwrap();
        let (l, g) = cross_entropy_loss(&logits, &[1]).unwrap();
        assert!(l < 1e-12);
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn huge_wrong_logit_stays_finite() {
        let logits = Matrix::from_vec(1, 2, vec![1e6, -1e6]).unwrap();
        let (l, _) = cross_entropy_loss(&logits, &[1]).unwrap();
        assert!(l.is_finite() && l > 1e5);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let data: Vec<f64> = (0..12)
            .map(|i| ((i * 37) % 11) as f64 * 0.3 - 1.5)
            .collect();
        let logits = Matrix::from_vec(3, 4, data).unwrap();
        let labels = [2, 0, 3];
        let (_, g) = cross_entropy_loss(&logits, &labels).unwrap();
        let h = 1e-5;
        for i in 0..12 {
            let mut plus = logits.clone();
            plus.as_mut_slice()[i] += h;
            let mut minus = logits.clone();
            minus.as_mut_slice()[i] -= h;
            let num = (cross_entropy_loss(&plus, &labels).unwrap().0
                - cross_entropy_loss(&minus, &labels).unwrap().0)
                / (2.0 * h);
            let a = g.as_slice()[i];
            let rel = (a - num).abs() / a.abs().max(num.abs()).max(1e-8);
            assert!(rel < 1e-4, "entry {i}: analytic {a} numeric {num}");
        }
    }

    #[test]
    fn label_out_of_range() {
        let r = cross_entropy_loss(&Matrix::zeros(1, 3), &[3]);
        assert!(matches!(
            r,
            Err(Error::LabelOutOfRange {
                label: 3,
                classes: 3
            })
        ));
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        let m = Matrix::from_rows(&[
            vec![0.1, 0.9, 0.1, 0.0],
            vec![0.5, 0.5, 0.5, 0.5],
            vec![-1.0, -2.0, 3.0, 3.0],
        ])
        .unwrap();
        assert_eq!(argmax_rows(&m), vec![1, 0, 2]);
    }

    #[test]
    fn loss_kind_rejects_mismatched_target() {
        let m = Matrix::zeros(1, 2);
        assert!(LossKind::Mse
            .evaluate(&m, LossTarget::Classes(&[0]))
            .is_err());
    }
}
