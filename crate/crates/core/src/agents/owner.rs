use crate::error::{Error, Result};
use crate::nn::{argmax_rows, cross_entropy_loss, Matrix, Mlp, OptimizerConfig, OptimizerState};

/// The label owner's transfer head over concatenated host encodings.
#[derive(Debug, Clone)]
pub struct Owner {
    pub classifier: Mlp,
    opt: OptimizerState,
}

impl Owner {
    pub fn new(classifier: Mlp, opt: &OptimizerConfig) -> Result<Self> {
        opt.validate()?;
        Ok(Self {
            classifier,
            opt: opt.build(),
        })
    }
}

/// Guest encoders, concatenation, every host encoder, concatenation.
/// `parts[i]` is guest `i`'s slice of the same entity batch.
pub fn encode_entity(guests: &[&Mlp], hosts: &[&Mlp], parts: &[&Matrix]) -> Result<Matrix> {
    if guests.len() != parts.len() {
        return Err(Error::dim("encode_entity parts", guests.len(), parts.len()));
    }
    let guest_out = guests
        .iter()
        .zip(parts)
        .map(|(m, x)| m.predict(x))
        .collect::<Result<Vec<_>>>()?;
    let joined = Matrix::hcat(&guest_out.iter().collect::<Vec<_>>())?;
    let host_out = hosts
        .iter()
        .map(|h| h.predict(&joined))
        .collect::<Result<Vec<_>>>()?;
    Matrix::hcat(&host_out.iter().collect::<Vec<_>>())
}

/// One pass over `order` (row indices into `encoded`) in minibatches.
/// Only the classifier changes. Returns the mean batch loss.
pub fn owner_train_epoch(
    o: &mut Owner,
    encoded: &Matrix,
    labels: &[usize],
    order: &[usize],
    batch_size: usize,
) -> Result<f64> {
    if order.is_empty() {
        return Err(Error::Config(
            "owner has no aligned samples to train on".into(),
        ));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut total = 0.0;
    let mut batches = 0usize;
    for chunk in order.chunks(batch_size) {
        let x = encoded.select_rows(chunk)?;
        let y: Vec<usize> = chunk.iter().map(|&r| labels[r]).collect();
        let logits = o.classifier.forward(&x)?;
        let (loss, g) = cross_entropy_loss(&logits, &y)?;
        let grads = o.classifier.backward_params(&g)?;
        o.opt.step(&mut o.classifier, &grads)?;
        total += loss;
        batches += 1;
    }
    Ok(total / batches as f64)
}

/// Mean cross-entropy without updating.
pub fn owner_loss(o: &Owner, encoded: &Matrix, labels: &[usize]) -> Result<f64> {
    let logits = o.classifier.predict(encoded)?;
    Ok(cross_entropy_loss(&logits, labels)?.0)
}

/// Argmax class per row; ties go to the lowest index.
pub fn predict(o: &Owner, encoded: &Matrix) -> Result<Vec<usize>> {
    Ok(argmax_rows(&o.classifier.predict(encoded)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_mlp, ActivationKind, DenseLayer};
    use crate::rng::{stream, Domain};

    fn identity(n: usize) -> Mlp {
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            w.set(i, i, 1.0);
        }
        Mlp::new(vec![DenseLayer::new(
            w,
            vec![0.0; n],
            ActivationKind::Identity,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn encoding_width_and_hand_composition() {
        let g = [identity(1), identity(2)];
        let mut doubler = identity(3);
        doubler.layers[0].weights = doubler.layers[0].weights.map(|v| 2.0 * v);
        let h = [identity(3), doubler];
        let a = Matrix::from_rows(&[vec![1.0], vec![4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![2.0, 3.0], vec![5.0, 6.0]]).unwrap();
        let out = encode_entity(&[&g[0], &g[1]], &[&h[0], &h[1]], &[&a, &b]).unwrap();
        assert_eq!(out.row(0), &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(out.row(1), &[4.0, 5.0, 6.0, 8.0, 10.0, 12.0]);
    }

    #[test]
    fn fresh_head_starts_near_uniform() {
        let mut r = stream(3, Domain::OwnerModel, 0);
        let acts = [
            ActivationKind::LEAKY,
            ActivationKind::LEAKY,
            ActivationKind::Identity,
        ];
        let m = init_mlp(&[640, 160, 40, 10], &acts, &mut r).unwrap();
        let x = Matrix::filled(32, 640, 0.05);
        let o = Owner::new(m, &OptimizerConfig::sgd(1e-2, 0.5)).unwrap();
        let labels: Vec<usize> = (0..32).map(|i| i % 10).collect();
        let loss = owner_loss(&o, &x, &labels).unwrap();
        assert!((loss - 10f64.ln()).abs() < 0.2, "{loss}");
    }

    #[test]
    fn memorizes_a_single_sample() {
        let mut r = stream(1, Domain::OwnerModel, 0);
        let acts = [ActivationKind::LEAKY, ActivationKind::Identity];
        let m = init_mlp(&[4, 8, 3], &acts, &mut r).unwrap();
        let mut o = Owner::new(m, &OptimizerConfig::sgd(1e-1, 0.5)).unwrap();
        let x = Matrix::from_rows(&[vec![0.2, 0.9, 0.1, 0.5]]).unwrap();
        for _ in 0..100 {
            owner_train_epoch(&mut o, &x, &[2], &[0], 4).unwrap();
        }
        assert_eq!(predict(&o, &x).unwrap(), [2]);
    }

    #[test]
    fn empty_order_is_an_error() {
        let m = identity(2);
        let mut o = Owner::new(m, &OptimizerConfig::sgd(1e-2, 0.0)).unwrap();
        assert!(owner_train_epoch(&mut o, &Matrix::zeros(1, 2), &[0], &[], 4).is_err());
    }
}
