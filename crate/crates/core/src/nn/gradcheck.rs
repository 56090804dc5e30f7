//! Central finite-difference gradient checking.

use super::activation::ActivationKind;
use super::loss::{LossKind, LossTarget};
use super::matrix::Matrix;
use super::mlp::{Mlp, ParamGrads};
use crate::error::Result;

/// Large enough that f64 cancellation noise stays near 1e-11, small enough
/// that perturbations rarely cross a ReLU kink.
pub const DEFAULT_STEP: f64 = 1e-4;

/// Gradients below this magnitude are compared in absolute terms.
pub const ABS_FLOOR: f64 = 1e-6;

/// Backprop gradients of `loss(m(x), target)`.
pub fn analytic_gradients(
    m: &Mlp,
    x: &Matrix,
    loss: LossKind,
    target: LossTarget<'_>,
) -> Result<ParamGrads> {
    let mut net = m.clone();
    let out = net.forward(x)?;
    let (_, g) = loss.evaluate(&out, target)?;
    Ok(net.backward(&g)?.1)
}

/// Central differences `(L(θ+h) - L(θ-h)) / 2h`, one parameter at a time.
#[allow(clippy::needless_range_loop)]
pub fn numeric_gradients(
    m: &Mlp,
    x: &Matrix,
    loss: LossKind,
    target: LossTarget<'_>,
    h: f64,
) -> Result<ParamGrads> {
    let mut net = m.clone();
    let mut grads = m.zero_grads();
    let eval = |net: &Mlp| -> Result<f64> { Ok(loss.evaluate(&net.predict(x)?, target)?.0) };
    for li in 0..net.layers.len() {
        for i in 0..net.layers[li].weights.len() {
            let orig = net.layers[li].weights.as_slice()[i];
            net.layers[li].weights.as_mut_slice()[i] = orig + h;
            let plus = eval(&net)?;
            net.layers[li].weights.as_mut_slice()[i] = orig - h;
            let minus = eval(&net)?;
            net.layers[li].weights.as_mut_slice()[i] = orig;
            grads[li].weights.as_mut_slice()[i] = (plus - minus) / (2.0 * h);
        }
        for i in 0..net.layers[li].bias.len() {
            let orig = net.layers[li].bias[i];
            net.layers[li].bias[i] = orig + h;
            let plus = eval(&net)?;
            net.layers[li].bias[i] = orig - h;
            let minus = eval(&net)?;
            net.layers[li].bias[i] = orig;
            grads[li].bias[i] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grads)
}

fn kinked(act: ActivationKind) -> bool {
    matches!(act, ActivationKind::Relu | ActivationKind::LeakyRelu(_))
}

fn crosses(act: ActivationKind, before: f64, after: f64) -> bool {
    kinked(act) && ((before > 0.0) != (after > 0.0))
}

/// Central differences like `numeric_gradients`, but each perturbed loss is
/// evaluated by updating only what the parameter reaches: one pre-activation
/// column of its layer, a rank-one change to the next layer, and a full
/// forward through the rest. Unchanged terms are bit-identical between the
/// two evaluations, which keeps cancellation noise low.
///
/// If a probe would flip the sign of any ReLU-family pre-activation, the
/// step for that parameter is quartered (down to `h / 4^8`) so the
/// difference quotient measures the derivative at the point, not across a
/// kink.
#[allow(clippy::needless_range_loop)]
pub fn numeric_gradients_local(
    m: &Mlp,
    x: &Matrix,
    loss: LossKind,
    target: LossTarget<'_>,
    h: f64,
) -> Result<ParamGrads> {
    let n = m.layers.len();
    let mut inputs = vec![x.clone()];
    let mut pre = Vec::with_capacity(n);
    for layer in &m.layers {
        let mut z = inputs.last().expect("nonempty").matmul(&layer.weights)?;
        z.add_row_vector(&layer.bias)?;
        let act = layer.activation;
        inputs.push(z.map(|v| act.apply(v)));
        pre.push(z);
    }
    let rows = x.rows();
    // Loss after adding `shift(r)` to pre-activation (r, j) of layer l, and
    // whether any kinked unit changed side.
    let eval = |l: usize, j: usize, shift: &dyn Fn(usize) -> f64| -> Result<(f64, bool)> {
        let act = m.layers[l].activation;
        let old = &inputs[l + 1];
        let mut out = old.clone();
        let mut crossed = false;
        for r in 0..rows {
            let z0 = pre[l].get(r, j);
            let z = z0 + shift(r);
            crossed |= crosses(act, z0, z);
            out.set(r, j, act.apply(z));
        }
        if l + 1 < n {
            let next = &m.layers[l + 1];
            let mut z = pre[l + 1].clone();
            for r in 0..rows {
                let d = out.get(r, j) - old.get(r, j);
                if d != 0.0 {
                    for (zk, wk) in z.row_mut(r).iter_mut().zip(next.weights.row(j)) {
                        *zk += d * wk;
                    }
                }
            }
            for k in l + 1..n {
                if k > l + 1 {
                    z = out.matmul(&m.layers[k].weights)?;
                    z.add_row_vector(&m.layers[k].bias)?;
                }
                let act = m.layers[k].activation;
                if kinked(act) {
                    crossed |= z
                        .as_slice()
                        .iter()
                        .zip(pre[k].as_slice())
                        .any(|(&a, &b)| crosses(act, b, a));
                }
                out = z.map(|v| act.apply(v));
            }
        }
        Ok((loss.evaluate(&out, target)?.0, crossed))
    };
    let quotient = |l: usize, j: usize, input: &dyn Fn(usize) -> f64| -> Result<f64> {
        let mut step = h;
        for attempt in 0..=8 {
            let (plus, c1) = eval(l, j, &|r| step * input(r))?;
            let (minus, c2) = eval(l, j, &|r| -step * input(r))?;
            if !(c1 || c2) || attempt == 8 {
                return Ok((plus - minus) / (2.0 * step));
            }
            step /= 4.0;
        }
        unreachable!()
    };
    let mut grads = m.zero_grads();
    for l in 0..n {
        let (fan_in, fan_out) = m.layers[l].weights.shape();
        let xin = &inputs[l];
        for i in 0..fan_in {
            for j in 0..fan_out {
                grads[l]
                    .weights
                    .set(i, j, quotient(l, j, &|r| xin.get(r, i))?);
            }
        }
        for j in 0..fan_out {
            grads[l].bias[j] = quotient(l, j, &|_| 1.0)?;
        }
    }
    Ok(grads)
}

/// `max |a - n| / max(|a|, |n|, ABS_FLOOR)` over all parameters.
pub fn max_relative_error(analytic: &ParamGrads, numeric: &ParamGrads) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        let pairs = a
            .weights
            .as_slice()
            .iter()
            .zip(n.weights.as_slice())
            .chain(a.bias.iter().zip(&n.bias));
        for (&x, &y) in pairs {
            let denom = x.abs().max(y.abs()).max(ABS_FLOOR);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

/// Compares backprop against central differences with the default step.
pub fn finite_diff_check(
    m: &Mlp,
    x: &Matrix,
    loss: LossKind,
    target: LossTarget<'_>,
) -> Result<f64> {
    let analytic = analytic_gradients(m, x, loss, target)?;
    let numeric = numeric_gradients_local(m, x, loss, target, DEFAULT_STEP)?;
    Ok(max_relative_error(&analytic, &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp::init_mlp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inputs(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen::<f64>()).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn linear_mse_is_nearly_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = init_mlp(&[5, 3], &[ActivationKind::Identity], &mut rng).unwrap();
        let x = inputs(4, 5, 3);
        let t = inputs(4, 3, 4);
        let err = finite_diff_check(&m, &x, LossKind::Mse, LossTarget::Values(&t)).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn small_classifier_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let acts = [ActivationKind::LEAKY, ActivationKind::Identity];
        let m = init_mlp(&[6, 5, 3], &acts, &mut rng).unwrap();
        let x = inputs(4, 6, 1);
        let labels = [0, 2, 1, 2];
        let err = finite_diff_check(
            &m,
            &x,
            LossKind::CrossEntropyWithSoftmax,
            LossTarget::Classes(&labels),
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn doubled_gradient_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = init_mlp(&[5, 3], &[ActivationKind::Identity], &mut rng).unwrap();
        let x = inputs(4, 5, 3);
        let t = inputs(4, 3, 4);
        let target = LossTarget::Values(&t);
        let mut analytic = analytic_gradients(&m, &x, LossKind::Mse, target).unwrap();
        for g in &mut analytic {
            g.weights.as_mut_slice().iter_mut().for_each(|v| *v *= 2.0);
            g.bias.iter_mut().for_each(|v| *v *= 2.0);
        }
        let numeric = numeric_gradients(&m, &x, LossKind::Mse, target, DEFAULT_STEP).unwrap();
        let err = max_relative_error(&analytic, &numeric);
        assert!((err - 0.5).abs() < 1e-6, "{err}");
    }

    #[test]
    fn local_and_full_differences_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let acts = [
            ActivationKind::Relu,
            ActivationKind::LEAKY,
            ActivationKind::Sigmoid,
        ];
        let m = init_mlp(&[7, 6, 5, 4], &acts, &mut rng).unwrap();
        let x = inputs(3, 7, 5);
        let t = inputs(3, 4, 6);
        let target = LossTarget::Values(&t);
        let full = numeric_gradients(&m, &x, LossKind::Mse, target, DEFAULT_STEP).unwrap();
        let local = numeric_gradients_local(&m, &x, LossKind::Mse, target, DEFAULT_STEP).unwrap();
        for (a, b) in full.iter().zip(&local) {
            for (p, q) in a
                .weights
                .as_slice()
                .iter()
                .zip(b.weights.as_slice())
                .chain(a.bias.iter().zip(&b.bias))
            {
                assert!((p - q).abs() < 1e-9, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn flipped_leaky_backward_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let acts = [
            ActivationKind::LEAKY,
            ActivationKind::LEAKY,
            ActivationKind::Identity,
        ];
        let m = init_mlp(&[8, 6, 5, 3], &acts, &mut rng).unwrap();
        let x = inputs(4, 8, 2).map(|v| v - 0.5);
        let labels = [0, 1, 2, 1];
        let target = LossTarget::Classes(&labels);
        let loss = LossKind::CrossEntropyWithSoftmax;
        let mut mutant = m.clone();
        let out = mutant.forward(&x).unwrap();
        for layer in &mut mutant.layers {
            if let ActivationKind::LeakyRelu(s) = layer.activation {
                layer.activation = ActivationKind::LeakyRelu(-s);
            }
        }
        let (_, g) = loss.evaluate(&out, target).unwrap();
        let wrong = mutant.backward(&g).unwrap().1;
        let numeric = numeric_gradients_local(&m, &x, loss, target, DEFAULT_STEP).unwrap();
        assert!(max_relative_error(&wrong, &numeric) > 1e-2);
        assert!(finite_diff_check(&m, &x, loss, target).unwrap() < 1e-4);
    }
}
