use rand::Rng;

use super::activation::ActivationKind;
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Gradients for one dense layer, shaped like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LayerGrads {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        LayerGrads {
            weights: Matrix::zeros(layer.weights.rows(), layer.weights.cols()),
            bias: vec![0.0; layer.bias.len()],
        }
    }
}

pub type ParamGrads = Vec<LayerGrads>;

#[derive(Debug, Clone)]
struct ForwardCache {
    input: Matrix,
    pre: Matrix,
}

/// Affine map `x W + b` followed by an activation. `weights` is `in x out`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
    cache: Option<ForwardCache>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: ActivationKind) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::dim("DenseLayer::new", weights.cols(), bias.len()));
        }
        activation.validate()?;
        Ok(Self {
            weights,
            bias,
            activation,
            cache: None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    fn pre_activation(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim("dense forward", self.input_dim(), x.cols()));
        }
        let mut pre = x.matmul(&self.weights)?;
        pre.add_row_vector(&self.bias)?;
        Ok(pre)
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let pre = self.pre_activation(x)?;
        let act = self.activation;
        let out = pre.map(|z| act.apply(z));
        self.cache = Some(ForwardCache {
            input: x.clone(),
            pre,
        });
        Ok(out)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let act = self.activation;
        Ok(self.pre_activation(x)?.map(|z| act.apply(z)))
    }

    /// Consumes the forward cache.
    pub fn backward(&mut self, grad_out: &Matrix) -> Result<(Matrix, LayerGrads)> {
        let (grad_in, grads) = self.backward_inner(grad_out, true)?;
        Ok((grad_in.expect("input gradient requested"), grads))
    }

    fn backward_inner(
        &mut self,
        grad_out: &Matrix,
        want_input: bool,
    ) -> Result<(Option<Matrix>, LayerGrads)> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("backward called without a matching forward".into()))?;
        if grad_out.shape() != cache.pre.shape() {
            return Err(Error::dim(
                "dense backward",
                format!("{:?}", cache.pre.shape()),
                format!("{:?}", grad_out.shape()),
            ));
        }
        let act = self.activation;
        let mut delta = grad_out.clone();
        for (d, &z) in delta.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
            *d *= act.derivative(z);
        }
        let grads = LayerGrads {
            weights: cache.input.matmul_tn(&delta)?,
            bias: delta.column_sums(),
        };
        let grad_in = if want_input {
            Some(delta.matmul_nt(&self.weights)?)
        } else {
            None
        };
        Ok((grad_in, grads))
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// A feed-forward stack of dense layers.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Builds an MLP with dims `shape[0] -> shape[1] -> ...`.
///
/// Weights are drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` (Kaiming
/// uniform with the `a = sqrt(5)` gain) in row-major order, layer by layer.
/// Biases start at zero.
pub fn init_mlp<R: Rng + ?Sized>(
    shape: &[usize],
    activations: &[ActivationKind],
    rng: &mut R,
) -> Result<Mlp> {
    if shape.len() < 2 || activations.len() != shape.len() - 1 {
        return Err(Error::Config(format!(
            "mlp needs len(activations) = len(shape) - 1, got shape {shape:?} with {} activations",
            activations.len()
        )));
    }
    if let Some(&d) = shape.iter().find(|&&d| d == 0) {
        return Err(Error::Config(format!(
            "layer dimension must be >= 1, got {d}"
        )));
    }
    let mut layers = Vec::with_capacity(activations.len());
    for (dims, &act) in shape.windows(2).zip(activations) {
        let (fan_in, fan_out) = (dims[0], dims[1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound)
            .collect();
        layers.push(DenseLayer::new(
            Matrix::from_vec(fan_in, fan_out, data)?,
            vec![0.0; fan_out],
            act,
        )?);
    }
    Ok(Mlp { layers })
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::dim(
                    "Mlp::new",
                    pair[0].output_dim(),
                    pair[1].input_dim(),
                ));
            }
        }
        if layers.is_empty() {
            return Err(Error::Config("mlp must have at least one layer".into()));
        }
        Ok(Self { layers })
    }

    /// Joins two networks end to end (`self` first).
    pub fn stacked(self, next: Mlp) -> Result<Mlp> {
        let mut layers = self.layers;
        layers.extend(next.layers);
        Mlp::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(DenseLayer::output_dim));
        s
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Training-mode forward pass; fills the caches `backward` needs.
    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let mut h = self.layers[0].forward(x)?;
        for layer in &mut self.layers[1..] {
            h = layer.forward(&h)?;
        }
        h.ensure_finite("mlp forward")?;
        Ok(h)
    }

    /// Inference-only forward pass; leaves caches untouched.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = self.layers[0].predict(x)?;
        for layer in &self.layers[1..] {
            h = layer.predict(&h)?;
        }
        h.ensure_finite("mlp predict")?;
        Ok(h)
    }

    /// Backpropagates `grad_out` through the cached forward pass and returns
    /// the input gradient together with per-layer parameter gradients.
    pub fn backward(&mut self, grad_out: &Matrix) -> Result<(Matrix, ParamGrads)> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            let (gi, lg) = layer.backward(&g)?;
            grads.push(lg);
            g = gi;
        }
        grads.reverse();
        Ok((g, grads))
    }

    /// Like `backward` but skips the input gradient of the first layer,
    /// for networks whose input is data rather than another party's output.
    pub fn backward_params(&mut self, grad_out: &Matrix) -> Result<ParamGrads> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_out.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let (gi, lg) = layer.backward_inner(&g, i != 0)?;
            grads.push(lg);
            if let Some(gi) = gi {
                g = gi;
            }
        }
        grads.reverse();
        Ok(grads)
    }

    pub fn zero_grads(&self) -> ParamGrads {
        self.layers.iter().map(LayerGrads::zeros_like).collect()
    }

    /// FNV-1a over the bit patterns of every parameter. Used to compare
    /// parameter trajectories across runs without storing them.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for layer in &self.layers {
            layer.weights.as_slice().iter().copied().for_each(&mut eat);
            layer.bias.iter().copied().for_each(&mut eat);
        }
        h
    }

    pub fn params_equal(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights == b.weights && a.bias == b.bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::loss::mse_loss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = init_mlp(&[2, 1], &[ActivationKind::Identity], &mut rng(7)).unwrap();
        let b = init_mlp(&[2, 1], &[ActivationKind::Identity], &mut rng(7)).unwrap();
        assert!(a.params_equal(&b));
        let c = init_mlp(&[2, 1], &[ActivationKind::Identity], &mut rng(8)).unwrap();
        assert!(!a.params_equal(&c));
    }

    #[test]
    fn init_biases_are_zero() {
        let m = init_mlp(&[3, 2], &[ActivationKind::Relu], &mut rng(1)).unwrap();
        assert_eq!(m.layers[0].bias, vec![0.0, 0.0]);
    }

    #[test]
    fn init_guest_encoder_shape() {
        let acts = [ActivationKind::Relu; 2];
        let m = init_mlp(&[196, 100, 80], &acts, &mut rng(0)).unwrap();
        assert_eq!(m.shape(), vec![196, 100, 80]);
        let bound = 1.0 / 196f64.sqrt();
        assert!(m.layers[0].weights.max_abs() <= bound);
    }

    #[test]
    fn init_rejects_bad_configs() {
        let r = init_mlp(&[3, 0], &[ActivationKind::Relu], &mut rng(0));
        assert!(matches!(r, Err(Error::Config(_))));
        let r = init_mlp(&[3, 2, 1], &[ActivationKind::Relu], &mut rng(0));
        assert!(matches!(r, Err(Error::Config(_))));
        let r = init_mlp(&[3, 2], &[ActivationKind::LeakyRelu(1.5)], &mut rng(0));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let layer =
            DenseLayer::new(Matrix::zeros(3, 2), vec![0.0; 2], ActivationKind::Identity).unwrap();
        let mut m = Mlp::new(vec![layer]).unwrap();
        let x = Matrix::filled(4, 3, 1.7);
        assert_eq!(m.forward(&x).unwrap(), Matrix::zeros(4, 2));
    }

    #[test]
    fn relu_clamps_negative_output() {
        let layer = DenseLayer::new(
            Matrix::from_vec(1, 1, vec![-1.0]).unwrap(),
            vec![0.0],
            ActivationKind::Relu,
        )
        .unwrap();
        let mut m = Mlp::new(vec![layer]).unwrap();
        let x = Matrix::from_vec(1, 1, vec![2.0]).unwrap();
        assert_eq!(m.forward(&x).unwrap().as_slice(), &[0.0]);
    }

    #[test]
    fn forward_matches_straight_line_recomputation() {
        let acts = [ActivationKind::LEAKY, ActivationKind::Sigmoid];
        let mut m = init_mlp(&[3, 4, 2], &acts, &mut rng(3)).unwrap();
        let x = Matrix::from_rows(&[vec![0.2, -0.7, 1.1], vec![0.5, 0.0, -0.3]]).unwrap();
        let out = m.forward(&x).unwrap();

        let (l1, l2) = (&m.layers[0], &m.layers[1]);
        for r in 0..2 {
            let mut h = [0.0; 4];
            for (j, hj) in h.iter_mut().enumerate() {
                let mut s = l1.bias[j];
                for i in 0..3 {
                    s += x.get(r, i) * l1.weights.get(i, j);
                }
                *hj = if s > 0.0 { s } else { 0.01 * s };
            }
            for k in 0..2 {
                let mut s = l2.bias[k];
                for (j, hj) in h.iter().enumerate() {
                    s += hj * l2.weights.get(j, k);
                }
                let y = 1.0 / (1.0 + (-s).exp());
                assert!((out.get(r, k) - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let mut m = init_mlp(&[3, 2], &[ActivationKind::Relu], &mut rng(0)).unwrap();
        let r = m.forward(&Matrix::zeros(1, 4));
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn backward_without_forward_is_a_state_error() {
        let mut m = init_mlp(&[3, 2], &[ActivationKind::Relu], &mut rng(0)).unwrap();
        let r = m.backward(&Matrix::zeros(1, 2));
        assert!(matches!(r, Err(Error::State(_))));
    }

    #[test]
    fn linear_mse_gradient_matches_hand_formula() {
        // y = w x + b, target = x; dL/dw = mean 2 (y - x) x, dL/db = mean 2 (y - x)
        let layer = DenseLayer::new(
            Matrix::from_vec(1, 1, vec![0.5]).unwrap(),
            vec![0.25],
            ActivationKind::Identity,
        )
        .unwrap();
        let mut m = Mlp::new(vec![layer]).unwrap();
        let x = Matrix::from_vec(3, 1, vec![1.0, 2.0, -1.0]).unwrap();
        let y = m.forward(&x).unwrap();
        let (_, g) = mse_loss(&y, &x).unwrap();
        let (_, grads) = m.backward(&g).unwrap();
        let xs = [1.0, 2.0, -1.0];
        let dw: f64 = xs
            .iter()
            .map(|&v| 2.0 * (0.5 * v + 0.25 - v) * v)
            .sum::<f64>()
            / 3.0;
        let db: f64 = xs.iter().map(|&v| 2.0 * (0.5 * v + 0.25 - v)).sum::<f64>() / 3.0;
        assert!((grads[0].weights.get(0, 0) - dw).abs() < 1e-14);
        assert!((grads[0].bias[0] - db).abs() < 1e-14);
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_param_grads() {
        let acts = [ActivationKind::Relu, ActivationKind::Identity];
        let mut m = init_mlp(&[4, 3, 2], &acts, &mut rng(5)).unwrap();
        m.forward(&Matrix::filled(2, 4, 0.3)).unwrap();
        let (gi, grads) = m.backward(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(gi, Matrix::zeros(2, 4));
        assert_eq!(grads, m.zero_grads());
    }

    #[test]
    fn stacked_requires_matching_dims() {
        let a = init_mlp(&[4, 3], &[ActivationKind::Relu], &mut rng(0)).unwrap();
        let b = init_mlp(&[3, 2], &[ActivationKind::Relu], &mut rng(0)).unwrap();
        let c = init_mlp(&[5, 2], &[ActivationKind::Relu], &mut rng(0)).unwrap();
        assert_eq!(a.clone().stacked(b).unwrap().shape(), vec![4, 3, 2]);
        assert!(a.stacked(c).is_err());
    }

    #[test]
    fn param_only_backward_matches_full_backward() {
        let acts = [ActivationKind::LEAKY, ActivationKind::Sigmoid];
        let mut m = init_mlp(&[5, 4, 3], &acts, &mut rng(11)).unwrap();
        let x = Matrix::from_vec(2, 5, (0..10).map(|v| v as f64 * 0.1 - 0.4).collect()).unwrap();
        let g = Matrix::filled(2, 3, 0.7);
        m.forward(&x).unwrap();
        let (_, full) = m.backward(&g).unwrap();
        m.forward(&x).unwrap();
        assert_eq!(m.backward_params(&g).unwrap(), full);
    }
}
