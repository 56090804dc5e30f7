use serde::{Deserialize, Serialize};

use super::mlp::{LayerGrads, Mlp, ParamGrads};
use crate::error::{Error, Result};

/// Optimizer hyperparameters as they appear in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Sgd {
        lr: f64,
        #[serde(default)]
        momentum: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl OptimizerConfig {
    pub fn sgd(lr: f64, momentum: f64) -> Self {
        OptimizerConfig::Sgd { lr, momentum }
    }

    pub fn adam(lr: f64, weight_decay: f64) -> Self {
        OptimizerConfig::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OptimizerConfig::Sgd { lr, momentum } => lr >= 0.0 && (0.0..1.0).contains(&momentum),
            OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
                weight_decay,
            } => {
                lr >= 0.0
                    && (0.0..1.0).contains(&beta1)
                    && (0.0..1.0).contains(&beta2)
                    && eps > 0.0
                    && weight_decay >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid optimizer settings {self:?}"
            )))
        }
    }

    pub fn build(&self) -> OptimizerState {
        match *self {
            OptimizerConfig::Sgd { lr, momentum } => OptimizerState::SgdMomentum(SgdMomentum {
                lr,
                momentum,
                velocity: Vec::new(),
            }),
            OptimizerConfig::Adam {
                lr,
                beta1,
                beta2,
                eps,
                weight_decay,
            } => OptimizerState::Adam(Adam {
                lr,
                beta1,
                beta2,
                eps,
                weight_decay,
                first: Vec::new(),
                second: Vec::new(),
                step: 0,
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub lr: f64,
    pub momentum: f64,
    velocity: ParamGrads,
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    first: ParamGrads,
    second: ParamGrads,
    step: u64,
}

impl Adam {
    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// Per-network optimizer state. Moment buffers are allocated on the first
/// step so they always mirror the network they are applied to.
#[derive(Debug, Clone)]
pub enum OptimizerState {
    SgdMomentum(SgdMomentum),
    Adam(Adam),
}

impl OptimizerState {
    fn kind(&self) -> &'static str {
        match self {
            OptimizerState::SgdMomentum(_) => "sgd_momentum",
            OptimizerState::Adam(_) => "adam",
        }
    }

    pub fn step(&mut self, m: &mut Mlp, grads: &[LayerGrads]) -> Result<()> {
        match self {
            OptimizerState::SgdMomentum(_) => sgd_step(m, grads, self),
            OptimizerState::Adam(_) => adam_step(m, grads, self),
        }
    }
}

fn check_grads(m: &Mlp, grads: &[LayerGrads]) -> Result<()> {
    if grads.len() != m.layers.len() {
        return Err(Error::dim("optimizer step", m.layers.len(), grads.len()));
    }
    for (layer, g) in m.layers.iter().zip(grads) {
        if layer.weights.shape() != g.weights.shape() || layer.bias.len() != g.bias.len() {
            return Err(Error::dim(
                "optimizer step",
                format!("{:?}", layer.weights.shape()),
                format!("{:?}", g.weights.shape()),
            ));
        }
    }
    Ok(())
}

/// Applies `f(param, grad, slot_a, slot_b)` to every scalar parameter.
fn for_each_param(
    m: &mut Mlp,
    grads: &[LayerGrads],
    a: &mut ParamGrads,
    b: &mut ParamGrads,
    mut f: impl FnMut(&mut f64, f64, &mut f64, &mut f64),
) {
    for (((layer, g), sa), sb) in m.layers.iter_mut().zip(grads).zip(a).zip(b) {
        let params = layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .chain(&mut layer.bias);
        let gs = g.weights.as_slice().iter().chain(&g.bias);
        let xs = sa.weights.as_mut_slice().iter_mut().chain(&mut sa.bias);
        let ys = sb.weights.as_mut_slice().iter_mut().chain(&mut sb.bias);
        for (((p, &gv), x), y) in params.zip(gs).zip(xs).zip(ys) {
            f(p, gv, x, y);
        }
    }
}

/// Classic momentum: `v <- mu v + g`, `theta <- theta - lr v`.
pub fn sgd_step(m: &mut Mlp, grads: &[LayerGrads], state: &mut OptimizerState) -> Result<()> {
    let found = state.kind();
    let OptimizerState::SgdMomentum(s) = state else {
        return Err(Error::OptimizerMismatch {
            expected: "sgd_momentum",
            found,
        });
    };
    check_grads(m, grads)?;
    if s.velocity.is_empty() {
        s.velocity = m.zero_grads();
    }
    let (lr, mu) = (s.lr, s.momentum);
    for ((layer, g), v) in m.layers.iter_mut().zip(grads).zip(&mut s.velocity) {
        let params = layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .chain(&mut layer.bias);
        let gs = g.weights.as_slice().iter().chain(&g.bias);
        let vs = v.weights.as_mut_slice().iter_mut().chain(&mut v.bias);
        for ((p, &gv), v) in params.zip(gs).zip(vs) {
            *v = mu * *v + gv;
            *p -= lr * *v;
        }
    }
    Ok(())
}

/// Bias-corrected Adam with L2 weight decay folded into the gradient.
pub fn adam_step(m: &mut Mlp, grads: &[LayerGrads], state: &mut OptimizerState) -> Result<()> {
    let found = state.kind();
    let OptimizerState::Adam(s) = state else {
        return Err(Error::OptimizerMismatch {
            expected: "adam",
            found,
        });
    };
    check_grads(m, grads)?;
    if s.first.is_empty() {
        s.first = m.zero_grads();
        s.second = m.zero_grads();
    }
    s.step += 1;
    let t = s.step as i32;
    let (lr, b1, b2, eps, wd) = (s.lr, s.beta1, s.beta2, s.eps, s.weight_decay);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for_each_param(m, grads, &mut s.first, &mut s.second, |p, g, mv, vv| {
        let g = g + wd * *p;
        *mv = b1 * *mv + (1.0 - b1) * g;
        *vv = b2 * *vv + (1.0 - b2) * g * g;
        let m_hat = *mv / c1;
        let v_hat = *vv / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::activation::ActivationKind;
    use crate::nn::matrix::Matrix;
    use crate::nn::mlp::{init_mlp, DenseLayer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_net(w: f64) -> Mlp {
        let layer = DenseLayer::new(
            Matrix::from_vec(1, 1, vec![w]).unwrap(),
            vec![0.0],
            ActivationKind::Identity,
        )
        .unwrap();
        Mlp::new(vec![layer]).unwrap()
    }

    fn scalar_grad(g: f64) -> ParamGrads {
        vec![LayerGrads {
            weights: Matrix::from_vec(1, 1, vec![g]).unwrap(),
            bias: vec![0.0],
        }]
    }

    fn random_net() -> Mlp {
        let acts = [ActivationKind::Relu, ActivationKind::Identity];
        init_mlp(&[3, 4, 2], &acts, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    }

    fn random_grads(m: &Mlp, salt: f64) -> ParamGrads {
        let mut g = m.zero_grads();
        let mut k = 0.0;
        for lg in &mut g {
            for v in lg.weights.as_mut_slice() {
                k += 1.0;
                *v = (k * salt).sin();
            }
            for v in &mut lg.bias {
                k += 1.0;
                *v = (k * salt).cos();
            }
        }
        g
    }

    #[test]
    fn zero_learning_rate_leaves_params() {
        let mut m = random_net();
        let before = m.clone();
        let g = random_grads(&m, 0.3);
        let mut st = OptimizerConfig::sgd(0.0, 0.5).build();
        sgd_step(&mut m, &g, &mut st).unwrap();
        assert!(m.params_equal(&before));
    }

    #[test]
    fn sgd_without_momentum_is_plain_descent() {
        let mut m = scalar_net(1.0);
        let mut st = OptimizerConfig::sgd(0.1, 0.0).build();
        sgd_step(&mut m, &scalar_grad(2.0), &mut st).unwrap();
        assert_eq!(m.layers[0].weights.get(0, 0), 1.0 - 0.1 * 2.0);
    }

    #[test]
    fn sgd_momentum_two_steps_match_recurrence() {
        let mut m = scalar_net(1.0);
        let mut st = OptimizerConfig::sgd(0.01, 0.5).build();
        sgd_step(&mut m, &scalar_grad(3.0), &mut st).unwrap();
        sgd_step(&mut m, &scalar_grad(-1.0), &mut st).unwrap();
        let v1 = 3.0;
        let t1 = 1.0 - 0.01 * v1;
        let v2 = 0.5 * v1 - 1.0;
        let t2 = t1 - 0.01 * v2;
        assert_eq!(m.layers[0].weights.get(0, 0), t2);
    }

    #[test]
    fn adam_zero_grad_no_decay_is_identity() {
        let mut m = random_net();
        let before = m.clone();
        let g = m.zero_grads();
        let mut st = OptimizerConfig::adam(1e-3, 0.0).build();
        for _ in 0..3 {
            adam_step(&mut m, &g, &mut st).unwrap();
        }
        assert!(m.params_equal(&before));
    }

    #[test]
    fn adam_first_step_closed_form() {
        let mut m = scalar_net(0.5);
        let mut st = OptimizerConfig::adam(1e-3, 0.0).build();
        adam_step(&mut m, &scalar_grad(1.0), &mut st).unwrap();
        let expected = 0.5 - 1e-3 / (1.0 + 1e-8);
        assert!((m.layers[0].weights.get(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn adam_five_steps_match_reference_loop() {
        let mut m = random_net();
        let start = m.clone();
        let (lr, b1, b2, eps, wd) = (2e-3, 0.9, 0.999, 1e-8, 1e-5);
        let mut st = OptimizerConfig::Adam {
            lr,
            beta1: b1,
            beta2: b2,
            eps,
            weight_decay: wd,
        }
        .build();
        let grads: Vec<ParamGrads> = (0..5).map(|i| random_grads(&m, 0.1 + i as f64)).collect();
        for g in &grads {
            adam_step(&mut m, g, &mut st).unwrap();
        }

        // Reference: flatten everything and run the textbook recurrence.
        let flat = |net: &Mlp| -> Vec<f64> {
            net.layers
                .iter()
                .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
                .collect()
        };
        let flat_g = |g: &ParamGrads| -> Vec<f64> {
            g.iter()
                .flat_map(|l| l.weights.as_slice().iter().chain(&l.bias).copied())
                .collect()
        };
        let mut theta = flat(&start);
        let mut mm = vec![0.0; theta.len()];
        let mut vv = vec![0.0; theta.len()];
        for (t, g) in grads.iter().enumerate() {
            let g = flat_g(g);
            let t = (t + 1) as i32;
            for i in 0..theta.len() {
                let gi = g[i] + wd * theta[i];
                mm[i] = b1 * mm[i] + (1.0 - b1) * gi;
                vv[i] = b2 * vv[i] + (1.0 - b2) * gi * gi;
                let mh = mm[i] / (1.0 - b1.powi(t));
                let vh = vv[i] / (1.0 - b2.powi(t));
                theta[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
        for (a, b) in flat(&m).iter().zip(&theta) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn optimizer_kind_mismatch() {
        let mut m = scalar_net(1.0);
        let mut st = OptimizerConfig::adam(1e-3, 0.0).build();
        let r = sgd_step(&mut m, &scalar_grad(1.0), &mut st);
        assert!(matches!(r, Err(Error::OptimizerMismatch { .. })));
        let mut st = OptimizerConfig::sgd(1e-3, 0.0).build();
        let r = adam_step(&mut m, &scalar_grad(1.0), &mut st);
        assert!(matches!(r, Err(Error::OptimizerMismatch { .. })));
    }

    #[test]
    fn grad_shape_mismatch() {
        let mut m = random_net();
        let mut st = OptimizerConfig::sgd(0.1, 0.0).build();
        assert!(st.step(&mut m, &scalar_grad(1.0)).is_err());
    }
}
