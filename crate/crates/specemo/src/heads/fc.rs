//! Softmax head on the fc1 descriptor: one hidden ReLU layer, then a
//! class layer. Width defaults are per trunk size (64 for mini, 256
//! for full).

use crate::nncore::{
    dense_backward, dense_forward, relu_backward, relu_forward, Container, ContainerError,
    ContainerWriter, NnError, Scalar, Tensor,
};
use crate::seeded::{derive_seed, rng_from_seed};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct FcModel<T> {
    /// [fc_dim, hidden]
    pub hidden_w: Tensor<T>,
    pub hidden_b: Tensor<T>,
    /// [hidden, classes]
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
}

#[derive(Debug)]
pub struct FcCache<T> {
    hidden_pre: Tensor<T>,
    hidden_post: Tensor<T>,
}

#[derive(Debug)]
pub struct FcGrads<T> {
    pub hidden_w: Tensor<T>,
    pub hidden_b: Tensor<T>,
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
    /// gradient at the fc1 features, for trunk fine-tuning
    pub features: Tensor<T>,
}

impl<T: Scalar> FcModel<T> {
    pub fn classes(&self) -> usize {
        self.out_w.shape()[1]
    }

    pub fn forward(&self, features: &Tensor<T>) -> Result<(Tensor<T>, FcCache<T>), NnError> {
        let hidden_pre = dense_forward(features, &self.hidden_w, &self.hidden_b)?;
        let hidden_post = relu_forward(&hidden_pre);
        let logits = dense_forward(&hidden_post, &self.out_w, &self.out_b)?;
        Ok((
            logits,
            FcCache {
                hidden_pre,
                hidden_post,
            },
        ))
    }

    pub fn backward(
        &self,
        features: &Tensor<T>,
        cache: &FcCache<T>,
        grad_logits: &Tensor<T>,
    ) -> Result<FcGrads<T>, NnError> {
        let (grad_hidden_post, out_gw, out_gb) =
            dense_backward(grad_logits, &cache.hidden_post, &self.out_w)?;
        let grad_hidden_pre = relu_backward(&grad_hidden_post, &cache.hidden_pre);
        let (grad_features, hidden_gw, hidden_gb) =
            dense_backward(&grad_hidden_pre, features, &self.hidden_w)?;
        Ok(FcGrads {
            hidden_w: hidden_gw,
            hidden_b: hidden_gb,
            out_w: out_gw,
            out_b: out_gb,
            features: grad_features,
        })
    }

    pub fn to_f64_model(&self) -> FcModel<f64> {
        FcModel {
            hidden_w: self.hidden_w.to_f64_tensor(),
            hidden_b: self.hidden_b.to_f64_tensor(),
            out_w: self.out_w.to_f64_tensor(),
            out_b: self.out_b.to_f64_tensor(),
        }
    }
}

impl FcModel<f32> {
    pub fn write_into(&self, writer: &mut ContainerWriter) {
        writer.add("fc.hidden.weight", &self.hidden_w);
        writer.add("fc.hidden.bias", &self.hidden_b);
        writer.add("fc.out.weight", &self.out_w);
        writer.add("fc.out.bias", &self.out_b);
    }

    pub fn read_from(&mut self, container: &Container) -> Result<(), ContainerError> {
        let hidden_w = container.tensor("fc.hidden.weight", self.hidden_w.shape())?;
        let hidden_b = container.tensor("fc.hidden.bias", self.hidden_b.shape())?;
        let out_w = container.tensor("fc.out.weight", self.out_w.shape())?;
        let out_b = container.tensor("fc.out.bias", self.out_b.shape())?;
        self.hidden_w = hidden_w;
        self.hidden_b = hidden_b;
        self.out_w = out_w;
        self.out_b = out_b;
        Ok(())
    }
}

/// He-uniform weights, zero biases, deterministic for a seed.
pub fn build_fc(fc_dim: usize, hidden: usize, classes: usize, seed: u64) -> FcModel<f32> {
    assert!(classes >= 2 && hidden > 0 && fc_dim > 0);
    let he = |rng: &mut rand_chacha::ChaCha8Rng, shape: &[usize], fan_in: usize| {
        let limit = (6.0 / fan_in as f64).sqrt();
        let n: usize = shape.iter().product();
        let data: Vec<f32> = (0..n)
            .map(|_| ((rng.gen::<f64>() * 2.0 - 1.0) * limit) as f32)
            .collect();
        Tensor::from_vec(shape, data).unwrap()
    };
    let mut rng = rng_from_seed(derive_seed(seed, "fc.hidden"));
    let hidden_w = he(&mut rng, &[fc_dim, hidden], fc_dim);
    let mut rng = rng_from_seed(derive_seed(seed, "fc.out"));
    let out_w = he(&mut rng, &[hidden, classes], hidden);
    FcModel {
        hidden_w,
        hidden_b: Tensor::zeros(&[hidden]),
        out_w,
        out_b: Tensor::zeros(&[classes]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{grad_check, softmax_xent};

    #[test]
    fn forward_shape_and_determinism() {
        let model = build_fc(16, 8, 3, 7);
        let same = build_fc(16, 8, 3, 7);
        assert_eq!(model.hidden_w.data(), same.hidden_w.data());
        let x = Tensor::filled(&[4, 16], 0.1f32);
        let (logits, _) = model.forward(&x).unwrap();
        assert_eq!(logits.shape(), &[4, 3]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let model = build_fc(10, 8, 4, 1).to_f64_model();
        let mut rng = crate::seeded::rng_from_seed(2);
        use rand::Rng;
        let x = Tensor::from_vec(
            &[3, 10],
            (0..30).map(|_| rng.gen::<f64>() - 0.5).collect(),
        )
        .unwrap();
        let labels = vec![0usize, 2, 1];

        let mut theta = vec![
            model.hidden_w.clone(),
            model.hidden_b.clone(),
            model.out_w.clone(),
            model.out_b.clone(),
        ];
        let build = |p: &[Tensor<f64>]| FcModel {
            hidden_w: p[0].clone(),
            hidden_b: p[1].clone(),
            out_w: p[2].clone(),
            out_b: p[3].clone(),
        };
        let loss = |p: &[Tensor<f64>]| {
            let m = build(p);
            let (logits, cache) = m.forward(&x).unwrap();
            let (l, _) = softmax_xent(&logits, &labels).unwrap();
            let mut h = crate::nncore::SignatureHasher::new();
            h.push_relu_mask(&cache.hidden_pre);
            (l, h.finish())
        };
        let analytic = |p: &[Tensor<f64>]| {
            let m = build(p);
            let (logits, cache) = m.forward(&x).unwrap();
            let (_, grad_logits) = softmax_xent(&logits, &labels).unwrap();
            let g = m.backward(&x, &cache, &grad_logits).unwrap();
            vec![g.hidden_w, g.hidden_b, g.out_w, g.out_b]
        };
        let report = grad_check(&mut theta, loss, analytic, 1e-4, 200, 5);
        assert!(report.checked >= 60);
        assert!(report.max_rel_err < 1e-4, "err {}", report.max_rel_err);
    }

    #[test]
    fn container_round_trip() {
        let model = build_fc(10, 6, 4, 3);
        let mut writer = ContainerWriter::new();
        model.write_into(&mut writer);
        let container = Container::from_bytes(&writer.bytes()).unwrap();
        let mut other = build_fc(10, 6, 4, 99);
        other.read_from(&container).unwrap();
        assert_eq!(other.out_w.data(), model.out_w.data());
        assert_eq!(other.hidden_b.data(), model.hidden_b.data());
    }
}
