//! Linear one-vs-rest SVM trained by dual coordinate descent.
//!
//! Each class solves an independent L2-regularized hinge-loss problem
//! in f64 with an augmented bias coordinate. The regularization
//! strength follows a per-sample convention: the effective box
//! constraint is C / n_samples, so duplicating every training point
//! leaves the decision function unchanged. Convergence is certified by
//! the primal-dual gap.

use super::{argmax_row, standardize_apply, standardize_fit, HeadError, Standardizer};
use crate::nncore::{Container, ContainerError, ContainerWriter, Tensor};
use crate::seeded::{derive_seed, rng_from_seed};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SvcConfig {
    pub c: f64,
    /// relative duality-gap tolerance: stop at gap <= tol * (1 + |primal|)
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvcConfig {
    fn default() -> SvcConfig {
        SvcConfig {
            c: 1.0,
            tol: 1e-4,
            max_epochs: 1000,
            seed: 0,
        }
    }
}

/// Convergence record of one binary subproblem. The trace holds the
/// dual minimization objective after each epoch; exact coordinate
/// steps make it non-increasing.
#[derive(Debug, Clone)]
pub struct SvcClassReport {
    pub class: usize,
    pub epochs: usize,
    pub gap: f64,
    pub primal: f64,
    pub dual_objective_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SvcModel {
    /// per-class weight vectors, [classes][dim]
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub standardizer: Standardizer,
    pub c: f64,
}

struct BinaryProblem<'a> {
    x: &'a Tensor<f64>,
    labels: &'a [usize],
    class: usize,
    c_per_sample: f64,
    tol: f64,
    max_epochs: usize,
    seed: u64,
}

/// Hsieh-style dual coordinate descent on one one-vs-rest problem.
/// Features arrive standardized; the bias is an implicit augmented
/// coordinate fixed at 1 (and therefore L2-regularized like the rest
/// of w).
fn solve_binary(p: BinaryProblem) -> (Vec<f64>, f64, SvcClassReport) {
    let n = p.x.shape()[0];
    let d = p.x.shape()[1];
    let y: Vec<f64> = p
        .labels
        .iter()
        .map(|&l| if l == p.class { 1.0 } else { -1.0 })
        .collect();
    // q_ii = x_i . x_i + 1 (the +1 is the augmented bias coordinate)
    let q: Vec<f64> = (0..n)
        .map(|i| {
            let row = &p.x.data()[i * d..(i + 1) * d];
            row.iter().map(|v| v * v).sum::<f64>() + 1.0
        })
        .collect();
    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(p.seed);

    let mut trace = Vec::new();
    let mut epochs = 0;
    let (mut primal, mut gap) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..p.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        for &i in &order {
            let row = &p.x.data()[i * d..(i + 1) * d];
            let margin: f64 = w.iter().zip(row).map(|(wv, xv)| wv * xv).sum::<f64>() + b;
            let grad = y[i] * margin - 1.0;
            let next = (alpha[i] - grad / q[i]).clamp(0.0, p.c_per_sample);
            let delta = next - alpha[i];
            if delta != 0.0 {
                alpha[i] = next;
                let step = delta * y[i];
                for (wv, xv) in w.iter_mut().zip(row) {
                    *wv += step * xv;
                }
                b += step;
            }
        }

        let norm_sq: f64 = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        let mut hinge = 0.0;
        let mut alpha_sum = 0.0;
        for i in 0..n {
            let row = &p.x.data()[i * d..(i + 1) * d];
            let margin: f64 = w.iter().zip(row).map(|(wv, xv)| wv * xv).sum::<f64>() + b;
            hinge += (1.0 - y[i] * margin).max(0.0);
            alpha_sum += alpha[i];
        }
        primal = 0.5 * norm_sq + p.c_per_sample * hinge;
        let dual = alpha_sum - 0.5 * norm_sq;
        trace.push(0.5 * norm_sq - alpha_sum);
        gap = primal - dual;
        if gap <= p.tol * (1.0 + primal.abs()) {
            break;
        }
    }

    (
        w,
        b,
        SvcClassReport {
            class: p.class,
            epochs,
            gap,
            primal,
            dual_objective_trace: trace,
        },
    )
}

/// Train one-vs-rest linear SVMs on raw (unstandardized) features.
/// Standardization is fitted here, on these rows only.
pub fn svc_train(
    features: &Tensor<f64>,
    labels: &[usize],
    classes: usize,
    config: &SvcConfig,
) -> Result<(SvcModel, Vec<SvcClassReport>), HeadError> {
    let n = features.shape()[0];
    assert_eq!(labels.len(), n, "one label per feature row");
    assert!(config.c > 0.0 && config.tol > 0.0 && config.max_epochs > 0);
    for &l in labels {
        assert!(l < classes, "label {l} outside {classes} classes");
    }
    let mut present = vec![false; classes];
    for &l in labels {
        present[l] = true;
    }
    let found = present.iter().filter(|&&p| p).count();
    if found < 2 {
        return Err(HeadError::SingleClass { found });
    }

    let standardizer = standardize_fit(features)?;
    let x = standardize_apply(&standardizer, features);
    let c_per_sample = config.c / n as f64;

    let mut solved: Vec<(usize, Vec<f64>, f64, SvcClassReport)> = (0..classes)
        .into_par_iter()
        .map(|class| {
            let (w, b, report) = solve_binary(BinaryProblem {
                x: &x,
                labels,
                class,
                c_per_sample,
                tol: config.tol,
                max_epochs: config.max_epochs,
                seed: derive_seed(config.seed, &format!("svc/class/{class}")),
            });
            (class, w, b, report)
        })
        .collect();
    solved.sort_by_key(|(class, ..)| *class);

    let mut weights = Vec::with_capacity(classes);
    let mut bias = Vec::with_capacity(classes);
    let mut reports = Vec::with_capacity(classes);
    for (_, w, b, report) in solved {
        weights.push(w);
        bias.push(b);
        reports.push(report);
    }
    Ok((
        SvcModel {
            weights,
            bias,
            standardizer,
            c: config.c,
        },
        reports,
    ))
}

impl SvcModel {
    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    /// Per-class decision values w_k . x_hat + b_k on raw features.
    pub fn decision_scores(&self, features: &Tensor<f64>) -> Vec<Vec<f64>> {
        let x = standardize_apply(&self.standardizer, features);
        let (n, d) = (x.shape()[0], x.shape()[1]);
        (0..n)
            .map(|i| {
                let row = &x.data()[i * d..(i + 1) * d];
                self.weights
                    .iter()
                    .zip(&self.bias)
                    .map(|(w, b)| w.iter().zip(row).map(|(wv, xv)| wv * xv).sum::<f64>() + b)
                    .collect()
            })
            .collect()
    }

    pub fn predict(&self, features: &Tensor<f64>) -> Vec<usize> {
        self.decision_scores(features)
            .iter()
            .map(|scores| argmax_row(scores))
            .collect()
    }

    pub fn write_into(&self, writer: &mut ContainerWriter) {
        let k = self.classes();
        let d = self.standardizer.mean.len();
        let flat: Vec<f32> = self
            .weights
            .iter()
            .flat_map(|w| w.iter().map(|&v| v as f32))
            .collect();
        let to32 = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        writer.add("svc.w", &Tensor::from_vec(&[k, d], flat).unwrap());
        writer.add("svc.b", &Tensor::from_vec(&[k], to32(&self.bias)).unwrap());
        writer.add(
            "svc.mean",
            &Tensor::from_vec(&[d], to32(&self.standardizer.mean)).unwrap(),
        );
        writer.add(
            "svc.std",
            &Tensor::from_vec(&[d], to32(&self.standardizer.std)).unwrap(),
        );
        writer.meta("svc.c", &format!("{}", self.c));
    }

    pub fn read_from(container: &Container) -> Result<SvcModel, ContainerError> {
        let shape = container.shape_of("svc.w")?.to_vec();
        let (k, d) = (shape[0], shape[1]);
        let w = container.tensor("svc.w", &[k, d])?;
        let b = container.tensor("svc.b", &[k])?;
        let mean = container.tensor("svc.mean", &[d])?;
        let std = container.tensor("svc.std", &[d])?;
        let to64 = |t: &Tensor<f32>| t.data().iter().map(|&v| v as f64).collect::<Vec<f64>>();
        Ok(SvcModel {
            weights: (0..k)
                .map(|row| w.data()[row * d..(row + 1) * d].iter().map(|&v| v as f64).collect())
                .collect(),
            bias: to64(&b),
            standardizer: Standardizer {
                mean: to64(&mean),
                std: to64(&std),
            },
            c: container
                .meta_value("svc.c")
                .and_then(|s| s.parse().ok())
                .unwrap_or(1.0),
        })
    }
}
