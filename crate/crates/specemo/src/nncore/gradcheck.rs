//! Central finite-difference gradient checking in f64.
//!
//! Coordinates are sampled round-robin across all parameter tensors so
//! every tensor is covered even under a tight budget. ReLU and maxpool
//! make the loss piecewise-smooth; the caller supplies an activation
//! signature (any hash of the discrete state: ReLU masks, pool argmax
//! choices) and a coordinate whose perturbation flips the signature is
//! skipped instead of producing a spurious mismatch.

use super::Tensor;
use crate::seeded::rng_from_seed;
use rand::seq::SliceRandom;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// max |analytic - numeric| / max(|analytic| + |numeric|, 1e-6)
    pub max_rel_err: f64,
    /// coordinates actually compared
    pub checked: usize,
    /// coordinates skipped because the perturbation crossed a kink
    pub skipped: usize,
}

/// Check analytic gradients against central differences.
///
/// `loss_and_sig(params)` returns the scalar loss and the activation
/// signature; `analytic(params)` returns one gradient tensor per
/// parameter tensor, same order and shapes. Up to `max_coords`
/// coordinates are compared; a probe that crosses a kink is skipped
/// and another coordinate is drawn in its place, so the budget counts
/// clean comparisons until the coordinates run out.
pub fn grad_check<L, G>(
    params: &mut [Tensor<f64>],
    mut loss_and_sig: L,
    mut analytic: G,
    eps: f64,
    max_coords: usize,
    seed: u64,
) -> GradCheckReport
where
    L: FnMut(&[Tensor<f64>]) -> (f64, u64),
    G: FnMut(&[Tensor<f64>]) -> Vec<Tensor<f64>>,
{
    assert!(eps > 0.0);
    let grads = analytic(params);
    assert_eq!(
        grads.len(),
        params.len(),
        "need one gradient tensor per parameter tensor"
    );
    for (g, p) in grads.iter().zip(params.iter()) {
        assert_eq!(g.shape(), p.shape(), "gradient shape mismatch");
    }
    let (_, base_sig) = loss_and_sig(params);

    // round-robin over tensors, visiting each tensor's coordinates in a
    // seeded shuffled order
    let mut rng = rng_from_seed(seed);
    let mut orders: Vec<Vec<usize>> = params
        .iter()
        .map(|p| {
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.shuffle(&mut rng);
            idx
        })
        .collect();
    let total: usize = params.iter().map(|p| p.len()).sum();
    let budget = max_coords.min(total);

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        checked: 0,
        skipped: 0,
    };
    let mut cursor = 0usize;
    let mut remaining = total;
    while report.checked < budget && remaining > 0 {
        let ti = cursor % params.len();
        cursor += 1;
        let Some(ci) = orders[ti].pop() else {
            continue;
        };
        remaining -= 1;

        let original = params[ti].data()[ci];
        params[ti].data_mut()[ci] = original + eps;
        let (loss_plus, sig_plus) = loss_and_sig(params);
        params[ti].data_mut()[ci] = original - eps;
        let (loss_minus, sig_minus) = loss_and_sig(params);
        params[ti].data_mut()[ci] = original;

        if sig_plus != base_sig || sig_minus != base_sig {
            report.skipped += 1;
            continue;
        }
        let numeric = (loss_plus - loss_minus) / (2.0 * eps);
        let a = grads[ti].data()[ci];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        report.max_rel_err = report.max_rel_err.max(rel);
        report.checked += 1;
    }
    report
}

/// FNV-1a accumulator for activation signatures: fold in ReLU masks,
/// pool argmax indices, or any other discrete forward-pass state.
#[derive(Debug, Clone, Copy)]
pub struct SignatureHasher(u64);

impl SignatureHasher {
    pub fn new() -> SignatureHasher {
        SignatureHasher(0xcbf29ce484222325)
    }

    #[inline]
    pub fn push(&mut self, v: u64) {
        self.0 ^= v;
        self.0 = self.0.wrapping_mul(0x100000001b3);
    }

    pub fn push_relu_mask(&mut self, preacts: &Tensor<f64>) {
        for &v in preacts.data() {
            self.push((v > 0.0) as u64);
        }
    }

    pub fn push_indices(&mut self, idx: &[usize]) {
        for &i in idx {
            self.push(i as u64);
        }
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

impl Default for SignatureHasher {
    fn default() -> Self {
        SignatureHasher::new()
    }
}
