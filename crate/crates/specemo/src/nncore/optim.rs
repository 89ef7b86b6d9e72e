//! SGD with momentum and Adam, applied over parameter groups so the
//! trunk and head can train at different rates (or the trunk can be
//! frozen with lr = 0).
//!
//! Moment slots are kept in f64 and bound to parameters by registration
//! order: the first `step` call fixes the layout and later calls must
//! pass the same parameters in the same order.

use super::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimKind {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimKind {
    pub fn adam() -> OptimKind {
        OptimKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One group's view for a single step: parameters, matching gradients,
/// and the group learning rate.
pub struct ParamGroup<'a, T> {
    pub lr: f64,
    pub params: Vec<&'a mut Tensor<T>>,
    pub grads: Vec<Tensor<T>>,
}

struct Slot {
    m: Vec<f64>,
    v: Vec<f64>,
}

pub struct Optimizer {
    kind: OptimKind,
    slots: Vec<Slot>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimKind) -> Optimizer {
        assert!(
            match kind {
                OptimKind::SgdMomentum { momentum } => (0.0..1.0).contains(&momentum),
                OptimKind::Adam { beta1, beta2, eps } =>
                    (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0,
            },
            "optimizer hyper-parameters out of range"
        );
        Optimizer {
            kind,
            slots: Vec::new(),
            t: 0,
        }
    }

    pub fn kind(&self) -> OptimKind {
        self.kind
    }

    /// Apply one update across all groups. Group order and parameter
    /// order within groups must stay fixed across calls.
    pub fn step<T: Scalar>(&mut self, groups: &mut [ParamGroup<'_, T>]) {
        self.t += 1;
        let total: usize = groups.iter().map(|g| g.params.len()).sum();
        if self.slots.is_empty() {
            for g in groups.iter() {
                assert_eq!(
                    g.params.len(),
                    g.grads.len(),
                    "each parameter needs exactly one gradient"
                );
                for p in &g.params {
                    self.slots.push(Slot {
                        m: vec![0.0; p.len()],
                        v: vec![0.0; p.len()],
                    });
                }
            }
        }
        assert_eq!(
            self.slots.len(),
            total,
            "parameter registration changed between steps"
        );

        let mut slot_idx = 0;
        for g in groups.iter_mut() {
            for (p, grad) in g.params.iter_mut().zip(&g.grads) {
                let slot = &mut self.slots[slot_idx];
                slot_idx += 1;
                assert_eq!(p.len(), slot.m.len(), "parameter shape changed between steps");
                assert_eq!(p.shape(), grad.shape(), "gradient shape mismatch");
                if g.lr == 0.0 {
                    continue;
                }
                match self.kind {
                    OptimKind::SgdMomentum { momentum } => {
                        for ((pv, gv), mv) in
                            p.data_mut().iter_mut().zip(grad.data()).zip(&mut slot.m)
                        {
                            *mv = momentum * *mv + (*gv).to_f64();
                            *pv = T::from_f64(pv.to_f64() - g.lr * *mv);
                        }
                    }
                    OptimKind::Adam { beta1, beta2, eps } => {
                        let bc1 = 1.0 - beta1.powi(self.t as i32);
                        let bc2 = 1.0 - beta2.powi(self.t as i32);
                        for (((pv, gv), mv), vv) in p
                            .data_mut()
                            .iter_mut()
                            .zip(grad.data())
                            .zip(&mut slot.m)
                            .zip(&mut slot.v)
                        {
                            let gf = (*gv).to_f64();
                            *mv = beta1 * *mv + (1.0 - beta1) * gf;
                            *vv = beta2 * *vv + (1.0 - beta2) * gf * gf;
                            let mhat = *mv / bc1;
                            let vhat = *vv / bc2;
                            *pv = T::from_f64(pv.to_f64() - g.lr * mhat / (vhat.sqrt() + eps));
                        }
                    }
                }
                p.assert_finite("optimizer step");
            }
        }
    }
}
