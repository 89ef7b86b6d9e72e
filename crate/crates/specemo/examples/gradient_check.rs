//! Check hand-written backward passes against central differences.
//!
//! The whole network trains in f32, but every backward pass also exists
//! for f64, where finite differences are trustworthy. Probes that cross
//! a ReLU or pool kink are skipped via the activation signature.

use specemo::attention::{build_am, GateMode};
use specemo::backbone::{build, BackboneConfig};
use specemo::nncore::{grad_check, softmax_xent, Tensor};
use specemo::seeded::rng_from_seed;

use rand::Rng;

fn rand_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    Tensor::from_vec(shape, data).unwrap()
}

fn main() {
    let mut rng = rng_from_seed(11);

    // a small trunk forward/backward in f64
    let config = BackboneConfig {
        input_hw: (32, 32),
        ..BackboneConfig::mini()
    };
    let trunk = build(&config, 3).unwrap().to_f64_model();
    let input = rand_tensor(&mut rng, &[2, 3, 32, 32]);
    let labels = [0usize, 1];

    // treat fc1 as logits over its first 2 dims by summing a head-free
    // loss; here we just pin a tiny dense head for the check
    let head_w = rand_tensor(&mut rng, &[config.fc_dim, 2]);
    let mut params = vec![trunk.fc1_w.clone(), trunk.fc1_b.clone(), head_w];
    let run = |p: &[Tensor<f64>]| {
        let mut t = trunk.clone();
        t.fc1_w = p[0].clone();
        t.fc1_b = p[1].clone();
        let cache = t.forward_batch(&input).unwrap();
        let logits = specemo::nncore::dense_forward(
            cache.fc1(),
            &p[2],
            &Tensor::zeros(&[2]),
        )
        .unwrap();
        (cache, logits)
    };
    let report = grad_check(
        &mut params,
        |p| {
            let (cache, logits) = run(p);
            let (loss, _) = softmax_xent(&logits, &labels).unwrap();
            (loss, cache.activation_signature())
        },
        |p| {
            let (cache, logits) = run(p);
            let (_, grad_logits) = softmax_xent(&logits, &labels).unwrap();
            let (grad_fc1, head_gw, _) =
                specemo::nncore::dense_backward(&grad_logits, cache.fc1(), &p[2]).unwrap();
            let mut t = trunk.clone();
            t.fc1_w = p[0].clone();
            t.fc1_b = p[1].clone();
            let grads = t.backward(&cache, &grad_fc1, None, None).unwrap();
            vec![grads.fc1_w, grads.fc1_b, head_gw]
        },
        1e-3,
        120,
        5,
    );
    println!(
        "trunk fc1 + head: max rel err {:.2e} over {} coords ({} kink probes skipped)",
        report.max_rel_err, report.checked, report.skipped
    );
    assert!(report.max_rel_err < 1e-4);

    // the attention gates and their head, end to end
    let (c4, c5, fc, classes) = (6, 8, 10, 3);
    let model = build_am(c4, c5, fc, 4, classes, 9);
    let model = specemo::attention::AmModel {
        gate4: specemo::attention::GateParams {
            proj_local: model.gate4.proj_local.to_f64_tensor(),
            proj_global: model.gate4.proj_global.to_f64_tensor(),
            score: model.gate4.score.to_f64_tensor(),
        },
        gate5: specemo::attention::GateParams {
            proj_local: model.gate5.proj_local.to_f64_tensor(),
            proj_global: model.gate5.proj_global.to_f64_tensor(),
            score: model.gate5.score.to_f64_tensor(),
        },
        head_w: model.head_w.to_f64_tensor(),
        head_b: model.head_b.to_f64_tensor(),
    };
    let tap4 = rand_tensor(&mut rng, &[2, c4, 4, 4]);
    let tap5 = rand_tensor(&mut rng, &[2, c5, 2, 2]);
    let global = rand_tensor(&mut rng, &[2, fc]);
    let labels = [2usize, 0];

    let mut params = vec![
        model.gate4.proj_local.clone(),
        model.gate4.proj_global.clone(),
        model.gate4.score.clone(),
        model.head_w.clone(),
    ];
    let rebuild = |p: &[Tensor<f64>]| specemo::attention::AmModel {
        gate4: specemo::attention::GateParams {
            proj_local: p[0].clone(),
            proj_global: p[1].clone(),
            score: p[2].clone(),
        },
        gate5: model.gate5.clone(),
        head_w: p[3].clone(),
        head_b: model.head_b.clone(),
    };
    let report = grad_check(
        &mut params,
        |p| {
            let m = rebuild(p);
            let fwd = m.forward(&tap4, &tap5, &global, GateMode::Learned).unwrap();
            let (loss, _) = softmax_xent(&fwd.logits, &labels).unwrap();
            (loss, 0)
        },
        |p| {
            let m = rebuild(p);
            let fwd = m.forward(&tap4, &tap5, &global, GateMode::Learned).unwrap();
            let (_, grad_logits) = softmax_xent(&fwd.logits, &labels).unwrap();
            let grads = m.backward(&tap4, &tap5, &global, &fwd, &grad_logits).unwrap();
            vec![
                grads.gate4.proj_local,
                grads.gate4.proj_global,
                grads.gate4.score,
                grads.head_w,
            ]
        },
        1e-4,
        120,
        6,
    );
    println!(
        "attention gate + head: max rel err {:.2e} over {} coords",
        report.max_rel_err, report.checked
    );
    assert!(report.max_rel_err < 1e-4);
    println!("all gradients match finite differences");
}
