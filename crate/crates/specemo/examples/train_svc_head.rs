//! Train one-vs-rest linear SVMs on deep features.
//!
//! The trunk stays frozen: images pass through it once, the fc1 features
//! are standardized, and a dual coordinate descent solver fits one
//! binary SVM per class. Each solver stops on a duality-gap certificate.

use specemo::audio::{synth_dataset, SynthSpec};
use specemo::backbone::{build, BackboneConfig};
use specemo::eval::{ClipStore, ExtractStore, LoadPhase, MemoryStore};
use specemo::heads::{extract_fc1, svc_train, SvcConfig};
use specemo::spectro::SpectroParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from("target/examples/train-svc");
    let manifest = synth_dataset(
        &SynthSpec {
            classes: 4,
            speakers: 5,
            clips: 2,
            seed: 7,
            neutral_styles: false,
        },
        &out,
    )?;
    let classes = manifest.present_labels();
    let store = MemoryStore::precompute(&ExtractStore::new(manifest, SpectroParams::mini()))?;

    let trunk = build(&BackboneConfig::mini(), 7)?;
    let images: Vec<_> = (0..store.len())
        .map(|i| store.image(i, LoadPhase::Adhoc))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&_> = images.iter().collect();
    let features = extract_fc1(&trunk, &refs, 16)?;
    println!(
        "features: {} rows x {} dims",
        features.shape()[0],
        features.shape()[1]
    );

    let labels: Vec<usize> = store
        .manifest()
        .samples
        .iter()
        .map(|s| classes.iter().position(|c| *c == s.label).unwrap())
        .collect();

    let config = SvcConfig::default();
    let (model, reports) = svc_train(&features, &labels, classes.len(), &config)?;
    println!("\nper-class solver reports (C = {}):", config.c);
    for r in &reports {
        println!(
            "  {:<10} epochs {:>3}  duality gap {:.2e}  primal {:.4}",
            classes[r.class].name(),
            r.epochs,
            r.gap,
            r.primal
        );
        // the solver minimizes 0.5||w||^2 - sum(alpha); the trace never rises
        let d = &r.dual_objective_trace;
        assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-9), "dual is monotone");
    }

    let preds = model.predict(&features);
    let correct = preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
    println!(
        "\ntraining accuracy: {}/{} = {:.2}",
        correct,
        labels.len(),
        correct as f64 / labels.len() as f64
    );
    Ok(())
}
