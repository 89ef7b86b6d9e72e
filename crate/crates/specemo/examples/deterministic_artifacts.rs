//! Same seed in, same bytes out.
//!
//! Trains the same model twice from the same seed, saves both runs to
//! weight containers, and shows the files are byte-identical. A reloaded
//! container predicts exactly like the model that wrote it.

use specemo::audio::{synth_dataset, SynthSpec};
use specemo::digest::sha256_hex;
use specemo::eval::{holdout, ClipStore, ExtractStore, LoadPhase, MemoryStore, ModelSpec, TrainedModel};
use specemo::heads::HeadMode;
use specemo::nncore::Container;
use specemo::spectro::SpectroParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from("target/examples/deterministic");
    let manifest = synth_dataset(
        &SynthSpec {
            classes: 3,
            speakers: 3,
            clips: 2,
            seed: 5,
            neutral_styles: false,
        },
        &out,
    )?;
    let store = MemoryStore::precompute(&ExtractStore::new(manifest, SpectroParams::mini()))?;

    let mut spec = ModelSpec::mini(HeadMode::Fc);
    spec.train.epochs = 10;
    spec.train.seed = 123;

    let mut digests = Vec::new();
    for run in 0..2 {
        let outcome = holdout(&store, &spec)?;
        let path = out.join(format!("run{run}.bin"));
        outcome.model.save(&path)?;
        let digest = sha256_hex(&std::fs::read(&path)?);
        println!("run {run}: model digest {}", &digest[..16]);
        digests.push(digest);
    }
    assert_eq!(digests[0], digests[1], "training is deterministic");
    println!("both runs wrote byte-identical weight containers");

    let container = Container::read(out.join("run0.bin"))?;
    let classes = store.manifest().present_labels().len();
    let reloaded = TrainedModel::read_from(&spec, classes, &container)?;

    let images: Vec<_> = (0..store.len())
        .map(|i| store.image(i, LoadPhase::Adhoc))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&_> = images.iter().collect();
    let fresh = holdout(&store, &spec)?;
    assert_eq!(
        fresh.model.predict_images(&refs)?,
        reloaded.predict_images(&refs)?,
        "reloaded model predicts identically"
    );
    println!("reloaded container reproduces the original predictions");
    Ok(())
}
