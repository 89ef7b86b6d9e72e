//! Train on one corpus, test on another.
//!
//! The test corpus acts emotions in several speaking styles; styled
//! neutral clips are really acted prosody, so only normal-style
//! neutrals are kept on the test side. Training on a label space that
//! does not cover the test labels is refused.

use specemo::audio::{synth_dataset, SynthSpec};
use specemo::eval::{cross_corpus, render_table, ExtractStore, MemoryStore, ModelSpec};
use specemo::heads::HeadMode;
use specemo::spectro::SpectroParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::path::PathBuf::from("target/examples/cross-corpus");

    // five classes so both corpora include neutral
    let train_manifest = synth_dataset(
        &SynthSpec {
            classes: 5,
            speakers: 5,
            clips: 2,
            seed: 7,
            neutral_styles: false,
        },
        root.join("corpus-a"),
    )?;
    // corpus B speaks its neutral clips in five styles
    let test_manifest = synth_dataset(
        &SynthSpec {
            classes: 5,
            speakers: 4,
            clips: 2,
            seed: 8,
            neutral_styles: true,
        },
        root.join("corpus-b"),
    )?;

    let params = SpectroParams::mini();
    let train_store = MemoryStore::precompute(&ExtractStore::new(train_manifest, params.clone()))?;
    let test_store = MemoryStore::precompute(&ExtractStore::new(test_manifest, params))?;

    let mut spec = ModelSpec::mini(HeadMode::Fc);
    spec.train.epochs = 25;
    spec.train.seed = 7;
    let outcome = cross_corpus(&train_store, &test_store, &spec)?;
    println!(
        "excluded {} styled neutral clip(s) from the test side",
        outcome.excluded
    );
    println!("\n{}", render_table(&outcome.report));

    // a train corpus missing a test label is rejected up front
    let narrow = synth_dataset(
        &SynthSpec {
            classes: 2,
            speakers: 5,
            clips: 2,
            seed: 9,
            neutral_styles: false,
        },
        root.join("corpus-narrow"),
    )?;
    let narrow_store = MemoryStore::precompute(&ExtractStore::new(narrow, SpectroParams::mini()))?;
    match cross_corpus(&narrow_store, &test_store, &spec) {
        Err(e) => println!("2-class trainer vs 5-class test set: {e}"),
        Ok(_) => unreachable!("label cover check should fire"),
    }
    Ok(())
}
