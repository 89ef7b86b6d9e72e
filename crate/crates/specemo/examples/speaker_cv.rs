//! Speaker-grouped cross-validation: no voice appears on both sides.
//!
//! Five folds, one speaker each. Every fold trains on the other
//! speakers' 70% sub-split, early-stops on their 30%, and tests on the
//! held-out speaker. The aggregate confusion is the sum over folds.

use specemo::audio::{synth_dataset, SynthSpec};
use specemo::eval::{
    make_folds, render_table, run_cv, ClipStore, ExtractStore, FoldKind, MemoryStore, ModelSpec,
};
use specemo::heads::HeadMode;
use specemo::spectro::SpectroParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from("target/examples/speaker-cv");
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
    let store = MemoryStore::precompute(&ExtractStore::new(manifest, SpectroParams::mini()))?;

    let plan = make_folds(store.manifest(), FoldKind::BySpeaker, 5, 7)?;
    println!("fold sizes: {:?}", plan.fold_sizes());

    let mut spec = ModelSpec::mini(HeadMode::Fc);
    spec.train.epochs = 25;
    spec.train.seed = 7;
    let outcome = run_cv(&store, &plan, &spec)?;

    for fold in &outcome.folds {
        println!("fold {}: accuracy {:.2}", fold.fold, fold.report.accuracy);
    }
    println!("\n{}", render_table(&outcome.aggregate));
    Ok(())
}
