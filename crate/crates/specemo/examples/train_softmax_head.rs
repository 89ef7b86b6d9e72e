//! Train the softmax-head classifier on a synthetic corpus.
//!
//! Uses the 70/30 hold-out protocol: the 30% side drives early stopping
//! and supplies the reported numbers, so they are validation metrics.

use specemo::audio::{synth_dataset, SynthSpec};
use specemo::eval::{holdout, ExtractStore, MemoryStore, ModelSpec};
use specemo::eval::render_table;
use specemo::heads::HeadMode;
use specemo::spectro::SpectroParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from("target/examples/train-fc");
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
    println!("corpus: {} clips, 4 classes, 5 speakers", manifest.samples.len());

    let store = MemoryStore::precompute(&ExtractStore::new(manifest, SpectroParams::mini()))?;

    let mut spec = ModelSpec::mini(HeadMode::Fc);
    spec.train.epochs = 25;
    spec.train.seed = 7;
    let outcome = holdout(&store, &spec)?;

    if let Some(history) = &outcome.history {
        for (i, e) in history.epochs.iter().enumerate() {
            println!(
                "epoch {:>2}  train loss {:.3} acc {:.2}  val loss {:.3} acc {:.2}",
                i, e.train_loss, e.train_acc, e.val_loss, e.val_acc
            );
        }
        println!(
            "restored epoch {} (val acc {:.2})",
            history.best_epoch, history.best_val_acc
        );
    }
    println!("\n{}", render_table(&outcome.report));
    Ok(())
}
