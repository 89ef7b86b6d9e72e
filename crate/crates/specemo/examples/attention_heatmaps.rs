//! Train the attention-gate head and export its heatmaps.
//!
//! The two gates score every spatial site of the last two conv blocks
//! against the clip's global feature vector; the softmaxed score maps
//! are upsampled and written as PPM images next to the spectrograms
//! they explain.

use specemo::attention::export_map;
use specemo::audio::{synth_dataset, SynthSpec};
use specemo::eval::{holdout, ClipStore, ExtractStore, LoadPhase, MemoryStore, ModelSpec, TrainedModel};
use specemo::heads::HeadMode;
use specemo::spectro::SpectroParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from("target/examples/attention-maps");
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

    let mut spec = ModelSpec::mini(HeadMode::Am);
    spec.train.epochs = 20;
    spec.train.seed = 7;
    let outcome = holdout(&store, &spec)?;
    println!("validation accuracy: {:.2}", outcome.report.accuracy);
    if let Some(stats) = outcome.history.as_ref().and_then(|h| h.map_stats) {
        println!(
            "attention maps seen {}: sums in [{:.6}, {:.6}], min entry {:.2e}",
            stats.maps_seen, stats.min_sum, stats.max_sum, stats.min_entry
        );
    }

    let TrainedModel::Net(net) = &outcome.model else {
        unreachable!("am mode trains a net");
    };
    let images: Vec<_> = (0..4)
        .map(|i| store.image(i, LoadPhase::Adhoc))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&_> = images.iter().collect();
    let maps = net.attention_maps(&refs)?.expect("am head yields maps");

    let map_dir = out.join("maps");
    std::fs::create_dir_all(&map_dir)?;
    let target = SpectroParams::mini().image_hw;
    for (i, (map4, grid4, map5, grid5)) in maps.iter().enumerate() {
        let label = store.manifest().samples[i].label;
        for (tag, map, grid) in [("block4", map4, grid4), ("block5", map5, grid5)] {
            let raster = export_map(map, *grid, target)?;
            let path = map_dir.join(format!("{i:02}-{label}-{tag}.ppm"));
            raster.write_ppm(std::fs::File::create(&path)?, None)?;
        }
        let sum4: f32 = map4.iter().sum();
        println!("clip {i} ({label}): block4 map sums to {sum4:.6}");
    }
    println!("heatmaps under {}", map_dir.display());
    Ok(())
}
