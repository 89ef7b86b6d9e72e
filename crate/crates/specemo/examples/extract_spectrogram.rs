//! Turn one clip into a Mel-spectrogram image and write it as a PPM.
//!
//! The rendered image is what the classifiers actually see: log-power
//! Mel bands, low frequencies at the bottom, colormapped and resized to
//! the network input size.

use specemo::audio::AudioClip;
use specemo::spectro::{extract, mel_filterbank, stft, SpectroParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::path::PathBuf::from("target/examples/spectrogram");
    std::fs::create_dir_all(&out)?;

    // two-tone clip: 440 Hz for the first half, 1760 Hz for the second
    let rate = 16_000u32;
    let samples: Vec<f32> = (0..rate as usize)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let f = if t < 0.5 { 440.0 } else { 1760.0 };
            (0.6 * (2.0 * std::f64::consts::PI * f * t).sin()) as f32
        })
        .collect();
    let clip = AudioClip {
        samples,
        sample_rate_hz: rate,
        source_path: "two-tone".into(),
    };

    let params = SpectroParams::default();
    let st = stft(&clip, &params)?;
    println!("stft: {} frames x {} bins", st.frames, st.bins);

    let fb = mel_filterbank(&params, rate)?;
    println!("filterbank: {} Mel bands x {} bins", fb.rows, fb.cols);

    let image = extract(&clip, &params)?;
    let path = out.join("two-tone.ppm");
    let mut file = std::fs::File::create(&path)?;
    image.pixels.write_ppm(&mut file, Some("two-tone demo"))?;
    println!(
        "wrote {} ({}x{} pixels)",
        path.display(),
        image.pixels.height(),
        image.pixels.width()
    );
    println!("the band jump at t=0.5s shows up as a step in the image");
    Ok(())
}
