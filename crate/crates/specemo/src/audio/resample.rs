//! Band-limited sample-rate conversion with a Kaiser-windowed sinc
//! kernel, 64 taps at the design cutoff. Each output sample's kernel
//! weights are renormalized to sum to one, so constant signals pass
//! through exactly and edge outputs stay unbiased.

use super::AudioClip;

const TAPS_PER_PHASE: usize = 64;
const KAISER_BETA: f64 = 9.0;

/// Resample to `target_hz`. Returns a bit-identical clone when the rate
/// already matches. Output length is round(len * target / source).
pub fn resample(clip: &AudioClip, target_hz: u32) -> AudioClip {
    assert!(target_hz > 0, "target rate must be positive");
    if clip.sample_rate_hz == target_hz {
        return clip.clone();
    }
    let src = &clip.samples;
    let ratio = target_hz as f64 / clip.sample_rate_hz as f64;
    let out_len = ((src.len() as f64 * ratio).round() as usize).max(1);

    // anti-aliasing cutoff relative to the source Nyquist; when
    // downsampling the kernel stretches so it still spans 64 zero
    // crossing intervals of the narrowed sinc
    let cutoff = ratio.min(1.0);
    let half_width = (TAPS_PER_PHASE / 2) as f64 / cutoff;

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let center = j as f64 / ratio;
        let lo = ((center - half_width).ceil() as i64).max(0) as usize;
        let hi = ((center + half_width).floor() as i64).min(src.len() as i64 - 1) as usize;
        let mut acc = 0.0f64;
        let mut wsum = 0.0f64;
        for i in lo..=hi {
            let t = i as f64 - center;
            let w = sinc(cutoff * t) * kaiser(t / half_width);
            acc += w * src[i] as f64;
            wsum += w;
        }
        out.push(if wsum.abs() > 1e-12 {
            (acc / wsum) as f32
        } else {
            0.0
        });
    }

    AudioClip {
        samples: out,
        sample_rate_hz: target_hz,
        source_path: clip.source_path.clone(),
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn kaiser(x: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - x * x).sqrt()) / bessel_i0(KAISER_BETA)
}

/// Modified Bessel function of the first kind, order zero, by power
/// series. Converges quickly for the argument range the window uses.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-14 {
            break;
        }
    }
    sum
}
