//! Clip to image: STFT, Mel filterbank, log-power scaling, colormap
//! rendering, and bilinear resizing to the network's input size.
//!
//! All spectral math runs in f64 and quantizes to f32 only at the pixel
//! boundary, so the rendered images are reproducible bit-for-bit.

mod colormap;

pub use colormap::{ColorMap, ColorMapName, CUBEHELIX};

use crate::audio::AudioClip;
use crate::raster::Raster;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectroError {
    #[error("invalid spectrogram parameters: {reason}")]
    InvalidParams { reason: String },
    #[error("mel band {band} captures no FFT bin; lower n_mels or raise fft_len")]
    DegenerateFilter { band: usize },
}

/// Knobs of the clip-to-image conversion.
///
/// The defaults give a 32 ms window and 10 ms hop with 128 Mel bands
/// over 0-8 kHz on a -80 dB floor. The FFT length is 1024 so that every
/// Mel band at the bottom of the scale still captures at least one bin
/// at 16 kHz; the windowed frame (512 samples at 16 kHz) is zero-padded
/// up to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectroParams {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub fft_len: usize,
    pub n_mels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub db_floor: f64,
    pub image_hw: (usize, usize),
    pub colormap: ColorMapName,
}

impl Default for SpectroParams {
    fn default() -> Self {
        SpectroParams {
            window_ms: 32.0,
            hop_ms: 10.0,
            fft_len: 1024,
            n_mels: 128,
            fmin_hz: 0.0,
            fmax_hz: 8000.0,
            db_floor: -80.0,
            image_hw: (64, 64),
            colormap: ColorMapName::Cubehelix,
        }
    }
}

impl SpectroParams {
    /// 64x64 images for the mini backbone.
    pub fn mini() -> Self {
        SpectroParams::default()
    }

    /// 224x224 images for the full backbone.
    pub fn full() -> Self {
        SpectroParams {
            image_hw: (224, 224),
            ..SpectroParams::default()
        }
    }

    pub fn window_samples(&self, rate_hz: u32) -> usize {
        (self.window_ms * rate_hz as f64 / 1000.0).round() as usize
    }

    pub fn hop_samples(&self, rate_hz: u32) -> usize {
        (self.hop_ms * rate_hz as f64 / 1000.0).round() as usize
    }

    pub fn validate(&self, rate_hz: u32) -> Result<(), SpectroError> {
        let fail = |reason: String| Err(SpectroError::InvalidParams { reason });
        if !self.fft_len.is_power_of_two() || self.fft_len == 0 {
            return fail(format!("fft_len {} is not a power of two", self.fft_len));
        }
        let w = self.window_samples(rate_hz);
        if w == 0 {
            return fail(format!("window {} ms is empty at {rate_hz} Hz", self.window_ms));
        }
        if w > self.fft_len {
            return fail(format!(
                "window {} samples exceeds fft_len {}",
                w, self.fft_len
            ));
        }
        if self.hop_samples(rate_hz) == 0 {
            return fail(format!("hop {} ms is empty at {rate_hz} Hz", self.hop_ms));
        }
        if self.n_mels == 0 {
            return fail("n_mels must be positive".into());
        }
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz) {
            return fail(format!(
                "need 0 <= fmin < fmax, got {}..{}",
                self.fmin_hz, self.fmax_hz
            ));
        }
        if self.fmax_hz > rate_hz as f64 / 2.0 {
            return fail(format!(
                "fmax {} Hz exceeds Nyquist {} Hz",
                self.fmax_hz,
                rate_hz / 2
            ));
        }
        if self.db_floor >= 0.0 {
            return fail(format!("db_floor must be negative, got {}", self.db_floor));
        }
        if self.image_hw.0 == 0 || self.image_hw.1 == 0 {
            return fail("image dimensions must be positive".into());
        }
        Ok(())
    }
}

/// Row-major f64 matrix for spectral intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

/// Complex STFT, frames by bins, non-negative frequencies only.
#[derive(Debug, Clone)]
pub struct Stft {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex64>,
}

impl Stft {
    #[inline]
    pub fn at(&self, frame: usize, bin: usize) -> Complex64 {
        self.data[frame * self.bins + bin]
    }
}

/// A rendered spectrogram: H x W x 3 pixels in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct SpecImage {
    pub pixels: Raster,
    pub params: SpectroParams,
    pub source_path: String,
}

/// Standard Mel mapping, m = 2595 log10(1 + f/700).
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Periodic Hann window of length `n`.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect()
}

/// Short-time Fourier transform. Frames hop by `hop_samples`, each
/// windowed with a periodic Hann and zero-padded to `fft_len`. Clips
/// shorter than one window are zero-padded to exactly one window.
pub fn stft(clip: &AudioClip, params: &SpectroParams) -> Result<Stft, SpectroError> {
    params.validate(clip.sample_rate_hz)?;
    let w = params.window_samples(clip.sample_rate_hz);
    let hop = params.hop_samples(clip.sample_rate_hz);
    let n = params.fft_len;
    let bins = n / 2 + 1;

    let mut samples: &[f32] = &clip.samples;
    let padded: Vec<f32>;
    if samples.len() < w {
        log::debug!(
            "{}: clip shorter than one window ({} < {w}), zero-padding",
            clip.source_path,
            samples.len()
        );
        let mut p = samples.to_vec();
        p.resize(w, 0.0);
        padded = p;
        samples = &padded;
    }

    let frames = 1 + (samples.len() - w) / hop;
    let window = hann(w);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for f in 0..frames {
        let start = f * hop;
        for i in 0..n {
            let v = if i < w {
                samples[start + i] as f64 * window[i]
            } else {
                0.0
            };
            buf[i] = Complex64::new(v, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend_from_slice(&buf[..bins]);
    }

    Ok(Stft { frames, bins, data })
}

/// Triangular Mel filterbank, n_mels rows by fft_len/2+1 columns. Centers
/// are equally spaced on the Mel axis between mel(fmin) and mel(fmax);
/// each row is normalized to sum to 1.
pub fn mel_filterbank(params: &SpectroParams, rate_hz: u32) -> Result<Mat, SpectroError> {
    params.validate(rate_hz)?;
    let bins = params.fft_len / 2 + 1;
    let mel_lo = hz_to_mel(params.fmin_hz);
    let mel_hi = hz_to_mel(params.fmax_hz);
    let n = params.n_mels;
    let edge = |i: usize| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n + 1) as f64);

    let mut fb = Mat::zeros(n, bins);
    for m in 0..n {
        let (left, center, right) = (edge(m), edge(m + 1), edge(m + 2));
        let mut sum = 0.0;
        for k in 0..bins {
            let f = k as f64 * rate_hz as f64 / params.fft_len as f64;
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            let weight = rising.min(falling).max(0.0);
            fb.set(m, k, weight);
            sum += weight;
        }
        if sum <= 0.0 {
            return Err(SpectroError::DegenerateFilter { band: m });
        }
        for k in 0..bins {
            fb.set(m, k, fb.at(m, k) / sum);
        }
    }
    Ok(fb)
}

/// Log-power scaling relative to the matrix maximum: 10 log10(p/max),
/// clipped below at db_floor. All-zero input maps to a uniform floor.
pub fn power_to_db(power: &Mat, db_floor: f64) -> Mat {
    let max_p = power.max_value();
    let mut out = Mat::zeros(power.rows, power.cols);
    if max_p <= 1e-10 {
        out.data.fill(db_floor);
        return out;
    }
    for (o, &p) in out.data.iter_mut().zip(&power.data) {
        let ratio = (p / max_p).max(1e-30);
        *o = (10.0 * ratio.log10()).max(db_floor);
    }
    out
}

/// Map a dB matrix (rows = Mel bands, low first; cols = frames) to an
/// RGB image: linear scale to [0,1], low frequencies at the bottom,
/// colormap lookup, bilinear resize to the configured size.
pub fn render(db: &Mat, params: &SpectroParams, source_path: &str) -> SpecImage {
    let cm = params.colormap.resolve();
    let mut img = Raster::new(db.rows, db.cols).expect("spectral matrix is nonempty");
    for band in 0..db.rows {
        let y = db.rows - 1 - band;
        for t in 0..db.cols {
            let v = (db.at(band, t) - params.db_floor) / -params.db_floor;
            img.set(y, t, cm.lookup(v as f32));
        }
    }
    let (h, w) = params.image_hw;
    let pixels = img.resize_bilinear(h, w).expect("target size validated");
    SpecImage {
        pixels,
        params: params.clone(),
        source_path: source_path.to_string(),
    }
}

/// Whole pipeline: STFT, power, Mel projection, dB, render. One image
/// per clip.
pub fn extract(clip: &AudioClip, params: &SpectroParams) -> Result<SpecImage, SpectroError> {
    let st = stft(clip, params)?;
    let fb = mel_filterbank(params, clip.sample_rate_hz)?;
    let mut mel_power = Mat::zeros(params.n_mels, st.frames);
    for m in 0..params.n_mels {
        let row = &fb.data[m * st.bins..(m + 1) * st.bins];
        for t in 0..st.frames {
            let mut acc = 0.0;
            for (k, &fw) in row.iter().enumerate() {
                if fw != 0.0 {
                    acc += fw * st.at(t, k).norm_sqr();
                }
            }
            mel_power.set(m, t, acc);
        }
    }
    let db = power_to_db(&mel_power, params.db_floor);
    Ok(render(&db, params, &clip.source_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn tone(freq: f64, rate: u32, secs: f64) -> AudioClip {
        let n = (secs * rate as f64) as usize;
        AudioClip {
            samples: (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin() as f32)
                .collect(),
            sample_rate_hz: rate,
            source_path: "tone".into(),
        }
    }

    /// O(n^2) DFT of a real frame, non-negative bins. Test-side oracle,
    /// deliberately independent of the FFT library.
    fn naive_dft(frame: &[f64], fft_len: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(fft_len / 2 + 1);
        for k in 0..=fft_len / 2 {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for (i, &v) in frame.iter().enumerate() {
                let ph = -2.0 * std::f64::consts::PI * k as f64 * i as f64 / fft_len as f64;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            out.push(Complex64::new(re, im));
        }
        out
    }

    fn params_512() -> SpectroParams {
        SpectroParams {
            fft_len: 512,
            n_mels: 4,
            ..SpectroParams::default()
        }
    }

    #[test]
    fn mel_formula_known_points() {
        assert_abs_diff_eq!(hz_to_mel(0.0), 0.0);
        assert_abs_diff_eq!(hz_to_mel(700.0), 2595.0 * 2f64.log10(), epsilon = 1e-9);
        assert_abs_diff_eq!(hz_to_mel(700.0), 781.17, epsilon = 0.01);
        assert_abs_diff_eq!(mel_to_hz(hz_to_mel(1234.5)), 1234.5, epsilon = 1e-6);
    }

    #[test]
    fn zero_clip_gives_zero_stft() {
        let clip = AudioClip {
            samples: vec![0.0; 8000],
            sample_rate_hz: 16000,
            source_path: "z".into(),
        };
        let st = stft(&clip, &params_512()).unwrap();
        assert!(st.data.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn frame_geometry_matches_contract() {
        let clip = tone(440.0, 16000, 0.5);
        let p = params_512();
        let st = stft(&clip, &p).unwrap();
        let w = p.window_samples(16000);
        let hop = p.hop_samples(16000);
        assert_eq!(w, 512);
        assert_eq!(hop, 160);
        assert_eq!(st.bins, 257);
        assert_eq!(st.frames, 1 + (8000 - w) / hop);
    }

    #[test]
    fn short_clip_is_padded_to_one_window() {
        let clip = AudioClip {
            samples: vec![0.5; 100],
            sample_rate_hz: 16000,
            source_path: "s".into(),
        };
        let st = stft(&clip, &params_512()).unwrap();
        assert_eq!(st.frames, 1);
    }

    #[test]
    fn sine_peaks_at_expected_bin_and_matches_naive_dft() {
        let clip = tone(1000.0, 16000, 0.25);
        let p = params_512();
        let st = stft(&clip, &p).unwrap();
        // 1000 / (16000/512) = bin 32
        for f in 0..st.frames {
            let mags: Vec<f64> = (0..st.bins).map(|k| st.at(f, k).norm()).collect();
            let argmax = mags
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, 32, "frame {f}");
        }
        // frame 3 against the quadratic-time oracle
        let w = p.window_samples(16000);
        let hop = p.hop_samples(16000);
        let window = hann(w);
        let frame: Vec<f64> = (0..w)
            .map(|i| clip.samples[3 * hop + i] as f64 * window[i])
            .collect();
        let oracle = naive_dft(&frame, p.fft_len);
        for (k, o) in oracle.iter().enumerate() {
            let got = st.at(3, k);
            assert_abs_diff_eq!(got.re, o.re, epsilon = 1e-6);
            assert_abs_diff_eq!(got.im, o.im, epsilon = 1e-6);
        }
    }

    #[test]
    fn centered_impulse_is_flat_with_hann_magnitude() {
        let mut samples = vec![0.0f32; 512];
        samples[256] = 1.0;
        let clip = AudioClip {
            samples,
            sample_rate_hz: 16000,
            source_path: "imp".into(),
        };
        let st = stft(&clip, &params_512()).unwrap();
        let expected = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * 256.0 / 512.0).cos());
        for k in 0..st.bins {
            assert_abs_diff_eq!(st.at(0, k).norm(), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn parseval_holds_one_sided() {
        let clip = tone(737.0, 16000, 0.1);
        let p = params_512();
        let st = stft(&clip, &p).unwrap();
        let w = p.window_samples(16000);
        let window = hann(w);
        let time_energy: f64 = (0..w)
            .map(|i| (clip.samples[i] as f64 * window[i]).powi(2))
            .sum();
        let n = p.fft_len as f64;
        let mut freq_energy = st.at(0, 0).norm_sqr() + st.at(0, st.bins - 1).norm_sqr();
        for k in 1..st.bins - 1 {
            freq_energy += 2.0 * st.at(0, k).norm_sqr();
        }
        freq_energy /= n;
        assert_relative_eq!(freq_energy, time_energy, max_relative = 1e-6);
    }

    /// Independent triangle construction used to cross-check the
    /// filterbank builder.
    fn direct_triangle_row(params: &SpectroParams, rate: u32, m: usize) -> Vec<f64> {
        let bins = params.fft_len / 2 + 1;
        let lo = hz_to_mel(params.fmin_hz);
        let hi = hz_to_mel(params.fmax_hz);
        let step = (hi - lo) / (params.n_mels + 1) as f64;
        let f_left = mel_to_hz(lo + step * m as f64);
        let f_center = mel_to_hz(lo + step * (m + 1) as f64);
        let f_right = mel_to_hz(lo + step * (m + 2) as f64);
        let mut row: Vec<f64> = (0..bins)
            .map(|k| {
                let f = k as f64 * rate as f64 / params.fft_len as f64;
                if f <= f_left || f >= f_right {
                    0.0
                } else if f <= f_center {
                    (f - f_left) / (f_center - f_left)
                } else {
                    (f_right - f) / (f_right - f_center)
                }
            })
            .collect();
        let s: f64 = row.iter().sum();
        for v in &mut row {
            *v /= s;
        }
        row
    }

    #[test]
    fn filterbank_rows_sum_to_one_and_match_direct_triangles() {
        let p = params_512();
        let fb = mel_filterbank(&p, 16000).unwrap();
        assert_eq!((fb.rows, fb.cols), (4, 257));
        for m in 0..fb.rows {
            let sum: f64 = (0..fb.cols).map(|k| fb.at(m, k)).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
            let direct = direct_triangle_row(&p, 16000, m);
            for k in 0..fb.cols {
                assert!(fb.at(m, k) >= 0.0);
                assert_abs_diff_eq!(fb.at(m, k), direct[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn filterbank_support_is_contiguous() {
        let p = SpectroParams {
            n_mels: 64,
            ..SpectroParams::default()
        };
        let fb = mel_filterbank(&p, 16000).unwrap();
        for m in 0..fb.rows {
            let nz: Vec<usize> = (0..fb.cols).filter(|&k| fb.at(m, k) > 0.0).collect();
            assert!(!nz.is_empty());
            assert_eq!(nz.last().unwrap() - nz[0] + 1, nz.len(), "row {m} has gaps");
        }
    }

    #[test]
    fn default_mel_count_works_at_default_fft_len() {
        let p = SpectroParams::default();
        assert_eq!(p.fft_len, 1024);
        assert!(mel_filterbank(&p, 16000).is_ok());
    }

    #[test]
    fn too_fine_mel_resolution_is_degenerate() {
        let p = SpectroParams {
            fft_len: 512,
            n_mels: 128,
            ..SpectroParams::default()
        };
        assert!(matches!(
            mel_filterbank(&p, 16000),
            Err(SpectroError::DegenerateFilter { band: 0 })
        ));
    }

    #[test]
    fn db_scaling_is_relative_to_max() {
        let mut m = Mat::zeros(1, 3);
        m.data = vec![10.0, 1.0, 100.0];
        let db = power_to_db(&m, -80.0);
        assert_abs_diff_eq!(db.at(0, 2), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(db.at(0, 0), -10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(db.at(0, 1), -20.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_power_hits_the_floor() {
        let db = power_to_db(&Mat::zeros(2, 2), -80.0);
        assert!(db.data.iter().all(|&v| v == -80.0));
        let mut tiny = Mat::zeros(1, 2);
        tiny.data = vec![1.0, 1e-12];
        let db = power_to_db(&tiny, -80.0);
        assert_eq!(db.at(0, 1), -80.0);
    }

    #[test]
    fn constant_db_renders_constant_colormap_entries() {
        let p = SpectroParams {
            image_hw: (8, 8),
            ..SpectroParams::default()
        };
        let cm = p.colormap.resolve();
        let mut floor = Mat::zeros(3, 5);
        floor.data.fill(p.db_floor);
        let img = render(&floor, &p, "t");
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(img.pixels.get(y, x), cm.entry(0));
            }
        }
        let zero = Mat::zeros(3, 5);
        let img = render(&zero, &p, "t");
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(img.pixels.get(y, x), cm.entry(255));
            }
        }
    }

    #[test]
    fn render_flips_low_frequencies_to_bottom() {
        let p = SpectroParams {
            image_hw: (2, 2),
            db_floor: -80.0,
            ..SpectroParams::default()
        };
        let mut db = Mat::zeros(2, 2);
        // band 0 (low) at 0 dB, band 1 (high) at the floor
        db.set(0, 0, 0.0);
        db.set(0, 1, 0.0);
        db.set(1, 0, -80.0);
        db.set(1, 1, -80.0);
        let img = render(&db, &p, "t");
        let cm = p.colormap.resolve();
        assert_eq!(img.pixels.get(1, 0), cm.entry(255), "low band at bottom");
        assert_eq!(img.pixels.get(0, 0), cm.entry(0), "high band on top");
    }

    #[test]
    fn render_resize_corners_are_exact() {
        let p = SpectroParams {
            image_hw: (4, 4),
            ..SpectroParams::default()
        };
        let cm = p.colormap.resolve();
        let mut db = Mat::zeros(2, 2);
        db.set(0, 0, -80.0);
        db.set(0, 1, -40.0);
        db.set(1, 0, -20.0);
        db.set(1, 1, 0.0);
        let img = render(&db, &p, "t");
        let map = |v: f64| cm.lookup(((v + 80.0) / 80.0) as f32);
        // row flip: matrix band 1 is image top
        assert_eq!(img.pixels.get(0, 0), map(-20.0));
        assert_eq!(img.pixels.get(0, 3), map(0.0));
        assert_eq!(img.pixels.get(3, 0), map(-80.0));
        assert_eq!(img.pixels.get(3, 3), map(-40.0));
    }

    #[test]
    fn silence_extracts_to_uniform_floor_image() {
        let clip = AudioClip {
            samples: vec![0.0; 16000],
            sample_rate_hz: 16000,
            source_path: "sil".into(),
        };
        let img = extract(&clip, &SpectroParams::default()).unwrap();
        let cm = ColorMapName::Cubehelix.resolve();
        let e0 = cm.entry(0);
        for y in 0..64 {
            for x in 0..64 {
                assert_eq!(img.pixels.get(y, x), e0);
            }
        }
    }

    #[test]
    fn tone_brightens_the_band_containing_its_frequency() {
        let p = SpectroParams::default();
        let clip = tone(1000.0, 16000, 0.5);
        let img = extract(&clip, &p).unwrap();

        // locate the band holding 1 kHz through the filterbank itself
        let fb = mel_filterbank(&p, 16000).unwrap();
        let bin = (1000.0 / (16000.0 / p.fft_len as f64)).round() as usize;
        let band = (0..fb.rows)
            .max_by(|&a, &b| fb.at(a, bin).total_cmp(&fb.at(b, bin)))
            .unwrap();
        let expected_row =
            ((p.n_mels - 1 - band) as f64 * (p.image_hw.0 - 1) as f64 / (p.n_mels - 1) as f64)
                .round() as usize;

        let brightness = |y: usize| -> f32 {
            (0..p.image_hw.1)
                .map(|x| {
                    let px = img.pixels.get(y, x);
                    px[0] + px[1] + px[2]
                })
                .sum()
        };
        let brightest = (0..p.image_hw.0)
            .max_by(|&a, &b| brightness(a).total_cmp(&brightness(b)))
            .unwrap();
        assert!(
            brightest.abs_diff(expected_row) <= 1,
            "brightest {brightest}, expected near {expected_row}"
        );
    }

    #[test]
    fn extraction_is_deterministic() {
        let clip = tone(440.0, 16000, 0.3);
        let p = SpectroParams::default();
        let a = extract(&clip, &p).unwrap();
        let b = extract(&clip, &p).unwrap();
        assert_eq!(a.pixels, b.pixels);
    }

    #[test]
    fn pixels_stay_in_unit_range() {
        let clip = tone(333.0, 16000, 0.2);
        let img = extract(&clip, &SpectroParams::default()).unwrap();
        assert!(img.pixels.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(
            (img.pixels.height(), img.pixels.width()),
            SpectroParams::default().image_hw
        );
    }
}
