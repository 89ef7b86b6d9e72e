//! RIFF/WAVE decoding and 16-bit PCM encoding.
//!
//! Reads PCM 8/16/24-bit integer and 32-bit float, mono or stereo.
//! Stereo is averaged to mono. Unknown chunks are skipped, so files with
//! LIST/fact/cue chunks decode fine.

use super::{AudioClip, AudioError};
use std::fs;
use std::path::Path;

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| AudioError::io(path, e))?;
    parse_wav(&bytes, &path.display().to_string())
}

pub fn parse_wav(bytes: &[u8], source_path: &str) -> Result<AudioClip, AudioError> {
    let malformed = || AudioError::MalformedHeader {
        path: source_path.to_string(),
    };
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed());
    }

    let mut fmt: Option<Fmt> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).ok_or_else(malformed)?;
        if body_end > bytes.len() {
            return Err(malformed());
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(Fmt::parse(body, source_path)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned: odd sizes carry one pad byte
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(malformed)?;
    let data = data.ok_or_else(malformed)?;

    let bytes_per_sample = (fmt.bits_per_sample / 8) as usize;
    let frame_bytes = bytes_per_sample * fmt.channels as usize;
    let n_frames = data.len() / frame_bytes;
    if n_frames == 0 {
        return Err(AudioError::EmptyAudio {
            path: source_path.to_string(),
        });
    }

    let mut samples = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let mut acc = 0.0f64;
        for c in 0..fmt.channels as usize {
            let off = f * frame_bytes + c * bytes_per_sample;
            acc += decode_sample(&data[off..off + bytes_per_sample], fmt.float);
        }
        samples.push((acc / fmt.channels as f64).clamp(-1.0, 1.0) as f32);
    }

    Ok(AudioClip {
        samples,
        sample_rate_hz: fmt.sample_rate,
        source_path: source_path.to_string(),
    })
}

struct Fmt {
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
    float: bool,
}

impl Fmt {
    fn parse(body: &[u8], path: &str) -> Result<Fmt, AudioError> {
        if body.len() < 16 {
            return Err(AudioError::MalformedHeader {
                path: path.to_string(),
            });
        }
        let unsupported = |detail: String| AudioError::UnsupportedEncoding {
            path: path.to_string(),
            detail,
        };
        let format = u16::from_le_bytes(body[0..2].try_into().unwrap());
        let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
        let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
        let bits_per_sample = u16::from_le_bytes(body[14..16].try_into().unwrap());

        let float = match format {
            1 => false,
            3 => true,
            other => return Err(unsupported(format!("format tag {other}"))),
        };
        match (float, bits_per_sample) {
            (false, 8 | 16 | 24) | (true, 32) => {}
            (f, b) => {
                let kind = if f { "float" } else { "pcm" };
                return Err(unsupported(format!("{b}-bit {kind}")));
            }
        }
        if !(1..=2).contains(&channels) {
            return Err(unsupported(format!("{channels} channels")));
        }
        if sample_rate == 0 {
            return Err(AudioError::MalformedHeader {
                path: path.to_string(),
            });
        }
        Ok(Fmt {
            channels,
            sample_rate,
            bits_per_sample,
            float,
        })
    }
}

fn decode_sample(b: &[u8], float: bool) -> f64 {
    match (float, b.len()) {
        (true, 4) => f32::from_le_bytes(b.try_into().unwrap()) as f64,
        (false, 1) => (b[0] as i16 - 128) as f64 / 128.0,
        (false, 2) => i16::from_le_bytes(b.try_into().unwrap()) as f64 / 32768.0,
        (false, 3) => {
            let v = ((b[2] as i32) << 16 | (b[1] as i32) << 8 | b[0] as i32) << 8 >> 8;
            v as f64 / 8_388_608.0
        }
        _ => unreachable!("fmt validation admits only 1/2/3/4-byte samples"),
    }
}

/// Encode mono samples as a 16-bit PCM WAV.
pub fn wav_bytes_16bit(samples: &[f32], sample_rate_hz: u32) -> Vec<u8> {
    let n = samples.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        let v = (s as f64 * 32768.0).round() as i64;
        let v = v.clamp(-32768, 32767) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_wav(
    path: impl AsRef<Path>,
    samples: &[f32],
    sample_rate_hz: u32,
) -> Result<(), AudioError> {
    let path = path.as_ref();
    fs::write(path, wav_bytes_16bit(samples, sample_rate_hz)).map_err(|e| AudioError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn wav_with(format: u16, channels: u16, rate: u32, bits: u16, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&format.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        let block = channels * bits / 8;
        out.extend_from_slice(&(rate * block as u32).to_le_bytes());
        out.extend_from_slice(&block.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn sixteen_bit_scaling() {
        let mut data = Vec::new();
        for _ in 0..4 {
            data.extend_from_slice(&16384i16.to_le_bytes());
        }
        let clip = parse_wav(&wav_with(1, 1, 16000, 16, &data), "t.wav").unwrap();
        assert_eq!(clip.sample_rate_hz, 16000);
        assert_eq!(clip.samples, vec![0.5; 4]);
    }

    #[test]
    fn stereo_averages_to_mono() {
        let mut data = Vec::new();
        for _ in 0..3 {
            data.extend_from_slice(&16384i16.to_le_bytes());
            data.extend_from_slice(&(-16384i16).to_le_bytes());
        }
        let clip = parse_wav(&wav_with(1, 2, 8000, 16, &data), "t.wav").unwrap();
        assert_eq!(clip.samples, vec![0.0; 3]);
    }

    #[test]
    fn eight_bit_is_unsigned() {
        // 8-bit PCM stores unsigned bytes with 128 as zero
        let clip = parse_wav(&wav_with(1, 1, 8000, 8, &[128, 255, 0]), "t.wav").unwrap();
        assert_abs_diff_eq!(clip.samples[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(clip.samples[1], 127.0 / 128.0, epsilon = 1e-6);
        assert_abs_diff_eq!(clip.samples[2], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn twenty_four_bit_sign_extends() {
        let pos = 4_194_304i32; // 2^22 -> 0.5
        let neg = -4_194_304i32;
        let mut data = Vec::new();
        data.extend_from_slice(&pos.to_le_bytes()[..3]);
        data.extend_from_slice(&neg.to_le_bytes()[..3]);
        let clip = parse_wav(&wav_with(1, 1, 16000, 24, &data), "t.wav").unwrap();
        assert_abs_diff_eq!(clip.samples[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(clip.samples[1], -0.5, epsilon = 1e-6);
    }

    #[test]
    fn float_wav_decodes_and_clamps() {
        let mut data = Vec::new();
        for v in [0.25f32, -0.25, 1.5, -1.5] {
            data.extend_from_slice(&v.to_le_bytes());
        }
        let clip = parse_wav(&wav_with(3, 1, 44100, 32, &data), "t.wav").unwrap();
        assert_eq!(clip.samples, vec![0.25, -0.25, 1.0, -1.0]);
    }

    #[test]
    fn corrupted_magic_is_malformed() {
        let mut bytes = wav_with(1, 1, 16000, 16, &[0, 0]);
        bytes[0] = b'X';
        assert!(matches!(
            parse_wav(&bytes, "t.wav"),
            Err(AudioError::MalformedHeader { .. })
        ));
    }

    #[test]
    fn compressed_format_is_unsupported() {
        // format tag 85 = MP3-in-WAV
        let bytes = wav_with(85, 1, 16000, 16, &[0, 0]);
        assert!(matches!(
            parse_wav(&bytes, "t.wav"),
            Err(AudioError::UnsupportedEncoding { .. })
        ));
    }

    #[test]
    fn zero_frames_is_empty_audio() {
        let bytes = wav_with(1, 1, 16000, 16, &[]);
        assert!(matches!(
            parse_wav(&bytes, "t.wav"),
            Err(AudioError::EmptyAudio { .. })
        ));
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&0u32.to_le_bytes()); // size field is not trusted
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&5u32.to_le_bytes());
        bytes.extend_from_slice(b"INFOx");
        bytes.push(0); // pad to even
        let inner = wav_with(1, 1, 16000, 16, &16384i16.to_le_bytes());
        bytes.extend_from_slice(&inner[12..]);
        let clip = parse_wav(&bytes, "t.wav").unwrap();
        assert_eq!(clip.samples, vec![0.5]);
    }

    #[test]
    fn round_trip_is_within_one_lsb() {
        let samples: Vec<f32> = (0..100)
            .map(|i| ((i as f32 * 0.37).sin() * 0.9).clamp(-1.0, 1.0))
            .collect();
        let bytes = wav_bytes_16bit(&samples, 16000);
        let clip = parse_wav(&bytes, "t.wav").unwrap();
        for (a, b) in samples.iter().zip(&clip.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0, "{a} vs {b}");
        }
    }

    #[test]
    fn full_scale_saturates_cleanly() {
        let bytes = wav_bytes_16bit(&[1.0, -1.0], 16000);
        let clip = parse_wav(&bytes, "t.wav").unwrap();
        assert_abs_diff_eq!(clip.samples[0], 32767.0 / 32768.0, epsilon = 1e-6);
        assert_abs_diff_eq!(clip.samples[1], -1.0, epsilon = 1e-6);
    }
}
