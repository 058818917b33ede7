//! Audio normalization to mono 24 kHz 16-bit PCM.
//!
//! Channels are averaged and the result is linearly resampled. The output
//! length is `round(in_len * 24000 / in_rate)`, so duration is preserved to
//! within half a sample period. Input that is already mono 24 kHz passes
//! through unchanged.

use std::io::Cursor;
use std::path::Path;

use crate::platform::RawMedia;

pub const TARGET_SAMPLE_RATE: u32 = 24_000;

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("media contains no samples")]
    Empty,
    #[error("invalid media format: {0}")]
    Format(String),
    #[error("wav i/o: {0}")]
    Wav(#[from] hound::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Mono 16-bit PCM at [`TARGET_SAMPLE_RATE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioBuffer {
    pub samples: Vec<i16>,
}

impl AudioBuffer {
    pub fn sample_rate(&self) -> u32 {
        TARGET_SAMPLE_RATE
    }

    pub fn channels(&self) -> u16 {
        1
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / TARGET_SAMPLE_RATE as f64
    }

    pub fn to_raw(&self) -> RawMedia {
        RawMedia {
            sample_rate: TARGET_SAMPLE_RATE,
            channels: 1,
            samples: self.samples.clone(),
        }
    }

    fn spec() -> hound::WavSpec {
        hound::WavSpec {
            channels: 1,
            sample_rate: TARGET_SAMPLE_RATE,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        }
    }

    pub fn to_wav_bytes(&self) -> Result<Vec<u8>, AudioError> {
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut writer = hound::WavWriter::new(&mut cursor, Self::spec())?;
            for &s in &self.samples {
                writer.write_sample(s)?;
            }
            writer.finalize()?;
        }
        Ok(cursor.into_inner())
    }

    /// Writes via a temporary file and rename, so readers never see a
    /// partial file.
    pub fn write_wav(&self, path: &Path) -> Result<(), AudioError> {
        let bytes = self.to_wav_bytes()?;
        let tmp = path.with_extension("wav.part");
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Reads any 16-bit integer PCM WAV into [`RawMedia`].
pub fn read_wav(bytes: &[u8]) -> Result<RawMedia, AudioError> {
    let reader = hound::WavReader::new(Cursor::new(bytes))?;
    let spec = reader.spec();
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(AudioError::Format(format!(
            "expected 16-bit integer PCM, got {} bits {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader.into_samples::<i16>().collect::<Result<Vec<_>, _>>()?;
    Ok(RawMedia {
        sample_rate: spec.sample_rate,
        channels: spec.channels,
        samples,
    })
}

pub fn read_wav_file(path: &Path) -> Result<RawMedia, AudioError> {
    read_wav(&std::fs::read(path)?)
}

/// `round(in_len * 24000 / in_rate)`, computed exactly in integers.
pub fn output_len(in_len: usize, in_rate: u32) -> usize {
    let num = in_len as u128 * TARGET_SAMPLE_RATE as u128;
    let den = in_rate as u128;
    ((2 * num + den) / (2 * den)) as usize
}

pub fn normalize_audio(raw: &RawMedia) -> Result<AudioBuffer, AudioError> {
    if raw.channels == 0 || raw.sample_rate == 0 {
        return Err(AudioError::Format(format!(
            "{} channels at {} Hz",
            raw.channels, raw.sample_rate
        )));
    }
    let channels = raw.channels as usize;
    if !raw.samples.len().is_multiple_of(channels) {
        return Err(AudioError::Format(format!(
            "{} samples do not divide into {channels} channels",
            raw.samples.len()
        )));
    }
    let frames = raw.samples.len() / channels;
    if frames == 0 {
        return Err(AudioError::Empty);
    }

    let mono: Vec<f64> = raw
        .samples
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| s as f64).sum::<f64>() / channels as f64)
        .collect();

    let out_len = output_len(frames, raw.sample_rate);
    let ratio = raw.sample_rate as f64 / TARGET_SAMPLE_RATE as f64;
    let last = frames - 1;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let idx = (pos.floor() as usize).min(last);
            let frac = (pos - idx as f64).clamp(0.0, 1.0);
            let next = (idx + 1).min(last);
            let v = mono[idx] * (1.0 - frac) + mono[next] * frac;
            v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
        })
        .collect();
    Ok(AudioBuffer { samples })
}
