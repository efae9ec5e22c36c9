//! Seeded Gaussian white-noise streams.
//!
//! Every stream is addressed by a [`SeedSpec`]. The address is hashed with
//! SHA-256 into a 32-byte ChaCha20 key and the stream is read from
//! `rand_chacha::ChaCha20Rng`. Standard-normal variates come from
//! `rand_distr::StandardNormal` (ziggurat) and are scaled to the target RMS.
//!
//! Seed encoding (all integers little-endian):
//!
//! ```text
//! "kljn-lab/seed/v1" || master_seed:u64 || len(label):u32 || label:utf8
//!                    || bep_index:u64 || repetition_index:u64
//! ```

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const SEED_DOMAIN: &[u8] = b"kljn-lab/seed/v1";

/// Address of one independent noise stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_label: String,
    pub bep_index: u64,
    pub repetition_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, label: impl Into<String>, bep_index: u64, repetition_index: u64) -> Self {
        Self {
            master_seed,
            stream_label: label.into(),
            bep_index,
            repetition_index,
        }
    }

    /// The 32-byte generator key for this stream.
    pub fn derive_key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(SEED_DOMAIN);
        h.update(self.master_seed.to_le_bytes());
        h.update((self.stream_label.len() as u32).to_le_bytes());
        h.update(self.stream_label.as_bytes());
        h.update(self.bep_index.to_le_bytes());
        h.update(self.repetition_index.to_le_bytes());
        h.finalize().into()
    }

    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.derive_key())
    }
}

/// Derive a child master seed from a parent seed and an arbitrary tag.
///
/// Uses the same SHA-256 construction with the tag as the label and zero
/// indices; the first eight key bytes form the child seed.
pub fn derive_master_seed(parent: u64, tag: &str) -> u64 {
    let key = SeedSpec::new(parent, tag, 0, 0).derive_key();
    u64::from_le_bytes(key[..8].try_into().unwrap())
}

/// A fair coin drawn from a dedicated stream.
pub fn coin_flip(seed: &SeedSpec) -> bool {
    seed.rng().next_u64() >> 63 == 1
}

/// Sampled noise with its nominal mean-square value.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSeries {
    pub samples: Vec<f64>,
    /// Sample spacing in seconds.
    pub dt: f64,
    pub target_msv: f64,
}

impl NoiseSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_square(&self) -> f64 {
        mean_square(&self.samples)
    }
}

pub(crate) fn mean_square(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// Sample spacing for band-limited white noise sampled at the Nyquist rate.
pub fn nyquist_dt(bandwidth: f64) -> f64 {
    1.0 / (2.0 * bandwidth)
}

/// `length` i.i.d. zero-mean Gaussian samples with variance `target_msv`.
pub fn gaussian_series(seed: &SeedSpec, length: usize, target_msv: f64, dt: f64) -> Result<NoiseSeries> {
    if length == 0 {
        return Err(Error::Domain("noise series length must be at least 1".into()));
    }
    if !(target_msv.is_finite() && target_msv >= 0.0) {
        return Err(Error::Domain(format!(
            "target mean-square value must be non-negative, got {target_msv}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("sample spacing must be positive, got {dt}")));
    }
    let samples = if target_msv == 0.0 {
        vec![0.0; length]
    } else {
        let rms = target_msv.sqrt();
        let mut rng = seed.rng();
        (0..length)
            .map(|_| rms * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    Ok(NoiseSeries {
        samples,
        dt,
        target_msv,
    })
}
