use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{TranslateError, Translator};
use crate::anchor::{BULLET, QUOTE};

/// Identity translation that loses one anchor character (a quote or a
/// bullet) with a fixed probability per text.
///
/// The outcome for a text depends only on the seed, the text and its index
/// in the batch, so reruns are reproducible.
#[derive(Debug, Clone, Copy)]
pub struct FaultInjectionBackend {
    probability: f64,
    seed: u64,
}

impl FaultInjectionBackend {
    pub fn new(probability: f64, seed: u64) -> Self {
        Self { probability, seed }
    }

    fn rng_for(&self, index: usize, text: &str) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((index as u64).to_le_bytes());
        hasher.update(text.as_bytes());
        ChaCha8Rng::from_seed(hasher.finalize().into())
    }

    pub fn corrupt(&self, index: usize, text: &str) -> String {
        let mut rng = self.rng_for(index, text);
        if !rng.random_bool(self.probability) {
            return text.to_string();
        }
        let anchors: Vec<usize> = text
            .chars()
            .enumerate()
            .filter_map(|(i, c)| (c == QUOTE || c == BULLET).then_some(i))
            .collect();
        if anchors.is_empty() {
            return text.to_string();
        }
        let victim = anchors[rng.random_range(0..anchors.len())];
        text.chars()
            .enumerate()
            .filter_map(|(i, c)| (i != victim).then_some(c))
            .collect()
    }
}

impl Translator for FaultInjectionBackend {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, TranslateError> {
        if texts.is_empty() {
            return Err(TranslateError::EmptyBatch);
        }
        Ok(texts.iter().enumerate().map(|(i, t)| self.corrupt(i, t)).collect())
    }

    fn identity(&self) -> String {
        format!("fault_injection:{}:{}", self.probability, self.seed)
    }
}
