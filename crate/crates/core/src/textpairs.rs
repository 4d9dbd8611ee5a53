//! Keys and plaintext sets for instance generation.

use std::collections::HashSet;

use rand::Rng;
use thiserror::Error;

use crate::cipher::{CipherError, CipherParams, State};

/// Named 64-bit keys: pathologic, structured and random.
pub const KNOWN_KEYS: [(&str, &str); 3] = [
    ("k4", "0101010101010101"),
    ("k3", "0123456789abcdef"),
    ("k6", "b25286f7d3e7b3e1"),
];

#[derive(Debug, Error)]
pub enum PairsError {
    #[error("block of {bits} bits is not a whole number of bytes")]
    NotByteAligned { bits: usize },
    #[error("text of {len} bytes is too short for {block}-byte windows")]
    TextTooShort { len: usize, block: usize },
    #[error("could not draw {wanted} distinct plaintexts (found {found})")]
    NotEnoughDistinct { wanted: usize, found: usize },
    #[error(transparent)]
    Cipher(#[from] CipherError),
}

/// Resolves a key alias (`k3`) or literal hex. Returns the token used in
/// instance names and the key hex.
pub fn resolve_key(key: &str, token: Option<&str>) -> (String, String) {
    match KNOWN_KEYS.iter().find(|(name, _)| *name == key) {
        Some((name, hex)) => (token.unwrap_or(name).to_string(), hex.to_string()),
        None => {
            let hex = key.to_ascii_lowercase();
            let default = format!("x{}", &hex[..hex.len().min(4)]);
            (token.map_or(default, str::to_string), hex)
        }
    }
}

fn draw_distinct(
    count: usize,
    attempts: usize,
    mut next: impl FnMut() -> Result<State, PairsError>,
) -> Result<Vec<State>, PairsError> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let s = next()?;
        if seen.insert(s.words().to_vec()) {
            out.push(s);
        }
    }
    if out.len() < count {
        return Err(PairsError::NotEnoughDistinct {
            wanted: count,
            found: out.len(),
        });
    }
    Ok(out)
}

/// Distinct plaintexts read from random byte windows of `text`.
pub fn sample_text_windows(
    text: &[u8],
    params: &CipherParams,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<State>, PairsError> {
    let bits = params.block_bits();
    if !bits.is_multiple_of(8) {
        return Err(PairsError::NotByteAligned { bits });
    }
    let block = bits / 8;
    if text.len() < block {
        return Err(PairsError::TextTooShort {
            len: text.len(),
            block,
        });
    }
    let attempts = 64 * count + 1024;
    draw_distinct(count, attempts, || {
        let start = rng.gen_range(0..=text.len() - block);
        Ok(State::from_bytes(&text[start..start + block], params)?)
    })
}

/// Distinct uniformly random plaintexts.
pub fn random_plaintexts(
    params: &CipherParams,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<State>, PairsError> {
    let space = 1u128 << params.block_bits().min(127);
    if count as u128 > space {
        return Err(PairsError::NotEnoughDistinct {
            wanted: count,
            found: 0,
        });
    }
    let mask = params.word_mask();
    draw_distinct(count, 64 * count + 1024, || {
        let words = (0..params.words())
            .map(|_| rng.gen::<u8>() & mask)
            .collect();
        Ok(State::from_words(params.rows, params.cols, words)?)
    })
}
