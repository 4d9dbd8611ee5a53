use std::fmt;
use std::ops::BitXor;

use super::{CipherError, CipherParams};

/// An `rows x cols` array of e-bit words stored column-major, so word `k`
/// sits at row `k % rows`, column `k / rows`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    rows: usize,
    cols: usize,
    words: Vec<u8>,
}

impl State {
    pub fn zero(rows: usize, cols: usize) -> Self {
        State {
            rows,
            cols,
            words: vec![0; rows * cols],
        }
    }

    pub fn from_words(rows: usize, cols: usize, words: Vec<u8>) -> Result<Self, CipherError> {
        if words.len() != rows * cols {
            return Err(CipherError::Dimension {
                expected: rows * cols,
                found: words.len(),
            });
        }
        Ok(State { rows, cols, words })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words(&self) -> &[u8] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u8] {
        &mut self.words
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.words[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.words[col * self.rows + row] = v;
    }

    pub fn column(&self, col: usize) -> &[u8] {
        &self.words[col * self.rows..(col + 1) * self.rows]
    }

    /// Bit `b` (LSB = 0) of word `w`.
    #[inline]
    pub fn bit(&self, word: usize, bit: u32) -> bool {
        (self.words[word] >> bit) & 1 == 1
    }

    /// Parses a hex string of exactly `r*c*e/4` digits. Words are packed
    /// big-endian in column-major order, so `0123456789abcdef` under
    /// `e = 4` yields words `0, 1, ..., f`.
    pub fn from_hex(hex: &str, params: &CipherParams) -> Result<Self, CipherError> {
        let bits = params.block_bits();
        if !bits.is_multiple_of(4) {
            return Err(CipherError::InvalidParams(format!(
                "block of {bits} bits has no hex rendering"
            )));
        }
        let digits = bits / 4;
        if hex.len() != digits {
            return Err(CipherError::BadHex(format!(
                "expected {digits} hex digits, got {}",
                hex.len()
            )));
        }
        let mut stream = Vec::with_capacity(bits);
        for ch in hex.chars() {
            let d = ch
                .to_digit(16)
                .ok_or_else(|| CipherError::BadHex(format!("invalid hex digit {ch:?}")))?;
            for i in (0..4).rev() {
                stream.push((d >> i) & 1 == 1);
            }
        }
        let e = params.word_bits as usize;
        let words = stream
            .chunks(e)
            .map(|chunk| chunk.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
            .collect();
        State::from_words(params.rows, params.cols, words)
    }

    pub fn to_hex(&self, word_bits: u32) -> String {
        let mut stream = Vec::with_capacity(self.words.len() * word_bits as usize);
        for &w in &self.words {
            for i in (0..word_bits).rev() {
                stream.push((w >> i) & 1);
            }
        }
        stream
            .chunks(4)
            .map(|c| {
                let d = c.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                char::from_digit(d, 16).expect("nibble")
            })
            .collect()
    }

    /// Packs raw bytes (e.g. ASCII text) into a state. Requires `e` to divide 8
    /// or equal 8 and the byte count to match the block size.
    pub fn from_bytes(bytes: &[u8], params: &CipherParams) -> Result<Self, CipherError> {
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        Self::from_hex(&hex, params)
    }
}

impl BitXor for &State {
    type Output = State;

    fn bitxor(self, rhs: &State) -> State {
        debug_assert_eq!(self.words.len(), rhs.words.len());
        State {
            rows: self.rows,
            cols: self.cols,
            words: self
                .words
                .iter()
                .zip(&rhs.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{w:x}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sr(n: usize, r: usize, c: usize, e: u32) -> CipherParams {
        CipherParams::small_scale(n, r, c, e).unwrap()
    }

    #[test]
    fn table_keys_parse() {
        let p = sr(3, 4, 4, 4);
        let k4 = State::from_hex("0101010101010101", &p).unwrap();
        for (i, &w) in k4.words().iter().enumerate() {
            assert_eq!(w, (i % 2) as u8);
        }
        let k3 = State::from_hex("0123456789abcdef", &p).unwrap();
        assert_eq!(k3.words(), (0..16).collect::<Vec<u8>>().as_slice());
        assert_eq!(k3.get(1, 0), 1);
        assert_eq!(k3.get(0, 1), 4);
        let k6 = State::from_hex("b25286f7d3e7b3e1", &p).unwrap();
        assert_eq!(k6.to_hex(4), "b25286f7d3e7b3e1");
    }

    #[test]
    fn hex_length_and_digit_errors() {
        let p = sr(3, 4, 4, 4);
        assert!(matches!(
            State::from_hex("0123", &p),
            Err(CipherError::BadHex(_))
        ));
        assert!(matches!(
            State::from_hex("0123456789abcdeg", &p),
            Err(CipherError::BadHex(_))
        ));
    }

    #[test]
    fn byte_words() {
        let p = sr(1, 2, 2, 8);
        let s = State::from_hex("a1b2c3d4", &p).unwrap();
        assert_eq!(s.words(), &[0xa1, 0xb2, 0xc3, 0xd4]);
        assert_eq!(s.to_hex(8), "a1b2c3d4");
        let t = State::from_bytes(b"abcdefgh", &sr(3, 4, 4, 4)).unwrap();
        assert_eq!(t.to_hex(4), "6162636465666768");
    }
}
