use serde::{Deserialize, Serialize};

use super::field::{degree, invert_bit_matrix, is_irreducible, Field};
use super::CipherError;

/// Parameters of the small-scale AES family SR(n, r, c, e).
///
/// The field modulus, S-box affine layer, MixColumns matrix and round
/// constant generator are data: [`CipherParams::small_scale`] fills in
/// defaults and every field can be overridden from a config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherParams {
    pub rounds: usize,
    pub rows: usize,
    pub cols: usize,
    pub word_bits: u32,
    /// Irreducible polynomial of degree `word_bits`, leading term included.
    pub modulus: u32,
    /// `rows x rows` matrix over GF(2^e).
    pub mix_matrix: Vec<Vec<u8>>,
    /// `word_bits` GF(2) rows; bit `j` of row `i` is entry `(i, j)`.
    pub affine_matrix: Vec<u8>,
    pub affine_const: u8,
    pub rcon_base: u8,
}

/// Optional overrides layered on top of the defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CipherOverrides {
    pub modulus: Option<u32>,
    pub mix_matrix: Option<Vec<Vec<u8>>>,
    pub affine_matrix: Option<Vec<u8>>,
    pub affine_const: Option<u8>,
    pub rcon_base: Option<u8>,
}

fn default_modulus(word_bits: u32) -> Option<u32> {
    match word_bits {
        4 => Some(0x13),
        8 => Some(0x11b),
        _ => None,
    }
}

fn default_affine(word_bits: u32) -> Option<(Vec<u8>, u8)> {
    match word_bits {
        // out_i = in_i ^ in_{i+1} ^ in_{i+2}, constant 0110
        4 => Some((vec![0b0111, 0b1110, 0b1101, 0b1011], 0x6)),
        8 => Some(((0..8).map(|i| 0xf1u8.rotate_left(i)).collect(), 0x63)),
        _ => None,
    }
}

fn default_mix(rows: usize) -> Vec<Vec<u8>> {
    let first: Vec<u8> = match rows {
        1 => vec![1],
        2 => vec![3, 2],
        _ => {
            let mut v = vec![1u8; rows];
            v[0] = 2;
            v[1] = 3;
            v
        }
    };
    (0..rows)
        .map(|i| (0..rows).map(|j| first[(j + rows - i) % rows]).collect())
        .collect()
}

impl CipherParams {
    /// Default parameters for SR(n, r, c, e), validated.
    pub fn small_scale(
        rounds: usize,
        rows: usize,
        cols: usize,
        word_bits: u32,
    ) -> Result<Self, CipherError> {
        Self::with_overrides(rounds, rows, cols, word_bits, &CipherOverrides::default())
    }

    pub fn with_overrides(
        rounds: usize,
        rows: usize,
        cols: usize,
        word_bits: u32,
        o: &CipherOverrides,
    ) -> Result<Self, CipherError> {
        if !(1..=8).contains(&word_bits) {
            return Err(CipherError::InvalidParams(format!(
                "word size must be 1..=8 bits, got {word_bits}"
            )));
        }
        let modulus = o
            .modulus
            .or_else(|| default_modulus(word_bits))
            .ok_or_else(|| {
                CipherError::InvalidParams(format!("no default modulus for e={word_bits}"))
            })?;
        let (affine_matrix, affine_const) = match (&o.affine_matrix, o.affine_const) {
            (Some(m), c) => (m.clone(), c.unwrap_or(0)),
            (None, c) => {
                let (m, dc) = default_affine(word_bits).ok_or_else(|| {
                    CipherError::InvalidParams(format!("no default affine layer for e={word_bits}"))
                })?;
                (m, c.unwrap_or(dc))
            }
        };
        let params = CipherParams {
            rounds,
            rows,
            cols,
            word_bits,
            modulus,
            mix_matrix: o.mix_matrix.clone().unwrap_or_else(|| default_mix(rows)),
            affine_matrix,
            affine_const,
            rcon_base: o.rcon_base.unwrap_or(2),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn block_bits(&self) -> usize {
        self.rows * self.cols * self.word_bits as usize
    }

    pub fn words(&self) -> usize {
        self.rows * self.cols
    }

    pub fn word_mask(&self) -> u8 {
        ((1u16 << self.word_bits) - 1) as u8
    }

    pub fn validate(&self) -> Result<(), CipherError> {
        let bad = |m: String| Err(CipherError::InvalidParams(m));
        if self.rounds == 0 {
            return bad("round count must be at least 1".into());
        }
        if self.rows == 0 || self.cols == 0 {
            return bad("state must have at least one row and one column".into());
        }
        if !(1..=8).contains(&self.word_bits) {
            return bad(format!(
                "word size must be 1..=8 bits, got {}",
                self.word_bits
            ));
        }
        if degree(self.modulus) != Some(self.word_bits) {
            return bad(format!(
                "modulus {:#x} does not have degree {}",
                self.modulus, self.word_bits
            ));
        }
        if !is_irreducible(self.modulus) {
            return bad(format!("modulus {:#x} is reducible", self.modulus));
        }
        let mask = self.word_mask();
        if self.mix_matrix.len() != self.rows
            || self.mix_matrix.iter().any(|r| r.len() != self.rows)
        {
            return bad(format!("mix matrix must be {0}x{0}", self.rows));
        }
        if self.mix_matrix.iter().flatten().any(|&v| v & !mask != 0) {
            return bad("mix matrix entry exceeds word size".into());
        }
        if self.affine_matrix.len() != self.word_bits as usize
            || self.affine_matrix.iter().any(|&r| r & !mask != 0)
        {
            return bad(format!(
                "affine matrix must have {} rows of {} bits",
                self.word_bits, self.word_bits
            ));
        }
        if self.affine_const & !mask != 0 || self.rcon_base & !mask != 0 {
            return bad("affine constant or rcon base exceeds word size".into());
        }
        if self.rcon_base == 0 {
            return bad("rcon base must be nonzero".into());
        }
        if invert_bit_matrix(&self.affine_matrix, self.word_bits).is_none() {
            return Err(CipherError::SingularAffine);
        }
        let field = Field::new(self.word_bits, self.modulus);
        if field.invert_matrix(&self.mix_matrix).is_none() {
            return Err(CipherError::SingularMix);
        }
        Ok(())
    }

    /// Instance-style short label, e.g. `SR(3,4,4,4)`.
    pub fn label(&self) -> String {
        format!(
            "SR({},{},{},{})",
            self.rounds, self.rows, self.cols, self.word_bits
        )
    }
}
