//! The small-scale AES model cipher SR(n, r, c, e).
//!
//! A round is AddRoundKey, SubWords, ShiftRows, MixColumns. After `n`
//! rounds a final AddRoundKey with round key `n` produces the ciphertext.
//! MixColumns is applied in every round, including the last one.

pub mod field;
mod params;
mod state;

use thiserror::Error;

pub use field::{gf_mul, Field};
pub use params::{CipherOverrides, CipherParams};
pub use state::State;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CipherError {
    #[error("invalid cipher parameters: {0}")]
    InvalidParams(String),
    #[error("affine matrix is singular over GF(2)")]
    SingularAffine,
    #[error("mix matrix is singular over the word field")]
    SingularMix,
    #[error("expected {expected} words, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("bad hex: {0}")]
    BadHex(String),
}

/// Secret key plus the `n + 1` round keys derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub secret_key: State,
    pub round_keys: Vec<State>,
}

/// Per-round S-box inputs and outputs of one encryption.
///
/// `sbox_inputs[i]` and `sbox_outputs[i]` belong to round `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptionTrace {
    pub sbox_inputs: Vec<State>,
    pub sbox_outputs: Vec<State>,
    pub ciphertext: State,
}

/// Builds the S-box `S[x] = A * inv(x) + b`. Fails if `A` is singular.
pub fn build_sbox(params: &CipherParams) -> Result<Vec<u8>, CipherError> {
    if field::invert_bit_matrix(&params.affine_matrix, params.word_bits).is_none() {
        return Err(CipherError::SingularAffine);
    }
    let f = Field::new(params.word_bits, params.modulus);
    Ok((0..f.size())
        .map(|x| {
            field::apply_bit_matrix(&params.affine_matrix, f.inv(x as u8)) ^ params.affine_const
        })
        .collect())
}

/// A parameter set with its derived tables.
#[derive(Debug, Clone)]
pub struct Cipher {
    params: CipherParams,
    field: Field,
    sbox: Vec<u8>,
    inv_sbox: Vec<u8>,
    inv_mix: Vec<Vec<u8>>,
}

impl Cipher {
    pub fn new(params: CipherParams) -> Result<Self, CipherError> {
        params.validate()?;
        let field = Field::new(params.word_bits, params.modulus);
        let sbox = build_sbox(&params)?;
        let mut inv_sbox = vec![0u8; sbox.len()];
        for (x, &y) in sbox.iter().enumerate() {
            inv_sbox[y as usize] = x as u8;
        }
        let inv_mix = field
            .invert_matrix(&params.mix_matrix)
            .ok_or(CipherError::SingularMix)?;
        Ok(Cipher {
            params,
            field,
            sbox,
            inv_sbox,
            inv_mix,
        })
    }

    pub fn params(&self) -> &CipherParams {
        &self.params
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn sbox(&self) -> &[u8] {
        &self.sbox
    }

    pub fn inv_sbox(&self) -> &[u8] {
        &self.inv_sbox
    }

    pub fn parse_state(&self, hex: &str) -> Result<State, CipherError> {
        State::from_hex(hex, &self.params)
    }

    fn check_dims(&self, s: &State) -> Result<(), CipherError> {
        if s.rows() != self.params.rows || s.cols() != self.params.cols {
            return Err(CipherError::Dimension {
                expected: self.params.words(),
                found: s.words().len(),
            });
        }
        Ok(())
    }

    pub fn round_constant(&self, step: usize) -> u8 {
        self.field.pow(self.params.rcon_base, step as u32)
    }

    /// AES-style key schedule producing `n + 1` round keys.
    pub fn expand_key(&self, secret_key: &State) -> Result<KeyMaterial, CipherError> {
        self.check_dims(secret_key)?;
        let (r, c) = (self.params.rows, self.params.cols);
        let mut round_keys = Vec::with_capacity(self.params.rounds + 1);
        round_keys.push(secret_key.clone());
        for step in 0..self.params.rounds {
            let prev = &round_keys[step];
            let mut next = State::zero(r, c);
            let rcon = self.round_constant(step);
            for row in 0..r {
                let rotated = prev.get((row + 1) % r, c - 1);
                let mut v = prev.get(row, 0) ^ self.sbox[rotated as usize];
                if row == 0 {
                    v ^= rcon;
                }
                next.set(row, 0, v);
            }
            for col in 1..c {
                for row in 0..r {
                    next.set(row, col, prev.get(row, col) ^ next.get(row, col - 1));
                }
            }
            round_keys.push(next);
        }
        Ok(KeyMaterial {
            secret_key: secret_key.clone(),
            round_keys,
        })
    }

    pub fn sub_words(&self, s: &State) -> State {
        let mut out = s.clone();
        for w in out.words_mut() {
            *w = self.sbox[*w as usize];
        }
        out
    }

    /// ShiftRows followed by MixColumns.
    pub fn linear(&self, s: &State) -> State {
        let (r, c) = (self.params.rows, self.params.cols);
        let mut out = State::zero(r, c);
        for col in 0..c {
            for row in 0..r {
                let v = (0..r).fold(0u8, |acc, k| {
                    acc ^ self
                        .field
                        .mul(self.params.mix_matrix[row][k], s.get(k, (col + k) % c))
                });
                out.set(row, col, v);
            }
        }
        out
    }

    pub fn linear_inverse(&self, s: &State) -> State {
        let (r, c) = (self.params.rows, self.params.cols);
        let mut out = State::zero(r, c);
        for col in 0..c {
            for k in 0..r {
                let v = (0..r).fold(0u8, |acc, j| {
                    acc ^ self.field.mul(self.inv_mix[k][j], s.get(j, col))
                });
                out.set(k, (col + k) % c, v);
            }
        }
        out
    }

    pub fn encrypt_block(
        &self,
        plaintext: &State,
        key: &KeyMaterial,
    ) -> Result<EncryptionTrace, CipherError> {
        self.check_dims(plaintext)?;
        if key.round_keys.len() != self.params.rounds + 1 {
            return Err(CipherError::InvalidParams(format!(
                "expected {} round keys, got {}",
                self.params.rounds + 1,
                key.round_keys.len()
            )));
        }
        let n = self.params.rounds;
        let mut sbox_inputs = Vec::with_capacity(n);
        let mut sbox_outputs = Vec::with_capacity(n);
        let mut x = plaintext ^ &key.round_keys[0];
        for round in 1..=n {
            let y = self.sub_words(&x);
            let z = self.linear(&y);
            sbox_inputs.push(x);
            sbox_outputs.push(y);
            x = &z ^ &key.round_keys[round];
        }
        Ok(EncryptionTrace {
            sbox_inputs,
            sbox_outputs,
            ciphertext: x,
        })
    }

    pub fn encrypt(&self, plaintext: &State, key: &KeyMaterial) -> Result<State, CipherError> {
        Ok(self.encrypt_block(plaintext, key)?.ciphertext)
    }

    pub fn decrypt_block(
        &self,
        ciphertext: &State,
        key: &KeyMaterial,
    ) -> Result<State, CipherError> {
        self.check_dims(ciphertext)?;
        let mut x = ciphertext.clone();
        for round in (1..=self.params.rounds).rev() {
            let z = &x ^ &key.round_keys[round];
            let y = self.linear_inverse(&z);
            x = y.clone();
            for w in x.words_mut() {
                *w = self.inv_sbox[*w as usize];
            }
        }
        Ok(&x ^ &key.round_keys[0])
    }

    /// Bit-level dependency sets of the linear layer: entry `t` lists the
    /// input bit indices (`word * e + bit`) that XOR into output bit `t`.
    pub fn linear_bit_dependencies(&self) -> Vec<Vec<usize>> {
        let e = self.params.word_bits as usize;
        let b = self.params.block_bits();
        let mut deps = vec![Vec::new(); b];
        for input in 0..b {
            let mut s = State::zero(self.params.rows, self.params.cols);
            s.words_mut()[input / e] = 1 << (input % e);
            let out = self.linear(&s);
            for (t, dep) in deps.iter_mut().enumerate() {
                if out.bit(t / e, (t % e) as u32) {
                    dep.push(input);
                }
            }
        }
        deps
    }
}
