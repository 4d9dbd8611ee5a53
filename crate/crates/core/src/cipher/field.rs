//! Arithmetic in GF(2^e) for word sizes up to 8 bits.

/// Carry-less multiply of `a` and `b` reduced modulo `modulus`.
///
/// `modulus` is the full polynomial bitmask including the leading `x^e` term,
/// e.g. `0x13` for `x^4 + x + 1`.
pub fn gf_mul(a: u8, b: u8, word_bits: u32, modulus: u32) -> u8 {
    let mut acc: u32 = 0;
    let (a, b) = (a as u32, b as u32);
    for i in 0..word_bits {
        if (b >> i) & 1 == 1 {
            acc ^= a << i;
        }
    }
    for i in (word_bits..2 * word_bits).rev() {
        if (acc >> i) & 1 == 1 {
            acc ^= modulus << (i - word_bits);
        }
    }
    acc as u8
}

/// Polynomial degree of a bitmask, `None` for zero.
pub(crate) fn degree(poly: u32) -> Option<u32> {
    if poly == 0 {
        None
    } else {
        Some(31 - poly.leading_zeros())
    }
}

fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = degree(b).expect("division by zero polynomial");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Exhaustive irreducibility test: no polynomial of degree `1..=deg/2` divides `poly`.
pub fn is_irreducible(poly: u32) -> bool {
    let Some(d) = degree(poly) else {
        return false;
    };
    if d == 0 {
        return false;
    }
    for cand in 2u32..(1 << (d / 2 + 1)) {
        match degree(cand) {
            Some(dc) if dc >= 1 && dc <= d / 2 && poly_rem(poly, cand) == 0 => {
                return false;
            }
            _ => {}
        }
    }
    true
}

/// Precomputed multiplication and inversion tables for one field.
#[derive(Debug, Clone)]
pub struct Field {
    word_bits: u32,
    modulus: u32,
    mul: Vec<u8>,
    inv: Vec<u8>,
}

impl Field {
    pub fn new(word_bits: u32, modulus: u32) -> Self {
        let size = 1usize << word_bits;
        let mut mul = vec![0u8; size * size];
        for a in 0..size {
            for b in 0..size {
                mul[a * size + b] = gf_mul(a as u8, b as u8, word_bits, modulus);
            }
        }
        let mut inv = vec![0u8; size];
        for a in 1..size {
            if let Some(b) = (1..size).find(|&b| mul[a * size + b] == 1) {
                inv[a] = b as u8;
            }
        }
        Field {
            word_bits,
            modulus,
            mul,
            inv,
        }
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn size(&self) -> usize {
        1 << self.word_bits
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.size() + b as usize]
    }

    /// Multiplicative inverse with the convention `inv(0) = 0`.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }

    pub fn pow(&self, base: u8, exp: u32) -> u8 {
        (0..exp).fold(1u8, |acc, _| self.mul(acc, base))
    }

    /// Inverts a square matrix over this field, `None` when singular.
    pub fn invert_matrix(&self, m: &[Vec<u8>]) -> Option<Vec<Vec<u8>>> {
        let n = m.len();
        let mut a: Vec<Vec<u8>> = m.to_vec();
        let mut inv: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..n).map(|j| u8::from(i == j)).collect())
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r][col] != 0)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let scale = self.inv(a[col][col]);
            for j in 0..n {
                a[col][j] = self.mul(a[col][j], scale);
                inv[col][j] = self.mul(inv[col][j], scale);
            }
            for r in 0..n {
                if r != col && a[r][col] != 0 {
                    let f = a[r][col];
                    for j in 0..n {
                        a[r][j] ^= self.mul(f, a[col][j]);
                        inv[r][j] ^= self.mul(f, inv[col][j]);
                    }
                }
            }
        }
        Some(inv)
    }
}

/// Inverts an `e x e` matrix over GF(2) given as row bitmasks (bit `j` of
/// row `i` is entry `(i, j)`). Returns `None` when singular.
pub fn invert_bit_matrix(rows: &[u8], width: u32) -> Option<Vec<u8>> {
    let n = width as usize;
    let mut a: Vec<u8> = rows.to_vec();
    let mut inv: Vec<u8> = (0..n).map(|i| 1u8 << i).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| (a[r] >> col) & 1 == 1)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..n {
            if r != col && (a[r] >> col) & 1 == 1 {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    Some(inv)
}

/// Applies a GF(2) row-bitmask matrix to the bits of `x`.
pub fn apply_bit_matrix(rows: &[u8], x: u8) -> u8 {
    rows.iter().enumerate().fold(0u8, |acc, (i, row)| {
        acc | ((((row & x).count_ones() & 1) as u8) << i)
    })
}
