use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, HermitianMatrix};

pub const MAX_QUBITS: usize = 8;

/// A normalized Pauli string `E^y = 2^{-N/2} s^{y_1} x ... x s^{y_N}` in
/// sparse form.
///
/// Every tensor product of Pauli matrices is a signed, phased permutation:
/// column `c` has its single nonzero in row `c ^ xmask`. Qubit 1 is the most
/// significant bit of the row/column index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    qubits: usize,
    index: usize,
    xmask: usize,
    zmask: usize,
    n_y: u32,
}

impl PauliString {
    /// From the base-4 index whose digits (most significant first) form the word.
    pub fn from_index(qubits: usize, index: usize) -> Result<Self> {
        check_qubits(qubits)?;
        if index >= 1 << (2 * qubits) {
            return Err(Error::InvalidParameter(format!("Pauli index {index} out of range for {qubits} qubits")));
        }
        let (mut xmask, mut zmask, mut n_y) = (0, 0, 0);
        for q in 0..qubits {
            // digit for qubit q+1, which owns bit (qubits - 1 - q)
            let digit = (index >> (2 * (qubits - 1 - q))) & 3;
            let bit = 1 << (qubits - 1 - q);
            if digit == 1 || digit == 2 {
                xmask |= bit;
            }
            if digit == 2 || digit == 3 {
                zmask |= bit;
            }
            if digit == 2 {
                n_y += 1;
            }
        }
        Ok(Self { qubits, index, xmask, zmask, n_y })
    }

    pub fn from_word(word: &[u8]) -> Result<Self> {
        check_qubits(word.len())?;
        let mut index = 0;
        for &s in word {
            if s > 3 {
                return Err(Error::InvalidPauliSymbol(s));
            }
            index = 4 * index + s as usize;
        }
        Self::from_index(word.len(), index)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn word(&self) -> Vec<u8> {
        (0..self.qubits).map(|q| ((self.index >> (2 * (self.qubits - 1 - q))) & 3) as u8).collect()
    }

    /// Row holding the nonzero of column `c`.
    #[inline]
    pub fn row(&self, c: usize) -> usize {
        c ^ self.xmask
    }

    /// Unnormalized entry at `(row(c), c)`: `i^{#Y} (-1)^{popcount(c & zmask)}`.
    #[inline]
    pub fn phase(&self, c: usize) -> Complex64 {
        let sign = if (c & self.zmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        match self.n_y % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        }
    }

    pub fn norm_factor(&self) -> f64 {
        (self.dim() as f64).sqrt().recip()
    }

    /// `tr(E A)` in O(d).
    pub fn trace_with(&self, a: &CMatrix) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..self.dim() {
            // tr(E A) = sum_c E[row(c), c] A[c, row(c)]
            acc += self.phase(c) * a[(c, self.row(c))];
        }
        acc * self.norm_factor()
    }

    /// `m += coef * E`.
    pub fn add_scaled_into(&self, m: &mut CMatrix, coef: f64) {
        let s = coef * self.norm_factor();
        for c in 0..self.dim() {
            m[(self.row(c), c)] += self.phase(c) * s;
        }
    }

    pub fn to_matrix(&self) -> HermitianMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        self.add_scaled_into(&mut m, 1.0);
        HermitianMatrix::hermitize(m)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    Ok(())
}

/// The normalized basis element `E^y` for a word `y` in `{0,1,2,3}^N`.
pub fn pauli_basis_element(qubits: usize, word: &[u8]) -> Result<HermitianMatrix> {
    check_qubits(qubits)?;
    if word.len() != qubits {
        return Err(Error::LengthMismatch { expected: qubits, actual: word.len() });
    }
    Ok(PauliString::from_word(word)?.to_matrix())
}
