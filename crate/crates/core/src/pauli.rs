//! Pauli strings on a register of qubits.
//!
//! A string is stored as a base-4 index. Digit `q` (with digit 0 the least
//! significant) selects the letter on qubit `q` from `0 = I, 1 = X, 2 = Y,
//! 3 = Z`. Qubit 0 occupies the leftmost slot of tensor products, so the
//! index `6 = 2 + 4*1` on two qubits is the operator `Y (x) X` and prints as
//! `"YX"`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, kron, ComplexMatrix};

/// Letters of the single-qubit Pauli basis in index order.
pub const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Single-qubit Pauli matrix for letter index `0..4`.
pub fn letter_matrix(letter: usize) -> ComplexMatrix {
    let entries: [[Complex64; 2]; 2] = match letter {
        0 => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        1 => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        2 => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        3 => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
        _ => panic!("Pauli letter index out of range: {letter}"),
    };
    ComplexMatrix::from_fn(2, 2, |i, j| entries[i][j])
}

/// A tensor product of single-qubit Pauli operators.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    index: usize,
}

impl PauliString {
    /// Builds the string with the given base-4 index on `n` qubits.
    pub fn new(n: usize, index: usize) -> Result<Self> {
        if index >= pauli_dim(n) {
            return Err(Error::InvalidPauliIndex { index, n });
        }
        Ok(Self { n, index })
    }

    /// The identity string on `n` qubits.
    pub fn identity(n: usize) -> Self {
        Self { n, index: 0 }
    }

    /// Parses letters such as `"XZ"`, first character acting on qubit 0.
    pub fn from_letters(s: &str) -> Result<Self> {
        let mut index = 0usize;
        let mut n = 0usize;
        for (q, ch) in s.chars().enumerate() {
            let letter = LETTERS
                .iter()
                .position(|&l| l == ch.to_ascii_uppercase())
                .ok_or(Error::InvalidPauliLetter { letter: ch })?;
            index += letter << (2 * q);
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidPauliLetter { letter: ' ' });
        }
        Ok(Self { n, index })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Letter index on qubit `q`.
    pub fn letter(&self, q: usize) -> usize {
        (self.index >> (2 * q)) & 3
    }

    pub fn is_identity(&self) -> bool {
        self.index == 0
    }

    /// Number of qubits carrying a non-identity letter.
    pub fn weight(&self) -> usize {
        (0..self.n).filter(|&q| self.letter(q) != 0).count()
    }

    /// Bitmask of qubits carrying a non-identity letter.
    pub fn support_mask(&self) -> usize {
        (0..self.n)
            .filter(|&q| self.letter(q) != 0)
            .fold(0, |m, q| m | (1 << q))
    }

    /// Whether the two strings anticommute, decided letterwise: two
    /// non-identity letters contribute a sign flip exactly when they differ.
    pub fn anticommutes_with(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        let mut parity = false;
        for q in 0..self.n {
            let (a, b) = (self.letter(q), other.letter(q));
            if a != 0 && b != 0 && a != b {
                parity = !parity;
            }
        }
        parity
    }

    /// Dense matrix of the operator (unnormalized, entries in `{0, +-1, +-i}`).
    pub fn matrix(&self) -> ComplexMatrix {
        let mut m = letter_matrix(self.letter(0));
        for q in 1..self.n {
            m = kron(&m, &letter_matrix(self.letter(q)));
        }
        m
    }

    /// Matrix scaled by `1/sqrt(2^n)` so the strings form an orthonormal
    /// basis under the Hilbert-Schmidt inner product.
    pub fn normalized_matrix(&self) -> ComplexMatrix {
        let scale = 1.0 / (hilbert_dim(self.n) as f64).sqrt();
        self.matrix() * c(scale, 0.0)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", LETTERS[self.letter(q)])?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

/// Hilbert space dimension `2^n`.
pub fn hilbert_dim(n: usize) -> usize {
    1 << n
}

/// Pauli basis dimension `4^n`.
pub fn pauli_dim(n: usize) -> usize {
    1 << (2 * n)
}
