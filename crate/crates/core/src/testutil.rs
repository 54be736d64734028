//! Seeded random operators shared by unit tests.

use crate::qmat::{DensityMatrix, OperatorMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_complex_matrix(dim: usize, seed: u64) -> OperatorMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OperatorMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn random_hermitian(dim: usize, seed: u64) -> OperatorMatrix {
    let m = random_complex_matrix(dim, seed);
    (&m + m.adjoint()).scale(0.5)
}

pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let m = random_complex_matrix(dim, seed);
    let psd = &m * m.adjoint();
    let trace = psd.trace().re;
    DensityMatrix::new(psd.scale(1.0 / trace)).unwrap()
}

pub fn random_unitary(dim: usize, seed: u64) -> OperatorMatrix {
    let qr = random_complex_matrix(dim, seed).qr();
    qr.q()
}

pub fn pauli_x() -> OperatorMatrix {
    OperatorMatrix::from_row_slice(2, 2, &[
        Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0),
    ])
}

pub fn pauli_y() -> OperatorMatrix {
    OperatorMatrix::from_row_slice(2, 2, &[
        Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0),
        Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0),
    ])
}

pub fn pauli_z() -> OperatorMatrix {
    OperatorMatrix::from_row_slice(2, 2, &[
        Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0),
    ])
}

/// Projector onto the equal-amplitude superposition of the given basis indices.
pub fn superposition(dim: usize, indices: &[usize]) -> OperatorMatrix {
    let norm = 1.0 / (indices.len() as f64).sqrt();
    let mut v = nalgebra::DVector::<Complex64>::zeros(dim);
    for &i in indices {
        v[i] = Complex64::new(norm, 0.0);
    }
    &v * v.adjoint()
}

/// Three-site family alpha |GHZ><GHZ| + (1 - alpha) |Bell(1,3), G_2><...|.
pub fn mixture_state(alpha: f64) -> DensityMatrix {
    let ghz = superposition(8, &[0, 7]);
    let bell = superposition(8, &[0b011, 0b110]);
    DensityMatrix::new(ghz.scale(alpha) + bell.scale(1.0 - alpha)).unwrap()
}

/// Two-qubit Bell-diagonal state (I + c1 XX + c2 YY + c3 ZZ) / 4.
pub fn bell_diagonal_state(c1: f64, c2: f64, c3: f64) -> DensityMatrix {
    let mut m = OperatorMatrix::identity(4, 4);
    for (c, s) in [c1, c2, c3].iter().zip([pauli_x(), pauli_y(), pauli_z()].iter()) {
        m += crate::qmat::tensor_product(s, s).scale(*c);
    }
    DensityMatrix::new(m.scale(0.25)).unwrap()
}
