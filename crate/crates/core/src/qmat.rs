//! Dense complex linear algebra for multi-qubit operators.
//!
//! Conventions used across the crate:
//! - Site 1 is the leftmost (slowest-varying) tensor factor.
//! - Per-site basis ordering is (E, G): excited first, so the basis of a
//!   three-site space enumerates |EEE>, |EEG>, ..., |GGG>.
//! - All entropies are base-2 (bits).

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Square complex matrix acting on an n-site register (dimension 2^n).
pub type OperatorMatrix = DMatrix<Complex64>;

#[derive(Debug, Error)]
pub enum QmatError {
    #[error("matrix is not Hermitian: max |m - m^H| entry is {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("trace deviates from one by {deviation:.3e} (tolerance {tolerance:.1e})")]
    TraceNotOne { deviation: f64, tolerance: f64 },
    #[error("eigenvalue {eigenvalue:.3e} is below the positivity floor {floor:.1e}")]
    NegativeEigenvalue { eigenvalue: f64, floor: f64 },
    #[error("dimension {dim} is not a power of two")]
    NotPowerOfTwo { dim: usize },
    #[error("site index {site} is out of range for {n_sites} sites")]
    InvalidSite { site: usize, n_sites: usize },
    #[error("site index {site} listed more than once")]
    DuplicateSite { site: usize },
    #[error(
        "relative entropy diverges: sigma eigenvalue {sigma_eigenvalue:.3e} \
         carries rho weight {rho_weight:.3e}"
    )]
    InfiniteDivergence { sigma_eigenvalue: f64, rho_weight: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Validation thresholds applied when constructing a [`DensityMatrix`].
///
/// The defaults suit freshly built analytic states; the integrator loosens
/// the positivity floor to absorb bounded step noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTolerances {
    /// Max allowed |rho - rho^H| entry.
    pub hermiticity: f64,
    /// Max allowed |tr(rho) - 1|.
    pub trace: f64,
    /// Most negative eigenvalue accepted (a small negative number).
    pub min_eigenvalue: f64,
}

impl Default for StateTolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            trace: 1e-10,
            min_eigenvalue: -1e-8,
        }
    }
}

/// Hermitian, positive-semidefinite, unit-trace operator over n sites.
///
/// Construction validates all three properties; the positivity check costs
/// one eigendecomposition of the (small, 2^n-dimensional) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: OperatorMatrix,
    tol: StateTolerances,
}

impl DensityMatrix {
    /// Validates with [`StateTolerances::default`].
    pub fn new(mat: OperatorMatrix) -> Result<Self, QmatError> {
        Self::with_tolerances(mat, StateTolerances::default())
    }

    pub fn with_tolerances(mat: OperatorMatrix, tol: StateTolerances) -> Result<Self, QmatError> {
        let dim = mat.nrows();
        if mat.ncols() != dim {
            return Err(QmatError::DimensionMismatch {
                left: dim,
                right: mat.ncols(),
            });
        }
        if !dim.is_power_of_two() {
            return Err(QmatError::NotPowerOfTwo { dim });
        }
        let herm = hermiticity_deviation(&mat);
        if herm > tol.hermiticity {
            return Err(QmatError::NotHermitian { deviation: herm });
        }
        let trace_dev = (mat.trace() - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > tol.trace {
            return Err(QmatError::TraceNotOne {
                deviation: trace_dev,
                tolerance: tol.trace,
            });
        }
        let sym = symmetrize(&mat);
        let (eigenvalues, _) = eig_ascending(sym);
        let min_eig = eigenvalues[0];
        if min_eig < tol.min_eigenvalue {
            return Err(QmatError::NegativeEigenvalue {
                eigenvalue: min_eig,
                floor: tol.min_eigenvalue,
            });
        }
        Ok(Self { mat, tol })
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> OperatorMatrix {
        self.mat
    }

    pub fn tolerances(&self) -> StateTolerances {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }
}

impl std::ops::Deref for DensityMatrix {
    type Target = OperatorMatrix;

    fn deref(&self) -> &OperatorMatrix {
        &self.mat
    }
}

/// Real eigenvalues (ascending) and matching orthonormal eigenvectors of a
/// Hermitian operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    /// Column k is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: OperatorMatrix,
}

impl Spectrum {
    /// V diag(f(lambda)) V^H for an entrywise spectral function.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> OperatorMatrix {
        let dim = self.eigenvalues.len();
        let mut out = OperatorMatrix::zeros(dim, dim);
        for k in 0..dim {
            let vk = self.eigenvectors.column(k);
            let fk = Complex64::new(f(self.eigenvalues[k]), 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    out[(i, j)] += fk * vk[i] * vk[j].conj();
                }
            }
        }
        out
    }
}

/// Kronecker product with site 1 as the leftmost factor.
pub fn tensor_product(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    debug_assert_eq!(a.nrows(), a.ncols());
    debug_assert_eq!(b.nrows(), b.ncols());
    a.kronecker(b)
}

/// Traces out every site not listed in `keep` (1-based site labels).
///
/// The output site order follows the order of `keep`, and the input's
/// validation tolerances carry over to the result.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix, QmatError> {
    let n = rho.n_sites();
    let mut seen = vec![false; n + 1];
    for &site in keep {
        if site == 0 || site > n {
            return Err(QmatError::InvalidSite { site, n_sites: n });
        }
        if seen[site] {
            return Err(QmatError::DuplicateSite { site });
        }
        seen[site] = true;
    }
    let traced: Vec<usize> = (1..=n).filter(|s| !seen[*s]).collect();
    let dim_keep = 1usize << keep.len();
    let dim_traced = 1usize << traced.len();

    // Bit position of site s in a full basis index (site 1 most significant).
    let pos = |site: usize| n - site;
    let mut out = OperatorMatrix::zeros(dim_keep, dim_keep);
    for i in 0..dim_keep {
        for j in 0..dim_keep {
            let mut base_i = 0usize;
            let mut base_j = 0usize;
            for (k, &site) in keep.iter().enumerate() {
                let shift = keep.len() - 1 - k;
                base_i |= ((i >> shift) & 1) << pos(site);
                base_j |= ((j >> shift) & 1) << pos(site);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..dim_traced {
                let mut extra = 0usize;
                for (k, &site) in traced.iter().enumerate() {
                    extra |= ((t >> k) & 1) << pos(site);
                }
                acc += rho.matrix()[(base_i | extra, base_j | extra)];
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::with_tolerances(out, rho.tolerances())
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
///
/// Inputs may deviate from exact Hermiticity by up to 1e-9 (they are
/// symmetrized before decomposition); larger deviations are rejected.
pub fn hermitian_eig(m: &OperatorMatrix) -> Result<Spectrum, QmatError> {
    if m.nrows() != m.ncols() {
        return Err(QmatError::DimensionMismatch {
            left: m.nrows(),
            right: m.ncols(),
        });
    }
    let deviation = hermiticity_deviation(m);
    if deviation > 1e-9 {
        return Err(QmatError::NotHermitian { deviation });
    }
    let (eigenvalues, eigenvectors) = eig_ascending(symmetrize(m));
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Von Neumann entropy in bits.
///
/// Eigenvalues at or below 1e-12 contribute zero; negatives are tolerated
/// down to the state's own positivity floor and panic below it, since a
/// validated [`DensityMatrix`] cannot reach that branch.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let (eigenvalues, _) = eig_ascending(symmetrize(rho.matrix()));
    let mut s = 0.0;
    for &lambda in eigenvalues.iter() {
        if lambda < rho.tolerances().min_eigenvalue {
            panic!(
                "entropy of a state with eigenvalue {lambda:.3e} below floor {:.1e}",
                rho.tolerances().min_eigenvalue
            );
        }
        if lambda > 1e-12 {
            s -= lambda * lambda.log2();
        }
    }
    s.max(0.0)
}

/// Quantum relative entropy S(rho || sigma) in bits.
///
/// Returns an [`QmatError::InfiniteDivergence`] when rho has weight at or
/// above 1e-10 in a sigma eigenspace with eigenvalue below 1e-12 (support
/// violation); weights below that threshold contribute zero.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, QmatError> {
    if rho.dim() != sigma.dim() {
        return Err(QmatError::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let (sig_vals, sig_vecs) = eig_ascending(symmetrize(sigma.matrix()));
    let mut cross = 0.0;
    for k in 0..sigma.dim() {
        let vk = sig_vecs.column(k);
        let weight = (vk.adjoint() * rho.matrix() * vk)[(0, 0)].re;
        if sig_vals[k] < 1e-12 {
            if weight >= 1e-10 {
                return Err(QmatError::InfiniteDivergence {
                    sigma_eigenvalue: sig_vals[k],
                    rho_weight: weight,
                });
            }
            continue;
        }
        cross -= weight * sig_vals[k].log2();
    }
    Ok(cross - von_neumann_entropy(rho))
}

pub(crate) fn symmetrize(m: &OperatorMatrix) -> OperatorMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn hermiticity_deviation(m: &OperatorMatrix) -> f64 {
    let diff = m - m.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Shannon entropy of a probability vector, in bits; entries at or below
/// 1e-12 contribute zero.
pub(crate) fn shannon_entropy(p: &[f64]) -> f64 {
    let mut s = 0.0;
    for &pk in p {
        if pk > 1e-12 {
            s -= pk * pk.log2();
        }
    }
    s.max(0.0)
}

fn eig_ascending(sym: OperatorMatrix) -> (DVector<f64>, OperatorMatrix) {
    let dim = sym.nrows();
    let decomp = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| decomp.eigenvalues[a].total_cmp(&decomp.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&k| decomp.eigenvalues[k]));
    let mut eigenvectors = OperatorMatrix::zeros(dim, dim);
    for (new_col, &old_col) in order.iter().enumerate() {
        eigenvectors
            .column_mut(new_col)
            .copy_from(&decomp.eigenvectors.column(old_col));
    }
    (eigenvalues, eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_density, random_hermitian, random_unitary};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_entry(m: &OperatorMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn sigma_z() -> OperatorMatrix {
        OperatorMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))
    }

    fn sigma_x() -> OperatorMatrix {
        OperatorMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    fn bell_phi_plus() -> DensityMatrix {
        let mut v = DVector::zeros(4);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[3] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        DensityMatrix::new(&v * v.adjoint()).unwrap()
    }

    #[test]
    fn tensor_product_of_identities() {
        let i2 = OperatorMatrix::identity(2, 2);
        assert_eq!(tensor_product(&i2, &i2), OperatorMatrix::identity(4, 4));
    }

    #[test]
    fn tensor_product_site_ordering() {
        let m = tensor_product(&sigma_z(), &OperatorMatrix::identity(2, 2));
        let expected = [1.0, 1.0, -1.0, -1.0];
        for (k, &d) in expected.iter().enumerate() {
            assert_abs_diff_eq!(m[(k, k)].re, d);
        }
    }

    #[test]
    fn tensor_product_mixed_product_identity() {
        let (a, b) = (random_hermitian(2, 1), random_hermitian(2, 2));
        let (c_, d) = (random_hermitian(2, 3), random_hermitian(2, 4));
        let lhs = tensor_product(&a, &b) * tensor_product(&c_, &d);
        let rhs = tensor_product(&(&a * &c_), &(&b * &d));
        assert!(max_entry(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn tensor_product_associativity() {
        let (a, b, cc) = (
            random_hermitian(2, 5),
            random_hermitian(2, 6),
            random_hermitian(2, 7),
        );
        let lhs = tensor_product(&tensor_product(&a, &b), &cc);
        let rhs = tensor_product(&a, &tensor_product(&b, &cc));
        assert!(max_entry(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn partial_trace_factorizes_product_states() {
        let rho_a = random_density(2, 10);
        let rho_b = random_density(2, 11);
        let joint =
            DensityMatrix::new(tensor_product(rho_a.matrix(), rho_b.matrix())).unwrap();
        let got_a = partial_trace(&joint, &[1]).unwrap();
        let got_b = partial_trace(&joint, &[2]).unwrap();
        assert!(max_entry(&(got_a.matrix() - rho_a.matrix())) < 1e-12);
        assert!(max_entry(&(got_b.matrix() - rho_b.matrix())) < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let reduced = partial_trace(&bell_phi_plus(), &[1]).unwrap();
        let expected = OperatorMatrix::identity(2, 2).scale(0.5);
        assert!(max_entry(&(reduced.matrix() - &expected)) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace_and_iterates() {
        let rho = random_density(8, 12);
        let pair = partial_trace(&rho, &[1, 3]).unwrap();
        assert!((pair.trace() - c(1.0, 0.0)).norm() < 1e-12);
        let single_via_pair = partial_trace(&pair, &[2]).unwrap();
        let single_direct = partial_trace(&rho, &[3]).unwrap();
        assert!(max_entry(&(single_via_pair.matrix() - single_direct.matrix())) < 1e-12);
    }

    #[test]
    fn partial_trace_keep_order_permutes_sites() {
        let rho = random_density(8, 13);
        let fwd = partial_trace(&rho, &[1, 3]).unwrap();
        let rev = partial_trace(&rho, &[3, 1]).unwrap();
        // Swapping the keep order transposes the two-site indices.
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let a = fwd.matrix()[(2 * i + j, 2 * k + l)];
                        let b = rev.matrix()[(2 * j + i, 2 * l + k)];
                        assert!((a - b).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_sites() {
        let rho = random_density(4, 14);
        assert!(matches!(
            partial_trace(&rho, &[3]),
            Err(QmatError::InvalidSite { site: 3, .. })
        ));
        assert!(matches!(
            partial_trace(&rho, &[1, 1]),
            Err(QmatError::DuplicateSite { site: 1 })
        ));
    }

    #[test]
    fn hermitian_eig_of_sigma_x() {
        let spec = hermitian_eig(&sigma_x()).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.eigenvalues[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hermitian_eig_sorts_diagonal_input() {
        let m = OperatorMatrix::from_diagonal(&DVector::from_vec(vec![
            c(0.3, 0.0),
            c(-1.2, 0.0),
            c(4.0, 0.0),
            c(0.0, 0.0),
        ]));
        let spec = hermitian_eig(&m).unwrap();
        let got: Vec<f64> = spec.eigenvalues.iter().copied().collect();
        assert_eq!(got, vec![-1.2, 0.0, 0.3, 4.0]);
    }

    #[test]
    fn hermitian_eig_reconstructs_and_is_orthonormal() {
        let m = random_hermitian(8, 20);
        let spec = hermitian_eig(&m).unwrap();
        let reconstructed = spec.apply(|x| x);
        assert!(max_entry(&(reconstructed - &m)) < 1e-9);
        let gram = spec.eigenvectors.adjoint() * &spec.eigenvectors;
        assert!(max_entry(&(gram - OperatorMatrix::identity(8, 8))) < 1e-10);
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        let mut m = sigma_x();
        m[(0, 1)] += c(1e-6, 0.0);
        assert!(matches!(
            hermitian_eig(&m),
            Err(QmatError::NotHermitian { .. })
        ));
    }

    #[test]
    fn entropy_of_maximally_mixed_qubit_is_one_bit() {
        let rho = DensityMatrix::new(OperatorMatrix::identity(2, 2).scale(0.5)).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&rho), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_of_pure_state_is_zero() {
        assert_abs_diff_eq!(von_neumann_entropy(&bell_phi_plus()), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn entropy_of_known_diagonal_state() {
        let rho = DensityMatrix::new(OperatorMatrix::from_diagonal(&DVector::from_vec(vec![
            c(0.75, 0.0),
            c(0.25, 0.0),
        ])))
        .unwrap();
        assert_abs_diff_eq!(
            von_neumann_entropy(&rho),
            0.8112781244591328,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_is_unitarily_invariant() {
        let rho = random_density(8, 30);
        let u = random_unitary(8, 31);
        let rotated =
            DensityMatrix::new(&u * rho.matrix() * u.adjoint()).unwrap();
        assert_abs_diff_eq!(
            von_neumann_entropy(&rho),
            von_neumann_entropy(&rotated),
            epsilon = 1e-9
        );
    }

    #[test]
    fn relative_entropy_of_state_with_itself_vanishes() {
        let rho = random_density(4, 40);
        let s = relative_entropy(&rho, &rho).unwrap();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn relative_entropy_known_value() {
        let uniform = DensityMatrix::new(OperatorMatrix::identity(2, 2).scale(0.5)).unwrap();
        let biased = DensityMatrix::new(OperatorMatrix::from_diagonal(&DVector::from_vec(vec![
            c(0.75, 0.0),
            c(0.25, 0.0),
        ])))
        .unwrap();
        assert_abs_diff_eq!(
            relative_entropy(&uniform, &biased).unwrap(),
            0.20751874963942196,
            epsilon = 1e-12
        );
    }

    #[test]
    fn relative_entropy_detects_support_violation() {
        let mixed = DensityMatrix::new(OperatorMatrix::identity(2, 2).scale(0.5)).unwrap();
        let pure = DensityMatrix::new(OperatorMatrix::from_diagonal(&DVector::from_vec(vec![
            c(1.0, 0.0),
            c(0.0, 0.0),
        ])))
        .unwrap();
        assert!(matches!(
            relative_entropy(&mixed, &pure),
            Err(QmatError::InfiniteDivergence { .. })
        ));
        assert!(relative_entropy(&pure, &mixed).is_ok());
    }

    #[test]
    fn relative_entropy_satisfies_klein_inequality() {
        for seed in 0..8 {
            let rho = random_density(4, 100 + seed);
            let sigma = random_density(4, 200 + seed);
            let s = relative_entropy(&rho, &sigma).unwrap();
            assert!(s >= -1e-9, "Klein inequality violated: {s}");
        }
    }

    #[test]
    fn relative_entropy_to_marginal_product_is_mutual_information() {
        let rho = random_density(4, 50);
        let rho_a = partial_trace(&rho, &[1]).unwrap();
        let rho_b = partial_trace(&rho, &[2]).unwrap();
        let product =
            DensityMatrix::new(tensor_product(rho_a.matrix(), rho_b.matrix())).unwrap();
        let lhs = relative_entropy(&rho, &product).unwrap();
        let rhs = von_neumann_entropy(&rho_a) + von_neumann_entropy(&rho_b)
            - von_neumann_entropy(&rho);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-8);
    }

    #[test]
    fn density_matrix_rejects_invalid_inputs() {
        let non_herm = OperatorMatrix::from_row_slice(
            2,
            2,
            &[c(0.5, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        );
        assert!(matches!(
            DensityMatrix::new(non_herm),
            Err(QmatError::NotHermitian { .. })
        ));

        let wrong_trace = OperatorMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(wrong_trace),
            Err(QmatError::TraceNotOne { .. })
        ));

        let negative = OperatorMatrix::from_diagonal(&DVector::from_vec(vec![
            c(1.1, 0.0),
            c(-0.1, 0.0),
        ]));
        assert!(matches!(
            DensityMatrix::new(negative),
            Err(QmatError::NegativeEigenvalue { .. })
        ));

        let loose = StateTolerances {
            min_eigenvalue: -0.2,
            ..StateTolerances::default()
        };
        let negative = OperatorMatrix::from_diagonal(&DVector::from_vec(vec![
            c(1.1, 0.0),
            c(-0.1, 0.0),
        ]));
        assert!(DensityMatrix::with_tolerances(negative, loose).is_ok());
    }
}
