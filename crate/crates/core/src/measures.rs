//! Correlation measures built on local projective measurements: mutual
//! information, asymmetric quantum discord, global quantum discord (GQD)
//! over any number of sites, the multipartite combination MGQD, and the
//! three residual monogamy differences.
//!
//! The GQD of a state rho is
//!
//! min over product bases of [ S(rho || Phi(rho)) - sum_j S(rho_j || Phi_j(rho_j)) ]
//!
//! where Phi dephases in the measured product basis. Internally the
//! objective uses the pinching identity S(rho || Phi(rho)) = H(diag) - S(rho),
//! which avoids matrix logarithms per evaluation; tests cross-check it
//! against the literal relative-entropy route through [`dephase`].
//!
//! The minimization is a multi-start simplex descent over 2 angles per
//! site (theta, phi of the measurement axis), seeded from three canonical
//! axes plus jittered grid points drawn from a seeded RNG. Starts run in
//! parallel; the reduction to the best start is sequential with ties
//! broken by lowest start index, so results are reproducible bit for bit.

use crate::optim::{minimize_simplex, SimplexOptions, SimplexResult};
use crate::qmat::{
    partial_trace, shannon_entropy, symmetrize, tensor_product, von_neumann_entropy,
    DensityMatrix, OperatorMatrix, QmatError,
};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasuresError {
    #[error("basis covers {basis} sites but the state has {state}")]
    SiteCountMismatch { basis: usize, state: usize },
    #[error("a two-site state is required, got {n_sites} sites")]
    NotTwoSites { n_sites: usize },
    #[error("a three-site state is required, got {n_sites} sites")]
    NotThreeSites { n_sites: usize },
    #[error("invalid bipartition: {0}")]
    BadBipartition(String),
    #[error("invalid optimizer config: {0}")]
    BadConfig(String),
    #[error("correlation triple gives negative Bell weight {weight:.3e}")]
    InvalidBellTriple { weight: f64 },
    #[error(transparent)]
    State(#[from] QmatError),
}

/// One measurement axis (theta, phi) per site; site 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    pub angles: Vec<(f64, f64)>,
}

impl MeasurementBasis {
    pub fn new(angles: Vec<(f64, f64)>) -> Self {
        Self { angles }
    }

    /// All-z axes: per-site projectors onto the computational basis.
    pub fn computational(n_sites: usize) -> Self {
        Self {
            angles: vec![(0.0, 0.0); n_sites],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.angles.len()
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert!(flat.len() % 2 == 0, "angle list must pair theta with phi");
        Self {
            angles: flat.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.angles.iter().flat_map(|&(t, p)| [t, p]).collect()
    }

    /// Equivalent basis with theta in [0, pi] and phi in [0, 2 pi).
    ///
    /// Uses the projector identity P(2 pi - theta, phi) = P(theta, phi + pi),
    /// so the per-site projector pair is unchanged.
    pub fn normalized(&self) -> Self {
        let angles = self
            .angles
            .iter()
            .map(|&(theta, phi)| {
                let mut t = theta.rem_euclid(2.0 * PI);
                let mut p = phi;
                if t > PI {
                    t = 2.0 * PI - t;
                    p += PI;
                }
                (t, p.rem_euclid(2.0 * PI))
            })
            .collect();
        Self { angles }
    }

    /// Product unitary whose columns are the measurement eigenvectors,
    /// site 1 as the most significant factor.
    pub fn product_unitary(&self) -> OperatorMatrix {
        product_unitary_from_flat(&self.flat())
    }
}

/// Multi-start settings for the basis search.
#[derive(Debug, Clone)]
pub struct OptimizationConfig {
    pub n_starts: usize,
    /// Grid points per angle used to seed the non-canonical starts.
    pub grid_resolution: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the objective spread, in bits.
    pub f_tol: f64,
    /// Seed for the jittered grid starts.
    pub seed: u64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            n_starts: 24,
            grid_resolution: 8,
            max_iterations: 500,
            f_tol: 1e-7,
            seed: 17,
        }
    }
}

impl OptimizationConfig {
    fn validate(&self) -> Result<(), MeasuresError> {
        if self.n_starts == 0 {
            return Err(MeasuresError::BadConfig("n_starts must be >= 1".into()));
        }
        if self.grid_resolution == 0 {
            return Err(MeasuresError::BadConfig("grid_resolution must be >= 1".into()));
        }
        if !(self.f_tol > 0.0) {
            return Err(MeasuresError::BadConfig("f_tol must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(MeasuresError::BadConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a basis minimization. `value` is clamped to zero from below
/// (raw optima sit within -1e-7 of zero only through roundoff);
/// `starts_agreeing` counts starts that landed within 1e-5 of the best,
/// exposing kinks in the landscape where different starts find different
/// branches.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub value: f64,
    pub optimal_basis: MeasurementBasis,
    pub starts_agreeing: usize,
    pub starts_converged: usize,
}

/// Which site of a two-site state is measured in [`qd_asymmetric`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeasuredSide {
    First,
    /// Conventional choice: measure the second label of the pair.
    #[default]
    Second,
}

/// Rank-1 orthogonal pair projecting onto the axis (theta, phi):
/// plus onto (cos(theta/2), e^{i phi} sin(theta/2)), minus onto its
/// orthogonal complement. Complete for any angles.
pub fn local_projectors(theta: f64, phi: f64) -> (OperatorMatrix, OperatorMatrix) {
    let plus = bloch_plus(theta, phi);
    let minus = bloch_minus(theta, phi);
    (&plus * plus.adjoint(), &minus * minus.adjoint())
}

/// Full dephasing map Phi(rho) = sum_k Pi_k rho Pi_k over the product
/// projectors of `basis`. Idempotent and trace-preserving.
pub fn dephase(rho: &DensityMatrix, basis: &MeasurementBasis) -> Result<DensityMatrix, MeasuresError> {
    let n = rho.n_sites();
    if basis.n_sites() != n {
        return Err(MeasuresError::SiteCountMismatch {
            basis: basis.n_sites(),
            state: n,
        });
    }
    let projectors: Vec<(OperatorMatrix, OperatorMatrix)> = basis
        .angles
        .iter()
        .map(|&(t, p)| local_projectors(t, p))
        .collect();
    let mut out = OperatorMatrix::zeros(rho.dim(), rho.dim());
    for outcome in 0..rho.dim() {
        let mut pi_k = OperatorMatrix::identity(1, 1);
        for (site, (plus, minus)) in projectors.iter().enumerate() {
            let bit = (outcome >> (n - 1 - site)) & 1;
            pi_k = tensor_product(&pi_k, if bit == 0 { plus } else { minus });
        }
        out += &pi_k * rho.matrix() * &pi_k;
    }
    DensityMatrix::with_tolerances(symmetrize(&out), rho.tolerances()).map_err(Into::into)
}

/// I(A:B) = S(rho_A) + S(rho_B) - S(rho) across the bipartition whose
/// first side is `side_a` (1-based sites); the second side is the
/// complement. Equals S(rho || rho_A x rho_B).
pub fn mutual_information(rho: &DensityMatrix, side_a: &[usize]) -> Result<f64, MeasuresError> {
    let n = rho.n_sites();
    if side_a.is_empty() || side_a.len() >= n {
        return Err(MeasuresError::BadBipartition(format!(
            "first side must be a non-empty proper subset of 1..={n}"
        )));
    }
    let mut member = vec![false; n + 1];
    for &s in side_a {
        if s == 0 || s > n {
            return Err(MeasuresError::BadBipartition(format!(
                "site {s} outside 1..={n}"
            )));
        }
        if member[s] {
            return Err(MeasuresError::BadBipartition(format!("site {s} repeated")));
        }
        member[s] = true;
    }
    let side_b: Vec<usize> = (1..=n).filter(|s| !member[*s]).collect();
    let rho_a = partial_trace(rho, side_a)?;
    let rho_b = partial_trace(rho, &side_b)?;
    Ok(von_neumann_entropy(&rho_a) + von_neumann_entropy(&rho_b) - von_neumann_entropy(rho))
}

/// One-sided quantum discord of a two-site state: mutual information
/// minus the classical correlation extractable by the best projective
/// measurement on `side`.
pub fn qd_asymmetric(
    rho: &DensityMatrix,
    side: MeasuredSide,
    opt: &OptimizationConfig,
) -> Result<CorrelationReport, MeasuresError> {
    if rho.n_sites() != 2 {
        return Err(MeasuresError::NotTwoSites {
            n_sites: rho.n_sites(),
        });
    }
    opt.validate()?;
    let mutual = mutual_information(rho, &[1])?;
    let unmeasured_site = match side {
        MeasuredSide::First => 2,
        MeasuredSide::Second => 1,
    };
    let s_unmeasured = von_neumann_entropy(&partial_trace(rho, &[unmeasured_site])?);
    let ctx = QdContext {
        rho: rho.matrix().clone(),
        mutual,
        s_unmeasured,
        measured_first: side == MeasuredSide::First,
    };
    let f = |x: &[f64]| ctx.objective(x);
    let results = multistart(&f, 1, opt);
    Ok(finalize(&results, &f))
}

/// GQD objective at a fixed basis: [H(diag of rotated rho) - S(rho)]
/// minus the same difference for each single-site marginal, all using
/// the per-site angles of `basis`.
pub fn gqd_objective(rho: &DensityMatrix, basis: &MeasurementBasis) -> Result<f64, MeasuresError> {
    if basis.n_sites() != rho.n_sites() {
        return Err(MeasuresError::SiteCountMismatch {
            basis: basis.n_sites(),
            state: rho.n_sites(),
        });
    }
    let ctx = GqdContext::new(rho)?;
    Ok(ctx.objective(&basis.flat()))
}

/// Global quantum discord: [`gqd_objective`] minimized over all product
/// bases by multi-start simplex descent. Deterministic given `opt.seed`.
/// Non-converged starts are dropped from the reduction whenever at least
/// one start converges; `starts_converged` exposes the count.
pub fn minimize_gqd(
    rho: &DensityMatrix,
    opt: &OptimizationConfig,
) -> Result<CorrelationReport, MeasuresError> {
    opt.validate()?;
    let ctx = GqdContext::new(rho)?;
    let f = |x: &[f64]| ctx.objective(x);
    let results = multistart(&f, rho.n_sites(), opt);
    Ok(finalize(&results, &f))
}

/// GQD of the reduced state on the (distinct, 1-based) pair of sites.
pub fn bipartite_gqd(
    rho: &DensityMatrix,
    sites: (usize, usize),
    opt: &OptimizationConfig,
) -> Result<CorrelationReport, MeasuresError> {
    if sites.0 == sites.1 {
        return Err(MeasuresError::BadBipartition(format!(
            "pair sites must be distinct, got ({}, {})",
            sites.0, sites.1
        )));
    }
    let reduced = partial_trace(rho, &[sites.0, sites.1])?;
    minimize_gqd(&reduced, opt)
}

/// The four GQD minimizations a three-site analysis needs, computed once.
#[derive(Debug, Clone)]
pub struct DiscordBreakdown {
    pub g123: CorrelationReport,
    pub g12: CorrelationReport,
    pub g13: CorrelationReport,
    pub g23: CorrelationReport,
}

impl DiscordBreakdown {
    /// GQD_123 - GQD_12 - GQD_13 - GQD_23; genuinely signed, never clamped.
    pub fn mgqd(&self) -> f64 {
        self.g123.value - self.g12.value - self.g13.value - self.g23.value
    }

    /// Residual monogamy differences (left side minus bound):
    /// d_r1 subtracts the pairs containing site 1, d_r2 those containing
    /// site 2, d_r3 subtracts 2/3 of the full pairwise sum.
    pub fn residuals(&self) -> (f64, f64, f64) {
        let (g123, g12, g13, g23) = (
            self.g123.value,
            self.g12.value,
            self.g13.value,
            self.g23.value,
        );
        (
            g123 - g12 - g13,
            g123 - g12 - g23,
            g123 - 2.0 / 3.0 * (g12 + g23 + g13),
        )
    }
}

pub fn discord_breakdown(
    rho: &DensityMatrix,
    opt: &OptimizationConfig,
) -> Result<DiscordBreakdown, MeasuresError> {
    if rho.n_sites() != 3 {
        return Err(MeasuresError::NotThreeSites {
            n_sites: rho.n_sites(),
        });
    }
    Ok(DiscordBreakdown {
        g123: minimize_gqd(rho, opt)?,
        g12: bipartite_gqd(rho, (1, 2), opt)?,
        g13: bipartite_gqd(rho, (1, 3), opt)?,
        g23: bipartite_gqd(rho, (2, 3), opt)?,
    })
}

/// Multipartite GQD of a three-site state; may be negative.
pub fn mgqd(rho: &DensityMatrix, opt: &OptimizationConfig) -> Result<f64, MeasuresError> {
    Ok(discord_breakdown(rho, opt)?.mgqd())
}

/// (d_r1, d_r2, d_r3) of a three-site state; see [`DiscordBreakdown::residuals`].
pub fn residual_discords(
    rho: &DensityMatrix,
    opt: &OptimizationConfig,
) -> Result<(f64, f64, f64), MeasuresError> {
    Ok(discord_breakdown(rho, opt)?.residuals())
}

/// Closed-form discord of the two-qubit Bell-diagonal state with
/// correlation triple (c1, c2, c3): 2 - H4(Bell weights) - C(max |c_i|),
/// where C(c) = [(1-c) log2(1-c) + (1+c) log2(1+c)] / 2. Used as an
/// independent oracle for [`qd_asymmetric`].
pub fn bell_diagonal_qd_oracle(c1: f64, c2: f64, c3: f64) -> Result<f64, MeasuresError> {
    let weights = [
        0.25 * (1.0 + c1 - c2 + c3),
        0.25 * (1.0 - c1 + c2 + c3),
        0.25 * (1.0 + c1 + c2 - c3),
        0.25 * (1.0 - c1 - c2 - c3),
    ];
    for &w in &weights {
        if w < -1e-12 {
            return Err(MeasuresError::InvalidBellTriple { weight: w });
        }
    }
    let clamped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let h4 = shannon_entropy(&clamped);
    let c = c1.abs().max(c2.abs()).max(c3.abs());
    let classical = 0.5 * (xlog2(1.0 - c) + xlog2(1.0 + c));
    Ok((2.0 - h4 - classical).max(0.0))
}

fn xlog2(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

fn bloch_plus(theta: f64, phi: f64) -> DVector<Complex64> {
    let (s, c) = (0.5 * theta).sin_cos();
    DVector::from_column_slice(&[Complex64::new(c, 0.0), Complex64::from_polar(s, phi)])
}

fn bloch_minus(theta: f64, phi: f64) -> DVector<Complex64> {
    let (s, c) = (0.5 * theta).sin_cos();
    DVector::from_column_slice(&[Complex64::new(s, 0.0), -Complex64::from_polar(c, phi)])
}

fn site_unitary(theta: f64, phi: f64) -> OperatorMatrix {
    OperatorMatrix::from_columns(&[bloch_plus(theta, phi), bloch_minus(theta, phi)])
}

fn product_unitary_from_flat(flat: &[f64]) -> OperatorMatrix {
    debug_assert!(flat.len() >= 2 && flat.len() % 2 == 0);
    let mut u = site_unitary(flat[0], flat[1]);
    for j in 1..flat.len() / 2 {
        u = tensor_product(&u, &site_unitary(flat[2 * j], flat[2 * j + 1]));
    }
    u
}

fn quad_form(m: &OperatorMatrix, v: &DVector<Complex64>) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

struct GqdContext {
    rho: OperatorMatrix,
    s_rho: f64,
    /// Per-site marginal and its entropy, both angle-independent.
    marginals: Vec<(OperatorMatrix, f64)>,
}

impl GqdContext {
    fn new(rho: &DensityMatrix) -> Result<Self, MeasuresError> {
        let marginals = (1..=rho.n_sites())
            .map(|site| {
                let m = partial_trace(rho, &[site])?;
                let s = von_neumann_entropy(&m);
                Ok((m.into_matrix(), s))
            })
            .collect::<Result<Vec<_>, QmatError>>()?;
        Ok(Self {
            rho: rho.matrix().clone(),
            s_rho: von_neumann_entropy(rho),
            marginals,
        })
    }

    fn objective(&self, flat: &[f64]) -> f64 {
        let u = product_unitary_from_flat(flat);
        let rotated = u.adjoint() * &self.rho * &u;
        let probs: Vec<f64> = (0..rotated.nrows()).map(|i| rotated[(i, i)].re).collect();
        let mut value = shannon_entropy(&probs) - self.s_rho;
        for (j, (marginal, s_j)) in self.marginals.iter().enumerate() {
            let (theta, phi) = (flat[2 * j], flat[2 * j + 1]);
            let q = [
                quad_form(marginal, &bloch_plus(theta, phi)),
                quad_form(marginal, &bloch_minus(theta, phi)),
            ];
            value -= shannon_entropy(&q) - s_j;
        }
        value
    }
}

struct QdContext {
    rho: OperatorMatrix,
    mutual: f64,
    s_unmeasured: f64,
    measured_first: bool,
}

impl QdContext {
    /// mutual - S(rho_unmeasured) + sum_k p_k S(rho_unmeasured | outcome k);
    /// minimizing this over (theta, phi) yields the discord.
    fn objective(&self, angles: &[f64]) -> f64 {
        let (theta, phi) = (angles[0], angles[1]);
        let mut conditional = 0.0;
        for v in [bloch_plus(theta, phi), bloch_minus(theta, phi)] {
            let mut block = OperatorMatrix::zeros(2, 2);
            for a in 0..2 {
                for b in 0..2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in 0..2 {
                        for mp in 0..2 {
                            let (row, col) = if self.measured_first {
                                (2 * m + a, 2 * mp + b)
                            } else {
                                (2 * a + m, 2 * b + mp)
                            };
                            acc += v[m].conj() * self.rho[(row, col)] * v[mp];
                        }
                    }
                    block[(a, b)] = acc;
                }
            }
            let p = (block[(0, 0)] + block[(1, 1)]).re;
            if p < 1e-12 {
                continue;
            }
            conditional += p * two_level_entropy(&block, p);
        }
        self.mutual - self.s_unmeasured + conditional
    }
}

fn two_level_entropy(block: &OperatorMatrix, trace: f64) -> f64 {
    let d0 = block[(0, 0)].re / trace;
    let d1 = block[(1, 1)].re / trace;
    let off = block[(0, 1)].norm() / trace;
    let mid = 0.5 * (d0 + d1);
    let radius = (0.25 * (d0 - d1).powi(2) + off * off).sqrt();
    shannon_entropy(&[mid + radius, mid - radius])
}

/// Canonical z/x/y starts followed by jittered grid draws, then one
/// simplex descent per start in parallel. Output order equals start order.
fn multistart<F: Fn(&[f64]) -> f64 + Sync>(
    f: &F,
    n_sites: usize,
    opt: &OptimizationConfig,
) -> Vec<SimplexResult> {
    let starts = seed_starts(n_sites, opt);
    let sopts = SimplexOptions {
        f_tol: opt.f_tol,
        max_iterations: opt.max_iterations,
        initial_step: 0.35,
    };
    starts
        .par_iter()
        .map(|x0| minimize_simplex(|x| f(x), x0, &sopts))
        .collect()
}

fn seed_starts(n_sites: usize, opt: &OptimizationConfig) -> Vec<Vec<f64>> {
    let canonical = [(0.0, 0.0), (FRAC_PI_2, 0.0), (FRAC_PI_2, FRAC_PI_2)];
    let mut starts: Vec<Vec<f64>> = canonical
        .iter()
        .take(opt.n_starts)
        .map(|&(t, p)| {
            (0..n_sites).flat_map(|_| [t, p]).collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    let g = opt.grid_resolution;
    while starts.len() < opt.n_starts {
        let mut x = Vec::with_capacity(2 * n_sites);
        for _ in 0..n_sites {
            let cell_t = rng.gen_range(0..g) as f64;
            let cell_p = rng.gen_range(0..g) as f64;
            let jitter_t: f64 = rng.gen_range(-0.4..0.4);
            let jitter_p: f64 = rng.gen_range(-0.4..0.4);
            x.push((cell_t + 0.5 + jitter_t) * PI / g as f64);
            x.push((cell_p + 0.5 + jitter_p) * 2.0 * PI / g as f64);
        }
        starts.push(x);
    }
    starts
}

fn finalize<F: Fn(&[f64]) -> f64>(results: &[SimplexResult], f: &F) -> CorrelationReport {
    let any_converged = results.iter().any(|r| r.converged);
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        if any_converged && !r.converged {
            continue;
        }
        if best.map_or(true, |(_, v)| r.value < v) {
            best = Some((i, r.value));
        }
    }
    let (best_idx, best_value) = best.expect("at least one optimization start");
    let optimal_basis = MeasurementBasis::from_flat(&results[best_idx].x).normalized();
    // Re-evaluate at the normalized angles so the reported value matches
    // the reported basis exactly, not just up to the normalization's
    // floating-point noise.
    let raw = f(&optimal_basis.flat());
    assert!(
        raw >= -1e-7,
        "correlation optimum {raw} fell below -1e-7; entropy arithmetic is broken"
    );
    CorrelationReport {
        value: raw.max(0.0),
        optimal_basis,
        starts_agreeing: results
            .iter()
            .filter(|r| (r.value - best_value).abs() <= 1e-5)
            .count(),
        starts_converged: results.iter().filter(|r| r.converged).count(),
    }
}
