//! Polariton-chain Hamiltonian and Davies dissipation channels.
//!
//! Each cavity-atom pair is truncated to an effective two-level polariton
//! site (double occupancy is blocked), giving the chain Hamiltonian
//!
//! H = sum_i (omega_i - g_i) |E><E|_i
//!   + sum_i (J_i / 2) (L_i^+ L_{i+1}^- + L_i^- L_{i+1}^+)
//!
//! on an open chain. Cavity photon loss acts through the per-site lowering
//! operator L^-; decomposing it into eigenoperators of H yields one jump
//! operator per (site, Bohr frequency) pair, the zero-temperature Davies
//! channels.
//!
//! Unit convention: all operator-level quantities (Hamiltonian entries,
//! Bohr frequencies, channel rates) are expressed in units of
//! `gamma_scale`, the time-scaling constant of the trajectory plots.
//! Keeping the matrices O(1)-conditioned this way is what lets the
//! eigenoperator and traceless checks hold at the advertised absolute
//! tolerances in double precision; multiply by `gamma_scale` to recover
//! rad/s or 1/s.

use crate::qmat::{hermiticity_deviation, hermitian_eig, OperatorMatrix};
use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Default polariton transition (omega - g): 51.1 GHz expressed in rad/s.
pub const DEFAULT_TRANSITION: f64 = 2.0 * PI * 51.1e9;
/// Default atom-cavity coupling: a pi pulse over a 1 us interaction time.
pub const DEFAULT_COUPLING: f64 = PI * 1e6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("network needs at least two sites, got {0}")]
    TooFewSites(usize),
    #[error("per-site parameter `{name}` has {got} entries, expected {expected}")]
    BadParameterLength {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("hopping strengths must be non-negative, got {0}")]
    NegativeHopping(f64),
    #[error("site index {site} is out of range for {n_sites} sites")]
    InvalidSite { site: usize, n_sites: usize },
    #[error("Hamiltonian dimension {dim} does not match {n_sites} sites")]
    DimensionMismatch { dim: usize, n_sites: usize },
    #[error("Hamiltonian is not Hermitian: deviation {0:.3e}")]
    NotHermitian(f64),
    #[error("rate function returned {rate} at frequency {frequency}")]
    NegativeRate { rate: f64, frequency: f64 },
    #[error(
        "Bohr-frequency grouping is ambiguous for site {site}: {tight} groups at \
         the base tolerance vs {loose} at ten times it"
    )]
    GroupingAmbiguity {
        site: usize,
        tight: usize,
        loose: usize,
    },
}

/// Physical parameters of the cavity network, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub n_sites: usize,
    /// Per-site cavity frequency, rad/s.
    pub omega: Vec<f64>,
    /// Per-site atom-cavity coupling, rad/s.
    pub g: Vec<f64>,
    /// Per-link hopping strength (open chain: `n_sites - 1` links), rad/s.
    pub j: Vec<f64>,
    /// Cavity photon lifetime, s.
    pub t_cav: f64,
    /// Time-scaling constant for dimensionless trajectories, 1/s.
    pub gamma_scale: f64,
    /// Fraction of the bare cavity decay rate carried by the polariton
    /// |E> level (its photonic weight); 1/2 for the symmetric dressed state.
    pub rate_factor: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self::uniform_chain(3, DEFAULT_COUPLING, 1e-2, 1e-3)
    }
}

impl NetworkParams {
    /// Uniform open chain: every site at the default transition frequency
    /// with coupling `g`, every link at `j_over_g * g`.
    pub fn uniform_chain(n_sites: usize, g: f64, j_over_g: f64, t_cav: f64) -> Self {
        Self {
            n_sites,
            omega: vec![DEFAULT_TRANSITION + g; n_sites],
            g: vec![g; n_sites],
            j: vec![j_over_g * g; n_sites.saturating_sub(1)],
            t_cav,
            gamma_scale: 1e5,
            rate_factor: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_sites < 2 {
            return Err(ModelError::TooFewSites(self.n_sites));
        }
        for (name, len, expected) in [
            ("omega", self.omega.len(), self.n_sites),
            ("g", self.g.len(), self.n_sites),
            ("j", self.j.len(), self.n_sites - 1),
        ] {
            if len != expected {
                return Err(ModelError::BadParameterLength {
                    name,
                    got: len,
                    expected,
                });
            }
        }
        for &j in &self.j {
            if j < 0.0 {
                return Err(ModelError::NegativeHopping(j));
            }
        }
        for (name, value) in [("t_cav", self.t_cav), ("gamma_scale", self.gamma_scale)] {
            if value <= 0.0 {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// Excitation energy omega_i - g_i of site `site` (1-based), rad/s.
    pub fn detuning(&self, site: usize) -> f64 {
        self.omega[site - 1] - self.g[site - 1]
    }

    /// Bare cavity decay rate 1/t_cav, 1/s.
    pub fn gamma_cav(&self) -> f64 {
        1.0 / self.t_cav
    }

    /// Flat channel rate in gamma_scale units: rate_factor / (t_cav * gamma_scale).
    pub fn flat_rate(&self) -> f64 {
        self.rate_factor * self.gamma_cav() / self.gamma_scale
    }

    /// Frequency-independent spectral density (zero-temperature default).
    pub fn flat_rate_fn(&self) -> impl Fn(f64) -> f64 + Clone {
        let rate = self.flat_rate();
        move |_bohr_frequency| rate
    }
}

/// One zero-temperature dissipation channel.
///
/// `bohr_frequency` and `rate` are in units of `gamma_scale` (like every
/// operator-level quantity in this module).
#[derive(Debug, Clone)]
pub struct DaviesChannel {
    /// Site whose lowering operator sources this channel (1-based).
    pub site: usize,
    /// Transition frequency, > 0.
    pub bohr_frequency: f64,
    /// Channel decay rate, >= 0.
    pub rate: f64,
    pub jump_operator: OperatorMatrix,
}

/// Raising, lowering, and excited-state projector for one site, embedded in
/// the full register.
///
/// In the per-site (E, G) basis ordering, `lower` = |G><E| has its only
/// nonzero entry in the G row, E column; `raise` is its adjoint.
pub fn polariton_ops(
    site: usize,
    n_sites: usize,
) -> Result<(OperatorMatrix, OperatorMatrix, OperatorMatrix), ModelError> {
    if site == 0 || site > n_sites {
        return Err(ModelError::InvalidSite { site, n_sites });
    }
    let lower = lowering_operator(site, n_sites);
    let raise = lower.adjoint();
    let projector = &raise * &lower;
    Ok((raise, lower, projector))
}

/// Total excitation number operator (diagonal, integer entries).
pub fn excitation_number(n_sites: usize) -> OperatorMatrix {
    let dim = 1usize << n_sites;
    OperatorMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|idx| Complex64::new(excitations_of_index(idx, n_sites) as f64, 0.0)),
    ))
}

/// Chain Hamiltonian in units of `gamma_scale`.
pub fn build_hamiltonian(p: &NetworkParams) -> Result<OperatorMatrix, ModelError> {
    p.validate()?;
    let dim = p.dim();
    let mut h = OperatorMatrix::zeros(dim, dim);
    for site in 1..=p.n_sites {
        let (_, _, projector) = polariton_ops(site, p.n_sites)?;
        h += projector.scale(p.detuning(site) / p.gamma_scale);
    }
    for link in 0..p.n_sites - 1 {
        let (raise_l, lower_l, _) = polariton_ops(link + 1, p.n_sites)?;
        let (raise_r, lower_r, _) = polariton_ops(link + 2, p.n_sites)?;
        let hop = &raise_l * &lower_r + &lower_l * &raise_r;
        h += hop.scale(0.5 * p.j[link] / p.gamma_scale);
    }
    Ok(h)
}

/// Decomposes every site's lowering operator into jump operators attached
/// to positive Bohr frequencies of `h`.
///
/// When `h` conserves excitation number (always true for [`build_hamiltonian`]
/// output), the eigenproblem is solved sector by sector on a copy of `h`
/// shifted by a multiple of the number operator. The shift is a product of
/// single-site phase rotations, so it cancels from every jump operator and
/// only re-enters as the additive offset of the reported Bohr frequencies;
/// working with the O(1) shifted matrix keeps the eigenoperator identity
/// [h, A] = -omega A accurate to absolute tolerances that the raw,
/// detuning-dominated matrix could not meet in double precision.
pub fn davies_channels(
    h: &OperatorMatrix,
    p: &NetworkParams,
    rate_fn: impl Fn(f64) -> f64,
) -> Result<Vec<DaviesChannel>, ModelError> {
    p.validate()?;
    if h.nrows() != p.dim() || h.ncols() != p.dim() {
        return Err(ModelError::DimensionMismatch {
            dim: h.nrows(),
            n_sites: p.n_sites,
        });
    }
    let herm = hermiticity_deviation(h);
    if herm > 1e-9 {
        return Err(ModelError::NotHermitian(herm));
    }

    let eigen = if conserves_excitation(h, p.n_sites) {
        sector_eigenpairs(h, p.n_sites)
    } else {
        full_eigenpairs(h, p.n_sites)
    };

    let gap_scale = eigen
        .pairs
        .iter()
        .map(|e| e.energy.abs())
        .fold(1.0, f64::max);
    let delta_omega = 1e-9 * gap_scale;

    let mut channels = Vec::new();
    for site in 1..=p.n_sites {
        let lower = lowering_operator(site, p.n_sites);
        // Transition amplitudes <alpha| L^- |beta> over eigenpairs; the
        // lowering operator only connects beta to alpha one excitation below.
        let mut transitions: Vec<(f64, usize, usize)> = Vec::new();
        for (ai, a) in eigen.pairs.iter().enumerate() {
            for (bi, b) in eigen.pairs.iter().enumerate() {
                if b.excitations != a.excitations + 1 {
                    continue;
                }
                let amp = (a.vector.adjoint() * &lower * &b.vector)[(0, 0)];
                if amp.norm() > 1e-12 {
                    transitions.push((b.energy - a.energy, ai, bi));
                }
            }
        }
        transitions.sort_by(|x, y| (x.0, x.1, x.2).partial_cmp(&(y.0, y.1, y.2)).unwrap());

        let tight = group_by_gap(&transitions, delta_omega);
        let loose = group_by_gap(&transitions, 10.0 * delta_omega);
        if tight.len() != loose.len() {
            return Err(ModelError::GroupingAmbiguity {
                site,
                tight: tight.len(),
                loose: loose.len(),
            });
        }

        for group in tight {
            let gap = group
                .iter()
                .map(|&(g, _, _)| g)
                .sum::<f64>()
                / group.len() as f64;
            let bohr_frequency = gap + eigen.frame_shift;
            if bohr_frequency <= 0.0 {
                continue;
            }
            let rate = rate_fn(bohr_frequency);
            if rate < 0.0 {
                return Err(ModelError::NegativeRate {
                    rate,
                    frequency: bohr_frequency,
                });
            }
            let mut jump = OperatorMatrix::zeros(p.dim(), p.dim());
            for &(_, ai, bi) in &group {
                let a = &eigen.pairs[ai];
                let b = &eigen.pairs[bi];
                let amp = (a.vector.adjoint() * &lower * &b.vector)[(0, 0)];
                jump += (&a.vector * b.vector.adjoint()).scale_complex(amp);
            }
            channels.push(DaviesChannel {
                site,
                bohr_frequency,
                rate,
                jump_operator: jump,
            });
        }
    }
    channels.sort_by(|a, b| {
        (a.site, a.bohr_frequency)
            .partial_cmp(&(b.site, b.bohr_frequency))
            .unwrap()
    });
    Ok(channels)
}

/// Lowering operator |G><E| of `site`, identity on the other sites.
pub(crate) fn lowering_operator(site: usize, n_sites: usize) -> OperatorMatrix {
    let dim = 1usize << n_sites;
    let mask = 1usize << (n_sites - site);
    let mut op = OperatorMatrix::zeros(dim, dim);
    for idx in 0..dim {
        if idx & mask == 0 {
            op[(idx | mask, idx)] = Complex64::new(1.0, 0.0);
        }
    }
    op
}

/// Number of excited sites (E bits) in a basis index.
pub(crate) fn excitations_of_index(idx: usize, n_sites: usize) -> usize {
    n_sites - idx.count_ones() as usize
}

/// Smallest single-site excitation energy read off the diagonal; used as
/// the rotating-frame shift per unit excitation.
pub(crate) fn default_frame_shift(h: &OperatorMatrix, n_sites: usize) -> f64 {
    let dim = 1usize << n_sites;
    let ground = dim - 1;
    (1..=n_sites)
        .map(|site| {
            let idx = ground ^ (1usize << (n_sites - site));
            h[(idx, idx)].re - h[(ground, ground)].re
        })
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn conserves_excitation(h: &OperatorMatrix, n_sites: usize) -> bool {
    let dim = 1usize << n_sites;
    for i in 0..dim {
        for j in 0..dim {
            if excitations_of_index(i, n_sites) != excitations_of_index(j, n_sites)
                && h[(i, j)].norm() > 1e-12
            {
                return false;
            }
        }
    }
    true
}

struct EigenPair {
    energy: f64,
    excitations: usize,
    vector: DVector<Complex64>,
}

struct EigenSystem {
    pairs: Vec<EigenPair>,
    /// Energy per excitation subtracted before decomposition; add back
    /// (once per excitation-number step) to recover physical gaps.
    frame_shift: f64,
}

fn sector_eigenpairs(h: &OperatorMatrix, n_sites: usize) -> EigenSystem {
    let dim = 1usize << n_sites;
    let shift = default_frame_shift(h, n_sites);
    let mut pairs = Vec::with_capacity(dim);
    for m in 0..=n_sites {
        let indices: Vec<usize> = (0..dim)
            .filter(|&idx| excitations_of_index(idx, n_sites) == m)
            .collect();
        let block = OperatorMatrix::from_fn(indices.len(), indices.len(), |r, c| {
            let mut entry = h[(indices[r], indices[c])];
            if r == c {
                entry -= Complex64::new(shift * m as f64, 0.0);
            }
            entry
        });
        let spec = hermitian_eig(&block).expect("sector block of a Hermitian matrix");
        for k in 0..indices.len() {
            let mut vector = DVector::zeros(dim);
            for (r, &idx) in indices.iter().enumerate() {
                vector[idx] = spec.eigenvectors[(r, k)];
            }
            pairs.push(EigenPair {
                energy: spec.eigenvalues[k],
                excitations: m,
                vector,
            });
        }
    }
    EigenSystem {
        pairs,
        frame_shift: shift,
    }
}

fn full_eigenpairs(h: &OperatorMatrix, n_sites: usize) -> EigenSystem {
    let dim = 1usize << n_sites;
    let number = excitation_number(n_sites);
    let spec = hermitian_eig(h).expect("Hermiticity checked by caller");
    let pairs = (0..dim)
        .map(|k| {
            let vector: DVector<Complex64> = spec.eigenvectors.column(k).into_owned();
            // Excitation label only used to prune transition pairs; for a
            // non-conserving Hamiltonian every eigenvector still carries a
            // rounded mean occupation.
            let occupation = (vector.adjoint() * &number * &vector)[(0, 0)].re;
            EigenPair {
                energy: spec.eigenvalues[k],
                excitations: occupation.round() as usize,
                vector,
            }
        })
        .collect();
    EigenSystem {
        pairs,
        frame_shift: 0.0,
    }
}

/// Clusters gap-sorted transitions; a transition joins the current group
/// while its gap stays within `delta` of the group's first gap.
fn group_by_gap(
    transitions: &[(f64, usize, usize)],
    delta: f64,
) -> Vec<Vec<(f64, usize, usize)>> {
    let mut groups: Vec<Vec<(f64, usize, usize)>> = Vec::new();
    for &t in transitions {
        match groups.last_mut() {
            Some(group) if (t.0 - group[0].0).abs() <= delta => group.push(t),
            _ => groups.push(vec![t]),
        }
    }
    groups
}

trait ScaleComplex {
    fn scale_complex(self, factor: Complex64) -> Self;
}

impl ScaleComplex for OperatorMatrix {
    fn scale_complex(mut self, factor: Complex64) -> Self {
        for entry in self.iter_mut() {
            *entry *= factor;
        }
        self
    }
}
