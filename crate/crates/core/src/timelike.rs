//! Time-separated correlation diagnostics.
//!
//! For single-site regions A (Alice) and B (Bob) and an orthonormal Hermitian
//! operator basis on each, the correlator matrix is
//! `C_ab(t; rho) = Tr[rho O_{A,a}(t) O_{B,b}(0)]`. The second moment of the
//! spacetime density matrix follows from it without materializing that
//! matrix: `Tr T^2 = sum C_ab^2` (complex in general) and
//! `Tr T T^dagger = sum |C_ab|^2`.

use std::fmt;
use std::str::FromStr;

use faer::c64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{evolve_state, CMatrix, CVector, Spectrum, ZERO};
use crate::model::{apply_site_pauli, pauli_string, ChainSpec, GroundState, Pauli};
use crate::protocol::{BranchEnsemble, ProtocolTrace};

/// Values closer than this are one plateau when locating extrema.
pub const PLATEAU_TOL: f64 = 1e-12;

pub type Correlator = [[c64; 4]; 4];

/// Orthonormal Hermitian basis on one site, embedded in the chain.
///
/// Element `mu` is `sum_k mixing[mu][k] P_k / sqrt(2)` with `P = (I, X, Y, Z)`;
/// `mixing` is real orthogonal, so restricted to the site
/// `Tr(o_mu o_nu) = delta_mu_nu`.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    pub n_sites: usize,
    pub site: usize,
    pub mixing: [[f64; 4]; 4],
    pub elements: [CMatrix; 4],
}

const IDENTITY4: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

/// The normalized Pauli basis `{I, X, Y, Z} / sqrt(2)` on `site`.
pub fn site_basis(n_sites: usize, site: usize) -> Result<OperatorBasis> {
    OperatorBasis::with_mixing(n_sites, site, IDENTITY4)
}

impl OperatorBasis {
    pub fn with_mixing(n_sites: usize, site: usize, mixing: [[f64; 4]; 4]) -> Result<Self> {
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = (0..4).map(|k| mixing[a][k] * mixing[b][k]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-12 {
                    return Err(Error::invalid("mixing", "basis mixing matrix is not orthogonal"));
                }
            }
        }
        let paulis = Pauli::ALL
            .iter()
            .map(|&p| pauli_string(n_sites, &[(site, p)]))
            .collect::<Result<Vec<_>>>()?;
        let norm = std::f64::consts::FRAC_1_SQRT_2;
        let element = |mu: usize| {
            let mut m = CMatrix::zeros(1 << n_sites);
            for (k, p) in paulis.iter().enumerate() {
                if mixing[mu][k] != 0.0 {
                    m = &m + &p.scale_real(norm * mixing[mu][k]);
                }
            }
            m
        };
        Ok(Self {
            n_sites,
            site,
            mixing,
            elements: [element(0), element(1), element(2), element(3)],
        })
    }

    /// Hilbert-Schmidt Gram matrix of the elements restricted to their site.
    pub fn restricted_gram(&self) -> [[c64; 4]; 4] {
        let rest = (1usize << (self.n_sites - 1)) as f64;
        let mut g = [[ZERO; 4]; 4];
        for (a, row) in g.iter_mut().enumerate() {
            for (b, z) in row.iter_mut().enumerate() {
                *z = self.elements[a].trace_product(&self.elements[b]) / rest;
            }
        }
        g
    }
}

/// Initial state whose correlations are measured.
#[derive(Clone, Copy, Debug)]
pub enum StateSource<'a> {
    /// `rho_0 = |g><g|`.
    Ground(&'a GroundState),
    /// `rho_A = sum_b |v_b><v_b|`.
    Branches(&'a BranchEnsemble),
}

impl<'a> StateSource<'a> {
    fn vectors(&self) -> Vec<&'a CVector> {
        match *self {
            StateSource::Ground(g) => vec![&g.vector],
            StateSource::Branches(e) => e.vectors.iter().collect(),
        }
    }
}

/// `C_ab(t) = Tr[rho O_{A,a}(t) O_{B,b}]`, evaluated state by state as
/// `<U psi| O_{A,a} |U O_{B,b} psi>`.
pub fn correlator_matrix(
    source: StateSource<'_>,
    s: &Spectrum,
    basis_a: &OperatorBasis,
    basis_b: &OperatorBasis,
    t: f64,
) -> Correlator {
    let mut c = [[ZERO; 4]; 4];
    for psi in source.vectors() {
        let phi = evolve_state(s, psi, t);
        let lefts: Vec<CVector> = basis_a.elements.iter().map(|o| o.apply(&phi)).collect();
        for b in 0..4 {
            let chi = evolve_state(s, &basis_b.elements[b].apply(psi), t);
            for a in 0..4 {
                c[a][b] += lefts[a].inner(&chi);
            }
        }
    }
    c
}

/// `Tr T^2 = sum_ab C_ab^2` (no conjugation).
pub fn tr_t2(c: &Correlator) -> c64 {
    c.iter().flatten().map(|z| z * z).sum()
}

/// `Tr T T^dagger = sum_ab |C_ab|^2`.
pub fn tr_ttdag(c: &Correlator) -> f64 {
    c.iter().flatten().map(|z| z.norm_sqr()).sum()
}

/// `R_A C R_B^T`: the correlator in rotated bases.
pub fn rotate_correlator(c: &Correlator, mix_a: &[[f64; 4]; 4], mix_b: &[[f64; 4]; 4]) -> Correlator {
    let mut out = [[ZERO; 4]; 4];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, z) in row.iter_mut().enumerate() {
            for k in 0..4 {
                for l in 0..4 {
                    *z += c[k][l] * (mix_a[a][k] * mix_b[b][l]);
                }
            }
        }
    }
    out
}

/// Per-time correlator matrices and second moments for `rho_A` and `rho_0`.
#[derive(Clone, Debug)]
pub struct CorrelatorSeries {
    pub times: Vec<f64>,
    pub c_rho_a: Vec<Correlator>,
    pub c_rho_0: Vec<Correlator>,
    pub tr_t2_rho_a: Vec<c64>,
    pub tr_t2_rho_0: Vec<c64>,
    pub tr_ttdag_rho_a: Vec<f64>,
    pub tr_ttdag_rho_0: Vec<f64>,
    /// `Tr T^2(t; rho_A) - Tr T^2(t; rho_0)`.
    pub delta_tr_t2: Vec<c64>,
}

impl CorrelatorSeries {
    pub fn delta_scalarized(&self, kind: Scalarization) -> Vec<f64> {
        self.delta_tr_t2.iter().map(|&z| kind.apply(z)).collect()
    }
}

// Eigenbasis coefficients of psi and of P_k psi for every Pauli on Bob's site.
struct PreparedState {
    psi: CVector,
    bob_applied: [CVector; 4],
}

struct SeriesEngine<'a> {
    s: &'a Spectrum,
    n_sites: usize,
    site_a: usize,
}

impl SeriesEngine<'_> {
    fn prepare(&self, psi: &CVector, site_b: usize) -> PreparedState {
        let norm = std::f64::consts::FRAC_1_SQRT_2;
        let bob = |p: Pauli| {
            let applied = apply_site_pauli(psi, self.n_sites, site_b, p);
            self.s.to_eigenbasis(&applied.scale(c64::new(norm, 0.0)))
        };
        PreparedState {
            psi: self.s.to_eigenbasis(psi),
            bob_applied: [bob(Pauli::I), bob(Pauli::X), bob(Pauli::Y), bob(Pauli::Z)],
        }
    }

    fn correlator(&self, states: &[PreparedState], t: f64) -> Correlator {
        let norm = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut c = [[ZERO; 4]; 4];
        for st in states {
            let phi = self.s.from_eigenbasis(&self.s.evolve_coefficients(&st.psi, t));
            let lefts: Vec<CVector> = Pauli::ALL
                .iter()
                .map(|&p| apply_site_pauli(&phi, self.n_sites, self.site_a, p).scale(norm))
                .collect();
            for (b, coeffs) in st.bob_applied.iter().enumerate() {
                let chi = self.s.from_eigenbasis(&self.s.evolve_coefficients(coeffs, t));
                for a in 0..4 {
                    c[a][b] += lefts[a].inner(&chi);
                }
            }
        }
        c
    }
}

/// Correlator series for `rho_A` and `rho_0` on the spec's time grid, in the
/// normalized Pauli bases of Alice's and Bob's sites.
pub fn run_series(
    spec: &ChainSpec,
    gs: &GroundState,
    ensemble: &BranchEnsemble,
    s: &Spectrum,
) -> Result<CorrelatorSeries> {
    spec.validate()?;
    if s.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: s.dim(),
        });
    }
    let engine = SeriesEngine {
        s,
        n_sites: spec.n_sites,
        site_a: spec.site_a,
    };
    let ground = [engine.prepare(&gs.vector, spec.site_b)];
    let branches: Vec<_> = ensemble
        .vectors
        .iter()
        .map(|v| engine.prepare(v, spec.site_b))
        .collect();

    let times = spec.times();
    let pairs: Vec<(Correlator, Correlator)> = times
        .par_iter()
        .map(|&t| (engine.correlator(&branches, t), engine.correlator(&ground, t)))
        .collect();
    let (c_rho_a, c_rho_0): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();

    let tr_t2_rho_a: Vec<c64> = c_rho_a.iter().map(tr_t2).collect();
    let tr_t2_rho_0: Vec<c64> = c_rho_0.iter().map(tr_t2).collect();
    let delta_tr_t2 = tr_t2_rho_a
        .iter()
        .zip(&tr_t2_rho_0)
        .map(|(a, b)| a - b)
        .collect();
    Ok(CorrelatorSeries {
        tr_ttdag_rho_a: c_rho_a.iter().map(tr_ttdag).collect(),
        tr_ttdag_rho_0: c_rho_0.iter().map(tr_ttdag).collect(),
        times,
        c_rho_a,
        c_rho_0,
        tr_t2_rho_a,
        tr_t2_rho_0,
        delta_tr_t2,
    })
}

/// Real functional of a complex diagnostic used for extremum finding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scalarization {
    #[default]
    Modulus,
    Real,
    Imag,
}

impl Scalarization {
    pub fn apply(self, z: c64) -> f64 {
        match self {
            Scalarization::Modulus => z.norm(),
            Scalarization::Real => z.re,
            Scalarization::Imag => z.im,
        }
    }
}

impl fmt::Display for Scalarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scalarization::Modulus => "abs",
            Scalarization::Real => "re",
            Scalarization::Imag => "im",
        })
    }
}

impl FromStr for Scalarization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "abs" | "modulus" => Ok(Scalarization::Modulus),
            "re" | "real" => Ok(Scalarization::Real),
            "im" | "imag" => Ok(Scalarization::Imag),
            other => Err(format!("unknown scalarization {other:?} (expected abs, re or im)")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Extremum {
    Min,
    Max,
}

// Interior extrema by three-point comparison; a plateau yields its midpoint
// and plateaus touching either end of the series are dropped.
fn extrema(series: &[f64], dt: f64, wanted: &[Extremum]) -> Vec<f64> {
    let n = series.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && (series[end + 1] - series[end]).abs() <= PLATEAU_TOL {
            end += 1;
        }
        if start > 0 && end + 1 < n {
            let (left, right, v) = (series[start - 1], series[end + 1], series[start]);
            let kind = if v < left && v < right {
                Some(Extremum::Min)
            } else if v > left && v > right {
                Some(Extremum::Max)
            } else {
                None
            };
            if kind.is_some_and(|k| wanted.contains(&k)) {
                out.push(0.5 * (start + end) as f64 * dt);
            }
        }
        start = end + 1;
    }
    out
}

/// Times of interior local extrema (minima and maxima) of a uniformly sampled series.
pub fn critical_points(series: &[f64], dt: f64) -> Vec<f64> {
    extrema(series, dt, &[Extremum::Min, Extremum::Max])
}

/// Times of interior local minima.
pub fn local_minima(series: &[f64], dt: f64) -> Vec<f64> {
    extrema(series, dt, &[Extremum::Min])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncPair {
    pub t_min: f64,
    pub t_critical: f64,
    pub gap: f64,
}

/// Pairing of feedback-advantage minima with diagnostic critical points.
#[derive(Clone, Debug, PartialEq)]
pub struct SyncReport {
    pub pairs: Vec<SyncPair>,
    pub median_gap: Option<f64>,
    pub max_gap: Option<f64>,
    /// The advantage series has no interior local minimum.
    pub no_minima: bool,
}

/// Pairs each local minimum of `advantage` with the nearest critical point of
/// `diagnostic`; both series share the grid spacing `dt`.
pub fn pair_extrema(advantage: &[f64], diagnostic: &[f64], dt: f64) -> SyncReport {
    let minima = local_minima(advantage, dt);
    let critical = critical_points(diagnostic, dt);
    let pairs: Vec<SyncPair> = if critical.is_empty() {
        Vec::new()
    } else {
        minima
            .iter()
            .map(|&t_min| {
                let t_critical = critical
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - t_min).abs().total_cmp(&(b - t_min).abs()))
                    .expect("non-empty");
                SyncPair {
                    t_min,
                    t_critical,
                    gap: (t_critical - t_min).abs(),
                }
            })
            .collect()
    };
    let mut gaps: Vec<f64> = pairs.iter().map(|p| p.gap).collect();
    gaps.sort_by(f64::total_cmp);
    let median_gap = match gaps.len() {
        0 => None,
        n if n % 2 == 1 => Some(gaps[n / 2]),
        n => Some(0.5 * (gaps[n / 2 - 1] + gaps[n / 2])),
    };
    SyncReport {
        max_gap: gaps.last().copied(),
        median_gap,
        no_minima: minima.is_empty(),
        pairs,
    }
}

/// Synchronization of `dE_min(t)` minima with critical points of the
/// scalarized `Delta Tr T^2(t)`.
pub fn sync_analysis(
    trace: &ProtocolTrace,
    series: &CorrelatorSeries,
    scalarization: Scalarization,
) -> Result<SyncReport> {
    if trace.points.len() != series.times.len() {
        return Err(Error::GridMismatch {
            left: trace.points.len(),
            right: series.times.len(),
        });
    }
    Ok(pair_extrema(
        &trace.de_min_series(),
        &series.delta_scalarized(scalarization),
        trace.spec.dt,
    ))
}
